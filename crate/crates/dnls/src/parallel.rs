//! Rayon versions of the grid scans. Results are collected in grid order, so
//! output does not depend on the number of threads.

use dnls_core::pseudospectra::{
    band_thetas, check_eps_list, coefficient_log_norm, fit_peaks, interior_peak, resolvent_operator_norm, OmegaGrid,
    ScalingFit, ScanMeta, ScanResult, WeightedOperator,
};
use dnls_core::resolvent::build_a_band;
use dnls_core::{Error, Result, SupportConfig, C64};
use rayon::prelude::*;

pub fn par_scan_with<F>(grid: &OmegaGrid, meta: ScanMeta, f: F) -> Result<ScanResult>
where
    F: Fn(C64) -> Result<f64> + Sync,
{
    grid.validate()?;
    let values = (0..grid.len())
        .into_par_iter()
        .map(|k| f(grid.point(k)))
        .collect::<Result<Vec<f64>>>()?;
    ScanResult::from_values(*grid, values, meta)
}

pub fn scan_coefficient_matrix(config: &SupportConfig, p: u32, epsilon: f64, grid: &OmegaGrid) -> Result<ScanResult> {
    par_scan_with(grid, ScanMeta::new(config, p, epsilon), |om| {
        coefficient_log_norm(config, p, epsilon, om)
    })
}

pub fn scan_weighted_resolvent(wop: &WeightedOperator, config: &SupportConfig, grid: &OmegaGrid) -> Result<ScanResult> {
    let meta = ScanMeta {
        sigma: Some(wop.sigma),
        half_width: Some(wop.half_width),
        ..ScanMeta::new(config, wop.p, wop.epsilon)
    };
    let mut res = par_scan_with(grid, meta, |om| Ok(wop.log_norm(om)))?;
    res.eigenvalues = Some(wop.pencil_eigenvalues()?);
    Ok(res)
}

pub fn band_slice(config: &SupportConfig, p: u32, epsilon: f64, n_theta: usize) -> Result<Vec<(f64, f64)>> {
    if n_theta < 16 {
        return Err(Error::InvalidGrid {
            reason: "band slice needs at least 16 samples",
        });
    }
    band_thetas(n_theta)
        .into_par_iter()
        .map(|t| {
            let a = build_a_band(config, C64::new(t, 0.0), epsilon, p, None)?;
            Ok((t, dnls_core::linalg::inverse_norm(&a.entries)))
        })
        .collect()
}

pub fn resolvent_band_slice(
    config: &SupportConfig,
    p: u32,
    epsilon: f64,
    n_theta: usize,
    half_width: usize,
) -> Result<Vec<(f64, f64)>> {
    band_thetas(n_theta)
        .into_par_iter()
        .map(|t| Ok((t, resolvent_operator_norm(config, p, epsilon, t, half_width)?)))
        .collect()
}

/// Same contract as the sequential fit, with one task per `eps`.
pub fn epsilon_scaling_fit(gap: u64, p: u32, eps_list: &[f64], coarse_points: usize) -> Result<ScalingFit> {
    check_eps_list(eps_list)?;
    let peaks = eps_list
        .par_iter()
        .map(|&e| interior_peak(gap, p, e, coarse_points))
        .collect::<Result<Vec<_>>>()?;
    fit_peaks(eps_list, peaks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use dnls_core::pseudospectra as seq;

    #[test]
    fn parallel_matches_sequential() {
        let conf = SupportConfig::new(vec![0, 2], vec![3]).unwrap();
        let grid = OmegaGrid::new((-1.4, 1.4), (-0.4, 0.4), 15, 5).unwrap();
        let a = scan_coefficient_matrix(&conf, 2, 0.05, &grid).unwrap();
        let b = seq::scan_coefficient_matrix(&conf, 2, 0.05, &grid).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            band_slice(&conf, 1, 0.05, 31).unwrap(),
            seq::band_slice(&conf, 1, 0.05, 31).unwrap()
        );
    }

    #[test]
    fn thread_count_does_not_change_output() {
        let conf = SupportConfig::in_phase(&[0, 1]).unwrap();
        let grid = OmegaGrid::new((0.5, 1.5), (-0.2, 0.2), 11, 5).unwrap();
        let run = |n| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .unwrap()
                .install(|| scan_coefficient_matrix(&conf, 1, 0.05, &grid).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn fit_matches_sequential() {
        let eps = [0.004, 0.01, 0.02, 0.04];
        let a = epsilon_scaling_fit(2, 2, &eps, 801).unwrap();
        let b = seq::epsilon_scaling_fit_with(2, 2, &eps, 801).unwrap();
        assert_eq!(a, b);
        assert!(epsilon_scaling_fit(2, 2, &eps[..3], 801).is_err());
    }
}
