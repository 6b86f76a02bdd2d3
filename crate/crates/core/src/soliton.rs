//! Continuation of multi-site solitons from the anti-continuum limit and
//! extraction of their small-coupling expansion data.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::lattice::{limiting_profile, LatticeVector, SupportConfig};

/// Upper end of the coupling range covered by continuation.
pub const EPSILON_MAX: f64 = 0.2;

/// Default Newton tolerance on the l2 residual.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Tail values below this magnitude are ignored by [`decay_rate`].
pub const TAIL_FLOOR: f64 = 1e-13;

/// Maximum RMS residual accepted by [`extract_chi`].
pub const CHI_FIT_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuationOptions {
    pub tol: f64,
    pub max_iterations: usize,
    /// Largest coupling increment along the path from `epsilon = 0`.
    pub max_step: f64,
    pub omega: f64,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iterations: 50,
            max_step: 0.01,
            omega: 1.0,
        }
    }
}

/// Converged stationary profile on a truncated window.
#[derive(Debug, Clone, PartialEq)]
pub struct SolitonProfile {
    pub config: SupportConfig,
    pub epsilon: f64,
    pub p: u32,
    pub omega: f64,
    pub values: LatticeVector<f64>,
    pub residual_norm: f64,
    /// Fitted tail decay rate; `None` when the tail is compact (for instance at `epsilon = 0`).
    pub decay_rate: Option<f64>,
}

impl SolitonProfile {
    pub fn half_width(&self) -> usize {
        self.values.half_width()
    }

    /// `phi_n^{2p}` over the window.
    pub fn potential(&self) -> Vec<f64> {
        self.values
            .values()
            .iter()
            .map(|&x| x.powi(2 * self.p as i32))
            .collect()
    }

    pub fn l2_norm_squared(&self) -> f64 {
        self.values.values().iter().map(|x| x * x).sum()
    }
}

fn check_params(p: u32, epsilon: f64, omega: f64) -> Result<()> {
    if p == 0 {
        return Err(Error::Domain {
            what: "nonlinearity power p",
            value: 0.0,
        });
    }
    if !(0.0..EPSILON_MAX).contains(&epsilon) {
        return Err(Error::Domain {
            what: "epsilon",
            value: epsilon,
        });
    }
    if !(omega > 0.0) {
        return Err(Error::Domain {
            what: "omega",
            value: omega,
        });
    }
    Ok(())
}

/// Residual `(omega - phi^{2p}) phi - epsilon (Delta phi)` with Dirichlet ends.
pub fn stationary_residual(phi: &[f64], epsilon: f64, p: u32, omega: f64) -> Vec<f64> {
    let n = phi.len();
    let k = 2 * p as i32;
    (0..n)
        .map(|i| {
            let left = if i > 0 { phi[i - 1] } else { 0.0 };
            let right = if i + 1 < n { phi[i + 1] } else { 0.0 };
            (omega - phi[i].powi(k)) * phi[i] - epsilon * (right - 2.0 * phi[i] + left)
        })
        .collect()
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn newton(phi: &mut [f64], epsilon: f64, p: u32, opts: &ContinuationOptions) -> Result<f64> {
    let n = phi.len();
    let k = 2 * p as i32;
    let mut res = stationary_residual(phi, epsilon, p, opts.omega);
    let mut norm = l2(&res);
    let mut it = 0;
    while norm >= opts.tol {
        if it == opts.max_iterations {
            return Err(Error::NoConvergence {
                iterations: it,
                residual: norm,
            });
        }
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            jac[(i, i)] = opts.omega + 2.0 * epsilon - (k as f64 + 1.0) * phi[i].powi(k);
            if i + 1 < n {
                jac[(i, i + 1)] = -epsilon;
                jac[(i + 1, i)] = -epsilon;
            }
        }
        let rhs = DVector::from_column_slice(&res);
        let step = jac.lu().solve(&rhs).ok_or(Error::SingularJacobian)?;
        if step.iter().any(|s| !s.is_finite()) {
            return Err(Error::SingularJacobian);
        }
        for (x, s) in phi.iter_mut().zip(step.iter()) {
            *x -= s;
        }
        res = stationary_residual(phi, epsilon, p, opts.omega);
        norm = l2(&res);
        it += 1;
    }
    Ok(norm)
}

/// Continues the soliton of `config` from `epsilon = 0` to `epsilon` with
/// frequency one and default options.
pub fn continue_soliton(
    config: &SupportConfig,
    p: u32,
    epsilon: f64,
    half_width: usize,
    tol: f64,
) -> Result<SolitonProfile> {
    let opts = ContinuationOptions {
        tol,
        ..ContinuationOptions::default()
    };
    continue_soliton_with(config, p, epsilon, half_width, &opts)
}

pub fn continue_soliton_with(
    config: &SupportConfig,
    p: u32,
    epsilon: f64,
    half_width: usize,
    opts: &ContinuationOptions,
) -> Result<SolitonProfile> {
    check_params(p, epsilon, opts.omega)?;
    if !(opts.tol > 0.0) {
        return Err(Error::Domain {
            what: "tolerance",
            value: opts.tol,
        });
    }
    let base = limiting_profile(config, half_width)?;
    let amp = opts.omega.powf(1.0 / (2.0 * p as f64));
    let mut phi: Vec<f64> = base.values().iter().map(|&x| x * amp).collect();

    let steps = (epsilon / opts.max_step).ceil() as usize;
    let mut residual = l2(&stationary_residual(&phi, 0.0, p, opts.omega));
    for s in 1..=steps {
        let eps_s = if s == steps {
            epsilon
        } else {
            epsilon * s as f64 / steps as f64
        };
        residual = newton(&mut phi, eps_s, p, opts)?;
    }
    if steps == 0 {
        residual = newton(&mut phi, epsilon, p, opts)?;
    }

    let values = LatticeVector::from_values(half_width, phi)?;
    let mut profile = SolitonProfile {
        config: config.clone(),
        epsilon,
        p,
        omega: opts.omega,
        values,
        residual_norm: residual,
        decay_rate: None,
    };
    profile.decay_rate = decay_rate(&profile).ok();
    Ok(profile)
}

/// Least-squares decay rate of `|phi_n|` on the tails outside the support.
///
/// Both tails share the slope and keep their own intercepts.
pub fn decay_rate(profile: &SolitonProfile) -> Result<f64> {
    let sites = profile.config.sites();
    let (first, last) = (sites[0], sites[sites.len() - 1]);
    let mut tails: [Vec<(f64, f64)>; 2] = [Vec::new(), Vec::new()];
    for (n, v) in profile.values.iter_sites() {
        let a = v.abs();
        if a <= TAIL_FLOOR {
            continue;
        }
        if n > last {
            tails[1].push(((n - last) as f64, -a.ln()));
        } else if n < first {
            tails[0].push(((first - n) as f64, -a.ln()));
        }
    }
    let total: usize = tails.iter().map(|t| t.len()).sum();
    if total < 3 {
        return Err(Error::InsufficientData { needed: 3, got: total });
    }
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for t in tails.iter().filter(|t| t.len() >= 2) {
        let m = t.len() as f64;
        let xm = t.iter().map(|q| q.0).sum::<f64>() / m;
        let ym = t.iter().map(|q| q.1).sum::<f64>() / m;
        for &(x, y) in t {
            sxy += (x - xm) * (y - ym);
            sxx += (x - xm) * (x - xm);
        }
    }
    if sxx == 0.0 {
        return Err(Error::InsufficientData { needed: 3, got: total });
    }
    Ok(sxy / sxx)
}

/// Leading-order tail decay rate `arccosh(1 + 1/(2 epsilon))` of the linear recursion.
pub fn linear_tail_rate(epsilon: f64) -> f64 {
    (1.0 + 1.0 / (2.0 * epsilon)).acosh()
}

/// Small-coupling expansion `phi_m^{2p} = 1 + eps chi_m + eps^2 c2_m + O(eps^3)` on the support.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiExpansion {
    /// Ordered support sites.
    pub sites: Vec<i64>,
    pub chi: Vec<f64>,
    pub second_order: Vec<f64>,
    /// l2 norm of the remainder `W` at the smallest sampled coupling.
    pub residual_potential_norm: f64,
    /// RMS residual of the polynomial fits.
    pub fit_residual: f64,
}

impl ChiExpansion {
    pub fn chi_at(&self, site: i64) -> Option<f64> {
        self.sites.iter().position(|&s| s == site).map(|i| self.chi[i])
    }
}

/// Default coupling samples for [`extract_chi`]: ten points on `[0.005, 0.05]`.
pub fn default_chi_samples() -> Vec<f64> {
    (0..10).map(|i| 0.005 + 0.005 * i as f64).collect()
}

/// Fits `chi_m` and the second-order coefficients by degree-3 regression in epsilon.
pub fn extract_chi(config: &SupportConfig, p: u32, eps_samples: &[f64], half_width: usize) -> Result<ChiExpansion> {
    if eps_samples.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: eps_samples.len(),
        });
    }
    if let Some(&bad) = eps_samples.iter().find(|&&e| !(e > 0.0 && e <= 0.05)) {
        return Err(Error::Domain {
            what: "chi sample epsilon",
            value: bad,
        });
    }
    let scale = eps_samples.iter().copied().fold(0.0, f64::max);
    let rows = eps_samples.len();
    let design = DMatrix::from_fn(rows, 3, |i, j| (eps_samples[i] / scale).powi(j as i32 + 1));
    let svd = design.clone().svd(true, true);

    let n_sites = config.len();
    let mut ys = DMatrix::<f64>::zeros(rows, n_sites);
    let mut smallest: Option<(f64, SolitonProfile)> = None;
    for (i, &eps) in eps_samples.iter().enumerate() {
        let prof = continue_soliton(config, p, eps, half_width, DEFAULT_TOL)?;
        for (j, &site) in config.sites().iter().enumerate() {
            let v = prof.values.get(site).expect("site inside window");
            ys[(i, j)] = v.powi(2 * p as i32) - 1.0;
        }
        if smallest.as_ref().is_none_or(|(e, _)| eps < *e) {
            smallest = Some((eps, prof));
        }
    }

    let coef = svd.solve(&ys, 0.0).map_err(|_| Error::EigenSolver)?;
    let resid = &design * &coef - &ys;
    let fit_residual = (resid.norm_squared() / (rows * n_sites) as f64).sqrt();
    if fit_residual > CHI_FIT_TOL {
        return Err(Error::FitResidual {
            residual: fit_residual,
            tolerance: CHI_FIT_TOL,
        });
    }
    let chi: Vec<f64> = (0..n_sites).map(|j| coef[(0, j)] / scale).collect();
    let second_order: Vec<f64> = (0..n_sites).map(|j| coef[(1, j)] / (scale * scale)).collect();

    let (eps0, prof0) = smallest.expect("at least three samples");
    let mut w2 = 0.0;
    for (n, v) in prof0.values.iter_sites() {
        let lead = match config.position(n) {
            Some(j) => 1.0 + eps0 * chi[j],
            None => 0.0,
        };
        let w = (v.powi(2 * p as i32) - lead) / (eps0 * eps0);
        w2 += w * w;
    }

    Ok(ChiExpansion {
        sites: config.sites().to_vec(),
        chi,
        second_order,
        residual_potential_norm: w2.sqrt(),
        fit_residual,
    })
}

/// `d ||phi(omega)||^2 / d omega` at `omega = 1`, by Richardson-extrapolated
/// central differences along the frequency family.
pub fn omega_family_norm_slope(config: &SupportConfig, p: u32, epsilon: f64, half_width: usize) -> Result<f64> {
    let norm_at = |omega: f64| -> Result<f64> {
        let opts = ContinuationOptions {
            omega,
            ..ContinuationOptions::default()
        };
        Ok(continue_soliton_with(config, p, epsilon, half_width, &opts)?.l2_norm_squared())
    };
    let h = 1e-2;
    let d = |h: f64| -> Result<f64> { Ok((norm_at(1.0 + h)? - norm_at(1.0 - h)?) / (2.0 * h)) };
    let coarse = d(h)?;
    let fine = d(h / 2.0)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// Exponent `p0` in the eigenvalue count: one when the norm slope is positive.
pub fn p0_from_slope(slope: f64) -> usize {
    usize::from(slope > 0.0)
}

/// `phi_n conj(phi_{n+1}) - conj(phi_n) phi_{n+1}` for each bond, as an imaginary magnitude.
pub fn conserved_flux(values: &[f64]) -> Vec<f64> {
    values
        .windows(2)
        .map(|w| {
            let a = crate::C64::new(w[0], 0.0);
            let b = crate::C64::new(w[1], 0.0);
            (a.conj() * b - a * b.conj()).im
        })
        .collect()
}

/// `phi^(0)` scaled to frequency `omega`.
pub fn anti_continuum_profile(
    config: &SupportConfig,
    p: u32,
    omega: f64,
    half_width: usize,
) -> Result<LatticeVector<f64>> {
    check_params(p, 0.0, omega)?;
    let amp = omega.powf(1.0 / (2.0 * p as f64));
    Ok(limiting_profile(config, half_width)?.map(|x| x * amp))
}
