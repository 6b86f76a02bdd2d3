//! Acceptance suites shared by `dnls verify` and the acceptance test.

use std::time::Instant;

use dnls_core::linalg::det;
use dnls_core::linearization::{build_operators, stability_spectrum, verify_counts, DEFAULT_DELTA};
use dnls_core::pseudospectra::{build_weighted_operator, coefficient_log_norm, log_log_slope, PotentialSource};
use dnls_core::resolvent::{
    build_a, build_q, det_q_closed, resolvent_equation_residual, resolvent_fields, ForcingData,
};
use dnls_core::singularity::{
    cubic_obstruction, det_zero_count, edge_rank_check, resonance_expansion, resonance_root, Sheet, CONTOUR_POINTS,
};
use dnls_core::soliton::{continue_soliton, default_chi_samples, extract_chi, DEFAULT_TOL};
use dnls_core::{LatticeVector, SupportConfig, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::parallel;

pub const DEFAULT_SEED: u64 = 20_240_917;

/// Criteria that are expected to fail; see the README.
pub const KNOWN_DEVIATIONS: &[&str] = &["eigenvalue-counts", "pole-count"];

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub id: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl Check {
    pub fn known_deviation(&self) -> bool {
        KNOWN_DEVIATIONS.contains(&self.id)
    }

    pub fn line(&self) -> String {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        let note = if self.known_deviation() {
            " [known deviation]"
        } else {
            ""
        };
        format!("{tag} {}{note}: {} ({:.2} s)", self.id, self.detail, self.seconds)
    }
}

fn timed(id: &'static str, f: impl FnOnce() -> (bool, String)) -> Check {
    let t = Instant::now();
    let (passed, detail) = f();
    Check {
        id,
        passed,
        detail,
        seconds: t.elapsed().as_secs_f64(),
    }
}

fn chain(n: usize) -> SupportConfig {
    let sites: Vec<i64> = (0..n as i64).collect();
    SupportConfig::in_phase(&sites).expect("chain config")
}

fn cfg(plus: &[i64], minus: &[i64]) -> SupportConfig {
    SupportConfig::new(plus.to_vec(), minus.to_vec()).expect("fixed config")
}

fn err_line(e: impl std::fmt::Display) -> (bool, String) {
    (false, format!("error: {e}"))
}

pub fn determinant_identity(seed: u64) -> Check {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.gen_range(1..=8usize);
        let q: Vec<C64> = (0..n - 1)
            .map(|_| {
                C64::from_polar(
                    rng.gen_range(0.0..0.95),
                    rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
                )
            })
            .collect();
        let d = det(&build_q(&q));
        let e = det_q_closed(&q);
        worst = worst.max((d - e).norm() / e.norm());
    }
    let secs = t.elapsed().as_secs_f64();
    Check {
        id: "determinant-identity",
        passed: worst < 1e-12 && secs < 1.0,
        detail: format!("max relative error {worst:.2e} over 200 draws"),
        seconds: secs,
    }
}

pub fn zero_coupling_closed_form(seed: u64) -> Check {
    timed("zero-coupling-closed-form", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let mut entry_err: f64 = 0.0;
        let mut det_err: f64 = 0.0;
        for _ in 0..50 {
            let n = rng.gen_range(1..=4usize);
            let mut site = 0i64;
            let (mut plus, mut minus) = (Vec::new(), Vec::new());
            for _ in 0..n {
                if rng.gen_bool(0.5) {
                    plus.push(site)
                } else {
                    minus.push(site)
                }
                site += rng.gen_range(1..=3);
            }
            let conf = SupportConfig::new(plus, minus).expect("random config");
            let p = rng.gen_range(1..=3u32);
            let om = C64::new(rng.gen_range(-1.5..1.5), rng.gen_range(-0.5..0.5));
            let a = match build_a(&conf, om, 0.0, p, None) {
                Ok(a) => a,
                Err(e) => return err_line(e),
            };
            let pf = C64::new(p as f64, 0.0);
            for i in 0..n {
                for j in 0..n {
                    let d = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
                    let want = [-(pf + om) * d, -pf * d, -pf * d, -(pf - om) * d];
                    let got = [
                        a.entries[(i, j)],
                        a.entries[(i, n + j)],
                        a.entries[(n + i, j)],
                        a.entries[(n + i, n + j)],
                    ];
                    for (g, w) in got.iter().zip(want) {
                        entry_err = entry_err.max((g - w).norm());
                    }
                }
            }
            let want = (-om * om).powi(n as i32);
            det_err = det_err.max((a.determinant() - want).norm() / want.norm().max(1.0));
        }
        (
            entry_err <= 1e-13 && det_err <= 1e-13,
            format!("max entry error {entry_err:.1e}, max det error {det_err:.1e} over 50 draws"),
        )
    })
}

/// Diagnostic disc radius reported when the fixed disc misses a pair.
pub const WIDE_DELTA: f64 = 0.8;

pub fn eigenvalue_counts() -> Check {
    let t = Instant::now();
    let configs = [
        cfg(&[0], &[]),
        cfg(&[0, 1], &[]),
        cfg(&[0], &[1]),
        cfg(&[0, 1, 2], &[]),
        cfg(&[0, 2], &[1]),
    ];
    let cases: Vec<(SupportConfig, f64)> = configs
        .iter()
        .flat_map(|c| [0.02, 0.04].map(|e| (c.clone(), e)))
        .collect();
    let results: Vec<Result<(bool, String), String>> = cases
        .par_iter()
        .map(|(c, eps)| {
            let prof = continue_soliton(c, 1, *eps, 80, DEFAULT_TOL).map_err(|e| e.to_string())?;
            let rep = stability_spectrum(&build_operators(&prof), DEFAULT_DELTA).map_err(|e| e.to_string())?;
            let v = verify_counts(&rep);
            let mut desc = format!(
                "{:?}/{:?} eps={eps}: {} small, ({} imag, {} real) pairs",
                c.plus(),
                c.minus(),
                rep.small_eigs.len(),
                rep.small_imaginary().len(),
                rep.small_real().len()
            );
            if !v.passed {
                let outer = rep
                    .eigenvalues
                    .iter()
                    .map(|e| e.lambda.norm())
                    .filter(|&m| m >= DEFAULT_DELTA)
                    .fold(f64::INFINITY, f64::min);
                let wide = stability_spectrum(&build_operators(&prof), WIDE_DELTA).map_err(|e| e.to_string())?;
                desc.push_str(&format!(
                    " (nearest outside |lambda| = {outer:.4}; counts with delta = {WIDE_DELTA}: {})",
                    if verify_counts(&wide).passed {
                        "match"
                    } else {
                        "mismatch"
                    }
                ));
            }
            Ok((v.passed, desc))
        })
        .collect();
    let secs = t.elapsed().as_secs_f64();
    let mut ok = secs < 30.0;
    let mut bad = Vec::new();
    for r in results {
        match r {
            Ok((true, _)) => {}
            Ok((false, d)) => {
                ok = false;
                bad.push(d)
            }
            Err(e) => {
                ok = false;
                bad.push(e)
            }
        }
    }
    let detail = if bad.is_empty() {
        "10 cases match 2N small eigenvalues and the sign-change split".to_string()
    } else {
        format!("mismatches: {}", bad.join("; "))
    };
    Check {
        id: "eigenvalue-counts",
        passed: ok,
        detail,
        seconds: secs,
    }
}

pub fn small_eigenvalue_scaling() -> Check {
    timed("small-eigenvalue-scaling", || {
        let eps = [0.01, 0.02, 0.04];
        let mut slopes = Vec::new();
        for c in [cfg(&[0, 1], &[]), cfg(&[0], &[1])] {
            let mags: Result<Vec<f64>, String> = eps
                .iter()
                .map(|&e| {
                    let prof = continue_soliton(&c, 1, e, 40, DEFAULT_TOL).map_err(|e| e.to_string())?;
                    let rep = stability_spectrum(&build_operators(&prof), DEFAULT_DELTA).map_err(|e| e.to_string())?;
                    rep.small_magnitudes()
                        .first()
                        .copied()
                        .ok_or_else(|| "no nonzero small eigenvalue".to_string())
                })
                .collect();
            match mags.and_then(|m| log_log_slope(&eps, &m).map_err(|e| e.to_string())) {
                Ok((s, _)) => slopes.push(s),
                Err(e) => return err_line(e),
            }
        }
        (
            slopes.iter().all(|s| (s - 0.5).abs() <= 0.05),
            format!("exponents {:.4} (in phase), {:.4} (out of phase)", slopes[0], slopes[1]),
        )
    })
}

pub fn chi_tables() -> Check {
    timed("chi-tables", || {
        let samples = default_chi_samples();
        let cases = [
            (cfg(&[0, 1, 2], &[]), [1.0, 0.0, 1.0]),
            (cfg(&[0, 1], &[2]), [1.0, 2.0, 3.0]),
            (cfg(&[0, 2], &[1]), [3.0, 4.0, 3.0]),
        ];
        let mut worst: f64 = 0.0;
        for (c, want) in &cases {
            match extract_chi(c, 1, &samples, 30) {
                Ok(x) => {
                    for (g, w) in x.chi.iter().zip(want) {
                        worst = worst.max((g - w).abs());
                    }
                }
                Err(e) => return err_line(e),
            }
        }
        let gap2 = match extract_chi(&cfg(&[0, 2], &[]), 2, &samples, 30) {
            Ok(x) => x,
            Err(e) => return err_line(e),
        };
        let d1 = gap2.chi.iter().map(|c| (c - 2.0).abs()).fold(0.0, f64::max);
        let d2 = gap2.second_order.iter().map(|c| (c + 3.0).abs()).fold(0.0, f64::max);
        (
            worst <= 1e-2 && d1 <= 5e-2 && d2 <= 5e-2,
            format!(
                "three-site max error {worst:.1e}; gap 2: chi {:.4?}, second order {:.4?}",
                gap2.chi, gap2.second_order
            ),
        )
    })
}

pub fn cubic_obstruction_matrices() -> Check {
    timed("cubic-obstruction", || {
        let s3 = 3f64.sqrt();
        let cases = [
            (cfg(&[0, 1, 2], &[]), [1.0, 0.0, 1.0], [0.0, 0.0, 0.0, 8.0 / 3.0], true),
            (
                cfg(&[0, 1], &[2]),
                [1.0, 2.0, 3.0],
                [-2.0, 2.0 / s3, 2.0 / s3, -2.0 / 3.0],
                true,
            ),
            (cfg(&[0, 2], &[1]), [3.0, 4.0, 3.0], [-4.0, 0.0, 0.0, -4.0], false),
        ];
        let mut worst: f64 = 0.0;
        let mut flags = Vec::new();
        let mut flags_ok = true;
        for (c, chi, want, singular) in &cases {
            match cubic_obstruction(c, chi) {
                Ok(r) => {
                    for (k, w) in want.iter().enumerate() {
                        worst = worst.max((r.p_matrix[(k / 2, k % 2)] - w).abs());
                    }
                    flags_ok &= r.singular == *singular;
                    flags.push(r.singular);
                }
                Err(e) => return err_line(e),
            }
        }
        (
            worst <= 1e-6 && flags_ok,
            format!("max entry error {worst:.1e}, singular flags {flags:?}"),
        )
    })
}

pub fn pole_count() -> Check {
    timed("pole-count", || {
        let mut counts = Vec::new();
        for n in 1..=3 {
            match det_zero_count(&chain(n), 1, 0.05, C64::new(0.0, 0.0), 0.5, CONTOUR_POINTS) {
                Ok(z) => counts.push(z.count),
                Err(e) => return err_line(e),
            }
        }
        let want = [2, 4, 6];
        (
            counts == want,
            format!("zeros in |Omega| < 0.5 at eps = 0.05: {counts:?}, expected {want:?}"),
        )
    })
}

pub fn resonance_expansion_check() -> Check {
    timed("resonance-expansion", || {
        let mut parts = Vec::new();
        let mut ok = true;
        for eps in [0.04, 0.02, 0.01] {
            let guess = resonance_expansion(2, eps);
            match resonance_root(2, 2, eps, guess) {
                Ok(r) => {
                    let d = (r.theta - guess).norm();
                    let tol = 5.0 * eps * eps * eps * 10.0;
                    ok &= d <= tol && r.theta.im > 0.0 && r.sheet == Sheet::ResonantPole;
                    parts.push(format!("eps={eps}: |diff| {d:.2e} <= {tol:.2e}, Im {:.3e}", r.theta.im));
                }
                Err(e) => return err_line(e),
            }
        }
        (ok, parts.join("; "))
    })
}

pub const EPS_LAW_LIST: [f64; 4] = [0.004, 0.01, 0.02, 0.04];

pub fn eps_law() -> Check {
    timed("eps-law", || {
        match parallel::epsilon_scaling_fit(2, 2, &EPS_LAW_LIST, dnls_core::pseudospectra::PEAK_COARSE_POINTS) {
            Ok(fit) => (
                (fit.slope + 2.0).abs() <= 0.1,
                format!("slope {:.4} over eps {:?}", fit.slope, EPS_LAW_LIST),
            ),
            Err(e) => err_line(e),
        }
    })
}

/// Truncation used for the weighted operator in [`band_edge_cancellation`].
pub const EDGE_HALF_WIDTH: usize = 40;

pub fn band_edge_cancellation() -> Check {
    timed("band-edge-cancellation", || {
        let conf = chain(2);
        let (eps, p) = (0.05, 1);
        let wop = match build_weighted_operator(PotentialSource::Limiting(&conf), 1.0, EDGE_HALF_WIDTH, eps, p) {
            Ok(w) => w,
            Err(e) => return err_line(e),
        };
        let mid = C64::new(1.0 + 2.0 * eps, 0.0);
        let w_mid = wop.log_norm(mid);
        let a_mid = match coefficient_log_norm(&conf, p, eps, mid) {
            Ok(v) => v,
            Err(e) => return err_line(e),
        };
        let mut ok = w_mid.is_finite() && a_mid.is_finite();
        let mut parts = Vec::new();
        for om in [1.0, 1.0 + 4.0 * eps] {
            let z = C64::new(om, 0.0);
            let w = wop.log_norm(z);
            let a = match coefficient_log_norm(&conf, p, eps, z) {
                Ok(v) => v,
                Err(e) => return err_line(e),
            };
            let w_ratio = 10f64.powf(w - w_mid);
            let a_ratio = 10f64.powf(a - a_mid);
            ok &= w.is_finite() && w_ratio <= 20.0 && a_ratio > 1e6;
            parts.push(format!(
                "Omega={om}: weighted x{w_ratio:.3}, coefficient x{a_ratio:.1e}"
            ));
        }
        (ok, parts.join("; "))
    })
}

pub const BOUND_THETAS: usize = 63;
pub const BOUND_HALF_WIDTH: usize = 30;

pub fn resolvent_bound() -> Check {
    timed("resolvent-bound", || {
        let mut worst: f64 = 0.0;
        let mut parts = Vec::new();
        for n in 1..=3 {
            for p in [1, 2] {
                let scaled = |eps: f64| -> Result<f64, String> {
                    let s = parallel::resolvent_band_slice(&chain(n), p, eps, BOUND_THETAS, BOUND_HALF_WIDTH)
                        .map_err(|e| e.to_string())?;
                    Ok(eps * s.iter().map(|x| x.1).fold(0.0, f64::max))
                };
                match (scaled(0.04), scaled(0.02)) {
                    (Ok(a), Ok(b)) => {
                        let change = (b / a - 1.0).abs();
                        worst = worst.max(change);
                        parts.push(format!("N={n} p={p}: {a:.4}->{b:.4}"));
                    }
                    (Err(e), _) | (_, Err(e)) => return err_line(e),
                }
            }
        }
        (
            worst < 0.25,
            format!("largest relative change {:.2}% ({})", 100.0 * worst, parts.join(", ")),
        )
    })
}

pub fn edge_rank() -> Check {
    timed("edge-rank", || {
        let mut pd = true;
        for n in 1..=10 {
            match edge_rank_check(&chain(n), 0.05) {
                Ok(r) => pd &= r.positive_definite,
                Err(e) => return err_line(e),
            }
        }
        let mut ranks = Vec::new();
        let mut ok = pd;
        for n in [2, 3] {
            match edge_rank_check(&chain(n), 0.05) {
                Ok(r) => {
                    ok &= r.passed();
                    ranks.push((r.rank_a, r.rank_a_squared, r.expected_rank));
                }
                Err(e) => return err_line(e),
            }
        }
        (
            ok,
            format!("2I-J positive definite for N<=10: {pd}; (rank A, rank A^2, N+1) = {ranks:?}"),
        )
    })
}

pub fn field_residual(seed: u64) -> Check {
    timed("field-residual", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xf1e1d);
        let configs = [
            cfg(&[0], &[]),
            cfg(&[0, 1], &[]),
            cfg(&[-1, 0], &[2]),
            cfg(&[0, 3], &[]),
            cfg(&[0, 2], &[1]),
        ];
        let k = 25usize;
        let mut worst: f64 = 0.0;
        for case in 0..10 {
            let conf = &configs[case % configs.len()];
            let p = rng.gen_range(1..=3u32);
            let eps = rng.gen_range(0.01..0.1);
            let mut om = C64::new(rng.gen_range(-1.5..1.5), rng.gen_range(0.05..0.4));
            if case % 2 == 1 {
                om = -om.conj();
            }
            let chi: Vec<f64> = (0..conf.len()).map(|_| rng.gen_range(-1.0..2.0)).collect();
            let chi = if case % 3 == 0 { None } else { Some(chi.as_slice()) };
            let mut draw = || {
                LatticeVector::from_fn(k, |n| {
                    if n.abs() <= 4 {
                        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                    } else {
                        C64::new(0.0, 0.0)
                    }
                })
            };
            let (f, g) = (draw(), draw());
            let forcing = match ForcingData::new(f, g) {
                Ok(x) => x,
                Err(e) => return err_line(e),
            };
            let r = resolvent_fields(conf, om, eps, p, chi, &forcing)
                .and_then(|fl| resolvent_equation_residual(conf, om, eps, p, chi, &forcing, &fl));
            match r {
                Ok(r) => worst = r.iter().copied().fold(worst, f64::max),
                Err(e) => return err_line(e),
            }
        }
        (
            worst <= 1e-9,
            format!("max pointwise residual {worst:.2e} over 10 cases"),
        )
    })
}

/// Suite names accepted by `dnls verify --suite`.
pub const SUITES: &[&str] = &[
    "all",
    "determinant",
    "counts",
    "soliton",
    "singularity",
    "resolvent",
    "pseudospectra",
];

/// Criterion ids in report order.
pub const CRITERIA: &[&str] = &[
    "determinant-identity",
    "zero-coupling-closed-form",
    "eigenvalue-counts",
    "small-eigenvalue-scaling",
    "chi-tables",
    "cubic-obstruction",
    "pole-count",
    "resonance-expansion",
    "eps-law",
    "band-edge-cancellation",
    "resolvent-bound",
    "edge-rank",
    "field-residual",
];

pub fn run_criterion(id: &str, seed: u64) -> Option<Check> {
    Some(match id {
        "determinant-identity" => determinant_identity(seed),
        "zero-coupling-closed-form" => zero_coupling_closed_form(seed),
        "eigenvalue-counts" => eigenvalue_counts(),
        "small-eigenvalue-scaling" => small_eigenvalue_scaling(),
        "chi-tables" => chi_tables(),
        "cubic-obstruction" => cubic_obstruction_matrices(),
        "pole-count" => pole_count(),
        "resonance-expansion" => resonance_expansion_check(),
        "eps-law" => eps_law(),
        "band-edge-cancellation" => band_edge_cancellation(),
        "resolvent-bound" => resolvent_bound(),
        "edge-rank" => edge_rank(),
        "field-residual" => field_residual(seed),
        _ => return None,
    })
}

/// Criterion ids in a suite; a criterion id names a suite of one.
pub fn suite_members(name: &str) -> Option<Vec<&'static str>> {
    let ids: &[&'static str] = match name {
        "all" => CRITERIA,
        "determinant" => &["determinant-identity", "zero-coupling-closed-form"],
        "counts" => &["eigenvalue-counts", "small-eigenvalue-scaling"],
        "soliton" => &["chi-tables"],
        "singularity" => &["cubic-obstruction", "pole-count", "resonance-expansion", "edge-rank"],
        "resolvent" => &["determinant-identity", "zero-coupling-closed-form", "field-residual"],
        "pseudospectra" => &["eps-law", "band-edge-cancellation", "resolvent-bound"],
        other => return CRITERIA.iter().find(|&&c| c == other).map(|&c| vec![c]),
    };
    Some(ids.to_vec())
}

pub fn run_suite(name: &str, seed: u64) -> Option<Vec<Check>> {
    let ids = suite_members(name)?;
    Some(ids.iter().filter_map(|id| run_criterion(id, seed)).collect())
}
