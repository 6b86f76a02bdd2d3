//! Linearized operators `L+`, `L-` about a soliton and the spectral problem
//! `L+ u = -lambda w`, `L- w = lambda u`.
//!
//! Eliminating `w` gives `L- L+ u = mu u` with `mu = -lambda^2`, so the
//! spectrum is obtained from a real nonsymmetric eigenproblem of half the
//! size of the block formulation. Each `mu` yields the pair
//! `lambda = +-sqrt(-mu)`.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::sturm_count;
use crate::soliton::SolitonProfile;
use crate::{RMatrix, RVector, C64};

/// Default radius of the small-eigenvalue disk.
pub const DEFAULT_DELTA: f64 = 0.5;
/// `|Re lambda|` below this is treated as neutral.
pub const NEUTRAL_TOL: f64 = 1e-8;
/// Quadratic forms below this are reported as ambiguous.
pub const KREIN_TOL: f64 = 1e-10;
/// `|mu|` below this is a zero mode.
pub const ZERO_TOL: f64 = 1e-9;
/// Eigenvalues of `L+-` below `-NEGATIVE_TOL` count as negative.
pub const NEGATIVE_TOL: f64 = 1e-9;

/// Truncated `L+` and `L-` with Dirichlet ends.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorPair {
    pub l_plus: RMatrix,
    pub l_minus: RMatrix,
    pub epsilon: f64,
    pub p: u32,
    pub profile: SolitonProfile,
}

impl OperatorPair {
    /// Diagonal of `L+`.
    pub fn diag_plus(&self) -> Vec<f64> {
        self.l_plus.diagonal().iter().copied().collect()
    }

    pub fn diag_minus(&self) -> Vec<f64> {
        self.l_minus.diagonal().iter().copied().collect()
    }

    fn off(&self) -> Vec<f64> {
        let n = self.l_plus.nrows();
        (0..n.saturating_sub(1)).map(|i| self.l_plus[(i, i + 1)]).collect()
    }

    /// `n(L+)`, by Sturm count.
    pub fn negative_count_plus(&self) -> usize {
        sturm_count(&self.diag_plus(), &self.off(), -NEGATIVE_TOL)
    }

    /// `n(L-)`, by Sturm count.
    pub fn negative_count_minus(&self) -> usize {
        sturm_count(&self.diag_minus(), &self.off(), -NEGATIVE_TOL)
    }

    /// Block operator `[[0, L-], [-L+, 0]]` acting on `(u, w)`.
    pub fn block_matrix(&self) -> RMatrix {
        let n = self.l_plus.nrows();
        let mut h = RMatrix::zeros(2 * n, 2 * n);
        h.view_mut((0, n), (n, n)).copy_from(&self.l_minus);
        h.view_mut((n, 0), (n, n)).copy_from(&(-&self.l_plus));
        h
    }

    /// `<L+^{-1} phi, phi>`.
    pub fn slope_form(&self) -> Result<f64> {
        let phi = DVector::from_column_slice(self.profile.values.values());
        let x = self.l_plus.clone().lu().solve(&phi).ok_or(Error::SingularJacobian)?;
        Ok(x.dot(&phi))
    }
}

/// Builds `L+` and `L-` for a converged profile.
pub fn build_operators(profile: &SolitonProfile) -> OperatorPair {
    let eps = profile.epsilon;
    let p = profile.p;
    let pot = profile.potential();
    let n = pot.len();
    let mut lp = DMatrix::zeros(n, n);
    let mut lm = DMatrix::zeros(n, n);
    for i in 0..n {
        lp[(i, i)] = 1.0 + 2.0 * eps - (2.0 * p as f64 + 1.0) * pot[i];
        lm[(i, i)] = 1.0 + 2.0 * eps - pot[i];
        if i + 1 < n {
            for m in [&mut lp, &mut lm] {
                m[(i, i + 1)] = -eps;
                m[(i + 1, i)] = -eps;
            }
        }
    }
    OperatorPair {
        l_plus: lp,
        l_minus: lm,
        epsilon: eps,
        p,
        profile: profile.clone(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenKind {
    Zero,
    Real,
    Imaginary,
    Complex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KreinSign {
    Positive,
    Negative,
    /// `|<L+ u, u>|` below [`KREIN_TOL`]; not signed.
    Ambiguous,
}

/// One eigenvalue of the spectral problem.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityEigenvalue {
    pub lambda: C64,
    pub kind: EigenKind,
    /// `<L+ u, u>` for unit `u`, when `mu` is real and nonzero.
    pub energy: Option<f64>,
    pub krein: Option<KreinSign>,
    /// Eigenvector `(u, w)`; `u` is real, `w = -L+ u / lambda`.
    pub eigenvector: Option<(RVector, alloc::vec::Vec<C64>)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EigenCounts {
    pub n_l_plus: usize,
    pub n_l_minus: usize,
    pub n_r_plus: usize,
    pub n_r_minus: usize,
    pub n_i_minus: usize,
    pub n_c: usize,
    pub p0: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    pub eigenvalues: Vec<StabilityEigenvalue>,
    pub counts: EigenCounts,
    /// Eigenvalues with `|lambda| < delta`.
    pub small_eigs: Vec<C64>,
    pub n0: usize,
    pub n_sites: usize,
    pub delta: f64,
    /// Eigenvalues whose energy sign could not be decided.
    pub ambiguous: Vec<C64>,
    pub epsilon: f64,
    pub half_width: usize,
}

fn unit_null_vector(m: &RMatrix, mu: f64) -> Option<RVector> {
    let n = m.nrows();
    let shift = mu + 1e-10 * (1.0 + mu.abs());
    let mut a = m.clone();
    for i in 0..n {
        a[(i, i)] -= shift;
    }
    let lu = a.lu();
    let mut x = RVector::from_fn(n, |i, _| 1.0 + 0.1 * ((i * 7919) % 13) as f64);
    for _ in 0..4 {
        x = lu.solve(&x)?;
        let nrm = x.norm();
        if !(nrm.is_finite() && nrm > 0.0) {
            return None;
        }
        x /= nrm;
    }
    Some(x)
}

/// Solves the spectral problem and classifies every eigenvalue.
pub fn stability_spectrum(pair: &OperatorPair, delta: f64) -> Result<SpectralReport> {
    if !(delta > 0.0) {
        return Err(Error::Domain {
            what: "delta",
            value: delta,
        });
    }
    let prod = &pair.l_minus * &pair.l_plus;
    let schur = nalgebra::linalg::Schur::try_new(prod.clone(), f64::EPSILON, 0).ok_or(Error::EigenSolver)?;
    let mus = schur.complex_eigenvalues();

    let mut eigenvalues = Vec::with_capacity(2 * mus.len());
    let mut counts = EigenCounts::default();
    let mut ambiguous = Vec::new();
    for &mu in mus.iter() {
        let imag = mu.im.abs() > 1e-10 * (1.0 + mu.norm());
        if imag {
            // complex quartet; keep the member with Re, Im of lambda positive once per conjugate pair
            let lam = (-mu).sqrt();
            for s in [1.0, -1.0] {
                eigenvalues.push(StabilityEigenvalue {
                    lambda: lam * s,
                    kind: EigenKind::Complex,
                    energy: None,
                    krein: None,
                    eigenvector: None,
                });
            }
            if mu.im > 0.0 {
                counts.n_c += 1;
            }
            continue;
        }
        let mu = mu.re;
        if mu.abs() < ZERO_TOL {
            for _ in 0..2 {
                eigenvalues.push(StabilityEigenvalue {
                    lambda: C64::new(0.0, 0.0),
                    kind: EigenKind::Zero,
                    energy: None,
                    krein: None,
                    eigenvector: None,
                });
            }
            continue;
        }
        let (lam, kind) = if mu < 0.0 {
            (C64::new((-mu).sqrt(), 0.0), EigenKind::Real)
        } else {
            (C64::new(0.0, mu.sqrt()), EigenKind::Imaginary)
        };
        let u = unit_null_vector(&prod, mu).ok_or(Error::EigenSolver)?;
        let lu = &pair.l_plus * &u;
        let energy = lu.dot(&u);
        let krein = if energy.abs() < KREIN_TOL {
            ambiguous.push(lam);
            KreinSign::Ambiguous
        } else if energy > 0.0 {
            KreinSign::Positive
        } else {
            KreinSign::Negative
        };
        match (kind, krein) {
            (EigenKind::Real, KreinSign::Positive) => counts.n_r_plus += 1,
            (EigenKind::Real, KreinSign::Negative) => counts.n_r_minus += 1,
            (EigenKind::Imaginary, KreinSign::Negative) => counts.n_i_minus += 1,
            _ => {}
        }
        for s in [1.0, -1.0] {
            let l = lam * s;
            let w: Vec<C64> = lu.iter().map(|&x| -C64::new(x, 0.0) / l).collect();
            eigenvalues.push(StabilityEigenvalue {
                lambda: l,
                kind,
                energy: Some(energy),
                krein: Some(krein),
                eigenvector: Some((u.clone(), w)),
            });
        }
    }
    eigenvalues.sort_by(|a, b| {
        a.lambda
            .norm()
            .total_cmp(&b.lambda.norm())
            .then(a.lambda.im.total_cmp(&b.lambda.im))
            .then(a.lambda.re.total_cmp(&b.lambda.re))
    });

    counts.n_l_plus = pair.negative_count_plus();
    counts.n_l_minus = pair.negative_count_minus();
    counts.p0 = usize::from(pair.slope_form()? < 0.0);

    let small_eigs = eigenvalues
        .iter()
        .filter(|e| e.lambda.norm() < delta)
        .map(|e| e.lambda)
        .collect();
    let config = &pair.profile.config;
    Ok(SpectralReport {
        eigenvalues,
        counts,
        small_eigs,
        n0: config.sign_changes(),
        n_sites: config.len(),
        delta,
        ambiguous,
        epsilon: pair.epsilon,
        half_width: pair.profile.half_width(),
    })
}

impl SpectralReport {
    /// Small eigenvalues with positive real part (one per real pair).
    pub fn small_real(&self) -> Vec<f64> {
        self.small_eigs
            .iter()
            .filter(|l| l.im.abs() < NEUTRAL_TOL && l.re > NEUTRAL_TOL)
            .map(|l| l.re)
            .collect()
    }

    /// Small eigenvalues with positive imaginary part (one per imaginary pair).
    pub fn small_imaginary(&self) -> Vec<f64> {
        self.small_eigs
            .iter()
            .filter(|l| l.re.abs() < NEUTRAL_TOL && l.im > NEUTRAL_TOL)
            .map(|l| l.im)
            .collect()
    }

    /// Magnitudes of the nonzero small eigenvalues in the upper-right quadrant.
    pub fn small_magnitudes(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .small_eigs
            .iter()
            .filter(|l| l.norm() > ZERO_TOL.sqrt() && l.re >= -NEUTRAL_TOL && l.im >= -NEUTRAL_TOL)
            .map(|l| l.norm())
            .collect();
        v.sort_by(f64::total_cmp);
        v
    }
}

/// A count that differs from its small-coupling prediction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountMismatch {
    pub name: &'static str,
    pub expected: usize,
    pub found: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountVerdict {
    pub passed: bool,
    pub mismatches: Vec<CountMismatch>,
}

/// Compares the report with the small-coupling predictions for `N` sites and
/// `n0` sign changes.
pub fn verify_counts(report: &SpectralReport) -> CountVerdict {
    let n = report.n_sites;
    let n0 = report.n0;
    let c = &report.counts;
    let small_total = report.small_eigs.len();
    let expect = [
        ("N_r_plus", 0, c.n_r_plus),
        ("N_r_minus", n - 1 - n0, c.n_r_minus),
        ("N_i_minus", n0, c.n_i_minus),
        ("N_c", 0, c.n_c),
        ("n_Lplus", n, c.n_l_plus),
        ("n_Lminus", n0, c.n_l_minus),
        ("p0", 1, c.p0),
        ("small_eigenvalues", 2 * n, small_total),
        ("small_real_pairs", n - 1 - n0, report.small_real().len()),
        ("small_imaginary_pairs", n0, report.small_imaginary().len()),
        ("ambiguous_energy", 0, report.ambiguous.len()),
    ];
    let mismatches: Vec<CountMismatch> = expect
        .iter()
        .filter(|(_, e, f)| e != f)
        .map(|&(name, expected, found)| CountMismatch { name, expected, found })
        .collect();
    CountVerdict {
        passed: mismatches.is_empty(),
        mismatches,
    }
}
