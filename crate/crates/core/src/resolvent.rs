//! Free lattice resolvent, dispersion relations and the finite boundary
//! system `A(Omega, eps) c = h` for the resolvent of the linearization about
//! the limiting configuration.
//!
//! With `lambda_+- = (+-Omega - 1)/eps` and `z = z(lambda)` solving
//! `2 - 2 cos z = lambda`, the fields are
//! `a_n = (2 i eps sin z_+)^{-1} (sum_m e^{-i z_+ |n-m|} f_m + sum_{m in U} e^{-i z_+ |n-m|} V_m ((1+p) a_m + p b_m))`
//! and analogously for `b` with `z_-`, `g` and `V_m (p a_m + (1+p) b_m)`.
//! Here `V_m = 1 + eps chi_m` on the support, or `1` without corrections.

use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::lattice::{LatticeVector, SupportConfig};
use crate::linalg::{singular_extremes, NEAR_SINGULAR_REL};
use crate::{CMatrix, CVector, C64};

const I: C64 = C64::new(0.0, 1.0);
const ONE: C64 = C64::new(1.0, 0.0);
const ZERO: C64 = C64::new(0.0, 0.0);

/// Which limit is taken for real `lambda` on the band `[0, 4]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandSide {
    /// `Im lambda -> 0+`, giving `z in [-pi, 0]`.
    Upper,
    /// `Im lambda -> 0-`, giving `z in [0, pi)` (with `pi` mapped to `-pi`).
    Lower,
}

/// Solution `z` of `2 - 2 cos z = lambda` on the sheet `Re z in [-pi, pi)`, `Im z <= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionPoint {
    pub lambda: C64,
    pub z: C64,
    /// `lambda` is real and lies in `[0, 4]`; `z` is then a one-sided limit.
    pub on_band: bool,
}

impl DispersionPoint {
    /// `|2 - 2 cos z - lambda|`.
    pub fn residual(&self) -> f64 {
        (C64::new(2.0, 0.0) - self.z.cos() * 2.0 - self.lambda).norm()
    }

    /// `2 i sin z`.
    pub fn prefactor(&self) -> C64 {
        I * self.z.sin() * 2.0
    }
}

fn wrap_pi(z: C64) -> C64 {
    if z.re >= core::f64::consts::PI {
        C64::new(z.re - 2.0 * core::f64::consts::PI, z.im)
    } else {
        z
    }
}

/// `z(lambda)` with the upper limit on the band.
pub fn solve_z(lambda: C64) -> DispersionPoint {
    solve_z_side(lambda, BandSide::Upper)
}

/// `z(lambda)` with an explicit side for real `lambda` in `[0, 4]`.
pub fn solve_z_side(lambda: C64, side: BandSide) -> DispersionPoint {
    use core::f64::consts::PI;
    if lambda.im == 0.0 {
        let l = lambda.re;
        let z = if l < 0.0 {
            C64::new(0.0, -(1.0 - l / 2.0).acosh())
        } else if l > 4.0 {
            C64::new(-PI, -(l / 2.0 - 1.0).acosh())
        } else {
            let t = (1.0 - l / 2.0).acos();
            match side {
                BandSide::Upper => C64::new(-t, 0.0),
                BandSide::Lower => wrap_pi(C64::new(t, 0.0)),
            }
        };
        return DispersionPoint {
            lambda,
            z,
            on_band: (0.0..=4.0).contains(&l),
        };
    }
    let z0 = (ONE - lambda / 2.0).acos();
    let z = if z0.im > 0.0 { -z0 } else { z0 };
    DispersionPoint {
        lambda,
        z: wrap_pi(z),
        on_band: false,
    }
}

/// `theta = -arccos(1 - omega/2)` in `[-pi, 0]`.
pub fn solve_theta(omega_band: f64) -> Result<f64> {
    if !(0.0..=4.0).contains(&omega_band) {
        return Err(Error::Domain {
            what: "band frequency omega",
            value: omega_band,
        });
    }
    Ok(-(1.0 - omega_band / 2.0).acos())
}

/// `kappa = arccosh(1 + (2 + eps omega)/(2 eps))`.
pub fn solve_kappa(omega_band: f64, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::Domain {
            what: "epsilon",
            value: epsilon,
        });
    }
    if !(0.0..=4.0).contains(&omega_band) {
        return Err(Error::Domain {
            what: "band frequency omega",
            value: omega_band,
        });
    }
    Ok((1.0 + (2.0 + epsilon * omega_band) / (2.0 * epsilon)).acosh())
}

/// Complex continuation of `kappa(theta)` off the real band.
pub fn kappa_of_theta(theta: C64, epsilon: f64) -> C64 {
    let omega = C64::new(2.0, 0.0) - theta.cos() * 2.0;
    (ONE + (omega * epsilon + 2.0) / (2.0 * epsilon)).acosh()
}

/// Point on the upper band `Omega = 1 + eps omega`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandPoint {
    pub omega_band: f64,
    pub theta: f64,
    pub kappa: f64,
    pub epsilon: f64,
}

impl BandPoint {
    pub fn new(omega_band: f64, epsilon: f64) -> Result<Self> {
        Ok(Self {
            omega_band,
            theta: solve_theta(omega_band)?,
            kappa: solve_kappa(omega_band, epsilon)?,
            epsilon,
        })
    }

    pub fn from_theta(theta: f64, epsilon: f64) -> Result<Self> {
        if !(-core::f64::consts::PI..=0.0).contains(&theta) {
            return Err(Error::Domain {
                what: "theta",
                value: theta,
            });
        }
        Self::new(2.0 - 2.0 * theta.cos(), epsilon)
    }

    pub fn omega(&self) -> f64 {
        1.0 + self.epsilon * self.omega_band
    }

    /// Residuals of the two dispersion relations.
    pub fn residuals(&self) -> [f64; 2] {
        let e = self.epsilon;
        [
            (2.0 - 2.0 * self.theta.cos() - self.omega_band).abs(),
            (2.0 * e * (self.kappa.cosh() - 1.0) - (2.0 + e * self.omega_band)).abs()
                / (1.0 + 2.0 * e * self.kappa.cosh()),
        ]
    }
}

fn kernel(z: C64, dist: u64) -> C64 {
    if dist == 0 {
        ONE
    } else {
        (-I * z * dist as f64).exp()
    }
}

/// `(R0 f)_n = (2 i sin z)^{-1} sum_m e^{-i z |n-m|} f_m` over the window.
pub fn free_resolvent_apply(point: &DispersionPoint, f: &LatticeVector<C64>) -> Result<LatticeVector<C64>> {
    let pre = point.prefactor();
    if pre.norm() == 0.0 || point.z.norm() == 0.0 || (point.z.re == -core::f64::consts::PI && point.z.im == 0.0) {
        return Err(Error::SingularPrefactor {
            z_re: point.z.re,
            z_im: point.z.im,
        });
    }
    Ok(green_sum(point.z, f).map(|x| x / pre))
}

/// `sum_m e^{-i z |n-m|} f_m` for every window site `n`.
fn green_sum(z: C64, f: &LatticeVector<C64>) -> LatticeVector<C64> {
    let vals = f.values();
    let len = vals.len();
    let powers: Vec<C64> = (0..len).map(|d| kernel(z, d as u64)).collect();
    let out = (0..len)
        .map(|n| vals.iter().enumerate().map(|(m, &fm)| powers[n.abs_diff(m)] * fm).sum())
        .collect();
    LatticeVector::from_values(f.half_width(), out).expect("same length")
}

/// Edge expansion of the upper-limit free resolvent near `theta = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PuiseuxParts {
    /// `(2 i theta)^{-1} sum_m f_m`.
    pub pole_coeff: C64,
    /// `-1/2 sum_m |n - m| f_m`.
    pub linear_term: LatticeVector<C64>,
    /// `R0^+ f - pole - linear`.
    pub remainder: LatticeVector<C64>,
}

pub fn puiseux_decompose(theta: f64, f: &LatticeVector<C64>) -> Result<PuiseuxParts> {
    if !(theta.abs() <= 0.3) {
        return Err(Error::Domain {
            what: "theta",
            value: theta,
        });
    }
    if theta == 0.0 {
        return Err(Error::SingularPrefactor { z_re: 0.0, z_im: 0.0 });
    }
    let point = DispersionPoint {
        lambda: C64::new(2.0 - 2.0 * theta.cos(), 0.0),
        z: C64::new(theta, 0.0),
        on_band: true,
    };
    let full = free_resolvent_apply(&point, f)?;
    let total: C64 = f.values().iter().sum();
    let pole_coeff = total / (I * 2.0 * theta);
    let vals = f.values();
    let linear: Vec<C64> = (0..vals.len())
        .map(|n| {
            vals.iter()
                .enumerate()
                .map(|(m, &fm)| fm * n.abs_diff(m) as f64)
                .sum::<C64>()
                * -0.5
        })
        .collect();
    let remainder: Vec<C64> = full
        .values()
        .iter()
        .zip(&linear)
        .map(|(&r, &l)| r - pole_coeff - l)
        .collect();
    Ok(PuiseuxParts {
        pole_coeff,
        linear_term: LatticeVector::from_values(f.half_width(), linear)?,
        remainder: LatticeVector::from_values(f.half_width(), remainder)?,
    })
}

/// `Q(q_1, ..., q_{N-1})` with `Q_ij = prod_{k=min(i,j)}^{max(i,j)-1} q_k`.
pub fn build_q(q: &[C64]) -> CMatrix {
    let n = q.len() + 1;
    let mut m = CMatrix::from_element(n, n, ONE);
    for i in 0..n {
        let mut acc = ONE;
        for j in i + 1..n {
            acc *= q[j - 1];
            m[(i, j)] = acc;
            m[(j, i)] = acc;
        }
    }
    m
}

/// `prod_j (1 - q_j^2)`.
pub fn det_q_closed(q: &[C64]) -> C64 {
    q.iter().map(|&x| ONE - x * x).product()
}

/// Gap factors `e^{-i m_j z}`, exact at `z = 0` and `z = -pi`.
pub fn gap_factors(gaps: &[u64], z: C64) -> Vec<C64> {
    gaps.iter().map(|&m| exact_cis(z, m)).collect()
}

fn exact_cis(z: C64, m: u64) -> C64 {
    if z.im == 0.0 {
        if z.re == 0.0 {
            return ONE;
        }
        if z.re == -core::f64::consts::PI {
            return if m % 2 == 0 { ONE } else { -ONE };
        }
    }
    (-I * z * m as f64).exp()
}

/// Frequency at which a matrix was assembled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Evaluation {
    /// `eps = 0`: the decoupled limit.
    Limit,
    /// `eps > 0` with the two dispersion roots.
    Coupled { z_plus: C64, z_minus: C64 },
}

/// The `2N x 2N` boundary matrix and the data it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMatrix {
    pub entries: CMatrix,
    pub omega: C64,
    pub epsilon: f64,
    pub p: u32,
    pub chi: Option<Vec<f64>>,
    pub evaluation: Evaluation,
    /// `2 i eps sin z_+` and `2 i eps sin z_-` (`1 - Omega`, `1 + Omega` in the limit).
    pub prefactors: (C64, C64),
    /// `Q^+` and `Q^-` (equal to `M(theta)` and `N(kappa)` on the band).
    pub q_plus: CMatrix,
    pub q_minus: CMatrix,
}

impl CoefficientMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// `V_j = 1 + eps chi_j` on the support.
    pub fn support_weights(&self) -> Vec<f64> {
        let n = self.q_plus.nrows();
        match &self.chi {
            Some(c) => c.iter().map(|x| 1.0 + self.epsilon * x).collect(),
            None => alloc::vec![1.0; n],
        }
    }

    pub fn determinant(&self) -> C64 {
        crate::linalg::det(&self.entries)
    }
}

fn check_chi(config: &SupportConfig, chi: Option<&[f64]>) -> Result<()> {
    if let Some(c) = chi {
        if c.len() != config.len() {
            return Err(Error::LengthMismatch {
                what: "chi",
                expected: config.len(),
                got: c.len(),
            });
        }
    }
    Ok(())
}

fn check_eps(epsilon: f64) -> Result<()> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::Domain {
            what: "epsilon",
            value: epsilon,
        });
    }
    Ok(())
}

fn assemble(q_plus: &CMatrix, q_minus: &CMatrix, pre: (C64, C64), weights: &[f64], p: u32) -> CMatrix {
    let n = q_plus.nrows();
    let pf = p as f64;
    let mut a = CMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let qp = q_plus[(i, j)] * weights[j];
            let qm = q_minus[(i, j)] * weights[j];
            let d = if i == j { 1.0 } else { 0.0 };
            a[(i, j)] = pre.0 * d - qp * (1.0 + pf);
            a[(i, n + j)] = -qp * pf;
            a[(n + i, j)] = -qm * pf;
            a[(n + i, n + j)] = pre.1 * d - qm * (1.0 + pf);
        }
    }
    a
}

/// Snaps real `lambda` within rounding of the band ends onto them.
fn snap_band_end(lambda: C64) -> C64 {
    if lambda.im != 0.0 {
        return lambda;
    }
    for end in [0.0, 4.0] {
        if (lambda.re - end).abs() <= 64.0 * f64::EPSILON * 4.0 {
            return C64::new(end, 0.0);
        }
    }
    lambda
}

/// Assembles `A(Omega, eps)` (or the corrected matrix when `chi` is given).
///
/// For real `Omega` the upper band uses the `Im -> 0+` limit for `lambda_+`
/// and the lower band the `Im -> 0-` limit for `lambda_-`, i.e. the limit of
/// `A` from `Im Omega > 0`.
pub fn build_a(
    config: &SupportConfig,
    omega: C64,
    epsilon: f64,
    p: u32,
    chi: Option<&[f64]>,
) -> Result<CoefficientMatrix> {
    check_eps(epsilon)?;
    check_chi(config, chi)?;
    let n = config.len();
    if epsilon == 0.0 {
        let id = CMatrix::identity(n, n);
        let pre = (ONE - omega, ONE + omega);
        let entries = assemble(&id, &id, pre, &alloc::vec![1.0; n], p);
        return Ok(CoefficientMatrix {
            entries,
            omega,
            epsilon,
            p,
            chi: chi.map(|c| c.to_vec()),
            evaluation: Evaluation::Limit,
            prefactors: pre,
            q_plus: id.clone(),
            q_minus: id,
        });
    }
    let lp = snap_band_end((omega - 1.0) / epsilon);
    let lm = snap_band_end((-omega - 1.0) / epsilon);
    let zp = solve_z_side(lp, BandSide::Upper).z;
    let zm = solve_z_side(lm, BandSide::Lower).z;
    build_from_roots(config, omega, epsilon, p, chi, zp, zm)
}

fn prefactor(z: C64, epsilon: f64) -> C64 {
    if z.im == 0.0 && (z.re == 0.0 || z.re == -core::f64::consts::PI) {
        ZERO
    } else {
        I * z.sin() * (2.0 * epsilon)
    }
}

fn build_from_roots(
    config: &SupportConfig,
    omega: C64,
    epsilon: f64,
    p: u32,
    chi: Option<&[f64]>,
    zp: C64,
    zm: C64,
) -> Result<CoefficientMatrix> {
    let gaps = config.gaps();
    let q_plus = build_q(&gap_factors(gaps, zp));
    let q_minus = build_q(&gap_factors(gaps, zm));
    let pre = (prefactor(zp, epsilon), prefactor(zm, epsilon));
    let weights: Vec<f64> = match chi {
        Some(c) => c.iter().map(|x| 1.0 + epsilon * x).collect(),
        None => alloc::vec![1.0; config.len()],
    };
    let entries = assemble(&q_plus, &q_minus, pre, &weights, p);
    Ok(CoefficientMatrix {
        entries,
        omega,
        epsilon,
        p,
        chi: chi.map(|c| c.to_vec()),
        evaluation: Evaluation::Coupled {
            z_plus: zp,
            z_minus: zm,
        },
        prefactors: pre,
        q_plus,
        q_minus,
    })
}

/// `A` on the upper band parameterized by `theta` (complex values allowed for
/// root tracking off the real band): `z_+ = theta`, `z_- = -i kappa(theta)`.
pub fn build_a_band(
    config: &SupportConfig,
    theta: C64,
    epsilon: f64,
    p: u32,
    chi: Option<&[f64]>,
) -> Result<CoefficientMatrix> {
    if !(epsilon > 0.0) {
        return Err(Error::Domain {
            what: "epsilon",
            value: epsilon,
        });
    }
    check_chi(config, chi)?;
    let kappa = kappa_of_theta(theta, epsilon);
    let omega_band = C64::new(2.0, 0.0) - theta.cos() * 2.0;
    let omega = ONE + omega_band * epsilon;
    let mut m = build_from_roots(config, omega, epsilon, p, chi, theta, -I * kappa)?;
    // the evanescent prefactor is real: 2 eps sinh(kappa)
    m.prefactors.1 = kappa.sinh() * (2.0 * epsilon);
    let weights = m.support_weights();
    m.entries = assemble(&m.q_plus, &m.q_minus, m.prefactors, &weights, p);
    Ok(m)
}

/// Transformed forcing `f = F + iG`, `g = F - iG`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcingData {
    pub f: LatticeVector<C64>,
    pub g: LatticeVector<C64>,
}

impl ForcingData {
    pub fn new(f: LatticeVector<C64>, g: LatticeVector<C64>) -> Result<Self> {
        if f.half_width() != g.half_width() {
            return Err(Error::LengthMismatch {
                what: "forcing g",
                expected: f.len(),
                got: g.len(),
            });
        }
        Ok(Self { f, g })
    }

    pub fn from_real_pair(big_f: &LatticeVector<C64>, big_g: &LatticeVector<C64>) -> Result<Self> {
        let f: Vec<C64> = big_f
            .values()
            .iter()
            .zip(big_g.values())
            .map(|(&a, &b)| a + I * b)
            .collect();
        let g: Vec<C64> = big_f
            .values()
            .iter()
            .zip(big_g.values())
            .map(|(&a, &b)| a - I * b)
            .collect();
        Self::new(
            LatticeVector::from_values(big_f.half_width(), f)?,
            LatticeVector::from_values(big_g.half_width(), g)?,
        )
    }

    /// `(F, G) = ((f + g)/2, (f - g)/(2i))`.
    pub fn to_real_pair(&self) -> (LatticeVector<C64>, LatticeVector<C64>) {
        let k = self.f.half_width();
        let fv = self.f.values();
        let gv = self.g.values();
        let big_f = fv.iter().zip(gv).map(|(&a, &b)| (a + b) / 2.0).collect();
        let big_g = fv.iter().zip(gv).map(|(&a, &b)| (a - b) / (I * 2.0)).collect();
        (
            LatticeVector::from_values(k, big_f).expect("length"),
            LatticeVector::from_values(k, big_g).expect("length"),
        )
    }

    pub fn half_width(&self) -> usize {
        self.f.half_width()
    }
}

fn support_indices(config: &SupportConfig, half_width: usize) -> Result<Vec<usize>> {
    config.check_window(half_width)?;
    Ok(config
        .sites()
        .iter()
        .map(|&s| (s + half_width as i64) as usize)
        .collect())
}

/// Right-hand side `h` of the boundary system: the free Green sums of `f`
/// and `g` evaluated on the support.
pub fn boundary_rhs(config: &SupportConfig, a: &CoefficientMatrix, forcing: &ForcingData) -> Result<CVector> {
    let idx = support_indices(config, forcing.half_width())?;
    let n = idx.len();
    let mut h = CVector::zeros(2 * n);
    let (fv, gv) = (forcing.f.values(), forcing.g.values());
    for (j, &s) in idx.iter().enumerate() {
        match a.evaluation {
            Evaluation::Limit => {
                h[j] = fv[s];
                h[n + j] = gv[s];
            }
            Evaluation::Coupled { z_plus, z_minus } => {
                h[j] = fv
                    .iter()
                    .enumerate()
                    .map(|(m, &x)| kernel(z_plus, s.abs_diff(m) as u64) * x)
                    .sum();
                h[n + j] = gv
                    .iter()
                    .enumerate()
                    .map(|(m, &x)| kernel(z_minus, s.abs_diff(m) as u64) * x)
                    .sum();
            }
        }
    }
    Ok(h)
}

/// `c = A^{-1} h`; fails with the singular values when `A` is numerically singular.
pub fn solve_boundary_system(a: &CoefficientMatrix, h: &CVector) -> Result<CVector> {
    if h.len() != a.dim() {
        return Err(Error::LengthMismatch {
            what: "boundary right-hand side",
            expected: a.dim(),
            got: h.len(),
        });
    }
    let (lo, hi) = singular_extremes(&a.entries);
    if !(lo > NEAR_SINGULAR_REL * hi) {
        return Err(Error::NearSingular {
            smallest: lo,
            largest: hi,
        });
    }
    let c = a.entries.clone().lu().solve(h).ok_or(Error::NearSingular {
        smallest: lo,
        largest: hi,
    })?;
    let res = (&a.entries * &c - h).norm();
    if res > 1e-10 * h.norm() {
        return Err(Error::NearSingular {
            smallest: lo,
            largest: hi,
        });
    }
    Ok(c)
}

/// Resolvent fields over the forcing window.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolventFields {
    pub a: LatticeVector<C64>,
    pub b: LatticeVector<C64>,
}

impl ResolventFields {
    /// `(u, w) = ((a + b)/2, (a - b)/(2i))`.
    pub fn to_uw(&self) -> (LatticeVector<C64>, LatticeVector<C64>) {
        ForcingData {
            f: self.a.clone(),
            g: self.b.clone(),
        }
        .to_real_pair()
    }
}

/// Evaluates the Green-function representation of `(a, b)` on the window,
/// given the support amplitudes `c = (a_U, b_U)`.
pub fn assemble_resolvent_fields(
    config: &SupportConfig,
    a_mat: &CoefficientMatrix,
    c: &CVector,
    forcing: &ForcingData,
) -> Result<ResolventFields> {
    let k = forcing.half_width();
    let idx = support_indices(config, k)?;
    let n = idx.len();
    if c.len() != 2 * n {
        return Err(Error::LengthMismatch {
            what: "support amplitudes",
            expected: 2 * n,
            got: c.len(),
        });
    }
    let pf = a_mat.p as f64;
    let w = a_mat.support_weights();
    let src_a: Vec<C64> = (0..n).map(|j| (c[j] * (1.0 + pf) + c[n + j] * pf) * w[j]).collect();
    let src_b: Vec<C64> = (0..n).map(|j| (c[j] * pf + c[n + j] * (1.0 + pf)) * w[j]).collect();
    let (pre_a, pre_b) = a_mat.prefactors;
    if pre_a.norm() == 0.0 || pre_b.norm() == 0.0 {
        let z = match a_mat.evaluation {
            Evaluation::Coupled { z_plus, .. } => z_plus,
            Evaluation::Limit => ZERO,
        };
        return Err(Error::SingularPrefactor { z_re: z.re, z_im: z.im });
    }
    let len = forcing.f.len();
    let (a_vals, b_vals) = match a_mat.evaluation {
        Evaluation::Limit => {
            let mut av: Vec<C64> = forcing.f.values().to_vec();
            let mut bv: Vec<C64> = forcing.g.values().to_vec();
            for (j, &s) in idx.iter().enumerate() {
                av[s] += src_a[j];
                bv[s] += src_b[j];
            }
            (
                av.into_iter().map(|x| x / pre_a).collect::<Vec<_>>(),
                bv.into_iter().map(|x| x / pre_b).collect::<Vec<_>>(),
            )
        }
        Evaluation::Coupled { z_plus, z_minus } => {
            let ga = green_sum(z_plus, &forcing.f);
            let gb = green_sum(z_minus, &forcing.g);
            let av = (0..len)
                .map(|i| {
                    let s: C64 = idx
                        .iter()
                        .zip(&src_a)
                        .map(|(&m, &v)| kernel(z_plus, i.abs_diff(m) as u64) * v)
                        .sum();
                    (ga.values()[i] + s) / pre_a
                })
                .collect();
            let bv = (0..len)
                .map(|i| {
                    let s: C64 = idx
                        .iter()
                        .zip(&src_b)
                        .map(|(&m, &v)| kernel(z_minus, i.abs_diff(m) as u64) * v)
                        .sum();
                    (gb.values()[i] + s) / pre_b
                })
                .collect();
            (av, bv)
        }
    };
    Ok(ResolventFields {
        a: LatticeVector::from_values(k, a_vals)?,
        b: LatticeVector::from_values(k, b_vals)?,
    })
}

/// Builds `A`, solves for the support amplitudes and assembles the fields.
pub fn resolvent_fields(
    config: &SupportConfig,
    omega: C64,
    epsilon: f64,
    p: u32,
    chi: Option<&[f64]>,
    forcing: &ForcingData,
) -> Result<ResolventFields> {
    let a = build_a(config, omega, epsilon, p, chi)?;
    let h = boundary_rhs(config, &a, forcing)?;
    let c = solve_boundary_system(&a, &h)?;
    assemble_resolvent_fields(config, &a, &c, forcing)
}

/// Pointwise residual of the `(a, b)` difference equations at interior window
/// sites (`|n| < K`), by direct substitution.
pub fn resolvent_equation_residual(
    config: &SupportConfig,
    omega: C64,
    epsilon: f64,
    p: u32,
    chi: Option<&[f64]>,
    forcing: &ForcingData,
    fields: &ResolventFields,
) -> Result<Vec<f64>> {
    check_chi(config, chi)?;
    let k = forcing.half_width();
    let (a, b) = (fields.a.values(), fields.b.values());
    let (f, g) = (forcing.f.values(), forcing.g.values());
    let pf = p as f64;
    let mut out = Vec::with_capacity(a.len().saturating_sub(2));
    for i in 1..a.len().saturating_sub(1) {
        let site = i as i64 - k as i64;
        let v = match config.position(site) {
            Some(j) => 1.0 + epsilon * chi.map_or(0.0, |c| c[j]),
            None => 0.0,
        };
        let lap_a = a[i + 1] - a[i] * 2.0 + a[i - 1];
        let lap_b = b[i + 1] - b[i] * 2.0 + b[i - 1];
        let ra = -lap_a * epsilon + a[i] - (a[i] * (1.0 + pf) + b[i] * pf) * v - omega * a[i] - f[i];
        let rb = -lap_b * epsilon + b[i] - (a[i] * pf + b[i] * (1.0 + pf)) * v + omega * b[i] - g[i];
        out.push(ra.norm().max(rb.norm()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{weighted_norm, NormSpec};
    use alloc::vec;
    use core::f64::consts::PI;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn cfg(plus: &[i64], minus: &[i64]) -> SupportConfig {
        SupportConfig::new(plus.to_vec(), minus.to_vec()).unwrap()
    }

    #[test]
    fn z_examples() {
        assert_eq!(solve_z(c(0.0, 0.0)).z, c(0.0, 0.0));
        assert_eq!(solve_z(c(4.0, 0.0)).z, c(-PI, 0.0));
        let z = solve_z(c(-1.0, 0.0)).z;
        let want = -((3.0 + 5f64.sqrt()) / 2.0).ln();
        assert!((z - c(0.0, want)).norm() < 1e-14 && (want + 0.9624236501192069).abs() < 1e-12);
        assert!((solve_z(c(2.0, 1e-14)).z - c(-PI / 2.0, 0.0)).norm() < 1e-12);
        assert!((solve_z(c(2.0, 0.0)).z - c(-PI / 2.0, 0.0)).norm() < 1e-15);
        assert!((solve_z_side(c(2.0, 0.0), BandSide::Lower).z - c(PI / 2.0, 0.0)).norm() < 1e-15);
        assert!((solve_z(c(2.0, -1e-14)).z - c(PI / 2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn theta_and_kappa_examples() {
        assert_eq!(solve_theta(0.0).unwrap(), 0.0);
        assert_eq!(solve_theta(4.0).unwrap(), -PI);
        assert!((solve_theta(1.0).unwrap() + PI / 3.0).abs() < 1e-15);
        assert!((solve_theta(2.0).unwrap() + PI / 2.0).abs() < 1e-15);
        assert!(solve_theta(4.5).is_err());
        assert!((solve_kappa(0.0, 0.05).unwrap() - 21f64.acosh()).abs() < 1e-14);
        assert!((solve_kappa(0.0, 0.05).unwrap() - 3.737102242198924).abs() < 1e-12);
        assert!(solve_kappa(1.0, 0.0).is_err());
    }

    #[test]
    fn kappa_asymptotics() {
        let omega = 1.3;
        let errs: Vec<f64> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&e| (solve_kappa(omega, e).unwrap().exp() - (2.0 / e + 2.0 + omega - e / 2.0)).abs())
            .collect();
        // second order: halving eps divides the error by about four
        for w in errs.windows(2) {
            let r = w[0] / w[1];
            assert!(r > 3.0 && r < 5.0, "{errs:?}");
        }
        let e = 1e-4;
        let k = solve_kappa(omega, e).unwrap();
        assert!((2.0 * e * k.sinh() - 2.0).abs() < 1e-3);
    }

    #[test]
    fn band_point_residuals() {
        for i in 0..=40 {
            let w = 0.1 * i as f64;
            let bp = BandPoint::new(w, 0.03).unwrap();
            for r in bp.residuals() {
                assert!(r < 1e-12);
            }
        }
    }

    #[test]
    fn green_column() {
        let pt = solve_z(c(-1.0, 0.3));
        let f = LatticeVector::from_fn(6, |n| if n == 0 { c(1.0, 0.0) } else { c(0.0, 0.0) });
        let r = free_resolvent_apply(&pt, &f).unwrap();
        for (n, v) in r.iter_sites() {
            let want = (-I * pt.z * n.abs() as f64).exp() / pt.prefactor();
            assert!((v - want).norm() < 1e-15);
        }
    }

    #[test]
    fn free_resolvent_inverts_laplacian() {
        let pt = solve_z(c(-1.0, 0.0));
        let k = 20;
        let f = LatticeVector::from_fn(k, |n| {
            if n.abs() <= 5 {
                c((n as f64 * 0.7).sin(), (n as f64 * 1.3).cos())
            } else {
                c(0.0, 0.0)
            }
        });
        let r = free_resolvent_apply(&pt, &f).unwrap();
        let v = r.values();
        for i in 1..v.len() - 1 {
            let lhs = -(v[i + 1] - v[i] * 2.0 + v[i - 1]) - pt.lambda * v[i];
            assert!((lhs - f.values()[i]).norm() < 1e-10);
        }
    }

    #[test]
    fn band_resolvent_bound() {
        let theta = -PI / 2.0;
        let pt = DispersionPoint {
            lambda: c(2.0, 0.0),
            z: c(theta, 0.0),
            on_band: true,
        };
        let f = LatticeVector::from_fn(15, |n| c(1.0 / (1.0 + (n * n) as f64), 0.3));
        let r = free_resolvent_apply(&pt, &f).unwrap();
        let sup = r.values().iter().map(|x| x.norm()).fold(0.0, f64::max);
        let l1 = weighted_norm(&f, NormSpec::new(1, 0.0).unwrap());
        assert!(sup <= l1 / (2.0 * theta.sin().abs()) + 1e-14);
    }

    #[test]
    fn band_edge_prefactor_is_rejected() {
        let f = LatticeVector::filled(3, c(1.0, 0.0));
        assert!(matches!(
            free_resolvent_apply(&solve_z(c(0.0, 0.0)), &f),
            Err(Error::SingularPrefactor { .. })
        ));
        assert!(matches!(
            free_resolvent_apply(&solve_z(c(4.0, 0.0)), &f),
            Err(Error::SingularPrefactor { .. })
        ));
        assert!(matches!(
            puiseux_decompose(0.0, &f),
            Err(Error::SingularPrefactor { .. })
        ));
    }

    #[test]
    fn puiseux_delta() {
        let f = LatticeVector::from_fn(5, |n| if n == 0 { c(1.0, 0.0) } else { c(0.0, 0.0) });
        for th in [-0.2, -0.05, 0.01] {
            let parts = puiseux_decompose(th, &f).unwrap();
            let r0 = parts.remainder.get(0).unwrap();
            let want = (1.0 / th.sin() - 1.0 / th) / (I * 2.0);
            assert!((r0 - want).norm() < 1e-12);
            // 1/sin t - 1/t = t/6 + 7 t^3 / 360 + ...
            assert!((want - th / 6.0 / (I * 2.0)).norm() < th.abs().powi(3) / 50.0 + 1e-15);
        }
    }

    #[test]
    fn puiseux_zero_mean_and_ratio() {
        let f = LatticeVector::from_fn(8, |n| match n {
            -1 => c(1.0, 0.0),
            2 => c(-1.0, 0.0),
            _ => c(0.0, 0.0),
        });
        assert_eq!(puiseux_decompose(-0.1, &f).unwrap().pole_coeff, c(0.0, 0.0));
        let g = LatticeVector::from_fn(8, |n| c((1.0 + n as f64 * 0.37).sin(), (n as f64).cos() * 0.2));
        let sup = |t: f64| {
            puiseux_decompose(t, &g)
                .unwrap()
                .remainder
                .values()
                .iter()
                .map(|x| x.norm())
                .fold(0.0, f64::max)
        };
        let r = sup(-0.02) / sup(-0.01);
        assert!(r > 1.7 && r < 2.3, "{r}");
    }

    #[test]
    fn q_matrix_layout() {
        assert_eq!(build_q(&[]), CMatrix::from_element(1, 1, ONE));
        let q = build_q(&[c(0.3, 0.1)]);
        assert_eq!(q[(0, 1)], c(0.3, 0.1));
        assert_eq!(q[(1, 0)], c(0.3, 0.1));
        let (a, b) = (c(0.5, -0.2), c(1.5, 0.7));
        let q = build_q(&[a, b]);
        let want = [[ONE, a, a * b], [a, ONE, b], [a * b, b, ONE]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(q[(i, j)], want[i][j]);
            }
        }
    }

    #[test]
    fn det_q_examples() {
        assert_eq!(det_q_closed(&[]), ONE);
        assert_eq!(det_q_closed(&[ONE, c(0.3, 0.2)]), c(0.0, 0.0));
        let d = det_q_closed(&[c(0.5, 0.0), c(0.2, 0.0)]);
        assert!((d - c(0.72, 0.0)).norm() < 1e-15);
        let direct = crate::linalg::det(&build_q(&[c(0.5, 0.0), c(0.2, 0.0)]));
        assert!((direct - c(0.72, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn limit_mode_matrix() {
        let conf = cfg(&[0, 1], &[3]);
        let om = c(0.3, -0.7);
        for p in [1, 2] {
            let a = build_a(&conf, om, 0.0, p, None).unwrap();
            let n = 3;
            let pf = p as f64;
            for i in 0..n {
                for j in 0..n {
                    let d = if i == j { 1.0 } else { 0.0 };
                    assert_eq!(a.entries[(i, j)], -(om + pf) * d);
                    assert_eq!(a.entries[(i, n + j)], c(-pf * d, 0.0));
                    assert_eq!(a.entries[(n + i, j)], c(-pf * d, 0.0));
                    assert_eq!(a.entries[(n + i, n + j)], -(pf - om) * d);
                }
            }
            let want = (-om * om).powi(3);
            assert!((a.determinant() - want).norm() < 1e-13 * want.norm().max(1.0));
        }
        let a = build_a(&cfg(&[0], &[]), c(0.0, 1.0), 0.0, 1, None).unwrap();
        assert!((a.determinant() - ONE).norm() < 1e-15);
    }

    #[test]
    fn band_matrix_matches_general_matrix() {
        let conf = cfg(&[0, 1], &[3]);
        let eps = 0.04;
        let chi = [1.0, 2.0, -0.5];
        for i in 1..20 {
            let theta = -PI * i as f64 / 20.0;
            let omega = 1.0 + eps * (2.0 - 2.0 * theta.cos());
            let a = build_a(&conf, c(omega, 0.0), eps, 2, Some(&chi)).unwrap();
            let b = build_a_band(&conf, c(theta, 0.0), eps, 2, Some(&chi)).unwrap();
            let scale = a.entries.norm();
            assert!((&a.entries - &b.entries).norm() < 1e-12 * scale, "theta={theta}");
        }
    }

    #[test]
    fn boundary_solve_examples() {
        let conf = cfg(&[0], &[]);
        let a = build_a(&conf, c(0.0, 1.0), 0.0, 1, None).unwrap();
        let zero = solve_boundary_system(&a, &CVector::zeros(2)).unwrap();
        assert_eq!(zero.norm(), 0.0);
        let h = CVector::from_vec(vec![ONE, c(0.0, 0.0)]);
        let sol = solve_boundary_system(&a, &h).unwrap();
        // A = [[-(1+i), -1], [-1, -(1-i)]], det 1, so c = adj(A) h = (-(1-i), 1)
        assert!((sol[0] - c(-1.0, 1.0)).norm() < 1e-15);
        assert!((sol[1] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn singular_system_reports_sigma() {
        let conf = cfg(&[0, 1], &[]);
        let a = build_a_band(&conf, c(0.0, 0.0), 0.05, 1, None).unwrap();
        match solve_boundary_system(&a, &CVector::from_element(4, ONE)) {
            Err(Error::NearSingular { smallest, largest }) => assert!(smallest <= 1e-13 * largest),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn fields_residual_example() {
        let conf = cfg(&[0], &[]);
        let k = 30;
        let f = LatticeVector::from_fn(k, |n| if n == 3 { ONE } else { c(0.0, 0.0) });
        let g = LatticeVector::filled(k, c(0.0, 0.0));
        let forcing = ForcingData::new(f, g).unwrap();
        let om = c(0.0, 0.3);
        let fields = resolvent_fields(&conf, om, 0.05, 1, None, &forcing).unwrap();
        let r = resolvent_equation_residual(&conf, om, 0.05, 1, None, &forcing, &fields).unwrap();
        assert!(
            r.iter().all(|&x| x < 1e-9),
            "{:?}",
            r.iter().copied().fold(0.0, f64::max)
        );
    }

    #[test]
    fn zero_forcing_gives_zero_fields() {
        let conf = cfg(&[0, 1], &[]);
        let z = LatticeVector::filled(10, c(0.0, 0.0));
        let forcing = ForcingData::new(z.clone(), z).unwrap();
        let f = resolvent_fields(&conf, c(0.2, 0.5), 0.05, 1, None, &forcing).unwrap();
        assert!(f.a.values().iter().chain(f.b.values()).all(|x| x.norm() == 0.0));
    }

    #[test]
    fn limit_mode_fields_solve_equations() {
        let conf = cfg(&[0], &[2]);
        let k = 6;
        let f = LatticeVector::from_fn(k, |n| c(n as f64, 1.0));
        let g = LatticeVector::from_fn(k, |n| c(1.0, -(n as f64)));
        let forcing = ForcingData::new(f, g).unwrap();
        let om = c(0.4, 0.2);
        let fields = resolvent_fields(&conf, om, 0.0, 2, None, &forcing).unwrap();
        let r = resolvent_equation_residual(&conf, om, 0.0, 2, None, &forcing, &fields).unwrap();
        assert!(r.iter().all(|&x| x < 1e-12));
    }

    #[test]
    fn forcing_round_trip() {
        let big_f = LatticeVector::from_fn(4, |n| c(n as f64, 0.5));
        let big_g = LatticeVector::from_fn(4, |n| c(-1.0, n as f64 * 0.1));
        let fd = ForcingData::from_real_pair(&big_f, &big_g).unwrap();
        let (f2, g2) = fd.to_real_pair();
        for (x, y) in f2
            .values()
            .iter()
            .zip(big_f.values())
            .chain(g2.values().iter().zip(big_g.values()))
        {
            assert!((x - y).norm() < 1e-15);
        }
    }

    #[test]
    fn band_invertibility_of_m() {
        for n in 2..6 {
            let gaps = vec![1u64; n - 1];
            let mut i = 0;
            while i <= 100 {
                let theta = -PI + 0.1 + (PI - 0.2) * i as f64 / 100.0;
                let m = build_q(&gap_factors(&gaps, c(theta, 0.0)));
                let (lo, _) = singular_extremes(&m);
                assert!(lo > 1e-3, "n={n} theta={theta} lo={lo}");
                i += 1;
            }
        }
    }

    fn arb_c() -> impl Strategy<Value = C64> {
        (-1.5f64..1.5, -1.5f64..1.5).prop_map(|(a, b)| C64::new(a, b))
    }

    proptest! {
        #[test]
        fn det_q_identity(q in prop::collection::vec(arb_c(), 0..8)) {
            let d = crate::linalg::det(&build_q(&q));
            let e = det_q_closed(&q);
            prop_assert!((d - e).norm() <= 1e-12 * e.norm().max(1.0));
        }

        #[test]
        fn dispersion_residual(re in -6.0f64..10.0, im in -5.0f64..5.0) {
            let pt = solve_z(C64::new(re, im));
            prop_assert!(pt.residual() < 1e-12 * (1.0 + pt.lambda.norm()));
            prop_assert!(pt.z.im <= 0.0);
            prop_assert!(pt.z.re >= -PI && pt.z.re < PI);
        }

        #[test]
        fn omega_reflection_swaps_blocks(re in -2.0f64..2.0, im in 0.01f64..0.5, p in 1u32..4) {
            let conf = cfg(&[0, 1], &[3]);
            let om = C64::new(re, im);
            let a = build_a(&conf, om, 0.05, p, None).unwrap().determinant();
            let b = build_a(&conf, -om, 0.05, p, None).unwrap().determinant();
            prop_assert!((a - b).norm() <= 1e-9 * a.norm().max(1e-3));
        }

        #[test]
        fn fields_satisfy_equations(
            re in -1.5f64..1.5, im in 0.05f64..0.4, eps in 0.01f64..0.1, p in 1u32..3,
            seed in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 7),
        ) {
            let conf = cfg(&[-1, 0], &[2]);
            let k = 25;
            let f = LatticeVector::from_fn(k, |n| if n.abs() <= 3 { let s = seed[(n + 3) as usize]; C64::new(s.0, s.1) } else { ZERO });
            let g = LatticeVector::from_fn(k, |n| if n.abs() <= 3 { let s = seed[(3 - n) as usize]; C64::new(s.1, -s.0) } else { ZERO });
            let forcing = ForcingData::new(f, g).unwrap();
            let om = C64::new(re, im);
            let chi = [1.0, -0.5, 2.0];
            let fields = resolvent_fields(&conf, om, eps, p, Some(&chi), &forcing).unwrap();
            let r = resolvent_equation_residual(&conf, om, eps, p, Some(&chi), &forcing, &fields).unwrap();
            prop_assert!(r.iter().all(|&x| x < 1e-9));
        }
    }
}
