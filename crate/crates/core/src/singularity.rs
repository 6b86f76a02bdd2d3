//! Singularities of the boundary system: band-edge null spaces and the
//! Lyapunov-Schmidt bounded-limit conditions, the cubic obstruction, zero
//! counting of `det A` and resonance roots for two-site configurations.
//!
//! The matrix `R` of cumulative gaps is [`gap_weight_matrix`] and its
//! `N(kappa)` is the `q_minus` block of a band [`CoefficientMatrix`].

use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::lattice::SupportConfig;
use crate::linalg::{self, null_space, rank, singular_extremes, RANK_REL_TOL};
use crate::resolvent::{
    boundary_rhs, build_a, build_a_band, kappa_of_theta, solve_kappa, CoefficientMatrix, ForcingData,
};
use crate::{CMatrix, CVector, RMatrix, RVector, C64};

const I: C64 = C64::new(0.0, 1.0);

/// Which end of the upper band `[1, 1 + 4 eps]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandEdge {
    /// `theta = 0`, `Omega = 1`.
    Lower,
    /// `theta = -pi`, `Omega = 1 + 4 eps`.
    Upper,
}

impl BandEdge {
    pub fn theta(self) -> f64 {
        match self {
            BandEdge::Lower => 0.0,
            BandEdge::Upper => -core::f64::consts::PI,
        }
    }

    /// Direction of the band interior in `theta`.
    pub fn inward(self) -> f64 {
        match self {
            BandEdge::Lower => -1.0,
            BandEdge::Upper => 1.0,
        }
    }
}

/// `R_ij = |n_i - n_j|`, the cumulative gap sums between support sites.
pub fn gap_weight_matrix(gaps: &[u64]) -> RMatrix {
    let n = gaps.len() + 1;
    let mut pos = Vec::with_capacity(n);
    let mut acc = 0u64;
    pos.push(0u64);
    for &g in gaps {
        acc += g;
        pos.push(acc);
    }
    RMatrix::from_fn(n, n, |i, j| pos[i].abs_diff(pos[j]) as f64)
}

/// `(-1)^{gap sum up to site j}` for every support site.
pub fn edge_signs(gaps: &[u64]) -> Vec<f64> {
    let mut s = Vec::with_capacity(gaps.len() + 1);
    let mut cur = 1.0;
    s.push(cur);
    for &g in gaps {
        if g % 2 == 1 {
            cur = -cur;
        }
        s.push(cur);
    }
    s
}

/// `M_+` (all ones) or `M_-` (`s s^T` with the edge signs).
pub fn sign_matrix(gaps: &[u64], edge: BandEdge) -> RMatrix {
    let n = gaps.len() + 1;
    match edge {
        BandEdge::Lower => RMatrix::from_element(n, n, 1.0),
        BandEdge::Upper => {
            let s = edge_signs(gaps);
            RMatrix::from_fn(n, n, |i, j| s[i] * s[j])
        }
    }
}

/// Orthonormal basis of `{w : sum w = 0}` from DCT-II vectors `k = 1..n-1`.
/// For `n = 3` this is `(1, 0, -1)/sqrt 2`, `(1, -2, 1)/sqrt 6`.
pub fn sum_zero_basis(n: usize) -> Vec<RVector> {
    (1..n)
        .map(|k| {
            let v = RVector::from_fn(n, |j, _| {
                (core::f64::consts::PI * k as f64 * (j as f64 + 0.5) / n as f64).cos()
            });
            let nrm = v.norm();
            v / nrm
        })
        .collect()
}

/// Orthonormal basis of `Null(M_+-)`.
pub fn sign_null_basis(gaps: &[u64], edge: BandEdge) -> Vec<RVector> {
    let n = gaps.len() + 1;
    let base = sum_zero_basis(n);
    match edge {
        BandEdge::Lower => base,
        BandEdge::Upper => {
            let s = edge_signs(gaps);
            base.into_iter()
                .map(|w| RVector::from_fn(n, |j, _| s[j] * w[j]))
                .collect()
        }
    }
}

fn to_complex(v: &RVector) -> CVector {
    v.map(|x| C64::new(x, 0.0))
}

/// Coefficient matrices at the two band edges.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMatrices {
    pub a_plus: CMatrix,
    pub a_minus: CMatrix,
    pub m_plus: RMatrix,
    pub m_minus: RMatrix,
    /// `2 eps (cosh kappa_+ - 1) = 2`; infinite when `eps = 0`.
    pub kappa_plus: f64,
    /// `2 eps (cosh kappa_- - 1) = 2 + 4 eps`; infinite when `eps = 0`.
    pub kappa_minus: f64,
    pub epsilon: f64,
    pub p: u32,
}

impl EdgeMatrices {
    pub fn get(&self, edge: BandEdge) -> &CMatrix {
        match edge {
            BandEdge::Lower => &self.a_plus,
            BandEdge::Upper => &self.a_minus,
        }
    }

    pub fn sign(&self, edge: BandEdge) -> &RMatrix {
        match edge {
            BandEdge::Lower => &self.m_plus,
            BandEdge::Upper => &self.m_minus,
        }
    }
}

fn limit_edge(m: &RMatrix, p: u32) -> CMatrix {
    let n = m.nrows();
    let pf = p as f64;
    let mut a = CMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = C64::new(-(1.0 + pf) * m[(i, j)], 0.0);
            a[(i, n + j)] = C64::new(-pf * m[(i, j)], 0.0);
        }
        a[(n + i, i)] = C64::new(-pf, 0.0);
        a[(n + i, n + i)] = C64::new(1.0 - pf, 0.0);
    }
    a
}

/// `A_+(eps) = A(theta = 0)` and `A_-(eps) = A(theta = -pi)`. At `eps = 0`
/// the edge limit `[[-(1+p) M, -p M], [-p I, (1-p) I]]` is returned.
pub fn edge_matrices(config: &SupportConfig, p: u32, epsilon: f64) -> Result<EdgeMatrices> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::Domain {
            what: "epsilon",
            value: epsilon,
        });
    }
    let gaps = config.gaps();
    let m_plus = sign_matrix(gaps, BandEdge::Lower);
    let m_minus = sign_matrix(gaps, BandEdge::Upper);
    if epsilon == 0.0 {
        return Ok(EdgeMatrices {
            a_plus: limit_edge(&m_plus, p),
            a_minus: limit_edge(&m_minus, p),
            m_plus,
            m_minus,
            kappa_plus: f64::INFINITY,
            kappa_minus: f64::INFINITY,
            epsilon,
            p,
        });
    }
    let plus = build_a_band(config, C64::new(0.0, 0.0), epsilon, p, None)?;
    let minus = build_a_band(config, C64::new(-core::f64::consts::PI, 0.0), epsilon, p, None)?;
    Ok(EdgeMatrices {
        a_plus: plus.entries,
        a_minus: minus.entries,
        m_plus,
        m_minus,
        kappa_plus: solve_kappa(0.0, epsilon)?,
        kappa_minus: solve_kappa(4.0, epsilon)?,
        epsilon,
        p,
    })
}

/// `dA/dtheta` of the band matrix at (possibly complex) `theta`.
pub fn band_matrix_derivative(
    config: &SupportConfig,
    theta: C64,
    epsilon: f64,
    p: u32,
    chi: Option<&[f64]>,
) -> Result<CMatrix> {
    let a = build_a_band(config, theta, epsilon, p, chi)?;
    let n = config.len();
    let r = gap_weight_matrix(config.gaps());
    let w = a.support_weights();
    let kappa = kappa_of_theta(theta, epsilon);
    let sk = kappa.sinh();
    let dkappa = if sk.norm() == 0.0 {
        C64::new(0.0, 0.0)
    } else {
        theta.sin() / sk
    };
    let pf = p as f64;
    let mut d = CMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let dm = -I * a.q_plus[(i, j)] * r[(i, j)] * w[j];
            let dn = -a.q_minus[(i, j)] * r[(i, j)] * dkappa * w[j];
            d[(i, j)] = -dm * (1.0 + pf);
            d[(i, n + j)] = -dm * pf;
            d[(n + i, j)] = -dn * pf;
            d[(n + i, n + j)] = -dn * (1.0 + pf);
        }
        d[(i, i)] += I * theta.cos() * (2.0 * epsilon);
        d[(n + i, n + i)] += kappa.cosh() * dkappa * (2.0 * epsilon);
    }
    Ok(d)
}

/// Lyapunov-Schmidt data at one band edge.
#[derive(Debug, Clone, PartialEq)]
pub struct LsReduction {
    pub edge: BandEdge,
    /// Right null vectors of `A_0`, rescaled so that `<u_i, v_j> = delta_ij`.
    pub null_basis_u: Vec<CVector>,
    /// Null vectors of `A_0^*`: `[w; 0]` with `w` in `Null(M)`.
    pub adjoint_null_basis_v: Vec<CVector>,
    pub a0: CMatrix,
    pub a1: CMatrix,
    /// `P_ij = v_i^* A_1 u_j`, the restriction of `A_1` to `Null(A_0)`.
    pub p_matrix: CMatrix,
    pub gap_weight: RMatrix,
}

impl LsReduction {
    pub fn null_dim(&self) -> usize {
        self.null_basis_u.len()
    }

    /// `max_ij |<u_i, v_j> - delta_ij|`.
    pub fn biorthonormality_error(&self) -> f64 {
        let mut e: f64 = 0.0;
        for (i, u) in self.null_basis_u.iter().enumerate() {
            for (j, v) in self.adjoint_null_basis_v.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                e = e.max((linalg::inner(u, v) - C64::new(want, 0.0)).norm());
            }
        }
        e
    }

    pub fn p_singular_values(&self) -> (f64, f64) {
        singular_extremes(&self.p_matrix)
    }

    pub fn p_invertible(&self) -> bool {
        if self.p_matrix.is_empty() {
            return true;
        }
        let (lo, hi) = self.p_singular_values();
        lo > RANK_REL_TOL * hi.max(1.0)
    }
}

/// Builds the reduction at `edge` for `eps >= 0`.
pub fn ls_reduction(config: &SupportConfig, p: u32, epsilon: f64, edge: BandEdge) -> Result<LsReduction> {
    let edges = edge_matrices(config, p, epsilon)?;
    let a0 = edges.get(edge).clone();
    let n = config.len();
    let r = gap_weight_matrix(config.gaps());
    let a1 = if epsilon == 0.0 {
        // the derivative of the prefactor 2 i eps sin(theta) vanishes with eps
        let m = edges.sign(edge);
        let pf = p as f64;
        let mut d = CMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                let rm = I * r[(i, j)] * m[(i, j)];
                d[(i, j)] = rm * (1.0 + pf);
                d[(i, n + j)] = rm * pf;
            }
        }
        d
    } else {
        band_matrix_derivative(config, C64::new(edge.theta(), 0.0), epsilon, p, None)?
    };
    let us = null_space(&a0, RANK_REL_TOL);
    let vs: Vec<CVector> = sign_null_basis(config.gaps(), edge)
        .iter()
        .map(|w| {
            let mut v = CVector::zeros(2 * n);
            v.rows_mut(0, n).copy_from(&to_complex(w));
            v
        })
        .collect();
    if us.len() != vs.len() {
        return Err(Error::NearSingular {
            smallest: us.len() as f64,
            largest: vs.len() as f64,
        });
    }
    let k = us.len();
    let u_mat = CMatrix::from_columns(&us);
    let v_mat = CMatrix::from_columns(&vs);
    let (u_bi, p_matrix) = if k == 0 {
        (Vec::new(), CMatrix::zeros(0, 0))
    } else {
        let g = v_mat.adjoint() * &u_mat;
        let g_inv = g.clone().try_inverse().ok_or_else(|| {
            let (lo, hi) = singular_extremes(&g);
            Error::NearSingular {
                smallest: lo,
                largest: hi,
            }
        })?;
        let u_new = &u_mat * g_inv;
        let p_matrix = v_mat.adjoint() * &a1 * &u_new;
        let cols = (0..k).map(|i| u_new.column(i).into_owned()).collect();
        (cols, p_matrix)
    };
    Ok(LsReduction {
        edge,
        null_basis_u: u_bi,
        adjoint_null_basis_v: vs,
        a0,
        a1,
        p_matrix,
        gap_weight: r,
    })
}

/// `h` at the edge and its `theta` derivative.
pub fn edge_rhs(
    config: &SupportConfig,
    epsilon: f64,
    p: u32,
    edge: BandEdge,
    forcing: &ForcingData,
) -> Result<(CVector, CVector)> {
    let a = build_a_band(config, C64::new(edge.theta(), 0.0), epsilon, p, None)?;
    let h0 = boundary_rhs(config, &a, forcing)?;
    let k = forcing.half_width();
    config.check_window(k)?;
    let n = config.len();
    let fv = forcing.f.values();
    let sign_of = |d: u64| match edge {
        BandEdge::Lower => 1.0,
        BandEdge::Upper => {
            if d % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        }
    };
    let mut h1 = CVector::zeros(2 * n);
    for (j, &s) in config.sites().iter().enumerate() {
        let si = (s + k as i64) as usize;
        h1[j] = fv
            .iter()
            .enumerate()
            .map(|(m, &x)| {
                let d = si.abs_diff(m) as u64;
                -I * x * (d as f64 * sign_of(d))
            })
            .sum();
    }
    // the lower block depends on theta through kappa only, and dkappa/dtheta = 0 at both edges
    Ok((h0, h1))
}

/// Outcome of the bounded-limit check at one edge.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeLimitReport {
    pub edge: BandEdge,
    pub null_dim: usize,
    pub expected_null_dim: usize,
    /// `max_j |<h_0, v_j>| / |h_0|`.
    pub orthogonality: f64,
    /// Whether the first `N` entries of `h_0` agree up to the edge signs.
    pub rhs_entries_identical: bool,
    pub biorthonormality_error: f64,
    pub p_matrix: CMatrix,
    pub p_invertible: bool,
    /// Limit `c_0 = U P^{-1} V^*(h_1 - A_1 b_0) + b_0`, `b_0 = A_0^+ h_0`.
    pub limit_solution: Option<CVector>,
    /// `(|theta - theta_edge|, |c(theta) - c_0|)`.
    pub convergence: Vec<(f64, f64)>,
    /// Ratios of successive differences `|c(s_k) - c(s_{k+1})|`.
    pub cauchy_ratios: Vec<f64>,
}

impl EdgeLimitReport {
    pub fn passed(&self) -> bool {
        self.null_dim == self.expected_null_dim
            && self.orthogonality < 1e-10
            && self.rhs_entries_identical
            && self.biorthonormality_error < 1e-10
            && self.p_invertible
            && self.limit_solution.is_some()
            && self.convergence.iter().all(|&(s, d)| d <= 1e3 * s.max(1e-12))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundedLimitReport {
    pub lower: EdgeLimitReport,
    pub upper: EdgeLimitReport,
}

impl BoundedLimitReport {
    pub fn passed(&self) -> bool {
        self.lower.passed() && self.upper.passed()
    }
}

/// Distances from the edge used for the convergence check.
pub const EDGE_OFFSETS: [f64; 3] = [1e-2, 1e-3, 1e-4];

fn pseudo_solve(a: &CMatrix, h: &CVector) -> Result<CVector> {
    let svd = a.clone().svd(true, true);
    svd.solve(h, RANK_REL_TOL * svd.singular_values.max())
        .map_err(|_| Error::EigenSolver)
}

fn check_edge(
    config: &SupportConfig,
    p: u32,
    epsilon: f64,
    edge: BandEdge,
    forcing: &ForcingData,
) -> Result<EdgeLimitReport> {
    let ls = ls_reduction(config, p, epsilon, edge)?;
    let (h0, h1) = edge_rhs(config, epsilon, p, edge, forcing)?;
    let n = config.len();
    let hn = h0.norm().max(f64::MIN_POSITIVE);
    let orthogonality = ls
        .adjoint_null_basis_v
        .iter()
        .map(|v| linalg::inner(&h0, v).norm() / hn)
        .fold(0.0, f64::max);
    let signs = match edge {
        BandEdge::Lower => alloc::vec![1.0; n],
        BandEdge::Upper => edge_signs(config.gaps()),
    };
    let first = h0[0] * signs[0];
    let rhs_entries_identical = (0..n).all(|j| (h0[j] * signs[j] - first).norm() <= 1e-12 * hn.max(1.0));
    let p_invertible = ls.p_invertible();
    let limit_solution = if p_invertible {
        let b0 = pseudo_solve(&ls.a0, &h0)?;
        let c0 = if ls.null_dim() == 0 {
            b0
        } else {
            let v_mat = CMatrix::from_columns(&ls.adjoint_null_basis_v);
            let u_mat = CMatrix::from_columns(&ls.null_basis_u);
            let rhs = v_mat.adjoint() * (&h1 - &ls.a1 * &b0);
            let a = linalg::solve(&ls.p_matrix, &rhs).ok_or(Error::SingularJacobian)?;
            u_mat * a + b0
        };
        Some(c0)
    } else {
        None
    };
    let mut sols = Vec::new();
    for &s in &EDGE_OFFSETS {
        let theta = edge.theta() + edge.inward() * s;
        let a = build_a_band(config, C64::new(theta, 0.0), epsilon, p, None)?;
        let h = boundary_rhs(config, &a, forcing)?;
        sols.push((s, crate::resolvent::solve_boundary_system(&a, &h)?));
    }
    let convergence = match &limit_solution {
        Some(c0) => sols.iter().map(|(s, c)| (*s, (c - c0).norm())).collect(),
        None => Vec::new(),
    };
    let diffs: Vec<f64> = sols.windows(2).map(|w| (&w[0].1 - &w[1].1).norm()).collect();
    let cauchy_ratios = diffs.windows(2).map(|d| d[0] / d[1]).collect();
    Ok(EdgeLimitReport {
        edge,
        null_dim: ls.null_dim(),
        expected_null_dim: n - 1,
        orthogonality,
        rhs_entries_identical,
        biorthonormality_error: ls.biorthonormality_error(),
        p_matrix: ls.p_matrix,
        p_invertible,
        limit_solution,
        convergence,
        cauchy_ratios,
    })
}

/// Checks that the band solution `c(theta)` stays bounded at both edges.
pub fn check_bounded_limit(
    config: &SupportConfig,
    p: u32,
    epsilon: f64,
    forcing: &ForcingData,
) -> Result<BoundedLimitReport> {
    if !(epsilon > 0.0) {
        return Err(Error::Domain {
            what: "epsilon",
            value: epsilon,
        });
    }
    Ok(BoundedLimitReport {
        lower: check_edge(config, p, epsilon, BandEdge::Lower, forcing)?,
        upper: check_edge(config, p, epsilon, BandEdge::Upper, forcing)?,
    })
}

/// Dimension of `{w : sum w = 0, (R w)_j = (R w)_{j+1}}`; zero means the
/// restriction of `A_1` to the edge kernel is injective in the limit.
pub fn edge_kernel_obstruction_dim(gaps: &[u64]) -> usize {
    let n = gaps.len() + 1;
    let r = gap_weight_matrix(gaps);
    let mut m = RMatrix::zeros(n, n);
    for j in 0..n {
        m[(0, j)] = 1.0;
    }
    for i in 0..n - 1 {
        for j in 0..n {
            m[(i + 1, j)] = r[(i, j)] - r[(i + 1, j)];
        }
    }
    n - rank(&m, RANK_REL_TOL)
}

/// Tridiagonal `J` with ones off the diagonal.
pub fn j_matrix(n: usize) -> RMatrix {
    RMatrix::from_fn(n, n, |i, j| if i.abs_diff(j) == 1 { 1.0 } else { 0.0 })
}

/// Cubic-case non-degeneracy check at the lower edge.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRankReport {
    /// Eigenvalues of `2I - J`, ascending.
    pub eigenvalues_2i_minus_j: Vec<f64>,
    pub positive_definite: bool,
    pub rank_a: usize,
    pub rank_a_squared: usize,
    pub expected_rank: usize,
    /// `max |x - eps (2I - J) y| / |y|` over null vectors `[x; y]`.
    pub null_form_residual: f64,
}

impl EdgeRankReport {
    pub fn passed(&self) -> bool {
        self.positive_definite && self.rank_a == self.expected_rank && self.rank_a_squared == self.rank_a
    }

    /// A generalized kernel is present.
    pub fn degenerate(&self) -> bool {
        self.rank_a_squared < self.rank_a
    }
}

pub fn edge_rank_check(config: &SupportConfig, epsilon: f64) -> Result<EdgeRankReport> {
    let n = config.len();
    let c = RMatrix::identity(n, n) * 2.0 - j_matrix(n);
    let mut eigs: Vec<f64> = c.symmetric_eigenvalues().iter().copied().collect();
    eigs.sort_by(f64::total_cmp);
    let edges = edge_matrices(config, 1, epsilon)?;
    let a = &edges.a_plus;
    let a2 = a * a;
    let us = null_space(a, RANK_REL_TOL);
    let cc = c.map(|x| C64::new(x * epsilon, 0.0));
    let null_form_residual = us
        .iter()
        .map(|u| {
            let x = u.rows(0, n).into_owned();
            let y = u.rows(n, n).into_owned();
            (x - &cc * &y).norm() / y.norm().max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max);
    Ok(EdgeRankReport {
        positive_definite: eigs.first().is_none_or(|&e| e > 0.0),
        eigenvalues_2i_minus_j: eigs,
        rank_a: rank(a, RANK_REL_TOL),
        rank_a_squared: rank(&a2, RANK_REL_TOL),
        expected_rank: n + 1,
        null_form_residual,
    })
}

/// `C = 2I - J - 2 diag(chi)` projected onto `Null(M_+)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicObstruction {
    pub c_matrix: RMatrix,
    /// `P_ij = <C w_i, w_j>` in the DCT-II basis of `Null(M_+)`.
    pub p_matrix: RMatrix,
    pub singular: bool,
}

pub fn cubic_obstruction(config: &SupportConfig, chi: &[f64]) -> Result<CubicObstruction> {
    let n = config.len();
    if chi.len() != n {
        return Err(Error::LengthMismatch {
            what: "chi",
            expected: n,
            got: chi.len(),
        });
    }
    let c =
        RMatrix::identity(n, n) * 2.0 - j_matrix(n) - RMatrix::from_diagonal(&RVector::from_column_slice(chi)) * 2.0;
    let ws = sum_zero_basis(n);
    let k = ws.len();
    let p = RMatrix::from_fn(k, k, |i, j| (&c * &ws[i]).dot(&ws[j]));
    let singular = if k == 0 {
        false
    } else {
        let (lo, hi) = singular_extremes(&p);
        lo <= RANK_REL_TOL * hi.max(1.0)
    };
    Ok(CubicObstruction {
        c_matrix: c,
        p_matrix: p,
        singular,
    })
}

/// Number of zeros of `det A(Omega, eps)` inside a circle.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroCount {
    pub count: i64,
    /// Winding number before rounding.
    pub winding: f64,
    pub n_points: usize,
    pub min_abs: f64,
    pub scale: f64,
}

pub const CONTOUR_POINTS: usize = 720;
const CONTOUR_MAX_DOUBLINGS: usize = 6;

fn winding(dets: &[C64]) -> (f64, f64) {
    let mut total = 0.0;
    let mut max_step: f64 = 0.0;
    for k in 0..dets.len() {
        let a = dets[k];
        let b = dets[(k + 1) % dets.len()];
        let step = (b / a).arg();
        max_step = max_step.max(step.abs());
        total += step;
    }
    (total / (2.0 * core::f64::consts::PI), max_step)
}

fn circle_crosses_band(center: C64, radius: f64, epsilon: f64) -> bool {
    if epsilon == 0.0 {
        return false;
    }
    [(1.0, 1.0 + 4.0 * epsilon), (-1.0 - 4.0 * epsilon, -1.0)]
        .iter()
        .any(|&(lo, hi)| {
            let dy = center.im.abs();
            let nearest = if center.re < lo {
                lo - center.re
            } else if center.re > hi {
                center.re - hi
            } else {
                0.0
            };
            let near = nearest.hypot(dy);
            let far = (lo - center.re).abs().max((hi - center.re).abs()).hypot(dy);
            near <= radius && radius <= far
        })
}

/// Winding number of `det A` around `|Omega - center| = radius`, starting
/// from `n_points` samples and doubling until two counts agree.
pub fn det_zero_count(
    config: &SupportConfig,
    p: u32,
    epsilon: f64,
    center: C64,
    radius: f64,
    n_points: usize,
) -> Result<ZeroCount> {
    if !(radius > 0.0) || n_points < 8 {
        return Err(Error::InvalidGrid {
            reason: "contour needs a positive radius and at least 8 points",
        });
    }
    if circle_crosses_band(center, radius, epsilon) {
        return Err(Error::ContourCrossesBand);
    }
    let eval = |m: usize| -> Result<(Vec<C64>, f64, f64)> {
        let mut dets = Vec::with_capacity(m);
        for k in 0..m {
            let t = 2.0 * core::f64::consts::PI * k as f64 / m as f64;
            let om = center + C64::from_polar(radius, t);
            dets.push(build_a(config, om, epsilon, p, None)?.determinant());
        }
        let min_abs = dets.iter().map(|d| d.norm()).fold(f64::INFINITY, f64::min);
        let scale = dets.iter().map(|d| d.norm()).fold(0.0, f64::max);
        Ok((dets, min_abs, scale))
    };
    let mut m = n_points;
    let mut prev: Option<i64> = None;
    for _ in 0..=CONTOUR_MAX_DOUBLINGS {
        let (dets, min_abs, scale) = eval(m)?;
        if !(min_abs > 1e-12 * scale) {
            return Err(Error::ContourTooClose { min_abs, scale });
        }
        let (w, max_step) = winding(&dets);
        let count = w.round() as i64;
        if max_step < core::f64::consts::FRAC_PI_4 && prev == Some(count) {
            return Ok(ZeroCount {
                count,
                winding: w,
                n_points: m,
                min_abs,
                scale,
            });
        }
        prev = Some(count);
        m *= 2;
    }
    Err(Error::RootNotFound {
        iterations: CONTOUR_MAX_DOUBLINGS,
        last_step: 0.0,
    })
}

/// Sampling of the upper semi-annulus `gamma < |lambda| < delta / eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnulusScan {
    /// Smallest singular value of `A(1 + eps lambda, eps)` over the grid.
    pub min_sigma: f64,
    pub argmin: C64,
    pub n_radial: usize,
    pub n_angular: usize,
}

/// Scans `|lambda|` log-uniformly and `arg lambda` uniformly in `(0, pi)`.
pub fn semi_annulus_scan(
    config: &SupportConfig,
    p: u32,
    epsilon: f64,
    gamma_plus: f64,
    delta_plus: f64,
    n_radial: usize,
    n_angular: usize,
) -> Result<AnnulusScan> {
    if !(gamma_plus > 4.0) {
        return Err(Error::Domain {
            what: "gamma_plus",
            value: gamma_plus,
        });
    }
    if !(delta_plus > 0.0 && delta_plus < 1.0) {
        return Err(Error::Domain {
            what: "delta_plus",
            value: delta_plus,
        });
    }
    if !(epsilon > 0.0) {
        return Err(Error::Domain {
            what: "epsilon",
            value: epsilon,
        });
    }
    let r_max = delta_plus / epsilon;
    if !(r_max > gamma_plus) || n_radial < 2 || n_angular < 2 {
        return Err(Error::InvalidGrid {
            reason: "semi-annulus is empty or under-sampled",
        });
    }
    let (l0, l1) = (gamma_plus.ln(), r_max.ln());
    let mut best = (f64::INFINITY, C64::new(0.0, 0.0));
    for i in 0..n_radial {
        // open interval in both directions
        let r = (l0 + (l1 - l0) * (i as f64 + 0.5) / n_radial as f64).exp();
        for j in 0..n_angular {
            let phi = core::f64::consts::PI * (j as f64 + 0.5) / n_angular as f64;
            let lambda = C64::from_polar(r, phi);
            let a = build_a(config, C64::new(1.0, 0.0) + lambda * epsilon, epsilon, p, None)?;
            let (lo, _) = singular_extremes(&a.entries);
            if lo < best.0 {
                best = (lo, lambda);
            }
        }
    }
    Ok(AnnulusScan {
        min_sigma: best.0,
        argmin: best.1,
        n_radial,
        n_angular,
    })
}

/// Limits of `A(1 + eps lambda, eps)` for moderate and large `|lambda|`:
/// `[[-(1+p) M, -p M], [-p I, (1-p) I]]` and
/// `[[-(1 + eps lambda + p) I, -p I], [-p I, (1 + eps lambda - p) I]]`.
pub fn limiting_matrices(config: &SupportConfig, p: u32, epsilon: f64, lambda: C64) -> (CMatrix, CMatrix) {
    let n = config.len();
    let pf = p as f64;
    let zp = crate::resolvent::solve_z(lambda).z;
    let m = crate::resolvent::build_q(&crate::resolvent::gap_factors(config.gaps(), zp));
    let el = lambda * epsilon;
    let mut first = CMatrix::zeros(2 * n, 2 * n);
    let mut second = CMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            first[(i, j)] = -m[(i, j)] * (1.0 + pf);
            first[(i, n + j)] = -m[(i, j)] * pf;
        }
        first[(n + i, i)] = C64::new(-pf, 0.0);
        first[(n + i, n + i)] = C64::new(1.0 - pf, 0.0);
        second[(i, i)] = -(el + 1.0 + pf);
        second[(i, n + i)] = C64::new(-pf, 0.0);
        second[(n + i, i)] = C64::new(-pf, 0.0);
        second[(n + i, n + i)] = el + 1.0 - pf;
    }
    (first, second)
}

/// Sheet of a root of `det A(theta)` continued in `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sheet {
    /// `Im theta <= 0`: a genuine singularity of the resolvent.
    Physical,
    /// `Im theta > 0`: a resonance, off the physical sheet.
    ResonantPole,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonanceRoot {
    pub theta: C64,
    pub epsilon: f64,
    pub p: u32,
    pub gap: u64,
    pub sheet: Sheet,
    pub det_abs: f64,
    /// Hadamard bound on `|det A|` at the root.
    pub scale: f64,
    pub iterations: usize,
}

/// `nu(eps) - 1 = eps chi_eff` for the two-site profile with gap `m`.
pub fn resonance_chi(gap: u64, epsilon: f64) -> f64 {
    if gap == 2 {
        2.0 - 3.0 * epsilon
    } else {
        2.0 - 2.0 * epsilon
    }
}

/// Leading terms of the root near `-pi/2` for gap 2:
/// `-pi/2 + (p-1) eps + 2 (1-p) eps^2 + i (p-1)^2 eps^2`.
pub fn resonance_expansion(p: u32, epsilon: f64) -> C64 {
    let q = p as f64 - 1.0;
    C64::new(
        -core::f64::consts::FRAC_PI_2 + q * epsilon - 2.0 * q * epsilon * epsilon,
        q * q * epsilon * epsilon,
    )
}

fn hadamard(m: &CMatrix) -> f64 {
    m.row_iter().map(|r| r.norm()).product()
}

pub const RESONANCE_MAX_ITERATIONS: usize = 100;

/// Complex Newton iteration on `det A~(theta, eps) = 0` for the configuration
/// `{0, m}` with `V = nu(eps)` on both sites.
pub fn resonance_root(gap: u64, p: u32, epsilon: f64, theta_guess: C64) -> Result<ResonanceRoot> {
    if gap < 2 {
        return Err(Error::Domain {
            what: "gap",
            value: gap as f64,
        });
    }
    if !(epsilon > 0.0 && epsilon <= 0.1) {
        return Err(Error::Domain {
            what: "epsilon",
            value: epsilon,
        });
    }
    let config = SupportConfig::in_phase(&[0, gap as i64])?;
    let c = resonance_chi(gap, epsilon);
    let chi = [c, c];
    let det = |t: C64| -> Result<(C64, CMatrix)> {
        let a: CoefficientMatrix = build_a_band(&config, t, epsilon, p, Some(&chi))?;
        Ok((a.determinant(), a.entries))
    };
    let mut theta = theta_guess;
    let mut last_step = f64::INFINITY;
    for it in 1..=RESONANCE_MAX_ITERATIONS {
        let (f, _) = det(theta)?;
        let h = 1e-7 * (1.0 + theta.norm());
        let (fp, _) = det(theta + h)?;
        let (fm, _) = det(theta - h)?;
        let df = (fp - fm) / (2.0 * h);
        if df.norm() == 0.0 || !df.is_finite() {
            break;
        }
        let step = f / df;
        theta -= step;
        last_step = step.norm();
        if !theta.is_finite() {
            break;
        }
        if last_step < 1e-14 * (1.0 + theta.norm()) {
            let (f, a) = det(theta)?;
            let scale = hadamard(&a);
            if f.norm() < 1e-10 * scale {
                return Ok(ResonanceRoot {
                    theta,
                    epsilon,
                    p,
                    gap,
                    sheet: if theta.im > 0.0 {
                        Sheet::ResonantPole
                    } else {
                        Sheet::Physical
                    },
                    det_abs: f.norm(),
                    scale,
                    iterations: it,
                });
            }
        }
    }
    Err(Error::RootNotFound {
        iterations: RESONANCE_MAX_ITERATIONS,
        last_step,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeVector;
    use alloc::vec;
    use core::f64::consts::PI;

    fn cfg(plus: &[i64], minus: &[i64]) -> SupportConfig {
        SupportConfig::new(plus.to_vec(), minus.to_vec()).unwrap()
    }

    fn chain(n: usize) -> SupportConfig {
        cfg(&(0..n as i64).collect::<Vec<_>>(), &[])
    }

    fn forcing(k: usize, seed: f64) -> ForcingData {
        let f = LatticeVector::from_fn(k, |n| {
            if n.abs() <= 4 {
                C64::new((seed + n as f64).sin(), (seed * n as f64).cos() * 0.3)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let g = LatticeVector::from_fn(k, |n| {
            if n.abs() <= 3 {
                C64::new((seed * 2.0 - n as f64).cos(), 0.1 * n as f64)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        ForcingData::new(f, g).unwrap()
    }

    #[test]
    fn gap_weight_examples() {
        assert_eq!(
            gap_weight_matrix(&[1]),
            RMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])
        );
        assert_eq!(
            gap_weight_matrix(&[1, 1]),
            RMatrix::from_row_slice(3, 3, &[0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0])
        );
        assert_eq!(
            gap_weight_matrix(&[1, 4]),
            RMatrix::from_row_slice(3, 3, &[0.0, 1.0, 5.0, 1.0, 0.0, 4.0, 5.0, 4.0, 0.0])
        );
    }

    #[test]
    fn null_space_of_sign_matrices() {
        let ones = sign_matrix(&[1, 1], BandEdge::Lower).map(|x| C64::new(x, 0.0));
        assert_eq!(null_space(&ones, RANK_REL_TOL).len(), 2);
        let b = sum_zero_basis(3);
        let s2 = 2f64.sqrt();
        let s6 = 6f64.sqrt();
        assert!((&b[0] - RVector::from_vec(vec![1.0 / s2, 0.0, -1.0 / s2])).norm() < 1e-15);
        assert!((&b[1] - RVector::from_vec(vec![1.0 / s6, -2.0 / s6, 1.0 / s6])).norm() < 1e-15);
        for gaps in [vec![1u64, 2], vec![3, 1, 2]] {
            let m = sign_matrix(&gaps, BandEdge::Upper);
            for w in sign_null_basis(&gaps, BandEdge::Upper) {
                assert!((&m * &w).norm() < 1e-14);
            }
        }
        assert_eq!(
            sign_matrix(&[1, 2], BandEdge::Upper),
            RMatrix::from_row_slice(3, 3, &[1.0, -1.0, -1.0, -1.0, 1.0, 1.0, -1.0, 1.0, 1.0])
        );
    }

    #[test]
    fn edge_null_dimension() {
        for n in 2..=4 {
            let e = edge_matrices(&chain(n), 2, 0.05).unwrap();
            for a in [&e.a_plus, &e.a_minus] {
                let sv = linalg::singular_values(a);
                assert_eq!(null_space(a, RANK_REL_TOL).len(), n - 1);
                // gap of at least four orders between the kept and dropped values
                assert!(sv[n] > 1e4 * sv[n + 1].max(1e-300));
            }
        }
        let e = edge_matrices(&cfg(&[0, 2], &[3]), 1, 0.05).unwrap();
        assert_eq!(null_space(&e.a_minus, RANK_REL_TOL).len(), 2);
        assert!((e.kappa_plus - 21f64.acosh()).abs() < 1e-13);
        assert!((2.0 * 0.05 * (e.kappa_minus.cosh() - 1.0) - 2.2).abs() < 1e-12);
    }

    #[test]
    fn limit_null_vectors_have_product_form() {
        for p in [1u32, 2, 3] {
            let conf = chain(3);
            let e = edge_matrices(&conf, p, 0.0).unwrap();
            for edge in [BandEdge::Lower, BandEdge::Upper] {
                for w in sign_null_basis(conf.gaps(), edge) {
                    let mut u = CVector::zeros(6);
                    for j in 0..3 {
                        u[j] = C64::new((1.0 - p as f64) * w[j], 0.0);
                        u[3 + j] = C64::new(p as f64 * w[j], 0.0);
                    }
                    assert!((e.get(edge) * &u).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn adjoint_null_vectors_are_upper_block() {
        let conf = cfg(&[0, 1], &[2]);
        for edge in [BandEdge::Lower, BandEdge::Upper] {
            let ls = ls_reduction(&conf, 2, 0.05, edge).unwrap();
            for v in &ls.adjoint_null_basis_v {
                assert!((ls.a0.adjoint() * v).norm() < 1e-13);
                assert!(v.rows(3, 3).norm() == 0.0);
            }
            assert!(ls.biorthonormality_error() < 1e-10);
            // P_ij = v_i^* A_1 u_j
            for i in 0..2 {
                for j in 0..2 {
                    let want = (ls.adjoint_null_basis_v[i].adjoint() * &ls.a1 * &ls.null_basis_u[j])[(0, 0)];
                    assert!((ls.p_matrix[(i, j)] - want).norm() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        let conf = cfg(&[0, 1], &[3]);
        let chi = [1.0, 0.5, 2.0];
        for t in [C64::new(-0.7, 0.0), C64::new(-2.0, 0.1), C64::new(-1.3, -0.05)] {
            let h = 1e-6;
            let ap = build_a_band(&conf, t + h, 0.04, 2, Some(&chi)).unwrap().entries;
            let am = build_a_band(&conf, t - h, 0.04, 2, Some(&chi)).unwrap().entries;
            let fd = (ap - am) / C64::new(2.0 * h, 0.0);
            let d = band_matrix_derivative(&conf, t, 0.04, 2, Some(&chi)).unwrap();
            assert!((fd - &d).norm() < 1e-7 * d.norm());
        }
    }

    #[test]
    fn a1_at_lower_edge_has_closed_form() {
        let conf = chain(3);
        let (eps, p) = (0.05, 2u32);
        let d = band_matrix_derivative(&conf, C64::new(0.0, 0.0), eps, p, None).unwrap();
        let r = gap_weight_matrix(conf.gaps());
        let pf = p as f64;
        for i in 0..3 {
            for j in 0..3 {
                let dij = if i == j { 2.0 * eps } else { 0.0 };
                assert!((d[(i, j)] - I * (dij + (1.0 + pf) * r[(i, j)])).norm() < 1e-14);
                assert!((d[(i, 3 + j)] - I * pf * r[(i, j)]).norm() < 1e-14);
                assert_eq!(d[(3 + i, j)].norm(), 0.0);
                assert_eq!(d[(3 + i, 3 + j)].norm(), 0.0);
            }
        }
    }

    #[test]
    fn two_site_limit_p_is_nonzero_scalar() {
        // u = [(1-p) w; p w], w = (1,-1)/sqrt 2, R w = -w, (1+p)(1-p) + p^2 = 1
        let ls = ls_reduction(&chain(2), 2, 0.0, BandEdge::Lower).unwrap();
        assert_eq!(ls.p_matrix.shape(), (1, 1));
        let pv = ls.p_matrix[(0, 0)];
        assert!((pv.norm() - 1.0).abs() < 1e-12 && pv.re.abs() < 1e-12, "{pv}");
        assert!(ls.p_invertible());
    }

    #[test]
    fn bounded_limit_simply_connected() {
        for (conf, p) in [(chain(2), 1u32), (chain(3), 2), (cfg(&[0, 2], &[1]), 1)] {
            let rep = check_bounded_limit(&conf, p, 0.05, &forcing(20, 0.7)).unwrap();
            for e in [&rep.lower, &rep.upper] {
                assert!(e.passed(), "{e:?}");
                for r in &e.cauchy_ratios {
                    assert!((r / 10.0 - 1.0).abs() < 0.2, "{r}");
                }
                let (s0, d0) = e.convergence[0];
                let (s2, d2) = e.convergence[2];
                assert!(d2 / d0 < 2.0 * s2 / s0);
            }
        }
    }

    #[test]
    fn bounded_limit_wide_gap() {
        let rep = check_bounded_limit(&cfg(&[0, 3], &[]), 2, 0.05, &forcing(20, 1.1)).unwrap();
        assert!(rep.passed());
    }

    #[test]
    fn edge_obstruction_is_trivial() {
        for gaps in [vec![1u64], vec![1, 1], vec![1, 1, 1, 1], vec![2, 3], vec![1, 4, 2]] {
            assert_eq!(edge_kernel_obstruction_dim(&gaps), 0);
        }
    }

    #[test]
    fn edge_rank_examples() {
        let r = edge_rank_check(&chain(3), 0.05).unwrap();
        let s2 = 2f64.sqrt();
        for (e, w) in r.eigenvalues_2i_minus_j.iter().zip([2.0 - s2, 2.0, 2.0 + s2]) {
            assert!((e - w).abs() < 1e-12);
        }
        for eps in [0.02, 0.05] {
            let r = edge_rank_check(&chain(2), eps).unwrap();
            assert!(r.passed(), "{r:?}");
            assert_eq!((r.rank_a, r.rank_a_squared), (3, 3));
        }
        let r0 = edge_rank_check(&chain(3), 0.0).unwrap();
        assert!(r0.degenerate());
        for n in 1..=10 {
            assert!(edge_rank_check(&chain(n), 0.05).unwrap().positive_definite);
        }
    }

    #[test]
    fn edge_rank_null_form_is_second_order() {
        let a = edge_rank_check(&chain(3), 0.02).unwrap().null_form_residual;
        let b = edge_rank_check(&chain(3), 0.01).unwrap().null_form_residual;
        assert!(a / b > 3.0 && a / b < 5.0, "{a} {b}");
    }

    #[test]
    fn cubic_obstruction_cases() {
        let s3 = 3f64.sqrt();
        let cases: [(SupportConfig, [f64; 3], [f64; 4], bool); 3] = [
            (chain(3), [1.0, 0.0, 1.0], [0.0, 0.0, 0.0, 8.0 / 3.0], true),
            (
                cfg(&[0, 1], &[2]),
                [1.0, 2.0, 3.0],
                [-2.0, 2.0 / s3, 2.0 / s3, -2.0 / 3.0],
                true,
            ),
            (cfg(&[0, 2], &[1]), [3.0, 4.0, 3.0], [-4.0, 0.0, 0.0, -4.0], false),
        ];
        for (conf, chi, p, singular) in cases {
            let r = cubic_obstruction(&conf, &chi).unwrap();
            assert!(
                (r.p_matrix.clone() - RMatrix::from_row_slice(2, 2, &p)).norm() < 1e-12,
                "{}",
                r.p_matrix
            );
            assert_eq!(r.singular, singular);
        }
        let r = cubic_obstruction(&chain(3), &[1.0, 0.0, 1.0]).unwrap();
        assert_eq!(
            r.c_matrix,
            RMatrix::from_row_slice(3, 3, &[0.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 0.0])
        );
    }

    #[test]
    fn zero_counts() {
        for n in 1..=3 {
            let z = det_zero_count(&chain(n), 1, 0.01, C64::new(0.0, 0.0), 0.5, CONTOUR_POINTS).unwrap();
            assert_eq!(z.count, 2 * n as i64);
            assert!((z.winding - z.count as f64).abs() < 1e-6);
        }
        // at eps = 0.05 the outermost pair has left the disc: |Omega| = 0.5229 for
        // {0,1} and 0.5570 for {0,1,2} (dense eigensolve of the truncated operator)
        for (n, want) in [(1, 2), (2, 2), (3, 4)] {
            let z = det_zero_count(&chain(n), 1, 0.05, C64::new(0.0, 0.0), 0.5, CONTOUR_POINTS).unwrap();
            assert_eq!(z.count, want);
        }
        let z = det_zero_count(&chain(2), 1, 0.05, C64::new(0.0, 0.0), 0.55, CONTOUR_POINTS).unwrap();
        assert_eq!(z.count, 4);
        let z = det_zero_count(&chain(3), 2, 0.0, C64::new(0.0, 0.0), 0.5, CONTOUR_POINTS).unwrap();
        assert_eq!(z.count, 6);
        assert!(matches!(
            det_zero_count(&chain(1), 1, 0.05, C64::new(1.0, 0.0), 0.1, CONTOUR_POINTS),
            Err(Error::ContourCrossesBand)
        ));
    }

    #[test]
    fn semi_annulus_is_nonsingular() {
        let s = semi_annulus_scan(&chain(1), 1, 0.02, 5.0, 0.5, 40, 20).unwrap();
        assert!(s.min_sigma > 0.1, "{s:?}");
        let s = semi_annulus_scan(&chain(2), 1, 0.02, 5.0, 0.5, 200, 100).unwrap();
        assert!(s.min_sigma > 1e-3, "{s:?}");
    }

    #[test]
    fn limiting_matrices_are_approached() {
        let conf = chain(2);
        let mut errs = Vec::new();
        for eps in [1e-2f64, 1e-3, 1e-4] {
            let lambda = C64::from_polar(1.0 / eps.sqrt(), 1.0);
            let a = build_a(&conf, C64::new(1.0, 0.0) + lambda * eps, eps, 2, None)
                .unwrap()
                .entries;
            let (l1, l2) = limiting_matrices(&conf, 2, eps, lambda);
            errs.push(((&a - l1).norm(), (&a - l2).norm()));
        }
        // eps lambda = eps^{1/2}, so both distances shrink like sqrt(eps)
        for w in errs.windows(2) {
            for r in [w[0].0 / w[1].0, w[0].1 / w[1].1] {
                assert!(r > 2.5 && r < 4.0, "{errs:?}");
            }
        }
    }

    #[test]
    fn resonance_roots_match_frozen_values() {
        // 40-digit reference roots of the gap-2, p = 2 determinant with nu(eps)
        let frozen = [
            (0.04, C64::new(-1.53429321, 0.0013464037)),
            (0.02, C64::new(-1.55163436, 0.00036822063)),
            (0.01, C64::new(-1.56100113, 9.6016654e-5)),
        ];
        for (eps, want) in frozen {
            let guess = C64::new(-PI / 2.0 + eps, 0.0);
            let r = resonance_root(2, 2, eps, guess).unwrap();
            assert!((r.theta - want).norm() < 1e-8, "{eps}: {}", r.theta);
            assert_eq!(r.sheet, Sheet::ResonantPole);
            assert!((r.theta - resonance_expansion(2, eps)).norm() <= 50.0 * eps.powi(3));
        }
    }

    #[test]
    fn resonance_ratio_tends_to_expansion_coefficient() {
        let ratios: Vec<C64> = [0.04, 0.02, 0.01]
            .iter()
            .map(|&e| {
                let r = resonance_root(2, 2, e, C64::new(-PI / 2.0 + e, 0.0)).unwrap();
                (r.theta + PI / 2.0 - e) / (e * e)
            })
            .collect();
        let target = C64::new(-2.0, 1.0);
        for w in ratios.windows(2) {
            assert!((w[1] - target).norm() < (w[0] - target).norm());
        }
        assert!((ratios[2] - target).norm() < 0.1, "{ratios:?}");
    }

    #[test]
    fn resonance_root_rejects_bad_input() {
        assert!(resonance_root(1, 2, 0.02, C64::new(-1.5, 0.0)).is_err());
        assert!(resonance_root(2, 2, 0.5, C64::new(-1.5, 0.0)).is_err());
    }

    #[test]
    fn determinant_is_small_at_expansion_point() {
        let conf = SupportConfig::in_phase(&[0, 2]).unwrap();
        let mut vals = Vec::new();
        for eps in [0.04, 0.02, 0.01] {
            let c = resonance_chi(2, eps);
            let a = build_a_band(&conf, resonance_expansion(2, eps), eps, 2, Some(&[c, c])).unwrap();
            vals.push(a.determinant().norm() / hadamard(&a.entries));
        }
        // O(eps^3): halving eps cuts the value by close to eight
        for w in vals.windows(2) {
            assert!(w[0] / w[1] > 5.0, "{vals:?}");
        }
    }
}
