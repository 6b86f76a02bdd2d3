//! Scans of `||A(Omega, eps)^{-1}||_2` and of the weighted truncated
//! resolvent `||(L~ - Omega I~_2)^{-1}||_2` over the `Omega` plane, band
//! slices, local maxima and the `eps` scaling of interior peaks.
//!
//! Grid evaluation here is sequential; callers that want parallelism map
//! [`OmegaGrid::points`] themselves and use [`ScanResult::from_values`].

use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::lattice::{LatticeVector, NormSpec, SupportConfig};
use crate::linalg::{inverse_norm, singular_extremes};
use crate::resolvent::{
    assemble_resolvent_fields, boundary_rhs, build_a, build_a_band, solve_boundary_system, ForcingData,
};
use crate::singularity::resonance_chi;
use crate::soliton::SolitonProfile;
use crate::{CMatrix, RMatrix, C64};

/// Rectangular grid in the `Omega` plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaGrid {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub n_re: usize,
    pub n_im: usize,
}

impl OmegaGrid {
    pub fn new(re: (f64, f64), im: (f64, f64), n_re: usize, n_im: usize) -> Result<Self> {
        let g = Self {
            re_min: re.0,
            re_max: re.1,
            im_min: im.0,
            im_max: im.1,
            n_re,
            n_im,
        };
        g.validate()?;
        Ok(g)
    }

    /// Figure-sized default: `[-1.4, 1.4] x [-0.4, 0.4]`, 281 x 81.
    pub fn figure_default() -> Self {
        Self {
            re_min: -1.4,
            re_max: 1.4,
            im_min: -0.4,
            im_max: 0.4,
            n_re: 281,
            n_im: 81,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_re < 2 || self.n_im < 2 {
            return Err(Error::InvalidGrid {
                reason: "each axis needs at least two points",
            });
        }
        let finite = [self.re_min, self.re_max, self.im_min, self.im_max]
            .iter()
            .all(|x| x.is_finite());
        if !finite || !(self.re_max > self.re_min) || !(self.im_max > self.im_min) {
            return Err(Error::InvalidGrid {
                reason: "ranges must be finite and nonempty",
            });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n_re * self.n_im
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn re(&self, i: usize) -> f64 {
        self.re_min + (self.re_max - self.re_min) * i as f64 / (self.n_re - 1) as f64
    }

    pub fn im(&self, j: usize) -> f64 {
        self.im_min + (self.im_max - self.im_min) * j as f64 / (self.n_im - 1) as f64
    }

    pub fn step_re(&self) -> f64 {
        (self.re_max - self.re_min) / (self.n_re - 1) as f64
    }

    pub fn step_im(&self) -> f64 {
        (self.im_max - self.im_min) / (self.n_im - 1) as f64
    }

    /// Point number `k` in row-major order: `Im` outer, `Re` inner, both ascending.
    pub fn point(&self, k: usize) -> C64 {
        C64::new(self.re(k % self.n_re), self.im(k / self.n_re))
    }

    pub fn points(&self) -> Vec<C64> {
        (0..self.len()).map(|k| self.point(k)).collect()
    }
}

/// What a scan measured.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanMeta {
    pub plus: Vec<i64>,
    pub minus: Vec<i64>,
    pub p: u32,
    pub epsilon: f64,
    pub sigma: Option<f64>,
    pub half_width: Option<usize>,
}

impl ScanMeta {
    pub fn new(config: &SupportConfig, p: u32, epsilon: f64) -> Self {
        Self {
            plus: config.plus().to_vec(),
            minus: config.minus().to_vec(),
            p,
            epsilon,
            sigma: None,
            half_width: None,
        }
    }
}

/// `log10` of an inverse norm per grid point; `+inf` marks singular points.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub grid: OmegaGrid,
    pub values: Vec<f64>,
    pub meta: ScanMeta,
    /// Eigenvalues of the scanned pencil, when available.
    pub eigenvalues: Option<Vec<C64>>,
}

impl ScanResult {
    pub fn from_values(grid: OmegaGrid, values: Vec<f64>, meta: ScanMeta) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                what: "scan values",
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self {
            grid,
            values,
            meta,
            eigenvalues: None,
        })
    }

    pub fn value(&self, i_re: usize, j_im: usize) -> f64 {
        self.values[j_im * self.grid.n_re + i_re]
    }

    /// Indices of sentinel (singular) points.
    pub fn singular_points(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_infinite())
            .map(|(k, _)| k)
            .collect()
    }

    pub fn local_maxima(&self) -> Vec<LocalMax> {
        local_maxima_2d(&self.grid, &self.values)
    }
}

/// `log10 ||A(Omega, eps)^{-1}||_2`, `+inf` when singular to working precision.
pub fn coefficient_log_norm(config: &SupportConfig, p: u32, epsilon: f64, omega: C64) -> Result<f64> {
    let a = build_a(config, omega, epsilon, p, None)?;
    Ok(inverse_norm(&a.entries).log10())
}

/// Sequential scan of an arbitrary per-point evaluation.
pub fn scan_with<F>(grid: &OmegaGrid, meta: ScanMeta, mut f: F) -> Result<ScanResult>
where
    F: FnMut(C64) -> Result<f64>,
{
    grid.validate()?;
    let mut values = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        values.push(f(grid.point(k))?);
    }
    ScanResult::from_values(*grid, values, meta)
}

pub fn scan_coefficient_matrix(config: &SupportConfig, p: u32, epsilon: f64, grid: &OmegaGrid) -> Result<ScanResult> {
    scan_with(grid, ScanMeta::new(config, p, epsilon), |om| {
        coefficient_log_norm(config, p, epsilon, om)
    })
}

/// `theta_k = -pi k / (n + 1)`, `k = 1..n`.
pub fn band_thetas(n_theta: usize) -> Vec<f64> {
    (1..=n_theta)
        .map(|k| -core::f64::consts::PI * k as f64 / (n_theta + 1) as f64)
        .collect()
}

/// `(theta, ||A(theta)^{-1}||_2)` along the open upper band.
pub fn band_slice(config: &SupportConfig, p: u32, epsilon: f64, n_theta: usize) -> Result<Vec<(f64, f64)>> {
    band_slice_with(config, p, epsilon, n_theta, None)
}

pub fn band_slice_with(
    config: &SupportConfig,
    p: u32,
    epsilon: f64,
    n_theta: usize,
    chi: Option<&[f64]>,
) -> Result<Vec<(f64, f64)>> {
    if n_theta < 16 {
        return Err(Error::InvalidGrid {
            reason: "band slice needs at least 16 samples",
        });
    }
    band_thetas(n_theta)
        .into_iter()
        .map(|t| {
            let a = build_a_band(config, C64::new(t, 0.0), epsilon, p, chi)?;
            Ok((t, inverse_norm(&a.entries)))
        })
        .collect()
}

/// `l^1_1 -> l^inf` norm of the resolvent at band parameter `theta`, acting
/// on `(f, g)` and returning `(a, b)` over the window `[-K, K]`.
pub fn resolvent_operator_norm(
    config: &SupportConfig,
    p: u32,
    epsilon: f64,
    theta: f64,
    half_width: usize,
) -> Result<f64> {
    config.check_window(half_width)?;
    let a = build_a_band(config, C64::new(theta, 0.0), epsilon, p, None)?;
    let weight = NormSpec::new(1, 1.0)?;
    let zero = LatticeVector::filled(half_width, C64::new(0.0, 0.0));
    let mut best: f64 = 0.0;
    let k = half_width as i64;
    for site in -k..=k {
        let delta = LatticeVector::from_fn(half_width, |n| {
            if n == site {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        for forcing in [
            ForcingData::new(delta.clone(), zero.clone())?,
            ForcingData::new(zero.clone(), delta.clone())?,
        ] {
            let h = boundary_rhs(config, &a, &forcing)?;
            let c = solve_boundary_system(&a, &h)?;
            let fields = assemble_resolvent_fields(config, &a, &c, &forcing)?;
            let sup = fields
                .a
                .values()
                .iter()
                .chain(fields.b.values())
                .map(|x| x.norm())
                .fold(0.0, f64::max);
            best = best.max(sup / weight.weight(site));
        }
    }
    Ok(best)
}

/// `(theta, resolvent l^1_1 -> l^inf norm)` along the open upper band.
pub fn resolvent_band_slice(
    config: &SupportConfig,
    p: u32,
    epsilon: f64,
    n_theta: usize,
    half_width: usize,
) -> Result<Vec<(f64, f64)>> {
    band_thetas(n_theta)
        .into_iter()
        .map(|t| Ok((t, resolvent_operator_norm(config, p, epsilon, t, half_width)?)))
        .collect()
}

/// Interior local maximum, refined by a parabola through three samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalMax {
    pub location: C64,
    pub value: f64,
    pub index: usize,
}

fn parabola(ym: f64, y0: f64, yp: f64) -> (f64, f64) {
    let den = ym - 2.0 * y0 + yp;
    if den >= 0.0 || !den.is_finite() {
        return (0.0, y0);
    }
    let off = 0.5 * (ym - yp) / den;
    let off = off.clamp(-0.5, 0.5);
    (off, y0 - 0.25 * (ym - yp) * off)
}

/// Strict interior local maxima of `(x_k, y_k)` samples.
pub fn local_maxima_1d(samples: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for k in 1..samples.len().saturating_sub(1) {
        let (ym, y0, yp) = (samples[k - 1].1, samples[k].1, samples[k + 1].1);
        if y0.is_finite() && y0 > ym && y0 > yp {
            let h = samples[k + 1].0 - samples[k].0;
            let (off, v) = parabola(ym, y0, yp);
            out.push((samples[k].0 + off * h, v));
        }
    }
    out
}

/// Grid points strictly above all eight finite neighbours.
pub fn local_maxima_2d(grid: &OmegaGrid, values: &[f64]) -> Vec<LocalMax> {
    let (nr, ni) = (grid.n_re, grid.n_im);
    let at = |i: usize, j: usize| values[j * nr + i];
    let mut out = Vec::new();
    for j in 1..ni.saturating_sub(1) {
        for i in 1..nr.saturating_sub(1) {
            let v = at(i, j);
            if !v.is_finite() {
                continue;
            }
            let mut is_max = true;
            for dj in 0..3 {
                for di in 0..3 {
                    if (di, dj) == (1, 1) {
                        continue;
                    }
                    let w = at(i + di - 1, j + dj - 1);
                    if !(v > w) {
                        is_max = false;
                    }
                }
            }
            if !is_max {
                continue;
            }
            let (ox, vx) = parabola(at(i - 1, j), v, at(i + 1, j));
            let (oy, vy) = parabola(at(i, j - 1), v, at(i, j + 1));
            out.push(LocalMax {
                location: C64::new(grid.re(i) + ox * grid.step_re(), grid.im(j) + oy * grid.step_im()),
                value: vx.max(vy),
                index: j * nr + i,
            });
        }
    }
    out
}

/// Peak of `||A~(theta)^{-1}||_2` for the two-site configuration `{0, m}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteriorPeak {
    pub epsilon: f64,
    pub theta: f64,
    pub height: f64,
}

fn golden_min<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Locates the interior peak near `-pi/m + (p - 1) eps` with `V = nu(eps)`
/// on both sites: a coarse scan over `+- 0.3` followed by golden-section
/// minimization of the smallest singular value.
pub fn interior_peak(gap: u64, p: u32, epsilon: f64, coarse_points: usize) -> Result<InteriorPeak> {
    if gap < 2 {
        return Err(Error::Domain {
            what: "gap",
            value: gap as f64,
        });
    }
    if coarse_points < 16 {
        return Err(Error::InvalidGrid {
            reason: "peak search needs at least 16 coarse points",
        });
    }
    let config = SupportConfig::in_phase(&[0, gap as i64])?;
    let c = resonance_chi(gap, epsilon);
    let chi = [c, c];
    let sigma_min = |t: f64| -> f64 {
        match build_a_band(&config, C64::new(t, 0.0), epsilon, p, Some(&chi)) {
            Ok(a) => singular_extremes(&a.entries).0,
            Err(_) => f64::INFINITY,
        }
    };
    let center = -core::f64::consts::PI / gap as f64 + (p as f64 - 1.0) * epsilon;
    let half = 0.3f64.min(core::f64::consts::PI / (2.0 * gap as f64));
    let ts: Vec<f64> = (0..coarse_points)
        .map(|k| center - half + 2.0 * half * k as f64 / (coarse_points - 1) as f64)
        .collect();
    let vals: Vec<f64> = ts.iter().map(|&t| sigma_min(t)).collect();
    let (kmin, _) = vals
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (k, &v)| if v < acc.1 { (k, v) } else { acc });
    if kmin == 0 || kmin == coarse_points - 1 {
        return Err(Error::MaximumNotFound);
    }
    let t = golden_min(sigma_min, ts[kmin - 1], ts[kmin + 1], 1e-12);
    let s = sigma_min(t);
    if !(s > 0.0) {
        return Err(Error::MaximumNotFound);
    }
    Ok(InteriorPeak {
        epsilon,
        theta: t,
        height: 1.0 / s,
    })
}

/// Least-squares `log height = slope log eps + intercept`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    pub peaks: Vec<InteriorPeak>,
    pub slope: f64,
    pub intercept: f64,
}

pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            what: "fit ordinates",
            expected: xs.len(),
            got: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: xs.len(),
        });
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InsufficientData { needed: 2, got: 1 });
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Default coarse resolution of [`interior_peak`].
pub const PEAK_COARSE_POINTS: usize = 2001;

/// Slope of the interior peak height against `eps`; needs at least four
/// values spanning a decade.
pub fn epsilon_scaling_fit(gap: u64, p: u32, eps_list: &[f64]) -> Result<ScalingFit> {
    epsilon_scaling_fit_with(gap, p, eps_list, PEAK_COARSE_POINTS)
}

pub fn epsilon_scaling_fit_with(gap: u64, p: u32, eps_list: &[f64], coarse_points: usize) -> Result<ScalingFit> {
    check_eps_list(eps_list)?;
    let peaks = eps_list
        .iter()
        .map(|&e| interior_peak(gap, p, e, coarse_points))
        .collect::<Result<Vec<_>>>()?;
    fit_peaks(eps_list, peaks)
}

/// Assembles the fit from peaks computed elsewhere, in `eps_list` order.
pub fn fit_peaks(eps_list: &[f64], peaks: Vec<InteriorPeak>) -> Result<ScalingFit> {
    let hs: Vec<f64> = peaks.iter().map(|p| p.height).collect();
    let (slope, intercept) = log_log_slope(eps_list, &hs)?;
    Ok(ScalingFit {
        peaks,
        slope,
        intercept,
    })
}

/// At least four positive values spanning a decade.
pub fn check_eps_list(eps_list: &[f64]) -> Result<()> {
    if eps_list.len() < 4 {
        return Err(Error::InsufficientData {
            needed: 4,
            got: eps_list.len(),
        });
    }
    let lo = eps_list.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eps_list.iter().copied().fold(0.0, f64::max);
    if !(lo > 0.0) || hi < 10.0 * lo * (1.0 - 1e-12) {
        return Err(Error::InvalidGrid {
            reason: "eps values must be positive and span a decade",
        });
    }
    Ok(())
}

/// Source of the potential in the weighted operator.
#[derive(Debug, Clone, Copy)]
pub enum PotentialSource<'a> {
    /// Indicator of the support: `V_n = 1` on `U_+ u U_-`.
    Limiting(&'a SupportConfig),
    /// `V_n = phi_n^{2p}` from a continued profile.
    Profile(&'a SolitonProfile),
}

/// `L~` and `I~_2` on the window `[-K, K]` with Dirichlet ends.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedOperator {
    pub sigma: f64,
    pub half_width: usize,
    pub epsilon: f64,
    pub p: u32,
    pub l_tilde: RMatrix,
    pub i2_tilde: RMatrix,
    /// `kappa_n = (1 + n^2)^{sigma/2}`.
    pub kappa: Vec<f64>,
}

impl WeightedOperator {
    pub fn dim(&self) -> usize {
        self.l_tilde.nrows()
    }

    /// `L~ - Omega I~_2`.
    pub fn shifted(&self, omega: C64) -> CMatrix {
        let n = self.dim();
        CMatrix::from_fn(n, n, |i, j| {
            C64::new(self.l_tilde[(i, j)], 0.0) - omega * self.i2_tilde[(i, j)]
        })
    }

    /// `log10 ||(L~ - Omega I~_2)^{-1}||_2`.
    pub fn log_norm(&self, omega: C64) -> f64 {
        inverse_norm(&self.shifted(omega)).log10()
    }

    /// Eigenvalues of the pencil `(L~, I~_2)`, i.e. of the unweighted operator.
    pub fn pencil_eigenvalues(&self) -> Result<Vec<C64>> {
        let kinv: Vec<f64> = self.kappa.iter().map(|k| 1.0 / k).collect();
        let m = self.kappa.len();
        let l = RMatrix::from_fn(2 * m, 2 * m, |i, j| self.l_tilde[(i, j)] * kinv[i % m] * kinv[j % m]);
        let ev = l.complex_eigenvalues();
        if ev.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::EigenSolver);
        }
        Ok(ev.iter().copied().collect())
    }
}

/// Builds `L~ = [[-eps D~ + I~ - (1+p) V~, -p V~], [p V~, eps D~ - I~ + (1+p) V~]]`.
pub fn build_weighted_operator(
    source: PotentialSource<'_>,
    sigma: f64,
    half_width: usize,
    epsilon: f64,
    p: u32,
) -> Result<WeightedOperator> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::Domain {
            what: "sigma",
            value: sigma,
        });
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::Domain {
            what: "epsilon",
            value: epsilon,
        });
    }
    let m = 2 * half_width + 1;
    let k = half_width as i64;
    let pot: Vec<f64> = match source {
        PotentialSource::Limiting(config) => {
            config.check_window(half_width)?;
            (-k..=k).map(|n| if config.contains(n) { 1.0 } else { 0.0 }).collect()
        }
        PotentialSource::Profile(profile) => {
            if profile.half_width() != half_width {
                return Err(Error::LengthMismatch {
                    what: "profile window",
                    expected: m,
                    got: profile.values.len(),
                });
            }
            profile.potential()
        }
    };
    let kappa: Vec<f64> = (-k..=k)
        .map(|n| Float::powf(1.0 + (n * n) as f64, sigma / 2.0))
        .collect();
    let mut lap = RMatrix::zeros(m, m);
    for i in 0..m {
        lap[(i, i)] = -2.0 * kappa[i] * kappa[i];
        if i + 1 < m {
            lap[(i, i + 1)] = kappa[i] * kappa[i + 1];
            lap[(i + 1, i)] = kappa[i] * kappa[i + 1];
        }
    }
    let ident = RMatrix::from_fn(m, m, |i, j| if i == j { kappa[i] * kappa[i] } else { 0.0 });
    let v = RMatrix::from_fn(m, m, |i, j| if i == j { kappa[i] * kappa[i] * pot[i] } else { 0.0 });
    let pf = p as f64;
    let mut l = RMatrix::zeros(2 * m, 2 * m);
    l.view_mut((0, 0), (m, m))
        .copy_from(&(&lap * -epsilon + &ident - &v * (1.0 + pf)));
    l.view_mut((0, m), (m, m)).copy_from(&(&v * -pf));
    l.view_mut((m, 0), (m, m)).copy_from(&(&v * pf));
    l.view_mut((m, m), (m, m))
        .copy_from(&(&lap * epsilon - &ident + &v * (1.0 + pf)));
    let mut i2 = RMatrix::zeros(2 * m, 2 * m);
    i2.view_mut((0, 0), (m, m)).copy_from(&ident);
    i2.view_mut((m, m), (m, m)).copy_from(&ident);
    Ok(WeightedOperator {
        sigma,
        half_width,
        epsilon,
        p,
        l_tilde: l,
        i2_tilde: i2,
        kappa,
    })
}

/// Scan of the weighted resolvent with the pencil eigenvalues attached.
pub fn scan_weighted_resolvent(wop: &WeightedOperator, meta: ScanMeta, grid: &OmegaGrid) -> Result<ScanResult> {
    let meta = ScanMeta {
        sigma: Some(wop.sigma),
        half_width: Some(wop.half_width),
        ..meta
    };
    let mut res = scan_with(grid, meta, |om| Ok(wop.log_norm(om)))?;
    res.eigenvalues = Some(wop.pencil_eigenvalues()?);
    Ok(res)
}
