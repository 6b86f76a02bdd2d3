//! Support configurations, truncated lattice sequences and weighted norms.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::ComplexField;

use crate::error::{Error, Result};

/// Limiting configuration of a multi-site soliton: sites carrying `+1` and `-1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportConfig {
    plus: Vec<i64>,
    minus: Vec<i64>,
    sites: Vec<i64>,
    signs: Vec<i8>,
    gaps: Vec<u64>,
}

impl SupportConfig {
    /// Builds a configuration. The inputs are sorted; duplicates and overlaps are rejected.
    pub fn new(mut plus: Vec<i64>, mut minus: Vec<i64>) -> Result<Self> {
        plus.sort_unstable();
        minus.sort_unstable();
        for list in [&plus, &minus] {
            for w in list.windows(2) {
                if w[0] == w[1] {
                    return Err(Error::DuplicateSite { site: w[0] });
                }
            }
        }
        let mut tagged: Vec<(i64, i8)> = plus
            .iter()
            .map(|&s| (s, 1))
            .chain(minus.iter().map(|&s| (s, -1)))
            .collect();
        if tagged.is_empty() {
            return Err(Error::EmptyConfig);
        }
        tagged.sort_unstable();
        for w in tagged.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::DuplicateSite { site: w[0].0 });
            }
        }
        let sites: Vec<i64> = tagged.iter().map(|t| t.0).collect();
        let signs = tagged.iter().map(|t| t.1).collect();
        let (gaps, _) = gaps_of(&sites)?;
        Ok(Self {
            plus,
            minus,
            sites,
            signs,
            gaps,
        })
    }

    /// All sites in `U+`.
    pub fn in_phase(sites: &[i64]) -> Result<Self> {
        Self::new(sites.to_vec(), Vec::new())
    }

    pub fn plus(&self) -> &[i64] {
        &self.plus
    }

    pub fn minus(&self) -> &[i64] {
        &self.minus
    }

    /// Ordered union of `U+` and `U-`.
    pub fn sites(&self) -> &[i64] {
        &self.sites
    }

    /// Limiting sign (`+1` or `-1`) of each ordered site.
    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    /// Distances between consecutive ordered sites.
    pub fn gaps(&self) -> &[u64] {
        &self.gaps
    }

    /// Number of excited sites `N`.
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn is_simply_connected(&self) -> bool {
        self.gaps.iter().all(|&m| m == 1)
    }

    pub fn contains(&self, site: i64) -> bool {
        self.sites.binary_search(&site).is_ok()
    }

    /// Position of `site` in the ordered union, if excited.
    pub fn position(&self, site: i64) -> Option<usize> {
        self.sites.binary_search(&site).ok()
    }

    /// Number of sign changes between consecutive ordered sites (`n0`).
    pub fn sign_changes(&self) -> usize {
        self.signs.windows(2).filter(|w| w[0] != w[1]).count()
    }

    pub fn max_abs_site(&self) -> u64 {
        self.sites.iter().map(|s| s.unsigned_abs()).max().unwrap_or(0)
    }

    /// Default truncation half-width `50 + max |site|`.
    pub fn default_half_width(&self) -> usize {
        50 + self.max_abs_site() as usize
    }

    /// Fails unless every site lies in `[-K, K]`.
    pub fn check_window(&self, half_width: usize) -> Result<()> {
        match self.sites.iter().find(|s| s.unsigned_abs() > half_width as u64) {
            Some(&site) => Err(Error::SiteOutsideWindow { site, half_width }),
            None => Ok(()),
        }
    }
}

/// Gaps between consecutive sites and whether all of them equal one.
pub fn gaps_of(sites: &[i64]) -> Result<(Vec<u64>, bool)> {
    if sites.is_empty() {
        return Err(Error::EmptyConfig);
    }
    let mut gaps = Vec::with_capacity(sites.len() - 1);
    for (j, w) in sites.windows(2).enumerate() {
        if w[1] == w[0] {
            return Err(Error::DuplicateSite { site: w[0] });
        }
        if w[1] < w[0] {
            return Err(Error::UnsortedSites { position: j + 1 });
        }
        gaps.push((w[1] - w[0]) as u64);
    }
    let simple = gaps.iter().all(|&m| m == 1);
    Ok((gaps, simple))
}

/// Sequence on the window `n = -K, ..., K`, stored with `n = -K + index`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeVector<T> {
    half_width: usize,
    values: Vec<T>,
}

impl<T: Copy> LatticeVector<T> {
    pub fn from_values(half_width: usize, values: Vec<T>) -> Result<Self> {
        let expected = 2 * half_width + 1;
        if values.len() != expected {
            return Err(Error::LengthMismatch {
                what: "lattice vector",
                expected,
                got: values.len(),
            });
        }
        Ok(Self { half_width, values })
    }

    pub fn filled(half_width: usize, value: T) -> Self {
        Self {
            half_width,
            values: vec![value; 2 * half_width + 1],
        }
    }

    pub fn from_fn(half_width: usize, mut f: impl FnMut(i64) -> T) -> Self {
        let k = half_width as i64;
        Self {
            half_width,
            values: (-k..=k).map(&mut f).collect(),
        }
    }

    /// Truncation half-width `K`.
    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Lattice site of an array index.
    pub fn site(&self, index: usize) -> i64 {
        index as i64 - self.half_width as i64
    }

    /// Array index of a lattice site, if inside the window.
    pub fn index_of(&self, site: i64) -> Option<usize> {
        let idx = site + self.half_width as i64;
        (idx >= 0 && (idx as usize) < self.values.len()).then_some(idx as usize)
    }

    pub fn get(&self, site: i64) -> Option<T> {
        self.index_of(site).map(|i| self.values[i])
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    /// `(site, value)` pairs in increasing site order.
    pub fn iter_sites(&self) -> impl Iterator<Item = (i64, T)> + '_ {
        let k = self.half_width as i64;
        self.values.iter().enumerate().map(move |(i, &v)| (i as i64 - k, v))
    }

    pub fn map<U: Copy>(&self, f: impl FnMut(T) -> U) -> LatticeVector<U> {
        LatticeVector {
            half_width: self.half_width,
            values: self.values.iter().copied().map(f).collect(),
        }
    }
}

/// Parameters `(p, s)` of the space `l^p_s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormSpec {
    p: u32,
    s: f64,
}

impl NormSpec {
    pub fn new(p: u32, s: f64) -> Result<Self> {
        if p == 0 {
            return Err(Error::Domain {
                what: "norm exponent p",
                value: 0.0,
            });
        }
        if !s.is_finite() {
            return Err(Error::Domain {
                what: "weight exponent s",
                value: s,
            });
        }
        Ok(Self { p, s })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// Weight `(1 + n^2)^{s/2}` at site `n`.
    pub fn weight(&self, site: i64) -> f64 {
        let n = site as f64;
        num_traits::Float::powf(1.0 + n * n, self.s / 2.0)
    }
}

/// `(sum_n (1+n^2)^{sp/2} |v_n|^p)^{1/p}` over the window.
pub fn weighted_norm<T>(v: &LatticeVector<T>, spec: NormSpec) -> f64
where
    T: ComplexField<RealField = f64> + Copy,
{
    let p = spec.p as i32;
    let sum: f64 = v
        .iter_sites()
        .map(|(n, x)| {
            let w = spec.weight(n) * x.modulus();
            num_traits::Float::powi(w, p)
        })
        .sum();
    if p == 1 {
        sum
    } else {
        num_traits::Float::powf(sum, 1.0 / p as f64)
    }
}

/// Limiting profile: `+1` on `U+`, `-1` on `U-`, zero elsewhere.
pub fn limiting_profile(config: &SupportConfig, half_width: usize) -> Result<LatticeVector<f64>> {
    config.check_window(half_width)?;
    let mut v = LatticeVector::filled(half_width, 0.0);
    for (&site, &sign) in config.sites().iter().zip(config.signs()) {
        let i = v.index_of(site).ok_or(Error::SiteOutsideWindow { site, half_width })?;
        v.values_mut()[i] = sign as f64;
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;
    use proptest::prelude::*;

    #[test]
    fn norm_of_unit_vectors() {
        let d0 = LatticeVector::from_fn(5, |n| if n == 0 { 1.0 } else { 0.0 });
        assert_eq!(weighted_norm(&d0, NormSpec::new(2, 0.0).unwrap()), 1.0);
        let d2 = LatticeVector::from_fn(5, |n| if n == 2 { 1.0 } else { 0.0 });
        let v = weighted_norm(&d2, NormSpec::new(2, 1.0).unwrap());
        assert!((v - 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn geometric_l1_norm() {
        let k = 30;
        let v = LatticeVector::from_fn(k, |n| (-(n.abs() as f64)).exp());
        let e = (-1f64).exp();
        // closed form minus the two truncated tails
        let tail = 2.0 * e.powi(k as i32 + 1) / (1.0 - e);
        let exact = 1.0 + 2.0 * e / (1.0 - e) - tail;
        let got = weighted_norm(&v, NormSpec::new(1, 0.0).unwrap());
        assert!((got - exact).abs() < 1e-13);
        assert!((got - (1.0 + 2.0 * e / (1.0 - e))).abs() < 1e-12);
    }

    #[test]
    fn empty_window_norm_is_zero_like() {
        let v: LatticeVector<f64> = LatticeVector::filled(0, 0.0);
        assert_eq!(weighted_norm(&v, NormSpec::new(3, 2.0).unwrap()), 0.0);
    }

    #[test]
    fn limiting_profiles() {
        let c = SupportConfig::new(vec![0], vec![]).unwrap();
        let v = limiting_profile(&c, 5).unwrap();
        assert_eq!(v.get(0), Some(1.0));
        assert_eq!(v.values().iter().filter(|&&x| x != 0.0).count(), 1);

        let c = SupportConfig::new(vec![0, 1], vec![2]).unwrap();
        let v = limiting_profile(&c, 10).unwrap();
        assert_eq!(&v.values()[9..14], &[0.0, 1.0, 1.0, -1.0, 0.0]);

        let c = SupportConfig::new(vec![], vec![-3]).unwrap();
        let v = limiting_profile(&c, 5).unwrap();
        assert_eq!(v.get(-3), Some(-1.0));
        assert_eq!(v.index_of(-3), Some(2));

        assert!(matches!(
            limiting_profile(&c, 2),
            Err(Error::SiteOutsideWindow { site: -3, .. })
        ));
    }

    #[test]
    fn gap_examples() {
        assert_eq!(gaps_of(&[0, 1, 2]).unwrap(), (vec![1, 1], true));
        assert_eq!(gaps_of(&[0, 2]).unwrap(), (vec![2], false));
        assert_eq!(gaps_of(&[-1, 0, 4]).unwrap(), (vec![1, 4], false));
        assert_eq!(gaps_of(&[3]).unwrap(), (vec![], true));
        assert!(matches!(gaps_of(&[0, 0]), Err(Error::DuplicateSite { .. })));
        assert!(matches!(gaps_of(&[1, 0]), Err(Error::UnsortedSites { .. })));
        assert!(gaps_of(&[]).is_err());
    }

    #[test]
    fn config_validation() {
        assert_eq!(SupportConfig::new(vec![], vec![]), Err(Error::EmptyConfig));
        assert_eq!(
            SupportConfig::new(vec![0, 1], vec![1]),
            Err(Error::DuplicateSite { site: 1 })
        );
        let c = SupportConfig::new(vec![2, 0], vec![1]).unwrap();
        assert_eq!(c.sites(), &[0, 1, 2]);
        assert_eq!(c.signs(), &[1, -1, 1]);
        assert_eq!(c.sign_changes(), 2);
        assert!(c.is_simply_connected());
        assert_eq!(c.default_half_width(), 52);
    }

    proptest! {
        #[test]
        fn norm_is_homogeneous(
            vals in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 21),
            cr in -3.0f64..3.0, ci in -3.0f64..3.0,
            p in 1u32..4, s in -1.0f64..2.0,
        ) {
            let v = LatticeVector::from_values(10, vals.iter().map(|&(a, b)| C64::new(a, b)).collect()).unwrap();
            let c = C64::new(cr, ci);
            let spec = NormSpec::new(p, s).unwrap();
            let lhs = weighted_norm(&v.map(|x| x * c), spec);
            let rhs = c.norm() * weighted_norm(&v, spec);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs));
        }

        #[test]
        fn profile_squared_is_indicator(plus in prop::collection::btree_set(-8i64..8, 0..4),
                                        minus in prop::collection::btree_set(-8i64..8, 0..4)) {
            let minus: Vec<i64> = minus.difference(&plus).copied().collect();
            let plus: Vec<i64> = plus.into_iter().collect();
            prop_assume!(!plus.is_empty() || !minus.is_empty());
            let c = SupportConfig::new(plus, minus).unwrap();
            let v = limiting_profile(&c, 10).unwrap();
            for (n, x) in v.iter_sites() {
                prop_assert_eq!(x * x, if c.contains(n) { 1.0 } else { 0.0 });
            }
        }

        #[test]
        fn gaps_reconstruct_sites(set in prop::collection::btree_set(-100i64..100, 1..10)) {
            let sites: Vec<i64> = set.into_iter().collect();
            let (gaps, simple) = gaps_of(&sites).unwrap();
            let mut rebuilt = vec![sites[0]];
            for g in &gaps {
                rebuilt.push(rebuilt.last().unwrap() + *g as i64);
            }
            prop_assert_eq!(&rebuilt, &sites);
            prop_assert_eq!(simple, gaps.iter().all(|&g| g == 1));
        }
    }
}
