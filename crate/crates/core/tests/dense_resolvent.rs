//! The boundary reduction against a dense solve of the lattice equations on a
//! wide window with Dirichlet ends.

use dnls_core::resolvent::{resolvent_fields, ForcingData};
use dnls_core::{CMatrix, CVector, LatticeVector, SupportConfig, C64};

fn dense_fields(
    config: &SupportConfig,
    omega: C64,
    eps: f64,
    p: u32,
    chi: &[f64],
    forcing: &ForcingData,
    big: usize,
) -> (Vec<C64>, Vec<C64>) {
    let m = 2 * big + 1;
    let k = big as i64;
    let pf = p as f64;
    let mut a = CMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        let site = i as i64 - k;
        let v = config.position(site).map_or(0.0, |j| 1.0 + eps * chi[j]);
        for (blk, sgn) in [(0, -1.0), (m, 1.0)] {
            a[(blk + i, blk + i)] = C64::new(2.0 * eps + 1.0 - (1.0 + pf) * v, 0.0) + omega * sgn;
            if i + 1 < m {
                a[(blk + i, blk + i + 1)] = C64::new(-eps, 0.0);
                a[(blk + i + 1, blk + i)] = C64::new(-eps, 0.0);
            }
        }
        a[(i, m + i)] = C64::new(-pf * v, 0.0);
        a[(m + i, i)] = C64::new(-pf * v, 0.0);
    }
    let kf = forcing.half_width() as i64;
    let rhs = CVector::from_fn(2 * m, |r, _| {
        let (vec, i) = if r < m { (&forcing.f, r) } else { (&forcing.g, r - m) };
        let site = i as i64 - k;
        if site.abs() <= kf {
            vec.get(site).unwrap()
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let x = a.lu().solve(&rhs).unwrap();
    let pick = |off: usize| (-kf..=kf).map(|n| x[off + (n + k) as usize]).collect();
    (pick(0), pick(m))
}

#[test]
fn reduction_matches_dense_solve() {
    let cases = [
        (
            SupportConfig::new(vec![0, 1], vec![]).unwrap(),
            vec![1.0, 1.0],
            C64::new(0.4, 0.3),
            0.05,
            1,
        ),
        (
            SupportConfig::new(vec![-1, 0], vec![2]).unwrap(),
            vec![1.0, -0.5, 2.0],
            C64::new(-1.1, 0.2),
            0.04,
            2,
        ),
        (
            SupportConfig::new(vec![0, 3], vec![]).unwrap(),
            vec![2.0, 2.0],
            C64::new(1.1, 0.25),
            0.05,
            2,
        ),
    ];
    let kf = 20usize;
    for (conf, chi, om, eps, p) in cases {
        let f = LatticeVector::from_fn(kf, |n| {
            if n.abs() <= 2 {
                C64::new(1.0 / (1 + n.abs()) as f64, 0.3 * n as f64)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let g = LatticeVector::from_fn(kf, |n| {
            if n == 1 {
                C64::new(0.0, -1.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let forcing = ForcingData::new(f, g).unwrap();
        let fields = resolvent_fields(&conf, om, eps, p, Some(&chi), &forcing).unwrap();
        let (da, db) = dense_fields(&conf, om, eps, p, &chi, &forcing, 150);
        let err = fields
            .a
            .values()
            .iter()
            .zip(&da)
            .chain(fields.b.values().iter().zip(&db))
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-9, "{om}: {err}");
    }
}
