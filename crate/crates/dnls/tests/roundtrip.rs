use dnls::formats::{
    from_json, read_pairs_csv, to_json, write_pairs_csv, write_scan_csv, ComplexDto, ConfigDto, EigenDto, OverlayDto,
    ProfileDto, ResonanceDto, ScanTable, SCALING_HEADER,
};
use dnls_core::pseudospectra::{OmegaGrid, ScanMeta, ScanResult};
use dnls_core::SupportConfig;
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e300f64..1e300, -1.0f64..1.0, Just(0.0), Just(f64::MIN_POSITIVE)]
}

fn value() -> impl Strategy<Value = f64> {
    prop_oneof![9 => finite(), 1 => Just(f64::INFINITY)]
}

proptest! {
    #[test]
    fn scan_csv_round_trips(vals in prop::collection::vec(value(), 12), re in -2.0f64..0.0, im in -1.0f64..0.0) {
        let grid = OmegaGrid::new((re, re + 1.3), (im, im + 0.7), 4, 3).unwrap();
        let meta = ScanMeta::new(&SupportConfig::in_phase(&[0]).unwrap(), 1, 0.05);
        let scan = ScanResult::from_values(grid, vals.clone(), meta).unwrap();
        let mut a = Vec::new();
        write_scan_csv(&mut a, &scan).unwrap();
        let table = ScanTable::read(a.as_slice()).unwrap();
        for (row, v) in table.rows.iter().zip(&vals) {
            prop_assert!(row[2] == *v);
        }
        let mut b = Vec::new();
        table.write(&mut b).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn pairs_csv_round_trips(rows in prop::collection::vec((finite(), finite()), 0..20)) {
        let mut a = Vec::new();
        write_pairs_csv(&mut a, SCALING_HEADER, &rows).unwrap();
        prop_assert_eq!(read_pairs_csv(a.as_slice(), SCALING_HEADER).unwrap(), rows);
    }

    #[test]
    fn json_artifacts_round_trip(
        vals in prop::collection::vec(finite(), 1..30),
        z in prop::collection::vec((finite(), finite()), 0..10),
        plus in prop::collection::vec(-50i64..50, 0..4),
        eps in 0.0f64..0.2,
        p in 1u32..5,
        decay in prop::option::of(finite()),
    ) {
        let config = ConfigDto { plus, minus: vec![100] };
        let profile = ProfileDto {
            config: config.clone(), epsilon: eps, p, half_width: vals.len(), omega: 1.0,
            values: vals.clone(), residual: vals[0].abs(), decay_rate: decay,
        };
        prop_assert_eq!(from_json::<ProfileDto>(&to_json(&profile).unwrap()).unwrap(), profile);
        let overlay = OverlayDto {
            config, p, epsilon: eps, sigma: decay, half_width: Some(7),
            eigenvalues: z.iter().map(|&(re, im)| ComplexDto { re, im }).collect(),
        };
        prop_assert_eq!(from_json::<OverlayDto>(&to_json(&overlay).unwrap()).unwrap(), overlay);
        let res = ResonanceDto {
            theta_re: vals[0], theta_im: eps, sheet: "resonant".into(), gap: 2, p, epsilon: eps,
            det_abs: eps * 1e-12, iterations: 4,
        };
        prop_assert_eq!(from_json::<ResonanceDto>(&to_json(&res).unwrap()).unwrap(), res);
        let e = EigenDto { re: vals[0], im: eps, kind: "imaginary".into(), krein: Some("negative".into()), energy: decay };
        prop_assert_eq!(from_json::<EigenDto>(&to_json(&e).unwrap()).unwrap(), e);
    }
}
