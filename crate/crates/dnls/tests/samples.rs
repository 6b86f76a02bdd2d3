//! The committed sample artifacts conform to the CSV/JSON schemas.

use std::fs::File;
use std::path::PathBuf;

use dnls::formats::{from_json, read_pairs_csv, OverlayDto, ScanTable, BAND_SLICE_HEADER, SCALING_HEADER};

fn sample(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../samples")
        .join(name)
}

#[test]
fn scans_parse_as_grids() {
    for name in [
        "scan_A_gap1.csv",
        "scan_A_gap2.csv",
        "scan_A_gap3.csv",
        "scan_resolvent.csv",
    ] {
        let t = ScanTable::read(File::open(sample(name)).unwrap()).unwrap();
        let g = t.grid().unwrap();
        assert_eq!((g.n_re, g.n_im), (141, 41), "{name}");
    }
    let ov: OverlayDto = from_json(&std::fs::read_to_string(sample("scan_resolvent.csv.eigs.json")).unwrap()).unwrap();
    assert_eq!(ov.eigenvalues.len(), 2 * 81);
}

#[test]
fn slices_parse() {
    assert_eq!(
        read_pairs_csv(File::open(sample("band_slice_gap2.csv")).unwrap(), BAND_SLICE_HEADER)
            .unwrap()
            .len(),
        255
    );
    let s = read_pairs_csv(File::open(sample("scaling_gap2.csv")).unwrap(), SCALING_HEADER).unwrap();
    assert_eq!(s.len(), 4);
}
