//! JSON artifacts and CSV tables written by the `dnls` commands.
//!
//! CSV floats use `{:.16e}` (17 significant digits) so that a parsed file
//! re-serializes to identical bytes; singular points are the token `inf`.

use std::io::{Read, Write};

use dnls_core::linearization::{EigenKind, KreinSign, SpectralReport};
use dnls_core::pseudospectra::{OmegaGrid, ScanResult};
use dnls_core::resolvent::{ForcingData, ResolventFields};
use dnls_core::singularity::{ResonanceRoot, Sheet};
use dnls_core::soliton::SolitonProfile;
use dnls_core::{LatticeVector, SupportConfig, C64};
use serde::{Deserialize, Serialize};

use crate::Error;

pub const SCAN_HEADER: [&str; 3] = ["re_omega", "im_omega", "log10_norm"];
pub const BAND_SLICE_HEADER: [&str; 2] = ["theta", "norm"];
pub const SCALING_HEADER: [&str; 2] = ["eps", "max_norm"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigDto {
    pub plus: Vec<i64>,
    pub minus: Vec<i64>,
}

impl From<&SupportConfig> for ConfigDto {
    fn from(c: &SupportConfig) -> Self {
        Self {
            plus: c.plus().to_vec(),
            minus: c.minus().to_vec(),
        }
    }
}

impl TryFrom<&ConfigDto> for SupportConfig {
    type Error = dnls_core::Error;

    fn try_from(c: &ConfigDto) -> dnls_core::Result<Self> {
        SupportConfig::new(c.plus.clone(), c.minus.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexDto {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for ComplexDto {
    fn from(z: C64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

impl From<ComplexDto> for C64 {
    fn from(z: ComplexDto) -> Self {
        C64::new(z.re, z.im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileDto {
    pub config: ConfigDto,
    pub epsilon: f64,
    pub p: u32,
    #[serde(rename = "K")]
    pub half_width: usize,
    pub omega: f64,
    pub values: Vec<f64>,
    pub residual: f64,
    pub decay_rate: Option<f64>,
}

impl From<&SolitonProfile> for ProfileDto {
    fn from(s: &SolitonProfile) -> Self {
        Self {
            config: (&s.config).into(),
            epsilon: s.epsilon,
            p: s.p,
            half_width: s.half_width(),
            omega: s.omega,
            values: s.values.values().to_vec(),
            residual: s.residual_norm,
            decay_rate: s.decay_rate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenDto {
    pub re: f64,
    pub im: f64,
    pub kind: String,
    /// `positive`, `negative`, `ambiguous`, or absent when not defined.
    pub krein: Option<String>,
    pub energy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountsDto {
    pub n_sites: usize,
    pub n0: usize,
    pub n_l_plus: usize,
    pub n_l_minus: usize,
    pub n_r_plus: usize,
    pub n_r_minus: usize,
    pub n_i_minus: usize,
    pub n_c: usize,
    pub p0: usize,
    pub small: Vec<ComplexDto>,
    pub delta: f64,
    pub verified: bool,
    pub mismatches: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumDto {
    pub config: ConfigDto,
    pub epsilon: f64,
    pub p: u32,
    #[serde(rename = "K")]
    pub half_width: usize,
    pub eigenvalues: Vec<EigenDto>,
    pub counts: CountsDto,
}

fn kind_name(k: EigenKind) -> &'static str {
    match k {
        EigenKind::Zero => "zero",
        EigenKind::Real => "real",
        EigenKind::Imaginary => "imaginary",
        EigenKind::Complex => "complex",
    }
}

fn krein_name(k: KreinSign) -> &'static str {
    match k {
        KreinSign::Positive => "positive",
        KreinSign::Negative => "negative",
        KreinSign::Ambiguous => "ambiguous",
    }
}

impl SpectrumDto {
    pub fn new(config: &SupportConfig, p: u32, report: &SpectralReport) -> Self {
        let verdict = dnls_core::linearization::verify_counts(report);
        let c = report.counts;
        Self {
            config: config.into(),
            epsilon: report.epsilon,
            p,
            half_width: report.half_width,
            eigenvalues: report
                .eigenvalues
                .iter()
                .map(|e| EigenDto {
                    re: e.lambda.re,
                    im: e.lambda.im,
                    kind: kind_name(e.kind).to_string(),
                    krein: e.krein.map(|k| krein_name(k).to_string()),
                    energy: e.energy,
                })
                .collect(),
            counts: CountsDto {
                n_sites: report.n_sites,
                n0: report.n0,
                n_l_plus: c.n_l_plus,
                n_l_minus: c.n_l_minus,
                n_r_plus: c.n_r_plus,
                n_r_minus: c.n_r_minus,
                n_i_minus: c.n_i_minus,
                n_c: c.n_c,
                p0: c.p0,
                small: report.small_eigs.iter().map(|&z| z.into()).collect(),
                delta: report.delta,
                verified: verdict.passed,
                mismatches: verdict
                    .mismatches
                    .iter()
                    .map(|m| format!("{}: expected {}, found {}", m.name, m.expected, m.found))
                    .collect(),
            },
        }
    }
}

/// Forcing `(f, g)` on `[-K, K]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForcingDto {
    #[serde(rename = "K")]
    pub half_width: usize,
    pub f: Vec<ComplexDto>,
    pub g: Vec<ComplexDto>,
}

impl ForcingDto {
    pub fn to_forcing(&self) -> Result<ForcingData, Error> {
        let conv = |v: &[ComplexDto]| -> dnls_core::Result<LatticeVector<C64>> {
            LatticeVector::from_values(self.half_width, v.iter().map(|&z| z.into()).collect())
        };
        Ok(ForcingData::new(conv(&self.f)?, conv(&self.g)?)?)
    }
}

impl From<&ForcingData> for ForcingDto {
    fn from(d: &ForcingData) -> Self {
        Self {
            half_width: d.f.half_width(),
            f: d.f.values().iter().map(|&z| z.into()).collect(),
            g: d.g.values().iter().map(|&z| z.into()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldsDto {
    #[serde(rename = "K")]
    pub half_width: usize,
    pub a: Vec<ComplexDto>,
    pub b: Vec<ComplexDto>,
    /// Largest pointwise residual of the resolvent equations.
    pub residual: f64,
}

impl FieldsDto {
    pub fn new(fields: &ResolventFields, residual: f64) -> Self {
        Self {
            half_width: fields.a.half_width(),
            a: fields.a.values().iter().map(|&z| z.into()).collect(),
            b: fields.b.values().iter().map(|&z| z.into()).collect(),
            residual,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceDto {
    pub theta_re: f64,
    pub theta_im: f64,
    /// `physical` (Im theta <= 0) or `resonant` (Im theta > 0).
    pub sheet: String,
    pub gap: u64,
    pub p: u32,
    pub epsilon: f64,
    pub det_abs: f64,
    pub iterations: usize,
}

impl From<&ResonanceRoot> for ResonanceDto {
    fn from(r: &ResonanceRoot) -> Self {
        Self {
            theta_re: r.theta.re,
            theta_im: r.theta.im,
            sheet: match r.sheet {
                Sheet::Physical => "physical",
                Sheet::ResonantPole => "resonant",
            }
            .to_string(),
            gap: r.gap,
            p: r.p,
            epsilon: r.epsilon,
            det_abs: r.det_abs,
            iterations: r.iterations,
        }
    }
}

/// Sidecar of a scan: what was scanned plus the eigenvalue dots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlayDto {
    pub config: ConfigDto,
    pub p: u32,
    pub epsilon: f64,
    pub sigma: Option<f64>,
    #[serde(rename = "K")]
    pub half_width: Option<usize>,
    pub eigenvalues: Vec<ComplexDto>,
}

impl OverlayDto {
    pub fn from_scan(scan: &ScanResult) -> Self {
        let m = &scan.meta;
        Self {
            config: ConfigDto {
                plus: m.plus.clone(),
                minus: m.minus.clone(),
            },
            p: m.p,
            epsilon: m.epsilon,
            sigma: m.sigma,
            half_width: m.half_width,
            eigenvalues: scan.eigenvalues.iter().flatten().map(|&z| z.into()).collect(),
        }
    }
}

pub fn to_json<T: Serialize>(x: &T) -> Result<String, Error> {
    let mut s = serde_json::to_string_pretty(x)?;
    s.push('\n');
    Ok(s)
}

pub fn from_json<T: for<'de> Deserialize<'de>>(s: &str) -> Result<T, Error> {
    Ok(serde_json::from_str(s)?)
}

/// `{:.16e}` with `inf` / `-inf` / `nan` tokens.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn parse_float(s: &str, row: usize) -> Result<f64, Error> {
    s.trim().parse::<f64>().map_err(|_| Error::Format {
        row,
        message: format!("not a number: {s:?}"),
    })
}

/// Writes rows of floats under a fixed header.
pub fn write_table<W: Write>(out: W, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<(), Error> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(header)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::Format {
                row: 0,
                message: format!("row has {} fields, header has {}", row.len(), header.len()),
            });
        }
        w.write_record(row.iter().map(|&x| fmt_float(x)))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a table written by [`write_table`]; the header must match exactly.
pub fn read_table<R: Read>(input: R, header: &[&str]) -> Result<Vec<Vec<f64>>, Error> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let got: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if got != header {
        return Err(Error::Format {
            row: 1,
            message: format!("header {got:?}, expected {header:?}"),
        });
    }
    let mut rows = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = k + 2;
        if rec.len() != header.len() {
            return Err(Error::Format {
                row,
                message: format!("{} fields", rec.len()),
            });
        }
        rows.push(rec.iter().map(|s| parse_float(s, row)).collect::<Result<Vec<_>, _>>()?);
    }
    Ok(rows)
}

pub fn write_scan_csv<W: Write>(out: W, scan: &ScanResult) -> Result<(), Error> {
    let g = &scan.grid;
    write_table(
        out,
        &SCAN_HEADER,
        scan.values.iter().enumerate().map(|(k, &v)| {
            let z = g.point(k);
            vec![z.re, z.im, v]
        }),
    )
}

/// A parsed scan CSV: points in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanTable {
    pub rows: Vec<[f64; 3]>,
}

impl ScanTable {
    pub fn read<R: Read>(input: R) -> Result<Self, Error> {
        let rows = read_table(input, &SCAN_HEADER)?;
        Ok(Self {
            rows: rows.into_iter().map(|r| [r[0], r[1], r[2]]).collect(),
        })
    }

    pub fn write<W: Write>(&self, out: W) -> Result<(), Error> {
        write_table(out, &SCAN_HEADER, self.rows.iter().map(|r| r.to_vec()))
    }

    /// Recovers the grid, assuming the row-major layout.
    pub fn grid(&self) -> Result<OmegaGrid, Error> {
        let bad = |m: &str| Error::Format {
            row: 0,
            message: m.to_string(),
        };
        let first = self.rows.first().ok_or_else(|| bad("empty scan"))?;
        let n_re = self.rows.iter().take_while(|r| r[1] == first[1]).count();
        if n_re < 2 || self.rows.len() % n_re != 0 {
            return Err(bad("rows do not form a grid"));
        }
        let n_im = self.rows.len() / n_re;
        let last = self.rows[self.rows.len() - 1];
        Ok(OmegaGrid::new((first[0], last[0]), (first[1], last[1]), n_re, n_im)?)
    }
}

pub fn write_pairs_csv<W: Write>(out: W, header: [&str; 2], pairs: &[(f64, f64)]) -> Result<(), Error> {
    write_table(out, &header, pairs.iter().map(|&(x, y)| vec![x, y]))
}

pub fn read_pairs_csv<R: Read>(input: R, header: [&str; 2]) -> Result<Vec<(f64, f64)>, Error> {
    Ok(read_table(input, &header)?.into_iter().map(|r| (r[0], r[1])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use dnls_core::pseudospectra::ScanMeta;

    fn scan_2x2() -> ScanResult {
        let grid = OmegaGrid::new((0.0, 1.0), (0.0, 1.0), 2, 2).unwrap();
        let meta = ScanMeta::new(&SupportConfig::in_phase(&[0]).unwrap(), 1, 0.05);
        ScanResult::from_values(grid, vec![0.0, 1.0, 2.0, f64::INFINITY], meta).unwrap()
    }

    #[test]
    fn scan_rows_are_row_major() {
        let mut buf = Vec::new();
        write_scan_csv(&mut buf, &scan_2x2()).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[0], "re_omega,im_omega,log10_norm");
        assert_eq!(
            lines[1],
            "0.0000000000000000e0,0.0000000000000000e0,0.0000000000000000e0"
        );
        assert_eq!(
            lines[2],
            "1.0000000000000000e0,0.0000000000000000e0,1.0000000000000000e0"
        );
        assert!(lines[3].starts_with("0.0000000000000000e0,1.0000000000000000e0,2.0"));
        assert!(lines[4].ends_with(",inf"));
    }

    #[test]
    fn reserialization_is_byte_identical() {
        let mut buf = Vec::new();
        let grid = OmegaGrid::new((-1.4, 1.4), (-0.4, 0.4), 7, 3).unwrap();
        let meta = ScanMeta::new(&SupportConfig::in_phase(&[0]).unwrap(), 1, 0.05);
        let vals: Vec<f64> = (0..21)
            .map(|k| {
                if k == 10 {
                    f64::INFINITY
                } else {
                    (k as f64 * 0.37).sin() / 3.0
                }
            })
            .collect();
        write_scan_csv(&mut buf, &ScanResult::from_values(grid, vals, meta).unwrap()).unwrap();
        let table = ScanTable::read(buf.as_slice()).unwrap();
        let mut again = Vec::new();
        table.write(&mut again).unwrap();
        assert_eq!(buf, again);
        assert_eq!(table.grid().unwrap().n_re, 7);
        assert!(table.rows[10][2].is_infinite());
    }

    #[test]
    fn header_mismatch_reports_row() {
        let err = read_pairs_csv("eps,norm\n1,2\n".as_bytes(), SCALING_HEADER).unwrap_err();
        assert!(matches!(err, Error::Format { row: 1, .. }));
        let err = read_pairs_csv("eps,max_norm\n1,x\n".as_bytes(), SCALING_HEADER).unwrap_err();
        assert!(matches!(err, Error::Format { row: 2, .. }));
    }

    #[test]
    fn float_tokens() {
        assert_eq!(fmt_float(f64::INFINITY), "inf");
        assert_eq!(fmt_float(-0.1), "-1.0000000000000001e-1");
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 1e300, f64::MIN_POSITIVE] {
            assert_eq!(fmt_float(x).parse::<f64>().unwrap(), x);
        }
    }
}
