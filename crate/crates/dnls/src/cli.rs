//! `dnls` command line. Exit status: 0 on success, 1 on a computation or I/O
//! error (or a failed verification), 2 on a usage error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use dnls_core::linearization::{build_operators, stability_spectrum};
use dnls_core::pseudospectra::{build_weighted_operator, OmegaGrid, PotentialSource, PEAK_COARSE_POINTS};
use dnls_core::resolvent::{resolvent_equation_residual, resolvent_fields};
use dnls_core::singularity::{det_zero_count, resonance_expansion, resonance_root, CONTOUR_POINTS};
use dnls_core::soliton::continue_soliton;
use dnls_core::{SupportConfig, C64};

use crate::formats::{
    from_json, to_json, write_pairs_csv, write_scan_csv, FieldsDto, ForcingDto, OverlayDto, ProfileDto, ResonanceDto,
    SpectrumDto, BAND_SLICE_HEADER, SCALING_HEADER,
};
use crate::{parallel, suites, Error};

#[derive(Debug, Parser)]
#[command(name = "dnls", version, about = "Discrete solitons near the anti-continuum limit")]
pub struct Cli {
    /// Worker threads for grid scans (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed for randomized verification suites.
    #[arg(long, global = true, default_value_t = suites::DEFAULT_SEED)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct ConfigArgs {
    /// Sites with phase +1, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0")]
    pub plus: Vec<i64>,
    /// Sites with phase -1, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub minus: Vec<i64>,
    /// Nonlinearity power.
    #[arg(long, default_value_t = 1)]
    pub p: u32,
    /// Coupling constant.
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
}

impl ConfigArgs {
    fn config(&self) -> Result<SupportConfig, Error> {
        Ok(SupportConfig::new(self.plus.clone(), self.minus.clone())?)
    }
}

#[derive(Debug, Args, Clone)]
pub struct GridArgs {
    #[arg(long, default_value_t = -1.4, allow_hyphen_values = true)]
    pub re_min: f64,
    #[arg(long, default_value_t = 1.4, allow_hyphen_values = true)]
    pub re_max: f64,
    #[arg(long, default_value_t = -0.4, allow_hyphen_values = true)]
    pub im_min: f64,
    #[arg(long, default_value_t = 0.4, allow_hyphen_values = true)]
    pub im_max: f64,
    #[arg(long, default_value_t = 281)]
    pub n_re: usize,
    #[arg(long, default_value_t = 81)]
    pub n_im: usize,
}

impl GridArgs {
    fn grid(&self) -> Result<OmegaGrid, Error> {
        OmegaGrid::new(
            (self.re_min, self.re_max),
            (self.im_min, self.im_max),
            self.n_re,
            self.n_im,
        )
        .map_err(|e| Error::Usage(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Potential {
    /// Indicator of the support.
    Limiting,
    /// `phi^{2p}` of the continued soliton.
    Profile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Measure {
    /// `||A(theta)^{-1}||_2`.
    Coefficient,
    /// Resolvent norm from weighted l^1 to l^inf.
    Resolvent,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Continue a soliton from the anti-continuum limit.
    Soliton {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long = "K", default_value_t = 40)]
        half_width: usize,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Linearized spectrum with Krein signatures and eigenvalue counts.
    Spectrum {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long = "K", default_value_t = 40)]
        half_width: usize,
        #[arg(long, default_value_t = dnls_core::linearization::DEFAULT_DELTA)]
        delta: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Resolvent fields (a, b) for a forcing read from JSON.
    Resolvent {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, allow_hyphen_values = true)]
        omega_re: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        omega_im: f64,
        #[arg(long)]
        forcing: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Complex root of the resonance determinant for the two-site soliton.
    Resonance {
        #[arg(long, default_value_t = 2)]
        gap: u64,
        #[arg(long, default_value_t = 2)]
        p: u32,
        #[arg(long)]
        eps: f64,
        #[arg(long, allow_hyphen_values = true)]
        guess_re: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        guess_im: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Count zeros of det A inside a circle; prints the integer.
    Detscan {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        center: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        center_im: f64,
        #[arg(long, default_value_t = 0.5)]
        radius: f64,
        #[arg(long, default_value_t = CONTOUR_POINTS)]
        points: usize,
    },
    /// Scan log10 ||A(Omega)^{-1}||_2 over a grid.
    #[command(name = "scan-A", alias = "scan-a")]
    ScanA {
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        out: PathBuf,
        /// Sidecar JSON with the scan metadata.
        #[arg(long)]
        overlay: Option<PathBuf>,
    },
    /// Scan the weighted truncated resolvent; writes eigenvalues to a sidecar.
    ScanResolvent {
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long = "K", default_value_t = 40)]
        half_width: usize,
        #[arg(long, value_enum, default_value_t = Potential::Limiting)]
        potential: Potential,
        #[arg(long)]
        out: PathBuf,
        /// Defaults to the output path with `.eigs.json`.
        #[arg(long)]
        overlay: Option<PathBuf>,
    },
    /// Norm along the upper band, theta_k = -pi k / (n + 1).
    BandSlice {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value_t = 255)]
        n_theta: usize,
        #[arg(long, value_enum, default_value_t = Measure::Coefficient)]
        measure: Measure,
        #[arg(long = "K", default_value_t = 30)]
        half_width: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Interior peak heights for the two-site soliton and their log-log slope.
    Scaling {
        #[arg(long, default_value_t = 2)]
        gap: u64,
        #[arg(long, default_value_t = 2)]
        p: u32,
        #[arg(long, value_delimiter = ',', default_value = "0.004,0.01,0.02,0.04")]
        eps_list: Vec<f64>,
        #[arg(long, default_value_t = PEAK_COARSE_POINTS)]
        coarse_points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run acceptance suites; one PASS/FAIL line per criterion.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
    },
}

fn emit(out: Option<&Path>, stdout: &mut dyn Write, bytes: &[u8]) -> Result<(), Error> {
    match out {
        Some(p) => fs::write(p, bytes)?,
        None => stdout.write_all(bytes)?,
    }
    Ok(())
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<(), Error>) -> Result<Vec<u8>, Error> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn default_overlay(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".eigs.json");
    PathBuf::from(s)
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write) -> Result<i32, Error> {
    match &cli.command {
        Command::Soliton {
            config,
            half_width,
            tol,
            out,
        } => {
            let c = config.config()?;
            let prof = continue_soliton(&c, config.p, config.eps, *half_width, *tol)?;
            emit(out.as_deref(), stdout, to_json(&ProfileDto::from(&prof))?.as_bytes())?;
        }
        Command::Spectrum {
            config,
            half_width,
            delta,
            out,
        } => {
            let c = config.config()?;
            let prof = continue_soliton(&c, config.p, config.eps, *half_width, dnls_core::soliton::DEFAULT_TOL)?;
            let rep = stability_spectrum(&build_operators(&prof), *delta)?;
            emit(
                out.as_deref(),
                stdout,
                to_json(&SpectrumDto::new(&c, config.p, &rep))?.as_bytes(),
            )?;
        }
        Command::Resolvent {
            config,
            omega_re,
            omega_im,
            forcing,
            out,
        } => {
            let c = config.config()?;
            let dto: ForcingDto = from_json(&fs::read_to_string(forcing)?)?;
            let forcing = dto.to_forcing()?;
            let om = C64::new(*omega_re, *omega_im);
            let fields = resolvent_fields(&c, om, config.eps, config.p, None, &forcing)?;
            let r = resolvent_equation_residual(&c, om, config.eps, config.p, None, &forcing, &fields)?;
            let worst = r.iter().copied().fold(0.0, f64::max);
            emit(
                out.as_deref(),
                stdout,
                to_json(&FieldsDto::new(&fields, worst))?.as_bytes(),
            )?;
        }
        Command::Resonance {
            gap,
            p,
            eps,
            guess_re,
            guess_im,
            out,
        } => {
            let g = resonance_expansion(*p, *eps);
            let guess = C64::new(guess_re.unwrap_or(g.re), guess_im.unwrap_or(g.im));
            let root = resonance_root(*gap, *p, *eps, guess)?;
            emit(out.as_deref(), stdout, to_json(&ResonanceDto::from(&root))?.as_bytes())?;
        }
        Command::Detscan {
            config,
            center,
            center_im,
            radius,
            points,
        } => {
            let c = config.config()?;
            let z = det_zero_count(
                &c,
                config.p,
                config.eps,
                C64::new(*center, *center_im),
                *radius,
                *points,
            )?;
            writeln!(stdout, "{}", z.count)?;
        }
        Command::ScanA {
            config,
            grid,
            out,
            overlay,
        } => {
            let c = config.config()?;
            let scan = parallel::scan_coefficient_matrix(&c, config.p, config.eps, &grid.grid()?)?;
            fs::write(out, csv_bytes(|b| write_scan_csv(b, &scan))?)?;
            if let Some(o) = overlay {
                fs::write(o, to_json(&OverlayDto::from_scan(&scan))?)?;
            }
        }
        Command::ScanResolvent {
            config,
            grid,
            sigma,
            half_width,
            potential,
            out,
            overlay,
        } => {
            let c = config.config()?;
            let profile;
            let source = match potential {
                Potential::Limiting => PotentialSource::Limiting(&c),
                Potential::Profile => {
                    profile = continue_soliton(&c, config.p, config.eps, *half_width, dnls_core::soliton::DEFAULT_TOL)?;
                    PotentialSource::Profile(&profile)
                }
            };
            let wop = build_weighted_operator(source, *sigma, *half_width, config.eps, config.p)?;
            let scan = parallel::scan_weighted_resolvent(&wop, &c, &grid.grid()?)?;
            fs::write(out, csv_bytes(|b| write_scan_csv(b, &scan))?)?;
            let o = overlay.clone().unwrap_or_else(|| default_overlay(out));
            fs::write(o, to_json(&OverlayDto::from_scan(&scan))?)?;
        }
        Command::BandSlice {
            config,
            n_theta,
            measure,
            half_width,
            out,
        } => {
            let c = config.config()?;
            let rows = match measure {
                Measure::Coefficient => parallel::band_slice(&c, config.p, config.eps, *n_theta)?,
                Measure::Resolvent => parallel::resolvent_band_slice(&c, config.p, config.eps, *n_theta, *half_width)?,
            };
            emit(
                out.as_deref(),
                stdout,
                &csv_bytes(|b| write_pairs_csv(b, BAND_SLICE_HEADER, &rows))?,
            )?;
        }
        Command::Scaling {
            gap,
            p,
            eps_list,
            coarse_points,
            out,
        } => {
            let fit = parallel::epsilon_scaling_fit(*gap, *p, eps_list, *coarse_points)?;
            let rows: Vec<(f64, f64)> = fit.peaks.iter().map(|pk| (pk.epsilon, pk.height)).collect();
            let bytes = csv_bytes(|b| write_pairs_csv(b, SCALING_HEADER, &rows))?;
            match out {
                Some(path) => {
                    fs::write(path, bytes)?;
                    writeln!(stdout, "slope {:.6}", fit.slope)?;
                }
                None => stdout.write_all(&bytes)?,
            }
        }
        Command::Verify { suite } => {
            let checks = suites::run_suite(suite, cli.seed).ok_or_else(|| {
                Error::Usage(format!(
                    "unknown suite {suite:?}; expected one of {:?} or a criterion id {:?}",
                    suites::SUITES,
                    suites::CRITERIA
                ))
            })?;
            let mut code = 0;
            for c in &checks {
                writeln!(stdout, "{}", c.line())?;
                if !c.passed && !c.known_deviation() {
                    code = 1;
                }
            }
            return Ok(code);
        }
    }
    Ok(0)
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                return 2;
            }
            let _ = write!(stdout, "{text}");
            return 0;
        }
    };
    // buffered so the worker pool never holds the caller's writer
    let mut buf = Vec::new();
    let result = match cli.threads {
        Some(0) => Err(Error::Usage("--threads must be positive".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(&cli, &mut buf)),
            Err(e) => Err(Error::Usage(e.to_string())),
        },
        None => dispatch(&cli, &mut buf),
    };
    let result = result.and_then(|code| {
        stdout.write_all(&buf)?;
        stdout.flush()?;
        Ok(code)
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "dnls: {e}");
            e.exit_code()
        }
    }
}
