//! `hdplus`: command-line pipeline for the HD⁺ hyperfine, line-fitting,
//! systematics and mass-ratio analysis.
//!
//! Every command writes `<command>.json` and `<command>.csv` into
//! `--out-dir` when it is given and prints one of them to stdout. Exit codes
//! are 0 on success, 1 for data errors and 2 for configuration errors
//! (missing or malformed files, invalid flags).

mod commands;
mod error;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hdplus_core::constants::ConstantsProfile;
use hdplus_core::systematics::RfModel;

use crate::error::{CliError, EXIT_CONFIG};

#[derive(Debug, Parser)]
#[command(
    name = "hdplus",
    version,
    about = "HD+ vibrational spectroscopy analysis pipeline"
)]
pub struct Cli {
    /// Directory receiving <command>.json and <command>.csv.
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,

    /// Constants set used for theory predictions and extractions.
    #[arg(long, global = true, value_enum, default_value_t = Profile::Codata2018)]
    pub constants_profile: Profile,

    /// Format printed to stdout. Without it, reproduce-paper prints its
    /// table and every other command prints JSON.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Profile {
    Codata2018,
    Penning,
}

impl From<Profile> for ConstantsProfile {
    fn from(p: Profile) -> Self {
        match p {
            Profile::Codata2018 => ConstantsProfile::Codata2018,
            Profile::Penning => ConstantsProfile::Penning,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Scheme {
    /// Try expectation-value labels, fall back to energy-order labels.
    Auto,
    Expectation,
    Correlated,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RfModelArg {
    Quadratic,
    Linear,
}

impl From<RfModelArg> for RfModel {
    fn from(m: RfModelArg) -> Self {
        match m {
            RfModelArg::Quadratic => RfModel::Quadratic,
            RfModelArg::Linear => RfModel::Linear,
        }
    }
}

/// Spin-theory uncertainty model.
#[derive(Debug, Clone, Args)]
pub struct SpinParamArgs {
    /// Fractional uncertainty of the Fermi contact coefficients E4, E5.
    #[arg(long, default_value_t = 1e-6)]
    pub eps_fermi: f64,
    /// Fractional uncertainty of the Breit-Pauli coefficients (default α²).
    #[arg(long)]
    pub eps_breit_pauli: Option<f64>,
    /// Absolute uncertainty of the upper-level E1, kHz.
    #[arg(long, default_value_t = 0.05)]
    pub u1_upper: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Hyperfine levels, spin frequencies, sensitivity tables and spin
    /// uncertainties.
    SpinStructure {
        /// Hyperfine coefficient file with [v=..,N=..] sections.
        #[arg(long)]
        coeffs: PathBuf,
        /// Restrict to these levels, given as v,N (repeatable).
        #[arg(long = "level", value_parser = parse_level)]
        levels: Vec<(u32, u32)>,
        /// How (G1, G2) labels are assigned.
        #[arg(long, value_enum, default_value_t = Scheme::Auto)]
        scheme: Scheme,
        #[command(flatten)]
        spin: SpinParamArgs,
    },
    /// Zeeman energies of every sublevel of one rovibrational level on a
    /// field grid.
    ZeemanMap {
        /// Hyperfine coefficient file.
        #[arg(long)]
        coeffs: PathBuf,
        /// Level as v,N.
        #[arg(long, value_parser = parse_level)]
        level: (u32, u32),
        /// Zeeman couplings file (defaults to the bundled values).
        #[arg(long)]
        couplings: Option<PathBuf>,
        /// Field grid in gauss, starting at 0.
        #[arg(long, value_delimiter = ',')]
        grid: Vec<f64>,
        /// How (G1, G2) labels are assigned.
        #[arg(long, value_enum, default_value_t = Scheme::Auto)]
        scheme: Scheme,
    },
    /// Linear and quadratic Zeeman coefficients of transition components
    /// between (v=0,N=0) and (v=1,N=1).
    ZeemanCoeffs {
        /// Hyperfine coefficient file with (v=0,N=0) and (v=1,N=1).
        #[arg(long)]
        coeffs: PathBuf,
        /// Zeeman couplings file (defaults to the bundled values).
        #[arg(long)]
        couplings: Option<PathBuf>,
        /// Field grid in gauss, starting at 0.
        #[arg(long, value_delimiter = ',')]
        grid: Vec<f64>,
        /// Component as LINE:mF:mF' with LINE 12 or 16 (repeatable). Defaults
        /// to 12:0:0, 16:0:0 and 16:2:3.
        #[arg(long = "component", value_parser = parse_component)]
        components: Vec<(String, i32, i32)>,
    },
    /// Extrapolates line frequencies measured at several fields to B = 0.
    ExtrapolateB {
        /// CSV with columns B_gauss, f_khz, u_khz.
        #[arg(long)]
        points: PathBuf,
    },
    /// Builds a spectrum from decay records (or reads one), fits a
    /// Lorentzian and reports the line frequency.
    FitLine {
        /// CSV with columns detuning_khz, run_id, laser_on (0 or 1), depletion.
        #[arg(
            long,
            conflicts_with = "spectrum",
            required_unless_present = "spectrum"
        )]
        records: Option<PathBuf>,
        /// CSV with columns detuning_khz, signal and optionally sem.
        #[arg(long)]
        spectrum: Option<PathBuf>,
        /// Absolute frequency of zero detuning, kHz.
        #[arg(long, default_value_t = 0.0)]
        offset_khz: f64,
    },
    /// Extrapolates line frequencies to zero RF trap amplitude.
    ExtrapolateRf {
        /// CSV with columns amplitude, f_khz, u_khz.
        #[arg(long)]
        points: PathBuf,
        /// RF amplitude at which the line was measured.
        #[arg(long)]
        nominal: f64,
        /// Dependence of the shift on the amplitude A: A² or A.
        #[arg(long, value_enum, default_value_t = RfModelArg::Quadratic)]
        model: RfModelArg,
    },
    /// Applies a systematic-shift ledger to a raw line frequency.
    Ledger(LedgerArgs),
    /// Composite spin-averaged frequency from lines 12 and 16.
    Composite {
        /// Weight of line 12.
        #[arg(long, default_value_t = 0.5)]
        b12: f64,
        /// CSV with columns line, f_khz, u_exp_khz, fspin_khz, u_spin_khz
        /// (defaults to the bundled lines).
        #[arg(long)]
        lines: Option<PathBuf>,
        /// Coefficient file; enables the full spin-uncertainty model and
        /// the optimal weight.
        #[arg(long)]
        coeffs: Option<PathBuf>,
        /// Shared (linearly adding) parts of u_exp of lines 12 and 16, kHz.
        #[arg(long, requires = "shared16")]
        shared12: Option<f64>,
        /// Shared part of u_exp of line 16, kHz.
        #[arg(long, requires = "shared12")]
        shared16: Option<f64>,
        /// Theoretical splitting file (defaults to the bundled value).
        #[arg(long)]
        splitting_theory: Option<PathBuf>,
        #[command(flatten)]
        spin: SpinParamArgs,
    },
    /// Extracts μ/m_e and m_p/m_e from a spin-averaged frequency.
    Extract {
        /// Spin-averaged frequency, kHz. Defaults to the composite of the
        /// bundled lines at b12 = 0.5.
        #[arg(long, requires = "u_exp_khz")]
        f_khz: Option<f64>,
        /// Experimental uncertainty of --f-khz, kHz.
        #[arg(long, requires = "f_khz")]
        u_exp_khz: Option<f64>,
        /// Spin-theory uncertainty of the frequency, kHz. Zero keeps the
        /// composite's own value when --f-khz is not given.
        #[arg(long, default_value_t = 0.0)]
        u_spin_khz: f64,
        /// Constants file overriding the bundled profile.
        #[arg(long)]
        constants: Option<PathBuf>,
        /// Theory contribution table overriding the bundled one.
        #[arg(long)]
        contributions: Option<PathBuf>,
    },
    /// Comparison table of m_p/m_e determinations with pulls.
    Compare {
        /// CSV with columns label, value, u, source (defaults to bundled).
        #[arg(long)]
        determinations: Option<PathBuf>,
        /// Row index of the reference determination.
        #[arg(long, default_value_t = 0)]
        reference: usize,
    },
    /// Overlapping Allan deviation of a counter log.
    Adev {
        /// CSV with columns t_s, f_hz.
        #[arg(long)]
        log: PathBuf,
        /// Nominal frequency, Hz; samples become (f - carrier)/carrier.
        #[arg(long)]
        carrier_hz: f64,
        /// Averaging times in seconds (defaults to octaves of the sample
        /// interval).
        #[arg(long, value_delimiter = ',')]
        tau_list: Vec<f64>,
    },
    /// Difference frequency of two comb-referenced lasers.
    Dfg {
        /// JSON file with f_rep, f_ceo and two lasers {n, f_beat, beat_sign,
        /// ceo_sign}.
        #[arg(long)]
        comb: PathBuf,
        /// Fractional offset of the reference maser.
        #[arg(long, default_value_t = 0.0)]
        maser_offset: f64,
    },
    /// Carrier strength of the Lamb-Dicke model.
    Carrier {
        /// Wavelengths in µm.
        #[arg(long, value_delimiter = ',')]
        lambda_um: Vec<f64>,
        /// Spatial spread of the ion, µm.
        #[arg(long)]
        delta_rho_um: f64,
        /// Log-spaced sweep as FROM,TO,POINTS in µm.
        #[arg(long, value_delimiter = ',')]
        sweep: Vec<f64>,
    },
    /// Runs the chain on the bundled inputs and prints a pass/fail table of
    /// the reproduced numbers.
    ReproducePaper {
        /// Hyperfine coefficient file enabling the spin and Zeeman anchors.
        #[arg(long)]
        coeffs: Option<PathBuf>,
        /// Zeeman couplings file (defaults to the bundled values).
        #[arg(long)]
        couplings: Option<PathBuf>,
        #[command(flatten)]
        spin: SpinParamArgs,
    },
}

#[derive(Debug, Args)]
pub struct LedgerArgs {
    /// Raw line frequency, kHz.
    #[arg(long)]
    pub raw_khz: f64,
    /// Statistical uncertainty of the raw frequency, kHz.
    #[arg(long, default_value_t = 0.0)]
    pub raw_u_khz: f64,
    /// JSON array of entries {name, correction, uncertainty, basis, note}.
    #[arg(long)]
    pub entries: Option<PathBuf>,
    /// Adds the black-body, electric-quadrupole and trap-displacement
    /// entries with this displacement bound, kHz.
    #[arg(long)]
    pub trap_bound_khz: Option<f64>,
    /// RF extrapolation points (amplitude, f_khz, u_khz).
    #[arg(long, requires = "rf_nominal")]
    pub rf_points: Option<PathBuf>,
    /// RF amplitude at which the raw frequency was measured.
    #[arg(long, requires = "rf_points")]
    pub rf_nominal: Option<f64>,
    /// Dependence of the RF shift on the amplitude A: A² or A.
    #[arg(long, value_enum, default_value_t = RfModelArg::Quadratic)]
    pub rf_model: RfModelArg,
    /// Cooling-light intensity, W/m²; enables the light-shift entry.
    #[arg(long, requires_all = ["alpha_s_upper", "alpha_t_upper", "alpha_lower"])]
    pub intensity: Option<f64>,
    /// Scalar polarizability of the upper level, a.u.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha_s_upper: Option<f64>,
    /// Tensor polarizability of the upper level, a.u.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha_t_upper: Option<f64>,
    /// Polarizability of the lower level, a.u.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha_lower: Option<f64>,
    /// Level at which no light shift was observed, kHz.
    #[arg(long, default_value_t = 0.0)]
    pub light_bound_khz: f64,
}

fn parse_level(s: &str) -> Result<(u32, u32), String> {
    let (v, n) = s
        .split_once(',')
        .ok_or_else(|| format!("expected v,N, got '{s}'"))?;
    let p = |x: &str| {
        x.trim()
            .parse::<u32>()
            .map_err(|_| format!("'{x}' is not a non-negative integer"))
    };
    Ok((p(v)?, p(n)?))
}

fn parse_component(s: &str) -> Result<(String, i32, i32), String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [line, ml, mu] = parts[..] else {
        return Err(format!("expected LINE:mF:mF', got '{s}'"));
    };
    let p = |x: &str| {
        x.trim()
            .parse::<i32>()
            .map_err(|_| format!("'{x}' is not an integer"))
    };
    Ok((line.trim().to_string(), p(ml)?, p(mu)?))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(out) => {
            let stdout = match (cli.format, &out.text) {
                (Some(Format::Csv), _) => out.csv.clone(),
                (None, Some(text)) => text.clone(),
                _ => out.json_text(),
            };
            if let Some(dir) = &cli.out_dir {
                if let Err(e) = out.write_to(dir) {
                    return fail(e);
                }
            }
            let mut lock = std::io::stdout().lock();
            if lock
                .write_all(stdout.as_bytes())
                .and_then(|_| lock.flush())
                .is_err()
            {
                return ExitCode::from(EXIT_CONFIG);
            }
            if out.data_failure {
                ExitCode::from(error::EXIT_DATA)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => fail(e),
    }
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.code)
}
