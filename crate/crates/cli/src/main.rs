//! `nanosense` command-line runner.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod analyze;
mod config;
mod error;
mod output;
mod simulate;
mod tools;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nanosense_core::odmr::CrbParams;

use config::ExperimentConfig;
use error::CliError;
use output::Outputs;

#[derive(Parser)]
#[command(name = "nanosense", version, about = "Simulate and analyse nanodiamond tracking and ODMR thermometry runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Master seed; overrides the config value.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the config value.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// JSON experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ParamSet {
    ShiftOnly,
    AmplitudeShift,
    Full,
}

impl From<ParamSet> for CrbParams {
    fn from(p: ParamSet) -> Self {
        match p {
            ParamSet::ShiftOnly => CrbParams::ShiftOnly,
            ParamSet::AmplitudeShift => CrbParams::AmplitudeAndShift,
            ParamSet::Full => CrbParams::Full,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate true and tracked trajectories, ODMR spectra, temperature
    /// series and chip schedules from a config.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// MSD, fits, modulus, PSD, force, segmentation and thermometry from
    /// trajectory or ODMR files.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Trajectory or ODMR CSV; repeat for several files.
        #[arg(long = "input", required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Cramér–Rao bound on the temperature sensitivity.
    Crb {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "amplitude-shift")]
        params: ParamSet,
        /// Counts per frequency sample off resonance.
        #[arg(long)]
        lambda0: Option<f64>,
    },
    /// Overlapping Allan deviation of a temperature series.
    Allan {
        #[command(flatten)]
        common: Common,
        /// CSV with columns t_s,dT_C,sigma_C.
        #[arg(long)]
        input: PathBuf,
    },
    /// Null distribution and critical value of the directionality ratio.
    GammaNull {
        #[command(flatten)]
        common: Common,
        /// Window length in steps.
        #[arg(long)]
        n: Option<usize>,
        /// Number of dimensions.
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        confidence: Option<f64>,
    },
}

fn load_config(common: &Common) -> Result<ExperimentConfig, CliError> {
    match &common.config {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::empty()),
    }
}

fn finish(outputs: Outputs, summary: serde_json::Value, summary_name: &str, dir: Option<PathBuf>) -> Result<(), CliError> {
    let Some(dir) = dir else { return Ok(()) };
    let mut outputs = outputs;
    let mut summary = summary;
    if let Some(obj) = summary.as_object_mut() {
        obj.insert("generator".into(), output::generator_line().trim_start_matches("#generator=").into());
    }
    outputs.json(summary_name, &summary)?;
    for p in outputs.commit(&dir)? {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { common } => {
            let cfg = load_config(&common)?;
            let seed = common
                .seed
                .or(cfg.seed)
                .ok_or_else(|| CliError::Config("a seed is required (--seed or config `seed`)".into()))?;
            let dir = common.out_dir.or(cfg.out_dir.clone()).unwrap_or_else(|| PathBuf::from("."));
            let (out, summary) = simulate::run(&cfg, seed)?;
            finish(out, summary, "simulation.json", Some(dir))
        }
        Command::Analyze { common, inputs } => {
            let cfg = load_config(&common)?;
            let dir = common.out_dir.or(cfg.out_dir.clone()).unwrap_or_else(|| PathBuf::from("."));
            let (out, mut summary) = analyze::run(&cfg.analysis, &inputs)?;
            if let (Some(obj), Some(seed)) = (summary.as_object_mut(), common.seed.or(cfg.seed)) {
                obj.insert("seed".into(), seed.into());
            }
            print_analysis(&summary);
            finish(out, summary, "summary.json", Some(dir))
        }
        Command::Crb { common, params, lambda0 } => {
            let cfg = load_config(&common)?;
            let (out, summary) = tools::run_crb(&cfg, params.into(), lambda0)?;
            finish(out, summary, "crb.json", common.out_dir.or(cfg.out_dir))
        }
        Command::Allan { common, input } => {
            let cfg = load_config(&common)?;
            let (out, summary) = tools::run_allan(&cfg, &input)?;
            finish(out, summary, "allan.json", common.out_dir.or(cfg.out_dir))
        }
        Command::GammaNull { common, n, m, confidence } => {
            let cfg = load_config(&common)?;
            let (out, summary) = tools::run_gamma_null(&cfg, n, m, confidence)?;
            finish(out, summary, "gamma_null.json", common.out_dir.or(cfg.out_dir))
        }
    }
}

/// One line per headline number on stdout.
fn print_analysis(summary: &serde_json::Value) {
    if let Some(inputs) = summary["inputs"].as_object() {
        for (name, s) in inputs {
            if let Some(d) = s["diffusion_nm2_per_s"]["value"].as_f64() {
                println!("{name}: D = {d:.4e} +/- {:.2e} nm^2/s", s["diffusion_nm2_per_s"]["sigma"].as_f64().unwrap_or(f64::NAN));
            }
            if let Some(a) = s["alpha"]["value"].as_f64() {
                println!("{name}: alpha = {a:.3}");
            }
            if let Some(v) = s["sensitivity_c_per_rthz"]["value"].as_f64() {
                println!("{name}: sensitivity = {v:.3} C/sqrt(Hz)");
            }
        }
    }
    if let Some(r) = summary["hydrodynamic_radius_nm"]["value"].as_f64() {
        println!("hydrodynamic radius = {r:.2} +/- {:.2} nm", summary["hydrodynamic_radius_nm"]["sigma"].as_f64().unwrap_or(f64::NAN));
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
