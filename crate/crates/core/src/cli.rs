//! Command-line adapter over the library. Each subcommand loads a config,
//! calls one library routine and writes its result.
//!
//! Exit codes: 0 success, 2 config or usage error, 3 numerical degeneracy,
//! 4 no convergence, 1 anything else. Errors print one line
//! `error: <kind>: <detail>` to stderr.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::bounds::{bvm_diagnostics, moment_radius};
use crate::config::{BuiltModel, Config};
use crate::error::{Error, Result};
use crate::experiments::{csv_string, emit_json};
use crate::model::ScalarExperiment;
use crate::quantizer::{
    covering_codebook, lloyd_max_1d, panter_dite_1d, Codebook, CodebookFile, CoveringQuantizer,
};
use crate::regret::{run_two_pass, RegretEstimate};

/// Point movement below which Lloyd iterations stop.
pub const LLOYD_TOL: f64 = 1e-10;
pub const LLOYD_MAX_ITER: usize = 10_000;

#[derive(Debug, Parser)]
#[command(
    name = "qmmse",
    version,
    about = "Quantized-observation MMSE: design, regret, sweeps and bounds"
)]
pub struct CliConfig {
    /// Raise log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Lloyd,
    PanterDite,
    Covering,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Design a codebook and write it to a file.
    Design {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum)]
        method: Method,
        /// Covering radius; defaults to A for scalar models and to the
        /// fourth-moment balance radius for linear ones.
        #[arg(long)]
        r: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate the regret of a codebook file.
    Regret {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        codebook: PathBuf,
        /// Observations per draw (scalar models).
        #[arg(long)]
        n: Option<usize>,
        #[arg(long = "N")]
        samples: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the `[sweep]` table; `.json` output writes all row fields.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long = "N")]
        samples: Option<usize>,
    },
    /// Print every applicable bound as JSON.
    Bounds {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print posterior-expansion diagnostics as JSON.
    Bvm {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long = "N")]
        samples: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match CliConfig::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();
    match execute(&cli.command) {
        Ok(Some(stdout)) => {
            // A closed pipe (`qmmse bounds ... | head`) is not an error.
            let _ = writeln!(std::io::stdout(), "{stdout}");
            0
        }
        Ok(None) => 0,
        Err(e) => {
            eprintln!("error: {}: {}", e.kind(), single_line(&e));
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidInput(_) => 2,
        Error::NumericalDegeneracy(_) => 3,
        Error::Convergence { .. } => 4,
        _ => 1,
    }
}

fn single_line(e: &Error) -> String {
    let text = match e {
        Error::Config(s)
        | Error::InvalidInput(s)
        | Error::NumericalDegeneracy(s)
        | Error::Domain(s) => s.clone(),
        other => other.to_string(),
    };
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Runs one subcommand. Files are written only after the computation
/// succeeds; text meant for stdout is returned.
pub fn execute(command: &Command) -> Result<Option<String>> {
    match command {
        Command::Design {
            model,
            k,
            method,
            r,
            out,
        } => {
            let text = design(&Config::load(model)?, *k, *method, *r)?;
            write(out, &text)?;
            Ok(None)
        }
        Command::Regret {
            model,
            codebook,
            n,
            samples,
            seed,
            out,
        } => {
            let cfg = Config::load(model)?;
            let seed = seed.or(cfg.model.seed).unwrap_or(0);
            let file = std::fs::read_to_string(codebook)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", codebook.display())))?;
            let estimate = regret(&cfg, &CodebookFile::parse(&file)?, *n, *samples, seed)?;
            write(out, &(estimate.to_json() + "\n"))?;
            Ok(None)
        }
        Command::Sweep {
            config,
            out,
            seed,
            samples,
        } => {
            let rows = Config::load(config)?.run_sweep(*seed, *samples)?;
            if out.extension().is_some_and(|e| e == "json") {
                emit_json(&rows, out)?;
            } else {
                write(out, &csv_string(&rows))?;
            }
            Ok(None)
        }
        Command::Bounds { config } => {
            let reports = Config::load(config)?.bound_reports()?;
            Ok(Some(to_json(&reports)?))
        }
        Command::Bvm {
            model,
            n,
            samples,
            seed,
        } => {
            let cfg = Config::load(model)?;
            let BuiltModel::Scalar(m) = cfg.build_model()? else {
                return Err(Error::Config("bvm needs a scalar model".into()));
            };
            let seed = seed.or(cfg.model.seed).unwrap_or(0);
            let report = bvm_diagnostics(&m, *n, *samples, seed, cfg.bound_config()?.l0)?;
            Ok(Some(to_json(&report)?))
        }
    }
}

/// Codebook file text for the `design` subcommand.
pub fn design(cfg: &Config, k: usize, method: Method, r: Option<f64>) -> Result<String> {
    match (cfg.build_model()?, method) {
        (BuiltModel::Scalar(m), Method::Lloyd) => {
            let a = m.half_width();
            Ok(
                lloyd_max_1d(|y| m.prior_density(y), -a, a, k, LLOYD_TOL, LLOYD_MAX_ITER)?
                    .to_text(),
            )
        }
        (BuiltModel::Scalar(m), Method::PanterDite) => {
            let a = m.half_width();
            Ok(panter_dite_1d(|y| m.prior_density(y), -a, a, k)?.to_text())
        }
        (BuiltModel::Scalar(m), Method::Covering) => {
            Ok(covering_codebook(1, r.unwrap_or(m.half_width()), k)?.to_text())
        }
        (BuiltModel::Linear(m), Method::Covering) => {
            let r = match r {
                Some(r) => r,
                None => {
                    let known = crate::model::JointModel::known_moments(&m);
                    moment_radius(
                        known.e2.unwrap(),
                        known.e4.unwrap(),
                        k,
                        m.effective_dim().max(1),
                    )
                }
            };
            Ok(covering_codebook(m.dim(), r, k)?.to_text())
        }
        (BuiltModel::Linear(_), _) => Err(Error::Config(
            "lloyd and panter-dite design needs a scalar model; use covering".into(),
        )),
    }
}

/// Regret estimate for the `regret` subcommand.
pub fn regret(
    cfg: &Config,
    file: &CodebookFile,
    n: Option<usize>,
    samples: usize,
    seed: u64,
) -> Result<RegretEstimate> {
    let built = cfg.build_model()?;
    if file.codebook.dim() != built.target_dim() {
        return Err(Error::Config(format!(
            "codebook dimension {} does not match the model's {}",
            file.codebook.dim(),
            built.target_dim()
        )));
    }
    let covering = file
        .radius
        .map(|_| CoveringQuantizer::from_file(file))
        .transpose()?;
    let k = file.codebook.len();
    match built {
        BuiltModel::Scalar(m) => {
            let n = n
                .or(cfg.model.n)
                .ok_or_else(|| Error::Config("regret needs --n or model.n".into()))?;
            let experiment = ScalarExperiment::new(&m, n)?;
            let parts = match &covering {
                Some(cq) => run_two_pass(
                    &experiment,
                    |_, eta| cq.quantize(eta),
                    cq.cells(),
                    samples,
                    seed,
                    None,
                )?,
                None => two_pass_codebook(&experiment, &file.codebook, samples, seed)?,
            };
            Ok(RegretEstimate::from_parts(&parts, n, k, samples, seed))
        }
        BuiltModel::Linear(m) => {
            let n = m.obs_dim();
            let parts = match &covering {
                Some(cq) => run_two_pass(
                    &m,
                    |_, eta| cq.quantize(eta),
                    cq.cells(),
                    samples,
                    seed,
                    None,
                )?,
                None => two_pass_codebook(&m, &file.codebook, samples, seed)?,
            };
            Ok(RegretEstimate::from_parts(&parts, n, k, samples, seed))
        }
    }
}

fn two_pass_codebook<M: crate::model::JointModel>(
    model: &M,
    codebook: &Codebook,
    samples: usize,
    seed: u64,
) -> Result<crate::regret::RegretParts> {
    run_two_pass(
        model,
        |_, eta| codebook.quantize(eta),
        codebook.len(),
        samples,
        seed,
        None,
    )
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map_err(|e| Error::NumericalDegeneracy(format!("JSON output: {e}")))
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}
