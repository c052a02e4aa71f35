use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fracbam_cli::config::{self, ConfigError, ExperimentConfig, Mode};
use fracbam_cli::manifest::{verify_dir, Mismatch};
use fracbam_cli::runner::{output_dir, run_config, RunError, RunOptions};
use fracbam_cli::sweep::{parse_values, run_sweep};
use toml::Value;

/// Simulate and certify fractional-order BAM networks.
#[derive(Parser)]
#[command(name = "fracbam", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Output directory (default: the config's [output] dir, else runs/<config name>)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with status 4 unless a certificate is established
    #[arg(long)]
    require_certified: bool,
    /// Override solver.step
    #[arg(long)]
    step: Option<f64>,
    /// Override solver.t_end
    #[arg(long = "t-end")]
    t_end: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run one experiment per parameter value
    Sweep {
        config: PathBuf,
        /// delta, mu, c, c_bar, beta, beta_bar, step, t_end, gamma, r, or a dotted config key
        #[arg(long)]
        param: Option<String>,
        /// Comma-separated values; may be empty
        #[arg(long, allow_hyphen_values = true)]
        values: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Check a run directory against its manifest
    Verify { dir: PathBuf },
}

fn load(path: &Path, common: &Common) -> Result<ExperimentConfig, RunError> {
    let mut overrides = Vec::new();
    let key = |k: &str| vec!["solver".to_string(), k.to_string()];
    if let Some(h) = common.step {
        overrides.push((key("step"), Value::Float(h)));
    }
    if let Some(t) = common.t_end {
        overrides.push((key("t_end"), Value::Float(t)));
    }
    Ok(config::load(path, std::env::vars(), &overrides)?)
}

fn options(common: &Common) -> RunOptions {
    RunOptions {
        out: common.out.clone(),
        require_certified: common.require_certified,
    }
}

fn run(path: &Path, common: &Common) -> Result<(), RunError> {
    let cfg = load(path, common)?;
    if cfg.mode == Mode::Sweep {
        return sweep(path, None, None, common);
    }
    let dir = output_dir(&cfg, path, &options(common));
    let out = run_config(&cfg, &dir, &options(common))?;
    println!("{}: wrote {}", cfg.mode, dir.display());
    if let Some(v) = &out.verdict {
        println!("verdict: {v}");
    }
    Ok(())
}

fn sweep(path: &Path, param: Option<String>, values: Option<String>, common: &Common) -> Result<(), RunError> {
    let cfg = load(path, common)?;
    let section = cfg.sweep.clone();
    let param = param.or_else(|| section.as_ref().map(|s| s.param.clone())).filter(|p| !p.is_empty());
    let Some(param) = param else {
        return Err(ConfigError::Invalid(vec![fracbam::model::FieldError {
            field: "sweep.param".into(),
            reason: "give --param or a [sweep] param".into(),
        }])
        .into());
    };
    let values = match values {
        Some(v) => parse_values(&v)?,
        None => section.map(|s| s.values).unwrap_or_default(),
    };
    let dir = output_dir(&cfg, path, &options(common));
    let result = run_sweep(&cfg, &param, &values, &dir)?;
    print!("{}", result.summary);
    println!("sweep: {} runs, wrote {}", result.rows.len(), dir.display());
    if common.require_certified {
        let uncertified = result
            .rows
            .iter()
            .filter(|r| !matches!(&r.result, Ok(o) if o.certified == Some(true)))
            .count();
        if uncertified > 0 {
            return Err(RunError::Gate(format!("{uncertified} of {} runs uncertified", result.rows.len())));
        }
    }
    Ok(())
}

fn verify(dir: &Path) -> ExitCode {
    match verify_dir(dir) {
        Ok(bad) if bad.is_empty() => {
            println!("{}: all checksums match", dir.display());
            ExitCode::SUCCESS
        }
        Ok(bad) => {
            for m in bad {
                match m {
                    Mismatch::Missing(f) => eprintln!("missing: {f}"),
                    Mismatch::Changed(f) => eprintln!("checksum mismatch: {f}"),
                }
            }
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config, common } => run(config, common),
        Command::Sweep {
            config,
            param,
            values,
            common,
        } => sweep(config, param.clone(), values.clone(), common),
        Command::Verify { dir } => return verify(dir),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
