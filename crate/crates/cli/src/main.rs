//! `pfwillmore` command-line driver.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pfwillmore::harness::config::{Experiment, ExperimentConfig, ProfileRun, ResidualRun};
use pfwillmore::harness::{compare_files, fmt_f64, run_config};
use pfwillmore::Error;

#[derive(Parser)]
#[command(name = "pfwillmore", version, about = "Phase-field Willmore flow experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for random perturbations (overrides `seed`).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Heteroclinic profile and its identities.
    Profile(Common),
    /// Residuals of the glued circle expansion over a list of ε.
    ResidualStudy {
        #[command(flatten)]
        common: Common,
        /// Expansion order.
        #[arg(long)]
        k: Option<usize>,
        /// Comma-separated, strictly decreasing ε values.
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
    },
    /// Phase-field evolution.
    Evolve(Common),
    /// Parametric volume-preserving Willmore flow.
    CurveEvolve(Common),
    /// Hausdorff distance and area difference of two polyline CSV files.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Phase field against the parametric reference over a list of ε.
    Converge(Common),
}

fn exit_code(e: &Error) -> u8 {
    if e.is_config() {
        2
    } else if matches!(e, Error::Io(_)) {
        1
    } else {
        3
    }
}

fn load(common: &Common, kind: &str, default: Option<Experiment>) -> Result<ExperimentConfig, Error> {
    let mut cfg = match (&common.config, default) {
        (Some(path), _) => ExperimentConfig::from_file(path)?,
        (None, Some(exp)) => ExperimentConfig::new(exp),
        (None, None) => {
            return Err(Error::Config {
                key: "--config".into(),
                message: format!("`{kind}` needs a configuration file"),
            })
        }
    };
    if cfg.kind() != kind {
        return Err(Error::Config {
            key: "experiment".into(),
            message: format!("configuration is for `{}`, not `{kind}`", cfg.kind()),
        });
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<Vec<String>, Error> {
    let (common, kind, default) = match cli.command {
        Command::Compare { a, b } => {
            let c = compare_files(&a, &b)?;
            return Ok(vec![
                format!("hausdorff = {}", fmt_f64(c.hausdorff)),
                format!("area_diff = {}", fmt_f64(c.area_diff)),
            ]);
        }
        Command::ResidualStudy { common, k, eps } => {
            let mut cfg = load(&common, "residual-study", Some(Experiment::ResidualStudy(ResidualRun::default())))?;
            if let Experiment::ResidualStudy(r) = &mut cfg.experiment {
                if let Some(k) = k {
                    r.k = k;
                }
                if let Some(eps) = eps {
                    r.eps = eps;
                }
            }
            return execute(&cfg, &common);
        }
        Command::Profile(c) => (c, "profile", Some(Experiment::Profile(ProfileRun::default()))),
        Command::Evolve(c) => (c, "evolve", None),
        Command::CurveEvolve(c) => (c, "curve-evolve", None),
        Command::Converge(c) => (c, "converge", None),
    };
    let cfg = load(&common, kind, default)?;
    execute(&cfg, &common)
}

fn execute(cfg: &ExperimentConfig, common: &Common) -> Result<Vec<String>, Error> {
    let summary = run_config(cfg, common.out.as_deref())?;
    let mut lines = summary.report;
    lines.push(format!(
        "wrote {} files and {} to {}",
        summary.files.len(),
        pfwillmore::harness::MANIFEST,
        summary.output_dir.display()
    ));
    Ok(lines)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
