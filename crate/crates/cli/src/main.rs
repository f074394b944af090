use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use latentedit_cli::commands::{cmd_edit, cmd_invert, cmd_sweep};
use latentedit_cli::config::{AttrArg, InvertSection, SweepParam, SweepSection};
use latentedit_cli::{exit, CliError, JobConfig};
use latentedit_core::optimizer::InversionMask;
use latentedit_core::EditMode;

/// Attribute editing by masked latent-code optimization.
///
/// Exit codes: 0 success, 2 configuration error, 3 model-load or I/O error,
/// 4 optimization aborted (non-finite loss).
#[derive(Parser, Debug)]
#[command(name = "latentedit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Edit each input image.
    Edit(Common),
    /// Run one edit per value of epsilon or alpha.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Parameter to sweep: epsilon or alpha.
        #[arg(long)]
        param: Option<SweepParam>,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Option<Vec<f64>>,
    },
    /// Embed a face region with masked MSE only and report quality metrics.
    Invert {
        #[command(flatten)]
        common: Common,
        /// face, no_hair or skin_only.
        #[arg(long, value_parser = parse_region)]
        region: Option<InversionMask>,
        #[arg(long)]
        iterations: Option<usize>,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// TOML job manifest; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input image (repeatable).
    #[arg(long = "input")]
    inputs: Vec<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// NAME[=present|absent] (repeatable).
    #[arg(long = "attr")]
    attrs: Vec<AttrArg>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// local or global.
    #[arg(long, value_parser = parse_mode)]
    mode: Option<EditMode>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write a render every N iterations.
    #[arg(long = "dump-frames")]
    dump_frames: Option<usize>,
    /// Number of inputs processed in parallel.
    #[arg(long)]
    jobs: Option<usize>,
}

fn parse_mode(s: &str) -> Result<EditMode, String> {
    match s {
        "local" => Ok(EditMode::Local),
        "global" => Ok(EditMode::Global),
        other => Err(format!("expected `local` or `global`, got `{other}`")),
    }
}

fn parse_region(s: &str) -> Result<InversionMask, String> {
    match s {
        "face" => Ok(InversionMask::Face),
        "no_hair" => Ok(InversionMask::NoHair),
        "skin_only" => Ok(InversionMask::SkinOnly),
        other => Err(format!("expected face, no_hair or skin_only, got `{other}`")),
    }
}

fn load_job(common: &Common) -> Result<JobConfig, CliError> {
    let mut job = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            JobConfig::from_toml(&text)?
        }
        None => JobConfig::default(),
    };
    if !common.inputs.is_empty() {
        job.inputs = common.inputs.clone();
    }
    if let Some(out) = &common.out {
        job.output_dir = out.clone();
    }
    if !common.attrs.is_empty() {
        job.edit.attributes = common.attrs.clone();
    }
    if common.epsilon.is_some() {
        job.edit.epsilon = common.epsilon;
    }
    if common.alpha.is_some() {
        job.edit.alpha = common.alpha;
    }
    if let Some(mode) = common.mode {
        job.edit.mode = mode;
    }
    if common.seed.is_some() {
        job.optim.seed = common.seed;
    }
    if common.dump_frames.is_some() {
        job.export.frames = common.dump_frames;
    }
    if let Some(jobs) = common.jobs {
        job.jobs = jobs;
    }
    Ok(job)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Edit(common) => cmd_edit(&load_job(&common)?),
        Command::Sweep { common, param, values } => {
            let mut job = load_job(&common)?;
            match (&mut job.sweep, param) {
                (Some(s), Some(p)) => s.parameter = p,
                (None, Some(p)) => {
                    job.sweep = Some(SweepSection {
                        parameter: p,
                        values: Vec::new(),
                    })
                }
                _ => {}
            }
            if let Some(v) = values {
                let s = job
                    .sweep
                    .as_mut()
                    .ok_or_else(|| CliError::Config("sweep: --values needs --param".into()))?;
                s.values = v;
            }
            cmd_sweep(&job)
        }
        Command::Invert {
            common,
            region,
            iterations,
        } => {
            let mut job = load_job(&common)?;
            let inv = job.invert.get_or_insert_with(InvertSection::default);
            if let Some(r) = region {
                inv.region = r;
            }
            if let Some(n) = iterations {
                inv.iterations = n;
            }
            cmd_invert(&job)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::from(exit::SUCCESS),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
