use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ffgap::harness::{run, ExperimentConfig, Mode, OutputFormat, Overrides};
use ffgap::Error;

#[derive(Parser)]
#[command(name = "ffgap", version, about = "Spectral gaps of random frustration-free chains and trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Random chains: certificates and exact gaps.
    Sweep(Common),
    /// Frequency of landing near the good vectors.
    EventFreq(Common),
    /// Random trees: tree certificates and exact gaps.
    Tree(Common),
    /// Exact cap measures against bounds and Monte Carlo.
    CapTable(Common),
    /// Certificate for one projector (file or seed).
    Certify(CertifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    /// JSON experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    common: Common,
    /// Serialized projector `{"d", "r", "matrix"}`.
    #[arg(long, conflicts_with_all = ["d", "r"])]
    projector: Option<PathBuf>,
    /// Sample a Haar projector with this local dimension.
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    r: Option<usize>,
    /// Stream index of the sampled projector.
    #[arg(long)]
    stream: Option<u64>,
    /// Tree branching factors to bound.
    #[arg(long, value_delimiter = ',')]
    k: Vec<usize>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            trials: self.trials,
            out: self.out.clone(),
            threads: self.threads,
            format: self.format.map(|f| match f {
                FormatArg::Csv => OutputFormat::Csv,
                FormatArg::Json => OutputFormat::Json,
            }),
        }
    }
}

fn load(mode: Mode, common: &Common) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            ExperimentConfig::from_json_str(&text)?
        }
        None if mode == Mode::CertifyOne => ExperimentConfig::new(mode),
        None => return Err(Error::Config("--config is required".into())),
    };
    if cfg.mode != mode {
        return Err(Error::Config(format!(
            "config mode is {}, but this subcommand runs {}",
            cfg.mode.as_str(),
            mode.as_str()
        )));
    }
    cfg.apply(&common.overrides());
    Ok(cfg)
}

fn build_config(cmd: &Command) -> Result<ExperimentConfig, Error> {
    let cfg = match cmd {
        Command::Sweep(c) => load(Mode::GapSweep, c)?,
        Command::EventFreq(c) => load(Mode::EventFrequency, c)?,
        Command::Tree(c) => load(Mode::TreeGap, c)?,
        Command::CapTable(c) => load(Mode::CapTable, c)?,
        Command::Certify(a) => {
            let mut cfg = load(Mode::CertifyOne, &a.common)?;
            if a.projector.is_some() {
                cfg.projector = a.projector.clone();
            }
            cfg.d = a.d.or(cfg.d);
            cfg.r = a.r.or(cfg.r);
            cfg.stream_index = a.stream.unwrap_or(cfg.stream_index);
            if !a.k.is_empty() {
                cfg.k_list = a.k.clone();
            }
            if a.common.format.is_none() && a.common.config.is_none() {
                cfg.format = OutputFormat::Json;
            }
            cfg
        }
    };
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match build_config(&cli.command) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let output = match run(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let emitted = match &cfg.out {
        Some(path) => output.write_to(path, cfg.format).map(|files| {
            for f in files {
                eprintln!("wrote {}", f.display());
            }
            if let Ok(Some(summary)) = output.summary_json() {
                print!("{summary}");
            }
        }),
        None => output
            .render(cfg.format)
            .and_then(|bytes| std::io::stdout().write_all(&bytes).map_err(Error::from)),
    };
    if let Err(e) = emitted {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    let failed = output.failed_trials();
    if failed > 0 {
        eprintln!("{failed} trial(s) failed; see the error column");
        return ExitCode::from(2);
    }
    ExitCode::SUCCESS
}
