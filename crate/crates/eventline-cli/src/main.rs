use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use eventline::io::{run, DataSource, OutputFormat, RunConfig, RunMode, EXIT_ERROR};
use eventline::repair::{Mode, DEFAULT_CAP};

#[derive(Parser)]
#[command(name = "eventline", version, about = "Infer event timelines from timestamped facts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Infer timelines, or check a candidate timeline.
    Run(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Naive,
    Consistent,
    Preferred,
    Cautious,
    Check,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Consistent,
    Preferred,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Tsv,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Rule specification file.
    #[arg(long)]
    rules: PathBuf,
    /// Fact file (`.facts`) or CSV file; repeatable.
    #[arg(long, required = true)]
    data: Vec<PathBuf>,
    /// Mapping file for a CSV input; matched in order to the `.csv` data files.
    #[arg(long)]
    map: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "naive")]
    mode: ModeArg,
    /// Candidate timeline (JSON) for check mode.
    #[arg(long)]
    check: Option<PathBuf>,
    /// Which timelines the candidate is checked against.
    #[arg(long, value_enum, default_value = "consistent")]
    check_kind: KindArg,
    /// Current time; ongoing intervals get a `clamped_end` of N+1.
    #[arg(long)]
    now: Option<u64>,
    /// Bound on consistency checks during repair enumeration.
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: usize,
    /// Emit at most this many models.
    #[arg(long)]
    max_models: Option<usize>,
    /// Run per entity, keyed by the observation argument at this 0-based position.
    #[arg(long)]
    partition_by: Option<usize>,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
    /// Write the result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn sources(data: Vec<PathBuf>, maps: Vec<PathBuf>) -> Result<Vec<DataSource>, String> {
    let mut maps = maps.into_iter();
    let out = data
        .into_iter()
        .map(|path| {
            if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
                let map = maps
                    .next()
                    .ok_or_else(|| format!("{}: CSV input needs a --map file", path.display()))?;
                Ok(DataSource::Csv { path, map })
            } else {
                Ok(DataSource::Facts(path))
            }
        })
        .collect::<Result<Vec<_>, String>>()?;
    if maps.next().is_some() {
        return Err("more --map files than CSV inputs".into());
    }
    Ok(out)
}

fn config(args: RunArgs) -> Result<(RunConfig, Option<PathBuf>), String> {
    let mode = match args.mode {
        ModeArg::Naive => RunMode::Timeline(Mode::Naive),
        ModeArg::Consistent => RunMode::Timeline(Mode::Consistent),
        ModeArg::Preferred => RunMode::Timeline(Mode::Preferred),
        ModeArg::Cautious => RunMode::Timeline(Mode::Cautious),
        ModeArg::Check => RunMode::Check,
    };
    let mut cfg = RunConfig::new(args.rules, sources(args.data, args.map)?, mode);
    cfg.check_target_path = args.check;
    cfg.check_kind = match args.check_kind {
        KindArg::Consistent => Mode::Consistent,
        KindArg::Preferred => Mode::Preferred,
    };
    cfg.now = args.now;
    cfg.cap = args.cap;
    cfg.max_models = args.max_models;
    cfg.partition_by = args.partition_by;
    cfg.output_format = match args.format {
        FormatArg::Json => OutputFormat::Json,
        FormatArg::Tsv => OutputFormat::Tsv,
    };
    Ok((cfg, args.out))
}

fn main() -> ExitCode {
    let Command::Run(args) = Cli::parse().command;
    let (cfg, out) = match config(args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_ERROR as u8);
        }
    };
    let result = run(&cfg);
    eprint!("{}", result.stderr);
    match out {
        Some(path) if !result.stdout.is_empty() => {
            if let Err(e) = std::fs::write(&path, &result.stdout) {
                eprintln!("error: {}: {e}", path.display());
                return ExitCode::from(EXIT_ERROR as u8);
            }
        }
        _ => print!("{}", result.stdout),
    }
    ExitCode::from(result.code as u8)
}
