use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use qmalab_cli::gen::{generate, GenConfig};
use qmalab_cli::{run, ExperimentConfig, Suite};

/// Environment variable naming the default output directory.
const OUT_ENV: &str = "QMALAB_OUT";
const DEFAULT_OUT: &str = "qmalab-out";

#[derive(Parser)]
#[command(version, about = "Run qmalab invariant suites and emit reports")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run invariant suites and write reports.
    Run(RunArgs),
    /// Generate a corpus of random verifier circuits.
    Gen(GenArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Rewinding,
    C1,
    C2,
    Truncation,
    ProbTrunc,
    All,
}

#[derive(clap::Args)]
struct RunArgs {
    /// TOML configuration; missing keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory [default: config `output.dir`, then $QMALAB_OUT, then ./qmalab-out]
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "all")]
    suite: SuiteArg,
    /// Compare against the reports already in the output directory instead of writing.
    #[arg(long)]
    check_only: bool,
}

#[derive(clap::Args)]
struct GenArgs {
    #[arg(long, default_value_t = 16)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    ancilla_qubits: usize,
    #[arg(long, default_value_t = 2)]
    witness_qubits: usize,
    #[arg(long, default_value_t = 3)]
    layers: usize,
    /// Output directory [default: $QMALAB_OUT, then ./qmalab-out]
    #[arg(long)]
    out: Option<PathBuf>,
}

fn out_dir(flag: Option<PathBuf>, configured: Option<PathBuf>) -> PathBuf {
    flag.or(configured)
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run_suites(args),
        Command::Gen(args) => run_gen(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run_suites(args: RunArgs) -> anyhow::Result<ExitCode> {
    let cfg = match load_config(args.config.as_deref(), args.seed) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("{e}");
            return Ok(ExitCode::from(2));
        }
    };
    let suites: Vec<Suite> = match args.suite {
        SuiteArg::Rewinding => vec![Suite::Rewinding],
        SuiteArg::C1 => vec![Suite::C1],
        SuiteArg::C2 => vec![Suite::C2],
        SuiteArg::Truncation => vec![Suite::Truncation],
        SuiteArg::ProbTrunc => vec![Suite::ProbTrunc],
        SuiteArg::All => Suite::ALL.to_vec(),
    };
    let dir = out_dir(args.out, cfg.output.dir.clone());
    let artifacts = run(&cfg, &suites)?;

    for i in &artifacts.invariants {
        let status = match (i.holds, i.enforced) {
            (true, _) => "ok",
            (false, true) => "FAIL",
            (false, false) => "note",
        };
        println!(
            "{status:>4}  {}/{}: {:e} (limit {:e})",
            i.suite, i.name, i.observed, i.limit
        );
    }

    if args.check_only {
        let differing = artifacts.compare(&dir);
        if !differing.is_empty() {
            eprintln!("{} differs from this run: {}", dir.display(), differing.join(", "));
            return Ok(ExitCode::from(1));
        }
        println!("{} matches this run byte-for-byte", dir.display());
    } else {
        artifacts.write(&dir)?;
        println!("wrote {} files to {}", artifacts.files.len(), dir.display());
    }

    if let Some(f) = artifacts.first_failure() {
        eprintln!(
            "invariant failed: {}/{}: observed {:e} exceeds {:e}",
            f.suite, f.name, f.observed, f.limit
        );
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn load_config(
    path: Option<&Path>,
    seed: Option<u64>,
) -> Result<ExperimentConfig, qmalab_cli::ConfigError> {
    let mut cfg = match path {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = seed {
        cfg.run.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_gen(args: GenArgs) -> anyhow::Result<ExitCode> {
    let cfg = GenConfig {
        count: args.count,
        seed: args.seed,
        ancilla_qubits: args.ancilla_qubits,
        witness_qubits: args.witness_qubits,
        layers: args.layers,
        ..GenConfig::default()
    };
    let dir = out_dir(args.out, None);
    let files = generate(&cfg)?;
    std::fs::create_dir_all(&dir)?;
    for (name, bytes) in &files {
        std::fs::write(dir.join(name), bytes)?;
    }
    println!("wrote {} verifiers to {}", cfg.count, dir.display());
    Ok(ExitCode::SUCCESS)
}
