mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;
use wittenlab::transforms::TransformSettings;
use wittenlab::Error;

use commands::{Failure, Sink};
use config::RunConfig;

const EXIT_OK: u8 = 0;
const EXIT_CONFIG: u8 = 1;
const EXIT_NONCONVERGENT: u8 = 2;

#[derive(Parser)]
#[command(name = "wittenlab", version, about = "Spectral shift functions and Witten indices of d/dt + A(t)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.directory`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the number of logical cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for randomized suites (overrides `seed` in the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Witten index by all three routes, with report and tables.
    Witten,
    /// Spectral shift function of the asymptotes and counting identities.
    Ssf,
    /// Arcsine transform of a step function.
    Pushnitski,
    /// Abel-type transform against its closed form.
    Abel,
    /// Rank-one perturbation scan and spectral classification.
    Rankone,
    /// Fredholm criterion for the asymptotes.
    Fredholm,
    /// Resolvent trace formula on the truncated model.
    TraceCheck,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Witten => "witten",
            Command::Ssf => "ssf",
            Command::Pushnitski => "pushnitski",
            Command::Abel => "abel",
            Command::Rankone => "rankone",
            Command::Fredholm => "fredholm",
            Command::TraceCheck => "trace-check",
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'static str,
    version: &'static str,
    seed: u64,
    threads: usize,
    exit_code: u8,
    config: &'a RunConfig,
    quadrature: TransformSettings,
    artifacts: Vec<String>,
    summary: String,
    timings_ms: Timings,
}

#[derive(Serialize)]
struct Timings {
    total: f64,
}

fn exit_for(e: &Error) -> u8 {
    match e {
        Error::NoConvergence { .. } | Error::Quadrature(_) | Error::DivergentTail(_) => EXIT_NONCONVERGENT,
        _ => EXIT_CONFIG,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    ExitCode::from(run(cli))
}

fn run(cli: Cli) -> u8 {
    let cfg = match &cli.config {
        Some(p) => match config::load(p) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("{e}");
                return EXIT_CONFIG;
            }
        },
        None => RunConfig::default(),
    };
    let threads = cli.threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 {
        eprintln!("config error: --threads must be at least 1");
        return EXIT_CONFIG;
    }
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
        eprintln!("could not start worker pool: {e}");
        return EXIT_CONFIG;
    }
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().and_then(|o| o.directory.clone()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("wittenlab-out"));
    let mut sink = match Sink::new(&out) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{}: {e}", out.display());
            return EXIT_CONFIG;
        }
    };

    let start = Instant::now();
    let result = match cli.command {
        Command::Witten => commands::witten(&cfg, &mut sink),
        Command::Ssf => commands::ssf(&cfg, &mut sink, seed),
        Command::Pushnitski => commands::pushnitski(&cfg, &mut sink),
        Command::Abel => commands::abel(&cfg, &mut sink),
        Command::Rankone => commands::rankone(&cfg, &mut sink),
        Command::Fredholm => commands::fredholm(&cfg, &mut sink),
        Command::TraceCheck => commands::trace_check(&cfg, &mut sink),
    };
    let (code, summary) = match result {
        Ok(o) => {
            println!("{}", o.summary);
            (if o.converged { EXIT_OK } else { EXIT_NONCONVERGENT }, o.summary)
        }
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            (EXIT_CONFIG, m)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            (exit_for(&e), e.to_string())
        }
        Err(Failure::Io(m)) => {
            eprintln!("i/o error: {m}");
            (EXIT_CONFIG, m)
        }
    };
    let manifest = Manifest {
        command: cli.command.name(),
        version: env!("CARGO_PKG_VERSION"),
        seed,
        threads,
        exit_code: code,
        config: &cfg,
        quadrature: cfg.transform_settings(),
        artifacts: sink.written.clone(),
        summary,
        timings_ms: Timings { total: start.elapsed().as_secs_f64() * 1e3 },
    };
    if let Err(e) = sink.json("manifest.json", &manifest) {
        eprintln!("could not write manifest: {e}");
        return EXIT_CONFIG;
    }
    code
}
