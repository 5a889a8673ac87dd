use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use agog_core::config::{keys_help, ExperimentConfig, OutputFormat, Overrides};
use agog_core::harness::{compare_csv, render_outputs, run_experiment, write_files};
use agog_core::verify::{run_suite, Battery, Suite};
use agog_core::Error;

const OK: u8 = 0;
const VERIFY_FAILED: u8 = 1;
const DIVERGED: u8 = 2;
const CONFIG_ERROR: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "agog", version, about = "Minimax solvers and benchmark runs", after_long_help = keys_help())]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Run a single seed instead of `run.seeds`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Iterations; replaces `run.iterations` and `run.query_budget`.
    #[arg(long = "K", global = true)]
    iterations: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every algorithm and seed of `--config`.
    Solve,
    /// Run a self-contained verification suite and print a JSON report.
    Verify {
        #[arg(value_enum)]
        suite: SuiteArg,
    },
    /// Merge runs of several configs on one problem into a comparison CSV.
    Compare {
        /// Configs to merge, in addition to `--config`.
        configs: Vec<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SuiteArg {
    Bounds,
    Reductions,
    Accounting,
    Stochastic,
}

impl Cli {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            iterations: self.iterations,
            out_dir: self.out_dir.clone(),
            format: self.format.map(|f| match f {
                Format::Csv => OutputFormat::Csv,
                Format::Json => OutputFormat::Json,
            }),
        }
    }

    fn load(&self, path: &Path) -> Result<ExperimentConfig, Error> {
        let mut cfg = ExperimentConfig::from_path(path)?;
        cfg.apply(&self.overrides())?;
        Ok(cfg)
    }
}

fn fail(e: &Error) -> u8 {
    eprintln!("agog: {e}");
    match e {
        Error::Diverged { .. } => DIVERGED,
        Error::Io(_) => 1,
        _ => CONFIG_ERROR,
    }
}

/// Writes the partial trace of a diverged run next to where its full trace
/// would have gone.
fn write_partial(cfg: &ExperimentConfig, e: &Error) {
    if let Error::Diverged { partial, .. } = e {
        let name = format!("{}_seed{}.csv", partial.metadata.algorithm, partial.metadata.seed);
        let body = match partial.to_csv_string() {
            Ok(b) => b,
            Err(_) => return,
        };
        if let Err(err) = write_files(&cfg.output.dir, &[(name, body)]) {
            eprintln!("agog: could not write partial trace: {err}");
        }
    }
}

fn solve(cli: &Cli) -> u8 {
    let Some(path) = &cli.config else {
        eprintln!("agog: solve needs --config");
        return CONFIG_ERROR;
    };
    let cfg = match cli.load(path) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    let out = match run_experiment(&cfg) {
        Ok(o) => o,
        Err(e) => {
            write_partial(&cfg, &e);
            return fail(&e);
        }
    };
    match render_outputs(&cfg, &out).and_then(|f| write_files(&cfg.output.dir, &f)) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            OK
        }
        Err(e) => fail(&e),
    }
}

fn verify(cli: &Cli, suite: SuiteArg) -> u8 {
    let suite = match suite {
        SuiteArg::Bounds => Suite::Bounds,
        SuiteArg::Reductions => Suite::Reductions,
        SuiteArg::Accounting => Suite::Accounting,
        SuiteArg::Stochastic => Suite::Stochastic,
    };
    let report = match run_suite(suite, &Battery::default()) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("agog: {e}");
            return VERIFY_FAILED;
        }
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    print!("{json}");
    if let Some(dir) = &cli.out_dir {
        let name = format!("verify_{}.json", serde_json::to_value(suite).unwrap().as_str().unwrap());
        if let Err(e) = write_files(dir, &[(name, json)]) {
            return fail(&e);
        }
    }
    for c in report.checks.iter().filter(|c| !c.passed) {
        eprintln!("FAILED {}: measured {} against {} ({})", c.name, c.measured, c.threshold, c.detail);
    }
    if report.passed {
        OK
    } else {
        VERIFY_FAILED
    }
}

fn compare(cli: &Cli, extra: &[PathBuf]) -> u8 {
    let paths: Vec<&PathBuf> = cli.config.iter().chain(extra).collect();
    if paths.is_empty() {
        eprintln!("agog: compare needs at least one config");
        return CONFIG_ERROR;
    }
    let mut cfgs = Vec::new();
    for p in &paths {
        match cli.load(p) {
            Ok(c) => cfgs.push(c),
            Err(e) => {
                eprintln!("agog: {}: {e}", p.display());
                return CONFIG_ERROR;
            }
        }
    }
    if let Some(i) = cfgs.iter().position(|c| c.problem != cfgs[0].problem) {
        eprintln!(
            "agog: `problem`: {} and {} describe different problems",
            paths[0].display(),
            paths[i].display()
        );
        return CONFIG_ERROR;
    }
    let mut traces = Vec::new();
    for cfg in &cfgs {
        match run_experiment(cfg) {
            Ok(o) => traces.extend(o.traces()),
            Err(e) => {
                write_partial(cfg, &e);
                return fail(&e);
            }
        }
    }
    let dir = cli.out_dir.clone().unwrap_or_else(|| cfgs[0].output.dir.clone());
    match compare_csv(&traces).and_then(|body| write_files(&dir, &[("compare.csv".into(), body)])) {
        Ok(paths) => {
            println!("{}", paths[0].display());
            OK
        }
        Err(e) => fail(&e),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("agog: --threads: {e}");
            return ExitCode::from(CONFIG_ERROR);
        }
    }
    let code = match &cli.command {
        Command::Solve => solve(&cli),
        Command::Verify { suite } => verify(&cli, *suite),
        Command::Compare { configs } => compare(&cli, configs),
    };
    ExitCode::from(code)
}
