use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bcast_core::commands::{
    cmd_approx, cmd_hardness, cmd_solve, cmd_tensor, export_lp, LpForm, SolveOptions, SolveWhich, DEFAULT_CHECK_TOL,
};
use bcast_core::graph::DEFAULT_ENUMERATION_CAP;
use bcast_core::io::{load_channel, resolve_output};
use bcast_core::lp::Objective;
use bcast_core::{Error, Report, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "bcast", version, about = "Broadcast channel coding: exact, non-signaling and approximate values")]
struct Cli {
    /// Worker threads for parallel solvers; defaults to all cores.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Exit with status 4 if any reported inequality check fails.
    #[arg(long, global = true)]
    verify: bool,
    /// Write the report here instead of stdout; relative paths use $BCAST_WORKDIR.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Also write a tab-separated table of the report.
    #[arg(long, global = true)]
    table: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum WhichArg {
    Joint,
    Sum,
    Ns,
    NsSum,
    NsDec,
    All,
}

impl From<WhichArg> for SolveWhich {
    fn from(w: WhichArg) -> Self {
        match w {
            WhichArg::Joint => SolveWhich::Joint,
            WhichArg::Sum => SolveWhich::Sum,
            WhichArg::Ns => SolveWhich::Ns,
            WhichArg::NsSum => SolveWhich::NsSum,
            WhichArg::NsDec => SolveWhich::NsDec,
            WhichArg::All => SolveWhich::All,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    channel: PathBuf,
    #[arg(long)]
    k1: usize,
    #[arg(long)]
    k2: usize,
    #[arg(long, value_enum, default_value = "all")]
    which: WhichArg,
    /// Exact rational arithmetic.
    #[arg(long)]
    exact: bool,
    /// Also solve the full non-signaling program and compare.
    #[arg(long)]
    full_ns: bool,
    /// Cap on enumerated candidates.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    cap: u128,
    /// Tolerance for inequality checks.
    #[arg(long, default_value_t = DEFAULT_CHECK_TOL)]
    tol: f64,
    /// Include wall-clock timings in the report.
    #[arg(long)]
    timings: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Joint,
    Sum,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormArg {
    Compact,
    Full,
}

#[derive(Subcommand)]
enum Command {
    /// Exact and relaxed success probabilities of a channel.
    Solve(SolveArgs),
    /// Same quantities for the n-fold tensor power.
    Tensor {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        solve: SolveArgs,
    },
    /// Approximate code for a deterministic channel.
    Approx {
        channel: PathBuf,
        #[arg(long)]
        k1: usize,
        #[arg(long)]
        k2: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = bcast_core::approx::DEFAULT_SAMPLES)]
        samples: usize,
    },
    /// Value-query experiment on a hardness instance.
    Hardness {
        #[arg(long)]
        k1: usize,
        #[arg(long, default_value_t = 0.25)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// singletons, random[:SIZE], bisection or list:PATH
        #[arg(long, default_value = "random")]
        strategy: String,
        #[arg(long, default_value_t = 1000)]
        budget: usize,
        /// Write the query log as JSON lines.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Print a non-signaling program in LP format.
    ExportLp {
        channel: PathBuf,
        #[arg(long)]
        k1: usize,
        #[arg(long)]
        k2: usize,
        #[arg(long, value_enum, default_value = "joint")]
        objective: ObjectiveArg,
        #[arg(long, value_enum, default_value = "compact")]
        form: FormArg,
    },
}

fn options(a: &SolveArgs, verify: bool) -> SolveOptions {
    SolveOptions { cap: a.cap, tol: a.tol, exact: a.exact, verify, full_ns: a.full_ns, timings: a.timings }
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => {
            let p = resolve_output(p);
            std::fs::write(&p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Result<Option<Report>> {
    let report = match &cli.command {
        Command::Solve(a) => {
            cmd_solve(&load_channel(&a.channel)?, a.k1, a.k2, a.which.into(), &options(a, cli.verify))?
        }
        Command::Tensor { n, solve: a } => {
            cmd_tensor(&load_channel(&a.channel)?, *n, a.k1, a.k2, a.which.into(), &options(a, cli.verify))?
        }
        Command::Approx { channel, k1, k2, seed, samples } => {
            cmd_approx(&load_channel(channel)?, *k1, *k2, *seed, *samples)?
        }
        Command::Hardness { k1, delta, seed, strategy, budget, log } => {
            let (report, qlog) = cmd_hardness(*k1, *delta, *seed, strategy, *budget)?;
            if let Some(path) = log {
                let path = resolve_output(path);
                let file = std::fs::File::create(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                qlog.write_jsonl(std::io::BufWriter::new(file))?;
            }
            report
        }
        Command::ExportLp { channel, k1, k2, objective, form } => {
            let objective = match objective {
                ObjectiveArg::Joint => Objective::Joint,
                ObjectiveArg::Sum => Objective::Sum,
            };
            let form = match form {
                FormArg::Compact => LpForm::Compact,
                FormArg::Full => LpForm::Full,
            };
            write_text(cli.output.as_deref(), &export_lp(&load_channel(channel)?, *k1, *k2, objective, form)?)?;
            return Ok(None);
        }
    };
    write_text(cli.output.as_deref(), &report.to_canonical())?;
    if let Some(table) = &cli.table {
        let path = resolve_output(table);
        std::fs::write(&path, report.to_table()).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(Some(report))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(Some(report)) if cli.verify && !report.all_pass() => {
            for c in report.failures() {
                eprintln!("check failed: {}", c.describe());
            }
            ExitCode::from(4)
        }
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
