use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use checkmark_cli::{load_config, run, Benchmark, Command, RunConfig, SweepParameter};

/// Optimal certification menus for a content platform.
#[derive(Parser, Debug)]
#[command(name = "checkmark", version)]
struct Args {
    /// Configuration file; the linear running example when omitted.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output.dir`.
    #[arg(short, long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Optimal mechanism on the type grid.
    Solve,
    /// A restricted benchmark mechanism.
    Benchmark {
        #[arg(value_enum)]
        kind: BenchKind,
    },
    /// Comparative statics over one parameter.
    Sweep {
        #[arg(value_enum)]
        parameter: Param,
        /// Comma-separated increasing values.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
    },
    /// Optimum against enforced perfect certification.
    ComparePerfect,
    /// Per-type engagement as the view cost vanishes.
    Limits {
        /// Comma-separated decreasing values of gamma.
        #[arg(long, value_delimiter = ',')]
        gammas: Option<Vec<f64>>,
    },
    /// Data behind the figures, on a grid of virtual values.
    Figures,
    /// Brute-force cross-checks of the solver.
    Verify {
        #[arg(long, default_value_t = 200)]
        probes: usize,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum BenchKind {
    Planner,
    Single,
    TwoCert,
    Perfect,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Param {
    Gamma,
    Kappa,
    Alpha,
    B,
    Z,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mut rc = match &args.config {
        Some(path) => match load_config(path) {
            Ok(rc) => rc,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
        None => RunConfig::running_example(),
    };
    if let Some(out) = args.out {
        rc.output_dir = out;
    }
    let cmd = match args.command {
        Cmd::Solve => Command::Solve,
        Cmd::Benchmark { kind } => Command::Benchmark(match kind {
            BenchKind::Planner => Benchmark::Planner,
            BenchKind::Single => Benchmark::Single,
            BenchKind::TwoCert => Benchmark::TwoCert,
            BenchKind::Perfect => Benchmark::Perfect,
        }),
        Cmd::Sweep { parameter, values } => Command::Sweep {
            parameter: match parameter {
                Param::Gamma => SweepParameter::Gamma,
                Param::Kappa => SweepParameter::Kappa,
                Param::Alpha => SweepParameter::Alpha,
                Param::B => SweepParameter::LossB,
                Param::Z => SweepParameter::AddictionZ,
            },
            values,
        },
        Cmd::ComparePerfect => Command::ComparePerfect,
        Cmd::Limits { gammas } => Command::Limits { gammas },
        Cmd::Figures => Command::Figures,
        Cmd::Verify { probes } => Command::Verify { probes },
    };

    match run(&cmd, &rc) {
        Ok(report) => {
            for line in &report.lines {
                println!("{line}");
            }
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                for f in &report.failures {
                    eprintln!("violation: {f}");
                }
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
