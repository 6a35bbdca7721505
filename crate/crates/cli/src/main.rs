mod commands;
mod input;
mod manifest;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use flatpop::NormVariant;

#[derive(Parser, Debug)]
#[command(name = "flatpop", version, about = "Structured population dynamics in the flat metric")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check a model against the standing assumptions and print the report.
    Validate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the particle solver and write a trajectory directory.
    Simulate(SimulateArgs),
    /// Flat distance between two measures.
    Distance {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, value_enum, default_value_t = Variant::Paper)]
        variant: Variant,
        /// Also solve the grid linear program with this node spacing.
        #[arg(long)]
        oracle_h: Option<f64>,
        /// Write the optimal test function values as CSV.
        #[arg(long)]
        witness: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Propagate a test function backwards and check the contraction bound.
    Dualcheck {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        phi: PathBuf,
        #[arg(long)]
        t: f64,
        /// start:end:step
        #[arg(long)]
        grid: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Long-time diagnostics of a trajectory.
    Asymptotics {
        #[arg(long)]
        traj: PathBuf,
        /// t_a:t_b window for the growth-rate fit.
        #[arg(long, default_value = "20:50")]
        window: String,
        #[arg(long, default_value_t = 8)]
        tail: usize,
        /// Output directory (default: <traj>/asymptotics).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Leading eigenpair of the finite-volume generator.
    Spectrum {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        xmax: f64,
        #[arg(long)]
        cells: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Weak-formulation residual of a trajectory.
    Weakcheck {
        #[arg(long)]
        traj: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Piecewise-linear test function (JSON), held fixed in time.
        #[arg(long)]
        phi: Vec<PathBuf>,
        /// Smooth tent center:half_width:height[:rate].
        #[arg(long)]
        tent: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render CSV columns as an SVG line chart.
    Plot {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "t")]
        x: String,
        #[arg(long, required = true)]
        y: Vec<String>,
        #[arg(long)]
        logy: bool,
        #[arg(long)]
        title: Option<String>,
    },
    /// Built-in end-to-end runs.
    Demo {
        #[arg(value_enum)]
        name: Demo,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        #[arg(long, default_value_t = 50.0)]
        t_end: f64,
    },
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Initial measure (JSON).
    #[arg(long, visible_alias = "init")]
    pub mu0: PathBuf,
    /// Solver configuration (JSON); flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub splitting: Option<flatpop::forward_solver::Splitting>,
    #[arg(long)]
    pub ode_substeps: Option<usize>,
    #[arg(long, visible_alias = "coalesce")]
    pub coalesce_radius: Option<f64>,
    #[arg(long)]
    pub prune: Option<f64>,
    #[arg(long)]
    pub coalesce_every: Option<usize>,
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
    #[arg(long)]
    pub max_particles: Option<usize>,
    /// Accept signed initial data.
    #[arg(long)]
    pub signed: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Variant {
    Paper,
    Classic,
}

impl From<Variant> for NormVariant {
    fn from(v: Variant) -> Self {
        match v {
            Variant::Paper => NormVariant::Paper,
            Variant::Classic => NormVariant::Classic,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Demo {
    Lotka,
    Extinction,
}

fn init_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("FLATPOP_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| anyhow::anyhow!("FLATPOP_THREADS = '{v}' is not a thread count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = init_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    let argv: Vec<String> = std::env::args().collect();
    match commands::run(cli.command, argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
