mod commands;
mod emit;
mod problem;
mod verify;

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{Clause, Mode, Outcome, Overrides, Settings, Status, Task};
use problem::ProblemFile;

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Io(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

#[derive(Parser)]
#[command(name = "kcone", version, about = "Cone analysis of polynomial maps along curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Problem file (JSON).
    file: PathBuf,
    /// Blow-up shift; chosen from the gate when omitted.
    #[arg(long)]
    shift: Option<usize>,
    /// Smallness threshold for the gates.
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    newton_tol: Option<f64>,
    /// Upper bound for the surjectivity order search.
    #[arg(long)]
    max_k: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long)]
    grid_min: Option<f64>,
    #[arg(long)]
    grid_max: Option<f64>,
    /// Grid points per sign.
    #[arg(long)]
    grid_points: Option<usize>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Filtration, order and cone decomposition.
    Analyze(Common),
    /// Route gates for the chosen shift.
    Gate(Common),
    /// Solve the blown-up system and refine the curve.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Route name, e.g. `corollary-1` or `corollary-4(i=2)`.
        #[arg(long)]
        route: Option<String>,
        /// Kernel coordinates, comma separated.
        #[arg(long, value_delimiter = ',')]
        w: Option<Vec<String>>,
    },
    /// Level-set samples as CSV.
    Levelset {
        #[command(flatten)]
        common: Common,
        /// CSV output path; stdout when omitted.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Lattice points per kernel coordinate.
        #[arg(long, default_value_t = 5)]
        lattice: usize,
        /// Lattice points per level coordinate.
        #[arg(long, default_value_t = 1)]
        phi_lattice: usize,
    },
    /// Multiplicity and half-cone degree signs.
    Degree(Common),
    /// Milnor number from per-curve orders.
    Milnor {
        /// Problem file supplying the order of the map.
        file: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', required = true)]
        ks: Vec<usize>,
        #[arg(long)]
        ord: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Randomized perturbation experiments.
    Perturb {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        clause: Clause,
        /// Minimum tensor degree (clause i) or curve order (clause ii).
        #[arg(long, default_value_t = 1)]
        order: u32,
        #[arg(long, default_value = "1/1000")]
        alpha: String,
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Perturb around the refined curve instead of the input curve.
        #[arg(long)]
        refine: bool,
    },
    /// Recompute a stored report and compare.
    Verify {
        report: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string())),
    }
}

fn run_task(common: &Common, task: Task) -> Result<Outcome, CliError> {
    let file = ProblemFile::from_json(&read(&common.file)?)?;
    let overrides = Overrides {
        mode: common.mode,
        shift: common.shift,
        eta: common.eta,
        newton_tol: common.newton_tol,
        max_k: common.max_k,
        grid_min: common.grid_min,
        grid_max: common.grid_max,
        grid_points: common.grid_points,
    };
    let settings = Settings::resolve(&file.options, &overrides)?;
    commands::execute(&task, &file, &settings)
}

fn run(cli: Cli) -> Result<Status, CliError> {
    let (outcome, out, csv_path, csv_to_stdout) = match cli.command {
        Command::Analyze(c) => (run_task(&c, Task::Analyze)?, c.out, None, false),
        Command::Gate(c) => (run_task(&c, Task::Gate)?, c.out, None, false),
        Command::Degree(c) => (run_task(&c, Task::Degree)?, c.out, None, false),
        Command::Solve { common, route, w } => (run_task(&common, Task::Solve { route, w })?, common.out, None, false),
        Command::Levelset { common, csv, lattice, phi_lattice } => {
            let outcome = run_task(&common, Task::Levelset { lattice, phi_lattice })?;
            let to_stdout = csv.is_none();
            (outcome, common.out, csv, to_stdout)
        }
        Command::Perturb { common, clause, order, alpha, count, seed, refine } => {
            (run_task(&common, Task::Perturb { clause, order, alpha, count, seed, refine })?, common.out, None, false)
        }
        Command::Milnor { file, ks, ord, out } => {
            let problem = match &file {
                Some(p) => Some(ProblemFile::from_json(&read(p)?)?),
                None => None,
            };
            (commands::milnor(&ks, ord, problem.as_ref())?, out, None, false)
        }
        Command::Verify { report, out } => (verify::verify(&read(&report)?)?, out, None, false),
    };
    let json = serde_json::to_string_pretty(&outcome.report).map_err(|e| CliError::Io(e.to_string()))? + "\n";
    if let Some(csv) = &outcome.csv {
        if csv_to_stdout {
            write(None, csv)?;
        } else {
            write(csv_path.as_deref(), csv)?;
        }
    }
    if !(csv_to_stdout && out.is_none()) {
        write(out.as_deref(), &json)?;
    }
    Ok(outcome.status)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Negative) => ExitCode::from(3),
        Err(e) => {
            eprintln!("kcone: {e}");
            ExitCode::from(2)
        }
    }
}
