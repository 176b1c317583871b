//! `bootstrap-lab`: command-line driver for the bootstrap-lab library.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use bootstrap_lab::{Error, SCHEMA_VERSION};

use crate::config::Usage;

#[derive(Debug, Parser)]
#[command(
    name = "bootstrap-lab",
    version,
    about = "Monotone cellular automata on Z^2: classification, droplets, spanning and Monte Carlo experiments"
)]
pub struct Cli {
    /// TOML config file; flags override its entries
    #[arg(
        long,
        global = true,
        value_name = "PATH",
        help_heading = "Global options"
    )]
    pub config: Option<PathBuf>,

    /// Write JSON output here instead of stdout; a directory receives <subcommand>-<seed>.json
    #[arg(
        long,
        global = true,
        value_name = "PATH",
        help_heading = "Global options"
    )]
    pub out: Option<PathBuf>,

    /// Worker threads for trial parallelism [env: BOOTSTRAP_LAB_WORKERS; default: available parallelism]
    #[arg(long, global = true, value_name = "N", help_heading = "Global options")]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify an update family by its stable directions and difficulties
    Classify(ClassifyArgs),
    /// Closure of a finite seed set on the plane, a torus or a window
    Closure(ClosureArgs),
    /// Run the spanning algorithm on a seed set
    Span(SpanArgs),
    /// Minimal Duarte region of a point set, or count droplet shapes of a given width
    Droplet(DropletArgs),
    /// Percolation frequency of a p-random set on the n x n torus
    Simulate(SimulateArgs),
    /// Bisection estimate of the critical probability on the n x n torus
    EstimatePc(EstimatePcArgs),
    /// Critical-probability estimates across families and torus sizes
    Sweep(SweepArgs),
    /// Stage-by-stage check of the rectangle growth construction
    Growth(GrowthArgs),
    /// Frequency that every row and column run of ceil(1/p^3) sites meets the random set
    Lines(LinesArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Classify(_) => "classify",
            Command::Closure(_) => "closure",
            Command::Span(_) => "span",
            Command::Droplet(_) => "droplet",
            Command::Simulate(_) => "simulate",
            Command::EstimatePc(_) => "estimate-pc",
            Command::Sweep(_) => "sweep",
            Command::Growth(_) => "growth",
            Command::Lines(_) => "lines",
        }
    }
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
pub struct ClassifyArgs {
    /// Builtin name (duarte, modified_duarte, r<k>) or inline JSON {"rules": [[[dx,dy],...],...]}
    #[arg(long)]
    pub family: Option<String>,
    /// Largest helper set tried per isolated stable direction [default: 3]
    #[arg(long)]
    pub max_helpers: Option<u32>,
    /// Half-width of the search window around the origin [default: 12]
    #[arg(long)]
    pub window_radius: Option<i64>,
    /// Report the difficulty of this direction only, given as "a,b"
    #[arg(long, value_name = "A,B")]
    pub direction: Option<String>,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
pub struct ClosureArgs {
    /// Builtin name or inline JSON family [default: duarte]
    #[arg(long)]
    pub family: Option<String>,
    /// Seed sites as JSON [[x,y],...], or @PATH to read them from a file
    #[arg(long)]
    pub seeds: Option<String>,
    /// Work on the n x n torus instead of the plane
    #[arg(long, value_name = "N")]
    pub torus: Option<usize>,
    /// Work in the window x0,y0,x1,y1 (inclusive corners) instead of the plane
    #[arg(long, value_name = "X0,Y0,X1,Y1")]
    pub window: Option<String>,
    /// Largest pad of the adaptive plane window [default: 16384]
    #[arg(long)]
    pub pad_cap: Option<i64>,
    /// Print the final state as a PBM image instead of JSON (torus or window only)
    #[arg(long)]
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub pbm: bool,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
pub struct SpanArgs {
    /// Builtin name or inline JSON family [default: duarte]
    #[arg(long)]
    pub family: Option<String>,
    /// Seed sites as JSON [[x,y],...], or @PATH to read them from a file
    #[arg(long)]
    pub seeds: Option<String>,
    /// Droplet parameter p, in (0, 1)
    #[arg(long)]
    pub p: Option<f64>,
    /// Droplet parameter epsilon, > 0
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Merge order: lexicographic, lowest-first or shuffled:<seed> [default: lexicographic]
    #[arg(long)]
    pub order: Option<String>,
    /// Largest pad of the adaptive closure windows [default: 16384]
    #[arg(long)]
    pub pad_cap: Option<i64>,
    /// Print the merge forest as a DOT graph instead of JSON
    #[arg(long)]
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub dot: bool,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
pub struct DropletArgs {
    /// Points as JSON [[x,y],...] (reals allowed), or @PATH
    #[arg(long)]
    pub points: Option<String>,
    /// Droplet parameter p, in (0, 1)
    #[arg(long)]
    pub p: Option<f64>,
    /// Droplet parameter epsilon, > 0
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Also count the distinct lattice droplets of this integer width
    #[arg(long, value_name = "W")]
    pub shapes: Option<u32>,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    /// Builtin name or inline JSON family [default: duarte]
    #[arg(long)]
    pub family: Option<String>,
    /// Torus side [default: 64]
    #[arg(long)]
    pub n: Option<usize>,
    /// Site density, in [0, 1]
    #[arg(long)]
    pub p: Option<f64>,
    /// Number of independent trials [default: 100]
    #[arg(long)]
    pub trials: Option<u64>,
    /// Master seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
pub struct EstimatePcArgs {
    /// Builtin name or inline JSON family [default: duarte]
    #[arg(long)]
    pub family: Option<String>,
    /// Torus side [default: 64]
    #[arg(long)]
    pub n: Option<usize>,
    /// Trials per bisection probe [default: 200]
    #[arg(long)]
    pub trials: Option<u64>,
    /// Stop when the bracket is narrower than this [default: 1/(4 ln n)]
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Master seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    /// Comma-separated families [default: duarte,modified_duarte]
    #[arg(long)]
    pub families: Option<String>,
    /// Comma-separated nondecreasing torus sides [default: 64,128,256]
    #[arg(long, value_name = "N,...")]
    pub n_list: Option<String>,
    /// Trials per bisection probe [default: 200]
    #[arg(long)]
    pub trials: Option<u64>,
    /// Bracket width for every estimate [default: 1/(4 ln n)]
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Master seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV table path [default: sweep-<seed>.csv]
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
pub struct GrowthArgs {
    /// Slack parameter; replaced by 1/ceil(1/epsilon) [default: 0.25]
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Site density [default: 0.15]
    #[arg(long)]
    pub p: Option<f64>,
    /// Trials per stage event [default: 2000]
    #[arg(long)]
    pub trials: Option<u64>,
    /// Master seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Largest window, in sites, any event may use [default: 67108864]
    #[arg(long)]
    pub max_sites: Option<u64>,
    /// CSV table path [default: growth-<seed>.csv]
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
pub struct LinesArgs {
    /// Torus side; must exceed 1/p^3 [default: 300]
    #[arg(long)]
    pub n: Option<usize>,
    /// Site density, in [0, 1]
    #[arg(long)]
    pub p: Option<f64>,
    /// Number of independent trials [default: 100]
    #[arg(long)]
    pub trials: Option<u64>,
    /// Master seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if let Some(core) = e.downcast_ref::<Error>() {
        return match core {
            Error::UnknownFamily(_)
            | Error::InvalidFamily(_)
            | Error::InvalidParameter(_)
            | Error::Precondition(_)
            | Error::ParamsMismatch => 2,
            e if e.is_budget() => 3,
            _ => 1,
        };
    }
    if e.downcast_ref::<Usage>().is_some() {
        2
    } else {
        1
    }
}

fn error_kind(e: &anyhow::Error) -> &'static str {
    match e.downcast_ref::<Error>() {
        Some(Error::UnknownFamily(_)) => "unknown_family",
        Some(Error::InvalidFamily(_)) => "invalid_family",
        Some(Error::InvalidParameter(_)) => "invalid_parameter",
        Some(Error::Precondition(_)) => "precondition",
        Some(Error::BudgetExceeded(_)) => "budget_exceeded",
        Some(Error::ParamsMismatch) => "params_mismatch",
        Some(Error::DegenerateBracket { .. }) => "degenerate_bracket",
        Some(Error::RefinementNotConverged { .. }) => "refinement_not_converged",
        Some(Error::InvariantViolation(_)) => "invariant_violation",
        None if e.downcast_ref::<Usage>().is_some() => "usage",
        None => "io",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = cli.command.name();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = exit_code(&e);
            let diag = serde_json::json!({
                "schema_version": SCHEMA_VERSION,
                "command": command,
                "error": error_kind(&e),
                "message": format!("{e:#}"),
                "exit_code": code,
            });
            eprintln!("{diag}");
            ExitCode::from(code)
        }
    }
}
