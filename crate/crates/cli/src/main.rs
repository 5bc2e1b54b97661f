use std::io::{self, Write};
use std::path::Path;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

#[derive(Parser, Debug)]
#[command(name = "mmodel", version, about = "Metamath-style verifier and finite model checker")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Args, Debug, Clone)]
pub struct Opts {
    /// Tab-separated records instead of the human report.
    #[arg(long, global = true)]
    pub porcelain: bool,
    /// Rename variables declared with several typecodes instead of failing.
    #[arg(long, global = true)]
    pub repair_multityped: bool,
    /// Longest expression considered by closure and ambiguity search.
    #[arg(long, global = true, default_value_t = 12, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_len: u64,
    /// Closure rounds.
    #[arg(long, global = true, default_value_t = 6, value_parser = clap::value_parser!(u64).range(1..))]
    pub fuel: u64,
    /// Tree depth for the grammar round-trip check.
    #[arg(long, global = true, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
    pub depth: u64,
    /// Search steps per self-model query.
    #[arg(long, global = true, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub budget: u64,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check every proof in a database.
    Verify { db: String },
    /// Classify the grammar induced by the syntax axioms.
    Grammar { db: String },
    /// Check that a finite model satisfies every axiom.
    ModelCheck { db: String, model: String },
    /// Evaluate an expression at one valuation, e.g. `--at ph=T`.
    ModelEval {
        db: String,
        model: String,
        expr: String,
        #[arg(long = "at", value_name = "VAR=ELEM")]
        at: Vec<String>,
    },
    /// Is an expression true (defined at every valuation) in a model?
    Truth { db: String, model: String, expr: String },
    /// Does the model separate one axiom from the rest?
    Independence { db: String, model: String, axiom: String },
    /// Bounded forward closure of the axioms.
    Closure {
        db: String,
        /// Extra hypotheses.
        #[arg(long = "hyp", value_name = "EXPR")]
        hyps: Vec<String>,
        /// Treat every pair of variables as distinct.
        #[arg(long)]
        all_dv: bool,
        /// Only report whether this expression is reached.
        #[arg(long)]
        goal: Option<String>,
    },
    /// Provability in the system viewed as a model of itself.
    Selfmodel {
        db: String,
        /// Object-level expression over variables like `wff0`.
        expr: Option<String>,
        /// Spot-check instances of a hypothesis-free assertion.
        #[arg(long = "spotcheck", value_name = "LABEL")]
        spotcheck: Vec<String>,
        #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..))]
        samples: u64,
        /// Tree depth of sampled values.
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
        sample_depth: u64,
    },
}

pub enum Outcome {
    Pass,
    Fail,
}

/// Reads a file, falling back to the bundled corpus by file name.
pub fn read_input(path: &str) -> Result<String, String> {
    match std::fs::read_to_string(path) {
        Ok(s) => Ok(s),
        Err(e) => {
            let name = Path::new(path).file_name().and_then(|n| n.to_str()).unwrap_or(path);
            mmodel_core::corpus::bundled(name).map(str::to_string).ok_or_else(|| format!("{path}: {e}"))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let o = &cli.opts;
    let r = match &cli.command {
        Command::Verify { db } => commands::verify(o, db, &mut out),
        Command::Grammar { db } => commands::grammar(o, db, &mut out),
        Command::ModelCheck { db, model } => commands::model_check(o, db, model, &mut out),
        Command::ModelEval { db, model, expr, at } => commands::model_eval(o, db, model, expr, at, &mut out),
        Command::Truth { db, model, expr } => commands::truth(o, db, model, expr, &mut out),
        Command::Independence { db, model, axiom } => commands::independence(o, db, model, axiom, &mut out),
        Command::Closure { db, hyps, all_dv, goal } => {
            commands::closure(o, db, hyps, *all_dv, goal.as_deref(), &mut out)
        }
        Command::Selfmodel { db, expr, spotcheck, samples, sample_depth } => {
            commands::selfmodel(o, db, expr.as_deref(), spotcheck, *samples as usize, *sample_depth as usize, &mut out)
        }
    };
    let _ = out.flush();
    match r {
        Ok(Outcome::Pass) => ExitCode::from(0),
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
