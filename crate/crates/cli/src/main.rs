mod commands;
mod config;
mod expr;
mod numeric;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

/// Failures surfaced to the user. Each maps to an exit code and a JSON reason.
#[derive(Debug)]
pub enum CliError {
    /// Malformed input (config file, operator file, flag value).
    Config { line: Option<usize>, col: Option<usize>, msg: String },
    Core(curvesolve::Error),
    Io(String),
    /// The command ran but declined to produce a result.
    Refused { code: u8, reason: String },
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Config { line: None, col: None, msg: msg.into() }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(curvesolve::Error::Tolerance { .. }) => 3,
            CliError::Refused { code, .. } => *code,
            _ => 1,
        }
    }

    fn to_json(&self) -> Value {
        let mut v = json!({ "status": "error", "exit_code": self.exit_code() });
        let reason = match self {
            CliError::Config { line, col, msg } => {
                if let Some(l) = line {
                    v["line"] = json!(l);
                }
                if let Some(c) = col {
                    v["column"] = json!(c);
                }
                match (line, col) {
                    (Some(l), Some(c)) => format!("line {l}, column {c}: {msg}"),
                    (Some(l), None) => format!("line {l}: {msg}"),
                    _ => msg.clone(),
                }
            }
            CliError::Core(e) => e.to_string(),
            CliError::Io(m) => m.clone(),
            CliError::Refused { reason, .. } => reason.clone(),
        };
        v["reason"] = json!(reason);
        v
    }
}

impl From<curvesolve::Error> for CliError {
    fn from(e: curvesolve::Error) -> Self {
        match e {
            curvesolve::Error::ParseAt { line, msg } => CliError::Config { line: Some(line), col: None, msg },
            e => CliError::Core(e),
        }
    }
}

/// What a command produced: a JSON report, an optional CSV table, and its exit code.
pub struct Output {
    pub report: Value,
    pub csv: Option<String>,
    pub exit: u8,
}

#[derive(Parser, Debug)]
#[command(name = "curvesolve", version, about = "Finite-cokernel certificates, averaged kernels and verified solution operators")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Seed for every random choice (falsifier trials, sample points).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Override the pass/fail tolerance of the command.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Worker threads for sample evaluation (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Directory receiving `<command>.json` and `<command>.csv`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Largest certificate degree searched.
    #[arg(long = "n0-max", global = true)]
    pub n0_max: Option<u32>,
}

#[derive(Args, Debug, Clone)]
pub struct OpArgs {
    /// Operator from the built-in zoo (aliases such as `killing` accepted).
    #[arg(long)]
    pub op: Option<String>,
    /// Operator in the line-oriented text format.
    #[arg(long = "op-file", conflicts_with = "op")]
    pub op_file: Option<PathBuf>,
    /// Spatial dimension.
    #[arg(long)]
    pub dim: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct WeightArgs {
    /// `bogovskii`, `conic` or `uniform`.
    #[arg(long, default_value = "bogovskii")]
    pub weight: String,
    /// Centre of the Bogovskii ball (default: origin).
    #[arg(long, allow_hyphen_values = true)]
    pub center: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    /// Axis of the conic cap (default: e1).
    #[arg(long, allow_hyphen_values = true)]
    pub axis: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    pub aperture: f64,
    #[arg(long, default_value_t = 8)]
    pub power: u32,
    /// Kernel source: `closed`, `ode` or `auto` (closed form when available).
    #[arg(long, default_value = "auto")]
    pub source: String,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide the finite-cokernel condition.
    Fc {
        #[command(flatten)]
        op: OpArgs,
        /// Random trials of the numerical falsifier.
        #[arg(long, default_value_t = 256)]
        trials: usize,
    },
    /// Build an augmented system and test complete integrability.
    Augment {
        /// Hand-built system for a zoo operator.
        #[arg(long, conflicts_with = "maximal")]
        special: Option<String>,
        /// Maximal jet system from an FC certificate of `--op`/`--op-file`.
        #[arg(long)]
        maximal: bool,
        #[command(flatten)]
        op: OpArgs,
        /// Spatial `B_i` entries, e.g. `B=(0,x1)` or `B2[1,1]=x1; B1[1,1]=0`.
        #[arg(long = "lower-order", allow_hyphen_values = true)]
        lower_order: Option<String>,
        /// Random points at which a spatial curvature is sampled.
        #[arg(long, default_value_t = 16)]
        samples: usize,
        #[arg(long, default_value_t = 256)]
        trials: usize,
    },
    /// Tabulate an averaged kernel.
    Kernel {
        #[command(flatten)]
        op: OpArgs,
        #[command(flatten)]
        weight: WeightArgs,
        /// Add closed-form columns and report the largest relative discrepancy.
        #[arg(long)]
        oracle: bool,
        /// Fixed second argument `y` (default: 0.05 in every coordinate).
        #[arg(long, allow_hyphen_values = true)]
        y: Option<String>,
        /// Box `lo,hi,n` sampled for `x`.
        #[arg(long, allow_hyphen_values = true, default_value = "-1.5,1.5,9")]
        grid: String,
        /// Fit the log-log decay of each row towards `y`.
        #[arg(long)]
        decay: bool,
        /// Direction of approach for `--decay` (default: a generic direction).
        #[arg(long, allow_hyphen_values = true)]
        theta: Option<String>,
    },
    /// Check the weak Green's identity at random points.
    Verify {
        #[command(flatten)]
        op: OpArgs,
        #[command(flatten)]
        weight: WeightArgs,
        #[arg(long, default_value_t = 3)]
        samples: usize,
        /// Quadrature refinement levels.
        #[arg(long)]
        levels: Option<usize>,
    },
    /// Print and check a flat cokernel basis.
    Cokernel {
        #[command(flatten)]
        op: OpArgs,
    },
    /// Solve `P u = f` for bump data given in a config file.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Remove the cokernel moments of `f` before solving.
        #[arg(long = "project-cokernel")]
        project_cokernel: bool,
    },
}

fn run(cli: &Cli) -> Result<(&'static str, Output), CliError> {
    if let Some(n) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
    }
    let g = &cli.global;
    Ok(match &cli.cmd {
        Command::Fc { op, trials } => ("fc", commands::fc(g, op, *trials)?),
        Command::Augment { special, maximal, op, lower_order, samples, trials } => (
            "augment",
            commands::augment(g, special.as_deref(), *maximal, op, lower_order.as_deref(), *samples, *trials)?,
        ),
        Command::Cokernel { op } => ("cokernel", commands::cokernel(op)?),
        Command::Kernel { op, weight, oracle, y, grid, decay, theta } => (
            "kernel",
            numeric::kernel(g, op, weight, *oracle, y.as_deref(), grid, *decay, theta.as_deref())?,
        ),
        Command::Verify { op, weight, samples, levels } => ("verify", numeric::verify(g, op, weight, *samples, *levels)?),
        Command::Solve { config, project_cokernel } => ("solve", numeric::solve(g, config, *project_cokernel)?),
    })
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn emit(g: &Global, name: &str, out: &Output) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(e.to_string());
    match &g.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(io)?;
            std::fs::write(dir.join(format!("{name}.json")), pretty(&out.report)).map_err(io)?;
            if let Some(csv) = &out.csv {
                std::fs::write(dir.join(format!("{name}.csv")), csv).map_err(io)?;
            }
            print!("{}", pretty(&out.report));
        }
        None => match &out.csv {
            Some(csv) => {
                print!("{csv}");
                eprint!("{}", pretty(&out.report));
            }
            None => print!("{}", pretty(&out.report)),
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(&cli).and_then(|(name, out)| emit(&cli.global, name, &out).map(|_| out.exit));
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprint!("{}", pretty(&e.to_json()));
            ExitCode::from(e.exit_code())
        }
    }
}
