mod commands;
mod expr;
mod output;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(
    name = "gw-minimax",
    version,
    about = "Minimax recursions on Galton-Watson trees"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Offspring law: text form (e.g. `finite:1=0.45,3=0.55`), inline JSON, or a file holding either.
    #[arg(long)]
    pub dist: String,
    /// Output file (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrecisionArg {
    Double,
    Extended,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fixed points of f, their stability, and the limit law of the root value.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1e-11)]
        tol: f64,
        /// Sign-change grid for the root search.
        #[arg(long, default_value_t = 10_000)]
        grid: usize,
    },
    /// Table of (x, f(x) - x) on an even grid.
    Curve {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1000)]
        grid: usize,
    },
    /// Sweep a one-parameter family; `{expr}` in the template is evaluated with parameter `p`.
    Scan {
        /// Template such as `finite:1={p},3={1-p}`.
        #[arg(long)]
        family: String,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long)]
        step: f64,
        #[arg(long, default_value_t = 4000)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Monte Carlo of the root value, compared with the exact recursion.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        depth: u32,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// `uniform`, `bernoulli:x` or `bivariate:x` (leaves equal 1 with probability 1 - x).
        #[arg(long, default_value = "uniform")]
        boundary: String,
        #[arg(long, default_value_t = gw_minimax::mcsim::DEFAULT_NODE_BUDGET)]
        budget: u64,
        /// Alpha-beta cutoffs (uniform or Bernoulli leaves only).
        #[arg(long)]
        pruned: bool,
        /// Points of the CDF comparison table.
        #[arg(long, default_value_t = 100)]
        grid: usize,
    },
    /// Rescaled fluctuations around an atom; the regime is picked from f'(q).
    Scaling {
        #[command(flatten)]
        common: Common,
        /// Fixed point to study (nearest one is used); defaults to the first unstable one.
        #[arg(long)]
        at: Option<f64>,
        #[arg(long, default_value_t = 200)]
        grid: usize,
        #[arg(long, value_enum, default_value_t = PrecisionArg::Double)]
        precision: PrecisionArg,
        /// Depth n of the exact-sampling check in the infinite-derivative regime (0 skips it).
        #[arg(long, default_value_t = 0)]
        depth: u32,
        #[arg(long, default_value_t = 20_000)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Endogeny at a fixed point via the bivariate map h.
    Endogeny {
        #[command(flatten)]
        common: Common,
        /// Fixed point; defaults to every interior fixed point.
        #[arg(long)]
        x: Option<f64>,
        /// Depth of an optional bivariate Monte Carlo check (even; 0 skips it).
        #[arg(long, default_value_t = 0)]
        depth: u32,
        #[arg(long, default_value_t = 20_000)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze { common, tol, grid } => commands::analyze(&common, tol, grid),
        Command::Curve { common, grid } => commands::curve(&common, grid),
        Command::Scan {
            family,
            from,
            to,
            step,
            grid,
            out,
            format,
        } => commands::scan(&family, from, to, step, grid, out.as_deref(), format),
        Command::Simulate {
            common,
            depth,
            samples,
            seed,
            boundary,
            budget,
            pruned,
            grid,
        } => commands::simulate(
            &common,
            commands::SimArgs {
                depth,
                samples,
                seed,
                boundary,
                budget,
                pruned,
                grid,
            },
        ),
        Command::Scaling {
            common,
            at,
            grid,
            precision,
            depth,
            samples,
            seed,
        } => commands::scaling(&common, at, grid, precision, depth, samples, seed),
        Command::Endogeny {
            common,
            x,
            depth,
            samples,
            seed,
        } => commands::endogeny(&common, x, depth, samples, seed),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
