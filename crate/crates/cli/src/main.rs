//! `qmem`: spectra, topology sweeps, optimization, echo and time-domain runs
//! for a comb of absorbers in a single-mode cavity.
//!
//! Exit codes: 0 success, 2 config error, 3 numeric failure, 4 validation
//! failure. `QMEM_MATCH_THREADS` caps the worker threads used for sweeps.

mod commands;
mod config_file;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qmem_core::timedomain::Method;
use qmem_core::{MatchingForm, Objective};

use commands::*;
use error::CliError;

#[derive(Parser)]
#[command(name = "qmem", version, about = "Multi-absorber cavity quantum memory model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON device file.
    #[arg(long)]
    config: PathBuf,
    /// Set every absorber's loss γ.
    #[arg(long)]
    gamma: Option<f64>,
    /// Replace the cavity decay κ.
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn input(&self) -> Result<Input, CliError> {
        Input::load(&self.config, self.gamma, self.kappa)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Transfer function, efficiency, delay and spectral error on a band.
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true, value_parser = parse_range, default_value = "-1:1")]
        band: (f64, f64),
        #[arg(long, default_value_t = 2001)]
        points: usize,
        /// Reference delay; the center phase slope when absent.
        #[arg(long)]
        t0: Option<f64>,
    },
    /// Line positions, widths and echo intensity while sweeping a common g.
    Topology {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true, value_parser = parse_range, default_value = "0.05:0.6")]
        g_range: (f64, f64),
        /// Number of sweep points.
        #[arg(long, default_value_t = 200)]
        steps: usize,
        #[arg(long)]
        sigma: Option<f64>,
        /// Recall time; the critical delay of an N-pair comb when absent.
        #[arg(long)]
        recall: Option<f64>,
        /// Relative quadrature tolerance for the echo integral.
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
    },
    /// Optimize a symmetric comb; writes the final device file to --out.
    Optimize {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = ObjectiveArg::Residuals)]
        objective: ObjectiveArg,
        /// Weight of the residual term for --objective mixed.
        #[arg(long, default_value_t = 0.5)]
        weight: f64,
        #[arg(long, value_enum, default_value_t = FormArg::Broadband)]
        form: FormArg,
        /// Number of matching conditions; 4N − 1 when absent.
        #[arg(long)]
        conditions: Option<usize>,
        #[arg(long, allow_hyphen_values = true, value_parser = parse_range, default_value = "-0.6:0.6")]
        band: (f64, f64),
        #[arg(long, default_value_t = 241)]
        points: usize,
        /// Simplex size tolerance.
        #[arg(long)]
        tolerance: Option<f64>,
        #[arg(long)]
        max_evaluations: Option<usize>,
        /// Report file; stdout when absent.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Normalized echo intensity at one recall time or over a range.
    Echo {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        recall: Option<f64>,
        #[arg(long, allow_hyphen_values = true, value_parser = parse_range)]
        recall_range: Option<(f64, f64)>,
        #[arg(long, default_value_t = 101)]
        points: usize,
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
    },
    /// Time-domain run of the cavity and absorber amplitudes.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long, default_value_t = 2001)]
        points: usize,
        #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
        method: MethodArg,
        /// Relative tolerance of the adaptive integrator.
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
        /// Continue past the grid until stored energy drops below this fraction.
        #[arg(long)]
        ring_down: Option<f64>,
        /// Add the transfer-function prediction of the output.
        #[arg(long)]
        oracle: bool,
    },
    /// Check invariants and the time/frequency agreement for one device.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Tolerance on the time/frequency relative L2 difference.
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
    },
    /// Write an equidistant comb device file.
    GenComb {
        /// Number of absorber pairs.
        #[arg(long)]
        n: usize,
        /// Comb spacing; other values are in the same unit.
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
        /// Common linewidth; the critical coupling when absent.
        #[arg(long)]
        g: Option<f64>,
        #[arg(long, default_value_t = 1e-4)]
        gamma: f64,
        /// Cavity decay; 100·delta when absent.
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum ObjectiveArg {
    Residuals,
    BandError,
    Mixed,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum FormArg {
    Broadband,
    WithCavity,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Auto,
    Rk,
    Exp,
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected LO:HI, got {s:?}"))?;
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    Ok((parse(lo)?, parse(hi)?))
}

fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("QMEM_MATCH_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Config(format!("QMEM_MATCH_THREADS must be a positive integer, got {v:?}")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| CliError::Config(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Spectrum { common, band, points, t0 } => spectrum(
            &common.input()?,
            &SpectrumArgs {
                band,
                points,
                t0,
                seed: common.seed,
                out: common.out,
            },
        ),
        Command::Topology {
            common,
            g_range,
            steps,
            sigma,
            recall,
            tolerance,
        } => topology(
            &common.input()?,
            &TopologyArgs {
                g_range,
                steps,
                sigma,
                recall,
                tolerance,
                seed: common.seed,
                out: common.out,
            },
        ),
        Command::Optimize {
            common,
            objective,
            weight,
            form,
            conditions,
            band,
            points,
            tolerance,
            max_evaluations,
            report,
        } => optimize_cmd(
            &common.input()?,
            &OptimizeArgs {
                objective: match objective {
                    ObjectiveArg::Residuals => Objective::Residuals,
                    ObjectiveArg::BandError => Objective::BandError,
                    ObjectiveArg::Mixed => Objective::Mixed { weight },
                },
                form: match form {
                    FormArg::Broadband => MatchingForm::Broadband,
                    FormArg::WithCavity => MatchingForm::WithCavity,
                },
                conditions,
                band,
                points,
                tolerance,
                max_evaluations,
                seed: common.seed,
                out: common.out,
                report,
            },
        ),
        Command::Echo {
            common,
            sigma,
            recall,
            recall_range,
            points,
            tolerance,
        } => echo(
            &common.input()?,
            &EchoArgs {
                sigma,
                recall,
                recall_range,
                points,
                tolerance,
                seed: common.seed,
                out: common.out,
            },
        ),
        Command::Simulate {
            common,
            sigma,
            t_end,
            points,
            method,
            tolerance,
            ring_down,
            oracle,
        } => simulate_cmd(
            &common.input()?,
            &SimulateArgs {
                sigma,
                t_end,
                points,
                method: match method {
                    MethodArg::Auto => Method::Auto,
                    MethodArg::Rk => Method::RungeKutta,
                    MethodArg::Exp => Method::Exponential,
                },
                tolerance,
                ring_down,
                oracle,
                seed: common.seed,
                out: common.out,
            },
        ),
        Command::Validate { common, tolerance } => validate(
            &common.input()?,
            &ValidateArgs {
                tolerance,
                seed: common.seed,
                out: common.out,
            },
        ),
        Command::GenComb {
            n,
            delta,
            g,
            gamma,
            kappa,
            seed,
            out,
        } => gen_comb(&GenCombArgs {
            n,
            delta,
            g,
            gamma,
            kappa,
            seed,
            out,
        }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = thread_pool().and_then(|pool| pool.install(|| run(cli)));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
