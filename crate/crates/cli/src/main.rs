use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use num_complex::Complex64;

mod commands;
mod output;

use commands::{CliError, Family, RotorArgs, SweepArgs};
use output::Format;

#[derive(Parser)]
#[command(name = "bext", version, about = "Boundary conditions and entanglement for a particle coupled to a finite-level system")]
struct Cli {
    /// Output format; each subcommand has its own default.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Worker threads (falls back to BEXT_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Seed for randomized subcommands.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Write to this file instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compatibility curves tan²(α₁/2) - tan²(α₂/2) = σ.
    CompatCurve {
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        sigma: Vec<f64>,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Largest decay rate tan(α₁/2) sampled.
        #[arg(long)]
        max_decay: Option<f64>,
        /// Emit all four torus images (±α₁, ±α₂) of every point.
        #[arg(long)]
        torus: bool,
    },
    /// Bound states of decoupled half-line channels.
    Halfline {
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        lambda: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        alpha: Vec<f64>,
    },
    /// Exact spectrum of the rotor coupled to a spin.
    RotorSpectrum {
        #[arg(long, allow_negative_numbers = true)]
        mu: f64,
        #[arg(long, allow_negative_numbers = true)]
        delta: f64,
        #[arg(long, value_enum)]
        family: Family,
        /// α for the diagonal family, β for the anti-diagonal one.
        #[arg(long, allow_negative_numbers = true)]
        angle: f64,
        #[arg(long, num_args = 2, value_names = ["EMIN", "EMAX"], allow_negative_numbers = true)]
        window: Option<Vec<f64>>,
        /// Number of distinct eigenvalues.
        #[arg(long, default_value_t = 6)]
        k: usize,
        /// Sampling points per eigenfunction.
        #[arg(long, default_value_t = 401)]
        samples: usize,
    },
    /// Finite-element eigenpairs from a JSON configuration.
    Fem {
        #[arg(long)]
        config: PathBuf,
    },
    /// Entanglement of a sampled state.
    Entangle {
        #[arg(long)]
        input: PathBuf,
    },
    /// Bound states along a compatibility curve.
    Sweep {
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        s_start: Option<f64>,
        #[arg(long)]
        s_end: f64,
        #[arg(long, default_value_t = 50)]
        steps: usize,
        /// Complex amplitude, e.g. 0.7071 or 0.5+0.5i.
        #[arg(long, default_value = "0.7071067811865476", allow_negative_numbers = true)]
        c1: String,
        #[arg(long, default_value = "0.7071067811865476", allow_negative_numbers = true)]
        c2: String,
    },
    /// Tensor-structure prediction against the eigenfunction verdict for
    /// random boundary unitaries.
    Concordance {
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 401)]
        samples: usize,
    },
}

fn parse_complex(s: &str) -> Result<Complex64, CliError> {
    s.parse::<Complex64>().map_err(|_| CliError::Input(format!("cannot parse complex amplitude '{s}'")))
}

fn run(cli: &Cli) -> Result<(String, Format), CliError> {
    let (report, default_format) = match &cli.command {
        Command::CompatCurve { sigma, samples, max_decay, torus } => {
            (commands::compat_curve_cmd(sigma, *samples, *max_decay, *torus)?, Format::Csv)
        }
        Command::Halfline { lambda, alpha } => (commands::halfline_cmd(lambda, alpha)?, Format::Json),
        Command::RotorSpectrum { mu, delta, family, angle, window, k, samples } => {
            let args = RotorArgs {
                mu: *mu,
                delta: *delta,
                family: *family,
                angle: *angle,
                window: window.as_ref().map(|w| (w[0], w[1])),
                k: *k,
                samples: *samples,
            };
            if let Some((lo, hi)) = args.window {
                if !(lo < hi) {
                    return Err(CliError::Input(format!("empty window [{lo}, {hi}]")));
                }
            }
            (commands::rotor_spectrum_cmd(&args)?, Format::Json)
        }
        Command::Fem { config } => (commands::fem_cmd(config)?, Format::Json),
        Command::Entangle { input } => (commands::entangle_cmd(input)?, Format::Json),
        Command::Sweep { sigma, s_start, s_end, steps, c1, c2 } => {
            let args = SweepArgs {
                sigma: *sigma,
                s_start: *s_start,
                s_end: *s_end,
                steps: *steps,
                c1: parse_complex(c1)?,
                c2: parse_complex(c2)?,
            };
            (commands::sweep_cmd(&args)?, Format::Csv)
        }
        Command::Concordance { count, samples } => (commands::concordance_cmd(*count, cli.seed, *samples)?, Format::Csv),
    };
    let format = cli.format.unwrap_or(default_format);
    Ok((report.render(format), format))
}

fn thread_count(cli: &Cli) -> Result<Option<usize>, CliError> {
    if let Some(n) = cli.threads {
        return Ok(Some(n));
    }
    match std::env::var("BEXT_THREADS") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Input(format!("BEXT_THREADS must be a positive integer, got '{v}'"))),
        Err(_) => Ok(None),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = thread_count(&cli).and_then(|threads| {
        if let Some(n) = threads {
            if n == 0 {
                return Err(CliError::Input("thread count must be positive".into()));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| CliError::Numerical(e.to_string()))?;
        }
        run(&cli)
    });
    match outcome {
        Ok((text, _)) => match output::emit(&text, cli.output.as_deref()) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: cannot write output: {e}");
                ExitCode::from(2)
            }
        },
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
    }
}
