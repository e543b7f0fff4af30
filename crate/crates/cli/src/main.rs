mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use finsler_core::definition::load_metric;
use finsler_core::{Builtin, FinslerError, FinslerFunction, FinslerStructure, PrecisionProfile};

use commands::{CliError, Context, Outcome};

#[derive(Parser)]
#[command(name = "finsler", version, about = "Curvature, geodesics and projective distances of Finsler metrics")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Builtin metric: euclidean, hyperbolic_poincare, funk_ball, flat_randers.
    #[arg(long, global = true, conflicts_with = "metric")]
    builtin: Option<String>,
    /// Metric definition file (TOML).
    #[arg(long, global = true)]
    metric: Option<PathBuf>,
    #[arg(long, global = true)]
    dim: Option<usize>,
    /// Constant one-form of flat_randers, e.g. `0.5` or `0.2,-0.1`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    b: Option<String>,
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// standard or strict.
    #[arg(long, global = true, default_value = "standard")]
    tol_profile: String,
    /// CSV output path.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// JSON report path.
    #[arg(long, global = true)]
    json: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Curvature table at random samples.
    Curvature,
    /// Integrate a unit-speed geodesic.
    Geodesic {
        #[arg(long, allow_hyphen_values = true)]
        from: String,
        #[arg(long, allow_hyphen_values = true)]
        dir: String,
        #[arg(long, default_value_t = 1.0)]
        length: f64,
        /// Follow the reversed flow, i.e. the curve that ends at `from` with velocity `dir`.
        #[arg(long)]
        backward: bool,
        /// Record nodes every this much arc length.
        #[arg(long)]
        step: Option<f64>,
    },
    /// Finsler distance d_F(from, to) by shooting.
    Distance {
        #[arg(long, allow_hyphen_values = true)]
        from: String,
        #[arg(long, allow_hyphen_values = true)]
        to: String,
    },
    /// Upper bound on the projective pseudo-distance d_M(from, to).
    PseudoDistance {
        #[arg(long, allow_hyphen_values = true)]
        from: String,
        #[arg(long, allow_hyphen_values = true)]
        to: String,
    },
    /// Schwarzian derivative of an expression in x1.
    Schwarzian {
        #[arg(long, allow_hyphen_values = true)]
        expr: String,
        #[arg(long, allow_hyphen_values = true, default_value = "0")]
        at: String,
        /// Also evaluate the sampled five-point stencil with this step.
        #[arg(long)]
        step: Option<f64>,
    },
    /// Verification suites.
    Verify {
        #[command(subcommand)]
        suite: Suite,
    },
}

#[derive(Subcommand, Clone, Copy)]
enum Suite {
    Einstein,
    TheoremD {
        #[arg(long, default_value_t = 10)]
        pairs: usize,
    },
    Reversibility,
    RicciParallel,
    ProjectiveAxioms,
}

fn parse_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("'{t}' in '{s}' is not a number"))))
        .collect()
}

fn metric(g: &Global) -> Result<FinslerStructure, CliError> {
    match (&g.builtin, &g.metric) {
        (Some(name), None) => {
            let b = g.b.as_deref().map(parse_list).transpose()?;
            let dim = g.dim.unwrap_or_else(|| b.as_ref().map_or(2, |b| b.len().max(2)));
            Ok(FinslerStructure::builtin(Builtin::from_name(name, dim, b.as_deref())?)?)
        }
        (None, Some(path)) => {
            if g.b.is_some() {
                return Err(CliError::Usage("--b applies to --builtin flat_randers only".into()));
            }
            let f = load_metric(path)?;
            if let Some(d) = g.dim {
                if d != f.dim() {
                    return Err(CliError::Usage(format!("--dim {d} disagrees with the definition's dim {}", f.dim())));
                }
            }
            Ok(f)
        }
        _ => Err(CliError::Usage("choose a metric with --builtin <name> or --metric <file>".into())),
    }
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    let g = &cli.global;
    if let Command::Schwarzian { expr, at, step } = &cli.command {
        let ctx = Context::without_metric(g.seed, g.out.clone(), g.json.clone());
        return commands::schwarzian(&ctx, expr, &parse_list(at)?, *step);
    }
    let profile: PrecisionProfile = g.tol_profile.parse()?;
    let ctx = Context {
        metric: Some(metric(g)?),
        profile,
        tol: profile.tolerances(),
        seed: g.seed,
        samples: g.samples,
        out: g.out.clone(),
        json: g.json.clone(),
    };
    match cli.command {
        Command::Curvature => commands::curvature(&ctx),
        Command::Geodesic { from, dir, length, backward, step } => {
            commands::geodesic(&ctx, &parse_list(&from)?, &parse_list(&dir)?, length, backward, step)
        }
        Command::Distance { from, to } => commands::distance(&ctx, &parse_list(&from)?, &parse_list(&to)?),
        Command::PseudoDistance { from, to } => {
            commands::pseudo_distance(&ctx, &parse_list(&from)?, &parse_list(&to)?)
        }
        Command::Schwarzian { .. } => unreachable!("handled above"),
        Command::Verify { suite } => match suite {
            Suite::Einstein => commands::verify_einstein(&ctx),
            Suite::TheoremD { pairs } => commands::verify_theorem_d(&ctx, pairs),
            Suite::Reversibility => commands::verify_reversibility(&ctx),
            Suite::RicciParallel => commands::verify_ricci_parallel(&ctx),
            Suite::ProjectiveAxioms => commands::verify_projective_axioms(&ctx),
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Finsler(FinslerError::NotApplicable(_)) => 3,
            CliError::Finsler(e) if e.is_invalid_input() => 2,
            _ => 1,
        }
    }
}
