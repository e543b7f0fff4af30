use std::path::{Path, PathBuf};

use finsler_core::expr::Expr;
use finsler_core::geodesics::{
    finsler_distance, geodesic_reversibility_check, integrate_geodesic, GeodesicOptions, GeodesicReversal,
    Orientation, ShootingOptions, TraceEnd,
};
use finsler_core::metric::{reversibility_check, Domain};
use finsler_core::projective::{
    pseudo_distance_axioms, random_pairs, schwarzian_expr, schwarzian_richardson, PseudoDistanceOptions,
    ProjectiveSplit,
};
use finsler_core::report::{curvature_csv, projective_csv, trace_csv};
use finsler_core::sampling::{random_point, random_samples, transverse};
use finsler_core::tensor::{curvature_report, einstein_check, ricci_parallel_check};
use finsler_core::{FinslerError, FinslerFunction, FinslerStructure, PrecisionProfile, TangentSample, Tolerances};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Residual accepted for the symmetry and triangle checks of `d_M`.
const AXIOM_TOL: f64 = 1e-4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Finsler(#[from] FinslerError),
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
}

impl Outcome {
    fn from_bool(ok: bool) -> Outcome {
        if ok {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }

    fn word(self) -> &'static str {
        match self {
            Outcome::Pass => "PASS",
            Outcome::Fail => "FAIL",
        }
    }
}

pub struct Context {
    pub metric: Option<FinslerStructure>,
    pub profile: PrecisionProfile,
    pub tol: Tolerances,
    pub seed: u64,
    pub samples: Option<usize>,
    pub out: Option<PathBuf>,
    pub json: Option<PathBuf>,
}

impl Context {
    pub fn without_metric(seed: u64, out: Option<PathBuf>, json: Option<PathBuf>) -> Context {
        Context {
            metric: None,
            profile: PrecisionProfile::Standard,
            tol: Tolerances::default(),
            seed,
            samples: None,
            out,
            json,
        }
    }

    fn f(&self) -> &FinslerStructure {
        self.metric.as_ref().expect("command needs a metric")
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    fn write_csv(&self, csv: &str) -> Result<()> {
        match &self.out {
            Some(p) => write(p, csv),
            None => Ok(()),
        }
    }

    fn write_report<T: Serialize>(&self, command: &str, protocol: String, passed: Option<bool>, report: T) -> Result<()> {
        let Some(path) = &self.json else { return Ok(()) };
        let doc = Envelope {
            command,
            metric: self.metric.as_ref().map(|f| f.label()),
            seed: self.seed,
            tol_profile: self.profile.name(),
            protocol,
            passed,
            report,
        };
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        write(path, &text)
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| CliError::Write { path: path.to_path_buf(), source })
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    command: &'a str,
    metric: Option<&'a str>,
    seed: u64,
    tol_profile: &'a str,
    protocol: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    passed: Option<bool>,
    #[serde(flatten)]
    report: T,
}

fn fmt_point(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|c| format!("{c:.6}")).collect();
    format!("({})", parts.join(", "))
}

fn center(domain: &Domain, n: usize) -> Vec<f64> {
    match domain {
        Domain::Whole | Domain::UnitBall => vec![0.0; n],
        Domain::Box { lo, hi } => lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect(),
    }
}

fn check_dim(f: &FinslerStructure, what: &str, v: &[f64]) -> Result<()> {
    if v.len() != f.dim() {
        return Err(CliError::Usage(format!("--{what} needs {} coordinates, got {}", f.dim(), v.len())));
    }
    Ok(())
}

#[derive(Serialize)]
struct CurvatureRow<'a> {
    x: &'a [f64],
    y: &'a [f64],
    flag_edge: &'a [f64],
    #[serde(rename = "K")]
    k: f64,
    #[serde(rename = "Ric")]
    ric: f64,
    #[serde(rename = "Ric_ij")]
    ric_ij: Vec<Vec<f64>>,
    flags: &'a [String],
}

#[derive(Serialize)]
struct CurvatureDoc<'a> {
    samples: Vec<CurvatureRow<'a>>,
}

pub fn curvature(ctx: &Context) -> Result<Outcome> {
    let f = ctx.f();
    let n = f.dim();
    let count = ctx.samples.unwrap_or(20);
    let mut rng = ctx.rng();
    let samples = random_samples(f, count, &mut rng);
    let edges: Vec<Vec<f64>> = samples.iter().map(|s| transverse(&s.y, &mut rng)).collect();
    let reports = samples
        .iter()
        .zip(&edges)
        .map(|(s, u)| curvature_report(f, s, Some(u), &ctx.tol))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    println!("curvature of {} at {count} random samples (seed {})", f.label(), ctx.seed);
    println!("{:>4}  {:>16}  {:>16}  flags", "#", "K", "Ric");
    for (i, r) in reports.iter().enumerate() {
        println!("{:>4}  {:>16.10}  {:>16.10}  {}", i + 1, r.flag.unwrap_or(f64::NAN), r.ric_scalar, r.flags.join(";"));
    }
    if let (Some(lo), Some(hi)) = (
        reports.iter().filter_map(|r| r.flag).reduce(f64::min),
        reports.iter().filter_map(|r| r.flag).reduce(f64::max),
    ) {
        println!("K range [{lo:.10}, {hi:.10}]");
    }
    ctx.write_csv(&curvature_csv(n, &reports))?;
    let rows = reports
        .iter()
        .map(|r| CurvatureRow {
            x: &r.site.x,
            y: &r.site.y,
            flag_edge: r.flagpole_edge.as_deref().unwrap_or(&[]),
            k: r.flag.unwrap_or(f64::NAN),
            ric: r.ric_scalar,
            ric_ij: (0..n).map(|i| (0..n).map(|j| r.ric_tensor[(i, j)]).collect()).collect(),
            flags: &r.flags,
        })
        .collect();
    let protocol = format!("{count} samples: points uniform in the sampling region, unit directions, random transverse flag edges");
    ctx.write_report("curvature", protocol, None, CurvatureDoc { samples: rows })?;
    Ok(Outcome::Pass)
}

#[derive(Serialize)]
struct GeodesicDoc<'a> {
    from: &'a [f64],
    dir: &'a [f64],
    orientation: Orientation,
    requested_length: f64,
    length: f64,
    terminated_by: TraceEnd,
    end: &'a [f64],
    speed_drift: f64,
    nodes: usize,
}

pub fn geodesic(
    ctx: &Context,
    from: &[f64],
    dir: &[f64],
    length: f64,
    backward: bool,
    step: Option<f64>,
) -> Result<Outcome> {
    let f = ctx.f();
    check_dim(f, "from", from)?;
    check_dim(f, "dir", dir)?;
    if !(length > 0.0) {
        return Err(CliError::Usage("--length must be positive".into()));
    }
    let mut opts = GeodesicOptions::new(&ctx.tol);
    opts.output_step = step;
    if backward {
        opts.orientation = Orientation::Backward;
    }
    let trace = integrate_geodesic(f, from, dir, length, &opts)?;
    let how = if backward { "backward" } else { "forward" };
    println!("{how} geodesic of {} from {} along {}", f.label(), fmt_point(from), fmt_point(dir));
    match trace.terminated_by {
        TraceEnd::LengthReached => println!("reached length {:.10}", trace.length()),
        TraceEnd::DomainBoundary => println!(
            "truncated at the domain boundary: length {:.10} of {length} (terminated_by = domain_boundary)",
            trace.length()
        ),
        TraceEnd::StepFailure => println!("step failure after length {:.10}", trace.length()),
    }
    println!("end point {}", fmt_point(trace.end()));
    println!("max |F - 1| along the trace {:.3e}", trace.speed_drift());
    ctx.write_csv(&trace_csv(&trace))?;
    let doc = GeodesicDoc {
        from,
        dir,
        orientation: trace.orientation,
        requested_length: length,
        length: trace.length(),
        terminated_by: trace.terminated_by,
        end: trace.end(),
        speed_drift: trace.speed_drift(),
        nodes: trace.len(),
    };
    ctx.write_report("geodesic", "initial direction renormalized to F = 1".into(), None, doc)?;
    Ok(Outcome::from_bool(trace.terminated_by != TraceEnd::StepFailure))
}

pub fn distance(ctx: &Context, from: &[f64], to: &[f64]) -> Result<Outcome> {
    let f = ctx.f();
    check_dim(f, "from", from)?;
    check_dim(f, "to", to)?;
    let r = finsler_distance(f, from, to, &ShootingOptions::new(&ctx.tol))?;
    println!("d_F({} -> {}) = {:.12}", fmt_point(from), fmt_point(to), r.distance);
    println!(
        "converged: {}  residual {:.3e}  geodesics found {}",
        if r.converged { "yes" } else { "no" },
        r.residual,
        r.multiplicity
    );
    ctx.write_csv(&trace_csv(&r.trace))?;
    let protocol = "multiple-start shooting: coarse direction grid, damped Newton polish".into();
    ctx.write_report("distance", protocol, Some(r.converged), &r)?;
    Ok(Outcome::from_bool(r.converged))
}

pub fn pseudo_distance(ctx: &Context, from: &[f64], to: &[f64]) -> Result<Outcome> {
    let f = ctx.f();
    check_dim(f, "from", from)?;
    check_dim(f, "to", to)?;
    let opts = PseudoDistanceOptions::new(&ctx.tol);
    let r = finsler_core::projective::pseudo_distance(f, from, to, &opts)?;
    println!("pseudo-distance of {} from {} to {}", f.label(), fmt_point(from), fmt_point(to));
    println!("d_F = {:.12}", r.d_f);
    match r.upper {
        Some(u) if r.trivial => println!("d_M = {u} (trivial: Q vanishes along the geodesic)"),
        Some(u) => {
            println!("d_M <= {u:.12}");
            if r.d_f > 0.0 {
                println!("ratio d_M / d_F = {:.12}", u / r.d_f);
            }
        }
        None => println!("no chain along the geodesic stays inside (-1, 1) (partial)"),
    }
    for (k, l) in r.by_subdivision.iter().enumerate() {
        match l {
            Some(l) => println!("  {} segment(s): {l:.12}", k + 1),
            None => println!("  {} segment(s): -", k + 1),
        }
    }
    let split = ProjectiveSplit { segments: r.chain.segments.clone(), poles: Vec::new() };
    ctx.write_csv(&projective_csv(&split))?;
    let protocol = format!(
        "chains along the minimizing geodesic, up to {} equal subdivisions, {} nodes",
        opts.max_subdivisions, opts.nodes
    );
    ctx.write_report("pseudo-distance", protocol, None, &r)?;
    Ok(Outcome::Pass)
}

#[derive(Serialize)]
struct SchwarzianRow {
    s: f64,
    value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    sampled: Option<f64>,
}

#[derive(Serialize)]
struct SchwarzianDoc<'a> {
    expr: &'a str,
    values: Vec<SchwarzianRow>,
}

pub fn schwarzian(ctx: &Context, source: &str, at: &[f64], step: Option<f64>) -> Result<Outcome> {
    let e = Expr::parse(source)
        .map_err(|error| FinslerError::Expression { source_text: source.to_string(), error })?;
    let mut rows = Vec::new();
    println!("{{p, s}} for p(s) = {source} (s is x1)");
    for &s in at {
        let value = schwarzian_expr(&e, s)?;
        let sampled = match step {
            Some(h) => Some(schwarzian_richardson(|t| e.eval(&[t]), s, h)?),
            None => None,
        };
        match sampled {
            Some(v) => println!("  s = {s:<10} {value:.12}   sampled {v:.12}"),
            None => println!("  s = {s:<10} {value:.12}"),
        }
        rows.push(SchwarzianRow { s, value, sampled });
    }
    let protocol = match step {
        Some(h) => format!("exact third-order derivatives; Richardson-extrapolated five-point stencils with h = {h}"),
        None => "exact third-order derivatives".into(),
    };
    ctx.write_report("schwarzian", protocol, None, SchwarzianDoc { expr: source, values: rows })?;
    Ok(Outcome::Pass)
}

fn suite_samples(ctx: &Context, default_random: usize) -> Vec<TangentSample> {
    let f = ctx.f();
    let mut samples = f.probe_samples(None);
    let mut rng = ctx.rng();
    samples.extend(random_samples(f, ctx.samples.unwrap_or(default_random), &mut rng));
    samples
}

fn verdict(suite: &str, outcome: Outcome, detail: &str) {
    println!("{suite}: {} {detail}", outcome.word());
}

pub fn verify_einstein(ctx: &Context) -> Result<Outcome> {
    let f = ctx.f();
    let samples = suite_samples(ctx, 20);
    let r = einstein_check(f, &samples, &ctx.tol)?;
    let outcome = Outcome::from_bool(r.is_einstein);
    let definite = if r.negative_definite { "negative-definite" } else { "not negative-definite" };
    let detail = format!(
        "({}) c = {:.10}, c^2 = {:.10}, max residual {:.3e} ({definite})",
        f.label(),
        r.c_estimate,
        r.c_squared,
        r.max_residual
    );
    verdict("einstein", outcome, &detail);
    let protocol = format!("{} probe sites plus seeded random samples; least-squares c^2", samples.len());
    ctx.write_report("verify einstein", protocol, Some(r.is_einstein), &r)?;
    Ok(outcome)
}

pub fn verify_theorem_d(ctx: &Context, pairs: usize) -> Result<Outcome> {
    let f = ctx.f();
    if pairs == 0 {
        return Err(CliError::Usage("--pairs must be positive".into()));
    }
    let opts = PseudoDistanceOptions::new(&ctx.tol);
    let mut rng = ctx.rng();
    let pts = random_pairs(f, pairs, 0.1, 2.0, &mut rng, &opts.shooting)?;
    let r = finsler_core::projective::verify_theorem_d(f, &pts, &opts)?;
    println!("{:>4}  {:>14}  {:>14}  {:>14}  {:>10}", "#", "d_F", "d_M", "ratio", "rel error");
    for (i, p) in r.pairs.iter().enumerate() {
        println!("{:>4}  {:>14.10}  {:>14.10}  {:>14.10}  {:>10.3e}", i + 1, p.d_f, p.d_m, p.ratio, p.rel_error);
    }
    let outcome = Outcome::from_bool(r.passed);
    let detail = format!(
        "({}) n = {}, c = {:.10}, expected ratio {:.10}, max rel error {:.3e} (tolerance {:e})",
        f.label(),
        r.n,
        r.c,
        r.expected_ratio,
        r.max_rel_error,
        ctx.tol.theorem_d
    );
    verdict("theorem-d", outcome, &detail);
    let protocol = format!("{pairs} seeded random pairs with 0.1 <= d_F <= 2; d_M from chains along the minimizing geodesic");
    ctx.write_report("verify theorem-d", protocol, Some(r.passed), &r)?;
    Ok(outcome)
}

#[derive(Serialize)]
struct ReversibilityDoc<'a> {
    max_asymmetry: f64,
    worst: &'a TangentSample,
    reversible: bool,
    geodesics: Vec<GeodesicReversal>,
}

pub fn verify_reversibility(ctx: &Context) -> Result<Outcome> {
    let f = ctx.f();
    let n = f.dim();
    let mut e1 = vec![0.0; n];
    e1[0] = 1.0;
    let mut samples = vec![TangentSample::new(center(f.domain(), n), e1).expect("unit direction")];
    let mut rng = ctx.rng();
    samples.extend(random_samples(f, ctx.samples.unwrap_or(50), &mut rng));
    let r = reversibility_check(f, &samples, &ctx.tol)?;
    // geodesic reversibility on a few short geodesics, reported alongside
    let gopts = GeodesicOptions::new(&ctx.tol);
    let mut geodesics = Vec::new();
    for s in samples.iter().skip(1).take(5) {
        let trace = integrate_geodesic(f, &s.x, &s.y, 0.5, &gopts)?;
        geodesics.push(geodesic_reversibility_check(f, &trace, &ctx.tol)?);
    }
    let outcome = Outcome::from_bool(r.reversible);
    let detail = format!(
        "({}) max asymmetry {} at x = {}, y = {} (tolerance {:e})",
        f.label(),
        r.max_asymmetry,
        fmt_point(&r.worst.x),
        fmt_point(&r.worst.y),
        ctx.tol.reversible
    );
    verdict("reversibility", outcome, &detail);
    let worst_geodesic = geodesics.iter().map(|g| g.residual).fold(0.0, f64::max);
    println!("reversed-geodesic image residual (informational): max {worst_geodesic:.3e} over {} geodesics", geodesics.len());
    let protocol = format!(
        "F(x, y) vs F(x, -y) at y = e1 from the domain centre plus {} seeded samples",
        samples.len() - 1
    );
    let doc = ReversibilityDoc { max_asymmetry: r.max_asymmetry, worst: &r.worst, reversible: r.reversible, geodesics };
    ctx.write_report("verify reversibility", protocol, Some(r.reversible), doc)?;
    Ok(outcome)
}

pub fn verify_ricci_parallel(ctx: &Context) -> Result<Outcome> {
    let f = ctx.f();
    let samples = suite_samples(ctx, 20);
    let r = ricci_parallel_check(f, &samples, &ctx.tol)?;
    let outcome = Outcome::from_bool(r.parallel);
    let detail = format!(
        "({}) horizontal residual {:.3e}, vertical residual {:.3e} (tolerance {:e})",
        f.label(),
        r.horizontal_residual,
        r.vertical_residual,
        ctx.tol.parallel
    );
    verdict("ricci-parallel", outcome, &detail);
    let protocol = format!("{} probe sites plus seeded random samples", samples.len());
    ctx.write_report("verify ricci-parallel", protocol, Some(r.parallel), &r)?;
    Ok(outcome)
}

pub fn verify_projective_axioms(ctx: &Context) -> Result<Outcome> {
    let f = ctx.f();
    let n = f.dim();
    let count = ctx.samples.unwrap_or(5);
    let mut rng = ctx.rng();
    let mut triples: Vec<[Vec<f64>; 3]> = (0..count)
        .map(|_| {
            let mut p = || random_point(f.domain(), n, &mut rng);
            [p(), p(), p()]
        })
        .collect();
    let c = center(f.domain(), n);
    triples.push([c.clone(), c.clone(), c]);
    let r = pseudo_distance_axioms(f, &triples, &PseudoDistanceOptions::new(&ctx.tol))?;
    let ok = r.symmetry_residual <= AXIOM_TOL && r.triangle_residual >= -AXIOM_TOL && r.zero_residual == 0.0;
    let outcome = Outcome::from_bool(ok);
    let detail = format!(
        "({}) symmetry residual {:.3e}, triangle residual {:.3e}, d_M(x, x) = {} over {} triples (tolerance {AXIOM_TOL:e})",
        f.label(),
        r.symmetry_residual,
        r.triangle_residual,
        r.zero_residual,
        r.triples
    );
    verdict("projective-axioms", outcome, &detail);
    let protocol = format!("{count} seeded random triples plus the degenerate triple at the domain centre");
    ctx.write_report("verify projective-axioms", protocol, Some(ok), &r)?;
    Ok(outcome)
}
