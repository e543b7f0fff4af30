//! Schwarzian derivatives, projective parameters along geodesics, the
//! Poincaré distance on (−1, 1), chains of projective segments, and the
//! pseudo-distance `d_M` with its proportionality check against `d_F`.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dual::{derivatives3, Dual, Scalar};
use crate::error::{FinslerError, Result};
use crate::expr::Expr;
use crate::geodesics::{
    finsler_distance, integrate_geodesic, GeodesicOptions, GeodesicTrace, Orientation, ShootingOptions, TraceEnd,
};
use crate::metric::{probe_directions, FinslerFunction, FinslerStructure, TangentSample};
use crate::ode::{integrate, OdeOptions, OdeSystem};
use crate::sampling::random_point;
use crate::tensor::{einstein_check, ricci_quadratic, spray_coefficients, EinsteinReport};
use crate::tolerance::Tolerances;

type D3 = Dual<Dual<Dual<f64>>>;

const MIN_DERIVATIVE: f64 = 1e-10;

/// `{p, s} = p‴/p′ − (3/2)(p″/p′)²`.
pub fn schwarzian_from_derivatives(d1: f64, d2: f64, d3: f64) -> Result<f64> {
    if !(d1.abs() > MIN_DERIVATIVE) {
        return Err(FinslerError::VanishingDerivative(d1));
    }
    let r = d2 / d1;
    Ok(d3 / d1 - 1.5 * r * r)
}

/// Exact Schwarzian of a closed-form `p` by third-order dual numbers.
pub fn schwarzian(p: impl Fn(D3) -> D3, s: f64) -> Result<f64> {
    let d = derivatives3(p, s);
    schwarzian_from_derivatives(d[1], d[2], d[3])
}

/// Exact Schwarzian of an expression in the single variable `x1`.
pub fn schwarzian_expr(e: &Expr, s: f64) -> Result<f64> {
    if e.max_var() > 1 {
        return Err(FinslerError::InvalidInput(format!(
            "Schwarzian expressions use the single variable x1, found x{}",
            e.max_var()
        )));
    }
    schwarzian(|t| e.eval(&[t]), s)
}

/// `(p′, p″, p‴)` from five equally spaced samples `p(s + kh)`, `k = −2..2`.
fn stencil(v: [f64; 5], h: f64) -> (f64, f64, f64) {
    let [m2, m1, z, p1, p2] = v;
    let d1 = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h);
    let d2 = (-m2 + 16.0 * m1 - 30.0 * z + 16.0 * p1 - p2) / (12.0 * h * h);
    let d3 = (-m2 + 2.0 * m1 - 2.0 * p1 + p2) / (2.0 * h * h * h);
    (d1, d2, d3)
}

/// Schwarzian from five-point stencils of a sampled function.
pub fn schwarzian_sampled(p: impl Fn(f64) -> f64, s: f64, h: f64) -> Result<f64> {
    let (d1, d2, d3) = stencil([p(s - 2.0 * h), p(s - h), p(s), p(s + h), p(s + 2.0 * h)], h);
    schwarzian_from_derivatives(d1, d2, d3)
}

/// Richardson-extrapolated stencil Schwarzian `(4S(h) − S(2h)) / 3`.
pub fn schwarzian_richardson(p: impl Fn(f64) -> f64, s: f64, h: f64) -> Result<f64> {
    let fine = schwarzian_sampled(&p, s, h)?;
    let coarse = schwarzian_sampled(&p, s, 2.0 * h)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// Richardson stencil Schwarzian at node `i` of a uniform grid with spacing `h`.
pub fn schwarzian_on_grid(values: &[f64], h: f64, i: usize) -> Result<f64> {
    if i < 4 || i + 4 >= values.len() {
        return Err(FinslerError::InvalidInput(format!("node {i} lacks four neighbours on each side")));
    }
    let at = |k: isize, step: isize| values[(i as isize + k * step) as usize];
    let pick = |step: isize| [at(-2, step), at(-1, step), at(0, step), at(1, step), at(2, step)];
    let (a1, a2, a3) = stencil(pick(1), h);
    let (b1, b2, b3) = stencil(pick(2), 2.0 * h);
    let fine = schwarzian_from_derivatives(a1, a2, a3)?;
    let coarse = schwarzian_from_derivatives(b1, b2, b3)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// `(a p + b) / (c p + d)`.
pub fn mobius<T: Scalar>(coeffs: [f64; 4], p: T) -> T {
    let [a, b, c, d] = coeffs;
    (p * a + b) / (p * c + d)
}

/// Cross ratio `((a − c)(b − d)) / ((a − d)(b − c))`, preserved by Möbius maps.
pub fn cross_ratio(a: f64, b: f64, c: f64, d: f64) -> f64 {
    ((a - c) * (b - d)) / ((a - d) * (b - c))
}

/// `ρ(a, b) = |ln((1 − a)(1 + b) / ((1 − b)(1 + a)))| = 2|artanh b − artanh a|`.
pub fn poincare_distance(a: f64, b: f64) -> Result<f64> {
    for v in [a, b] {
        if !(v > -1.0 && v < 1.0) {
            return Err(FinslerError::InvalidInput(format!("Poincaré endpoint {v} is outside (-1, 1)")));
        }
    }
    Ok(2.0 * (b.atanh() - a.atanh()).abs())
}

/// A geodesic piece with its projective parameter.
#[derive(Debug, Clone, Serialize)]
pub struct ProjectiveSegment {
    /// Arc length of the segment start within the trace it was cut from.
    pub s_offset: f64,
    #[serde(skip)]
    pub trace: GeodesicTrace,
    /// `Q(s) = (2/(n−1)) Ric_jk ẋ^j ẋ^k`.
    pub q_along: Vec<f64>,
    pub p_along: Vec<f64>,
    pub dp_along: Vec<f64>,
    /// Gauge `p′(0)`.
    pub m: f64,
    pub a: f64,
    pub b: f64,
    /// `Q ≡ 0`: `p` is affine and no compactification exists.
    pub flat: bool,
    /// `p` leaves `(−1, 1)` on the segment.
    pub partial: bool,
}

impl ProjectiveSegment {
    /// Poincaré length `ρ(a, b)`, if the segment lies inside `(−1, 1)`.
    pub fn poincare_length(&self) -> Option<f64> {
        if self.flat || self.partial {
            return None;
        }
        poincare_distance(self.a, self.b).ok()
    }

    /// `max |{p, s} − Q(s)|` over interior nodes, by Richardson stencils;
    /// `None` unless the segment grid is uniform with at least nine nodes.
    pub fn schwarzian_residual(&self) -> Option<f64> {
        let h = self.trace.uniform_step()?;
        if self.p_along.len() < 10 {
            return None;
        }
        // the last interval may be short, so stop one node early
        let last = self.p_along.len() - 1;
        (4..last.saturating_sub(4))
            .map(|i| schwarzian_on_grid(&self.p_along[..last], h, i).map(|s| (s - self.q_along[i]).abs()))
            .collect::<Result<Vec<_>>>()
            .ok()
            .map(|v| v.into_iter().fold(0.0, f64::max))
    }
}

/// Segments of a trace split at the poles of `p`.
#[derive(Debug, Clone, Serialize)]
pub struct ProjectiveSplit {
    pub segments: Vec<ProjectiveSegment>,
    /// Arc lengths where `u₂` vanishes.
    pub poles: Vec<f64>,
}

/// Geodesic flow together with two solutions of `u″ + ½Q u = 0`.
struct ParameterSystem<'a> {
    f: &'a FinslerStructure,
    q_factor: f64,
}

impl OdeSystem for ParameterSystem<'_> {
    fn dim(&self) -> usize {
        2 * self.f.dim() + 4
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        let n = self.f.dim();
        let (x, v) = (&y[..n], &y[n..2 * n]);
        let g = spray_coefficients(self.f, x, v);
        let q = self.q_factor * ricci_quadratic(self.f, x, v);
        for i in 0..n {
            dy[i] = v[i];
            dy[n + i] = -2.0 * g[i];
        }
        let u = &y[2 * n..];
        dy[2 * n] = u[1];
        dy[2 * n + 1] = -0.5 * q * u[0];
        dy[2 * n + 2] = u[3];
        dy[2 * n + 3] = -0.5 * q * u[2];
    }

    fn admissible(&self, y: &[f64]) -> bool {
        y.iter().all(|v| v.is_finite()) && self.f.domain().contains(&y[..self.f.dim()])
    }
}

/// Root of the cubic Hermite interpolant of `(u, u′)` on `[s0, s1]`, where `u` changes sign.
fn hermite_root(s0: f64, s1: f64, u0: f64, d0: f64, u1: f64, d1: f64) -> f64 {
    let h = s1 - s0;
    let at = |s: f64| {
        let t = (s - s0) / h;
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * u0 + (t3 - 2.0 * t2 + t) * h * d0 + (-2.0 * t3 + 3.0 * t2) * u1 + (t3 - t2) * h * d1
    };
    let (mut a, mut b) = (s0, s1);
    let fa = at(a);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if (at(mid) > 0.0) == (fa > 0.0) {
            a = mid;
        } else {
            b = mid;
        }
        if b - a <= 1e-15 * (1.0 + s1.abs()) {
            break;
        }
    }
    0.5 * (a + b)
}

struct PieceOutcome {
    segment: Option<ProjectiveSegment>,
    pole: Option<(f64, usize)>,
}

fn parameter_piece(f: &FinslerStructure, trace: &GeodesicTrace, s_offset: f64, tol: &Tolerances) -> PieceOutcome {
    let n = f.dim();
    let sys = ParameterSystem { f, q_factor: 2.0 / (n as f64 - 1.0) };
    let mut state = trace.xs[0].clone();
    state.extend_from_slice(&trace.ys[0]);
    state.extend_from_slice(&[0.0, 1.0, 1.0, 0.0]);
    let ode = OdeOptions { rtol: tol.rtol, atol: tol.atol, ..OdeOptions::default() };
    let sol = integrate(&sys, 0.0, &state, trace.length(), Some(&trace.s_grid[1..]), &ode);
    let q0 = sys.q_factor * ricci_quadratic(f, &trace.xs[0], &trace.ys[0]);
    let m = if q0 < 0.0 { (-q0 / 2.0).sqrt() } else { 1.0 };
    let mut cut = sol.t.len();
    let mut pole = None;
    for k in 0..sol.t.len() - 1 {
        let (u, w) = (sol.y[k][2 * n + 2], sol.y[k + 1][2 * n + 2]);
        if w == 0.0 || (u > 0.0) != (w > 0.0) {
            let (d, e) = (sol.y[k][2 * n + 3], sol.y[k + 1][2 * n + 3]);
            pole = Some((hermite_root(sol.t[k], sol.t[k + 1], u, d, w, e), k + 1));
            cut = k + 1;
            break;
        }
    }
    if cut < 2 {
        return PieceOutcome { segment: None, pole: pole.map(|(s, k)| (s + s_offset, k)) };
    }
    let xs: Vec<Vec<f64>> = sol.y[..cut].iter().map(|y| y[..n].to_vec()).collect();
    let ys: Vec<Vec<f64>> = sol.y[..cut].iter().map(|y| y[n..2 * n].to_vec()).collect();
    let mut p_along = Vec::with_capacity(cut);
    let mut dp_along = Vec::with_capacity(cut);
    let mut q_along = Vec::with_capacity(cut);
    for k in 0..cut {
        let u = &sol.y[k][2 * n..];
        let wronskian = u[1] * u[2] - u[0] * u[3];
        p_along.push(m * u[0] / u[2]);
        dp_along.push(m * wronskian / (u[2] * u[2]));
        q_along.push(sys.q_factor * ricci_quadratic(f, &xs[k], &ys[k]));
    }
    let flat = q_along.iter().all(|q| q.abs() <= tol.flat_q);
    let partial = pole.is_some() || p_along.iter().any(|p| !(p.abs() < 1.0));
    let segment_trace = GeodesicTrace {
        s_grid: sol.t[..cut].to_vec(),
        f_along: xs.iter().zip(&ys).map(|(x, y)| f.eval_f64(x, y)).collect(),
        xs,
        ys,
        terminated_by: if cut == sol.t.len() { sol.termination.into() } else { TraceEnd::LengthReached },
        orientation: Orientation::Forward,
    };
    PieceOutcome {
        segment: Some(ProjectiveSegment {
            s_offset,
            a: p_along[0],
            b: *p_along.last().expect("at least two nodes"),
            trace: segment_trace,
            q_along,
            p_along,
            dp_along,
            m,
            flat,
            partial,
        }),
        pole: pole.map(|(s, k)| (s + s_offset, k)),
    }
}

/// Projective parameter `p = m u₁/u₂` along a forward unit-speed trace, with
/// `(u₁, u₁′)(0) = (0, 1)`, `(u₂, u₂′)(0) = (1, 0)` and gauge `p′(0) = m`,
/// `m = √(−Q(0)/2)` if `Q(0) < 0` and `1` otherwise. The trace is split at
/// zeros of `u₂` and each piece is re-gauged from its first node after the pole.
pub fn projective_parameter(f: &FinslerStructure, trace: &GeodesicTrace, tol: &Tolerances) -> Result<ProjectiveSplit> {
    if trace.orientation != Orientation::Forward {
        return Err(FinslerError::InvalidInput("projective parameters need a forward trace".into()));
    }
    if trace.len() < 2 {
        return Err(FinslerError::InvalidInput("trace has fewer than two nodes".into()));
    }
    if f.dim() < 2 {
        return Err(FinslerError::Dimension(f.dim()));
    }
    let mut segments = Vec::new();
    let mut poles = Vec::new();
    let mut start = 0usize;
    while start + 1 < trace.len() {
        let piece = trace.slice(start, trace.len() - 1);
        let out = parameter_piece(f, &piece, trace.s_grid[start], tol);
        if let Some(seg) = out.segment {
            segments.push(seg);
        }
        match out.pole {
            Some((s, k)) => {
                poles.push(s);
                start += k;
            }
            None => break,
        }
    }
    Ok(ProjectiveSplit { segments, poles })
}

/// Points `x = x_0, …, x_k = y` joined by projective segments.
#[derive(Debug, Clone, Serialize)]
pub struct Chain {
    pub points: Vec<Vec<f64>>,
    pub segments: Vec<ProjectiveSegment>,
}

const CONTINUITY: f64 = 1e-6;

/// `L(α) = Σ ρ(a_i, b_i)`.
pub fn chain_length(chain: &Chain) -> Result<f64> {
    if chain.segments.is_empty() {
        let same = chain.points.windows(2).all(|w| dist(&w[0], &w[1]) <= CONTINUITY);
        return if same {
            Ok(0.0)
        } else {
            Err(FinslerError::InvalidInput("an empty chain must join a point to itself".into()))
        };
    }
    if chain.points.len() != chain.segments.len() + 1 {
        return Err(FinslerError::InvalidInput("a chain of k segments has k + 1 points".into()));
    }
    let mut total = 0.0;
    for (i, seg) in chain.segments.iter().enumerate() {
        let gap = dist(seg.trace.start(), &chain.points[i]).max(dist(seg.trace.end(), &chain.points[i + 1]));
        if gap > CONTINUITY {
            return Err(FinslerError::InvalidInput(format!("chain is discontinuous at segment {i} (gap {gap:e})")));
        }
        total += seg
            .poincare_length()
            .ok_or_else(|| FinslerError::NotApplicable(format!("segment {i} has no projective parameter in (-1, 1)")))?;
    }
    Ok(total)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone)]
pub struct PseudoDistanceOptions {
    pub shooting: ShootingOptions,
    /// Largest number of pieces the minimizing geodesic is cut into.
    pub max_subdivisions: usize,
    /// Uniform nodes of the minimizing geodesic.
    pub nodes: usize,
}

impl PseudoDistanceOptions {
    pub fn new(tol: &Tolerances) -> PseudoDistanceOptions {
        PseudoDistanceOptions { shooting: ShootingOptions::new(tol), max_subdivisions: 4, nodes: 64 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PseudoDistance {
    pub from: Vec<f64>,
    pub to: Vec<f64>,
    /// Smallest chain length found: an upper bound on `d_M`. `None` when no
    /// chain along the geodesic has projective parameters inside `(−1, 1)`.
    pub upper: Option<f64>,
    /// `Q ≡ 0` along the geodesic: `d_M` is trivial.
    pub trivial: bool,
    pub partial: bool,
    pub d_f: f64,
    /// Chain length per subdivision count `k = 1, 2, …`.
    pub by_subdivision: Vec<Option<f64>>,
    pub chain: Chain,
}

fn chain_for(f: &FinslerStructure, trace: &GeodesicTrace, k: usize, tol: &Tolerances) -> Result<(Chain, bool)> {
    let last = trace.len() - 1;
    let cuts: Vec<usize> = (0..=k).map(|j| (j * last + k / 2) / k).collect();
    let mut segments = Vec::with_capacity(k);
    let mut points = vec![trace.start().to_vec()];
    let mut exact = true;
    for w in cuts.windows(2) {
        let piece = trace.slice(w[0], w[1]);
        let split = projective_parameter(f, &piece, tol)?;
        if !split.poles.is_empty() || split.segments.len() != 1 {
            exact = false;
        }
        let seg = split.segments.into_iter().next().ok_or_else(|| {
            FinslerError::NotApplicable("projective parameter has a pole at the segment start".into())
        })?;
        points.push(seg.trace.end().to_vec());
        segments.push(seg);
    }
    Ok((Chain { points, segments }, exact))
}

/// Upper bound on `d_M(x, y)` from chains along the minimizing geodesic.
pub fn pseudo_distance(f: &FinslerStructure, x: &[f64], y: &[f64], opts: &PseudoDistanceOptions) -> Result<PseudoDistance> {
    let tol = &opts.shooting.tol;
    let shot = finsler_distance(f, x, y, &opts.shooting)?;
    if !shot.converged {
        return Err(FinslerError::NoGeodesic { from: x.to_vec(), to: y.to_vec(), residual: shot.residual });
    }
    if shot.distance == 0.0 {
        return Ok(PseudoDistance {
            from: x.to_vec(),
            to: y.to_vec(),
            upper: Some(0.0),
            trivial: false,
            partial: false,
            d_f: 0.0,
            by_subdivision: Vec::new(),
            chain: Chain { points: vec![x.to_vec(), y.to_vec()], segments: Vec::new() },
        });
    }
    let mut gopts = GeodesicOptions::new(tol);
    gopts.output_step = Some(shot.distance / opts.nodes as f64);
    let trace = integrate_geodesic(f, x, &shot.initial_direction, shot.distance, &gopts)?;
    let results: Vec<Result<(Chain, bool)>> =
        (1..=opts.max_subdivisions.max(1)).into_par_iter().map(|k| chain_for(f, &trace, k, tol)).collect();
    let mut by_subdivision = Vec::new();
    let mut best: Option<(f64, Chain)> = None;
    let mut first_chain = None;
    let mut trivial = false;
    for (k, r) in results.into_iter().enumerate() {
        let (chain, exact) = r?;
        if k == 0 {
            trivial = chain.segments.iter().all(|s| s.flat);
        }
        let len = if exact { chain_length(&chain).ok() } else { None };
        by_subdivision.push(len);
        if let Some(l) = len {
            if best.as_ref().is_none_or(|(b, _)| l < *b) {
                best = Some((l, chain.clone()));
            }
        }
        if first_chain.is_none() {
            first_chain = Some(chain);
        }
    }
    let (upper, chain) = if trivial {
        (Some(0.0), first_chain.expect("at least one subdivision"))
    } else {
        match best {
            Some((l, c)) => (Some(l), c),
            None => (None, first_chain.expect("at least one subdivision")),
        }
    };
    Ok(PseudoDistance {
        from: x.to_vec(),
        to: y.to_vec(),
        partial: !trivial && upper.is_none(),
        upper,
        trivial,
        d_f: shot.distance,
        by_subdivision,
        chain,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PairReport {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    #[serde(rename = "d_F")]
    pub d_f: f64,
    #[serde(rename = "d_M")]
    pub d_m: f64,
    pub ratio: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoremDReport {
    pub n: usize,
    pub c: f64,
    pub expected_ratio: f64,
    pub pairs: Vec<PairReport>,
    pub max_rel_error: f64,
    #[serde(skip)]
    pub einstein: Option<EinsteinReport>,
    #[serde(skip)]
    pub passed: bool,
}

fn einstein_samples(f: &FinslerStructure, pairs: &[(Vec<f64>, Vec<f64>)]) -> Vec<TangentSample> {
    let dirs = probe_directions(f.dim());
    let mut pts: Vec<Vec<f64>> = Vec::new();
    for (x, y) in pairs {
        pts.push(x.clone());
        pts.push(y.clone());
        pts.push(x.iter().zip(y).map(|(a, b)| 0.5 * (a + b)).collect());
    }
    pts.iter()
        .filter(|p| f.domain().contains(p))
        .flat_map(|p| dirs.iter().map(move |d| TangentSample { x: p.clone(), y: d.clone() }))
        .collect()
}

/// Compare `d_M / d_F` with `2c/√(n−1)` on each pair, where `Ric_ij = −c² g_ij`.
pub fn verify_theorem_d(
    f: &FinslerStructure,
    pairs: &[(Vec<f64>, Vec<f64>)],
    opts: &PseudoDistanceOptions,
) -> Result<TheoremDReport> {
    let tol = &opts.shooting.tol;
    if pairs.is_empty() {
        return Err(FinslerError::InvalidInput("no pairs".into()));
    }
    let samples = einstein_samples(f, pairs);
    let einstein = einstein_check(f, &samples, tol)?;
    if !einstein.is_einstein {
        return Err(FinslerError::NotApplicable(format!(
            "metric is not Einstein (max residual {:e})",
            einstein.max_residual
        )));
    }
    if !(einstein.c_squared > 1e-8) {
        return Err(FinslerError::NotApplicable(format!(
            "Einstein constant c = {:e} is not positive",
            einstein.c_estimate
        )));
    }
    let n = f.dim();
    let c = einstein.c_estimate;
    let expected = 2.0 * c / (n as f64 - 1.0).sqrt();
    let reports: Vec<PairReport> = pairs
        .par_iter()
        .map(|(x, y)| {
            let pd = pseudo_distance(f, x, y, opts)?;
            let d_m = pd.upper.ok_or_else(|| {
                FinslerError::NotApplicable(format!("no chain inside (-1, 1) from {x:?} to {y:?}"))
            })?;
            let ratio = d_m / pd.d_f;
            Ok(PairReport { x: x.clone(), y: y.clone(), d_f: pd.d_f, d_m, ratio, rel_error: (ratio - expected).abs() / expected })
        })
        .collect::<Result<_>>()?;
    let max_rel_error = reports.iter().map(|r| r.rel_error).fold(0.0, f64::max);
    Ok(TheoremDReport {
        n,
        c,
        expected_ratio: expected,
        passed: max_rel_error <= tol.theorem_d,
        pairs: reports,
        max_rel_error,
        einstein: Some(einstein),
    })
}

/// Random pairs with `d_min ≤ d_F ≤ d_max`, drawn in order from `rng`.
pub fn random_pairs<R: Rng + ?Sized>(
    f: &FinslerStructure,
    count: usize,
    d_min: f64,
    d_max: f64,
    rng: &mut R,
    opts: &ShootingOptions,
) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    let n = f.dim();
    let mut out = Vec::with_capacity(count);
    for _round in 0..50 {
        let batch: Vec<(Vec<f64>, Vec<f64>)> = (0..2 * count.max(1))
            .map(|_| (random_point(f.domain(), n, rng), random_point(f.domain(), n, rng)))
            .collect();
        let keep: Vec<bool> = batch
            .par_iter()
            .map(|(x, y)| {
                finsler_distance(f, x, y, opts)
                    .map(|r| r.converged && r.distance >= d_min && r.distance <= d_max)
                    .unwrap_or(false)
            })
            .collect();
        for (pair, k) in batch.into_iter().zip(keep) {
            if k && out.len() < count {
                out.push(pair);
            }
        }
        if out.len() == count {
            return Ok(out);
        }
    }
    Err(FinslerError::NotApplicable(format!("could not find {count} pairs with {d_min} <= d_F <= {d_max}")))
}

#[derive(Debug, Clone, Serialize)]
pub struct AxiomsReport {
    pub triples: usize,
    /// `max |d_M(x, y) − d_M(y, x)|`.
    pub symmetry_residual: f64,
    /// `min (d_M(x, y) + d_M(y, z) − d_M(x, z))`; non-negative when the triangle inequality holds.
    pub triangle_residual: f64,
    /// `max d_M(x, x)`.
    pub zero_residual: f64,
}

/// Symmetry, triangle and zero checks of the `d_M` upper bound on triples.
pub fn pseudo_distance_axioms(
    f: &FinslerStructure,
    triples: &[[Vec<f64>; 3]],
    opts: &PseudoDistanceOptions,
) -> Result<AxiomsReport> {
    let d = |a: &[f64], b: &[f64]| -> Result<f64> {
        pseudo_distance(f, a, b, opts)?
            .upper
            .ok_or_else(|| FinslerError::NotApplicable(format!("d_M({a:?}, {b:?}) has no chain inside (-1, 1)")))
    };
    let rows: Vec<(f64, f64, f64)> = triples
        .par_iter()
        .map(|[x, y, z]| {
            let (xy, yx) = (d(x, y)?, d(y, x)?);
            let (yz, xz) = (d(y, z)?, d(x, z)?);
            Ok(((xy - yx).abs(), xy + yz - xz, d(x, x)?))
        })
        .collect::<Result<_>>()?;
    Ok(AxiomsReport {
        triples: triples.len(),
        symmetry_residual: rows.iter().map(|r| r.0).fold(0.0, f64::max),
        triangle_residual: if rows.is_empty() { 0.0 } else { rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min) },
        zero_residual: rows.iter().map(|r| r.2).fold(0.0, f64::max),
    })
}
