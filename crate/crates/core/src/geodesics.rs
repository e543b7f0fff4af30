//! Geodesic integration, image comparison, and the Finslerian distance by
//! multiple-start shooting.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FinslerError, Result};
use crate::metric::{FinslerFunction, FinslerStructure, TangentSample};
use crate::ode::{integrate, OdeOptions, OdeSystem, Termination};
use crate::sampling::random_direction;
use crate::tensor::spray_coefficients;
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Follow the geodesic forward from `x0` with velocity `y0`.
    #[default]
    Forward,
    /// Trace the geodesic that *arrives* at `x0` with velocity `y0`, going
    /// back in time; `s` then measures backward arc length.
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceEnd {
    LengthReached,
    DomainBoundary,
    StepFailure,
}

impl From<Termination> for TraceEnd {
    fn from(t: Termination) -> Self {
        match t {
            Termination::Completed => TraceEnd::LengthReached,
            Termination::Boundary => TraceEnd::DomainBoundary,
            Termination::StepFailure => TraceEnd::StepFailure,
        }
    }
}

/// Unit-speed geodesic sampled at increasing arc length `s_grid[0] = 0`.
/// `ys` always holds the forward velocity `dx/dt`, also for backward traces.
#[derive(Debug, Clone, Serialize)]
pub struct GeodesicTrace {
    pub s_grid: Vec<f64>,
    pub xs: Vec<Vec<f64>>,
    pub ys: Vec<Vec<f64>>,
    pub f_along: Vec<f64>,
    pub terminated_by: TraceEnd,
    pub orientation: Orientation,
}

impl GeodesicTrace {
    pub fn dim(&self) -> usize {
        self.xs[0].len()
    }

    pub fn len(&self) -> usize {
        self.s_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s_grid.is_empty()
    }

    pub fn length(&self) -> f64 {
        *self.s_grid.last().unwrap_or(&0.0)
    }

    pub fn start(&self) -> &[f64] {
        &self.xs[0]
    }

    pub fn end(&self) -> &[f64] {
        self.xs.last().expect("trace is non-empty")
    }

    /// `max |F(x(s), ẋ(s)) − 1|`.
    pub fn speed_drift(&self) -> f64 {
        self.f_along.iter().map(|f| (f - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Nodes `i0..=i1`, re-based so the slice starts at `s = 0`.
    pub fn slice(&self, i0: usize, i1: usize) -> GeodesicTrace {
        assert!(i0 < i1 && i1 < self.len());
        let s0 = self.s_grid[i0];
        GeodesicTrace {
            s_grid: self.s_grid[i0..=i1].iter().map(|s| s - s0).collect(),
            xs: self.xs[i0..=i1].to_vec(),
            ys: self.ys[i0..=i1].to_vec(),
            f_along: self.f_along[i0..=i1].to_vec(),
            terminated_by: if i1 + 1 == self.len() { self.terminated_by } else { TraceEnd::LengthReached },
            orientation: self.orientation,
        }
    }

    /// The curve as a function of its own grid parameter. For backward
    /// traces the stored velocity is negated so it matches `dx/ds`.
    pub fn curve(&self) -> Curve {
        let sign = match self.orientation {
            Orientation::Forward => 1.0,
            Orientation::Backward => -1.0,
        };
        Curve {
            t: self.s_grid.clone(),
            x: self.xs.clone(),
            dx: self.ys.iter().map(|y| y.iter().map(|v| v * sign).collect()).collect(),
        }
    }

    /// Whether consecutive nodes are equally spaced (to `1e-9` relative).
    pub fn uniform_step(&self) -> Option<f64> {
        if self.len() < 3 {
            return None;
        }
        let h = self.s_grid[1] - self.s_grid[0];
        let ok = self.s_grid.windows(2).take(self.len() - 2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h);
        ok.then_some(h)
    }
}

/// A sampled curve with derivatives, interpolated by cubic Hermite pieces.
#[derive(Debug, Clone)]
pub struct Curve {
    pub t: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub dx: Vec<Vec<f64>>,
}

impl Curve {
    fn interval(&self, t: f64) -> usize {
        let k = self.t.partition_point(|&s| s <= t);
        k.clamp(1, self.t.len() - 1) - 1
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        if self.t.len() == 1 {
            return self.x[0].clone();
        }
        let k = self.interval(t);
        let (t0, t1) = (self.t[k], self.t[k + 1]);
        let d = t1 - t0;
        let u = (t - t0) / d;
        let (u2, u3) = (u * u, u * u * u);
        let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let h10 = u3 - 2.0 * u2 + u;
        let h01 = -2.0 * u3 + 3.0 * u2;
        let h11 = u3 - u2;
        (0..self.x[k].len())
            .map(|i| {
                h00 * self.x[k][i] + h10 * d * self.dx[k][i] + h01 * self.x[k + 1][i] + h11 * d * self.dx[k + 1][i]
            })
            .collect()
    }

    fn dense(&self, per_interval: usize) -> Vec<f64> {
        let mut ts = Vec::with_capacity(self.t.len() * per_interval);
        for w in self.t.windows(2) {
            for j in 0..per_interval {
                ts.push(w[0] + (w[1] - w[0]) * j as f64 / per_interval as f64);
            }
        }
        ts.push(*self.t.last().expect("non-empty curve"));
        ts
    }

    /// Closest point of the curve to `p`: `(distance, parameter)`.
    pub fn closest(&self, p: &[f64]) -> (f64, f64) {
        let ts = self.dense(8);
        let pts: Vec<Vec<f64>> = ts.iter().map(|&t| self.eval(t)).collect();
        self.closest_with(p, &ts, &pts)
    }

    fn closest_with(&self, p: &[f64], ts: &[f64], pts: &[Vec<f64>]) -> (f64, f64) {
        let (j, _) = pts
            .iter()
            .map(|q| dist2(p, q))
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty curve");
        let lo = ts[j.saturating_sub(1)];
        let hi = ts[(j + 1).min(ts.len() - 1)];
        let f = |t: f64| dist2(p, &self.eval(t));
        let (mut a, mut b) = (lo, hi);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let (mut fc, mut fd) = (f(c), f(d));
        for _ in 0..60 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = f(d);
            }
        }
        let t = 0.5 * (a + b);
        let best = [(f(t), t), (dist2(p, &pts[j]), ts[j])]
            .into_iter()
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .expect("two candidates");
        (best.0.sqrt(), best.1)
    }

    /// Curve restricted to `[t_start, t_end]` of its parameter.
    pub fn truncate(&self, t_end: f64) -> Curve {
        let k = self.interval(t_end);
        let mut c = Curve { t: self.t[..=k].to_vec(), x: self.x[..=k].to_vec(), dx: self.dx[..=k].to_vec() };
        if t_end > c.t[k] {
            let h = 1e-7 * (self.t[k + 1] - self.t[k]);
            let xp = self.eval(t_end + h);
            let xm = self.eval(t_end - h);
            c.t.push(t_end);
            c.x.push(self.eval(t_end));
            c.dx.push(xp.iter().zip(&xm).map(|(a, b)| (a - b) / (2.0 * h)).collect());
        }
        c
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

fn directed_hausdorff(a: &Curve, b: &Curve) -> f64 {
    let tb = b.dense(8);
    let pb: Vec<Vec<f64>> = tb.iter().map(|&t| b.eval(t)).collect();
    a.dense(8)
        .par_iter()
        .map(|&t| b.closest_with(&a.eval(t), &tb, &pb).0)
        .reduce(|| 0.0, f64::max)
}

/// Hausdorff distance between the images of two curves (Euclidean in the chart).
pub fn image_hausdorff(a: &Curve, b: &Curve) -> f64 {
    directed_hausdorff(a, b).max(directed_hausdorff(b, a))
}

#[derive(Debug, Clone)]
pub struct GeodesicOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Record nodes at multiples of this arc length instead of at every step.
    pub output_step: Option<f64>,
    pub max_step: Option<f64>,
    pub orientation: Orientation,
    /// Rescale to unit speed every this many accepted steps.
    pub renormalize_every: Option<usize>,
}

impl GeodesicOptions {
    pub fn new(tol: &Tolerances) -> GeodesicOptions {
        GeodesicOptions {
            rtol: tol.rtol,
            atol: tol.atol,
            output_step: None,
            max_step: None,
            orientation: Orientation::Forward,
            renormalize_every: Some(100),
        }
    }

    fn ode(&self) -> OdeOptions {
        OdeOptions {
            rtol: self.rtol,
            atol: self.atol,
            h_max: self.max_step.unwrap_or(f64::INFINITY),
            project_every: self.renormalize_every,
            ..OdeOptions::default()
        }
    }
}

/// `ẍ + 2G(x, ẋ) = h(t) ẋ`, optionally time-reversed (then the velocity slot
/// holds `−ẋ`), optionally carrying the F-length as a last component.
struct GeodesicSystem<'a> {
    f: &'a FinslerStructure,
    sign: f64,
    h: Option<&'a (dyn Fn(f64) -> f64 + Sync)>,
    with_length: bool,
}

impl GeodesicSystem<'_> {
    fn forward_velocity(&self, w: &[f64]) -> Vec<f64> {
        w.iter().map(|v| v * self.sign).collect()
    }
}

impl OdeSystem for GeodesicSystem<'_> {
    fn dim(&self) -> usize {
        2 * self.f.dim() + usize::from(self.with_length)
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        let n = self.f.dim();
        let (x, w) = (&y[..n], &y[n..2 * n]);
        let v = self.forward_velocity(w);
        // G is only positively homogeneous, so reversal evaluates G(x, −w)
        let g = spray_coefficients(self.f, x, &v);
        let damp = self.h.map_or(0.0, |h| h(t));
        for i in 0..n {
            dy[i] = w[i];
            dy[n + i] = -2.0 * g[i] + damp * w[i];
        }
        if self.with_length {
            dy[2 * n] = self.f.eval_f64(x, &v);
        }
    }

    fn admissible(&self, y: &[f64]) -> bool {
        let n = self.f.dim();
        y.iter().all(|v| v.is_finite()) && self.f.domain().contains(&y[..n])
    }

    fn project(&self, _t: f64, y: &mut [f64]) {
        if self.h.is_some() {
            return;
        }
        let n = self.f.dim();
        let speed = self.f.eval_f64(&y[..n], &self.forward_velocity(&y[n..2 * n]));
        if speed.is_finite() && speed > 0.0 {
            for v in &mut y[n..2 * n] {
                *v /= speed;
            }
        }
    }
}

fn check_start(f: &FinslerStructure, x0: &[f64], y0: &[f64]) -> Result<f64> {
    TangentSample::new(x0.to_vec(), y0.to_vec())?;
    f.check_point(x0)?;
    let speed = f.eval_f64(x0, y0);
    if !(speed.is_finite() && speed > 0.0) {
        return Err(FinslerError::NotPositive { x: x0.to_vec(), y: y0.to_vec(), value: speed });
    }
    Ok(speed)
}

/// Unit-speed geodesic of length `length` through `(x0, y0)`; `y0` is
/// rescaled so that `F(x0, y0) = 1`.
pub fn integrate_geodesic(
    f: &FinslerStructure,
    x0: &[f64],
    y0: &[f64],
    length: f64,
    opts: &GeodesicOptions,
) -> Result<GeodesicTrace> {
    if !(length > 0.0 && length.is_finite()) {
        return Err(FinslerError::InvalidInput(format!("geodesic length must be positive, got {length}")));
    }
    let speed = check_start(f, x0, y0)?;
    let n = f.dim();
    let sign = match opts.orientation {
        Orientation::Forward => 1.0,
        Orientation::Backward => -1.0,
    };
    let sys = GeodesicSystem { f, sign, h: None, with_length: false };
    let mut state: Vec<f64> = x0.to_vec();
    state.extend(y0.iter().map(|v| sign * v / speed));
    let grid: Option<Vec<f64>> = opts.output_step.map(|h| {
        let count = (length / h + 1e-9).floor() as usize;
        let mut g: Vec<f64> = (1..=count).map(|k| k as f64 * h).collect();
        if g.last().is_none_or(|&l| l < length) {
            g.push(length);
        }
        g
    });
    let sol = integrate(&sys, 0.0, &state, length, grid.as_deref(), &opts.ode());
    let ys: Vec<Vec<f64>> = sol.y.iter().map(|s| sys.forward_velocity(&s[n..])).collect();
    let xs: Vec<Vec<f64>> = sol.y.iter().map(|s| s[..n].to_vec()).collect();
    let f_along = xs.iter().zip(&ys).map(|(x, y)| f.eval_f64(x, y)).collect();
    Ok(GeodesicTrace {
        s_grid: sol.t,
        xs,
        ys,
        f_along,
        terminated_by: sol.termination.into(),
        orientation: opts.orientation,
    })
}

/// Solution of `ẍ + 2G(x, ẋ) = h(t) ẋ` in its own parameter `t ∈ [0, T]`.
#[derive(Debug, Clone, Serialize)]
pub struct ParametrizedTrace {
    pub t_grid: Vec<f64>,
    pub xs: Vec<Vec<f64>>,
    pub ys: Vec<Vec<f64>>,
    /// F-length accumulated from `t = 0`.
    pub arc_length: Vec<f64>,
    pub f_along: Vec<f64>,
    pub terminated_by: TraceEnd,
}

impl ParametrizedTrace {
    pub fn curve(&self) -> Curve {
        Curve { t: self.t_grid.clone(), x: self.xs.clone(), dx: self.ys.clone() }
    }

    pub fn length(&self) -> f64 {
        *self.arc_length.last().unwrap_or(&0.0)
    }
}

pub fn integrate_geodesic_general(
    f: &FinslerStructure,
    x0: &[f64],
    y0: &[f64],
    h: &(dyn Fn(f64) -> f64 + Sync),
    t_end: f64,
    opts: &GeodesicOptions,
) -> Result<ParametrizedTrace> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(FinslerError::InvalidInput(format!("parameter span must be positive, got {t_end}")));
    }
    check_start(f, x0, y0)?;
    let n = f.dim();
    let sys = GeodesicSystem { f, sign: 1.0, h: Some(h), with_length: true };
    let mut state = x0.to_vec();
    state.extend_from_slice(y0);
    state.push(0.0);
    let ode = OdeOptions { project_every: None, ..opts.ode() };
    let sol = integrate(&sys, 0.0, &state, t_end, None, &ode);
    let xs: Vec<Vec<f64>> = sol.y.iter().map(|s| s[..n].to_vec()).collect();
    let ys: Vec<Vec<f64>> = sol.y.iter().map(|s| s[n..2 * n].to_vec()).collect();
    Ok(ParametrizedTrace {
        arc_length: sol.y.iter().map(|s| s[2 * n]).collect(),
        f_along: xs.iter().zip(&ys).map(|(x, y)| f.eval_f64(x, y)).collect(),
        t_grid: sol.t,
        xs,
        ys,
        terminated_by: sol.termination.into(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GeodesicReversal {
    pub residual: f64,
    pub reversible: bool,
    /// F-length of the reverse geodesic up to its closest approach to the start.
    pub reverse_length: f64,
}

/// Integrate from `(x(L), −ẋ(L))` and compare images with the original trace.
pub fn geodesic_reversibility_check(
    f: &FinslerStructure,
    trace: &GeodesicTrace,
    tol: &Tolerances,
) -> Result<GeodesicReversal> {
    if trace.len() < 2 {
        return Err(FinslerError::InvalidInput("trace has fewer than two nodes".into()));
    }
    let orig = trace.curve();
    let x_end = trace.end().to_vec();
    let v_end: Vec<f64> = orig.dx.last().expect("non-empty").iter().map(|v| -v).collect();
    // F-length of the reversed curve, an estimate of how far the reverse geodesic must run
    let ts = orig.dense(8);
    let mut rev_len = 0.0;
    for w in ts.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let h = 1e-6 * (w[1] - w[0]);
        let xm = orig.eval(mid);
        let d: Vec<f64> = orig.eval(mid - h).iter().zip(orig.eval(mid + h)).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        rev_len += f.eval_f64(&xm, &d) * (w[1] - w[0]);
    }
    let mut opts = GeodesicOptions::new(tol);
    opts.max_step = Some(0.05);
    let reverse = integrate_geodesic(f, &x_end, &v_end, rev_len * 1.2 + 0.05, &opts)?;
    let rc = reverse.curve();
    let (_, t_close) = rc.closest(trace.start());
    let cut = rc.truncate(t_close);
    let residual = image_hausdorff(&orig, &cut);
    Ok(GeodesicReversal { residual, reversible: residual <= tol.geodesic_reversible, reverse_length: t_close })
}

#[derive(Debug, Clone, Serialize)]
pub struct ProjectiveEquivalence {
    pub equivalent: bool,
    /// `P = (Ḡ − G)·y / |y|²` per sample.
    pub p_values: Vec<f64>,
    /// Sine of the angle between `Ḡ − G` and `y`, per sample.
    pub sines: Vec<f64>,
    pub max_sine: f64,
    /// `max |P(x, 2y) − 2P(x, y)|`.
    pub homogeneity_residual: f64,
}

pub fn projective_equivalence_check(
    f: &FinslerStructure,
    f_bar: &FinslerStructure,
    samples: &[TangentSample],
    tol: &Tolerances,
) -> Result<ProjectiveEquivalence> {
    if f.dim() != f_bar.dim() {
        return Err(FinslerError::InvalidInput("structures have different dimensions".into()));
    }
    let diff = |x: &[f64], y: &[f64]| -> (Vec<f64>, f64) {
        let g = spray_coefficients(f, x, y);
        let gb = spray_coefficients(f_bar, x, y);
        let scale = g.iter().chain(&gb).map(|v| v.abs()).fold(0.0, f64::max);
        (g.iter().zip(&gb).map(|(a, b)| b - a).collect(), scale)
    };
    let rows: Vec<(f64, f64, f64)> = samples
        .par_iter()
        .map(|s| {
            f.check_sample(s)?;
            f_bar.check_sample(s)?;
            let (d, scale) = diff(&s.x, &s.y);
            let yy: f64 = s.y.iter().map(|v| v * v).sum();
            let p = d.iter().zip(&s.y).map(|(a, b)| a * b).sum::<f64>() / yy;
            let perp: f64 = d.iter().zip(&s.y).map(|(a, b)| (a - p * b).powi(2)).sum::<f64>().sqrt();
            let norm: f64 = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            let sine = perp / (norm + 1e-14 * (scale + yy));
            let y2: Vec<f64> = s.y.iter().map(|v| 2.0 * v).collect();
            let (d2, _) = diff(&s.x, &y2);
            let p2 = d2.iter().zip(&y2).map(|(a, b)| a * b).sum::<f64>() / (4.0 * yy);
            Ok((p, sine, (p2 - 2.0 * p).abs()))
        })
        .collect::<Result<_>>()?;
    let max_sine = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(ProjectiveEquivalence {
        equivalent: max_sine <= tol.projective_sine,
        p_values: rows.iter().map(|r| r.0).collect(),
        sines: rows.iter().map(|r| r.1).collect(),
        max_sine,
        homogeneity_residual: rows.iter().map(|r| r.2).fold(0.0, f64::max),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CompletenessProbe {
    pub length: f64,
    pub forward_complete: bool,
    pub backward_complete: bool,
    /// Starts `(x, y)` whose forward or backward geodesic hit the boundary.
    pub forward_failures: Vec<TangentSample>,
    pub backward_failures: Vec<TangentSample>,
}

/// Extendability of geodesics to `±length` without boundary events; a probe, not a proof.
pub fn completeness_probe(
    f: &FinslerStructure,
    starts: &[TangentSample],
    length: f64,
    tol: &Tolerances,
) -> Result<CompletenessProbe> {
    let run = |orientation: Orientation| -> Result<Vec<TangentSample>> {
        let mut opts = GeodesicOptions::new(tol);
        opts.orientation = orientation;
        let ends: Vec<(TangentSample, TraceEnd)> = starts
            .par_iter()
            .map(|s| Ok((s.clone(), integrate_geodesic(f, &s.x, &s.y, length, &opts)?.terminated_by)))
            .collect::<Result<_>>()?;
        Ok(ends.into_iter().filter(|(_, e)| *e != TraceEnd::LengthReached).map(|(s, _)| s).collect())
    };
    let forward_failures = run(Orientation::Forward)?;
    let backward_failures = run(Orientation::Backward)?;
    Ok(CompletenessProbe {
        length,
        forward_complete: forward_failures.is_empty(),
        backward_complete: backward_failures.is_empty(),
        forward_failures,
        backward_failures,
    })
}

/// F-length of the straight chord `x0 → x1` (an upper bound on `d_F`).
pub fn line_length(f: &FinslerStructure, x0: &[f64], x1: &[f64]) -> f64 {
    const NODES: [f64; 5] = [-0.906_179_845_938_664, -0.538_469_310_105_683, 0.0, 0.538_469_310_105_683, 0.906_179_845_938_664];
    const WEIGHTS: [f64; 5] = [0.236_926_885_056_189, 0.478_628_670_499_366, 0.568_888_888_888_889, 0.478_628_670_499_366, 0.236_926_885_056_189];
    let d: Vec<f64> = x0.iter().zip(x1).map(|(a, b)| b - a).collect();
    let panels = 64;
    let mut total = 0.0;
    for p in 0..panels {
        let (a, b) = (p as f64 / panels as f64, (p + 1) as f64 / panels as f64);
        for (node, w) in NODES.iter().zip(WEIGHTS) {
            let t = 0.5 * (a + b) + 0.5 * (b - a) * node;
            let x: Vec<f64> = x0.iter().zip(&d).map(|(u, v)| u + t * v).collect();
            total += 0.5 * (b - a) * w * f.eval_f64(&x, &d);
        }
    }
    total
}

/// Coarse initial directions: a circle grid in 2D, a Fibonacci sphere in 3D,
/// seeded random directions beyond.
pub fn direction_grid(n: usize, count: Option<usize>) -> Vec<Vec<f64>> {
    match n {
        2 => {
            let m = count.unwrap_or(64);
            (0..m)
                .map(|k| {
                    let th = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
                    vec![th.cos(), th.sin()]
                })
                .collect()
        }
        3 => {
            let m = count.unwrap_or(128);
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..m)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / m as f64;
                    let r = (1.0 - z * z).sqrt();
                    let th = golden * k as f64;
                    vec![r * th.cos(), r * th.sin(), z]
                })
                .collect()
        }
        _ => {
            let m = count.unwrap_or(64 << (n - 2).min(4));
            let mut rng = ChaCha8Rng::seed_from_u64(0x6e0d_e51c);
            (0..m)
                .map(|_| {
                    let d = random_direction(n, &mut rng);
                    let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
                    d.into_iter().map(|v| v / norm).collect()
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone)]
pub struct ShootingOptions {
    pub tol: Tolerances,
    pub directions: Option<usize>,
    /// Newton iterations per start.
    pub max_polish: usize,
    /// Polished starts besides the chord guess.
    pub max_candidates: usize,
}

impl ShootingOptions {
    pub fn new(tol: &Tolerances) -> ShootingOptions {
        ShootingOptions { tol: tol.clone(), directions: None, max_polish: 200, max_candidates: 4 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ShootingResult {
    pub from: Vec<f64>,
    pub to: Vec<f64>,
    pub distance: f64,
    /// Initial direction with `F(x0, y0) = 1`.
    pub initial_direction: Vec<f64>,
    #[serde(skip)]
    pub trace: GeodesicTrace,
    pub converged: bool,
    /// `|x(d_F) − target|` of the returned trace.
    pub residual: f64,
    /// Number of distinct converged geodesics found.
    pub multiplicity: usize,
    /// F-length of the straight chord.
    pub line_length: f64,
}

/// Endpoint of the constant-speed geodesic `t ∈ [0, 1]` with `ẋ(0) = v`.
fn exp_map(f: &FinslerStructure, x0: &[f64], v: &[f64], ode: &OdeOptions) -> Option<Vec<f64>> {
    let n = x0.len();
    let sys = GeodesicSystem { f, sign: 1.0, h: None, with_length: false };
    let mut state = x0.to_vec();
    state.extend_from_slice(v);
    let sol = integrate(&sys, 0.0, &state, 1.0, Some(&[1.0]), ode);
    (sol.termination == Termination::Completed).then(|| sol.last()[..n].to_vec())
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

struct Polished {
    v: Vec<f64>,
    residual: f64,
}

fn polish(f: &FinslerStructure, x0: &[f64], x1: &[f64], v0: Vec<f64>, opts: &ShootingOptions) -> Option<Polished> {
    let n = x0.len();
    let ode = OdeOptions { rtol: opts.tol.rtol, atol: opts.tol.atol, ..OdeOptions::default() };
    let resid = |v: &[f64]| -> Option<Vec<f64>> {
        exp_map(f, x0, v, &ode).map(|e| e.iter().zip(x1).map(|(a, b)| a - b).collect())
    };
    let mut v = v0;
    let mut r = resid(&v)?;
    let mut rn = norm(&r);
    for _ in 0..opts.max_polish {
        if rn <= opts.tol.shooting_target {
            break;
        }
        let delta = 1e-6 * norm(&v).max(1e-3);
        let mut jac = DMatrix::zeros(n, n);
        let mut ok = true;
        for j in 0..n {
            let mut vp = v.clone();
            let mut vm = v.clone();
            vp[j] += delta;
            vm[j] -= delta;
            match (resid(&vp), resid(&vm)) {
                (Some(a), Some(b)) => {
                    for i in 0..n {
                        jac[(i, j)] = (a[i] - b[i]) / (2.0 * delta);
                    }
                }
                _ => ok = false,
            }
        }
        if !ok {
            break;
        }
        let Some(step) = jac.lu().solve(&(-DVector::from_column_slice(&r))) else { break };
        let mut lambda = 1.0;
        let mut improved = false;
        while lambda >= 1.0 / 64.0 {
            let cand: Vec<f64> = v.iter().zip(step.iter()).map(|(a, b)| a + lambda * b).collect();
            if let Some(rc) = resid(&cand) {
                let rcn = norm(&rc);
                if rcn < rn {
                    v = cand;
                    r = rc;
                    rn = rcn;
                    improved = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !improved {
            break;
        }
    }
    Some(Polished { v, residual: rn })
}

/// Closest approach to `target` of the unit-speed geodesic along `u`:
/// `(distance, arc length at closest approach)`.
fn coarse_probe(f: &FinslerStructure, x0: &[f64], u: &[f64], target: &[f64], length: f64, tol: &Tolerances) -> (f64, f64) {
    let mut opts = GeodesicOptions::new(tol);
    opts.rtol = tol.rtol.max(1e-7);
    opts.max_step = Some(length / 16.0);
    match integrate_geodesic(f, x0, u, length, &opts) {
        Ok(tr) if tr.len() >= 2 => tr.curve().closest(target),
        _ => (f64::INFINITY, 0.0),
    }
}

fn neighbours(dirs: &[Vec<f64>], k: usize) -> Vec<usize> {
    if dirs[0].len() == 2 {
        let m = dirs.len();
        return vec![(k + m - 1) % m, (k + 1) % m];
    }
    let mut by: Vec<(f64, usize)> =
        dirs.iter().enumerate().filter(|&(j, _)| j != k).map(|(j, d)| (dist2(d, &dirs[k]), j)).collect();
    by.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    by.into_iter().take(6).map(|(_, j)| j).collect()
}

/// `d_F(x0, x1)` by multiple-start shooting; never symmetrised.
pub fn finsler_distance(f: &FinslerStructure, x0: &[f64], x1: &[f64], opts: &ShootingOptions) -> Result<ShootingResult> {
    let n = f.dim();
    if x0.len() != n || x1.len() != n {
        return Err(FinslerError::InvalidInput(format!("points must have {n} coordinates")));
    }
    f.check_point(x0)?;
    f.check_point(x1)?;
    let chord: Vec<f64> = x0.iter().zip(x1).map(|(a, b)| b - a).collect();
    if norm(&chord) <= 1e-14 {
        let y = vec![0.0; n];
        return Ok(ShootingResult {
            from: x0.to_vec(),
            to: x1.to_vec(),
            distance: 0.0,
            initial_direction: y.clone(),
            trace: GeodesicTrace {
                s_grid: vec![0.0],
                xs: vec![x0.to_vec()],
                ys: vec![y],
                f_along: vec![1.0],
                terminated_by: TraceEnd::LengthReached,
                orientation: Orientation::Forward,
            },
            converged: true,
            residual: 0.0,
            multiplicity: 1,
            line_length: 0.0,
        });
    }
    let l_line = line_length(f, x0, x1);
    let dirs = direction_grid(n, opts.directions);
    let probe_len = 1.05 * l_line + 1e-3;
    let probes: Vec<(f64, f64)> =
        dirs.par_iter().map(|u| coarse_probe(f, x0, u, x1, probe_len, &opts.tol)).collect();
    let mut minima: Vec<usize> = (0..dirs.len())
        .filter(|&k| probes[k].0.is_finite() && neighbours(&dirs, k).iter().all(|&j| probes[k].0 <= probes[j].0))
        .collect();
    minima.sort_by(|&a, &b| probes[a].0.total_cmp(&probes[b].0).then(a.cmp(&b)));
    minima.truncate(opts.max_candidates);
    let mut starts: Vec<Vec<f64>> = vec![chord.clone()];
    for k in minima {
        let speed = f.eval_f64(x0, &dirs[k]);
        starts.push(dirs[k].iter().map(|v| v * probes[k].1 / speed).collect());
    }
    let polished: Vec<Polished> = starts.into_par_iter().filter_map(|v| polish(f, x0, x1, v, opts)).collect();
    let mut converged: Vec<(f64, Vec<f64>)> = polished
        .iter()
        .filter(|p| p.residual <= opts.tol.shooting_converged)
        .map(|p| (f.eval_f64(x0, &p.v), p.v.clone()))
        .collect();
    converged.sort_by(|a, b| {
        a.0.total_cmp(&b.0).then_with(|| {
            a.1.iter().zip(&b.1).map(|(u, v)| u.total_cmp(v)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    let mut distinct: Vec<&(f64, Vec<f64>)> = Vec::new();
    for c in &converged {
        if distinct.iter().all(|d| norm(&d.1.iter().zip(&c.1).map(|(a, b)| a - b).collect::<Vec<_>>()) > 1e-6 * (1.0 + norm(&c.1))) {
            distinct.push(c);
        }
    }
    let (best_v, newton_ok) = match distinct.first() {
        Some((_, v)) => (v.clone(), true),
        None => {
            let best = polished
                .iter()
                .min_by(|a, b| a.residual.total_cmp(&b.residual))
                .ok_or_else(|| FinslerError::NoGeodesic { from: x0.to_vec(), to: x1.to_vec(), residual: f64::INFINITY })?;
            (best.v.clone(), false)
        }
    };
    let distance = f.eval_f64(x0, &best_v);
    let trace = integrate_geodesic(f, x0, &best_v, distance, &GeodesicOptions::new(&opts.tol))?;
    let residual = norm(&trace.end().iter().zip(x1).map(|(a, b)| a - b).collect::<Vec<_>>());
    let complete = trace.terminated_by == TraceEnd::LengthReached;
    Ok(ShootingResult {
        from: x0.to_vec(),
        to: x1.to_vec(),
        distance: trace.length(),
        initial_direction: best_v.iter().map(|v| v / distance).collect(),
        converged: newton_ok && complete && residual <= 1e-6,
        residual,
        multiplicity: distinct.len(),
        line_length: l_line,
        trace,
    })
}
