//! Adaptive Dormand–Prince 5(4) integrator for first-order systems.
//!
//! Steps whose stages leave the admissible region are rejected and retried
//! with a smaller step; if the step collapses below `h_min` for that reason
//! the run ends with [`Termination::Boundary`], otherwise with
//! [`Termination::StepFailure`].

use serde::{Deserialize, Serialize};

pub trait OdeSystem: Sync {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]);
    /// Whether `y` lies in the region where `rhs` may be evaluated.
    fn admissible(&self, _y: &[f64]) -> bool {
        true
    }
    /// Invariant projection applied every `project_every` accepted steps.
    fn project(&self, _t: f64, _y: &mut [f64]) {}
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Completed,
    Boundary,
    StepFailure,
}

#[derive(Debug, Clone)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: Option<f64>,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
    pub project_every: Option<usize>,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-9,
            atol: 1e-12,
            h_init: None,
            h_min: 1e-12,
            h_max: f64::INFINITY,
            max_steps: 1_000_000,
            project_every: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OdeSolution {
    pub t: Vec<f64>,
    pub y: Vec<Vec<f64>>,
    /// Right-hand side at each recorded node.
    pub dy: Vec<Vec<f64>>,
    pub termination: Termination,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl OdeSolution {
    pub fn last(&self) -> &[f64] {
        self.y.last().expect("solution has at least the initial node")
    }

    pub fn t_end(&self) -> f64 {
        *self.t.last().expect("solution has at least the initial node")
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order weights are the last row of A; E = b5 − b4
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

enum StepOutcome {
    Accepted { y_new: Vec<f64>, err: f64 },
    OutsideDomain,
}

fn try_step<S: OdeSystem + ?Sized>(sys: &S, t: f64, y: &[f64], h: f64, opts: &OdeOptions) -> StepOutcome {
    let n = y.len();
    let mut k = vec![vec![0.0; n]; 7];
    let mut stage = vec![0.0; n];
    sys.rhs(t, y, &mut k[0]);
    for s in 1..7 {
        for i in 0..n {
            let mut acc = y[i];
            for (j, kj) in k.iter().enumerate().take(s) {
                acc += h * A[s][j] * kj[i];
            }
            stage[i] = acc;
        }
        if !sys.admissible(&stage) {
            return StepOutcome::OutsideDomain;
        }
        sys.rhs(t + C[s] * h, &stage, &mut k[s]);
        if k[s].iter().any(|v| !v.is_finite()) {
            return StepOutcome::OutsideDomain;
        }
    }
    // stage 6 is the fifth-order solution
    let y_new = stage;
    let mut err: f64 = 0.0;
    for i in 0..n {
        let mut e = 0.0;
        for (j, kj) in k.iter().enumerate() {
            e += E[j] * kj[i];
        }
        let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
        err = err.max((h * e / sc).abs());
    }
    if !err.is_finite() {
        return StepOutcome::OutsideDomain;
    }
    StepOutcome::Accepted { y_new, err }
}

fn initial_step<S: OdeSystem + ?Sized>(sys: &S, t0: f64, y0: &[f64], span: f64, opts: &OdeOptions) -> f64 {
    if let Some(h) = opts.h_init {
        return h.min(span);
    }
    let mut f0 = vec![0.0; y0.len()];
    sys.rhs(t0, y0, &mut f0);
    let d0 = y0.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-5);
    let d1 = f0.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-5);
    (0.01 * d0 / d1).min(span).min(opts.h_max).max(opts.h_min * 10.0)
}

/// Integrate `sys` from `t0` to `t1 > t0`. Nodes are recorded at every
/// accepted step, or only at `outputs` (sorted, within `(t0, t1]`) when given;
/// the initial and final states are always recorded.
pub fn integrate<S: OdeSystem + ?Sized>(
    sys: &S,
    t0: f64,
    y0: &[f64],
    t1: f64,
    outputs: Option<&[f64]>,
    opts: &OdeOptions,
) -> OdeSolution {
    assert!(t1 >= t0, "integration runs forward");
    let n = sys.dim();
    assert_eq!(y0.len(), n);
    let record = |sol: &mut OdeSolution, t: f64, y: &[f64]| {
        let mut dy = vec![0.0; n];
        sys.rhs(t, y, &mut dy);
        sol.t.push(t);
        sol.y.push(y.to_vec());
        sol.dy.push(dy);
    };
    let mut sol = OdeSolution {
        t: Vec::new(),
        y: Vec::new(),
        dy: Vec::new(),
        termination: Termination::Completed,
        accepted_steps: 0,
        rejected_steps: 0,
    };
    record(&mut sol, t0, y0);
    if t1 == t0 {
        return sol;
    }
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut h = initial_step(sys, t0, y0, t1 - t0, opts);
    let mut next_out = 0usize;
    let outs: Vec<f64> = outputs.map(|o| o.iter().copied().filter(|&s| s > t0 && s <= t1).collect()).unwrap_or_default();
    let mut last_rejection_domain: bool;
    loop {
        if sol.accepted_steps + sol.rejected_steps >= opts.max_steps {
            sol.termination = Termination::StepFailure;
            break;
        }
        let target = if outputs.is_some() && next_out < outs.len() { outs[next_out] } else { t1 };
        let mut step = h.min(opts.h_max);
        let mut lands = false;
        if t + step >= target - 1e-14 * target.abs().max(1.0) {
            step = target - t;
            lands = true;
        }
        match try_step(sys, t, &y, step, opts) {
            StepOutcome::Accepted { y_new, err } if err <= 1.0 && sys.admissible(&y_new) => {
                sol.accepted_steps += 1;
                t = if lands { target } else { t + step };
                y = y_new;
                if let Some(every) = opts.project_every {
                    if sol.accepted_steps % every == 0 {
                        sys.project(t, &mut y);
                    }
                }
                let at_output = outputs.is_none() || (lands && next_out < outs.len());
                if lands && outputs.is_some() && next_out < outs.len() {
                    next_out += 1;
                }
                if at_output || t >= t1 {
                    if sol.t.last() != Some(&t) {
                        record(&mut sol, t, &y);
                    }
                }
                if t >= t1 {
                    break;
                }
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                // a landing step may be artificially short; don't let it shrink h
                h = if lands { h.max(step * factor) } else { step * factor };
                last_rejection_domain = false;
            }
            StepOutcome::Accepted { err, y_new } => {
                sol.rejected_steps += 1;
                last_rejection_domain = !sys.admissible(&y_new);
                h = if last_rejection_domain { step * 0.5 } else { step * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) };
            }
            StepOutcome::OutsideDomain => {
                sol.rejected_steps += 1;
                last_rejection_domain = true;
                h = step * 0.5;
            }
        }
        if h < opts.h_min {
            if sol.t.last() != Some(&t) {
                record(&mut sol, t, &y);
            }
            // near a singular boundary the error test, not the domain test,
            // rejects first; a collapse within reach of the edge still counts
            let mut dy = vec![0.0; n];
            sys.rhs(t, &y, &mut dy);
            let reach = 1e-8 * (1.0 + t.abs());
            let probe: Vec<f64> = y.iter().zip(&dy).map(|(a, b)| a + reach * b).collect();
            let at_edge = last_rejection_domain || !sys.admissible(&probe);
            sol.termination = if at_edge { Termination::Boundary } else { Termination::StepFailure };
            break;
        }
    }
    sol
}
