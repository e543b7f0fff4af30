//! Pointwise tensors of a Finsler structure: fundamental tensor, spray,
//! nonlinear and Berwald connection, Riemann curvature `R^i_k`, flag
//! curvature, Ricci scalar and tensor, plus the Einstein and Berwald-parallel
//! Ricci diagnostics and the Ricci-derived metric.
//!
//! Every derivative is taken by nested forward-mode dual numbers: the
//! generic `*_generic` functions work over any [`Scalar`], so the next layer
//! up differentiates them by evaluating on `Dual<T>` or `HyperDual<T>`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::dual::{basis, lift, seed, seed2, Dual, HyperDual, Scalar};
use crate::error::{FinslerError, Result};
use crate::metric::{FinslerFunction, FinslerStructure, TangentSample};
use crate::tolerance::Tolerances;

fn energy<M: FinslerFunction, T: Scalar>(m: &M, x: &[T], y: &[T]) -> T {
    let f = m.eval(x, y);
    f * f * 0.5
}

/// `g_ij = [½F²]_{y^i y^j}`, row-major.
pub fn fundamental_generic<M: FinslerFunction, T: Scalar>(m: &M, x: &[T], y: &[T]) -> Vec<T> {
    let n = x.len();
    let xs = seed2(x, None, None);
    let mut g = vec![T::zero(); n * n];
    for h in 0..n {
        let eh = basis::<T>(n, h);
        for k in h..n {
            let ek = basis::<T>(n, k);
            let v = energy(m, &xs, &seed2(y, Some(&eh), Some(&ek))).eps.eps;
            g[h * n + k] = v;
            g[k * n + h] = v;
        }
    }
    g
}

/// Solve `a z = b` by Gaussian elimination with partial pivoting (pivots
/// chosen on real parts). A singular system yields NaNs.
fn solve_generic<T: Scalar>(mut a: Vec<T>, mut b: Vec<T>) -> Vec<T> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i * n + col].value().abs().total_cmp(&a[j * n + col].value().abs()))
            .unwrap_or(col);
        if !(a[pivot * n + col].value().abs() > 1e-300) {
            return vec![T::from_f64(f64::NAN); n];
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        let inv = a[col * n + col].recip();
        for row in (col + 1)..n {
            // no shortcut on a zero factor: its dual parts may not vanish
            let factor = a[row * n + col] * inv;
            for k in col..n {
                let sub = factor * a[col * n + k];
                a[row * n + k] -= sub;
            }
            let sub = factor * b[col];
            b[row] -= sub;
        }
    }
    let mut z = vec![T::zero(); n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in (row + 1)..n {
            acc -= a[row * n + k] * z[k];
        }
        z[row] = acc / a[row * n + row];
    }
    z
}

/// Spray coefficients `G^i = ¼ g^{ih}(∂²F²/∂y^h∂x^j y^j − ∂F²/∂x^h)`.
pub fn spray_generic<M: FinslerFunction, T: Scalar>(m: &M, x: &[T], y: &[T]) -> Vec<T> {
    let n = x.len();
    let g = fundamental_generic(m, x, y);
    let mut rhs = vec![T::zero(); n];
    // x perturbed along y in the inner slot, y along e_h in the outer slot
    let x_along_y = seed2(x, None, Some(y));
    for (h, r) in rhs.iter_mut().enumerate() {
        let eh = basis::<T>(n, h);
        let mixed = energy(m, &x_along_y, &seed2(y, Some(&eh), None)).eps.eps;
        let dx = energy(m, &seed(x, &eh), &lift(y)).eps;
        *r = mixed - dx;
    }
    // F² = 2L, so the ¼ of the F² formula becomes ½ in terms of L
    solve_generic(g, rhs).into_iter().map(|z| z * 0.5).collect()
}

/// Spray coefficients and their derivatives at one site.
struct SprayJet<T> {
    n: usize,
    g: Vec<T>,
    /// `∂G^i/∂y^j` at `[i*n + j]`.
    dy: Vec<T>,
    /// `∂²G^i/∂y^j∂y^k` at `[(i*n + j)*n + k]`.
    dyy: Vec<T>,
    /// `∂G^i/∂x^k` at `[i*n + k]`.
    dx: Vec<T>,
    /// `y^j ∂²G^i/∂x^j∂y^k` at `[i*n + k]`.
    dxy: Vec<T>,
}

fn spray_vertical_jet<M: FinslerFunction, T: Scalar>(m: &M, x: &[T], y: &[T]) -> (Vec<T>, Vec<T>, Vec<T>) {
    let n = x.len();
    let xs: Vec<HyperDual<T>> = seed2(x, None, None);
    let mut g = vec![T::zero(); n];
    let mut dy = vec![T::zero(); n * n];
    let mut dyy = vec![T::zero(); n * n * n];
    for j in 0..n {
        let ej = basis::<T>(n, j);
        for k in j..n {
            let ek = basis::<T>(n, k);
            let gs = spray_generic(m, &xs, &seed2(y, Some(&ej), Some(&ek)));
            for i in 0..n {
                let v = gs[i].eps.eps;
                dyy[(i * n + j) * n + k] = v;
                dyy[(i * n + k) * n + j] = v;
                if j == k {
                    dy[i * n + j] = gs[i].eps.re;
                    g[i] = gs[i].re.re;
                }
            }
        }
    }
    (g, dy, dyy)
}

fn spray_jet<M: FinslerFunction, T: Scalar>(m: &M, x: &[T], y: &[T]) -> SprayJet<T> {
    let n = x.len();
    let (g, dy, dyy) = spray_vertical_jet(m, x, y);
    let mut dx = vec![T::zero(); n * n];
    let mut dxy = vec![T::zero(); n * n];
    let x_along_y = seed2(x, None, Some(y));
    let ys = lift(y);
    for k in 0..n {
        let ek = basis::<T>(n, k);
        let mixed = spray_generic(m, &x_along_y, &seed2(y, Some(&ek), None));
        let horiz = spray_generic(m, &seed(x, &ek), &ys);
        for i in 0..n {
            dxy[i * n + k] = mixed[i].eps.eps;
            dx[i * n + k] = horiz[i].eps;
        }
    }
    SprayJet { n, g, dy, dyy, dx, dxy }
}

fn riemann_from_jet<T: Scalar>(jet: &SprayJet<T>) -> Vec<T> {
    let n = jet.n;
    let mut r = vec![T::zero(); n * n];
    for i in 0..n {
        for k in 0..n {
            let mut v = jet.dx[i * n + k] * 2.0 - jet.dxy[i * n + k];
            for j in 0..n {
                v += jet.g[j] * jet.dyy[(i * n + j) * n + k] * 2.0;
                v -= jet.dy[i * n + j] * jet.dy[j * n + k];
            }
            r[i * n + k] = v;
        }
    }
    r
}

/// `R^i_k = 2∂G^i/∂x^k − y^j∂²G^i/∂x^j∂y^k + 2G^j∂²G^i/∂y^j∂y^k − ∂G^i/∂y^j ∂G^j/∂y^k`.
pub fn riemann_generic<M: FinslerFunction, T: Scalar>(m: &M, x: &[T], y: &[T]) -> Vec<T> {
    riemann_from_jet(&spray_jet(m, x, y))
}

/// `R^k_k`, which also equals `Ric_ij y^i y^j`.
pub fn riemann_trace_generic<M: FinslerFunction, T: Scalar>(m: &M, x: &[T], y: &[T]) -> T {
    let n = x.len();
    let r = riemann_generic(m, x, y);
    (0..n).fold(T::zero(), |acc, i| acc + r[i * n + i])
}

/// `Ric_ij = {½ R^k_k}_{y^i y^j}`, row-major.
pub fn ricci_tensor_generic<M: FinslerFunction, T: Scalar>(m: &M, x: &[T], y: &[T]) -> Vec<T> {
    let n = x.len();
    let xs: Vec<HyperDual<T>> = seed2(x, None, None);
    let mut ric = vec![T::zero(); n * n];
    for h in 0..n {
        let eh = basis::<T>(n, h);
        for k in h..n {
            let ek = basis::<T>(n, k);
            let v = riemann_trace_generic(m, &xs, &seed2(y, Some(&eh), Some(&ek))).eps.eps * 0.5;
            ric[h * n + k] = v;
            ric[k * n + h] = v;
        }
    }
    ric
}

fn matrix(n: usize, flat: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(n, n, flat)
}

fn finite_or(what: &'static str, s: &TangentSample, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(FinslerError::NonFinite { what, x: s.x.clone(), y: s.y.clone() })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricTensor {
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    pub site: TangentSample,
}

/// `g_ij` without the positive-definiteness check.
pub fn fundamental_matrix(f: &FinslerStructure, s: &TangentSample) -> Result<DMatrix<f64>> {
    f.check_sample(s)?;
    let g = fundamental_generic(f, &s.x, &s.y);
    finite_or("fundamental tensor", s, &g)?;
    Ok(matrix(s.x.len(), &g))
}

pub fn fundamental_tensor(f: &FinslerStructure, s: &TangentSample, tol: &Tolerances) -> Result<MetricTensor> {
    let g = fundamental_matrix(f, s)?;
    let min_eigenvalue = g.symmetric_eigenvalues().min();
    if !(min_eigenvalue > tol.convexity) {
        return Err(FinslerError::StrongConvexity { x: s.x.clone(), y: s.y.clone(), min_eigenvalue });
    }
    let g_inv = g.clone().try_inverse().ok_or(FinslerError::StrongConvexity {
        x: s.x.clone(),
        y: s.y.clone(),
        min_eigenvalue,
    })?;
    Ok(MetricTensor { g, g_inv, site: s.clone() })
}

#[derive(Debug, Clone, Serialize)]
pub struct SprayData {
    /// `G^i`.
    pub coefficients: DVector<f64>,
    /// Nonlinear connection `N^i_j = ∂G^i/∂y^j`.
    pub connection: DMatrix<f64>,
    /// Berwald coefficients: `berwald[i][(j, k)] = ∂²G^i/∂y^j∂y^k`.
    pub berwald: Vec<DMatrix<f64>>,
    pub site: TangentSample,
}

/// Spray coefficients at `(x, y)` without any checks (the integrator's hot path).
pub fn spray_coefficients(f: &FinslerStructure, x: &[f64], y: &[f64]) -> Vec<f64> {
    spray_generic(f, x, y)
}

pub fn spray(f: &FinslerStructure, s: &TangentSample) -> Result<SprayData> {
    f.check_sample(s)?;
    let n = s.x.len();
    let (g, dy, dyy) = spray_vertical_jet(f, &s.x, &s.y);
    finite_or("spray", s, &g)?;
    finite_or("spray derivatives", s, &dyy)?;
    Ok(SprayData {
        coefficients: DVector::from_vec(g),
        connection: matrix(n, &dy),
        berwald: (0..n).map(|i| matrix(n, &dyy[i * n * n..(i + 1) * n * n])).collect(),
        site: s.clone(),
    })
}

/// `R^i_k` as a matrix with row `i`, column `k`.
pub fn riemann_curvature(f: &FinslerStructure, s: &TangentSample) -> Result<DMatrix<f64>> {
    f.check_sample(s)?;
    let r = riemann_generic(f, &s.x, &s.y);
    finite_or("Riemann curvature", s, &r)?;
    Ok(matrix(s.x.len(), &r))
}

/// `Ric_ij y^i y^j` (equivalently `R^k_k`); no checks.
pub fn ricci_quadratic(f: &FinslerStructure, x: &[f64], y: &[f64]) -> f64 {
    riemann_trace_generic(f, x, y)
}

#[derive(Debug, Clone, Serialize)]
pub struct Ricci {
    /// `Ric = R^i_i / F²`.
    pub scalar: f64,
    pub tensor: DMatrix<f64>,
}

pub fn ricci(f: &FinslerStructure, s: &TangentSample) -> Result<Ricci> {
    f.check_sample(s)?;
    let fv = f.eval_f64(&s.x, &s.y);
    let trace = riemann_trace_generic(f, &s.x, &s.y);
    let tensor = ricci_tensor_generic(f, &s.x, &s.y);
    finite_or("Ricci tensor", s, &tensor)?;
    finite_or("Ricci scalar", s, &[trace, fv])?;
    Ok(Ricci { scalar: trace / (fv * fv), tensor: matrix(s.x.len(), &tensor) })
}

fn flag_from_parts(g: &DMatrix<f64>, r: &DMatrix<f64>, y: &[f64], u: &[f64], tol: &Tolerances) -> Result<f64> {
    let yv = DVector::from_column_slice(y);
    let uv = DVector::from_column_slice(u);
    let gyy = yv.dot(&(g * &yv));
    let guu = uv.dot(&(g * &uv));
    let gyu = yv.dot(&(g * &uv));
    let denom = gyy * guu - gyu * gyu;
    if !(denom > tol.flag_denominator * gyy * guu) {
        return Err(FinslerError::DegenerateFlag);
    }
    let ru = r * &uv;
    Ok(uv.dot(&(g * ru)) / denom)
}

/// `K(P, y) = g_y(u, R_y u) / (g_y(y,y) g_y(u,u) − g_y(y,u)²)` for `P = span{y, u}`.
pub fn flag_curvature(f: &FinslerStructure, s: &TangentSample, u: &[f64], tol: &Tolerances) -> Result<f64> {
    if u.len() != s.y.len() {
        return Err(FinslerError::InvalidInput("flag edge has the wrong dimension".into()));
    }
    let g = fundamental_matrix(f, s)?;
    let r = riemann_curvature(f, s)?;
    flag_from_parts(&g, &r, &s.y, u, tol)
}

/// Everything computable at one site.
#[derive(Debug, Clone, Serialize)]
pub struct CurvatureReport {
    pub site: TangentSample,
    pub g: DMatrix<f64>,
    pub spray: DVector<f64>,
    pub riemann: DMatrix<f64>,
    pub ric_scalar: f64,
    pub ric_tensor: DMatrix<f64>,
    pub flagpole_edge: Option<Vec<f64>>,
    pub flag: Option<f64>,
    pub flags: Vec<String>,
}

pub fn curvature_report(
    f: &FinslerStructure,
    s: &TangentSample,
    u: Option<&[f64]>,
    tol: &Tolerances,
) -> Result<CurvatureReport> {
    let metric = fundamental_tensor(f, s, tol)?;
    let spray = DVector::from_vec(spray_coefficients(f, &s.x, &s.y));
    let riemann = riemann_curvature(f, s)?;
    let ric = ricci(f, s)?;
    let flag = match u {
        Some(u) => Some(flag_from_parts(&metric.g, &riemann, &s.y, u, tol)?),
        None => None,
    };
    let eig = ric.tensor.symmetric_eigenvalues();
    let scale = metric.g.amax();
    let mut flags = Vec::new();
    if eig.max() < -tol.einstein * scale {
        flags.push("ric_negative_definite".to_string());
    } else if eig.min() > tol.einstein * scale {
        flags.push("ric_positive_definite".to_string());
    } else if eig.amax() <= tol.einstein * scale {
        flags.push("ric_zero".to_string());
    } else {
        flags.push("ric_indefinite".to_string());
    }
    Ok(CurvatureReport {
        site: s.clone(),
        g: metric.g,
        spray,
        riemann,
        ric_scalar: ric.scalar,
        ric_tensor: ric.tensor,
        flagpole_edge: u.map(<[f64]>::to_vec),
        flag,
        flags,
    })
}

/// Residual of the scalar-curvature identity
/// `R^i_k = λ F² (δ^i_k − F^{-1} F_{y^k} y^i)` (max-abs, scaled by `F²`).
pub fn scalar_curvature_residual(f: &FinslerStructure, s: &TangentSample, lambda: f64) -> Result<f64> {
    let r = riemann_curvature(f, s)?;
    let n = s.x.len();
    let fv = f.eval_f64(&s.x, &s.y);
    let mut worst: f64 = 0.0;
    for k in 0..n {
        let fyk = f.eval(&lift(&s.x), &seed(&s.y, &basis::<f64>(n, k))).eps;
        for i in 0..n {
            let delta = if i == k { 1.0 } else { 0.0 };
            let expected = lambda * fv * fv * (delta - fyk * s.y[i] / fv);
            worst = worst.max((r[(i, k)] - expected).abs() / (fv * fv));
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Serialize)]
pub struct EinsteinReport {
    pub is_einstein: bool,
    /// Least-squares fit of `Ric_ij ≈ −c² g_ij` over the samples.
    pub c_squared: f64,
    pub c_estimate: f64,
    /// `max ‖Ric + c² g‖_F / ‖g‖_F`.
    pub max_residual: f64,
    /// `c² > 0`, i.e. the fitted Ricci tensor is negative-definite.
    pub negative_definite: bool,
    pub samples: usize,
}

pub const EINSTEIN_MIN_SAMPLES: usize = 10;

pub fn einstein_check(f: &FinslerStructure, samples: &[TangentSample], tol: &Tolerances) -> Result<EinsteinReport> {
    if samples.len() < EINSTEIN_MIN_SAMPLES {
        return Err(FinslerError::InvalidInput(format!(
            "einstein_check needs at least {EINSTEIN_MIN_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    let pairs: Vec<(DMatrix<f64>, DMatrix<f64>)> = samples
        .par_iter()
        .map(|s| Ok((fundamental_matrix(f, s)?, ricci(f, s)?.tensor)))
        .collect::<Result<_>>()?;
    let (num, den) = pairs.iter().fold((0.0, 0.0), |(a, b), (g, ric)| (a + ric.dot(g), b + g.dot(g)));
    let c_squared = -num / den;
    let max_residual = pairs
        .iter()
        .map(|(g, ric)| (ric + g * c_squared).norm() / g.norm())
        .fold(0.0, f64::max);
    Ok(EinsteinReport {
        is_einstein: max_residual <= tol.einstein,
        c_squared,
        c_estimate: c_squared.max(0.0).sqrt(),
        max_residual,
        negative_definite: c_squared > tol.einstein,
        samples: samples.len(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ParallelReport {
    /// `max |δRic_hl/δx^j − Ric_hr G^r_lj − Ric_lr G^r_hj|`.
    pub horizontal_residual: f64,
    /// `max |∂Ric_ij/∂y^k|`.
    pub vertical_residual: f64,
    pub max_residual: f64,
    pub parallel: bool,
}

fn parallel_residuals(f: &FinslerStructure, s: &TangentSample) -> Result<(f64, f64)> {
    f.check_sample(s)?;
    let n = s.x.len();
    let ric = ricci_tensor_generic(f, &s.x, &s.y);
    let sp = spray(f, s)?;
    let mut d_x = Vec::with_capacity(n);
    let mut d_y = Vec::with_capacity(n);
    for j in 0..n {
        let ej = basis::<f64>(n, j);
        let rx = ricci_tensor_generic(f, &seed(&s.x, &ej), &lift(&s.y));
        let ry = ricci_tensor_generic(f, &lift(&s.x), &seed(&s.y, &ej));
        d_x.push(rx.iter().map(|v: &Dual<f64>| v.eps).collect::<Vec<_>>());
        d_y.push(ry.iter().map(|v| v.eps).collect::<Vec<_>>());
    }
    finite_or("Ricci derivatives", s, &d_x.concat())?;
    let mut horizontal: f64 = 0.0;
    let mut vertical: f64 = 0.0;
    for h in 0..n {
        for l in 0..n {
            for j in 0..n {
                let mut delta = d_x[j][h * n + l];
                for r in 0..n {
                    delta -= sp.connection[(r, j)] * d_y[r][h * n + l];
                }
                let mut v = delta;
                for r in 0..n {
                    v -= ric[h * n + r] * sp.berwald[r][(l, j)];
                    v -= ric[l * n + r] * sp.berwald[r][(h, j)];
                }
                horizontal = horizontal.max(v.abs());
                vertical = vertical.max(d_y[j][h * n + l].abs());
            }
        }
    }
    Ok((horizontal, vertical))
}

/// Berwald-parallelism of the Ricci tensor, with the horizontal derivative
/// `δ/δx^j = ∂/∂x^j − N^r_j ∂/∂y^r`.
pub fn ricci_parallel_check(
    f: &FinslerStructure,
    samples: &[TangentSample],
    tol: &Tolerances,
) -> Result<ParallelReport> {
    if samples.is_empty() {
        return Err(FinslerError::InvalidInput("no samples".into()));
    }
    let res: Vec<(f64, f64)> = samples.par_iter().map(|s| parallel_residuals(f, s)).collect::<Result<_>>()?;
    let horizontal_residual = res.iter().map(|r| r.0).fold(0.0, f64::max);
    let vertical_residual = res.iter().map(|r| r.1).fold(0.0, f64::max);
    let max_residual = horizontal_residual.max(vertical_residual);
    Ok(ParallelReport { horizontal_residual, vertical_residual, max_residual, parallel: max_residual <= tol.parallel })
}

/// `F̂(x, y) = sqrt(−Ric_ij(x, y) y^i y^j)`, provided `Ric_ij` is
/// negative-definite at every probe site.
pub fn derived_metric_from_ricci(f: &FinslerStructure) -> Result<FinslerStructure> {
    let derived = FinslerStructure::ricci_derived(f)?;
    let probes = f.probe_samples(Some(1));
    let eigs: Vec<(f64, &TangentSample)> = probes
        .par_iter()
        .map(|s| Ok((ricci(f, s)?.tensor.symmetric_eigenvalues().max(), s)))
        .collect::<Result<_>>()?;
    for (max_eigenvalue, s) in eigs {
        if !(max_eigenvalue < 0.0) {
            return Err(FinslerError::RicciNotNegativeDefinite { x: s.x.clone(), y: s.y.clone(), max_eigenvalue });
        }
    }
    Ok(derived)
}

#[derive(Debug, Clone, Serialize)]
pub struct DerivedDiagnostics {
    /// `max |ĝ_ij + Ric_ij|`.
    pub metric_residual: f64,
    /// `max |Ĝ^i − G^i|`.
    pub spray_residual: f64,
    /// `max |F̂ − sqrt(−Ric_ij y^i y^j)|` with `Ric_ij` from the y-Hessian.
    pub definition_residual: f64,
}

pub fn derived_metric_diagnostics(
    f: &FinslerStructure,
    derived: &FinslerStructure,
    samples: &[TangentSample],
) -> Result<DerivedDiagnostics> {
    let rows: Vec<[f64; 3]> = samples
        .par_iter()
        .map(|s| {
            let ric = ricci(f, s)?.tensor;
            let g_hat = fundamental_matrix(derived, s)?;
            let g0 = spray_coefficients(f, &s.x, &s.y);
            let g1 = spray_coefficients(derived, &s.x, &s.y);
            finite_or("derived spray", s, &g1)?;
            let y = DVector::from_column_slice(&s.y);
            let literal = (-y.dot(&(&ric * &y))).sqrt();
            Ok([
                (&g_hat + &ric).amax(),
                g0.iter().zip(&g1).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
                (derived.eval_f64(&s.x, &s.y) - literal).abs(),
            ])
        })
        .collect::<Result<_>>()?;
    let max = |k: usize| rows.iter().map(|r| r[k]).fold(0.0, f64::max);
    Ok(DerivedDiagnostics { metric_residual: max(0), spray_residual: max(1), definition_residual: max(2) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::Builtin;

    fn site(x: &[f64], y: &[f64]) -> TangentSample {
        TangentSample::new(x.to_vec(), y.to_vec()).unwrap()
    }

    #[test]
    fn euclidean_tensors_vanish() {
        let f = FinslerStructure::builtin(Builtin::Euclidean(3)).unwrap();
        let s = site(&[0.3, -0.2, 0.5], &[1.0, 2.0, -0.5]);
        let g = fundamental_tensor(&f, &s, &Tolerances::default()).unwrap();
        assert!((g.g - DMatrix::identity(3, 3)).amax() < 1e-14);
        let sp = spray(&f, &s).unwrap();
        assert!(sp.coefficients.amax() < 1e-14);
        assert!(sp.connection.amax() < 1e-14);
        assert!(sp.berwald.iter().all(|b| b.amax() < 1e-14));
        assert!(riemann_curvature(&f, &s).unwrap().amax() < 1e-13);
        let ric = ricci(&f, &s).unwrap();
        assert!(ric.scalar.abs() < 1e-13 && ric.tensor.amax() < 1e-12);
    }

    #[test]
    fn hyperbolic_metric_at_origin() {
        let f = FinslerStructure::builtin(Builtin::HyperbolicPoincare(2)).unwrap();
        let g = fundamental_tensor(&f, &site(&[0.0, 0.0], &[0.3, 0.7]), &Tolerances::default()).unwrap();
        assert!((&g.g - DMatrix::identity(2, 2) * 4.0).amax() < 1e-13);
        assert!((&g.g * &g.g_inv - DMatrix::identity(2, 2)).amax() < 1e-12);
    }

    #[test]
    fn degenerate_flag_is_an_error() {
        let f = FinslerStructure::builtin(Builtin::HyperbolicPoincare(2)).unwrap();
        let s = site(&[0.1, 0.2], &[1.0, 1.0]);
        let err = flag_curvature(&f, &s, &[2.0, 2.0], &Tolerances::default()).unwrap_err();
        assert!(matches!(err, FinslerError::DegenerateFlag));
    }

    #[test]
    fn einstein_check_needs_ten_samples() {
        let f = FinslerStructure::builtin(Builtin::Euclidean(2)).unwrap();
        let few = vec![site(&[0.0, 0.0], &[1.0, 0.0]); 3];
        assert!(einstein_check(&f, &few, &Tolerances::default()).is_err());
    }

    #[test]
    fn euclidean_is_flat_einstein() {
        let f = FinslerStructure::builtin(Builtin::Euclidean(2)).unwrap();
        let samples = f.probe_samples(Some(1));
        let rep = einstein_check(&f, &samples, &Tolerances::default()).unwrap();
        assert!(rep.is_einstein && !rep.negative_definite && rep.c_estimate == 0.0);
        let par = ricci_parallel_check(&f, &samples, &Tolerances::default()).unwrap();
        assert!(par.parallel && par.max_residual < 1e-12);
    }

    #[test]
    fn derived_metric_rejects_flat() {
        let f = FinslerStructure::builtin(Builtin::Euclidean(2)).unwrap();
        assert!(matches!(
            derived_metric_from_ricci(&f),
            Err(FinslerError::RicciNotNegativeDefinite { .. })
        ));
    }

    #[test]
    fn derived_metric_cannot_be_derived_again() {
        let f = FinslerStructure::builtin(Builtin::HyperbolicPoincare(2)).unwrap();
        let d = derived_metric_from_ricci(&f).unwrap();
        assert!(matches!(derived_metric_from_ricci(&d), Err(FinslerError::NotApplicable(_))));
    }

    #[test]
    fn hyperbolic_2d_derived_metric_equals_original() {
        let f = FinslerStructure::builtin(Builtin::HyperbolicPoincare(2)).unwrap();
        let d = derived_metric_from_ricci(&f).unwrap();
        for s in f.probe_samples(Some(1)).iter().take(6) {
            let (a, b) = (f.eval_f64(&s.x, &s.y), d.eval_f64(&s.x, &s.y));
            assert!((a - b).abs() <= 1e-6 * a, "{a} vs {b}");
        }
    }
}
