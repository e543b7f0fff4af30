//! Finsler structures: the builtin model metrics, coefficient-expression
//! metrics (Riemannian and Randers), domains, and validation of the Finsler
//! axioms at probe sites.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dual::Scalar;
use crate::error::{FinslerError, Result};
use crate::expr::Expr;
use crate::sampling;
use crate::tensor;
use crate::tolerance::Tolerances;

/// Anything that can be evaluated as `F(x, y)` over a generic scalar.
pub trait FinslerFunction: Sync {
    fn dim(&self) -> usize;
    fn eval<T: Scalar>(&self, x: &[T], y: &[T]) -> T;
}

/// Coordinate region on which a structure is defined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Whole,
    UnitBall,
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl Domain {
    pub fn contains(&self, x: &[f64]) -> bool {
        if x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match self {
            Domain::Whole => true,
            Domain::UnitBall => x.iter().map(|v| v * v).sum::<f64>() < 1.0,
            Domain::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (l, h))| v > l && v < h),
        }
    }

    /// Deterministic probe points: a coarse grid plus a few seeded random points.
    pub fn probe_points(&self, dim: usize) -> Vec<Vec<f64>> {
        let grid_1d: Vec<Vec<f64>> = match self {
            Domain::Whole => vec![vec![-1.0, 0.0, 1.0]; dim],
            Domain::UnitBall => vec![vec![-0.5, 0.0, 0.5]; dim],
            Domain::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(l, h)| [0.1, 0.5, 0.9].iter().map(|t| l + t * (h - l)).collect())
                .collect(),
        };
        let mut points = Vec::new();
        if 3usize.pow(dim as u32) <= 243 {
            let mut idx = vec![0usize; dim];
            loop {
                let p: Vec<f64> = idx.iter().enumerate().map(|(i, &k)| grid_1d[i][k]).collect();
                if self.contains(&p) {
                    points.push(p);
                }
                let mut d = 0;
                while d < dim {
                    idx[d] += 1;
                    if idx[d] < 3 {
                        break;
                    }
                    idx[d] = 0;
                    d += 1;
                }
                if d == dim {
                    break;
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_f1a5);
        for _ in 0..8 {
            points.push(sampling::random_point(self, dim, &mut rng));
        }
        points
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        if let Domain::Box { lo, hi } = self {
            if lo.len() != dim || hi.len() != dim || lo.iter().zip(hi).any(|(l, h)| !(l < h)) {
                return Err(FinslerError::InvalidInput(format!(
                    "box domain must have {dim} ordered bounds"
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Whole => write!(f, "all of R^n"),
            Domain::UnitBall => write!(f, "open unit ball"),
            Domain::Box { lo, hi } => write!(f, "box {lo:?} .. {hi:?}"),
        }
    }
}

/// The formula behind a structure.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricKind {
    Euclidean,
    /// Poincaré ball model, `a_ij = 4 δ_ij / (1 - |x|^2)^2`.
    HyperbolicPoincare,
    /// Funk metric of the unit ball.
    FunkBall,
    /// Euclidean norm plus a constant one-form.
    FlatRanders { b: Vec<f64> },
    /// `sqrt(a_ij(x) y^i y^j)`; `a` is row-major `n x n`.
    Riemannian { a: Vec<Expr> },
    /// `sqrt(a_ij(x) y^i y^j) + b_i(x) y^i`.
    Randers { a: Vec<Expr>, b: Vec<Expr> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metric {
    dim: usize,
    kind: MetricKind,
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&p, &q)| acc + p * q)
}

fn quadratic_form<T: Scalar>(a: &[Expr], n: usize, x: &[T], y: &[T]) -> T {
    let mut q = T::zero();
    for i in 0..n {
        q += a[i * n + i].eval(x) * y[i] * y[i];
        for j in (i + 1)..n {
            q += a[i * n + j].eval(x) * y[i] * y[j] * 2.0;
        }
    }
    q
}

impl Metric {
    pub fn kind(&self) -> &MetricKind {
        &self.kind
    }

    pub fn is_riemannian(&self) -> bool {
        match &self.kind {
            MetricKind::Euclidean | MetricKind::HyperbolicPoincare | MetricKind::Riemannian { .. } => true,
            MetricKind::FlatRanders { b } => b.iter().all(|v| *v == 0.0),
            _ => false,
        }
    }

    /// `a_ij(x)` (row-major), or `None` for non-quadratic kinds.
    fn riemannian_part(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        let n = self.dim;
        match &self.kind {
            MetricKind::Riemannian { a } | MetricKind::Randers { a, .. } => {
                Some(DMatrix::from_fn(n, n, |i, j| a[i * n + j].eval(x)))
            }
            _ => None,
        }
    }
}

impl FinslerFunction for Metric {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval<T: Scalar>(&self, x: &[T], y: &[T]) -> T {
        match &self.kind {
            MetricKind::Euclidean => dot(y, y).sqrt(),
            MetricKind::HyperbolicPoincare => dot(y, y).sqrt() * 2.0 / (-dot(x, x) + 1.0),
            MetricKind::FunkBall => {
                let xy = dot(x, y);
                let slack = -dot(x, x) + 1.0;
                ((xy * xy + dot(y, y) * slack).sqrt() + xy) / slack
            }
            MetricKind::FlatRanders { b } => {
                let beta = y.iter().zip(b).fold(T::zero(), |acc, (&v, &c)| acc + v * c);
                dot(y, y).sqrt() + beta
            }
            MetricKind::Riemannian { a } => quadratic_form(a, self.dim, x, y).sqrt(),
            MetricKind::Randers { a, b } => {
                let beta = y.iter().zip(b).fold(T::zero(), |acc, (&v, e)| acc + e.eval(x) * v);
                quadratic_form(a, self.dim, x, y).sqrt() + beta
            }
        }
    }
}

/// Builtin model metrics.
#[derive(Debug, Clone, PartialEq)]
pub enum Builtin {
    Euclidean(usize),
    HyperbolicPoincare(usize),
    FunkBall(usize),
    FlatRanders(Vec<f64>),
}

impl Builtin {
    /// Resolve a builtin by name. `b` is only used by `flat_randers`; a
    /// shorter `b` is zero-padded to `dim`.
    pub fn from_name(name: &str, dim: usize, b: Option<&[f64]>) -> Result<Builtin> {
        match name {
            "euclidean" => Ok(Builtin::Euclidean(dim)),
            "hyperbolic_poincare" | "hyperbolic" => Ok(Builtin::HyperbolicPoincare(dim)),
            "funk_ball" | "funk" => Ok(Builtin::FunkBall(dim)),
            "flat_randers" | "randers" => {
                let given = b.unwrap_or(&[]);
                if given.len() > dim {
                    return Err(FinslerError::InvalidInput(format!(
                        "flat_randers one-form has {} components but dim is {dim}",
                        given.len()
                    )));
                }
                let mut full = given.to_vec();
                full.resize(dim, 0.0);
                Ok(Builtin::FlatRanders(full))
            }
            other => Err(FinslerError::UnknownBuiltin(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Form {
    Direct(Metric),
    /// `sqrt(-Ric_ij(x, y) y^i y^j)` of the wrapped metric.
    RicciDerived(Metric),
}

/// An immutable, validated Finsler structure on a single-chart domain.
#[derive(Debug, Clone, PartialEq)]
pub struct FinslerStructure {
    label: String,
    domain: Domain,
    form: Form,
}

impl FinslerFunction for FinslerStructure {
    fn dim(&self) -> usize {
        match &self.form {
            Form::Direct(m) | Form::RicciDerived(m) => m.dim,
        }
    }

    fn eval<T: Scalar>(&self, x: &[T], y: &[T]) -> T {
        match &self.form {
            Form::Direct(m) => m.eval(x, y),
            // Ric_ij y^i y^j = R^k_k by Euler's theorem (R^k_k is 2-homogeneous in y).
            Form::RicciDerived(m) => (-tensor::riemann_trace_generic(m, x, y)).sqrt(),
        }
    }
}

fn parse_all(sources: &[String]) -> Result<Vec<Expr>> {
    sources
        .iter()
        .map(|s| {
            Expr::parse(s).map_err(|error| FinslerError::Expression { source_text: s.clone(), error })
        })
        .collect()
}

impl FinslerStructure {
    pub fn builtin(b: Builtin) -> Result<FinslerStructure> {
        let (dim, kind, domain, label) = match b {
            Builtin::Euclidean(n) => (n, MetricKind::Euclidean, Domain::Whole, format!("euclidean({n})")),
            Builtin::HyperbolicPoincare(n) => (
                n,
                MetricKind::HyperbolicPoincare,
                Domain::UnitBall,
                format!("hyperbolic_poincare({n})"),
            ),
            Builtin::FunkBall(n) => (n, MetricKind::FunkBall, Domain::UnitBall, format!("funk_ball({n})")),
            Builtin::FlatRanders(b) => {
                let n = b.len();
                let norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
                if n >= 2 && !(norm < 1.0) {
                    return Err(FinslerError::RandersNorm { norm, point: vec![0.0; n] });
                }
                let label = format!("flat_randers({n}, b={b:?})");
                (n, MetricKind::FlatRanders { b }, Domain::Whole, label)
            }
        };
        if dim < 2 {
            return Err(FinslerError::Dimension(dim));
        }
        let s = FinslerStructure { label, domain, form: Form::Direct(Metric { dim, kind }) };
        s.validate(&Tolerances::default())?;
        Ok(s)
    }

    /// `F = sqrt(a_ij(x) y^i y^j)` from row-major coefficient expressions.
    pub fn riemannian(a: &[Vec<String>], domain: Domain, label: &str) -> Result<FinslerStructure> {
        let dim = a.len();
        let a = Self::parse_matrix(a)?;
        Self::from_kind(dim, MetricKind::Riemannian { a }, domain, label)
    }

    /// `F = sqrt(a_ij(x) y^i y^j) + b_i(x) y^i`.
    pub fn randers(a: &[Vec<String>], b: &[String], domain: Domain, label: &str) -> Result<FinslerStructure> {
        let dim = a.len();
        if b.len() != dim {
            return Err(FinslerError::InvalidInput(format!(
                "one-form has {} components but a_ij is {dim}x{dim}",
                b.len()
            )));
        }
        let a = Self::parse_matrix(a)?;
        let b = parse_all(b)?;
        Self::from_kind(dim, MetricKind::Randers { a, b }, domain, label)
    }

    fn parse_matrix(a: &[Vec<String>]) -> Result<Vec<Expr>> {
        let dim = a.len();
        if dim < 2 {
            return Err(FinslerError::Dimension(dim));
        }
        if a.iter().any(|row| row.len() != dim) {
            return Err(FinslerError::InvalidInput(format!("a_ij must be {dim}x{dim}")));
        }
        let flat: Vec<String> = a.iter().flatten().cloned().collect();
        parse_all(&flat)
    }

    fn from_kind(dim: usize, kind: MetricKind, domain: Domain, label: &str) -> Result<FinslerStructure> {
        if dim < 2 {
            return Err(FinslerError::Dimension(dim));
        }
        domain.check_dim(dim)?;
        let exprs: Vec<&Expr> = match &kind {
            MetricKind::Riemannian { a } => a.iter().collect(),
            MetricKind::Randers { a, b } => a.iter().chain(b).collect(),
            _ => Vec::new(),
        };
        if let Some(e) = exprs.iter().find(|e| e.max_var() > dim) {
            return Err(FinslerError::InvalidInput(format!(
                "expression '{e}' references x{} but dim is {dim}",
                e.max_var()
            )));
        }
        let s = FinslerStructure {
            label: label.to_string(),
            domain,
            form: Form::Direct(Metric { dim, kind }),
        };
        s.validate(&Tolerances::default())?;
        Ok(s)
    }

    /// `sqrt(-Ric_ij y^i y^j)` of `base`; no validation beyond what the caller does.
    pub(crate) fn ricci_derived(base: &FinslerStructure) -> Result<FinslerStructure> {
        match &base.form {
            Form::Direct(m) => Ok(FinslerStructure {
                label: format!("ricci_derived({})", base.label),
                domain: base.domain.clone(),
                form: Form::RicciDerived(m.clone()),
            }),
            Form::RicciDerived(_) => Err(FinslerError::NotApplicable(
                "repeated Ricci derivation is not supported".into(),
            )),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// The underlying formula, when the structure is not derived.
    pub fn metric(&self) -> Option<&Metric> {
        match &self.form {
            Form::Direct(m) => Some(m),
            Form::RicciDerived(_) => None,
        }
    }

    pub fn is_riemannian(&self) -> bool {
        self.metric().is_some_and(Metric::is_riemannian)
    }

    pub fn eval_f64(&self, x: &[f64], y: &[f64]) -> f64 {
        self.eval(x, y)
    }

    /// Validate a sample for this structure (domain, dimension, zero section).
    pub fn check_sample(&self, s: &TangentSample) -> Result<()> {
        let n = self.dim();
        if s.x.len() != n || s.y.len() != n {
            return Err(FinslerError::InvalidInput(format!(
                "sample has dimension {} but the structure has {n}",
                s.x.len()
            )));
        }
        self.check_point(&s.x)
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(FinslerError::InvalidInput(format!(
                "point has dimension {} but the structure has {}",
                x.len(),
                self.dim()
            )));
        }
        if !self.domain.contains(x) {
            return Err(FinslerError::OutsideDomain { point: x.to_vec(), domain: self.domain.to_string() });
        }
        Ok(())
    }

    /// Probe sites used for construction-time validation.
    pub fn probe_samples(&self, directions_per_point: Option<usize>) -> Vec<TangentSample> {
        let n = self.dim();
        let dirs = probe_directions(n);
        let mut out = Vec::new();
        for (k, x) in self.domain.probe_points(n).into_iter().enumerate() {
            match directions_per_point {
                None => out.extend(dirs.iter().map(|y| TangentSample { x: x.clone(), y: y.clone() })),
                Some(m) => out.extend(
                    (0..m.min(dirs.len()))
                        .map(|j| TangentSample { x: x.clone(), y: dirs[(k + j) % dirs.len()].clone() }),
                ),
            }
        }
        out
    }

    /// Check the Finsler axioms at probe sites: symmetric positive-definite
    /// `a_ij`, Randers `b < 1`, positivity of `F`, strong convexity.
    pub fn validate(&self, tol: &Tolerances) -> Result<()> {
        let Some(metric) = self.metric() else {
            return Ok(());
        };
        let n = self.dim();
        for x in self.domain.probe_points(n) {
            if let Some(a) = metric.riemannian_part(&x) {
                let scale = a.amax().max(1.0);
                if (&a - a.transpose()).amax() > 1e-12 * scale {
                    return Err(FinslerError::NotSymmetric { point: x });
                }
                let Some(chol) = a.clone().cholesky() else {
                    return Err(FinslerError::NotPositiveDefinite { point: x });
                };
                if let MetricKind::Randers { b, .. } = &metric.kind {
                    let bv = DVector::from_iterator(n, b.iter().map(|e| e.eval(&x)));
                    let norm = bv.dot(&chol.solve(&bv)).sqrt();
                    if !(norm < 1.0) {
                        return Err(FinslerError::RandersNorm { norm, point: x });
                    }
                }
            }
        }
        for s in self.probe_samples(None) {
            let value = self.eval_f64(&s.x, &s.y);
            if !(value > 0.0) {
                return Err(FinslerError::NotPositive { x: s.x, y: s.y, value });
            }
            let g = tensor::fundamental_matrix(self, &s)?;
            let min_eig = g.symmetric_eigenvalues().min();
            if !(min_eig > tol.convexity) {
                return Err(FinslerError::StrongConvexity { x: s.x, y: s.y, min_eigenvalue: min_eig });
            }
        }
        Ok(())
    }
}

/// Unit directions `±e_i` and `(e_i ± e_j)/√2`.
pub fn probe_directions(n: usize) -> Vec<Vec<f64>> {
    let mut dirs = Vec::new();
    for i in 0..n {
        for sign in [1.0, -1.0] {
            let mut v = vec![0.0; n];
            v[i] = sign;
            dirs.push(v);
        }
    }
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..n {
        for j in (i + 1)..n {
            for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let mut v = vec![0.0; n];
                v[i] = si * r;
                v[j] = sj * r;
                dirs.push(v);
            }
        }
    }
    dirs
}

/// A point `x` and a direction `y` off the zero section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentSample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl TangentSample {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<TangentSample> {
        if x.len() != y.len() {
            return Err(FinslerError::InvalidInput("x and y differ in dimension".into()));
        }
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm >= Tolerances::default().zero_section) {
            return Err(FinslerError::ZeroSection(y));
        }
        Ok(TangentSample { x, y })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReversibilityReport {
    /// `max |F(x,y) - F(x,-y)| / max(F(x,y), F(x,-y))` over the samples.
    pub max_asymmetry: f64,
    pub worst: TangentSample,
    pub reversible: bool,
}

/// Relative asymmetry of `F` under `y -> -y`.
pub fn reversibility_check(
    f: &FinslerStructure,
    samples: &[TangentSample],
    tol: &Tolerances,
) -> Result<ReversibilityReport> {
    let Some(first) = samples.first() else {
        return Err(FinslerError::InvalidInput("no samples".into()));
    };
    let mut worst = (0.0, first.clone());
    for s in samples {
        f.check_sample(s)?;
        let neg: Vec<f64> = s.y.iter().map(|v| -v).collect();
        let (fp, fm) = (f.eval_f64(&s.x, &s.y), f.eval_f64(&s.x, &neg));
        if !fp.is_finite() || !fm.is_finite() {
            return Err(FinslerError::NonFinite { what: "F", x: s.x.clone(), y: s.y.clone() });
        }
        let asym = (fp - fm).abs() / fp.max(fm);
        if asym > worst.0 {
            worst = (asym, s.clone());
        }
    }
    Ok(ReversibilityReport { max_asymmetry: worst.0, worst: worst.1, reversible: worst.0 <= tol.reversible })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(rows: &[&[&str]]) -> Vec<Vec<String>> {
        rows.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect()
    }

    const CONFORMAL: &str = "4/(1-x1^2-x2^2)^2";

    #[test]
    fn euclidean_riemannian_from_identity() {
        let f = FinslerStructure::riemannian(&strings(&[&["1", "0"], &["0", "1"]]), Domain::Whole, "id").unwrap();
        assert_eq!(f.eval_f64(&[0.7, -2.0], &[3.0, 4.0]), 5.0);
        assert!(f.is_riemannian());
    }

    #[test]
    fn conformal_expression_metric() {
        let f = FinslerStructure::riemannian(
            &strings(&[&[CONFORMAL, "0"], &["0", CONFORMAL]]),
            Domain::UnitBall,
            "poincare",
        )
        .unwrap();
        assert_eq!(f.eval_f64(&[0.0, 0.0], &[1.0, 0.0]), 2.0);
        let builtin = FinslerStructure::builtin(Builtin::HyperbolicPoincare(2)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let s = sampling::random_sample(&f, &mut rng);
            let v = f.eval_f64(&s.x, &s.y);
            let y2: Vec<f64> = s.y.iter().map(|c| 2.0 * c).collect();
            assert!((f.eval_f64(&s.x, &y2) - 2.0 * v).abs() <= 1e-12 * v);
            assert!((builtin.eval_f64(&s.x, &s.y) - v).abs() <= 1e-12 * v);
        }
    }

    #[test]
    fn non_positive_definite_is_rejected_with_point() {
        let err = FinslerStructure::riemannian(&strings(&[&["1", "0"], &["0", "x1"]]), Domain::Whole, "bad")
            .unwrap_err();
        match err {
            FinslerError::NotPositiveDefinite { point } => assert!(point[0] <= 0.0),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn asymmetric_coefficients_are_rejected() {
        let err = FinslerStructure::riemannian(&strings(&[&["2", "x1"], &["0", "2"]]), Domain::Whole, "bad")
            .unwrap_err();
        assert!(matches!(err, FinslerError::NotSymmetric { .. }));
    }

    #[test]
    fn randers_values_and_validation() {
        let id = strings(&[&["1", "0"], &["0", "1"]]);
        let f = FinslerStructure::randers(&id, &["0.5".into(), "0".into()], Domain::Whole, "r").unwrap();
        assert_eq!(f.eval_f64(&[0.3, 0.1], &[1.0, 0.0]), 1.5);
        assert_eq!(f.eval_f64(&[0.3, 0.1], &[-1.0, 0.0]), 0.5);
        assert!(!f.is_riemannian());

        let zero = FinslerStructure::randers(&id, &["0".into(), "0".into()], Domain::Whole, "r0").unwrap();
        let samples = zero.probe_samples(None);
        assert!(reversibility_check(&zero, &samples, &Tolerances::default()).unwrap().reversible);

        let err = FinslerStructure::randers(&id, &["1.1".into(), "0".into()], Domain::Whole, "bad").unwrap_err();
        assert!(matches!(err, FinslerError::RandersNorm { .. }));
        assert!(err.to_string().contains("b < 1"));
    }

    #[test]
    fn out_of_range_variable_is_rejected() {
        let err = FinslerStructure::riemannian(&strings(&[&["1", "0"], &["0", "1+x3^2"]]), Domain::Whole, "bad")
            .unwrap_err();
        assert!(err.is_invalid_input());
    }

    #[test]
    fn builtin_errors() {
        assert!(matches!(Builtin::from_name("sphere", 2, None), Err(FinslerError::UnknownBuiltin(_))));
        assert!(matches!(
            FinslerStructure::builtin(Builtin::Euclidean(1)),
            Err(FinslerError::Dimension(1))
        ));
        assert!(matches!(
            FinslerStructure::builtin(Builtin::FlatRanders(vec![1.1, 0.0])),
            Err(FinslerError::RandersNorm { .. })
        ));
    }

    #[test]
    fn funk_values() {
        let f = FinslerStructure::builtin(Builtin::FunkBall(2)).unwrap();
        assert!((f.eval_f64(&[0.0, 0.0], &[0.6, -0.8]) - 1.0).abs() < 1e-15);
        // at x = (0.3, 0): F(e1) = 1/(1-0.3), F(-e1) = 1/(1+0.3)
        let x = [0.3, 0.0];
        assert!((f.eval_f64(&x, &[1.0, 0.0]) - 1.0 / 0.7).abs() < 1e-14);
        assert!((f.eval_f64(&x, &[-1.0, 0.0]) - 1.0 / 1.3).abs() < 1e-14);
        let r = reversibility_check(&f, &[TangentSample { x: x.to_vec(), y: vec![1.0, 0.0] }], &Tolerances::default())
            .unwrap();
        assert!(r.max_asymmetry > 0.1 && !r.reversible);
    }

    #[test]
    fn reversibility_of_builtins() {
        let tol = Tolerances::default();
        let e = FinslerStructure::builtin(Builtin::Euclidean(2)).unwrap();
        assert_eq!(reversibility_check(&e, &e.probe_samples(None), &tol).unwrap().max_asymmetry, 0.0);
        let r = FinslerStructure::builtin(Builtin::FlatRanders(vec![0.5, 0.0])).unwrap();
        let s = TangentSample::new(vec![0.2, 0.4], vec![1.0, 0.0]).unwrap();
        let rep = reversibility_check(&r, &[s], &tol).unwrap();
        assert_eq!(rep.max_asymmetry, (1.5 - 0.5) / 1.5);
        assert!(reversibility_check(&r, &[], &tol).is_err());
        let outside = TangentSample::new(vec![2.0, 0.0], vec![1.0, 0.0]).unwrap();
        let hyp = FinslerStructure::builtin(Builtin::HyperbolicPoincare(2)).unwrap();
        assert!(matches!(
            reversibility_check(&hyp, &[outside], &tol),
            Err(FinslerError::OutsideDomain { .. })
        ));
    }

    #[test]
    fn zero_section_guard() {
        assert!(matches!(TangentSample::new(vec![0.0; 2], vec![1e-9, 0.0]), Err(FinslerError::ZeroSection(_))));
    }

    #[test]
    fn box_domain_probes_stay_inside() {
        let d = Domain::Box { lo: vec![1.0, 2.0], hi: vec![3.0, 5.0] };
        for p in d.probe_points(2) {
            assert!(d.contains(&p));
        }
        let err = FinslerStructure::riemannian(
            &strings(&[&["1", "0"], &["0", "1"]]),
            Domain::Box { lo: vec![0.0], hi: vec![1.0] },
            "b",
        )
        .unwrap_err();
        assert!(err.is_invalid_input());
    }
}
