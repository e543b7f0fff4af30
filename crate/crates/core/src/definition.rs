//! Metric definition files (TOML).
//!
//! ```toml
//! name = "perturbed disc"
//! dim = 2
//! kind = "riemannian"          # riemannian | randers | builtin
//! domain = "unit_ball"         # whole | unit_ball | { box = { lo = [..], hi = [..] } }
//! a = [["4*(1 + 0.3*x2^2)/(1 - x1^2 - x2^2)^2", 0],
//!      [0, "4/(1 - x1^2 - x2^2)^2"]]
//! ```
//!
//! `a` may also be a single coefficient, meaning that multiple of the
//! identity. Randers definitions add `b = [..]`; builtin definitions name
//! the model with `builtin = "funk_ball"` and may give a constant `b` for
//! `flat_randers`.

use std::path::Path;

use serde::Deserialize;

use crate::error::{FinslerError, Result};
use crate::metric::{Builtin, Domain, FinslerStructure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefinitionKind {
    Riemannian,
    Randers,
    Builtin,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Coefficient {
    Number(f64),
    Expression(String),
}

impl Coefficient {
    fn source(&self) -> String {
        match self {
            Coefficient::Number(v) => format!("{v:?}"),
            Coefficient::Expression(s) => s.clone(),
        }
    }

    fn number(&self) -> Result<f64> {
        match self {
            Coefficient::Number(v) => Ok(*v),
            Coefficient::Expression(s) => Err(FinslerError::Definition(format!(
                "builtin one-form components must be numbers, got '{s}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Coefficients {
    Matrix(Vec<Vec<Coefficient>>),
    Scalar(Coefficient),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricDefinition {
    pub name: String,
    pub dim: usize,
    pub kind: DefinitionKind,
    pub a: Option<Coefficients>,
    pub b: Option<Vec<Coefficient>>,
    pub builtin: Option<String>,
    pub domain: Option<Domain>,
}

impl MetricDefinition {
    pub fn parse(text: &str) -> Result<MetricDefinition> {
        toml::from_str(text).map_err(|e| FinslerError::Definition(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<MetricDefinition> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| match e {
            FinslerError::Definition(m) => FinslerError::Definition(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    fn matrix(&self) -> Result<Vec<Vec<String>>> {
        let n = self.dim;
        match &self.a {
            None => Err(FinslerError::Definition(format!("kind {:?} needs coefficients `a`", self.kind))),
            Some(Coefficients::Scalar(c)) => {
                let c = c.source();
                Ok((0..n).map(|i| (0..n).map(|j| if i == j { c.clone() } else { "0".into() }).collect()).collect())
            }
            Some(Coefficients::Matrix(rows)) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(FinslerError::Definition(format!("`a` must be a {n}x{n} matrix")));
                }
                Ok(rows.iter().map(|r| r.iter().map(Coefficient::source).collect()).collect())
            }
        }
    }

    pub fn build(&self) -> Result<FinslerStructure> {
        if self.dim < 2 {
            return Err(FinslerError::Dimension(self.dim));
        }
        let domain = self.domain.clone().unwrap_or(Domain::Whole);
        if let Domain::Box { lo, hi } = &domain {
            if lo.len() != self.dim || hi.len() != self.dim || lo.iter().zip(hi).any(|(l, h)| !(l < h)) {
                return Err(FinslerError::Definition(format!("box domain must have {} ordered bounds", self.dim)));
            }
        }
        match self.kind {
            DefinitionKind::Builtin => {
                if self.a.is_some() || self.domain.is_some() {
                    return Err(FinslerError::Definition("builtin metrics take no `a` or `domain`".into()));
                }
                let name = self
                    .builtin
                    .as_deref()
                    .ok_or_else(|| FinslerError::Definition("kind builtin needs `builtin = \"<name>\"`".into()))?;
                let b = match &self.b {
                    Some(b) => Some(b.iter().map(Coefficient::number).collect::<Result<Vec<_>>>()?),
                    None => None,
                };
                if b.is_some() && !matches!(name, "flat_randers" | "randers") {
                    return Err(FinslerError::Definition(format!("builtin '{name}' takes no `b`")));
                }
                FinslerStructure::builtin(Builtin::from_name(name, self.dim, b.as_deref())?)
            }
            DefinitionKind::Riemannian => {
                if self.b.is_some() || self.builtin.is_some() {
                    return Err(FinslerError::Definition("riemannian metrics take only `a`".into()));
                }
                FinslerStructure::riemannian(&self.matrix()?, domain, &self.name)
            }
            DefinitionKind::Randers => {
                if self.builtin.is_some() {
                    return Err(FinslerError::Definition("randers metrics take no `builtin`".into()));
                }
                let b = self.b.as_ref().ok_or_else(|| FinslerError::Definition("kind randers needs `b`".into()))?;
                let b: Vec<String> = b.iter().map(Coefficient::source).collect();
                FinslerStructure::randers(&self.matrix()?, &b, domain, &self.name)
            }
        }
    }
}

pub fn load_metric(path: &Path) -> Result<FinslerStructure> {
    MetricDefinition::load(path)?.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn riemannian_definition() {
        let d = MetricDefinition::parse(
            r#"
            name = "disc"
            dim = 2
            kind = "riemannian"
            domain = "unit_ball"
            a = "4/(1 - x1^2 - x2^2)^2"
            "#,
        )
        .unwrap();
        let f = d.build().unwrap();
        assert_eq!(f.label(), "disc");
        assert!((f.eval_f64(&[0.0, 0.0], &[0.0, 1.0]) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn mixed_matrix_and_box_domain() {
        let f = MetricDefinition::parse(
            r#"
            name = "strip"
            dim = 2
            kind = "randers"
            a = [[1, 0], [0, "exp(x1)"]]
            b = ["0.1*x2", 0]
            [domain.box]
            lo = [-1, -1]
            hi = [1, 1]
            "#,
        )
        .unwrap()
        .build()
        .unwrap();
        assert!(!f.domain().contains(&[0.0, 1.5]));
        assert!((f.eval_f64(&[0.0, 0.5], &[1.0, 0.0]) - 1.05).abs() < 1e-15);
    }

    #[test]
    fn builtin_definition() {
        let f = MetricDefinition::parse("name = \"r\"\ndim = 2\nkind = \"builtin\"\nbuiltin = \"flat_randers\"\nb = [0.5]")
            .unwrap()
            .build()
            .unwrap();
        assert!((f.eval_f64(&[0.0, 0.0], &[1.0, 0.0]) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn rejections() {
        assert!(MetricDefinition::parse("name = \"x\"\ndim = 2\nkind = \"riemannian\"\ncolour = 3").is_err());
        assert!(MetricDefinition::parse("name = \"x\"\ndim = 2\nkind = \"conic\"").is_err());
        let short = MetricDefinition::parse("name = \"x\"\ndim = 3\nkind = \"riemannian\"\na = [[1, 0], [0, 1]]").unwrap();
        assert!(short.build().is_err());
        let big_b = MetricDefinition::parse("name = \"x\"\ndim = 2\nkind = \"randers\"\na = 1\nb = [1.1, 0]").unwrap();
        assert!(matches!(big_b.build(), Err(FinslerError::RandersNorm { .. })));
    }
}
