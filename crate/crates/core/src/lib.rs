//! Numerical Finsler geometry: fundamental tensor, spray and curvature by
//! nested forward-mode differentiation, geodesics and shooting distances,
//! and projective parameters with the Schwarzian pseudo-distance.

pub mod definition;
pub mod dual;
pub mod error;
pub mod expr;
pub mod geodesics;
pub mod metric;
pub mod ode;
pub mod projective;
pub mod report;
pub mod sampling;
pub mod tensor;
pub mod tolerance;

pub use error::{FinslerError, Result};
pub use metric::{Builtin, Domain, FinslerFunction, FinslerStructure, TangentSample};
pub use tolerance::{PrecisionProfile, Tolerances};
