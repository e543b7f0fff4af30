//! Seeded random sampling of points, directions and tangent samples.
//!
//! Points are drawn from a compact region well inside the domain: the ball of
//! radius 0.7 for the unit ball, `[-1, 1]^n` for the whole space, and the
//! middle 80% of a box.

use rand::Rng;

use crate::metric::{Domain, FinslerFunction, FinslerStructure, TangentSample};

pub const BALL_SAMPLE_RADIUS: f64 = 0.7;

pub fn random_point<R: Rng + ?Sized>(domain: &Domain, dim: usize, rng: &mut R) -> Vec<f64> {
    match domain {
        Domain::Whole => (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        Domain::UnitBall => {
            let dir = random_direction(dim, rng);
            // uniform in the ball of radius BALL_SAMPLE_RADIUS
            let r = BALL_SAMPLE_RADIUS * rng.gen::<f64>().powf(1.0 / dim as f64);
            dir.into_iter().map(|v| v * r).collect()
        }
        Domain::Box { lo, hi } => lo
            .iter()
            .zip(hi)
            .map(|(l, h)| {
                let w = h - l;
                rng.gen_range((l + 0.1 * w)..(h - 0.1 * w))
            })
            .collect(),
    }
}

/// Uniform Euclidean unit vector (rejection from the cube).
pub fn random_direction<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r2: f64 = v.iter().map(|c| c * c).sum();
        if r2 > 1e-4 && r2 <= 1.0 {
            let r = r2.sqrt();
            return v.into_iter().map(|c| c / r).collect();
        }
    }
}

pub fn random_sample<R: Rng + ?Sized>(f: &FinslerStructure, rng: &mut R) -> TangentSample {
    let n = f.dim();
    TangentSample { x: random_point(f.domain(), n, rng), y: random_direction(n, rng) }
}

pub fn random_samples<R: Rng + ?Sized>(f: &FinslerStructure, count: usize, rng: &mut R) -> Vec<TangentSample> {
    (0..count).map(|_| random_sample(f, rng)).collect()
}

/// A unit vector not parallel to `y` (Gram–Schmidt against `y` in the
/// Euclidean product), used as the default transverse flag edge.
pub fn transverse<R: Rng + ?Sized>(y: &[f64], rng: &mut R) -> Vec<f64> {
    let ny: f64 = y.iter().map(|c| c * c).sum::<f64>().sqrt();
    loop {
        let u = random_direction(y.len(), rng);
        let proj: f64 = u.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / ny;
        let w: Vec<f64> = u.iter().zip(y).map(|(a, b)| a - proj * b / ny).collect();
        let nw: f64 = w.iter().map(|c| c * c).sum::<f64>().sqrt();
        if nw > 0.1 {
            return w.into_iter().map(|c| c / nw).collect();
        }
    }
}
