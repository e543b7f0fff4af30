//! Forward-mode dual numbers, nestable to any depth.
//!
//! `Dual<T>` carries a value and one directional derivative over an arbitrary
//! [`Scalar`]. Nesting (`Dual<Dual<f64>>`, ...) gives mixed higher derivatives
//! without perturbation confusion because every level is a distinct type.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// Arithmetic needed to evaluate Finsler functions and differentiate them.
pub trait Scalar:
    Copy
    + Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
{
    fn from_f64(v: f64) -> Self;
    /// The underlying real value, with all derivative parts dropped.
    fn value(&self) -> f64;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn powi(self, n: i32) -> Self;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }

    fn one() -> Self {
        Self::from_f64(1.0)
    }

    fn recip(self) -> Self {
        Self::one() / self
    }

    /// General power `self^e` via `exp(e ln self)`; only valid for positive bases.
    fn powf(self, e: Self) -> Self {
        (e * self.ln()).exp()
    }

    fn tanh(self) -> Self {
        // exp of a non-positive argument cannot overflow
        if self.value() >= 0.0 {
            let e = (self * -2.0).exp();
            (Self::one() - e) / (Self::one() + e)
        } else {
            let e = (self * 2.0).exp();
            (e - 1.0) / (e + 1.0)
        }
    }
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    fn powf(self, e: Self) -> Self {
        f64::powf(self, e)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<T> {
    pub re: T,
    pub eps: T,
}

/// Second-order dual: `re.re` value, `eps.re` and `re.eps` first derivatives,
/// `eps.eps` the mixed second derivative.
pub type HyperDual<T> = Dual<Dual<T>>;

impl<T: Scalar> Dual<T> {
    pub fn new(re: T, eps: T) -> Self {
        Dual { re, eps }
    }

    pub fn constant(re: T) -> Self {
        Dual { re, eps: T::zero() }
    }
}

impl<T: Scalar> Add for Dual<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Dual::new(self.re + o.re, self.eps + o.eps)
    }
}

impl<T: Scalar> Sub for Dual<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Dual::new(self.re - o.re, self.eps - o.eps)
    }
}

impl<T: Scalar> Mul for Dual<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Dual::new(self.re * o.re, self.re * o.eps + self.eps * o.re)
    }
}

impl<T: Scalar> Div for Dual<T> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = o.re.recip();
        let re = self.re * inv;
        Dual::new(re, (self.eps - re * o.eps) * inv)
    }
}

impl<T: Scalar> Neg for Dual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual::new(-self.re, -self.eps)
    }
}

impl<T: Scalar> Add<f64> for Dual<T> {
    type Output = Self;
    fn add(self, o: f64) -> Self {
        Dual::new(self.re + o, self.eps)
    }
}

impl<T: Scalar> Sub<f64> for Dual<T> {
    type Output = Self;
    fn sub(self, o: f64) -> Self {
        Dual::new(self.re - o, self.eps)
    }
}

impl<T: Scalar> Mul<f64> for Dual<T> {
    type Output = Self;
    fn mul(self, o: f64) -> Self {
        Dual::new(self.re * o, self.eps * o)
    }
}

impl<T: Scalar> Div<f64> for Dual<T> {
    type Output = Self;
    fn div(self, o: f64) -> Self {
        Dual::new(self.re / o, self.eps / o)
    }
}

impl<T: Scalar> AddAssign for Dual<T> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Scalar> SubAssign for Dual<T> {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<T: Scalar> MulAssign for Dual<T> {
    fn mul_assign(&mut self, o: Self) {
        *self = *self * o;
    }
}

impl<T: Scalar> Scalar for Dual<T> {
    fn from_f64(v: f64) -> Self {
        Dual::constant(T::from_f64(v))
    }
    fn value(&self) -> f64 {
        self.re.value()
    }
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        Dual::new(s, self.eps / (s * 2.0))
    }
    fn exp(self) -> Self {
        let e = self.re.exp();
        Dual::new(e, self.eps * e)
    }
    fn ln(self) -> Self {
        Dual::new(self.re.ln(), self.eps / self.re)
    }
    fn sin(self) -> Self {
        Dual::new(self.re.sin(), self.eps * self.re.cos())
    }
    fn cos(self) -> Self {
        Dual::new(self.re.cos(), -(self.eps * self.re.sin()))
    }
    fn powi(self, n: i32) -> Self {
        match n {
            0 => Self::one(),
            1 => self,
            _ => {
                let lower = self.re.powi(n - 1);
                Dual::new(lower * self.re, self.eps * lower * (n as f64))
            }
        }
    }
}

/// Lift a slice into the next dual level as constants.
pub fn lift<T: Scalar>(v: &[T]) -> Vec<Dual<T>> {
    v.iter().map(|&t| Dual::constant(t)).collect()
}

/// Lift `v` into the next dual level, perturbed along `dir` (`dir[i]` may be a
/// genuine `T`, e.g. the direction `y` itself).
pub fn seed<T: Scalar>(v: &[T], dir: &[T]) -> Vec<Dual<T>> {
    v.iter().zip(dir).map(|(&a, &d)| Dual::new(a, d)).collect()
}

/// Lift `v` two levels, perturbed along `outer` in the outer infinitesimal and
/// along `inner` in the inner one. Either direction may be `None`.
pub fn seed2<T: Scalar>(v: &[T], outer: Option<&[T]>, inner: Option<&[T]>) -> Vec<HyperDual<T>> {
    (0..v.len())
        .map(|i| {
            let d_in = inner.map_or(T::zero(), |d| d[i]);
            let d_out = outer.map_or(T::zero(), |d| d[i]);
            Dual::new(Dual::new(v[i], d_in), Dual::constant(d_out))
        })
        .collect()
}

/// Unit basis vector `e_k` over `T`.
pub fn basis<T: Scalar>(n: usize, k: usize) -> Vec<T> {
    (0..n)
        .map(|i| if i == k { T::one() } else { T::zero() })
        .collect()
}

/// `(value, first derivative, second, third)` of a scalar function of one
/// variable evaluated on a third-order nested dual.
pub fn derivatives3(f: impl Fn(Dual<Dual<Dual<f64>>>) -> Dual<Dual<Dual<f64>>>, s: f64) -> [f64; 4] {
    let one = Dual::new(Dual::new(1.0, 0.0), Dual::new(0.0, 0.0));
    let arg = Dual::new(Dual::new(Dual::new(s, 1.0), Dual::new(1.0, 0.0)), one);
    let r = f(arg);
    [r.re.re.re, r.re.re.eps, r.re.eps.eps, r.eps.eps.eps]
}
