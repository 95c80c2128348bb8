//! Forward-mode differentiation with first-order dual numbers.
//!
//! A [`Dual`] carries a value and the directional derivative along one tangent
//! direction. Code written against [`Scalar`] runs unchanged on `f64` (plain
//! evaluation) and on `Dual` (evaluation plus derivative).

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// Real-number operations needed by differentiable rollouts.
pub trait Scalar:
    Copy
    + fmt::Debug
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + Send
    + Sync
{
    fn constant(x: f64) -> Self;
    fn value(self) -> f64;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn tanh(self) -> Self;
    fn abs(self) -> Self;
    fn powi(self, n: i32) -> Self;

    fn zero() -> Self {
        Self::constant(0.0)
    }

    fn one() -> Self {
        Self::constant(1.0)
    }

    fn scale(self, k: f64) -> Self {
        self * Self::constant(k)
    }

    /// Clamp into `[lo, hi]`; outside the interval the result is a constant.
    fn clamp_to(self, lo: f64, hi: f64) -> Self {
        let v = self.value();
        if v.is_nan() || v < lo {
            Self::constant(lo)
        } else if v > hi {
            Self::constant(hi)
        } else {
            self
        }
    }
}

impl Scalar for f64 {
    fn constant(x: f64) -> Self {
        x
    }
    fn value(self) -> f64 {
        self
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    fn scale(self, k: f64) -> Self {
        self * k
    }
}

/// `re + eps·ε` with `ε² = 0`.
#[derive(Clone, Copy, PartialEq, Default)]
pub struct Dual {
    pub re: f64,
    pub eps: f64,
}

impl Dual {
    pub const fn new(re: f64, eps: f64) -> Self {
        Self { re, eps }
    }

    pub const fn variable(re: f64) -> Self {
        Self { re, eps: 1.0 }
    }

    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.eps.is_finite()
    }
}

impl fmt::Debug for Dual {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}+{:?}ε", self.re, self.eps)
    }
}

impl PartialOrd for Dual {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        self.re.partial_cmp(&other.re)
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, rhs: Dual) -> Dual {
        Dual::new(self.re + rhs.re, self.eps + rhs.eps)
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, rhs: Dual) -> Dual {
        Dual::new(self.re - rhs.re, self.eps - rhs.eps)
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, rhs: Dual) -> Dual {
        Dual::new(self.re * rhs.re, self.eps * rhs.re + self.re * rhs.eps)
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, rhs: Dual) -> Dual {
        let inv = 1.0 / rhs.re;
        Dual::new(self.re * inv, (self.eps * rhs.re - self.re * rhs.eps) * inv * inv)
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual::new(-self.re, -self.eps)
    }
}

impl AddAssign for Dual {
    fn add_assign(&mut self, rhs: Dual) {
        *self = *self + rhs;
    }
}

impl SubAssign for Dual {
    fn sub_assign(&mut self, rhs: Dual) {
        *self = *self - rhs;
    }
}

impl MulAssign for Dual {
    fn mul_assign(&mut self, rhs: Dual) {
        *self = *self * rhs;
    }
}

impl Scalar for Dual {
    fn constant(x: f64) -> Self {
        Dual::new(x, 0.0)
    }

    fn value(self) -> f64 {
        self.re
    }

    fn exp(self) -> Self {
        let e = self.re.exp();
        Dual::new(e, self.eps * e)
    }

    fn ln(self) -> Self {
        Dual::new(self.re.ln(), self.eps / self.re)
    }

    fn tanh(self) -> Self {
        let t = self.re.tanh();
        Dual::new(t, self.eps * (1.0 - t * t))
    }

    fn abs(self) -> Self {
        if self.re < 0.0 {
            -self
        } else {
            self
        }
    }

    fn powi(self, n: i32) -> Self {
        match n {
            0 => Dual::constant(1.0),
            _ => Dual::new(
                self.re.powi(n),
                self.eps * n as f64 * self.re.powi(n - 1),
            ),
        }
    }

    fn scale(self, k: f64) -> Self {
        Dual::new(self.re * k, self.eps * k)
    }
}
