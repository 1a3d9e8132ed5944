//! Scalar fields used throughout the crate.
//!
//! Two arithmetic modes are supported: exact rationals (real or complex) and
//! binary64 floats (real or complex). Structural decisions such as ranks use
//! exact zero tests in the exact mode and a relative tolerance otherwise.

use core::fmt::{Debug, Display};
use core::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational number.
pub type Rational = BigRational;
/// Exact complex rational number.
pub type ComplexRational = Complex<BigRational>;
/// Double precision complex number.
pub type C64 = Complex<f64>;

/// A field of scalars with the operations the analysis needs.
pub trait Field:
    Clone
    + Debug
    + Display
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// Floating point companion used for iterative solvers.
    type Approx: Field<Approx = Self::Approx>;

    /// True when arithmetic is error free.
    const EXACT: bool;
    /// True for complex scalars.
    const COMPLEX: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(v: i64) -> Self;
    /// Exact conversion of a binary64 value (rounded in float mode is a no-op).
    fn from_f64(v: f64) -> Self;
    /// Builds a scalar from rational real and imaginary parts.
    /// Returns `None` when a nonzero imaginary part is given to a real field.
    fn from_rational_parts(re: &Rational, im: &Rational) -> Option<Self>;

    fn is_zero(&self) -> bool;
    /// Modulus as a float.
    fn modulus(&self) -> f64;
    fn real_f64(&self) -> f64;
    fn imag_f64(&self) -> f64;
    fn conj(&self) -> Self;

    fn approx(&self) -> Self::Approx;
    fn from_approx(a: &Self::Approx) -> Self;

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num) / Self::from_i64(den)
    }

    /// Zero test: exact in exact mode, `|x| <= tol * scale` in float mode.
    fn negligible(&self, scale: f64, tol: f64) -> bool {
        if Self::EXACT {
            self.is_zero()
        } else {
            self.modulus() <= tol * scale
        }
    }

    fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one();
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            e >>= 1;
            if e > 0 {
                base = base.clone() * base;
            }
        }
        acc
    }

    /// Sign of a real scalar; `None` for complex fields.
    fn real_sign(&self) -> Option<i8> {
        if Self::COMPLEX {
            return None;
        }
        let r = self.real_f64();
        Some(if self.is_zero() {
            0
        } else if r > 0.0 {
            1
        } else if r < 0.0 {
            -1
        } else {
            0
        })
    }
}

fn rational_from_f64(v: f64) -> Rational {
    BigRational::from_float(v).unwrap_or_else(<BigRational as Zero>::zero)
}

fn rational_to_f64(r: &Rational) -> f64 {
    if let Some(v) = r.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    let n = r.numer().to_f64().unwrap_or(f64::NAN);
    let d = r.denom().to_f64().unwrap_or(f64::NAN);
    n / d
}

impl Field for Rational {
    type Approx = f64;
    const EXACT: bool = true;
    const COMPLEX: bool = false;

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn from_f64(v: f64) -> Self {
        rational_from_f64(v)
    }
    fn from_rational_parts(re: &Rational, im: &Rational) -> Option<Self> {
        if Zero::is_zero(im) {
            Some(re.clone())
        } else {
            None
        }
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn modulus(&self) -> f64 {
        rational_to_f64(&self.abs())
    }
    fn real_f64(&self) -> f64 {
        rational_to_f64(self)
    }
    fn imag_f64(&self) -> f64 {
        0.0
    }
    fn conj(&self) -> Self {
        self.clone()
    }
    fn approx(&self) -> f64 {
        rational_to_f64(self)
    }
    fn from_approx(a: &f64) -> Self {
        rational_from_f64(*a)
    }
    fn real_sign(&self) -> Option<i8> {
        Some(if Zero::is_zero(self) {
            0
        } else if self.is_positive() {
            1
        } else {
            -1
        })
    }
}

impl Field for f64 {
    type Approx = f64;
    const EXACT: bool = false;
    const COMPLEX: bool = false;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn from_f64(v: f64) -> Self {
        v
    }
    fn from_rational_parts(re: &Rational, im: &Rational) -> Option<Self> {
        if Zero::is_zero(im) {
            Some(rational_to_f64(re))
        } else {
            None
        }
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn modulus(&self) -> f64 {
        libm::fabs(*self)
    }
    fn real_f64(&self) -> f64 {
        *self
    }
    fn imag_f64(&self) -> f64 {
        0.0
    }
    fn conj(&self) -> Self {
        *self
    }
    fn approx(&self) -> f64 {
        *self
    }
    fn from_approx(a: &f64) -> Self {
        *a
    }
}

impl Field for C64 {
    type Approx = C64;
    const EXACT: bool = false;
    const COMPLEX: bool = true;

    fn zero() -> Self {
        Complex::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex::new(1.0, 0.0)
    }
    fn from_i64(v: i64) -> Self {
        Complex::new(v as f64, 0.0)
    }
    fn from_f64(v: f64) -> Self {
        Complex::new(v, 0.0)
    }
    fn from_rational_parts(re: &Rational, im: &Rational) -> Option<Self> {
        Some(Complex::new(rational_to_f64(re), rational_to_f64(im)))
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn modulus(&self) -> f64 {
        libm::hypot(self.re, self.im)
    }
    fn real_f64(&self) -> f64 {
        self.re
    }
    fn imag_f64(&self) -> f64 {
        self.im
    }
    fn conj(&self) -> Self {
        Complex::new(self.re, -self.im)
    }
    fn approx(&self) -> C64 {
        *self
    }
    fn from_approx(a: &C64) -> Self {
        *a
    }
}

impl Field for ComplexRational {
    type Approx = C64;
    const EXACT: bool = true;
    const COMPLEX: bool = true;

    fn zero() -> Self {
        Complex::new(Zero::zero(), Zero::zero())
    }
    fn one() -> Self {
        Complex::new(One::one(), Zero::zero())
    }
    fn from_i64(v: i64) -> Self {
        Complex::new(<Rational as Field>::from_i64(v), Zero::zero())
    }
    fn from_f64(v: f64) -> Self {
        Complex::new(rational_from_f64(v), Zero::zero())
    }
    fn from_rational_parts(re: &Rational, im: &Rational) -> Option<Self> {
        Some(Complex::new(re.clone(), im.clone()))
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(&self.re) && Zero::is_zero(&self.im)
    }
    fn modulus(&self) -> f64 {
        libm::hypot(rational_to_f64(&self.re), rational_to_f64(&self.im))
    }
    fn real_f64(&self) -> f64 {
        rational_to_f64(&self.re)
    }
    fn imag_f64(&self) -> f64 {
        rational_to_f64(&self.im)
    }
    fn conj(&self) -> Self {
        Complex::new(self.re.clone(), -self.im.clone())
    }
    fn approx(&self) -> C64 {
        Complex::new(rational_to_f64(&self.re), rational_to_f64(&self.im))
    }
    fn from_approx(a: &C64) -> Self {
        Complex::new(rational_from_f64(a.re), rational_from_f64(a.im))
    }
}

/// Euclidean (Hermitian) norm of a vector.
pub fn norm<K: Field>(v: &[K]) -> f64 {
    let mut s = 0.0;
    for x in v {
        let a = x.modulus();
        s += a * a;
    }
    libm::sqrt(s)
}

/// Largest modulus in a slice, 0 for an empty slice.
pub fn max_modulus<K: Field>(v: &[K]) -> f64 {
    v.iter().map(Field::modulus).fold(0.0, f64::max)
}
