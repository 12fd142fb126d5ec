//! Scalar types.
//!
//! Everything downstream is generic over [`Scalar`], which is a thin layer on
//! top of `num_traits`. Exact rationals implement only [`Scalar`]; complex
//! floating types additionally implement [`Analytic`], which supplies the
//! transcendental operations needed for non-integer powers. Functions that
//! need `exp` or `ln` therefore refuse exact input at compile time, and two
//! different scalar types can never meet in one expression.

use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Rem, RemAssign, Sub, SubAssign};

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{Float, FloatConst, Num, NumAssign, NumAssignRef, NumRef, One, Zero};
use rug::float::Constant;
use serde::Serialize;

use crate::Error;

/// Arithmetic mode tag carried into reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Float,
}

/// Field arithmetic over a scalar type.
pub trait Scalar:
    NumRef + NumAssignRef + Neg<Output = Self> + Clone + fmt::Debug + Send + Sync + 'static
{
    fn from_i64(n: i64) -> Self;

    fn mode() -> Mode;

    fn from_ratio(n: i64, d: i64) -> Self {
        Self::from_i64(n) / Self::from_i64(d)
    }

    fn half() -> Self {
        Self::from_ratio(1, 2)
    }

    /// Integer power by repeated squaring; negative exponents invert.
    fn powi(&self, n: i64) -> Self {
        let mut base = self.clone();
        let mut e = n.unsigned_abs();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc *= &base;
            }
            e >>= 1;
            if e > 0 {
                base = base.clone() * &base;
            }
        }
        if n < 0 {
            Self::one() / acc
        } else {
            acc
        }
    }
}

/// Complex floating scalars with principal-branch transcendental functions.
pub trait Analytic: Scalar {
    fn mantissa_bits() -> u32;
    fn from_f64(x: f64) -> Self;
    fn from_c64(re: f64, im: f64) -> Self;
    /// Parses `"re"` or `"re,im"` as decimals, rounded once at full precision.
    fn parse(s: &str) -> Result<Self, Error>;
    fn exp(&self) -> Self;
    /// Principal logarithm.
    fn ln(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn abs(&self) -> f64;
    fn re(&self) -> f64;
    fn im(&self) -> f64;
    fn pi() -> Self;
    fn imag_unit() -> Self;
    /// Decimal rendering of the real and imaginary parts.
    fn to_decimal(&self) -> (String, String);

    fn epsilon() -> f64 {
        2f64.powi(1 - Self::mantissa_bits() as i32)
    }

    /// `exp(e * Log self)`.
    fn pow(&self, e: &Self) -> Self {
        (self.ln() * e).exp()
    }

    fn dist(&self, other: &Self) -> f64 {
        (self.clone() - other).abs()
    }

    /// `|self - other| / max(|self|, |other|)`, zero when both vanish.
    fn rel_diff(&self, other: &Self) -> f64 {
        let m = self.abs().max(other.abs());
        if m == 0.0 {
            0.0
        } else {
            self.dist(other) / m
        }
    }
}

impl Scalar for BigRational {
    fn from_i64(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn mode() -> Mode {
        Mode::Exact
    }

    fn from_ratio(n: i64, d: i64) -> Self {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }
}

impl<T> Scalar for Complex<T>
where
    T: Float + NumAssign + fmt::Debug + Send + Sync + 'static,
{
    fn from_i64(n: i64) -> Self {
        Complex::new(T::from(n).expect("integer fits the float type"), T::zero())
    }

    fn mode() -> Mode {
        Mode::Float
    }
}

impl<T> Analytic for Complex<T>
where
    T: Float + FloatConst + NumAssign + fmt::Debug + fmt::Display + Send + Sync + 'static + fmt::LowerExp,
{
    fn mantissa_bits() -> u32 {
        (1.0 - T::epsilon().log2().to_f64().unwrap()).round() as u32
    }

    fn from_f64(x: f64) -> Self {
        Complex::new(T::from(x).unwrap(), T::zero())
    }

    fn from_c64(re: f64, im: f64) -> Self {
        Complex::new(T::from(re).unwrap(), T::from(im).unwrap())
    }

    fn parse(s: &str) -> Result<Self, Error> {
        let (re, im) = split_parts(s)?;
        let p = |v: &str| -> Result<T, Error> {
            let x: f64 = v.trim().parse().map_err(|_| Error::Parse(s.to_string()))?;
            Ok(T::from(x).unwrap())
        };
        Ok(Complex::new(p(re)?, im.map(p).transpose()?.unwrap_or_else(T::zero)))
    }

    fn exp(&self) -> Self {
        Complex::exp(*self)
    }

    fn ln(&self) -> Self {
        Complex::ln(*self)
    }

    fn sqrt(&self) -> Self {
        Complex::sqrt(*self)
    }

    fn abs(&self) -> f64 {
        self.norm().to_f64().unwrap()
    }

    fn re(&self) -> f64 {
        self.re.to_f64().unwrap()
    }

    fn im(&self) -> f64 {
        self.im.to_f64().unwrap()
    }

    fn pi() -> Self {
        Complex::new(T::PI(), T::zero())
    }

    fn imag_unit() -> Self {
        Complex::new(T::zero(), T::one())
    }

    fn to_decimal(&self) -> (String, String) {
        (format!("{:e}", self.re), format!("{:e}", self.im))
    }
}

fn split_parts(s: &str) -> Result<(&str, Option<&str>), Error> {
    let mut it = s.split(',');
    let re = it.next().ok_or_else(|| Error::Parse(s.to_string()))?;
    let im = it.next();
    if it.next().is_some() || re.trim().is_empty() {
        return Err(Error::Parse(s.to_string()));
    }
    Ok((re, im))
}

/// Complex number with a `BITS`-bit mantissa in each component.
#[derive(Clone, PartialEq)]
pub struct Mp<const BITS: u32>(pub rug::Complex);

impl<const B: u32> Mp<B> {
    pub fn new(re: f64, im: f64) -> Self {
        Mp(rug::Complex::with_val(B, (re, im)))
    }

    pub fn inner(&self) -> &rug::Complex {
        &self.0
    }

    fn digits() -> usize {
        (B as f64 * std::f64::consts::LOG10_2).ceil() as usize + 1
    }
}

impl<const B: u32> fmt::Debug for Mp<B> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (re, im) = self.to_decimal();
        write!(f, "({re}, {im})")
    }
}

impl<const B: u32> fmt::Display for Mp<B> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl<const B: u32> Zero for Mp<B> {
    fn zero() -> Self {
        Mp(rug::Complex::new(B))
    }

    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl<const B: u32> One for Mp<B> {
    fn one() -> Self {
        Mp(rug::Complex::with_val(B, 1))
    }
}

impl<const B: u32> Neg for Mp<B> {
    type Output = Self;

    fn neg(self) -> Self {
        Mp(-self.0)
    }
}

macro_rules! mp_binop {
    ($tr:ident, $f:ident, $atr:ident, $af:ident, $op:tt, $aop:tt) => {
        impl<const B: u32> $tr for Mp<B> {
            type Output = Self;
            fn $f(self, rhs: Self) -> Self {
                Mp(self.0 $op rhs.0)
            }
        }
        impl<'a, const B: u32> $tr<&'a Mp<B>> for Mp<B> {
            type Output = Self;
            fn $f(self, rhs: &'a Self) -> Self {
                Mp(self.0 $op &rhs.0)
            }
        }
        impl<const B: u32> $atr for Mp<B> {
            fn $af(&mut self, rhs: Self) {
                self.0 $aop rhs.0;
            }
        }
        impl<'a, const B: u32> $atr<&'a Mp<B>> for Mp<B> {
            fn $af(&mut self, rhs: &'a Self) {
                self.0 $aop &rhs.0;
            }
        }
    };
}

mp_binop!(Add, add, AddAssign, add_assign, +, +=);
mp_binop!(Sub, sub, SubAssign, sub_assign, -, -=);
mp_binop!(Mul, mul, MulAssign, mul_assign, *, *=);
mp_binop!(Div, div, DivAssign, div_assign, /, /=);

impl<const B: u32> Mp<B> {
    /// Gaussian-style remainder `a - b * trunc(a / b)`, truncating each component.
    fn rem_impl(&self, rhs: &Self) -> Self {
        let mut k = self.0.clone() / &rhs.0;
        k.mut_real().trunc_mut();
        k.mut_imag().trunc_mut();
        Mp(self.0.clone() - k * &rhs.0)
    }
}

impl<const B: u32> Rem for Mp<B> {
    type Output = Self;
    fn rem(self, rhs: Self) -> Self {
        self.rem_impl(&rhs)
    }
}

impl<'a, const B: u32> Rem<&'a Mp<B>> for Mp<B> {
    type Output = Self;
    fn rem(self, rhs: &'a Self) -> Self {
        self.rem_impl(rhs)
    }
}

impl<const B: u32> RemAssign for Mp<B> {
    fn rem_assign(&mut self, rhs: Self) {
        *self = self.rem_impl(&rhs);
    }
}

impl<'a, const B: u32> RemAssign<&'a Mp<B>> for Mp<B> {
    fn rem_assign(&mut self, rhs: &'a Self) {
        *self = self.rem_impl(rhs);
    }
}

impl<const B: u32> Num for Mp<B> {
    type FromStrRadixErr = Error;

    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Error> {
        let parsed = rug::Complex::parse_radix(s, radix as i32).map_err(|_| Error::Parse(s.to_string()))?;
        Ok(Mp(rug::Complex::with_val(B, parsed)))
    }
}

impl<const B: u32> Scalar for Mp<B> {
    fn from_i64(n: i64) -> Self {
        Mp(rug::Complex::with_val(B, n))
    }

    fn mode() -> Mode {
        Mode::Float
    }

    fn from_ratio(n: i64, d: i64) -> Self {
        let r = rug::Float::with_val(B, n) / d;
        Mp(rug::Complex::with_val(B, r))
    }
}

impl<const B: u32> Analytic for Mp<B> {
    fn mantissa_bits() -> u32 {
        B
    }

    fn from_f64(x: f64) -> Self {
        Mp(rug::Complex::with_val(B, x))
    }

    fn from_c64(re: f64, im: f64) -> Self {
        Mp::new(re, im)
    }

    fn parse(s: &str) -> Result<Self, Error> {
        let (re, im) = split_parts(s)?;
        let p = |v: &str| -> Result<rug::Float, Error> {
            let parsed = rug::Float::parse(v.trim()).map_err(|_| Error::Parse(s.to_string()))?;
            Ok(rug::Float::with_val(B, parsed))
        };
        let re = p(re)?;
        let im = match im {
            Some(v) => p(v)?,
            None => rug::Float::new(B),
        };
        Ok(Mp(rug::Complex::with_val(B, (re, im))))
    }

    fn exp(&self) -> Self {
        Mp(self.0.clone().exp())
    }

    fn ln(&self) -> Self {
        Mp(self.0.clone().ln())
    }

    fn sqrt(&self) -> Self {
        Mp(self.0.clone().sqrt())
    }

    fn abs(&self) -> f64 {
        self.0.clone().abs().real().to_f64()
    }

    fn re(&self) -> f64 {
        self.0.real().to_f64()
    }

    fn im(&self) -> f64 {
        self.0.imag().to_f64()
    }

    fn pi() -> Self {
        Mp(rug::Complex::with_val(B, rug::Float::with_val(B, Constant::Pi)))
    }

    fn imag_unit() -> Self {
        Mp(rug::Complex::with_val(B, (0, 1)))
    }

    fn to_decimal(&self) -> (String, String) {
        let d = Some(Self::digits());
        (self.0.real().to_string_radix(10, d), self.0.imag().to_string_radix(10, d))
    }
}
