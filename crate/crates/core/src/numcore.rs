//! Complex numbers with a wide binary exponent.
//!
//! Orbits that escape with maximal speed grow like `eta^(q^n)`, which leaves
//! the range of `f64` after a few dozen steps. [`ScaledComplex`] keeps a
//! double-precision mantissa with modulus in `[1, 2)` and an `i128` exponent,
//! so the only precision loss is the usual rounding of the mantissa.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

/// Beyond this exponent gap the smaller addend is below one ulp of the larger.
const ALIGN_CUTOFF: i128 = 64;

/// Multiply by `2^k` exactly, splitting the scale so that `2^k` itself never
/// overflows or underflows.
fn scale_pow2(x: f64, k: i32) -> f64 {
    if k == 0 {
        return x;
    }
    let mut x = x;
    let mut k = k;
    while k > 1000 {
        x *= 2f64.powi(1000);
        k -= 1000;
    }
    while k < -1000 {
        x *= 2f64.powi(-1000);
        k += 1000;
    }
    x * 2f64.powi(k)
}

fn scale_complex(z: Complex64, k: i32) -> Complex64 {
    Complex64::new(scale_pow2(z.re, k), scale_pow2(z.im, k))
}

/// `mantissa * 2^exponent`, normalized to `1 <= |mantissa| < 2` or the
/// canonical zero `(0, 0)`.
#[derive(Clone, Copy, PartialEq)]
pub struct ScaledComplex {
    mantissa: Complex64,
    exponent: i128,
}

impl Default for ScaledComplex {
    fn default() -> Self {
        Self::ZERO
    }
}

impl fmt::Debug for ScaledComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({:?}{:+?}i)*2^{}",
            self.mantissa.re, self.mantissa.im, self.exponent
        )
    }
}

impl ScaledComplex {
    pub const ZERO: Self = Self {
        mantissa: Complex64::new(0.0, 0.0),
        exponent: 0,
    };

    pub const ONE: Self = Self {
        mantissa: Complex64::new(1.0, 0.0),
        exponent: 0,
    };

    /// Builds `mantissa * 2^exponent` and normalizes it. Non-finite mantissas
    /// are rejected with a panic since no orbit computation produces them.
    pub fn new(mantissa: Complex64, exponent: i128) -> Self {
        normalize(mantissa, exponent)
    }

    pub fn from_complex(z: Complex64) -> Self {
        normalize(z, 0)
    }

    pub fn from_f64(x: f64) -> Self {
        normalize(Complex64::new(x, 0.0), 0)
    }

    pub fn from_re_im(re: f64, im: f64) -> Self {
        normalize(Complex64::new(re, im), 0)
    }

    pub fn mantissa(&self) -> Complex64 {
        self.mantissa
    }

    pub fn exponent(&self) -> i128 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.re == 0.0 && self.mantissa.im == 0.0
    }

    /// True when the representation satisfies its invariant.
    pub fn is_normalized(&self) -> bool {
        if self.is_zero() {
            return self.exponent == 0;
        }
        let a = self.mantissa.norm();
        (1.0..2.0).contains(&a)
    }

    /// Converts to a hardware complex; saturates to infinity or zero outside
    /// the `f64` range.
    pub fn to_complex(&self) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        if self.exponent > 1100 {
            let inf = f64::INFINITY;
            return Complex64::new(inf.copysign(self.mantissa.re), inf.copysign(self.mantissa.im));
        }
        if self.exponent < -1200 {
            return Complex64::new(0.0, 0.0);
        }
        scale_complex(self.mantissa, self.exponent as i32)
    }

    /// `ln |x| = ln |mantissa| + exponent * ln 2`.
    pub fn log_abs(&self) -> LogMagnitude {
        if self.is_zero() {
            LogMagnitude::NegInfinity
        } else {
            LogMagnitude::Finite(
                self.mantissa.norm().ln() + self.exponent as f64 * std::f64::consts::LN_2,
            )
        }
    }

    /// `|x|` as a double, saturating like [`to_complex`](Self::to_complex).
    pub fn abs(&self) -> f64 {
        self.modulus().to_complex().re
    }

    /// `|x|` as a nonnegative real scaled value.
    pub fn modulus(&self) -> Self {
        Self {
            mantissa: Complex64::new(self.mantissa.norm(), 0.0),
            exponent: self.exponent,
        }
        .renormalized()
    }

    fn renormalized(self) -> Self {
        normalize(self.mantissa, self.exponent)
    }

    pub fn conj(&self) -> Self {
        Self {
            mantissa: self.mantissa.conj(),
            exponent: self.exponent,
        }
    }

    /// Exact comparison of moduli.
    pub fn cmp_abs(&self, other: &Self) -> Ordering {
        match (self.is_zero(), other.is_zero()) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
            (false, false) => self.exponent.cmp(&other.exponent).then_with(|| {
                self.mantissa
                    .norm()
                    .partial_cmp(&other.mantissa.norm())
                    .unwrap_or(Ordering::Equal)
            }),
        }
    }

    pub fn max_abs(self, other: Self) -> Self {
        if self.cmp_abs(&other) == Ordering::Less {
            other
        } else {
            self
        }
    }

    pub fn sc_add(self, other: Self) -> Self {
        if self.is_zero() {
            return other;
        }
        if other.is_zero() {
            return self;
        }
        let (big, small) = if self.exponent >= other.exponent {
            (self, other)
        } else {
            (other, self)
        };
        let gap = big.exponent - small.exponent;
        if gap > ALIGN_CUTOFF {
            return big;
        }
        let m = big.mantissa + scale_complex(small.mantissa, -(gap as i32));
        normalize(m, big.exponent)
    }

    pub fn sc_mul(self, other: Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::ZERO;
        }
        normalize(self.mantissa * other.mantissa, self.exponent + other.exponent)
    }

    /// Division; `None` when the divisor is zero.
    pub fn checked_div(self, other: Self) -> Option<Self> {
        if other.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(Self::ZERO);
        }
        Some(normalize(
            self.mantissa / other.mantissa,
            self.exponent - other.exponent,
        ))
    }

    pub fn recip(self) -> Option<Self> {
        Self::ONE.checked_div(self)
    }

    /// `x^k` by binary exponentiation, renormalizing after every product.
    /// `k = 0` gives one.
    pub fn sc_powi(self, k: u64) -> Self {
        let mut result = Self::ONE;
        let mut base = self;
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                result = result.sc_mul(base);
            }
            k >>= 1;
            if k > 0 {
                base = base.sc_mul(base);
            }
        }
        result
    }

    /// Principal branch of `x^(num/den)`, `den > 0`. `None` for `x = 0` with a
    /// non-positive exponent.
    pub fn powf_rational(self, num: i64, den: i64) -> Option<Self> {
        assert!(den > 0, "denominator must be positive");
        if self.is_zero() {
            return if num > 0 { Some(Self::ZERO) } else { None };
        }
        if den == 1 {
            return if num >= 0 {
                Some(self.sc_powi(num as u64))
            } else {
                self.sc_powi(num.unsigned_abs()).recip()
            };
        }
        // 2^(e*num/den) = 2^quot * 2^(rem/den) with 0 <= rem < den
        let scaled = self.exponent * num as i128;
        let quot = scaled.div_euclid(den as i128);
        let rem = scaled.rem_euclid(den as i128);
        let l = num as f64 / den as f64;
        let (r, theta) = self.mantissa.to_polar();
        let modulus = r.powf(l) * (rem as f64 / den as f64).exp2();
        Some(normalize(Complex64::from_polar(modulus, theta * l), quot))
    }
}

fn normalize(m: Complex64, e: i128) -> ScaledComplex {
    assert!(
        m.re.is_finite() && m.im.is_finite(),
        "non-finite mantissa {m:?}"
    );
    if m.re == 0.0 && m.im == 0.0 {
        return ScaledComplex::ZERO;
    }
    let a = m.norm();
    let k = a.log2().floor() as i32;
    let mut m = scale_complex(m, -k);
    let mut e = e + k as i128;
    loop {
        let a = m.norm();
        if a >= 2.0 {
            m = scale_complex(m, -1);
            e += 1;
        } else if a < 1.0 {
            m = scale_complex(m, 1);
            e -= 1;
        } else {
            break;
        }
    }
    ScaledComplex {
        mantissa: m,
        exponent: e,
    }
}

impl From<Complex64> for ScaledComplex {
    fn from(z: Complex64) -> Self {
        Self::from_complex(z)
    }
}

impl From<f64> for ScaledComplex {
    fn from(x: f64) -> Self {
        Self::from_f64(x)
    }
}

impl Add for ScaledComplex {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.sc_add(rhs)
    }
}

impl Sub for ScaledComplex {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.sc_add(-rhs)
    }
}

impl Mul for ScaledComplex {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.sc_mul(rhs)
    }
}

impl Neg for ScaledComplex {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            mantissa: -self.mantissa,
            exponent: self.exponent,
        }
    }
}

/// Natural logarithm of a modulus; `NegInfinity` exactly for modulus zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LogMagnitude {
    Finite(f64),
    NegInfinity,
}

impl LogMagnitude {
    /// The logarithm as a double, `-inf` for zero.
    pub fn value(&self) -> f64 {
        match *self {
            LogMagnitude::Finite(v) => v,
            LogMagnitude::NegInfinity => f64::NEG_INFINITY,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, LogMagnitude::Finite(_))
    }

    /// `log+ = max(0, ln |x|)`.
    pub fn log_plus(&self) -> f64 {
        self.value().max(0.0)
    }
}
