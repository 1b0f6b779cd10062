//! The automorphism `Psi_alpha`, its inverse, the Hénon-type model `Phi_alpha`
//! with its planar factor `phi_alpha`, the semi-conjugacies `theta` and `h`,
//! forward orbits and the 2x2 cocycle governing growth in the fibers.
//!
//! Matrices act on row vectors through `M . v := v M^T`, i.e. the usual
//! matrix-vector product with `v` read as a column. [`CocycleMatrix::apply`]
//! implements exactly that.

use num_bigint::{BigInt, BigUint};
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::numcore::{LogMagnitude, ScaledComplex};
use crate::{Error, Result, PHI};

/// Tolerance on `|alpha| <= 1`.
const MODULUS_SLACK: f64 = 1e-12;

/// Hard ceiling on `ln |P^(n)|`; orbit loops stop here so the `i128` exponent
/// can never overflow.
pub const LOG_MAGNITUDE_CAP: f64 = 1e15;

/// The triple `(q, d, alpha)` and its derived constants.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    q: u32,
    d: u32,
    alpha: Complex64,
    l_num: i64,
    l_den: i64,
    critical_modulus: f64,
    alpha_sc: ScaledComplex,
    alpha_l: ScaledComplex,
}

impl Params {
    pub fn new(q: u32, d: u32, alpha: Complex64) -> Result<Self> {
        if q < 2 {
            return Err(Error::InvalidParams(format!("q must be >= 2, got {q}")));
        }
        if d < 1 {
            return Err(Error::InvalidParams(format!("d must be >= 1, got {d}")));
        }
        if !(alpha.re.is_finite() && alpha.im.is_finite()) {
            return Err(Error::InvalidParams("alpha must be finite".into()));
        }
        let modulus = alpha.norm();
        if modulus == 0.0 || modulus > 1.0 + MODULUS_SLACK {
            return Err(Error::InvalidParams(format!(
                "need 0 < |alpha| <= 1, got |alpha| = {modulus}"
            )));
        }
        let g = (d as i64).gcd(&(q as i64 - 1));
        let l_num = d as i64 / g;
        let l_den = (q as i64 - 1) / g;
        let critical_modulus = PHI.powf((1.0 - q as f64) / d as f64);
        let alpha_sc = ScaledComplex::from_complex(alpha);
        let alpha_l = alpha_sc
            .powf_rational(l_num, l_den)
            .expect("alpha is nonzero");
        Ok(Self {
            q,
            d,
            alpha,
            l_num,
            l_den,
            critical_modulus,
            alpha_sc,
            alpha_l,
        })
    }

    /// Real positive `alpha`.
    pub fn real(q: u32, d: u32, alpha: f64) -> Result<Self> {
        Self::new(q, d, Complex64::new(alpha, 0.0))
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn alpha_modulus(&self) -> f64 {
        self.alpha.norm()
    }

    /// `l = d / (q - 1)` as a reduced fraction `(num, den)`.
    pub fn l(&self) -> (i64, i64) {
        (self.l_num, self.l_den)
    }

    pub fn l_f64(&self) -> f64 {
        self.l_num as f64 / self.l_den as f64
    }

    pub fn l_is_integral(&self) -> bool {
        self.l_den == 1
    }

    /// `phi^((1 - q) / d)`.
    pub fn critical_modulus(&self) -> f64 {
        self.critical_modulus
    }

    pub(crate) fn alpha_sc(&self) -> ScaledComplex {
        self.alpha_sc
    }

    /// Principal value of `alpha^l` (exact power when `l` is an integer).
    pub fn alpha_pow_l(&self) -> ScaledComplex {
        self.alpha_l
    }

    /// `z^l` on the principal branch; fails at `z = 0` when `l` is
    /// fractional.
    pub fn pow_l(&self, z: ScaledComplex) -> Result<ScaledComplex> {
        if z.is_zero() && !self.l_is_integral() {
            return Err(Error::BranchUndefined {
                l: format!("{}/{}", self.l_num, self.l_den),
            });
        }
        Ok(z
            .powf_rational(self.l_num, self.l_den)
            .expect("l is positive"))
    }
}

/// A point of `C^3` in scaled arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point3 {
    pub z0: ScaledComplex,
    pub z1: ScaledComplex,
    pub z2: ScaledComplex,
}

impl Point3 {
    pub fn new(z0: Complex64, z1: Complex64, z2: Complex64) -> Self {
        Self {
            z0: z0.into(),
            z1: z1.into(),
            z2: z2.into(),
        }
    }

    pub fn real(z0: f64, z1: f64, z2: f64) -> Self {
        Self {
            z0: z0.into(),
            z1: z1.into(),
            z2: z2.into(),
        }
    }

    pub fn to_complex(&self) -> [Complex64; 3] {
        [self.z0.to_complex(), self.z1.to_complex(), self.z2.to_complex()]
    }

    /// Max-norm over all three coordinates.
    pub fn max_norm(&self) -> ScaledComplex {
        self.z0.max_abs(self.z1).max_abs(self.z2)
    }

    /// Max-norm of the fiber coordinates `(z0, z1)`.
    pub fn fiber_norm(&self) -> ScaledComplex {
        self.z0.max_abs(self.z1)
    }
}

/// A point of `C^2`, the phase space of the Hénon factor.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub w0: ScaledComplex,
    pub w1: ScaledComplex,
}

impl Point2 {
    pub fn new(w0: Complex64, w1: Complex64) -> Self {
        Self {
            w0: w0.into(),
            w1: w1.into(),
        }
    }

    pub fn to_complex(&self) -> [Complex64; 2] {
        [self.w0.to_complex(), self.w1.to_complex()]
    }

    pub fn max_norm(&self) -> ScaledComplex {
        self.w0.max_abs(self.w1)
    }
}

/// `Psi_alpha(z0, z1, z2) = (z0 + z1 + z0^q z2^d, z0, alpha z2)`.
pub fn apply_psi(params: &Params, p: &Point3) -> Point3 {
    let nonlinear = p.z0.sc_powi(params.q as u64) * p.z2.sc_powi(params.d as u64);
    Point3 {
        z0: p.z0 + p.z1 + nonlinear,
        z1: p.z0,
        z2: params.alpha_sc() * p.z2,
    }
}

/// `Psi_alpha^-1(z0, z1, z2) = (z1, -z1 + z0 - z1^q z2^d / alpha^d, z2 / alpha)`.
pub fn apply_psi_inv(params: &Params, p: &Point3) -> Point3 {
    let z2_new = p
        .z2
        .checked_div(params.alpha_sc())
        .expect("alpha is nonzero");
    let nonlinear = p.z1.sc_powi(params.q as u64) * z2_new.sc_powi(params.d as u64);
    Point3 {
        z0: p.z1,
        z1: p.z0 - p.z1 - nonlinear,
        z2: z2_new,
    }
}

/// `phi_alpha(w0, w1) = alpha^l (w0 + w1 + w0^q, w0)`.
pub fn apply_henon(params: &Params, w: &Point2) -> Point2 {
    let a = params.alpha_pow_l();
    Point2 {
        w0: a * (w.w0 + w.w1 + w.w0.sc_powi(params.q as u64)),
        w1: a * w.w0,
    }
}

/// `phi_alpha^-1(w0, w1) = (w1 / alpha^l, w0 / alpha^l - w1 / alpha^l - (w1 / alpha^l)^q)`.
pub fn apply_henon_inv(params: &Params, w: &Point2) -> Point2 {
    let inv = params.alpha_pow_l().recip().expect("alpha is nonzero");
    let u = w.w1 * inv;
    Point2 {
        w0: u,
        w1: w.w0 * inv - u - u.sc_powi(params.q as u64),
    }
}

/// `Phi_alpha = (phi_alpha(z0, z1), alpha z2)`.
pub fn apply_phi(params: &Params, p: &Point3) -> Point3 {
    let w = apply_henon(
        params,
        &Point2 {
            w0: p.z0,
            w1: p.z1,
        },
    );
    Point3 {
        z0: w.w0,
        z1: w.w1,
        z2: params.alpha_sc() * p.z2,
    }
}

/// `theta(z) = (z0 z2^l, z1 z2^l, z2)`, intertwining `Psi_alpha` with `Phi_alpha`.
pub fn theta(params: &Params, p: &Point3) -> Result<Point3> {
    let s = params.pow_l(p.z2)?;
    Ok(Point3 {
        z0: p.z0 * s,
        z1: p.z1 * s,
        z2: p.z2,
    })
}

/// `h(z) = (z0 z2^l, z1 z2^l)`, the projection onto the Hénon factor.
pub fn h_map(params: &Params, p: &Point3) -> Result<Point2> {
    let s = params.pow_l(p.z2)?;
    Ok(Point2 {
        w0: p.z0 * s,
        w1: p.z1 * s,
    })
}

/// `|theta(Psi p) - Phi(theta p)|` over the larger of the two sides, in the
/// max norm; 0 when both sides vanish.
pub fn conjugacy_residual(params: &Params, p: &Point3) -> Result<f64> {
    let lhs = theta(params, &apply_psi(params, p))?;
    let rhs = apply_phi(params, &theta(params, p)?);
    let diff = Point3 {
        z0: lhs.z0 - rhs.z0,
        z1: lhs.z1 - rhs.z1,
        z2: lhs.z2 - rhs.z2,
    };
    let scale = lhs.max_norm().max_abs(rhs.max_norm());
    if scale.is_zero() {
        return Ok(0.0);
    }
    Ok((diff.max_norm().log_abs().value() - scale.log_abs().value()).exp())
}

/// When to end an orbit before `max_steps`.
///
/// Magnitudes are those of the fiber pair `max(|P^(n)|, |P^(n-1)|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopPolicy {
    /// Escape threshold on the natural log of the fiber norm.
    pub escape_log: f64,
    /// Fiber norm below which a step counts as "at the fixed point".
    pub zero_eps: f64,
    /// Consecutive sub-`zero_eps` steps required to declare convergence.
    pub zero_window: usize,
}

impl Default for StopPolicy {
    fn default() -> Self {
        Self {
            escape_log: 1e4,
            zero_eps: 1e-12,
            zero_window: 10,
        }
    }
}

impl StopPolicy {
    /// The default policy without the escape threshold (only the hard cap).
    pub fn no_escape() -> Self {
        Self {
            escape_log: LOG_MAGNITUDE_CAP,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxSteps,
    Escaped,
    Converged,
}

/// One step of an orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitRecord {
    pub step: usize,
    /// `Psi^n(p) = (P^(n), P^(n-1), alpha^n p2)`.
    pub point: Point3,
    /// `ln max(|P^(n)|, |P^(n-1)|)`.
    pub log_mag: LogMagnitude,
    /// `g_n(p)` when it fits a double.
    pub g_partial: Option<Complex64>,
    /// `P^(n) / P^(n-1)`, absent when the denominator vanishes.
    pub ratio: Option<ScaledComplex>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    pub records: Vec<OrbitRecord>,
    pub stop: StopReason,
}

/// Lazily generated forward orbit running the recurrence
/// `P^(n+1) = P^(n) + P^(n-1) + (P^(n))^q (alpha^n z2)^d`.
pub struct OrbitIter<'a> {
    params: &'a Params,
    point: Point3,
    step: usize,
    max_steps: usize,
    policy: StopPolicy,
    zero_run: usize,
    /// `phi z0 + z1 + sum_{j<n} (P^(j))^q (alpha^j z2)^d phi^-j`
    g_sum: ScaledComplex,
    phi_inv_pow: ScaledComplex,
    phi_inv: ScaledComplex,
    stop: Option<StopReason>,
    done: bool,
}

impl<'a> OrbitIter<'a> {
    pub fn new(params: &'a Params, p: Point3, max_steps: usize, policy: StopPolicy) -> Self {
        let phi = ScaledComplex::from_f64(PHI);
        Self {
            params,
            point: p,
            step: 0,
            max_steps,
            policy,
            zero_run: 0,
            g_sum: phi * p.z0 + p.z1,
            phi_inv_pow: ScaledComplex::ONE,
            phi_inv: ScaledComplex::from_f64(1.0 / PHI),
            stop: None,
            done: false,
        }
    }

    /// Why the iterator ended; `None` while it is still running.
    pub fn stop_reason(&self) -> Option<StopReason> {
        self.stop
    }
}

impl Iterator for OrbitIter<'_> {
    type Item = OrbitRecord;

    fn next(&mut self) -> Option<OrbitRecord> {
        if self.done {
            return None;
        }
        let p = self.point;
        let q = self.params.q as u64;
        let d = self.params.d as u64;
        let nonlinear = p.z0.sc_powi(q) * p.z2.sc_powi(d);
        let g = self.g_sum + nonlinear * self.phi_inv_pow;
        let g_partial = (g.exponent() < 1000).then(|| g.to_complex());
        let log_mag = p.fiber_norm().log_abs();
        let record = OrbitRecord {
            step: self.step,
            point: p,
            log_mag,
            g_partial,
            ratio: p.z0.checked_div(p.z1),
        };

        let lm = log_mag.value();
        if lm < self.policy.zero_eps.ln() {
            self.zero_run += 1;
        } else {
            self.zero_run = 0;
        }
        if lm > self.policy.escape_log.min(LOG_MAGNITUDE_CAP) {
            self.stop = Some(StopReason::Escaped);
        } else if self.zero_run >= self.policy.zero_window {
            self.stop = Some(StopReason::Converged);
        } else if self.step >= self.max_steps {
            self.stop = Some(StopReason::MaxSteps);
        }
        if self.stop.is_some() {
            self.done = true;
        } else {
            self.point = Point3 {
                z0: p.z0 + p.z1 + nonlinear,
                z1: p.z0,
                z2: self.params.alpha_sc() * p.z2,
            };
            self.g_sum = g;
            self.phi_inv_pow = self.phi_inv_pow * self.phi_inv;
            self.step += 1;
        }
        Some(record)
    }
}

/// Forward orbit records for `n = 0, 1, ...` up to `max_steps` or an earlier stop.
pub fn orbit(params: &Params, p: &Point3, max_steps: usize, policy: StopPolicy) -> Orbit {
    let mut it = OrbitIter::new(params, *p, max_steps, policy);
    let records: Vec<_> = it.by_ref().collect();
    Orbit {
        records,
        stop: it.stop_reason().unwrap_or(StopReason::MaxSteps),
    }
}

/// `n`-fold application of `Psi_alpha`.
pub fn psi_n(params: &Params, p: &Point3, n: usize) -> Point3 {
    (0..n).fold(*p, |acc, _| apply_psi(params, &acc))
}

/// The Fibonacci number `F_n` (`F_0 = 0`, `F_1 = 1`).
pub fn fib(n: u64) -> BigUint {
    let (mut a, mut b) = (BigUint::zero(), BigUint::one());
    for _ in 0..n {
        let c = &a + &b;
        a = b;
        b = c;
    }
    a
}

fn fib_pair(n: u64) -> (BigInt, BigInt, BigInt) {
    // (F_{n-1}, F_n, F_{n+1}) for n >= 1
    (
        BigInt::from(fib(n - 1)),
        BigInt::from(fib(n)),
        BigInt::from(fib(n + 1)),
    )
}

/// `Psi^n` on `{z2 = 0}`: `(F_{n+1} z0 + F_n z1, F_n z0 + F_{n-1} z1)`, exact.
pub fn restricted_psi_n(n: u64, z0: &BigRational, z1: &BigRational) -> (BigRational, BigRational) {
    assert!(n >= 1, "n must be >= 1");
    let (fm, f, fp) = fib_pair(n);
    let r = |x: BigInt| BigRational::from_integer(x);
    (
        r(fp) * z0 + r(f.clone()) * z1,
        r(f) * z0 + r(fm) * z1,
    )
}

/// `Psi^-n` on `{z2 = 0}`:
/// `(-1)^n (F_{n-1} z0 - F_n z1, -F_n z0 + F_{n+1} z1)`, exact.
pub fn restricted_psi_neg_n(
    n: u64,
    z0: &BigRational,
    z1: &BigRational,
) -> (BigRational, BigRational) {
    assert!(n >= 1, "n must be >= 1");
    let (fm, f, fp) = fib_pair(n);
    let r = |x: BigInt| BigRational::from_integer(x);
    let sign = if n.is_multiple_of(2) { r(BigInt::one()) } else { -r(BigInt::one()) };
    (
        &sign * (r(fm) * z0 - r(f.clone()) * z1),
        &sign * (-(r(f) * z0) + r(fp) * z1),
    )
}

/// Numeric path of [`restricted_psi_n`].
pub fn restricted_psi_n_numeric(n: u64, z0: Complex64, z1: Complex64) -> (Complex64, Complex64) {
    let f = |k: u64| num_traits::ToPrimitive::to_f64(&fib(k)).unwrap_or(f64::INFINITY);
    (
        z0 * f(n + 1) + z1 * f(n),
        z0 * f(n) + z1 * f(n - 1),
    )
}

/// A 2x2 matrix with scaled entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CocycleMatrix {
    pub m00: ScaledComplex,
    pub m01: ScaledComplex,
    pub m10: ScaledComplex,
    pub m11: ScaledComplex,
}

impl CocycleMatrix {
    pub fn identity() -> Self {
        Self {
            m00: ScaledComplex::ONE,
            m01: ScaledComplex::ZERO,
            m10: ScaledComplex::ZERO,
            m11: ScaledComplex::ONE,
        }
    }

    /// Matrix product `self * rhs`.
    pub fn mul(&self, rhs: &Self) -> Self {
        Self {
            m00: self.m00 * rhs.m00 + self.m01 * rhs.m10,
            m01: self.m00 * rhs.m01 + self.m01 * rhs.m11,
            m10: self.m10 * rhs.m00 + self.m11 * rhs.m10,
            m11: self.m10 * rhs.m01 + self.m11 * rhs.m11,
        }
    }

    /// `M . (v0, v1) := (v0, v1) M^T`.
    pub fn apply(&self, v0: ScaledComplex, v1: ScaledComplex) -> (ScaledComplex, ScaledComplex) {
        (self.m00 * v0 + self.m01 * v1, self.m10 * v0 + self.m11 * v1)
    }

    pub fn to_complex(&self) -> [[Complex64; 2]; 2] {
        [
            [self.m00.to_complex(), self.m01.to_complex()],
            [self.m10.to_complex(), self.m11.to_complex()],
        ]
    }
}

/// `A(z) = ((1 + z0^(q-1) z2^d, 1), (1, 0))`.
pub fn eval_cocycle(params: &Params, p: &Point3) -> CocycleMatrix {
    let corner = ScaledComplex::ONE
        + p.z0.sc_powi(params.q as u64 - 1) * p.z2.sc_powi(params.d as u64);
    CocycleMatrix {
        m00: corner,
        m01: ScaledComplex::ONE,
        m10: ScaledComplex::ONE,
        m11: ScaledComplex::ZERO,
    }
}

/// `A_n(p) = A(Psi^(n-1) p) ... A(Psi p) A(p)`; the identity for `n = 0`.
pub fn cocycle_product(params: &Params, p: &Point3, n: usize) -> CocycleMatrix {
    let mut acc = CocycleMatrix::identity();
    let mut x = *p;
    for _ in 0..n {
        acc = eval_cocycle(params, &x).mul(&acc);
        x = apply_psi(params, &x);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::PHI_CONJ;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }


    #[test]
    fn params_validation() {
        assert!(Params::real(1, 1, 0.5).is_err());
        assert!(Params::real(2, 0, 0.5).is_err());
        assert!(Params::real(2, 1, 0.0).is_err());
        assert!(Params::real(2, 1, 1.5).is_err());
        assert!(Params::new(2, 1, Complex64::new(f64::NAN, 0.0)).is_err());
        let p = Params::real(3, 2, 0.5).unwrap();
        assert_eq!(p.l(), (1, 1));
        let p = Params::real(3, 1, 0.5).unwrap();
        assert_eq!(p.l(), (1, 2));
        let p = Params::real(2, 1, 1.0).unwrap();
        assert!((p.critical_modulus() - 0.618_033_988_749_894_9).abs() < 1e-15);
        let p = Params::real(4, 6, 0.2).unwrap();
        assert_eq!(p.l(), (2, 1));
        assert!(p.critical_modulus() > 0.0 && p.critical_modulus() < 1.0);
    }

    #[test]
    fn psi_examples() {
        let params = Params::real(2, 1, 0.5).unwrap();
        let img = apply_psi(&params, &Point3::real(1.0, 1.0, 1.0));
        assert_eq!(img, Point3::real(3.0, 1.0, 0.5));
        let back = apply_psi_inv(&params, &Point3::real(3.0, 1.0, 0.5));
        assert_eq!(back, Point3::real(1.0, 1.0, 1.0));
        let axis = Point3::new(c(0.0), c(0.0), Complex64::new(0.3, -0.2));
        let img = apply_psi(&params, &axis);
        assert_eq!(img.z0, ScaledComplex::ZERO);
        assert_eq!(img.z1, ScaledComplex::ZERO);
        assert!(close(img.z2.to_complex(), Complex64::new(0.15, -0.1), 1e-15));
        assert_eq!(apply_psi(&params, &Point3::default()), Point3::default());
    }

    #[test]
    fn henon_and_phi_examples() {
        let params = Params::real(2, 1, 0.5).unwrap();
        let w = apply_henon(&params, &Point2::new(c(1.0), c(1.0)));
        assert_eq!(w, Point2::new(c(1.5), c(0.5)));
        assert_eq!(apply_henon(&params, &Point2::default()), Point2::default());
        let params = Params::real(3, 2, 0.5).unwrap();
        let img = apply_phi(&params, &Point3::real(1.0, 0.0, 2.0));
        assert_eq!(img, Point3::real(1.0, 0.5, 1.0));
        let w = Point2::new(Complex64::new(0.3, 0.1), c(-0.7));
        let back = apply_henon_inv(&params, &apply_henon(&params, &w));
        assert!(close(back.w0.to_complex(), w.w0.to_complex(), 1e-14));
        assert!(close(back.w1.to_complex(), w.w1.to_complex(), 1e-14));
    }

    #[test]
    fn theta_and_h_examples() {
        let params = Params::real(2, 1, 0.5).unwrap();
        let t = theta(&params, &Point3::real(2.0, 3.0, 4.0)).unwrap();
        assert_eq!(t, Point3::real(8.0, 12.0, 4.0));
        let w = h_map(&params, &Point3::real(2.0, 3.0, 4.0)).unwrap();
        assert_eq!(w, Point2::new(c(8.0), c(12.0)));
        let w = h_map(&params, &Point3::real(2.0, 3.0, 0.0)).unwrap();
        assert_eq!(w, Point2::default());
        let frac = Params::real(3, 1, 0.5).unwrap();
        assert!(matches!(
            h_map(&frac, &Point3::real(2.0, 3.0, 0.0)),
            Err(Error::BranchUndefined { .. })
        ));
        let w = h_map(&frac, &Point3::real(1.0, 1.0, 4.0)).unwrap();
        assert!(close(w.w0.to_complex(), c(2.0), 1e-15));
    }

    #[test]
    fn orbit_fibonacci_from_unit_vector() {
        let params = Params::real(2, 1, 0.7).unwrap();
        let o = orbit(&params, &Point3::real(1.0, 0.0, 0.0), 30, StopPolicy::default());
        assert_eq!(o.records.len(), 31);
        assert_eq!(o.stop, StopReason::MaxSteps);
        for r in &o.records {
            let want = num_traits::ToPrimitive::to_f64(&fib(r.step as u64 + 1)).unwrap();
            assert_eq!(r.point.z0.to_complex(), c(want));
        }
    }

    #[test]
    fn orbit_on_stable_line_contracts() {
        let params = Params::real(2, 1, 0.7).unwrap();
        let p = Point3::real(PHI_CONJ * 0.8, 0.8, 0.0);
        let o = orbit(&params, &p, 40, StopPolicy::default());
        let rate = PHI_CONJ.abs().ln();
        for w in o.records.windows(2).take(25) {
            let dl = w[1].log_mag.value() - w[0].log_mag.value();
            assert!((dl - rate).abs() < 1e-6, "step {} gives {dl}", w[0].step);
        }
    }

    #[test]
    fn orbit_zero_detection() {
        let params = Params::real(2, 1, 0.7).unwrap();
        let o = orbit(&params, &Point3::default(), 1000, StopPolicy::default());
        assert_eq!(o.stop, StopReason::Converged);
        assert_eq!(o.records.len(), 10);
        assert_eq!(o.records[0].log_mag, LogMagnitude::NegInfinity);
        assert!(o.records[0].ratio.is_none());
    }

    /// Exact rational orbit for real inputs, for cross-checking.
    fn exact_orbit(q: u32, d: u32, alpha: &BigRational, p: [BigRational; 3], n: usize) -> Vec<BigRational> {
        let [mut z0, mut z1, mut z2] = p;
        let mut out = vec![z0.clone()];
        for _ in 0..n {
            let nl = num_traits::pow(z0.clone(), q as usize) * num_traits::pow(z2.clone(), d as usize);
            let next = &z0 + &z1 + nl;
            z1 = z0;
            z0 = next;
            z2 = &z2 * alpha;
            out.push(z0.clone());
        }
        out
    }

    #[test]
    fn escaping_orbit_doubles_log_magnitude() {
        let params = Params::real(2, 1, 0.9).unwrap();
        let p = Point3::real(10.0, 5.0, 1.0);
        let o = orbit(&params, &p, 40, StopPolicy::no_escape());
        assert_eq!(o.records.len(), 41);
        for w in o.records.windows(2) {
            assert!(w[1].log_mag.value() > w[0].log_mag.value());
        }
        let n = o.records.len();
        let ratio = o.records[n - 1].log_mag.value() / o.records[n - 2].log_mag.value();
        assert!((ratio - 2.0).abs() < 1e-6, "ratio {ratio}");

        let r = |x: i64, y: i64| BigRational::new(x.into(), y.into());
        let alpha = BigRational::from_float(0.9).unwrap();
        let exact = exact_orbit(2, 1, &alpha, [r(10, 1), r(5, 1), r(1, 1)], 5);
        for (k, want) in exact.iter().enumerate() {
            let got = BigRational::from_float(o.records[k].point.z0.mantissa().re).unwrap();
            let e = o.records[k].point.z0.exponent();
            let got = got * num_traits::pow(r(2, 1), e as usize);
            let rel = num_traits::Signed::abs(&((got - want) / want));
            assert!(num_traits::ToPrimitive::to_f64(&rel).unwrap() < 1e-14, "step {k}");
        }
    }

    #[test]
    fn cocycle_examples() {
        let params = Params::real(2, 1, 0.5).unwrap();
        let a = eval_cocycle(&params, &Point3::real(3.0, -1.0, 0.0));
        assert_eq!(a.to_complex(), [[c(1.0), c(1.0)], [c(1.0), c(0.0)]]);
        let a = eval_cocycle(&params, &Point3::real(1.0, 1.0, 1.0));
        assert_eq!(a.to_complex(), [[c(2.0), c(1.0)], [c(1.0), c(0.0)]]);
        assert_eq!(cocycle_product(&params, &Point3::real(1.0, 1.0, 1.0), 0), CocycleMatrix::identity());
    }

    #[test]
    fn cocycle_product_reproduces_orbit() {
        let params = Params::new(3, 2, Complex64::new(0.6, 0.3)).unwrap();
        let p = Point3::new(Complex64::new(0.4, -0.2), Complex64::new(0.1, 0.5), Complex64::new(0.5, 0.2));
        let o = orbit(&params, &p, 30, StopPolicy::default());
        for n in 0..=30 {
            let a = cocycle_product(&params, &p, n);
            let (v0, v1) = a.apply(p.z0, p.z1);
            let rec = &o.records[n].point;
            for (got, want) in [(v0, rec.z0), (v1, rec.z1)] {
                let err = (got - want).log_abs().value() - want.log_abs().value();
                assert!(err <= -23.0, "n={n} log err={err}");
            }
        }
    }

    #[test]
    fn fibonacci_closed_forms() {
        assert_eq!(fib(5), BigUint::from(5u32));
        assert_eq!(fib(6), BigUint::from(8u32));
        assert_eq!(fib(0), BigUint::zero());
        let r = |x: i64| BigRational::from_integer(x.into());
        assert_eq!(restricted_psi_n(5, &r(1), &r(0)), (r(8), r(5)));
        let (a, b) = restricted_psi_neg_n(1, &r(7), &r(3));
        assert_eq!((a, b), (r(3), r(4)));
        let (a, b) = restricted_psi_n_numeric(5, c(1.0), c(0.0));
        assert_eq!((a, b), (c(8.0), c(5.0)));
    }

    fn arb_c(r: f64) -> impl Strategy<Value = Complex64> {
        (-r..r, -r..r).prop_map(|(a, b)| Complex64::new(a, b))
    }

    proptest! {
        #[test]
        fn inverse_identity(z0 in arb_c(10.0), z1 in arb_c(10.0), z2 in arb_c(10.0)) {
            let params = Params::new(2, 1, Complex64::new(0.5, 0.4)).unwrap();
            let p = Point3::new(z0, z1, z2);
            let back = apply_psi_inv(&params, &apply_psi(&params, &p));
            // the nonlinear term can be ~1e4 times the coordinates; measure
            // against the size of the intermediate image
            let scale = apply_psi(&params, &p).max_norm().abs().max(1.0);
            for (x, y) in back.to_complex().iter().zip(p.to_complex().iter()) {
                prop_assert!((x - y).norm() <= 1e-12 * scale);
            }
        }

        #[test]
        fn theta_conjugacy(z0 in arb_c(2.0), z1 in arb_c(2.0), z2 in arb_c(2.0), q in 2u32..4, k in 1u32..3) {
            prop_assume!(z2.norm() > 1e-3);
            let d = k * (q - 1);
            let params = Params::new(q, d, Complex64::new(0.6, -0.3)).unwrap();
            let p = Point3::new(z0, z1, z2);
            let lhs = theta(&params, &apply_psi(&params, &p)).unwrap();
            let rhs = apply_phi(&params, &theta(&params, &p).unwrap());
            let scale = lhs.max_norm().abs().max(1.0);
            for (x, y) in lhs.to_complex().iter().zip(rhs.to_complex().iter()) {
                prop_assert!((x - y).norm() <= 1e-10 * scale);
            }
        }

        #[test]
        fn fiber_structure_exact(z2 in arb_c(3.0), n in 1usize..60) {
            let params = Params::new(2, 1, Complex64::new(0.6, 0.3)).unwrap();
            let p = Point3::new(Complex64::new(0.1, 0.0), Complex64::new(0.0, 0.1), z2);
            let o = orbit(&params, &p, n, StopPolicy::no_escape());
            let mut want = ScaledComplex::from_complex(z2);
            for r in &o.records {
                prop_assert_eq!(r.point.z2, want);
                want = params.alpha_sc() * want;
            }
        }

        #[test]
        fn stable_line_eigen_action(cx in arb_c(5.0)) {
            let params = Params::real(3, 2, 0.8).unwrap();
            let p = Point3::new(cx * PHI_CONJ, cx, Complex64::new(0.0, 0.0));
            let img = apply_psi(&params, &p).to_complex();
            let want = [cx * PHI_CONJ * PHI_CONJ, cx * PHI_CONJ];
            for (x, y) in img.iter().zip(want.iter()) {
                prop_assert!((x - y).norm() <= 1e-12 * (1.0 + y.norm()));
            }
        }

        #[test]
        fn exact_path_equality(a in -1000i64..1000, b in -1000i64..1000, n in 1u64..=30) {
            let params = Params::real(2, 3, 0.4).unwrap();
            let o = orbit(&params, &Point3::real(a as f64, b as f64, 0.0), n as usize, StopPolicy::no_escape());
            let r = |x: i64| BigRational::from_integer(x.into());
            let (want, _) = restricted_psi_n(n, &r(a), &r(b));
            let got = o.records[n as usize].point.z0.to_complex();
            prop_assert_eq!(got.im, 0.0);
            prop_assert_eq!(BigRational::from_float(got.re).unwrap(), want);
        }
    }
}
