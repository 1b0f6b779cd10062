//! Parametrization of `W^s(0)` as the zero set of `g`: solve
//! `g_N(p0; p1, p2) = 0` for `p0` by Newton's method.
//!
//! Everything runs in double-double arithmetic. A point of `W^s` rounded to
//! double precision sits `~1e-16` off the manifold in the unstable direction,
//! and that offset grows like `phi^n`; after 60 steps it is `~3e-4`, so an
//! orbit check at `1e-6` needs the extra precision.

use num_complex::{Complex, Complex64};
use twofloat::TwoFloat;

use crate::dynsys::Params;
use crate::{Error, Result, PHI};

pub type DdComplex = Complex<TwoFloat>;

/// Orbit length used to validate a root.
pub const VALIDATION_STEPS: usize = 60;
const VALIDATION_TOL: f64 = 1e-6;
const MAX_NEWTON: usize = 100;
const NEWTON_TOL: f64 = 1e-12;
const STEP_FLOOR: f64 = 1e-30;

fn dd(z: Complex64) -> DdComplex {
    Complex::new(TwoFloat::from(z.re), TwoFloat::from(z.im))
}

fn dd_phi() -> TwoFloat {
    (TwoFloat::from(1.0) + TwoFloat::from(5.0).sqrt()) * 0.5
}

/// `a / b` by long division on the high word. The crate's own `Div`
/// computes its correction term in plain `f64` and only reaches double
/// precision.
fn dd_div(a: TwoFloat, b: TwoFloat) -> TwoFloat {
    let q1 = a.hi() / b.hi();
    let r = a - b * q1;
    let q2 = r.hi() / b.hi();
    let r = r - b * q2;
    let q3 = r.hi() / b.hi();
    TwoFloat::new_add(q1, q2) + TwoFloat::from(q3)
}

fn cdiv(a: DdComplex, b: DdComplex) -> DdComplex {
    let den = b.norm_sqr();
    let num = a * b.conj();
    Complex::new(dd_div(num.re, den), dd_div(num.im, den))
}

fn hi(z: DdComplex) -> Complex64 {
    Complex64::new(z.re.hi(), z.im.hi())
}

fn lo(z: DdComplex) -> Complex64 {
    Complex64::new(z.re.lo(), z.im.lo())
}

fn mag(z: DdComplex) -> f64 {
    z.re.hi().hypot(z.im.hi())
}

fn finite(z: DdComplex) -> bool {
    z.re.is_valid() && z.im.is_valid()
}

fn powi(z: DdComplex, k: u32) -> DdComplex {
    num_traits::pow(z, k as usize)
}

/// `n` steps of `Psi_alpha` in double-double.
pub fn psi_n_dd(params: &Params, z: [DdComplex; 3], n: usize) -> [DdComplex; 3] {
    let alpha = dd(params.alpha());
    let (q, d) = (params.q(), params.d());
    let [mut z0, mut z1, mut z2] = z;
    for _ in 0..n {
        let next = z0 + z1 + powi(z0, q) * powi(z2, d);
        z1 = z0;
        z0 = next;
        z2 = z2 * alpha;
    }
    [z0, z1, z2]
}

/// Smallest `N` with `|alpha|^(N d) phi^-N < 1e-30`.
pub fn default_truncation(params: &Params) -> usize {
    let rate = PHI.ln() - params.d() as f64 * params.alpha_modulus().ln();
    (30.0 * 10f64.ln() / rate).floor() as usize + 1
}

/// `(g_N, dg_N / dz0)` at `z0` with forward-mode derivative
/// `D^(j+1) = D^(j) + D^(j-1) + q (P^(j))^(q-1) D^(j) (alpha^j p2)^d`.
fn g_and_slope(params: &Params, z0: DdComplex, p1: DdComplex, p2: DdComplex, n: usize) -> (DdComplex, DdComplex) {
    let phi = dd_phi();
    let phi_inv = dd_div(TwoFloat::from(1.0), phi);
    let alpha = dd(params.alpha());
    let (q, d) = (params.q(), params.d());
    let qf = TwoFloat::from(q as f64);
    let zero = Complex::new(TwoFloat::from(0.0), TwoFloat::from(0.0));
    let one = Complex::new(TwoFloat::from(1.0), TwoFloat::from(0.0));

    let (mut p, mut p_prev) = (z0, p1);
    let (mut dp, mut dp_prev) = (one, zero);
    let mut s = p2;
    let mut w = TwoFloat::from(1.0);
    let mut g = z0.scale(phi) + p1;
    let mut dg = Complex::new(phi, TwoFloat::from(0.0));
    for _ in 0..=n {
        let sd = powi(s, d);
        let pq1 = powi(p, q - 1);
        let nonlinear = pq1 * p * sd;
        let dnonlinear = (pq1 * dp * sd).scale(qf);
        g = g + nonlinear.scale(w);
        dg = dg + dnonlinear.scale(w);
        let next = p + p_prev + nonlinear;
        let dnext = dp + dp_prev + dnonlinear;
        p_prev = p;
        p = next;
        dp_prev = dp;
        dp = dnext;
        s = s * alpha;
        w = w * phi_inv;
    }
    (g, dg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StableRoot {
    /// High word of the root.
    pub p0: Complex64,
    /// Full double-double root; `p0` plus a `~1e-16` relative correction.
    pub p0_dd: DdComplex,
    pub truncation: usize,
    pub newton_steps: usize,
    /// `|g_N|` at the root.
    pub residual: f64,
    /// `||Psi^60(p0, p1, p2)||` along a double-double orbit.
    pub validation_norm: f64,
}

impl StableRoot {
    /// Low word of the root.
    pub fn p0_lo(&self) -> Complex64 {
        lo(self.p0_dd)
    }
}

/// Root in `p0` of `g_N(., p1, p2)` by Newton's method from `-p1 / phi`,
/// validated by `||Psi^60|| < 1e-6 max(1, |p1|)` on a double-double orbit.
///
/// Requires `0 < |alpha| < ` critical modulus, where `W^s(0)` is the zero set
/// of `g`.
pub fn stable_root(
    params: &Params,
    p1: Complex64,
    p2: Complex64,
    truncation: Option<usize>,
) -> Result<StableRoot> {
    if params.alpha_modulus() >= params.critical_modulus() {
        return Err(Error::Domain(format!(
            "stable_root needs |alpha| < {} (got {})",
            params.critical_modulus(),
            params.alpha_modulus()
        )));
    }
    if !(p1.is_finite() && p2.is_finite()) {
        return Err(Error::Domain("p1 and p2 must be finite".into()));
    }
    let n = truncation.unwrap_or_else(|| default_truncation(params));
    let (p1d, p2d) = (dd(p1), dd(p2));
    let phi = dd_phi();
    let scale = p1.norm().max(1.0);

    let mut steps = 0usize;
    let mut z = Complex::new(-dd_div(p1d.re, phi), -dd_div(p1d.im, phi));
    let mut residual;
    if p2 == Complex64::new(0.0, 0.0) {
        residual = mag(z.scale(phi) + p1d);
    } else {
        let (mut g, mut dg) = g_and_slope(params, z, p1d, p2d, n);
        residual = mag(g);
        let mut converged = residual == 0.0;
        while !converged && steps < MAX_NEWTON {
            steps += 1;
            let delta = cdiv(g, dg);
            if !finite(delta) {
                break;
            }
            // backtrack while the step leaves the finite range or worsens |g|
            let mut t = TwoFloat::from(1.0);
            let (mut z_new, mut g_new, mut dg_new);
            loop {
                z_new = z - delta.scale(t);
                (g_new, dg_new) = g_and_slope(params, z_new, p1d, p2d, n);
                if finite(g_new) && finite(dg_new) && (mag(g_new) < residual || residual < 1e-28 * scale) {
                    break;
                }
                t = t * 0.5;
                if t.hi() < 1e-9 {
                    break;
                }
            }
            if !(finite(g_new) && finite(dg_new)) {
                break;
            }
            let step = mag(delta.scale(t));
            z = z_new;
            g = g_new;
            dg = dg_new;
            residual = mag(g);
            converged = step <= STEP_FLOOR * mag(z).max(1.0) || residual == 0.0;
            if !converged && step <= NEWTON_TOL * mag(z).max(1.0) && residual <= 1e-28 * scale {
                converged = true;
            }
        }
        if !converged {
            return Err(Error::NoConvergence(format!(
                "Newton did not converge in {MAX_NEWTON} steps (|g_N| = {residual:e})"
            )));
        }
    }

    let end = psi_n_dd(params, [z, p1d, p2d], VALIDATION_STEPS);
    let validation_norm = end.iter().map(|c| mag(*c)).fold(0.0, f64::max);
    if !(validation_norm < VALIDATION_TOL * scale) {
        return Err(Error::NoConvergence(format!(
            "validation orbit did not contract: ||Psi^{VALIDATION_STEPS}|| = {validation_norm:e}"
        )));
    }
    Ok(StableRoot {
        p0: hi(z),
        p0_dd: z,
        truncation: n,
        newton_steps: steps,
        residual,
        validation_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{classify, Verdict};
    use crate::dynsys::{psi_n, Point3};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn exact(x: TwoFloat) -> num_rational::BigRational {
        num_rational::BigRational::from_float(x.hi()).unwrap() + num_rational::BigRational::from_float(x.lo()).unwrap()
    }

    #[test]
    fn division_is_double_double() {
        use num_traits::{Signed, ToPrimitive};
        for (a, b) in [(0.5, PHI), (1.0, 3.0), (-7.25, 1e-3), (1e200, 3.7e-100)] {
            let (a, b) = (TwoFloat::new_add(a, a * 1e-17), TwoFloat::from(b));
            let qt = dd_div(a, b);
            let err = ((exact(qt) * exact(b) - exact(a)) / exact(a)).abs();
            assert!(err.to_f64().unwrap() < 1e-31, "{err}");
        }
    }

    #[test]
    fn dd_phi_is_accurate() {
        let phi = dd_phi();
        let r = phi * phi - phi - TwoFloat::from(1.0);
        assert!(r.hi().abs() < 1e-30);
        assert_eq!(phi.hi(), PHI);
    }

    #[test]
    fn truncation_default() {
        let params = Params::real(2, 1, 0.3).unwrap();
        let n = default_truncation(&params);
        let f = |n: usize| 0.3f64.powi(n as i32) * PHI.powi(-(n as i32));
        assert!(f(n) < 1e-30 && f(n - 1) >= 1e-30);
    }

    #[test]
    fn hypersurface_root_is_exact() {
        let params = Params::real(2, 1, 0.3).unwrap();
        let r = stable_root(&params, c(0.5, 0.2), c(0.0, 0.0), None).unwrap();
        // the high word is the correctly rounded -p1 / phi
        assert!((r.p0 - c(-0.5 / PHI, -0.2 / PHI)).norm() <= 1e-16);
        let g = r.p0_dd.scale(dd_phi()) + dd(c(0.5, 0.2));
        assert!(mag(g) < 1e-31);
        assert_eq!(r.newton_steps, 0);
    }

    #[test]
    fn axis_root_is_zero() {
        let params = Params::real(2, 1, 0.3).unwrap();
        let r = stable_root(&params, c(0.0, 0.0), c(0.3, 0.0), None).unwrap();
        assert_eq!(r.p0, c(0.0, 0.0));
    }

    #[test]
    fn example_root() {
        let params = Params::real(2, 1, 0.3).unwrap();
        let r = stable_root(&params, c(0.5, 0.0), c(0.2, 0.0), None).unwrap();
        // the nonlinear correction moves the root ~0.014 below the linear seed -0.309
        assert!((r.p0.re + 0.309).abs() < 0.02, "{:?}", r.p0);
        assert!(r.validation_norm < 1e-6);
        // double orbit of the perturbed root escapes
        let pert = Point3::new(r.p0 + 1e-3, c(0.5, 0.0), c(0.2, 0.0));
        assert!(psi_n(&params, &pert, 200).fiber_norm().abs() > 1e6);
        assert_ne!(classify(&params, &pert, 2000).verdict, Verdict::ConvergesToFixedPoint);
    }

    #[test]
    fn domain_error_above_critical() {
        let params = Params::real(2, 1, 0.7).unwrap();
        assert!(matches!(stable_root(&params, c(0.5, 0.0), c(0.2, 0.0), None), Err(Error::Domain(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        /// Step doubling along a ray in `p2`: halving the step halves the
        /// increments, so consecutive roots never jump between branches.
        #[test]
        fn continuous_in_p2(theta in 0.0f64..std::f64::consts::TAU, p1 in (-1.0f64..1.0, -1.0f64..1.0)) {
            let params = Params::new(2, 1, c(0.2, 0.2)).unwrap();
            let p1 = c(p1.0, p1.1);
            let root = |t: f64| stable_root(&params, p1, Complex64::from_polar(0.5 * t, theta), None).unwrap().p0;
            let h = 0.1;
            let mut t = 0.0;
            while t + h <= 1.0 + 1e-12 {
                let coarse = (root(t + h) - root(t)).norm();
                let fine = (root(t + h / 2.0) - root(t)).norm();
                prop_assert!(fine <= 0.75 * coarse + 1e-12, "t={} coarse={} fine={}", t, coarse, fine);
                t += h;
            }
        }
    }
}
