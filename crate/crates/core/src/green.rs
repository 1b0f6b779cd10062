//! Green functions `lim log+ ||f^n(p)|| / q^n` for `Psi_alpha`, its inverse
//! (when `|alpha| = 1`) and the Hénon factor `phi_alpha`, with two-sided
//! a-posteriori error bounds.
//!
//! Norms are max-norms over all coordinates.
//!
//! Upper side. For `Psi_alpha` every coordinate of `Psi(z)` is bounded by
//! `C max(1, ||z||)^q` with `C = 3 max(1, |p2|^d)` along the whole orbit, so
//! `log+ ||Psi^(k+1)|| <= q log+ ||Psi^k|| + ln C` and summing the tail gives
//! `G <= v_n + ln C / (q^n (q - 1))`. The factor obeys
//! `||phi(w)|| <= |alpha|^l * 3 max(1, ||w||)^q`, so the same argument runs
//! with `C = 3 max(1, |alpha|^l)`.
//!
//! Lower side. The upper estimate alone says nothing about cancellation, so a
//! step is *certified* once the leading fiber coordinate `X = |P^(n)|`
//! dominates the other two coordinates, `X >= 1`, and
//! `Y = X^(q-1) |alpha^n p2|^d` satisfies
//! `ln Y >= ln 3 + d |ln |alpha|| / (q - 1)`. Then `X' >= X Y / 3 >= X`,
//! `Y' >= Y`, so the condition persists, and
//! `ln X_(k+1) >= q ln X_k + d ln |alpha^k p2| - ln 3` for all later `k`.
//! Summing yields `G >= v_n - L_n` with
//! `L_n = q^-n [d|ln alpha| (n/(q-1) + 1/(q-1)^2) + (d max(0, -ln|p2|) + ln 3)/(q-1)]`.
//!
//! The reported `error_bound` is `max(U_n, L_n)`; it is a deterministic,
//! non-increasing function of `n`. It bounds `|G - v_n|` two-sidedly only when
//! `lower_certified` is set; otherwise just `G <= v_n + error_bound` is proven.

use serde::Serialize;

use crate::dynsys::{
    apply_henon, apply_psi, apply_psi_inv, h_map, Params, Point2, Point3, StopPolicy,
    LOG_MAGNITUDE_CAP,
};
use crate::numcore::{LogMagnitude, ScaledComplex};
use crate::{Error, Result};

/// Iteration ceiling independent of the target.
pub const MAX_GREEN_STEPS: usize = 100_000;

const LN3: f64 = 1.098_612_288_668_109_8;

/// Why an estimate stopped where it did.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GreenStop {
    /// `error_bound <= target_error`.
    TargetReached,
    /// Escape certified with `value > error_bound` (classifier mode only).
    EscapeCertified,
    /// Orbit detected as converging to the fixed point; value forced to 0.
    /// Heuristic.
    BoundedOrbit,
    /// Starting point on `{z2 = 0}` where the Green function vanishes.
    InvariantHypersurface,
    /// Log-magnitude ceiling reached before the target.
    MagnitudeCap,
    /// [`MAX_GREEN_STEPS`] reached before the target.
    StepLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GreenEstimate {
    pub value: f64,
    pub error_bound: f64,
    pub n_used: usize,
    /// Certified lower side and `value - error_bound > 0`.
    pub escaped: bool,
    /// The lower certificate holds at `n_used`.
    pub lower_certified: bool,
    pub stop: GreenStop,
}

/// `UntilEscape` returns at the first certified escape.
#[derive(Clone, Copy)]
enum Mode {
    Full,
    UntilEscape,
}

struct Snapshot {
    log_norm: LogMagnitude,
    fiber_log: LogMagnitude,
    certified: bool,
}

fn drive<S>(
    q: u32,
    start: S,
    advance: impl Fn(&S) -> S,
    snap: impl Fn(&S, usize) -> Snapshot,
    bound: impl Fn(usize) -> f64,
    target_error: f64,
    mode: Mode,
) -> GreenEstimate {
    let policy = StopPolicy::default();
    let ln_eps = policy.zero_eps.ln();
    let mut state = start;
    let mut zero_run = 0usize;
    let mut n = 0usize;
    loop {
        let s = snap(&state, n);
        let qn = (q as f64).powi(n as i32);
        let value = match s.log_norm {
            LogMagnitude::Finite(v) if v > 0.0 => v / qn,
            _ => 0.0,
        };
        let err = bound(n);
        if s.fiber_log.value() < ln_eps {
            zero_run += 1;
        } else {
            zero_run = 0;
        }
        let finish = |value: f64, stop: GreenStop| GreenEstimate {
            value,
            error_bound: err,
            n_used: n,
            escaped: s.certified && value - err > 0.0,
            lower_certified: s.certified,
            stop,
        };
        if zero_run >= policy.zero_window {
            return finish(0.0, GreenStop::BoundedOrbit);
        }
        if err <= target_error {
            return finish(value, GreenStop::TargetReached);
        }
        if matches!(mode, Mode::UntilEscape) && s.certified && value > err {
            return finish(value, GreenStop::EscapeCertified);
        }
        if s.log_norm.value() > LOG_MAGNITUDE_CAP {
            return finish(value, GreenStop::MagnitudeCap);
        }
        if n >= MAX_GREEN_STEPS {
            return finish(value, GreenStop::StepLimit);
        }
        state = advance(&state);
        n += 1;
    }
}

fn smallest_n(bound: impl Fn(usize) -> f64, target: f64) -> usize {
    (0..=MAX_GREEN_STEPS)
        .find(|&n| bound(n) <= target)
        .unwrap_or(MAX_GREEN_STEPS)
}

/// `max(U_n, L_n)` for `Psi_alpha^{+-1}`; `drift` is `|ln |alpha||`.
fn psi_bound(params: &Params, p2: ScaledComplex, drift: f64) -> impl Fn(usize) -> f64 {
    let q = params.q() as f64;
    let d = params.d() as f64;
    let ln_p2 = p2.log_abs().value();
    let ln_c = LN3 + (d * ln_p2).max(0.0);
    let small_base = d * (-ln_p2).max(0.0);
    // on {z2 = 0} the value is exactly 0 and only the upper side matters
    let on_hypersurface = p2.is_zero();
    move |n: usize| {
        let qn = q.powi(n as i32);
        let upper = ln_c / (qn * (q - 1.0));
        if on_hypersurface {
            return upper;
        }
        let lower = (d * drift * (n as f64 / (q - 1.0) + 1.0 / ((q - 1.0) * (q - 1.0)))
            + (small_base + LN3) / (q - 1.0))
            / qn;
        upper.max(lower)
    }
}

/// Certificate on a fiber pair `(lead, other)` over base `s` (see module docs).
fn fiber_certified(
    params: &Params,
    lead: ScaledComplex,
    other: ScaledComplex,
    base: ScaledComplex,
    drift: f64,
) -> bool {
    if base.is_zero() || lead.cmp_abs(&other).is_lt() || lead.cmp_abs(&base).is_lt() {
        return false;
    }
    let lx = lead.log_abs().value();
    if lx < 0.0 {
        return false;
    }
    let q1 = params.q() as f64 - 1.0;
    let d = params.d() as f64;
    q1 * lx + d * base.log_abs().value() >= LN3 + d * drift / q1
}

fn validate_target(target_error: f64) -> f64 {
    if target_error.is_finite() && target_error > 0.0 {
        target_error
    } else {
        f64::MIN_POSITIVE
    }
}

fn green_psi_forward(params: &Params, p: &Point3, target_error: f64, mode: Mode) -> GreenEstimate {
    let target_error = validate_target(target_error);
    let drift = params.alpha_modulus().ln().abs();
    let bound = psi_bound(params, p.z2, drift);
    if p.z2.is_zero() {
        let n = smallest_n(&bound, target_error);
        return GreenEstimate {
            value: 0.0,
            error_bound: bound(n),
            n_used: n,
            escaped: false,
            lower_certified: false,
            stop: GreenStop::InvariantHypersurface,
        };
    }
    drive(
        params.q(),
        *p,
        |x| apply_psi(params, x),
        |x, _| Snapshot {
            log_norm: x.max_norm().log_abs(),
            fiber_log: x.fiber_norm().log_abs(),
            certified: fiber_certified(params, x.z0, x.z1, x.z2, drift),
        },
        bound,
        target_error,
        mode,
    )
}

/// `G+` of `Psi_alpha` at `p`, iterated until `error_bound <= target_error`.
pub fn green_plus(params: &Params, p: &Point3, target_error: f64) -> GreenEstimate {
    green_psi_forward(params, p, target_error, Mode::Full)
}

/// Like [`green_plus`] but returns as soon as escape is certified.
pub(crate) fn green_plus_until_escape(
    params: &Params,
    p: &Point3,
    target_error: f64,
) -> GreenEstimate {
    green_psi_forward(params, p, target_error, Mode::UntilEscape)
}

/// `G+` of the Hénon factor `phi_alpha` at `w`.
pub fn green_plus_henon(params: &Params, w: &Point2, target_error: f64) -> GreenEstimate {
    let target_error = validate_target(target_error);
    let q = params.q() as f64;
    let l = params.l_f64();
    let drift = params.alpha_modulus().ln().abs();
    let ln_c = LN3 + (l * params.alpha_modulus().ln()).max(0.0);
    let lower_c = LN3 + l * drift;
    let bound = move |n: usize| {
        let denom = q.powi(n as i32) * (q - 1.0);
        (ln_c / denom).max(lower_c / denom)
    };
    drive(
        params.q(),
        *w,
        |x| apply_henon(params, x),
        |x, _| {
            let lead = x.w0;
            let certified = !lead.cmp_abs(&x.w1).is_lt()
                && (q - 1.0) * lead.log_abs().value() >= lower_c;
            let norm = x.max_norm().log_abs();
            Snapshot {
                log_norm: norm,
                fiber_log: norm,
                certified,
            }
        },
        bound,
        target_error,
        Mode::Full,
    )
}

/// `G-` of `Psi_alpha`, i.e. `G+` of the inverse; requires `|alpha| = 1`.
pub fn green_minus(params: &Params, p: &Point3, target_error: f64) -> Result<GreenEstimate> {
    if (params.alpha_modulus() - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!(
            "G- is defined for |alpha| = 1, got {}",
            params.alpha_modulus()
        )));
    }
    let target_error = validate_target(target_error);
    let bound = psi_bound(params, p.z2, 0.0);
    if p.z2.is_zero() {
        let n = smallest_n(&bound, target_error);
        return Ok(GreenEstimate {
            value: 0.0,
            error_bound: bound(n),
            n_used: n,
            escaped: false,
            lower_certified: false,
            stop: GreenStop::InvariantHypersurface,
        });
    }
    // after a backward step the freshly computed coordinate is z1
    Ok(drive(
        params.q(),
        *p,
        |x| apply_psi_inv(params, x),
        |x, _| Snapshot {
            log_norm: x.max_norm().log_abs(),
            fiber_log: x.fiber_norm().log_abs(),
            certified: fiber_certified(params, x.z1, x.z0, x.z2, 0.0),
        },
        bound,
        target_error,
        Mode::Full,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalEquationReport {
    /// Estimate of `G(Psi p)`.
    pub image: GreenEstimate,
    /// Estimate of `G(p)`.
    pub base: GreenEstimate,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// `G+ o Psi_alpha = q G+`, passing iff
/// `|G(Psi p) - q G(p)| <= q (bound(Psi p) + bound(p))`.
pub fn check_functional_equation(
    params: &Params,
    p: &Point3,
    target_error: f64,
) -> FunctionalEquationReport {
    let image = green_plus(params, &apply_psi(params, p), target_error);
    let base = green_plus(params, p, target_error);
    let q = params.q() as f64;
    let residual = (image.value - q * base.value).abs();
    let tolerance = q * (image.error_bound + base.error_bound);
    FunctionalEquationReport {
        image,
        base,
        residual,
        tolerance,
        pass: residual <= tolerance,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemiconjugacyReport {
    pub psi: GreenEstimate,
    pub henon: GreenEstimate,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// `G+_Psi = G+_phi o h`, passing iff the difference is within the summed bounds.
pub fn check_semiconjugacy(
    params: &Params,
    p: &Point3,
    target_error: f64,
) -> Result<SemiconjugacyReport> {
    let w = h_map(params, p)?;
    let psi = green_plus(params, p, target_error);
    let henon = green_plus_henon(params, &w, target_error);
    let residual = (psi.value - henon.value).abs();
    let tolerance = psi.error_bound + henon.error_bound;
    Ok(SemiconjugacyReport {
        psi,
        henon,
        residual,
        tolerance,
        pass: residual <= tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{PHI, PHI_CONJ};
    use num_complex::Complex64;
    use proptest::prelude::*;

    /// Log-domain recurrence for real positive orbits, independent of
    /// `ScaledComplex`: returns `ln P^(n)` for `n = 0..=steps`.
    fn log_orbit_oracle(q: f64, d: f64, alpha: f64, p: [f64; 3], steps: usize) -> Vec<f64> {
        let (mut a, mut b) = (p[0].ln(), p[1].ln());
        let mut ls = p[2].ln();
        let mut out = vec![a];
        for _ in 0..steps {
            // P' = P (1 + P_prev / P + P^(q-1) s^d)
            let big = (q - 1.0) * a + d * ls;
            let rest = 1.0 + (b - a).exp();
            let inc = if big > 700.0 {
                big + (rest * (-big).exp()).ln_1p()
            } else {
                (big.exp() + rest).ln()
            };
            b = a;
            a += inc;
            ls += alpha.ln();
            out.push(a);
        }
        out
    }

    #[test]
    fn oracle_value_frozen() {
        let logs = log_orbit_oracle(2.0, 1.0, 0.9, [10.0, 5.0, 1.0], 40);
        let quot: Vec<f64> = logs.iter().enumerate().map(|(n, l)| l / 2f64.powi(n as i32)).collect();
        // Cauchy tail of the quotient sequence
        assert!((quot[40] - quot[39]).abs() < 1e-10);
        assert!((quot[40] - 2.269_730_310_072_717_7).abs() < 1e-12, "{}", quot[40]);
    }

    #[test]
    fn escaping_point_matches_oracle() {
        let params = Params::real(2, 1, 0.9).unwrap();
        let g = green_plus(&params, &Point3::real(10.0, 5.0, 1.0), 1e-10);
        assert!(g.escaped);
        assert!(g.lower_certified);
        assert_eq!(g.stop, GreenStop::TargetReached);
        assert!(g.error_bound <= 1e-10);
        assert!((g.value - 2.269_730_310_072_717_7).abs() <= g.error_bound);
    }

    #[test]
    fn vanishing_cases() {
        let params = Params::real(2, 1, 0.9).unwrap();
        let g = green_plus(&params, &Point3::real(3.0, -7.0, 0.0), 1e-8);
        assert_eq!(g.value, 0.0);
        assert!(g.error_bound > 0.0 && g.error_bound <= 1e-8);
        assert!(!g.escaped);
        let g = green_plus(&params, &Point3::default(), 1e-8);
        assert_eq!(g.value, 0.0);
        assert!(!g.escaped);
        let g = green_plus_henon(&params, &Point2::default(), 1e-8);
        assert_eq!(g.value, 0.0);
    }

    #[test]
    fn henon_examples() {
        let params = Params::real(2, 1, 0.3).unwrap();
        let g = green_plus_henon(&params, &Point2::new(Complex64::new(0.1, 0.0), Complex64::new(0.1, 0.0)), 1e-8);
        assert_eq!(g.value, 0.0);
        assert!(!g.escaped);
        let mut w = Point2::new(Complex64::new(0.1, 0.0), Complex64::new(0.1, 0.0));
        for _ in 0..200 {
            w = apply_henon(&params, &w);
        }
        assert!(w.max_norm().abs() < 1e-50);
        let params = Params::real(2, 1, 0.9).unwrap();
        let g = green_plus_henon(&params, &Point2::new(Complex64::new(10.0, 0.0), Complex64::new(1.0, 0.0)), 1e-8);
        assert!(g.value > 0.0 && g.escaped);
    }

    #[test]
    fn minus_examples() {
        let params = Params::new(2, 1, Complex64::from_polar(1.0, 0.7)).unwrap();
        let g = green_minus(&params, &Point3::real(PHI * 0.4, 0.4, 0.0), 1e-8).unwrap();
        assert_eq!(g.value, 0.0);
        let g = green_minus(&params, &Point3::default(), 1e-8).unwrap();
        assert_eq!(g.value, 0.0);
        let g = green_minus(&params, &Point3::real(1.0, 10.0, 1.0), 1e-8).unwrap();
        assert!(g.escaped);
        let half = Params::real(2, 1, 0.5).unwrap();
        assert!(matches!(green_minus(&half, &Point3::default(), 1e-8), Err(Error::Domain(_))));
    }

    #[test]
    fn stable_line_is_not_escaping() {
        let params = Params::real(2, 1, 0.9).unwrap();
        let g = green_plus(&params, &Point3::real(PHI_CONJ * 0.5, 0.5, 0.0), 1e-8);
        assert_eq!(g.value, 0.0);
    }

    #[test]
    fn equation_checks_on_examples() {
        let params = Params::real(2, 1, 0.9).unwrap();
        for p in [Point3::real(10.0, 5.0, 1.0), Point3::default(), Point3::real(2.0, 1.0, 0.0)] {
            let r = check_functional_equation(&params, &p, 1e-8);
            assert!(r.pass, "{r:?}");
            assert!(r.residual <= r.image.error_bound + r.base.error_bound);
            let s = check_semiconjugacy(&params, &p, 1e-8).unwrap();
            assert!(s.pass, "{s:?}");
        }
        let frac = Params::real(3, 1, 0.9).unwrap();
        assert!(check_semiconjugacy(&frac, &Point3::real(1.0, 1.0, 0.0), 1e-8).is_err());
    }

    fn arb_point() -> impl Strategy<Value = Point3> {
        prop::array::uniform6(-4.0f64..4.0).prop_map(|v| {
            Point3::new(Complex64::new(v[0], v[1]), Complex64::new(v[2], v[3]), Complex64::new(v[4], v[5]))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn bound_monotone_and_value_nonnegative(p in arb_point(), k in 1i32..8) {
            let params = Params::new(2, 1, Complex64::new(0.6, 0.5)).unwrap();
            let coarse = green_plus(&params, &p, 10f64.powi(-k));
            let fine = green_plus(&params, &p, 10f64.powi(-k - 2));
            prop_assert!(coarse.value >= 0.0 && fine.value >= 0.0);
            if coarse.n_used <= fine.n_used {
                prop_assert!(fine.error_bound <= coarse.error_bound);
            }
            let bound = psi_bound(&params, p.z2, params.alpha_modulus().ln().abs());
            for n in 0..60 {
                prop_assert!(bound(n + 1) <= bound(n));
            }
        }

        #[test]
        fn doubling_target_never_increases_steps(p in arb_point(), t in 1e-12f64..1e-2) {
            let params = Params::real(3, 2, 0.8).unwrap();
            let a = green_plus(&params, &p, t);
            let b = green_plus(&params, &p, 2.0 * t);
            prop_assert!(b.n_used <= a.n_used);
        }

        #[test]
        fn escape_implies_margin(p in arb_point()) {
            let params = Params::real(2, 2, 0.7).unwrap();
            let g = green_plus(&params, &p, 1e-9);
            if g.escaped {
                prop_assert!(g.value - g.error_bound > 0.0);
            }
        }
    }
}
