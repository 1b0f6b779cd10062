//! Trichotomy classifier: convergence to the fixed point, Fibonacci-speed
//! escape or maximal (degree-`q`) escape.

use num_complex::Complex64;

use super::series::linear_scale;
use crate::dynsys::{orbit, OrbitRecord, Params, Point3, StopPolicy, StopReason};
use crate::green::{green_plus_until_escape, GreenEstimate};
use crate::numcore::ScaledComplex;
use crate::PHI;

pub const DEFAULT_BUDGET: usize = 2000;

/// Consecutive steps over which the Fibonacci conditions must hold.
pub const FIB_WINDOW: usize = 20;
pub const RATIO_TOL: f64 = 1e-8;
pub const CAUCHY_TOL: f64 = 1e-10;
/// Ceiling on `|P^(n)|^(q-1) |alpha^n p2|^d`, the size of the nonlinear
/// correction in the cocycle at step `n`.
pub const DEVIATION_TOL: f64 = 1e-8;
/// Agreement required between limits at `n*` and `2 n*`.
pub const CONFIRM_TOL: f64 = 1e-8;
/// `|g| / (|phi p0| + |p1|)` below which a point on `{z2 = 0}` is taken to
/// lie on the stable line.
pub const STABLE_LINE_TOL: f64 = 1e-12;

const GREEN_TARGET: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Verdict {
    ConvergesToFixedPoint,
    FibonacciEscape,
    MaximalEscape,
    Undetermined,
}

impl Verdict {
    pub const ALL: [Verdict; 4] = [
        Verdict::ConvergesToFixedPoint,
        Verdict::FibonacciEscape,
        Verdict::MaximalEscape,
        Verdict::Undetermined,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::ConvergesToFixedPoint => "ConvergesToFixedPoint",
            Verdict::FibonacciEscape => "FibonacciEscape",
            Verdict::MaximalEscape => "MaximalEscape",
            Verdict::Undetermined => "Undetermined",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evidence {
    /// Step at which the verdict was reached.
    pub n_decision: usize,
    pub fibonacci_limit: Option<Complex64>,
    pub green: Option<GreenEstimate>,
    pub g_value: Option<Complex64>,
    pub budget: usize,
    pub orbit_stop: StopReason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub verdict: Verdict,
    pub evidence: Evidence,
}

/// On `{z2 = 0}` the dynamics is linear, the orbit tends to 0 exactly when
/// `g = phi p0 + p1` vanishes and `P^(n) phi^-n -> g / sqrt 5` otherwise.
fn on_stable_line(p: &Point3) -> bool {
    if !p.z2.is_zero() {
        return false;
    }
    let g = ScaledComplex::from_f64(PHI) * p.z0 + p.z1;
    let scale = linear_scale(p);
    scale == 0.0 || g.abs() <= STABLE_LINE_TOL * scale
}

struct FibStep {
    ok: bool,
    limit: ScaledComplex,
}

/// Per-record Fibonacci conditions; index `k` covers record `k`.
fn fibonacci_steps(params: &Params, records: &[OrbitRecord]) -> Vec<FibStep> {
    let q = params.q() as u64;
    let d = params.d() as u64;
    let phi_inv = ScaledComplex::from_f64(1.0 / PHI);
    let phi = Complex64::new(PHI, 0.0);
    let ln_dev_tol = DEVIATION_TOL.ln();
    let mut out = Vec::with_capacity(records.len());
    let mut prev_limit: Option<ScaledComplex> = None;
    let mut prev_dev = f64::INFINITY;
    for r in records {
        let limit = r.point.z0 * phi_inv.sc_powi(r.step as u64);
        let ratio_ok = r
            .ratio
            .is_some_and(|x| x.exponent() < 4 && (x.to_complex() - phi).norm() <= RATIO_TOL);
        let cauchy_ok = prev_limit.is_some_and(|prev| {
            !limit.is_zero() && (limit - prev).abs_rel_to(&limit) <= CAUCHY_TOL
        });
        let dev = (r.point.z0.sc_powi(q - 1) * r.point.z2.sc_powi(d))
            .log_abs()
            .value();
        let dev_ok = dev <= ln_dev_tol && dev <= prev_dev + 1e-12;
        out.push(FibStep {
            ok: ratio_ok && cauchy_ok && dev_ok,
            limit,
        });
        prev_limit = Some(limit);
        prev_dev = dev;
    }
    out
}

/// `(n*, limit at 2 n*)` when the conditions hold on windows ending at `n*`
/// and at `2 n*` and both limits agree.
fn detect_fibonacci(params: &Params, records: &[OrbitRecord]) -> Option<(usize, Complex64)> {
    let steps = fibonacci_steps(params, records);
    let window_ok = |end: usize| end + 1 >= FIB_WINDOW && steps[end + 1 - FIB_WINDOW..=end].iter().all(|s| s.ok);
    let mut run = 0usize;
    for (n, s) in steps.iter().enumerate() {
        run = if s.ok { run + 1 } else { 0 };
        if run < FIB_WINDOW {
            continue;
        }
        let m = 2 * n;
        if m >= steps.len() || !window_ok(m) {
            return None;
        }
        let (a, b) = (steps[n].limit, steps[m].limit);
        if (a - b).abs_rel_to(&b) > CONFIRM_TOL {
            return None;
        }
        return Some((n, b.to_complex()));
    }
    None
}

trait RelDiff {
    fn abs_rel_to(&self, reference: &Self) -> f64;
}

impl RelDiff for ScaledComplex {
    /// `|self| / |reference|`, computed without leaving scaled range.
    fn abs_rel_to(&self, reference: &Self) -> f64 {
        match (self.log_abs(), reference.log_abs()) {
            (a, _) if !a.is_finite() => 0.0,
            (_, b) if !b.is_finite() => f64::INFINITY,
            (a, b) => (a.value() - b.value()).exp(),
        }
    }
}

/// Decision procedure: (i) convergence to 0 by the default stop policy (or
/// the stable line, on `{z2 = 0}`), (ii) Fibonacci ratio, Cauchy and
/// deviation tests over a 20-step window confirmed at twice the step,
/// (iii) certified Green escape, else `Undetermined`.
pub fn classify(params: &Params, p: &Point3, budget: usize) -> Classification {
    let budget = budget.max(1);
    if on_stable_line(p) {
        return Classification {
            verdict: Verdict::ConvergesToFixedPoint,
            evidence: Evidence {
                n_decision: 0,
                fibonacci_limit: None,
                green: None,
                g_value: Some(
                    (ScaledComplex::from_f64(PHI) * p.z0 + p.z1).to_complex(),
                ),
                budget,
                orbit_stop: StopReason::Converged,
            },
        };
    }
    let o = orbit(params, p, budget, StopPolicy::default());
    let last = o.records.last().expect("orbit has at least one record");
    let mut evidence = Evidence {
        n_decision: last.step,
        fibonacci_limit: None,
        green: None,
        g_value: None,
        budget,
        orbit_stop: o.stop,
    };
    if o.stop == StopReason::Converged {
        evidence.g_value = last.g_partial;
        return Classification {
            verdict: Verdict::ConvergesToFixedPoint,
            evidence,
        };
    }
    if let Some((n, limit)) = detect_fibonacci(params, &o.records) {
        evidence.n_decision = 2 * n;
        evidence.fibonacci_limit = Some(limit);
        evidence.g_value = o.records[2 * n].g_partial;
        return Classification {
            verdict: Verdict::FibonacciEscape,
            evidence,
        };
    }
    let green = green_plus_until_escape(params, p, GREEN_TARGET);
    evidence.green = Some(green);
    if green.escaped {
        evidence.n_decision = green.n_used;
        return Classification {
            verdict: Verdict::MaximalEscape,
            evidence,
        };
    }
    Classification {
        verdict: Verdict::Undetermined,
        evidence,
    }
}

/// `lim P^(n) phi^-n`, evaluated at the end of `budget` steps and accepted
/// when the last [`FIB_WINDOW`] values are Cauchy at [`CAUCHY_TOL`]; `None`
/// for a zero limit or no convergence.
pub fn fibonacci_limit(params: &Params, p: &Point3, budget: usize) -> Option<Complex64> {
    if on_stable_line(p) {
        return None;
    }
    let o = orbit(params, p, budget.max(FIB_WINDOW), StopPolicy::default());
    if o.stop != StopReason::MaxSteps || o.records.len() <= FIB_WINDOW {
        return None;
    }
    let phi_inv = ScaledComplex::from_f64(1.0 / PHI);
    let tail = &o.records[o.records.len() - FIB_WINDOW - 1..];
    let limits: Vec<ScaledComplex> = tail
        .iter()
        .map(|r| r.point.z0 * phi_inv.sc_powi(r.step as u64))
        .collect();
    let last = *limits.last().unwrap();
    if last.is_zero() {
        return None;
    }
    let cauchy = limits
        .windows(2)
        .all(|w| (w[1] - w[0]).abs_rel_to(&w[1]) <= CAUCHY_TOL);
    let value = last.to_complex();
    (cauchy && value.norm() > 0.0 && value.is_finite()).then_some(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynsys::fib;
    use crate::PHI_CONJ;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::ToPrimitive;
    use proptest::prelude::*;

    const SQRT5: f64 = 2.236_067_977_499_79;

    #[test]
    fn classify_examples() {
        let params = Params::real(2, 1, 0.9).unwrap();
        let c = classify(&params, &Point3::real(PHI_CONJ * 0.7, 0.7, 0.0), DEFAULT_BUDGET);
        assert_eq!(c.verdict, Verdict::ConvergesToFixedPoint);

        let c = classify(&params, &Point3::real(1.0, 0.0, 0.0), DEFAULT_BUDGET);
        assert_eq!(c.verdict, Verdict::FibonacciEscape);
        let lim = c.evidence.fibonacci_limit.unwrap();
        assert!((lim.re - PHI / SQRT5).abs() < 1e-12 && lim.im.abs() < 1e-15);

        let c = classify(&params, &Point3::real(10.0, 5.0, 1.0), DEFAULT_BUDGET);
        assert_eq!(c.verdict, Verdict::MaximalEscape);
        assert!(c.evidence.green.unwrap().escaped);

        let c = classify(&params, &Point3::real(0.0, 0.0, 0.8), DEFAULT_BUDGET);
        assert_eq!(c.verdict, Verdict::ConvergesToFixedPoint);
    }

    /// `F_(n+1) phi^-n` through exact integers and a 60-digit rational
    /// approximation of `phi^-1`.
    #[test]
    fn fibonacci_limit_exact_oracle() {
        let n = 80u64;
        let fnp1 = BigRational::from_integer(BigInt::from(fib(n + 1)));
        let fn_ = BigRational::from_integer(BigInt::from(fib(n)));
        // F_(n+1) / F_n approximates phi to ~ phi^(-2n) = 1e-33
        let phi_r = &fnp1 / &fn_;
        let mut pow = BigRational::from_integer(1.into());
        for _ in 0..n {
            pow = pow / &phi_r;
        }
        let oracle = (fnp1 * pow).to_f64().unwrap();
        assert!((oracle - 0.723_606_797_749_979).abs() < 1e-14, "{oracle}");

        let params = Params::real(2, 1, 0.5).unwrap();
        let lim = fibonacci_limit(&params, &Point3::real(1.0, 0.0, 0.0), DEFAULT_BUDGET).unwrap();
        assert!((lim.re - oracle).abs() < 1e-12);
    }

    #[test]
    fn fibonacci_limit_examples() {
        let params = Params::real(2, 1, 0.3).unwrap();
        assert!(fibonacci_limit(&params, &Point3::real(PHI_CONJ * 0.7, 0.7, 0.0), DEFAULT_BUDGET).is_none());
        let p = Point3::real(0.3, 0.2, 1.0);
        let a = fibonacci_limit(&params, &p, DEFAULT_BUDGET).unwrap();
        let b = fibonacci_limit(&params, &p, 2 * DEFAULT_BUDGET).unwrap();
        assert!(a.norm() > 0.1);
        assert!((a - b).norm() <= 1e-8 * a.norm());
        let c = classify(&params, &p, DEFAULT_BUDGET);
        assert_eq!(c.verdict, Verdict::FibonacciEscape);
        let lim = c.evidence.fibonacci_limit.unwrap();
        assert!((lim - a).norm() <= 1e-8 * a.norm());

        let fast = Params::real(2, 1, 0.9).unwrap();
        assert!(fibonacci_limit(&fast, &Point3::real(10.0, 5.0, 1.0), DEFAULT_BUDGET).is_none());
    }

    #[test]
    fn super_critical_is_never_fibonacci() {
        let params = Params::real(2, 1, 0.9).unwrap();
        let c = classify(&params, &Point3::real(0.3, 0.2, 1.0), DEFAULT_BUDGET);
        assert_ne!(c.verdict, Verdict::FibonacciEscape);
        let params = Params::real(2, 1, 0.7).unwrap();
        let c = classify(&params, &Point3::real(0.01, 0.02, 0.1), DEFAULT_BUDGET);
        assert_ne!(c.verdict, Verdict::FibonacciEscape);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn evidence_matches_verdict(v in prop::array::uniform6(-2.0f64..2.0), m in 0.2f64..1.0) {
            let params = Params::real(2, 1, m).unwrap();
            let p = Point3::new(Complex64::new(v[0], v[1]), Complex64::new(v[2], v[3]), Complex64::new(v[4], v[5]));
            let c = classify(&params, &p, 600);
            match c.verdict {
                Verdict::FibonacciEscape => {
                    let lim = c.evidence.fibonacci_limit.unwrap();
                    prop_assert!(lim.norm() > 0.0);
                    prop_assert!(c.evidence.green.is_none());
                }
                Verdict::MaximalEscape => {
                    prop_assert!(c.evidence.green.unwrap().escaped);
                    prop_assert!(c.evidence.fibonacci_limit.is_none());
                }
                _ => prop_assert!(c.evidence.fibonacci_limit.is_none()),
            }
        }

        #[test]
        fn hypersurface_points_escape_with_fibonacci_speed(a in -3.0f64..3.0, b in -3.0f64..3.0, m in 0.2f64..1.0) {
            let p = Point3::real(a, b, 0.0);
            prop_assume!((PHI * a + b).abs() > 1e-3);
            let params = Params::real(3, 2, m).unwrap();
            let c = classify(&params, &p, DEFAULT_BUDGET);
            prop_assert_eq!(c.verdict, Verdict::FibonacciEscape);
            let lim = c.evidence.fibonacci_limit.unwrap();
            prop_assert!((lim.re - (PHI * a + b) / SQRT5).abs() < 1e-9 * (1.0 + lim.norm()));
        }
    }
}
