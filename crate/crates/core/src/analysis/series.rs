//! `g(z) = phi z0 + z1 + z2^d sum_j (P^(j))^q phi^-j alpha^(jd)`, its partial
//! sums `g_n` and tails `r_n = g - g_n`.

use num_complex::Complex64;

use crate::dynsys::{apply_psi, orbit, Params, Point3, StopPolicy, StopReason};
use crate::numcore::ScaledComplex;
use crate::PHI;

/// Consecutive negligible terms required for convergence.
const CONVERGED_RUN: usize = 5;
const TERM_REL_TOL: f64 = 1e-16;
const DIVERGENCE_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesState {
    pub n: usize,
    pub g_n: Complex64,
    /// `(P^(n))^q phi^-n alpha^(nd)`, without the `z2^d` factor.
    pub term_n: ScaledComplex,
    /// Geometric extrapolation of `|r_n|` from the last two contributions;
    /// an estimate, not a rigorous bound.
    pub tail_bound: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SeriesOutcome {
    Converged(Complex64),
    Diverged,
    /// `max_terms` reached; carries the last partial sum.
    Unknown(Complex64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesResult {
    pub outcome: SeriesOutcome,
    pub states: Vec<SeriesState>,
}

impl SeriesResult {
    pub fn value(&self) -> Option<Complex64> {
        match self.outcome {
            SeriesOutcome::Converged(g) => Some(g),
            _ => None,
        }
    }
}

/// `|phi p0| + |p1|`, the natural size of `g` at `p`.
pub(crate) fn linear_scale(p: &Point3) -> f64 {
    PHI * p.z0.abs() + p.z1.abs()
}

pub fn series_g(params: &Params, p: &Point3, max_terms: usize) -> SeriesResult {
    let q = params.q() as u64;
    let d = params.d() as u64;
    let ratio = params.alpha_sc().sc_powi(d) * ScaledComplex::from_f64(1.0 / PHI);
    let z2d = p.z2.sc_powi(d);
    let floor = linear_scale(p);

    let mut g = ScaledComplex::from_f64(PHI) * p.z0 + p.z1;
    let mut x = *p;
    let mut weight = ScaledComplex::ONE;
    let mut prev_contrib: Option<f64> = None;
    let mut small_run = 0usize;
    let mut states = Vec::new();
    for n in 0..max_terms.max(1) {
        let term = x.z0.sc_powi(q) * weight;
        let contrib = z2d * term;
        g = g + contrib;
        let c_abs = contrib.abs();
        let g_c = g.to_complex();
        let tail_bound = match prev_contrib {
            _ if c_abs == 0.0 => Some(0.0),
            Some(prev) if prev > 0.0 && c_abs < prev => {
                let rho = c_abs / prev;
                Some(c_abs * rho / (1.0 - rho))
            }
            _ => None,
        };
        states.push(SeriesState {
            n,
            g_n: g_c,
            term_n: term,
            tail_bound,
        });
        if !(c_abs <= DIVERGENCE_LIMIT) {
            return SeriesResult {
                outcome: SeriesOutcome::Diverged,
                states,
            };
        }
        if c_abs <= TERM_REL_TOL * g_c.norm().max(floor) {
            small_run += 1;
            if small_run >= CONVERGED_RUN {
                return SeriesResult {
                    outcome: SeriesOutcome::Converged(g_c),
                    states,
                };
            }
        } else {
            small_run = 0;
        }
        prev_contrib = Some(c_abs);
        x = apply_psi(params, &x);
        weight = weight * ratio;
    }
    let last = g.to_complex();
    SeriesResult {
        outcome: SeriesOutcome::Unknown(last),
        states,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    pub n: usize,
    /// `P^(n+1) + phi^-1 P^(n)` from the recurrence.
    pub lhs: ScaledComplex,
    /// `phi^n (phi p0 + p1 + p2^d sum_{j<=n} (P^(j))^q phi^-j alpha^(jd))`.
    pub rhs: ScaledComplex,
    /// `|lhs - rhs| / max(|lhs|, |rhs|)`.
    pub rel_diff: f64,
    pub pass: bool,
}

pub const LEMMA_TOL: f64 = 1e-8;

/// Both sides of the identity `P^(n+1) + phi^-1 P^(n) = phi^n g_n(p)`.
pub fn check_lemma_identity(params: &Params, p: &Point3, n: usize) -> LemmaReport {
    let q = params.q() as u64;
    let d = params.d() as u64;
    let phi = ScaledComplex::from_f64(PHI);
    let phi_inv = ScaledComplex::from_f64(1.0 / PHI);

    let mut fiber = Vec::with_capacity(n + 2);
    let mut x = *p;
    for _ in 0..=n + 1 {
        fiber.push(x.z0);
        x = apply_psi(params, &x);
    }
    let lhs = fiber[n + 1] + phi_inv * fiber[n];

    let alpha_d = params.alpha_sc().sc_powi(d);
    let mut sum = ScaledComplex::ZERO;
    for (j, pj) in fiber.iter().take(n + 1).enumerate() {
        sum = sum + pj.sc_powi(q) * phi_inv.sc_powi(j as u64) * alpha_d.sc_powi(j as u64);
    }
    let rhs = phi.sc_powi(n as u64) * (phi * p.z0 + p.z1 + p.z2.sc_powi(d) * sum);

    let scale = lhs.max_abs(rhs);
    let rel_diff = if scale.is_zero() {
        0.0
    } else {
        let diff = lhs - rhs;
        match (diff.log_abs(), scale.log_abs()) {
            (a, b) if a.is_finite() => (a.value() - b.value()).exp(),
            _ => 0.0,
        }
    };
    LemmaReport {
        n,
        lhs,
        rhs,
        rel_diff,
        pass: rel_diff <= LEMMA_TOL,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StableVerdict {
    InWs,
    NotInWs,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StableEvidence {
    pub verdict: StableVerdict,
    pub g: Option<Complex64>,
    /// Least-squares slope of `ln(|r_j| phi^j)` against `j`.
    pub decay_slope: Option<f64>,
    /// The orbit contracted (see [`stable_criterion`]).
    pub orbit_contracts: bool,
}

/// Tolerance on `|g(p)|` relative to `max(1, |phi p0| + |p1|)`.
pub const G_ZERO_TOL: f64 = 1e-10;

/// Contraction factor accepted as orbit evidence when rounding prevents the
/// orbit from reaching the stop policy's zero threshold.
const CONTRACTION_EVIDENCE: f64 = 1e-6;

/// `g(p) ≈ 0` together with summable `|r_j| phi^j`, cross-checked against
/// the orbit. Needs `0 < |alpha| < 1`; otherwise the verdict is
/// `Undetermined`.
///
/// The orbit counts as contracting if it meets the default stop policy's
/// convergence test, or if its fiber norm drops by a factor `1e6` at some
/// step. The second clause is needed because points on `W^s` known only to
/// double precision carry an unstable component of relative size `1e-16`
/// that later grows like `phi^n`.
pub fn stable_criterion(params: &Params, p: &Point3, max_terms: usize) -> StableEvidence {
    let m = params.alpha_modulus();
    let series = series_g(params, p, max_terms);
    let orbit_contracts = orbit_contracts(params, p, max_terms.max(200));
    let undetermined = |g, slope| StableEvidence {
        verdict: StableVerdict::Undetermined,
        g,
        decay_slope: slope,
        orbit_contracts,
    };
    if m >= 1.0 {
        return undetermined(series.value(), None);
    }
    let g = match series.outcome {
        SeriesOutcome::Diverged => {
            return StableEvidence {
                verdict: if orbit_contracts {
                    StableVerdict::Undetermined
                } else {
                    StableVerdict::NotInWs
                },
                g: None,
                decay_slope: None,
                orbit_contracts,
            }
        }
        SeriesOutcome::Unknown(_) => return undetermined(None, None),
        SeriesOutcome::Converged(g) => g,
    };
    let scale = linear_scale(p).max(1.0);
    let g_small = g.norm() <= G_ZERO_TOL * scale;
    let slope = decay_slope(&series.states, g, scale);
    let decays = slope.is_none_or(|s| s < 0.0);
    let verdict = match (g_small && decays, orbit_contracts) {
        (true, true) => StableVerdict::InWs,
        (false, false) => StableVerdict::NotInWs,
        _ => StableVerdict::Undetermined,
    };
    StableEvidence {
        verdict,
        g: Some(g),
        decay_slope: slope,
        orbit_contracts,
    }
}

fn orbit_contracts(params: &Params, p: &Point3, steps: usize) -> bool {
    let start = p.fiber_norm().abs();
    if start == 0.0 {
        return true;
    }
    let o = orbit(params, p, steps, StopPolicy::default());
    o.stop == StopReason::Converged
        || o
            .records
            .iter()
            .any(|r| r.point.fiber_norm().abs() <= CONTRACTION_EVIDENCE * start.min(1.0))
}

/// Slope of `ln |r_j| + j ln phi` over tails above the rounding floor;
/// `None` when fewer than three tails qualify.
fn decay_slope(states: &[SeriesState], g: Complex64, scale: f64) -> Option<f64> {
    let floor = 1e-13 * scale;
    let pts: Vec<(f64, f64)> = states
        .iter()
        .filter_map(|s| {
            let r = (g - s.g_n).norm();
            (r > floor).then(|| (s.n as f64, r.ln() + s.n as f64 * PHI.ln()))
        })
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}
