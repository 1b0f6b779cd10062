//! Classification histograms across `|alpha|` on both sides of the critical
//! modulus, sampled from `Omega'`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::classify::{classify, fibonacci_limit, Classification, Verdict, CONFIRM_TOL};
use super::region::default_epsilon;
use crate::dynsys::{Params, Point3};
use crate::parallel::par_map;
use crate::{Result, PHI};

/// `epsilon` used when no sub-critical modulus is requested.
pub const FALLBACK_EPSILON: f64 = 0.1;
/// Samples keep `|p2|` at least this fraction of the admissible bound, so
/// they stay well off `{z2 = 0}`.
pub const MIN_BASE_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSpec {
    pub n_points: usize,
    pub seed: u64,
    pub budget: usize,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSample {
    pub point: Point3,
    pub classification: Classification,
    /// For `FibonacciEscape`: the limit is nonzero at `budget` and `2 budget`
    /// and both values agree.
    pub limit_stable: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRow {
    pub alpha_modulus: f64,
    pub sub_critical: bool,
    /// `epsilon` of the sampled `Omega'`.
    pub epsilon: f64,
    /// Counts indexed by [`Verdict::index`].
    pub histogram: [usize; 4],
    pub fibonacci_stable: usize,
    pub samples: Vec<ProbeSample>,
}

impl ProbeRow {
    pub fn count(&self, v: Verdict) -> usize {
        self.histogram[v.index()]
    }
}

/// Classifies `p`; Fibonacci verdicts also get the budget-doubling check.
pub fn probe_point(params: &Params, p: &Point3, budget: usize) -> ProbeSample {
    let classification = classify(params, p, budget);
    let limit_stable = (classification.verdict == Verdict::FibonacciEscape).then(|| {
        match (fibonacci_limit(params, p, budget), fibonacci_limit(params, p, 2 * budget)) {
            (Some(a), Some(b)) => a.norm() > 0.0 && (a - b).norm() <= CONFIRM_TOL * a.norm(),
            _ => false,
        }
    });
    ProbeSample {
        point: *p,
        classification,
        limit_stable,
    }
}

/// `n` points of `{(|p0| + |p1|)^(q-1) |p2|^d < phi epsilon}` with fiber
/// coordinates uniform in `[-1, 1]^2 x [-1, 1]^2` and `|p2|` uniform in
/// `[0.05, 0.999]` times the admissible bound.
pub fn sample_region(q: u32, d: u32, epsilon: f64, n: usize, rng: &mut impl Rng) -> Vec<Point3> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let mut u = || Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let (z0, z1) = (u(), u());
        let s = z0.norm() + z1.norm();
        if s == 0.0 {
            continue;
        }
        let bound = ((PHI * epsilon).ln() - (q as f64 - 1.0) * s.ln()) / d as f64;
        let r = bound.exp() * rng.random_range(MIN_BASE_FRACTION..0.999);
        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        out.push(Point3::new(z0, z1, Complex64::from_polar(r, theta)));
    }
    out
}

/// One row per modulus (real positive `alpha`). Sub-critical rows sample
/// their own `Omega'` with the default epsilon; super-critical rows reuse the
/// region (and, with it, the points) of the smallest sub-critical modulus in
/// the list, or [`FALLBACK_EPSILON`].
pub fn phase_transition_probe(q: u32, d: u32, moduli: &[f64], spec: &SampleSpec) -> Result<Vec<ProbeRow>> {
    let family: Vec<Params> = moduli
        .iter()
        .map(|&m| Params::real(q, d, m))
        .collect::<Result<_>>()?;
    let reference = family
        .iter()
        .filter(|p| p.alpha_modulus() < p.critical_modulus())
        .min_by(|a, b| a.alpha_modulus().total_cmp(&b.alpha_modulus()))
        .map(default_epsilon)
        .transpose()?
        .unwrap_or(FALLBACK_EPSILON);
    let mut rows = Vec::with_capacity(family.len());
    for params in &family {
        let sub_critical = params.alpha_modulus() < params.critical_modulus();
        let epsilon = if sub_critical { default_epsilon(params)? } else { reference };
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ epsilon.to_bits());
        let points = sample_region(q, d, epsilon, spec.n_points, &mut rng);
        let samples = par_map(&points, spec.threads, |p| probe_point(params, p, spec.budget));
        let mut histogram = [0usize; 4];
        for s in &samples {
            histogram[s.classification.verdict.index()] += 1;
        }
        let fibonacci_stable = samples.iter().filter(|s| s.limit_stable == Some(true)).count();
        rows.push(ProbeRow {
            alpha_modulus: params.alpha_modulus(),
            sub_critical,
            epsilon,
            histogram,
            fibonacci_stable,
            samples,
        });
    }
    Ok(rows)
}
