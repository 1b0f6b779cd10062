use num_complex::Complex64;
use rand::Rng;

use crate::dynsys::{Params, Point3};
use crate::{Error, Result, PHI};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    /// `|p0| > |p1| > 0` and `|p1|^(q-1) |p2|^d > 2 + phi^M`.
    Omega { m: u32 },
    /// `(|p0| + |p1|)^(q-1) |p2|^d < phi epsilon`.
    OmegaPrime { epsilon: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionSpec {
    pub region: Region,
}

impl RegionSpec {
    pub fn omega(m: u32) -> Self {
        Self {
            region: Region::Omega { m },
        }
    }

    pub fn omega_prime(epsilon: f64) -> Self {
        Self {
            region: Region::OmegaPrime { epsilon },
        }
    }

    /// `Omega'` with [`default_epsilon`].
    pub fn omega_prime_default(params: &Params) -> Result<Self> {
        Ok(Self::omega_prime(default_epsilon(params)?))
    }

    /// `Omega` requires `M (q - 1) + d gamma > 0` with `gamma = ln|alpha| / ln phi`;
    /// `Omega'` requires `((1 + eps) phi)^q |alpha|^d < phi`.
    pub fn validate(&self, params: &Params) -> Result<()> {
        let q = params.q() as f64;
        let d = params.d() as f64;
        let ln_a = params.alpha_modulus().ln();
        match self.region {
            Region::Omega { m } => {
                let gamma = ln_a / PHI.ln();
                let margin = m as f64 * (q - 1.0) + d * gamma;
                if margin > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidSpec(format!(
                        "M(q-1) + d gamma = {margin} must be positive (M = {m})"
                    )))
                }
            }
            Region::OmegaPrime { epsilon } => {
                if !(epsilon > 0.0 && epsilon.is_finite()) {
                    return Err(Error::InvalidSpec(format!("epsilon must be positive, got {epsilon}")));
                }
                let eta = q * ((1.0 + epsilon) * PHI).ln() + d * ln_a;
                if eta < PHI.ln() {
                    Ok(())
                } else {
                    Err(Error::InvalidSpec(format!(
                        "((1+eps) phi)^q |alpha|^d = {} is not below phi (eps = {epsilon})",
                        eta.exp()
                    )))
                }
            }
        }
    }
}

/// Smallest `M >= 1` for which `Omega` is admissible.
pub fn omega_min_m(params: &Params) -> u32 {
    let gamma = params.alpha_modulus().ln() / PHI.ln();
    let q1 = params.q() as f64 - 1.0;
    let m = (-(params.d() as f64) * gamma / q1).floor() + 1.0;
    m.max(1.0) as u32
}

/// `n` points of `Omega` (with parameter `m`): `|p1|` in `[0.5, 5]`,
/// `|p0| / |p1|` in `[1.05, 3]`, and `|p1|^(q-1) |p2|^d` between 1.05 and 3
/// times `2 + phi^M`; phases uniform.
pub fn sample_omega(params: &Params, m: u32, n: usize, rng: &mut impl Rng) -> Result<Vec<Point3>> {
    RegionSpec::omega(m).validate(params)?;
    let q1 = params.q() as f64 - 1.0;
    let d = params.d() as f64;
    let floor = 2.0 + PHI.powi(m as i32);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let r1: f64 = rng.random_range(0.5..5.0);
        let r0 = r1 * rng.random_range(1.05..3.0);
        let r2 = (floor * rng.random_range(1.05..3.0) / r1.powf(q1)).powf(1.0 / d);
        let mut phase = || rng.random_range(0.0..std::f64::consts::TAU);
        out.push(Point3::new(
            Complex64::from_polar(r0, phase()),
            Complex64::from_polar(r1, phase()),
            Complex64::from_polar(r2, phase()),
        ));
    }
    Ok(out)
}

/// `0.9 ((phi / |alpha|^d)^(1/q) / phi - 1)`; fails when no positive
/// epsilon is admissible, i.e. at or above the critical modulus.
pub fn default_epsilon(params: &Params) -> Result<f64> {
    let q = params.q() as f64;
    let d = params.d() as f64;
    let largest = ((PHI.ln() - d * params.alpha_modulus().ln()) / q).exp() / PHI - 1.0;
    if largest > 0.0 {
        Ok(0.9 * largest)
    } else {
        Err(Error::InvalidSpec(format!(
            "no admissible epsilon for |alpha| = {} (critical modulus {})",
            params.alpha_modulus(),
            params.critical_modulus()
        )))
    }
}

/// Literal membership test; inequalities are evaluated on logarithms so
/// that scaled points of any size are handled.
pub fn region_test(params: &Params, p: &Point3, spec: &RegionSpec) -> Result<bool> {
    spec.validate(params)?;
    let q1 = params.q() as f64 - 1.0;
    let d = params.d() as f64;
    let ln2 = p.z2.log_abs().value();
    match spec.region {
        Region::Omega { m } => {
            if p.z1.is_zero() || p.z0.cmp_abs(&p.z1).is_le() || p.z2.is_zero() {
                return Ok(false);
            }
            let lhs = q1 * p.z1.log_abs().value() + d * ln2;
            Ok(lhs > (2.0 + PHI.powi(m as i32)).ln())
        }
        Region::OmegaPrime { epsilon } => {
            let s = p.z0.modulus() + p.z1.modulus();
            if s.is_zero() || p.z2.is_zero() {
                return Ok(true);
            }
            let lhs = q1 * s.log_abs().value() + d * ln2;
            Ok(lhs < (PHI * epsilon).ln())
        }
    }
}
