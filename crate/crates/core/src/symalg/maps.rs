//! The map family as exact polynomial maps, and their iterates.

use num_bigint::BigInt;
use num_traits::One;

use super::poly::{MultiPoly, PolyMap, A, B, NVARS, Z0, Z1, Z2};
use crate::{Error, Result};

pub const DEFAULT_ITERATION_CAP: usize = 6;

fn v(i: usize) -> MultiPoly {
    MultiPoly::var(i)
}

fn symbol_power(var: usize, k: i32) -> Result<MultiPoly> {
    let mut e = [0i16; NVARS];
    e[var] = i16::try_from(k).map_err(|_| Error::ExponentOverflow)?;
    MultiPoly::monomial(BigInt::one(), e)
}

fn check_qd(q: u32, d: u32) -> Result<()> {
    if q < 2 || d < 1 {
        return Err(Error::InvalidParams(format!("need q >= 2, d >= 1 (q = {q}, d = {d})")));
    }
    Ok(())
}

/// `(z0 + z1 + z0^q z2^d, z0, a z2)`.
pub fn psi_map(q: u32, d: u32) -> Result<PolyMap> {
    check_qd(q, d)?;
    let cross = v(Z0).pow(q)?.mul(&v(Z2).pow(d)?)?;
    Ok(PolyMap::new(vec![
        v(Z0).add(&v(Z1)).add(&cross),
        v(Z0),
        v(A).mul(&v(Z2))?,
    ]))
}

/// `(z1, z0 - z1 - z1^q z2^d a^-d, z2 / a)`.
pub fn psi_inv_map(q: u32, d: u32) -> Result<PolyMap> {
    check_qd(q, d)?;
    let cross = v(Z1)
        .pow(q)?
        .mul(&v(Z2).pow(d)?)?
        .mul(&symbol_power(A, -(d as i32))?)?;
    Ok(PolyMap::new(vec![
        v(Z1),
        v(Z0).sub(&v(Z1)).sub(&cross),
        v(Z2).mul(&symbol_power(A, -1)?)?,
    ]))
}

/// `(b (z0 + z1 + z0^q), b z0, a z2)`.
pub fn phi_map(q: u32) -> Result<PolyMap> {
    check_qd(q, 1)?;
    let b = v(B);
    Ok(PolyMap::new(vec![
        b.mul(&v(Z0).add(&v(Z1)).add(&v(Z0).pow(q)?))?,
        b.mul(&v(Z0))?,
        v(A).mul(&v(Z2))?,
    ]))
}

/// `(z1 / b, (z0 - z1) / b - z1^q / b^q, z2 / a)`.
pub fn phi_inv_map(q: u32) -> Result<PolyMap> {
    check_qd(q, 1)?;
    let binv = symbol_power(B, -1)?;
    Ok(PolyMap::new(vec![
        v(Z1).mul(&binv)?,
        v(Z0)
            .sub(&v(Z1))
            .mul(&binv)?
            .sub(&v(Z1).pow(q)?.mul(&symbol_power(B, -(q as i32))?)?),
        v(Z2).mul(&symbol_power(A, -1)?)?,
    ]))
}

/// `P^(-1), ..., P^(n_max)` from the recurrence
/// `P^(n+1) = P^n + P^(n-1) + (P^n)^q (a^n z2)^d`, with the default cap.
pub fn iterate_psi_symbolic(q: u32, d: u32, n_max: usize) -> Result<Vec<MultiPoly>> {
    iterate_psi_symbolic_capped(q, d, n_max, DEFAULT_ITERATION_CAP)
}

pub fn iterate_psi_symbolic_capped(
    q: u32,
    d: u32,
    n_max: usize,
    cap: usize,
) -> Result<Vec<MultiPoly>> {
    check_qd(q, d)?;
    if n_max > cap {
        return Err(Error::CapExceeded { requested: n_max, cap });
    }
    let z2d = v(Z2).pow(d)?;
    let mut seq = vec![v(Z1), v(Z0)];
    for n in 0..n_max {
        let cur = &seq[n + 1];
        let prev = &seq[n];
        let drift = symbol_power(A, (n as i32) * d as i32)?.mul(&z2d)?;
        let next = cur.add(prev).add(&cur.pow(q)?.mul(&drift)?);
        seq.push(next);
    }
    Ok(seq)
}

/// First two components of `Psi^-n` for `n = 0..=n_max`, via
/// `X_(n+1) = Y_n`, `Y_(n+1) = X_n - Y_n - Y_n^q (a^-(n+1) z2)^d`.
pub fn iterate_psi_inverse_symbolic(
    q: u32,
    d: u32,
    n_max: usize,
) -> Result<Vec<(MultiPoly, MultiPoly)>> {
    check_qd(q, d)?;
    if n_max > DEFAULT_ITERATION_CAP {
        return Err(Error::CapExceeded { requested: n_max, cap: DEFAULT_ITERATION_CAP });
    }
    let z2d = v(Z2).pow(d)?;
    let mut seq = vec![(v(Z0), v(Z1))];
    for n in 0..n_max {
        let (x, y) = &seq[n];
        let drift = symbol_power(A, -((n as i32 + 1) * d as i32))?.mul(&z2d)?;
        let next_y = x.sub(y).sub(&y.pow(q)?.mul(&drift)?);
        seq.push((y.clone(), next_y));
    }
    Ok(seq)
}

/// First two components of `Phi^n` (`forward`) or `Phi^-n`.
pub fn iterate_phi_symbolic(
    q: u32,
    n_max: usize,
    forward: bool,
) -> Result<Vec<(MultiPoly, MultiPoly)>> {
    check_qd(q, 1)?;
    if n_max > DEFAULT_ITERATION_CAP {
        return Err(Error::CapExceeded { requested: n_max, cap: DEFAULT_ITERATION_CAP });
    }
    let b = v(B);
    let binv = symbol_power(B, -1)?;
    let binv_q = symbol_power(B, -(q as i32))?;
    let mut seq = vec![(v(Z0), v(Z1))];
    for n in 0..n_max {
        let (x, y) = &seq[n];
        let next = if forward {
            (b.mul(&x.add(y).add(&x.pow(q)?))?, b.mul(x)?)
        } else {
            (
                y.mul(&binv)?,
                x.sub(y).mul(&binv)?.sub(&y.pow(q)?.mul(&binv_q)?),
            )
        };
        seq.push(next);
    }
    Ok(seq)
}

/// `q^n + d (q^n - 1) / (q - 1)`.
pub fn expected_psi_degree(q: u32, d: u32, n: u32) -> u64 {
    let qn = (q as u64).pow(n);
    qn + d as u64 * (qn - 1) / (q as u64 - 1)
}
