//! Sparse multivariate polynomials with `BigInt` coefficients.
//!
//! Variables: `z0, z1, z2, z3` (non-negative exponents) and the formal
//! symbols `a` (for alpha), `b` (for alpha^l), `eta`, `nu`. Symbols may carry
//! negative exponents, which makes inverses such as `z2 / a` polynomial
//! objects. No relation between the symbols is imposed unless asked for.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::{Error, Result};

pub const NVARS: usize = 8;
pub const Z0: usize = 0;
pub const Z1: usize = 1;
pub const Z2: usize = 2;
pub const Z3: usize = 3;
pub const A: usize = 4;
pub const B: usize = 5;
pub const ETA: usize = 6;
pub const NU: usize = 7;

const NAMES: [&str; NVARS] = ["z0", "z1", "z2", "z3", "a", "b", "eta", "nu"];

pub type Exponents = [i16; NVARS];

fn add_exponents(x: &Exponents, y: &Exponents) -> Result<Exponents> {
    let mut out = [0i16; NVARS];
    for i in 0..NVARS {
        out[i] = x[i].checked_add(y[i]).ok_or(Error::ExponentOverflow)?;
    }
    Ok(out)
}

fn z_degree_of(e: &Exponents) -> u32 {
    e[..=Z3].iter().map(|&k| k as u32).sum()
}

#[derive(Clone, PartialEq, Eq, Default)]
pub struct MultiPoly {
    terms: BTreeMap<Exponents, BigInt>,
}

impl MultiPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(BigInt::one())
    }

    pub fn constant(c: BigInt) -> Self {
        let mut p = Self::zero();
        p.insert([0; NVARS], c);
        p
    }

    pub fn var(v: usize) -> Self {
        let mut e = [0; NVARS];
        e[v] = 1;
        Self::monomial_unchecked(BigInt::one(), e)
    }

    /// `c * prod x_i^e_i`; `z` exponents must be non-negative.
    pub fn monomial(c: BigInt, e: Exponents) -> Result<Self> {
        if e[..=Z3].iter().any(|&k| k < 0) {
            return Err(Error::UnsupportedForm(
                "negative exponent on a z variable".into(),
            ));
        }
        Ok(Self::monomial_unchecked(c, e))
    }

    fn monomial_unchecked(c: BigInt, e: Exponents) -> Self {
        let mut p = Self::zero();
        p.insert(e, c);
        p
    }

    fn insert(&mut self, e: Exponents, c: BigInt) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(e) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, &BigInt)> {
        self.terms.iter()
    }

    /// Number of terms; see [`MultiPoly::is_zero`].
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, e: &Exponents) -> BigInt {
        self.terms.get(e).cloned().unwrap_or_default()
    }

    /// Max total degree in `z0..z3`; `None` for the zero polynomial.
    pub fn z_degree(&self) -> Option<u32> {
        self.terms.keys().map(z_degree_of).max()
    }

    /// Every monomial has the same total `z` degree.
    pub fn is_homogeneous(&self) -> bool {
        let mut degs = self.terms.keys().map(z_degree_of);
        match degs.next() {
            None => true,
            Some(first) => degs.all(|k| k == first),
        }
    }

    /// Degree in a single variable.
    pub fn degree_in(&self, var: usize) -> Option<i16> {
        self.terms.keys().map(|e| e[var]).max()
    }

    /// `true` if every monomial involves only `var` among the `z` variables.
    pub fn depends_only_on(&self, var: usize) -> bool {
        self.terms
            .keys()
            .all(|e| (0..=Z3).all(|i| i == var || e[i] == 0))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.insert(*e, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        Self {
            terms: self.terms.iter().map(|(e, c)| (*e, -c)).collect(),
        }
    }

    pub fn scale(&self, k: &BigInt) -> Self {
        if k.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(e, c)| (*e, c * k)).collect(),
        }
    }

    /// Multiplies by `prod x_i^e_i` (symbol exponents may be negative).
    pub fn mul_monomial(&self, e: &Exponents) -> Result<Self> {
        let mut terms = BTreeMap::new();
        for (x, c) in &self.terms {
            let y = add_exponents(x, e)?;
            if y[..=Z3].iter().any(|&k| k < 0) {
                return Err(Error::UnsupportedForm(
                    "negative exponent on a z variable".into(),
                ));
            }
            terms.insert(y, c.clone());
        }
        Ok(Self { terms })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        if small.is_zero() {
            return Ok(Self::zero());
        }
        let mut acc: HashMap<Exponents, BigInt> =
            HashMap::with_capacity(large.len().saturating_mul(2));
        for (ea, ca) in &small.terms {
            for (eb, cb) in &large.terms {
                let e = add_exponents(ea, eb)?;
                let prod = ca * cb;
                match acc.get_mut(&e) {
                    Some(c) => *c += prod,
                    None => {
                        acc.insert(e, prod);
                    }
                }
            }
        }
        Ok(Self {
            terms: acc.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
        })
    }

    /// `self^k` by repeated squaring; `k = 0` gives 1.
    pub fn pow(&self, k: u32) -> Result<Self> {
        let mut result = Self::one();
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                result = result.mul(&base)?;
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(result)
    }

    /// Substitutes `var = 0`.
    pub fn substitute_zero(&self, var: usize) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| e[var] == 0)
                .map(|(e, c)| (*e, c.clone()))
                .collect(),
        }
    }

    /// Substitutes `var = 1`.
    pub fn substitute_one(&self, var: usize) -> Self {
        let mut out = Self::zero();
        for (e, c) in &self.terms {
            let mut e = *e;
            e[var] = 0;
            out.insert(e, c.clone());
        }
        out
    }

    /// Substitutes an integer for `var`; negative exponents need `n = +-1`.
    pub fn substitute_integer(&self, var: usize, n: &BigInt) -> Result<Self> {
        let mut out = Self::zero();
        for (e, c) in &self.terms {
            let k = e[var];
            let factor = if k >= 0 {
                num_traits::pow(n.clone(), k as usize)
            } else if n.abs().is_one() {
                num_traits::pow(n.clone(), (-k) as usize)
            } else {
                return Err(Error::UnsupportedForm(format!(
                    "cannot substitute {n} into a negative power of {}",
                    NAMES[var]
                )));
            };
            let mut e = *e;
            e[var] = 0;
            out.insert(e, c * factor);
        }
        Ok(out)
    }

    /// Reduces the exponent of `var` modulo `m` (the relation `var^m = 1`).
    pub fn reduce_exponent_mod(&self, var: usize, m: i16) -> Self {
        let mut out = Self::zero();
        for (e, c) in &self.terms {
            let mut e = *e;
            e[var] = e[var].rem_euclid(m.max(1));
            out.insert(e, c.clone());
        }
        out
    }

    /// Numeric evaluation; `z = [z0, z1, z2, z3]`, `s = [a, b, eta, nu]`.
    pub fn eval(&self, z: &[Complex64; 4], s: &[Complex64; 4]) -> Complex64 {
        let vals = [z[0], z[1], z[2], z[3], s[0], s[1], s[2], s[3]];
        self.terms
            .iter()
            .map(|(e, c)| {
                let mut t = Complex64::new(c.to_f64().unwrap_or(f64::NAN), 0.0);
                for (k, v) in e.iter().zip(vals.iter()) {
                    if *k != 0 {
                        t *= v.powi(*k as i32);
                    }
                }
                t
            })
            .sum()
    }

    /// One monomial per line, `coeff e0 e1 e2 e3 ea eb`; fails if `eta` or
    /// `nu` occur.
    pub fn to_text(&self) -> Result<String> {
        let mut out = String::new();
        for (e, c) in &self.terms {
            if e[ETA] != 0 || e[NU] != 0 {
                return Err(Error::UnsupportedForm(
                    "text format has no columns for eta, nu".into(),
                ));
            }
            out.push_str(&c.to_string());
            for k in &e[..6] {
                out.push(' ');
                out.push_str(&k.to_string());
            }
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut out = Self::zero();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::UnsupportedForm(format!("line {}: expected 7 fields", i + 1));
            if fields.len() != 7 {
                return Err(bad());
            }
            let c: BigInt = fields[0].parse().map_err(|_| bad())?;
            let mut e = [0i16; NVARS];
            for (slot, f) in e.iter_mut().zip(&fields[1..]) {
                *slot = f.parse().map_err(|_| bad())?;
            }
            if e[..=Z3].iter().any(|&k| k < 0) {
                return Err(bad());
            }
            out.insert(e, c);
        }
        Ok(out)
    }
}

impl fmt::Debug for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        // highest z degree first reads naturally
        let mut terms: Vec<_> = self.terms.iter().collect();
        terms.sort_by_key(|(e, _)| std::cmp::Reverse((z_degree_of(e), **e)));
        for (e, c) in terms {
            let neg = c.is_negative();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            first = false;
            let mag = c.abs();
            // symbols lead
            let vars: Vec<String> = [A, B, ETA, NU, Z0, Z1, Z2, Z3]
                .into_iter()
                .map(|i| (i, e[i]))
                .filter(|&(_, k)| k != 0)
                .map(|(i, k)| {
                    if k == 1 {
                        NAMES[i].to_string()
                    } else {
                        format!("{}^{}", NAMES[i], k)
                    }
                })
                .collect();
            if vars.is_empty() {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write!(f, "{}", vars.join("*"))?;
            } else {
                write!(f, "{}*{}", mag, vars.join("*"))?;
            }
        }
        Ok(())
    }
}

/// Substitutes the components of `map` for `z0, z1, z2` (and `z3` when the
/// map has four components); symbols are left alone.
pub fn poly_compose(map: &PolyMap, into: &MultiPoly) -> Result<MultiPoly> {
    let nsub = map.components.len();
    let mut cache: HashMap<(usize, i16), MultiPoly> = HashMap::new();
    let mut out = MultiPoly::zero();
    for (e, c) in into.terms() {
        let mut rest = *e;
        let mut term = MultiPoly::constant(c.clone());
        for (v, comp) in map.components.iter().enumerate().take(nsub.min(4)) {
            let k = e[v];
            rest[v] = 0;
            if k == 0 {
                continue;
            }
            let power = match cache.get(&(v, k)) {
                Some(p) => p.clone(),
                None => {
                    let p = comp.pow(k as u32)?;
                    cache.insert((v, k), p.clone());
                    p
                }
            };
            term = term.mul(&power)?;
        }
        term = term.mul_monomial(&rest)?;
        out = out.add(&term);
    }
    Ok(out)
}

/// A polynomial map: 3 components (affine) or 4 (projective).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PolyMap {
    pub components: Vec<MultiPoly>,
}

impl PolyMap {
    pub fn new(components: Vec<MultiPoly>) -> Self {
        Self { components }
    }

    pub fn identity(n: usize) -> Self {
        Self::new((0..n).map(MultiPoly::var).collect())
    }

    pub fn is_projective(&self) -> bool {
        self.components.len() == 4
    }

    /// Max z-degree over the components.
    pub fn degree(&self) -> u32 {
        self.components
            .iter()
            .filter_map(|c| c.z_degree())
            .max()
            .unwrap_or(0)
    }

    /// `self o inner`.
    pub fn compose(&self, inner: &PolyMap) -> Result<PolyMap> {
        Ok(PolyMap::new(
            self.components
                .iter()
                .map(|c| poly_compose(inner, c))
                .collect::<Result<_>>()?,
        ))
    }

    /// `(z3^D f_i(z / z3))_i` followed by `z3^D`.
    pub fn homogenize(&self, target_degree: u32) -> Result<PolyMap> {
        if self.is_projective() {
            return Err(Error::UnsupportedForm("map is already projective".into()));
        }
        if self.degree() > target_degree {
            return Err(Error::UnsupportedForm(format!(
                "target degree {target_degree} is below the map degree {}",
                self.degree()
            )));
        }
        let td = i16::try_from(target_degree).map_err(|_| Error::ExponentOverflow)?;
        let mut comps = Vec::with_capacity(4);
        for c in &self.components {
            let mut h = MultiPoly::zero();
            for (e, coeff) in c.terms() {
                let mut e = *e;
                e[Z3] = td - z_degree_of(&e) as i16;
                h.insert(e, coeff.clone());
            }
            comps.push(h);
        }
        let mut e = [0; NVARS];
        e[Z3] = td;
        comps.push(MultiPoly::monomial_unchecked(BigInt::one(), e));
        Ok(PolyMap::new(comps))
    }

    /// Sets `z3 = 1` and drops the last component.
    pub fn dehomogenize(&self) -> PolyMap {
        PolyMap::new(
            self.components
                .iter()
                .take(3)
                .map(|c| c.substitute_one(Z3))
                .collect(),
        )
    }

    /// Components restricted to the hyperplane `z3 = 0`.
    pub fn restrict_to_hyperplane(&self) -> PolyMap {
        PolyMap::new(
            self.components
                .iter()
                .map(|c| c.substitute_zero(Z3))
                .collect(),
        )
    }

    /// Multiplies every component by the smallest monomial in `a, b` that
    /// removes negative symbol exponents; projectively the same map.
    pub fn clear_symbol_denominators(&self) -> Result<PolyMap> {
        let mut e = [0i16; NVARS];
        for c in &self.components {
            for (x, _) in c.terms() {
                for v in [A, B] {
                    e[v] = e[v].max(-x[v]);
                }
            }
        }
        Ok(PolyMap::new(
            self.components
                .iter()
                .map(|c| c.mul_monomial(&e))
                .collect::<Result<_>>()?,
        ))
    }
}

impl fmt::Display for PolyMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sep = if self.is_projective() { " : " } else { ", " };
        let parts: Vec<String> = self.components.iter().map(|c| c.to_string()).collect();
        write!(f, "({})", parts.join(sep))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn z(i: usize) -> MultiPoly {
        MultiPoly::var(i)
    }

    fn int(n: i64) -> MultiPoly {
        MultiPoly::constant(BigInt::from(n))
    }

    #[test]
    fn ring_examples() {
        let lhs = z(Z0).add(&z(Z1)).mul(&z(Z0).sub(&z(Z1))).unwrap();
        let rhs = z(Z0).pow(2).unwrap().sub(&z(Z1).pow(2).unwrap());
        assert_eq!(lhs, rhs);
        let sq = z(Z0).add(&int(1)).pow(2).unwrap();
        assert_eq!(sq, z(Z0).pow(2).unwrap().add(&z(Z0).scale(&2.into())).add(&int(1)));
        assert_eq!(z(Z0).sub(&z(Z0)), MultiPoly::zero());
        assert!(MultiPoly::zero().z_degree().is_none());
        assert_eq!(z(Z0).pow(0).unwrap(), MultiPoly::one());
    }

    #[test]
    fn exponent_overflow_is_reported() {
        let mut e = [0; NVARS];
        e[A] = i16::MAX;
        let p = MultiPoly::monomial(BigInt::one(), e).unwrap();
        assert_eq!(p.mul(&z(A)), Err(Error::ExponentOverflow));
        let mut e = [0; NVARS];
        e[Z0] = -1;
        assert!(MultiPoly::monomial(BigInt::one(), e).is_err());
    }

    #[test]
    fn text_round_trip() {
        let mut e = [0; NVARS];
        e[A] = -2;
        e[Z2] = 3;
        let p = MultiPoly::monomial(BigInt::from(-7), e).unwrap().add(&z(Z0)).add(&int(12345678901234567890i128 as i64));
        let text = p.to_text().unwrap();
        assert_eq!(MultiPoly::from_text(&text).unwrap(), p);
        assert!(z(ETA).to_text().is_err());
        assert!(MultiPoly::from_text("1 2 3").is_err());
        assert!(text.lines().all(|l| l.split(' ').count() == 7));
    }

    #[test]
    fn homogenize_round_trip() {
        let m = PolyMap::new(vec![z(Z0).add(&z(Z1).pow(3).unwrap()), z(Z0), z(Z2).mul(&z(A)).unwrap()]);
        let h = m.homogenize(3).unwrap();
        assert!(h.components.iter().all(|c| c.is_homogeneous() && c.z_degree() == Some(3)));
        assert_eq!(h.dehomogenize(), m);
        assert!(m.homogenize(2).is_err());
    }

    fn arb_poly() -> impl Strategy<Value = MultiPoly> {
        prop::collection::vec((-5i64..5, prop::array::uniform4(0i16..3), -2i16..3), 0..6).prop_map(|ts| {
            let mut p = MultiPoly::zero();
            for (c, ze, ae) in ts {
                let mut e = [0; NVARS];
                e[..4].copy_from_slice(&ze);
                e[A] = ae;
                p = p.add(&MultiPoly::monomial(BigInt::from(c), e).unwrap());
            }
            p
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn ring_axioms(x in arb_poly(), y in arb_poly(), w in arb_poly()) {
            prop_assert_eq!(x.mul(&y).unwrap().mul(&w).unwrap(), x.mul(&y.mul(&w).unwrap()).unwrap());
            prop_assert_eq!(x.mul(&y.add(&w)).unwrap(), x.mul(&y).unwrap().add(&x.mul(&w).unwrap()));
            prop_assert_eq!(x.mul(&y).unwrap(), y.mul(&x).unwrap());
            prop_assert_eq!(x.add(&y).add(&w), x.add(&y.add(&w)));
            prop_assert_eq!(x.sub(&x), MultiPoly::zero());
            prop_assert!(x.mul(&y).unwrap().terms().all(|(_, c)| !c.is_zero()));
        }

        #[test]
        fn pow_matches_repeated_mul(x in arb_poly(), k in 0u32..4) {
            let mut want = MultiPoly::one();
            for _ in 0..k {
                want = want.mul(&x).unwrap();
            }
            prop_assert_eq!(x.pow(k).unwrap(), want);
        }

        #[test]
        fn eval_is_a_ring_homomorphism(x in arb_poly(), y in arb_poly(), v in prop::array::uniform4(0.5f64..1.5)) {
            let zv = [Complex64::new(v[0], 0.1), Complex64::new(v[1], -0.2), Complex64::new(v[2], 0.0), Complex64::new(v[3], 0.3)];
            let s = [Complex64::new(0.7, 0.2), Complex64::new(1.1, 0.0), Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)];
            let lhs = x.mul(&y).unwrap().eval(&zv, &s);
            let rhs = x.eval(&zv, &s) * y.eval(&zv, &s);
            prop_assert!((lhs - rhs).norm() <= 1e-9 * (1.0 + rhs.norm()));
        }
    }
}
