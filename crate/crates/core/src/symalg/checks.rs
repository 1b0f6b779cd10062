//! Exact checks of the algebraic properties of the family.

use std::fmt;

use num_bigint::BigInt;
use num_traits::One;
use serde::Serialize;

use super::maps::{
    expected_psi_degree, iterate_phi_symbolic, iterate_psi_inverse_symbolic,
    iterate_psi_symbolic, phi_inv_map, phi_map, psi_inv_map, psi_map,
};
use super::poly::{MultiPoly, PolyMap, ETA, NU, NVARS, Z0, Z1, Z2, Z3};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DegreeRow {
    pub n: u32,
    pub expected: u64,
    pub forward: u64,
    pub inverse: u64,
}

impl DegreeRow {
    pub fn pass(&self) -> bool {
        self.forward == self.expected && self.inverse == self.expected
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DegreeReport {
    pub q: u32,
    pub d: u32,
    pub rows: Vec<DegreeRow>,
    pub pass: bool,
}

fn deg(p: &MultiPoly) -> u64 {
    p.z_degree().unwrap_or(0) as u64
}

/// `deg Psi^n` and `deg Psi^-n` against `q^n + d (q^n - 1)/(q - 1)`, for
/// `1 <= n <= n_max`. The degree of the map is the max over components; the
/// base component `a^n z2` has degree 1.
pub fn verify_degree_formula(q: u32, d: u32, n_max: usize) -> Result<DegreeReport> {
    let fwd = iterate_psi_symbolic(q, d, n_max)?;
    let inv = iterate_psi_inverse_symbolic(q, d, n_max)?;
    let rows: Vec<DegreeRow> = (1..=n_max)
        .map(|n| DegreeRow {
            n: n as u32,
            expected: expected_psi_degree(q, d, n as u32),
            forward: deg(&fwd[n + 1]).max(deg(&fwd[n])).max(1),
            inverse: deg(&inv[n].0).max(deg(&inv[n].1)).max(1),
        })
        .collect();
    let pass = rows.iter().all(DegreeRow::pass);
    Ok(DegreeReport { q, d, rows, pass })
}

/// `deg Phi^n = deg Phi^-n = q^n`. `d` only enters through the symbol `b`.
pub fn verify_phi_degrees(q: u32, d: u32, n_max: usize) -> Result<DegreeReport> {
    if d < 1 {
        return Err(Error::InvalidParams("need d >= 1".into()));
    }
    let fwd = iterate_phi_symbolic(q, n_max, true)?;
    let inv = iterate_phi_symbolic(q, n_max, false)?;
    let rows: Vec<DegreeRow> = (1..=n_max)
        .map(|n| DegreeRow {
            n: n as u32,
            expected: (q as u64).pow(n as u32),
            forward: deg(&fwd[n].0).max(deg(&fwd[n].1)).max(1),
            inverse: deg(&inv[n].0).max(deg(&inv[n].1)).max(1),
        })
        .collect();
    let pass = rows.iter().all(DegreeRow::pass);
    Ok(DegreeReport { q, d, rows, pass })
}

/// Homogenizes with `z3` to `target_degree`.
pub fn homogenize(map: &PolyMap, target_degree: u32) -> Result<PolyMap> {
    map.homogenize(target_degree)
}

/// The projective forms used by the hyperplane checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyMap {
    Psi,
    PsiInv,
    Phi,
    PhiInv,
}

impl FamilyMap {
    pub const ALL: [FamilyMap; 4] = [Self::Psi, Self::PsiInv, Self::Phi, Self::PhiInv];

    pub fn name(self) -> &'static str {
        match self {
            Self::Psi => "psi",
            Self::PsiInv => "psi_inv",
            Self::Phi => "phi",
            Self::PhiInv => "phi_inv",
        }
    }

    pub fn affine(self, q: u32, d: u32) -> Result<PolyMap> {
        match self {
            Self::Psi => psi_map(q, d),
            Self::PsiInv => psi_inv_map(q, d),
            Self::Phi => phi_map(q),
            Self::PhiInv => phi_inv_map(q),
        }
    }

    /// Homogenized at the map degree, symbol denominators cleared.
    pub fn projective(self, q: u32, d: u32) -> Result<PolyMap> {
        let affine = self.affine(q, d)?;
        affine.homogenize(affine.degree())?.clear_symbol_denominators()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HyperplaneImage {
    pub restricted: PolyMap,
    /// Index `i` of the coordinate point `e_i` when exactly one component
    /// survives on `z3 = 0`.
    pub collapse: Option<usize>,
}

impl HyperplaneImage {
    pub fn collapse_point(&self) -> Option<String> {
        self.collapse.map(|i| {
            let coords: Vec<&str> = (0..4).map(|j| if j == i { "1" } else { "0" }).collect();
            format!("({})", coords.join(":"))
        })
    }
}

pub fn hyperplane_image(map: &PolyMap) -> Result<HyperplaneImage> {
    if !map.is_projective() {
        return Err(Error::UnsupportedForm("hyperplane image needs a projective map".into()));
    }
    let restricted = map.restrict_to_hyperplane();
    let alive: Vec<usize> = restricted
        .components
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(i, _)| i)
        .collect();
    let collapse = if alive.len() == 1 { Some(alive[0]) } else { None };
    Ok(HyperplaneImage { restricted, collapse })
}

/// A coordinate subspace `{z_i = 0, ...}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Locus {
    pub vanishing: Vec<usize>,
}

impl fmt::Display for Locus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.vanishing.iter().map(|i| format!("z{i}=0")).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

pub fn format_loci(loci: &[Locus]) -> String {
    if loci.is_empty() {
        return "{}".into();
    }
    loci.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(" ∪ ")
}

/// Indeterminacy points on `z3 = 0`: the common zeros of the surviving
/// components, each a monomial times a unit. The result is the list of
/// minimal coordinate subspaces, each containing `z3 = 0`.
pub fn indeterminacy_on_hyperplane(map: &PolyMap) -> Result<Vec<Locus>> {
    let img = hyperplane_image(map)?;
    let mut supports: Vec<u8> = Vec::new();
    for c in img.restricted.components.iter().filter(|c| !c.is_zero()) {
        if c.len() != 1 {
            return Err(Error::UnsupportedForm(format!(
                "component {c} is not a monomial times a unit"
            )));
        }
        let (e, _) = c.terms().next().expect("one term");
        let mask = (0..3).filter(|&i| e[i] > 0).fold(0u8, |m, i| m | (1 << i));
        supports.push(mask);
    }
    if supports.is_empty() {
        return Ok(vec![Locus { vanishing: vec![Z3] }]);
    }
    if supports.contains(&0) {
        return Ok(Vec::new());
    }
    // minimal sets of z0..z2 meeting every support
    let hits = |s: u8| supports.iter().all(|m| m & s != 0);
    let candidates: Vec<u8> = (1u8..8).filter(|&s| hits(s)).collect();
    let mut loci: Vec<Locus> = candidates
        .iter()
        .filter(|&&s| !candidates.iter().any(|&t| t != s && t & s == t))
        .map(|&s| {
            let mut vanishing: Vec<usize> = (0..3).filter(|i| s & (1 << i) != 0).collect();
            vanishing.push(Z3);
            Locus { vanishing }
        })
        .collect();
    loci.sort();
    Ok(loci)
}

/// `eta` in `f = (eta z0, eta z1, nu z2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EtaChoice {
    /// `zeta^k` for a formal primitive `(q-1)`-th root of unity `zeta`.
    RootOfUnity(u32),
    /// A plain integer substituted for `eta`.
    Integer(i64),
}

/// Checks `f o Phi = Phi o f` exactly, `nu` formal.
pub fn check_centralizer_family(q: u32, eta: EtaChoice) -> Result<bool> {
    let phi = phi_map(q)?;
    let mut e = [0i16; NVARS];
    e[ETA] = match eta {
        EtaChoice::RootOfUnity(k) => i16::try_from(k).map_err(|_| Error::ExponentOverflow)?,
        EtaChoice::Integer(_) => 1,
    };
    let eta_poly = MultiPoly::monomial(BigInt::one(), e)?;
    let f = PolyMap::new(vec![
        eta_poly.mul(&MultiPoly::var(Z0))?,
        eta_poly.mul(&MultiPoly::var(Z1))?,
        MultiPoly::var(NU).mul(&MultiPoly::var(Z2))?,
    ]);
    let lhs = f.compose(&phi)?;
    let rhs = phi.compose(&f)?;
    let finish = |m: PolyMap| -> Result<Vec<MultiPoly>> {
        m.components
            .iter()
            .map(|c| match eta {
                EtaChoice::RootOfUnity(_) => Ok(c.reduce_exponent_mod(ETA, (q - 1) as i16)),
                EtaChoice::Integer(n) => c.substitute_integer(ETA, &BigInt::from(n)),
            })
            .collect()
    };
    Ok(finish(lhs)? == finish(rhs)?)
}

/// Component `var` depends only on `z_var` and is linear in it, so the
/// fibration `{z_var = cst}` is mapped to itself.
pub fn preserves_fibration(map: &PolyMap, var: usize) -> bool {
    map.components.get(var).is_some_and(|c| {
        !c.is_zero()
            && c.depends_only_on(var)
            && c.terms().all(|(e, _)| e[var] == 1)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FibrationReport {
    pub psi: bool,
    pub psi_inv: bool,
    pub phi: bool,
    pub phi_inv: bool,
    /// `{z0 = cst}` under `Psi`; expected false.
    pub negative_control: bool,
    pub pass: bool,
}

pub fn check_fibration_invariance(q: u32, d: u32) -> Result<FibrationReport> {
    let psi = psi_map(q, d)?;
    let mut r = FibrationReport {
        psi: preserves_fibration(&psi, Z2),
        psi_inv: preserves_fibration(&psi_inv_map(q, d)?, Z2),
        phi: preserves_fibration(&phi_map(q)?, Z2),
        phi_inv: preserves_fibration(&phi_inv_map(q)?, Z2),
        negative_control: preserves_fibration(&psi, Z0),
        pass: false,
    };
    r.pass = r.psi && r.psi_inv && r.phi && r.phi_inv && !r.negative_control;
    Ok(r)
}
