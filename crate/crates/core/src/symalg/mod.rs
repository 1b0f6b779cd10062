//! Exact polynomial algebra for the map family.

mod checks;
mod maps;
mod poly;

pub use checks::{
    check_centralizer_family, check_fibration_invariance, format_loci, homogenize,
    hyperplane_image, indeterminacy_on_hyperplane, preserves_fibration, verify_degree_formula,
    verify_phi_degrees, DegreeReport, DegreeRow, EtaChoice, FamilyMap, FibrationReport,
    HyperplaneImage, Locus,
};
pub use maps::{
    expected_psi_degree, iterate_phi_symbolic, iterate_psi_inverse_symbolic,
    iterate_psi_symbolic, iterate_psi_symbolic_capped, phi_inv_map, phi_map, psi_inv_map,
    psi_map, DEFAULT_ITERATION_CAP,
};
pub use poly::{poly_compose, Exponents, MultiPoly, PolyMap, A, B, ETA, NU, NVARS, Z0, Z1, Z2, Z3};
