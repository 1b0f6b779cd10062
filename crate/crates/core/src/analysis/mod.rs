//! The series `g`, stable-manifold tests and parametrization, the point
//! classifier, the regions `Omega` / `Omega'` and the phase-transition probe.

mod classify;
mod probe;
mod region;
mod root;
mod series;

pub use classify::{classify, fibonacci_limit, Classification, Evidence, Verdict, DEFAULT_BUDGET};
pub use probe::{phase_transition_probe, probe_point, sample_region, ProbeRow, ProbeSample, SampleSpec};
pub use region::{default_epsilon, omega_min_m, region_test, sample_omega, Region, RegionSpec};
pub use root::{
    default_truncation, psi_n_dd, stable_root, DdComplex, StableRoot, VALIDATION_STEPS,
};
pub use series::{
    check_lemma_identity, series_g, stable_criterion, LemmaReport, SeriesOutcome, SeriesResult,
    SeriesState, StableEvidence, StableVerdict,
};
