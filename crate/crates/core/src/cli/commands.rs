//! The subcommands, as pure functions from a configuration to output text.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use super::config::{RunConfig, Suite};
use super::format::{complex, fmt17, num, opt_complex};
use crate::analysis::{
    check_lemma_identity, classify, omega_min_m, phase_transition_probe, probe_point,
    sample_omega, Classification, ProbeSample, SampleSpec, Verdict,
};
use crate::dynsys::{conjugacy_residual, orbit, Params, Point3, StopPolicy};
use crate::green::{check_functional_equation, check_semiconjugacy, green_plus, GreenEstimate};
use crate::parallel::par_map;
use crate::symalg::{
    check_centralizer_family, check_fibration_invariance, format_loci, hyperplane_image,
    indeterminacy_on_hyperplane, verify_degree_formula, verify_phi_degrees, EtaChoice, FamilyMap,
};
use crate::Result;

pub const CONJUGACY_TOL: f64 = 1e-10;
pub const DEFAULT_VERIFY_POINTS: usize = 100;
pub const DEFAULT_SWEEP_POINTS: usize = 200;
pub const DEFAULT_LEMMA_N: usize = 15;

pub const ORBIT_HEADER: &str =
    "n,p_re,p_im,p_prev_re,p_prev_im,log_mag,ratio_re,ratio_im,g_partial_re,g_partial_im";

pub const SWEEP_HEADER: &str = "alpha_modulus,z0_re,z0_im,z1_re,z1_im,z2_re,z2_im,verdict,\
n_decision,limit_re,limit_im,limit_stable,green_value,green_error_bound,orbit_stop";

fn params_json(params: &Params) -> Value {
    json!({"q": params.q(), "d": params.d(), "alpha": complex(params.alpha())})
}

fn point_json(p: &Point3) -> Value {
    Value::Array(p.to_complex().iter().map(|&z| complex(z)).collect())
}

fn stop_name<T: serde::Serialize>(s: &T) -> String {
    serde_json::to_value(s)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}

pub fn green_json(g: &GreenEstimate) -> Value {
    json!({
        "value": num(g.value),
        "error_bound": num(g.error_bound),
        "n_used": g.n_used,
        "escaped": g.escaped,
        "lower_certified": g.lower_certified,
        "stop": stop_name(&g.stop),
    })
}

fn orbit_stop_name(c: &Classification) -> &'static str {
    use crate::dynsys::StopReason::*;
    match c.evidence.orbit_stop {
        MaxSteps => "max_steps",
        Escaped => "escaped",
        Converged => "converged",
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn csv_complex(z: Option<Complex64>) -> [String; 2] {
    match z {
        Some(z) => [fmt17(z.re), fmt17(z.im)],
        None => [String::new(), String::new()],
    }
}

/// One row per orbit step, `n = 0..=max_steps` (zero orbits stop early).
/// `p` is `P^(n)`, `p_prev` is `P^(n-1)`; values beyond double range print
/// as `inf` while `log_mag` stays exact.
pub fn cmd_orbit(cfg: &RunConfig) -> String {
    let orb = orbit(&cfg.params, &cfg.point, cfg.max_steps, StopPolicy::no_escape());
    let mut out = String::from(ORBIT_HEADER);
    out.push('\n');
    for r in &orb.records {
        let p = r.point.z0.to_complex();
        let prev = r.point.z1.to_complex();
        let ratio = csv_complex(r.ratio.map(|x| x.to_complex()));
        let g = csv_complex(r.g_partial);
        let fields = [
            r.step.to_string(),
            fmt17(p.re),
            fmt17(p.im),
            fmt17(prev.re),
            fmt17(prev.im),
            fmt17(r.log_mag.value()),
            ratio[0].clone(),
            ratio[1].clone(),
            g[0].clone(),
            g[1].clone(),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn classification_json(c: &Classification) -> Value {
    let e = &c.evidence;
    json!({
        "verdict": c.verdict.as_str(),
        "evidence": {
            "n_decision": e.n_decision,
            "fibonacci_limit": opt_complex(e.fibonacci_limit),
            "green": e.green.as_ref().map(green_json).unwrap_or(Value::Null),
            "g_value": opt_complex(e.g_value),
            "budget": e.budget,
            "orbit_stop": orbit_stop_name(c),
        }
    })
}

pub fn cmd_classify(cfg: &RunConfig) -> String {
    let c = classify(&cfg.params, &cfg.point, cfg.budget);
    let mut v = classification_json(&c);
    v["command"] = json!("classify");
    v["params"] = params_json(&cfg.params);
    v["point"] = point_json(&cfg.point);
    v["budget"] = json!(cfg.budget);
    pretty(&v)
}

pub fn cmd_green(cfg: &RunConfig) -> String {
    let g = green_plus(&cfg.params, &cfg.point, cfg.target_error);
    let v = json!({
        "command": "green",
        "params": params_json(&cfg.params),
        "point": point_json(&cfg.point),
        "target_error": num(cfg.target_error),
        "estimate": green_json(&g),
    });
    pretty(&v)
}

/// Report text and overall verdict of a verification suite.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub suite: Suite,
    pub lines: Vec<String>,
    pub passed: usize,
    pub failed: usize,
}

impl VerifyReport {
    fn new(suite: Suite) -> Self {
        Self {
            suite,
            lines: Vec::new(),
            passed: 0,
            failed: 0,
        }
    }

    fn check(&mut self, pass: bool, text: String) {
        if pass {
            self.passed += 1;
        } else {
            self.failed += 1;
        }
        self.lines
            .push(format!("{} {}: {}", if pass { "PASS" } else { "FAIL" }, self.suite.name(), text));
    }

    pub fn pass(&self) -> bool {
        self.failed == 0
    }

    pub fn render(&self) -> String {
        let mut out = self.lines.join("\n");
        out.push_str(&format!(
            "\n{} {}: {} of {} checks passed\n",
            if self.pass() { "PASS" } else { "FAIL" },
            self.suite.name(),
            self.passed,
            self.passed + self.failed
        ));
        out
    }
}

fn unit_disc(rng: &mut ChaCha8Rng, r_min: f64, r_max: f64) -> Complex64 {
    Complex64::from_polar(rng.random_range(r_min..r_max), rng.random_range(0.0..std::f64::consts::TAU))
}

pub fn cmd_verify(cfg: &RunConfig, suite: Suite) -> Result<VerifyReport> {
    let mut rep = VerifyReport::new(suite);
    let (q, d) = (cfg.params.q(), cfg.params.d());
    let n_points = cfg.n_points.unwrap_or(DEFAULT_VERIFY_POINTS);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    match suite {
        Suite::Degrees => {
            let n_max = cfg.n_max.unwrap_or(if q == 2 { 5 } else { 4 });
            let r = verify_degree_formula(q, d, n_max)?;
            let list: Vec<String> = r.rows.iter().map(|x| x.forward.to_string()).collect();
            for row in &r.rows {
                rep.check(
                    row.pass(),
                    format!(
                        "n={} deg(Psi^n)={} deg(Psi^-n)={} expected {}  [deg(Psi^n) = q^n + d(q^n-1)/(q-1) = deg(Psi^-n)]",
                        row.n, row.forward, row.inverse, row.expected
                    ),
                );
            }
            rep.lines.push(format!("degrees of Psi^n: {}", list.join(",")));
            let r = verify_phi_degrees(q, d, n_max)?;
            for row in &r.rows {
                rep.check(
                    row.pass(),
                    format!(
                        "n={} deg(Phi^n)={} deg(Phi^-n)={} expected {}  [deg(Phi^n) = deg(Phi^-n) = q^n]",
                        row.n, row.forward, row.inverse, row.expected
                    ),
                );
            }
            for (map, want) in [
                (FamilyMap::Psi, "(1:0:0:0)"),
                (FamilyMap::Phi, "(1:0:0:0)"),
                (FamilyMap::PhiInv, "(0:1:0:0)"),
            ] {
                let img = hyperplane_image(&map.projective(q, d)?)?;
                let got = img.collapse_point().unwrap_or_else(|| "none".into());
                rep.check(
                    got == want,
                    format!("{} sends z3=0 to {got}, expected {want}  [hyperplane collapse]", map.name()),
                );
            }
            for (map, want) in [
                (FamilyMap::Psi, "{z0=0, z3=0} ∪ {z2=0, z3=0}"),
                (FamilyMap::PsiInv, "{z1=0, z3=0} ∪ {z2=0, z3=0}"),
                (FamilyMap::PhiInv, "{z1=0, z3=0}"),
            ] {
                let got = format_loci(&indeterminacy_on_hyperplane(&map.projective(q, d)?)?);
                rep.check(got == want, format!("Ind({}) = {got}  [indeterminacy on z3=0]", map.name()));
            }
        }
        Suite::Conjugacy => {
            for i in 0..n_points {
                let p = Point3::new(
                    unit_disc(&mut rng, 0.0, 2.0),
                    unit_disc(&mut rng, 0.0, 2.0),
                    unit_disc(&mut rng, 0.1, 1.0),
                );
                let res = conjugacy_residual(&cfg.params, &p)?;
                rep.check(
                    res <= CONJUGACY_TOL,
                    format!("point {i}: relative residual {}  [theta o Psi = Phi o theta]", fmt17(res)),
                );
            }
        }
        Suite::Fibration => {
            let r = check_fibration_invariance(q, d)?;
            for (name, ok) in [("psi", r.psi), ("psi_inv", r.psi_inv), ("phi", r.phi), ("phi_inv", r.phi_inv)] {
                rep.check(ok, format!("{name} maps {{z2=cst}} to itself  [invariant fibration z2=cst]"));
            }
            rep.check(
                !r.negative_control,
                "psi does not preserve {z0=cst} (negative control)".into(),
            );
        }
        Suite::Centralizer => {
            for k in 0..q - 1 {
                let ok = check_centralizer_family(q, EtaChoice::RootOfUnity(k))?;
                rep.check(
                    ok,
                    format!("eta = zeta^{k}, zeta^{} = 1, nu formal: f o Phi = Phi o f  [centralizer (eta z0, eta z1, nu z2)]", q - 1),
                );
            }
            let ok = check_centralizer_family(q, EtaChoice::Integer(2))?;
            rep.check(!ok, "eta = 2 does not commute (negative control)".into());
        }
        Suite::LemmaIdentity => {
            let n_max = cfg.n_max.unwrap_or(DEFAULT_LEMMA_N);
            let points: Vec<Point3> = (0..n_points)
                .map(|_| {
                    Point3::new(
                        unit_disc(&mut rng, 0.0, 2.0),
                        unit_disc(&mut rng, 0.0, 2.0),
                        unit_disc(&mut rng, 0.0, 1.0),
                    )
                })
                .collect();
            let worst = par_map(&points, cfg.threads, |p| {
                (0..=n_max)
                    .map(|n| check_lemma_identity(&cfg.params, p, n))
                    .max_by(|a, b| a.rel_diff.total_cmp(&b.rel_diff))
                    .expect("n range is non-empty")
            });
            for (i, r) in worst.iter().enumerate() {
                rep.check(
                    r.pass,
                    format!(
                        "point {i}: max relative difference {} over n <= {n_max} (at n={})  [P^(n+1) + P^(n)/phi = phi^n g_n]",
                        fmt17(r.rel_diff),
                        r.n
                    ),
                );
            }
        }
        Suite::GreenEquations => {
            let m = omega_min_m(&cfg.params);
            let points = sample_omega(&cfg.params, m, n_points, &mut rng)?;
            let results = par_map(&points, cfg.threads, |p| {
                let fe = check_functional_equation(&cfg.params, p, cfg.target_error);
                let sc = check_semiconjugacy(&cfg.params, p, cfg.target_error);
                (fe, sc)
            });
            for (i, (fe, sc)) in results.into_iter().enumerate() {
                let sc = sc?;
                let bounds = [fe.image.error_bound, fe.base.error_bound, sc.psi.error_bound, sc.henon.error_bound];
                let bounded = bounds.iter().all(|&b| b <= cfg.target_error);
                let n_used = [fe.image.n_used, fe.base.n_used, sc.henon.n_used].into_iter().max().unwrap_or(0);
                rep.check(
                    fe.pass && bounded,
                    format!(
                        "point {i}: |G(Psi p) - q G(p)| = {} <= {}, n_used {}  [G o Psi = q G]",
                        fmt17(fe.residual),
                        fmt17(fe.tolerance),
                        n_used
                    ),
                );
                rep.check(
                    sc.pass && bounded,
                    format!(
                        "point {i}: |G_Psi(p) - G_phi(h(p))| = {} <= {}  [G_Psi = G_phi o h]",
                        fmt17(sc.residual),
                        fmt17(sc.tolerance)
                    ),
                );
            }
        }
    }
    Ok(rep)
}

/// Sweep CSV and the per-modulus summary block.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub csv: String,
    pub summary: String,
}

fn sweep_row(modulus: f64, s: &ProbeSample) -> String {
    let z = s.point.to_complex();
    let e = &s.classification.evidence;
    let lim = csv_complex(e.fibonacci_limit);
    let (gv, gb) = match &e.green {
        Some(g) => (fmt17(g.value), fmt17(g.error_bound)),
        None => (String::new(), String::new()),
    };
    let fields = [
        fmt17(modulus),
        fmt17(z[0].re),
        fmt17(z[0].im),
        fmt17(z[1].re),
        fmt17(z[1].im),
        fmt17(z[2].re),
        fmt17(z[2].im),
        s.classification.verdict.as_str().to_string(),
        e.n_decision.to_string(),
        lim[0].clone(),
        lim[1].clone(),
        s.limit_stable.map(|b| b.to_string()).unwrap_or_default(),
        gv,
        gb,
        orbit_stop_name(&s.classification).to_string(),
    ];
    fields.join(",")
}

/// With explicit `points` every modulus classifies the same points;
/// otherwise each modulus samples `n_points` points of `Omega'`.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<SweepOutput> {
    let (q, d) = (cfg.params.q(), cfg.params.d());
    let mut csv = String::from(SWEEP_HEADER);
    csv.push('\n');
    let mut summary = String::new();
    let rows: Vec<(f64, Vec<ProbeSample>)> = match &cfg.points {
        Some(points) => cfg
            .moduli
            .iter()
            .map(|&m| {
                let params = Params::real(q, d, m)?;
                Ok((m, par_map(points, cfg.threads, |p| probe_point(&params, p, cfg.budget))))
            })
            .collect::<Result<_>>()?,
        None => {
            let spec = SampleSpec {
                n_points: cfg.n_points.unwrap_or(DEFAULT_SWEEP_POINTS),
                seed: cfg.seed,
                budget: cfg.budget,
                threads: cfg.threads,
            };
            phase_transition_probe(q, d, &cfg.moduli, &spec)?
                .into_iter()
                .map(|r| (r.alpha_modulus, r.samples))
                .collect()
        }
    };
    for (m, samples) in &rows {
        let mut hist = [0usize; 4];
        for s in samples {
            hist[s.classification.verdict.index()] += 1;
            csv.push_str(&sweep_row(*m, s));
            csv.push('\n');
        }
        let stable = samples.iter().filter(|s| s.limit_stable == Some(true)).count();
        let counts: Vec<String> = Verdict::ALL
            .iter()
            .map(|v| format!("{}={}", v.as_str(), hist[v.index()]))
            .collect();
        summary.push_str(&format!(
            "# alpha_modulus={} points={} {} fibonacci_limit_stable={}\n",
            fmt17(*m),
            samples.len(),
            counts.join(" "),
            stable
        ));
    }
    Ok(SweepOutput { csv, summary })
}
