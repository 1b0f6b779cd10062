use std::path::Path;
use std::process::Command;

use proptest::prelude::*;
use skewdyn::analysis::{classify, Verdict};
use skewdyn::cli::{cmd_raster, gray_level, sidecar_path, Channel, ConfigFile, Coordinate, RunConfig};
use skewdyn::PHI;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_skewdyn"));
    c.env_remove("SKEWDYN_THREADS");
    c
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn config(json: &str) -> RunConfig {
    RunConfig::resolve(ConfigFile::from_json(json).unwrap(), Some(1)).unwrap()
}

#[test]
fn exit_code_contract() {
    let dir = tempfile::tempdir().unwrap();
    let ok = bin().args(["verify", "--suite", "fibration"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("PASS fibration"));
    // |alpha| > 1 is rejected
    let bad = write(dir.path(), "bad.json", r#"{"params": {"q": 2, "d": 1, "alpha": [1.5, 0]}}"#);
    let out = bin().args(["classify", "--config", &bad]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["orbit", "--config", "/nonexistent.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["raster", "--out", dir.path().join("x.pgm").to_str().unwrap(), "--resolution", "1x4"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["orbit"]).env("SKEWDYN_THREADS", "zero").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    // an unreachable target fails the error-bound part of the check
    let out = bin()
        .args(["verify", "--suite", "green-equations", "--n-points", "3", "--target-error", "1e-300"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stdout));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exit_codes_follow_validity(q in 0u32..4, d in 0u32..3, a in -1.5f64..1.5, threads in 0usize..3) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let args = [
            "skewdyn".to_string(), "verify".into(), "--suite".into(), "fibration".into(),
            "--q".into(), q.to_string(), "--d".into(), d.to_string(),
            "--alpha-re".into(), a.to_string(), "--threads".into(), threads.to_string(),
        ];
        let code = skewdyn::cli::run(args, &mut out, &mut err);
        let valid = q >= 2 && d >= 1 && a != 0.0 && a.abs() <= 1.0 && threads >= 1;
        prop_assert_eq!(code, if valid { 0 } else { 2 });
    }
}

#[test]
fn pgm_is_readable_by_image_crate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("smoke.pgm");
    let status = bin()
        .args(["raster", "--resolution", "2x2", "--out", out.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let img = image::open(&out).unwrap();
    assert_eq!((img.width(), img.height()), (2, 2));
    let luma = img.to_luma16();
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(sidecar_path(&out)).unwrap()).unwrap();
    assert_eq!(sidecar["width"], 2);
    for px in luma.pixels() {
        assert!(skewdyn::cli::GRAY_LEVELS.contains(&px.0[0]));
    }
}

#[test]
fn outputs_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut seen: Vec<Vec<Vec<u8>>> = Vec::new();
    for t in ["1", "4", "8"] {
        let mut outs = Vec::new();
        let sweep = bin().args(["sweep", "--n-points", "20", "--seed", "5", "--threads", t]).output().unwrap();
        outs.push(sweep.stdout);
        outs.push(sweep.stderr);
        let lemma = bin()
            .args(["verify", "--suite", "lemma-identity", "--n-points", "20"])
            .env("SKEWDYN_THREADS", t)
            .output()
            .unwrap();
        outs.push(lemma.stdout);
        let img = dir.path().join(format!("r{t}.pgm"));
        let st = bin()
            .args(["raster", "--resolution", "12x9", "--channel", "green", "--threads", t, "--out", img.to_str().unwrap()])
            .status()
            .unwrap();
        assert!(st.success());
        outs.push(std::fs::read(&img).unwrap());
        outs.push(std::fs::read(sidecar_path(&img)).unwrap());
        seen.push(outs);
    }
    assert_eq!(seen[0], seen[1]);
    assert_eq!(seen[0], seen[2]);
}

#[test]
fn raster_pixels_agree_with_classify() {
    let mut cfg = config(r#"{"params": {"alpha": [0.3, 0]}, "raster": {"fixed_value": [1, 0], "resolution": [9, 7], "width": 3, "height": 2}}"#);
    cfg.threads = 4;
    let r = cmd_raster(&cfg).unwrap();
    let [nx, ny] = cfg.raster.resolution;
    for j in 0..ny {
        for i in 0..nx {
            let p = cfg.raster.pixel_point(i, j);
            // re-query through the command layer with the printed coordinates
            let z = p.to_complex();
            let args = [
                "skewdyn".to_string(), "classify".into(), "--alpha-re".into(), "0.3".into(), "--threads".into(), "1".into(),
                "--point".into(),
                format!("{:e},{:e},{:e},{:e},{:e},{:e}", z[0].re, z[0].im, z[1].re, z[1].im, z[2].re, z[2].im),
            ];
            let mut out = Vec::new();
            let mut err = Vec::new();
            assert_eq!(skewdyn::cli::run(args, &mut out, &mut err), 0);
            let v: serde_json::Value = serde_json::from_slice(&out).unwrap();
            let verdict = Verdict::ALL.into_iter().find(|x| x.as_str() == v["verdict"]).unwrap();
            assert_eq!(r.samples[j * nx + i], gray_level(verdict), "pixel ({i}, {j})");
        }
    }
}

#[test]
fn phase_transition_in_slices() {
    let has_fib = |alpha: f64| {
        let cfg = config(&format!(
            r#"{{"params": {{"alpha": [{alpha}, 0]}}, "raster": {{"fixed_value": [1, 0], "resolution": [12, 12], "width": 2, "height": 2}}}}"#
        ));
        cmd_raster(&cfg).unwrap().samples.contains(&gray_level(Verdict::FibonacciEscape))
    };
    assert!(has_fib(0.3));
    assert!(!has_fib(0.9));
}

#[test]
fn invariant_hypersurface_slice() {
    // on z2 = 0 everything escapes at Fibonacci speed except the stable line
    // z1 = -phi z0; the origin pixel sits on it
    let cfg = config(r#"{"raster": {"fixed": "z2", "resolution": [11, 11], "width": 2, "height": 2}}"#);
    assert_eq!(cfg.raster.fixed, Coordinate::Z2);
    let r = cmd_raster(&cfg).unwrap();
    for (k, &s) in r.samples.iter().enumerate() {
        let want = if k == 60 { Verdict::ConvergesToFixedPoint } else { Verdict::FibonacciEscape };
        assert_eq!(s, gray_level(want), "pixel {k}");
    }
    let p = skewdyn::dynsys::Point3::real(0.4, -0.4 * PHI, 0.0);
    assert_eq!(classify(&cfg.params, &p, 2000).verdict, Verdict::ConvergesToFixedPoint);

    // the |g| channel shows the two half planes meeting along that line
    let mut cfg = cfg;
    cfg.raster.channel = Channel::GMagnitude;
    cfg.raster.resolution = [21, 201];
    let r = cmd_raster(&cfg).unwrap();
    let [nx, ny] = cfg.raster.resolution;
    for i in 0..nx {
        let x = cfg.raster.pixel_point(i, 0).z0.to_complex().re;
        if (PHI * x).abs() > 1.0 {
            continue;
        }
        let j = (0..ny).min_by_key(|&j| r.samples[j * nx + i]).unwrap();
        let y = cfg.raster.pixel_point(i, j).z1.to_complex().re;
        assert!((y + PHI * x).abs() <= 0.011, "column {i}: dark row at {y}, line at {}", -PHI * x);
    }
}

#[test]
fn schema_matches_config_fields() {
    let docs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs");
    let schema: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(docs.join("config.schema.json")).unwrap()).unwrap();
    let keys = |v: &serde_json::Value| {
        let mut k: Vec<String> = v.as_object().unwrap().keys().cloned().collect();
        k.sort();
        k
    };
    let fields = serde_json::to_value(ConfigFile::default()).unwrap();
    assert_eq!(keys(&schema["properties"]), keys(&fields));
    for sub in ["params", "raster"] {
        assert_eq!(keys(&schema["properties"][sub]["properties"]), keys(&fields[sub]), "{sub}");
    }
    let example = ConfigFile::load(&docs.join("example.config.json")).unwrap();
    let cfg = RunConfig::resolve(example, Some(1)).unwrap();
    cfg.raster.validate().unwrap();
}
