//! The `skewdyn` command line.
//!
//! Exit codes: 0 success, 1 a verification check failed, 2 configuration or
//! usage error.

mod commands;
mod config;
mod format;
mod raster;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use commands::{
    classification_json, cmd_classify, cmd_green, cmd_orbit, cmd_sweep, cmd_verify, green_json,
    SweepOutput, VerifyReport, CONJUGACY_TOL, ORBIT_HEADER, SWEEP_HEADER,
};
pub use config::{
    Channel, ConfigFile, Coordinate, RasterSpec, RunConfig, Suite, DEFAULT_MAX_STEPS,
    DEFAULT_MAX_TERMS, DEFAULT_MODULI, DEFAULT_TARGET_ERROR,
};
pub use format::fmt17;
pub use raster::{cmd_raster, gray_level, RasterOutput, GRAY_LEVELS};

use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "skewdyn", version, about = "Orbits, Green functions and algebra of a skew-product family on C^3")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Orbit of one point as CSV.
    Orbit(Flags),
    /// Classify one point (JSON).
    Classify(Flags),
    /// Green function estimate at one point (JSON).
    Green(Flags),
    /// Run a verification suite.
    Verify(Flags),
    /// Classification sweep over |alpha| (CSV, summary on stderr).
    Sweep(Flags),
    /// Render a slice to a 16-bit PGM with a JSON sidecar.
    Raster(Flags),
}

fn parse_list<T: std::str::FromStr>(s: &str) -> std::result::Result<Vec<T>, String> {
    s.split(',')
        .filter(|x| !x.trim().is_empty())
        .map(|x| x.trim().parse::<T>().map_err(|_| format!("bad list entry {x:?}")))
        .collect()
}

#[derive(Debug, Clone)]
struct FloatList(Vec<f64>);

fn parse_floats(s: &str) -> std::result::Result<FloatList, String> {
    parse_list(s).map(FloatList)
}

fn parse_resolution(s: &str) -> std::result::Result<[usize; 2], String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or("expected WIDTHxHEIGHT")?;
    let p = |x: &str| x.trim().parse::<usize>().map_err(|e| e.to_string());
    Ok([p(a)?, p(b)?])
}

#[derive(Debug, Args)]
struct Flags {
    /// JSON configuration document; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    q: Option<u32>,
    #[arg(long)]
    d: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    alpha_re: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    alpha_im: Option<f64>,
    /// `z0,z1,z2` (reals) or `re0,im0,re1,im1,re2,im2`.
    #[arg(long, value_parser = parse_floats, allow_hyphen_values = true)]
    point: Option<FloatList>,
    #[arg(long)]
    max_steps: Option<usize>,
    #[arg(long)]
    max_terms: Option<usize>,
    /// Classifier step budget.
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    target_error: Option<f64>,
    /// Worker threads (beats SKEWDYN_THREADS).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout if absent (required for raster).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    suite: Option<Suite>,
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    n_points: Option<usize>,
    /// Comma-separated |alpha| values for sweep.
    #[arg(long, value_parser = parse_floats)]
    moduli: Option<FloatList>,
    #[arg(long, value_enum)]
    channel: Option<Channel>,
    #[arg(long, value_enum)]
    fixed: Option<Coordinate>,
    /// `WIDTHxHEIGHT` in pixels.
    #[arg(long, value_parser = parse_resolution)]
    resolution: Option<[usize; 2]>,
}

impl Flags {
    fn into_config(self) -> Result<(ConfigFile, Option<usize>)> {
        let mut base = match &self.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let point = match self.point.as_ref().map(|p| p.0.as_slice()) {
            None => None,
            Some([a, b, c]) => Some([[*a, 0.0], [*b, 0.0], [*c, 0.0]]),
            Some([a, b, c, d, e, f]) => Some([[*a, *b], [*c, *d], [*e, *f]]),
            Some(v) => {
                return Err(Error::Config(format!(
                    "--point takes 3 or 6 numbers, got {}",
                    v.len()
                )))
            }
        };
        let mut top = ConfigFile {
            point,
            max_steps: self.max_steps,
            max_terms: self.max_terms,
            budget: self.budget,
            target_error: self.target_error,
            seed: self.seed,
            out: self.out,
            suite: self.suite,
            n_max: self.n_max,
            n_points: self.n_points,
            moduli: self.moduli.map(|m| m.0),
            ..ConfigFile::default()
        };
        top.params.q = self.q;
        top.params.d = self.d;
        if self.alpha_re.is_some() || self.alpha_im.is_some() {
            top.params.alpha = Some([
                self.alpha_re.unwrap_or(f64::NAN),
                self.alpha_im.unwrap_or(f64::NAN),
            ]);
        }
        top.raster.channel = self.channel;
        top.raster.fixed = self.fixed;
        top.raster.resolution = self.resolution;
        base = base.overlay(top);
        Ok((base, self.threads))
    }
}

fn write_out(out: Option<&Path>, bytes: &[u8], stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, bytes)
            .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display()))),
        None => stdout
            .write_all(bytes)
            .map_err(|e| Error::Config(format!("cannot write output: {e}"))),
    }
}

/// Sidecar path of a raster image: `<out>.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn dispatch(command: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let (name, flags) = match command {
        Command::Orbit(f) => ("orbit", f),
        Command::Classify(f) => ("classify", f),
        Command::Green(f) => ("green", f),
        Command::Verify(f) => ("verify", f),
        Command::Sweep(f) => ("sweep", f),
        Command::Raster(f) => ("raster", f),
    };
    let (file, threads) = flags.into_config()?;
    let cfg = RunConfig::resolve(file, threads)?;
    let out = cfg.out.as_deref();
    match name {
        "orbit" => write_out(out, cmd_orbit(&cfg).as_bytes(), stdout)?,
        "classify" => write_out(out, cmd_classify(&cfg).as_bytes(), stdout)?,
        "green" => write_out(out, cmd_green(&cfg).as_bytes(), stdout)?,
        "verify" => {
            let suite = cfg
                .suite
                .ok_or_else(|| Error::Config("verify needs --suite or a \"suite\" field".into()))?;
            let rep = cmd_verify(&cfg, suite)?;
            write_out(out, rep.render().as_bytes(), stdout)?;
            return Ok(if rep.pass() { EXIT_OK } else { EXIT_VERIFY_FAILED });
        }
        "sweep" => {
            let s = cmd_sweep(&cfg)?;
            write_out(out, s.csv.as_bytes(), stdout)?;
            let _ = stderr.write_all(s.summary.as_bytes());
        }
        _ => {
            let path = out.ok_or_else(|| Error::Config("raster needs --out".into()))?;
            let r = cmd_raster(&cfg)?;
            write_out(Some(path), &r.pgm, stdout)?;
            write_out(Some(&sidecar_path(path)), r.sidecar.as_bytes(), stdout)?;
        }
    }
    Ok(EXIT_OK)
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = stderr.write_all(text.as_bytes());
                EXIT_CONFIG
            } else {
                let _ = stdout.write_all(text.as_bytes());
                EXIT_OK
            };
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_CONFIG
        }
    }
}
