//! Run configuration: a JSON document plus command-line overrides.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis::DEFAULT_BUDGET;
use crate::dynsys::{Params, Point3};
use crate::parallel::THREADS_ENV;
use crate::{Error, Result};

pub const DEFAULT_MAX_STEPS: usize = 40;
pub const DEFAULT_MAX_TERMS: usize = 200;
pub const DEFAULT_TARGET_ERROR: f64 = 1e-6;
pub const DEFAULT_MODULI: [f64; 4] = [0.3, 0.5, 0.7, 0.9];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Degrees,
    Conjugacy,
    Fibration,
    Centralizer,
    LemmaIdentity,
    GreenEquations,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Degrees => "degrees",
            Suite::Conjugacy => "conjugacy",
            Suite::Fibration => "fibration",
            Suite::Centralizer => "centralizer",
            Suite::LemmaIdentity => "lemma-identity",
            Suite::GreenEquations => "green-equations",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Channel {
    Classification,
    Green,
    GMagnitude,
}

impl Channel {
    pub fn name(self) -> &'static str {
        match self {
            Channel::Classification => "classification",
            Channel::Green => "green",
            Channel::GMagnitude => "g-magnitude",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Coordinate {
    Z0,
    Z1,
    Z2,
}

impl Coordinate {
    pub fn index(self) -> usize {
        self as usize
    }
}

/// `[re, im]`.
pub type Pair = [f64; 2];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsFile {
    pub q: Option<u32>,
    pub d: Option<u32>,
    pub alpha: Option<Pair>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RasterFile {
    pub fixed: Option<Coordinate>,
    pub fixed_value: Option<Pair>,
    pub center: Option<[f64; 2]>,
    pub width: Option<f64>,
    pub height: Option<f64>,
    pub resolution: Option<[usize; 2]>,
    pub channel: Option<Channel>,
    /// Clamp range for the real-valued channels.
    pub clamp: Option<[f64; 2]>,
}

/// The serialized form; every field optional. Command-line flags are parsed
/// into the same shape and laid over the file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub params: ParamsFile,
    pub point: Option<[Pair; 3]>,
    pub max_steps: Option<usize>,
    pub max_terms: Option<usize>,
    pub budget: Option<usize>,
    pub target_error: Option<f64>,
    pub threads: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub suite: Option<Suite>,
    pub n_max: Option<usize>,
    pub n_points: Option<usize>,
    pub moduli: Option<Vec<f64>>,
    pub points: Option<Vec<[Pair; 3]>>,
    #[serde(default)]
    pub raster: RasterFile,
}

fn over<T>(base: Option<T>, top: Option<T>) -> Option<T> {
    top.or(base)
}

impl ConfigFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("bad config document: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Fields set in `top` win.
    pub fn overlay(self, top: ConfigFile) -> ConfigFile {
        let alpha = match (self.params.alpha, top.params.alpha) {
            (b, None) => b,
            (b, Some(t)) => {
                // NaN marks a component the flags left alone
                let b = b.unwrap_or([0.0, 0.0]);
                Some([
                    if t[0].is_nan() { b[0] } else { t[0] },
                    if t[1].is_nan() { b[1] } else { t[1] },
                ])
            }
        };
        let r = self.raster;
        let tr = top.raster;
        ConfigFile {
            params: ParamsFile {
                q: over(self.params.q, top.params.q),
                d: over(self.params.d, top.params.d),
                alpha,
            },
            point: over(self.point, top.point),
            max_steps: over(self.max_steps, top.max_steps),
            max_terms: over(self.max_terms, top.max_terms),
            budget: over(self.budget, top.budget),
            target_error: over(self.target_error, top.target_error),
            threads: over(self.threads, top.threads),
            seed: over(self.seed, top.seed),
            out: over(self.out, top.out),
            suite: over(self.suite, top.suite),
            n_max: over(self.n_max, top.n_max),
            n_points: over(self.n_points, top.n_points),
            moduli: over(self.moduli, top.moduli),
            points: over(self.points, top.points),
            raster: RasterFile {
                fixed: over(r.fixed, tr.fixed),
                fixed_value: over(r.fixed_value, tr.fixed_value),
                center: over(r.center, tr.center),
                width: over(r.width, tr.width),
                height: over(r.height, tr.height),
                resolution: over(r.resolution, tr.resolution),
                channel: over(r.channel, tr.channel),
                clamp: over(r.clamp, tr.clamp),
            },
        }
    }
}

/// A 2D slice of `C^3`: one coordinate fixed, the real parts of the other
/// two spanning the window. Pixel `(0, 0)` is the top-left corner.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterSpec {
    pub fixed: Coordinate,
    pub fixed_value: Complex64,
    pub center: [f64; 2],
    pub width: f64,
    pub height: f64,
    /// `[columns, rows]`.
    pub resolution: [usize; 2],
    pub channel: Channel,
    pub clamp: Option<[f64; 2]>,
}

impl RasterSpec {
    pub fn validate(&self) -> Result<()> {
        if self.resolution.iter().any(|&r| r < 2) {
            return Err(Error::Config(format!(
                "raster resolution must be at least 2 per axis, got {:?}",
                self.resolution
            )));
        }
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if !ok(self.width) || !ok(self.height) {
            return Err(Error::Config(format!(
                "degenerate raster window {} x {}",
                self.width, self.height
            )));
        }
        if !(self.center.iter().all(|c| c.is_finite()) && self.fixed_value.is_finite()) {
            return Err(Error::Config("raster window must be finite".into()));
        }
        if let Some([lo, hi]) = self.clamp {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Config(format!("bad clamp range [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    /// The two free coordinates, in increasing index order.
    pub fn axes(&self) -> [usize; 2] {
        match self.fixed {
            Coordinate::Z0 => [1, 2],
            Coordinate::Z1 => [0, 2],
            Coordinate::Z2 => [0, 1],
        }
    }

    /// Point sampled at column `i`, row `j`; the window edges are sampled.
    pub fn pixel_point(&self, i: usize, j: usize) -> Point3 {
        let [nx, ny] = self.resolution;
        let x = self.center[0] + self.width * (i as f64 / (nx - 1) as f64 - 0.5);
        let y = self.center[1] + self.height * (0.5 - j as f64 / (ny - 1) as f64);
        let mut z = [Complex64::new(0.0, 0.0); 3];
        z[self.fixed.index()] = self.fixed_value;
        let [ax, ay] = self.axes();
        z[ax] = Complex64::new(x, 0.0);
        z[ay] = Complex64::new(y, 0.0);
        Point3::new(z[0], z[1], z[2])
    }
}

/// Validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: Params,
    pub point: Point3,
    pub max_steps: usize,
    pub max_terms: usize,
    pub budget: usize,
    pub target_error: f64,
    pub threads: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub suite: Option<Suite>,
    pub n_max: Option<usize>,
    pub n_points: Option<usize>,
    pub moduli: Vec<f64>,
    pub points: Option<Vec<Point3>>,
    pub raster: RasterSpec,
}

fn to_point(p: &[Pair; 3]) -> Result<Point3> {
    if p.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Config("point coordinates must be finite".into()));
    }
    let c = |z: &Pair| Complex64::new(z[0], z[1]);
    Ok(Point3::new(c(&p[0]), c(&p[1]), c(&p[2])))
}

impl RunConfig {
    /// Worker count: `flag_threads` (command line), then the environment
    /// variable, then the file.
    pub fn resolve(file: ConfigFile, flag_threads: Option<usize>) -> Result<Self> {
        let alpha = file.params.alpha.unwrap_or([0.9, 0.0]);
        let params = Params::new(
            file.params.q.unwrap_or(2),
            file.params.d.unwrap_or(1),
            Complex64::new(alpha[0], alpha[1]),
        )?;
        let env_threads = match std::env::var(THREADS_ENV) {
            Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| {
                Error::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))
            })?),
            Err(_) => None,
        };
        let threads = flag_threads.or(env_threads).or(file.threads).unwrap_or(1);
        if threads < 1 {
            return Err(Error::Config("parallelism must be at least 1".into()));
        }
        let target_error = file.target_error.unwrap_or(DEFAULT_TARGET_ERROR);
        if !(target_error > 0.0 && target_error.is_finite()) {
            return Err(Error::Config(format!("target_error must be positive, got {target_error}")));
        }
        let budget = file.budget.unwrap_or(DEFAULT_BUDGET);
        if budget == 0 {
            return Err(Error::Config("budget must be positive".into()));
        }
        let moduli = file.moduli.unwrap_or_else(|| DEFAULT_MODULI.to_vec());
        for &m in &moduli {
            Params::real(params.q(), params.d(), m)?;
        }
        let points = file
            .points
            .map(|ps| ps.iter().map(to_point).collect::<Result<Vec<_>>>())
            .transpose()?;
        let r = file.raster;
        let fv = r.fixed_value.unwrap_or([0.0, 0.0]);
        let raster = RasterSpec {
            fixed: r.fixed.unwrap_or(Coordinate::Z2),
            fixed_value: Complex64::new(fv[0], fv[1]),
            center: r.center.unwrap_or([0.0, 0.0]),
            width: r.width.unwrap_or(4.0),
            height: r.height.unwrap_or(4.0),
            resolution: r.resolution.unwrap_or([64, 64]),
            channel: r.channel.unwrap_or(Channel::Classification),
            clamp: r.clamp,
        };
        Ok(Self {
            params,
            point: to_point(&file.point.unwrap_or([[10.0, 0.0], [5.0, 0.0], [1.0, 0.0]]))?,
            max_steps: file.max_steps.unwrap_or(DEFAULT_MAX_STEPS),
            max_terms: file.max_terms.unwrap_or(DEFAULT_MAX_TERMS),
            budget,
            target_error,
            threads,
            seed: file.seed.unwrap_or(0),
            out: file.out,
            suite: file.suite,
            n_max: file.n_max,
            n_points: file.n_points,
            moduli,
            points,
            raster,
        })
    }
}
