//! 16-bit PGM rendering of a 2D slice.

use serde_json::{json, Value};

use super::config::{Channel, RasterSpec, RunConfig};
use super::format::{complex, num};
use crate::analysis::{classify, series_g, SeriesOutcome, Verdict};
use crate::green::green_plus;
use crate::parallel::par_map;
use crate::Result;

/// Gray level of each verdict, in [`Verdict::index`] order.
pub const GRAY_LEVELS: [u16; 4] = [0, 21845, 43690, 65535];

pub fn gray_level(v: Verdict) -> u16 {
    GRAY_LEVELS[v.index()]
}

#[derive(Debug, Clone, PartialEq)]
pub struct RasterOutput {
    pub pgm: Vec<u8>,
    pub sidecar: String,
    /// Row-major samples as written.
    pub samples: Vec<u16>,
}

enum Pixel {
    Verdict(Verdict),
    Value(f64),
}

fn pixel(cfg: &RunConfig, spec: &RasterSpec, i: usize, j: usize) -> Pixel {
    let p = spec.pixel_point(i, j);
    match spec.channel {
        Channel::Classification => Pixel::Verdict(classify(&cfg.params, &p, cfg.budget).verdict),
        Channel::Green => Pixel::Value(green_plus(&cfg.params, &p, cfg.target_error).value),
        Channel::GMagnitude => Pixel::Value(match series_g(&cfg.params, &p, cfg.max_terms).outcome {
            SeriesOutcome::Converged(g) | SeriesOutcome::Unknown(g) => g.norm(),
            SeriesOutcome::Diverged => f64::INFINITY,
        }),
    }
}

fn encode(width: usize, height: usize, samples: &[u16]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n65535\n").into_bytes();
    out.reserve(samples.len() * 2);
    for s in samples {
        out.extend_from_slice(&s.to_be_bytes());
    }
    out
}

/// Rows are computed in parallel and gathered in order.
pub fn cmd_raster(cfg: &RunConfig) -> Result<RasterOutput> {
    let spec = &cfg.raster;
    spec.validate()?;
    let [nx, ny] = spec.resolution;
    let rows: Vec<usize> = (0..ny).collect();
    let pixels: Vec<Pixel> = par_map(&rows, cfg.threads, |&j| {
        (0..nx).map(|i| pixel(cfg, spec, i, j)).collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect();

    let mut range = Value::Null;
    let mut histogram = Value::Null;
    let samples: Vec<u16> = match spec.channel {
        Channel::Classification => {
            let mut h = [0usize; 4];
            let s = pixels
                .iter()
                .map(|p| match p {
                    Pixel::Verdict(v) => {
                        h[v.index()] += 1;
                        gray_level(*v)
                    }
                    Pixel::Value(_) => unreachable!("classification channel"),
                })
                .collect();
            histogram = Value::Object(
                Verdict::ALL
                    .iter()
                    .map(|v| (v.as_str().to_string(), json!(h[v.index()])))
                    .collect(),
            );
            s
        }
        Channel::Green | Channel::GMagnitude => {
            let vals: Vec<f64> = pixels
                .iter()
                .map(|p| match p {
                    Pixel::Value(x) => *x,
                    Pixel::Verdict(_) => unreachable!("value channel"),
                })
                .collect();
            let [lo, hi] = spec.clamp.unwrap_or_else(|| {
                let finite = vals.iter().copied().filter(|x| x.is_finite());
                let lo = finite.clone().fold(f64::INFINITY, f64::min);
                let hi = finite.fold(f64::NEG_INFINITY, f64::max);
                if lo.is_finite() { [lo, hi] } else { [0.0, 0.0] }
            });
            range = json!({"min": num(lo), "max": num(hi)});
            vals.iter()
                .map(|&x| {
                    if x.is_nan() || hi <= lo {
                        return if x.is_nan() { u16::MAX } else { 0 };
                    }
                    let t = (x.clamp(lo, hi) - lo) / (hi - lo);
                    (t * 65535.0).round() as u16
                })
                .collect()
        }
    };

    let [ax, ay] = spec.axes();
    let sidecar = json!({
        "command": "raster",
        "format": "pgm-p5",
        "maxval": 65535,
        "width": nx,
        "height": ny,
        "channel": spec.channel.name(),
        "params": {"q": cfg.params.q(), "d": cfg.params.d(), "alpha": complex(cfg.params.alpha())},
        "slice": {
            "fixed": format!("z{}", spec.fixed.index()),
            "fixed_value": complex(spec.fixed_value),
            "x_axis": format!("re z{ax}"),
            "y_axis": format!("re z{ay}"),
            "center": [num(spec.center[0]), num(spec.center[1])],
            "window_width": num(spec.width),
            "window_height": num(spec.height),
        },
        "budget": cfg.budget,
        "max_terms": cfg.max_terms,
        "target_error": num(cfg.target_error),
        "gray_levels": Value::Object(
            Verdict::ALL
                .iter()
                .map(|v| (v.as_str().to_string(), json!(gray_level(*v))))
                .collect(),
        ),
        "value_range": range,
        "histogram": histogram,
    });
    let mut sidecar = serde_json::to_string_pretty(&sidecar).expect("json values serialize");
    sidecar.push('\n');
    Ok(RasterOutput {
        pgm: encode(nx, ny, &samples),
        sidecar,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_byte_order() {
        let bytes = encode(2, 1, &[1, 0x0203]);
        assert_eq!(&bytes[..], b"P5\n2 1\n65535\n\x00\x01\x02\x03");
    }
}
