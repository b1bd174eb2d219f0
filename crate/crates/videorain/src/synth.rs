//! Reproducible synthetic rain over clean clips.
//!
//! Streaks are additive anti-aliased line segments: each frame draws a
//! Poisson number of streak seeds from a per-frame RNG substream, renders
//! them with the configured geometry, and accumulates them into a
//! nonnegative rain layer. The observation is the clean clip plus rain,
//! clipped at white. The pre-clipping rain layer is returned alongside so
//! synthesized clips come with exact ground truth.

use ndarray::{Array2, Array3, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::tensor::VideoTensor;

/// How streaks relate across frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TemporalMode {
    /// Every frame draws fresh streaks from its own RNG substream.
    #[default]
    IndependentPerFrame,
}

/// Synthesis parameters. Angles are degrees from vertical, positive
/// toward positive x; density counts expected streaks per frame per
/// thousand pixels; intensity is additive brightness.
#[derive(Debug, Clone, PartialEq)]
pub struct RainSynthConfig {
    pub angle_mean_deg: f64,
    /// Per-streak uniform angle jitter half-range.
    pub angle_jitter_deg: f64,
    pub density: f64,
    pub length_mean: f64,
    /// Per-streak uniform length jitter half-range.
    pub length_jitter: f64,
    pub width: f64,
    pub intensity_mean: f64,
    /// Per-streak uniform intensity jitter half-range.
    pub intensity_jitter: f64,
    pub seed: u64,
    pub temporal_mode: TemporalMode,
}

impl Default for RainSynthConfig {
    fn default() -> Self {
        Self::light(0.0, 0)
    }
}

impl RainSynthConfig {
    /// Sparse, faint streaks.
    pub fn light(angle_mean_deg: f64, seed: u64) -> Self {
        RainSynthConfig {
            angle_mean_deg,
            angle_jitter_deg: 5.0,
            density: 0.3,
            length_mean: 12.0,
            length_jitter: 4.0,
            width: 1.2,
            intensity_mean: 0.25,
            intensity_jitter: 0.05,
            seed,
            temporal_mode: TemporalMode::IndependentPerFrame,
        }
    }

    /// Dense, bright streaks.
    pub fn heavy(angle_mean_deg: f64, seed: u64) -> Self {
        RainSynthConfig {
            angle_mean_deg,
            angle_jitter_deg: 5.0,
            density: 1.2,
            length_mean: 16.0,
            length_jitter: 4.0,
            width: 1.5,
            intensity_mean: 0.28,
            intensity_jitter: 0.06,
            seed,
            temporal_mode: TemporalMode::IndependentPerFrame,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.angle_mean_deg.is_finite() || self.angle_mean_deg.abs() >= 90.0 {
            return Err(Error::InvalidParameter(format!(
                "angle mean must satisfy |angle| < 90 degrees, got {}",
                self.angle_mean_deg
            )));
        }
        if !self.angle_jitter_deg.is_finite() || self.angle_jitter_deg < 0.0 {
            return Err(Error::InvalidParameter("angle jitter must be >= 0".into()));
        }
        if !self.density.is_finite() || self.density < 0.0 {
            return Err(Error::InvalidParameter("density must be >= 0".into()));
        }
        if !self.length_mean.is_finite() || self.length_mean <= 0.0 {
            return Err(Error::InvalidParameter("streak length must be positive".into()));
        }
        if !self.length_jitter.is_finite() || self.length_jitter < 0.0 {
            return Err(Error::InvalidParameter("length jitter must be >= 0".into()));
        }
        if !self.width.is_finite() || self.width <= 0.0 {
            return Err(Error::InvalidParameter("streak width must be positive".into()));
        }
        if !self.intensity_mean.is_finite()
            || self.intensity_mean <= 0.0
            || self.intensity_mean > 1.0
        {
            return Err(Error::InvalidParameter(
                "streak intensity must lie in (0, 1]".into(),
            ));
        }
        if !self.intensity_jitter.is_finite() || self.intensity_jitter < 0.0 {
            return Err(Error::InvalidParameter("intensity jitter must be >= 0".into()));
        }
        Ok(())
    }
}

/// One sampled streak, centered at a continuous pixel position.
#[derive(Debug, Clone, PartialEq)]
pub struct Streak {
    pub center_y: f64,
    pub center_x: f64,
    pub angle_deg: f64,
    pub length: f64,
    pub width: f64,
    pub intensity: f64,
}

impl Streak {
    /// Segment endpoints `(y0, x0, y1, x1)`. The segment runs through the
    /// center along `(sin angle, cos angle)` in `(x, y)` with y downward,
    /// so a zero angle gives a vertical streak.
    pub fn endpoints(&self) -> (f64, f64, f64, f64) {
        let (sin, cos) = self.angle_deg.to_radians().sin_cos();
        let half = self.length / 2.0;
        (
            self.center_y - half * cos,
            self.center_x - half * sin,
            self.center_y + half * cos,
            self.center_x + half * sin,
        )
    }
}

/// Draws the streaks of one frame from the substream belonging to that
/// frame, so frames are independent and any frame can be regenerated
/// without replaying the others.
pub fn sample_streaks(
    config: &RainSynthConfig,
    m: usize,
    n: usize,
    frame: usize,
) -> Result<Vec<Streak>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(frame as u64 + 1);

    let mean = config.density * (m * n) as f64 / 1000.0;
    let count = if mean > 0.0 {
        let poisson = Poisson::new(mean)
            .map_err(|e| Error::InvalidParameter(format!("invalid streak density: {e}")))?;
        poisson.sample(&mut rng) as usize
    } else {
        0
    };

    let jitter = |rng: &mut ChaCha8Rng, half: f64| {
        if half > 0.0 {
            rng.gen_range(-half..=half)
        } else {
            0.0
        }
    };
    let mut streaks = Vec::with_capacity(count);
    for _ in 0..count {
        let center_y = rng.gen_range(0.0..m as f64);
        let center_x = rng.gen_range(0.0..n as f64);
        let angle_deg =
            (config.angle_mean_deg + jitter(&mut rng, config.angle_jitter_deg)).clamp(-89.9, 89.9);
        let length = (config.length_mean + jitter(&mut rng, config.length_jitter)).max(1.0);
        let intensity =
            (config.intensity_mean + jitter(&mut rng, config.intensity_jitter)).clamp(1e-3, 1.0);
        streaks.push(Streak {
            center_y,
            center_x,
            angle_deg,
            length,
            width: config.width,
            intensity,
        });
    }
    Ok(streaks)
}

fn point_segment_distance(py: f64, px: f64, ay: f64, ax: f64, by: f64, bx: f64) -> f64 {
    let vy = by - ay;
    let vx = bx - ax;
    let wy = py - ay;
    let wx = px - ax;
    let len2 = vy * vy + vx * vx;
    let t = if len2 > 0.0 {
        ((wy * vy + wx * vx) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let dy = wy - t * vy;
    let dx = wx - t * vx;
    (dy * dy + dx * dx).sqrt()
}

/// Renders streaks into one frame. Coverage falls off linearly over one
/// pixel beyond the streak half-width, which anti-aliases the edges;
/// overlapping streaks accumulate.
pub fn render_streaks(streaks: &[Streak], m: usize, n: usize) -> Array2<f64> {
    let mut frame = Array2::zeros((m, n));
    for streak in streaks {
        let (y0, x0, y1, x1) = streak.endpoints();
        let pad = streak.width / 2.0 + 1.0;
        let ylo_f = (y0.min(y1) - pad).floor();
        let yhi_f = (y0.max(y1) + pad).ceil();
        let xlo_f = (x0.min(x1) - pad).floor();
        let xhi_f = (x0.max(x1) + pad).ceil();
        if yhi_f < 0.0 || xhi_f < 0.0 || ylo_f > (m - 1) as f64 || xlo_f > (n - 1) as f64 {
            continue;
        }
        let ylo = ylo_f.max(0.0) as usize;
        let yhi = (yhi_f as usize).min(m - 1);
        let xlo = xlo_f.max(0.0) as usize;
        let xhi = (xhi_f as usize).min(n - 1);
        for y in ylo..=yhi {
            for x in xlo..=xhi {
                let dist = point_segment_distance(y as f64, x as f64, y0, x0, y1, x1);
                let coverage = (streak.width / 2.0 + 0.5 - dist).clamp(0.0, 1.0);
                if coverage > 0.0 {
                    frame[[y, x]] += coverage * streak.intensity;
                }
            }
        }
    }
    frame
}

/// Synthesizes a rainy observation over a clean clip.
///
/// Returns `(observation, rain)` where the observation is the clean clip
/// plus rain clipped at white, and the rain layer is the pre-clipping
/// accumulation. Deterministic for a given seed.
pub fn synthesize(
    background: &VideoTensor,
    config: &RainSynthConfig,
) -> Result<(VideoTensor, VideoTensor)> {
    config.validate()?;
    if !background.array().iter().all(|v| (0.0..=1.0).contains(v)) {
        return Err(Error::Data("background samples must lie in [0, 1]".into()));
    }
    let (m, n, t) = background.shape();
    let mut rain = Array3::zeros((m, n, t));
    for f in 0..t {
        let streaks = sample_streaks(config, m, n, f)?;
        let frame = render_streaks(&streaks, m, n);
        rain.index_axis_mut(Axis(2), f).assign(&frame);
    }
    let observation = ndarray::Zip::from(background.array())
        .and(&rain)
        .map_collect(|b, r| (b + r).min(1.0));
    Ok((
        VideoTensor::from_array(observation)?,
        VideoTensor::from_array(rain)?,
    ))
}

/// Generates a static, smoothly textured clean clip from a handful of
/// low-frequency waves — a stand-in for real footage in tests and demos.
pub fn textured_background(m: usize, n: usize, t: usize, seed: u64) -> Result<VideoTensor> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<(f64, f64, f64, f64)> = (0..6)
        .map(|_| {
            (
                rng.gen_range(0.5..2.5),
                rng.gen_range(0.5..2.5),
                rng.gen_range(0.0..std::f64::consts::TAU),
                rng.gen_range(0.3..1.0),
            )
        })
        .collect();
    let mut frame = Array2::zeros((m, n));
    for y in 0..m {
        for x in 0..n {
            let mut v = 0.0;
            for &(fy, fx, phase, weight) in &modes {
                let arg = std::f64::consts::TAU
                    * (fy * y as f64 / m as f64 + fx * x as f64 / n as f64)
                    + phase;
                v += weight * arg.sin();
            }
            frame[[y, x]] = v;
        }
    }
    let min = frame.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = frame.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mapped = if max - min > 1e-12 {
        frame.mapv(|v| 0.15 + 0.6 * (v - min) / (max - min))
    } else {
        Array2::from_elem((m, n), 0.45)
    };
    let mut data = Array3::zeros((m, n, t));
    for f in 0..t {
        data.index_axis_mut(Axis(2), f).assign(&mapped);
    }
    VideoTensor::from_array(data)
}
