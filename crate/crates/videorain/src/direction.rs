//! Rain-streak angle estimation from the Fourier magnitude spectrum.
//!
//! Rain streaks are elongated and near-parallel, so their spectral energy
//! concentrates along the line through the origin perpendicular to the
//! streak direction. The estimator isolates rain by subtracting the
//! per-pixel temporal median (falling back to a blur-based high pass for
//! very short clips), Hann-windows each frame, averages the frame
//! magnitude spectra with the DC cross suppressed, and sweeps candidate
//! lines at half-degree resolution for the spectral ridge.

use ndarray::{Array2, Array3, ArrayView2, Axis};

use crate::fft::fft2;
use crate::operators::RainAngle;
use crate::tensor::VideoTensor;

/// Half-width, in frequency bins, of the zeroed band around the central
/// row and column of the spectrum. Zero keeps the suppression to the exact
/// central row and column: near-vertical and near-horizontal streaks put
/// their genuine ridge right next to the axes, so a wider band would eat it.
const DC_CROSS_HALF_WIDTH: usize = 0;
/// Sweep resolution in degrees.
const ANGLE_STEP_DEG: f64 = 0.5;
/// Triangular smoothing half-width, in sweep steps, applied circularly to
/// the line-energy profile before taking its maximizer. Wide enough to
/// bridge the notch the axis suppression cuts into a ridge that straddles
/// an axis, narrow enough not to displace ordinary peaks.
const PROFILE_SMOOTH_HALF_STEPS: usize = 4;
/// Gaussian sigma of the high-pass fallback used when the clip is too
/// short for a temporal median.
const FALLBACK_BLUR_SIGMA: f64 = 1.5;

/// Estimates the dominant streak angle of a rainy clip.
///
/// The angle is measured from the vertical axis, positive toward
/// positive x. Degenerate inputs (constant clips, or frames too small to
/// sample any spectral line) return a vertical angle with confidence 0.
pub fn estimate_angle(o: &VideoTensor) -> RainAngle {
    let degenerate = RainAngle::with_confidence(0.0, 0.0).expect("degenerate angle is valid");
    let (m, n, t) = o.shape();
    let r_max = (m.min(n) / 2).saturating_sub(1);
    if r_max < 2 {
        return degenerate;
    }

    let residual = rain_residual(o);
    let window = hann_window(m, n);
    let mut spectrum = Array2::<f64>::zeros((m, n));
    for f in 0..t {
        let windowed = &residual.index_axis(Axis(2), f) * &window;
        let transform = fft2(windowed.view());
        spectrum.zip_mut_with(&transform, |s, z| *s += z.norm());
    }
    spectrum /= t as f64;
    suppress_dc_cross(&mut spectrum);

    let candidates = (180.0 / ANGLE_STEP_DEG) as usize - 1;
    let mut energies = Vec::with_capacity(candidates);
    for i in 0..candidates {
        let phi = (-89.5 + ANGLE_STEP_DEG * i as f64).to_radians();
        let (sin, cos) = phi.sin_cos();
        let mut energy = 0.0;
        for r in 2..=r_max {
            let r = r as f64;
            energy += sample_off_axis(&spectrum, r * cos, r * sin, 1.0);
            energy += sample_off_axis(&spectrum, -r * cos, -r * sin, -1.0);
        }
        energies.push(energy);
    }
    let energies = smooth_profile(&energies);

    let mut best = 0;
    let mut emax = f64::NEG_INFINITY;
    let mut emin = f64::INFINITY;
    let mut sum = 0.0;
    for (i, &e) in energies.iter().enumerate() {
        if e > emax {
            emax = e;
            best = i;
        }
        emin = emin.min(e);
        sum += e;
    }
    if !emax.is_finite() || !emin.is_finite() || emax <= 0.0 || emax - emin <= 0.0 {
        return degenerate;
    }

    let phi_star = -89.5 + ANGLE_STEP_DEG * best as f64;
    let theta = if phi_star > 0.0 { phi_star - 90.0 } else { phi_star + 90.0 };
    let theta = theta.clamp(-89.75, 89.75);
    let mean = sum / energies.len() as f64;
    let confidence = ((emax - mean) / (emax - emin)).clamp(0.0, 1.0);
    RainAngle::with_confidence(theta, confidence).expect("angle in range by construction")
}

/// Rain-dominant residual: each frame minus the per-pixel temporal median,
/// clamped at zero since rain only brightens. Clips shorter than three
/// frames have no useful median, so a Gaussian high pass stands in.
fn rain_residual(o: &VideoTensor) -> Array3<f64> {
    let (m, n, t) = o.shape();
    let a = o.array();
    let mut out = Array3::zeros((m, n, t));
    if t >= 3 {
        let mut samples = vec![0.0; t];
        for y in 0..m {
            for x in 0..n {
                for f in 0..t {
                    samples[f] = a[[y, x, f]];
                }
                samples.sort_by(|p, q| p.partial_cmp(q).expect("tensor values are finite"));
                let median = if t % 2 == 1 {
                    samples[t / 2]
                } else {
                    0.5 * (samples[t / 2 - 1] + samples[t / 2])
                };
                for f in 0..t {
                    out[[y, x, f]] = (a[[y, x, f]] - median).max(0.0);
                }
            }
        }
    } else {
        for f in 0..t {
            let frame = a.index_axis(Axis(2), f);
            let blurred = gaussian_blur(frame, FALLBACK_BLUR_SIGMA);
            let mut slot = out.index_axis_mut(Axis(2), f);
            slot.assign(&frame);
            slot.zip_mut_with(&blurred, |v, b| *v = (*v - b).max(0.0));
        }
    }
    out
}

/// Separable Gaussian blur with periodic boundary handling.
fn gaussian_blur(frame: ArrayView2<'_, f64>, sigma: f64) -> Array2<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let mut kernel = Vec::with_capacity(2 * radius as usize + 1);
    for k in -radius..=radius {
        kernel.push((-0.5 * (k as f64 / sigma).powi(2)).exp());
    }
    let total: f64 = kernel.iter().sum();
    for w in &mut kernel {
        *w /= total;
    }

    let (m, n) = frame.dim();
    let mut horizontal = Array2::zeros((m, n));
    for y in 0..m {
        for x in 0..n {
            let mut acc = 0.0;
            for (j, w) in kernel.iter().enumerate() {
                let dx = j as isize - radius;
                let xx = (x as isize + dx).rem_euclid(n as isize) as usize;
                acc += w * frame[[y, xx]];
            }
            horizontal[[y, x]] = acc;
        }
    }
    let mut blurred = Array2::zeros((m, n));
    for y in 0..m {
        for x in 0..n {
            let mut acc = 0.0;
            for (j, w) in kernel.iter().enumerate() {
                let dy = j as isize - radius;
                let yy = (y as isize + dy).rem_euclid(m as isize) as usize;
                acc += w * horizontal[[yy, x]];
            }
            blurred[[y, x]] = acc;
        }
    }
    blurred
}

/// Outer product of periodic Hann windows along both frame axes.
fn hann_window(m: usize, n: usize) -> Array2<f64> {
    let axis = |len: usize, i: usize| {
        0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / len as f64).cos())
    };
    Array2::from_shape_fn((m, n), |(y, x)| axis(m, y) * axis(n, x))
}

/// Circular triangular smoothing of the line-energy profile. The sweep
/// covers one 180-degree period of line directions, so the profile wraps.
fn smooth_profile(energies: &[f64]) -> Vec<f64> {
    let len = energies.len() as isize;
    let h = PROFILE_SMOOTH_HALF_STEPS as isize;
    let norm: f64 = (-h..=h).map(|d| (h + 1 - d.abs()) as f64).sum();
    (0..len)
        .map(|i| {
            let mut acc = 0.0;
            for d in -h..=h {
                let w = (h + 1 - d.abs()) as f64;
                let j = (i + d).rem_euclid(len) as usize;
                acc += w * energies[j];
            }
            acc / norm
        })
        .collect()
}

/// Zeroes the rows and columns whose centered frequency index is within
/// the suppression half-width of zero.
fn suppress_dc_cross(spectrum: &mut Array2<f64>) {
    let (m, n) = spectrum.dim();
    for ((y, x), v) in spectrum.indexed_iter_mut() {
        if y.min(m - y) <= DC_CROSS_HALF_WIDTH || x.min(n - x) <= DC_CROSS_HALF_WIDTH {
            *v = 0.0;
        }
    }
}

/// Samples the spectrum at a centered frequency coordinate, keeping the
/// sample off the suppressed central row and column: a coordinate that
/// falls within one bin of a zeroed axis line would otherwise interpolate
/// against zeros and erase the genuine ridge of near-axis streaks, so it
/// clamps outward to the first live bin on its own side (`fallback_sign`
/// picks the side for an exactly-zero coordinate).
fn sample_off_axis(spectrum: &Array2<f64>, row: f64, col: f64, fallback_sign: f64) -> f64 {
    let live = (DC_CROSS_HALF_WIDTH + 1) as f64;
    let clamp = |c: f64| -> f64 {
        if c.abs() >= live {
            c
        } else if c > 0.0 {
            live
        } else if c < 0.0 {
            -live
        } else {
            live * fallback_sign
        }
    };
    sample_periodic(spectrum, clamp(row), clamp(col))
}

/// Bilinear sample of a periodic 2-D array at fractional (row, column)
/// coordinates; negative coordinates wrap.
fn sample_periodic(values: &Array2<f64>, row: f64, col: f64) -> f64 {
    let (m, n) = values.dim();
    let row = row.rem_euclid(m as f64);
    let col = col.rem_euclid(n as f64);
    let y0 = (row.floor() as usize) % m;
    let x0 = (col.floor() as usize) % n;
    let fy = row - row.floor();
    let fx = col - col.floor();
    let y1 = (y0 + 1) % m;
    let x1 = (x0 + 1) % n;
    (1.0 - fy) * ((1.0 - fx) * values[[y0, x0]] + fx * values[[y0, x1]])
        + fy * ((1.0 - fx) * values[[y1, x0]] + fx * values[[y1, x1]])
}
