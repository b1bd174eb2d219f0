//! Quality metrics for deraining results.
//!
//! Covers the usual trio for this task: PSNR and SSIM of the recovered
//! background against the clean clip, optionally SSIM of the recovered
//! rain layer against the synthesized ground truth, and a residual-energy
//! score. The residual score is this crate's own definition (mean
//! per-frame Frobenius norm of the difference after scaling to 0–255) and
//! is not numerically comparable to residual numbers reported elsewhere.

use ndarray::{Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::tensor::VideoTensor;

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;
/// Dynamic range of the sample domain.
const SSIM_L: f64 = 1.0;

/// One evaluation row: background fidelity plus optional rain-layer
/// similarity when ground-truth rain is available.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub psnr_b: f64,
    pub ssim_b: f64,
    pub ssim_r: Option<f64>,
    pub res_b: f64,
}

fn check_shapes(a: &VideoTensor, reference: &VideoTensor) -> Result<()> {
    if a.shape() != reference.shape() {
        return Err(Error::ShapeMismatch(format!(
            "metric inputs must share a shape, got {:?} vs {:?}",
            a.shape(),
            reference.shape()
        )));
    }
    Ok(())
}

/// Peak signal-to-noise ratio in dB over all voxels, peak value 1.
/// Identical inputs return positive infinity.
pub fn psnr(a: &VideoTensor, reference: &VideoTensor) -> Result<f64> {
    check_shapes(a, reference)?;
    for (name, x) in [("first", a), ("second", reference)] {
        if !x.array().iter().all(|v| (0.0..=1.0).contains(v)) {
            return Err(Error::Data(format!("{name} psnr input has samples outside [0, 1]")));
        }
    }
    let mut sum = 0.0;
    for (av, rv) in a.array().iter().zip(reference.array().iter()) {
        let d = av - rv;
        sum += d * d;
    }
    let mse = sum / a.len() as f64;
    if mse == 0.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(10.0 * (1.0 / mse).log10())
    }
}

fn gaussian_kernel() -> [f64; SSIM_WINDOW] {
    let mut kernel = [0.0; SSIM_WINDOW];
    let mid = (SSIM_WINDOW / 2) as f64;
    let mut total = 0.0;
    for (i, w) in kernel.iter_mut().enumerate() {
        *w = (-0.5 * ((i as f64 - mid) / SSIM_SIGMA).powi(2)).exp();
        total += *w;
    }
    for w in &mut kernel {
        *w /= total;
    }
    kernel
}

/// Valid-region separable filtering: output shrinks by the window minus
/// one along each axis.
fn filter_valid(frame: &ArrayView2<'_, f64>, kernel: &[f64; SSIM_WINDOW]) -> Array2<f64> {
    let (m, n) = frame.dim();
    let nk = n - SSIM_WINDOW + 1;
    let mk = m - SSIM_WINDOW + 1;
    let mut rows = Array2::zeros((m, nk));
    for y in 0..m {
        for x in 0..nk {
            let mut acc = 0.0;
            for (j, w) in kernel.iter().enumerate() {
                acc += w * frame[[y, x + j]];
            }
            rows[[y, x]] = acc;
        }
    }
    let mut out = Array2::zeros((mk, nk));
    for y in 0..mk {
        for x in 0..nk {
            let mut acc = 0.0;
            for (j, w) in kernel.iter().enumerate() {
                acc += w * rows[[y + j, x]];
            }
            out[[y, x]] = acc;
        }
    }
    out
}

fn ssim_frame(a: &ArrayView2<'_, f64>, b: &ArrayView2<'_, f64>, kernel: &[f64; SSIM_WINDOW]) -> f64 {
    let c1 = (SSIM_K1 * SSIM_L).powi(2);
    let c2 = (SSIM_K2 * SSIM_L).powi(2);
    let mu_a = filter_valid(a, kernel);
    let mu_b = filter_valid(b, kernel);
    let aa = filter_valid(&(a * a).view(), kernel);
    let bb = filter_valid(&(b * b).view(), kernel);
    let ab = filter_valid(&(a * b).view(), kernel);

    let mut total = 0.0;
    for ((ma, mb), ((saa, sbb), sab)) in mu_a
        .iter()
        .zip(mu_b.iter())
        .zip(aa.iter().zip(bb.iter()).zip(ab.iter()))
    {
        let va = saa - ma * ma;
        let vb = sbb - mb * mb;
        let cov = sab - ma * mb;
        let num = (2.0 * ma * mb + c1) * (2.0 * cov + c2);
        let den = (ma * ma + mb * mb + c1) * (va + vb + c2);
        total += num / den;
    }
    total / mu_a.len() as f64
}

/// Mean structural similarity: standard single-scale SSIM per frame with
/// an 11-point Gaussian window, averaged over frames.
pub fn ssim(a: &VideoTensor, reference: &VideoTensor) -> Result<f64> {
    check_shapes(a, reference)?;
    let (m, n, t) = a.shape();
    if m < SSIM_WINDOW || n < SSIM_WINDOW {
        return Err(Error::InvalidShape(format!(
            "ssim needs frames of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {m}x{n}"
        )));
    }
    let kernel = gaussian_kernel();
    let mut total = 0.0;
    for f in 0..t {
        let fa = a.array().index_axis(Axis(2), f);
        let fb = reference.array().index_axis(Axis(2), f);
        total += ssim_frame(&fa, &fb, &kernel);
    }
    Ok(total / t as f64)
}

/// Residual energy: mean over frames of the Frobenius norm of the
/// difference scaled to the 0–255 range. Lower is better.
pub fn res(a: &VideoTensor, reference: &VideoTensor) -> Result<f64> {
    check_shapes(a, reference)?;
    let t = a.frames();
    let mut total = 0.0;
    for f in 0..t {
        let fa = a.array().index_axis(Axis(2), f);
        let fb = reference.array().index_axis(Axis(2), f);
        let mut sum = 0.0;
        for (av, rv) in fa.iter().zip(fb.iter()) {
            let d = 255.0 * (av - rv);
            sum += d * d;
        }
        total += sum.sqrt();
    }
    Ok(total / t as f64)
}

/// Builds the full report for a recovered background, with rain-layer
/// similarity included when the `(estimate, truth)` rain pair is given.
pub fn evaluate(
    b_hat: &VideoTensor,
    b_true: &VideoTensor,
    rain_pair: Option<(&VideoTensor, &VideoTensor)>,
) -> Result<MetricsReport> {
    let psnr_b = psnr(b_hat, b_true)?;
    let ssim_b = ssim(b_hat, b_true)?;
    let res_b = res(b_hat, b_true)?;
    let ssim_r = match rain_pair {
        Some((r_hat, r_true)) => Some(ssim(r_hat, r_true)?),
        None => None,
    };
    Ok(MetricsReport { psnr_b, ssim_b, ssim_r, res_b })
}
