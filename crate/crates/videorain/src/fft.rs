//! Discrete Fourier transforms over video tensors.
//!
//! `fft3` is the unnormalized forward 3-D DFT; `ifft3` applies the inverse
//! and scales by `1/(m*n*t)`, so `ifft3(fft3(x)) == x` up to roundoff. The
//! circular difference operators of [`crate::tensor`] are diagonal in this
//! basis with per-axis eigenvalues `exp(2*pi*i*k/len) - 1`.

use ndarray::{Array2, Array3, ArrayView2, Axis};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::tensor::VideoTensor;

/// Relative bound on the imaginary residue tolerated when an inverse
/// transform is expected to produce a real tensor.
const IMAG_RESIDUE_TOL: f64 = 1e-8;

enum Direction {
    Forward,
    Inverse,
}

fn plan(planner: &mut FftPlanner<f64>, len: usize, dir: &Direction) -> Arc<dyn Fft<f64>> {
    match dir {
        Direction::Forward => planner.plan_fft_forward(len),
        Direction::Inverse => planner.plan_fft_inverse(len),
    }
}

fn transform_axes(data: &mut Array3<Complex64>, dir: Direction) {
    let mut planner = FftPlanner::new();
    for axis in [Axis(0), Axis(1), Axis(2)] {
        let len = data.len_of(axis);
        if len == 1 {
            continue;
        }
        let fft = plan(&mut planner, len, &dir);
        let mut buf = vec![Complex64::default(); len];
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        for mut lane in data.lanes_mut(axis) {
            for (b, v) in buf.iter_mut().zip(lane.iter()) {
                *b = *v;
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            for (v, b) in lane.iter_mut().zip(buf.iter()) {
                *v = *b;
            }
        }
    }
}

/// Forward 3-D DFT of a real tensor.
pub fn fft3(x: &VideoTensor) -> Array3<Complex64> {
    let mut c = x.array().mapv(|v| Complex64::new(v, 0.0));
    transform_axes(&mut c, Direction::Forward);
    c
}

/// Inverse 3-D DFT returning a real tensor. The input must be (numerically)
/// conjugate symmetric; the imaginary residue is checked against a relative
/// bound before being discarded.
pub fn ifft3(spectrum: &Array3<Complex64>) -> Result<VideoTensor> {
    let mut c = spectrum.clone();
    transform_axes(&mut c, Direction::Inverse);
    let scale = 1.0 / (c.len() as f64);
    let mut max_re = 0.0_f64;
    let mut max_im = 0.0_f64;
    let re = c.mapv(|z| {
        let r = z.re * scale;
        max_re = max_re.max(r.abs());
        max_im = max_im.max((z.im * scale).abs());
        r
    });
    if !max_im.is_finite() || max_im > IMAG_RESIDUE_TOL * max_re.max(1.0) {
        return Err(Error::Numerical(format!(
            "inverse FFT imaginary residue {max_im:.3e} exceeds tolerance"
        )));
    }
    VideoTensor::from_array(re)
}

/// Forward 2-D DFT of a single frame.
pub fn fft2(frame: ArrayView2<'_, f64>) -> Array2<Complex64> {
    let (m, n) = frame.dim();
    let mut c = frame.mapv(|v| Complex64::new(v, 0.0));
    let mut planner = FftPlanner::new();
    for (axis, len) in [(Axis(0), m), (Axis(1), n)] {
        if len == 1 {
            continue;
        }
        let fft = planner.plan_fft_forward(len);
        let mut buf = vec![Complex64::default(); len];
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        for mut lane in c.lanes_mut(axis) {
            for (b, v) in buf.iter_mut().zip(lane.iter()) {
                *b = *v;
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            for (v, b) in lane.iter_mut().zip(buf.iter()) {
                *v = *b;
            }
        }
    }
    c
}

/// Eigenvalues of the circular forward difference on an axis of length
/// `len`: `exp(2*pi*i*k/len) - 1` for `k = 0..len`. A singleton axis maps to
/// the zero operator.
pub fn diff_symbol(len: usize) -> Vec<Complex64> {
    if len == 1 {
        return vec![Complex64::new(0.0, 0.0)];
    }
    (0..len)
        .map(|k| {
            let phase = 2.0 * std::f64::consts::PI * (k as f64) / (len as f64);
            Complex64::new(phase.cos() - 1.0, phase.sin())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{diff, DiffAxis};
    use ndarray::Array3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_tensor(rng: &mut ChaCha8Rng, m: usize, n: usize, t: usize) -> VideoTensor {
        let data = Array3::from_shape_fn((m, n, t), |_| rng.gen_range(-1.0..1.0));
        VideoTensor::from_array(data).unwrap()
    }

    #[test]
    fn delta_has_flat_modulus() {
        let mut v = VideoTensor::zeros(4, 3, 2).unwrap();
        v.array_mut()[[0, 0, 0]] = 1.0;
        let spec = fft3(&v);
        for z in spec.iter() {
            assert!((z.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn round_trip_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for (m, n, t) in [(4, 4, 3), (5, 7, 2), (8, 6, 1), (6, 5, 4)] {
            let v = random_tensor(&mut rng, m, n, t);
            let back = ifft3(&fft3(&v)).unwrap();
            assert!((&back - &v).max_abs() < 1e-10);
        }
    }

    #[test]
    fn forward_diff_is_diagonalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let v = random_tensor(&mut rng, 6, 5, 4);
        let (m, n, t) = v.shape();
        let spec = fft3(&v);
        for (axis, sizes) in [
            (DiffAxis::Y, diff_symbol(m)),
            (DiffAxis::X, diff_symbol(n)),
            (DiffAxis::T, diff_symbol(t)),
        ] {
            let lhs = fft3(&diff(&v, axis));
            let mut max_err = 0.0_f64;
            for ((y, x, f), z) in lhs.indexed_iter() {
                let sym = match axis {
                    DiffAxis::Y => sizes[y],
                    DiffAxis::X => sizes[x],
                    DiffAxis::T => sizes[f],
                };
                max_err = max_err.max((z - spec[[y, x, f]] * sym).norm());
            }
            assert!(max_err < 1e-8, "axis {axis:?}: {max_err}");
        }
    }

    #[test]
    fn asymmetric_spectrum_is_rejected() {
        let mut spec = Array3::from_elem((4, 4, 2), Complex64::new(0.0, 0.0));
        spec[[1, 0, 0]] = Complex64::new(0.0, 3.0);
        assert!(ifft3(&spec).is_err());
    }

    #[test]
    fn fft2_matches_fft3_on_single_frame() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let v = random_tensor(&mut rng, 6, 7, 1);
        let by3 = fft3(&v);
        let by2 = fft2(v.array().index_axis(Axis(2), 0));
        let mut max_err = 0.0_f64;
        for ((y, x), z) in by2.indexed_iter() {
            max_err = max_err.max((z - by3[[y, x, 0]]).norm());
        }
        assert!(max_err < 1e-10);
    }
}
