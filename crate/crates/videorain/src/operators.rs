//! Proximal operators and the directional total-variation transform.
//!
//! The solver splits its objective into pieces whose proximal maps are
//! cheap: elementwise soft thresholding for L1 terms, singular value
//! thresholding for nuclear-norm terms, and a dual projected-ascent loop for
//! the directional TV term.

use nalgebra::DMatrix;
use ndarray::Array2;

use crate::error::{Error, Result};
use crate::tensor::{adjoint_diff, diff, DiffAxis, VideoTensor, EPS_DENOM};

/// Inner stopping threshold for [`dtv_prox`]: relative change of the primal
/// iterate between passes. Tight enough that a generous iteration budget
/// runs essentially to convergence; small budgets exhaust first anyway.
const PROX_REL_TOL: f64 = 1e-6;

/// Rain streak orientation, measured in degrees from the vertical axis,
/// positive toward positive x (image right). Zero is vertically falling
/// rain; the magnitude must stay below 90.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RainAngle {
    degrees: f64,
    confidence: f64,
}

impl RainAngle {
    /// Angle known exactly (confidence 1).
    pub fn from_degrees(degrees: f64) -> Result<Self> {
        Self::with_confidence(degrees, 1.0)
    }

    /// Angle with an attached confidence in `[0, 1]`.
    pub fn with_confidence(degrees: f64, confidence: f64) -> Result<Self> {
        if !degrees.is_finite() || degrees.abs() >= 90.0 {
            return Err(Error::InvalidParameter(format!(
                "rain angle must satisfy |theta| < 90 degrees, got {degrees}"
            )));
        }
        if !confidence.is_finite() || !(0.0..=1.0).contains(&confidence) {
            return Err(Error::InvalidParameter(format!(
                "angle confidence must lie in [0, 1], got {confidence}"
            )));
        }
        Ok(RainAngle { degrees, confidence })
    }

    pub fn vertical() -> Self {
        RainAngle { degrees: 0.0, confidence: 1.0 }
    }

    pub fn degrees(&self) -> f64 {
        self.degrees
    }

    pub fn radians(&self) -> f64 {
        self.degrees.to_radians()
    }

    pub fn confidence(&self) -> f64 {
        self.confidence
    }
}

/// Elementwise soft threshold: `sign(v) * max(|v| - tau, 0)`.
pub fn soft_threshold(x: &VideoTensor, tau: f64) -> Result<VideoTensor> {
    if !tau.is_finite() || tau < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "soft threshold needs tau >= 0, got {tau}"
        )));
    }
    Ok(x.map(|v| soft_scalar(v, tau)))
}

pub(crate) fn soft_scalar(v: f64, tau: f64) -> f64 {
    v.signum() * (v.abs() - tau).max(0.0)
}

fn to_dmatrix(a: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

fn to_array2(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Singular value thresholding: soft thresholds the singular values of `mat`
/// at `tau` and recomposes.
///
/// Factored through the Gram matrix of the thin side instead of a full SVD:
/// one symmetric eigendecomposition yields coherent singular vectors even on
/// the wide, nearly rank-deficient unfoldings this runs on, where a
/// bidiagonalization SVD can hand back factors that do not multiply back to
/// the input.
pub fn svt(mat: &Array2<f64>, tau: f64) -> Result<Array2<f64>> {
    if !tau.is_finite() || tau < 0.0 {
        return Err(Error::InvalidParameter(format!("svt needs tau >= 0, got {tau}")));
    }
    if !mat.iter().all(|v| v.is_finite()) {
        return Err(Error::Numerical("svt input contains non-finite values".into()));
    }
    if tau == 0.0 {
        return Ok(mat.clone());
    }
    let a = to_dmatrix(mat);
    let wide = a.nrows() <= a.ncols();
    let gram = if wide { &a * a.transpose() } else { a.transpose() * &a };
    let eig = nalgebra::linalg::SymmetricEigen::try_new(gram, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("eigendecomposition failed to converge".into()))?;
    // Scale each singular direction by (sigma - tau)+ / sigma, sigma^2 being
    // the Gram eigenvalue; directions at or below tau drop out entirely.
    let mut shrunk = eig.eigenvectors.clone();
    for (j, lambda) in eig.eigenvalues.iter().enumerate() {
        let sigma = lambda.max(0.0).sqrt();
        let factor = if sigma > tau { (sigma - tau) / sigma } else { 0.0 };
        shrunk.column_mut(j).scale_mut(factor);
    }
    let projector = shrunk * eig.eigenvectors.transpose();
    let rec = if wide { projector * a } else { a * projector };
    Ok(to_array2(&rec))
}

/// Sum of singular values of `mat`.
pub fn nuclear_norm(mat: &Array2<f64>) -> Result<f64> {
    if !mat.iter().all(|v| v.is_finite()) {
        return Err(Error::Numerical("nuclear norm input contains non-finite values".into()));
    }
    let svd = nalgebra::linalg::SVD::try_new(to_dmatrix(mat), false, false, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("SVD failed to converge".into()))?;
    Ok(svd.singular_values.iter().sum())
}

/// Directional derivative along the streak orientation,
/// `cos(theta) * diff_y + sin(theta) * diff_x`, applied per frame.
pub fn dtv_apply(x: &VideoTensor, angle: RainAngle) -> VideoTensor {
    let (s, c) = angle.radians().sin_cos();
    &diff(x, DiffAxis::Y).scale(c) + &diff(x, DiffAxis::X).scale(s)
}

/// Adjoint of [`dtv_apply`].
pub fn dtv_adjoint(x: &VideoTensor, angle: RainAngle) -> VideoTensor {
    let (s, c) = angle.radians().sin_cos();
    &adjoint_diff(x, DiffAxis::Y).scale(c) + &adjoint_diff(x, DiffAxis::X).scale(s)
}

fn dtv_objective(d: &VideoTensor, v: &VideoTensor, lambda: f64, angle: RainAngle) -> f64 {
    let fit = (d - v).frob_norm();
    lambda * dtv_apply(d, angle).l1_norm() + 0.5 * fit * fit
}

/// Approximate proximal map of `lambda * ||directional TV||_1` at `v`:
/// `argmin_d lambda * ||grad_theta d||_1 + 0.5 * ||d - v||_F^2`.
///
/// Solved by projected gradient ascent on the box-constrained dual with step
/// size 1/8 (safe since the squared operator norm of the directional
/// gradient is at most 8). Iteration stops once the relative change of the
/// primal iterate becomes negligible or `inner` passes have run. The best
/// iterate seen is returned, so the objective at the output never exceeds
/// the objective at `v` itself.
pub fn dtv_prox(v: &VideoTensor, lambda: f64, angle: RainAngle, inner: usize) -> Result<VideoTensor> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "dtv_prox needs lambda >= 0, got {lambda}"
        )));
    }
    if lambda == 0.0 {
        return Ok(v.clone());
    }
    let mut dual = VideoTensor::zeros_like(v);
    let mut primal = v.clone();
    let mut best = v.clone();
    let mut best_obj = dtv_objective(v, v, lambda, angle);
    for _ in 0..inner {
        let ascent = dtv_apply(&primal, angle).scale(1.0 / (8.0 * lambda));
        dual = (&dual + &ascent).map(|p| p.clamp(-1.0, 1.0));
        let next = v - &dtv_adjoint(&dual, angle).scale(lambda);
        let obj = dtv_objective(&next, v, lambda, angle);
        if obj < best_obj {
            debug_assert!(obj.is_finite());
            best_obj = obj;
            best = next.clone();
        }
        let change = (&next - &primal).frob_norm() / primal.frob_norm().max(EPS_DENOM);
        primal = next;
        if change < PROX_REL_TOL {
            break;
        }
    }
    Ok(best)
}

#[cfg(test)]
pub(crate) mod test_oracles {
    use super::soft_scalar;
    use ndarray::Array2;

    // One-sided Jacobi SVD followed by soft thresholding of the singular
    // values, written independently of the nalgebra-backed implementation.
    pub fn jacobi_soft_reconstruct(mat: &Array2<f64>, tau: f64) -> Array2<f64> {
        let (rows, cols) = mat.dim();
        if rows < cols {
            let t = jacobi_soft_reconstruct(&mat.t().to_owned(), tau);
            return t.t().to_owned();
        }
        let mut w = mat.clone();
        let mut v = Array2::<f64>::eye(cols);
        for _ in 0..60 {
            let mut rotated = false;
            for p in 0..cols {
                for q in (p + 1)..cols {
                    let mut app = 0.0;
                    let mut aqq = 0.0;
                    let mut apq = 0.0;
                    for i in 0..rows {
                        app += w[[i, p]] * w[[i, p]];
                        aqq += w[[i, q]] * w[[i, q]];
                        apq += w[[i, p]] * w[[i, q]];
                    }
                    if apq.abs() <= 1e-15 * (app * aqq).sqrt().max(1e-300) {
                        continue;
                    }
                    rotated = true;
                    let zeta = (aqq - app) / (2.0 * apq);
                    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                    let cs = 1.0 / (1.0 + t * t).sqrt();
                    let sn = cs * t;
                    for i in 0..rows {
                        let wp = w[[i, p]];
                        let wq = w[[i, q]];
                        w[[i, p]] = cs * wp - sn * wq;
                        w[[i, q]] = sn * wp + cs * wq;
                    }
                    for i in 0..cols {
                        let vp = v[[i, p]];
                        let vq = v[[i, q]];
                        v[[i, p]] = cs * vp - sn * vq;
                        v[[i, q]] = sn * vp + cs * vq;
                    }
                }
            }
            if !rotated {
                break;
            }
        }
        let mut out = Array2::<f64>::zeros((rows, cols));
        for j in 0..cols {
            let sigma: f64 = (0..rows).map(|i| w[[i, j]] * w[[i, j]]).sum::<f64>().sqrt();
            if sigma <= 0.0 {
                continue;
            }
            let coeff = soft_scalar(sigma, tau) / sigma;
            if coeff == 0.0 {
                continue;
            }
            for i in 0..rows {
                for k in 0..cols {
                    out[[i, k]] += coeff * w[[i, j]] * v[[k, j]];
                }
            }
        }
        out
    }

    pub fn jacobi_nuclear_norm(mat: &Array2<f64>) -> f64 {
        let (rows, cols) = mat.dim();
        if rows < cols {
            return jacobi_nuclear_norm(&mat.t().to_owned());
        }
        let mut w = mat.clone();
        for _ in 0..60 {
            let mut rotated = false;
            for p in 0..cols {
                for q in (p + 1)..cols {
                    let mut app = 0.0;
                    let mut aqq = 0.0;
                    let mut apq = 0.0;
                    for i in 0..rows {
                        app += w[[i, p]] * w[[i, p]];
                        aqq += w[[i, q]] * w[[i, q]];
                        apq += w[[i, p]] * w[[i, q]];
                    }
                    if apq.abs() <= 1e-15 * (app * aqq).sqrt().max(1e-300) {
                        continue;
                    }
                    rotated = true;
                    let zeta = (aqq - app) / (2.0 * apq);
                    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                    let cs = 1.0 / (1.0 + t * t).sqrt();
                    let sn = cs * t;
                    for i in 0..rows {
                        let wp = w[[i, p]];
                        let wq = w[[i, q]];
                        w[[i, p]] = cs * wp - sn * wq;
                        w[[i, q]] = sn * wp + cs * wq;
                    }
                }
            }
            if !rotated {
                break;
            }
        }
        (0..cols)
            .map(|j| (0..rows).map(|i| w[[i, j]] * w[[i, j]]).sum::<f64>().sqrt())
            .sum()
    }
}
