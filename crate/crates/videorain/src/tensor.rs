//! Dense video tensor storage, mode unfoldings, and periodic finite differences.
//!
//! A video clip is an `m x n x t` tensor of `f64` samples: axis 0 is image
//! height (vertical, y), axis 1 is image width (horizontal, x), axis 2 is
//! time. All finite-difference operators use a circular boundary so they are
//! diagonalized by the 3-D DFT, which the solver relies on for its
//! closed-form rain update.

use ndarray::{concatenate, Array2, Array3, Axis, Slice};

use crate::error::{Error, Result};

/// Guards relative quantities against division by zero.
pub(crate) const EPS_DENOM: f64 = 1e-12;

/// Dense `height x width x frames` video tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoTensor {
    data: Array3<f64>,
}

impl VideoTensor {
    /// Allocates an all-zero tensor. Spatial extents must be at least 2 and
    /// the frame count at least 1.
    pub fn zeros(height: usize, width: usize, frames: usize) -> Result<Self> {
        check_dims(height, width, frames)?;
        Ok(VideoTensor { data: Array3::zeros((height, width, frames)) })
    }

    /// Allocates a zero tensor with the same shape as `other`.
    pub fn zeros_like(other: &VideoTensor) -> Self {
        VideoTensor { data: Array3::zeros(other.data.raw_dim()) }
    }

    /// Constant-valued tensor.
    pub fn from_elem(height: usize, width: usize, frames: usize, value: f64) -> Result<Self> {
        check_dims(height, width, frames)?;
        if !value.is_finite() {
            return Err(Error::Numerical("constant fill value is not finite".into()));
        }
        Ok(VideoTensor { data: Array3::from_elem((height, width, frames), value) })
    }

    /// Wraps an existing array, validating dimensions and finiteness.
    pub fn from_array(data: Array3<f64>) -> Result<Self> {
        let (m, n, t) = data.dim();
        check_dims(m, n, t)?;
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::Numerical("tensor contains non-finite values".into()));
        }
        Ok(VideoTensor { data })
    }

    /// Wraps an array produced by internal arithmetic that is known finite.
    pub(crate) fn from_array_unchecked(data: Array3<f64>) -> Self {
        VideoTensor { data }
    }

    pub fn height(&self) -> usize {
        self.data.dim().0
    }

    pub fn width(&self) -> usize {
        self.data.dim().1
    }

    pub fn frames(&self) -> usize {
        self.data.dim().2
    }

    /// Shape as `(height, width, frames)`.
    pub fn shape(&self) -> (usize, usize, usize) {
        self.data.dim()
    }

    /// Total number of samples.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn array(&self) -> &Array3<f64> {
        &self.data
    }

    pub fn array_mut(&mut self) -> &mut Array3<f64> {
        &mut self.data
    }

    pub fn into_array(self) -> Array3<f64> {
        self.data
    }

    /// Elementwise map into a new tensor.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> VideoTensor {
        VideoTensor { data: self.data.mapv(&f) }
    }

    /// Scalar multiple.
    pub fn scale(&self, c: f64) -> VideoTensor {
        VideoTensor { data: &self.data * c }
    }

    /// Frobenius norm.
    pub fn frob_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Sum of absolute values.
    pub fn l1_norm(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum()
    }

    /// Largest absolute value.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Elementwise clamp into `[lo, hi]`.
    pub fn clamp(&self, lo: f64, hi: f64) -> VideoTensor {
        self.map(|v| v.clamp(lo, hi))
    }
}

fn check_dims(m: usize, n: usize, t: usize) -> Result<()> {
    if m < 2 || n < 2 || t < 1 {
        return Err(Error::InvalidShape(format!(
            "video tensor needs height >= 2, width >= 2, frames >= 1, got {m}x{n}x{t}"
        )));
    }
    Ok(())
}

impl std::ops::Add for &VideoTensor {
    type Output = VideoTensor;
    fn add(self, rhs: &VideoTensor) -> VideoTensor {
        debug_assert_eq!(self.shape(), rhs.shape());
        VideoTensor { data: &self.data + &rhs.data }
    }
}

impl std::ops::Sub for &VideoTensor {
    type Output = VideoTensor;
    fn sub(self, rhs: &VideoTensor) -> VideoTensor {
        debug_assert_eq!(self.shape(), rhs.shape());
        VideoTensor { data: &self.data - &rhs.data }
    }
}

/// Unfolding mode: which axis becomes the rows of the matricization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Rows index image height (axis 0).
    Height,
    /// Rows index image width (axis 1).
    Width,
    /// Rows index time (axis 2).
    Time,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Height, Mode::Width, Mode::Time];

    /// One-based mode index.
    pub fn index(self) -> usize {
        match self {
            Mode::Height => 1,
            Mode::Width => 2,
            Mode::Time => 3,
        }
    }

    pub fn from_index(index: usize) -> Result<Mode> {
        match index {
            1 => Ok(Mode::Height),
            2 => Ok(Mode::Width),
            3 => Ok(Mode::Time),
            other => Err(Error::InvalidParameter(format!(
                "unfolding mode must be 1, 2, or 3, got {other}"
            ))),
        }
    }
}

/// Matricizes `x` along `mode`. Rows run over the mode axis; columns
/// enumerate the remaining axes in ascending axis order with the first of
/// them varying fastest.
pub fn unfold(x: &VideoTensor, mode: Mode) -> Array2<f64> {
    let (m, n, t) = x.shape();
    let (perm, rows, cols) = match mode {
        Mode::Height => ([0, 2, 1], m, n * t),
        Mode::Width => ([1, 2, 0], n, m * t),
        Mode::Time => ([2, 1, 0], t, m * n),
    };
    let permuted = x.array().view().permuted_axes(perm);
    let contiguous: Array3<f64> = permuted.as_standard_layout().into_owned();
    contiguous
        .into_shape_with_order((rows, cols))
        .expect("permutation preserves element count")
}

/// Inverse of [`unfold`]: rebuilds a tensor of `shape` from its mode
/// matricization. Errors if the matrix dimensions do not match the shape.
pub fn fold(mat: &Array2<f64>, mode: Mode, shape: (usize, usize, usize)) -> Result<VideoTensor> {
    let (m, n, t) = shape;
    check_dims(m, n, t)?;
    let (expected, mid_shape, inv_perm) = match mode {
        Mode::Height => ((m, n * t), (m, t, n), [0, 2, 1]),
        Mode::Width => ((n, m * t), (n, t, m), [2, 0, 1]),
        Mode::Time => ((t, m * n), (t, n, m), [2, 1, 0]),
    };
    if mat.dim() != expected {
        return Err(Error::ShapeMismatch(format!(
            "mode-{} fold of a {}x{}x{} tensor needs a {}x{} matrix, got {}x{}",
            mode.index(),
            m,
            n,
            t,
            expected.0,
            expected.1,
            mat.dim().0,
            mat.dim().1
        )));
    }
    let mid = mat
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order(mid_shape)
        .expect("checked dimensions above");
    let back: Array3<f64> = mid.permuted_axes(inv_perm).as_standard_layout().into_owned();
    VideoTensor::from_array(back)
}

/// Axis selector for the finite-difference operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffAxis {
    /// Horizontal, along image width.
    X,
    /// Vertical, along image height.
    Y,
    /// Temporal, along frames.
    T,
}

impl DiffAxis {
    pub const ALL: [DiffAxis; 3] = [DiffAxis::X, DiffAxis::Y, DiffAxis::T];

    fn axis(self) -> Axis {
        match self {
            DiffAxis::X => Axis(1),
            DiffAxis::Y => Axis(0),
            DiffAxis::T => Axis(2),
        }
    }
}

fn roll_forward(a: &Array3<f64>, ax: Axis) -> Array3<f64> {
    let len = a.len_of(ax);
    if len == 1 {
        return a.clone();
    }
    concatenate(ax, &[a.slice_axis(ax, Slice::from(1..)), a.slice_axis(ax, Slice::from(..1))])
        .expect("slices share the other axes")
}

fn roll_backward(a: &Array3<f64>, ax: Axis) -> Array3<f64> {
    let len = a.len_of(ax);
    if len == 1 {
        return a.clone();
    }
    concatenate(
        ax,
        &[a.slice_axis(ax, Slice::from(len - 1..)), a.slice_axis(ax, Slice::from(..len - 1))],
    )
    .expect("slices share the other axes")
}

/// Forward difference with circular wrap along `axis`:
/// `out[i] = x[i + 1 mod len] - x[i]`. A singleton axis yields all zeros.
pub fn diff(x: &VideoTensor, axis: DiffAxis) -> VideoTensor {
    let ax = axis.axis();
    VideoTensor::from_array_unchecked(&roll_forward(x.array(), ax) - x.array())
}

/// Adjoint of [`diff`] under the standard inner product:
/// `out[i] = x[i - 1 mod len] - x[i]`.
pub fn adjoint_diff(x: &VideoTensor, axis: DiffAxis) -> VideoTensor {
    let ax = axis.axis();
    VideoTensor::from_array_unchecked(&roll_backward(x.array(), ax) - x.array())
}
