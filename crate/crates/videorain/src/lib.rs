//! Rain-streak removal for grayscale video.
//!
//! A rainy clip is modeled as a clean background plus an additive rain
//! layer. The background is low-rank across its mode unfoldings and has
//! sparse spatial and temporal gradients; the rain layer is sparse and
//! smooth along the dominant streak direction. [`solver::derain`]
//! recovers both layers by alternating proximal updates with dual ascent,
//! with the rain subproblem solved exactly in the Fourier domain.
//!
//! Supporting modules synthesize seeded ground-truth rain
//! ([`synth`]), estimate the streak angle from the spectrum
//! ([`direction`]), score results ([`metrics`]), and move clips between
//! disk and memory ([`io`]).

pub mod direction;
pub mod error;
pub mod fft;
pub mod io;
pub mod metrics;
pub mod operators;
pub mod solver;
pub mod synth;
pub mod tensor;

pub use error::{Error, Result};
pub use metrics::MetricsReport;
pub use operators::RainAngle;
pub use solver::{derain, AngleSelection, DecompositionResult, SolverConfig};
pub use synth::RainSynthConfig;
pub use tensor::{Mode, VideoTensor};
