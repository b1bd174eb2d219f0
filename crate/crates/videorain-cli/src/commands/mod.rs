pub mod bench;
pub mod derain;
pub mod estimate_angle;
pub mod eval;
pub mod synth;
