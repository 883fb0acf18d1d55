//! Feature-augmented least squares and frame-wise sinusoidal decomposition.
//!
//! The crate has two halves. The regression half generates random symbolic
//! functions, expands a scalar input into trigonometric / polynomial /
//! product feature columns, and fits them by QR least squares so that plain
//! linear regression can express strongly nonlinear targets. The audio half
//! reads WAV files, cuts them into fixed-length frames over a standardized
//! time axis, and explains each frame as a superposition of sinusoids
//! trained one wave at a time by stochastic gradient descent.
//!
//! All randomness is seeded and platform-independent, and every fitting
//! procedure is a pure function of its inputs.

pub mod audio;
pub mod expr;
pub mod featurize;
pub mod linreg;
pub mod rng;
pub mod sinefit;

pub use expr::{BaseFeature, Expression, Term, DEFAULT_GUARD};
pub use featurize::{Dataset, DesignMatrix, FeatureSpec};
pub use linreg::{FitReport, LinearModel};
pub use sinefit::{FitConfig, FrameFit, TrainingMode, WaveParams};
