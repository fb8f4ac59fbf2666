//! Dimension theory of escape-rate sets for non-autonomous exponential maps
//! `E_λ(z) = λe^z`, evaluated at finite horizons.

// `!(x < y)` is used on purpose so that NaN takes the failing branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// LevelReal arithmetic returns Result, so the std operator traits do not fit.
#![allow(clippy::should_implement_trait)]

pub mod annular;
pub mod cover;
pub mod dimension;
pub mod levelnum;
pub mod presets;
pub mod sequences;
pub mod series;

pub use levelnum::{LevelError, LevelReal, Ratio};
pub use sequences::{Band, EscapeBandSpec, LambdaSpec, SequenceSpec};
