//! Emulated floating-point formats.
//!
//! Values are always carried as `f64`; a [`Format`] describes the grid they
//! are rounded onto. This covers binary16, bfloat16, binary32 and any custom
//! layout with at most 11 exponent and 52 significand bits.

mod arith;
mod format;
mod rng;
mod round;

pub use arith::{op_count, reset_op_count, Arith, DEFAULT_STOCHASTIC_SEED};
pub use format::{Format, FormatError, Rounding};
pub use rng::Rng;
pub use round::{is_representable, round_value, rounded_op, stochastic_expectation_probe, Op};
