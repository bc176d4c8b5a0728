//! Symbolic dynamics over group extensions: subshifts of finite type, skew
//! products by group-valued cocycles, random walks on groups, orbit counting
//! for suspension flows and Schottky groups.

pub mod error;
pub mod groups;
pub mod numerics;
pub mod schottky;
pub mod sft;
pub mod skew;
pub mod walks;
pub mod zeta;

pub use error::{Error, Result};
