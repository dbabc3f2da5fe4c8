//! Second-order linear recurrences `xₙ = a₁xₙ₋₁ + xₙ₋₂` that attain a
//! prescribed number of residues modulo some `m`, with self-verifying
//! certificates, and the fractional-part orbits `{ξαⁿ}` they induce.

pub mod constructor;
pub mod decimal;
pub mod error;
pub mod fractional;
pub mod intmath;
pub mod lehmer;
pub mod quadring;
pub mod recurrence;

pub use error::{Error, Result};
