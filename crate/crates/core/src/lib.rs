//! SU(N) Casson-Lin invariants of braid closures.
//!
//! A braid `b ∈ B_k` with allowable labels `a` determines a twisted action
//! `εσ` on `k`-tuples in the conjugacy class `C_A ⊂ SU(N)`. Its fixed points
//! modulo conjugation, counted with signs, give the integer `h_{N,a}` of the
//! closed link.

pub mod braid;
pub mod catalog;
pub mod error;
pub mod fixed_points;
pub mod invariant;
pub mod labels;
pub mod run;
pub mod sun;

pub use error::{Error, Result};
