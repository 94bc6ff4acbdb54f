//! Runs of consecutive smooth integers, found through Pell equations whose
//! solutions are handled in compact representation.
//!
//! Module map:
//! - [`arith`]: primes, trial division, smoothness, `P(·)` on windows.
//! - [`contfrac`]: continued fractions of `√d`, exact fundamental solutions,
//!   the continued-fraction regulator backend and the bounded convergent scan.
//! - [`compact`]: compact representations of units, exact and modular
//!   evaluation, p-adic valuations.
//! - [`pell`]: smooth solutions of a single Pell equation, certified by the
//!   convergent guard.
//! - [`search`]: Lehmer and windowed drivers, coefficient enumeration,
//!   brute-force oracles, record stores and assembly of `f(k)`.

pub mod arith;
pub mod compact;
pub mod contfrac;
pub mod error;
pub mod pell;
pub mod search;

mod numeric;

pub use error::{Error, Result};
