//! Certification and simulation toolkit for finite quantum logics.
//!
//! - [`logic`]: logics as collections of intertwining contexts, plus the
//!   built-in 37-atom figure 1 logic and its JSON file format.
//! - [`valuations`]: two-valued state enumeration, relational queries and
//!   value-indefiniteness certificates.
//! - [`orthorep`]: faithful orthogonal representations in `R^d`, verified and
//!   solved by penalized least squares.
//! - [`qsim`]: a dense state-vector simulator with the Deutsch parity query
//!   and the order-finding core.
//! - [`numtheory`]: modular arithmetic, continued fractions and the classical
//!   factoring driver.
//! - [`qrng`]: the simulated value-indefinite random bit source and the
//!   Borel normality, monobit and runs tests.

pub mod dot;
pub mod logic;
pub mod numtheory;
pub mod orthorep;
pub mod qrng;
pub mod qsim;
pub mod rng;
pub mod valuations;

pub use logic::{parse_logic, validate_logic, AtomId, Context, Logic, LogicError};
