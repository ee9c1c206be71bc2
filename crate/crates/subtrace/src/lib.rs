//! Sieve criteria, finite-field arithmetic and brute-force oracles for the
//! existence of primitive normal pairs (ε, f(ε)) with prescribed subtrace.
//!
//! The crate is organized bottom-up: [`ntheory`] (integers), [`ffield`] and
//! [`poly`] (finite fields), [`cyclofactor`] (structure of x^n − 1), [`sieve`]
//! (the three sufficient criteria), [`oracle`] (exhaustive ground truth), and
//! [`tables`]/[`campaign`] which reproduce the published computations.

pub mod campaign;
pub mod cyclofactor;
pub mod ffield;
pub mod hints;
pub mod ntheory;
pub mod oracle;
pub mod par;
pub mod poly;
pub mod precise;
pub mod ser;
pub mod sieve;
pub mod tables;
