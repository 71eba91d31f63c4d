//! Negacyclic number theoretic transforms and RNS polynomial multiplication
//! over 64-bit NTT-friendly primes.
//!
//! - [`modarith`]: Shoup multiplication, lazy butterflies, prime and root generation.
//! - [`twiddle`]: bit-reversed twiddle tables and on-the-fly twiddling schedules.
//! - [`transform`]: radix-2, Stockham, high-radix and two-pass transforms.
//! - [`rns`]: modulus chains, CRT conversion and batched per-prime transforms.
//! - [`traffic`]: table-size and memory-traffic model with a counting probe.
//! - [`cli`]: the `nttkit` binary.

pub mod cli;
pub mod error;
pub mod modarith;
pub mod rns;
pub mod traffic;
pub mod transform;
pub mod twiddle;

pub use error::{NttError, Result};
