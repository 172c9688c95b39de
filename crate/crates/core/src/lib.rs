//! Finite-window derivative estimation and deadbeat state reconstruction
//! for polynomial-modeled signals.
//!
//! The crate builds the two equivalent convolution-kernel families behind
//! algebraic derivative estimation (an operational-calculus double sum and a
//! reconstructibility-Gramian single sum), certifies their identities in
//! exact rational arithmetic, and runs them on sampled data:
//!
//! - [`kernel`]: exact kernel construction, family equivalence, moment and
//!   reflection identities.
//! - [`gramian`]: transition matrices, reconstructibility Gramians, their
//!   closed-form inverses via the Hilbert matrix, and weighted variants.
//! - [`runtime`]: FIR discretization and moving-horizon estimation on
//!   uniformly sampled signals, streaming or batch.
//! - [`horizon`]: expanding-horizon batch estimates and the recursive
//!   information-filter form.
//! - [`identify`]: Gramian-based parameter identification with
//!   persistent-excitation diagnostics.
//! - [`signal`]: deterministic test-signal generation, seeded noise and
//!   error metrics.
//! - [`verify`]: the exact identity suites behind `gramdiff verify`.
//!
//! ```
//! use gramdiff::kernel::{KernelPoly, KernelSpec};
//!
//! // First-derivative kernel for a degree-one model on a unit window:
//! // kernel(sigma) = (6/T^3)(T - 2 sigma).
//! let spec = KernelSpec::new(1, 1, 1.0).unwrap();
//! let k = KernelPoly::gramian(&spec);
//! assert_eq!(k.eval(0.0).unwrap(), 6.0);
//! ```

pub mod error;
pub mod gramian;
pub mod horizon;
pub mod identify;
pub mod kernel;
pub mod poly;
pub mod rational;
pub mod ratmat;
pub mod runtime;
pub mod series;
pub mod signal;
pub mod verify;

pub use error::{Error, Result};
pub use kernel::{KernelFamily, KernelPoly, KernelSpec};
pub use series::SignalSeries;
