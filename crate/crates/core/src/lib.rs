//! Numerical toolkit for multi-party quantum channels.
//!
//! The crate covers Choi calculus, separable-cone certificates over subspaces of
//! trace-preserving Choi matrices, the explicit ball of local operations with
//! shared randomness (LOSR) around the completely noisy channel, no-signaling
//! checks, one-round two-player games with see-saw optimizers, and linear
//! witnesses against LOSR membership.
//!
//! All operators are dense [`tensor::ComplexMatrix`] values. Multi-party Choi
//! matrices use the global ordering `A_1 .. A_m X_1 .. X_m` (outputs first) unless
//! tagged otherwise; certificates are stored in the party-grouped ordering
//! `(A_1 X_1) .. (A_m X_m)`.

pub mod error;
pub mod games;
pub mod catalog;
pub mod choi;
pub mod qspace;
pub mod losr;
pub mod nosignal;
pub mod random;
pub mod sep;
pub mod tensor;
pub mod witness;

pub use error::{Error, Result};
pub use tensor::{ComplexMatrix, C64};
