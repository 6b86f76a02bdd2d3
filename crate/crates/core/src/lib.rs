//! Discrete solitons of the discrete nonlinear Schrodinger lattice near the
//! anti-continuum limit.
//!
//! The crate is `no_std` (with `alloc`). It covers continuation of
//! multi-site solitons, their linearized spectra, the finite-dimensional
//! boundary reduction of the linearized resolvent, band-edge singularity
//! analysis and pseudospectral scans.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod lattice;
pub mod linalg;
pub mod linearization;
pub mod pseudospectra;
pub mod resolvent;
pub mod singularity;
pub mod soliton;

pub use error::{Error, Result};
pub use lattice::{LatticeVector, NormSpec, SupportConfig};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex<f64>;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<C64>;
/// Dense real matrix.
pub type RMatrix = nalgebra::DMatrix<f64>;
/// Dense real column vector.
pub type RVector = nalgebra::DVector<f64>;
