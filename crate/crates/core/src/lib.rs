//! Pseudo-spectral laboratory for the cubic-truncated 3D gravity water-wave
//! system on a periodic box.
//!
//! The crate provides, over a generic scalar (`f32` or `f64`):
//!
//! * periodic-box Fourier analysis: radial multipliers, the half-wave group,
//!   Littlewood-Paley projections and the norms used by the diagnostics
//!   ([`grid`], [`field`], [`lp`], [`norms`]);
//! * closed-form multilinear symbols of the quadratic/cubic expansion, their
//!   phases, gradients and normal-form quotients ([`symbols`]);
//! * sampling and classification of time/space/space-time resonant sets
//!   ([`resonance`]);
//! * bilinear/trilinear pseudo-products, paraproducts and the dyadic model
//!   operators, with empirical bound probes ([`pseudo_product`]);
//! * two independent Dirichlet-Neumann computations (series truncation and a
//!   single-layer boundary integral) plus their comparison ([`dno`]);
//! * a time integrator for the cubic system with energy/decay/scattering
//!   diagnostics ([`evolution`]);
//! * the normal-form boundary term and weakly-resonant cubic integrands
//!   ([`normal_form`]).

pub mod dno;
pub mod error;
pub mod evolution;
pub mod fft;
pub mod field;
pub mod grid;
pub mod lp;
pub mod norms;
pub mod normal_form;
pub mod pseudo_product;
pub mod resonance;
pub mod scalar;
pub mod symbols;

pub use error::{Error, Result};
pub use field::SpectralField;
pub use grid::FourierGrid;
pub use scalar::{Cplx, Real};

/// Concrete aliases at working precision.
pub type Grid64 = FourierGrid<f64>;
pub type Field64 = SpectralField<f64>;
pub type C64 = Cplx<f64>;

/// Single-precision aliases (compiles and runs; the quantitative tolerances
/// in this crate assume `f64`).
pub type Grid32 = FourierGrid<f32>;
pub type Field32 = SpectralField<f32>;
pub type C32 = Cplx<f32>;
