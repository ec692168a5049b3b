//! Pseudo-spectral solver and estimate-verification toolkit for the
//! parabolic Cauchy problem u_t = psi(t, i grad) u + f with zero initial
//! data and a Fourier multiplier symbol that is merely measurable in time.
//!
//! The crate provides the symbol families and their validator, the periodic
//! transform layer, the propagator kernel family with norm estimators and
//! decay fits, a Littlewood-Paley bank with Lipschitz/Holder norms, the
//! exponential-integrator solution operator with its verification probes,
//! a one-dimensional dyadic Calderon-Zygmund decomposition, and the
//! experiment harness behind the `specprop` command-line tool.

pub mod config;
pub mod cz;
pub mod error;
pub mod experiments;
mod fft;
pub mod grid;
pub mod kernel;
pub mod lp;
pub mod report;
pub mod solver;
pub mod symbol;
pub mod testfn;

pub use error::{Error, Result};
pub use grid::{
    forward_transform, inverse_transform, Field, Space, SpacetimeField, SpectralGrid,
};
pub use symbol::{SamplePlan, SymbolKind, SymbolSpec, TimeProfile, ValidationReport};
