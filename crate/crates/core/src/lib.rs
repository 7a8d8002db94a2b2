//! Galerkin truncations of the inviscid dyadic shell model
//! `dX_n/dt = k_{n-1} X_{n-1}² - k_n X_n X_{n+1}`, with integrators,
//! trajectory diagnostics, pairwise uniqueness certificates and canned
//! experiments. See the examples directory for one program per capability.

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod integrate;
pub mod io;
pub mod model;
pub mod sum;

pub use error::{Error, Result};
