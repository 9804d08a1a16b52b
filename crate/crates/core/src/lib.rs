//! Turing instability and dynamic-transition analysis for two-component
//! reaction–diffusion systems
//!
//! ```text
//! u_t = Du Δu + f(u, v),   v_t = Dv Δv + g(u, v)
//! ```
//!
//! on intervals and rectangles with Neumann or Dirichlet boundaries.
//!
//! - [`kinetics`]: Taylor data of the kinetics at a steady state.
//! - [`spectrum`]: eigenpairs of `-Δ`, mode matrices, eigenfunction integrals.
//! - [`stability`]: Turing verdicts, instability windows, critical diffusivities.
//! - [`reduction`]: center-manifold normal forms and transition types.
//! - [`simulator`]: finite-difference method-of-lines integrator.
//! - [`sweep`]: parameter sweeps producing phase-diagram tables.

pub mod config;
pub mod error;
pub mod io;
pub mod kinetics;
pub mod reduction;
pub mod simulator;
pub mod spectrum;
pub mod stability;
pub mod sweep;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/kinetics.md")]
    mod kinetics {}
    #[doc = include_str!("../../../book/src/spectrum.md")]
    mod spectrum {}
    #[doc = include_str!("../../../book/src/stability.md")]
    mod stability {}
    #[doc = include_str!("../../../book/src/reduction.md")]
    mod reduction {}
    #[doc = include_str!("../../../book/src/simulator.md")]
    mod simulator {}
    #[doc = include_str!("../../../book/src/sweep.md")]
    mod sweep {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
