//! Reverse annealing of the ferromagnetic p-spin model with variational
//! counterdiabatic driving, simulated in the two-ladder collective-spin sector.
//!
//! ```
//! use cra::dynamics::{evolve, EvolveOptions};
//! use cra::model::AnnealParams;
//!
//! let params = AnnealParams::ara(3);
//! let sector = params.sector(10, 0.7)?;
//! let run = evolve(&sector, &params, &EvolveOptions::default())?;
//! assert!(run.p_gs > 1e-3);
//! # Ok::<(), cra::Error>(())
//! ```
//!
//! See the book under `book/` for the concepts behind each module.

pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod gauge;
pub mod krylov;
pub mod model;
pub mod operator;
pub mod schedule;
pub mod sector;
pub mod spectra;

pub use error::{Error, Result};

// Book chapters are compiled and run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/overview.md")]
    mod overview {}
    #[doc = include_str!("../../../book/src/sector.md")]
    mod sector {}
    #[doc = include_str!("../../../book/src/schedule.md")]
    mod schedule {}
    #[doc = include_str!("../../../book/src/cd-driving.md")]
    mod cd_driving {}
    #[doc = include_str!("../../../book/src/dynamics.md")]
    mod dynamics {}
    #[doc = include_str!("../../../book/src/spectra.md")]
    mod spectra {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
