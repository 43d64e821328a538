//! Exact q-series workbench for the modular curve X_ns(11).
//!
//! The crate covers cyclotomic arithmetic ([`cyclo`]), truncated q_*-expansions
//! ([`qexp`]), Siegel functions and Cartan cusp orbits ([`siegel`]), Weierstrass
//! models and the explicit maps between the curves involved ([`ellmaps`]), the
//! derivation of the function-field generators ([`derive`]) and integer lattice
//! algebra ([`lattices`]).

#![allow(clippy::needless_range_loop)]

pub mod cyclo;
pub mod derive;
pub mod ellmaps;
pub mod error;
pub mod lattices;
pub mod qexp;
pub mod siegel;

pub use cyclo::{CycElem, GaloisAuto};
pub use error::{Error, Result};
pub use qexp::QSeries;
