//! Refrigerant circuitry design for fin-tube evaporators as a binary
//! black-box optimization problem.
//!
//! [`circuitry`] encodes tube connections as a bit vector and checks the
//! manufacturing rules, [`enumeration`] lists every feasible circuitry of
//! small coils, [`simulator`] rates a design, [`solvers`] searches the space
//! and [`harness`] runs studies and writes tables.

pub mod circuitry;
pub mod enumeration;
pub mod error;
pub mod harness;
pub mod simulator;
pub mod solvers;
pub mod thermo;
mod unionfind;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/encoding.md")]
    mod encoding {}
    #[doc = include_str!("../../../book/src/enumeration.md")]
    mod enumeration {}
    #[doc = include_str!("../../../book/src/properties.md")]
    mod properties {}
    #[doc = include_str!("../../../book/src/simulator.md")]
    mod simulator {}
    #[doc = include_str!("../../../book/src/objectives.md")]
    mod objectives {}
    #[doc = include_str!("../../../book/src/solvers.md")]
    mod solvers {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
