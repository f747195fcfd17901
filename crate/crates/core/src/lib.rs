//! Gaussian admissible geometry and the tent spaces `T^{1,q}(gamma)`.
//!
//! The crate is organised bottom-up: [`geometry`] (admissible balls and
//! Gaussian measures), [`grid`] (layered dyadic cubes and labels),
//! [`whitney`] (thickenings, Whitney coverings and partitions), [`tent`]
//! (the discretised domain `D`, the conical functional `J` and atoms) and
//! [`atomic`] (atomic decomposition, re-atoming and change of aperture).

pub mod atomic;
pub mod config;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod lattice;
pub mod suites;
pub mod tent;
pub mod whitney;

pub use error::{Error, Result};
