//! Lattice-point statistics and periodic Lorentz gas toolkit.
//!
//! The crate has two halves that are meant to be compared against each
//! other. The empirical half works with a fixed lattice: exact point
//! enumeration in shells and regions (`lattice`), directional statistics
//! and gap distributions (`dirstats`), and exact billiard geometry with
//! free path lengths (`lorentz`). The Monte Carlo half replaces the fixed
//! lattice by a Haar-random one (`haar`) and estimates the limiting count
//! laws directly (`mc`). The limit theorems say the two halves agree as
//! the scale parameters grow; the test suite checks exactly that.

pub mod dirstats;
pub mod error;
pub mod geom;
pub mod haar;
pub mod lattice;
pub mod lorentz;
pub mod mc;
pub mod stats;
pub mod traversal;

pub use error::{Error, Result};
