//! Exact enumeration of intersection lattices of arrangements generated by
//! generic points and of discriminantal arrangements: type counts, Möbius
//! values and characteristic polynomials.

pub mod arith;
pub mod cache;
pub mod charpoly;
pub mod counting;
pub mod disc;
pub mod error;
pub mod geom;
pub mod lattice;
pub mod poset;

pub use error::{Error, Result};
