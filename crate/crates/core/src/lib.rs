//! Simulation and verification toolkit for the divide-and-color model:
//! Bernoulli bond percolation on boxes of `Z^d`, independent coloring of
//! the open clusters, and experiments comparing the magnetization and its
//! fluctuations with their predicted limit laws.

pub mod cli;
pub mod coloring;
pub mod error;
pub mod exec;
pub mod harness;
pub mod lattice;
pub mod percolation;
pub mod rng;
pub mod stats;
pub mod theory;
pub mod union_find;

pub use error::{Error, Result};
