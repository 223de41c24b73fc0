//! Exact word metrics, ball-avoiding detours and divergence witnesses for
//! wreath products, Houghton groups, Baumslag-Solitar groups and
//! Diestel-Leader graphs.

pub mod bs;
pub mod cli;
pub mod divergence;
pub mod dl;
pub mod error;
pub mod family;
pub mod graph_wreath;
pub mod houghton;
pub mod search;
pub mod space;
pub mod wreath;

pub use error::{Error, Result};
