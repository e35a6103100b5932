//! Core model for measuring merge effort and relating it to refactorings.
//!
//! Everything in this crate is pure and free of I/O so it can run on native
//! targets and in the browser alike. Repository access, the refactoring
//! detector, persistence and the command line live in the `refmerge` crate.

pub mod corpus;
pub mod effort;
pub mod error;
pub mod graph;
pub mod refactoring;
pub mod report;
pub mod rules;
pub mod sha;

pub use error::{Error, Result};
pub use sha::Sha;
