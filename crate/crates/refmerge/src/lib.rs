//! Repository side of merge-effort mining: reading Git histories, driving
//! a refactoring detector, querying GitHub, persisting results and running
//! the whole chain from repositories to figure groups.
//!
//! The algorithms themselves (effort algebra, commit-graph logic, rule
//! mining) live in `refmerge-core`.

pub mod config;
pub mod corpus;
pub mod detector;
pub mod error;
pub mod fixture;
pub mod git;
pub mod github;
pub mod pipeline;
pub mod store;

pub use error::{Error, Result};
