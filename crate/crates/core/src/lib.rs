//! Green security games with real-time information: a seedable grid-world
//! simulator, heuristic and learned policies, the DeDOL double-oracle loop
//! and exact solvers for small instances.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dedol;
pub mod error;
pub mod exact;
pub mod game;
pub mod metagame;
pub mod nn;
pub mod policies;
pub mod rl;
pub mod rng;

pub use error::{GsgiError, Result};
