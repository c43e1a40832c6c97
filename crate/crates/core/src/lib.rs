#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod csp;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod lp;
pub mod narrow;
pub mod oracle;
pub mod partial;
pub mod pipeline;
pub mod prediction;
pub mod rng;
pub mod sdp;
pub mod wide;

pub use error::{Error, Result};
