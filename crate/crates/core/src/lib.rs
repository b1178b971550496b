//! Stepping-up colorings of hypergraphs on the leaves of a complete binary
//! tree, comb decompositions of leaf sets, and the extraction of
//! monochromatic daisies from monochromatic lifted daisies.

pub mod bounds;
pub mod coloring;
pub mod combs;
pub mod daisy;
pub mod error;
pub mod formats;
pub mod pipeline;
pub mod subsets;
pub mod tree;

pub use error::{Error, Result};
