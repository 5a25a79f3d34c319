//! Ordered graded graphs (Bratteli diagrams with an adic structure).
//!
//! The crate is `no_std` and only needs `alloc`. It covers:
//!
//! * [`graph`]: leveled graphs with ordered in-edge lists, validation,
//!   path counting, telescoping and induced subgraphs.
//! * [`adic`]: the adic order on finite paths, successor/predecessor and
//!   rank/unrank.
//! * [`trees`]: the ordered graded tree of a vertex, marked trees,
//!   canonical encodings, minimality and the minimal quotient.
//! * [`uniadic`]: the uniadic graph and the embedding of graphs whose
//!   vertices have at least two in-edges into it.
//! * [`measures`]: central weights, centrality checks and path sampling.
//! * [`scheme`]: hierarchies on the integers read off a path, and exact or
//!   sampled distributions over marked trees.
//! * [`coloring`]: vertex colorings, colored marked trees and the
//!   separating coloring.
//! * [`builders`]: deterministic example graphs and their canonical weights.
//!
//! File formats, DOT export and the command line live in the companion
//! `uniadic-cli` crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod adic;
pub mod builders;
pub mod coloring;
pub mod graph;
pub mod measures;
pub mod scheme;
pub mod trees;
pub mod uniadic;

mod intern;

pub use adic::{AdicError, PathPrefix};
pub use builders::BuilderSpec;
pub use coloring::{ColoredMarkedTree, Coloring};
pub use graph::{Diagnostic, GradedGraph, GraphError, VertexRef};
pub use measures::{CentralWeights, Weight};
pub use scheme::{HierarchyPrefix, SchemeDistribution};
pub use trees::{MarkedTree, OrderedTree};
pub use uniadic::{EmbeddingResult, UaVertex};

/// Version of the text formats produced by the companion crate.
pub const FORMAT_VERSION: u32 = 1;
