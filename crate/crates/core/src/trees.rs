//! Ordered graded trees attached to vertices and paths.
//!
//! The tree of a root-level vertex is a single node. The tree of a vertex `w`
//! above it has one child per in-edge, in adic order, and the child hanging
//! from the edge out of `v` is the tree of `v`. Its leaves correspond to the
//! paths into `w`, in adic order. A marked tree additionally records the leaf
//! of one such path.
//!
//! Trees share subtrees through `Arc`; equality of trees at a level is
//! decided on interned structural ids instead of materialized trees.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt::Write;

use thiserror::Error;

use crate::adic::{self, AdicError, PathPrefix};
use crate::graph::{GradedGraph, GraphError, VertexRef};
use crate::intern::{first_collision, structural_ids, Interner};

/// Largest leaf count [`ot`] will materialize.
pub const MAX_TREE_LEAVES: u128 = 1 << 20;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Path(#[from] AdicError),
    #[error("tree with {leaves} leaves exceeds the guard {limit}")]
    SizeGuard { leaves: u128, limit: u128 },
    #[error("mark {mark} is not below the leaf count {leaves}")]
    MarkOutOfRange { mark: u128, leaves: u128 },
    #[error("children of a node must all have the same depth")]
    NotGraded,
    #[error("level {level} is out of range")]
    LevelOutOfRange { level: usize },
}

/// An ordered tree whose leaves all sit at the same depth.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OrderedTree {
    children: Vec<Arc<OrderedTree>>,
    depth: usize,
    leaves: u128,
}

impl OrderedTree {
    pub fn leaf() -> Self {
        OrderedTree { children: Vec::new(), depth: 0, leaves: 1 }
    }

    /// A node over `children`, which must be non-empty and of equal depth.
    pub fn node(children: Vec<Arc<OrderedTree>>) -> Result<Self, TreeError> {
        let first = children.first().ok_or(TreeError::NotGraded)?;
        let depth = first.depth;
        if children.iter().any(|c| c.depth != depth) {
            return Err(TreeError::NotGraded);
        }
        let leaves = children.iter().map(|c| c.leaves).sum();
        Ok(OrderedTree { children, depth: depth + 1, leaves })
    }

    pub fn children(&self) -> &[Arc<OrderedTree>] {
        &self.children
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Levels below the root.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn leaf_count(&self) -> u128 {
        self.leaves
    }

    /// Balanced-parentheses encoding: a node is `(` followed by its
    /// children's encodings and `)`. A single node is `()`.
    pub fn encode(&self) -> String {
        let mut out = String::new();
        self.encode_into(&mut out);
        out
    }

    fn encode_into(&self, out: &mut String) {
        out.push('(');
        for c in &self.children {
            c.encode_into(out);
        }
        out.push(')');
    }

    /// Left-to-right index of the leaf reached by taking child `choices[0]`
    /// at the root, then `choices[1]`, and so on.
    pub fn leaf_index(&self, choices: &[usize]) -> Option<u128> {
        let mut node = self;
        let mut index = 0;
        for &c in choices {
            let child = node.children.get(c)?;
            index += node.children[..c].iter().map(|s| s.leaves).sum::<u128>();
            node = child;
        }
        node.is_leaf().then_some(index)
    }
}

/// An ordered graded tree with one marked leaf.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MarkedTree {
    pub tree: Arc<OrderedTree>,
    pub mark: u128,
}

impl MarkedTree {
    pub fn new(tree: Arc<OrderedTree>, mark: u128) -> Result<Self, TreeError> {
        if mark >= tree.leaf_count() {
            return Err(TreeError::MarkOutOfRange { mark, leaves: tree.leaf_count() });
        }
        Ok(MarkedTree { tree, mark })
    }

    /// Tree encoding followed by `:` and the mark.
    pub fn encode(&self) -> String {
        marked_key(&self.tree.encode(), self.mark)
    }
}

pub(crate) fn marked_key(tree_key: &str, mark: u128) -> String {
    let mut out = String::with_capacity(tree_key.len() + 8);
    out.push_str(tree_key);
    let _ = write!(out, ":{mark}");
    out
}

/// Trees of every vertex on levels `0..=upto_level`.
pub fn vertex_trees(
    graph: &GradedGraph,
    upto_level: usize,
) -> Result<Vec<Vec<Arc<OrderedTree>>>, TreeError> {
    if upto_level >= graph.num_levels() {
        return Err(TreeError::LevelOutOfRange { level: upto_level });
    }
    let dims = graph.truncated(upto_level + 1).dims()?;
    if let Some(&leaves) = dims.iter().flatten().max() {
        if leaves > MAX_TREE_LEAVES {
            return Err(TreeError::SizeGuard { leaves, limit: MAX_TREE_LEAVES });
        }
    }
    let mut out: Vec<Vec<Arc<OrderedTree>>> = Vec::with_capacity(upto_level + 1);
    out.push(graph.levels()[0].iter().map(|_| Arc::new(OrderedTree::leaf())).collect());
    for level in 1..=upto_level {
        let row = graph.levels()[level]
            .iter()
            .map(|sources| {
                let children = sources.iter().map(|&s| Arc::clone(&out[level - 1][s])).collect();
                OrderedTree::node(children).map(Arc::new)
            })
            .collect::<Result<Vec<_>, _>>()?;
        out.push(row);
    }
    Ok(out)
}

/// The ordered graded tree of `v`.
pub fn ot(graph: &GradedGraph, v: VertexRef) -> Result<Arc<OrderedTree>, TreeError> {
    graph.check_vertex(v)?;
    let mut trees = vertex_trees(graph, v.level)?;
    Ok(trees.swap_remove(v.level).swap_remove(v.index))
}

/// The tree of `p`'s endpoint with the leaf of `p` marked.
pub fn otp(graph: &GradedGraph, p: &PathPrefix) -> Result<MarkedTree, TreeError> {
    let end = adic::endpoint(graph, p)?;
    let tree = ot(graph, end)?;
    let mark = adic::rank(graph, p)?;
    MarkedTree::new(tree, mark)
}

/// Per-level ids such that two vertices of a level share an id iff their
/// trees are equal.
pub fn tree_classes(graph: &GradedGraph) -> Vec<Vec<u32>> {
    structural_ids(graph.levels(), |_, _| 0)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Minimality {
    Minimal,
    /// Lowest level with equal trees, and the lexicographically first pair.
    Collision { level: usize, first: usize, second: usize },
}

impl Minimality {
    pub fn is_minimal(&self) -> bool {
        matches!(self, Minimality::Minimal)
    }
}

/// Whether all vertex trees are distinct within each level `<= upto_level`.
pub fn is_minimal(graph: &GradedGraph, upto_level: usize) -> Result<Minimality, TreeError> {
    if upto_level >= graph.num_levels() {
        return Err(TreeError::LevelOutOfRange { level: upto_level });
    }
    let classes = tree_classes(&graph.truncated(upto_level + 1));
    for (level, ids) in classes.iter().enumerate() {
        if let Some((first, second)) = first_collision(ids) {
            return Ok(Minimality::Collision { level, first, second });
        }
    }
    Ok(Minimality::Minimal)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinimalQuotient {
    pub graph: GradedGraph,
    /// `maps[n][v]` is the quotient vertex of original vertex `v` at level `n`.
    pub maps: Vec<Vec<usize>>,
}

/// Merges vertices with equal trees on levels `0..=upto_level`. Quotient
/// vertices are numbered by first appearance; the in-edges of a class are
/// those of any member, mapped to classes, which is well defined because
/// equal trees have equal ordered child trees.
pub fn minimal_quotient(graph: &GradedGraph, upto_level: usize) -> Result<MinimalQuotient, TreeError> {
    if upto_level >= graph.num_levels() {
        return Err(TreeError::LevelOutOfRange { level: upto_level });
    }
    let truncated = graph.truncated(upto_level + 1);
    let classes = tree_classes(&truncated);
    let mut maps: Vec<Vec<usize>> = Vec::with_capacity(classes.len());
    let mut levels: Vec<Vec<Vec<usize>>> = Vec::with_capacity(classes.len());
    for (level, ids) in classes.iter().enumerate() {
        let mut numbering = Interner::new();
        let map: Vec<usize> = ids.iter().map(|&id| numbering.intern(id) as usize).collect();
        let mut row: Vec<Option<Vec<usize>>> = alloc::vec![None; numbering.len()];
        for (v, &class) in map.iter().enumerate() {
            if row[class].is_none() {
                let sources = truncated.in_edges(VertexRef::new(level, v));
                row[class] = Some(sources.iter().map(|&s| maps[level - 1][s]).collect());
            }
        }
        levels.push(row.into_iter().map(|r| r.unwrap_or_default()).collect());
        maps.push(map);
    }
    let quotient = GradedGraph::new(levels)?;
    Ok(MinimalQuotient { graph: quotient, maps })
}
