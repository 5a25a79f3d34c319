//! Vertex colorings and colored marked trees.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt::Write;

use thiserror::Error;

use crate::adic::{self, AdicError, PathPrefix};
use crate::graph::{GradedGraph, GraphError, VertexRef};
use crate::intern::{first_collision, structural_ids, Interner};

/// Largest number of path classes [`separating_coloring`] will tabulate per
/// level.
pub const MAX_SEPARATING_ENTRIES: u128 = 1 << 22;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ColoringError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Path(#[from] AdicError),
    #[error("coloring has {found} levels, at least {needed} are required")]
    MissingLevel { needed: usize, found: usize },
    #[error("coloring of level {level} lists {found} colors for {expected} vertices")]
    LevelLength { level: usize, expected: usize, found: usize },
    #[error("color {color} at {vertex} is outside the palette of size {palette}")]
    ColorOutOfRange { vertex: VertexRef, color: u32, palette: u32 },
    #[error("cut {cut} exceeds depth {depth}")]
    CutAboveDepth { cut: usize, depth: usize },
    #[error("depth {depth} exceeds the graph depth {graph_depth}")]
    DepthOutOfRange { depth: usize, graph_depth: usize },
    #[error("separating coloring needs {needed} entries, guard is {limit}")]
    SizeGuard { needed: u128, limit: u128 },
}

/// A color id for every vertex, per level, with per-level palette sizes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coloring {
    pub levels: Vec<Vec<u32>>,
    pub palette: Vec<u32>,
}

impl Coloring {
    /// Builds a coloring whose palette on each level is one more than the
    /// largest color used.
    pub fn from_levels(levels: Vec<Vec<u32>>) -> Self {
        let palette = levels.iter().map(|l| l.iter().max().map_or(0, |m| m + 1)).collect();
        Coloring { levels, palette }
    }

    pub fn color(&self, v: VertexRef) -> u32 {
        self.levels[v.level][v.index]
    }

    /// Checks that levels `0..=depth` color every vertex from the palette.
    pub fn check(&self, graph: &GradedGraph, depth: usize) -> Result<(), ColoringError> {
        if depth > graph.depth() {
            return Err(ColoringError::DepthOutOfRange { depth, graph_depth: graph.depth() });
        }
        if self.levels.len() <= depth || self.palette.len() <= depth {
            return Err(ColoringError::MissingLevel {
                needed: depth + 1,
                found: self.levels.len().min(self.palette.len()),
            });
        }
        for level in 0..=depth {
            let row = &self.levels[level];
            if row.len() != graph.level_size(level) {
                return Err(ColoringError::LevelLength {
                    level,
                    expected: graph.level_size(level),
                    found: row.len(),
                });
            }
            for (index, &color) in row.iter().enumerate() {
                if color >= self.palette[level] {
                    return Err(ColoringError::ColorOutOfRange {
                        vertex: VertexRef::new(level, index),
                        color,
                        palette: self.palette[level],
                    });
                }
            }
        }
        Ok(())
    }
}

/// Each vertex gets its own index as color.
pub fn canonical_coloring(graph: &GradedGraph) -> Coloring {
    Coloring {
        levels: graph.levels().iter().map(|l| (0..l.len() as u32).collect()).collect(),
        palette: graph.levels().iter().map(|l| l.len() as u32).collect(),
    }
}

/// One color everywhere.
pub fn uniform_coloring(graph: &GradedGraph) -> Coloring {
    Coloring {
        levels: graph.levels().iter().map(|l| alloc::vec![0; l.len()]).collect(),
        palette: alloc::vec![1; graph.num_levels()],
    }
}

/// An ordered graded tree with a color on every node.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ColoredTree {
    pub color: u32,
    pub children: Vec<Arc<ColoredTree>>,
}

impl ColoredTree {
    pub fn leaf_count(&self) -> u128 {
        if self.children.is_empty() {
            1
        } else {
            self.children.iter().map(|c| c.leaf_count()).sum()
        }
    }

    /// A node is `(`, its color, its children's encodings, then `)`.
    pub fn encode(&self) -> String {
        let mut out = String::new();
        self.encode_into(&mut out);
        out
    }

    fn encode_into(&self, out: &mut String) {
        let _ = write!(out, "({}", self.color);
        for c in &self.children {
            c.encode_into(out);
        }
        out.push(')');
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ColoredMarkedTree {
    pub tree: Arc<ColoredTree>,
    pub mark: u128,
}

impl ColoredMarkedTree {
    pub fn encode(&self) -> String {
        crate::trees::marked_key(&self.tree.encode(), self.mark)
    }
}

/// Colored trees of every vertex on levels `0..=level`.
pub fn colored_vertex_trees(
    graph: &GradedGraph,
    coloring: &Coloring,
    level: usize,
) -> Result<Vec<Vec<Arc<ColoredTree>>>, ColoringError> {
    coloring.check(graph, level)?;
    let mut out: Vec<Vec<Arc<ColoredTree>>> = Vec::with_capacity(level + 1);
    for n in 0..=level {
        let row = graph.levels()[n]
            .iter()
            .enumerate()
            .map(|(v, sources)| {
                Arc::new(ColoredTree {
                    color: coloring.levels[n][v],
                    children: sources.iter().map(|&s| Arc::clone(&out[n - 1][s])).collect(),
                })
            })
            .collect();
        out.push(row);
    }
    Ok(out)
}

/// The marked tree of `p` with every node colored by its graph vertex.
pub fn cotp(
    graph: &GradedGraph,
    coloring: &Coloring,
    p: &PathPrefix,
) -> Result<ColoredMarkedTree, ColoringError> {
    let end = adic::endpoint(graph, p)?;
    let mut trees = colored_vertex_trees(graph, coloring, end.level)?;
    let tree = trees.swap_remove(end.level).swap_remove(end.index);
    Ok(ColoredMarkedTree { tree, mark: adic::rank(graph, p)? })
}

/// Colors a level-`n` vertex by the adic-ordered list of classes of the paths
/// into it, where a path's class is its initial segment of length
/// `min(n, cut)`. With `cut = depth` the colors on level `depth` tell the
/// vertices apart.
pub fn separating_coloring(
    graph: &GradedGraph,
    depth: usize,
    cut: usize,
) -> Result<Coloring, ColoringError> {
    if depth > graph.depth() {
        return Err(ColoringError::DepthOutOfRange { depth, graph_depth: graph.depth() });
    }
    if cut > depth {
        return Err(ColoringError::CutAboveDepth { cut, depth });
    }
    let truncated = graph.truncated(depth + 1);
    let dims = truncated.dims()?;
    for row in &dims {
        let needed: u128 = row.iter().sum();
        if needed > MAX_SEPARATING_ENTRIES {
            return Err(ColoringError::SizeGuard { needed, limit: MAX_SEPARATING_ENTRIES });
        }
    }
    let mut levels = Vec::with_capacity(depth + 1);
    let mut palette = Vec::with_capacity(depth + 1);
    let mut classes: Vec<Vec<u32>> = Vec::new();
    for n in 0..=depth {
        classes = if n <= cut {
            // Paths of length <= cut are their own classes, numbered level-wide.
            let mut next = 0u32;
            dims[n]
                .iter()
                .map(|&d| {
                    let start = next;
                    next += d as u32;
                    (start..next).collect()
                })
                .collect()
        } else {
            truncated.levels()[n]
                .iter()
                .map(|sources| sources.iter().flat_map(|&s| classes[s].iter().copied()).collect())
                .collect()
        };
        let mut interner = Interner::new();
        let row: Vec<u32> = classes.iter().map(|c| interner.intern(c.clone())).collect();
        palette.push(interner.len() as u32);
        levels.push(row);
    }
    Ok(Coloring { levels, palette })
}

/// `sum_{k=1}^{a} b^k` with `a` the largest dim on `level` and `b` the number
/// of length-`min(level, cut)` paths; saturates at `u128::MAX`.
pub fn palette_bound(graph: &GradedGraph, level: usize, cut: usize) -> Result<u128, ColoringError> {
    let dims = graph.truncated(level + 1).dims()?;
    let a = dims[level].iter().copied().max().unwrap_or(0);
    let b: u128 = dims[level.min(cut)].iter().sum();
    let mut total: u128 = 0;
    let mut power: u128 = 1;
    for _ in 0..a {
        power = power.saturating_mul(b);
        total = total.saturating_add(power);
        if total == u128::MAX {
            break;
        }
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ColoredDefiniteness {
    Injective,
    /// Two distinct paths of the checked length with equal colored marked trees.
    Collision { first: PathPrefix, second: PathPrefix },
}

impl ColoredDefiniteness {
    pub fn is_injective(&self) -> bool {
        matches!(self, ColoredDefiniteness::Injective)
    }
}

/// Whether `p -> cotp(p)` is injective on the paths of length `depth`.
pub fn colored_definiteness_check(
    graph: &GradedGraph,
    coloring: &Coloring,
    depth: usize,
) -> Result<ColoredDefiniteness, ColoringError> {
    coloring.check(graph, depth)?;
    let truncated = graph.truncated(depth + 1);
    let ids = structural_ids(truncated.levels(), |n, v| coloring.levels[n][v]);
    // Paths into the same vertex differ in their mark, so a collision needs
    // two vertices with equal colored trees; their minimal paths collide.
    Ok(match first_collision(&ids[depth]) {
        None => ColoredDefiniteness::Injective,
        Some((a, b)) => ColoredDefiniteness::Collision {
            first: adic::minimal_path(&truncated, VertexRef::new(depth, a))?,
            second: adic::minimal_path(&truncated, VertexRef::new(depth, b))?,
        },
    })
}
