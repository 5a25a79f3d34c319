//! The adic order on finite paths and the Vershik successor.
//!
//! A path to a vertex `v` at level `L` is stored as `v`'s index plus one
//! in-edge rank per transition: `ranks[t]` is the position of the edge used
//! in the in-edge list of the level-`t + 1` vertex on the path. Walking down
//! from the endpoint recovers the vertex sequence.
//!
//! Two paths with the same endpoint compare at the highest transition where
//! their ranks differ. The minimal path to a vertex therefore takes rank 0
//! everywhere, and the successor bumps the lowest transition that is not
//! already at its maximal rank.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use thiserror::Error;

use crate::graph::{GradedGraph, GraphError, VertexRef};

/// Upper bound on the number of paths [`enumerate_paths`] will materialize.
pub const MAX_ENUMERATED_PATHS: u128 = 1 << 22;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum AdicError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("path of length {len} exceeds graph depth {depth}")]
    PathTooLong { len: usize, depth: usize },
    #[error("endpoint {end} does not exist at level {level}")]
    EndOutOfRange { level: usize, end: usize },
    #[error("rank {rank} at transition {transition} exceeds in-degree {in_degree}")]
    RankOutOfRange { transition: usize, rank: usize, in_degree: usize },
    #[error("paths end at different vertices ({left} vs {right})")]
    EndpointMismatch { left: VertexRef, right: VertexRef },
    #[error("path index {index} is not below the path count {count}")]
    IndexOutOfRange { index: u128, count: u128 },
    #[error("{count} paths exceed the enumeration guard {limit}")]
    SizeGuard { count: u128, limit: u128 },
}

/// A finite path from the root, identified by its endpoint and in-edge ranks.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct PathPrefix {
    /// Index of the endpoint within level `ranks.len()`.
    pub end: usize,
    pub ranks: Vec<usize>,
}

impl PathPrefix {
    /// The empty path at the root.
    pub fn root() -> Self {
        PathPrefix { end: 0, ranks: Vec::new() }
    }

    pub fn new(end: usize, ranks: Vec<usize>) -> Self {
        PathPrefix { end, ranks }
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    pub fn endpoint_ref(&self) -> VertexRef {
        VertexRef::new(self.ranks.len(), self.end)
    }
}

impl fmt::Display for PathPrefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, r) in self.ranks.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{r}")?;
        }
        Ok(())
    }
}

/// Vertex indices visited by `p`, from the root (index 0) to the endpoint.
pub fn vertex_path(graph: &GradedGraph, p: &PathPrefix) -> Result<Vec<usize>, AdicError> {
    let len = p.ranks.len();
    if len >= graph.num_levels() {
        return Err(AdicError::PathTooLong { len, depth: graph.depth() });
    }
    if p.end >= graph.level_size(len) {
        return Err(AdicError::EndOutOfRange { level: len, end: p.end });
    }
    let mut verts = vec![0; len + 1];
    verts[len] = p.end;
    for t in (0..len).rev() {
        let sources = graph.in_edges(VertexRef::new(t + 1, verts[t + 1]));
        let rank = p.ranks[t];
        let source = *sources.get(rank).ok_or(AdicError::RankOutOfRange {
            transition: t,
            rank,
            in_degree: sources.len(),
        })?;
        verts[t] = source;
    }
    Ok(verts)
}

pub fn endpoint(graph: &GradedGraph, p: &PathPrefix) -> Result<VertexRef, AdicError> {
    vertex_path(graph, p)?;
    Ok(p.endpoint_ref())
}

/// Adic comparison of two paths with a common endpoint.
pub fn compare(graph: &GradedGraph, p: &PathPrefix, q: &PathPrefix) -> Result<Ordering, AdicError> {
    vertex_path(graph, p)?;
    vertex_path(graph, q)?;
    if p.endpoint_ref() != q.endpoint_ref() {
        return Err(AdicError::EndpointMismatch { left: p.endpoint_ref(), right: q.endpoint_ref() });
    }
    Ok(p.ranks.iter().rev().cmp(q.ranks.iter().rev()))
}

/// All paths to `v`, ascending in the adic order.
pub fn enumerate_paths(graph: &GradedGraph, v: VertexRef) -> Result<Vec<PathPrefix>, AdicError> {
    graph.check_vertex(v)?;
    let count = graph.dim(v)?;
    if count > MAX_ENUMERATED_PATHS {
        return Err(AdicError::SizeGuard { count, limit: MAX_ENUMERATED_PATHS });
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut scratch = vec![0; v.level];
    collect_paths(graph, v, v.index, &mut scratch, &mut out);
    Ok(out)
}

fn collect_paths(
    graph: &GradedGraph,
    v: VertexRef,
    end: usize,
    ranks: &mut [usize],
    out: &mut Vec<PathPrefix>,
) {
    if v.level == 0 {
        out.push(PathPrefix { end, ranks: ranks.to_vec() });
        return;
    }
    for (rank, &s) in graph.in_edges(v).iter().enumerate() {
        ranks[v.level - 1] = rank;
        collect_paths(graph, VertexRef::new(v.level - 1, s), end, ranks, out);
    }
}

/// The adic successor of `p`, or `None` when `p` is maximal.
pub fn successor(graph: &GradedGraph, p: &PathPrefix) -> Result<Option<PathPrefix>, AdicError> {
    let verts = vertex_path(graph, p)?;
    let bump = (0..p.ranks.len())
        .find(|&t| p.ranks[t] + 1 < graph.in_degree(VertexRef::new(t + 1, verts[t + 1])));
    Ok(bump.map(|t| {
        let mut ranks = p.ranks.clone();
        ranks[t] += 1;
        ranks[..t].iter_mut().for_each(|r| *r = 0);
        PathPrefix { end: p.end, ranks }
    }))
}

/// The adic predecessor of `p`, or `None` when `p` is minimal.
pub fn predecessor(graph: &GradedGraph, p: &PathPrefix) -> Result<Option<PathPrefix>, AdicError> {
    let verts = vertex_path(graph, p)?;
    let Some(t) = (0..p.ranks.len()).find(|&t| p.ranks[t] > 0) else {
        return Ok(None);
    };
    let mut ranks = p.ranks.clone();
    ranks[t] -= 1;
    let below = graph.in_edges(VertexRef::new(t + 1, verts[t + 1]))[ranks[t]];
    fill_maximal(graph, VertexRef::new(t, below), &mut ranks[..t]);
    Ok(Some(PathPrefix { end: p.end, ranks }))
}

fn fill_maximal(graph: &GradedGraph, mut v: VertexRef, ranks: &mut [usize]) {
    while v.level > 0 {
        let sources = graph.in_edges(v);
        let r = sources.len() - 1;
        ranks[v.level - 1] = r;
        v = VertexRef::new(v.level - 1, sources[r]);
    }
}

pub fn minimal_path(graph: &GradedGraph, v: VertexRef) -> Result<PathPrefix, AdicError> {
    graph.check_vertex(v)?;
    Ok(PathPrefix { end: v.index, ranks: vec![0; v.level] })
}

pub fn maximal_path(graph: &GradedGraph, v: VertexRef) -> Result<PathPrefix, AdicError> {
    graph.check_vertex(v)?;
    let mut ranks = vec![0; v.level];
    fill_maximal(graph, v, &mut ranks);
    Ok(PathPrefix { end: v.index, ranks })
}

/// 0-based position of `p` among the paths to its endpoint.
pub fn rank(graph: &GradedGraph, p: &PathPrefix) -> Result<u128, AdicError> {
    let counts = graph.truncated(p.len() + 1).dims()?;
    rank_with(graph, &counts, p)
}

/// [`rank`] with precomputed path counts (from [`GradedGraph::dims`]).
pub fn rank_with(graph: &GradedGraph, dims: &[Vec<u128>], p: &PathPrefix) -> Result<u128, AdicError> {
    let verts = vertex_path(graph, p)?;
    Ok(segment_rank(graph, dims, 0, p.len(), &verts, &p.ranks))
}

/// Position of the segment `ranks[base..top]` among all segments from level
/// `base` into `verts[top]`, with `counts` as from
/// [`GradedGraph::path_counts_from`]`(base)`.
pub fn segment_rank(
    graph: &GradedGraph,
    counts: &[Vec<u128>],
    base: usize,
    top: usize,
    verts: &[usize],
    ranks: &[usize],
) -> u128 {
    let mut total = 0;
    for t in base..top {
        let sources = graph.in_edges(VertexRef::new(t + 1, verts[t + 1]));
        total += sources[..ranks[t]].iter().map(|&s| counts[t][s]).sum::<u128>();
    }
    total
}

/// The path to `v` at adic position `index`.
pub fn unrank(graph: &GradedGraph, v: VertexRef, index: u128) -> Result<PathPrefix, AdicError> {
    graph.check_vertex(v)?;
    let counts = graph.truncated(v.level + 1).dims()?;
    let (_, ranks) = unrank_segment(graph, &counts, 0, v, index)?;
    Ok(PathPrefix { end: v.index, ranks })
}

/// Inverse of [`segment_rank`]: the segment from level `base` into `v` at
/// position `index`. Returns its start vertex and the ranks of transitions
/// `base..v.level` (stored at offsets `0..v.level - base`).
pub fn unrank_segment(
    graph: &GradedGraph,
    counts: &[Vec<u128>],
    base: usize,
    v: VertexRef,
    mut index: u128,
) -> Result<(usize, Vec<usize>), AdicError> {
    let count = counts[v.level][v.index];
    if index >= count {
        return Err(AdicError::IndexOutOfRange { index, count });
    }
    let mut ranks = vec![0; v.level - base];
    let mut cur = v;
    while cur.level > base {
        let sources = graph.in_edges(cur);
        let mut chosen = None;
        for (r, &s) in sources.iter().enumerate() {
            let c = counts[cur.level - 1][s];
            if index < c {
                chosen = Some((r, s));
                break;
            }
            index -= c;
        }
        let (r, s) = chosen.expect("index bounded by path count");
        ranks[cur.level - 1 - base] = r;
        cur = VertexRef::new(cur.level - 1, s);
    }
    Ok((cur.index, ranks))
}

/// The first `len` transitions of `p`, ending at the vertex `p` visits at
/// level `len`.
pub fn prefix(graph: &GradedGraph, p: &PathPrefix, len: usize) -> Result<PathPrefix, AdicError> {
    let verts = vertex_path(graph, p)?;
    if len > p.len() {
        return Err(AdicError::PathTooLong { len, depth: p.len() });
    }
    Ok(PathPrefix { end: verts[len], ranks: p.ranks[..len].to_vec() })
}
