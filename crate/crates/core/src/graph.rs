//! Finite-depth ordered graded graphs.
//!
//! Level 0 holds the single root. Every vertex at level `n >= 1` carries an
//! ordered list of source indices at level `n - 1`; the list position of an
//! entry is the adic rank of that edge, and repeating a source encodes a
//! multiple edge.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

/// Upper bound on the number of edges a telescoped graph may carry.
pub const MAX_TELESCOPED_EDGES: u128 = 1 << 24;

/// A vertex named by level and position within the level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexRef {
    pub level: usize,
    pub index: usize,
}

impl VertexRef {
    pub const ROOT: VertexRef = VertexRef { level: 0, index: 0 };

    pub fn new(level: usize, index: usize) -> Self {
        VertexRef { level, index }
    }
}

impl fmt::Display for VertexRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}_{}", self.level, self.index)
    }
}

/// A violated structural invariant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Diagnostic {
    NoLevels,
    RootCount { found: usize },
    RootHasInEdges { vertex: VertexRef },
    EmptyInEdges { vertex: VertexRef },
    SourceOutOfRange { vertex: VertexRef, rank: usize, source: usize },
    DeadEnd { vertex: VertexRef },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::NoLevels => write!(f, "graph has no levels"),
            Diagnostic::RootCount { found } => {
                write!(f, "root level must hold exactly one vertex, found {found}")
            }
            Diagnostic::RootHasInEdges { vertex } => {
                write!(f, "root-level vertex {vertex} has in-edges")
            }
            Diagnostic::EmptyInEdges { vertex } => write!(f, "vertex {vertex} has no in-edges"),
            Diagnostic::SourceOutOfRange { vertex, rank, source } => write!(
                f,
                "in-edge {rank} of vertex {vertex} names source {source}, which does not exist"
            ),
            Diagnostic::DeadEnd { vertex } => {
                write!(f, "vertex {vertex} has no outgoing edge to the next level")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("invalid graph: {}", .0.first().map(|d| alloc::format!("{d}")).unwrap_or_default())]
    Invalid(Vec<Diagnostic>),
    #[error("vertex {0} does not exist")]
    InvalidVertex(VertexRef),
    #[error("path count overflows 128 bits")]
    Overflow,
    #[error("kept level list is empty")]
    EmptyLevelSelection,
    #[error("kept level list must start at level 0")]
    FirstLevelNotZero,
    #[error("kept levels must be strictly increasing (position {position})")]
    LevelsNotIncreasing { position: usize },
    #[error("level {level} is out of range")]
    LevelOutOfRange { level: usize },
    #[error("kept vertex set does not contain the root")]
    MissingRoot,
    #[error("kept vertex {vertex} has source {missing} outside the kept set")]
    NotClosed { vertex: VertexRef, missing: VertexRef },
    #[error("size guard exceeded: {needed} > {limit}")]
    SizeGuard { needed: u128, limit: u128 },
}

/// A finite-depth graded graph with an adic structure.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GradedGraph {
    levels: Vec<Vec<Vec<usize>>>,
}

impl GradedGraph {
    /// Builds a graph and checks every invariant.
    pub fn new(levels: Vec<Vec<Vec<usize>>>) -> Result<Self, GraphError> {
        let g = GradedGraph { levels };
        let diags = g.validate();
        if diags.is_empty() {
            Ok(g)
        } else {
            Err(GraphError::Invalid(diags))
        }
    }

    /// Builds a graph from in-edge lists of levels `1..`, with the root implied.
    pub fn from_upper_levels(upper: Vec<Vec<Vec<usize>>>) -> Result<Self, GraphError> {
        let mut levels = Vec::with_capacity(upper.len() + 1);
        levels.push(vec![Vec::new()]);
        levels.extend(upper);
        Self::new(levels)
    }

    /// Wraps level data without checking it. Use [`GradedGraph::validate`] to
    /// inspect the result.
    pub fn from_levels_unchecked(levels: Vec<Vec<Vec<usize>>>) -> Self {
        GradedGraph { levels }
    }

    pub fn levels(&self) -> &[Vec<Vec<usize>>] {
        &self.levels
    }

    pub fn into_levels(self) -> Vec<Vec<Vec<usize>>> {
        self.levels
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    /// Index of the top retained level.
    pub fn depth(&self) -> usize {
        self.levels.len().saturating_sub(1)
    }

    pub fn level_sizes(&self) -> Vec<usize> {
        self.levels.iter().map(Vec::len).collect()
    }

    pub fn level_size(&self, level: usize) -> usize {
        self.levels.get(level).map_or(0, Vec::len)
    }

    pub fn contains(&self, v: VertexRef) -> bool {
        v.index < self.level_size(v.level)
    }

    pub fn check_vertex(&self, v: VertexRef) -> Result<(), GraphError> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(GraphError::InvalidVertex(v))
        }
    }

    /// Ordered in-edge sources of `v` (empty for the root).
    ///
    /// Panics if `v` does not exist.
    pub fn in_edges(&self, v: VertexRef) -> &[usize] {
        &self.levels[v.level][v.index]
    }

    pub fn in_degree(&self, v: VertexRef) -> usize {
        self.in_edges(v).len()
    }

    pub fn vertices(&self, level: usize) -> impl Iterator<Item = VertexRef> + '_ {
        (0..self.level_size(level)).map(move |index| VertexRef { level, index })
    }

    pub fn edge_count(&self) -> usize {
        self.levels.iter().flatten().map(Vec::len).sum()
    }

    /// Every violated invariant, in level order.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut diags = Vec::new();
        let Some(root_level) = self.levels.first() else {
            diags.push(Diagnostic::NoLevels);
            return diags;
        };
        if root_level.len() != 1 {
            diags.push(Diagnostic::RootCount { found: root_level.len() });
        }
        for (index, sources) in root_level.iter().enumerate() {
            if !sources.is_empty() {
                diags.push(Diagnostic::RootHasInEdges { vertex: VertexRef::new(0, index) });
            }
        }
        for level in 1..self.levels.len() {
            let below = self.levels[level - 1].len();
            let mut used = vec![false; below];
            for (index, sources) in self.levels[level].iter().enumerate() {
                let vertex = VertexRef::new(level, index);
                if sources.is_empty() {
                    diags.push(Diagnostic::EmptyInEdges { vertex });
                }
                for (rank, &source) in sources.iter().enumerate() {
                    if source < below {
                        used[source] = true;
                    } else {
                        diags.push(Diagnostic::SourceOutOfRange { vertex, rank, source });
                    }
                }
            }
            for (index, hit) in used.iter().enumerate() {
                if !hit {
                    diags.push(Diagnostic::DeadEnd { vertex: VertexRef::new(level - 1, index) });
                }
            }
        }
        diags
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// Number of root-to-vertex paths for every vertex.
    pub fn dims(&self) -> Result<Vec<Vec<u128>>, GraphError> {
        self.path_counts_from(0)
    }

    /// Number of paths reaching each vertex from any vertex of `base`;
    /// levels below `base` are left empty.
    pub fn path_counts_from(&self, base: usize) -> Result<Vec<Vec<u128>>, GraphError> {
        if base >= self.levels.len() {
            return Err(GraphError::LevelOutOfRange { level: base });
        }
        let mut counts: Vec<Vec<u128>> = vec![Vec::new(); self.levels.len()];
        counts[base] = vec![1; self.levels[base].len()];
        for level in base + 1..self.levels.len() {
            let mut row = Vec::with_capacity(self.levels[level].len());
            for sources in &self.levels[level] {
                let mut total: u128 = 0;
                for &s in sources {
                    total = total.checked_add(counts[level - 1][s]).ok_or(GraphError::Overflow)?;
                }
                row.push(total);
            }
            counts[level] = row;
        }
        Ok(counts)
    }

    pub fn dim(&self, v: VertexRef) -> Result<u128, GraphError> {
        self.check_vertex(v)?;
        let dims = self.truncated(v.level + 1).dims()?;
        Ok(dims[v.level][v.index])
    }

    /// Out-edges per vertex as `(target index, rank in the target's list)`,
    /// sorted by target then rank. The top level has none.
    pub fn out_edges(&self) -> Vec<Vec<Vec<(usize, usize)>>> {
        let mut out: Vec<Vec<Vec<(usize, usize)>>> =
            self.levels.iter().map(|l| vec![Vec::new(); l.len()]).collect();
        for level in 1..self.levels.len() {
            for (w, sources) in self.levels[level].iter().enumerate() {
                for (rank, &s) in sources.iter().enumerate() {
                    out[level - 1][s].push((w, rank));
                }
            }
        }
        out
    }

    /// The first `num_levels` levels.
    pub fn truncated(&self, num_levels: usize) -> GradedGraph {
        GradedGraph { levels: self.levels[..num_levels.min(self.levels.len())].to_vec() }
    }

    /// Contracts the graph to the levels in `kept`. An edge of the result is a
    /// path segment of the original between consecutive kept levels; the
    /// in-edges of each new vertex list the segments in adic order.
    pub fn telescope(&self, kept: &[usize]) -> Result<GradedGraph, GraphError> {
        check_kept_levels(kept, self.levels.len())?;
        let mut levels = Vec::with_capacity(kept.len());
        levels.push(self.levels[0].clone());
        let mut edges: u128 = 0;
        for pair in kept.windows(2) {
            let starts = self.segment_starts(pair[0], pair[1])?;
            edges += starts.iter().map(|s| s.len() as u128).sum::<u128>();
            if edges > MAX_TELESCOPED_EDGES {
                return Err(GraphError::SizeGuard { needed: edges, limit: MAX_TELESCOPED_EDGES });
            }
            levels.push(starts);
        }
        Ok(GradedGraph { levels })
    }

    /// For each vertex of level `to`, the start vertex at level `from` of every
    /// segment reaching it, listed in adic order.
    pub fn segment_starts(&self, from: usize, to: usize) -> Result<Vec<Vec<usize>>, GraphError> {
        if to >= self.levels.len() {
            return Err(GraphError::LevelOutOfRange { level: to });
        }
        let counts = self.path_counts_from(from)?;
        let needed: u128 = counts[to].iter().sum();
        if needed > MAX_TELESCOPED_EDGES {
            return Err(GraphError::SizeGuard { needed, limit: MAX_TELESCOPED_EDGES });
        }
        let mut current: Vec<Vec<usize>> = (0..self.levels[from].len()).map(|v| vec![v]).collect();
        for level in from + 1..=to {
            current = self.levels[level]
                .iter()
                .map(|sources| sources.iter().flat_map(|&s| current[s].iter().copied()).collect())
                .collect();
        }
        Ok(current)
    }

    /// The subgraph on `keep`, which must contain the root and be closed under
    /// taking in-edge sources. Kept vertices retain their full ordered in-edge
    /// lists. Returns the subgraph and, per level, the original vertex behind
    /// each new index.
    pub fn induced_subgraph(
        &self,
        keep: &BTreeSet<VertexRef>,
    ) -> Result<(GradedGraph, Vec<Vec<VertexRef>>), GraphError> {
        if !keep.contains(&VertexRef::ROOT) {
            return Err(GraphError::MissingRoot);
        }
        let mut new_index: Vec<Vec<Option<usize>>> =
            self.levels.iter().map(|l| vec![None; l.len()]).collect();
        let mut map: Vec<Vec<VertexRef>> = vec![Vec::new(); self.levels.len()];
        for &v in keep {
            self.check_vertex(v)?;
            new_index[v.level][v.index] = Some(map[v.level].len());
            map[v.level].push(v);
        }
        let mut levels = Vec::new();
        for (level, kept) in map.iter().enumerate() {
            if kept.is_empty() {
                break;
            }
            let mut row = Vec::with_capacity(kept.len());
            for &v in kept {
                let sources = self.in_edges(v);
                let mut mapped = Vec::with_capacity(sources.len());
                for &s in sources {
                    match new_index[level - 1][s] {
                        Some(i) => mapped.push(i),
                        None => {
                            return Err(GraphError::NotClosed {
                                vertex: v,
                                missing: VertexRef::new(level - 1, s),
                            })
                        }
                    }
                }
                row.push(mapped);
            }
            levels.push(row);
        }
        // Kept vertices above an empty level have sources outside the set.
        if let Some(&v) = map.iter().skip(levels.len()).flatten().next() {
            let s = self.in_edges(v)[0];
            return Err(GraphError::NotClosed { vertex: v, missing: VertexRef::new(v.level - 1, s) });
        }
        map.truncate(levels.len());
        let sub = GradedGraph::new(levels)?;
        Ok((sub, map))
    }
}

fn check_kept_levels(kept: &[usize], num_levels: usize) -> Result<(), GraphError> {
    let (&first, _) = kept.split_first().ok_or(GraphError::EmptyLevelSelection)?;
    if first != 0 {
        return Err(GraphError::FirstLevelNotZero);
    }
    for (position, pair) in kept.windows(2).enumerate() {
        if pair[1] <= pair[0] {
            return Err(GraphError::LevelsNotIncreasing { position: position + 1 });
        }
    }
    for &level in kept {
        if level >= num_levels {
            return Err(GraphError::LevelOutOfRange { level });
        }
    }
    Ok(())
}
