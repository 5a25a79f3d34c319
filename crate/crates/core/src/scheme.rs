//! Hierarchies on the integers and distributions over marked trees.
//!
//! Following the adic orbit of a path identifies the paths into its level-`n`
//! endpoint with a window of consecutive integers, the path itself sitting at
//! 0. The window is cut into blocks, one per in-edge of the endpoint, each
//! block being the window of the level below. Pushing a central measure
//! forward along `p -> otp(p)` gives a distribution over marked trees; at
//! finite depth these are the cylinder marginals of the random hierarchy.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::adic::{self, AdicError, PathPrefix};
use crate::graph::{GradedGraph, GraphError, VertexRef};
use crate::measures::{CentralWeights, MeasureError, PathSampler, Weight};
use crate::trees::{self, marked_key, TreeError};

/// Largest number of cylinders [`exact_scheme`] will enumerate.
pub const MAX_SCHEME_CYLINDERS: u128 = 1 << 20;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SchemeError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Path(#[from] AdicError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("path of length {len} is shorter than depth {depth}")]
    PathTooShort { len: usize, depth: usize },
    #[error("{needed} cylinders exceed the guard {limit}")]
    SizeGuard { needed: u128, limit: u128 },
    #[error("distributions have depths {left} and {right}")]
    DepthMismatch { left: usize, right: usize },
}

/// One level of a hierarchy: an integer window and its blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HierarchyLevel {
    pub start: i128,
    /// Inclusive.
    pub end: i128,
    /// Inclusive sub-windows, left to right; empty on level 0.
    pub blocks: Vec<(i128, i128)>,
}

impl HierarchyLevel {
    pub fn len(&self) -> u128 {
        (self.end - self.start + 1) as u128
    }

    pub fn is_empty(&self) -> bool {
        self.end < self.start
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HierarchyPrefix {
    pub levels: Vec<HierarchyLevel>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum HierarchyViolation {
    #[error("level {level} window does not contain 0")]
    MissesZero { level: usize },
    #[error("level {level} block {block} is not a non-empty interval")]
    EmptyBlock { level: usize, block: usize },
    #[error("level {level} blocks do not tile the window")]
    NotTiled { level: usize },
    #[error("window below level {level} is not its block containing 0")]
    NotNested { level: usize },
}

impl HierarchyPrefix {
    /// Checks the interval, tiling and nesting invariants.
    pub fn check(&self) -> Result<(), HierarchyViolation> {
        for (level, l) in self.levels.iter().enumerate() {
            if l.start > 0 || l.end < 0 {
                return Err(HierarchyViolation::MissesZero { level });
            }
            if level == 0 {
                continue;
            }
            let mut next = l.start;
            for (block, &(a, b)) in l.blocks.iter().enumerate() {
                if b < a {
                    return Err(HierarchyViolation::EmptyBlock { level, block });
                }
                if a != next {
                    return Err(HierarchyViolation::NotTiled { level });
                }
                next = b + 1;
            }
            if next != l.end + 1 {
                return Err(HierarchyViolation::NotTiled { level });
            }
            let below = &self.levels[level - 1];
            let holding_zero = l.blocks.iter().find(|&&(a, b)| a <= 0 && 0 <= b);
            if holding_zero != Some(&(below.start, below.end)) {
                return Err(HierarchyViolation::NotNested { level });
            }
        }
        Ok(())
    }
}

/// The hierarchy read off the first `depth` transitions of `p`.
pub fn hierarchy_of_path(
    graph: &GradedGraph,
    p: &PathPrefix,
    depth: usize,
) -> Result<HierarchyPrefix, SchemeError> {
    let verts = adic::vertex_path(graph, p)?;
    if p.len() < depth {
        return Err(SchemeError::PathTooShort { len: p.len(), depth });
    }
    let dims = graph.truncated(depth + 1).dims()?;
    let mut levels = Vec::with_capacity(depth + 1);
    let mut position: u128 = 0;
    for n in 0..=depth {
        if n > 0 {
            position +=
                adic::segment_rank(graph, &dims, n - 1, n, &verts, &p.ranks);
        }
        let v = VertexRef::new(n, verts[n]);
        let start = -(position as i128);
        let end = start + dims[n][v.index] as i128 - 1;
        let mut blocks = Vec::new();
        if n > 0 {
            let mut a = start;
            for &s in graph.in_edges(v) {
                let b = a + dims[n - 1][s] as i128 - 1;
                blocks.push((a, b));
                a = b + 1;
            }
        }
        levels.push(HierarchyLevel { start, end, blocks });
    }
    Ok(HierarchyPrefix { levels })
}

/// A distribution over marked-tree keys at a fixed depth.
#[derive(Clone, Debug, PartialEq)]
pub struct SchemeDistribution<W> {
    pub depth: usize,
    pub entries: BTreeMap<String, W>,
}

impl<W: Weight> SchemeDistribution<W> {
    pub fn total(&self) -> W {
        self.entries.values().fold(W::zero(), |acc, m| acc + m.clone())
    }

    pub fn to_f64(&self) -> SchemeDistribution<f64> {
        SchemeDistribution {
            depth: self.depth,
            entries: self.entries.iter().map(|(k, m)| (k.clone(), m.as_f64())).collect(),
        }
    }
}

/// Marked-tree keys of paths of one length, with tree encodings cached per
/// endpoint.
#[derive(Clone, Debug)]
pub struct SchemeKeys {
    depth: usize,
    tree_keys: Vec<String>,
    dims: Vec<Vec<u128>>,
}

impl SchemeKeys {
    pub fn new(graph: &GradedGraph, depth: usize) -> Result<Self, SchemeError> {
        let trees = trees::vertex_trees(graph, depth)?;
        let tree_keys = trees[depth].iter().map(|t| t.encode()).collect();
        let dims = graph.truncated(depth + 1).dims()?;
        Ok(SchemeKeys { depth, tree_keys, dims })
    }

    pub fn key(&self, graph: &GradedGraph, p: &PathPrefix) -> Result<String, SchemeError> {
        if p.len() != self.depth {
            return Err(SchemeError::PathTooShort { len: p.len(), depth: self.depth });
        }
        let mark = adic::rank_with(graph, &self.dims, p)?;
        Ok(marked_key(&self.tree_keys[p.end], mark))
    }

    pub fn tree_key(&self, end: usize) -> &str {
        &self.tree_keys[end]
    }

    pub fn dim(&self, end: usize) -> u128 {
        self.dims[self.depth][end]
    }
}

/// Exact pushforward: every path into every level-`depth` vertex `v` adds
/// `m_depth(v)` to the key of its marked tree.
pub fn exact_scheme<W: Weight>(
    graph: &GradedGraph,
    weights: &CentralWeights<W>,
    depth: usize,
) -> Result<SchemeDistribution<W>, SchemeError> {
    weights.check_shape(graph, depth)?;
    let keys = SchemeKeys::new(graph, depth)?;
    let needed: u128 = (0..graph.level_size(depth)).map(|v| keys.dim(v)).sum();
    if needed > MAX_SCHEME_CYLINDERS {
        return Err(SchemeError::SizeGuard { needed, limit: MAX_SCHEME_CYLINDERS });
    }
    let mut entries: BTreeMap<String, W> = BTreeMap::new();
    for v in 0..graph.level_size(depth) {
        let m = &weights.levels[depth][v];
        for mark in 0..keys.dim(v) {
            let slot = entries.entry(marked_key(keys.tree_key(v), mark)).or_insert_with(W::zero);
            *slot = slot.clone() + m.clone();
        }
    }
    Ok(SchemeDistribution { depth, entries })
}

/// Key counts for a batch of sampled paths.
pub fn count_keys(
    graph: &GradedGraph,
    keys: &SchemeKeys,
    paths: &[PathPrefix],
) -> Result<BTreeMap<String, u64>, SchemeError> {
    let mut counts = BTreeMap::new();
    for p in paths {
        *counts.entry(keys.key(graph, p)?).or_insert(0) += 1;
    }
    Ok(counts)
}

/// Adds `other` into `into`.
pub fn merge_counts(into: &mut BTreeMap<String, u64>, other: BTreeMap<String, u64>) {
    for (k, c) in other {
        *into.entry(k).or_insert(0) += c;
    }
}

pub fn counts_to_distribution(
    depth: usize,
    counts: &BTreeMap<String, u64>,
) -> SchemeDistribution<f64> {
    let total: u64 = counts.values().sum();
    SchemeDistribution {
        depth,
        entries: counts.iter().map(|(k, &c)| (k.clone(), c as f64 / total as f64)).collect(),
    }
}

/// Monte Carlo estimate of [`exact_scheme`] from `samples` sampled paths.
pub fn empirical_scheme<W: Weight>(
    graph: &GradedGraph,
    weights: &CentralWeights<W>,
    depth: usize,
    samples: usize,
    seed: u64,
) -> Result<SchemeDistribution<f64>, SchemeError> {
    if samples == 0 {
        return Err(MeasureError::NoSamples.into());
    }
    let sampler = PathSampler::new(graph, weights, depth)?;
    let keys = SchemeKeys::new(graph, depth)?;
    let paths = sampler.sample_many(seed, samples)?;
    Ok(counts_to_distribution(depth, &count_keys(graph, &keys, &paths)?))
}

/// Total variation distance, `1/2 sum |d1 - d2|` over the union of keys.
pub fn scheme_distance<W: Weight>(
    d1: &SchemeDistribution<W>,
    d2: &SchemeDistribution<W>,
) -> Result<f64, SchemeError> {
    if d1.depth != d2.depth {
        return Err(SchemeError::DepthMismatch { left: d1.depth, right: d2.depth });
    }
    let zero = W::zero();
    let mut sum = W::zero();
    for (k, a) in &d1.entries {
        sum = sum + a.abs_diff(d2.entries.get(k).unwrap_or(&zero));
    }
    for (k, b) in &d2.entries {
        if !d1.entries.contains_key(k) {
            sum = sum + b.clone();
        }
    }
    Ok(sum.as_f64() / 2.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DefinitenessReport<W> {
    pub depth: usize,
    /// `sum_key (mass of key)^2`: the chance two independent paths share a key.
    pub key_collision: W,
    /// `sum_cylinder m^2`: the same chance for cylinders.
    pub cylinder_collision: W,
    pub distinct_keys: usize,
    pub cylinders: u128,
}

impl<W> DefinitenessReport<W> {
    /// Distinct keys per cylinder; 1 exactly when `p -> otp(p)` is injective.
    pub fn resolution(&self) -> f64 {
        self.distinct_keys as f64 / self.cylinders as f64
    }

    pub fn is_resolved(&self) -> bool {
        self.distinct_keys as u128 == self.cylinders
    }
}

pub fn definiteness_diagnostic<W: Weight>(
    graph: &GradedGraph,
    weights: &CentralWeights<W>,
    depth: usize,
) -> Result<DefinitenessReport<W>, SchemeError> {
    let scheme = exact_scheme(graph, weights, depth)?;
    let dims = graph.truncated(depth + 1).dims()?;
    let key_collision =
        scheme.entries.values().fold(W::zero(), |acc, m| acc + m.clone() * m.clone());
    let mut cylinder_collision = W::zero();
    for (v, m) in weights.levels[depth].iter().enumerate() {
        cylinder_collision = cylinder_collision + W::from_count(dims[depth][v]) * m.clone() * m.clone();
    }
    Ok(DefinitenessReport {
        depth,
        key_collision,
        cylinder_collision,
        distinct_keys: scheme.entries.len(),
        cylinders: dims[depth].iter().sum(),
    })
}
