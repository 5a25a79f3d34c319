//! The uniadic graph and embeddings into it.
//!
//! Level `n + 1` of the uniadic graph consists of one vertex for every ordered
//! pair of level-`n` vertices and one copy of every level-`n` vertex. A pair
//! `(u, v)` has the in-edge list `[u, v]`, a copy of `u` the list `[u]`. With
//! `s` vertices on level `n`, the pair `(u, v)` has index `u * s + v` and the
//! copy of `u` has index `s * s + u`.
//!
//! Any graph whose non-root vertices have at least two in-edges (counted with
//! multiplicity) can be refined, by inserting intermediate layers, into a
//! graph whose vertices have one or two in-edges and pairwise distinct
//! ordered ancestries. Such a graph sits inside the uniadic graph, and
//! telescoping it back to the original levels recovers the input exactly.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

use crate::adic::{self, AdicError, PathPrefix};
use crate::graph::{GradedGraph, GraphError, VertexRef};
use crate::intern::{first_collision, Interner};
use crate::measures::{CentralWeights, MeasureError, Weight};

/// Largest uniadic level [`ua_graph`] will materialize.
pub const MAX_UA_LEVEL_SIZE: u128 = 1 << 21;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EmbedError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Path(#[from] AdicError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("vertex {vertex} has in-degree {degree}; at least 2 is required")]
    InDegree { vertex: VertexRef, degree: usize },
    #[error("bottom vertices {first} and {second} share the single parent {parent} and cannot be separated")]
    Inseparable { first: usize, second: usize, parent: usize },
    #[error("bottom vertex {vertex} lists source {parent} but the top has {top_size} vertices")]
    SourceOutOfRange { vertex: usize, parent: usize, top_size: usize },
    #[error("bottom vertex {vertex} has no in-edges")]
    EmptyInEdges { vertex: usize },
    #[error("uniadic level {level} has {size} vertices, above the guard {limit}")]
    SizeGuard { level: usize, size: u128, limit: u128 },
    #[error("the embedding does not match the graph")]
    Mismatch,
}

/// Size of uniadic level `n`, if it fits in a `u128`.
pub fn ua_level_size(level: usize) -> Option<u128> {
    let mut s: u128 = 1;
    for _ in 0..level {
        s = s.checked_mul(s)?.checked_add(s)?;
    }
    Some(s)
}

/// A vertex of the uniadic graph, stored as its recursive shape.
#[derive(Clone)]
pub struct UaVertex(Arc<UaNode>);

struct UaNode {
    shape: UaShape,
    level: usize,
    index: Option<u128>,
}

#[derive(Clone)]
pub enum UaShape {
    Root,
    Pair(UaVertex, UaVertex),
    Copy(UaVertex),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum UaParseError {
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("unexpected character {found:?} at byte {at}")]
    Unexpected { found: char, at: usize },
    #[error("pair members lie on levels {left} and {right}")]
    LevelMismatch { left: usize, right: usize },
    #[error("trailing input at byte {at}")]
    Trailing { at: usize },
}

impl UaVertex {
    pub fn root() -> Self {
        UaVertex(Arc::new(UaNode { shape: UaShape::Root, level: 0, index: Some(0) }))
    }

    /// The pair `(left, right)`; `None` when the members lie on different
    /// levels.
    pub fn pair(left: &UaVertex, right: &UaVertex) -> Option<Self> {
        if left.level() != right.level() {
            return None;
        }
        let level = left.level();
        let index = (|| {
            let s = ua_level_size(level)?;
            left.index()?.checked_mul(s)?.checked_add(right.index()?)
        })();
        Some(UaVertex(Arc::new(UaNode {
            shape: UaShape::Pair(left.clone(), right.clone()),
            level: level + 1,
            index,
        })))
    }

    pub fn copy(inner: &UaVertex) -> Self {
        let level = inner.level();
        let index = (|| {
            let s = ua_level_size(level)?;
            s.checked_mul(s)?.checked_add(inner.index()?)
        })();
        UaVertex(Arc::new(UaNode { shape: UaShape::Copy(inner.clone()), level: level + 1, index }))
    }

    pub fn shape(&self) -> &UaShape {
        &self.0.shape
    }

    pub fn level(&self) -> usize {
        self.0.level
    }

    /// Position within its level of the uniadic graph, when that fits a
    /// `u128`.
    pub fn index(&self) -> Option<u128> {
        self.0.index
    }

    /// The vertex at `index` on `level`.
    pub fn from_index(level: usize, index: u128) -> Option<Self> {
        if level == 0 {
            return (index == 0).then(UaVertex::root);
        }
        let s = ua_level_size(level - 1)?;
        let pairs = s.checked_mul(s)?;
        if index < pairs {
            let l = UaVertex::from_index(level - 1, index / s)?;
            let r = UaVertex::from_index(level - 1, index % s)?;
            UaVertex::pair(&l, &r)
        } else if index - pairs < s {
            Some(UaVertex::copy(&UaVertex::from_index(level - 1, index - pairs)?))
        } else {
            None
        }
    }

    fn ptr(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }
}

impl PartialEq for UaVertex {
    fn eq(&self, other: &Self) -> bool {
        if Arc::ptr_eq(&self.0, &other.0) {
            return true;
        }
        if self.level() != other.level() {
            return false;
        }
        if let (Some(a), Some(b)) = (self.index(), other.index()) {
            return a == b;
        }
        match (self.shape(), other.shape()) {
            (UaShape::Root, UaShape::Root) => true,
            (UaShape::Copy(a), UaShape::Copy(b)) => a == b,
            (UaShape::Pair(a, b), UaShape::Pair(c, d)) => a == c && b == d,
            _ => false,
        }
    }
}

impl Eq for UaVertex {}

impl fmt::Display for UaVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.shape() {
            UaShape::Root => f.write_str("R"),
            UaShape::Copy(a) => write!(f, "C({a})"),
            UaShape::Pair(a, b) => write!(f, "P({a},{b})"),
        }
    }
}

impl fmt::Debug for UaVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for UaVertex {
    type Err = UaParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bytes = s.as_bytes();
        let mut at = 0;
        let v = parse_term(bytes, &mut at)?;
        if at != bytes.len() {
            return Err(UaParseError::Trailing { at });
        }
        Ok(v)
    }
}

fn expect(bytes: &[u8], at: &mut usize, want: u8) -> Result<(), UaParseError> {
    match bytes.get(*at) {
        Some(&b) if b == want => {
            *at += 1;
            Ok(())
        }
        Some(&b) => Err(UaParseError::Unexpected { found: b as char, at: *at }),
        None => Err(UaParseError::UnexpectedEnd),
    }
}

fn parse_term(bytes: &[u8], at: &mut usize) -> Result<UaVertex, UaParseError> {
    let head = *bytes.get(*at).ok_or(UaParseError::UnexpectedEnd)?;
    *at += 1;
    match head {
        b'R' => Ok(UaVertex::root()),
        b'C' => {
            expect(bytes, at, b'(')?;
            let inner = parse_term(bytes, at)?;
            expect(bytes, at, b')')?;
            Ok(UaVertex::copy(&inner))
        }
        b'P' => {
            expect(bytes, at, b'(')?;
            let left = parse_term(bytes, at)?;
            expect(bytes, at, b',')?;
            let right = parse_term(bytes, at)?;
            expect(bytes, at, b')')?;
            UaVertex::pair(&left, &right).ok_or(UaParseError::LevelMismatch {
                left: left.level(),
                right: right.level(),
            })
        }
        other => Err(UaParseError::Unexpected { found: other as char, at: *at - 1 }),
    }
}

/// Dense structural ids for uniadic terms, memoized by node address.
#[derive(Default)]
struct TermIds {
    interner: Interner<(u8, u32, u32)>,
    memo: BTreeMap<usize, u32>,
}

impl TermIds {
    fn id(&mut self, v: &UaVertex) -> u32 {
        if let Some(&id) = self.memo.get(&v.ptr()) {
            return id;
        }
        let key = match v.shape() {
            UaShape::Root => (0, 0, 0),
            UaShape::Copy(a) => (1, self.id(a), 0),
            UaShape::Pair(a, b) => {
                let a = self.id(a);
                (2, a, self.id(b))
            }
        };
        let id = self.interner.intern(key);
        self.memo.insert(v.ptr(), id);
        id
    }
}

fn check_ua_depth(depth: usize) -> Result<(), EmbedError> {
    for level in 0..=depth {
        let size = ua_level_size(level).unwrap_or(u128::MAX);
        if size > MAX_UA_LEVEL_SIZE {
            return Err(EmbedError::SizeGuard { level, size, limit: MAX_UA_LEVEL_SIZE });
        }
    }
    Ok(())
}

/// The uniadic graph truncated to `depth`.
pub fn ua_graph(depth: usize) -> Result<GradedGraph, EmbedError> {
    check_ua_depth(depth)?;
    let mut levels: Vec<Vec<Vec<usize>>> = vec![vec![vec![]]];
    for n in 0..depth {
        let s = levels[n].len();
        let mut next = Vec::with_capacity(s * s + s);
        for u in 0..s {
            for v in 0..s {
                next.push(vec![u, v]);
            }
        }
        next.extend((0..s).map(|u| vec![u]));
        levels.push(next);
    }
    Ok(GradedGraph::new(levels)?)
}

/// The vertices of [`ua_graph`]`(depth)` as terms, level by level.
pub fn ua_terms(depth: usize) -> Result<Vec<Vec<UaVertex>>, EmbedError> {
    check_ua_depth(depth)?;
    let mut levels = vec![vec![UaVertex::root()]];
    for n in 0..depth {
        let below = &levels[n];
        let mut next = Vec::with_capacity(below.len() * (below.len() + 1));
        for u in below {
            for v in below {
                next.push(UaVertex::pair(u, v).expect("same level"));
            }
        }
        next.extend(below.iter().map(UaVertex::copy));
        levels.push(next);
    }
    Ok(levels)
}

/// Intermediate layers between a top level and a bottom level. Each entry of
/// `layers` is one level of in-edge lists into the level above it (the first
/// into the top); the last entry is the bottom.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerStack {
    pub top_size: usize,
    pub layers: Vec<Vec<Vec<usize>>>,
}

impl LayerStack {
    fn flat(top_size: usize, bottom: Vec<Vec<usize>>) -> Self {
        LayerStack { top_size, layers: vec![bottom] }
    }

    /// Number of inserted levels, not counting the bottom.
    pub fn inserted(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn bottom(&self) -> &[Vec<usize>] {
        self.layers.last().expect("stack has a bottom")
    }

    fn size_above_bottom(&self) -> usize {
        match self.layers.len() {
            1 => self.top_size,
            n => self.layers[n - 2].len(),
        }
    }

    /// Appends a level copying everything above the bottom, plus `extra`
    /// vertices; returns the index of the first extra vertex.
    fn push_copy_layer(&mut self, extra: Vec<Vec<usize>>) -> usize {
        let s = self.size_above_bottom();
        let mut layer: Vec<Vec<usize>> = (0..s).map(|u| vec![u]).collect();
        layer.extend(extra);
        let bottom = self.layers.pop().expect("stack has a bottom");
        self.layers.push(layer);
        self.layers.push(bottom);
        s
    }

    /// Drops inserted vertices with no out-edges, working upwards from the
    /// bottom. Indices are compacted in order.
    pub fn prune(&mut self) {
        let n = self.layers.len();
        for i in (0..n - 1).rev() {
            let mut used = vec![false; self.layers[i].len()];
            self.layers[i + 1].iter().flatten().for_each(|&s| used[s] = true);
            let mut remap = vec![usize::MAX; used.len()];
            let mut next = 0;
            for (u, &keep) in used.iter().enumerate() {
                if keep {
                    remap[u] = next;
                    next += 1;
                }
            }
            let mut k = 0;
            self.layers[i].retain(|_| {
                k += 1;
                used[k - 1]
            });
            for sources in &mut self.layers[i + 1] {
                sources.iter_mut().for_each(|s| *s = remap[*s]);
            }
        }
    }

    fn as_graph(&self) -> GradedGraph {
        let mut levels = vec![vec![Vec::new(); self.top_size]];
        levels.extend(self.layers.iter().cloned());
        GradedGraph::from_levels_unchecked(levels)
    }

    /// In-edge lists of the bottom in terms of the top, expanding every
    /// inserted level in adic order.
    pub fn telescoped(&self) -> Vec<Vec<usize>> {
        let g = self.as_graph();
        g.segment_starts(0, self.layers.len()).expect("fragment sizes are small")
    }
}

fn check_fragment(top_size: usize, bottom: &[Vec<usize>]) -> Result<(), EmbedError> {
    for (vertex, sources) in bottom.iter().enumerate() {
        if sources.is_empty() {
            return Err(EmbedError::EmptyInEdges { vertex });
        }
        if let Some(&source) = sources.iter().find(|&&s| s >= top_size) {
            return Err(EmbedError::SourceOutOfRange { vertex, parent: source, top_size });
        }
    }
    Ok(())
}

/// Inserts levels so that no two bottom vertices have the same ordered
/// in-edge list.
///
/// A group of `m + 1` vertices sharing the list `[v1, v2, ...]` gets `m`
/// inserted levels; level `i` holds a pair vertex `(v1, v2)`. The `j`-th
/// duplicate enters through the pair of level `j + 1` followed by the rest of
/// the list, and the last one keeps the original list. Pairs with equal
/// sources on the same level are shared between groups. The result is pruned.
pub fn deduplicate_ancestry(
    top_size: usize,
    bottom: &[Vec<usize>],
) -> Result<LayerStack, EmbedError> {
    check_fragment(top_size, bottom)?;
    let mut groups: BTreeMap<&[usize], Vec<usize>> = BTreeMap::new();
    for (w, sources) in bottom.iter().enumerate() {
        groups.entry(sources.as_slice()).or_default().push(w);
    }
    let mut duplicated: Vec<(&[usize], Vec<usize>)> =
        groups.into_iter().filter(|(_, ws)| ws.len() > 1).collect();
    duplicated.sort_by_key(|(_, ws)| ws[0]);
    for (sources, ws) in &duplicated {
        if sources.len() < 2 {
            return Err(EmbedError::Inseparable { first: ws[0], second: ws[1], parent: sources[0] });
        }
    }
    let rounds = duplicated.iter().map(|(_, ws)| ws.len() - 1).max().unwrap_or(0);
    let mut stack = LayerStack::flat(top_size, bottom.to_vec());
    // (round, v1, v2) -> index of the pair in its own level
    let mut pairs: BTreeMap<(usize, usize, usize), usize> = BTreeMap::new();
    for round in 0..rounds {
        let mut extra: Vec<Vec<usize>> = Vec::new();
        let mut keys: Vec<(usize, usize)> = Vec::new();
        for (sources, ws) in &duplicated {
            let key = (sources[0], sources[1]);
            if round < ws.len() - 1 && !keys.contains(&key) {
                keys.push(key);
                extra.push(vec![key.0, key.1]);
            }
        }
        let first = stack.push_copy_layer(extra);
        for (k, key) in keys.iter().enumerate() {
            pairs.insert((round, key.0, key.1), first + k);
        }
    }
    let bottom = stack.layers.last_mut().expect("stack has a bottom");
    for (sources, ws) in &duplicated {
        for (j, &w) in ws[..ws.len() - 1].iter().enumerate() {
            let pair = pairs[&(j, sources[0], sources[1])];
            let mut list = vec![pair];
            list.extend_from_slice(&sources[2..]);
            bottom[w] = list;
        }
    }
    stack.prune();
    Ok(stack)
}

/// Inserts levels until every bottom vertex has at most two in-edges.
///
/// Each step takes the first bottom vertex `w` with in-degree above two and
/// parents `[v1, v2, v3, ...]`, inserts a level of copies of the level above
/// together with the pair `(v1, v2)`, and rewires `w` to
/// `[(v1, v2), v3, ...]`. The result is pruned.
pub fn thin_bipartite(top_size: usize, bottom: &[Vec<usize>]) -> Result<LayerStack, EmbedError> {
    check_fragment(top_size, bottom)?;
    let mut stack = LayerStack::flat(top_size, bottom.to_vec());
    thin_in_place(&mut stack);
    stack.prune();
    Ok(stack)
}

fn thin_in_place(stack: &mut LayerStack) {
    while let Some(w) = stack.bottom().iter().position(|s| s.len() > 2) {
        let parents = stack.bottom()[w].clone();
        let pair = stack.push_copy_layer(vec![vec![parents[0], parents[1]]]);
        let mut list = vec![pair];
        list.extend_from_slice(&parents[2..]);
        stack.layers.last_mut().expect("stack has a bottom")[w] = list;
    }
}

/// The refinement of one level gap: deduplication followed by thinning.
pub fn refine_gap(top_size: usize, bottom: &[Vec<usize>]) -> Result<LayerStack, EmbedError> {
    let mut stack = deduplicate_ancestry(top_size, bottom)?;
    thin_in_place(&mut stack);
    stack.prune();
    Ok(stack)
}

/// A refinement of a graph together with its uniadic labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmbeddingResult {
    /// Per gap between original levels `n` and `n + 1`: the inserted levels
    /// followed by original level `n + 1`, each as in-edge lists into the
    /// level above.
    pub gaps: Vec<Vec<Vec<Vec<usize>>>>,
    /// Uniadic term of every vertex of the refined graph, level by level.
    pub terms: Vec<Vec<UaVertex>>,
    /// Refined level holding each original level.
    pub schedule: Vec<usize>,
}

impl EmbeddingResult {
    /// The refined graph, all gaps stacked.
    pub fn layered_graph(&self) -> Result<GradedGraph, GraphError> {
        let mut levels = vec![vec![vec![]]];
        for gap in &self.gaps {
            levels.extend(gap.iter().cloned());
        }
        GradedGraph::new(levels)
    }

    /// The uniadic term of each original vertex.
    pub fn vertex_map(&self) -> Vec<Vec<UaVertex>> {
        self.schedule.iter().filter_map(|&l| self.terms.get(l).cloned()).collect()
    }

    pub fn term(&self, v: VertexRef) -> Option<&UaVertex> {
        self.terms.get(*self.schedule.get(v.level)?)?.get(v.index)
    }

    /// Weights on the refined graph: unchanged on original levels and
    /// extended to inserted levels by summing over out-edges.
    pub fn pushforward_weights<W: Weight>(
        &self,
        weights: &CentralWeights<W>,
    ) -> Result<CentralWeights<W>, EmbedError> {
        let layered = self.layered_graph()?;
        let depth = weights.depth();
        if depth >= self.schedule.len() {
            return Err(MeasureError::DepthOutOfRange { depth, graph_depth: self.schedule.len() - 1 }.into());
        }
        let top = self.schedule[depth];
        let mut levels: Vec<Vec<W>> = vec![Vec::new(); top + 1];
        for (n, &l) in self.schedule[..=depth].iter().enumerate() {
            if weights.levels[n].len() != layered.level_size(l) {
                return Err(MeasureError::LevelLength {
                    level: n,
                    expected: layered.level_size(l),
                    found: weights.levels[n].len(),
                }
                .into());
            }
            levels[l] = weights.levels[n].clone();
        }
        for n in 0..depth {
            for l in (self.schedule[n] + 1..self.schedule[n + 1]).rev() {
                let mut row = vec![W::zero(); layered.level_size(l)];
                for (w, sources) in layered.levels()[l + 1].iter().enumerate() {
                    for &s in sources {
                        row[s] = row[s].clone() + levels[l + 1][w].clone();
                    }
                }
                levels[l] = row;
            }
        }
        Ok(CentralWeights::new(levels))
    }
}

/// Refines `graph` level gap by level gap and labels the result with
/// uniadic terms.
pub fn embed(graph: &GradedGraph) -> Result<EmbeddingResult, EmbedError> {
    let problems = graph.validate();
    if !problems.is_empty() {
        return Err(GraphError::Invalid(problems).into());
    }
    for level in 1..graph.num_levels() {
        for v in graph.vertices(level) {
            if graph.in_degree(v) < 2 {
                return Err(EmbedError::InDegree { vertex: v, degree: graph.in_degree(v) });
            }
        }
    }
    let mut gaps = Vec::with_capacity(graph.depth());
    let mut schedule = vec![0];
    for n in 0..graph.depth() {
        let stack = refine_gap(graph.level_size(n), &graph.levels()[n + 1])?;
        schedule.push(schedule[n] + stack.layers.len());
        gaps.push(stack.layers);
    }
    let mut terms = vec![vec![UaVertex::root()]];
    for gap in &gaps {
        for level in gap {
            let above = terms.last().expect("root level present");
            let row = level
                .iter()
                .map(|sources| match *sources.as_slice() {
                    [a] => UaVertex::copy(&above[a]),
                    [a, b] => UaVertex::pair(&above[a], &above[b]).expect("same level"),
                    _ => unreachable!("refined in-degree is 1 or 2"),
                })
                .collect();
            terms.push(row);
        }
    }
    Ok(EmbeddingResult { gaps, terms, schedule })
}

/// One defect found by [`verify_embedding`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EmbeddingProblem {
    /// The stacked layers do not form a valid graph.
    InvalidLayers(String),
    /// A refined vertex with in-degree other than 1 or 2.
    InDegree { vertex: VertexRef, degree: usize },
    /// The term list does not have the shape of the refined graph.
    TermShape,
    /// The term of a refined vertex is not built from its in-edges.
    TermMismatch { vertex: VertexRef },
    /// Two refined vertices on one level carry the same term.
    NotInjective { first: VertexRef, second: VertexRef },
    /// The schedule is not an increasing list from 0 to the last refined
    /// level with one entry per original level.
    BadSchedule,
    /// Telescoping disagrees with the graph at this original vertex.
    TelescopeMismatch { vertex: VertexRef },
    /// Telescoping changes the number of vertices on this original level.
    LevelSizeMismatch { level: usize },
}

impl fmt::Display for EmbeddingProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EmbeddingProblem::InvalidLayers(e) => write!(f, "layers do not form a valid graph: {e}"),
            EmbeddingProblem::InDegree { vertex, degree } => {
                write!(f, "refined vertex {vertex} has in-degree {degree}")
            }
            EmbeddingProblem::TermShape => f.write_str("terms do not match the refined level sizes"),
            EmbeddingProblem::TermMismatch { vertex } => {
                write!(f, "term of refined vertex {vertex} disagrees with its in-edges")
            }
            EmbeddingProblem::NotInjective { first, second } => {
                write!(f, "refined vertices {first} and {second} share a term")
            }
            EmbeddingProblem::BadSchedule => f.write_str("schedule does not match the layers"),
            EmbeddingProblem::TelescopeMismatch { vertex } => {
                write!(f, "telescoped in-edges of {vertex} differ from the graph")
            }
            EmbeddingProblem::LevelSizeMismatch { level } => {
                write!(f, "telescoped level {level} has the wrong size")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct EmbeddingReport {
    pub problems: Vec<EmbeddingProblem>,
}

impl EmbeddingReport {
    pub fn passed(&self) -> bool {
        self.problems.is_empty()
    }
}

/// Checks `result` against `graph` without trusting how it was produced.
pub fn verify_embedding(graph: &GradedGraph, result: &EmbeddingResult) -> EmbeddingReport {
    let mut problems = Vec::new();
    let layered = match result.layered_graph() {
        Ok(g) => g,
        Err(e) => {
            problems.push(EmbeddingProblem::InvalidLayers(alloc::format!("{e}")));
            return EmbeddingReport { problems };
        }
    };
    for level in 1..layered.num_levels() {
        for v in layered.vertices(level) {
            let degree = layered.in_degree(v);
            if !(1..=2).contains(&degree) {
                problems.push(EmbeddingProblem::InDegree { vertex: v, degree });
            }
        }
    }
    check_terms(&layered, &result.terms, &mut problems);
    let offsets: Vec<usize> = core::iter::once(0)
        .chain(result.gaps.iter().scan(0, |acc, gap| {
            *acc += gap.len();
            Some(*acc)
        }))
        .collect();
    if result.schedule != offsets || result.schedule.len() != graph.num_levels() {
        problems.push(EmbeddingProblem::BadSchedule);
        return EmbeddingReport { problems };
    }
    match layered.telescope(&result.schedule) {
        Ok(t) => {
            for level in 0..graph.num_levels() {
                if t.level_size(level) != graph.level_size(level) {
                    problems.push(EmbeddingProblem::LevelSizeMismatch { level });
                    continue;
                }
                for v in graph.vertices(level) {
                    if t.in_edges(v) != graph.in_edges(v) {
                        problems.push(EmbeddingProblem::TelescopeMismatch { vertex: v });
                    }
                }
            }
        }
        Err(e) => problems.push(EmbeddingProblem::InvalidLayers(alloc::format!("{e}"))),
    }
    EmbeddingReport { problems }
}

fn check_terms(layered: &GradedGraph, terms: &[Vec<UaVertex>], problems: &mut Vec<EmbeddingProblem>) {
    if terms.len() != layered.num_levels()
        || terms.iter().enumerate().any(|(l, row)| row.len() != layered.level_size(l))
    {
        problems.push(EmbeddingProblem::TermShape);
        return;
    }
    let mut ids = TermIds::default();
    let mut below: Vec<u32> = Vec::new();
    for (level, row) in terms.iter().enumerate() {
        let mut current = Vec::with_capacity(row.len());
        for (index, term) in row.iter().enumerate() {
            let vertex = VertexRef::new(level, index);
            let id = ids.id(term);
            let consistent = term.level() == level
                && match (term.shape(), layered.in_edges(vertex)) {
                    (UaShape::Root, []) => level == 0,
                    (UaShape::Copy(a), &[s]) => ids.id(a) == below[s],
                    (UaShape::Pair(a, b), &[s, t]) => ids.id(a) == below[s] && ids.id(b) == below[t],
                    _ => false,
                };
            if !consistent {
                problems.push(EmbeddingProblem::TermMismatch { vertex });
            }
            current.push(id);
        }
        if let Some((a, b)) = first_collision(&current) {
            problems.push(EmbeddingProblem::NotInjective {
                first: VertexRef::new(level, a),
                second: VertexRef::new(level, b),
            });
        }
        below = current;
    }
}

/// Moves paths between a graph and its refinement.
///
/// An edge of the original graph into `v` is a segment of the refinement
/// between the corresponding levels; its rank is the segment's adic position
/// among the segments into `v`.
pub struct PathTransport {
    layered: GradedGraph,
    schedule: Vec<usize>,
    counts: Vec<Vec<Vec<u128>>>,
}

impl PathTransport {
    pub fn new(result: &EmbeddingResult) -> Result<Self, EmbedError> {
        let layered = result.layered_graph()?;
        let mut counts = Vec::with_capacity(result.schedule.len());
        for &base in &result.schedule[..result.schedule.len().saturating_sub(1)] {
            counts.push(layered.path_counts_from(base)?);
        }
        Ok(PathTransport { layered, schedule: result.schedule.clone(), counts })
    }

    pub fn layered(&self) -> &GradedGraph {
        &self.layered
    }

    /// The refined path following the same route as `p`.
    pub fn lift(&self, graph: &GradedGraph, p: &PathPrefix) -> Result<PathPrefix, EmbedError> {
        let verts = adic::vertex_path(graph, p)?;
        if p.len() >= self.schedule.len() {
            return Err(AdicError::PathTooLong { len: p.len(), depth: self.schedule.len() - 1 }.into());
        }
        let mut ranks = vec![0; self.schedule[p.len()]];
        for (n, &rank) in p.ranks.iter().enumerate() {
            let top = VertexRef::new(self.schedule[n + 1], verts[n + 1]);
            let (start, segment) =
                adic::unrank_segment(&self.layered, &self.counts[n], self.schedule[n], top, rank as u128)?;
            if start != verts[n] {
                return Err(EmbedError::Mismatch);
            }
            ranks[self.schedule[n]..self.schedule[n + 1]].copy_from_slice(&segment);
        }
        Ok(PathPrefix::new(p.end, ranks))
    }

    /// Inverse of [`PathTransport::lift`]; `q` must end on an original level.
    pub fn project(&self, q: &PathPrefix) -> Result<PathPrefix, EmbedError> {
        let verts = adic::vertex_path(&self.layered, q)?;
        let len = self.schedule.iter().position(|&l| l == q.len()).ok_or(EmbedError::Mismatch)?;
        let mut ranks = Vec::with_capacity(len);
        for n in 0..len {
            let r = adic::segment_rank(
                &self.layered,
                &self.counts[n],
                self.schedule[n],
                self.schedule[n + 1],
                &verts,
                &q.ranks,
            );
            ranks.push(usize::try_from(r).map_err(|_| EmbedError::Mismatch)?);
        }
        Ok(PathPrefix::new(q.end, ranks))
    }
}

/// Materializes the uniadic graph to the refined depth and checks that the
/// labelled vertices form a subgraph closed under in-edges whose order
/// agrees with the refinement. Returns that subgraph.
pub fn image_subgraph(result: &EmbeddingResult) -> Result<GradedGraph, EmbedError> {
    let layered = result.layered_graph()?;
    let ua = ua_graph(layered.depth())?;
    let mut keep = BTreeSet::new();
    for (level, row) in result.terms.iter().enumerate() {
        for term in row {
            let index = term.index().ok_or(EmbedError::Mismatch)?;
            keep.insert(VertexRef::new(level, index as usize));
        }
    }
    let (sub, map) = ua.induced_subgraph(&keep)?;
    // position in `sub` of each refined vertex
    let mut position: Vec<Vec<usize>> = Vec::with_capacity(result.terms.len());
    for (level, row) in result.terms.iter().enumerate() {
        let lookup: BTreeMap<usize, usize> =
            map[level].iter().enumerate().map(|(i, v)| (v.index, i)).collect();
        position.push(row.iter().map(|t| lookup[&(t.index().expect("checked") as usize)]).collect());
    }
    for level in 1..layered.num_levels() {
        for v in layered.vertices(level) {
            let mapped: Vec<usize> =
                layered.in_edges(v).iter().map(|&s| position[level - 1][s]).collect();
            let image = VertexRef::new(level, position[level][v.index]);
            if sub.in_edges(image) != mapped.as_slice() {
                return Err(EmbedError::Mismatch);
            }
        }
    }
    Ok(sub)
}
