//! Central measures at finite depth.
//!
//! A central measure gives every path to `v` at level `n` the same mass
//! `m_n(v)`, so it is stored per vertex. Consistency means `m_0 = 1`,
//! `m_n(v)` equals the sum of `m_{n+1}` over the out-edges of `v`, and
//! `sum_v dim(v) m_n(v) = 1` on every level.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Debug;
use core::ops::{Add, Mul, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::adic::{self, AdicError, PathPrefix};
use crate::graph::{GradedGraph, GraphError, VertexRef};

/// Default float-mode tolerance.
pub const DEFAULT_FLOAT_TOLERANCE: f64 = 1e-12;

/// Number of samples drawn from one generator stream. Sample `i` always
/// comes from stream `i / SAMPLE_CHUNK`, so any split of the chunks across
/// workers reproduces the sequential result.
pub const SAMPLE_CHUNK: usize = 4096;

/// Numeric type for masses: exact rationals or floats.
pub trait Weight:
    Clone + Debug + PartialOrd + Zero + One + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self>
{
    fn from_count(n: u128) -> Self;
    fn abs_diff(&self, other: &Self) -> Self;
    fn as_f64(&self) -> f64;
}

impl Weight for f64 {
    fn from_count(n: u128) -> Self {
        n as f64
    }
    fn abs_diff(&self, other: &Self) -> Self {
        let d = self - other;
        if d < 0.0 {
            -d
        } else {
            d
        }
    }
    fn as_f64(&self) -> f64 {
        *self
    }
}

impl Weight for BigRational {
    fn from_count(n: u128) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
    fn abs_diff(&self, other: &Self) -> Self {
        (self - other).abs()
    }
    fn as_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum MeasureError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Path(#[from] AdicError),
    #[error("weights are missing level {level}")]
    MissingLevel { level: usize },
    #[error("weights for level {level} list {found} masses, the graph has {expected} vertices")]
    LevelLength { level: usize, expected: usize, found: usize },
    #[error("negative mass at {vertex}")]
    NegativeMass { vertex: VertexRef },
    #[error("no positive-mass extension from {vertex}")]
    ZeroMassTrap { vertex: VertexRef },
    #[error("depth {depth} exceeds the graph depth {graph_depth}")]
    DepthOutOfRange { depth: usize, graph_depth: usize },
    #[error("sample count must be positive")]
    NoSamples,
}

/// Per-vertex single-cylinder masses `m_n(v)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CentralWeights<W> {
    pub levels: Vec<Vec<W>>,
}

impl<W: Weight> CentralWeights<W> {
    pub fn new(levels: Vec<Vec<W>>) -> Self {
        CentralWeights { levels }
    }

    pub fn depth(&self) -> usize {
        self.levels.len().saturating_sub(1)
    }

    pub fn mass(&self, v: VertexRef) -> &W {
        &self.levels[v.level][v.index]
    }

    pub fn to_f64(&self) -> CentralWeights<f64> {
        CentralWeights {
            levels: self.levels.iter().map(|l| l.iter().map(Weight::as_f64).collect()).collect(),
        }
    }

    /// Checks that levels `0..=depth` are present and sized like the graph.
    pub fn check_shape(&self, graph: &GradedGraph, depth: usize) -> Result<(), MeasureError> {
        if depth > graph.depth() {
            return Err(MeasureError::DepthOutOfRange { depth, graph_depth: graph.depth() });
        }
        for level in 0..=depth {
            let row = self.levels.get(level).ok_or(MeasureError::MissingLevel { level })?;
            if row.len() != graph.level_size(level) {
                return Err(MeasureError::LevelLength {
                    level,
                    expected: graph.level_size(level),
                    found: row.len(),
                });
            }
            for (index, m) in row.iter().enumerate() {
                if *m < W::zero() {
                    return Err(MeasureError::NegativeMass { vertex: VertexRef::new(level, index) });
                }
            }
        }
        Ok(())
    }
}

/// Largest residuals of one level.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelResidual<W> {
    /// `max_v |m_n(v) - sum of m_{n+1} over out-edges|`; zero on the top level.
    pub harmonic: W,
    /// `|sum_v dim(v) m_n(v) - 1|`.
    pub normalization: W,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CentralityReport<W> {
    pub root_residual: W,
    pub levels: Vec<LevelResidual<W>>,
    pub tolerance: W,
    pub passed: bool,
}

impl<W: Weight> CentralityReport<W> {
    pub fn max_harmonic(&self) -> W {
        max_of(self.levels.iter().map(|l| l.harmonic.clone()))
    }

    pub fn max_normalization(&self) -> W {
        max_of(self.levels.iter().map(|l| l.normalization.clone()))
    }
}

fn max_of<W: Weight>(items: impl Iterator<Item = W>) -> W {
    items.fold(W::zero(), |acc, x| if x > acc { x } else { acc })
}

/// Verifies root mass, harmonicity and level normalization up to the graph
/// depth.
pub fn check_central<W: Weight>(
    graph: &GradedGraph,
    weights: &CentralWeights<W>,
    tol: &W,
) -> Result<CentralityReport<W>, MeasureError> {
    let depth = graph.depth();
    weights.check_shape(graph, depth)?;
    let dims = graph.dims()?;
    let root_residual = weights.levels[0][0].abs_diff(&W::one());
    let mut levels = Vec::with_capacity(depth + 1);
    for n in 0..=depth {
        let mut total = W::zero();
        for (v, m) in weights.levels[n].iter().enumerate() {
            total = total + W::from_count(dims[n][v]) * m.clone();
        }
        let normalization = total.abs_diff(&W::one());
        let harmonic = if n < depth {
            let mut flow = vec![W::zero(); graph.level_size(n)];
            for (w, sources) in graph.levels()[n + 1].iter().enumerate() {
                for &s in sources {
                    flow[s] = flow[s].clone() + weights.levels[n + 1][w].clone();
                }
            }
            max_of(weights.levels[n].iter().zip(&flow).map(|(m, f)| m.abs_diff(f)))
        } else {
            W::zero()
        };
        levels.push(LevelResidual { harmonic, normalization });
    }
    let passed = root_residual <= *tol
        && levels.iter().all(|l| l.harmonic <= *tol && l.normalization <= *tol);
    Ok(CentralityReport { root_residual, levels, tolerance: tol.clone(), passed })
}

/// Draws paths from the Markov chain that extends `v` at level `n` along an
/// out-edge into `w` with probability `m_{n+1}(w) / m_n(v)`.
#[derive(Clone, Debug)]
pub struct PathSampler<'g> {
    graph: &'g GradedGraph,
    out_edges: Vec<Vec<Vec<(usize, usize)>>>,
    masses: Vec<Vec<f64>>,
    depth: usize,
}

impl<'g> PathSampler<'g> {
    pub fn new<W: Weight>(
        graph: &'g GradedGraph,
        weights: &CentralWeights<W>,
        depth: usize,
    ) -> Result<Self, MeasureError> {
        weights.check_shape(graph, depth)?;
        Ok(PathSampler {
            graph,
            out_edges: graph.out_edges(),
            masses: weights.levels[..=depth]
                .iter()
                .map(|l| l.iter().map(Weight::as_f64).collect())
                .collect(),
            depth,
        })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn graph(&self) -> &'g GradedGraph {
        self.graph
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<PathPrefix, MeasureError> {
        let mut v = 0usize;
        let mut ranks = Vec::with_capacity(self.depth);
        for n in 0..self.depth {
            let edges = &self.out_edges[n][v];
            let next = &self.masses[n + 1];
            let total: f64 = edges.iter().map(|&(w, _)| next[w]).sum();
            if total.is_nan() || total <= 0.0 {
                return Err(MeasureError::ZeroMassTrap { vertex: VertexRef::new(n, v) });
            }
            let mut u = rng.gen::<f64>() * total;
            let mut chosen = None;
            for &(w, r) in edges {
                if next[w] <= 0.0 {
                    continue;
                }
                chosen = Some((w, r));
                if u < next[w] {
                    break;
                }
                u -= next[w];
            }
            let (w, r) = chosen.expect("positive total has a positive edge");
            ranks.push(r);
            v = w;
        }
        // Ranks were pushed bottom-up, which is already the storage order.
        Ok(PathPrefix { end: v, ranks })
    }

    /// Samples `count` paths from stream `chunk` of `seed`.
    pub fn sample_chunk(
        &self,
        seed: u64,
        chunk: u64,
        count: usize,
    ) -> Result<Vec<PathPrefix>, MeasureError> {
        let mut rng = chunk_rng(seed, chunk);
        (0..count).map(|_| self.sample(&mut rng)).collect()
    }

    /// Samples `count` paths sequentially under the chunked seed schedule.
    pub fn sample_many(&self, seed: u64, count: usize) -> Result<Vec<PathPrefix>, MeasureError> {
        let mut out = Vec::with_capacity(count);
        for (chunk, size) in chunk_sizes(count).enumerate() {
            out.extend(self.sample_chunk(seed, chunk as u64, size)?);
        }
        Ok(out)
    }
}

/// Sizes of the consecutive sample chunks covering `count` samples.
pub fn chunk_sizes(count: usize) -> impl Iterator<Item = usize> {
    (0..count.div_ceil(SAMPLE_CHUNK)).map(move |c| (count - c * SAMPLE_CHUNK).min(SAMPLE_CHUNK))
}

/// Generator for stream `chunk` under `seed`.
pub fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// One path of length `depth`, deterministic in `seed`.
pub fn sample_path<W: Weight>(
    graph: &GradedGraph,
    weights: &CentralWeights<W>,
    depth: usize,
    seed: u64,
) -> Result<PathPrefix, MeasureError> {
    let sampler = PathSampler::new(graph, weights, depth)?;
    sampler.sample(&mut chunk_rng(seed, 0))
}

/// Masses of the extreme (maximal and minimal) paths of a given length.
#[derive(Clone, Debug, PartialEq)]
pub struct EssentialityReport<W> {
    pub depth: usize,
    pub maximal_mass: W,
    pub minimal_mass: W,
    /// One maximal path per endpoint with its cylinder mass.
    pub maximal_paths: Vec<(PathPrefix, W)>,
    pub minimal_paths: Vec<(PathPrefix, W)>,
}

/// Every endpoint at `depth` has exactly one maximal and one minimal path;
/// their cylinders bound the non-essential set at this depth.
pub fn essentiality_report<W: Weight>(
    graph: &GradedGraph,
    weights: &CentralWeights<W>,
    depth: usize,
) -> Result<EssentialityReport<W>, MeasureError> {
    weights.check_shape(graph, depth)?;
    let mut maximal_paths = Vec::new();
    let mut minimal_paths = Vec::new();
    let mut maximal_mass = W::zero();
    let mut minimal_mass = W::zero();
    for v in graph.vertices(depth) {
        let m = weights.mass(v).clone();
        maximal_mass = maximal_mass + m.clone();
        minimal_mass = minimal_mass + m.clone();
        maximal_paths.push((adic::maximal_path(graph, v)?, m.clone()));
        minimal_paths.push((adic::minimal_path(graph, v)?, m));
    }
    Ok(EssentialityReport { depth, maximal_mass, minimal_mass, maximal_paths, minimal_paths })
}
