//! Deterministic example graphs and their canonical central weights.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{GradedGraph, GraphError};
use crate::measures::CentralWeights;

pub const MAX_BUILDER_DEPTH: usize = 64;
pub const MAX_RANDOM_WIDTH: usize = 64;
pub const MAX_RANDOM_DEPTH: usize = 16;
pub const MAX_MIN_IN_DEGREE: usize = 16;
/// Random vertices draw their in-degree from `min..=min + RANDOM_DEGREE_SPREAD`
/// before dead ends are patched.
pub const RANDOM_DEGREE_SPREAD: usize = 2;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum BuildError {
    #[error("invalid builder parameter: {0}")]
    InvalidSpec(&'static str),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// What to build.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BuilderSpec {
    /// One vertex per level joined to the previous one by `base` ordered
    /// parallel edges.
    Odometer { base: usize, depth: usize },
    /// Level `n` has `n + 1` vertices; vertex `k` has in-edges from `k - 1`
    /// then `k`, where those exist.
    Pascal { depth: usize },
    /// Two vertices per level, each fed by a double edge from the vertex with
    /// the same index below (both from the root at level 1).
    DoubledOdometer { depth: usize },
    /// Seeded random graph with between 1 and `max_width` vertices per level
    /// and every non-root in-degree at least `min_in_degree`.
    Random { seed: u64, max_width: usize, min_in_degree: usize, depth: usize },
}

impl BuilderSpec {
    pub fn depth(&self) -> usize {
        match *self {
            BuilderSpec::Odometer { depth, .. }
            | BuilderSpec::Pascal { depth }
            | BuilderSpec::DoubledOdometer { depth }
            | BuilderSpec::Random { depth, .. } => depth,
        }
    }

    pub fn build(&self) -> Result<GradedGraph, BuildError> {
        match *self {
            BuilderSpec::Odometer { base, depth } => odometer(base, depth),
            BuilderSpec::Pascal { depth } => pascal(depth),
            BuilderSpec::DoubledOdometer { depth } => doubled_odometer(depth),
            BuilderSpec::Random { seed, max_width, min_in_degree, depth } => {
                random(seed, max_width, min_in_degree, depth)
            }
        }
    }

    /// The canonical central weights, where the family has them. Pascal uses
    /// the symmetric Bernoulli parameter 1/2.
    pub fn default_weights(&self) -> Option<CentralWeights<BigRational>> {
        match *self {
            BuilderSpec::Odometer { base, depth } => Some(odometer_weights(base, depth)),
            BuilderSpec::Pascal { depth } => Some(pascal_weights(depth, &ratio(1, 2))),
            BuilderSpec::DoubledOdometer { depth } => Some(doubled_odometer_weights(depth)),
            BuilderSpec::Random { .. } => None,
        }
    }
}

fn check_depth(depth: usize) -> Result<(), BuildError> {
    if depth > MAX_BUILDER_DEPTH {
        return Err(BuildError::InvalidSpec("depth exceeds 64"));
    }
    Ok(())
}

pub fn odometer(base: usize, depth: usize) -> Result<GradedGraph, BuildError> {
    check_depth(depth)?;
    if base == 0 {
        return Err(BuildError::InvalidSpec("odometer base must be positive"));
    }
    Ok(GradedGraph::from_upper_levels(vec![vec![vec![0; base]]; depth])?)
}

pub fn pascal(depth: usize) -> Result<GradedGraph, BuildError> {
    check_depth(depth)?;
    let upper = (1..=depth)
        .map(|n| {
            (0..=n)
                .map(|k| {
                    let mut sources = Vec::with_capacity(2);
                    if k > 0 {
                        sources.push(k - 1);
                    }
                    if k < n {
                        sources.push(k);
                    }
                    sources
                })
                .collect()
        })
        .collect();
    Ok(GradedGraph::from_upper_levels(upper)?)
}

pub fn doubled_odometer(depth: usize) -> Result<GradedGraph, BuildError> {
    check_depth(depth)?;
    let upper = (1..=depth)
        .map(|n| if n == 1 { vec![vec![0, 0], vec![0, 0]] } else { vec![vec![0, 0], vec![1, 1]] })
        .collect();
    Ok(GradedGraph::from_upper_levels(upper)?)
}

pub fn random(
    seed: u64,
    max_width: usize,
    min_in_degree: usize,
    depth: usize,
) -> Result<GradedGraph, BuildError> {
    if max_width == 0 || max_width > MAX_RANDOM_WIDTH {
        return Err(BuildError::InvalidSpec("max width must be in 1..=64"));
    }
    if min_in_degree == 0 || min_in_degree > MAX_MIN_IN_DEGREE {
        return Err(BuildError::InvalidSpec("min in-degree must be in 1..=16"));
    }
    if depth > MAX_RANDOM_DEPTH {
        return Err(BuildError::InvalidSpec("random depth exceeds 16"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut upper: Vec<Vec<Vec<usize>>> = Vec::with_capacity(depth);
    let mut below = 1usize;
    for _ in 0..depth {
        let width = rng.gen_range(1..=max_width);
        let mut level: Vec<Vec<usize>> = (0..width)
            .map(|_| {
                let degree = rng.gen_range(min_in_degree..=min_in_degree + RANDOM_DEGREE_SPREAD);
                (0..degree).map(|_| rng.gen_range(0..below)).collect()
            })
            .collect();
        let mut covered = vec![false; below];
        level.iter().flatten().for_each(|&s| covered[s] = true);
        for (source, _) in covered.iter().enumerate().filter(|(_, hit)| !**hit) {
            let target = rng.gen_range(0..width);
            let position = rng.gen_range(0..=level[target].len());
            level[target].insert(position, source);
        }
        below = width;
        upper.push(level);
    }
    Ok(GradedGraph::from_upper_levels(upper)?)
}

fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn pow(base: &BigRational, exp: usize) -> BigRational {
    let mut out = BigRational::one();
    for _ in 0..exp {
        out *= base;
    }
    out
}

/// `m_n = base^-n` on the single vertex of each level.
pub fn odometer_weights(base: usize, depth: usize) -> CentralWeights<BigRational> {
    let step = ratio(1, base as i64);
    CentralWeights::new((0..=depth).map(|n| vec![pow(&step, n)]).collect())
}

/// Bernoulli weights `m_n(k) = p^k (1 - p)^(n - k)` on the Pascal graph.
pub fn pascal_weights(depth: usize, p: &BigRational) -> CentralWeights<BigRational> {
    let q = BigRational::one() - p;
    CentralWeights::new(
        (0..=depth).map(|n| (0..=n).map(|k| pow(p, k) * pow(&q, n - k)).collect()).collect(),
    )
}

/// Equal mass on both copies: `m_n = 2^-(n+1)` above the root.
pub fn doubled_odometer_weights(depth: usize) -> CentralWeights<BigRational> {
    let half = ratio(1, 2);
    CentralWeights::new(
        (0..=depth)
            .map(|n| if n == 0 { vec![BigRational::one()] } else { vec![pow(&half, n + 1); 2] })
            .collect(),
    )
}

/// Rational parameter `num/den` for [`pascal_weights`].
pub fn bernoulli(num: i64, den: i64) -> Result<BigRational, BuildError> {
    if den <= 0 || num < 0 || num > den {
        return Err(BuildError::InvalidSpec("Bernoulli parameter must lie in [0, 1]"));
    }
    Ok(ratio(num, den))
}
