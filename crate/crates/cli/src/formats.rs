//! JSON documents for graphs, weights, embeddings, colorings and schemes,
//! plus the comma-separated path syntax.

use std::str::FromStr;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use uniadic_core::coloring::Coloring;
use uniadic_core::graph::{GradedGraph, GraphError};
use uniadic_core::measures::CentralWeights;
use uniadic_core::scheme::{HierarchyPrefix, SchemeDistribution};
use uniadic_core::uniadic::{EmbeddingResult, UaParseError, UaVertex};
use uniadic_core::{PathPrefix, FORMAT_VERSION};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Json { line: usize, column: usize, message: String },
    #[error("unsupported format version {found} (expected {FORMAT_VERSION})")]
    Version { found: u32 },
    #[error("num_levels is {declared} but {found} levels are listed")]
    LevelCount { declared: usize, found: usize },
    #[error("invalid rational {text:?} at level {level}, vertex {index}")]
    Rational { text: String, level: usize, index: usize },
    #[error("unknown weights mode {0:?}; expected \"rational\" or \"float\"")]
    Mode(String),
    #[error("invalid uniadic term at level {level}, vertex {index}: {source}")]
    Term { level: usize, index: usize, source: UaParseError },
    #[error("embedding lists {found} original levels of terms, schedule has {expected}")]
    TermLevels { found: usize, expected: usize },
    #[error("refined vertex L{level}_{index} has in-degree {degree}; terms need 1 or 2")]
    TermDegree { level: usize, index: usize, degree: usize },
    #[error("invalid path {text:?}: {reason}")]
    Path { text: String, reason: &'static str },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl From<serde_json::Error> for FormatError {
    fn from(e: serde_json::Error) -> Self {
        FormatError::Json { line: e.line(), column: e.column(), message: e.to_string() }
    }
}

fn check_version(found: u32) -> Result<(), FormatError> {
    if found != FORMAT_VERSION {
        return Err(FormatError::Version { found });
    }
    Ok(())
}

fn to_json<T: Serialize>(doc: &T) -> String {
    let mut text = serde_json::to_string_pretty(doc).expect("documents serialize");
    text.push('\n');
    text
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphDoc {
    version: u32,
    num_levels: usize,
    levels: Vec<Vec<Vec<usize>>>,
}

pub fn graph_to_json(graph: &GradedGraph) -> String {
    to_json(&GraphDoc {
        version: FORMAT_VERSION,
        num_levels: graph.num_levels(),
        levels: graph.levels().to_vec(),
    })
}

/// Reads a graph document without validating the graph itself.
pub fn graph_from_json_unchecked(text: &str) -> Result<GradedGraph, FormatError> {
    let doc: GraphDoc = serde_json::from_str(text)?;
    check_version(doc.version)?;
    if doc.num_levels != doc.levels.len() {
        return Err(FormatError::LevelCount { declared: doc.num_levels, found: doc.levels.len() });
    }
    Ok(GradedGraph::from_levels_unchecked(doc.levels))
}

pub fn graph_from_json(text: &str) -> Result<GradedGraph, FormatError> {
    let g = graph_from_json_unchecked(text)?;
    Ok(GradedGraph::new(g.into_levels())?)
}

/// Central weights as read from disk, in either numeric mode.
#[derive(Clone, Debug, PartialEq)]
pub enum WeightsFile {
    Rational(CentralWeights<BigRational>),
    Float(CentralWeights<f64>),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightsDoc<T> {
    version: u32,
    mode: String,
    levels: Vec<Vec<T>>,
}

#[derive(Deserialize)]
struct ModeProbe {
    version: u32,
    mode: String,
}

pub fn rational_weights_to_json(w: &CentralWeights<BigRational>) -> String {
    to_json(&WeightsDoc {
        version: FORMAT_VERSION,
        mode: "rational".into(),
        levels: w.levels.iter().map(|l| l.iter().map(|m| m.to_string()).collect()).collect(),
    })
}

pub fn float_weights_to_json(w: &CentralWeights<f64>) -> String {
    to_json(&WeightsDoc { version: FORMAT_VERSION, mode: "float".into(), levels: w.levels.clone() })
}

pub fn weights_to_json(w: &WeightsFile) -> String {
    match w {
        WeightsFile::Rational(w) => rational_weights_to_json(w),
        WeightsFile::Float(w) => float_weights_to_json(w),
    }
}

pub fn weights_from_json(text: &str) -> Result<WeightsFile, FormatError> {
    let probe: ModeProbe = serde_json::from_str(text)?;
    check_version(probe.version)?;
    match probe.mode.as_str() {
        "rational" => {
            let doc: WeightsDoc<String> = serde_json::from_str(text)?;
            let mut levels = Vec::with_capacity(doc.levels.len());
            for (level, row) in doc.levels.iter().enumerate() {
                let mut parsed = Vec::with_capacity(row.len());
                for (index, text) in row.iter().enumerate() {
                    let m = BigRational::from_str(text.trim()).map_err(|_| FormatError::Rational {
                        text: text.clone(),
                        level,
                        index,
                    })?;
                    parsed.push(m);
                }
                levels.push(parsed);
            }
            Ok(WeightsFile::Rational(CentralWeights::new(levels)))
        }
        "float" => {
            let doc: WeightsDoc<f64> = serde_json::from_str(text)?;
            Ok(WeightsFile::Float(CentralWeights::new(doc.levels)))
        }
        other => Err(FormatError::Mode(other.to_string())),
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EmbeddingDoc {
    version: u32,
    schedule: Vec<usize>,
    /// Per gap: inserted levels then the next original level.
    layers: Vec<Vec<Vec<Vec<usize>>>>,
    /// Uniadic term of every original vertex.
    vertex_map: Vec<Vec<String>>,
}

pub fn embedding_to_json(e: &EmbeddingResult) -> String {
    to_json(&EmbeddingDoc {
        version: FORMAT_VERSION,
        schedule: e.schedule.clone(),
        layers: e.gaps.clone(),
        vertex_map: e
            .vertex_map()
            .iter()
            .map(|row| row.iter().map(|t| t.to_string()).collect())
            .collect(),
    })
}

/// Reads an embedding. Terms of inserted levels are rebuilt from the layers;
/// terms of original levels are taken from the file as written.
pub fn embedding_from_json(text: &str) -> Result<EmbeddingResult, FormatError> {
    let doc: EmbeddingDoc = serde_json::from_str(text)?;
    check_version(doc.version)?;
    if doc.vertex_map.len() != doc.schedule.len() {
        return Err(FormatError::TermLevels { found: doc.vertex_map.len(), expected: doc.schedule.len() });
    }
    let mut original: Vec<Vec<UaVertex>> = Vec::with_capacity(doc.vertex_map.len());
    for row in &doc.vertex_map {
        let mut parsed = Vec::with_capacity(row.len());
        for (index, t) in row.iter().enumerate() {
            let level = original.len();
            parsed.push(t.parse().map_err(|source| FormatError::Term { level, index, source })?);
        }
        original.push(parsed);
    }
    let mut stacked: Vec<&Vec<Vec<usize>>> = Vec::new();
    for gap in &doc.layers {
        stacked.extend(gap.iter());
    }
    let mut terms: Vec<Vec<UaVertex>> = vec![original.first().cloned().unwrap_or_default()];
    for (offset, level) in stacked.iter().enumerate() {
        let l = offset + 1;
        if let Some(n) = doc.schedule.iter().position(|&s| s == l) {
            terms.push(original[n].clone());
            continue;
        }
        let above = &terms[l - 1];
        let mut row = Vec::with_capacity(level.len());
        for (index, sources) in level.iter().enumerate() {
            let get = |s: usize| above.get(s).cloned().unwrap_or_else(UaVertex::root);
            let t = match *sources.as_slice() {
                [a] => UaVertex::copy(&get(a)),
                [a, b] => UaVertex::pair(&get(a), &get(b)).unwrap_or_else(UaVertex::root),
                _ => return Err(FormatError::TermDegree { level: l, index, degree: sources.len() }),
            };
            row.push(t);
        }
        terms.push(row);
    }
    Ok(EmbeddingResult { gaps: doc.layers, terms, schedule: doc.schedule })
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ColoringDoc {
    version: u32,
    levels: Vec<Vec<u32>>,
    #[serde(default)]
    palette: Vec<u32>,
}

pub fn coloring_to_json(c: &Coloring) -> String {
    to_json(&ColoringDoc { version: FORMAT_VERSION, levels: c.levels.clone(), palette: c.palette.clone() })
}

/// Reads a coloring; the palette is recomputed from the levels.
pub fn coloring_from_json(text: &str) -> Result<Coloring, FormatError> {
    let doc: ColoringDoc = serde_json::from_str(text)?;
    check_version(doc.version)?;
    Ok(Coloring::from_levels(doc.levels))
}

#[derive(Serialize)]
struct SchemeDoc<T> {
    version: u32,
    depth: usize,
    mode: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    entries: Vec<(String, T)>,
}

pub fn exact_scheme_to_json(d: &SchemeDistribution<BigRational>) -> String {
    to_json(&SchemeDoc {
        version: FORMAT_VERSION,
        depth: d.depth,
        mode: "exact",
        samples: None,
        seed: None,
        entries: d.entries.iter().map(|(k, m)| (k.clone(), m.to_string())).collect(),
    })
}

pub fn float_scheme_to_json(
    d: &SchemeDistribution<f64>,
    mode: &'static str,
    samples: Option<usize>,
    seed: Option<u64>,
) -> String {
    to_json(&SchemeDoc {
        version: FORMAT_VERSION,
        depth: d.depth,
        mode,
        samples,
        seed,
        entries: d.entries.iter().map(|(k, m)| (k.clone(), *m)).collect(),
    })
}

#[derive(Serialize)]
struct HierarchyLevelDoc {
    start: i64,
    end: i64,
    blocks: Vec<(i64, i64)>,
}

#[derive(Serialize)]
struct HierarchyDoc {
    version: u32,
    levels: Vec<HierarchyLevelDoc>,
}

pub fn hierarchy_to_json(h: &HierarchyPrefix) -> String {
    let narrow = |x: i128| i64::try_from(x).expect("window fits i64 under the path-count guards");
    to_json(&HierarchyDoc {
        version: FORMAT_VERSION,
        levels: h
            .levels
            .iter()
            .map(|l| HierarchyLevelDoc {
                start: narrow(l.start),
                end: narrow(l.end),
                blocks: l.blocks.iter().map(|&(a, b)| (narrow(a), narrow(b))).collect(),
            })
            .collect(),
    })
}

/// Parses `0,1,1` (or the empty string for the root path).
pub fn parse_path(text: &str, end: usize) -> Result<PathPrefix, FormatError> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Ok(PathPrefix::new(end, Vec::new()));
    }
    let ranks = trimmed
        .split(',')
        .map(|r| r.trim().parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| FormatError::Path { text: text.to_string(), reason: "ranks must be non-negative integers" })?;
    Ok(PathPrefix::new(end, ranks))
}
