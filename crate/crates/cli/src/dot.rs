//! Graphviz export. Vertices are `L<level>_<index>`; each edge is labelled
//! with its rank in the target's in-edge list.

use std::fmt::Write;

use uniadic_core::graph::GradedGraph;

pub fn to_dot(graph: &GradedGraph) -> String {
    let mut out = String::from("digraph G {\n  rankdir=TB;\n");
    for (level, row) in graph.levels().iter().enumerate() {
        out.push_str("  { rank=same;");
        for index in 0..row.len() {
            let _ = write!(out, " L{level}_{index};");
        }
        out.push_str(" }\n");
    }
    for (level, row) in graph.levels().iter().enumerate().skip(1) {
        for (index, sources) in row.iter().enumerate() {
            for (rank, s) in sources.iter().enumerate() {
                let _ = writeln!(out, "  L{}_{s} -> L{level}_{index} [label={rank}];", level - 1);
            }
        }
    }
    out.push_str("}\n");
    out
}
