//! Debug dump of the hierarchical state as structured text, for golden
//! file comparison.

use std::fmt::Write as _;

use crate::{BipartiteGraph, InstanceGraph};

pub fn dump_graphs(subgraphs: &[BipartiteGraph], ig: &InstanceGraph) -> String {
    let mut out = String::new();
    for (i, g) in subgraphs.iter().enumerate() {
        let _ = writeln!(out, "subgraph {i} vars {} cons {}", g.num_vars(), g.num_cons());
        for (j, row) in g.var_features.rows().into_iter().enumerate() {
            let _ = writeln!(out, "v {j} {} {} {} {}", row[0], row[1], row[2], row[3]);
        }
        for (j, row) in g.cons_features.rows().into_iter().enumerate() {
            let _ = writeln!(out, "c {j} {} {}", row[0], row[1]);
        }
        for &(v, c, w) in &g.edges {
            let _ = writeln!(out, "e {v} {c} {w}");
        }
    }
    let n = ig.n();
    let _ = writeln!(out, "instance_graph {n}");
    for i in 0..n {
        let mut line = String::new();
        for j in 0..n {
            if j > 0 {
                line.push(' ');
            }
            let _ = write!(line, "{}", ig.adjacency[(i, j)]);
        }
        let _ = writeln!(out, "{line}");
    }
    out
}
