//! Weighted bipartite representation of one scenario's MIP.

use ndarray::Array2;
use scenred_core::{FirstStage, Scenario};

/// Upper bounds are capped at this value in the feature schema so that
/// unbounded recourse variables stay finite.
const UPPER_CAP: f64 = 1e6;

/// Feature width of the padded node-feature matrix. Variable rows carry
/// [objective, kind flag, lower bound, capped upper bound]; constraint
/// rows carry [parallelism, rhs, 0, 0].
pub const NODE_FEATURES: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteGraph {
    /// numVars x 4: objective coefficient, integrality flag, lo, capped hi.
    pub var_features: Array2<f64>,
    /// numCons x 2: parallelism with the objective, rhs.
    pub cons_features: Array2<f64>,
    /// (variable index, constraint index, coefficient) for every nonzero.
    pub edges: Vec<(usize, usize, f64)>,
    /// Node features zero-padded to a common width; variables first.
    pub padded_features: Array2<f64>,
}

impl BipartiteGraph {
    pub fn num_vars(&self) -> usize {
        self.var_features.nrows()
    }

    pub fn num_cons(&self) -> usize {
        self.cons_features.nrows()
    }

    pub fn num_nodes(&self) -> usize {
        self.num_vars() + self.num_cons()
    }

    /// Dense symmetric message-passing adjacency over all nodes, using
    /// absolute coefficients so degree normalization stays real.
    pub fn to_adjacency(&self) -> Array2<f64> {
        let n = self.num_nodes();
        let nv = self.num_vars();
        let mut a = Array2::zeros((n, n));
        for &(v, c, w) in &self.edges {
            let w = w.abs();
            a[(v, nv + c)] = w;
            a[(nv + c, v)] = w;
        }
        a
    }
}

fn cosine(a: &[f64], b: impl Iterator<Item = f64> + Clone) -> f64 {
    let dot: f64 = a.iter().zip(b.clone()).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.map(|y| y * y).sum::<f64>().sqrt();
    if na < 1e-300 || nb < 1e-300 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Combines the first stage with one scenario into the scenario
/// subproblem's bipartite graph. Variable nodes are the x block followed
/// by the y block; constraint nodes are first-stage rows followed by
/// scenario rows.
pub fn build_scenario_subgraph(fs: &FirstStage, sc: &Scenario) -> BipartiteGraph {
    let n1 = fs.n1();
    let n2 = sc.n2();
    let m1 = fs.m1();
    let m2 = sc.m2();
    let nv = n1 + n2;
    let nc = m1 + m2;

    // objective of the scenario subproblem: [c, q]
    let mut objective = Vec::with_capacity(nv);
    objective.extend_from_slice(&fs.c);
    objective.extend_from_slice(&sc.q);

    let mut var_features = Array2::zeros((nv, 4));
    for j in 0..nv {
        let (kind, (lo, hi)) = if j < n1 {
            (fs.kinds[j], fs.bounds[j])
        } else {
            (sc.y_kinds[j - n1], sc.y_bounds[j - n1])
        };
        var_features[(j, 0)] = objective[j];
        var_features[(j, 1)] = if kind.is_integral() { 1.0 } else { 0.0 };
        var_features[(j, 2)] = lo;
        var_features[(j, 3)] = hi.min(UPPER_CAP);
    }

    let mut cons_features = Array2::zeros((nc, 2));
    let mut edges = Vec::new();
    for i in 0..m1 {
        let row_iter = (0..nv).map(|j| if j < n1 { fs.a[(i, j)] } else { 0.0 });
        cons_features[(i, 0)] = cosine(&objective, row_iter);
        cons_features[(i, 1)] = fs.b[i];
        for j in 0..n1 {
            let w = fs.a[(i, j)];
            if w != 0.0 {
                edges.push((j, i, w));
            }
        }
    }
    for r in 0..m2 {
        let row_iter = (0..nv).map(|j| {
            if j < n1 {
                sc.t[(r, j)]
            } else {
                sc.w[(r, j - n1)]
            }
        });
        cons_features[(m1 + r, 0)] = cosine(&objective, row_iter);
        cons_features[(m1 + r, 1)] = sc.h[r];
        for j in 0..n1 {
            let w = sc.t[(r, j)];
            if w != 0.0 {
                edges.push((j, m1 + r, w));
            }
        }
        for j in 0..n2 {
            let w = sc.w[(r, j)];
            if w != 0.0 {
                edges.push((n1 + j, m1 + r, w));
            }
        }
    }

    let mut padded_features = Array2::zeros((nv + nc, NODE_FEATURES));
    for j in 0..nv {
        for f in 0..4 {
            padded_features[(j, f)] = var_features[(j, f)];
        }
    }
    for i in 0..nc {
        padded_features[(nv + i, 0)] = cons_features[(i, 0)];
        padded_features[(nv + i, 1)] = cons_features[(i, 1)];
    }

    BipartiteGraph {
        var_features,
        cons_features,
        edges,
        padded_features,
    }
}

/// Per-instance z-score of each padded feature column, pooled over every
/// subgraph of the instance. Zero-variance columns pass through. Returns
/// one standardized feature matrix per subgraph, leaving the graphs
/// untouched.
pub fn standardize_features(graphs: &[BipartiteGraph]) -> Vec<Array2<f64>> {
    let total: usize = graphs.iter().map(|g| g.num_nodes()).sum();
    if total == 0 {
        return Vec::new();
    }
    let mut mean = [0.0; NODE_FEATURES];
    for g in graphs {
        for row in g.padded_features.rows() {
            for (f, m) in mean.iter_mut().enumerate() {
                *m += row[f];
            }
        }
    }
    for m in mean.iter_mut() {
        *m /= total as f64;
    }
    let mut var = [0.0; NODE_FEATURES];
    for g in graphs {
        for row in g.padded_features.rows() {
            for (f, v) in var.iter_mut().enumerate() {
                let d = row[f] - mean[f];
                *v += d * d;
            }
        }
    }
    let std: Vec<f64> = var.iter().map(|v| (v / total as f64).sqrt()).collect();

    graphs
        .iter()
        .map(|g| {
            let mut out = g.padded_features.clone();
            for mut row in out.rows_mut() {
                for f in 0..NODE_FEATURES {
                    if std[f] > 1e-12 {
                        row[f] = (row[f] - mean[f]) / std[f];
                    }
                }
            }
            out
        })
        .collect()
}
