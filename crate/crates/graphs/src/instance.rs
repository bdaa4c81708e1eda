//! The high-level instance graph: scenarios as vertices, cosine
//! similarity of flattened uncertain parameters as edge weights.

use ndarray::Array2;
use scenred_core::Scenario;

use crate::GraphError;

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceGraph {
    /// N x N symmetric cosine similarities with an exactly zero diagonal
    /// (self-loops appear only during normalization).
    pub adjacency: Array2<f64>,
}

impl InstanceGraph {
    pub fn n(&self) -> usize {
        self.adjacency.nrows()
    }

    /// Entrywise absolute value, the nonnegative matrix handed to degree
    /// normalization.
    pub fn abs_adjacency(&self) -> Array2<f64> {
        self.adjacency.mapv(f64::abs)
    }
}

/// Concatenates a scenario's uncertain data as [q, W, h, T], matrices
/// row-major.
pub fn flatten_uncertain(sc: &Scenario) -> Vec<f64> {
    let mut out = Vec::with_capacity(sc.n2() + sc.m2() * sc.n2() + sc.m2() + sc.m2() * sc.t.ncols());
    out.extend_from_slice(&sc.q);
    out.extend(sc.w.iter().copied());
    out.extend_from_slice(&sc.h);
    out.extend(sc.t.iter().copied());
    out
}

/// Complete weighted graph over scenarios: `A[i][j]` is the cosine
/// similarity of the flattened uncertain vectors, zero on the diagonal.
pub fn build_instance_adjacency(scenarios: &[Scenario]) -> Result<InstanceGraph, GraphError> {
    if scenarios.is_empty() {
        return Err(GraphError::Empty);
    }
    let n = scenarios.len();
    let flat: Vec<Vec<f64>> = scenarios.iter().map(flatten_uncertain).collect();
    let norms: Vec<f64> = flat
        .iter()
        .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    for (i, &nm) in norms.iter().enumerate() {
        if nm < 1e-300 {
            return Err(GraphError::ZeroNorm(i));
        }
    }
    let mut a = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let dot: f64 = flat[i].iter().zip(&flat[j]).map(|(x, y)| x * y).sum();
            let c = dot / (norms[i] * norms[j]);
            a[(i, j)] = c;
            a[(j, i)] = c;
        }
    }
    Ok(InstanceGraph { adjacency: a })
}
