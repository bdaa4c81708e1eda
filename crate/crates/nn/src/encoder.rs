//! Hierarchical GCN encoder: two shared layers per scenario subgraph,
//! mean readout, then two layers over the instance graph.

use std::sync::Arc;

use ndarray::Array2;
use scenred_graphs::{normalize_adjacency, standardize_features, BipartiteGraph, InstanceGraph};

use crate::autodiff::{SparseSym, Tape, Var};
use crate::params::{BoundParams, PolicyParams};
use crate::NnError;

/// One GCN layer, `tanh(Anorm . H . W)`, on plain values.
pub fn gcn_layer(
    anorm: &Array2<f64>,
    h: &Array2<f64>,
    w: &Array2<f64>,
) -> Result<Array2<f64>, NnError> {
    if anorm.ncols() != h.nrows() || h.ncols() != w.nrows() {
        return Err(NnError::Shape(format!(
            "gcn_layer: {}x{} . {}x{} . {}x{}",
            anorm.nrows(),
            anorm.ncols(),
            h.nrows(),
            h.ncols(),
            w.nrows(),
            w.ncols()
        )));
    }
    Ok(anorm.dot(h).dot(w).mapv(f64::tanh))
}

/// Normalized adjacencies and standardized features of one instance,
/// ready for any number of forward passes. Parameters are not baked in,
/// so a prepared instance stays valid across training updates.
#[derive(Debug, Clone)]
pub struct PreparedInstance {
    pub n: usize,
    pub sub_adj: Vec<Arc<SparseSym>>,
    pub sub_feats: Vec<Array2<f64>>,
    pub inst_adj: Arc<SparseSym>,
}

pub fn prepare(subgraphs: &[BipartiteGraph], ig: &InstanceGraph) -> Result<PreparedInstance, NnError> {
    if subgraphs.len() != ig.n() {
        return Err(NnError::Shape(format!(
            "{} subgraphs for an instance graph of {} scenarios",
            subgraphs.len(),
            ig.n()
        )));
    }
    let sub_feats = standardize_features(subgraphs);
    let sub_adj = subgraphs
        .iter()
        .map(|g| Arc::new(SparseSym::from_dense(&normalize_adjacency(&g.to_adjacency()))))
        .collect();
    let inst_adj = Arc::new(SparseSym::from_dense(&normalize_adjacency(
        &ig.abs_adjacency(),
    )));
    Ok(PreparedInstance {
        n: subgraphs.len(),
        sub_adj,
        sub_feats,
        inst_adj,
    })
}

/// Scenario embeddings `H` (N x F') and the global mean embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedInstance {
    pub h: Array2<f64>,
    pub hbar: Array2<f64>,
}

pub fn encode_on_tape(
    tape: &Tape,
    bound: &BoundParams,
    prep: &PreparedInstance,
) -> (Var, Var) {
    let w0 = bound.var("enc.low.w0");
    let w1 = bound.var("enc.low.w1");
    let w2 = bound.var("enc.high.w0");
    let w3 = bound.var("enc.high.w1");

    let mut scenario_rows = Vec::with_capacity(prep.n);
    for (adj, feats) in prep.sub_adj.iter().zip(&prep.sub_feats) {
        let h0 = tape.leaf(feats.clone());
        let h1 = tape.tanh(tape.matmul(tape.spmm(adj.clone(), h0), w0));
        let h2 = tape.tanh(tape.matmul(tape.spmm(adj.clone(), h1), w1));
        scenario_rows.push(tape.mean_rows(h2));
    }
    let h0_inst = tape.stack_rows(&scenario_rows);
    let h1_inst = tape.tanh(tape.matmul(tape.spmm(prep.inst_adj.clone(), h0_inst), w2));
    let h = tape.tanh(tape.matmul(tape.spmm(prep.inst_adj.clone(), h1_inst), w3));
    let hbar = tape.mean_rows(h);
    (h, hbar)
}

/// Full hierarchical encoding of an instance.
pub fn encode(
    subgraphs: &[BipartiteGraph],
    ig: &InstanceGraph,
    params: &PolicyParams,
) -> Result<EncodedInstance, NnError> {
    let prep = prepare(subgraphs, ig)?;
    Ok(encode_prepared(&prep, params))
}

pub fn encode_prepared(prep: &PreparedInstance, params: &PolicyParams) -> EncodedInstance {
    let tape = Tape::new();
    let bound = params.bind(&tape);
    let (h, hbar) = encode_on_tape(&tape, &bound, prep);
    EncodedInstance {
        h: tape.value(h),
        hbar: tape.value(hbar),
    }
}
