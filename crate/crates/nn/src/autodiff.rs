//! Tape-based reverse-mode automatic differentiation over dense f64
//! matrices, restricted to the primitives the policy network needs.
//!
//! Values live on the tape; a [`Var`] is an index into it. Building an
//! operation records its parents and immediately computes the forward
//! value, so sampled control flow (pick an action, then keep building)
//! works naturally. [`Tape::gradients`] runs one reverse sweep from a
//! scalar node.
//!
//! Vectors are 1 x d row matrices and scalars are 1 x 1, which keeps
//! every primitive a matrix op.

use std::cell::RefCell;
use std::sync::Arc;

use ndarray::Array2;

/// Symmetric sparse matrix in row-adjacency form, used for the
/// (constant) normalized adjacencies inside GCN layers.
#[derive(Debug, Clone)]
pub struct SparseSym {
    rows: Vec<Vec<(u32, f64)>>,
}

impl SparseSym {
    pub fn from_dense(a: &Array2<f64>) -> Self {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "sparse adjacency must be square");
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| a[(i, j)] != 0.0)
                    .map(|j| (j as u32, a[(i, j)]))
                    .collect()
            })
            .collect();
        SparseSym { rows }
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn matmul(&self, h: &Array2<f64>) -> Array2<f64> {
        let d = h.ncols();
        let mut out = Array2::zeros((self.n(), d));
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                let hrow = h.row(j as usize);
                let mut orow = out.row_mut(i);
                for (o, &v) in orow.iter_mut().zip(hrow.iter()) {
                    *o += w * v;
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

enum Op {
    Leaf,
    MatMul(usize, usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Scale(usize, f64),
    AddRowBroadcast(usize, usize),
    Tanh(usize),
    Exp(usize),
    SoftmaxRowMasked { logits: usize },
    SoftmaxRows(usize),
    MeanRows(usize),
    SumAll(usize),
    ConcatCols(Vec<usize>),
    ColSlice { src: usize, start: usize, len: usize },
    Row { src: usize, idx: usize },
    StackRows(Vec<usize>),
    Transpose(usize),
    LnEntry { probs: usize, idx: usize },
    EntropyOfProbs(usize),
    SpMM { a: Arc<SparseSym>, h: usize },
    Min(usize, usize),
    Clamp { src: usize, lo: f64, hi: f64 },
}

struct Node {
    value: Array2<f64>,
    op: Op,
}

#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn push(&self, value: Array2<f64>, op: Op) -> Var {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node { value, op });
        Var(nodes.len() - 1)
    }

    fn with<R>(&self, v: Var, f: impl FnOnce(&Array2<f64>) -> R) -> R {
        f(&self.nodes.borrow()[v.0].value)
    }

    pub fn value(&self, v: Var) -> Array2<f64> {
        self.nodes.borrow()[v.0].value.clone()
    }

    pub fn scalar_value(&self, v: Var) -> f64 {
        let nodes = self.nodes.borrow();
        let m = &nodes[v.0].value;
        debug_assert_eq!(m.len(), 1, "scalar node expected");
        m[(0, 0)]
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        let nodes = self.nodes.borrow();
        (nodes[v.0].value.nrows(), nodes[v.0].value.ncols())
    }

    pub fn leaf(&self, value: Array2<f64>) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn scalar(&self, x: f64) -> Var {
        self.leaf(Array2::from_elem((1, 1), x))
    }

    pub fn matmul(&self, a: Var, b: Var) -> Var {
        let value = {
            let nodes = self.nodes.borrow();
            nodes[a.0].value.dot(&nodes[b.0].value)
        };
        self.push(value, Op::MatMul(a.0, b.0))
    }

    pub fn add(&self, a: Var, b: Var) -> Var {
        let value = {
            let nodes = self.nodes.borrow();
            &nodes[a.0].value + &nodes[b.0].value
        };
        self.push(value, Op::Add(a.0, b.0))
    }

    pub fn sub(&self, a: Var, b: Var) -> Var {
        let value = {
            let nodes = self.nodes.borrow();
            &nodes[a.0].value - &nodes[b.0].value
        };
        self.push(value, Op::Sub(a.0, b.0))
    }

    pub fn mul(&self, a: Var, b: Var) -> Var {
        let value = {
            let nodes = self.nodes.borrow();
            &nodes[a.0].value * &nodes[b.0].value
        };
        self.push(value, Op::Mul(a.0, b.0))
    }

    pub fn scale(&self, a: Var, s: f64) -> Var {
        let value = self.with(a, |m| m.mapv(|v| v * s));
        self.push(value, Op::Scale(a.0, s))
    }

    /// `m + row` where `row` broadcasts over the rows of `m`.
    pub fn add_row_broadcast(&self, m: Var, row: Var) -> Var {
        let value = {
            let nodes = self.nodes.borrow();
            let mut out = nodes[m.0].value.clone();
            let r = &nodes[row.0].value;
            for mut orow in out.rows_mut() {
                for (o, &v) in orow.iter_mut().zip(r.row(0).iter()) {
                    *o += v;
                }
            }
            out
        };
        self.push(value, Op::AddRowBroadcast(m.0, row.0))
    }

    pub fn tanh(&self, a: Var) -> Var {
        let value = self.with(a, |m| m.mapv(f64::tanh));
        self.push(value, Op::Tanh(a.0))
    }

    pub fn exp(&self, a: Var) -> Var {
        let value = self.with(a, |m| m.mapv(f64::exp));
        self.push(value, Op::Exp(a.0))
    }

    /// Softmax over a 1 x n logits row; `mask[i] = true` excludes entry i
    /// (its probability is exactly zero). At least one entry must remain.
    pub fn softmax_row_masked(&self, logits: Var, mask: Arc<Vec<bool>>) -> Var {
        let value = self.with(logits, |m| {
            let n = m.ncols();
            assert_eq!(mask.len(), n);
            let mut hi = f64::NEG_INFINITY;
            for j in 0..n {
                if !mask[j] {
                    hi = hi.max(m[(0, j)]);
                }
            }
            let mut out = Array2::zeros((1, n));
            if !hi.is_finite() {
                // all masked, or poisoned logits: propagate NaN so the
                // caller's finiteness checks trip instead of a panic
                for j in 0..n {
                    if !mask[j] {
                        out[(0, j)] = f64::NAN;
                    }
                }
                return out;
            }
            let mut total = 0.0;
            for j in 0..n {
                if !mask[j] {
                    let e = (m[(0, j)] - hi).exp();
                    out[(0, j)] = e;
                    total += e;
                }
            }
            out.mapv_inplace(|v| v / total);
            out
        });
        self.push(value, Op::SoftmaxRowMasked { logits: logits.0 })
    }

    /// Row-wise softmax of an n x m matrix (no masking).
    pub fn softmax_rows(&self, a: Var) -> Var {
        let value = self.with(a, |m| {
            let mut out = m.clone();
            for mut row in out.rows_mut() {
                let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut total = 0.0;
                for v in row.iter_mut() {
                    *v = (*v - hi).exp();
                    total += *v;
                }
                for v in row.iter_mut() {
                    *v /= total;
                }
            }
            out
        });
        self.push(value, Op::SoftmaxRows(a.0))
    }

    /// Column-wise mean over rows: n x d -> 1 x d.
    pub fn mean_rows(&self, a: Var) -> Var {
        let value = self.with(a, |m| {
            let n = m.nrows() as f64;
            let mut out = Array2::zeros((1, m.ncols()));
            for row in m.rows() {
                for (o, &v) in out.row_mut(0).iter_mut().zip(row.iter()) {
                    *o += v;
                }
            }
            out.mapv_inplace(|v| v / n);
            out
        });
        self.push(value, Op::MeanRows(a.0))
    }

    pub fn sum_all(&self, a: Var) -> Var {
        let value = self.with(a, |m| Array2::from_elem((1, 1), m.sum()));
        self.push(value, Op::SumAll(a.0))
    }

    /// Horizontal concatenation of 1 x d_i rows.
    pub fn concat_cols(&self, parts: &[Var]) -> Var {
        let value = {
            let nodes = self.nodes.borrow();
            let width: usize = parts.iter().map(|p| nodes[p.0].value.ncols()).sum();
            let mut out = Array2::zeros((1, width));
            let mut at = 0;
            for p in parts {
                let m = &nodes[p.0].value;
                debug_assert_eq!(m.nrows(), 1);
                for j in 0..m.ncols() {
                    out[(0, at + j)] = m[(0, j)];
                }
                at += m.ncols();
            }
            out
        };
        self.push(value, Op::ConcatCols(parts.iter().map(|p| p.0).collect()))
    }

    pub fn col_slice(&self, src: Var, start: usize, len: usize) -> Var {
        let value = self.with(src, |m| {
            let mut out = Array2::zeros((m.nrows(), len));
            for i in 0..m.nrows() {
                for j in 0..len {
                    out[(i, j)] = m[(i, start + j)];
                }
            }
            out
        });
        self.push(value, Op::ColSlice { src: src.0, start, len })
    }

    /// Row `idx` of a matrix as 1 x d.
    pub fn row(&self, src: Var, idx: usize) -> Var {
        let value = self.with(src, |m| {
            let mut out = Array2::zeros((1, m.ncols()));
            for j in 0..m.ncols() {
                out[(0, j)] = m[(idx, j)];
            }
            out
        });
        self.push(value, Op::Row { src: src.0, idx })
    }

    /// Stacks k 1 x d rows into k x d.
    pub fn stack_rows(&self, parts: &[Var]) -> Var {
        let value = {
            let nodes = self.nodes.borrow();
            let d = nodes[parts[0].0].value.ncols();
            let mut out = Array2::zeros((parts.len(), d));
            for (i, p) in parts.iter().enumerate() {
                for j in 0..d {
                    out[(i, j)] = nodes[p.0].value[(0, j)];
                }
            }
            out
        };
        self.push(value, Op::StackRows(parts.iter().map(|p| p.0).collect()))
    }

    pub fn transpose(&self, a: Var) -> Var {
        let value = self.with(a, |m| m.t().to_owned());
        self.push(value, Op::Transpose(a.0))
    }

    /// Natural log of one probability entry (1 x 1).
    pub fn ln_entry(&self, probs: Var, idx: usize) -> Var {
        let value = self.with(probs, |m| {
            Array2::from_elem((1, 1), m[(0, idx)].max(1e-300).ln())
        });
        self.push(value, Op::LnEntry { probs: probs.0, idx })
    }

    /// Shannon entropy of a probability row, with 0 ln 0 = 0.
    pub fn entropy_of_probs(&self, probs: Var) -> Var {
        let value = self.with(probs, |m| {
            let h: f64 = m
                .iter()
                .filter(|&&p| p > 1e-300)
                .map(|&p| -p * p.ln())
                .sum();
            Array2::from_elem((1, 1), h)
        });
        self.push(value, Op::EntropyOfProbs(probs.0))
    }

    /// Sparse constant matrix times dense variable.
    pub fn spmm(&self, a: Arc<SparseSym>, h: Var) -> Var {
        let value = self.with(h, |m| a.matmul(m));
        self.push(value, Op::SpMM { a, h: h.0 })
    }

    /// Elementwise minimum of two scalars; gradient follows the smaller.
    pub fn min(&self, a: Var, b: Var) -> Var {
        let value = {
            let nodes = self.nodes.borrow();
            let av = nodes[a.0].value[(0, 0)];
            let bv = nodes[b.0].value[(0, 0)];
            Array2::from_elem((1, 1), av.min(bv))
        };
        self.push(value, Op::Min(a.0, b.0))
    }

    pub fn clamp(&self, src: Var, lo: f64, hi: f64) -> Var {
        let value = self.with(src, |m| m.mapv(|v| v.clamp(lo, hi)));
        self.push(value, Op::Clamp { src: src.0, lo, hi })
    }

    /// Reverse sweep from a scalar node; returns one gradient slot per
    /// tape node (None where the loss does not depend on the node).
    pub fn gradients(&self, loss: Var) -> Vec<Option<Array2<f64>>> {
        let nodes = self.nodes.borrow();
        let mut grads: Vec<Option<Array2<f64>>> = vec![None; nodes.len()];
        debug_assert_eq!(nodes[loss.0].value.len(), 1, "loss must be scalar");
        grads[loss.0] = Some(Array2::from_elem((1, 1), 1.0));

        for i in (0..nodes.len()).rev() {
            let node = &nodes[i];
            if matches!(node.op, Op::Leaf) {
                continue; // leaf gradients stay readable after the sweep
            }
            let Some(g) = grads[i].take() else { continue };
            let mut accum = |slot: usize, delta: Array2<f64>| match &mut grads[slot] {
                Some(acc) => *acc += &delta,
                none => *none = Some(delta),
            };
            match &node.op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let da = g.dot(&nodes[*b].value.t());
                    let db = nodes[*a].value.t().dot(&g);
                    accum(*a, da);
                    accum(*b, db);
                }
                Op::Add(a, b) => {
                    accum(*a, g.clone());
                    accum(*b, g);
                }
                Op::Sub(a, b) => {
                    accum(*a, g.clone());
                    accum(*b, -g);
                }
                Op::Mul(a, b) => {
                    accum(*a, &g * &nodes[*b].value);
                    accum(*b, &g * &nodes[*a].value);
                }
                Op::Scale(a, s) => accum(*a, g.mapv(|v| v * s)),
                Op::AddRowBroadcast(m, row) => {
                    let mut drow = Array2::zeros((1, g.ncols()));
                    for grow in g.rows() {
                        for (o, &v) in drow.row_mut(0).iter_mut().zip(grow.iter()) {
                            *o += v;
                        }
                    }
                    accum(*m, g);
                    accum(*row, drow);
                }
                Op::Tanh(a) => {
                    accum(*a, &g * &node.value.mapv(|y| 1.0 - y * y));
                }
                Op::Exp(a) => accum(*a, &g * &node.value),
                Op::SoftmaxRowMasked { logits } | Op::SoftmaxRows(logits) => {
                    let p = &node.value;
                    let mut dz = Array2::zeros(g.raw_dim());
                    for r in 0..p.nrows() {
                        let dot: f64 = (0..p.ncols()).map(|j| g[(r, j)] * p[(r, j)]).sum();
                        for j in 0..p.ncols() {
                            dz[(r, j)] = p[(r, j)] * (g[(r, j)] - dot);
                        }
                    }
                    accum(*logits, dz);
                }
                Op::MeanRows(a) => {
                    let n = nodes[*a].value.nrows();
                    let mut da = Array2::zeros((n, g.ncols()));
                    for i in 0..n {
                        for j in 0..g.ncols() {
                            da[(i, j)] = g[(0, j)] / n as f64;
                        }
                    }
                    accum(*a, da);
                }
                Op::SumAll(a) => {
                    let shape = nodes[*a].value.raw_dim();
                    accum(*a, Array2::from_elem(shape, g[(0, 0)]));
                }
                Op::ConcatCols(parts) => {
                    let mut at = 0;
                    for p in parts {
                        let w = nodes[*p].value.ncols();
                        let mut dp = Array2::zeros((1, w));
                        for j in 0..w {
                            dp[(0, j)] = g[(0, at + j)];
                        }
                        accum(*p, dp);
                        at += w;
                    }
                }
                Op::ColSlice { src, start, len } => {
                    let m = &nodes[*src].value;
                    let mut ds = Array2::zeros(m.raw_dim());
                    for i in 0..g.nrows() {
                        for j in 0..*len {
                            ds[(i, start + j)] = g[(i, j)];
                        }
                    }
                    accum(*src, ds);
                }
                Op::Row { src, idx } => {
                    let m = &nodes[*src].value;
                    let mut ds = Array2::zeros(m.raw_dim());
                    for j in 0..g.ncols() {
                        ds[(*idx, j)] = g[(0, j)];
                    }
                    accum(*src, ds);
                }
                Op::StackRows(parts) => {
                    for (i, p) in parts.iter().enumerate() {
                        let mut dp = Array2::zeros((1, g.ncols()));
                        for j in 0..g.ncols() {
                            dp[(0, j)] = g[(i, j)];
                        }
                        accum(*p, dp);
                    }
                }
                Op::Transpose(a) => accum(*a, g.t().to_owned()),
                Op::LnEntry { probs, idx } => {
                    let p = nodes[*probs].value[(0, *idx)].max(1e-300);
                    let m = &nodes[*probs].value;
                    let mut dp = Array2::zeros(m.raw_dim());
                    dp[(0, *idx)] = g[(0, 0)] / p;
                    accum(*probs, dp);
                }
                Op::EntropyOfProbs(probs) => {
                    let m = &nodes[*probs].value;
                    let mut dp = Array2::zeros(m.raw_dim());
                    for j in 0..m.ncols() {
                        let p = m[(0, j)];
                        if p > 1e-300 {
                            dp[(0, j)] = -g[(0, 0)] * (p.ln() + 1.0);
                        }
                    }
                    accum(*probs, dp);
                }
                Op::SpMM { a, h } => {
                    // the adjacency is symmetric, so A^T G = A G
                    accum(*h, a.matmul(&g));
                }
                Op::Min(a, b) => {
                    let av = nodes[*a].value[(0, 0)];
                    let bv = nodes[*b].value[(0, 0)];
                    if av <= bv {
                        accum(*a, g);
                    } else {
                        accum(*b, g);
                    }
                }
                Op::Clamp { src, lo, hi } => {
                    let m = &nodes[*src].value;
                    let mut ds = Array2::zeros(m.raw_dim());
                    for i in 0..m.nrows() {
                        for j in 0..m.ncols() {
                            let v = m[(i, j)];
                            if v > *lo && v < *hi {
                                ds[(i, j)] = g[(i, j)];
                            }
                        }
                    }
                    accum(*src, ds);
                }
            }
        }
        grads
    }

    pub fn grad_of(&self, grads: &[Option<Array2<f64>>], v: Var) -> Option<Array2<f64>> {
        grads[v.0].clone()
    }
}
