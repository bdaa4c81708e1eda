use ndarray::Array2;
use thiserror::Error;

/// Sense of a single constraint row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Eq,
    Ge,
}

/// A dense mixed-binary program `min objective . x` subject to
/// `rows x (sense) rhs` and `bounds`, with per-variable integrality.
#[derive(Debug, Clone, PartialEq)]
pub struct MipProblem {
    pub objective: Vec<f64>,
    pub rows: Array2<f64>,
    pub rhs: Vec<f64>,
    pub senses: Vec<RowSense>,
    /// Per-variable `[lo, hi]`; `hi` may be `f64::INFINITY`,
    /// `lo` may be `f64::NEG_INFINITY`.
    pub bounds: Vec<(f64, f64)>,
    pub integral: Vec<bool>,
}

#[derive(Debug, Error)]
pub enum MipError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("variable {0} has lo > hi")]
    InvalidBounds(usize),
    #[error("integral variable {0} lacks finite bounds")]
    UnboundedInteger(usize),
    #[error("pivot limit exceeded ({0} pivots); problem is likely numerically degenerate")]
    PivotLimit(u64),
}

impl MipProblem {
    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rhs.len()
    }

    /// Checks mutual consistency of all dimensions and bounds.
    pub fn validate(&self) -> Result<(), MipError> {
        let n = self.num_vars();
        let m = self.num_rows();
        if self.rows.nrows() != m || (m > 0 && self.rows.ncols() != n) {
            return Err(MipError::DimensionMismatch(format!(
                "rows is {}x{}, expected {}x{}",
                self.rows.nrows(),
                self.rows.ncols(),
                m,
                n
            )));
        }
        if self.senses.len() != m {
            return Err(MipError::DimensionMismatch(format!(
                "{} senses for {} rows",
                self.senses.len(),
                m
            )));
        }
        if self.bounds.len() != n || self.integral.len() != n {
            return Err(MipError::DimensionMismatch(format!(
                "{} bounds / {} integrality flags for {} variables",
                self.bounds.len(),
                self.integral.len(),
                n
            )));
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if lo > hi {
                return Err(MipError::InvalidBounds(j));
            }
        }
        Ok(())
    }

    /// Like [`validate`](Self::validate), but additionally requires finite
    /// bounds on every integral variable (a branch-and-bound precondition).
    pub fn validate_for_mip(&self) -> Result<(), MipError> {
        self.validate()?;
        for (j, &flag) in self.integral.iter().enumerate() {
            let (lo, hi) = self.bounds[j];
            if flag && !(lo.is_finite() && hi.is_finite()) {
                return Err(MipError::UnboundedInteger(j));
            }
        }
        Ok(())
    }

    /// Largest violation of constraint rows and bounds at `x`.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            worst = worst.max(lo - x[j]).max(x[j] - hi);
        }
        for i in 0..self.num_rows() {
            let lhs: f64 = self
                .rows
                .row(i)
                .iter()
                .zip(x)
                .map(|(a, v)| a * v)
                .sum();
            let diff = lhs - self.rhs[i];
            let v = match self.senses[i] {
                RowSense::Le => diff,
                RowSense::Ge => -diff,
                RowSense::Eq => diff.abs(),
            };
            worst = worst.max(v);
        }
        worst
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

/// Outcome class of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NodeLimit,
}

/// Deterministic work accounting for a solve.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WorkMetric {
    pub simplex_pivots: u64,
    pub bnb_nodes: u64,
}

impl WorkMetric {
    pub fn add(&mut self, other: WorkMetric) {
        self.simplex_pivots += other.simplex_pivots;
        self.bnb_nodes += other.bnb_nodes;
    }

    /// Deterministic stand-in for wall-clock solve time: pivots plus
    /// weighted nodes, in `time_scale` units.
    pub fn proxy_seconds(&self, node_weight: f64, time_scale: f64) -> f64 {
        (self.simplex_pivots as f64 + node_weight * self.bnb_nodes as f64) / time_scale
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Solution vector; empty when no point is available
    /// (infeasible, unbounded, or node limit without incumbent).
    pub x: Vec<f64>,
    pub objective: f64,
    pub work: WorkMetric,
}

impl SolveResult {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}
