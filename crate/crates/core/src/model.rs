use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::CoreError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
    Integer,
}

impl VarKind {
    pub fn is_integral(self) -> bool {
        !matches!(self, VarKind::Continuous)
    }

    pub fn letter(self) -> char {
        match self {
            VarKind::Continuous => 'C',
            VarKind::Binary => 'B',
            VarKind::Integer => 'I',
        }
    }

    pub fn from_letter(ch: char) -> Option<Self> {
        match ch {
            'C' => Some(VarKind::Continuous),
            'B' => Some(VarKind::Binary),
            'I' => Some(VarKind::Integer),
            _ => None,
        }
    }
}

/// Deterministic first-stage data: `min c.x` subject to `A x <= b` over
/// the declared variable kinds and bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstStage {
    pub c: Vec<f64>,
    pub a: Array2<f64>,
    pub b: Vec<f64>,
    pub kinds: Vec<VarKind>,
    pub bounds: Vec<(f64, f64)>,
}

impl FirstStage {
    pub fn n1(&self) -> usize {
        self.c.len()
    }

    pub fn m1(&self) -> usize {
        self.b.len()
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        let n1 = self.n1();
        if self.a.nrows() != self.m1() || (self.m1() > 0 && self.a.ncols() != n1) {
            return Err(CoreError::Dimension(format!(
                "first stage A is {}x{}, expected {}x{}",
                self.a.nrows(),
                self.a.ncols(),
                self.m1(),
                n1
            )));
        }
        if self.kinds.len() != n1 || self.bounds.len() != n1 {
            return Err(CoreError::Dimension(
                "first stage kinds/bounds length".into(),
            ));
        }
        for (j, (&k, &(lo, hi))) in self.kinds.iter().zip(&self.bounds).enumerate() {
            if lo > hi {
                return Err(CoreError::Dimension(format!("variable {j} has lo > hi")));
            }
            if k == VarKind::Binary && !(lo >= 0.0 && hi <= 1.0) {
                return Err(CoreError::Dimension(format!(
                    "binary variable {j} has bounds outside [0,1]"
                )));
            }
        }
        Ok(())
    }
}

/// One realization of the uncertain second stage. All rows carry `<=`
/// sense: `W y <= h - T x`; equalities are encoded as row pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub prob: f64,
    pub q: Vec<f64>,
    pub w: Array2<f64>,
    pub h: Vec<f64>,
    pub t: Array2<f64>,
    pub y_kinds: Vec<VarKind>,
    pub y_bounds: Vec<(f64, f64)>,
}

impl Scenario {
    pub fn n2(&self) -> usize {
        self.q.len()
    }

    pub fn m2(&self) -> usize {
        self.h.len()
    }

    pub fn validate(&self, n1: usize) -> Result<(), CoreError> {
        let (n2, m2) = (self.n2(), self.m2());
        if self.w.nrows() != m2 || self.w.ncols() != n2 {
            return Err(CoreError::Dimension(format!(
                "W is {}x{}, expected {}x{}",
                self.w.nrows(),
                self.w.ncols(),
                m2,
                n2
            )));
        }
        if self.t.nrows() != m2 || self.t.ncols() != n1 {
            return Err(CoreError::Dimension(format!(
                "T is {}x{}, expected {}x{}",
                self.t.nrows(),
                self.t.ncols(),
                m2,
                n1
            )));
        }
        if self.y_kinds.len() != n2 || self.y_bounds.len() != n2 {
            return Err(CoreError::Dimension("scenario kinds/bounds length".into()));
        }
        if !(0.0..=1.0).contains(&self.prob) {
            return Err(CoreError::Dimension(format!(
                "scenario probability {} outside [0,1]",
                self.prob
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemFamily {
    Cflp,
    Ndp,
    Generic,
}

impl ProblemFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            ProblemFamily::Cflp => "cflp",
            ProblemFamily::Ndp => "ndp",
            ProblemFamily::Generic => "generic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "cflp" => Some(ProblemFamily::Cflp),
            "ndp" => Some(ProblemFamily::Ndp),
            "generic" => Some(ProblemFamily::Generic),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceMeta {
    pub family: ProblemFamily,
    pub seed: u64,
}

/// Exact optimum of the full extensive form, recorded at generation time.
#[derive(Debug, Clone, PartialEq)]
pub struct CachedOptimum {
    pub value: f64,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpInstance {
    pub first: FirstStage,
    pub scenarios: Vec<Scenario>,
    pub meta: InstanceMeta,
    pub optimum: Option<CachedOptimum>,
}

impl SpInstance {
    pub fn n1(&self) -> usize {
        self.first.n1()
    }

    pub fn n2(&self) -> usize {
        self.scenarios.first().map_or(0, |s| s.n2())
    }

    pub fn m1(&self) -> usize {
        self.first.m1()
    }

    pub fn m2(&self) -> usize {
        self.scenarios.first().map_or(0, |s| s.m2())
    }

    pub fn num_scenarios(&self) -> usize {
        self.scenarios.len()
    }

    /// Short identifier used in manifests and reports.
    pub fn id(&self) -> String {
        format!(
            "{}_{}x{}_n{}_s{}",
            self.meta.family.as_str(),
            self.n1(),
            self.n2(),
            self.num_scenarios(),
            self.meta.seed
        )
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        self.first.validate()?;
        if self.scenarios.is_empty() {
            return Err(CoreError::Dimension("instance has no scenarios".into()));
        }
        let (n2, m2) = (self.n2(), self.m2());
        let mut total = 0.0;
        for (i, sc) in self.scenarios.iter().enumerate() {
            sc.validate(self.n1())?;
            if sc.n2() != n2 || sc.m2() != m2 {
                return Err(CoreError::Dimension(format!(
                    "scenario {i} has shape ({}, {}), expected ({}, {})",
                    sc.n2(),
                    sc.m2(),
                    n2,
                    m2
                )));
            }
            total += sc.prob;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(CoreError::Dimension(format!(
                "scenario probabilities sum to {total}"
            )));
        }
        if let Some(opt) = &self.optimum {
            if opt.x.len() != self.n1() {
                return Err(CoreError::Dimension(
                    "cached optimum x has wrong length".into(),
                ));
            }
        }
        Ok(())
    }
}

/// An ordered choice of `k` distinct scenarios with reduced-problem weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSelection {
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
}

impl ReducedSelection {
    /// Uniform `1/k` weights in the given order.
    pub fn uniform(indices: Vec<usize>) -> Self {
        let k = indices.len();
        ReducedSelection {
            indices,
            weights: vec![1.0 / k as f64; k],
        }
    }

    /// Selects every scenario in index order, weighted by its probability.
    pub fn full(inst: &SpInstance) -> Self {
        ReducedSelection {
            indices: (0..inst.num_scenarios()).collect(),
            weights: inst.scenarios.iter().map(|s| s.prob).collect(),
        }
    }

    pub fn k(&self) -> usize {
        self.indices.len()
    }

    pub fn validate(&self, num_scenarios: usize) -> Result<(), CoreError> {
        if self.indices.is_empty() {
            return Err(CoreError::InvalidArgument("empty selection".into()));
        }
        if self.weights.len() != self.indices.len() {
            return Err(CoreError::Dimension(
                "selection weights/indices length".into(),
            ));
        }
        let mut seen = vec![false; num_scenarios];
        for &i in &self.indices {
            if i >= num_scenarios {
                return Err(CoreError::InvalidArgument(format!(
                    "scenario index {i} out of range (N = {num_scenarios})"
                )));
            }
            if seen[i] {
                return Err(CoreError::InvalidArgument(format!(
                    "duplicate scenario index {i}"
                )));
            }
            seen[i] = true;
        }
        let mut total = 0.0;
        for &w in &self.weights {
            if w < 0.0 {
                return Err(CoreError::InvalidArgument("negative weight".into()));
            }
            total += w;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(CoreError::InvalidArgument(format!(
                "weights sum to {total}"
            )));
        }
        Ok(())
    }
}

/// Returns a copy of `inst` with objective and constraint data scaled by
/// one factor drawn uniformly from `[scale_lo, scale_hi]`. A cached
/// optimum value rescales by the same factor; its solution is preserved.
pub fn augment_instance(
    inst: &SpInstance,
    scale_lo: f64,
    scale_hi: f64,
    seed: u64,
) -> Result<SpInstance, CoreError> {
    if !(scale_lo > 0.0 && scale_lo <= scale_hi) {
        return Err(CoreError::InvalidArgument(format!(
            "scale range [{scale_lo}, {scale_hi}] must satisfy 0 < lo <= hi"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let factor = if scale_lo == scale_hi {
        scale_lo
    } else {
        rng.random_range(scale_lo..scale_hi)
    };
    let mut out = inst.clone();
    for v in out.first.c.iter_mut() {
        *v *= factor;
    }
    out.first.a.mapv_inplace(|v| v * factor);
    for v in out.first.b.iter_mut() {
        *v *= factor;
    }
    for sc in out.scenarios.iter_mut() {
        for v in sc.q.iter_mut() {
            *v *= factor;
        }
        sc.w.mapv_inplace(|v| v * factor);
        for v in sc.h.iter_mut() {
            *v *= factor;
        }
        sc.t.mapv_inplace(|v| v * factor);
    }
    if let Some(opt) = out.optimum.as_mut() {
        opt.value *= factor;
    }
    Ok(out)
}
