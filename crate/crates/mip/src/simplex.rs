//! Two-phase primal simplex on a dense tableau with bounded variables.
//!
//! Variables are shifted so every column has lower bound 0; finite upper
//! bounds are handled by complementing columns in place (`x -> u - x`)
//! instead of adding rows. Fixed variables (`lo == hi`) are folded into
//! the right-hand side before the tableau is built, which keeps deep
//! branch-and-bound nodes small.
//!
//! Pricing is Dantzig's rule (most negative reduced cost, lowest index on
//! ties) with a fallback to Bland's rule after a run of degenerate steps,
//! which preserves Bland's termination guarantee while avoiding its
//! notoriously long pivot sequences.

use ndarray::Array2;

use crate::problem::{MipError, MipProblem, RowSense, SolveResult, SolveStatus, WorkMetric};

const EPS_COST: f64 = 1e-9;
const EPS_PIV: f64 = 1e-9;
const EPS_PHASE1: f64 = 1e-7;
const DEGENERATE_STEP: f64 = 1e-11;
const BLAND_TRIGGER: u32 = 40;

/// Solves the LP relaxation of `p` (integrality flags are ignored).
pub fn solve_lp(p: &MipProblem) -> Result<SolveResult, MipError> {
    p.validate()?;
    let lo: Vec<f64> = p.bounds.iter().map(|b| b.0).collect();
    let hi: Vec<f64> = p.bounds.iter().map(|b| b.1).collect();
    solve_lp_with_bounds(p, &lo, &hi)
}

/// Solves the LP relaxation under overriding variable bounds.
pub fn solve_lp_bounded(p: &MipProblem, lo: &[f64], hi: &[f64]) -> Result<SolveResult, MipError> {
    p.validate()?;
    if lo.len() != p.num_vars() || hi.len() != p.num_vars() {
        return Err(MipError::DimensionMismatch(
            "bound override length".into(),
        ));
    }
    solve_lp_with_bounds(p, lo, hi)
}

/// How an original variable maps into tableau columns.
#[derive(Clone, Copy)]
enum VarMap {
    Fixed(f64),
    /// `x = lo + t[col]`
    Shift {
        col: usize,
        lo: f64,
    },
    /// `x = hi - t[col]` (used when only the upper bound is finite)
    Mirror {
        col: usize,
        hi: f64,
    },
    /// `x = t[pos] - t[neg]` (free variable)
    Split {
        pos: usize,
        neg: usize,
    },
}

/// Solves the LP relaxation under overriding bounds (the branch-and-bound
/// entry point; `solve_lp` passes the problem's own bounds).
pub(crate) fn solve_lp_with_bounds(
    p: &MipProblem,
    lo: &[f64],
    hi: &[f64],
) -> Result<SolveResult, MipError> {
    let n = p.num_vars();
    let m = p.num_rows();
    debug_assert_eq!(lo.len(), n);
    debug_assert_eq!(hi.len(), n);

    for j in 0..n {
        if lo[j] > hi[j] + 1e-12 {
            return Ok(SolveResult {
                status: SolveStatus::Infeasible,
                x: Vec::new(),
                objective: f64::INFINITY,
                work: WorkMetric::default(),
            });
        }
    }

    // Standard-form conversion: shift/mirror/split columns, fold fixed
    // variables into the rhs.
    let mut maps = Vec::with_capacity(n);
    let mut cols: Vec<Vec<f64>> = Vec::new(); // structural columns
    let mut costs: Vec<f64> = Vec::new();
    let mut uppers: Vec<f64> = Vec::new();
    let mut rhs: Vec<f64> = p.rhs.clone();
    for j in 0..n {
        let (l, h) = (lo[j], hi[j]);
        let col_data: Vec<f64> = (0..m).map(|i| p.rows[(i, j)]).collect();
        if h - l <= 1e-12 {
            let v = l;
            for i in 0..m {
                rhs[i] -= col_data[i] * v;
            }
            maps.push(VarMap::Fixed(v));
        } else if l.is_finite() {
            for i in 0..m {
                rhs[i] -= col_data[i] * l;
            }
            maps.push(VarMap::Shift {
                col: cols.len(),
                lo: l,
            });
            cols.push(col_data);
            costs.push(p.objective[j]);
            uppers.push(h - l); // may be +inf
        } else if h.is_finite() {
            for i in 0..m {
                rhs[i] -= col_data[i] * h;
            }
            maps.push(VarMap::Mirror {
                col: cols.len(),
                hi: h,
            });
            cols.push(col_data.iter().map(|v| -v).collect());
            costs.push(-p.objective[j]);
            uppers.push(f64::INFINITY);
        } else {
            maps.push(VarMap::Split {
                pos: cols.len(),
                neg: cols.len() + 1,
            });
            cols.push(col_data.clone());
            costs.push(p.objective[j]);
            uppers.push(f64::INFINITY);
            cols.push(col_data.iter().map(|v| -v).collect());
            costs.push(-p.objective[j]);
            uppers.push(f64::INFINITY);
        }
    }
    let n_struct = cols.len();

    // Normalize rows to <= / =, then count slacks and artificials.
    // A `Ge` row is negated into `Le`.
    let mut row_scale: Vec<f64> = vec![1.0; m];
    let mut row_eq: Vec<bool> = vec![false; m];
    for i in 0..m {
        match p.senses[i] {
            RowSense::Le => {}
            RowSense::Ge => row_scale[i] = -1.0,
            RowSense::Eq => row_eq[i] = true,
        }
    }
    let n_slack = (0..m).filter(|&i| !row_eq[i]).count();

    // Column layout: structural | slack | artificial.
    let mut slack_of_row: Vec<Option<usize>> = vec![None; m];
    let mut next = n_struct;
    for i in 0..m {
        if !row_eq[i] {
            slack_of_row[i] = Some(next);
            next += 1;
        }
    }
    // Decide artificials after the rhs sign is known.
    let mut need_art: Vec<bool> = vec![false; m];
    for i in 0..m {
        let b = rhs[i] * row_scale[i];
        if row_eq[i] || b < 0.0 {
            need_art[i] = true;
        }
    }
    let n_art = need_art.iter().filter(|&&a| a).count();
    let ncols = n_struct + n_slack + n_art;
    let rhs_col = ncols;

    let mut tab = Array2::<f64>::zeros((m, ncols + 1));
    let mut upper = vec![f64::INFINITY; ncols];
    upper[..n_struct].copy_from_slice(&uppers);
    let mut basis = vec![usize::MAX; m];
    let mut art_cols: Vec<usize> = Vec::with_capacity(n_art);
    {
        let mut art = n_struct + n_slack;
        for i in 0..m {
            let s = row_scale[i];
            for (jc, col) in cols.iter().enumerate() {
                tab[(i, jc)] = s * col[i];
            }
            let mut b = s * rhs[i];
            let mut slack_sign = 1.0;
            if b < 0.0 {
                // flip the row so the artificial (or slack) basis value is >= 0
                for jc in 0..n_struct {
                    tab[(i, jc)] = -tab[(i, jc)];
                }
                b = -b;
                slack_sign = -1.0;
            }
            tab[(i, rhs_col)] = b;
            if let Some(sc) = slack_of_row[i] {
                tab[(i, sc)] = slack_sign;
            }
            if need_art[i] {
                tab[(i, art)] = 1.0;
                basis[i] = art;
                art_cols.push(art);
                art += 1;
            } else {
                basis[i] = slack_of_row[i].expect("non-artificial row has a slack");
            }
        }
    }

    let mut cost2 = vec![0.0; ncols];
    cost2[..n_struct].copy_from_slice(&costs);
    let mut cost1 = vec![0.0; ncols];
    for &a in &art_cols {
        cost1[a] = 1.0;
    }

    // Objective rows store reduced costs plus, in the last cell, the
    // negative of the objective value at the current basic point.
    let mut obj1 = vec![0.0; ncols + 1];
    let mut obj2 = vec![0.0; ncols + 1];
    obj1[..ncols].copy_from_slice(&cost1);
    obj2[..ncols].copy_from_slice(&cost2);
    for i in 0..m {
        let g = cost1[basis[i]];
        if g != 0.0 {
            for j in 0..=ncols {
                obj1[j] -= g * tab[(i, j)];
            }
        }
        // cost2 of slacks and artificials is zero, so obj2 is already priced
    }

    let pivot_limit = 10_000 + 120 * (m as u64 + ncols as u64);
    let mut st = Tableau {
        tab,
        basis,
        upper,
        complemented: vec![false; ncols],
        allowed: vec![true; ncols],
        pivots: 0,
        pivot_limit,
        rhs_col,
    };

    // Phase 1: drive artificial variables to zero. The phase-1 objective
    // is bounded below by zero, so an optimal loop exit is the only one.
    if n_art > 0 {
        let outcome = st.optimize(&mut obj1, Some(&mut obj2))?;
        if outcome == LoopOutcome::Unbounded || -obj1[st.rhs_col] > EPS_PHASE1 {
            return Ok(SolveResult {
                status: SolveStatus::Infeasible,
                x: Vec::new(),
                objective: f64::INFINITY,
                work: WorkMetric {
                    simplex_pivots: st.pivots,
                    bnb_nodes: 0,
                },
            });
        }
        for &a in &art_cols {
            st.allowed[a] = false;
            st.upper[a] = 0.0;
        }
    }

    // Phase 2.
    let outcome = st.optimize(&mut obj2, None)?;
    if outcome == LoopOutcome::Unbounded {
        return Ok(SolveResult {
            status: SolveStatus::Unbounded,
            x: Vec::new(),
            objective: f64::NEG_INFINITY,
            work: WorkMetric {
                simplex_pivots: st.pivots,
                bnb_nodes: 0,
            },
        });
    }

    // Extract the solution in original variable space, clamping away
    // sub-tolerance negativity accumulated by elimination.
    let mut t_val = vec![0.0; ncols];
    for i in 0..m {
        t_val[st.basis[i]] = st.tab[(i, st.rhs_col)].max(0.0);
    }
    for j in 0..ncols {
        if st.complemented[j] {
            t_val[j] = (st.upper[j] - t_val[j]).max(0.0);
        }
    }
    let mut x = vec![0.0; n];
    for (j, mp) in maps.iter().enumerate() {
        x[j] = match *mp {
            VarMap::Fixed(v) => v,
            VarMap::Shift { col, lo } => lo + t_val[col],
            VarMap::Mirror { col, hi } => hi - t_val[col],
            VarMap::Split { pos, neg } => t_val[pos] - t_val[neg],
        };
    }
    let objective = p.objective_value(&x);
    Ok(SolveResult {
        status: SolveStatus::Optimal,
        x,
        objective,
        work: WorkMetric {
            simplex_pivots: st.pivots,
            bnb_nodes: 0,
        },
    })
}

#[derive(PartialEq, Eq, Clone, Copy)]
enum LoopOutcome {
    Optimal,
    Unbounded,
}

struct Tableau {
    tab: Array2<f64>,
    basis: Vec<usize>,
    upper: Vec<f64>,
    complemented: Vec<bool>,
    allowed: Vec<bool>,
    pivots: u64,
    pivot_limit: u64,
    rhs_col: usize,
}

impl Tableau {
    /// Runs the simplex loop for one phase. `obj` is the active objective
    /// row; `carry` is kept in sync through pivots for the next phase.
    fn optimize(
        &mut self,
        obj: &mut [f64],
        mut carry: Option<&mut Vec<f64>>,
    ) -> Result<LoopOutcome, MipError> {
        let m = self.tab.nrows();
        let ncols = self.rhs_col;
        let mut degen_run: u32 = 0;

        loop {
            if self.pivots >= self.pivot_limit {
                return Err(MipError::PivotLimit(self.pivots));
            }
            let bland = degen_run >= BLAND_TRIGGER;

            // Entering column: every nonbasic sits at 0 in complemented
            // coordinates, so eligibility is simply a negative reduced cost.
            let mut enter: Option<usize> = None;
            if bland {
                for j in 0..ncols {
                    if self.allowed[j] && obj[j] < -EPS_COST {
                        enter = Some(j);
                        break;
                    }
                }
            } else {
                let mut best = -EPS_COST;
                for j in 0..ncols {
                    if self.allowed[j] && obj[j] < best {
                        best = obj[j];
                        enter = Some(j);
                    }
                }
            }
            let Some(c) = enter else {
                return Ok(LoopOutcome::Optimal);
            };

            // Ratio test over basic lower and upper limits plus the
            // entering variable's own upper bound. Ties go to the row with
            // the smallest basis variable index (Bland-compatible) and a
            // row pivot is preferred over a bound flip.
            let mut theta = self.upper[c]; // may be +inf
            let mut leave: Option<(usize, bool)> = None;
            for i in 0..m {
                let a = self.tab[(i, c)];
                let (lim, at_upper) = if a > EPS_PIV {
                    ((self.tab[(i, self.rhs_col)] / a).max(0.0), false)
                } else if a < -EPS_PIV && self.upper[self.basis[i]].is_finite() {
                    (
                        ((self.upper[self.basis[i]] - self.tab[(i, self.rhs_col)]) / -a).max(0.0),
                        true,
                    )
                } else {
                    continue;
                };
                let take = match leave {
                    None => lim <= theta,
                    Some((r, _)) => {
                        lim < theta - 1e-9 || (lim <= theta + 1e-9 && self.basis[i] < self.basis[r])
                    }
                };
                if take {
                    theta = lim.min(theta);
                    leave = Some((i, at_upper));
                }
            }

            match leave {
                None => {
                    if theta.is_infinite() {
                        return Ok(LoopOutcome::Unbounded);
                    }
                    // Bound flip: the entering variable travels to its upper
                    // bound without a basis change.
                    self.flip(c, obj, carry.as_deref_mut());
                    self.pivots += 1;
                    degen_run = 0;
                }
                Some((r, at_upper)) => {
                    if at_upper {
                        self.complement_basic(r);
                    }
                    self.pivot(r, c, obj, carry.as_deref_mut());
                    self.pivots += 1;
                    if theta <= DEGENERATE_STEP {
                        degen_run += 1;
                    } else {
                        degen_run = 0;
                    }
                }
            }
        }
    }

    /// Complements nonbasic column `c` (x -> u - x), moving it from its
    /// lower to its upper bound.
    fn flip(&mut self, c: usize, obj: &mut [f64], carry: Option<&mut Vec<f64>>) {
        let u = self.upper[c];
        let m = self.tab.nrows();
        for i in 0..m {
            let a = self.tab[(i, c)];
            if a != 0.0 {
                self.tab[(i, self.rhs_col)] -= a * u;
                self.tab[(i, c)] = -a;
            }
        }
        let d = obj[c];
        obj[self.rhs_col] -= d * u;
        obj[c] = -d;
        if let Some(co) = carry {
            let d2 = co[c];
            co[self.rhs_col] -= d2 * u;
            co[c] = -d2;
        }
        self.complemented[c] = !self.complemented[c];
    }

    /// Complements the basic variable of row `r` so it can leave the basis
    /// at its upper bound: negate the row (the unit coefficient now belongs
    /// to the complement) and reflect the rhs to `u - rhs`.
    fn complement_basic(&mut self, r: usize) {
        let b = self.basis[r];
        let u = self.upper[b];
        let rc = self.rhs_col;
        let mut row = self.tab.row_mut(r);
        for (j, v) in row.iter_mut().enumerate() {
            if j == b {
                continue;
            }
            *v = -*v;
        }
        row[rc] += u;
        self.complemented[b] = !self.complemented[b];
    }

    fn pivot(&mut self, r: usize, c: usize, obj: &mut [f64], carry: Option<&mut Vec<f64>>) {
        let width = self.rhs_col + 1;
        let piv = self.tab[(r, c)];
        debug_assert!(piv.abs() > 1e-12, "pivot element too small");
        let inv = 1.0 / piv;
        {
            let mut row = self.tab.row_mut(r);
            let row = row.as_slice_mut().expect("row-major layout");
            for v in row.iter_mut() {
                *v *= inv;
            }
            row[c] = 1.0;
        }
        let pivot_row: Vec<f64> = self.tab.row(r).to_vec();
        let m = self.tab.nrows();
        for i in 0..m {
            if i == r {
                continue;
            }
            let f = self.tab[(i, c)];
            if f != 0.0 {
                let mut row = self.tab.row_mut(i);
                let row = row.as_slice_mut().expect("row-major layout");
                for (v, &pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        let f = obj[c];
        if f != 0.0 {
            for j in 0..width {
                obj[j] -= f * pivot_row[j];
            }
            obj[c] = 0.0;
        }
        if let Some(co) = carry {
            let f = co[c];
            if f != 0.0 {
                for j in 0..width {
                    co[j] -= f * pivot_row[j];
                }
                co[c] = 0.0;
            }
        }
        self.basis[r] = c;
    }
}
