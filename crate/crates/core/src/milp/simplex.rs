//! Dense two-phase primal simplex over bounded variables.
//!
//! Canonical form: minimize `c·x` subject to `A x = b` with every column
//! bounded as `[0, u]`, `u` possibly infinite and `u = 0` marking a fixed
//! column. Original bounds are absorbed by shifting finite-lower variables,
//! mirroring upper-only variables, and splitting free variables into two
//! nonnegative parts; each row gains one slack column (fixed at zero for
//! equalities). Rows and columns are equilibrated by powers of two so that
//! pivot and feasibility tolerances act on comparable magnitudes. Phase 1
//! minimizes the sum of one artificial per row, after which artificials are
//! locked at zero; phase 2 minimizes the true objective. Steps use a
//! Harris-style two-pass ratio test that prefers large pivots within a
//! bound-relaxation budget, keeping the product-form basis inverse from
//! degrading between refactorizations. The objective reported back is
//! recomputed from the original program, so scaling and shifting cannot
//! leak into results.

use super::{LinearProgram, MilpError, MilpSolution, Relation, Sense, SolveStatus};

/// Below this magnitude a pivot (or factorization pivot) is numerical
/// breakdown; smaller ratio-test entries do not block.
const PIVOT_MIN: f64 = 1e-11;
/// Base tolerance on reduced costs (scaled by the cost norm).
const REDUCED_TOL: f64 = 1e-9;
/// Consecutive degenerate pivots before Bland's rule engages.
const DEGEN_TRIGGER: usize = 100;
/// Pivots between basis refactorizations.
const REFACTOR_EVERY: usize = 30;

/// How a canonical column maps back onto an original variable.
#[derive(Clone, Copy)]
enum Mapping {
    /// `x_orig = lower + v`.
    Shifted { var: usize, lower: f64 },
    /// `x_orig = upper - v`.
    Mirrored { var: usize, upper: f64 },
    /// Free variable, positive part: `x_orig += v`.
    SplitPos { var: usize },
    /// Free variable, negative part: `x_orig -= v`.
    SplitNeg { var: usize },
    /// Row slack; no original variable.
    Slack,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum State {
    AtLower,
    AtUpper,
    Basic,
}

enum LoopExit {
    Optimal,
    Unbounded,
}

struct Simplex {
    m: usize,
    /// Structural + slack columns; artificials occupy `ncols..total`.
    ncols: usize,
    total: usize,
    /// Dense row-major `m x total` matrix.
    a: Vec<f64>,
    b: Vec<f64>,
    upper: Vec<f64>,
    /// Phase-dependent cost vector.
    cost: Vec<f64>,
    real_cost: Vec<f64>,
    state: Vec<State>,
    basis: Vec<usize>,
    /// Dense row-major `m x m` basis inverse.
    binv: Vec<f64>,
    xb: Vec<f64>,
    pivots_since_refactor: usize,
    mappings: Vec<Mapping>,
    col_scale: Vec<f64>,
}

pub(super) fn solve(lp: &LinearProgram, feas_tol: f64) -> Result<MilpSolution, MilpError> {
    let mut s = Simplex::build(lp)?;
    if !s.phase_one(feas_tol)? {
        return Ok(MilpSolution {
            status: SolveStatus::Infeasible,
            values: Vec::new(),
            objective: None,
            gap: f64::INFINITY,
            nodes: 0,
        });
    }
    match s.phase_two()? {
        LoopExit::Unbounded => Ok(MilpSolution {
            status: SolveStatus::Unbounded,
            values: Vec::new(),
            objective: None,
            gap: f64::INFINITY,
            nodes: 0,
        }),
        LoopExit::Optimal => s.extract(lp, feas_tol),
    }
}

impl Simplex {
    fn build(lp: &LinearProgram) -> Result<Self, MilpError> {
        let m = lp.rows().len();

        // Canonical structural columns. Each original variable produces one
        // or two columns with bounds [0, u].
        let mut mappings: Vec<Mapping> = Vec::new();
        let mut col_obj: Vec<f64> = Vec::new();
        let mut col_upper: Vec<f64> = Vec::new();
        // Per original variable: (first column, negate coefficient, extra
        // split column).
        let mut var_cols: Vec<(usize, bool, Option<usize>)> = Vec::with_capacity(lp.n_vars());
        let sense_factor = match lp.sense() {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        for v in 0..lp.n_vars() {
            let (lo, hi) = (lp.lower()[v], lp.upper()[v]);
            let c = sense_factor * lp.objective()[v];
            if lo.is_finite() {
                var_cols.push((mappings.len(), false, None));
                mappings.push(Mapping::Shifted { var: v, lower: lo });
                col_obj.push(c);
                col_upper.push(hi - lo);
            } else if hi.is_finite() {
                var_cols.push((mappings.len(), true, None));
                mappings.push(Mapping::Mirrored { var: v, upper: hi });
                col_obj.push(-c);
                col_upper.push(f64::INFINITY);
            } else {
                let pos = mappings.len();
                var_cols.push((pos, false, Some(pos + 1)));
                mappings.push(Mapping::SplitPos { var: v });
                mappings.push(Mapping::SplitNeg { var: v });
                col_obj.push(c);
                col_obj.push(-c);
                col_upper.push(f64::INFINITY);
                col_upper.push(f64::INFINITY);
            }
        }
        let n_struct = mappings.len();
        let ncols = n_struct + m;
        let total = ncols + m;
        mappings.extend(std::iter::repeat(Mapping::Slack).take(m));

        let mut a = vec![0.0; m * total];
        let mut b = vec![0.0; m];
        let mut upper = col_upper;
        upper.resize(ncols, f64::INFINITY);
        let mut real_cost = col_obj;
        real_cost.resize(total, 0.0);

        for (i, row) in lp.rows().iter().enumerate() {
            let mut rhs = row.rhs;
            for &(v, coef) in &row.coeffs {
                let (col, negate, split) = var_cols[v];
                let eff = if negate { -coef } else { coef };
                a[i * total + col] += eff;
                if let Some(neg_col) = split {
                    a[i * total + neg_col] -= coef;
                }
                match mappings[col] {
                    Mapping::Shifted { lower, .. } => rhs -= coef * lower,
                    Mapping::Mirrored { upper: u, .. } => rhs -= coef * u,
                    _ => {}
                }
            }
            b[i] = rhs;
            let slack = n_struct + i;
            match row.relation {
                Relation::Le => a[i * total + slack] = 1.0,
                Relation::Ge => a[i * total + slack] = -1.0,
                Relation::Eq => {
                    a[i * total + slack] = 1.0;
                    upper[slack] = 0.0;
                }
            }
        }

        // Power-of-two equilibration over structural and slack columns.
        let mut col_scale = vec![1.0; ncols];
        for _pass in 0..2 {
            for i in 0..m {
                let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
                for j in 0..ncols {
                    let v = a[i * total + j].abs();
                    if v > 0.0 {
                        lo = lo.min(v);
                        hi = hi.max(v);
                    }
                }
                if hi > 0.0 {
                    let s = pow2_toward_one((lo * hi).sqrt());
                    if s != 1.0 {
                        for j in 0..ncols {
                            a[i * total + j] *= s;
                        }
                        b[i] *= s;
                    }
                }
            }
            for j in 0..ncols {
                let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
                for i in 0..m {
                    let v = a[i * total + j].abs();
                    if v > 0.0 {
                        lo = lo.min(v);
                        hi = hi.max(v);
                    }
                }
                if hi > 0.0 {
                    let s = pow2_toward_one((lo * hi).sqrt());
                    if s != 1.0 {
                        for i in 0..m {
                            a[i * total + j] *= s;
                        }
                        col_scale[j] *= s;
                        upper[j] /= s;
                        real_cost[j] *= s;
                    }
                }
            }
        }

        // Artificial columns: one per row, signed so the initial basic value
        // |b_i| is nonnegative.
        let mut basis = Vec::with_capacity(m);
        let mut binv = vec![0.0; m * m];
        let mut xb = Vec::with_capacity(m);
        let mut upper_full = upper;
        upper_full.resize(total, f64::INFINITY);
        for i in 0..m {
            let sign = if b[i] >= 0.0 { 1.0 } else { -1.0 };
            a[i * total + ncols + i] = sign;
            binv[i * m + i] = sign;
            basis.push(ncols + i);
            xb.push(b[i].abs());
        }
        let mut state = vec![State::AtLower; total];
        for &j in &basis {
            state[j] = State::Basic;
        }

        Ok(Self {
            m,
            ncols,
            total,
            a,
            b,
            upper: upper_full,
            cost: vec![0.0; total],
            real_cost,
            state,
            basis,
            binv,
            xb,
            pivots_since_refactor: 0,
            mappings,
            col_scale,
        })
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.state[j] {
            State::AtUpper => self.upper[j],
            _ => 0.0,
        }
    }

    /// Runs phase 1; returns false when the program is infeasible.
    fn phase_one(&mut self, feas_tol: f64) -> Result<bool, MilpError> {
        for j in self.ncols..self.total {
            self.cost[j] = 1.0;
        }
        match self.optimize()? {
            LoopExit::Unbounded => {
                return Err(MilpError::Numeric(
                    "phase-1 objective reported unbounded".into(),
                ))
            }
            LoopExit::Optimal => {}
        }
        // Accept only when every remaining artificial is at tolerance level.
        // Equilibration keeps row coefficients near unit magnitude, so a
        // scaled artificial value reads as a relative row violation; judging
        // rows individually keeps the acceptance consistent with the row
        // check applied to the final solution, where a single bad row fails
        // regardless of how small the total is.
        let worst = (0..self.m)
            .filter(|&i| self.basis[i] >= self.ncols)
            .fold(0.0f64, |acc, i| acc.max(self.xb[i].abs()));
        if worst > feas_tol {
            return Ok(false);
        }
        // Lock every artificial at zero for phase 2. Basic artificials stay
        // in the basis carrying their tolerance-level residuals: forcing
        // them out would either teleport the residual (entering a column at
        // its bound breaks the basic-solution identity) or amplify it by
        // the reciprocal of the chosen pivot (moving by the exact ratio
        // with no blocking test). Locked at zero they can never re-enter,
        // ordinary ratio tests price them out where possible, and the row
        // residual they carry stays within the phase-1 acceptance bound.
        for j in self.ncols..self.total {
            self.upper[j] = 0.0;
        }
        Ok(true)
    }

    fn phase_two(&mut self) -> Result<LoopExit, MilpError> {
        self.cost.copy_from_slice(&self.real_cost);
        self.optimize()
    }

    /// Core bounded-variable simplex loop for the current cost vector.
    fn optimize(&mut self) -> Result<LoopExit, MilpError> {
        let cost_norm = self.cost.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let d_tol = REDUCED_TOL * (1.0 + cost_norm);
        let max_iter = 10_000 + 200 * (self.m + self.total);
        let mut degenerate_streak = 0usize;
        let mut bland = false;

        for _iter in 0..max_iter {
            // Reduced costs via y = c_B B^-1.
            let mut y = vec![0.0; self.m];
            for i in 0..self.m {
                let cb = self.cost[self.basis[i]];
                if cb != 0.0 {
                    for k in 0..self.m {
                        y[k] += cb * self.binv[i * self.m + k];
                    }
                }
            }
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..self.total {
                if self.state[j] == State::Basic || self.upper[j] == 0.0 {
                    continue;
                }
                let mut d = self.cost[j];
                for k in 0..self.m {
                    d -= y[k] * self.a[k * self.total + j];
                }
                let violation = match self.state[j] {
                    State::AtLower => -d,
                    State::AtUpper => d,
                    State::Basic => unreachable!(),
                };
                if violation > d_tol {
                    if bland {
                        entering = Some((j, violation));
                        break;
                    }
                    match entering {
                        Some((_, best)) if violation <= best => {}
                        _ => entering = Some((j, violation)),
                    }
                }
            }
            let Some((e, _)) = entering else {
                return Ok(LoopExit::Optimal);
            };
            let dir = match self.state[e] {
                State::AtLower => 1.0,
                State::AtUpper => -1.0,
                State::Basic => unreachable!(),
            };

            // Ratio test: the entering variable moves until it hits its own
            // opposite bound or a basic variable hits one of its bounds.
            let w = self.ftran(e);
            let (t_best, leaving) = self.ratio_test(self.upper[e], dir, &w, bland);

            if !t_best.is_finite() {
                return Ok(LoopExit::Unbounded);
            }
            let xb_norm = self.xb.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            let degenerate = t_best <= 1e-12 * (1.0 + xb_norm);
            if degenerate {
                degenerate_streak += 1;
                if degenerate_streak >= DEGEN_TRIGGER {
                    bland = true;
                }
            } else {
                degenerate_streak = 0;
                bland = false;
            }

            match leaving {
                None => {
                    // Bound flip: the entering variable crosses to its other
                    // bound without a basis change.
                    for i in 0..self.m {
                        self.xb[i] -= dir * t_best * w[i];
                    }
                    self.state[e] = match self.state[e] {
                        State::AtLower => State::AtUpper,
                        State::AtUpper => State::AtLower,
                        State::Basic => unreachable!(),
                    };
                }
                Some((r, to_lower, _)) => {
                    let entering_value = self.nonbasic_value(e) + dir * t_best;
                    for i in 0..self.m {
                        if i != r {
                            self.xb[i] -= dir * t_best * w[i];
                        }
                    }
                    let leaving_col = self.basis[r];
                    self.state[leaving_col] = if to_lower {
                        State::AtLower
                    } else {
                        State::AtUpper
                    };
                    self.apply_pivot(e, r, &w, entering_value)?;
                }
            }
        }
        Err(MilpError::Numeric(format!(
            "simplex iteration limit reached ({max_iter} iterations)"
        )))
    }

    /// Exact blocking step for row `i`, or `None` when the entry cannot
    /// block (too small, or the row's bound is infinite on the far side).
    fn exact_ratio(&self, i: usize, d: f64) -> Option<(f64, bool)> {
        if d > PIVOT_MIN {
            Some(((self.xb[i] / d).max(0.0), true))
        } else if d < -PIVOT_MIN {
            let ub = self.upper[self.basis[i]];
            ub.is_finite()
                .then(|| (((ub - self.xb[i]) / -d).max(0.0), false))
        } else {
            None
        }
    }

    /// Harris-style two-pass ratio test along tableau column `w` in
    /// direction `dir`, capped at `t_cap` (the entering variable's own bound
    /// range). Pass 1 finds the smallest step against tolerance-relaxed
    /// bounds; pass 2 picks the largest-magnitude pivot whose exact step
    /// fits under it, trading at most the relaxation in feasibility for a
    /// well-conditioned basis update. Every entry above the pivot floor
    /// blocks, so a long step can never drag a basic variable far past its
    /// bound. Under Bland's rule the test degrades to the exact textbook
    /// form, smallest basis index first, which restores the anti-cycling
    /// guarantee. Returns the step and the leaving row as (row, leaves at
    /// lower bound, |pivot|); `None` means a bound flip at the cap.
    fn ratio_test(
        &self,
        t_cap: f64,
        dir: f64,
        w: &[f64],
        bland: bool,
    ) -> (f64, Option<(usize, bool, f64)>) {
        if bland {
            let mut t_best = t_cap;
            let mut leaving: Option<(usize, bool, f64)> = None;
            for i in 0..self.m {
                let Some((t, to_lower)) = self.exact_ratio(i, dir * w[i]) else {
                    continue;
                };
                let tie = (t - t_best).abs() <= 1e-9 * (1.0 + t_best.abs());
                let better = match leaving {
                    _ if !tie => t < t_best,
                    None => true,
                    Some((r_prev, _, _)) => self.basis[i] < self.basis[r_prev],
                };
                if better {
                    t_best = t.min(t_best);
                    leaving = Some((i, to_lower, w[i].abs()));
                }
            }
            return (t_best, leaving);
        }

        let mut t_relaxed = t_cap;
        for i in 0..self.m {
            let d = dir * w[i];
            let budget = 1e-8 * (1.0 + self.xb[i].abs());
            if d > PIVOT_MIN {
                t_relaxed = t_relaxed.min(((self.xb[i] + budget) / d).max(0.0));
            } else if d < -PIVOT_MIN {
                let ub = self.upper[self.basis[i]];
                if ub.is_finite() {
                    t_relaxed = t_relaxed.min(((ub - self.xb[i] + budget) / -d).max(0.0));
                }
            }
        }
        let mut leaving: Option<(usize, bool, f64)> = None;
        let mut t_best = t_relaxed;
        for i in 0..self.m {
            let Some((t, to_lower)) = self.exact_ratio(i, dir * w[i]) else {
                continue;
            };
            if t <= t_relaxed {
                let better = match leaving {
                    None => true,
                    Some((r_prev, _, w_prev)) => {
                        w[i].abs() > w_prev
                            || (w[i].abs() == w_prev && self.basis[i] < self.basis[r_prev])
                    }
                };
                if better {
                    t_best = t;
                    leaving = Some((i, to_lower, w[i].abs()));
                }
            }
        }
        (t_best, leaving)
    }

    /// `B^-1 * column(j)`.
    fn ftran(&self, j: usize) -> Vec<f64> {
        let mut w = vec![0.0; self.m];
        for i in 0..self.m {
            let mut acc = 0.0;
            for k in 0..self.m {
                acc += self.binv[i * self.m + k] * self.a[k * self.total + j];
            }
            w[i] = acc;
        }
        w
    }

    /// Replaces basis row `r` with column `e` (its tableau column `w` given)
    /// and sets the entering variable's basic value.
    fn apply_pivot(
        &mut self,
        e: usize,
        r: usize,
        w: &[f64],
        entering_value: f64,
    ) -> Result<(), MilpError> {
        let piv = w[r];
        if piv.abs() < PIVOT_MIN {
            return Err(MilpError::Numeric(format!(
                "pivot magnitude {:.3e} below breakdown threshold",
                piv.abs()
            )));
        }
        let inv = 1.0 / piv;
        for k in 0..self.m {
            self.binv[r * self.m + k] *= inv;
        }
        for i in 0..self.m {
            if i != r {
                let f = w[i];
                if f != 0.0 {
                    for k in 0..self.m {
                        self.binv[i * self.m + k] -= f * self.binv[r * self.m + k];
                    }
                }
            }
        }
        self.basis[r] = e;
        self.state[e] = State::Basic;
        self.xb[r] = entering_value;
        self.pivots_since_refactor += 1;
        if self.pivots_since_refactor >= REFACTOR_EVERY {
            self.refactor()?;
        }
        Ok(())
    }

    /// Rebuilds the basis inverse by Gauss-Jordan elimination and recomputes
    /// basic values from the bound assignment.
    fn refactor(&mut self) -> Result<(), MilpError> {
        let m = self.m;
        self.pivots_since_refactor = 0;
        if m == 0 {
            return Ok(());
        }
        // Augmented [B | I].
        let mut aug = vec![0.0; m * 2 * m];
        for i in 0..m {
            for (r, row) in (0..m).map(|r| (r, r * 2 * m)) {
                aug[row + i] = self.a[r * self.total + self.basis[i]];
            }
            aug[i * 2 * m + m + i] = 1.0;
        }
        for col in 0..m {
            let mut piv_row = col;
            let mut piv_val = aug[col * 2 * m + col].abs();
            for r in col + 1..m {
                let v = aug[r * 2 * m + col].abs();
                if v > piv_val {
                    piv_val = v;
                    piv_row = r;
                }
            }
            if piv_val < PIVOT_MIN {
                return Err(MilpError::Numeric(
                    "singular basis during refactorization".into(),
                ));
            }
            if piv_row != col {
                for k in 0..2 * m {
                    aug.swap(col * 2 * m + k, piv_row * 2 * m + k);
                }
            }
            let inv = 1.0 / aug[col * 2 * m + col];
            for k in 0..2 * m {
                aug[col * 2 * m + k] *= inv;
            }
            for r in 0..m {
                if r != col {
                    let f = aug[r * 2 * m + col];
                    if f != 0.0 {
                        for k in 0..2 * m {
                            aug[r * 2 * m + k] -= f * aug[col * 2 * m + k];
                        }
                    }
                }
            }
        }
        for r in 0..m {
            for k in 0..m {
                self.binv[r * m + k] = aug[r * 2 * m + m + k];
            }
        }
        // xb = B^-1 (b - sum over nonbasic columns at nonzero bound).
        let mut rhs = self.b.clone();
        for j in 0..self.total {
            if self.state[j] != State::Basic {
                let v = self.nonbasic_value(j);
                if v != 0.0 {
                    for i in 0..m {
                        let aij = self.a[i * self.total + j];
                        if aij != 0.0 {
                            rhs[i] -= aij * v;
                        }
                    }
                }
            }
        }
        for i in 0..m {
            let mut acc = 0.0;
            for k in 0..m {
                acc += self.binv[i * m + k] * rhs[k];
            }
            self.xb[i] = acc;
        }
        Ok(())
    }

    /// Maps the canonical solution back to original variables, enforces
    /// bound and row tolerances, and computes the objective from the
    /// original program.
    fn extract(&mut self, lp: &LinearProgram, feas_tol: f64) -> Result<MilpSolution, MilpError> {
        self.refactor()?;
        let mut values = vec![0.0; lp.n_vars()];
        let mut row_of: Vec<Option<usize>> = vec![None; self.total];
        for (r, &j) in self.basis.iter().enumerate() {
            row_of[j] = Some(r);
        }
        for j in 0..self.ncols {
            let raw = match row_of[j] {
                Some(r) => self.xb[r],
                None => self.nonbasic_value(j),
            };
            let v = raw * self.col_scale[j];
            match self.mappings[j] {
                Mapping::Shifted { var, lower } => values[var] = lower + v,
                Mapping::Mirrored { var, upper } => values[var] = upper - v,
                Mapping::SplitPos { var } => values[var] += v,
                Mapping::SplitNeg { var } => values[var] -= v,
                Mapping::Slack => {}
            }
        }
        // Snap values onto their bounds; drift beyond tolerance is a
        // numerical failure, not a rounding matter.
        for v in 0..lp.n_vars() {
            let (lo, hi) = (lp.lower()[v], lp.upper()[v]);
            let tol_lo = feas_tol * (1.0 + lo.abs());
            let tol_hi = feas_tol * (1.0 + hi.abs());
            if values[v] < lo - tol_lo || values[v] > hi + tol_hi {
                return Err(MilpError::Numeric(format!(
                    "variable {v} = {} escaped bounds [{lo}, {hi}]",
                    values[v]
                )));
            }
            values[v] = values[v].clamp(lo, hi);
        }
        for (i, row) in lp.rows().iter().enumerate() {
            let mut activity = 0.0;
            let mut scale = 1.0 + row.rhs.abs();
            for &(var, coef) in &row.coeffs {
                let term = coef * values[var];
                activity += term;
                scale += term.abs();
            }
            let violation = match row.relation {
                Relation::Le => activity - row.rhs,
                Relation::Ge => row.rhs - activity,
                Relation::Eq => (activity - row.rhs).abs(),
            };
            if violation > feas_tol * scale {
                return Err(MilpError::Numeric(format!(
                    "row {i} violated by {violation:.3e} (activity {activity}, rhs {})",
                    row.rhs
                )));
            }
        }
        let objective: f64 = lp.objective().iter().zip(&values).map(|(c, x)| c * x).sum();
        Ok(MilpSolution {
            status: SolveStatus::Optimal,
            values,
            objective: Some(objective),
            gap: 0.0,
            nodes: 0,
        })
    }
}

/// Nearest power of two to `1/g`, clamped to a sane exponent range.
fn pow2_toward_one(g: f64) -> f64 {
    if !(g.is_finite() && g > 0.0) {
        return 1.0;
    }
    let k = (-g.log2()).round().clamp(-60.0, 60.0) as i32;
    2.0f64.powi(k)
}
