//! Self-contained mixed-integer linear programming: a dense bounded-variable
//! primal simplex for LP relaxations and best-bound branch-and-bound over
//! binary variables.
//!
//! The solver exists so the expansion model needs no external dependencies;
//! it is sized for desk-scale problems (hundreds of rows and columns, tens of
//! binaries). Dense algebra, no cutting planes, no presolve, no general
//! integers. Maximization is handled by negating the objective at the
//! interface; everything inside minimizes.

mod branch;
mod export;
mod simplex;

pub use export::write_lp_format;

use serde::Serialize;
use thiserror::Error;

/// Objective sense. Internally everything is minimized; a maximization
/// problem is negated on the way in and its objective negated back on the
/// way out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Row relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

/// One linear constraint: sparse coefficients, relation, right-hand side.
/// Duplicate variable indices are summed when the row is used.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
    /// Optional label carried through to diagnostics and LP-format export.
    pub name: Option<String>,
}

/// Errors from constructing or solving programs.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MilpError {
    #[error("invalid program: {0}")]
    InvalidProgram(String),
    #[error("numerical breakdown: {0}")]
    Numeric(String),
}

/// A linear program over `n_vars` continuous variables.
///
/// Default bounds are `[0, +inf)`. Infinite bounds are expressed with
/// `f64::INFINITY` / `f64::NEG_INFINITY`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearProgram {
    n_vars: usize,
    sense: Sense,
    objective: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rows: Vec<Row>,
}

impl LinearProgram {
    pub fn new(n_vars: usize, sense: Sense) -> Self {
        Self {
            n_vars,
            sense,
            objective: vec![0.0; n_vars],
            lower: vec![0.0; n_vars],
            upper: vec![f64::INFINITY; n_vars],
            rows: Vec::new(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }
    pub fn sense(&self) -> Sense {
        self.sense
    }
    pub fn objective(&self) -> &[f64] {
        &self.objective
    }
    pub fn lower(&self) -> &[f64] {
        &self.lower
    }
    pub fn upper(&self) -> &[f64] {
        &self.upper
    }
    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    fn check_var(&self, var: usize) -> Result<(), MilpError> {
        if var >= self.n_vars {
            return Err(MilpError::InvalidProgram(format!(
                "variable index {var} out of range (n_vars = {})",
                self.n_vars
            )));
        }
        Ok(())
    }

    pub fn set_objective(&mut self, var: usize, coef: f64) -> Result<(), MilpError> {
        self.check_var(var)?;
        if !coef.is_finite() {
            return Err(MilpError::InvalidProgram(format!(
                "objective coefficient for variable {var} must be finite, got {coef}"
            )));
        }
        self.objective[var] = coef;
        Ok(())
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) -> Result<(), MilpError> {
        self.check_var(var)?;
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(MilpError::InvalidProgram(format!(
                "variable {var}: bounds [{lower}, {upper}] are invalid"
            )));
        }
        if lower == f64::INFINITY || upper == f64::NEG_INFINITY {
            return Err(MilpError::InvalidProgram(format!(
                "variable {var}: bounds [{lower}, {upper}] leave no feasible value"
            )));
        }
        self.lower[var] = lower;
        self.upper[var] = upper;
        Ok(())
    }

    /// Appends a fresh variable with the given bounds and objective
    /// coefficient; returns its index.
    pub fn add_var(&mut self, lower: f64, upper: f64, objective: f64) -> Result<usize, MilpError> {
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(MilpError::InvalidProgram(format!(
                "variable {}: bounds [{lower}, {upper}] are invalid",
                self.n_vars
            )));
        }
        if lower == f64::INFINITY || upper == f64::NEG_INFINITY {
            return Err(MilpError::InvalidProgram(format!(
                "variable {}: bounds [{lower}, {upper}] leave no feasible value",
                self.n_vars
            )));
        }
        if !objective.is_finite() {
            return Err(MilpError::InvalidProgram(format!(
                "objective coefficient for variable {} must be finite, got {objective}",
                self.n_vars
            )));
        }
        self.n_vars += 1;
        self.objective.push(objective);
        self.lower.push(lower);
        self.upper.push(upper);
        Ok(self.n_vars - 1)
    }

    /// Adds a constraint row; returns its index.
    pub fn add_row(
        &mut self,
        coeffs: Vec<(usize, f64)>,
        relation: Relation,
        rhs: f64,
    ) -> Result<usize, MilpError> {
        self.add_named_row(coeffs, relation, rhs, None)
    }

    pub fn add_named_row(
        &mut self,
        coeffs: Vec<(usize, f64)>,
        relation: Relation,
        rhs: f64,
        name: Option<String>,
    ) -> Result<usize, MilpError> {
        for &(var, coef) in &coeffs {
            self.check_var(var)?;
            if !coef.is_finite() {
                return Err(MilpError::InvalidProgram(format!(
                    "row {}: coefficient on variable {var} must be finite, got {coef}",
                    self.rows.len()
                )));
            }
        }
        if !rhs.is_finite() {
            return Err(MilpError::InvalidProgram(format!(
                "row {}: right-hand side must be finite, got {rhs}",
                self.rows.len()
            )));
        }
        self.rows.push(Row {
            coeffs,
            relation,
            rhs,
            name,
        });
        Ok(self.rows.len() - 1)
    }
}

/// A MILP: a linear program plus a set of variables restricted to {0, 1}.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MilpProblem {
    pub lp: LinearProgram,
    binary_vars: Vec<usize>,
}

impl MilpProblem {
    /// Marks `binary_vars` as binary, tightening their bounds into [0, 1].
    /// Bounds already tighter than [0, 1] (for example a fixed binary) are
    /// kept.
    pub fn new(lp: LinearProgram, binary_vars: Vec<usize>) -> Result<Self, MilpError> {
        let mut sorted = binary_vars;
        sorted.sort_unstable();
        sorted.dedup();
        let mut lp = lp;
        for &v in &sorted {
            if v >= lp.n_vars() {
                return Err(MilpError::InvalidProgram(format!(
                    "binary variable index {v} out of range"
                )));
            }
            let lo = lp.lower[v].max(0.0);
            let hi = lp.upper[v].min(1.0);
            lp.set_bounds(v, lo, hi)?;
        }
        Ok(Self {
            lp,
            binary_vars: sorted,
        })
    }

    pub fn binary_vars(&self) -> &[usize] {
        &self.binary_vars
    }

    pub fn lp(&self) -> &LinearProgram {
        &self.lp
    }

    /// Decomposes the problem for callers that extend the program (extra
    /// rows, variables, or binaries) before re-wrapping it.
    pub fn into_parts(self) -> (LinearProgram, Vec<usize>) {
        (self.lp, self.binary_vars)
    }
}

/// Outcome classification of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NodeLimit,
}

/// Solution report for both LP and MILP solves.
///
/// `values` and `objective` are present for `Optimal` and for `NodeLimit`
/// when an incumbent exists; `objective` is stated in the problem's own
/// sense. `gap` is the relative MIP gap (0 for proven optima, infinite when
/// no incumbent exists). `nodes` counts LP relaxations solved (0 for a plain
/// LP solve).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MilpSolution {
    pub status: SolveStatus,
    pub values: Vec<f64>,
    pub objective: Option<f64>,
    pub gap: f64,
    pub nodes: usize,
}

/// Tolerances and limits for [`solve_milp`] (and the LP feasibility check).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MilpOptions {
    /// Row feasibility tolerance, relative to each row's activity scale.
    pub feas_tol: f64,
    /// Integrality tolerance on binary variables.
    pub int_tol: f64,
    /// Relative optimality gap at which search stops.
    pub gap_tol: f64,
    /// Maximum number of LP relaxations before giving up.
    pub node_limit: usize,
}

impl Default for MilpOptions {
    fn default() -> Self {
        Self {
            feas_tol: 1e-7,
            int_tol: 1e-6,
            gap_tol: 1e-6,
            node_limit: 200_000,
        }
    }
}

/// Solves a linear program with the default feasibility tolerance.
pub fn solve_lp(lp: &LinearProgram) -> Result<MilpSolution, MilpError> {
    solve_lp_tol(lp, MilpOptions::default().feas_tol)
}

/// Solves a linear program via two-phase bounded-variable primal simplex.
pub fn solve_lp_tol(lp: &LinearProgram, feas_tol: f64) -> Result<MilpSolution, MilpError> {
    if !(feas_tol > 0.0 && feas_tol.is_finite()) {
        return Err(MilpError::InvalidProgram(format!(
            "feasibility tolerance must be positive and finite, got {feas_tol}"
        )));
    }
    simplex::solve(lp, feas_tol)
}

/// Solves a mixed-binary program by branch-and-bound. See [`MilpOptions`]
/// for tolerances; determinism is guaranteed for identical inputs.
pub fn solve_milp(problem: &MilpProblem, options: &MilpOptions) -> Result<MilpSolution, MilpError> {
    branch::solve(problem, options)
}
