//! Multi-period, multi-technology capacity-expansion planning with
//! endogenous learning.
//!
//! Investment expenditure is expressed through the cumulative cost curve:
//! paying for a build that moves a technology from experience `a` to `b`
//! costs `F(b) - F(a)`, which a piecewise-linear approximation of `F` turns
//! into a mixed-binary program — unit cost times build would be bilinear.
//! Exogenous world additions shift a technology's position on its curve at
//! the start of each period without incurring local expenditure; they are
//! applied to the experience variable rather than to the learning rate, a
//! deliberate choice between the two readings of global-capacity
//! adjustment. The exogenous baseline mode prices builds with a fixed
//! per-period cost path instead and needs no binaries.
//!
//! Capacity is perpetual (no retirement), each period has a single demand
//! block, and an availability factor caps energy per unit of capacity.
//! Solved plans are recosted with the exact curves so the approximation
//! bias of the piecewise objective stays visible.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Serialize;
use thiserror::Error;

use crate::curves::{CurveError, LearningSpec, OneFactorSpec, PartialSpec};
use crate::milp::{
    solve_milp, LinearProgram, MilpError, MilpOptions, MilpProblem, Relation, Sense, SolveStatus,
};
use crate::pwl::{build_breakpoints, eval_pwl, PwlApprox, PwlError, PwlPolicy};

/// Builds below this (MW) count as "no build" when reporting first-build
/// periods.
const BUILD_EPS: f64 = 1e-6;

/// Errors from scenario validation, model building, and solving.
#[derive(Debug, Error)]
pub enum ExpansionError {
    #[error("invalid scenario: {0}")]
    Config(String),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Pwl(#[from] PwlError),
    #[error(transparent)]
    Milp(#[from] MilpError),
    #[error("scenario infeasible at period {period}: {detail}")]
    Infeasible { period: usize, detail: String },
    #[error("search stopped after {nodes} nodes without any feasible plan")]
    Incomplete { nodes: usize },
    #[error("objective reported unbounded; the scenario is ill-posed")]
    Unbounded,
}

/// Whether technology cost declines with modeled experience or follows a
/// fixed exogenous path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Endogenous,
    Exogenous,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "endogenous" => Ok(Mode::Endogenous),
            "exogenous" => Ok(Mode::Exogenous),
            other => Err(format!(
                "unknown mode {other:?}; expected \"endogenous\" or \"exogenous\""
            )),
        }
    }
}

/// One investable technology.
#[derive(Debug, Clone, Serialize)]
pub struct TechnologySpec {
    pub name: String,
    pub learning: LearningSpec,
    /// Initial local cumulative capacity (MW); must sit at or beyond the
    /// learning curve's reference experience.
    pub x0_local: f64,
    /// Exogenous world capacity added at the start of each period (MW).
    /// Empty means zero throughout.
    pub world_additions: Vec<f64>,
    /// Variable generation cost (currency/MWh).
    pub var_cost: f64,
    /// Emissions per unit of generation (tCO2/MWh).
    pub emission_factor: f64,
    /// Capacity factor in (0, 1].
    pub availability: f64,
    /// Implementation-speed cap: maximum build per period (MW).
    pub max_build: f64,
    /// Per-period unit investment cost (currency/MW) used in exogenous mode.
    pub exo_cost_path: Option<Vec<f64>>,
}

/// A complete scenario: technologies plus system-level data.
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioConfig {
    pub technologies: Vec<TechnologySpec>,
    pub periods: usize,
    pub hours_per_period: f64,
    /// Energy demand per period (MWh).
    pub demand: Vec<f64>,
    /// Emission cap per period (tCO2); infinity disables the cap.
    pub emission_cap: Vec<f64>,
    /// Per-period discount fraction (> -1).
    pub discount_rate: f64,
    pub mode: Mode,
    pub pwl_policy: PwlPolicy,
}

impl TechnologySpec {
    fn validate(&self, periods: usize) -> Result<(), ExpansionError> {
        let name = &self.name;
        if name.trim().is_empty() {
            return Err(ExpansionError::Config(
                "technology name must be non-empty".into(),
            ));
        }
        if !(self.x0_local.is_finite() && self.x0_local > 0.0) {
            return Err(ExpansionError::Config(format!(
                "{name}: x0_local must be positive and finite, got {}",
                self.x0_local
            )));
        }
        let x0_ref = self.learning.reference_experience();
        if self.x0_local < x0_ref {
            return Err(ExpansionError::Config(format!(
                "{name}: x0_local {} lies below the curve reference experience {x0_ref}",
                self.x0_local
            )));
        }
        if !self.world_additions.is_empty() && self.world_additions.len() != periods {
            return Err(ExpansionError::Config(format!(
                "{name}: world_additions has {} entries, expected {periods} (or none)",
                self.world_additions.len()
            )));
        }
        for (p, &w) in self.world_additions.iter().enumerate() {
            if !(w.is_finite() && w >= 0.0) {
                return Err(ExpansionError::Config(format!(
                    "{name}: world addition for period {p} must be finite and >= 0, got {w}"
                )));
            }
        }
        if !self.var_cost.is_finite() {
            return Err(ExpansionError::Config(format!(
                "{name}: var_cost must be finite, got {}",
                self.var_cost
            )));
        }
        if !(self.emission_factor.is_finite() && self.emission_factor >= 0.0) {
            return Err(ExpansionError::Config(format!(
                "{name}: emission_factor must be finite and >= 0, got {}",
                self.emission_factor
            )));
        }
        if !(self.availability > 0.0 && self.availability <= 1.0) {
            return Err(ExpansionError::Config(format!(
                "{name}: availability must lie in (0, 1], got {}",
                self.availability
            )));
        }
        if !(self.max_build.is_finite() && self.max_build >= 0.0) {
            return Err(ExpansionError::Config(format!(
                "{name}: max_build must be finite and >= 0, got {}",
                self.max_build
            )));
        }
        if let Some(path) = &self.exo_cost_path {
            if path.len() != periods {
                return Err(ExpansionError::Config(format!(
                    "{name}: exo_cost_path has {} entries, expected {periods}",
                    path.len()
                )));
            }
            for (p, &c) in path.iter().enumerate() {
                if !(c.is_finite() && c >= 0.0) {
                    return Err(ExpansionError::Config(format!(
                        "{name}: exogenous cost for period {p} must be finite and >= 0, got {c}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn world_addition(&self, p: usize) -> f64 {
        self.world_additions.get(p).copied().unwrap_or(0.0)
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ExpansionError> {
        if self.periods == 0 {
            return Err(ExpansionError::Config("periods must be at least 1".into()));
        }
        if self.technologies.is_empty() {
            return Err(ExpansionError::Config(
                "at least one technology is required".into(),
            ));
        }
        let mut seen = std::collections::BTreeSet::new();
        for tech in &self.technologies {
            tech.validate(self.periods)?;
            if !seen.insert(tech.name.as_str()) {
                return Err(ExpansionError::Config(format!(
                    "duplicate technology name {:?}",
                    tech.name
                )));
            }
        }
        if !(self.hours_per_period.is_finite() && self.hours_per_period > 0.0) {
            return Err(ExpansionError::Config(format!(
                "hours_per_period must be positive and finite, got {}",
                self.hours_per_period
            )));
        }
        if self.demand.len() != self.periods {
            return Err(ExpansionError::Config(format!(
                "demand has {} entries, expected {}",
                self.demand.len(),
                self.periods
            )));
        }
        for (p, &d) in self.demand.iter().enumerate() {
            if !(d.is_finite() && d >= 0.0) {
                return Err(ExpansionError::Config(format!(
                    "demand for period {p} must be finite and >= 0, got {d}"
                )));
            }
        }
        if self.emission_cap.len() != self.periods {
            return Err(ExpansionError::Config(format!(
                "emission_cap has {} entries, expected {}",
                self.emission_cap.len(),
                self.periods
            )));
        }
        for (p, &c) in self.emission_cap.iter().enumerate() {
            if c.is_nan() || c < 0.0 {
                return Err(ExpansionError::Config(format!(
                    "emission cap for period {p} must be >= 0 (infinity allowed), got {c}"
                )));
            }
        }
        if !(self.discount_rate.is_finite() && self.discount_rate > -1.0) {
            return Err(ExpansionError::Config(format!(
                "discount_rate must be finite and > -1, got {}",
                self.discount_rate
            )));
        }
        if self.mode == Mode::Exogenous {
            for tech in &self.technologies {
                if tech.exo_cost_path.is_none() {
                    return Err(ExpansionError::Config(format!(
                        "{}: exogenous mode requires exo_cost_path",
                        tech.name
                    )));
                }
            }
        }
        Ok(())
    }

    fn discount(&self, p: usize) -> f64 {
        (1.0 + self.discount_rate).powi(-(p as i32))
    }
}

/// Indices of the model variables, for inspection and for augmenting the
/// program in tests or exports. All matrices are `[technology][period]`.
#[derive(Debug, Clone, Serialize)]
pub struct VarMap {
    pub build: Vec<Vec<usize>>,
    pub generation: Vec<Vec<usize>>,
    pub cumulative: Vec<Vec<usize>>,
    /// One human-readable name per variable index.
    pub names: Vec<String>,
}

/// The assembled program plus everything needed to interpret it.
#[derive(Debug, Clone)]
pub struct MilpBuild {
    pub problem: MilpProblem,
    pub vars: VarMap,
    /// Piecewise approximation per technology (endogenous mode; `None` for
    /// technologies pinned at their reference experience).
    pub pwl: Vec<Option<PwlApprox>>,
}

/// A solved plan. Quantity matrices are `[technology][period]`.
///
/// `investment_cost` and `total_discounted_cost` are recosted from the
/// exact learning curves; `pwl_investment_cost` and `pwl_objective` keep
/// the solver's piecewise view so the approximation bias stays visible. In
/// exogenous mode the two coincide by construction.
#[derive(Debug, Clone, Serialize)]
pub struct ExpansionPlan {
    pub technologies: Vec<String>,
    pub builds: Vec<Vec<f64>>,
    pub cumulative: Vec<Vec<f64>>,
    pub generation: Vec<Vec<f64>>,
    pub investment_cost: Vec<f64>,
    pub variable_cost: Vec<f64>,
    pub pwl_investment_cost: Vec<f64>,
    pub total_discounted_cost: f64,
    pub pwl_objective: f64,
    pub status: SolveStatus,
    pub gap: f64,
    pub nodes: usize,
}

/// Per-technology experience positions implied by the scenario bounds.
struct Positions {
    /// Position after the period's world addition, before local builds
    /// (minimum over build choices).
    lo: Vec<f64>,
    /// Position after world addition and a maximal local build history.
    hi: Vec<f64>,
}

fn positions(tech: &TechnologySpec, periods: usize) -> Positions {
    let mut lo = Vec::with_capacity(periods);
    let mut hi = Vec::with_capacity(periods);
    let mut acc_lo = tech.x0_local;
    let mut acc_hi = tech.x0_local;
    for p in 0..periods {
        acc_lo += tech.world_addition(p);
        acc_hi += tech.world_addition(p) + tech.max_build;
        lo.push(acc_lo);
        hi.push(acc_hi);
    }
    Positions { lo, hi }
}

/// Assembles the scenario into a MILP (an LP in exogenous mode).
pub fn build_milp(scenario: &ScenarioConfig) -> Result<MilpBuild, ExpansionError> {
    scenario.validate()?;
    let p_count = scenario.periods;
    let t_count = scenario.technologies.len();
    let h = scenario.hours_per_period;

    let mut lp = LinearProgram::new(0, Sense::Minimize);
    let mut names: Vec<String> = Vec::new();
    let mut objective: BTreeMap<usize, f64> = BTreeMap::new();
    let mut binaries: Vec<usize> = Vec::new();
    let add_var = |lp: &mut LinearProgram,
                   names: &mut Vec<String>,
                   lo: f64,
                   hi: f64,
                   name: String|
     -> Result<usize, ExpansionError> {
        let idx = lp.add_var(lo, hi, 0.0)?;
        names.push(name);
        Ok(idx)
    };

    // Core quantity variables.
    let mut build = vec![vec![0usize; p_count]; t_count];
    let mut generation = vec![vec![0usize; p_count]; t_count];
    let mut cumulative = vec![vec![0usize; p_count]; t_count];
    let tech_positions: Vec<Positions> = scenario
        .technologies
        .iter()
        .map(|t| positions(t, p_count))
        .collect();
    for (t, tech) in scenario.technologies.iter().enumerate() {
        for p in 0..p_count {
            build[t][p] = add_var(
                &mut lp,
                &mut names,
                0.0,
                tech.max_build,
                format!("build[{}][{p}]", tech.name),
            )?;
        }
        for p in 0..p_count {
            generation[t][p] = add_var(
                &mut lp,
                &mut names,
                0.0,
                f64::INFINITY,
                format!("gen[{}][{p}]", tech.name),
            )?;
        }
        let pos = &tech_positions[t];
        for p in 0..p_count {
            cumulative[t][p] = add_var(
                &mut lp,
                &mut names,
                pos.lo[p],
                pos.hi[p],
                format!("cum[{}][{p}]", tech.name),
            )?;
        }
    }
    // Carrier for objective constants (piecewise values at fixed positions).
    let const_var = add_var(&mut lp, &mut names, 1.0, 1.0, "one".into())?;
    let mut const_coef = 0.0;

    // Structural rows shared by both modes.
    for (t, tech) in scenario.technologies.iter().enumerate() {
        let pos = &tech_positions[t];
        for p in 0..p_count {
            // cum[t][p] - sum of local builds through p = x0_local + world
            // through p.
            let mut coeffs = vec![(cumulative[t][p], 1.0)];
            for q in 0..=p {
                coeffs.push((build[t][q], -1.0));
            }
            lp.add_named_row(
                coeffs,
                Relation::Eq,
                pos.lo[p],
                Some(format!("cumdef[{}][{p}]", tech.name)),
            )?;
            // Energy cap from available capacity.
            lp.add_named_row(
                vec![
                    (generation[t][p], 1.0),
                    (cumulative[t][p], -tech.availability * h),
                ],
                Relation::Le,
                0.0,
                Some(format!("capacity[{}][{p}]", tech.name)),
            )?;
        }
    }
    for p in 0..p_count {
        let coeffs: Vec<(usize, f64)> = (0..t_count).map(|t| (generation[t][p], 1.0)).collect();
        lp.add_named_row(
            coeffs,
            Relation::Ge,
            scenario.demand[p],
            Some(format!("demand[{p}]")),
        )?;
        if scenario.emission_cap[p].is_finite() {
            let coeffs: Vec<(usize, f64)> = scenario
                .technologies
                .iter()
                .enumerate()
                .filter(|(_, tech)| tech.emission_factor > 0.0)
                .map(|(t, tech)| (generation[t][p], tech.emission_factor))
                .collect();
            lp.add_named_row(
                coeffs,
                Relation::Le,
                scenario.emission_cap[p],
                Some(format!("emission[{p}]")),
            )?;
        }
    }

    // Variable generation cost enters the objective in both modes.
    for (t, tech) in scenario.technologies.iter().enumerate() {
        for p in 0..p_count {
            if tech.var_cost != 0.0 {
                *objective.entry(generation[t][p]).or_insert(0.0) +=
                    scenario.discount(p) * tech.var_cost;
            }
        }
    }

    let mut pwls: Vec<Option<PwlApprox>> = vec![None; t_count];
    match scenario.mode {
        Mode::Exogenous => {
            for (t, tech) in scenario.technologies.iter().enumerate() {
                let path = tech
                    .exo_cost_path
                    .as_ref()
                    .expect("validated: exogenous mode carries cost paths");
                for p in 0..p_count {
                    if path[p] != 0.0 {
                        *objective.entry(build[t][p]).or_insert(0.0) +=
                            scenario.discount(p) * path[p];
                    }
                }
            }
        }
        Mode::Endogenous => {
            for (t, tech) in scenario.technologies.iter().enumerate() {
                let pos = &tech_positions[t];
                let x_max = pos.hi[p_count - 1];
                let x_ref = tech.learning.reference_experience();
                if x_max <= x_ref {
                    // The technology never moves past its reference point;
                    // every span has zero cumulative cost.
                    continue;
                }
                let pwl = build_breakpoints(&tech.learning, x_max, scenario.pwl_policy)?;
                if tech.max_build == 0.0 {
                    // Immobile: positions are constants, expenditure is a
                    // constant (world additions cost nothing locally, so
                    // only availability of the curve matters for recosting).
                    pwls[t] = Some(pwl);
                    continue;
                }
                let mut prev_post: Option<usize> = None;
                for p in 0..p_count {
                    let f_post = add_pwl_block(
                        &mut lp,
                        &mut names,
                        &mut binaries,
                        &pwl,
                        cumulative[t][p],
                        0.0,
                        &format!("{}][{p}", tech.name),
                    )?;
                    // delta_p on F(position after builds of p).
                    *objective.entry(f_post).or_insert(0.0) += scenario.discount(p);
                    // Minus delta_p on F(position before builds of p).
                    let w = tech.world_addition(p);
                    if p == 0 {
                        let pre = (tech.x0_local + w).clamp(pwl.x_min(), pwl.x_max());
                        const_coef -= scenario.discount(p) * eval_pwl(&pwl, pre)?;
                    } else if w > 0.0 {
                        let f_pre = add_pwl_block(
                            &mut lp,
                            &mut names,
                            &mut binaries,
                            &pwl,
                            cumulative[t][p - 1],
                            w,
                            &format!("{}][pre{p}", tech.name),
                        )?;
                        *objective.entry(f_pre).or_insert(0.0) -= scenario.discount(p);
                    } else {
                        // Position before p's builds is last period's
                        // position: reuse its value variable.
                        let prior = prev_post.expect("post block exists for p - 1");
                        *objective.entry(prior).or_insert(0.0) -= scenario.discount(p);
                    }
                    prev_post = Some(f_post);
                }
                pwls[t] = Some(pwl);
            }
            // Constant expenditure of immobile technologies (world additions
            // still move them along the curve at zero local cost, leaving
            // zero constant; their spans only matter for recosting).
        }
    }

    for (var, coef) in &objective {
        lp.set_objective(*var, *coef)?;
    }
    lp.set_objective(const_var, const_coef)?;

    let problem = MilpProblem::new(lp, binaries)?;
    Ok(MilpBuild {
        problem,
        vars: VarMap {
            build,
            generation,
            cumulative,
            names,
        },
        pwl: pwls,
    })
}

/// Adds one disaggregated convex-combination block evaluating the piecewise
/// curve at `X = position_var + shift`, returning the value variable.
///
/// Per segment `k` (breakpoints `B_{k-1}..B_k`, values `V_{k-1}..V_k`):
/// binary `z_k`, weights `wl_k, wr_k >= 0` with `wl_k + wr_k = z_k`;
/// `sum_k z_k = 1`; `sum_k (B_{k-1} wl_k + B_k wr_k) = position + shift`;
/// `F = sum_k (V_{k-1} wl_k + V_k wr_k)`.
fn add_pwl_block(
    lp: &mut LinearProgram,
    names: &mut Vec<String>,
    binaries: &mut Vec<usize>,
    pwl: &PwlApprox,
    position_var: usize,
    shift: f64,
    label: &str,
) -> Result<usize, ExpansionError> {
    let bp = pwl.breakpoints();
    let vals = pwl.values();
    let segments = pwl.segment_count();
    let f_var = lp.add_var(vals[0], vals[segments], 0.0)?;
    names.push(format!("pwlcost[{label}]"));

    let mut z_sum = Vec::with_capacity(segments);
    let mut pos_row = vec![(position_var, -1.0)];
    let mut val_row = vec![(f_var, 1.0)];
    for k in 0..segments {
        let z = lp.add_var(0.0, 1.0, 0.0)?;
        names.push(format!("seg[{label}][{k}]"));
        let wl = lp.add_var(0.0, 1.0, 0.0)?;
        names.push(format!("wlo[{label}][{k}]"));
        let wr = lp.add_var(0.0, 1.0, 0.0)?;
        names.push(format!("whi[{label}][{k}]"));
        binaries.push(z);
        z_sum.push((z, 1.0));
        lp.add_named_row(
            vec![(wl, 1.0), (wr, 1.0), (z, -1.0)],
            Relation::Eq,
            0.0,
            Some(format!("lambda[{label}][{k}]")),
        )?;
        pos_row.push((wl, bp[k]));
        pos_row.push((wr, bp[k + 1]));
        val_row.push((wl, -vals[k]));
        val_row.push((wr, -vals[k + 1]));
    }
    lp.add_named_row(z_sum, Relation::Eq, 1.0, Some(format!("segsum[{label}]")))?;
    lp.add_named_row(pos_row, Relation::Eq, shift, Some(format!("pos[{label}]")))?;
    lp.add_named_row(val_row, Relation::Eq, 0.0, Some(format!("val[{label}]")))?;
    Ok(f_var)
}

/// Solves a scenario with default solver options.
pub fn solve_expansion(scenario: &ScenarioConfig) -> Result<ExpansionPlan, ExpansionError> {
    solve_expansion_with(scenario, &MilpOptions::default())
}

/// Solves a scenario; a node-limited search still returns its incumbent
/// plan (with the residual gap) when one exists.
pub fn solve_expansion_with(
    scenario: &ScenarioConfig,
    options: &MilpOptions,
) -> Result<ExpansionPlan, ExpansionError> {
    let built = build_milp(scenario)?;
    let sol = solve_milp(&built.problem, options)?;
    match sol.status {
        SolveStatus::Infeasible => {
            let (period, detail) = diagnose_infeasibility(scenario);
            Err(ExpansionError::Infeasible { period, detail })
        }
        SolveStatus::Unbounded => Err(ExpansionError::Unbounded),
        SolveStatus::NodeLimit if sol.objective.is_none() => {
            Err(ExpansionError::Incomplete { nodes: sol.nodes })
        }
        SolveStatus::Optimal | SolveStatus::NodeLimit => extract_plan(scenario, &built, &sol),
    }
}

fn extract_plan(
    scenario: &ScenarioConfig,
    built: &MilpBuild,
    sol: &crate::milp::MilpSolution,
) -> Result<ExpansionPlan, ExpansionError> {
    let p_count = scenario.periods;
    let t_count = scenario.technologies.len();
    let mut builds = vec![vec![0.0; p_count]; t_count];
    let mut cumulative = vec![vec![0.0; p_count]; t_count];
    let mut generation = vec![vec![0.0; p_count]; t_count];
    let mut investment = vec![0.0; p_count];
    let mut pwl_investment = vec![0.0; p_count];
    let mut variable = vec![0.0; p_count];

    for (t, tech) in scenario.technologies.iter().enumerate() {
        let mut position = tech.x0_local;
        for p in 0..p_count {
            let b = sol.values[built.vars.build[t][p]];
            let g = sol.values[built.vars.generation[t][p]];
            builds[t][p] = b;
            generation[t][p] = g;
            variable[p] += tech.var_cost * g;
            position += tech.world_addition(p);
            let pre = position;
            position += b;
            cumulative[t][p] = position;
            match scenario.mode {
                Mode::Exogenous => {
                    let path = tech.exo_cost_path.as_ref().expect("validated");
                    investment[p] += path[p] * b;
                    pwl_investment[p] += path[p] * b;
                }
                Mode::Endogenous => {
                    // pre >= x0_local >= reference, so both spans are valid.
                    investment[p] += tech.learning.cumulative_cost(position)?
                        - tech.learning.cumulative_cost(pre)?;
                    if let Some(pwl) = &built.pwl[t] {
                        let lo = pre.clamp(pwl.x_min(), pwl.x_max());
                        let hi = position.clamp(pwl.x_min(), pwl.x_max());
                        pwl_investment[p] += eval_pwl(pwl, hi)? - eval_pwl(pwl, lo)?;
                    }
                }
            }
        }
    }
    let total_discounted_cost = (0..p_count)
        .map(|p| scenario.discount(p) * (investment[p] + variable[p]))
        .sum();
    Ok(ExpansionPlan {
        technologies: scenario
            .technologies
            .iter()
            .map(|t| t.name.clone())
            .collect(),
        builds,
        cumulative,
        generation,
        investment_cost: investment,
        variable_cost: variable,
        pwl_investment_cost: pwl_investment,
        total_discounted_cost,
        pwl_objective: sol.objective.expect("caller checked an objective exists"),
        status: sol.status,
        gap: sol.gap,
        nodes: sol.nodes,
    })
}

/// Pinpoints why no feasible plan exists: the first period whose demand
/// exceeds deliverable energy, or whose minimum-emission dispatch still
/// violates the cap.
fn diagnose_infeasibility(scenario: &ScenarioConfig) -> (usize, String) {
    let h = scenario.hours_per_period;
    for p in 0..scenario.periods {
        // Maximum deliverable energy per technology, building flat out.
        let mut dispatch: Vec<(f64, f64)> = scenario
            .technologies
            .iter()
            .map(|tech| {
                let pos = positions(tech, scenario.periods);
                (tech.emission_factor, tech.availability * h * pos.hi[p])
            })
            .collect();
        let capacity: f64 = dispatch.iter().map(|&(_, e)| e).sum();
        let demand = scenario.demand[p];
        if capacity < demand * (1.0 - 1e-9) {
            return (
                p,
                format!(
                    "demand {demand} MWh exceeds the {capacity} MWh deliverable \
                     even when every technology builds at its cap"
                ),
            );
        }
        let cap = scenario.emission_cap[p];
        if cap.is_finite() {
            // Cheapest-emission dispatch that exactly meets demand.
            dispatch.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut remaining = demand;
            let mut emission = 0.0;
            for (ef, energy) in dispatch {
                let used = energy.min(remaining);
                emission += ef * used;
                remaining -= used;
                if remaining <= 0.0 {
                    break;
                }
            }
            if emission > cap * (1.0 + 1e-9) + 1e-12 {
                return (
                    p,
                    format!(
                        "meeting demand {demand} MWh emits at least {emission} tCO2, \
                         above the cap {cap}"
                    ),
                );
            }
        }
    }
    (
        0,
        "the solver reported infeasibility; no single-period cause found".into(),
    )
}

/// One sweep cell: a learning rate and the solve outcome under it.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub lr: f64,
    pub total_discounted_cost: Option<f64>,
    pub pwl_objective: Option<f64>,
    /// Total build per technology (MW over the horizon).
    pub total_builds: Vec<f64>,
    /// First period with a positive build, per technology.
    pub first_build_period: Vec<Option<usize>>,
    pub error: Option<String>,
}

/// Re-solves the scenario for each learning rate applied to `technology`
/// (one-factor and partial curves only). Failed cells carry their error and
/// the sweep continues. `jobs` > 1 dispatches solves across threads;
/// ordering follows `lr_values` regardless.
pub fn sweep_learning_rate(
    scenario: &ScenarioConfig,
    technology: &str,
    lr_values: &[f64],
    jobs: usize,
) -> Result<Vec<SweepRow>, ExpansionError> {
    scenario.validate()?;
    let t_idx = scenario
        .technologies
        .iter()
        .position(|t| t.name == technology)
        .ok_or_else(|| {
            ExpansionError::Config(format!("unknown technology {technology:?} in sweep"))
        })?;
    match scenario.technologies[t_idx].learning {
        LearningSpec::OneFactor(_) | LearningSpec::Partial(_) => {}
        ref other => {
            return Err(ExpansionError::Config(format!(
                "sweep supports one-factor and partial curves, not {}",
                other.variant_name()
            )))
        }
    }

    let solve_cell = |&lr: &f64| -> SweepRow {
        let outcome =
            with_learning_rate(&scenario.technologies[t_idx].learning, lr).and_then(|learning| {
                let mut modified = scenario.clone();
                modified.technologies[t_idx].learning = learning;
                solve_expansion(&modified)
            });
        match outcome {
            Ok(plan) => SweepRow {
                lr,
                total_discounted_cost: Some(plan.total_discounted_cost),
                pwl_objective: Some(plan.pwl_objective),
                total_builds: plan.builds.iter().map(|row| row.iter().sum()).collect(),
                first_build_period: (0..plan.builds.len())
                    .map(|t| first_build(&plan.builds[t]))
                    .collect(),
                error: None,
            },
            Err(e) => SweepRow {
                lr,
                total_discounted_cost: None,
                pwl_objective: None,
                total_builds: vec![0.0; scenario.technologies.len()],
                first_build_period: vec![None; scenario.technologies.len()],
                error: Some(e.to_string()),
            },
        }
    };

    let jobs = jobs.max(1).min(lr_values.len().max(1));
    if jobs == 1 {
        return Ok(lr_values.iter().map(solve_cell).collect());
    }
    let results: Mutex<Vec<Option<SweepRow>>> = Mutex::new(vec![None; lr_values.len()]);
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= lr_values.len() {
                    break;
                }
                let row = solve_cell(&lr_values[i]);
                results.lock().expect("sweep worker poisoned")[i] = Some(row);
            });
        }
    });
    let rows = results
        .into_inner()
        .expect("sweep workers joined")
        .into_iter()
        .map(|r| r.expect("every sweep index processed"))
        .collect();
    Ok(rows)
}

/// Rebuilds a curve with a replacement learning rate, preserving every
/// other parameter.
fn with_learning_rate(spec: &LearningSpec, lr: f64) -> Result<LearningSpec, ExpansionError> {
    match spec {
        LearningSpec::OneFactor(s) => Ok(LearningSpec::OneFactor(OneFactorSpec::from_lr(
            s.c0(),
            s.x0(),
            lr,
        )?)),
        LearningSpec::Partial(s) => {
            let b = crate::curves::lr_to_exponent(lr)?;
            Ok(LearningSpec::Partial(PartialSpec::new(
                s.c0(),
                s.x0(),
                b,
                s.alpha(),
            )?))
        }
        other => Err(ExpansionError::Config(format!(
            "cannot replace the learning rate of a {} curve",
            other.variant_name()
        ))),
    }
}

fn first_build(builds: &[f64]) -> Option<usize> {
    builds.iter().position(|&b| b > BUILD_EPS)
}

/// Build-timing difference for one technology between the two modes.
#[derive(Debug, Clone, Serialize)]
pub struct BuildTiming {
    pub technology: String,
    pub endogenous_first: Option<usize>,
    pub exogenous_first: Option<usize>,
    /// Periods by which the exogenous plan lags the endogenous one
    /// (positive: endogenous invests earlier); absent unless both build.
    pub shift: Option<i64>,
}

/// Side-by-side endogenous / exogenous comparison.
#[derive(Debug, Serialize)]
pub struct ModeReport {
    pub endogenous: Option<ExpansionPlan>,
    pub exogenous: Option<ExpansionPlan>,
    pub endogenous_error: Option<String>,
    pub exogenous_error: Option<String>,
    /// Exogenous minus endogenous exact discounted total; absent when
    /// either side failed.
    pub cost_delta: Option<f64>,
    pub timing: Vec<BuildTiming>,
}

/// Solves both modes and reports the structured difference. Requires every
/// technology to carry an exogenous cost path.
pub fn compare_modes(scenario: &ScenarioConfig) -> Result<ModeReport, ExpansionError> {
    scenario.validate()?;
    for tech in &scenario.technologies {
        if tech.exo_cost_path.is_none() {
            return Err(ExpansionError::Config(format!(
                "{}: mode comparison requires exo_cost_path",
                tech.name
            )));
        }
    }
    let mut endo_scenario = scenario.clone();
    endo_scenario.mode = Mode::Endogenous;
    let mut exo_scenario = scenario.clone();
    exo_scenario.mode = Mode::Exogenous;
    let endo = solve_expansion(&endo_scenario);
    let exo = solve_expansion(&exo_scenario);

    let timing = scenario
        .technologies
        .iter()
        .enumerate()
        .map(|(t, tech)| {
            let e_first = endo.as_ref().ok().and_then(|p| first_build(&p.builds[t]));
            let x_first = exo.as_ref().ok().and_then(|p| first_build(&p.builds[t]));
            BuildTiming {
                technology: tech.name.clone(),
                endogenous_first: e_first,
                exogenous_first: x_first,
                shift: match (e_first, x_first) {
                    (Some(e), Some(x)) => Some(x as i64 - e as i64),
                    _ => None,
                },
            }
        })
        .collect();
    let cost_delta = match (&endo, &exo) {
        (Ok(e), Ok(x)) => Some(x.total_discounted_cost - e.total_discounted_cost),
        _ => None,
    };
    let (endogenous, endogenous_error) = split_outcome(endo);
    let (exogenous, exogenous_error) = split_outcome(exo);
    Ok(ModeReport {
        endogenous,
        exogenous,
        endogenous_error,
        exogenous_error,
        cost_delta,
        timing,
    })
}

fn split_outcome(
    outcome: Result<ExpansionPlan, ExpansionError>,
) -> (Option<ExpansionPlan>, Option<String>) {
    match outcome {
        Ok(plan) => (Some(plan), None),
        Err(e) => (None, Some(e.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::OneFactorSpec;
    use crate::pwl::PwlPolicy;
    use approx::assert_relative_eq;

    fn one_factor(c0: f64, x0: f64, lr: f64) -> LearningSpec {
        LearningSpec::OneFactor(OneFactorSpec::from_lr(c0, x0, lr).unwrap())
    }

    fn tech(name: &str, learning: LearningSpec, x0_local: f64, max_build: f64) -> TechnologySpec {
        TechnologySpec {
            name: name.into(),
            learning,
            x0_local,
            world_additions: Vec::new(),
            var_cost: 0.0,
            emission_factor: 0.0,
            availability: 1.0,
            max_build,
            exo_cost_path: None,
        }
    }

    fn scenario(techs: Vec<TechnologySpec>, demand: Vec<f64>, mode: Mode) -> ScenarioConfig {
        let periods = demand.len();
        ScenarioConfig {
            technologies: techs,
            periods,
            hours_per_period: 100.0,
            demand,
            emission_cap: vec![f64::INFINITY; periods],
            discount_rate: 0.1,
            mode,
            pwl_policy: PwlPolicy::MaxRelError { epsilon: 0.01 },
        }
    }

    #[test]
    fn zero_demand_zero_plan() {
        let s = scenario(
            vec![tech("solar", one_factor(5.0, 1.0, 0.2), 1.0, 10.0)],
            vec![0.0],
            Mode::Endogenous,
        );
        let plan = solve_expansion(&s).unwrap();
        assert_eq!(plan.status, SolveStatus::Optimal);
        assert!(plan.builds[0][0].abs() < 1e-9);
        assert!(plan.total_discounted_cost.abs() < 1e-9);
        assert!(plan.pwl_objective.abs() < 1e-9);
    }

    #[test]
    fn exogenous_hand_arithmetic() {
        // availability 1, h = 100, demand 300 then 500 MWh, x0_local = 1 MW
        // already installed: capacity targets are 3 and 5 MW, so builds are
        // 2 MW in each period at 7 currency/MW. Discounting makes the
        // split build strictly optimal.
        let mut t = tech("gas", one_factor(7.0, 1.0, 0.0), 1.0, 10.0);
        t.exo_cost_path = Some(vec![7.0, 7.0]);
        let s = scenario(vec![t], vec![300.0, 500.0], Mode::Exogenous);
        let plan = solve_expansion(&s).unwrap();
        assert_eq!(plan.status, SolveStatus::Optimal);
        assert_relative_eq!(plan.builds[0][0], 2.0, epsilon = 1e-7);
        assert_relative_eq!(plan.builds[0][1], 2.0, epsilon = 1e-7);
        assert_relative_eq!(plan.cumulative[0][1], 5.0, epsilon = 1e-7);
        let expected = 14.0 + 14.0 / 1.1;
        assert_relative_eq!(plan.total_discounted_cost, expected, epsilon = 1e-7);
        assert_relative_eq!(plan.pwl_objective, expected, epsilon = 1e-7);
    }

    #[test]
    fn infeasible_capacity_names_first_period() {
        let s = scenario(
            vec![tech("solar", one_factor(5.0, 1.0, 0.2), 1.0, 2.0)],
            vec![100.0, 1_000_000.0],
            Mode::Endogenous,
        );
        let err = solve_expansion(&s).unwrap_err();
        match err {
            ExpansionError::Infeasible { period, detail } => {
                assert_eq!(period, 1);
                assert!(detail.contains("demand"), "{detail}");
            }
            other => panic!("expected infeasibility, got {other:?}"),
        }
    }

    #[test]
    fn infeasible_emission_cap_diagnosed() {
        let mut dirty = tech("coal", one_factor(3.0, 1.0, 0.0), 1.0, 50.0);
        dirty.emission_factor = 1.0;
        let mut s = scenario(vec![dirty], vec![500.0], Mode::Endogenous);
        s.emission_cap = vec![100.0];
        let err = solve_expansion(&s).unwrap_err();
        match err {
            ExpansionError::Infeasible { period, detail } => {
                assert_eq!(period, 0);
                assert!(detail.contains("emits"), "{detail}");
            }
            other => panic!("expected infeasibility, got {other:?}"),
        }
    }

    #[test]
    fn zero_learning_modes_coincide() {
        // At lr = 0 the cumulative curve is linear, the piecewise
        // approximation is exact, and both modes price builds identically.
        let c0 = 5.0;
        let mut t = tech("flat", one_factor(c0, 1.0, 0.0), 1.0, 10.0);
        t.var_cost = 2.0;
        t.exo_cost_path = Some(vec![c0; 3]);
        let s = scenario(vec![t], vec![300.0, 400.0, 500.0], Mode::Endogenous);
        let endo = solve_expansion(&s).unwrap();
        let mut s_exo = s.clone();
        s_exo.mode = Mode::Exogenous;
        let exo = solve_expansion(&s_exo).unwrap();
        assert_relative_eq!(endo.pwl_objective, exo.pwl_objective, epsilon = 1e-6);
        assert_relative_eq!(
            endo.total_discounted_cost,
            exo.total_discounted_cost,
            epsilon = 1e-6
        );
    }

    #[test]
    fn zero_discount_sums_period_costs() {
        let mut t = tech("solar", one_factor(5.0, 1.0, 0.25), 1.0, 10.0);
        t.var_cost = 1.0;
        let mut s = scenario(vec![t], vec![300.0, 600.0], Mode::Endogenous);
        s.discount_rate = 0.0;
        let plan = solve_expansion(&s).unwrap();
        let undiscounted: f64 = (0..2)
            .map(|p| plan.investment_cost[p] + plan.variable_cost[p])
            .sum();
        assert_relative_eq!(plan.total_discounted_cost, undiscounted, epsilon = 1e-9);
    }

    #[test]
    fn plan_satisfies_feasibility_invariants() {
        let mut learner = tech("learner", one_factor(40.0, 2.0, 0.25), 2.0, 8.0);
        learner.var_cost = 1.0;
        learner.world_additions = vec![1.0, 0.5, 0.0];
        let mut stale = tech("stale", one_factor(12.0, 5.0, 0.0), 5.0, 4.0);
        stale.var_cost = 3.0;
        stale.emission_factor = 0.4;
        let mut s = scenario(
            vec![learner, stale],
            vec![400.0, 700.0, 900.0],
            Mode::Endogenous,
        );
        s.emission_cap = vec![f64::INFINITY, 200.0, 150.0];
        let plan = solve_expansion(&s).unwrap();
        assert_eq!(plan.status, SolveStatus::Optimal);
        for t in 0..2 {
            let tech = &s.technologies[t];
            let mut pos = tech.x0_local;
            for p in 0..3 {
                pos += tech.world_addition(p) + plan.builds[t][p];
                assert_relative_eq!(plan.cumulative[t][p], pos, epsilon = 1e-6);
                assert!(plan.builds[t][p] >= -1e-6);
                assert!(plan.builds[t][p] <= tech.max_build + 1e-6);
                let cap = tech.availability * s.hours_per_period * plan.cumulative[t][p];
                assert!(plan.generation[t][p] <= cap + 1e-6);
            }
        }
        for p in 0..3 {
            let total: f64 = (0..2).map(|t| plan.generation[t][p]).sum();
            assert!(total >= s.demand[p] - 1e-6);
            let emitted: f64 = (0..2)
                .map(|t| s.technologies[t].emission_factor * plan.generation[t][p])
                .sum();
            assert!(emitted <= s.emission_cap[p] + 1e-6);
        }
    }

    #[test]
    fn sweep_single_entry_matches_solve() {
        let t = tech("solar", one_factor(5.0, 1.0, 0.2), 1.0, 10.0);
        let s = scenario(vec![t], vec![300.0, 500.0], Mode::Endogenous);
        let direct = solve_expansion(&s).unwrap();
        let rows = sweep_learning_rate(&s, "solar", &[0.2], 1).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].error.is_none());
        assert_relative_eq!(
            rows[0].total_discounted_cost.unwrap(),
            direct.total_discounted_cost,
            epsilon = 1e-9
        );
    }

    #[test]
    fn sweep_marks_failed_cells_and_continues() {
        let t = tech("solar", one_factor(5.0, 1.0, 0.2), 1.0, 10.0);
        let s = scenario(vec![t], vec![300.0], Mode::Endogenous);
        let rows = sweep_learning_rate(&s, "solar", &[0.3, -2.0, 0.1], 2).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows[0].error.is_none());
        assert!(rows[1].error.is_some());
        assert!(rows[2].error.is_none());
        assert!(rows[1].total_discounted_cost.is_none());
    }

    #[test]
    fn compare_modes_zero_delta_for_identical_costs() {
        let c0 = 6.0;
        let mut t = tech("flat", one_factor(c0, 1.0, 0.0), 1.0, 10.0);
        t.exo_cost_path = Some(vec![c0, c0]);
        let s = scenario(vec![t], vec![200.0, 400.0], Mode::Endogenous);
        let report = compare_modes(&s).unwrap();
        let delta = report.cost_delta.unwrap();
        assert!(delta.abs() < 1e-6, "delta = {delta}");
        assert_eq!(report.timing.len(), 1);
    }

    #[test]
    fn compare_modes_infeasible_on_both_sides() {
        let mut t = tech("tiny", one_factor(5.0, 1.0, 0.1), 1.0, 0.5);
        t.exo_cost_path = Some(vec![5.0]);
        let s = scenario(vec![t], vec![1_000_000.0], Mode::Endogenous);
        let report = compare_modes(&s).unwrap();
        assert!(report.endogenous.is_none());
        assert!(report.exogenous.is_none());
        assert!(report.cost_delta.is_none());
        assert!(report.endogenous_error.unwrap().contains("infeasible"));
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let good = tech("a", one_factor(5.0, 1.0, 0.2), 1.0, 10.0);
        let mut s = scenario(vec![good.clone()], vec![100.0], Mode::Endogenous);
        s.periods = 0;
        s.demand.clear();
        s.emission_cap.clear();
        assert!(matches!(
            solve_expansion(&s).unwrap_err(),
            ExpansionError::Config(_)
        ));

        let mut below_ref = good.clone();
        below_ref.x0_local = 0.5;
        let s2 = scenario(vec![below_ref], vec![100.0], Mode::Endogenous);
        assert!(matches!(
            solve_expansion(&s2).unwrap_err(),
            ExpansionError::Config(_)
        ));

        let s3 = scenario(vec![good.clone()], vec![100.0], Mode::Exogenous);
        assert!(matches!(
            solve_expansion(&s3).unwrap_err(),
            ExpansionError::Config(_)
        ));

        let mut dup = scenario(vec![good.clone(), good], vec![100.0], Mode::Endogenous);
        dup.technologies[1].x0_local = 2.0;
        assert!(matches!(
            solve_expansion(&dup).unwrap_err(),
            ExpansionError::Config(_)
        ));
    }

    #[test]
    fn endogenous_learner_gets_built_and_recosted() {
        let mut learner = tech("learner", one_factor(50.0, 2.0, 0.3), 2.0, 20.0);
        learner.var_cost = 0.5;
        let s = scenario(vec![learner], vec![500.0, 1500.0], Mode::Endogenous);
        let plan = solve_expansion(&s).unwrap();
        assert_eq!(plan.status, SolveStatus::Optimal);
        let total_build: f64 = plan.builds[0].iter().sum();
        assert!(total_build > 1.0, "builds = {:?}", plan.builds);
        // Exact recosting stays within the piecewise tolerance of the
        // solver's objective (1% policy plus slack for the variable part).
        let rel = (plan.total_discounted_cost - plan.pwl_objective).abs()
            / plan.total_discounted_cost.abs();
        assert!(rel < 0.02, "relative recosting gap {rel}");
    }
}
