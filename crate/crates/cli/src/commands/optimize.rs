//! `optimize`: build and solve a capacity-expansion scenario.
//!
//! Without `--out` the solved plan is printed as JSON. With a directory
//! `--out` the run writes `plan.json`, `plan.csv`, `costs.csv`, optionally
//! the assembled program as `model.lp`, and the manifest.

use std::path::PathBuf;

use clap::Args;
use learncurve::{build_milp, solve_expansion_with, ExpansionPlan, MilpOptions, Mode, ScenarioConfig};

use crate::commands::{cell, load_scenario, num};
use crate::failure::Failure;
use crate::manifest::ManifestScope;

#[derive(Args)]
pub struct OptimizeArgs {
    /// Scenario config path, or `packaged:<name>` for a built-in scenario.
    scenario: String,
    /// Override the scenario's learning mode.
    #[arg(long)]
    mode: Option<Mode>,
    /// Directory for plan.json, plan.csv, costs.csv and manifest.json.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the assembled program as LP-format text (needs --out).
    #[arg(long)]
    emit_lp: bool,
    /// Branch-and-bound node budget.
    #[arg(long)]
    node_limit: Option<usize>,
    /// Print a human summary instead of the plan JSON.
    #[arg(long)]
    pretty: bool,
}

pub fn run(args: OptimizeArgs) -> Result<(), Failure> {
    if args.emit_lp && args.out.is_none() {
        return Err(Failure::Usage("--emit-lp needs --out".into()));
    }
    let mut scope = ManifestScope::new();
    let mut scenario = load_scenario(&args.scenario, &mut scope)?;
    if let Some(mode) = args.mode {
        scenario.mode = mode;
    }
    let mut options = MilpOptions::default();
    if let Some(limit) = args.node_limit {
        options.node_limit = limit;
    }
    let plan = solve_expansion_with(&scenario, &options)?;

    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir)?;

        let plan_json = dir.join("plan.json");
        std::fs::write(&plan_json, serde_json::to_string_pretty(&plan)? + "\n")?;
        scope.record_output(&plan_json);

        let plan_csv = dir.join("plan.csv");
        std::fs::write(&plan_csv, plan_table(&plan)?)?;
        scope.record_output(&plan_csv);

        let costs_csv = dir.join("costs.csv");
        std::fs::write(&costs_csv, cost_table(&scenario, &plan)?)?;
        scope.record_output(&costs_csv);

        if args.emit_lp {
            let built = build_milp(&scenario)?;
            let lp_text =
                learncurve::write_lp_format(built.problem.lp(), built.problem.binary_vars());
            let model_lp = dir.join("model.lp");
            std::fs::write(&model_lp, lp_text)?;
            scope.record_output(&model_lp);
        }
        if args.pretty {
            print!("{}", summary(&plan));
        }
        scope.finish(Some(dir))
    } else {
        if args.pretty {
            print!("{}", summary(&plan));
        } else {
            println!("{}", serde_json::to_string_pretty(&plan)?);
        }
        scope.finish(None)
    }
}

/// Long-format build/cumulative/generation table.
fn plan_table(plan: &ExpansionPlan) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["technology", "period", "build", "cumulative", "generation"])?;
    for (t, tech) in plan.technologies.iter().enumerate() {
        for p in 0..plan.builds[t].len() {
            w.write_record([
                tech.clone(),
                p.to_string(),
                num(plan.builds[t][p]),
                num(plan.cumulative[t][p]),
                num(plan.generation[t][p]),
            ])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Failure::Data(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Per-period cost table; investment is recosted from the exact curves
/// while `pwl_investment` keeps the solver's piecewise view.
fn cost_table(scenario: &ScenarioConfig, plan: &ExpansionPlan) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "period",
        "discount_factor",
        "investment",
        "variable",
        "pwl_investment",
    ])?;
    for p in 0..plan.investment_cost.len() {
        let df = 1.0 / (1.0 + scenario.discount_rate).powi(p as i32);
        w.write_record([
            p.to_string(),
            num(df),
            num(plan.investment_cost[p]),
            num(plan.variable_cost[p]),
            num(plan.pwl_investment_cost[p]),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Data(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn summary(plan: &ExpansionPlan) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "status: {:?}  nodes: {}  gap: {}\n",
        plan.status, plan.nodes, num(plan.gap)
    ));
    s.push_str(&format!(
        "total discounted cost: {}  (solver objective {})\n",
        num(plan.total_discounted_cost),
        num(plan.pwl_objective)
    ));
    s.push_str(&format!("{:<20} {}\n", "technology", "builds by period"));
    for (t, tech) in plan.technologies.iter().enumerate() {
        let builds = plan.builds[t].iter().map(|v| cell(*v)).collect::<Vec<_>>().join(" ");
        s.push_str(&format!("{tech:<20} {builds}\n"));
    }
    s
}
