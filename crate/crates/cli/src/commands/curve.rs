//! `curve eval` and `curve show`: evaluate a learning-curve spec over an
//! experience grid, or print the parsed spec with its derived quantities.

use std::path::PathBuf;

use clap::{Args, Subcommand};

use crate::commands::{cell, emit_text, num};
use crate::failure::Failure;
use crate::manifest::ManifestScope;

#[derive(Subcommand)]
pub enum CurveCmd {
    /// Tabulate unit cost, cumulative cost and effective learning rate.
    Eval(EvalArgs),
    /// Print the parsed spec together with its derived quantities.
    Show(ShowArgs),
}

#[derive(Args)]
pub struct EvalArgs {
    /// Curve config file.
    #[arg(long)]
    spec: PathBuf,
    /// Comma-separated experience values; overrides the grid flags.
    #[arg(long, value_delimiter = ',')]
    at: Option<Vec<f64>>,
    /// Grid start (default: the curve's reference experience).
    #[arg(long)]
    x_min: Option<f64>,
    /// Grid end (default: 1024x the reference experience).
    #[arg(long)]
    x_max: Option<f64>,
    /// Number of grid points.
    #[arg(long, default_value_t = 33)]
    points: usize,
    /// Space the grid linearly instead of geometrically.
    #[arg(long)]
    linear: bool,
    /// Write the table here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Render an aligned human table instead of CSV.
    #[arg(long)]
    pretty: bool,
}

#[derive(Args)]
pub struct ShowArgs {
    /// Curve config file.
    #[arg(long)]
    spec: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Render key/value lines instead of JSON.
    #[arg(long)]
    pretty: bool,
}

pub fn run(cmd: CurveCmd) -> Result<(), Failure> {
    match cmd {
        CurveCmd::Eval(args) => eval(args),
        CurveCmd::Show(args) => show(args),
    }
}

fn eval(args: EvalArgs) -> Result<(), Failure> {
    let mut scope = ManifestScope::new();
    let text = std::fs::read_to_string(&args.spec)
        .map_err(|e| Failure::Data(format!("cannot read spec {:?}: {e}", args.spec)))?;
    scope.add_input(text.as_bytes());
    let spec = learncurve::parse_curve_config(&text)?;

    let grid = match &args.at {
        Some(values) => values.clone(),
        None => build_grid(&args, spec.reference_experience())?,
    };

    let mut rows = Vec::with_capacity(grid.len());
    for &x in &grid {
        let unit = spec.unit_cost(x)?;
        let cumulative = spec.cumulative_cost(x)?;
        let lr = spec.effective_learning_rate(x)?;
        rows.push((x, unit, cumulative, lr));
    }

    let payload = if args.pretty {
        let mut s = format!(
            "{:>16} {:>16} {:>18} {:>14}\n",
            "experience", "unit_cost", "cumulative_cost", "effective_lr"
        );
        for (x, unit, cumulative, lr) in &rows {
            s.push_str(&format!(
                "{:>16} {:>16} {:>18} {:>14}\n",
                cell(*x),
                cell(*unit),
                cell(*cumulative),
                cell(*lr)
            ));
        }
        s
    } else {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["x", "unit_cost", "cumulative_cost", "effective_lr"])?;
        for (x, unit, cumulative, lr) in &rows {
            w.write_record([num(*x), num(*unit), num(*cumulative), num(*lr)])?;
        }
        let bytes = w.into_inner().map_err(|e| Failure::Data(e.to_string()))?;
        String::from_utf8(bytes).expect("csv output is utf-8")
    };
    emit_text(&payload, args.out.as_deref(), &mut scope)?;
    scope.finish(None)
}

/// Builds the evaluation grid from the flags, anchored at the reference
/// experience so cumulative cost is always defined.
fn build_grid(args: &EvalArgs, reference: f64) -> Result<Vec<f64>, Failure> {
    let x_min = args.x_min.unwrap_or(reference);
    let x_max = args.x_max.unwrap_or(reference * 1024.0);
    if !(x_min > 0.0) || !(x_max > x_min) {
        return Err(Failure::Usage(format!(
            "grid needs 0 < x-min < x-max, got {x_min} .. {x_max}"
        )));
    }
    if args.points < 2 {
        return Err(Failure::Usage("grid needs at least 2 points".into()));
    }
    let n = args.points;
    let grid = (0..n)
        .map(|i| {
            let f = i as f64 / (n - 1) as f64;
            if args.linear {
                x_min + f * (x_max - x_min)
            } else {
                x_min * (x_max / x_min).powf(f)
            }
        })
        .collect();
    Ok(grid)
}

fn show(args: ShowArgs) -> Result<(), Failure> {
    let mut scope = ManifestScope::new();
    let text = std::fs::read_to_string(&args.spec)
        .map_err(|e| Failure::Data(format!("cannot read spec {:?}: {e}", args.spec)))?;
    scope.add_input(text.as_bytes());
    let spec = learncurve::parse_curve_config(&text)?;

    let reference = spec.reference_experience();
    let initial = spec.initial_cost()?;
    let lr_at_reference = spec.effective_learning_rate(reference)?;
    let payload = if args.pretty {
        format!(
            "family:               {}\nreference_experience: {}\ninitial_cost:         {}\nlr_at_reference:      {}\ncost_nonincreasing:   {}\n",
            spec.variant_name(),
            num(reference),
            num(initial),
            num(lr_at_reference),
            spec.is_cost_nonincreasing()
        )
    } else {
        let report = serde_json::json!({
            "family": spec.variant_name(),
            "spec": spec,
            "reference_experience": reference,
            "initial_cost": initial,
            "lr_at_reference": lr_at_reference,
            "cost_nonincreasing": spec.is_cost_nonincreasing(),
        });
        serde_json::to_string_pretty(&report)? + "\n"
    };
    emit_text(&payload, args.out.as_deref(), &mut scope)?;
    scope.finish(None)
}
