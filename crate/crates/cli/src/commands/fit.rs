//! `fit`: estimate learning-curve parameters from a historical cost series.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use learncurve::{FitModel, FitResult, ObservationSeries};
use serde::Serialize;

use crate::commands::{emit_text, num};
use crate::failure::Failure;
use crate::manifest::{ManifestScope, DEFAULT_SEED};

#[derive(Args)]
pub struct FitArgs {
    /// Observation CSV with header `x,cost` or `x,cost,y`.
    #[arg(long)]
    data: PathBuf,
    /// Curve model to fit.
    #[arg(long, value_enum, default_value_t = ModelArg::One)]
    model: ModelArg,
    /// Case-resampling bootstrap count for the learning-rate interval.
    #[arg(long)]
    bootstrap: Option<usize>,
    /// Bootstrap confidence level.
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// RNG seed for the bootstrap.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Render key/value lines instead of JSON.
    #[arg(long)]
    pretty: bool,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum ModelArg {
    /// One-factor experience curve.
    One,
    /// Two-factor experience + research curve.
    Two,
}

#[derive(Serialize)]
struct FitReport {
    fit: FitResult,
    bootstrap: Option<BootstrapReport>,
}

#[derive(Serialize)]
struct BootstrapReport {
    resamples: usize,
    level: f64,
    seed: u64,
    lr_ci: (f64, f64),
}

pub fn run(args: FitArgs) -> Result<(), Failure> {
    let mut scope = ManifestScope::new();
    let text = std::fs::read_to_string(&args.data)
        .map_err(|e| Failure::Data(format!("cannot read data {:?}: {e}", args.data)))?;
    scope.add_input(text.as_bytes());
    let series = ObservationSeries::from_csv_str(&text)?;

    let model = match args.model {
        ModelArg::One => FitModel::OneFactor,
        ModelArg::Two => FitModel::TwoFactor,
    };
    let fit = match model {
        FitModel::OneFactor => learncurve::fit_one_factor(&series)?,
        FitModel::TwoFactor => learncurve::fit_two_factor(&series)?,
    };

    let seed = args.seed.unwrap_or(DEFAULT_SEED);
    scope.set_seed(seed);
    let bootstrap = match args.bootstrap {
        Some(resamples) => {
            let lr_ci = learncurve::bootstrap_ci(&series, model, resamples, args.level, seed)?;
            Some(BootstrapReport {
                resamples,
                level: args.level,
                seed,
                lr_ci,
            })
        }
        None => None,
    };

    let payload = if args.pretty {
        pretty_report(&fit, bootstrap.as_ref())
    } else {
        let report = FitReport { fit, bootstrap };
        serde_json::to_string_pretty(&report)? + "\n"
    };
    emit_text(&payload, args.out.as_deref(), &mut scope)?;
    scope.finish(None)
}

fn pretty_report(fit: &FitResult, bootstrap: Option<&BootstrapReport>) -> String {
    let mut s = String::new();
    s.push_str(&format!("observations:  {}\n", fit.n));
    s.push_str(&format!("c0_hat:        {}\n", num(fit.c0_hat)));
    s.push_str(&format!(
        "b_hat:         {} (se {})\n",
        num(fit.b_hat),
        num(fit.se_b_hat)
    ));
    if let Some(b_lbr) = fit.b_lbr_hat {
        let se = fit.se_b_lbr_hat.map(num).unwrap_or_default();
        s.push_str(&format!("b_lbr_hat:     {} (se {se})\n", num(b_lbr)));
    }
    s.push_str(&format!("lr_hat:        {}\n", num(fit.lr_hat)));
    s.push_str(&format!(
        "lr_ci_normal:  [{}, {}]\n",
        num(fit.lr_ci.0),
        num(fit.lr_ci.1)
    ));
    s.push_str(&format!("r_squared:     {}\n", num(fit.r_squared)));
    if let Some(b) = bootstrap {
        s.push_str(&format!(
            "lr_ci_boot:    [{}, {}] ({} resamples, level {}, seed {})\n",
            num(b.lr_ci.0),
            num(b.lr_ci.1),
            b.resamples,
            num(b.level),
            b.seed
        ));
    }
    s
}
