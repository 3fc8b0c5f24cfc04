//! Command implementations plus the plumbing they share.

pub mod compare;
pub mod curve;
pub mod data;
pub mod fit;
pub mod optimize;
pub mod sweep;

use std::path::Path;

use learncurve::ScenarioConfig;

use crate::failure::Failure;
use crate::manifest::ManifestScope;

/// Prefix selecting a scenario compiled into the binary.
const PACKAGED_PREFIX: &str = "packaged:";

/// Writes a finished payload to `--out` (recording it in the manifest) or
/// to stdout.
pub fn emit_text(payload: &str, out: Option<&Path>, scope: &mut ManifestScope) -> Result<(), Failure> {
    match out {
        Some(path) => {
            std::fs::write(path, payload)?;
            scope.record_output(path);
        }
        None => print!("{payload}"),
    }
    Ok(())
}

/// Loads a scenario from a config path or a `packaged:<name>` reference,
/// folding the config text into the run digest.
pub fn load_scenario(arg: &str, scope: &mut ManifestScope) -> Result<ScenarioConfig, Failure> {
    let text = match arg.strip_prefix(PACKAGED_PREFIX) {
        Some(name) => learncurve::packaged_scenario_text(name)
            .ok_or_else(|| {
                Failure::Data(format!(
                    "unknown packaged scenario {name:?}; available: {}",
                    learncurve::packaged_scenario_names().join(", ")
                ))
            })?
            .to_string(),
        None => std::fs::read_to_string(arg)
            .map_err(|e| Failure::Data(format!("cannot read scenario {arg:?}: {e}")))?,
    };
    scope.add_input(text.as_bytes());
    Ok(learncurve::parse_scenario_config(&text)?)
}

/// Renders one f64 with full round-trip precision.
pub fn num(v: f64) -> String {
    format!("{v}")
}

/// Fixed-width cell for human tables.
pub fn cell(v: f64) -> String {
    format!("{v:.6}")
}
