//! Sectioned key-value configuration: the on-disk format for curve specs and
//! expansion scenarios, plus the packaged example scenarios.
//!
//! The format is deliberately flat so files diff cleanly. Line grammar:
//!
//! - blank lines and full-line `#` comments are ignored;
//! - `[section]` opens a section (dots qualify: `[technology.wind]`);
//! - `key = value` assigns within the current section. Values are numbers,
//!   bare words, or comma-separated numeric lists; `inf` is accepted where a
//!   bound is optional. Unknown or duplicate keys are errors.
//!
//! # Curve files
//!
//! `[curve]` selects a family (default `one_factor`) and its parameters:
//!
//! | family        | keys                                              |
//! |---------------|---------------------------------------------------|
//! | `one_factor`  | `c0`, `x0`, `lr` or `b`                           |
//! | `partial`     | `c0`, `x0`, `lr` or `b`, `alpha`                  |
//! | `two_factor`  | `c0`, `x0`, `lr` or `b`, `y0`, `lbr` or `b_lbr`   |
//! | `diminishing` | `c0`, `x0`, `lr0`, `d`                            |
//! | `staged`      | `c0`, `x0`, plus `[stage.<label>]` sections       |
//! | `composite`   | `[component.<id>]` sections, each `c0,x0,lr|b`    |
//!
//! Stages carry `lr` and `upto_doublings` (omitted on the last stage).
//! Any family accepts the modifier keys `floor_cost` and `threshold_x`.
//!
//! # Scenario files
//!
//! `[scenario]` holds `periods`, `hours_per_period`, `demand` (list),
//! `emission_cap` (list, default uncapped), `discount_rate` (default 0),
//! `mode` (default `endogenous`), and the breakpoint policy as either
//! `pwl_max_rel_error` (default 0.01) or `pwl_per_doubling`.
//!
//! Each `[technology.<name>]` section embeds its curve using the `[curve]`
//! keys above (sub-sections become `[technology.<name>.component.<id>]` /
//! `[technology.<name>.stage.<label>]`) plus the model fields `x0_local`
//! (default: the curve reference), `world_additions` (list, default zero),
//! `var_cost` (default 0), `emission_factor` (default 0), `availability`
//! (default 1), `max_build` (required), and `exo_cost_path` (list).
//! Technology names must not contain dots.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::curves::{
    Component, CompositeSpec, CurveError, DiminishingSpec, LearningSpec, ModifierSpec,
    OneFactorSpec, PartialSpec, Stage, StagedSpec, TwoFactorSpec,
};
use crate::expansion::{ExpansionError, Mode, ScenarioConfig, TechnologySpec};
use crate::pwl::PwlPolicy;

/// Errors for both parsing (with line numbers) and semantic validation.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Curve(#[from] CurveError),
}

impl From<ExpansionError> for ConfigError {
    fn from(e: ExpansionError) -> Self {
        ConfigError::Invalid(e.to_string())
    }
}

/// One `[section]` with its `key = value` entries and source lines.
#[derive(Debug)]
struct Section {
    name: String,
    line: usize,
    entries: Vec<(String, String, usize)>,
}

impl Section {
    fn get(&self, key: &str) -> Option<(&str, usize)> {
        self.entries
            .iter()
            .find(|(k, _, _)| k == key)
            .map(|(_, v, line)| (v.as_str(), *line))
    }
}

fn tokenize(text: &str) -> Result<Vec<Section>, ConfigError> {
    let mut sections: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if let Some(header) = trimmed.strip_prefix('[') {
            let name = header.strip_suffix(']').ok_or_else(|| ConfigError::Parse {
                line,
                msg: format!("unterminated section header {trimmed:?}"),
            })?;
            let name = name.trim();
            if name.is_empty() || name.split('.').any(|part| part.trim().is_empty()) {
                return Err(ConfigError::Parse {
                    line,
                    msg: format!("invalid section name {name:?}"),
                });
            }
            if sections.iter().any(|s| s.name == name) {
                return Err(ConfigError::Parse {
                    line,
                    msg: format!("duplicate section [{name}]"),
                });
            }
            sections.push(Section {
                name: name.to_string(),
                line,
                entries: Vec::new(),
            });
            continue;
        }
        let (key, value) = trimmed.split_once('=').ok_or_else(|| ConfigError::Parse {
            line,
            msg: format!("expected `key = value` or a section header, got {trimmed:?}"),
        })?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() {
            return Err(ConfigError::Parse {
                line,
                msg: "empty key".into(),
            });
        }
        let section = sections.last_mut().ok_or_else(|| ConfigError::Parse {
            line,
            msg: format!("`{key}` appears before any [section] header"),
        })?;
        if section.entries.iter().any(|(k, _, _)| k == key) {
            return Err(ConfigError::Parse {
                line,
                msg: format!("duplicate key `{key}` in [{}]", section.name),
            });
        }
        section
            .entries
            .push((key.to_string(), value.to_string(), line));
    }
    Ok(sections)
}

/// Tracks which keys a builder consumed so leftovers become errors.
struct Reader<'a> {
    section: &'a Section,
    used: BTreeSet<&'a str>,
}

impl<'a> Reader<'a> {
    fn new(section: &'a Section) -> Self {
        Reader {
            section,
            used: BTreeSet::new(),
        }
    }

    fn raw(&mut self, key: &'static str) -> Option<(&'a str, usize)> {
        let found = self.section.get(key);
        if found.is_some() {
            self.used.insert(key);
        }
        found
    }

    fn f64(&mut self, key: &'static str) -> Result<Option<f64>, ConfigError> {
        self.raw(key)
            .map(|(v, line)| parse_f64(v, line))
            .transpose()
    }

    fn require_f64(&mut self, key: &'static str) -> Result<f64, ConfigError> {
        self.f64(key)?.ok_or_else(|| self.missing(key))
    }

    fn usize(&mut self, key: &'static str) -> Result<Option<usize>, ConfigError> {
        self.raw(key)
            .map(|(v, line)| {
                v.parse::<usize>().map_err(|_| ConfigError::Parse {
                    line,
                    msg: format!("`{key}` must be a non-negative integer, got {v:?}"),
                })
            })
            .transpose()
    }

    fn list(&mut self, key: &'static str) -> Result<Option<Vec<f64>>, ConfigError> {
        self.raw(key)
            .map(|(v, line)| {
                v.split(',')
                    .map(|item| parse_f64(item.trim(), line))
                    .collect()
            })
            .transpose()
    }

    fn word(&mut self, key: &'static str) -> Option<(&'a str, usize)> {
        self.raw(key)
    }

    fn missing(&self, key: &str) -> ConfigError {
        ConfigError::Parse {
            line: self.section.line,
            msg: format!("[{}] is missing required key `{key}`", self.section.name),
        }
    }

    /// Errors on the first key no builder asked for.
    fn finish(self) -> Result<(), ConfigError> {
        check_unknown(self.section, &self.used)
    }
}

fn check_unknown(section: &Section, used: &BTreeSet<&str>) -> Result<(), ConfigError> {
    for (key, _, line) in &section.entries {
        if !used.contains(key.as_str()) {
            return Err(ConfigError::Parse {
                line: *line,
                msg: format!("unknown key `{key}` in [{}]", section.name),
            });
        }
    }
    Ok(())
}

fn parse_f64(value: &str, line: usize) -> Result<f64, ConfigError> {
    match value {
        "inf" | "+inf" => return Ok(f64::INFINITY),
        "-inf" => return Ok(f64::NEG_INFINITY),
        _ => {}
    }
    value.parse::<f64>().map_err(|_| ConfigError::Parse {
        line,
        msg: format!("expected a number, got {value:?}"),
    })
}

/// `lr` and `b` are alternative spellings of the learning exponent; exactly
/// one must be present.
fn exponent_from(reader: &mut Reader<'_>) -> Result<f64, ConfigError> {
    let lr = reader.f64("lr")?;
    let b = reader.f64("b")?;
    match (lr, b) {
        (Some(lr), None) => Ok(crate::curves::lr_to_exponent(lr)?),
        (None, Some(b)) => Ok(b),
        (Some(_), Some(_)) => Err(ConfigError::Parse {
            line: reader.section.line,
            msg: format!("[{}] sets both `lr` and `b`; pick one", reader.section.name),
        }),
        (None, None) => Err(reader.missing("lr` or `b")),
    }
}

/// Builds a curve from a main section plus its qualified sub-sections.
/// `prefix` is `""` for standalone curve files and `technology.<name>.` when
/// embedded in a scenario. Returns the spec together with the set of main
/// section keys it consumed, so callers sharing that section (technology
/// parsing) can run one combined unknown-key check.
fn curve_from_sections<'a>(
    main: &'a Section,
    all: &[Section],
    prefix: &str,
) -> Result<(LearningSpec, BTreeSet<&'a str>), ConfigError> {
    let mut reader = Reader::new(main);
    let family = reader.word("family").map(|(v, _)| v).unwrap_or("one_factor");
    let floor_cost = reader.f64("floor_cost")?;
    let threshold_x = reader.f64("threshold_x")?;

    let component_prefix = format!("{prefix}component.");
    let stage_prefix = format!("{prefix}stage.");
    let components: Vec<&Section> = all
        .iter()
        .filter(|s| s.name.starts_with(&component_prefix))
        .collect();
    let stages: Vec<&Section> = all
        .iter()
        .filter(|s| s.name.starts_with(&stage_prefix))
        .collect();
    if family != "composite" {
        if let Some(s) = components.first() {
            return Err(ConfigError::Parse {
                line: s.line,
                msg: format!("[{}] requires family = composite", s.name),
            });
        }
    }
    if family != "staged" {
        if let Some(s) = stages.first() {
            return Err(ConfigError::Parse {
                line: s.line,
                msg: format!("[{}] requires family = staged", s.name),
            });
        }
    }

    let inner = match family {
        "one_factor" => {
            let c0 = reader.require_f64("c0")?;
            let x0 = reader.require_f64("x0")?;
            let b = exponent_from(&mut reader)?;
            LearningSpec::OneFactor(OneFactorSpec::new(c0, x0, b)?)
        }
        "partial" => {
            let c0 = reader.require_f64("c0")?;
            let x0 = reader.require_f64("x0")?;
            let b = exponent_from(&mut reader)?;
            let alpha = reader.require_f64("alpha")?;
            LearningSpec::Partial(PartialSpec::new(c0, x0, b, alpha)?)
        }
        "two_factor" => {
            let c0 = reader.require_f64("c0")?;
            let x0 = reader.require_f64("x0")?;
            let b = exponent_from(&mut reader)?;
            let y0 = reader.require_f64("y0")?;
            let b_lbr = match (reader.f64("lbr")?, reader.f64("b_lbr")?) {
                (Some(lbr), None) => crate::curves::lr_to_exponent(lbr)?,
                (None, Some(b)) => b,
                (Some(_), Some(_)) => {
                    return Err(ConfigError::Parse {
                        line: main.line,
                        msg: format!("[{}] sets both `lbr` and `b_lbr`; pick one", main.name),
                    })
                }
                (None, None) => return Err(reader.missing("lbr` or `b_lbr")),
            };
            LearningSpec::TwoFactor(TwoFactorSpec::new(c0, x0, b, y0, b_lbr)?)
        }
        "diminishing" => {
            let c0 = reader.require_f64("c0")?;
            let x0 = reader.require_f64("x0")?;
            let lr0 = reader.require_f64("lr0")?;
            let d = reader.require_f64("d")?;
            LearningSpec::Diminishing(DiminishingSpec::new(c0, x0, lr0, d)?)
        }
        "staged" => {
            let c0 = reader.require_f64("c0")?;
            let x0 = reader.require_f64("x0")?;
            if stages.is_empty() {
                return Err(ConfigError::Parse {
                    line: main.line,
                    msg: format!("staged curve needs at least one [{stage_prefix}<label>]"),
                });
            }
            let mut parsed = Vec::with_capacity(stages.len());
            for (i, section) in stages.iter().enumerate() {
                let mut sr = Reader::new(section);
                let lr = sr.require_f64("lr")?;
                let upto_doublings = sr.f64("upto_doublings")?;
                sr.finish()?;
                if upto_doublings.is_none() && i + 1 != stages.len() {
                    return Err(ConfigError::Parse {
                        line: section.line,
                        msg: format!(
                            "[{}] omits `upto_doublings` but is not the last stage",
                            section.name
                        ),
                    });
                }
                parsed.push(Stage {
                    upto_doublings,
                    lr,
                });
            }
            LearningSpec::Staged(StagedSpec::new(c0, x0, parsed)?)
        }
        "composite" => {
            if components.is_empty() {
                return Err(ConfigError::Parse {
                    line: main.line,
                    msg: format!("composite curve needs at least one [{component_prefix}<id>]"),
                });
            }
            let mut parsed = Vec::with_capacity(components.len());
            for section in &components {
                let id = &section.name[component_prefix.len()..];
                let mut cr = Reader::new(section);
                let c0 = cr.require_f64("c0")?;
                let x0 = cr.require_f64("x0")?;
                let b = exponent_from(&mut cr)?;
                cr.finish()?;
                parsed.push(Component::new(id, c0, x0, b)?);
            }
            LearningSpec::Composite(CompositeSpec::new(parsed)?)
        }
        other => {
            return Err(ConfigError::Parse {
                line: main.line,
                msg: format!("unknown curve family {other:?}"),
            })
        }
    };
    let spec = if floor_cost.is_some() || threshold_x.is_some() {
        LearningSpec::Modified(ModifierSpec::new(inner, floor_cost, threshold_x)?)
    } else {
        inner
    };
    Ok((spec, reader.used))
}

/// Parses a standalone curve file (a `[curve]` section plus any
/// `[component.*]` / `[stage.*]` sub-sections).
pub fn parse_curve_config(text: &str) -> Result<LearningSpec, ConfigError> {
    let sections = tokenize(text)?;
    let main = sections
        .iter()
        .find(|s| s.name == "curve")
        .ok_or_else(|| ConfigError::Invalid("no [curve] section found".into()))?;
    for section in &sections {
        let known = section.name == "curve"
            || section.name.starts_with("component.")
            || section.name.starts_with("stage.");
        if !known {
            return Err(ConfigError::Parse {
                line: section.line,
                msg: format!("unexpected section [{}] in a curve file", section.name),
            });
        }
    }
    let (spec, used) = curve_from_sections(main, &sections, "")?;
    check_unknown(main, &used)?;
    Ok(spec)
}

/// Parses a scenario file (`[scenario]` plus `[technology.<name>]`
/// sections). The result is fully validated.
pub fn parse_scenario_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let sections = tokenize(text)?;
    let main = sections
        .iter()
        .find(|s| s.name == "scenario")
        .ok_or_else(|| ConfigError::Invalid("no [scenario] section found".into()))?;

    let mut reader = Reader::new(main);
    let periods = reader
        .usize("periods")?
        .ok_or_else(|| reader.missing("periods"))?;
    let hours_per_period = reader.require_f64("hours_per_period")?;
    let demand = reader
        .list("demand")?
        .ok_or_else(|| reader.missing("demand"))?;
    let emission_cap = reader
        .list("emission_cap")?
        .unwrap_or_else(|| vec![f64::INFINITY; periods]);
    let discount_rate = reader.f64("discount_rate")?.unwrap_or(0.0);
    let mode = match reader.word("mode") {
        None => Mode::Endogenous,
        Some((value, line)) => value
            .parse()
            .map_err(|msg: String| ConfigError::Parse { line, msg })?,
    };
    let pwl_policy = match (
        reader.f64("pwl_max_rel_error")?,
        reader.usize("pwl_per_doubling")?,
    ) {
        (Some(_), Some(_)) => {
            return Err(ConfigError::Parse {
                line: main.line,
                msg: "[scenario] sets both pwl_max_rel_error and pwl_per_doubling; pick one"
                    .into(),
            })
        }
        (Some(epsilon), None) => PwlPolicy::MaxRelError { epsilon },
        (None, Some(count)) => PwlPolicy::PerDoubling {
            count: count as u32,
        },
        (None, None) => PwlPolicy::MaxRelError { epsilon: 0.01 },
    };
    reader.finish()?;

    let mut technologies = Vec::new();
    for section in &sections {
        let Some(rest) = section.name.strip_prefix("technology.") else {
            continue;
        };
        if rest.contains('.') {
            // A curve sub-section of some technology, handled with its owner.
            continue;
        }
        let name = rest.to_string();
        let prefix = format!("technology.{name}.");
        let (learning, curve_keys) = curve_from_sections(section, &sections, &prefix)?;

        let mut tr = Reader::new(section);
        tr.used = curve_keys;
        let x0_local = tr
            .f64("x0_local")?
            .unwrap_or_else(|| learning.reference_experience());
        let world_additions = tr.list("world_additions")?.unwrap_or_default();
        let var_cost = tr.f64("var_cost")?.unwrap_or(0.0);
        let emission_factor = tr.f64("emission_factor")?.unwrap_or(0.0);
        let availability = tr.f64("availability")?.unwrap_or(1.0);
        let max_build = tr.require_f64("max_build")?;
        let exo_cost_path = tr.list("exo_cost_path")?;
        tr.finish()?;

        technologies.push(TechnologySpec {
            name,
            learning,
            x0_local,
            world_additions,
            var_cost,
            emission_factor,
            availability,
            max_build,
            exo_cost_path,
        });
    }

    for section in &sections {
        let known =
            section.name == "scenario" || section.name.starts_with("technology.");
        if !known {
            return Err(ConfigError::Parse {
                line: section.line,
                msg: format!("unexpected section [{}] in a scenario file", section.name),
            });
        }
        // Sub-sections must be curve blocks of an existing technology.
        if let Some(rest) = section.name.strip_prefix("technology.") {
            if let Some((owner, sub)) = rest.split_once('.') {
                if !technologies.iter().any(|t| t.name == owner) {
                    return Err(ConfigError::Parse {
                        line: section.line,
                        msg: format!("[{}] has no [technology.{owner}] section", section.name),
                    });
                }
                if !(sub.starts_with("component.") || sub.starts_with("stage.")) {
                    return Err(ConfigError::Parse {
                        line: section.line,
                        msg: format!(
                            "[{}] is not a component or stage sub-section",
                            section.name
                        ),
                    });
                }
            }
        }
    }

    let config = ScenarioConfig {
        technologies,
        periods,
        hours_per_period,
        demand,
        emission_cap,
        discount_rate,
        mode,
        pwl_policy,
    };
    config.validate()?;
    Ok(config)
}

/// Renders a curve back to the config format; parsing the result
/// reconstructs an identical spec. Exponents are written as `b` (exact)
/// rather than `lr`.
pub fn write_curve_config(spec: &LearningSpec) -> Result<String, ConfigError> {
    let mut out = String::from("[curve]\n");
    write_curve_body(spec, &mut out, "")?;
    Ok(out)
}

fn write_curve_body(
    spec: &LearningSpec,
    out: &mut String,
    prefix: &str,
) -> Result<(), ConfigError> {
    match spec {
        LearningSpec::OneFactor(s) => {
            let _ = writeln!(out, "family = one_factor");
            let _ = writeln!(out, "c0 = {}", s.c0());
            let _ = writeln!(out, "x0 = {}", s.x0());
            let _ = writeln!(out, "b = {}", s.b_lbd());
        }
        LearningSpec::Partial(s) => {
            let _ = writeln!(out, "family = partial");
            let _ = writeln!(out, "c0 = {}", s.c0());
            let _ = writeln!(out, "x0 = {}", s.x0());
            let _ = writeln!(out, "b = {}", s.b_lbd());
            let _ = writeln!(out, "alpha = {}", s.alpha());
        }
        LearningSpec::TwoFactor(s) => {
            let _ = writeln!(out, "family = two_factor");
            let _ = writeln!(out, "c0 = {}", s.c0());
            let _ = writeln!(out, "x0 = {}", s.x0());
            let _ = writeln!(out, "b = {}", s.b_lbd());
            let _ = writeln!(out, "y0 = {}", s.y0());
            let _ = writeln!(out, "b_lbr = {}", s.b_lbr());
        }
        LearningSpec::Diminishing(s) => {
            let _ = writeln!(out, "family = diminishing");
            let _ = writeln!(out, "c0 = {}", s.c0());
            let _ = writeln!(out, "x0 = {}", s.x0());
            let _ = writeln!(out, "lr0 = {}", s.lr0());
            let _ = writeln!(out, "d = {}", s.d());
        }
        LearningSpec::Staged(s) => {
            let _ = writeln!(out, "family = staged");
            let _ = writeln!(out, "c0 = {}", s.c0());
            let _ = writeln!(out, "x0 = {}", s.x0());
            for (i, stage) in s.stages().iter().enumerate() {
                let _ = writeln!(out, "\n[{prefix}stage.{}]", i + 1);
                let _ = writeln!(out, "lr = {}", stage.lr);
                if let Some(u) = stage.upto_doublings {
                    let _ = writeln!(out, "upto_doublings = {u}");
                }
            }
        }
        LearningSpec::Composite(s) => {
            let _ = writeln!(out, "family = composite");
            for c in s.components() {
                let _ = writeln!(out, "\n[{prefix}component.{}]", c.id);
                let _ = writeln!(out, "c0 = {}", c.c0);
                let _ = writeln!(out, "x0 = {}", c.x0);
                let _ = writeln!(out, "b = {}", c.b_lbd);
            }
        }
        LearningSpec::Modified(m) => {
            if matches!(m.inner(), LearningSpec::Modified(_)) {
                return Err(ConfigError::Invalid(
                    "nested modifiers cannot be written to the config format".into(),
                ));
            }
            // Modifier keys belong to the main section, so they must be
            // written before any sub-section the inner curve opens.
            let mut body = String::new();
            write_curve_body(m.inner(), &mut body, prefix)?;
            let mut modifier = String::new();
            if let Some(f) = m.floor_cost() {
                let _ = writeln!(modifier, "floor_cost = {f}");
            }
            if let Some(t) = m.threshold_x() {
                let _ = writeln!(modifier, "threshold_x = {t}");
            }
            match body.find("\n[") {
                Some(split) => {
                    out.push_str(&body[..=split]);
                    out.push_str(&modifier);
                    out.push_str(&body[split + 1..]);
                }
                None => {
                    out.push_str(&body);
                    out.push_str(&modifier);
                }
            }
        }
    }
    Ok(())
}

fn write_list(out: &mut String, key: &str, values: &[f64]) {
    let items: Vec<String> = values.iter().map(|v| fmt_cfg_num(*v)).collect();
    let _ = writeln!(out, "{key} = {}", items.join(", "));
}

fn fmt_cfg_num(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

/// Renders a scenario back to the config format; parsing the result
/// reconstructs an identical configuration.
pub fn write_scenario_config(config: &ScenarioConfig) -> Result<String, ConfigError> {
    let mut out = String::from("[scenario]\n");
    let _ = writeln!(out, "periods = {}", config.periods);
    let _ = writeln!(out, "hours_per_period = {}", config.hours_per_period);
    write_list(&mut out, "demand", &config.demand);
    if config.emission_cap.iter().any(|c| c.is_finite()) {
        write_list(&mut out, "emission_cap", &config.emission_cap);
    }
    let _ = writeln!(out, "discount_rate = {}", config.discount_rate);
    let mode = match config.mode {
        Mode::Endogenous => "endogenous",
        Mode::Exogenous => "exogenous",
    };
    let _ = writeln!(out, "mode = {mode}");
    match config.pwl_policy {
        PwlPolicy::MaxRelError { epsilon } => {
            let _ = writeln!(out, "pwl_max_rel_error = {epsilon}");
        }
        PwlPolicy::PerDoubling { count } => {
            let _ = writeln!(out, "pwl_per_doubling = {count}");
        }
    }
    for tech in &config.technologies {
        if tech.name.contains('.') {
            return Err(ConfigError::Invalid(format!(
                "technology name {:?} contains a dot and cannot be written",
                tech.name
            )));
        }
        let _ = writeln!(out, "\n[technology.{}]", tech.name);
        let prefix = format!("technology.{}.", tech.name);
        let mut body = String::new();
        write_curve_body(&tech.learning, &mut body, &prefix)?;
        let mut fields = String::new();
        let _ = writeln!(fields, "x0_local = {}", fmt_cfg_num(tech.x0_local));
        if !tech.world_additions.is_empty() {
            write_list(&mut fields, "world_additions", &tech.world_additions);
        }
        let _ = writeln!(fields, "var_cost = {}", fmt_cfg_num(tech.var_cost));
        if tech.emission_factor != 0.0 {
            let _ = writeln!(
                fields,
                "emission_factor = {}",
                fmt_cfg_num(tech.emission_factor)
            );
        }
        let _ = writeln!(fields, "availability = {}", fmt_cfg_num(tech.availability));
        let _ = writeln!(fields, "max_build = {}", fmt_cfg_num(tech.max_build));
        if let Some(path) = &tech.exo_cost_path {
            write_list(&mut fields, "exo_cost_path", path);
        }
        // Model fields share the technology's main section with the curve
        // keys, so they go before any curve sub-section.
        match body.find("\n[") {
            Some(split) => {
                out.push_str(&body[..=split]);
                out.push_str(&fields);
                out.push_str(&body[split + 1..]);
            }
            None => {
                out.push_str(&body);
                out.push_str(&fields);
            }
        }
    }
    Ok(out)
}

/// Names of the scenarios compiled into the library.
pub fn packaged_scenario_names() -> &'static [&'static str] {
    &["demo", "learner_vs_incumbent", "speed_demo"]
}

/// Raw config text of a packaged scenario.
pub fn packaged_scenario_text(name: &str) -> Option<&'static str> {
    match name {
        "demo" => Some(include_str!(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../data/scenarios/demo.cfg"
        ))),
        "learner_vs_incumbent" => Some(include_str!(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../data/scenarios/learner_vs_incumbent.cfg"
        ))),
        "speed_demo" => Some(include_str!(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../data/scenarios/speed_demo.cfg"
        ))),
        _ => None,
    }
}

/// Parses a packaged scenario by name.
pub fn packaged_scenario(name: &str) -> Result<ScenarioConfig, ConfigError> {
    let text = packaged_scenario_text(name).ok_or_else(|| {
        ConfigError::Invalid(format!(
            "no packaged scenario named {name:?}; available: {}",
            packaged_scenario_names().join(", ")
        ))
    })?;
    parse_scenario_config(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn parses_minimal_one_factor_curve() {
        let spec = parse_curve_config("[curve]\nc0 = 100\nx0 = 1\nlr = 0.2\n").unwrap();
        assert_relative_eq!(spec.unit_cost(2.0).unwrap(), 80.0, epsilon = 1e-12);
        assert_eq!(spec.variant_name(), "one_factor");
    }

    #[test]
    fn exponent_and_rate_are_exclusive() {
        let err =
            parse_curve_config("[curve]\nc0 = 1\nx0 = 1\nlr = 0.2\nb = -0.3\n").unwrap_err();
        assert!(err.to_string().contains("pick one"), "{err}");
        let err = parse_curve_config("[curve]\nc0 = 1\nx0 = 1\n").unwrap_err();
        assert!(err.to_string().contains("lr"), "{err}");
    }

    #[test]
    fn parses_every_family() {
        let partial =
            parse_curve_config("[curve]\nfamily = partial\nc0 = 10\nx0 = 2\nlr = 0.3\nalpha = 0.6\n")
                .unwrap();
        assert_eq!(partial.variant_name(), "partial");

        let two = parse_curve_config(
            "[curve]\nfamily = two_factor\nc0 = 10\nx0 = 2\nb = -0.3\ny0 = 1\nlbr = 0.1\n",
        )
        .unwrap();
        assert_eq!(two.variant_name(), "two_factor");

        let dim = parse_curve_config(
            "[curve]\nfamily = diminishing\nc0 = 10\nx0 = 2\nlr0 = 0.25\nd = 0.1\n",
        )
        .unwrap();
        assert_eq!(dim.variant_name(), "diminishing");

        let staged = parse_curve_config(
            "[curve]\nfamily = staged\nc0 = 10\nx0 = 2\n\
             [stage.fast]\nlr = 0.3\nupto_doublings = 3\n\
             [stage.slow]\nlr = 0.1\n",
        )
        .unwrap();
        assert_eq!(staged.variant_name(), "staged");

        let composite = parse_curve_config(
            "[curve]\nfamily = composite\n\
             [component.cell]\nc0 = 60\nx0 = 10\nlr = 0.2\n\
             [component.rest]\nc0 = 40\nx0 = 10\nlr = 0.05\n",
        )
        .unwrap();
        assert_eq!(composite.variant_name(), "composite");
        assert_relative_eq!(composite.unit_cost(10.0).unwrap(), 100.0, epsilon = 1e-12);

        let modified = parse_curve_config(
            "[curve]\nc0 = 100\nx0 = 1\nlr = 0.2\nfloor_cost = 30\n",
        )
        .unwrap();
        assert_eq!(modified.variant_name(), "modified");
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let err = parse_curve_config("[curve]\nc0 = 100\nwhat is this\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 3, .. }), "{err}");

        let err = parse_curve_config("c0 = 1\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 1, .. }), "{err}");

        let err = parse_curve_config("[curve]\nc0 = 1\nc0 = 2\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 3, .. }), "{err}");

        let err = parse_curve_config("[curve]\nc0 = one hundred\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn unknown_keys_and_sections_are_rejected() {
        let err = parse_curve_config("[curve]\nc0 = 1\nx0 = 1\nlr = 0.2\ntypo = 5\n").unwrap_err();
        assert!(err.to_string().contains("unknown key `typo`"), "{err}");

        let err = parse_curve_config("[curve]\nc0=1\nx0=1\nlr=0.2\n[weird]\na=1\n").unwrap_err();
        assert!(err.to_string().contains("unexpected section"), "{err}");
    }

    #[test]
    fn curve_round_trips_through_writer() {
        let texts = [
            "[curve]\nc0 = 100\nx0 = 7\nlr = 0.23\n",
            "[curve]\nfamily = partial\nc0 = 3\nx0 = 2\nb = -0.4\nalpha = 0.7\n",
            "[curve]\nfamily = diminishing\nc0 = 10\nx0 = 2\nlr0 = 0.25\nd = 0.08\n",
            "[curve]\nfamily = staged\nc0 = 10\nx0 = 2\n\
             [stage.a]\nlr = 0.3\nupto_doublings = 3\n[stage.b]\nlr = 0.1\n",
            "[curve]\nfamily = composite\nthreshold_x = 15\n\
             [component.cell]\nc0 = 60\nx0 = 10\nlr = 0.2\n\
             [component.rest]\nc0 = 40\nx0 = 10\nlr = 0.05\n",
        ];
        for text in texts {
            let spec = parse_curve_config(text).unwrap();
            let written = write_curve_config(&spec).unwrap();
            let reparsed = parse_curve_config(&written).unwrap();
            assert_eq!(spec, reparsed, "round trip failed for:\n{written}");
        }
    }

    #[test]
    fn scenario_round_trips_through_writer() {
        let config = packaged_scenario("learner_vs_incumbent").unwrap();
        let written = write_scenario_config(&config).unwrap();
        let reparsed = parse_scenario_config(&written).unwrap();
        assert_eq!(config.periods, reparsed.periods);
        assert_eq!(config.demand, reparsed.demand);
        assert_eq!(config.emission_cap, reparsed.emission_cap);
        assert_eq!(config.technologies.len(), reparsed.technologies.len());
        for (a, b) in config.technologies.iter().zip(&reparsed.technologies) {
            assert_eq!(a.name, b.name);
            assert_eq!(a.learning, b.learning);
            assert_eq!(a.x0_local, b.x0_local);
            assert_eq!(a.exo_cost_path, b.exo_cost_path);
        }
    }

    #[test]
    fn packaged_scenarios_parse_and_validate() {
        for name in packaged_scenario_names() {
            let config = packaged_scenario(name).unwrap();
            assert!(!config.technologies.is_empty(), "{name}");
            assert!(config.periods >= 3, "{name}");
        }
        assert!(packaged_scenario("nope").is_err());
    }

    #[test]
    fn scenario_defaults_fill_in() {
        let text = "\
[scenario]
periods = 2
hours_per_period = 100
demand = 50, 60

[technology.solar]
c0 = 10
x0 = 1
lr = 0.2
max_build = 5
";
        let config = parse_scenario_config(text).unwrap();
        assert_eq!(config.mode, Mode::Endogenous);
        assert_eq!(config.discount_rate, 0.0);
        assert!(config.emission_cap.iter().all(|c| c.is_infinite()));
        let tech = &config.technologies[0];
        assert_eq!(tech.x0_local, 1.0);
        assert_eq!(tech.availability, 1.0);
        assert_eq!(tech.var_cost, 0.0);
        assert!(tech.world_additions.is_empty());
        assert!(matches!(
            config.pwl_policy,
            PwlPolicy::MaxRelError { epsilon } if epsilon == 0.01
        ));
    }

    #[test]
    fn scenario_validation_failures_surface() {
        // Demand list shorter than periods.
        let text = "\
[scenario]
periods = 3
hours_per_period = 100
demand = 50, 60

[technology.solar]
c0 = 10
x0 = 1
lr = 0.2
max_build = 5
";
        let err = parse_scenario_config(text).unwrap_err();
        assert!(err.to_string().contains("demand"), "{err}");
    }

    #[test]
    fn embedded_composite_technology_parses() {
        let text = "\
[scenario]
periods = 1
hours_per_period = 100
demand = 10

[technology.stack]
family = composite
max_build = 5
var_cost = 1

[technology.stack.component.cell]
c0 = 60
x0 = 10
lr = 0.2

[technology.stack.component.rest]
c0 = 40
x0 = 10
lr = 0.05
";
        let config = parse_scenario_config(text).unwrap();
        assert_eq!(config.technologies[0].learning.variant_name(), "composite");
        assert_eq!(config.technologies[0].x0_local, 10.0);
    }

    #[test]
    fn orphaned_subsection_is_rejected() {
        let text = "\
[scenario]
periods = 1
hours_per_period = 100
demand = 10

[technology.a]
c0 = 10
x0 = 1
lr = 0.2
max_build = 5

[technology.ghost.component.x]
c0 = 1
x0 = 1
lr = 0.1
";
        let err = parse_scenario_config(text).unwrap_err();
        assert!(err.to_string().contains("ghost"), "{err}");
    }
}
