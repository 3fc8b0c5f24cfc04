//! Plain-text export of programs in the widely readable LP file format, so
//! any external solver can cross-check results.
//!
//! Grammar emitted (a strict subset of the common LP format):
//!
//! ```text
//! Minimize | Maximize
//!  obj: <term> {+|- <term>}*
//! Subject To
//!  <name>: <term> {+|- <term>}* <=|=|>= <number>
//! Bounds
//!  <number> <= x<j> <= <number>   (only bounds differing from [0, +inf))
//!  x<j> free | x<j> = <number> | x<j> >= <number> | x<j> <= <number>
//!  -inf <= x<j> <= <number>
//! Binaries
//!  x<j> ...
//! End
//! ```
//!
//! Every term carries an explicit coefficient (`3 x0`, `-0.5 x2`); variables
//! are named `x0..x{n-1}`. Duplicate indices within a row are summed before
//! writing. Numbers use Rust's shortest round-trip decimal formatting, which
//! never loses precision. Row names are sanitized to `[A-Za-z0-9_]` and
//! fall back to `r<i>`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{LinearProgram, MilpProblem, Relation, Sense};

/// Maximum line length before a soft wrap inside term sequences.
const WRAP_COLUMN: usize = 180;

/// Renders a program (with an optional binary section) as LP-format text.
pub fn write_lp_format(lp: &LinearProgram, binary_vars: &[usize]) -> String {
    let mut out = String::new();
    out.push_str(match lp.sense() {
        Sense::Minimize => "Minimize\n",
        Sense::Maximize => "Maximize\n",
    });
    let objective: Vec<(usize, f64)> = lp
        .objective()
        .iter()
        .enumerate()
        .filter(|(_, &c)| c != 0.0)
        .map(|(j, &c)| (j, c))
        .collect();
    out.push(' ');
    out.push_str("obj:");
    push_terms(&mut out, &objective, lp.n_vars());
    out.push('\n');

    out.push_str("Subject To\n");
    for (i, row) in lp.rows().iter().enumerate() {
        let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
        for &(var, coef) in &row.coeffs {
            *merged.entry(var).or_insert(0.0) += coef;
        }
        let terms: Vec<(usize, f64)> = merged.into_iter().filter(|&(_, c)| c != 0.0).collect();
        let name = row
            .name
            .as_deref()
            .map(sanitize_name)
            .unwrap_or_else(|| format!("r{i}"));
        let _ = write!(out, " {name}:");
        push_terms(&mut out, &terms, lp.n_vars());
        let rel = match row.relation {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        };
        let _ = write!(out, " {rel} {}", fmt_num(row.rhs));
        out.push('\n');
    }

    let mut bounds_lines = Vec::new();
    for j in 0..lp.n_vars() {
        let (lo, hi) = (lp.lower()[j], lp.upper()[j]);
        if lo == 0.0 && hi == f64::INFINITY {
            continue;
        }
        let line = if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
            format!(" x{j} free")
        } else if lo == hi {
            format!(" x{j} = {}", fmt_num(lo))
        } else if lo == f64::NEG_INFINITY {
            format!(" -inf <= x{j} <= {}", fmt_num(hi))
        } else if hi == f64::INFINITY {
            format!(" x{j} >= {}", fmt_num(lo))
        } else {
            format!(" {} <= x{j} <= {}", fmt_num(lo), fmt_num(hi))
        };
        bounds_lines.push(line);
    }
    if !bounds_lines.is_empty() {
        out.push_str("Bounds\n");
        for line in bounds_lines {
            out.push_str(&line);
            out.push('\n');
        }
    }

    if !binary_vars.is_empty() {
        out.push_str("Binaries\n");
        let mut line = String::from(" ");
        for (k, &v) in binary_vars.iter().enumerate() {
            if k > 0 && line.len() > WRAP_COLUMN {
                out.push_str(line.trim_end());
                out.push('\n');
                line = String::from(" ");
            }
            let _ = write!(line, "x{v} ");
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out.push_str("End\n");
    out
}

impl MilpProblem {
    /// LP-format text for this problem, binaries included.
    pub fn to_lp_format(&self) -> String {
        write_lp_format(&self.lp, self.binary_vars())
    }
}

/// Appends ` c x<j>` terms with explicit signs, wrapping long sequences.
/// An empty term list renders as `0 x0` so the line stays parseable.
fn push_terms(out: &mut String, terms: &[(usize, f64)], n_vars: usize) {
    if terms.is_empty() {
        if n_vars > 0 {
            out.push_str(" 0 x0");
        }
        return;
    }
    let mut line_len = out.len() - out.rfind('\n').map_or(0, |p| p + 1);
    for (k, &(var, coef)) in terms.iter().enumerate() {
        let piece = if k == 0 {
            format!(" {} x{var}", fmt_num(coef))
        } else if coef < 0.0 {
            format!(" - {} x{var}", fmt_num(-coef))
        } else {
            format!(" + {} x{var}", fmt_num(coef))
        };
        if line_len + piece.len() > WRAP_COLUMN && k > 0 {
            out.push_str("\n ");
            line_len = 1;
        }
        out.push_str(&piece);
        line_len += piece.len();
    }
}

fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v}")
    }
}

/// Keeps `[A-Za-z0-9_]`, replaces the rest, and forces an alphabetic-safe
/// first character.
fn sanitize_name(name: &str) -> String {
    let mut s: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    let needs_prefix = match s.chars().next() {
        None => true,
        Some(c) if c.is_ascii_digit() || c == '.' => true,
        Some('e') | Some('E') => s.chars().nth(1).is_some_and(|c| c.is_ascii_digit()),
        _ => false,
    };
    if needs_prefix {
        s.insert_str(0, "c_");
    }
    s
}
