//! Piecewise-linear approximation of cumulative cost curves.
//!
//! The expansion MILP cannot carry C(x) = c0 (x/x0)^b directly; it consumes
//! chords of the cumulative cost F(x) = ∫ C instead, which sidesteps the
//! bilinear unit-cost-times-build terms. For learning curves F is concave, so
//! every chord underestimates F and the linearised model is optimistic by a
//! controlled margin.
//!
//! Breakpoints are spaced geometrically (learning lives in log2 x): either a
//! fixed count per doubling, or adaptive bisection until the probed relative
//! error of every chord is within a target. Regime kinks (stage boundaries,
//! pre-commercial thresholds, floor crossovers) are pinned as breakpoints by
//! the adaptive policy so no chord straddles a slope discontinuity.

use serde::Serialize;
use thiserror::Error;

use crate::curves::{CurveError, LearningSpec};

/// Breakpoint cap for the adaptive policy; beyond this the requested
/// tolerance is considered unreasonable for a MILP-bound approximation.
const MAX_BREAKPOINTS: usize = 65_536;

/// Fraction of the error budget the adaptive splitter actually spends;
/// the slack absorbs the gap between probed and true segment maxima so
/// dense-grid scans still meet the nominal tolerance.
const SPLIT_SAFETY: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PwlError {
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error("invalid approximation policy: {0}")]
    InvalidPolicy(String),
    #[error("x_max {x_max} must exceed the curve reference {x0}")]
    RangeEmpty { x_max: f64, x0: f64 },
    #[error("x = {x} is outside the approximated range [{lo}, {hi}]")]
    OutOfRange { x: f64, lo: f64, hi: f64 },
    #[error("tolerance needs more than {MAX_BREAKPOINTS} breakpoints")]
    TooManyBreakpoints,
    #[error("error grid needs at least 2 points, got {0}")]
    InvalidGrid(usize),
}

/// Breakpoint-placement policy for [`build_breakpoints`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PwlPolicy {
    /// `count` geometrically spaced breakpoints per doubling of experience.
    PerDoubling { count: u32 },
    /// Bisect segments until every chord's probed relative error vs the exact
    /// cumulative cost is within `epsilon`.
    MaxRelError { epsilon: f64 },
}

/// A piecewise-linear underestimator of a curve's cumulative cost.
///
/// `values[0] = 0` at the curve reference; slopes are the per-segment
/// incremental unit costs and decrease strictly wherever the curve learns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PwlApprox {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl PwlApprox {
    /// Strictly increasing experience grid x_0 < … < x_K.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }
    /// Exact cumulative cost at each breakpoint.
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    /// Chord slope of each of the K segments.
    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }
    pub fn segment_count(&self) -> usize {
        self.slopes.len()
    }
    pub fn x_min(&self) -> f64 {
        self.breakpoints[0]
    }
    pub fn x_max(&self) -> f64 {
        *self.breakpoints.last().expect("at least two breakpoints")
    }

    /// CSV rendering (`x,value` header plus one row per breakpoint) with
    /// full round-trip float precision.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,value\n");
        for (x, v) in self.breakpoints.iter().zip(&self.values) {
            out.push_str(&format!("{x},{v}\n"));
        }
        out
    }
}

/// Linear interpolation on the containing segment; no extrapolation.
pub fn eval_pwl(pwl: &PwlApprox, x: f64) -> Result<f64, PwlError> {
    let lo = pwl.x_min();
    let hi = pwl.x_max();
    if !(x >= lo && x <= hi) {
        return Err(PwlError::OutOfRange { x, lo, hi });
    }
    // partition_point: first breakpoint > x, so seg ends at that index.
    let idx = pwl.breakpoints.partition_point(|&bp| bp <= x);
    if idx == pwl.breakpoints.len() {
        return Ok(*pwl.values.last().expect("non-empty"));
    }
    if idx == 0 {
        return Ok(pwl.values[0]);
    }
    let seg = idx - 1;
    Ok(pwl.values[seg] + pwl.slopes[seg] * (x - pwl.breakpoints[seg]))
}

/// Relative chord error at `x` for the segment `[a, b]` with values `fa, fb`.
fn rel_err_at(spec: &LearningSpec, a: f64, fa: f64, slope: f64, x: f64) -> Result<f64, CurveError> {
    let exact = spec.cumulative_cost(x)?;
    let chord = fa + slope * (x - a);
    Ok((exact - chord).abs() / exact.max(1e-300))
}

/// Worst probed relative error of the chord over `[a, b]`.
///
/// Probes geometric quarter points plus the arithmetic midpoint. For the
/// first segment (where the cumulative cost vanishes at the left end) the
/// relative error approaches 1 - slope/C(a) as x -> a+; that limit is
/// included exactly so the left edge cannot hide error from the probes.
fn segment_error(spec: &LearningSpec, a: f64, b: f64, fa: f64, fb: f64) -> Result<f64, CurveError> {
    let slope = (fb - fa) / (b - a);
    let mut worst: f64 = 0.0;
    let ratio = b / a;
    for t in [0.25, 0.5, 0.75] {
        let x = a * ratio.powf(t);
        worst = worst.max(rel_err_at(spec, a, fa, slope, x)?);
    }
    worst = worst.max(rel_err_at(spec, a, fa, slope, 0.5 * (a + b))?);
    if fa == 0.0 {
        let c_ref = spec.unit_cost(a)?;
        if c_ref > 0.0 {
            worst = worst.max((1.0 - slope / c_ref).abs());
        }
    }
    Ok(worst)
}

/// Builds a PWL approximation of `spec`'s cumulative cost over
/// `[reference, x_max]` under the given placement policy.
pub fn build_breakpoints(
    spec: &LearningSpec,
    x_max: f64,
    policy: PwlPolicy,
) -> Result<PwlApprox, PwlError> {
    let x0 = spec.reference_experience();
    if !(x_max.is_finite() && x_max > x0) {
        return Err(PwlError::RangeEmpty { x_max, x0 });
    }
    // Surfaces unsupported variants (and any domain problem) before building.
    spec.cumulative_cost(x_max)?;

    let mut xs: Vec<f64> = match policy {
        PwlPolicy::PerDoubling { count } => {
            if count < 1 {
                return Err(PwlError::InvalidPolicy(
                    "per-doubling count must be at least 1".into(),
                ));
            }
            let step = 1.0 / f64::from(count);
            let mut xs = vec![x0];
            let mut k = 1u64;
            loop {
                let x = x0 * (k as f64 * step).exp2();
                // Skip a sliver segment against x_max.
                if x >= x_max * (1.0 - 1e-9) {
                    break;
                }
                xs.push(x);
                k += 1;
                if xs.len() > MAX_BREAKPOINTS {
                    return Err(PwlError::TooManyBreakpoints);
                }
            }
            xs.push(x_max);
            xs
        }
        PwlPolicy::MaxRelError { epsilon } => {
            if !(epsilon > 0.0 && epsilon < 1.0) {
                return Err(PwlError::InvalidPolicy(format!(
                    "relative error target must lie in (0, 1), got {epsilon}"
                )));
            }
            let mut xs = vec![x0];
            for kink in spec.regime_boundaries(x0, x_max)? {
                // Ignore kinks indistinguishable from their neighbours.
                if kink > xs.last().unwrap() * (1.0 + 1e-12) {
                    xs.push(kink);
                }
            }
            if x_max > xs.last().unwrap() * (1.0 + 1e-12) {
                xs.push(x_max);
            } else {
                *xs.last_mut().unwrap() = x_max;
            }
            let budget = epsilon * SPLIT_SAFETY;
            // Depth-first splitting; each popped segment is either emitted or
            // bisected at its geometric midpoint.
            let mut out = vec![xs[0]];
            let mut stack: Vec<(f64, f64)> = xs.windows(2).rev().map(|w| (w[0], w[1])).collect();
            while let Some((a, b)) = stack.pop() {
                let fa = spec.cumulative_cost(a)?;
                let fb = spec.cumulative_cost(b)?;
                let mid = (a * b).sqrt();
                if segment_error(spec, a, b, fa, fb)? <= budget
                    || mid <= a * (1.0 + 1e-13)
                    || mid >= b * (1.0 - 1e-13)
                {
                    out.push(b);
                    if out.len() > MAX_BREAKPOINTS {
                        return Err(PwlError::TooManyBreakpoints);
                    }
                } else {
                    stack.push((mid, b));
                    stack.push((a, mid));
                    if stack.len() + out.len() > MAX_BREAKPOINTS {
                        return Err(PwlError::TooManyBreakpoints);
                    }
                }
            }
            out
        }
    };
    xs.dedup();

    let mut values = Vec::with_capacity(xs.len());
    for &x in &xs {
        values.push(spec.cumulative_cost(x)?);
    }
    let slopes: Vec<f64> = xs
        .windows(2)
        .zip(values.windows(2))
        .map(|(xw, vw)| (vw[1] - vw[0]) / (xw[1] - xw[0]))
        .collect();
    Ok(PwlApprox {
        breakpoints: xs,
        values,
        slopes,
    })
}

/// Maximum relative error |eval - exact| / max(exact, tiny) over a
/// geometrically spaced grid of `grid` points spanning the approximation.
pub fn approx_error(pwl: &PwlApprox, spec: &LearningSpec, grid: usize) -> Result<f64, PwlError> {
    if grid < 2 {
        return Err(PwlError::InvalidGrid(grid));
    }
    let lo = pwl.x_min();
    let hi = pwl.x_max();
    let ratio = hi / lo;
    let mut worst: f64 = 0.0;
    for i in 0..grid {
        let t = i as f64 / (grid - 1) as f64;
        let x = (lo * ratio.powf(t)).clamp(lo, hi);
        let exact = spec.cumulative_cost(x)?;
        let approx = eval_pwl(pwl, x)?;
        worst = worst.max((approx - exact).abs() / exact.max(1e-300));
    }
    Ok(worst)
}
