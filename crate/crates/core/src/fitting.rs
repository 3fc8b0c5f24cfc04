//! Least-squares estimation of learning-curve parameters from historical
//! cost series, plus case-resampling bootstrap intervals for the learning
//! rate.
//!
//! All regressions run in log space: ln C = ln c0 + b ln(x/x0) (+ b_r
//! ln(y/y0) for the two-factor model), so the fitted exponent carries the
//! exact per-doubling interpretation. The reference x0 is pinned to the first
//! observation; that choice moves c0_hat but never the exponents.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::curves::{exponent_to_lr, CurveError, LearningSpec, OneFactorSpec, TwoFactorSpec};

/// Two-sided normal 97.5 % quantile; fit-level intervals are fixed at 95 %.
const Z_95: f64 = 1.959963984540054;

/// Errors from series construction, fitting, or bootstrapping.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("degenerate design: {0}")]
    DegenerateDesign(String),
    #[error("experience and research regressors are collinear (condition number {cond:.3e})")]
    Collinear { cond: f64 },
    #[error("two-factor fit requires a research spend on every observation")]
    MissingResearch,
    #[error("invalid observation: {0}")]
    InvalidObservation(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("bootstrap needs at least 200 resamples, got {0}")]
    TooFewResamples(usize),
    #[error("confidence level must lie strictly between 0 and 1, got {0}")]
    InvalidLevel(f64),
    #[error("{skipped} of {total} bootstrap resamples were degenerate")]
    DegenerateBootstrap { skipped: usize, total: usize },
}

/// A single historical point: cumulative experience, unit cost, and an
/// optional cumulative research spend for two-factor fits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Observation {
    pub x: f64,
    pub cost: f64,
    pub y: Option<f64>,
}

/// An ordered series of observations with free-form labels.
///
/// Invariants enforced at construction: positive finite values, strictly
/// increasing x, and research spend present on either all points or none.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservationSeries {
    points: Vec<Observation>,
    pub metadata: BTreeMap<String, String>,
}

impl ObservationSeries {
    pub fn new(points: Vec<Observation>) -> Result<Self, FitError> {
        if points.is_empty() {
            return Err(FitError::InsufficientData { needed: 1, got: 0 });
        }
        let with_y = points.iter().filter(|p| p.y.is_some()).count();
        if with_y != 0 && with_y != points.len() {
            return Err(FitError::InvalidObservation(
                "research spend must be present on all observations or none".into(),
            ));
        }
        let mut prev_x = 0.0;
        for (i, p) in points.iter().enumerate() {
            if !(p.x.is_finite() && p.x > 0.0) {
                return Err(FitError::InvalidObservation(format!(
                    "point {i}: experience must be finite and positive, got {}",
                    p.x
                )));
            }
            if !(p.cost.is_finite() && p.cost > 0.0) {
                return Err(FitError::InvalidObservation(format!(
                    "point {i}: cost must be finite and positive, got {}",
                    p.cost
                )));
            }
            if let Some(y) = p.y {
                if !(y.is_finite() && y > 0.0) {
                    return Err(FitError::InvalidObservation(format!(
                        "point {i}: research spend must be finite and positive, got {y}"
                    )));
                }
            }
            if p.x <= prev_x {
                return Err(FitError::InvalidObservation(format!(
                    "point {i}: experience must be strictly increasing ({} after {prev_x})",
                    p.x
                )));
            }
            prev_x = p.x;
        }
        Ok(Self {
            points,
            metadata: BTreeMap::new(),
        })
    }

    pub fn from_xy(xs: &[f64], costs: &[f64]) -> Result<Self, FitError> {
        if xs.len() != costs.len() {
            return Err(FitError::InvalidObservation(format!(
                "{} experience values vs {} costs",
                xs.len(),
                costs.len()
            )));
        }
        Self::new(
            xs.iter()
                .zip(costs)
                .map(|(&x, &cost)| Observation { x, cost, y: None })
                .collect(),
        )
    }

    pub fn from_xyr(xs: &[f64], costs: &[f64], ys: &[f64]) -> Result<Self, FitError> {
        if xs.len() != costs.len() || xs.len() != ys.len() {
            return Err(FitError::InvalidObservation(
                "experience, cost and research columns differ in length".into(),
            ));
        }
        Self::new(
            xs.iter()
                .zip(costs)
                .zip(ys)
                .map(|((&x, &cost), &y)| Observation {
                    x,
                    cost,
                    y: Some(y),
                })
                .collect(),
        )
    }

    /// Parses delimited text with header `x,cost` or `x,cost,y`.
    pub fn from_csv_str(text: &str) -> Result<Self, FitError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(FitError::Parse {
            line: 1,
            msg: "empty file".into(),
        })?;
        let cols: Vec<String> = header
            .split(',')
            .map(|c| c.trim().to_ascii_lowercase())
            .collect();
        let has_y = match cols.as_slice() {
            [a, b] if a == "x" && b == "cost" => false,
            [a, b, c] if a == "x" && b == "cost" && c == "y" => true,
            _ => {
                return Err(FitError::Parse {
                    line: 1,
                    msg: format!("expected header `x,cost` or `x,cost,y`, got `{header}`"),
                })
            }
        };
        let mut points = Vec::new();
        for (idx, raw) in lines {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let expected = if has_y { 3 } else { 2 };
            if fields.len() != expected {
                return Err(FitError::Parse {
                    line: line_no,
                    msg: format!("expected {expected} fields, got {}", fields.len()),
                });
            }
            let parse = |s: &str, what: &str| -> Result<f64, FitError> {
                s.parse::<f64>().map_err(|_| FitError::Parse {
                    line: line_no,
                    msg: format!("cannot parse {what} `{s}` as a number"),
                })
            };
            points.push(Observation {
                x: parse(fields[0], "experience")?,
                cost: parse(fields[1], "cost")?,
                y: if has_y {
                    Some(parse(fields[2], "research spend")?)
                } else {
                    None
                },
            });
        }
        Self::new(points)
    }

    pub fn points(&self) -> &[Observation] {
        &self.points
    }
    pub fn len(&self) -> usize {
        self.points.len()
    }
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
    /// True when every observation carries a research spend.
    pub fn has_research(&self) -> bool {
        self.points.iter().all(|p| p.y.is_some())
    }
}

/// Which curve family a fit or bootstrap targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    OneFactor,
    TwoFactor,
}

/// Estimates, standard errors and diagnostics from a fit.
///
/// `lr_ci` is a 95 % normal-approximation interval on the exponent mapped
/// through LR = 1 - 2^b (use [`bootstrap_ci`] for small-sample intervals).
/// `se_c0_hat` comes from the intercept's log-space standard error via the
/// delta method.
#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub model: FitModel,
    pub n: usize,
    pub x0: f64,
    pub y0: Option<f64>,
    pub c0_hat: f64,
    pub b_hat: f64,
    pub b_lbr_hat: Option<f64>,
    pub se_c0_hat: f64,
    pub se_b_hat: f64,
    pub se_b_lbr_hat: Option<f64>,
    pub r_squared: f64,
    pub lr_hat: f64,
    pub lr_ci: (f64, f64),
}

impl FitResult {
    /// Builds the fitted curve as a [`LearningSpec`].
    pub fn to_spec(&self) -> Result<LearningSpec, CurveError> {
        match self.model {
            FitModel::OneFactor => Ok(LearningSpec::OneFactor(OneFactorSpec::new(
                self.c0_hat,
                self.x0,
                self.b_hat,
            )?)),
            FitModel::TwoFactor => Ok(LearningSpec::TwoFactor(TwoFactorSpec::new(
                self.c0_hat,
                self.x0,
                self.b_hat,
                self.y0.expect("two-factor fit always records y0"),
                self.b_lbr_hat.expect("two-factor fit always records b_lbr"),
            )?)),
        }
    }
}

/// When the response has no variance left to explain, a perfect fit scores 1
/// and anything else 0; otherwise the usual 1 - SSR/SST, clamped to [0, 1].
fn r_squared(ssr: f64, sst: f64) -> f64 {
    const TINY: f64 = 1e-24;
    if sst < TINY {
        if ssr < TINY {
            1.0
        } else {
            0.0
        }
    } else {
        (1.0 - ssr / sst).clamp(0.0, 1.0)
    }
}

fn lr_interval(b: f64, se_b: f64) -> (f64, f64) {
    // LR = 1 - 2^b is decreasing in b, so the interval endpoints swap.
    (
        exponent_to_lr(b + Z_95 * se_b),
        exponent_to_lr(b - Z_95 * se_b),
    )
}

/// One-factor OLS on raw (x, cost) pairs. Bootstrap resamples reuse this
/// directly because they violate the series ordering invariant.
fn ols_one_factor(pairs: &[(f64, f64)]) -> Result<FitResult, FitError> {
    let n = pairs.len();
    if n < 3 {
        return Err(FitError::InsufficientData { needed: 3, got: n });
    }
    let x0 = pairs[0].0;
    let ts: Vec<f64> = pairs.iter().map(|p| (p.0 / x0).ln()).collect();
    let zs: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let t_bar = ts.iter().sum::<f64>() / n as f64;
    let z_bar = zs.iter().sum::<f64>() / n as f64;
    let stt: f64 = ts.iter().map(|t| (t - t_bar).powi(2)).sum();
    if stt < 1e-24 {
        return Err(FitError::DegenerateDesign(
            "experience values have no variance in log space".into(),
        ));
    }
    let stz: f64 = ts
        .iter()
        .zip(&zs)
        .map(|(t, z)| (t - t_bar) * (z - z_bar))
        .sum();
    let b = stz / stt;
    let a = z_bar - b * t_bar;
    let ssr: f64 = ts
        .iter()
        .zip(&zs)
        .map(|(t, z)| (z - a - b * t).powi(2))
        .sum();
    let sst: f64 = zs.iter().map(|z| (z - z_bar).powi(2)).sum();
    let sigma2 = ssr / (n as f64 - 2.0);
    let se_b = (sigma2 / stt).sqrt();
    let se_a = (sigma2 * (1.0 / n as f64 + t_bar * t_bar / stt)).sqrt();
    let c0 = a.exp();
    Ok(FitResult {
        model: FitModel::OneFactor,
        n,
        x0,
        y0: None,
        c0_hat: c0,
        b_hat: b,
        b_lbr_hat: None,
        se_c0_hat: c0 * se_a,
        se_b_hat: se_b,
        se_b_lbr_hat: None,
        r_squared: r_squared(ssr, sst),
        lr_hat: exponent_to_lr(b),
        lr_ci: lr_interval(b, se_b),
    })
}

/// Two-factor OLS on raw (x, cost, y) triples via the centered 2x2 normal
/// equations, with a closed-form condition-number guard.
fn ols_two_factor(triples: &[(f64, f64, f64)]) -> Result<FitResult, FitError> {
    let n = triples.len();
    if n < 4 {
        return Err(FitError::InsufficientData { needed: 4, got: n });
    }
    let x0 = triples[0].0;
    let y0 = triples[0].2;
    let ts: Vec<f64> = triples.iter().map(|p| (p.0 / x0).ln()).collect();
    let ss: Vec<f64> = triples.iter().map(|p| (p.2 / y0).ln()).collect();
    let zs: Vec<f64> = triples.iter().map(|p| p.1.ln()).collect();
    let nf = n as f64;
    let t_bar = ts.iter().sum::<f64>() / nf;
    let s_bar = ss.iter().sum::<f64>() / nf;
    let z_bar = zs.iter().sum::<f64>() / nf;
    let mut stt = 0.0;
    let mut sss = 0.0;
    let mut sts = 0.0;
    let mut stz = 0.0;
    let mut ssz = 0.0;
    for i in 0..n {
        let dt = ts[i] - t_bar;
        let ds = ss[i] - s_bar;
        let dz = zs[i] - z_bar;
        stt += dt * dt;
        sss += ds * ds;
        sts += dt * ds;
        stz += dt * dz;
        ssz += ds * dz;
    }
    // Condition number of the centered Gram matrix [[stt, sts], [sts, sss]].
    let trace = stt + sss;
    let disc = ((stt - sss).powi(2) + 4.0 * sts * sts).sqrt();
    let lam_max = 0.5 * (trace + disc);
    let lam_min = 0.5 * (trace - disc);
    const COND_LIMIT: f64 = 1e10;
    if !(lam_min > 0.0) || lam_max / lam_min >= COND_LIMIT {
        let cond = if lam_min > 0.0 {
            lam_max / lam_min
        } else {
            f64::INFINITY
        };
        return Err(FitError::Collinear { cond });
    }
    let det = stt * sss - sts * sts;
    let b_lbd = (sss * stz - sts * ssz) / det;
    let b_lbr = (stt * ssz - sts * stz) / det;
    let a = z_bar - b_lbd * t_bar - b_lbr * s_bar;
    let ssr: f64 = (0..n)
        .map(|i| (zs[i] - a - b_lbd * ts[i] - b_lbr * ss[i]).powi(2))
        .sum();
    let sst: f64 = zs.iter().map(|z| (z - z_bar).powi(2)).sum();
    let sigma2 = ssr / (nf - 3.0);
    let se_lbd = (sigma2 * sss / det).sqrt();
    let se_lbr = (sigma2 * stt / det).sqrt();
    // Var(intercept) for the centered design: σ²(1/n + m' G⁻¹ m) with m the
    // regressor means.
    let gi_tt = sss / det;
    let gi_ss = stt / det;
    let gi_ts = -sts / det;
    let quad = t_bar * t_bar * gi_tt + 2.0 * t_bar * s_bar * gi_ts + s_bar * s_bar * gi_ss;
    let se_a = (sigma2 * (1.0 / nf + quad)).sqrt();
    let c0 = a.exp();
    Ok(FitResult {
        model: FitModel::TwoFactor,
        n,
        x0,
        y0: Some(y0),
        c0_hat: c0,
        b_hat: b_lbd,
        b_lbr_hat: Some(b_lbr),
        se_c0_hat: c0 * se_a,
        se_b_hat: se_lbd,
        se_b_lbr_hat: Some(se_lbr),
        r_squared: r_squared(ssr, sst),
        lr_hat: exponent_to_lr(b_lbd),
        lr_ci: lr_interval(b_lbd, se_lbd),
    })
}

/// Fits C(x) = c0 (x/x0)^b by OLS in log space, x0 = first observation.
pub fn fit_one_factor(series: &ObservationSeries) -> Result<FitResult, FitError> {
    let pairs: Vec<(f64, f64)> = series.points().iter().map(|p| (p.x, p.cost)).collect();
    ols_one_factor(&pairs)
}

/// Fits C(x, y) = c0 (x/x0)^b (y/y0)^{b_r}; requires research spend on every
/// point and non-collinear regressors.
pub fn fit_two_factor(series: &ObservationSeries) -> Result<FitResult, FitError> {
    if !series.has_research() {
        return Err(FitError::MissingResearch);
    }
    let triples: Vec<(f64, f64, f64)> = series
        .points()
        .iter()
        .map(|p| (p.x, p.cost, p.y.expect("has_research checked")))
        .collect();
    ols_two_factor(&triples)
}

/// R-7 (linear-interpolation) quantile of pre-sorted values.
fn percentile_r7(sorted: &[f64], p: f64) -> f64 {
    let m = sorted.len();
    if m == 1 {
        return sorted[0];
    }
    let h = (m - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(m - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Case-resampling bootstrap percentile interval for the learning rate.
///
/// All resample index vectors are drawn up front from a ChaCha8 stream seeded
/// with `seed`, so the interval is deterministic and independent of any later
/// evaluation order. Degenerate resamples (no experience variance, collinear
/// regressors) are skipped; more than 50 % skipped is an error.
pub fn bootstrap_ci(
    series: &ObservationSeries,
    model: FitModel,
    resamples: usize,
    level: f64,
    seed: u64,
) -> Result<(f64, f64), FitError> {
    if resamples < 200 {
        return Err(FitError::TooFewResamples(resamples));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(FitError::InvalidLevel(level));
    }
    // The full-sample fit must succeed before resampling means anything.
    match model {
        FitModel::OneFactor => fit_one_factor(series).map(|_| ())?,
        FitModel::TwoFactor => fit_two_factor(series).map(|_| ())?,
    }
    let n = series.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let index_sets: Vec<Vec<usize>> = (0..resamples)
        .map(|_| (0..n).map(|_| rng.random_range(0..n)).collect())
        .collect();

    let points = series.points();
    let mut lrs = Vec::with_capacity(resamples);
    let mut skipped = 0usize;
    for indices in &index_sets {
        let fit = match model {
            FitModel::OneFactor => {
                let pairs: Vec<(f64, f64)> = indices
                    .iter()
                    .map(|&i| (points[i].x, points[i].cost))
                    .collect();
                ols_one_factor(&pairs)
            }
            FitModel::TwoFactor => {
                let triples: Vec<(f64, f64, f64)> = indices
                    .iter()
                    .map(|&i| (points[i].x, points[i].cost, points[i].y.expect("validated")))
                    .collect();
                ols_two_factor(&triples)
            }
        };
        match fit {
            Ok(f) => lrs.push(f.lr_hat),
            Err(FitError::DegenerateDesign(_)) | Err(FitError::Collinear { .. }) => {
                skipped += 1;
            }
            Err(e) => return Err(e),
        }
    }
    if skipped * 2 > resamples {
        return Err(FitError::DegenerateBootstrap {
            skipped,
            total: resamples,
        });
    }
    lrs.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    Ok((percentile_r7(&lrs, alpha), percentile_r7(&lrs, 1.0 - alpha)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::lr_to_exponent;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn wright_doubling_rule() {
        let s = ObservationSeries::from_xy(&[1.0, 2.0, 4.0], &[100.0, 80.0, 64.0]).unwrap();
        let fit = fit_one_factor(&s).unwrap();
        assert_abs_diff_eq!(fit.lr_hat, 0.2, epsilon = 1e-12);
        assert_relative_eq!(fit.c0_hat, 100.0, epsilon = 1e-12);
        assert!(fit.r_squared > 1.0 - 1e-12);
        assert!(fit.se_b_hat < 1e-10);
    }

    #[test]
    fn constant_costs_fit_flat() {
        let s = ObservationSeries::from_xy(&[1.0, 2.0, 4.0], &[50.0, 50.0, 50.0]).unwrap();
        let fit = fit_one_factor(&s).unwrap();
        assert_abs_diff_eq!(fit.b_hat, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(fit.lr_hat, 0.0, epsilon = 1e-14);
        // Nothing to explain and nothing unexplained.
        assert_eq!(fit.r_squared, 1.0);
    }

    #[test]
    fn exact_series_recovers_parameters() {
        let b = lr_to_exponent(0.13).unwrap();
        let xs: Vec<f64> = (0..50).map(|i| 3.0 * 1.17f64.powi(i)).collect();
        let costs: Vec<f64> = xs.iter().map(|x| 250.0 * (x / xs[0]).powf(b)).collect();
        let s = ObservationSeries::from_xy(&xs, &costs).unwrap();
        let fit = fit_one_factor(&s).unwrap();
        assert_abs_diff_eq!(fit.lr_hat, 0.13, epsilon = 1e-9);
        assert_relative_eq!(fit.c0_hat, 250.0, epsilon = 1e-9);
        assert!(fit.r_squared > 1.0 - 1e-12);
        let spec = fit.to_spec().unwrap();
        assert_relative_eq!(spec.unit_cost(xs[10]).unwrap(), costs[10], epsilon = 1e-9);
    }

    #[test]
    fn scale_and_unit_equivariance() {
        let xs = [2.0, 5.0, 9.0, 20.0, 41.0];
        let costs = [120.0, 100.0, 91.0, 80.0, 70.0];
        let base = fit_one_factor(&ObservationSeries::from_xy(&xs, &costs).unwrap()).unwrap();

        let costs_k: Vec<f64> = costs.iter().map(|c| c * 7.5).collect();
        let scaled = fit_one_factor(&ObservationSeries::from_xy(&xs, &costs_k).unwrap()).unwrap();
        assert_abs_diff_eq!(scaled.b_hat, base.b_hat, epsilon = 1e-12);
        assert_abs_diff_eq!(scaled.r_squared, base.r_squared, epsilon = 1e-12);
        assert_relative_eq!(scaled.c0_hat, base.c0_hat * 7.5, epsilon = 1e-10);

        let xs_k: Vec<f64> = xs.iter().map(|x| x * 1000.0).collect();
        let rescaled = fit_one_factor(&ObservationSeries::from_xy(&xs_k, &costs).unwrap()).unwrap();
        assert_abs_diff_eq!(rescaled.b_hat, base.b_hat, epsilon = 1e-12);
    }

    #[test]
    fn insufficient_and_degenerate_data() {
        assert!(matches!(
            fit_one_factor(&ObservationSeries::from_xy(&[1.0, 2.0], &[10.0, 9.0]).unwrap()),
            Err(FitError::InsufficientData { needed: 3, got: 2 })
        ));
        // Strictly increasing x is a series invariant, so a zero-variance
        // design can only reach the fit through resampling; the raw path
        // reports it as degenerate.
        assert!(matches!(
            ols_one_factor(&[(2.0, 10.0), (2.0, 9.0), (2.0, 8.0)]),
            Err(FitError::DegenerateDesign(_))
        ));
        assert!(ObservationSeries::from_xy(&[1.0, 1.0, 2.0], &[3.0, 3.0, 3.0]).is_err());
        assert!(ObservationSeries::from_xy(&[1.0, -2.0, 3.0], &[3.0, 3.0, 3.0]).is_err());
        assert!(ObservationSeries::from_xy(&[1.0, 2.0, 3.0], &[3.0, 0.0, 3.0]).is_err());
    }

    #[test]
    fn two_factor_exact_recovery() {
        let b_lbd = -0.263;
        let b_lbr = -0.1;
        // Experience grows geometrically; research follows an unrelated
        // polynomial-plus-wiggle path so the regressors are independent.
        let xs: Vec<f64> = (0..24).map(|i| 5.0 * 1.3f64.powi(i)).collect();
        let ys: Vec<f64> = (0..24)
            .map(|i| 10.0 + (i as f64).powf(1.7) + 3.0 * ((i % 5) as f64))
            .collect();
        let costs: Vec<f64> = xs
            .iter()
            .zip(&ys)
            .map(|(&x, &y)| 400.0 * (x / xs[0]).powf(b_lbd) * (y / ys[0]).powf(b_lbr))
            .collect();
        let s = ObservationSeries::from_xyr(&xs, &costs, &ys).unwrap();
        let fit = fit_two_factor(&s).unwrap();
        assert_abs_diff_eq!(fit.b_hat, b_lbd, epsilon = 1e-9);
        assert_abs_diff_eq!(fit.b_lbr_hat.unwrap(), b_lbr, epsilon = 1e-9);
        assert_relative_eq!(fit.c0_hat, 400.0, epsilon = 1e-9);
        assert!(fit.r_squared > 1.0 - 1e-12);

        // Zero research elasticity is recovered as zero.
        let costs0: Vec<f64> = xs
            .iter()
            .map(|&x| 400.0 * (x / xs[0]).powf(b_lbd))
            .collect();
        let s0 = ObservationSeries::from_xyr(&xs, &costs0, &ys).unwrap();
        let fit0 = fit_two_factor(&s0).unwrap();
        assert_abs_diff_eq!(fit0.b_lbr_hat.unwrap(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn two_factor_collinearity_detected() {
        let xs: Vec<f64> = (0..10).map(|i| 2.0 * 1.4f64.powi(i)).collect();
        // Constant research spend: zero variance in the second regressor.
        let ys_const = vec![7.0; 10];
        let costs: Vec<f64> = xs.iter().map(|&x| 100.0 / x.sqrt()).collect();
        let s = ObservationSeries::from_xyr(&xs, &costs, &ys_const).unwrap();
        assert!(matches!(
            fit_two_factor(&s),
            Err(FitError::Collinear { .. })
        ));
        // Research proportional to experience: perfectly collinear in logs.
        let ys_prop: Vec<f64> = xs.iter().map(|&x| 2.0 * x).collect();
        let s2 = ObservationSeries::from_xyr(&xs, &costs, &ys_prop).unwrap();
        assert!(matches!(
            fit_two_factor(&s2),
            Err(FitError::Collinear { .. })
        ));
        // Missing research spend is its own error.
        let s3 = ObservationSeries::from_xy(&xs, &costs).unwrap();
        assert!(matches!(
            fit_two_factor(&s3),
            Err(FitError::MissingResearch)
        ));
    }

    #[test]
    fn bootstrap_deterministic_and_tight_on_exact_data() {
        let b = lr_to_exponent(0.2).unwrap();
        let xs: Vec<f64> = (0..30).map(|i| 1.0 * 1.25f64.powi(i)).collect();
        let costs: Vec<f64> = xs.iter().map(|x| 100.0 * x.powf(b)).collect();
        let s = ObservationSeries::from_xy(&xs, &costs).unwrap();
        let ci1 = bootstrap_ci(&s, FitModel::OneFactor, 500, 0.95, 42).unwrap();
        let ci2 = bootstrap_ci(&s, FitModel::OneFactor, 500, 0.95, 42).unwrap();
        assert_eq!(ci1, ci2);
        assert!(ci1.1 - ci1.0 < 1e-6, "width {}", ci1.1 - ci1.0);
        assert!(ci1.0 <= 0.2 + 1e-9 && ci1.1 >= 0.2 - 1e-9);
        let ci3 = bootstrap_ci(&s, FitModel::OneFactor, 500, 0.95, 43).unwrap();
        assert!(ci3.0.is_finite() && ci3.1.is_finite());
    }

    #[test]
    fn bootstrap_argument_validation() {
        let s = ObservationSeries::from_xy(&[1.0, 2.0, 4.0], &[100.0, 80.0, 64.0]).unwrap();
        assert!(matches!(
            bootstrap_ci(&s, FitModel::OneFactor, 199, 0.95, 1),
            Err(FitError::TooFewResamples(199))
        ));
        assert!(matches!(
            bootstrap_ci(&s, FitModel::OneFactor, 500, 1.0, 1),
            Err(FitError::InvalidLevel(_))
        ));
        assert!(matches!(
            bootstrap_ci(&s, FitModel::OneFactor, 500, 0.0, 1),
            Err(FitError::InvalidLevel(_))
        ));
    }

    #[test]
    fn csv_parsing() {
        let s = ObservationSeries::from_csv_str("x,cost\n1,100\n2, 80\n4,64\n").unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.points()[1].cost, 80.0);
        assert!(s.points()[0].y.is_none());

        let s2 = ObservationSeries::from_csv_str("x,cost,y\n1,100,5\n2,80,9\n4,64,11\n").unwrap();
        assert_eq!(s2.points()[2].y, Some(11.0));

        let bad_header = ObservationSeries::from_csv_str("exp,price\n1,100\n");
        assert!(matches!(bad_header, Err(FitError::Parse { line: 1, .. })));
        let bad_field = ObservationSeries::from_csv_str("x,cost\n1,100\ntwo,80\n");
        assert!(matches!(bad_field, Err(FitError::Parse { line: 3, .. })));
        let bad_arity = ObservationSeries::from_csv_str("x,cost\n1,100,7\n");
        assert!(matches!(bad_arity, Err(FitError::Parse { line: 2, .. })));
    }

    #[test]
    fn percentile_matches_linear_interpolation() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile_r7(&v, 0.0), 1.0);
        assert_eq!(percentile_r7(&v, 1.0), 4.0);
        assert_eq!(percentile_r7(&v, 0.5), 2.5);
        assert_abs_diff_eq!(percentile_r7(&v, 0.25), 1.75, epsilon = 1e-15);
    }
}
