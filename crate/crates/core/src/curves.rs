//! Learning-curve families and their evaluators.
//!
//! Every family relates unit cost to cumulative experience x. The central
//! quantity is the learning exponent b = log2(1 - LR): a technology with
//! learning rate LR sheds that fraction of its unit cost per doubling of
//! experience. [`LearningSpec`] is the tagged union the rest of the toolkit
//! consumes; evaluators are total over the union except where a variant is
//! mathematically unsupported (two-factor curves have no cumulative cost
//! without an exogenous research trajectory).

use serde::Serialize;
use thiserror::Error;

use crate::numeric::{dilog, gl_panel, power_integral};

/// Errors from constructing or evaluating learning curves.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurveError {
    #[error("invalid curve specification: {0}")]
    InvalidSpec(String),
    #[error("cumulative experience must be positive, got {x}")]
    NonPositiveExperience { x: f64 },
    #[error("experience {x} lies below the curve reference {x0}")]
    BelowReference { x: f64, x0: f64 },
    #[error("learning rate must be below 1 (unit cost would vanish), got {lr}")]
    LearningRateTooLarge { lr: f64 },
    #[error("two-factor curve requires a cumulative research spend")]
    MissingResearch,
    #[error("cumulative research spend must be positive, got {y}")]
    NonPositiveResearch { y: f64 },
    #[error("{op} is not defined for the {variant} curve family")]
    Unsupported {
        op: &'static str,
        variant: &'static str,
    },
    #[error("diminishing curve is undefined at x = {x}: the local learning rate reaches 1")]
    DiminishingUndefined { x: f64 },
}

/// Converts a learning rate to the log2 cost elasticity b = log2(1 - lr).
///
/// Accepts any rate below 1; rates at or above 1 would drive the unit cost to
/// zero within one doubling and are rejected.
pub fn lr_to_exponent(lr: f64) -> Result<f64, CurveError> {
    if !lr.is_finite() || lr >= 1.0 {
        return Err(CurveError::LearningRateTooLarge { lr });
    }
    Ok((1.0 - lr).log2())
}

/// Inverse of [`lr_to_exponent`]: LR = 1 - 2^b.
pub fn exponent_to_lr(b: f64) -> f64 {
    1.0 - b.exp2()
}

/// One-factor experience curve C(x) = c0 (x/x0)^b.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OneFactorSpec {
    c0: f64,
    x0: f64,
    b_lbd: f64,
}

impl OneFactorSpec {
    /// `b_lbd` must keep the learning rate in (-1, 1), i.e. b < 1.
    pub fn new(c0: f64, x0: f64, b_lbd: f64) -> Result<Self, CurveError> {
        check_positive("c0", c0)?;
        check_positive("x0", x0)?;
        if !b_lbd.is_finite() || b_lbd >= 1.0 {
            return Err(CurveError::InvalidSpec(format!(
                "learning exponent must be finite and below 1, got {b_lbd}"
            )));
        }
        Ok(Self { c0, x0, b_lbd })
    }

    pub fn from_lr(c0: f64, x0: f64, lr: f64) -> Result<Self, CurveError> {
        if !(lr > -1.0 && lr < 1.0) {
            return Err(CurveError::InvalidSpec(format!(
                "learning rate must lie in (-1, 1), got {lr}"
            )));
        }
        Self::new(c0, x0, lr_to_exponent(lr)?)
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }
    pub fn x0(&self) -> f64 {
        self.x0
    }
    pub fn b_lbd(&self) -> f64 {
        self.b_lbd
    }
    pub fn lr(&self) -> f64 {
        exponent_to_lr(self.b_lbd)
    }
}

/// Two-factor curve C(x, y) = c0 (x/x0)^b_lbd (y/y0)^b_lbr with cumulative
/// research spend y as the second driver.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoFactorSpec {
    c0: f64,
    x0: f64,
    b_lbd: f64,
    y0: f64,
    b_lbr: f64,
}

impl TwoFactorSpec {
    pub fn new(c0: f64, x0: f64, b_lbd: f64, y0: f64, b_lbr: f64) -> Result<Self, CurveError> {
        check_positive("c0", c0)?;
        check_positive("x0", x0)?;
        check_positive("y0", y0)?;
        if !b_lbd.is_finite() || !b_lbr.is_finite() {
            return Err(CurveError::InvalidSpec(
                "learning exponents must be finite".into(),
            ));
        }
        Ok(Self {
            c0,
            x0,
            b_lbd,
            y0,
            b_lbr,
        })
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }
    pub fn x0(&self) -> f64 {
        self.x0
    }
    pub fn b_lbd(&self) -> f64 {
        self.b_lbd
    }
    pub fn y0(&self) -> f64 {
        self.y0
    }
    pub fn b_lbr(&self) -> f64 {
        self.b_lbr
    }
}

/// One component of a composite curve. Components may share an `id` across
/// technologies to model spillover (the shared component rides one experience
/// stock).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Component {
    pub id: String,
    pub c0: f64,
    pub x0: f64,
    pub b_lbd: f64,
}

impl Component {
    pub fn new(id: impl Into<String>, c0: f64, x0: f64, b_lbd: f64) -> Result<Self, CurveError> {
        if c0 < 0.0 || !c0.is_finite() {
            return Err(CurveError::InvalidSpec(format!(
                "component cost must be finite and non-negative, got {c0}"
            )));
        }
        check_positive("component x0", x0)?;
        if !b_lbd.is_finite() || b_lbd >= 1.0 {
            return Err(CurveError::InvalidSpec(format!(
                "component exponent must be finite and below 1, got {b_lbd}"
            )));
        }
        Ok(Self {
            id: id.into(),
            c0,
            x0,
            b_lbd,
        })
    }

    pub fn from_lr(id: impl Into<String>, c0: f64, x0: f64, lr: f64) -> Result<Self, CurveError> {
        Self::new(id, c0, x0, lr_to_exponent(lr)?)
    }
}

/// Composite curve: a sum of per-component power laws, C(x) = Σ c0_n (x/x0_n)^b_n.
///
/// All components are driven by the same experience variable x; each measures
/// it against its own reference x0_n. The curve's overall reference (where the
/// cumulative cost integral starts) is the smallest component reference.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompositeSpec {
    components: Vec<Component>,
}

impl CompositeSpec {
    pub fn new(components: Vec<Component>) -> Result<Self, CurveError> {
        if components.is_empty() {
            return Err(CurveError::InvalidSpec(
                "composite curve needs at least one component".into(),
            ));
        }
        let total: f64 = components.iter().map(|c| c.c0).sum();
        if total <= 0.0 {
            return Err(CurveError::InvalidSpec(
                "composite curve needs a positive total initial cost".into(),
            ));
        }
        Ok(Self { components })
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    /// Total initial cost Σ c0_n.
    pub fn total_c0(&self) -> f64 {
        self.components.iter().map(|c| c.c0).sum()
    }

    fn min_x0(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.x0)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Partial-learning curve C(x) = c0 [(1-alpha) + alpha (x/x0)^b]: only the
/// share `alpha` of the initial cost learns, the rest stays fixed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartialSpec {
    c0: f64,
    x0: f64,
    b_lbd: f64,
    alpha: f64,
}

impl PartialSpec {
    pub fn new(c0: f64, x0: f64, b_lbd: f64, alpha: f64) -> Result<Self, CurveError> {
        check_positive("c0", c0)?;
        check_positive("x0", x0)?;
        if !b_lbd.is_finite() || b_lbd >= 1.0 {
            return Err(CurveError::InvalidSpec(format!(
                "learning exponent must be finite and below 1, got {b_lbd}"
            )));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(CurveError::InvalidSpec(format!(
                "learning share alpha must lie in [0, 1], got {alpha}"
            )));
        }
        Ok(Self {
            c0,
            x0,
            b_lbd,
            alpha,
        })
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }
    pub fn x0(&self) -> f64 {
        self.x0
    }
    pub fn b_lbd(&self) -> f64 {
        self.b_lbd
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// Diminishing-rate curve: the learning rate itself decays per doubling,
/// LR(x) = lr0 (1-d)^{log2(x/x0)}.
///
/// The rate law fixes only the local slope; the cost path is defined by
/// integrating the local elasticity b(u) = log2(1 - LR(u)):
/// ln C(x) = ln c0 + ∫_{x0}^{x} b(u)/u du. Per doubling that integral has the
/// closed form (Li2(lr0 q^n) - Li2(lr0 q^{n+1}))/ln q with q = 1-d, which is
/// what [`LearningSpec::unit_cost`] evaluates. d = 0 degenerates to a plain
/// one-factor curve with rate lr0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiminishingSpec {
    c0: f64,
    x0: f64,
    lr0: f64,
    d: f64,
}

impl DiminishingSpec {
    pub fn new(c0: f64, x0: f64, lr0: f64, d: f64) -> Result<Self, CurveError> {
        check_positive("c0", c0)?;
        check_positive("x0", x0)?;
        if !(lr0 > 0.0 && lr0 < 1.0) {
            return Err(CurveError::InvalidSpec(format!(
                "initial learning rate must lie in (0, 1), got {lr0}"
            )));
        }
        if !(0.0..1.0).contains(&d) {
            return Err(CurveError::InvalidSpec(format!(
                "diminishing rate must lie in [0, 1), got {d}"
            )));
        }
        Ok(Self { c0, x0, lr0, d })
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }
    pub fn x0(&self) -> f64 {
        self.x0
    }
    pub fn lr0(&self) -> f64 {
        self.lr0
    }
    pub fn d(&self) -> f64 {
        self.d
    }

    /// LR at experience x; errors below x0 once the extrapolated rate hits 1.
    fn rate_at(&self, x: f64) -> Result<f64, CurveError> {
        let lr = self.lr0 * (1.0 - self.d).powf((x / self.x0).log2());
        if lr >= 1.0 {
            return Err(CurveError::DiminishingUndefined { x });
        }
        Ok(lr)
    }

    /// ln C(x) - ln c0 via the dilogarithm closed form.
    fn log_cost_offset(&self, x: f64) -> Result<f64, CurveError> {
        self.rate_at(x)?;
        if self.d == 0.0 {
            return Ok((x / self.x0).log2() * (1.0 - self.lr0).log2() * std::f64::consts::LN_2);
        }
        let q = 1.0 - self.d;
        let t = (x / self.x0).log2();
        Ok((dilog(self.lr0) - dilog(self.lr0 * q.powf(t))) / q.ln())
    }
}

/// One stage of a staged (NEMS-style) curve: `lr` applies until `upto`
/// doublings past the reference. The final stage's rate extends indefinitely.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stage {
    /// Upper doubling bound of this stage, measured from x0; `None` on the
    /// last stage (and treated as unbounded there regardless).
    pub upto_doublings: Option<f64>,
    pub lr: f64,
}

/// Staged curve with per-stage learning rates and continuous cost chaining.
///
/// The canonical configuration is three stages with boundaries at 3 and 8
/// doublings (revolutionary / evolutionary / conventional).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StagedSpec {
    c0: f64,
    x0: f64,
    stages: Vec<Stage>,
}

impl StagedSpec {
    pub fn new(c0: f64, x0: f64, stages: Vec<Stage>) -> Result<Self, CurveError> {
        check_positive("c0", c0)?;
        check_positive("x0", x0)?;
        if stages.is_empty() {
            return Err(CurveError::InvalidSpec("staged curve needs stages".into()));
        }
        let mut prev_bound = 0.0;
        for (i, s) in stages.iter().enumerate() {
            if !(s.lr > -1.0 && s.lr < 1.0) {
                return Err(CurveError::InvalidSpec(format!(
                    "stage {i} learning rate must lie in (-1, 1), got {}",
                    s.lr
                )));
            }
            if i > 0 && s.lr > stages[i - 1].lr {
                return Err(CurveError::InvalidSpec(
                    "stage learning rates must be non-increasing".into(),
                ));
            }
            match s.upto_doublings {
                Some(u) => {
                    if !(u.is_finite() && u > prev_bound) {
                        return Err(CurveError::InvalidSpec(format!(
                            "stage boundaries must be strictly increasing, got {u} after {prev_bound}"
                        )));
                    }
                    prev_bound = u;
                }
                None => {
                    if i + 1 != stages.len() {
                        return Err(CurveError::InvalidSpec(
                            "only the final stage may be unbounded".into(),
                        ));
                    }
                }
            }
        }
        Ok(Self { c0, x0, stages })
    }

    /// Three-stage curve with the default boundaries at 3 and 8 doublings.
    pub fn with_default_boundaries(
        c0: f64,
        x0: f64,
        lr_revolutionary: f64,
        lr_evolutionary: f64,
        lr_conventional: f64,
    ) -> Result<Self, CurveError> {
        Self::new(
            c0,
            x0,
            vec![
                Stage {
                    upto_doublings: Some(3.0),
                    lr: lr_revolutionary,
                },
                Stage {
                    upto_doublings: Some(8.0),
                    lr: lr_evolutionary,
                },
                Stage {
                    upto_doublings: None,
                    lr: lr_conventional,
                },
            ],
        )
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }
    pub fn x0(&self) -> f64 {
        self.x0
    }
    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    /// (stage index, lower doubling bound, upper doubling bound) covering `n`.
    /// Right-continuous: n exactly at a boundary belongs to the next stage.
    fn stage_at(&self, n: f64) -> (usize, f64, f64) {
        let mut lo = 0.0;
        for (i, s) in self.stages.iter().enumerate() {
            let hi = match s.upto_doublings {
                Some(u) if i + 1 < self.stages.len() => u,
                _ => f64::INFINITY,
            };
            if n < hi || i + 1 == self.stages.len() {
                return (i, lo, hi);
            }
            lo = hi;
        }
        unreachable!("stages are non-empty")
    }

    /// ln C(x) - ln c0: piecewise linear in doublings with slope b_i ln 2.
    fn log_cost_offset(&self, x: f64) -> f64 {
        let n = (x / self.x0).log2();
        if n <= 0.0 {
            // Below the reference the first stage's rate extrapolates.
            return n * (1.0 - self.stages[0].lr).log2() * std::f64::consts::LN_2;
        }
        let mut acc = 0.0;
        let mut lo = 0.0;
        for (i, s) in self.stages.iter().enumerate() {
            let hi = match s.upto_doublings {
                Some(u) if i + 1 < self.stages.len() => u,
                _ => f64::INFINITY,
            };
            let span = (n.min(hi) - lo).max(0.0);
            acc += span * (1.0 - s.lr).log2();
            if n <= hi {
                break;
            }
            lo = hi;
        }
        acc * std::f64::consts::LN_2
    }
}

/// Wrapper adding a cost floor and/or a pre-commercial constant-cost threshold
/// to any inner curve.
///
/// Below `threshold_x` the cost is held at the inner curve's initial cost;
/// above it the inner curve applies at face value, so a jump at the threshold
/// is possible (anchor the inner x0 at the threshold for a continuous curve).
/// The floor clips from below, and is ignored entirely when the inner curve is
/// not non-increasing (rising curves never converge to a floor).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModifierSpec {
    inner: Box<LearningSpec>,
    floor_cost: Option<f64>,
    threshold_x: Option<f64>,
}

impl ModifierSpec {
    pub fn new(
        inner: LearningSpec,
        floor_cost: Option<f64>,
        threshold_x: Option<f64>,
    ) -> Result<Self, CurveError> {
        if floor_cost.is_none() && threshold_x.is_none() {
            return Err(CurveError::InvalidSpec(
                "modifier needs a floor cost or a threshold".into(),
            ));
        }
        if let Some(f) = floor_cost {
            check_positive("floor_cost", f)?;
            let c_init = inner.initial_cost()?;
            if f > c_init {
                return Err(CurveError::InvalidSpec(format!(
                    "floor cost {f} exceeds the initial cost {c_init}"
                )));
            }
        }
        if let Some(t) = threshold_x {
            check_positive("threshold_x", t)?;
        }
        if matches!(inner, LearningSpec::TwoFactor(_)) {
            return Err(CurveError::Unsupported {
                op: "modifier",
                variant: "two_factor",
            });
        }
        Ok(Self {
            inner: Box::new(inner),
            floor_cost,
            threshold_x,
        })
    }

    pub fn inner(&self) -> &LearningSpec {
        &self.inner
    }
    pub fn floor_cost(&self) -> Option<f64> {
        self.floor_cost
    }
    pub fn threshold_x(&self) -> Option<f64> {
        self.threshold_x
    }

    fn floor_applies(&self) -> bool {
        self.floor_cost.is_some() && self.inner.is_cost_nonincreasing()
    }

    /// Unit cost before floor clipping (threshold applied).
    fn base_cost(&self, x: f64) -> Result<f64, CurveError> {
        if let Some(t) = self.threshold_x {
            if x < t {
                return self.inner.initial_cost();
            }
        }
        self.inner.unit_cost(x)
    }

    /// Smallest x in [lo, hi] where the thresholded inner cost has dropped to
    /// the floor, if it does within the interval. Bisection; the base cost is
    /// non-increasing whenever the floor applies.
    fn floor_crossover(&self, lo: f64, hi: f64) -> Result<Option<f64>, CurveError> {
        let f = match self.floor_cost {
            Some(f) if self.floor_applies() => f,
            _ => return Ok(None),
        };
        if self.base_cost(lo)? <= f {
            return Ok(Some(lo));
        }
        if self.base_cost(hi)? > f {
            return Ok(None);
        }
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if self.base_cost(mid)? > f {
                a = mid;
            } else {
                b = mid;
            }
        }
        Ok(Some(b))
    }
}

/// Tagged union over every curve family the toolkit evaluates.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum LearningSpec {
    OneFactor(OneFactorSpec),
    TwoFactor(TwoFactorSpec),
    Composite(CompositeSpec),
    Partial(PartialSpec),
    Diminishing(DiminishingSpec),
    Staged(StagedSpec),
    Modified(ModifierSpec),
}

impl LearningSpec {
    pub fn variant_name(&self) -> &'static str {
        match self {
            LearningSpec::OneFactor(_) => "one_factor",
            LearningSpec::TwoFactor(_) => "two_factor",
            LearningSpec::Composite(_) => "composite",
            LearningSpec::Partial(_) => "partial",
            LearningSpec::Diminishing(_) => "diminishing",
            LearningSpec::Staged(_) => "staged",
            LearningSpec::Modified(_) => "modified",
        }
    }

    /// Experience value where the curve is anchored: cumulative cost is zero
    /// here and PWL grids start here. For composites this is the smallest
    /// component reference.
    pub fn reference_experience(&self) -> f64 {
        match self {
            LearningSpec::OneFactor(s) => s.x0,
            LearningSpec::TwoFactor(s) => s.x0,
            LearningSpec::Composite(s) => s.min_x0(),
            LearningSpec::Partial(s) => s.x0,
            LearningSpec::Diminishing(s) => s.x0,
            LearningSpec::Staged(s) => s.x0,
            LearningSpec::Modified(m) => m.inner.reference_experience(),
        }
    }

    /// Unit cost at the curve's own reference experience (and reference
    /// research spend for the two-factor family).
    pub fn initial_cost(&self) -> Result<f64, CurveError> {
        match self {
            LearningSpec::TwoFactor(s) => Ok(s.c0),
            LearningSpec::Modified(m) => {
                let base = m.inner.initial_cost()?;
                Ok(match m.floor_cost {
                    Some(f) if m.floor_applies() => base.max(f),
                    _ => base,
                })
            }
            _ => self.unit_cost(self.reference_experience()),
        }
    }

    /// True when unit cost never increases with experience; decides whether
    /// the floor modifier engages.
    pub fn is_cost_nonincreasing(&self) -> bool {
        match self {
            LearningSpec::OneFactor(s) => s.b_lbd <= 0.0,
            LearningSpec::TwoFactor(s) => s.b_lbd <= 0.0,
            LearningSpec::Composite(s) => s.components.iter().all(|c| c.b_lbd <= 0.0),
            LearningSpec::Partial(s) => s.b_lbd <= 0.0,
            LearningSpec::Diminishing(_) => true,
            LearningSpec::Staged(s) => s.stages.iter().all(|st| st.lr >= 0.0),
            LearningSpec::Modified(m) => m.inner.is_cost_nonincreasing(),
        }
    }

    /// Unit cost at experience `x`. Two-factor specs need
    /// [`LearningSpec::unit_cost_at`] with a research spend.
    pub fn unit_cost(&self, x: f64) -> Result<f64, CurveError> {
        self.unit_cost_at(x, None)
    }

    /// Unit cost at experience `x` and, for two-factor curves, cumulative
    /// research spend `y`. Other families ignore `y`.
    pub fn unit_cost_at(&self, x: f64, y: Option<f64>) -> Result<f64, CurveError> {
        if !(x > 0.0) {
            return Err(CurveError::NonPositiveExperience { x });
        }
        match self {
            LearningSpec::OneFactor(s) => Ok(s.c0 * (x / s.x0).powf(s.b_lbd)),
            LearningSpec::TwoFactor(s) => {
                let y = y.ok_or(CurveError::MissingResearch)?;
                if !(y > 0.0) {
                    return Err(CurveError::NonPositiveResearch { y });
                }
                Ok(s.c0 * (x / s.x0).powf(s.b_lbd) * (y / s.y0).powf(s.b_lbr))
            }
            LearningSpec::Composite(s) => Ok(s
                .components
                .iter()
                .map(|c| c.c0 * (x / c.x0).powf(c.b_lbd))
                .sum()),
            LearningSpec::Partial(s) => {
                Ok(s.c0 * ((1.0 - s.alpha) + s.alpha * (x / s.x0).powf(s.b_lbd)))
            }
            LearningSpec::Diminishing(s) => Ok(s.c0 * s.log_cost_offset(x)?.exp()),
            LearningSpec::Staged(s) => Ok(s.c0 * s.log_cost_offset(x).exp()),
            LearningSpec::Modified(m) => {
                let base = m.base_cost(x)?;
                Ok(match m.floor_cost {
                    Some(f) if m.floor_applies() => base.max(f),
                    _ => base,
                })
            }
        }
    }

    /// Total expenditure ∫_{x0}^{x} C(u) du from the reference to `x`.
    ///
    /// Closed-form per power-law segment; staged, threshold and floored
    /// variants integrate piecewise; the diminishing family uses one
    /// Gauss-Legendre panel per doubling (its integrand has no elementary
    /// antiderivative). Two-factor curves are rejected: without an exogenous
    /// y(x) trajectory the integral is undefined.
    pub fn cumulative_cost(&self, x: f64) -> Result<f64, CurveError> {
        let x0 = self.reference_experience();
        if !(x > 0.0) {
            return Err(CurveError::NonPositiveExperience { x });
        }
        if x < x0 {
            return Err(CurveError::BelowReference { x, x0 });
        }
        if x == x0 {
            return Ok(0.0);
        }
        match self {
            LearningSpec::OneFactor(s) => Ok(power_integral(s.c0, s.x0, s.b_lbd, x0, x)),
            LearningSpec::TwoFactor(_) => Err(CurveError::Unsupported {
                op: "cumulative_cost",
                variant: "two_factor",
            }),
            LearningSpec::Composite(s) => Ok(s
                .components
                .iter()
                .map(|c| power_integral(c.c0, c.x0, c.b_lbd, x0, x))
                .sum()),
            LearningSpec::Partial(s) => Ok(s.c0 * (1.0 - s.alpha) * (x - x0)
                + s.alpha * power_integral(s.c0, s.x0, s.b_lbd, x0, x)),
            LearningSpec::Diminishing(s) => {
                // ∫ C(u) du = x0 ln2 ∫ C(x0 2^t) 2^t dt, one panel per doubling.
                s.rate_at(x)?;
                let t_end = (x / s.x0).log2();
                let integrand = |t: f64| -> f64 {
                    let log_off = if s.d == 0.0 {
                        t * (1.0 - s.lr0).ln()
                    } else {
                        let q = 1.0 - s.d;
                        (dilog(s.lr0) - dilog(s.lr0 * q.powf(t))) / q.ln()
                    };
                    s.c0 * log_off.exp() * t.exp2()
                };
                let mut total = 0.0;
                let panels = t_end.ceil().max(1.0) as usize;
                let step = t_end / panels as f64;
                for k in 0..panels {
                    let a = k as f64 * step;
                    let b = (k + 1) as f64 * step;
                    total += gl_panel(&integrand, a, b);
                }
                Ok(total * s.x0 * std::f64::consts::LN_2)
            }
            LearningSpec::Staged(s) => {
                let mut acc = 0.0;
                let mut seg_lo = x0;
                let mut cost_lo = s.c0;
                for (i, stage) in s.stages.iter().enumerate() {
                    let hi_doubling = match stage.upto_doublings {
                        Some(u) if i + 1 < s.stages.len() => u,
                        _ => f64::INFINITY,
                    };
                    let seg_hi = if hi_doubling.is_infinite() {
                        x
                    } else {
                        (s.x0 * hi_doubling.exp2()).min(x)
                    };
                    if seg_hi > seg_lo {
                        let b = (1.0 - stage.lr).log2();
                        acc += power_integral(cost_lo, seg_lo, b, seg_lo, seg_hi);
                        cost_lo *= (seg_hi / seg_lo).powf(b);
                        seg_lo = seg_hi;
                    }
                    if seg_lo >= x {
                        break;
                    }
                }
                Ok(acc)
            }
            LearningSpec::Modified(m) => {
                let c_init = m.inner.initial_cost()?;
                let thr = m.threshold_x.unwrap_or(x0).max(x0);
                // Integral of the thresholded (but unfloored) cost over [a, b].
                let int_base = |a: f64, b: f64| -> Result<f64, CurveError> {
                    let mut acc = 0.0;
                    if a < thr {
                        acc += c_init * (b.min(thr) - a);
                    }
                    if b > thr {
                        acc += m.inner.cumulative_cost(b)? - m.inner.cumulative_cost(a.max(thr))?;
                    }
                    Ok(acc)
                };
                match m.floor_crossover(x0, x)? {
                    None => int_base(x0, x),
                    Some(xf) => {
                        let f = m.floor_cost.expect("crossover implies a floor");
                        Ok(int_base(x0, xf)? + f * (x - xf))
                    }
                }
            }
        }
    }

    /// Effective learning rate 1 - 2^{e(x)} with e the local log-log cost
    /// elasticity. Analytic for every supported family; the two-factor family
    /// is rejected (its elasticity depends on the unspecified y path).
    pub fn effective_learning_rate(&self, x: f64) -> Result<f64, CurveError> {
        if !(x > 0.0) {
            return Err(CurveError::NonPositiveExperience { x });
        }
        match self {
            LearningSpec::OneFactor(s) => Ok(exponent_to_lr(s.b_lbd)),
            LearningSpec::TwoFactor(_) => Err(CurveError::Unsupported {
                op: "effective_learning_rate",
                variant: "two_factor",
            }),
            LearningSpec::Composite(s) => {
                let mut total = 0.0;
                let mut weighted = 0.0;
                for c in &s.components {
                    let cost = c.c0 * (x / c.x0).powf(c.b_lbd);
                    total += cost;
                    weighted += cost * c.b_lbd;
                }
                Ok(exponent_to_lr(weighted / total))
            }
            LearningSpec::Partial(s) => {
                let r = (x / s.x0).powf(s.b_lbd);
                let e = s.alpha * s.b_lbd * r / ((1.0 - s.alpha) + s.alpha * r);
                Ok(exponent_to_lr(e))
            }
            LearningSpec::Diminishing(s) => s.rate_at(x),
            LearningSpec::Staged(s) => {
                let n = (x / s.x0).log2();
                let (i, _, _) = s.stage_at(n.max(0.0));
                Ok(s.stages[i].lr)
            }
            LearningSpec::Modified(m) => {
                if let Some(t) = m.threshold_x {
                    if x < t {
                        return Ok(0.0);
                    }
                }
                if m.floor_applies() {
                    let f = m.floor_cost.expect("floor_applies checked");
                    if m.base_cost(x)? <= f {
                        return Ok(0.0);
                    }
                }
                m.inner.effective_learning_rate(x)
            }
        }
    }

    /// Interior points where the curve changes regime (stage boundaries,
    /// thresholds, floor crossovers), clipped to the open interval (lo, hi).
    /// PWL construction pins breakpoints here so chords never straddle a kink.
    pub(crate) fn regime_boundaries(&self, lo: f64, hi: f64) -> Result<Vec<f64>, CurveError> {
        let mut out = Vec::new();
        match self {
            LearningSpec::Staged(s) => {
                for stage in &s.stages {
                    if let Some(u) = stage.upto_doublings {
                        let xb = s.x0 * u.exp2();
                        if xb > lo && xb < hi {
                            out.push(xb);
                        }
                    }
                }
            }
            LearningSpec::Modified(m) => {
                if let Some(t) = m.threshold_x {
                    if t > lo && t < hi {
                        out.push(t);
                    }
                }
                if let Some(xf) = m.floor_crossover(lo, hi)? {
                    if xf > lo && xf < hi {
                        out.push(xf);
                    }
                }
                out.extend(m.inner.regime_boundaries(lo, hi)?);
            }
            _ => {}
        }
        out.sort_by(f64::total_cmp);
        out.dedup();
        Ok(out)
    }
}

fn check_positive(name: &str, v: f64) -> Result<(), CurveError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CurveError::InvalidSpec(format!(
            "{name} must be finite and positive, got {v}"
        )))
    }
}
