//! Proportional-reinsurance reading of the expansion model.
//!
//! An insurer holds a Cramér–Lundberg book: claims arrive as a Poisson
//! process with intensity `lambda` and have sizes with mean `z1` and second
//! moment `z2`; premiums are loaded at the insurer's safety factor `eta`.
//! The insurer retains a fraction `f(t)` of every claim and cedes the rest
//! to a reinsurer who charges a loading `theta >= eta`. Retention `f <= 1`
//! is an ordinary proportional cover; pushing `f` above `1` means the
//! insurer starts *writing* reinsurance for others — the expansion decision
//! — at a running licensing/administration cost `rho`.
//!
//! Approximating the compensated claim flow by a diffusion turns the
//! surplus into exactly the controlled process of [`crate::model`] with
//!
//! ```text
//! mu    = theta * lambda * z1      (net drift earned per unit retained)
//! delta = (theta - eta) * lambda * z1   (cost of the loading gap)
//! sigma = sqrt(lambda * z2)        (claim volatility per unit retained)
//! beta  = 1                        (retention cannot exceed the book)
//! ```
//!
//! so the generic thresholds, value functions, and controls apply verbatim.
//! Everything in this module delegates to [`crate::model`] and
//! [`crate::closed_form`] through that mapping; only the vocabulary
//! changes (the classifier speaks in "Case I/II/III").

use crate::closed_form::optimal_control;
use crate::model::{DomainError, ExpansionCase, ExpansionSchedule, MarketParams};

/// Cramér–Lundberg description of the insurance market.
///
/// All rates are per year; monetary fields share one currency unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InsuranceParams {
    /// Claim arrival intensity `lambda` (claims per year, > 0).
    pub lambda: f64,
    /// Mean claim size `z1` (> 0).
    pub z1: f64,
    /// Second raw moment of the claim size `z2` (>= z1^2 by Jensen).
    pub z2: f64,
    /// Insurer safety loading `eta` (> 0): premiums come in at
    /// `(1 + eta) lambda z1`.
    pub eta: f64,
    /// Reinsurer safety loading `theta` (>= eta): ceding costs
    /// `(1 + theta)` per unit of expected ceded claims.
    pub theta: f64,
    /// Risk-free rate earned on surplus (per year, > 0).
    pub r: f64,
    /// Running cost of operating as a reinsurance writer (>= 0).
    pub rho: f64,
    /// Absolute risk aversion of the insurer (> 0).
    pub m: f64,
    /// Planning horizon in years (> 0).
    pub horizon: f64,
    /// Initial surplus.
    pub x0hat: f64,
}

/// Presentation alias for [`ExpansionCase`] in the reinsurance vocabulary.
///
/// One classifier decides the case; this enum only renames its outcomes so
/// the two vocabularies cannot drift apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReinsuranceCase {
    /// Start writing reinsurance immediately (`t̂1 = t̂2 = 0`).
    I,
    /// Retain the full book from the start and begin writing reinsurance at
    /// `t̂2` (`0 = t̂1 < t̂2`).
    II,
    /// Buy proportional cover before `t̂1`, retain fully on `[t̂1, t̂2)`,
    /// then start writing reinsurance (`0 < t̂1 < t̂2`).
    III,
    /// Never write reinsurance; manage the book under the retention cap.
    Never,
}

impl From<ExpansionCase> for ReinsuranceCase {
    fn from(case: ExpansionCase) -> Self {
        match case {
            ExpansionCase::ImmediateExpansion => ReinsuranceCase::I,
            ExpansionCase::WaitFromStart => ReinsuranceCase::II,
            ExpansionCase::ConstrainedThenWait => ReinsuranceCase::III,
            ExpansionCase::NeverExpand => ReinsuranceCase::Never,
        }
    }
}

impl core::fmt::Display for ReinsuranceCase {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            ReinsuranceCase::I => "case_i",
            ReinsuranceCase::II => "case_ii",
            ReinsuranceCase::III => "case_iii",
            ReinsuranceCase::Never => "never",
        })
    }
}

impl InsuranceParams {
    /// Checks every field against its domain.
    pub fn validate(&self) -> Result<(), DomainError> {
        let positive: [(&'static str, f64); 6] = [
            ("lambda", self.lambda),
            ("z1", self.z1),
            ("eta", self.eta),
            ("r", self.r),
            ("m", self.m),
            ("horizon", self.horizon),
        ];
        for (field, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(DomainError {
                    field,
                    reason: "must be strictly positive and finite",
                });
            }
        }
        if !(self.theta >= self.eta && self.theta.is_finite()) {
            return Err(DomainError {
                field: "theta",
                reason: "reinsurer loading must be finite and at least eta",
            });
        }
        if !(self.z2 >= self.z1 * self.z1 && self.z2.is_finite()) {
            return Err(DomainError {
                field: "z2",
                reason: "second moment must be finite and at least z1^2",
            });
        }
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return Err(DomainError {
                field: "rho",
                reason: "must be non-negative and finite",
            });
        }
        if !self.x0hat.is_finite() {
            return Err(DomainError {
                field: "x0hat",
                reason: "must be finite",
            });
        }
        Ok(())
    }

    /// Validates and returns `self`, for builder-style call sites.
    pub fn validated(self) -> Result<Self, DomainError> {
        self.validate()?;
        Ok(self)
    }

    /// Maps the insurance market to its diffusion-approximation parameters
    /// (`mu = theta lambda z1`, `delta = (theta - eta) lambda z1`,
    /// `sigma = sqrt(lambda z2)`, `beta = 1`).
    pub fn to_diffusion(&self) -> Result<MarketParams, DomainError> {
        self.validate()?;
        MarketParams {
            r: self.r,
            mu: self.theta * self.lambda * self.z1,
            sigma: crate::math::sqrt(self.lambda * self.z2),
            delta: (self.theta - self.eta) * self.lambda * self.z1,
            rho: self.rho,
            beta: 1.0,
            m: self.m,
            horizon: self.horizon,
            x0: self.x0hat,
        }
        .validated()
    }
}

/// Expansion schedule of the reinsurance problem: `t̂1`, `t̂2`, and the case
/// classification, via the diffusion mapping with `beta = 1`.
pub fn reinsurance_schedule(ins: &InsuranceParams) -> Result<ExpansionSchedule, DomainError> {
    Ok(ins.to_diffusion()?.compute_schedule())
}

/// The reinsurance-vocabulary case label for a schedule produced by
/// [`reinsurance_schedule`].
pub fn reinsurance_case(schedule: &ExpansionSchedule) -> ReinsuranceCase {
    schedule.case.into()
}

/// Optimal retention/exposure at time `t`: the frictionless scale
/// `(mu / sigma^2 m) e^{-r (T - t)}` clipped at 1 before `t̂1`, exactly 1 on
/// `[t̂1, t̂2)`, and the frictionless scale (now above 1) from `t̂2` on.
///
/// Values at or below 1 are proportional retentions; values above 1 mean
/// the insurer writes reinsurance for others.
pub fn reinsurance_strategy(ins: &InsuranceParams, t: f64) -> Result<f64, DomainError> {
    let params = ins.to_diffusion()?;
    if !(0.0..=params.horizon).contains(&t) {
        return Err(DomainError {
            field: "t",
            reason: "time must lie in [0, horizon]",
        });
    }
    let schedule = params.compute_schedule();
    Ok(optimal_control(&params, &schedule, t))
}
