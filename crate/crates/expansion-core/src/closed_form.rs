//! Closed-form value functions, the expansion premium, and control paths.
//!
//! Three surfaces describe the problem:
//!
//! * the **post-expansion value** (cap lifted, running cost `rho` active)
//!
//!   ```text
//!   V1(t,x) = -(1/m) exp{ (-m x - d(t)) e^{r(T-t)} + g(t) }
//!   d(t) = -((delta + rho) m / r) (1 - e^{-r(T-t)})
//!   g(t) = -(mu^2 / (2 sigma^2)) (T - t)
//!   ```
//!
//! * the **expansion premium** — the excess of the not-yet-expanded value
//!   over `V1` on `[t1, T]`:
//!
//!   ```text
//!   P(t,x) = (e^{int_t^{t2} m h(s) ds} - 1) V1(t,x)   for t in [t1, t2)
//!   P(t,x) = 0                                        for t in [t2, T]
//!   ```
//!
//!   positive on `[t1, t2)` because `h < 0` there and `V1 < 0`, and glued to
//!   zero with matching value and first derivatives at `t2` (smooth fit);
//!
//! * the **full value** `V(t,x)`: for `t >= t1` it is `V1 + P`; before the
//!   cap binds it takes the same exponential shape with shifted coefficients
//!
//!   ```text
//!   V(t,x)  = -(1/m) exp{ (-m x - d0(t)) e^{r(T-t)} + g0(t) }
//!   d0(t)   = ((delta+rho) m / r - (rho m / r) e^{r(T-t1)}) e^{-r(T-t)} - delta m / r
//!   g0(t)   = g(t) + int_{t1}^{t2} m h(s) ds
//!   ```
//!
//!   (`d0(t1) = d(t1)` exactly, so the two branches agree at `t1`).
//!
//! Exponentials of model quantities can exceed the `f64` range for extreme
//! parameters; every evaluation reports [`EvalError::Overflow`] rather than
//! silently saturating. Underflow to zero is benign (the value's limit is
//! `0^-`) and is not reported.

use crate::math;
use crate::model::{DomainError, ExpansionSchedule, ExpansionTimes, MarketParams};

/// Evaluation failure of a closed-form expression.
#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum EvalError {
    /// The exponent left the representable range of `f64`.
    #[error("value overflow: exponent {exponent} exceeds the f64 range")]
    Overflow {
        /// The offending exponent.
        exponent: f64,
    },
    /// The evaluation point or schedule is outside the expression's domain.
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// `-(1/m) e^{exponent}`, reporting overflow instead of returning `-inf`.
fn neg_exp_over_m(exponent: f64, m: f64) -> Result<f64, EvalError> {
    let e = math::exp(exponent);
    if e.is_finite() {
        Ok(-e / m)
    } else {
        Err(EvalError::Overflow { exponent })
    }
}

/// Exponent of `V1`: `(-m x - d(t)) a(t) + g(t)`.
fn post_expansion_exponent(params: &MarketParams, t: f64, x: f64) -> f64 {
    let a = params.growth(t);
    let d = -((params.delta + params.rho) * params.m / params.r) * (1.0 - 1.0 / a);
    let g = -(params.mu * params.mu / (2.0 * params.sigma * params.sigma)) * (params.horizon - t);
    (-params.m * x - d) * a + g
}

/// Post-expansion value `V1(t, x)` for `t` in `[0, T]`.
///
/// This is the value of running the uncapped scale `f1` from `t` on while
/// paying both running costs; it is the obstacle of the pre-expansion
/// variational inequality.
pub fn value_post_expansion(params: &MarketParams, t: f64, x: f64) -> Result<f64, EvalError> {
    neg_exp_over_m(post_expansion_exponent(params, t, x), params.m)
}

/// Expansion premium `P(t, x)` for `t` in `[t1, T]`.
///
/// Exactly `0.0` on `[t2, T]` (the two branches are glued, not merely
/// close). Errors with a domain error for `t < t1`, where the premium is not
/// defined, and for schedules that never expand.
pub fn premium(
    params: &MarketParams,
    schedule: &ExpansionSchedule,
    t: f64,
    x: f64,
) -> Result<f64, EvalError> {
    let times = schedule.times.ok_or(DomainError {
        field: "schedule",
        reason: "premium requires an expanding schedule",
    })?;
    if t < times.t1 {
        return Err(EvalError::Domain(DomainError {
            field: "t",
            reason: "premium is defined on [t1, T] only",
        }));
    }
    if t >= times.t2 {
        return Ok(0.0);
    }
    // exp(I) - 1 with I = int_t^{t2} m h < 0, via expm1 to keep precision as
    // I -> 0 at the gluing point.
    let i = params.m * params.h_integral(t, times.t2);
    Ok(math::exp_m1(i) * value_post_expansion(params, t, x)?)
}

/// `V1 e^{m int_t^{t2} h}` on `[t1, T]`, glued bitwise to `V1` on `[t2, T]`.
///
/// Evaluated as a single exponential rather than as `V1 + P`: deep in the
/// band the premium approaches `-V1` and the sum would cancel
/// catastrophically.
fn auxiliary_value(
    params: &MarketParams,
    times: ExpansionTimes,
    t: f64,
    x: f64,
) -> Result<f64, EvalError> {
    if t >= times.t2 {
        return value_post_expansion(params, t, x);
    }
    let band = params.m * params.h_integral(t, times.t2);
    neg_exp_over_m(post_expansion_exponent(params, t, x) + band, params.m)
}

/// Full value `V(t, x)` of the not-yet-expanded firm for `t` in `[0, T]`.
///
/// Equals `V1 + P` everywhere it is defined; `V == V1` holds bitwise on
/// `[t2, T]`. On `[t1, t2)` it is evaluated as the single exponential
/// `V1 e^{m int_t^{t2} h}` rather than by adding the two branches: deep in
/// the band the premium approaches `-V1` and the sum would cancel
/// catastrophically. Errors with a domain error for never-expanding
/// schedules (see [`value_no_expansion`] for that regime).
pub fn value_full(
    params: &MarketParams,
    schedule: &ExpansionSchedule,
    t: f64,
    x: f64,
) -> Result<f64, EvalError> {
    let times = schedule.times.ok_or(DomainError {
        field: "schedule",
        reason: "value_full requires an expanding schedule",
    })?;
    if t >= times.t1 {
        return auxiliary_value(params, times, t, x);
    }
    let a = params.growth(t);
    let m_over_r = params.m / params.r;
    let d0 = ((params.delta + params.rho) * m_over_r
        - params.rho * m_over_r * params.growth(times.t1))
        / a
        - params.delta * m_over_r;
    let g0 = -(params.mu * params.mu / (2.0 * params.sigma * params.sigma))
        * (params.horizon - t)
        + params.m * params.h_integral(times.t1, times.t2);
    neg_exp_over_m((-params.m * x - d0) * a + g0, params.m)
}

/// Value of the capped, never-expanding firm (scale `min(f1, beta)`, no
/// expansion cost ever charged).
///
/// This is the relevant closed form when feasibility fails; it supplies
/// boundary data for the variational-inequality solver in that regime. Same
/// exponential shape with
///
/// ```text
/// D(t) = -(delta m / r)(1 - e^{-r(T-t)})
/// G(t) = -[ mu^2/(2 sigma^2) (u - t) + mu beta m (a(u) - 1)/r
///           - sigma^2 beta^2 m^2 (a(u)^2 - 1)/(4 r) ],   u = max(t, t_cap)
/// ```
///
/// where `t_cap` is the (clamped) time the frictionless scale hits the cap.
pub fn value_no_expansion(params: &MarketParams, t: f64, x: f64) -> Result<f64, EvalError> {
    let sig2 = params.sigma * params.sigma;
    let t_cap = (params.horizon - math::ln(params.mu / (sig2 * params.beta * params.m)) / params.r)
        .max(0.0)
        .min(params.horizon);
    let u = t.max(t_cap);
    let a_u = params.growth(u);
    let g = -(params.mu * params.mu / (2.0 * sig2) * (u - t)
        + params.mu * params.beta * params.m * (a_u - 1.0) / params.r
        - sig2 * params.beta * params.beta * params.m * params.m * (a_u * a_u - 1.0)
            / (4.0 * params.r));
    let a = params.growth(t);
    let d = -(params.delta * params.m / params.r) * (1.0 - 1.0 / a);
    neg_exp_over_m((-params.m * x - d) * a + g, params.m)
}

/// Which value surface a [`ValueSurface`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceKind {
    /// `V1` on `[0, T]`.
    PostExpansion,
    /// The auxiliary not-yet-expanded value `V1 + P` on `[t1, T]`.
    Auxiliary,
    /// The full value `V` on `[0, T]`.
    Full,
}

/// A value surface bound to a parameter set and its schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueSurface {
    /// Model parameters the surface was built from.
    pub params: MarketParams,
    /// Schedule computed from `params`.
    pub schedule: ExpansionSchedule,
    /// Which of the three surfaces to evaluate.
    pub kind: SurfaceKind,
}

impl ValueSurface {
    /// Binds `params` (schedule computed internally) to a surface kind.
    pub fn new(params: MarketParams, kind: SurfaceKind) -> Self {
        ValueSurface {
            params,
            schedule: params.compute_schedule(),
            kind,
        }
    }

    /// Evaluates the surface at `(t, x)`.
    pub fn eval(&self, t: f64, x: f64) -> Result<f64, EvalError> {
        match self.kind {
            SurfaceKind::PostExpansion => value_post_expansion(&self.params, t, x),
            SurfaceKind::Auxiliary => {
                let times = self.schedule.times.ok_or(DomainError {
                    field: "schedule",
                    reason: "auxiliary value requires an expanding schedule",
                })?;
                if t < times.t1 {
                    return Err(EvalError::Domain(DomainError {
                        field: "t",
                        reason: "auxiliary value is defined on [t1, T] only",
                    }));
                }
                auxiliary_value(&self.params, times, t, x)
            }
            SurfaceKind::Full => value_full(&self.params, &self.schedule, t, x),
        }
    }
}

/// Expansion-and-scale policy evaluated by the simulator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicyKind {
    /// The optimal feedback scale for the policy's schedule.
    Optimal,
    /// Constant scale at the given level (capped at `beta` before
    /// expansion); expansion still at the schedule's `t2`.
    CappedConstant(f64),
    /// Optimal scale plus a constant offset on a time window
    /// `[window.0, window.1)`, clipped back into the admissible set
    /// (`[0, beta]` before expansion, `[0, inf)` after).
    Perturbed {
        /// Additive change to the scale inside the window.
        offset: f64,
        /// Half-open time window the offset applies on.
        window: (f64, f64),
    },
}

/// A deterministic policy: an expansion schedule plus a scale rule.
///
/// The schedule is carried explicitly (not recomputed from parameters) so
/// that deliberately suboptimal variants — e.g. an expansion time shifted
/// off the optimum — can be expressed and priced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicySpec {
    /// Expansion times this policy uses (possibly off-optimal).
    pub schedule: ExpansionSchedule,
    /// Scale rule.
    pub kind: PolicyKind,
}

impl PolicySpec {
    /// The optimal policy for `params`.
    pub fn optimal(params: &MarketParams) -> Self {
        PolicySpec {
            schedule: params.compute_schedule(),
            kind: PolicyKind::Optimal,
        }
    }

    /// The optimal scale rule with the expansion time shifted by `shift`
    /// years, clamped to `[t1, T]`. Never-expanding schedules are returned
    /// unchanged.
    pub fn optimal_with_expansion_shift(params: &MarketParams, shift: f64) -> Self {
        let mut schedule = params.compute_schedule();
        if let Some(times) = schedule.times.as_mut() {
            times.t2 = (times.t2 + shift).max(times.t1).min(params.horizon);
            times.waiting_time = times.t2 - times.t1;
        }
        PolicySpec {
            schedule,
            kind: PolicyKind::Optimal,
        }
    }

    /// The policy's expansion time; `None` when it never expands.
    pub fn expansion_time(&self) -> Option<f64> {
        self.schedule.t2()
    }

    /// Scale prescribed at time `t` (piecewise in `t`; state-independent).
    pub fn control(&self, params: &MarketParams, t: f64) -> f64 {
        let f1 = params.frictionless_scale(t);
        let expanded = match self.schedule.t2() {
            Some(t2) => t >= t2,
            None => false,
        };
        let base = match self.kind {
            PolicyKind::Optimal | PolicyKind::Perturbed { .. } => {
                if expanded {
                    f1
                } else {
                    f1.min(params.beta)
                }
            }
            PolicyKind::CappedConstant(level) => {
                let level = level.max(0.0);
                if expanded {
                    level
                } else {
                    level.min(params.beta)
                }
            }
        };
        match self.kind {
            PolicyKind::Perturbed { offset, window } if t >= window.0 && t < window.1 => {
                let shifted = (base + offset).max(0.0);
                if expanded {
                    shifted
                } else {
                    shifted.min(params.beta)
                }
            }
            _ => base,
        }
    }
}

/// Optimal scale at time `t` for the given schedule: `f1` before the cap
/// binds and after expansion, `beta` while pinned, `min(f1, beta)` forever
/// if expansion is never worthwhile.
pub fn optimal_control(params: &MarketParams, schedule: &ExpansionSchedule, t: f64) -> f64 {
    let f1 = params.frictionless_scale(t);
    match schedule.times {
        None => f1.min(params.beta),
        Some(times) => {
            if t >= times.t1 && t < times.t2 {
                params.beta
            } else if t < times.t1 {
                // f1 < beta here by definition of t1; min guards rounding at
                // the junction.
                f1.min(params.beta)
            } else {
                f1
            }
        }
    }
}
