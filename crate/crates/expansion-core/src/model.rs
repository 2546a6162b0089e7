//! Market parameters, feasibility conditions, and the closed-form expansion
//! schedule.
//!
//! The firm's surplus follows
//!
//! ```text
//! dX(s) = [ r X(s) + mu f(s) - delta - rho 1{s >= tau} ] ds + sigma f(s) dW(s)
//! ```
//!
//! with scale cap `f <= beta` before the expansion time `tau`. Whether and
//! when expanding is worthwhile is governed by the *opportunity-cost
//! function*
//!
//! ```text
//! h(t) = c0 + c2 e^{2r(T-t)} - c1 e^{r(T-t)},
//! c0 = mu^2 / (2 sigma^2 m),   c2 = beta^2 sigma^2 m / 2,   c1 = beta mu + rho
//! ```
//!
//! which is the running gain rate of the uncapped strategy over the capped
//! one, net of the expansion cost `rho`. The optimal schedule is a pair of
//! thresholds:
//!
//! * `t1 = max(0, T - ln(mu / (sigma^2 beta m)) / r)` — first time the
//!   frictionless scale `f1(t) = mu/(sigma^2 m) e^{-r(T-t)}` hits the cap;
//! * `t2 = max(t1, T - ln(a_minus) / r)` — the expansion time, where
//!   `a_minus` is the smaller root of the quadratic `c2 a^2 - c1 a + c0`
//!   (equivalently the last root of `h`), so that `h < 0` on `(t1, t2)` and
//!   `h > 0` on `(t2, T]`.
//!
//! Expansion is worthwhile at all only if the uncapped strategy out-earns the
//! capped one (`mu/sigma^2 > beta m`) and the running cost is affordable
//! (`rho <= rho_max`); otherwise the schedule degenerates to "never expand".

use crate::math;

/// Parameters of the expansion problem on a fixed horizon.
///
/// All fields are plain data; [`MarketParams::validate`] checks the domain.
/// The drift rate `r` must be strictly positive: the closed forms divide by
/// it, and the model's discounting structure degenerates at `r = 0`, so that
/// case is rejected rather than special-cased.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketParams {
    /// Risk-free growth rate of surplus (`r > 0`).
    pub r: f64,
    /// Excess return per unit of scale (`mu > 0`).
    pub mu: f64,
    /// Volatility per unit of scale (`sigma > 0`).
    pub sigma: f64,
    /// Running cost rate paid throughout (`delta >= 0`).
    pub delta: f64,
    /// Additional running cost rate after expansion (`rho >= 0`).
    pub rho: f64,
    /// Scale cap before expansion (`beta > 0`).
    pub beta: f64,
    /// Absolute risk aversion of the exponential utility (`m > 0`).
    pub m: f64,
    /// Terminal time `T` (`horizon > 0`).
    pub horizon: f64,
    /// Initial surplus `X(0)` (finite; utility is defined on all of `R`).
    pub x0: f64,
}

/// A parameter outside the model's domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("parameter `{field}` out of domain: {reason}")]
pub struct DomainError {
    /// Name of the offending field.
    pub field: &'static str,
    /// What the field violated.
    pub reason: &'static str,
}

/// The waiting-time sensitivity is undefined at the requested point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("waiting-time sensitivity undefined: {0}")]
pub struct DegenerateError(pub &'static str);

/// Outcome of the two feasibility conditions for expansion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityReport {
    /// Return condition: the uncapped strategy out-earns the cap,
    /// `mu / sigma^2 > beta m` (strict).
    pub cond_return: bool,
    /// Largest affordable expansion cost,
    /// `rho_max = mu^2/(2 sigma^2 m) + beta^2 sigma^2 m / 2 - beta mu`.
    pub rho_max: f64,
    /// Cost condition: `rho <= rho_max` (equality allowed; it yields
    /// `t2 = T`).
    pub cond_cost: bool,
    /// Both conditions hold: expanding is worthwhile somewhere on `[0, T]`.
    pub expandable: bool,
}

/// Which of the qualitative regimes the optimal schedule falls into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpansionCase {
    /// `t1 = t2 = 0`: the cap never binds and expansion is immediate.
    ImmediateExpansion,
    /// `t1 = 0 < t2`: the cap never binds but expansion waits.
    WaitFromStart,
    /// `0 < t1 <= t2`: the cap binds from `t1`, expansion at `t2`.
    ConstrainedThenWait,
    /// Expansion is never worthwhile on `[0, T]`.
    NeverExpand,
}

impl core::fmt::Display for ExpansionCase {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            ExpansionCase::ImmediateExpansion => "immediate_expansion",
            ExpansionCase::WaitFromStart => "wait_from_start",
            ExpansionCase::ConstrainedThenWait => "constrained_then_wait",
            ExpansionCase::NeverExpand => "never_expand",
        })
    }
}

/// The threshold times of an expandable schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionTimes {
    /// Time the scale cap starts binding.
    pub t1: f64,
    /// Optimal expansion time.
    pub t2: f64,
    /// `t2 - t1`, the span spent pinned at the cap.
    pub waiting_time: f64,
}

/// The optimal expansion schedule.
///
/// `times` is `Some` exactly when the case is not [`ExpansionCase::NeverExpand`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionSchedule {
    /// Qualitative regime.
    pub case: ExpansionCase,
    /// Threshold times; absent when expansion never happens.
    pub times: Option<ExpansionTimes>,
}

impl ExpansionSchedule {
    /// Time the cap starts binding, if the schedule expands.
    pub fn t1(&self) -> Option<f64> {
        self.times.map(|t| t.t1)
    }

    /// Expansion time, if the schedule expands.
    pub fn t2(&self) -> Option<f64> {
        self.times.map(|t| t.t2)
    }

    /// Waiting time `t2 - t1`, if the schedule expands.
    pub fn waiting_time(&self) -> Option<f64> {
        self.times.map(|t| t.waiting_time)
    }
}

impl MarketParams {
    /// Checks every field against its domain, reporting the first violation.
    pub fn validate(&self) -> Result<(), DomainError> {
        fn finite(field: &'static str, v: f64) -> Result<(), DomainError> {
            if v.is_finite() {
                Ok(())
            } else {
                Err(DomainError {
                    field,
                    reason: "must be finite",
                })
            }
        }
        fn positive(field: &'static str, v: f64) -> Result<(), DomainError> {
            finite(field, v)?;
            if v > 0.0 {
                Ok(())
            } else {
                Err(DomainError {
                    field,
                    reason: "must be strictly positive",
                })
            }
        }
        fn non_negative(field: &'static str, v: f64) -> Result<(), DomainError> {
            finite(field, v)?;
            if v >= 0.0 {
                Ok(())
            } else {
                Err(DomainError {
                    field,
                    reason: "must be non-negative",
                })
            }
        }
        positive("r", self.r)?;
        positive("mu", self.mu)?;
        positive("sigma", self.sigma)?;
        non_negative("delta", self.delta)?;
        non_negative("rho", self.rho)?;
        positive("beta", self.beta)?;
        positive("m", self.m)?;
        positive("horizon", self.horizon)?;
        finite("x0", self.x0)?;
        Ok(())
    }

    /// Consumes and returns `self` if all fields are in domain.
    pub fn validated(self) -> Result<Self, DomainError> {
        self.validate()?;
        Ok(self)
    }

    /// `e^{r (T - t)}`, the growth factor from `t` to the horizon.
    #[inline]
    pub(crate) fn growth(&self, t: f64) -> f64 {
        math::exp(self.r * (self.horizon - t))
    }

    /// Coefficients `(c0, c1, c2)` of the opportunity-cost quadratic in
    /// `a = e^{r(T-t)}`: `h = c0 - c1 a + c2 a^2`.
    #[inline]
    fn h_coefficients(&self) -> (f64, f64, f64) {
        let sig2 = self.sigma * self.sigma;
        let c0 = self.mu * self.mu / (2.0 * sig2 * self.m);
        let c1 = self.beta * self.mu + self.rho;
        let c2 = 0.5 * self.beta * self.beta * sig2 * self.m;
        (c0, c1, c2)
    }

    /// Frictionless feedback scale `f1(t) = mu / (sigma^2 m) e^{-r(T-t)}`,
    /// the unconstrained maximizer of the Hamiltonian.
    #[inline]
    pub fn frictionless_scale(&self, t: f64) -> f64 {
        self.mu / (self.sigma * self.sigma * self.m) / self.growth(t)
    }

    /// Evaluates both feasibility conditions.
    pub fn feasibility(&self) -> FeasibilityReport {
        let (c0, _, c2) = self.h_coefficients();
        let sig2 = self.sigma * self.sigma;
        let cond_return = self.mu / sig2 > self.beta * self.m;
        let rho_max = c0 + c2 - self.beta * self.mu;
        let cond_cost = self.rho <= rho_max;
        FeasibilityReport {
            cond_return,
            rho_max,
            cond_cost,
            expandable: cond_return && cond_cost,
        }
    }

    /// The opportunity-cost function `h(t)` on `[0, T]`.
    ///
    /// `h(t) < 0` means waiting at the cap currently beats paying for the
    /// uncapped scale; the expansion time `t2` is the last sign change of
    /// `h`. Monotone increasing in `t` on the relevant branch because the
    /// quadratic's argument `a = e^{r(T-t)}` shrinks toward 1 as `t -> T`.
    pub fn h(&self, t: f64) -> f64 {
        let (c0, c1, c2) = self.h_coefficients();
        let a = self.growth(t);
        c0 + c2 * a * a - c1 * a
    }

    /// Closed-form `int_{from}^{to} h(s) ds`.
    ///
    /// Antisymmetric in its arguments; callers typically integrate forward
    /// (`from <= to`).
    pub fn h_integral(&self, from: f64, to: f64) -> f64 {
        let (c0, c1, c2) = self.h_coefficients();
        let a_from = self.growth(from);
        let a_to = self.growth(to);
        c0 * (to - from) + c2 * (a_from * a_from - a_to * a_to) / (2.0 * self.r)
            - c1 * (a_from - a_to) / self.r
    }

    /// Computes the optimal expansion schedule in closed form.
    ///
    /// Returns [`ExpansionCase::NeverExpand`] (with no times) when either
    /// feasibility condition fails; otherwise `t1 <= t2` with the case
    /// derived from which thresholds are interior. Assumes the parameters
    /// pass [`MarketParams::validate`].
    pub fn compute_schedule(&self) -> ExpansionSchedule {
        if !self.feasibility().expandable {
            return ExpansionSchedule {
                case: ExpansionCase::NeverExpand,
                times: None,
            };
        }
        let sig2 = self.sigma * self.sigma;
        let t = self.horizon;
        // First cap-binding time: f1(t1) = beta.
        let t1 = (t - math::ln(self.mu / (sig2 * self.beta * self.m)) / self.r)
            .max(0.0)
            .min(t);
        // Expansion time: last root of h. The smaller root of the quadratic
        // in a = e^{r(T-t)} is computed in the subtraction-free citardauq
        // form, with the discriminant expanded as rho (2 beta mu + rho) to
        // avoid cancellation for small rho.
        let (_, c1, _) = self.h_coefficients();
        let disc = self.rho * (2.0 * self.beta * self.mu + self.rho);
        let a_minus = (self.mu * self.mu / (sig2 * self.m)) / (c1 + math::sqrt(disc));
        let t2 = (t - math::ln(a_minus) / self.r).max(t1).min(t);
        let case = if t2 == 0.0 {
            ExpansionCase::ImmediateExpansion
        } else if t1 == 0.0 {
            ExpansionCase::WaitFromStart
        } else {
            ExpansionCase::ConstrainedThenWait
        };
        ExpansionSchedule {
            case,
            times: Some(ExpansionTimes {
                t1,
                t2,
                waiting_time: t2 - t1,
            }),
        }
    }

    /// Waiting time `t2 - t1` without the horizon clamp,
    /// `(1/r) ln((beta mu + rho + sqrt(rho (2 beta mu + rho))) / (beta mu))`.
    ///
    /// This is the intrinsic cost-induced delay between the incentive onset
    /// and the expansion. It ignores `T` entirely — the expression is the
    /// same whichever threshold is interior — so for `rho > rho_max` it
    /// reports how long the firm *would* hold at the cap even though the
    /// clamped schedule degenerates to never expanding. Exactly `0` at
    /// `rho = 0`, strictly increasing in `rho`, and equal to the schedule's
    /// waiting time whenever both thresholds are interior.
    pub fn unconstrained_waiting_time(&self) -> f64 {
        let c1 = self.beta * self.mu + self.rho;
        let disc = self.rho * (2.0 * self.beta * self.mu + self.rho);
        math::ln((c1 + math::sqrt(disc)) / (self.beta * self.mu)) / self.r
    }

    /// Sensitivity of the waiting time to the expansion cost,
    /// `d(t2 - t1)/d rho = 1 / (r sqrt(rho (2 beta mu + rho)))`.
    ///
    /// Valid on the interior of the feasible region where both thresholds
    /// are interior; blows up like `rho^{-1/2}` as `rho -> 0`, so the
    /// degenerate point `rho = 0` is rejected.
    pub fn waiting_time_sensitivity(&self) -> Result<f64, DegenerateError> {
        if self.rho <= 0.0 {
            return Err(DegenerateError("rho = 0 (sensitivity diverges)"));
        }
        let disc = self.rho * (2.0 * self.beta * self.mu + self.rho);
        Ok(1.0 / (self.r * math::sqrt(disc)))
    }
}

#[cfg(test)]
mod tests {
    #![allow(clippy::excessive_precision)]

    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    /// Scenario of the two-threshold schedule figure: r=0.08, beta=1, mu=1,
    /// rho=0.04, sigma=0.8, m=1, T=8 (delta free; set to 0).
    fn fig1() -> MarketParams {
        MarketParams {
            r: 0.08,
            mu: 1.0,
            sigma: 0.8,
            delta: 0.0,
            rho: 0.04,
            beta: 1.0,
            m: 1.0,
            horizon: 8.0,
            x0: 1.0,
        }
    }

    #[test]
    fn validation_accepts_fig1() {
        assert!(fig1().validate().is_ok());
    }

    #[test]
    fn validation_rejects_r_zero_and_negatives() {
        let mut p = fig1();
        p.r = 0.0;
        assert_eq!(p.validate().unwrap_err().field, "r");
        let mut p = fig1();
        p.sigma = -0.5;
        assert_eq!(p.validate().unwrap_err().field, "sigma");
        let mut p = fig1();
        p.mu = 0.0;
        assert_eq!(p.validate().unwrap_err().field, "mu");
        let mut p = fig1();
        p.delta = -1e-9;
        assert_eq!(p.validate().unwrap_err().field, "delta");
        let mut p = fig1();
        p.horizon = f64::NAN;
        assert_eq!(p.validate().unwrap_err().field, "horizon");
        let mut p = fig1();
        p.x0 = f64::INFINITY;
        assert_eq!(p.validate().unwrap_err().field, "x0");
    }

    #[test]
    fn feasibility_fig1() {
        let rep = fig1().feasibility();
        assert!(rep.cond_return);
        // rho_max = 1/(2*0.64) + 0.32 - 1 = 0.10125 exactly in binary-friendly
        // arithmetic up to rounding.
        assert_relative_eq!(rep.rho_max, 0.10125, max_relative = 1e-15);
        assert!(rep.cond_cost);
        assert!(rep.expandable);
    }

    #[test]
    fn feasibility_boundary_cases() {
        // Cost condition is non-strict: rho = rho_max stays feasible and
        // pushes t2 to T. Use the computed bound, not its decimal rendering
        // (0.8^2 is not exact in binary, so the literal sits ulps above it).
        let mut p = fig1();
        p.rho = fig1().feasibility().rho_max;
        let rep = p.feasibility();
        assert!(rep.cond_cost && rep.expandable);
        let sched = p.compute_schedule();
        assert_abs_diff_eq!(sched.t2().unwrap(), 8.0, epsilon = 1e-6);

        // Return condition is strict: mu/sigma^2 = beta m is not expandable.
        let p = MarketParams {
            r: 0.08,
            mu: 0.64,
            sigma: 0.8,
            delta: 0.0,
            rho: 0.0,
            beta: 1.0,
            m: 1.0,
            horizon: 8.0,
            x0: 0.0,
        };
        assert!(!p.feasibility().cond_return);
        assert_eq!(p.compute_schedule().case, ExpansionCase::NeverExpand);
    }

    #[test]
    fn h_matches_oracle_values() {
        // Bisection/quadrature oracle, 50-digit arithmetic.
        let p = fig1();
        assert_relative_eq!(p.h(0.0), -0.04016540229497933951746, max_relative = 1e-14);
        assert_relative_eq!(p.h(4.0), -0.04408899353181093483858, max_relative = 1e-14);
        assert_relative_eq!(p.h(8.0), 0.06125, max_relative = 1e-14);
        // At t1 the identity h(t1) = -mu rho / (sigma^2 m beta) holds.
        let t1 = p.compute_schedule().t1().unwrap();
        assert_relative_eq!(p.h(t1), -0.0625, max_relative = 1e-13);
    }

    #[test]
    fn h_integral_matches_oracle() {
        let p = fig1();
        let s = p.compute_schedule();
        let (t1, t2) = (s.t1().unwrap(), s.t2().unwrap());
        assert_relative_eq!(
            p.h_integral(t1, t2),
            -0.1325696638011308569495,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            p.h_integral(4.0, t2),
            -0.04585382816432954142583,
            max_relative = 1e-13
        );
        // Antisymmetry and additivity.
        assert_abs_diff_eq!(
            p.h_integral(t1, t2) + p.h_integral(t2, t1),
            0.0,
            epsilon = 1e-18
        );
        assert_relative_eq!(
            p.h_integral(t1, 4.0) + p.h_integral(4.0, t2),
            p.h_integral(t1, t2),
            max_relative = 1e-13
        );
    }

    #[test]
    fn schedule_fig1_matches_oracle() {
        let s = fig1().compute_schedule();
        assert_eq!(s.case, ExpansionCase::ConstrainedThenWait);
        let t = s.times.unwrap();
        assert_abs_diff_eq!(t.t1, 2.421411217144756105843, epsilon = 1e-12);
        assert_abs_diff_eq!(t.t2, 5.945264830321590607907, epsilon = 1e-12);
        assert_abs_diff_eq!(t.waiting_time, 3.523853613176834502064, epsilon = 1e-12);
    }

    #[test]
    fn schedule_sweep_scenario_matches_oracle() {
        // mu = 0.9 family: t1 is rho-free; t2 grows with rho and hits T at
        // rho_max = 0.0528125.
        let mut p = fig1();
        p.mu = 0.9;
        assert_relative_eq!(p.feasibility().rho_max, 0.0528125, max_relative = 1e-14);
        for (rho, t2, wait) in [
            (0.001, 4.327618766783617757287, 0.5892011039160328861002),
            (0.01, 5.600086582216206409229, 1.861668919348621538042),
            (0.02, 6.368793228347089504488, 2.630375565479504633302),
            (0.04, 7.451530966893706379262, 3.713113304026121508075),
            (0.05, 7.886031419600114115902, 4.147613756732529244715),
            (0.052, 7.967403043858416996760, 4.228985380990832125574),
        ] {
            p.rho = rho;
            let s = p.compute_schedule();
            let t = s.times.unwrap();
            assert_abs_diff_eq!(t.t1, 3.738417662867584871186, epsilon = 1e-12);
            assert_abs_diff_eq!(t.t2, t2, epsilon = 1e-12);
            assert_abs_diff_eq!(t.waiting_time, wait, epsilon = 1e-12);
        }
        p.rho = 0.0;
        let s = p.compute_schedule();
        assert_eq!(s.case, ExpansionCase::ConstrainedThenWait);
        assert_abs_diff_eq!(s.waiting_time().unwrap(), 0.0, epsilon = 1e-12);
        p.rho = 0.053; // just past rho_max
        assert_eq!(p.compute_schedule().case, ExpansionCase::NeverExpand);
        assert!(p.compute_schedule().times.is_none());
    }

    #[test]
    fn schedule_immediate_case() {
        // mu/sigma^2 = 0.5 >= beta m e^{rT} = 0.2210 and rho = 0.02 below the
        // immediate-expansion bound 0.035208: both thresholds collapse to 0.
        let p = MarketParams {
            r: 0.05,
            mu: 0.5,
            sigma: 1.0,
            delta: 0.1,
            rho: 0.02,
            beta: 0.2,
            m: 1.0,
            horizon: 2.0,
            x0: 0.5,
        };
        let s = p.compute_schedule();
        assert_eq!(s.case, ExpansionCase::ImmediateExpansion);
        let t = s.times.unwrap();
        assert_eq!(t.t1, 0.0);
        assert_eq!(t.t2, 0.0);
        assert_eq!(t.waiting_time, 0.0);
    }

    #[test]
    fn schedule_wait_from_start_case() {
        // Cap never binds (t1 = 0) but the cost bound for immediate
        // expansion is exceeded, so the firm waits: t2 = 0.36320436...
        let p = MarketParams {
            r: 0.05,
            mu: 0.1,
            sigma: 0.282842712474619, // sigma^2 = 0.08
            delta: 0.04,
            rho: 0.001,
            beta: 1.0,
            m: 1.0,
            horizon: 2.0,
            x0: 0.5,
        };
        let s = p.compute_schedule();
        assert_eq!(s.case, ExpansionCase::WaitFromStart);
        let t = s.times.unwrap();
        assert_eq!(t.t1, 0.0);
        assert_abs_diff_eq!(t.t2, 0.3632043634287764316971, epsilon = 1e-10);
    }

    #[test]
    fn unconstrained_wait_extends_past_the_horizon() {
        // On the interior of the feasible region it reproduces the
        // schedule's waiting time; past rho_max it keeps growing while the
        // schedule degenerates to never expanding.
        let p = fig1();
        assert_relative_eq!(
            p.unconstrained_waiting_time(),
            p.compute_schedule().waiting_time().unwrap(),
            max_relative = 1e-12
        );
        let mut p = fig1();
        p.mu = 0.9;
        p.rho = 0.08; // beyond rho_max = 0.0528125
        assert_eq!(p.compute_schedule().case, ExpansionCase::NeverExpand);
        assert_relative_eq!(
            p.unconstrained_waiting_time(),
            5.232183059998239602880,
            max_relative = 1e-13
        );
        p.rho = 0.0;
        assert_eq!(p.unconstrained_waiting_time(), 0.0);
    }

    #[test]
    fn sensitivity_matches_oracle_and_fd() {
        let mut p = fig1();
        p.mu = 0.9;
        p.rho = 0.05;
        let sens = p.waiting_time_sensitivity().unwrap();
        assert_relative_eq!(sens, 41.09974682633932222297, max_relative = 1e-13);

        // Central finite difference of the computed waiting time.
        let eps = 1e-7;
        let mut hi = p;
        hi.rho += eps;
        let mut lo = p;
        lo.rho -= eps;
        let fd = (hi.compute_schedule().waiting_time().unwrap()
            - lo.compute_schedule().waiting_time().unwrap())
            / (2.0 * eps);
        assert_relative_eq!(sens, fd, max_relative = 1e-6);
    }

    #[test]
    fn sensitivity_rejects_rho_zero() {
        let mut p = fig1();
        p.rho = 0.0;
        assert!(p.waiting_time_sensitivity().is_err());
    }

    #[test]
    fn frictionless_scale_endpoints() {
        let p = fig1();
        assert_relative_eq!(
            p.frictionless_scale(0.0),
            0.8238944125672633706933,
            max_relative = 1e-14
        );
        assert_relative_eq!(p.frictionless_scale(8.0), 1.5625, max_relative = 1e-15);
        // At t1 the frictionless scale meets the cap by definition.
        let t1 = p.compute_schedule().t1().unwrap();
        assert_relative_eq!(p.frictionless_scale(t1), 1.0, max_relative = 1e-13);
    }

    #[test]
    fn case_display_strings_are_stable() {
        assert_eq!(
            ExpansionCase::ImmediateExpansion.to_string(),
            "immediate_expansion"
        );
        assert_eq!(ExpansionCase::NeverExpand.to_string(), "never_expand");
    }
}
