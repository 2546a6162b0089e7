//! Shared fixtures, frozen reference values, and independent oracles for
//! the integration suites.
//!
//! The oracles here deliberately avoid the library's solution formulas:
//!
//! * [`oracle_schedule`] finds the threshold times by scanning and
//!   bisecting the defining equations (`f1(t) = beta` for `t1`, `h(t) = 0`
//!   for `t2`) instead of evaluating the closed-form roots;
//! * [`gaussian_policy_value`] prices a deterministic policy from first
//!   principles: the controlled surplus is Gaussian, so its terminal mean
//!   and variance are integrals of the control path, evaluated by Simpson
//!   quadrature on the pieces where the control is smooth.
//!
//! Constants in [`frozen`] were computed once with 40-digit arithmetic
//! from the same first-principles definitions and are pinned here to full
//! `f64` precision; tests compare library output against them rather than
//! against other library output.

#![allow(dead_code)] // each integration target uses its own subset
#![allow(clippy::excessive_precision)]

use expansion_core::closed_form::{PolicyKind, PolicySpec};
use expansion_core::model::{ExpansionCase, ExpansionSchedule, MarketParams};

/// Reference values frozen from an independent high-precision computation.
pub mod frozen {
    /// Base scenario: `r = 0.08`, `mu = 1`, `sigma = 0.8`, `delta = 0`,
    /// `rho = 0.04`, `beta = 1`, `m = 1`, `T = 8`, `x0 = 1`.
    pub mod fig1 {
        /// Largest affordable expansion cost for these parameters.
        pub const RHO_MAX: f64 = 0.10125;
        /// Time the scale cap starts binding.
        pub const T1: f64 = 2.421411217144756105843;
        /// Optimal expansion time.
        pub const T2: f64 = 5.945264830321590607907;
        /// `T2 - T1`.
        pub const WAIT: f64 = 3.523853613176834502064;
        /// `V1(0, 1)`.
        pub const V1_AT_0: f64 = -0.0004536246610418027432874;
        /// `V1(4, 1)`.
        pub const V1_AT_4: f64 = -0.01338575921661418385828;
        /// `P(4, 1)`.
        pub const P_AT_4: f64 = 0.0005999286772317041741134;
        /// `V(0, 1)`.
        pub const V_AT_0: f64 = -0.0003362012755061116527002;
        /// `V(2, 1)`.
        pub const V_AT_2: f64 = -0.002123065878278932777925;
        /// Terminal mean of the optimally controlled surplus, `E[X(T)]`.
        pub const MEAN_XT: f64 = 13.59912020690721306724086;
        /// `m^2 Var[X(T)]` under the optimal control.
        pub const M2_VAR_XT: f64 = 11.20263932760226171389908;
        /// `int_0^T f*(s)^4 ds` for the optimal control.
        pub const QUARTIC_FSTAR: f64 = 14.18433514249155784561;
        /// Expected utility of the optimal control offset by `+0.2` on
        /// `(T2, T)`. Equal to its `-0.2` twin: the offset sits where the
        /// base control is the unconstrained optimizer, so the first-order
        /// term vanishes and only the symmetric quadratic penalty remains.
        pub const EU_POST_PLUS: f64 = -0.0003468350486811775521034;
        /// Expected utility of the optimal control offset by `-0.2` on
        /// `(T2, T)`.
        pub const EU_POST_MINUS: f64 = -0.0003468350486811775521034;
        /// Expected utility of the optimal control offset by `-0.2` on
        /// `(T1, T2)` (the capped stretch, so only `-0.2` moves it).
        pub const EU_CAP_MINUS: f64 = -0.0004114754255532153058493;
        /// Expected utility with expansion shifted to `T2 + 0.5`.
        pub const EU_SHIFT_PLUS: f64 = -0.0003373589691783686324456;
        /// Expected utility with expansion shifted to `T2 - 0.5`.
        pub const EU_SHIFT_MINUS: f64 = -0.0003373092333125198041259;
        /// `V(0, 1)` with `rho = 0.2 > RHO_MAX`: the never-expanding value.
        pub const V_NE_RHO_02: f64 = -0.0003574032389663490826283;
    }

    /// The base scenario with `mu = 0.9` (used for the cost sweep).
    pub mod fig2 {
        /// Largest affordable expansion cost for these parameters.
        pub const RHO_MAX: f64 = 0.0528125;
        /// Time the scale cap starts binding (independent of `rho`).
        pub const T1: f64 = 3.738417662867584871186;
        /// Optimal expansion time at `rho = 0.04`.
        pub const T2_RHO_004: f64 = 7.451530966893706379262;
        /// Waiting time at `rho = 0.04`.
        pub const WAIT_RHO_004: f64 = 3.713113304026121508075;
        /// `d(waiting time)/d(rho)` at `rho = 0.05`.
        pub const DSENS_RHO_005: f64 = 41.09974682633932222297;
    }

    /// Immediate-expansion scenario: `r = 0.05`, `mu = 0.5`, `sigma = 1`,
    /// `delta = 0.1`, `rho = 0.02`, `beta = 0.2`, `m = 1`, `T = 2`,
    /// `x0 = 0.5`. Here `t1 = t2 = 0`, and the Monte Carlo noise is small
    /// enough for the estimate to be informative.
    pub mod case1 {
        /// `V(0, 0.5)`.
        pub const V_AT_0: f64 = -0.5768487055226917770396;
    }

    /// Moment targets for the jump engine: `lambda = 2`, `z1 = 0.9`,
    /// `z2 = 1`, `eta = 0.2`, `theta = 0.5`, `r = 0.05`, `rho = 0`,
    /// `m = 1`, `T = 1`, `x0 = 1`, constant exposure `f = 1`.
    ///
    /// The compound-Poisson surplus and its diffusion approximation share
    /// the first two terminal moments exactly (same drift and variance
    /// rates), so these values double as the diffusion targets.
    pub mod jump {
        /// `E[X(1)]`.
        pub const MEAN_X1: f64 = 1.420422990283397125520;
        /// `Var[X(1)]`.
        pub const VAR_X1: f64 = 2.103418361512952496234;
    }

    /// Intensity-invariance scenario: books with `lambda in {50, 200}`
    /// share `lambda z1 = 0.2`, `lambda z2 = 0.08`, `eta = 0.3`,
    /// `theta = 0.5`, `r = 0.05`, `rho = 0.001`, `m = 1`, `T = 2`,
    /// `x0 = 0.5`, so both map to the same diffusion.
    pub mod lambda_books {
        /// Expansion time of the shared diffusion limit.
        pub const T2: f64 = 0.3632043634287764316971;
        /// `V(0, 0.5)` of the shared diffusion limit.
        pub const V_AT_0: f64 = -0.5535548408613683794816;
    }
}

/// Base scenario parameters (see [`frozen::fig1`]).
pub fn fig1() -> MarketParams {
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

/// [`fig1`] with a different expansion cost.
pub fn fig1_rho(rho: f64) -> MarketParams {
    MarketParams { rho, ..fig1() }
}

/// Cost-sweep scenario: [`fig1`] with `mu = 0.9` (see [`frozen::fig2`]).
pub fn fig2() -> MarketParams {
    MarketParams { mu: 0.9, ..fig1() }
}

/// [`fig2`] with a different expansion cost.
pub fn fig2_rho(rho: f64) -> MarketParams {
    MarketParams { rho, ..fig2() }
}

/// Immediate-expansion scenario (see [`frozen::case1`]).
pub fn case1() -> MarketParams {
    MarketParams {
        r: 0.05,
        mu: 0.5,
        sigma: 1.0,
        delta: 0.1,
        rho: 0.02,
        beta: 0.2,
        m: 1.0,
        horizon: 2.0,
        x0: 0.5,
    }
}

/// A schedule that never expands, for policies evaluated without one.
pub fn never_expand() -> ExpansionSchedule {
    ExpansionSchedule {
        case: ExpansionCase::NeverExpand,
        times: None,
    }
}

// ---------------------------------------------------------------------------
// Root-finding oracle for the threshold times
// ---------------------------------------------------------------------------

/// Bisection on a bracketing interval; `f(lo)` and `f(hi)` must straddle
/// zero (either may be zero). Converges to the last representable digit.
pub fn bisect(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let low_negative = f(lo) < 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) < 0.0) == low_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Schedule determined by scan-and-bisect instead of closed-form roots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleSchedule {
    /// Expansion is never worthwhile on the horizon.
    Never,
    /// Expansion happens; `t2 = 0` means immediately.
    Expands {
        /// Time the cap starts binding (0 when it binds from the start or
        /// never gets the chance to).
        t1: f64,
        /// Expansion time.
        t2: f64,
    },
}

impl OracleSchedule {
    /// The case label this schedule corresponds to.
    pub fn case(&self) -> ExpansionCase {
        match *self {
            OracleSchedule::Never => ExpansionCase::NeverExpand,
            OracleSchedule::Expands { t1, t2 } => {
                if t2 <= 0.0 {
                    ExpansionCase::ImmediateExpansion
                } else if t1 <= 0.0 {
                    ExpansionCase::WaitFromStart
                } else {
                    ExpansionCase::ConstrainedThenWait
                }
            }
        }
    }
}

/// The running-cost tradeoff `h` rebuilt from its definition, so the
/// oracle does not lean on the library's evaluation of it.
pub fn oracle_h(p: &MarketParams, t: f64) -> f64 {
    let sig2m = p.sigma * p.sigma * p.m;
    let c0 = p.mu * p.mu / (2.0 * sig2m);
    let c1 = p.beta * p.mu + p.rho;
    let c2 = 0.5 * p.beta * p.beta * sig2m;
    c0 + c2 * (2.0 * p.r * (p.horizon - t)).exp() - c1 * (p.r * (p.horizon - t)).exp()
}

/// Determines the expansion schedule by bisection on the defining
/// equations.
///
/// `t2` is the latest zero of `h` on `[0, T]`, found by scanning down from
/// `T` (where `h >= 0` whenever the cost condition holds) to the first
/// sign change, with a probe at the vertex of the parabola `h(E)` so that
/// a negative stretch narrower than the scan step is still caught. `t1` is
/// the crossing of the rising frictionless scale with the cap.
pub fn oracle_schedule(p: &MarketParams) -> OracleSchedule {
    let sig2m = p.sigma * p.sigma * p.m;
    let scale0 = p.mu / sig2m;
    let h = |t: f64| oracle_h(p, t);
    if !(scale0 > p.beta) || h(p.horizon) < 0.0 {
        return OracleSchedule::Never;
    }

    const SCAN: usize = 8192;
    let mut t2 = None;
    let mut hi = p.horizon;
    for k in (0..SCAN).rev() {
        let t = p.horizon * k as f64 / SCAN as f64;
        if h(t) < 0.0 {
            t2 = Some(bisect(&h, t, hi));
            break;
        }
        hi = t;
    }
    if t2.is_none() {
        // h(E) = c2 E^2 - c1 E + c0 dips lowest at E = c1 / (2 c2); if even
        // a scan-step-narrow band exists, it must contain this point.
        let c1 = p.beta * p.mu + p.rho;
        let c2 = 0.5 * p.beta * p.beta * sig2m;
        let e_vertex = c1 / (2.0 * c2);
        if e_vertex >= 1.0 {
            let t_vertex = p.horizon - e_vertex.ln() / p.r;
            if t_vertex > 0.0 && t_vertex < p.horizon && h(t_vertex) < 0.0 {
                t2 = Some(bisect(&h, t_vertex, p.horizon));
            }
        }
    }
    let t2 = match t2 {
        // No negative stretch: waiting is never strictly better, expand at 0.
        None => return OracleSchedule::Expands { t1: 0.0, t2: 0.0 },
        Some(t2) => t2,
    };

    let cap_gap = |t: f64| scale0 * (-p.r * (p.horizon - t)).exp() - p.beta;
    let t1 = if cap_gap(0.0) >= 0.0 {
        0.0
    } else {
        bisect(&cap_gap, 0.0, p.horizon)
    };
    OracleSchedule::Expands { t1: t1.min(t2), t2 }
}

// ---------------------------------------------------------------------------
// Gaussian quadrature oracle for deterministic-policy values
// ---------------------------------------------------------------------------

/// Composite Simpson rule on `[a, b]` with an even number of panels.
fn simpson(a: f64, b: f64, n: usize, g: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = g(a) + g(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * g(a + h * k as f64);
    }
    s * h / 3.0
}

/// Terminal mean and variance of the surplus under a deterministic policy.
///
/// The surplus is Gaussian for any deterministic control, with
///
/// ```text
/// E[X(T)]   = x0 e^{rT} + int_0^T (mu f(u) - delta - rho 1{u >= t2}) e^{r(T-u)} du
/// Var[X(T)] = int_0^T sigma^2 f(u)^2 e^{2r(T-u)} du
/// ```
///
/// Integration splits at every time the control's functional form can
/// change (threshold times, cap crossings, perturbation windows), so each
/// Simpson piece sees a smooth integrand; the expansion-cost indicator is
/// resolved per piece from its midpoint, and the control is sampled a hair
/// inside each piece so one-sided limits are used at the seams.
pub fn gaussian_mean_var(params: &MarketParams, policy: &PolicySpec) -> (f64, f64) {
    let t_end = params.horizon;
    let scale0 = params.mu / (params.sigma * params.sigma * params.m);
    let crossing = |level: f64| -> Option<f64> {
        if level <= 0.0 {
            return None;
        }
        let u = t_end - (scale0 / level).ln() / params.r;
        (u > 0.0 && u < t_end).then_some(u)
    };

    let mut cuts = vec![0.0, t_end];
    if let Some(times) = policy.schedule.times {
        cuts.push(times.t1);
        cuts.push(times.t2);
    }
    cuts.extend(crossing(params.beta));
    if let PolicyKind::Perturbed { offset, window } = policy.kind {
        cuts.push(window.0);
        cuts.push(window.1);
        cuts.extend(crossing(params.beta - offset));
        cuts.extend(crossing(-offset));
    }
    cuts.retain(|u| (0.0..=t_end).contains(u));
    cuts.sort_by(|a, b| a.partial_cmp(b).expect("cut times are finite"));
    cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + t_end));

    let tau = policy.expansion_time();
    let grow = |u: f64| (params.r * (t_end - u)).exp();
    let mut mean = params.x0 * grow(0.0);
    let mut var = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let rho = match tau {
            Some(t2) if 0.5 * (a + b) >= t2 => params.rho,
            _ => 0.0,
        };
        let xi = 1e-9 * (b - a);
        let f = |u: f64| policy.control(params, u.clamp(a + xi, b - xi));
        let n = ((b - a) / t_end * 4096.0).ceil() as usize;
        let n = (n.max(64) + 1) & !1usize;
        mean += simpson(a, b, n, |u| {
            (params.mu * f(u) - params.delta - rho) * grow(u)
        });
        var += simpson(a, b, n, |u| {
            let s = params.sigma * f(u) * grow(u);
            s * s
        });
    }
    (mean, var)
}

/// Expected terminal utility of a deterministic policy, from the Gaussian
/// law of the surplus: `-(1/m) exp(-m E[X(T)] + m^2 Var[X(T)] / 2)`.
///
/// `None` when the exponent leaves the comfortably representable range.
pub fn gaussian_policy_value(params: &MarketParams, policy: &PolicySpec) -> Option<f64> {
    let (mean, var) = gaussian_mean_var(params, policy);
    let exponent = -params.m * mean + 0.5 * params.m * params.m * var;
    (exponent.is_finite() && exponent < 700.0).then(|| -exponent.exp() / params.m)
}
