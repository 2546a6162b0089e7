//! Monte Carlo verification engines.
//!
//! Two path models estimate the expected terminal utility
//! `E[-(1/m) exp(-m X(T))]` under a deterministic [`PolicySpec`]:
//!
//! * [`simulate_diffusion`] — Euler–Maruyama paths of the controlled
//!   diffusion `dX = (rX + mu f - delta - rho 1{t >= t2}) dt + sigma f dW`,
//!   with the expansion cost switching on at the first grid time at or
//!   after the policy's expansion time;
//! * [`simulate_jump`] — the compound-Poisson insurance surplus
//!   `dX = {rX + [f(1+theta) - (theta-eta)] lambda z1} dt - d(sum f Z_i)`,
//!   with exact exponential inter-arrival times and the drift integrated
//!   in closed form between events (no time-discretization error).
//!
//! Everything is driven by a counter-based RNG seeded from
//! [`McConfig::seed`], one stream per path (or antithetic pair), so runs
//! are bit-reproducible and two policies evaluated under the same config
//! see *common random numbers* — the noise cancels in comparisons, which
//! is what makes optimality inequalities testable at feasible path counts
//! (see [`compare_policies`]).
//!
//! A practical caveat for all figures produced here: the estimand is the
//! mean of an exponential, so crude Monte Carlo inherits a right-skewed,
//! potentially heavy-tailed sample distribution. Standard errors are
//! honest but asymptotic; treat single-run confidence intervals for very
//! risk-averse parameterizations with care.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Gamma, StandardNormal};

use crate::closed_form::PolicySpec;
use crate::math;
use crate::model::{DomainError, MarketParams};
use crate::reinsurance::InsuranceParams;

/// Monte Carlo run configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    /// Number of simulated paths (antithetic runs round up to full pairs).
    pub n_paths: usize,
    /// Time steps per path for the Euler scheme (the jump engine is exact
    /// in time and uses this only for its work-budget accounting).
    pub n_steps: usize,
    /// Seed; together with the config it fully determines every estimate.
    pub seed: u64,
    /// Pair each path with its sign-flipped driver to cancel odd noise
    /// terms. Ignored by the jump engine (claim counts have no useful
    /// reflection), which notes so in its documentation.
    pub antithetic: bool,
    /// Upper bound on `n_paths * n_steps`, guarding against accidental
    /// compute blow-ups.
    pub budget: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            n_paths: 200_000,
            n_steps: 800,
            seed: 42,
            antithetic: true,
            budget: 1_000_000_000,
        }
    }
}

impl McConfig {
    /// Number of independent sampling units: antithetic pairs, or single
    /// paths when antithetics are off.
    fn units(&self) -> usize {
        if self.antithetic {
            self.n_paths.div_ceil(2)
        } else {
            self.n_paths
        }
    }

    fn validate(&self) -> Result<(), SimError> {
        if self.n_steps == 0 {
            return Err(SimError::Domain(DomainError {
                field: "n_steps",
                reason: "needs at least one time step",
            }));
        }
        if self.units() < 2 {
            return Err(SimError::Domain(DomainError {
                field: "n_paths",
                reason: "needs at least two sampling units for a standard error",
            }));
        }
        let required = (self.n_paths as u64)
            .checked_mul(self.n_steps as u64)
            .unwrap_or(u64::MAX);
        if required > self.budget {
            return Err(SimError::Budget {
                required,
                budget: self.budget,
            });
        }
        Ok(())
    }
}

/// A Monte Carlo estimate with its sampling uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    /// Sample mean of the terminal utility.
    pub mean: f64,
    /// Standard error of the mean.
    pub std_err: f64,
    /// 95% confidence interval `mean ± 1.96 std_err`.
    pub ci95: (f64, f64),
    /// Independent sampling units behind the estimate (pairs count once).
    pub n_effective: usize,
}

impl McEstimate {
    /// Estimate from raw per-unit samples; `None` for fewer than two.
    pub fn from_samples(samples: &[f64]) -> Option<Self> {
        let n = samples.len();
        if n < 2 {
            return None;
        }
        let mean = neumaier_sum(samples.iter().copied()) / n as f64;
        let ss = neumaier_sum(samples.iter().map(|&s| {
            let d = s - mean;
            d * d
        }));
        let std_err = math::sqrt(ss / (n as f64 - 1.0) / n as f64);
        Some(McEstimate {
            mean,
            std_err,
            ci95: (mean - 1.96 * std_err, mean + 1.96 * std_err),
            n_effective: n,
        })
    }
}

/// Compensated (Neumaier) summation: keeps the estimate's low bits honest
/// when hundreds of thousands of near-cancelling terms are accumulated.
fn neumaier_sum(xs: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut compensation = 0.0f64;
    for x in xs {
        let t = sum + x;
        if math::abs(sum) >= math::abs(x) {
            compensation += (sum - t) + x;
        } else {
            compensation += (x - t) + sum;
        }
        sum = t;
    }
    sum + compensation
}

/// Failure of a simulation run.
#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum SimError {
    /// `n_paths * n_steps` exceeds the configured budget.
    #[error("simulation needs {required} path-steps, budget allows {budget}")]
    Budget {
        /// Path-steps the run would consume.
        required: u64,
        /// Configured ceiling.
        budget: u64,
    },
    /// A path left the representable range.
    #[error("non-finite state on path {path} at step {step}")]
    NonFinite {
        /// Index of the offending path.
        path: usize,
        /// Euler step (diffusion) or claim count (jump) where it happened;
        /// equal to the step count when the terminal utility overflowed.
        step: usize,
    },
    /// The claim sampler's moments disagree with the insurance parameters.
    #[error("claim sampler {what}: got {got}, want {want} (relative tolerance {tol})")]
    Distribution {
        /// Which moment check failed.
        what: &'static str,
        /// Observed value.
        got: f64,
        /// Target value.
        want: f64,
        /// Relative tolerance applied.
        tol: f64,
    },
    /// Invalid inputs.
    #[error(transparent)]
    Domain(#[from] DomainError),
}

fn utility(m: f64, x: f64) -> f64 {
    -math::exp(-m * x) / m
}

fn check_policy_schedule(params: &MarketParams, policy: &PolicySpec) -> Result<(), SimError> {
    if let Some(times) = policy.schedule.times {
        let ok = times.t1 >= 0.0
            && times.t1 <= times.t2
            && times.t2 <= params.horizon * (1.0 + 1e-12)
            && times.t1.is_finite()
            && times.t2.is_finite();
        if !ok {
            return Err(SimError::Domain(DomainError {
                field: "policy",
                reason: "schedule times must satisfy 0 <= t1 <= t2 <= horizon",
            }));
        }
    }
    Ok(())
}

/// Per-unit terminal utilities of the Euler scheme: one sample per path,
/// or one pair-average per antithetic pair.
///
/// Exposed so callers can run their own statistics on the raw units (the
/// unit at index `u` is always driven by RNG stream `u`, whatever the
/// policy — the common-random-numbers contract).
pub fn diffusion_unit_samples(
    params: &MarketParams,
    policy: &PolicySpec,
    cfg: &McConfig,
) -> Result<Vec<f64>, SimError> {
    params.validate()?;
    cfg.validate()?;
    check_policy_schedule(params, policy)?;

    let n = cfg.n_steps;
    let dt = params.horizon / n as f64;
    let sqrt_dt = math::sqrt(dt);
    let tau = policy.expansion_time();
    // The control is deterministic in time: freeze per-step drift and
    // diffusion loadings once.
    let mut drift = vec![0.0; n];
    let mut vol = vec![0.0; n];
    for (k, (d, v)) in drift.iter_mut().zip(vol.iter_mut()).enumerate() {
        let t = params.horizon * k as f64 / n as f64;
        let f = policy.control(params, t);
        let expanded = tau.is_some_and(|t2| t >= t2);
        *d = params.mu * f - params.delta - if expanded { params.rho } else { 0.0 };
        *v = params.sigma * f * sqrt_dt;
    }

    let units = cfg.units();
    let mut samples = vec![0.0; units];
    let base = ChaCha8Rng::seed_from_u64(cfg.seed);
    for (u, out) in samples.iter_mut().enumerate() {
        let mut rng = base.clone();
        rng.set_stream(u as u64);
        let mut x_p = params.x0;
        let mut x_m = params.x0;
        for k in 0..n {
            let z: f64 = rng.sample(StandardNormal);
            x_p += (params.r * x_p + drift[k]) * dt + vol[k] * z;
            if cfg.antithetic {
                x_m += (params.r * x_m + drift[k]) * dt - vol[k] * z;
            }
            if !x_p.is_finite() {
                return Err(SimError::NonFinite { path: 2 * u, step: k });
            }
            if cfg.antithetic && !x_m.is_finite() {
                return Err(SimError::NonFinite {
                    path: 2 * u + 1,
                    step: k,
                });
            }
        }
        let sample = if cfg.antithetic {
            0.5 * (utility(params.m, x_p) + utility(params.m, x_m))
        } else {
            utility(params.m, x_p)
        };
        if !sample.is_finite() {
            return Err(SimError::NonFinite { path: 2 * u, step: n });
        }
        *out = sample;
    }
    Ok(samples)
}

/// Estimates the expected terminal utility of `policy` on the diffusion
/// surplus by Euler–Maruyama with `horizon / n_steps` steps.
///
/// Deterministic given the config; the expansion cost `rho` starts being
/// charged at the first grid time at or after the policy's expansion time
/// (an `O(dt)` placement bias, covered by step-refinement checks).
pub fn simulate_diffusion(
    params: &MarketParams,
    policy: &PolicySpec,
    cfg: &McConfig,
) -> Result<McEstimate, SimError> {
    let samples = diffusion_unit_samples(params, policy, cfg)?;
    Ok(McEstimate::from_samples(&samples).expect("config guarantees >= 2 units"))
}

/// Two policies priced on common random numbers, with the paired
/// difference estimated directly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyComparison {
    /// Estimate for the first policy.
    pub baseline: McEstimate,
    /// Estimate for the second policy.
    pub alternative: McEstimate,
    /// Estimate of `alternative - baseline` from per-unit differences;
    /// its `std_err` is the one to test dominance against, since the
    /// common noise cancels in the pairing.
    pub diff: McEstimate,
}

/// Prices `baseline` and `alternative` on identical driving noise and
/// returns both estimates plus the paired difference.
pub fn compare_policies(
    params: &MarketParams,
    baseline: &PolicySpec,
    alternative: &PolicySpec,
    cfg: &McConfig,
) -> Result<PolicyComparison, SimError> {
    let base = diffusion_unit_samples(params, baseline, cfg)?;
    let alt = diffusion_unit_samples(params, alternative, cfg)?;
    let diffs: Vec<f64> = alt.iter().zip(base.iter()).map(|(a, b)| a - b).collect();
    Ok(PolicyComparison {
        baseline: McEstimate::from_samples(&base).expect("config guarantees >= 2 units"),
        alternative: McEstimate::from_samples(&alt).expect("config guarantees >= 2 units"),
        diff: McEstimate::from_samples(&diffs).expect("config guarantees >= 2 units"),
    })
}

// ---------------------------------------------------------------------------
// Claim-size samplers
// ---------------------------------------------------------------------------

/// A claim-size distribution with analytically known first two moments.
///
/// The jump engine self-checks any sampler before use: the declared
/// moments must match the insurance parameters `(z1, z2)` exactly, and an
/// empirical million-draw check must agree with the declared moments
/// within `max(1%, 4 standard errors)` — wide enough that a correct but
/// heavy-tailed sampler passes, tight enough that a mis-parameterized one
/// fails loudly.
pub trait ClaimSampler {
    /// Analytic mean of one claim.
    fn mean(&self) -> f64;
    /// Analytic second raw moment of one claim.
    fn second_moment(&self) -> f64;
    /// Draws one claim size.
    fn sample(&self, rng: &mut ChaCha8Rng) -> f64;
}

/// Gamma claim sizes with shape/scale matched to a mean and second moment.
///
/// The default choice: positive support and exactly two free moments, so
/// `(z1, z2)` pins it down completely.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaClaims {
    z1: f64,
    z2: f64,
    shape: f64,
    scale: f64,
    dist: Gamma<f64>,
}

impl GammaClaims {
    /// Matches `shape * scale = z1` and `shape (shape + 1) scale^2 = z2`;
    /// needs strictly positive claim variance (`z2 > z1^2`).
    pub fn matched(z1: f64, z2: f64) -> Result<Self, DomainError> {
        if !(z1 > 0.0 && z1.is_finite()) {
            return Err(DomainError {
                field: "z1",
                reason: "must be strictly positive and finite",
            });
        }
        if !(z2 > z1 * z1 && z2.is_finite()) {
            return Err(DomainError {
                field: "z2",
                reason: "gamma match needs z2 > z1^2 (positive claim variance)",
            });
        }
        let variance = z2 - z1 * z1;
        let shape = z1 * z1 / variance;
        let scale = variance / z1;
        let dist = Gamma::new(shape, scale).map_err(|_| DomainError {
            field: "z2",
            reason: "gamma parameters out of range",
        })?;
        Ok(GammaClaims {
            z1,
            z2,
            shape,
            scale,
            dist,
        })
    }

    /// Matched shape parameter.
    pub fn shape(&self) -> f64 {
        self.shape
    }

    /// Matched scale parameter.
    pub fn scale(&self) -> f64 {
        self.scale
    }
}

impl ClaimSampler for GammaClaims {
    fn mean(&self) -> f64 {
        self.z1
    }

    fn second_moment(&self) -> f64 {
        self.z2
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        self.dist.sample(rng)
    }
}

/// Constant claim sizes (`z2 = z1^2`): the degenerate edge the gamma match
/// cannot represent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeterministicClaims {
    size: f64,
}

impl DeterministicClaims {
    /// Every claim is exactly `size`.
    pub fn new(size: f64) -> Self {
        DeterministicClaims { size }
    }
}

impl ClaimSampler for DeterministicClaims {
    fn mean(&self) -> f64 {
        self.size
    }

    fn second_moment(&self) -> f64 {
        self.size * self.size
    }

    fn sample(&self, _rng: &mut ChaCha8Rng) -> f64 {
        self.size
    }
}

// ---------------------------------------------------------------------------
// Deterministic-policy time decomposition
// ---------------------------------------------------------------------------

/// One maximal interval on which the control is affine in the discount
/// factor `E(u) = exp(-r (T - u))`: `f(u) = alpha E(u) + gamma`.
///
/// Every policy expressible by [`PolicySpec`] is piecewise of this form —
/// the frictionless scale is `const * E(u)`, caps and offsets shift or
/// flatten it — so splitting at cap crossings, expansion, and window edges
/// makes the decomposition exact, which in turn makes the jump-model drift
/// and the quartic admissibility integral exact.
#[derive(Debug, Clone, Copy)]
struct Segment {
    start: f64,
    end: f64,
    alpha: f64,
    gamma: f64,
}

/// Splits `[0, T]` at every time where the policy's functional form can
/// change and fits `(alpha, gamma)` on each piece from two interior
/// evaluations.
fn policy_segments(
    params: &MarketParams,
    policy: &PolicySpec,
    ctrl: &impl Fn(f64) -> f64,
) -> Vec<Segment> {
    let horizon = params.horizon;
    let scale0 = params.mu / (params.sigma * params.sigma * params.m);
    // Time at which the frictionless scale crosses `level`, if inside the
    // horizon: scale0 * exp(-r (T - u)) = level.
    let crossing = |level: f64| -> Option<f64> {
        if level <= 0.0 || scale0 <= 0.0 {
            return None;
        }
        let u = horizon - math::ln(scale0 / level) / params.r;
        (u > 0.0 && u < horizon).then_some(u)
    };

    let mut cuts: Vec<f64> = vec![0.0, horizon];
    if let Some(times) = policy.schedule.times {
        cuts.push(times.t1);
        cuts.push(times.t2);
    }
    cuts.extend(crossing(params.beta));
    if let crate::closed_form::PolicyKind::Perturbed { offset, window } = policy.kind {
        cuts.push(window.0);
        cuts.push(window.1);
        cuts.extend(crossing(params.beta - offset));
        cuts.extend(crossing(-offset));
    }
    cuts.retain(|u| (0.0..=horizon).contains(u));
    cuts.sort_by(|a, b| a.partial_cmp(b).expect("cut times are finite"));
    cuts.dedup_by(|a, b| math::abs(*a - *b) <= 1e-12 * (1.0 + horizon));

    let mut segments = Vec::with_capacity(cuts.len() - 1);
    for w in cuts.windows(2) {
        let (s, e) = (w[0], w[1]);
        let width = e - s;
        if width <= 0.0 {
            continue;
        }
        let (ua, ub) = (s + 0.25 * width, s + 0.75 * width);
        let (fa, fb) = (ctrl(ua), ctrl(ub));
        let ea = math::exp(-params.r * (horizon - ua));
        let eb = math::exp(-params.r * (horizon - ub));
        let (alpha, gamma) = if math::abs(eb - ea) <= 1e-14 * (ea + eb) {
            (0.0, ctrl(s + 0.5 * width))
        } else {
            let alpha = (fb - fa) / (eb - ea);
            (alpha, fa - alpha * ea)
        };
        segments.push(Segment {
            start: s,
            end: e,
            alpha,
            gamma,
        });
    }
    segments
}

// ---------------------------------------------------------------------------
// Compound-Poisson engine
// ---------------------------------------------------------------------------

/// Market-parameter stand-in for evaluating a policy's control path on the
/// insurance problem: the frictionless scale depends on `lambda` only
/// through the fixed products `theta z1 / z2`, so substituting
/// `lambda = 1` prices the control correctly for every intensity —
/// including the degenerate drift-only case `lambda = 0`, where the raw
/// mapping would divide by zero.
fn control_params(ins: &InsuranceParams) -> MarketParams {
    MarketParams {
        r: ins.r,
        mu: ins.theta * ins.z1,
        sigma: math::sqrt(ins.z2),
        delta: (ins.theta - ins.eta) * ins.z1,
        rho: ins.rho,
        beta: 1.0,
        m: ins.m,
        horizon: ins.horizon,
        x0: ins.x0hat,
    }
}

fn validate_jump_inputs(ins: &InsuranceParams) -> Result<(), DomainError> {
    if !(ins.lambda >= 0.0 && ins.lambda.is_finite()) {
        return Err(DomainError {
            field: "lambda",
            reason: "must be non-negative and finite",
        });
    }
    // Everything except the intensity must satisfy the usual domains; a
    // zero intensity (claim-free book) is allowed here so the drift-only
    // degenerate run stays expressible.
    InsuranceParams {
        lambda: 1.0,
        ..*ins
    }
    .validate()
}

/// Advances the surplus through the deterministic drift from `from` to
/// `to`, exactly: within each segment the control is `alpha E(u) + gamma`
/// and the linear ODE has an elementary solution.
fn drift_advance(
    mut x: f64,
    from: f64,
    to: f64,
    segments: &[Segment],
    kappa_f: f64,
    kappa_0: f64,
    rho: f64,
    tau: Option<f64>,
    r: f64,
    horizon: f64,
) -> f64 {
    for seg in segments {
        let u0 = seg.start.max(from);
        let u1 = seg.end.min(to);
        if u1 <= u0 {
            continue;
        }
        let w = u1 - u0;
        let growth = math::exp(r * w);
        let em1 = math::exp_m1(r * w);
        let drain = match tau {
            // The expansion time is one of the segment cuts, so the
            // indicator is constant within the overlap.
            Some(t2) if 0.5 * (u0 + u1) >= t2 => rho,
            _ => 0.0,
        };
        let k0 = kappa_0 - drain;
        x = x * growth
            + kappa_f * (seg.alpha * math::exp(r * (u1 - horizon)) * w + seg.gamma * em1 / r)
            + k0 * em1 / r;
    }
    x
}

/// Estimates the expected terminal utility of `policy` on the
/// compound-Poisson surplus with the default claim distribution: gamma
/// matched to `(z1, z2)`, or constant claims when `z2 = z1^2`.
pub fn simulate_jump(
    ins: &InsuranceParams,
    policy: &PolicySpec,
    cfg: &McConfig,
) -> Result<McEstimate, SimError> {
    if ins.z2 > ins.z1 * ins.z1 {
        let sampler = GammaClaims::matched(ins.z1, ins.z2)?;
        simulate_jump_with(ins, policy, &sampler, cfg)
    } else {
        simulate_jump_with(ins, policy, &DeterministicClaims::new(ins.z1), cfg)
    }
}

/// [`simulate_jump`] with a caller-supplied claim-size sampler.
///
/// Estimates the expected terminal utility over the paths of
/// [`jump_terminal_samples`].
///
/// The antithetic flag is ignored: negating a claim path has no meaning,
/// and reflecting only the sizes leaves the dominant arrival-count noise
/// unpaired. `n_steps` enters the budget check only (work here scales with
/// `lambda * horizon`, not with a step count).
pub fn simulate_jump_with(
    ins: &InsuranceParams,
    policy: &PolicySpec,
    sampler: &impl ClaimSampler,
    cfg: &McConfig,
) -> Result<McEstimate, SimError> {
    let xs = jump_terminal_samples(ins, policy, sampler, cfg)?;
    let mut samples = vec![0.0; xs.len()];
    for (p, (out, &x)) in samples.iter_mut().zip(&xs).enumerate() {
        let sample = utility(ins.m, x);
        if !sample.is_finite() {
            // Step index 0 marks the terminal utility map rather than a
            // claim; the surplus itself was finite.
            return Err(SimError::NonFinite { path: p, step: 0 });
        }
        *out = sample;
    }
    Ok(McEstimate::from_samples(&samples).expect("config guarantees >= 2 paths"))
}

/// Terminal surplus per path — the raw samples behind [`simulate_jump`],
/// exposed so increment moments can be compared against the diffusion
/// approximation.
///
/// Arrivals are exact (exponential inter-arrival times at intensity
/// `lambda`), the drift between claims is integrated in closed form, and
/// each claim at time `T_i` removes `f(T_i) * Z_i` from the surplus; the
/// expansion drain `rho` applies from the policy's expansion time on. The
/// draw sequence per path (arrival, size, arrival, ...) does not depend on
/// the policy, so runs under one config share common random numbers
/// across policies.
pub fn jump_terminal_samples(
    ins: &InsuranceParams,
    policy: &PolicySpec,
    sampler: &impl ClaimSampler,
    cfg: &McConfig,
) -> Result<Vec<f64>, SimError> {
    validate_jump_inputs(ins)?;
    cfg.validate()?;
    let ctrl_params = control_params(ins);
    check_policy_schedule(&ctrl_params, policy)?;

    // Declared moments must match the book exactly; the sampler is the
    // claim model, not an approximation of it.
    let declared = [
        ("declared mean", sampler.mean(), ins.z1),
        ("declared second moment", sampler.second_moment(), ins.z2),
    ];
    for (what, got, want) in declared {
        if math::abs(got - want) > 1e-9 * math::abs(want) {
            return Err(SimError::Distribution {
                what,
                got,
                want,
                tol: 1e-9,
            });
        }
    }
    if ins.lambda > 0.0 {
        moment_self_check(sampler, cfg.seed)?;
    }

    let ctrl = |t: f64| policy.control(&ctrl_params, t);
    let segments = policy_segments(&ctrl_params, policy, &ctrl);
    let kappa_f = (1.0 + ins.theta) * ins.lambda * ins.z1;
    let kappa_0 = -(ins.theta - ins.eta) * ins.lambda * ins.z1;
    let tau = policy.expansion_time();

    let n_paths = cfg.n_paths;
    let mut samples = vec![0.0; n_paths];
    let base = ChaCha8Rng::seed_from_u64(cfg.seed);
    let arrivals = (ins.lambda > 0.0)
        .then(|| Exp::new(ins.lambda).expect("positive finite intensity"));
    for (p, out) in samples.iter_mut().enumerate() {
        let mut rng = base.clone();
        rng.set_stream(p as u64);
        let mut x = ins.x0hat;
        let mut t = 0.0f64;
        let mut claims = 0usize;
        loop {
            let next = match &arrivals {
                Some(exp) => t + exp.sample(&mut rng),
                None => f64::INFINITY,
            };
            if next >= ins.horizon {
                x = drift_advance(
                    x,
                    t,
                    ins.horizon,
                    &segments,
                    kappa_f,
                    kappa_0,
                    ins.rho,
                    tau,
                    ins.r,
                    ins.horizon,
                );
                break;
            }
            x = drift_advance(
                x, t, next, &segments, kappa_f, kappa_0, ins.rho, tau, ins.r, ins.horizon,
            );
            let size = sampler.sample(&mut rng);
            x -= ctrl(next) * size;
            claims += 1;
            if !x.is_finite() {
                return Err(SimError::NonFinite {
                    path: p,
                    step: claims,
                });
            }
            t = next;
        }
        *out = x;
    }
    Ok(samples)
}

/// Million-draw empirical check of a sampler against its declared moments,
/// at relative tolerance `max(1%, 4 standard errors)`.
fn moment_self_check(sampler: &impl ClaimSampler, seed: u64) -> Result<(), SimError> {
    const DRAWS: usize = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // A stream no path uses, so the check never perturbs path noise.
    rng.set_stream(u64::MAX);
    let mut mean_z = 0.0f64;
    let mut m2_z = 0.0f64;
    let mut mean_q = 0.0f64;
    let mut m2_q = 0.0f64;
    for i in 0..DRAWS {
        let z = sampler.sample(&mut rng);
        let q = z * z;
        let k = (i + 1) as f64;
        let dz = z - mean_z;
        mean_z += dz / k;
        m2_z += dz * (z - mean_z);
        let dq = q - mean_q;
        mean_q += dq / k;
        m2_q += dq * (q - mean_q);
    }
    let n = DRAWS as f64;
    let checks = [
        ("sampled mean", mean_z, m2_z, sampler.mean()),
        ("sampled second moment", mean_q, m2_q, sampler.second_moment()),
    ];
    for (what, got, m2, want) in checks {
        let se = math::sqrt(m2 / (n - 1.0) / n);
        let tol = (4.0 * se / math::abs(want)).max(0.01);
        if math::abs(got - want) > tol * math::abs(want) {
            return Err(SimError::Distribution {
                what,
                got,
                want,
                tol,
            });
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Admissibility
// ---------------------------------------------------------------------------

/// Quartic-integrability report for a deterministic policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibilityReport {
    /// `∫_0^T f(s)^4 ds` evaluated exactly on the piecewise-affine-in-`E`
    /// decomposition of the control.
    pub quartic_integral: f64,
    /// Left-endpoint Riemann sum of the same integral on `n_steps` points —
    /// an independent numerical estimate (the policy is deterministic, so
    /// no paths are involved).
    pub quartic_estimate: f64,
    /// Both values finite: the policy is admissible in the
    /// fourth-moment sense.
    pub finite: bool,
}

/// Checks the admissibility requirement `∫_0^T f(s)^4 ds < ∞` for the
/// policy's deterministic control path.
pub fn admissibility_check(
    params: &MarketParams,
    policy: &PolicySpec,
    cfg: &McConfig,
) -> AdmissibilityReport {
    let ctrl = |t: f64| policy.control(params, t);
    let segments = policy_segments(params, policy, &ctrl);

    // On each piece f = alpha E + gamma, expand f^4 binomially; each term
    // integrates in closed form since ∫ E^k du = (E^k(e) - E^k(s)) / (k r).
    let mut exact = 0.0f64;
    for seg in &segments {
        let es = math::exp(-params.r * (params.horizon - seg.start));
        let ee = math::exp(-params.r * (params.horizon - seg.end));
        let binom = [1.0, 4.0, 6.0, 4.0, 1.0];
        let mut piece = 0.0f64;
        for (k, &c) in binom.iter().enumerate() {
            let moment = if k == 0 {
                seg.end - seg.start
            } else {
                let kf = k as f64;
                (powi(ee, k) - powi(es, k)) / (kf * params.r)
            };
            piece += c * powi(seg.alpha, k) * powi(seg.gamma, 4 - k) * moment;
        }
        exact += piece;
    }

    let n = cfg.n_steps.max(1);
    let dt = params.horizon / n as f64;
    let mut riemann = 0.0f64;
    for k in 0..n {
        let t = params.horizon * k as f64 / n as f64;
        let f = ctrl(t);
        riemann += powi(f, 4) * dt;
    }

    AdmissibilityReport {
        quartic_integral: exact,
        quartic_estimate: riemann,
        finite: exact.is_finite() && riemann.is_finite(),
    }
}

fn powi(x: f64, k: usize) -> f64 {
    let mut out = 1.0;
    for _ in 0..k {
        out *= x;
    }
    out
}
