//! Optimal timing and scale of a business expansion under exponential utility.
//!
//! A firm controls the scale `f(t)` of a risky line of business whose surplus
//! follows
//!
//! ```text
//! dX(s) = [ r X(s) + mu f(s) - delta - rho 1{s >= tau} ] ds + sigma f(s) dW(s)
//! ```
//!
//! and picks a one-shot expansion time `tau`. Before the expansion the scale
//! is capped at `beta`; after it the cap is lifted at the price of a running
//! cost `rho`. The firm maximizes expected exponential utility
//! `E[-(1/m) exp(-m X(T))]` of terminal surplus.
//!
//! The optimal plan has a two-threshold structure, computed in closed form by
//! [`model::compute_schedule`]:
//!
//! * before `t1` the cap does not bind and the scale follows the frictionless
//!   feedback rule `f1(t) = mu / (sigma^2 m) * exp(-r (T - t))`;
//! * on `[t1, t2)` the cap binds (`f = beta`) and the firm waits;
//! * at `t2` the firm expands and reverts to `f1`, now uncapped.
//!
//! # Crate layout
//!
//! * [`model`] — parameter validation, feasibility, the opportunity-cost
//!   function `h`, and the closed-form thresholds `t1`, `t2`.
//! * [`closed_form`] — value functions before and after expansion, the
//!   expansion premium, and the optimal control path.
//! * [`vi_solver`] — an independent finite-difference solver for the
//!   post-expansion HJB equation and the pre-expansion variational
//!   inequality, used to verify the closed forms.
//! * [`simulator`] — Monte Carlo engines (diffusion and compound-Poisson)
//!   with common-random-number policy comparisons.
//! * [`reinsurance`] — the proportional-reinsurance specialization and its
//!   diffusion approximation.
//!
//! The crate is `no_std`-compatible (with `alloc`); the companion CLI crate
//! provides file formats and scenario tooling on top of it.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(missing_docs)]
#![warn(clippy::all)]

extern crate alloc;

pub mod closed_form;
mod math;
pub mod model;
pub mod reinsurance;
pub mod simulator;
pub mod vi_solver;

pub use closed_form::{PolicySpec, SurfaceKind, ValueSurface};
pub use model::{ExpansionCase, ExpansionSchedule, FeasibilityReport, MarketParams};
pub use reinsurance::{InsuranceParams, ReinsuranceCase};
pub use simulator::{McConfig, McEstimate};
pub use vi_solver::{Grid, PdeSolution};
