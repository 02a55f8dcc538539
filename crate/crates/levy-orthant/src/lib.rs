//! Large-deviation machinery and rare-event Monte Carlo for multivariate
//! Lévy processes with negative drift hitting a remote translated orthant.
//!
//! For a d-dimensional Lévy process `X` with unit-time increment `ξ = X(1)`
//! and cumulant `K(λ) = ln E e^{⟨λ, ξ⟩}`, the probability of ever hitting the
//! translated positive orthant `sG = s·g + Q⁺` decays as
//!
//! ```text
//! P(τ(sG) < ∞) ≈ A₀ · s^{−(d−1)/2} · e^{−s·D(G)},    s → ∞,
//! ```
//!
//! where `D` is the second rate function built from the Legendre transform
//! `Λ` of `K`. This crate computes all the deterministic ingredients —
//! `Λ(α)` with its conjugate tilt, `D(v)` with the optimal scale, the most
//! probable point of the orthant, the scale `r_G` and the level-surface
//! normal `N(r_G)` — decides the conditions under which the expansion is
//! valid, and verifies the decay by crude and importance-sampled Monte Carlo,
//! extracting `A₀` empirically by weighted log-space regression.
//!
//! # Modules
//!
//! * [`model`] — parametric Lévy families (Brownian + drift + compound
//!   Poisson) with analytic cumulants, derivatives and domain margins;
//! * [`rates`] — first/second rate functions, most probable points and
//!   scales via damped Newton and safeguarded root searches;
//! * [`conditions`] — machine-readable certificates of the standing
//!   conditions gating the asymptotics;
//! * [`sim`] — δ-skeleton path simulation with jump-epoch hit detection and
//!   the two estimators (deterministically chunked, parallel with the
//!   `parallel` feature);
//! * [`asympt`] — the predicted decay factors and the `A₀` regression;
//! * [`cli`] — the batch pipeline behind the `levy-orthant` binary.

pub mod asympt;
pub mod cli;
pub mod conditions;
pub mod error;
pub mod model;
pub mod rates;
pub mod sim;

pub use asympt::{fit_a0, predict, AsymptoticFit, Prediction};
pub use conditions::{check_conditions, ConditionReport, Verdict};
pub use error::{Error, Result};
pub use model::{JumpComponent, JumpLaw, LevyModel};
pub use rates::{
    legendre, most_probable_scale, normal_at, orthant_mpp, second_rate, LegendreSolution,
    MppSolution, OrthantTarget, SecondRateSolution, ToleranceProfile,
};
pub use sim::{
    sample_increment, simulate_hitting_crude, simulate_hitting_is, tilt_model, with_workers,
    HitEstimate, Method, SimConfig,
};
