//! Asymptotic prediction and empirical extraction of the constant `A₀`.
//!
//! The prediction for the hitting probability of `s·G` factors as
//!
//! ```text
//! P(τ(sG) < ∞) ≈ A₀ · s^{−(d−1)/2} · e^{−s·D(G)},
//! ```
//!
//! and `A₀` is estimated — never computed in closed form — by weighted least
//! squares in log space: with
//!
//! ```text
//! y(s) = ln p̂(s) + s·D(G) + ((d−1)/2)·ln s
//! ```
//!
//! the model form predicts `y(s) = ln A₀ + 0·s`, so the fit of `y` against a
//! constant plus slope gives `A₀ = e^intercept` and exposes shape misfit
//! through the slope diagnostic (its confidence interval should cover 0).
//! Weights are the inverse delta-method variances `(std_err/p̂)^{−2}`, so each
//! record contributes according to its Monte Carlo precision.
//!
//! Confidence intervals follow the standard weighted-least-squares convention:
//! the parameter covariance is rescaled by the residual misfit
//! `max(1, χ²/dof)` and quantiles come from the Student t distribution with
//! `n − 2` degrees of freedom. The rescaling matters: the decay form is exact
//! only in the `s → ∞` limit, and at finite `s` the residual `o(1)` term is
//! resolvable by a precise Monte Carlo run — the interval widens to cover it
//! rather than reporting an overconfident known-σ band.

use serde::Serialize;

use crate::conditions::{self, Verdict};
use crate::error::{Error, Result};
use crate::model::LevyModel;
use crate::rates::{OrthantTarget, ToleranceProfile};
use crate::sim::HitEstimate;

const Z95: f64 = 1.959963984540054;

/// The two factors of the predicted decay at scale `s`, plus `D(G)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prediction {
    /// `e^{−s·D(G)}`.
    pub exponential_factor: f64,
    /// `s^{−(d−1)/2}`.
    pub polynomial_factor: f64,
    pub d_of_g: f64,
}

/// Evaluates the predicted decay factors at scale `s`. Requires the scale
/// condition to hold.
pub fn predict(model: &LevyModel, target: &OrthantTarget, s: f64, tol: &ToleranceProfile) -> Result<Prediction> {
    if !(s > 0.0) {
        return Err(Error::config("s", "must be positive"));
    }
    let report = conditions::check_conditions(model, target, tol);
    if report.c3.overall.verdict != Verdict::Holds {
        return Err(Error::ConditionError {
            reason: format!(
                "prediction requires the scale condition to hold, but it is {:?}: {}",
                report.c3.overall.verdict, report.c3.overall.reason
            ),
        });
    }
    let d_of_g = report.d_of_g.expect("d_of_g present when c3 holds");
    let exponent = (model.dim() as f64 - 1.0) / 2.0;
    Ok(Prediction {
        exponential_factor: (-s * d_of_g).exp(),
        polynomial_factor: s.powf(-exponent),
        d_of_g,
    })
}

/// Weighted log-space regression of Monte Carlo estimates against the
/// predicted decay shape. `records` is excluded from the serialized report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticFit {
    #[serde(skip)]
    pub records: Vec<HitEstimate>,
    pub a0_hat: f64,
    pub a0_ci95: (f64, f64),
    /// Fitted residual slope in `s`; ≈ 0 when the decay shape is right.
    pub shape_slope: f64,
    pub shape_slope_ci95: (f64, f64),
    /// `(s, R(s))` with `R(s) = p̂ / (s^{−(d−1)/2} e^{−s·D(G)})`, for the
    /// plateau plot.
    pub per_s_ratio: Vec<(f64, f64)>,
}

/// Floor on the relative std-err entering the weights, so that noiseless
/// synthetic records degrade to an equally-weighted exact fit.
const MIN_REL_SIGMA: f64 = 1e-12;

/// Two-sided 95% Student t quantiles for 1..=30 degrees of freedom.
const T975: [f64; 30] = [
    12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228, 2.201, 2.179, 2.160,
    2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064, 2.060, 2.056,
    2.052, 2.048, 2.045, 2.042,
];

fn t975(dof: usize) -> f64 {
    if dof == 0 {
        f64::INFINITY
    } else if dof <= T975.len() {
        T975[dof - 1]
    } else {
        Z95
    }
}

/// Fits `A₀` from ≥ 3 usable records (`p̂ > 0`, finite std-err). Records with
/// `p̂ = 0` are excluded with a warning rather than regularized.
pub fn fit_a0(records: &[HitEstimate], d_of_g: f64, dim: usize) -> Result<AsymptoticFit> {
    let usable: Vec<&HitEstimate> = records
        .iter()
        .filter(|r| {
            if r.p_hat > 0.0 && r.std_err.is_finite() {
                true
            } else {
                log::warn!(
                    "excluding record at s = {} (p_hat = {}, std_err = {}) from the fit",
                    r.s,
                    r.p_hat,
                    r.std_err
                );
                false
            }
        })
        .collect();
    if usable.len() < 3 {
        return Err(Error::FitError {
            reason: format!(
                "need at least 3 records with p_hat > 0 and finite std_err, got {}",
                usable.len()
            ),
        });
    }

    let exponent = (dim as f64 - 1.0) / 2.0;
    // y = ln p̂ + s·D + ((d−1)/2)·ln s, weighted by (std_err/p̂)^{−2}.
    let mut sw = 0.0;
    let mut sx = 0.0;
    let mut sy = 0.0;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut per_s_ratio = Vec::with_capacity(usable.len());
    for r in &usable {
        let y = r.p_hat.ln() + r.s * d_of_g + exponent * r.s.ln();
        per_s_ratio.push((r.s, y.exp()));
        let sigma = (r.std_err / r.p_hat).max(MIN_REL_SIGMA);
        let w = 1.0 / (sigma * sigma);
        sw += w;
        sx += w * r.s;
        sy += w * y;
        sxx += w * r.s * r.s;
        sxy += w * r.s * y;
    }
    let det = sw * sxx - sx * sx;
    if !(det > 0.0) || !det.is_finite() {
        return Err(Error::FitError {
            reason: "degenerate design: the usable records need at least two distinct s values".into(),
        });
    }
    let intercept = (sy * sxx - sx * sxy) / det;
    let slope = (sw * sxy - sx * sy) / det;

    // Residual misfit scale and t quantile (standard WLS inference); the
    // scale never deflates below the known-σ widths.
    let dof = usable.len() - 2;
    let mut chi2 = 0.0;
    for r in &usable {
        let y = r.p_hat.ln() + r.s * d_of_g + exponent * r.s.ln();
        let sigma = (r.std_err / r.p_hat).max(MIN_REL_SIGMA);
        let resid = (y - intercept - slope * r.s) / sigma;
        chi2 += resid * resid;
    }
    let scale = if dof > 0 { (chi2 / dof as f64).max(1.0).sqrt() } else { 1.0 };
    let q = t975(dof);
    let se_intercept = scale * (sxx / det).sqrt();
    let se_slope = scale * (sw / det).sqrt();

    Ok(AsymptoticFit {
        records: records.to_vec(),
        a0_hat: intercept.exp(),
        a0_ci95: (
            (intercept - q * se_intercept).exp(),
            (intercept + q * se_intercept).exp(),
        ),
        shape_slope: slope,
        shape_slope_ci95: (slope - q * se_slope, slope + q * se_slope),
        per_s_ratio,
    })
}
