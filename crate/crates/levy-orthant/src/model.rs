//! Parametric Lévy process families with closed-form cumulants.
//!
//! A model is the Lévy triplet of a d-dimensional process
//!
//! ```text
//! X(t) = drift·t + B_cov(t) + Σ_{i ≤ N(t)} J_i,
//! ```
//!
//! with `B_cov` a Brownian motion with covariance `cov`, `N` a Poisson process
//! of the given intensity and `J_i` i.i.d. draws from a [`JumpLaw`]. The
//! unit-time increment `ξ = X(1)` has the cumulant
//!
//! ```text
//! K(λ) = ln E e^{⟨λ, ξ⟩} = ⟨drift, λ⟩ + ½ λᵀ·cov·λ + intensity·(M(λ) − 1),
//! ```
//!
//! where `M` is the moment generating value of the jump law. Every supported
//! jump law has an analytic `M`, analytic derivatives and an analytic
//! finiteness domain, so membership in the domain is decided exactly, never by
//! probing for numeric overflow.
//!
//! The model always stores the unit-time triplet; the δ-skeleton increment law
//! is derived from it via [`LevyModel::scale_time`].

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Eigenvalue floor for the positive-semidefiniteness check on covariances.
pub const PSD_EIG_FLOOR: f64 = -1e-10;

/// Distribution of a single jump of the compound-Poisson component.
#[derive(Debug, Clone, PartialEq)]
pub enum JumpLaw {
    /// Jump = `C·direction` with `C ~ Exponential(rate)`. The moment generating
    /// value is `rate/(rate − ⟨direction, λ⟩)`, finite iff `⟨direction, λ⟩ < rate`.
    ScalarExponentialAlong { direction: DVector<f64>, rate: f64 },
    /// Gaussian jump with the given mean and covariance; MGF finite everywhere.
    GaussianJump { mean: DVector<f64>, cov: DMatrix<f64> },
    /// Finitely many atoms `(point, probability)`; probabilities sum to 1.
    /// Mostly useful for constructing degenerate test models.
    PointMasses { atoms: Vec<(DVector<f64>, f64)> },
}

/// Compound-Poisson jump component: arrival intensity plus jump law.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpComponent {
    pub intensity: f64,
    pub law: JumpLaw,
}

/// Immutable Lévy triplet (drift, Gaussian covariance, optional jumps) of a
/// d-dimensional Lévy process. Safe to share across concurrent workers; all
/// operations are pure functions of their inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct LevyModel {
    dim: usize,
    drift: DVector<f64>,
    cov: DMatrix<f64>,
    jumps: Option<JumpComponent>,
}

/// Result of a domain-membership query: whether `K(λ) < ∞`, together with the
/// signed analytic margin to the domain boundary (`rate − ⟨direction, λ⟩` for
/// exponential jumps, `+∞` when the cumulant is entire).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainCheck {
    pub inside: bool,
    pub margin: f64,
}

fn check_square_symmetric(cov: &DMatrix<f64>, dim: usize, what: &str) -> Result<()> {
    if cov.nrows() != dim || cov.ncols() != dim {
        return Err(Error::domain(format!(
            "{what} must be {dim}x{dim}, got {}x{}",
            cov.nrows(),
            cov.ncols()
        )));
    }
    let asym = (cov - cov.transpose()).abs().max();
    if asym > 1e-10 {
        return Err(Error::domain(format!(
            "{what} is not symmetric (max asymmetry {asym:.3e})"
        )));
    }
    Ok(())
}

/// PSD check with eigenvalue floor [`PSD_EIG_FLOOR`]; negative eigenvalues
/// above the floor are clamped to 0 (with a warning), below it is an error.
fn validate_psd(cov: DMatrix<f64>, dim: usize, what: &str) -> Result<DMatrix<f64>> {
    check_square_symmetric(&cov, dim, what)?;
    let eig = cov.clone().symmetric_eigen();
    let min_eig = eig.eigenvalues.min();
    if min_eig < PSD_EIG_FLOOR {
        return Err(Error::domain(format!(
            "{what} is not positive semidefinite (min eigenvalue {min_eig:.3e})"
        )));
    }
    if min_eig < 0.0 {
        log::warn!("{what}: clamping eigenvalues in [{min_eig:.3e}, 0) to 0");
        let clamped = eig.eigenvalues.map(|e| e.max(0.0));
        let recon = &eig.eigenvectors * DMatrix::from_diagonal(&clamped) * eig.eigenvectors.transpose();
        return Ok(recon);
    }
    Ok(cov)
}

impl JumpLaw {
    fn validate(&self, dim: usize) -> Result<Self> {
        match self {
            JumpLaw::ScalarExponentialAlong { direction, rate } => {
                if direction.len() != dim {
                    return Err(Error::domain("jump direction has wrong dimension"));
                }
                if direction.norm() == 0.0 {
                    return Err(Error::domain("jump direction must be nonzero"));
                }
                if !(*rate > 0.0) {
                    return Err(Error::domain("exponential jump rate must be positive"));
                }
                Ok(self.clone())
            }
            JumpLaw::GaussianJump { mean, cov } => {
                if mean.len() != dim {
                    return Err(Error::domain("jump mean has wrong dimension"));
                }
                let cov = validate_psd(cov.clone(), dim, "jump covariance")?;
                Ok(JumpLaw::GaussianJump { mean: mean.clone(), cov })
            }
            JumpLaw::PointMasses { atoms } => {
                if atoms.is_empty() {
                    return Err(Error::domain("point-mass law needs at least one atom"));
                }
                let mut total = 0.0;
                for (x, p) in atoms {
                    if x.len() != dim {
                        return Err(Error::domain("point-mass atom has wrong dimension"));
                    }
                    if *p < 0.0 {
                        return Err(Error::domain("point-mass probabilities must be nonnegative"));
                    }
                    total += p;
                }
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::domain(format!(
                        "point-mass probabilities sum to {total}, expected 1"
                    )));
                }
                Ok(self.clone())
            }
        }
    }

    /// Moment generating value `M(λ) = E e^{⟨λ, J⟩}`, `+∞` outside its domain.
    fn mgf(&self, lam: &DVector<f64>) -> f64 {
        match self {
            JumpLaw::ScalarExponentialAlong { direction, rate } => {
                let t = direction.dot(lam);
                if t >= *rate {
                    f64::INFINITY
                } else {
                    rate / (rate - t)
                }
            }
            JumpLaw::GaussianJump { mean, cov } => {
                (mean.dot(lam) + 0.5 * lam.dot(&(cov * lam))).exp()
            }
            JumpLaw::PointMasses { atoms } => {
                atoms.iter().map(|(x, p)| p * x.dot(lam).exp()).sum()
            }
        }
    }

    /// Gradient and Hessian of the MGF at an interior point.
    fn mgf_derivatives(&self, lam: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        match self {
            JumpLaw::ScalarExponentialAlong { direction, rate } => {
                let t = direction.dot(lam);
                let denom = rate - t;
                let grad = direction * (rate / (denom * denom));
                let hess = direction * direction.transpose() * (2.0 * rate / (denom * denom * denom));
                (grad, hess)
            }
            JumpLaw::GaussianJump { mean, cov } => {
                let m = self.mgf(lam);
                let shifted = mean + cov * lam;
                let hess = (&shifted * shifted.transpose() + cov) * m;
                (shifted * m, hess)
            }
            JumpLaw::PointMasses { atoms } => {
                let d = lam.len();
                let mut grad = DVector::zeros(d);
                let mut hess = DMatrix::zeros(d, d);
                for (x, p) in atoms {
                    let w = p * x.dot(lam).exp();
                    grad += x * w;
                    hess += x * x.transpose() * w;
                }
                (grad, hess)
            }
        }
    }

    /// Mean jump vector `E[J]`.
    fn mean(&self) -> DVector<f64> {
        match self {
            JumpLaw::ScalarExponentialAlong { direction, rate } => direction / *rate,
            JumpLaw::GaussianJump { mean, .. } => mean.clone(),
            JumpLaw::PointMasses { atoms } => {
                let d = atoms[0].0.len();
                atoms
                    .iter()
                    .fold(DVector::zeros(d), |acc, (x, p)| acc + x * *p)
            }
        }
    }

    /// Signed margin to the MGF domain boundary (`+∞` when entire).
    fn domain_margin(&self, lam: &DVector<f64>) -> f64 {
        match self {
            JumpLaw::ScalarExponentialAlong { direction, rate } => rate - direction.dot(lam),
            _ => f64::INFINITY,
        }
    }
}

impl LevyModel {
    /// Builds a model, validating shapes, positive semidefiniteness of the
    /// covariance and the per-law parameter constraints.
    pub fn new(
        drift: DVector<f64>,
        cov: DMatrix<f64>,
        jumps: Option<JumpComponent>,
    ) -> Result<Self> {
        let dim = drift.len();
        if dim == 0 {
            return Err(Error::domain("dimension must be at least 1"));
        }
        let cov = validate_psd(cov, dim, "covariance")?;
        let jumps = match jumps {
            None => None,
            Some(j) => {
                if !(j.intensity > 0.0) {
                    return Err(Error::domain("jump intensity must be positive"));
                }
                Some(JumpComponent {
                    intensity: j.intensity,
                    law: j.law.validate(dim)?,
                })
            }
        };
        Ok(LevyModel { dim, drift, cov, jumps })
    }

    /// Pure Gaussian model (drift + Brownian part, no jumps).
    pub fn gaussian(drift: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        LevyModel::new(drift, cov, None)
    }

    /// Model with a compound-Poisson jump component.
    pub fn with_jumps(
        drift: DVector<f64>,
        cov: DMatrix<f64>,
        intensity: f64,
        law: JumpLaw,
    ) -> Result<Self> {
        LevyModel::new(drift, cov, Some(JumpComponent { intensity, law }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn drift(&self) -> &DVector<f64> {
        &self.drift
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn jumps(&self) -> Option<&JumpComponent> {
        self.jumps.as_ref()
    }

    /// Cumulant `K(λ)` of the unit-time increment. Returns `f64::INFINITY`
    /// when `λ` is outside the finiteness domain — a legitimate value, not an
    /// error.
    pub fn cumulant(&self, lam: &DVector<f64>) -> f64 {
        let mut k = self.drift.dot(lam) + 0.5 * lam.dot(&(&self.cov * lam));
        if let Some(j) = &self.jumps {
            let m = j.law.mgf(lam);
            if !m.is_finite() {
                return f64::INFINITY;
            }
            k += j.intensity * (m - 1.0);
        }
        k
    }

    /// Analytic gradient and Hessian of `K` at a strictly interior `λ`.
    pub fn cumulant_derivatives(&self, lam: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let check = self.in_domain(lam);
        if !(check.margin > 0.0) {
            return Err(Error::domain(format!(
                "lambda outside the interior of the cumulant domain (margin {:.3e})",
                check.margin
            )));
        }
        let mut grad = &self.drift + &self.cov * lam;
        let mut hess = self.cov.clone();
        if let Some(j) = &self.jumps {
            let (g, h) = j.law.mgf_derivatives(lam);
            grad += g * j.intensity;
            hess += h * j.intensity;
        }
        Ok((grad, hess))
    }

    /// `E ξ = grad K(0) = drift + intensity·E[J]`.
    pub fn mean(&self) -> DVector<f64> {
        match &self.jumps {
            None => self.drift.clone(),
            Some(j) => &self.drift + j.law.mean() * j.intensity,
        }
    }

    /// Whether `K(λ) < ∞`, with the signed analytic margin to the boundary.
    pub fn in_domain(&self, lam: &DVector<f64>) -> DomainCheck {
        let margin = match &self.jumps {
            None => f64::INFINITY,
            Some(j) => j.law.domain_margin(lam),
        };
        DomainCheck {
            inside: margin > 0.0,
            margin,
        }
    }

    /// Model whose unit-time law equals the original `X(delta)` law:
    /// `drift·δ`, `cov·δ`, `intensity·δ`, same jump law. The cumulant scales
    /// as `K_δ = δ·K`.
    pub fn scale_time(&self, delta: f64) -> Result<LevyModel> {
        if !(delta > 0.0) {
            return Err(Error::domain(format!(
                "time scale must be positive, got {delta}"
            )));
        }
        Ok(LevyModel {
            dim: self.dim,
            drift: &self.drift * delta,
            cov: &self.cov * delta,
            jumps: self.jumps.as_ref().map(|j| JumpComponent {
                intensity: j.intensity * delta,
                law: j.law.clone(),
            }),
        })
    }
}
