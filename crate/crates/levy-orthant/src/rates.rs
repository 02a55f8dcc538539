//! First and second rate functions, most probable points and scales.
//!
//! The first rate function is the Legendre–Fenchel transform of the cumulant,
//!
//! ```text
//! Λ(α) = sup_λ { ⟨α, λ⟩ − K(λ) },
//! ```
//!
//! computed by solving the stationarity system `grad K(λ) = α` with a damped
//! Newton iteration. Steps are clamped against the analytic domain margin
//! (the exponential-jump MGF pole makes naive Newton overshoot), so the
//! iterates never leave the interior of the finiteness domain.
//!
//! The second rate function is
//!
//! ```text
//! D(v) = inf_{u > 0} u·Λ(v/u),
//! ```
//!
//! whose stationarity condition reduces to `K(λ(v/u)) = 0`:
//!
//! ```text
//! d/du [u·Λ(v/u)] = Λ(v/u) − ⟨v/u, λ(v/u)⟩ = −K(λ(v/u)),
//! ```
//!
//! and `t ↦ K(λ(t·v))` is strictly increasing along the ray (its derivative is
//! `t·vᵀH(λ)⁻¹v` with `H` the positive-definite cumulant Hessian), so the
//! optimum is located by a safeguarded Newton/bisection root search rather
//! than a 1-D minimization. The most probable scale of a translated orthant
//! `g + Q⁺` is the root of the same function with `v = g`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::LevyModel;

/// Solver tolerances. `newton_tol` scales the gradient-residual target of the
/// Legendre solve, `root_tol` bounds `|K|` at accepted roots (and serves as
/// the strict-positivity threshold for condition checks), `max_iter` caps
/// Newton iterations, and `[bracket_lo, bracket_hi]` brackets every scalar
/// search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceProfile {
    pub newton_tol: f64,
    pub root_tol: f64,
    pub max_iter: usize,
    #[serde(default = "default_bracket_lo")]
    pub bracket_lo: f64,
    #[serde(default = "default_bracket_hi")]
    pub bracket_hi: f64,
}

fn default_bracket_lo() -> f64 {
    1e-6
}

fn default_bracket_hi() -> f64 {
    1e6
}

impl Default for ToleranceProfile {
    fn default() -> Self {
        ToleranceProfile {
            newton_tol: 1e-10,
            root_tol: 1e-10,
            max_iter: 200,
            bracket_lo: default_bracket_lo(),
            bracket_hi: default_bracket_hi(),
        }
    }
}

/// Vertex `g` of the translated open positive orthant `G = g + Q⁺`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthantTarget {
    vertex: DVector<f64>,
}

impl OrthantTarget {
    /// All components of `g` must be strictly positive.
    pub fn new(vertex: DVector<f64>) -> Result<Self> {
        if vertex.is_empty() {
            return Err(Error::config("target.g", "must be nonempty"));
        }
        if vertex.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::config(
                "target.g",
                format!("all components must be strictly positive, got {:?}", vertex.as_slice()),
            ));
        }
        Ok(OrthantTarget { vertex })
    }

    pub fn vertex(&self) -> &DVector<f64> {
        &self.vertex
    }

    pub fn dim(&self) -> usize {
        self.vertex.len()
    }
}

/// Solution of the Legendre transform at `α`.
///
/// When the Newton path escapes toward the domain boundary (or along a
/// recession direction) without reaching stationarity, the supremum is
/// approached but not attained: `in_cramer_range` is `false`, `conjugate`
/// holds the last iterate and `lambda_value` the best value found.
#[derive(Debug, Clone, PartialEq)]
pub struct LegendreSolution {
    pub alpha: DVector<f64>,
    /// `Λ(α) = ⟨α, λ(α)⟩ − K(λ(α))`; always ≥ 0.
    pub lambda_value: f64,
    /// The maximizer `λ(α)`.
    pub conjugate: DVector<f64>,
    /// `‖grad K(λ(α)) − α‖` at the returned iterate.
    pub residual: f64,
    /// Whether `α` was attained as `grad K(λ)` for an interior `λ`.
    pub in_cramer_range: bool,
}

/// Solution of `D(v) = inf_{u>0} u·Λ(v/u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondRateSolution {
    pub v: DVector<f64>,
    /// `D(v) = u*·Λ(v/u*)`.
    pub d_value: f64,
    /// The optimal scale `u*`.
    pub u_star: f64,
    /// `λ* = λ(v/u*)`, the optimizing tilt; satisfies `K(λ*) = 0`.
    pub tilt: DVector<f64>,
    /// `|K(λ*)|` at the accepted root.
    pub k_residual: f64,
}

/// Most probable point of `r·G` together with the KKT vertex certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct MppSolution {
    pub r: f64,
    /// The minimizer of `Λ` over the closed translated orthant.
    pub point: DVector<f64>,
    /// `true` iff `λ(r·g)` has all components strictly positive, the KKT
    /// certificate that the vertex itself is the minimizer.
    pub vertex_is_mpp: bool,
    /// `grad Λ` at the point; equals the conjugate `λ` there (zero on the
    /// released coordinates when the MPP sits on a face).
    pub normal: DVector<f64>,
}

/// Outcome of one damped-Newton Legendre solve.
enum NewtonOutcome {
    Converged,
    BoundaryEscape,
    Exhausted,
}

const ARMIJO_C1: f64 = 1e-4;
const MARGIN_KEEP: f64 = 0.9;
const MAX_HALVINGS: u32 = 60;
const LAMBDA_ESCAPE_NORM: f64 = 1e9;
/// Residual threshold below which damping is dropped in favour of pure
/// (margin-clamped) Newton steps.
const NEWTON_PURE_PHASE: f64 = 1e-4;

struct NewtonState {
    lam: DVector<f64>,
    residual: f64,
    outcome: NewtonOutcome,
    iterations: usize,
}

/// Damped Newton for `grad K(λ) = α` starting from the origin (always
/// interior). Steps are scaled so the iterate keeps at least 10% of the
/// current analytic domain margin, then halved until the convex merit
/// `K(λ) − ⟨α, λ⟩` decreases (Armijo).
fn newton_solve(model: &LevyModel, alpha: &DVector<f64>, tol: &ToleranceProfile) -> Result<NewtonState> {
    let d = model.dim();
    let mut lam = DVector::zeros(d);
    let target = tol.newton_tol * (1.0 + alpha.norm());
    let mut residual = f64::INFINITY;

    for iter in 0..tol.max_iter {
        let (grad, hess) = model.cumulant_derivatives(&lam)?;
        let r = alpha - grad;
        residual = r.norm();
        if residual <= target {
            return Ok(NewtonState {
                lam,
                residual,
                outcome: NewtonOutcome::Converged,
                iterations: iter,
            });
        }

        let chol: Cholesky<f64, Dyn> = Cholesky::new(hess.clone()).ok_or_else(|| {
            Error::DegenerateModel {
                reason: format!(
                    "cumulant Hessian singular at lambda = {:?}; the increment law is not full-dimensional",
                    lam.as_slice()
                ),
            }
        })?;
        let step = chol.solve(&r);

        // Clamp against the domain margin: keep margin(λ + t·step) ≥ 10% of margin(λ).
        let mut t = 1.0f64;
        let margin = model.in_domain(&lam).margin;
        if margin.is_finite() {
            let new_margin = model.in_domain(&(&lam + &step)).margin;
            let margin_drop = margin - new_margin; // linear in the step
            if margin_drop > MARGIN_KEEP * margin {
                t = MARGIN_KEEP * margin / margin_drop;
            }
        }

        if residual <= NEWTON_PURE_PHASE * (1.0 + alpha.norm()) {
            // Close to the root the merit decrease per step is ~residual² and
            // drowns in rounding; undamped (margin-clamped) Newton converges
            // quadratically from here.
            lam += &step * t;
        } else {
            // Armijo step halving on the merit f(λ) = K(λ) − ⟨α, λ⟩.
            let f0 = model.cumulant(&lam) - alpha.dot(&lam);
            let slope = -r.dot(&step); // directional derivative of the merit, < 0
            let mut accepted = false;
            for _ in 0..MAX_HALVINGS {
                let cand = &lam + &step * t;
                let f1 = model.cumulant(&cand) - alpha.dot(&cand);
                if f1.is_finite() && f1 <= f0 + ARMIJO_C1 * t * slope {
                    lam = cand;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
        }

        // Escape detection: the supremum is being approached along the
        // boundary (shrinking margin) or a recession direction (diverging λ).
        let m = model.in_domain(&lam).margin;
        if (m.is_finite() && m < 1e-13 * (1.0 + lam.norm())) || lam.norm() > LAMBDA_ESCAPE_NORM {
            return Ok(NewtonState {
                lam,
                residual,
                outcome: NewtonOutcome::BoundaryEscape,
                iterations: iter + 1,
            });
        }
    }

    // Distinguish a boundary escape from genuine stagnation.
    let m = model.in_domain(&lam).margin;
    let outcome = if (m.is_finite() && m < 1e-6 * (1.0 + lam.norm())) || lam.norm() > 1e6 {
        NewtonOutcome::BoundaryEscape
    } else {
        NewtonOutcome::Exhausted
    };
    Ok(NewtonState {
        lam,
        residual,
        outcome,
        iterations: tol.max_iter,
    })
}

/// First rate function `Λ(α)` with its conjugate point `λ(α)`.
///
/// Errors with `NoConvergence` when the iteration stalls in the interior and
/// `DegenerateModel` when the Hessian is singular; a Newton path escaping
/// toward the domain boundary is *not* an error — the solution comes back
/// with `in_cramer_range = false`.
pub fn legendre(model: &LevyModel, alpha: &DVector<f64>, tol: &ToleranceProfile) -> Result<LegendreSolution> {
    if alpha.len() != model.dim() {
        return Err(Error::domain("alpha has wrong dimension"));
    }
    let state = newton_solve(model, alpha, tol)?;
    let value = alpha.dot(&state.lam) - model.cumulant(&state.lam);
    match state.outcome {
        NewtonOutcome::Converged => Ok(LegendreSolution {
            alpha: alpha.clone(),
            // Λ ≥ 0 always (λ = 0 gives value 0); clip away rounding at the mean.
            lambda_value: value.max(0.0),
            conjugate: state.lam,
            residual: state.residual,
            in_cramer_range: true,
        }),
        NewtonOutcome::BoundaryEscape => Ok(LegendreSolution {
            alpha: alpha.clone(),
            lambda_value: value.max(0.0),
            conjugate: state.lam,
            residual: state.residual,
            in_cramer_range: false,
        }),
        NewtonOutcome::Exhausted => Err(Error::NoConvergence {
            iterations: state.iterations,
            residual: state.residual,
            last_iterate: state.lam.as_slice().to_vec(),
        }),
    }
}

/// Root of `t ↦ K(λ(t·v))` on `[bracket_lo, bracket_hi]`, by bisection with
/// Newton refinement (the derivative `t·vᵀH⁻¹v` is available analytically).
/// Returns the root and the Legendre solution at `t·v`.
pub(crate) fn cramer_root(
    model: &LevyModel,
    v: &DVector<f64>,
    tol: &ToleranceProfile,
) -> Result<(f64, LegendreSolution)> {
    // K at the conjugate point of t·v, +∞ when the sup is not attained there.
    let eval = |t: f64| -> Result<(f64, LegendreSolution)> {
        let sol = legendre(model, &(v * t), tol)?;
        if !sol.in_cramer_range {
            return Ok((f64::INFINITY, sol));
        }
        Ok((model.cumulant(&sol.conjugate), sol))
    };

    let (mut a, mut b) = (tol.bracket_lo, tol.bracket_hi);
    let (k_lo, _) = eval(a)?;
    let (k_hi, _) = eval(b)?;
    if !(k_lo < 0.0) || !(k_hi > 0.0) {
        return Err(Error::NoRoot {
            bracket_lo: a,
            bracket_hi: b,
            k_lo,
            k_hi,
        });
    }

    let mut t = (a * b).sqrt();
    for _ in 0..tol.max_iter {
        let (k, sol) = eval(t)?;
        if k.is_finite() && k.abs() <= tol.root_tol {
            return Ok((t, sol));
        }
        if k < 0.0 {
            a = t;
        } else {
            b = t;
        }
        let mut next = f64::NAN;
        if k.is_finite() {
            // Newton on h(t) = K(λ(t·v)): h'(t) = t·vᵀ H(λ)⁻¹ v.
            if let Ok((_, hess)) = model.cumulant_derivatives(&sol.conjugate) {
                if let Some(chol) = Cholesky::new(hess) {
                    let dh = t * v.dot(&chol.solve(v));
                    if dh > 0.0 {
                        next = t - k / dh;
                    }
                }
            }
        }
        t = if next.is_finite() && next > a && next < b {
            next
        } else if b / a < 4.0 {
            0.5 * (a + b)
        } else {
            (a * b).sqrt()
        };
    }
    Err(Error::NoConvergence {
        iterations: tol.max_iter,
        residual: f64::NAN,
        last_iterate: vec![t],
    })
}

/// Second rate function `D(v)` with the optimal scale and tilt.
pub fn second_rate(model: &LevyModel, v: &DVector<f64>, tol: &ToleranceProfile) -> Result<SecondRateSolution> {
    if v.iter().all(|&x| x == 0.0) {
        return Err(Error::domain("second rate function requires v != 0"));
    }
    let (t_star, sol) = cramer_root(model, v, tol).map_err(|e| match e {
        Error::NoRoot { bracket_lo, bracket_hi, k_lo, k_hi } => Error::NoFiniteMinimum {
            bracket_lo: 1.0 / bracket_hi,
            bracket_hi: 1.0 / bracket_lo,
            diagnostics: format!(
                "u·Λ(v/u) has no stationary point: K(λ(t·v)) = {k_lo:.3e} at t = {bracket_lo:.1e} and {k_hi:.3e} at t = {bracket_hi:.1e}"
            ),
        },
        other => other,
    })?;
    let u_star = 1.0 / t_star;
    let k_residual = model.cumulant(&sol.conjugate).abs();
    Ok(SecondRateSolution {
        v: v.clone(),
        d_value: u_star * sol.lambda_value,
        u_star,
        tilt: sol.conjugate,
        k_residual,
    })
}

/// Most probable point of `r·G = r·g + Q⁺`.
///
/// The KKT certificate for the vertex is strict positivity of `λ(r·g)`: `Λ`
/// is convex with `grad Λ = λ`, so the vertex minimizes `Λ` over the closed
/// orthant iff no coordinate direction is a descent direction. When the
/// certificate fails the minimizer is found on a face by active-set descent
/// (released coordinates carry `λ_i = 0`), to the looser accuracy the
/// downstream condition report needs.
pub fn orthant_mpp(model: &LevyModel, target: &OrthantTarget, r: f64, tol: &ToleranceProfile) -> Result<MppSolution> {
    if !(r > 0.0) {
        return Err(Error::domain("scale r must be positive"));
    }
    let rg = target.vertex() * r;
    let sol = legendre(model, &rg, tol)?;
    if sol.conjugate.iter().all(|&l| l > 0.0) {
        return Ok(MppSolution {
            r,
            point: rg,
            vertex_is_mpp: true,
            normal: sol.conjugate,
        });
    }

    face_mpp(model, &rg, sol.conjugate, tol).map(|(point, normal)| MppSolution {
        r,
        point,
        vertex_is_mpp: false,
        normal,
    })
}

const ACTIVE_TOL: f64 = 1e-10;
const FACE_TOL: f64 = 1e-8;

/// Active-set minimization of `Λ` over `{x : x ≥ rg}` when the vertex fails
/// the KKT test. Works in the dual variable: on the active set solve
/// `grad K(λ)_A = rg_A` with `λ = 0` off it, then exchange constraints until
/// primal and dual feasibility hold.
fn face_mpp(
    model: &LevyModel,
    rg: &DVector<f64>,
    start: DVector<f64>,
    tol: &ToleranceProfile,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let d = model.dim();
    let mut active: Vec<bool> = vec![true; d];
    // Drop the coordinates whose multiplier came back nonpositive at the vertex.
    for (i, &l) in start.iter().enumerate() {
        if l <= 0.0 {
            active[i] = false;
        }
    }

    let scale = 1.0 + rg.norm();
    for _ in 0..50 {
        let idx: Vec<usize> = (0..d).filter(|&i| active[i]).collect();
        let lam = solve_face(model, rg, &idx, tol)?;
        let (x, _) = model.cumulant_derivatives(&lam)?;

        // Dual feasibility: multipliers on the active set must be ≥ 0.
        if let Some(&worst) = idx
            .iter()
            .filter(|&&i| lam[i] < -ACTIVE_TOL * scale)
            .min_by(|&&i, &&j| lam[i].partial_cmp(&lam[j]).unwrap())
        {
            active[worst] = false;
            continue;
        }
        // Primal feasibility: released coordinates must satisfy x ≥ rg.
        if let Some(worst) = (0..d)
            .filter(|&j| !active[j] && x[j] < rg[j] - FACE_TOL * scale)
            .min_by(|&i, &j| (x[i] - rg[i]).partial_cmp(&(x[j] - rg[j])).unwrap())
        {
            active[worst] = true;
            continue;
        }

        let mut point = x;
        for &i in &idx {
            point[i] = rg[i]; // active coordinates sit exactly on the face
        }
        return Ok((point, lam));
    }
    Err(Error::NoConvergence {
        iterations: 50,
        residual: f64::NAN,
        last_iterate: rg.as_slice().to_vec(),
    })
}

/// Reduced Newton solve of `grad K(λ)_A = rg_A` with `λ_i = 0` for `i ∉ A`.
fn solve_face(
    model: &LevyModel,
    rg: &DVector<f64>,
    idx: &[usize],
    tol: &ToleranceProfile,
) -> Result<DVector<f64>> {
    let d = model.dim();
    let mut lam = DVector::zeros(d);
    if idx.is_empty() {
        return Ok(lam);
    }
    let target = FACE_TOL * (1.0 + rg.norm());
    for _ in 0..tol.max_iter {
        let (grad, hess) = model.cumulant_derivatives(&lam)?;
        let r_red = DVector::from_iterator(idx.len(), idx.iter().map(|&i| rg[i] - grad[i]));
        if r_red.norm() <= target {
            return Ok(lam);
        }
        let h_red = DMatrix::from_fn(idx.len(), idx.len(), |a, b| hess[(idx[a], idx[b])]);
        let chol = Cholesky::new(h_red).ok_or_else(|| Error::DegenerateModel {
            reason: "singular reduced Hessian in face solve".into(),
        })?;
        let step_red = chol.solve(&r_red);
        let mut step = DVector::zeros(d);
        for (a, &i) in idx.iter().enumerate() {
            step[i] = step_red[a];
        }

        let mut t = 1.0f64;
        let margin = model.in_domain(&lam).margin;
        if margin.is_finite() {
            let drop = margin - model.in_domain(&(&lam + &step)).margin;
            if drop > MARGIN_KEEP * margin {
                t = MARGIN_KEEP * margin / drop;
            }
        }
        if r_red.norm() <= NEWTON_PURE_PHASE * (1.0 + rg.norm()) {
            lam += &step * t;
            continue;
        }
        let merit = |l: &DVector<f64>| model.cumulant(l) - idx.iter().map(|&i| rg[i] * l[i]).sum::<f64>();
        let f0 = merit(&lam);
        let slope = -r_red.dot(&step_red);
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let cand = &lam + &step * t;
            let f1 = merit(&cand);
            if f1.is_finite() && f1 <= f0 + ARMIJO_C1 * t * slope {
                lam = cand;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Err(Error::NoConvergence {
        iterations: tol.max_iter,
        residual: f64::NAN,
        last_iterate: lam.as_slice().to_vec(),
    })
}

/// Most probable scale `r_G`: the root of `K(λ(r·g)) = 0`. Requires the
/// vertex-MPP certificate to hold at the solution.
pub fn most_probable_scale(model: &LevyModel, target: &OrthantTarget, tol: &ToleranceProfile) -> Result<f64> {
    let (r, sol) = cramer_root(model, target.vertex(), tol)?;
    if let Some((i, &l)) = sol
        .conjugate
        .iter()
        .enumerate()
        .find(|&(_, &l)| !(l > 0.0))
    {
        return Err(Error::VertexNotMpp {
            r,
            reason: format!("component {i} of the conjugate tilt is {l:.6e} (KKT certificate fails)"),
        });
    }
    Ok(r)
}

/// Normal `N(r) = λ(r·g)` to the level surface of `Λ` at the vertex MPP.
pub fn normal_at(model: &LevyModel, target: &OrthantTarget, r: f64, tol: &ToleranceProfile) -> Result<DVector<f64>> {
    let mpp = orthant_mpp(model, target, r, tol)?;
    if !mpp.vertex_is_mpp {
        return Err(Error::VertexNotMpp {
            r,
            reason: "the most probable point of r·G lies on a face, not at the vertex".into(),
        });
    }
    Ok(mpp.normal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::JumpLaw;
    use approx::assert_relative_eq;
    use nalgebra::{dmatrix, dvector};

    fn tol() -> ToleranceProfile {
        ToleranceProfile::default()
    }

    fn bm_fixture() -> LevyModel {
        LevyModel::gaussian(dvector![-1.0, -1.0], DMatrix::identity(2, 2)).unwrap()
    }

    fn cl1_oracle() -> LevyModel {
        LevyModel::with_jumps(
            dvector![-1.0],
            DMatrix::zeros(1, 1),
            1.0,
            JumpLaw::ScalarExponentialAlong {
                direction: dvector![1.0],
                rate: 2.0,
            },
        )
        .unwrap()
    }

    fn correlated_gaussian() -> LevyModel {
        LevyModel::gaussian(dvector![-1.0, -1.0], dmatrix![1.0, 0.9; 0.9, 1.0]).unwrap()
    }

    #[test]
    fn gaussian_legendre_closed_form() {
        // Λ(α) = ½|α − μ|², λ(α) = α − μ.
        let m = bm_fixture();
        let sol = legendre(&m, &dvector![0.0, 0.0], &tol()).unwrap();
        assert_relative_eq!(sol.lambda_value, 1.0, epsilon = 1e-10);
        assert_relative_eq!(sol.conjugate, dvector![1.0, 1.0], epsilon = 1e-10);
        assert!(sol.in_cramer_range);
        assert!(sol.residual <= 1e-10 * (1.0 + 0.0));
    }

    #[test]
    fn legendre_vanishes_at_mean() {
        for m in [bm_fixture(), cl1_oracle()] {
            let sol = legendre(&m, &m.mean(), &tol()).unwrap();
            assert!(sol.lambda_value.abs() <= 1e-12);
            assert!(sol.conjugate.norm() <= 1e-8);
        }
    }

    #[test]
    fn one_dim_cl_legendre() {
        let m = cl1_oracle();
        let sol = legendre(&m, &dvector![1.0], &tol()).unwrap();
        // grad K(1) = 2/(2-1)² - 1 = 1, K(1) = 1/(2-1) - 1 = 0 ⇒ Λ(1) = 1.
        assert_relative_eq!(sol.conjugate[0], 1.0, epsilon = 1e-9);
        assert_relative_eq!(sol.lambda_value, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn legendre_grid_scan_oracle() {
        // Dense scan of ⟨α,λ⟩ − K(λ) over a λ grid must not beat the solver.
        let m = bm_fixture();
        let alpha = dvector![0.3, -0.7];
        let sol = legendre(&m, &alpha, &tol()).unwrap();
        let mut best = f64::NEG_INFINITY;
        let n = 400;
        for i in 0..=n {
            for j in 0..=n {
                let lam = dvector![
                    -4.0 + 8.0 * i as f64 / n as f64,
                    -4.0 + 8.0 * j as f64 / n as f64
                ];
                best = best.max(alpha.dot(&lam) - m.cumulant(&lam));
            }
        }
        assert!(sol.lambda_value >= best - 1e-9);
        assert!(sol.lambda_value - best <= 1e-3); // grid resolution
    }

    #[test]
    fn legendre_flags_unattained_supremum() {
        // For the d=1 CL model the attainable means are (-1, ∞); below the
        // drift corner the supremum is approached along λ → −∞.
        let m = cl1_oracle();
        let sol = legendre(&m, &dvector![-1.5], &tol()).unwrap();
        assert!(!sol.in_cramer_range);
    }

    #[test]
    fn degenerate_model_is_signalled() {
        // Zero Gaussian part and a single jump direction in d=2: rank-1 Hessian.
        let m = LevyModel::with_jumps(
            dvector![-1.0, -1.0],
            DMatrix::zeros(2, 2),
            1.0,
            JumpLaw::ScalarExponentialAlong {
                direction: dvector![1.0, 1.0],
                rate: 3.0,
            },
        )
        .unwrap();
        assert!(matches!(
            legendre(&m, &dvector![0.5, 0.5], &tol()),
            Err(Error::DegenerateModel { .. })
        ));
    }

    #[test]
    fn second_rate_bm_fixture() {
        // u·Λ(v/u) = u + 2 + 1/u for v = (1,1): minimum 4 at u = 1.
        let m = bm_fixture();
        let sol = second_rate(&m, &dvector![1.0, 1.0], &tol()).unwrap();
        assert_relative_eq!(sol.d_value, 4.0, epsilon = 1e-8);
        assert_relative_eq!(sol.u_star, 1.0, epsilon = 1e-7);
        assert_relative_eq!(sol.tilt, dvector![2.0, 2.0], epsilon = 1e-7);
        assert!(sol.k_residual <= 1e-10);
        assert_relative_eq!(sol.d_value, sol.v.dot(&sol.tilt), epsilon = 1e-8);
    }

    #[test]
    fn second_rate_homogeneity() {
        let m = bm_fixture();
        let d1 = second_rate(&m, &dvector![1.0, 1.0], &tol()).unwrap().d_value;
        let d2 = second_rate(&m, &dvector![2.0, 2.0], &tol()).unwrap().d_value;
        assert_relative_eq!(d2, 2.0 * d1, max_relative = 1e-8);
        assert_relative_eq!(d2, 8.0, epsilon = 1e-7);
    }

    #[test]
    fn second_rate_grid_scan_oracle() {
        // Independent 1-D scan of u ↦ u·Λ(v/u).
        let m = bm_fixture();
        let v = dvector![1.0, 2.0];
        let sol = second_rate(&m, &v, &tol()).unwrap();
        let mut best = f64::INFINITY;
        for i in 1..=4000 {
            let u = i as f64 * 1e-3; // scan (0, 4]
            let lam = legendre(&m, &(&v / u), &tol()).unwrap();
            best = best.min(u * lam.lambda_value);
        }
        assert!(sol.d_value <= best + 1e-9);
        assert!(best - sol.d_value <= 1e-5);
    }

    #[test]
    fn second_rate_cl_adjustment_coefficient() {
        let m = cl1_oracle();
        let sol = second_rate(&m, &dvector![1.0], &tol()).unwrap();
        assert_relative_eq!(sol.d_value, 1.0, epsilon = 1e-8);
        assert_relative_eq!(sol.tilt[0], 1.0, epsilon = 1e-8);
    }

    #[test]
    fn vertex_mpp_certificate() {
        let m = bm_fixture();
        let target = OrthantTarget::new(dvector![1.0, 1.0]).unwrap();
        let mpp = orthant_mpp(&m, &target, 1.0, &tol()).unwrap();
        assert!(mpp.vertex_is_mpp);
        assert_relative_eq!(mpp.point, dvector![1.0, 1.0], epsilon = 1e-12);
        assert_relative_eq!(mpp.normal, dvector![2.0, 2.0], epsilon = 1e-9);
    }

    #[test]
    fn non_vertex_mpp_on_face() {
        // λ(g) = Σ⁻¹(g − μ) has a negative first component; the minimizer sits
        // on the face x₂ = 4 with λ = (0, 5), x = (3.5, 4).
        let m = correlated_gaussian();
        let target = OrthantTarget::new(dvector![1.0, 4.0]).unwrap();
        let mpp = orthant_mpp(&m, &target, 1.0, &tol()).unwrap();
        assert!(!mpp.vertex_is_mpp);
        assert_relative_eq!(mpp.point, dvector![3.5, 4.0], epsilon = 1e-6);
        assert_relative_eq!(mpp.normal, dvector![0.0, 5.0], epsilon = 1e-6);
    }

    #[test]
    fn independent_gaussian_always_vertex() {
        let m = LevyModel::gaussian(dvector![-0.5, -2.0], dmatrix![0.5, 0.0; 0.0, 2.0]).unwrap();
        for g in [dvector![0.2, 3.0], dvector![5.0, 0.1], dvector![1.0, 1.0]] {
            let target = OrthantTarget::new(g).unwrap();
            let mpp = orthant_mpp(&m, &target, 1.0, &tol()).unwrap();
            assert!(mpp.vertex_is_mpp);
        }
    }

    #[test]
    fn most_probable_scale_bm() {
        let m = bm_fixture();
        let t1 = OrthantTarget::new(dvector![1.0, 1.0]).unwrap();
        let r1 = most_probable_scale(&m, &t1, &tol()).unwrap();
        assert_relative_eq!(r1, 1.0, epsilon = 1e-9);
        // r_G·g is invariant under rescaling g along its ray.
        let t2 = OrthantTarget::new(dvector![2.0, 2.0]).unwrap();
        let r2 = most_probable_scale(&m, &t2, &tol()).unwrap();
        assert_relative_eq!(r2, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn most_probable_scale_cl1() {
        let m = cl1_oracle();
        let target = OrthantTarget::new(dvector![1.0]).unwrap();
        let r = most_probable_scale(&m, &target, &tol()).unwrap();
        assert_relative_eq!(r, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn scale_root_residual_is_tight() {
        let m = bm_fixture();
        let target = OrthantTarget::new(dvector![1.5, 0.7]).unwrap();
        let r = most_probable_scale(&m, &target, &tol()).unwrap();
        let sol = legendre(&m, &(target.vertex() * r), &tol()).unwrap();
        assert!(m.cumulant(&sol.conjugate).abs() <= 1e-10);
    }

    #[test]
    fn golden_section_cross_check() {
        // The root form of r_G must agree with direct minimization of
        // (1/r)·Λ(r·g) by golden-section search.
        let m = bm_fixture();
        let target = OrthantTarget::new(dvector![1.0, 2.0]).unwrap();
        let r_root = most_probable_scale(&m, &target, &tol()).unwrap();

        let obj = |r: f64| legendre(&m, &(target.vertex() * r), &tol()).unwrap().lambda_value / r;
        let (mut a, mut b) = (1e-3, 1e3);
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let (mut c, mut d) = (b - phi * (b - a), a + phi * (b - a));
        for _ in 0..120 {
            if obj(c) < obj(d) {
                b = d;
            } else {
                a = c;
            }
            c = b - phi * (b - a);
            d = a + phi * (b - a);
        }
        let r_golden = 0.5 * (a + b);
        assert_relative_eq!(r_root, r_golden, max_relative = 1e-6);
    }

    #[test]
    fn normal_at_matches_conjugate() {
        let m = bm_fixture();
        let target = OrthantTarget::new(dvector![1.0, 1.0]).unwrap();
        let n = normal_at(&m, &target, 1.0, &tol()).unwrap();
        assert_relative_eq!(n, dvector![2.0, 2.0], epsilon = 1e-9);

        let m1 = cl1_oracle();
        let t1 = OrthantTarget::new(dvector![1.0]).unwrap();
        let n1 = normal_at(&m1, &t1, 1.0, &tol()).unwrap();
        assert_relative_eq!(n1[0], 1.0, epsilon = 1e-8);
    }

    #[test]
    fn normal_at_rejects_face_mpp() {
        let m = correlated_gaussian();
        let target = OrthantTarget::new(dvector![1.0, 4.0]).unwrap();
        assert!(matches!(
            normal_at(&m, &target, 1.0, &tol()),
            Err(Error::VertexNotMpp { .. })
        ));
    }

    #[test]
    fn normal_is_gradient_of_rate_function() {
        // grad Λ(α) = λ(α): finite differences of Λ around r·g.
        let m = bm_fixture();
        let target = OrthantTarget::new(dvector![1.0, 1.0]).unwrap();
        let n = normal_at(&m, &target, 1.0, &tol()).unwrap();
        let h = 1e-6;
        for i in 0..2 {
            let mut up = target.vertex().clone();
            let mut dn = target.vertex().clone();
            up[i] += h;
            dn[i] -= h;
            let fd = (legendre(&m, &up, &tol()).unwrap().lambda_value
                - legendre(&m, &dn, &tol()).unwrap().lambda_value)
                / (2.0 * h);
            assert_relative_eq!(fd, n[i], max_relative = 1e-5);
        }
    }

    #[test]
    fn no_root_when_hitting_is_not_rare() {
        // Zero drift: K(λ(t·g)) = ½t²|g|² stays positive on the whole bracket.
        let m = LevyModel::gaussian(dvector![0.0, 0.0], DMatrix::identity(2, 2)).unwrap();
        let target = OrthantTarget::new(dvector![1.0, 1.0]).unwrap();
        assert!(matches!(
            most_probable_scale(&m, &target, &tol()),
            Err(Error::NoRoot { .. })
        ));

        // Drift pointing at the vertex: the root sits at the mean, where the
        // conjugate tilt is zero and the vertex certificate fails.
        let m2 = LevyModel::gaussian(dvector![1.0, 1.0], DMatrix::identity(2, 2)).unwrap();
        assert!(matches!(
            most_probable_scale(&m2, &target, &tol()),
            Err(Error::VertexNotMpp { .. })
        ));
    }

    #[test]
    fn orthant_target_validation() {
        assert!(OrthantTarget::new(dvector![1.0, -1.0]).is_err());
        assert!(OrthantTarget::new(dvector![1.0, 0.0]).is_err());
        assert!(OrthantTarget::new(dvector![0.5, 2.0]).is_ok());
    }
}
