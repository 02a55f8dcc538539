//! Statistical behaviour of the samplers and estimators: law-of-large-numbers
//! checks against analytic moments, the classical ruin closed form, estimator
//! cross-consistency and δ-refinement behaviour.
//!
//! Every test runs with a fixed master seed, so outcomes are reproducible;
//! tolerances are set from the estimators' own standard errors.

use approx::assert_relative_eq;
use nalgebra::{dvector, DMatrix, DVector};

use levy_orthant::rates::{OrthantTarget, ToleranceProfile};
use levy_orthant::sim::{
    chunk_rng, plan_tilt, simulate_hitting_crude, simulate_hitting_is,
    simulate_hitting_is_detailed, simulate_hitting_is_with_plan, IncrementSampler, SimConfig,
    TiltPlan,
};
use levy_orthant::{JumpLaw, LevyModel};

fn tol() -> ToleranceProfile {
    ToleranceProfile::default()
}

fn bm_fixture() -> LevyModel {
    LevyModel::gaussian(dvector![-1.0, -1.0], DMatrix::identity(2, 2)).unwrap()
}

fn cl_fixture() -> LevyModel {
    LevyModel::with_jumps(
        dvector![-1.0, -1.0],
        DMatrix::zeros(2, 2),
        1.0,
        JumpLaw::ScalarExponentialAlong {
            direction: dvector![1.0, 1.0],
            rate: 3.0,
        },
    )
    .unwrap()
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

/// Classical closed form for the d=1 reserve fixture: ψ(u) = ½·e^{−u}.
fn psi(u: f64) -> f64 {
    0.5 * (-u).exp()
}

fn overlap(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 <= b.1 && b.0 <= a.1
}

#[test]
fn increment_sample_mean_obeys_lln() {
    let m = bm_fixture();
    let sampler = IncrementSampler::new(&m, 1.0).unwrap();
    let mut rng = chunk_rng(2024, 0);
    let n = 1_000_000usize;
    let mut sum = DVector::zeros(2);
    for _ in 0..n {
        sum += sampler.sample(&mut rng);
    }
    let mean = sum / n as f64;
    // Component std dev is 1 at δ = 1: the mean must land within 4σ/√n.
    let bound = 4.0 / (n as f64).sqrt();
    assert!((mean[0] - (-1.0)).abs() <= bound, "mean {mean}");
    assert!((mean[1] - (-1.0)).abs() <= bound, "mean {mean}");
}

#[test]
fn increment_sample_covariance_matches_cumulant_hessian() {
    // Var X(1) = Hess K(0) = intensity·E[C²]·ccᵀ = (2/9)·ccᵀ for the reserve
    // fixture.
    let m = cl_fixture();
    let sampler = IncrementSampler::new(&m, 1.0).unwrap();
    let mut rng = chunk_rng(77, 0);
    let n = 1_000_000usize;
    let mut sum = DVector::zeros(2);
    let mut sum_outer = DMatrix::zeros(2, 2);
    let mut sum_sq4 = 0.0f64; // fourth moment of the first coordinate, for the se
    for _ in 0..n {
        let x = sampler.sample(&mut rng);
        sum += &x;
        sum_outer += &x * x.transpose();
        let c = x[0] + 1.0;
        sum_sq4 += c * c * c * c;
    }
    let nf = n as f64;
    let mean = sum / nf;
    let cov = sum_outer / nf - &mean * mean.transpose();
    let expected = 2.0 / 9.0;
    // se(sample variance) ≈ sqrt((μ₄ − σ⁴)/n).
    let mu4 = sum_sq4 / nf;
    let se = ((mu4 - expected * expected) / nf).sqrt();
    for i in 0..2 {
        for j in 0..2 {
            assert!(
                (cov[(i, j)] - expected).abs() <= 5.0 * se,
                "cov[{i}{j}] = {} vs {expected} (5σ = {})",
                cov[(i, j)],
                5.0 * se
            );
        }
    }
}

#[test]
fn monte_carlo_cross_checks_cumulant() {
    // ln E e^{⟨λ, X(1)⟩} estimated by simulation must agree with the analytic
    // K(λ) at a λ where the estimator has finite variance (2λ inside the
    // domain).
    let m = cl_fixture();
    let lam = dvector![0.5, 0.25];
    let expected = m.cumulant(&lam);
    assert_relative_eq!(expected, -0.75 + 1.0 / 3.0, epsilon = 1e-12);
    assert!(m.in_domain(&(2.0 * &lam)).inside);

    let sampler = IncrementSampler::new(&m, 1.0).unwrap();
    let mut rng = chunk_rng(5150, 0);
    let n = 500_000usize;
    let (mut s1, mut s2) = (0.0f64, 0.0f64);
    for _ in 0..n {
        let w = sampler.sample(&mut rng).dot(&lam).exp();
        s1 += w;
        s2 += w * w;
    }
    let nf = n as f64;
    let mean = s1 / nf;
    let se = ((s2 / nf - mean * mean) / nf).sqrt();
    let k_mc = mean.ln();
    // Delta method: se(ln mean) ≈ se/mean.
    assert!(
        (k_mc - expected).abs() <= 5.0 * se / mean,
        "K_mc = {k_mc}, expected {expected}, 5σ = {}",
        5.0 * se / mean
    );
}

#[test]
fn crude_estimate_matches_classical_ruin() {
    let m = cl1_oracle();
    let target = OrthantTarget::new(dvector![1.0]).unwrap();
    let cfg = SimConfig {
        delta: 0.5,
        horizon: 200.0,
        n_paths: 100_000,
        master_seed: 11,
        chunk_size: 2048,
    };
    let est = simulate_hitting_crude(&m, &target, 1.0, &cfg).unwrap();
    let truth = psi(1.0);
    assert!(
        est.ci95.0 <= truth && truth <= est.ci95.1,
        "ψ(1) = {truth} outside CI {:?} (p_hat {})",
        est.ci95,
        est.p_hat
    );
    assert!(est.truncation_bias_flag);
}

#[test]
fn importance_estimate_matches_classical_ruin() {
    let m = cl1_oracle();
    let target = OrthantTarget::new(dvector![1.0]).unwrap();
    let cfg = SimConfig {
        delta: 0.5,
        horizon: 50.0,
        n_paths: 100_000,
        master_seed: 13,
        chunk_size: 2048,
    };
    let est = simulate_hitting_is(&m, &target, 5.0, &cfg, &tol()).unwrap();
    let truth = psi(5.0);
    let rel = (est.p_hat - truth).abs() / truth;
    assert!(rel <= 0.02, "relative error {rel} (p_hat {}, ψ(5) {truth})", est.p_hat);
    assert!(!est.truncation_bias_flag);
}

#[test]
fn crude_and_importance_intervals_overlap() {
    // Brownian fixture at s = 1.
    let m = bm_fixture();
    let target = OrthantTarget::new(dvector![1.0, 1.0]).unwrap();
    let cfg = SimConfig {
        delta: 0.1,
        horizon: 20.0,
        n_paths: 100_000,
        master_seed: 21,
        chunk_size: 2048,
    };
    let crude = simulate_hitting_crude(&m, &target, 1.0, &cfg).unwrap();
    let is = simulate_hitting_is(
        &m,
        &target,
        1.0,
        &SimConfig { master_seed: 22, ..cfg },
        &tol(),
    )
    .unwrap();
    assert!(crude.p_hat >= 1e-4, "crude infeasible at this scale");
    assert!(
        overlap(crude.ci95, is.ci95),
        "crude {:?} vs importance {:?}",
        crude.ci95,
        is.ci95
    );

    // Reserve fixture at u = 1.
    let m1 = cl1_oracle();
    let t1 = OrthantTarget::new(dvector![1.0]).unwrap();
    let cfg1 = SimConfig {
        delta: 0.5,
        horizon: 200.0,
        n_paths: 100_000,
        master_seed: 23,
        chunk_size: 2048,
    };
    let crude1 = simulate_hitting_crude(&m1, &t1, 1.0, &cfg1).unwrap();
    let is1 = simulate_hitting_is(
        &m1,
        &t1,
        1.0,
        &SimConfig { master_seed: 24, ..cfg1 },
        &tol(),
    )
    .unwrap();
    assert!(overlap(crude1.ci95, is1.ci95), "crude {:?} vs importance {:?}", crude1.ci95, is1.ci95);
}

#[test]
fn skeleton_refinement_is_monotone_for_brownian_models() {
    // The skeleton can only miss excursions: finer grids detect at least as
    // many hits, up to Monte Carlo noise (2 joint standard errors).
    let m = bm_fixture();
    let target = OrthantTarget::new(dvector![1.0, 1.0]).unwrap();
    let base = SimConfig {
        delta: 0.2,
        horizon: 20.0,
        n_paths: 60_000,
        master_seed: 31,
        chunk_size: 2048,
    };
    let mut prev: Option<levy_orthant::HitEstimate> = None;
    for delta in [0.2, 0.1, 0.05] {
        let est = simulate_hitting_crude(&m, &target, 1.0, &SimConfig { delta, ..base }).unwrap();
        if let Some(p) = &prev {
            let joint = (p.std_err.powi(2) + est.std_err.powi(2)).sqrt();
            assert!(
                est.p_hat >= p.p_hat - 2.0 * joint,
                "p_hat fell from {} (δ={}) to {} (δ={})",
                p.p_hat,
                p.delta,
                est.p_hat,
                est.delta
            );
        }
        prev = Some(est);
    }
}

#[test]
fn jump_epoch_detection_makes_reserve_hits_exact() {
    // Between jumps the reserve fixture moves down both coordinates, so entry
    // happens only at jump epochs and δ-refinement changes nothing beyond
    // noise.
    let m = cl1_oracle();
    let target = OrthantTarget::new(dvector![1.0]).unwrap();
    let base = SimConfig {
        delta: 0.5,
        horizon: 150.0,
        n_paths: 80_000,
        master_seed: 41,
        chunk_size: 2048,
    };
    let coarse = simulate_hitting_crude(&m, &target, 1.0, &base).unwrap();
    let fine =
        simulate_hitting_crude(&m, &target, 1.0, &SimConfig { delta: 0.25, ..base }).unwrap();
    let joint = (coarse.std_err.powi(2) + fine.std_err.powi(2)).sqrt();
    assert!(
        (coarse.p_hat - fine.p_hat).abs() <= 2.0 * joint,
        "coarse {} vs fine {} (2σ = {})",
        coarse.p_hat,
        fine.p_hat,
        2.0 * joint
    );
}

#[test]
fn importance_ratio_plateaus_in_s() {
    // p̂(s)·s^{1/2}·e^{s·D(G)} approaches the constant A₀: consecutive ratios
    // agree within 10% on the Brownian fixture.
    let m = bm_fixture();
    let target = OrthantTarget::new(dvector![1.0, 1.0]).unwrap();
    let cfg = SimConfig {
        delta: 0.1,
        horizon: 10.0,
        n_paths: 1_000_000,
        master_seed: 51,
        chunk_size: 4096,
    };
    let mut ratios = Vec::new();
    for s in [2.0, 3.0, 4.0] {
        let est = simulate_hitting_is(&m, &target, s, &cfg, &tol()).unwrap();
        ratios.push(est.p_hat * s.sqrt() * (4.0 * s).exp());
    }
    for w in ratios.windows(2) {
        let rel = (w[1] - w[0]).abs() / w[0];
        assert!(rel <= 0.10, "ratio moved by {rel}: {ratios:?}");
    }
}

#[test]
fn importance_cap_has_negligible_bias() {
    // Widening the step cap tenfold (by shrinking the plan's r_G) must not
    // move the estimate beyond noise: essentially no mass is discarded.
    let m = cl1_oracle();
    let target = OrthantTarget::new(dvector![1.0]).unwrap();
    let cfg = SimConfig {
        delta: 0.5,
        horizon: 50.0,
        n_paths: 100_000,
        master_seed: 61,
        chunk_size: 2048,
    };
    let plan = plan_tilt(&m, &target, &tol()).unwrap();
    let wide = TiltPlan {
        tilt: plan.tilt.clone(),
        r_g: plan.r_g / 10.0,
        d_of_g: plan.d_of_g,
    };
    let (a, _) = simulate_hitting_is_with_plan(&m, &target, 3.0, &cfg, &plan).unwrap();
    let (b, _) = simulate_hitting_is_with_plan(&m, &target, 3.0, &cfg, &wide).unwrap();
    let joint = (a.std_err.powi(2) + b.std_err.powi(2)).sqrt();
    assert!(
        (a.p_hat - b.p_hat).abs() <= 2.0 * joint,
        "cap sensitivity: {} vs {} (2σ = {})",
        a.p_hat,
        b.p_hat,
        2.0 * joint
    );
}

#[test]
fn fit_constant_is_stable_under_skeleton_refinement() {
    // On the reserve oracle hit detection is exact at jump epochs, so the
    // fitted constant must not move with the skeleton step beyond its own
    // confidence interval (the classical value is 0.5).
    let m = cl1_oracle();
    let target = OrthantTarget::new(dvector![1.0]).unwrap();
    let rep = levy_orthant::check_conditions(&m, &target, &tol());
    let d_of_g = rep.d_of_g.unwrap();
    let fit_at = |delta: f64| {
        let records: Vec<levy_orthant::HitEstimate> = [2.0, 4.0, 6.0]
            .iter()
            .enumerate()
            .map(|(i, &u)| {
                let cfg = SimConfig {
                    delta,
                    horizon: 50.0,
                    n_paths: 50_000,
                    master_seed: 900 + i as u64,
                    chunk_size: 2048,
                };
                simulate_hitting_is(&m, &target, u, &cfg, &tol()).unwrap()
            })
            .collect();
        levy_orthant::fit_a0(&records, d_of_g, 1).unwrap()
    };
    let coarse = fit_at(0.5);
    let fine = fit_at(0.25);
    assert!(
        coarse.a0_ci95.0 <= fine.a0_hat && fine.a0_hat <= coarse.a0_ci95.1,
        "a0 moved from {:?} to {} under refinement",
        coarse.a0_ci95,
        fine.a0_hat
    );
    assert!(coarse.a0_ci95.0 <= 0.5 && 0.5 <= coarse.a0_ci95.1);
}

#[test]
fn importance_weights_never_exceed_the_exponential_bound() {
    let m = cl1_oracle();
    let target = OrthantTarget::new(dvector![1.0]).unwrap();
    let cfg = SimConfig {
        delta: 0.5,
        horizon: 50.0,
        n_paths: 50_000,
        master_seed: 71,
        chunk_size: 1024,
    };
    for u in [1.0, 2.0, 5.0] {
        let (est, records) = simulate_hitting_is_detailed(&m, &target, u, &cfg, &tol()).unwrap();
        let bound = (-u).exp(); // D(G) = 1 for the d=1 oracle
        for r in &records {
            assert!(r.max_weight <= bound, "weight {} > e^{{-u}} = {bound}", r.max_weight);
        }
        assert!(est.p_hat <= bound);
        assert!(est.ci95.0 <= est.p_hat && est.p_hat <= est.ci95.1);
    }
}
