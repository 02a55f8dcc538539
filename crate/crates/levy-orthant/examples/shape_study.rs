//! Scans the normalized ratio R(s) = p̂(s)·s^{(d−1)/2}·e^{s·D(G)} on the
//! Brownian reference model over a grid of scales and skeleton steps.
//! A flat profile in s is the signature of the predicted decay shape; the
//! drift of the plateau with δ shows the skeleton detection bias.
//!
//! Run with `cargo run --release -p levy-orthant --example shape_study`.

use nalgebra::{dvector, DMatrix};

use levy_orthant::rates::{OrthantTarget, ToleranceProfile};
use levy_orthant::sim::{plan_tilt, simulate_hitting_is_with_plan, SimConfig};
use levy_orthant::LevyModel;

fn main() {
    let model = LevyModel::gaussian(dvector![-1.0, -1.0], DMatrix::identity(2, 2)).unwrap();
    let target = OrthantTarget::new(dvector![1.0, 1.0]).unwrap();
    let tol = ToleranceProfile::default();
    let plan = plan_tilt(&model, &target, &tol).unwrap();
    println!(
        "tilt = {:?}, r_g = {:.6}, d_of_g = {:.6}",
        plan.tilt.as_slice(),
        plan.r_g,
        plan.d_of_g
    );

    let n_paths: u64 = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(1_000_000);

    for delta in [0.2, 0.1, 0.05, 0.025] {
        println!("delta = {delta}");
        for s in [1.0, 2.0, 3.0, 4.0] {
            let cfg = SimConfig {
                delta,
                horizon: 10.0,
                n_paths,
                master_seed: 20_240_817,
                chunk_size: 4096,
            };
            let (est, _) =
                simulate_hitting_is_with_plan(&model, &target, s, &cfg, &plan).unwrap();
            let norm = s.sqrt() * (plan.d_of_g * s).exp();
            println!(
                "  s = {s}: p_hat = {:.6e} (rel se {:.4})  R(s) = {:.5} ± {:.5}",
                est.p_hat,
                est.std_err / est.p_hat,
                est.p_hat * norm,
                est.std_err * norm
            );
        }
    }
}
