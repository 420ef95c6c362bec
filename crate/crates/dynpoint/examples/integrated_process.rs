//! Integrated normalized process in the fast regime: the covariance of
//! `I(t) = int_0^t f_bar(s) ds` approaches `min(t1, t2)`, the signature of a
//! Brownian limit. Pass a replicate count to trade accuracy for time.

use dynpoint::estimator::{integrated_cov, simulate_batch, Normalization, SimulatorKind};
use dynpoint::functional::InteractionFunctional;
use dynpoint::process::SimParams;

fn main() {
    let replicates: usize = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("replicate count"))
        .unwrap_or(500);
    let n = 1e4;
    let params = SimParams {
        n,
        t_horizon: 1.0,
        sigma: n.powf(-0.5),
        d: 3,
        k: 2,
        seed: 7,
    };
    let fnl = InteractionFunctional::pair_indicator(0.25).unwrap();
    let r = n.powf(-0.55);
    let grid: Vec<f64> = (0..=200).map(|i| 0.005 * i as f64).collect();
    println!("simulating {replicates} replicates at n = {n}, d = 3 ...");
    let batch = simulate_batch(&params, &fnl, r, &grid, replicates, SimulatorKind::Marked)
        .expect("simulation");
    for (t1, t2) in [(0.25, 0.75), (0.5, 1.0), (0.5, 0.5)] {
        let est = integrated_cov(&batch, t1, t2, &Normalization::Empirical).expect("estimate");
        println!(
            "cov(I({t1}), I({t2})) = {:.4} +- {:.4}   (Brownian limit: {})",
            est.value,
            est.stderr,
            t1.min(t2)
        );
    }
}
