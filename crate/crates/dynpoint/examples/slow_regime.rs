//! Slow regime: with negligible motion the normalized covariance of the
//! pair-count process matches a superposition of exponentials with weights
//! set by the overlap constants.

use dynpoint::estimator::{normalized_covariance, simulate_batch, Normalization, SimulatorKind};
use dynpoint::functional::InteractionFunctional;
use dynpoint::limits::slow_limit_cov;
use dynpoint::moments::{GammaLimit, LimitConstants};
use dynpoint::process::SimParams;

fn main() {
    let fnl = InteractionFunctional::pair_indicator(0.25).unwrap();
    let params = SimParams {
        n: 1000.0,
        t_horizon: 2.5,
        sigma: 0.0,
        d: 1,
        k: 2,
        seed: 11,
    };
    let grid: Vec<f64> = (0..=10).map(|i| 0.25 * i as f64).collect();
    let batch = simulate_batch(&params, &fnl, 1e-3, &grid, 1500, SimulatorKind::Marked).unwrap();

    // n r^d = 1, so both overlap components contribute
    let c = LimitConstants::from_values(2, 1, 0.25, 0.5, vec![0.25, 0.5]).unwrap();
    let lambda = c.lambda(&GammaLimit::Finite(1.0)).unwrap();

    let covs =
        normalized_covariance(&batch, &[0.25, 0.5, 1.0, 2.0], &Normalization::Empirical).unwrap();
    println!("  lag   empirical        limit");
    for cov in &covs {
        println!(
            "{:5.2}   {:.4} +- {:.4}   {:.4}",
            cov.lag,
            cov.value,
            cov.stderr,
            slow_limit_cov(&lambda, cov.lag).unwrap()
        );
    }
}
