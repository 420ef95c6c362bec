//! Monte-Carlo estimation of the overlap constants for the close-pair
//! indicator, compared against their closed forms, plus the induced
//! component weights at a few density limits.

use dynpoint::functional::InteractionFunctional;
use dynpoint::moments::{GammaLimit, LimitConstants};

fn main() {
    let delta = 0.25;
    let fnl = InteractionFunctional::pair_indicator(delta).unwrap();
    let c = LimitConstants::estimate(&fnl, 1, 1_000_000, 42).unwrap();

    // closed forms in d = 1: kappa_tilde_1 = (2 delta)^2, kappa_tilde_2 = 2 delta
    let exact = [4.0 * delta * delta, 2.0 * delta];
    println!("alpha_unit = {:.6}   (exact {})", c.alpha_unit, 2.0 * delta);
    for j in 1..=2 {
        println!(
            "kappa_tilde_{j} = {:.6}   (exact {})",
            c.kappa_tilde[j - 1],
            exact[j - 1]
        );
    }

    for gamma in [0.2, 1.0, 5.0] {
        let lambda = c.lambda(&GammaLimit::Finite(gamma)).unwrap();
        println!("gamma = {gamma}: lambda = {lambda:?}");
    }
    let lambda = c.lambda(&GammaLimit::Infinity).unwrap();
    println!("gamma = inf: lambda = {lambda:?}");
}
