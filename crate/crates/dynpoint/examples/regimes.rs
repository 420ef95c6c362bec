//! Regime classification from the scaling laws of the interaction radius
//! and the diffusion coefficient, with the asymptotic conditions that the
//! matching limit theorem requires.

use dynpoint::limits::{classify_regime, RegimeSpec, ScalingLaw};

fn main() {
    let r = ScalingLaw { coeff: 1.0, exponent: 0.55 };
    let cases = [
        ("sigma = n^-1.2", ScalingLaw { coeff: 1.0, exponent: 1.2 }),
        ("sigma = n^-0.55", ScalingLaw { coeff: 1.0, exponent: 0.55 }),
        ("sigma = n^-0.5", ScalingLaw { coeff: 1.0, exponent: 0.5 }),
    ];
    for (name, sigma) in cases {
        let spec = RegimeSpec { d: 3, k: 2, r, sigma };
        let report = classify_regime(&spec).unwrap();
        println!("{name}: {:?} (gamma: {:?}, valid: {})", report.regime, report.gamma, report.valid);
        for c in &report.conditions {
            println!("    [{}] {}", if c.holds { "ok" } else { "--" }, c.name);
        }
    }
}
