//! Counting identity for Poisson configurations: exhaustive enumeration
//! over simulated realizations (left) versus the closed-form expectation
//! with its inner integral estimated by Monte Carlo (right).

use dynpoint::mecke::{mecke_check, IntersectionPattern};
use dynpoint::torus::{distance, TorusPoint};

fn main() {
    let battery: Vec<(&str, IntersectionPattern, f64)> = vec![
        ("ordered pairs", IntersectionPattern::new(1, &[(&[0], 2)]).unwrap(), 5.0),
        ("ordered triples", IntersectionPattern::new(1, &[(&[0], 3)]).unwrap(), 4.0),
        (
            "one shared point",
            IntersectionPattern::new(2, &[(&[0], 1), (&[1], 1), (&[0, 1], 1)]).unwrap(),
            4.0,
        ),
    ];
    for (name, pattern, n) in &battery {
        let (lhs, rhs) = mecke_check(&|_| 1.0, pattern, *n, 1, 2000, 10, 7).unwrap();
        println!(
            "{name:16} lhs {:.3} +- {:.3}   rhs {:.3} +- {:.3}",
            lhs.value, lhs.stderr, rhs.value, rhs.stderr
        );
    }

    // nonconstant h: indicator that the two points are close
    let pattern = IntersectionPattern::new(1, &[(&[0], 2)]).unwrap();
    let h = |sets: &[Vec<TorusPoint>]| {
        if distance(&sets[0][0], &sets[0][1]).unwrap() <= 0.1 { 1.0 } else { 0.0 }
    };
    let (lhs, rhs) = mecke_check(&h, &pattern, 5.0, 1, 4000, 20_000, 8).unwrap();
    println!(
        "{:16} lhs {:.3} +- {:.3}   rhs {:.3} +- {:.3}",
        "close pairs", lhs.value, lhs.stderr, rhs.value, rhs.stderr
    );
}
