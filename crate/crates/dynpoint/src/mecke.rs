//! Brute-force verification of the generalized Mecke counting identity.
//!
//! An intersection pattern prescribes, for every nonempty `J` of `[ell]`,
//! exactly how many points lie in all sets indexed by `J` and in no other.
//! For a Poisson process of intensity `n` times a probability measure, the
//! expected sum of a bounded `h` over all tuples of subsets obeying the
//! pattern equals `n^{|I|} E[h(Psi(X))] / prod_J I_J!`, where `X` is a tuple
//! of `|I|` iid points and `Psi` a fixed splitting convention.
//!
//! The left side is evaluated by exhaustive enumeration over simulated
//! realizations: tuples obeying the pattern correspond one-to-one to
//! families of disjoint blocks `A_J` of sizes `I_J`, with
//! `X_i = union of A_J over J containing i`.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::moments::MomentEstimate;
use crate::rng::stream_rng;
use crate::torus::{project, TorusPoint};

/// Exact overlap counts `I_J` for every nonempty subset `J` of the `ell`
/// set indices, stored by bitmask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntersectionPattern {
    ell: usize,
    counts: Vec<usize>,
}

impl IntersectionPattern {
    /// Build from `(J, count)` assignments with 0-based set indices;
    /// unlisted regions get count 0.
    pub fn new(ell: usize, assignments: &[(&[usize], usize)]) -> Result<Self> {
        if ell == 0 || ell > 4 {
            return Err(Error::invalid("ell", "supported range is 1..=4"));
        }
        let mut counts = vec![0usize; 1 << ell];
        for (j, c) in assignments {
            if j.is_empty() {
                return Err(Error::invalid("pattern", "J must be nonempty"));
            }
            let mut mask = 0usize;
            for &i in *j {
                if i >= ell {
                    return Err(Error::invalid("pattern", format!("set index {i} out of range")));
                }
                mask |= 1 << i;
            }
            if counts[mask] != 0 {
                return Err(Error::invalid("pattern", "duplicate region"));
            }
            counts[mask] = *c;
        }
        Ok(IntersectionPattern { ell, counts })
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    /// `|I|`: the number of distinct points across all sets.
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Size of the i-th set under the pattern.
    pub fn set_size(&self, i: usize) -> usize {
        (1..self.counts.len())
            .filter(|mask| mask & (1 << i) != 0)
            .map(|mask| self.counts[mask])
            .sum()
    }

    /// `prod_J I_J!`.
    fn block_factorials(&self) -> f64 {
        self.counts
            .iter()
            .skip(1)
            .map(|&c| (1..=c).map(|x| x as f64).product::<f64>())
            .product()
    }

    /// The fixed splitting: walk regions in bitmask order, consuming
    /// `I_J` points each, and place them in every set indexed by `J`.
    pub fn split(&self, points: &[TorusPoint]) -> Result<Vec<Vec<TorusPoint>>> {
        if points.len() != self.total() {
            return Err(Error::invalid("points", "length must equal the pattern total"));
        }
        let mut sets = vec![Vec::new(); self.ell];
        let mut next = 0;
        for mask in 1..self.counts.len() {
            for _ in 0..self.counts[mask] {
                for (i, set) in sets.iter_mut().enumerate() {
                    if mask & (1 << i) != 0 {
                        set.push(points[next].clone());
                    }
                }
                next += 1;
            }
        }
        Ok(sets)
    }
}

/// A bounded function of `ell` point sets.
pub type SetFunction = dyn Fn(&[Vec<TorusPoint>]) -> f64 + Sync;

fn uniform_point(rng: &mut impl Rng, d: usize) -> TorusPoint {
    let coords: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.5..0.5)).collect();
    project(&coords).expect("finite coords")
}

/// Sum of `h` over all tuples of subsets of `points` obeying the pattern,
/// by recursion over disjoint block choices.
fn enumerate_pattern_sum(
    pattern: &IntersectionPattern,
    points: &[TorusPoint],
    h: &SetFunction,
) -> f64 {
    let regions: Vec<(usize, usize)> = (1..pattern.counts.len())
        .filter(|&m| pattern.counts[m] > 0)
        .map(|m| (m, pattern.counts[m]))
        .collect();
    let mut used = vec![false; points.len()];
    let mut blocks: Vec<Vec<usize>> = vec![Vec::new(); regions.len()];
    let mut total = 0.0;

    fn rec(
        pattern: &IntersectionPattern,
        points: &[TorusPoint],
        h: &SetFunction,
        regions: &[(usize, usize)],
        used: &mut Vec<bool>,
        blocks: &mut Vec<Vec<usize>>,
        region_ix: usize,
        total: &mut f64,
    ) {
        if region_ix == regions.len() {
            let mut sets: Vec<Vec<TorusPoint>> = vec![Vec::new(); pattern.ell];
            for (b, &(mask, _)) in blocks.iter().zip(regions) {
                for &p in b {
                    for (i, set) in sets.iter_mut().enumerate() {
                        if mask & (1 << i) != 0 {
                            set.push(points[p].clone());
                        }
                    }
                }
            }
            *total += h(&sets);
            return;
        }
        let want = regions[region_ix].1;
        // choose an ascending combination of `want` unused points
        fn choose(
            pattern: &IntersectionPattern,
            points: &[TorusPoint],
            h: &SetFunction,
            regions: &[(usize, usize)],
            used: &mut Vec<bool>,
            blocks: &mut Vec<Vec<usize>>,
            region_ix: usize,
            start: usize,
            left: usize,
            total: &mut f64,
        ) {
            if left == 0 {
                rec(pattern, points, h, regions, used, blocks, region_ix + 1, total);
                return;
            }
            for p in start..points.len() {
                if points.len() - p < left || used[p] {
                    continue;
                }
                used[p] = true;
                blocks[region_ix].push(p);
                choose(pattern, points, h, regions, used, blocks, region_ix, p + 1, left - 1, total);
                blocks[region_ix].pop();
                used[p] = false;
            }
        }
        choose(pattern, points, h, regions, used, blocks, region_ix, 0, want, total);
    }

    rec(pattern, points, h, &regions, &mut used, &mut blocks, 0, &mut total);
    total
}

/// Monte-Carlo check of the counting identity: the enumerated left side
/// over simulated Poisson realizations versus the closed-form right side
/// (its inner expectation itself estimated by Monte Carlo).
pub fn mecke_check(
    h: &SetFunction,
    pattern: &IntersectionPattern,
    n: f64,
    d: usize,
    reps: u64,
    inner_samples: u64,
    seed: u64,
) -> Result<(MomentEstimate, MomentEstimate)> {
    if !(n > 0.0) || d == 0 {
        return Err(Error::invalid("n", "need n > 0 and d >= 1"));
    }
    if pattern.total() > 6 || n > 20.0 {
        return Err(Error::Unsupported(
            "brute-force enumeration limited to |I| <= 6 and n <= 20".into(),
        ));
    }
    if reps < 2 || inner_samples < 2 {
        return Err(Error::InsufficientReplicates { need: 2, got: reps.min(inner_samples) as usize });
    }

    // left side: exhaustive enumeration per realization
    let mut rng = stream_rng(seed, 0);
    let poisson = Poisson::new(n).map_err(|e| Error::invalid("n", e.to_string()))?;
    let (mut sum, mut sumsq) = (0.0, 0.0);
    for _ in 0..reps {
        let count = poisson.sample(&mut rng) as usize;
        let points: Vec<TorusPoint> = (0..count).map(|_| uniform_point(&mut rng, d)).collect();
        let v = enumerate_pattern_sum(pattern, &points, h);
        sum += v;
        sumsq += v * v;
    }
    let rf = reps as f64;
    let lhs_mean = sum / rf;
    let lhs_var = (sumsq / rf - lhs_mean * lhs_mean).max(0.0);
    let lhs = MomentEstimate {
        value: lhs_mean,
        stderr: (lhs_var / rf).sqrt(),
        samples: reps,
    };

    // right side: n^{|I|} E[h(Psi(X))] / prod I_J!
    let mut rng = stream_rng(seed, 1);
    let total = pattern.total();
    let scale = n.powi(total as i32) / pattern.block_factorials();
    let (mut sum, mut sumsq) = (0.0, 0.0);
    for _ in 0..inner_samples {
        let xs: Vec<TorusPoint> = (0..total).map(|_| uniform_point(&mut rng, d)).collect();
        let v = h(&pattern.split(&xs)?);
        sum += v;
        sumsq += v * v;
    }
    let sf = inner_samples as f64;
    let rhs_mean = sum / sf;
    let rhs_var = (sumsq / sf - rhs_mean * rhs_mean).max(0.0);
    let rhs = MomentEstimate {
        value: scale * rhs_mean,
        stderr: scale * (rhs_var / sf).sqrt(),
        samples: inner_samples,
    };
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn agree(lhs: &MomentEstimate, rhs: &MomentEstimate, nsig: f64) -> bool {
        let sig = lhs.stderr.hypot(rhs.stderr);
        (lhs.value - rhs.value).abs() <= nsig * sig + 1e-12
    }

    #[test]
    fn pattern_accessors() {
        let p = IntersectionPattern::new(2, &[(&[0], 1), (&[1], 1), (&[0, 1], 1)]).unwrap();
        assert_eq!(p.total(), 3);
        assert_eq!(p.set_size(0), 2);
        assert_eq!(p.set_size(1), 2);
        assert!(IntersectionPattern::new(2, &[(&[], 1)]).is_err());
        assert!(IntersectionPattern::new(2, &[(&[5], 1)]).is_err());
        assert!(IntersectionPattern::new(0, &[]).is_err());
    }

    #[test]
    fn split_convention() {
        // regions in bitmask order: {0} then {1} then {0,1}
        let p = IntersectionPattern::new(2, &[(&[0], 1), (&[1], 1), (&[0, 1], 1)]).unwrap();
        let pts: Vec<TorusPoint> = [0.1, 0.2, 0.3].iter().map(|&x| project(&[x]).unwrap()).collect();
        let sets = p.split(&pts).unwrap();
        assert_eq!(sets[0], vec![pts[0].clone(), pts[2].clone()]);
        assert_eq!(sets[1], vec![pts[1].clone(), pts[2].clone()]);
        assert!(p.split(&pts[..2]).is_err());
    }

    #[test]
    fn counts_two_subsets() {
        // E[# 2-subsets] = n^2 / 2
        let p = IntersectionPattern::new(1, &[(&[0], 2)]).unwrap();
        let (lhs, rhs) = mecke_check(&|_| 1.0, &p, 5.0, 1, 4000, 10, 31).unwrap();
        assert!((rhs.value - 12.5).abs() < 1e-9);
        assert!(agree(&lhs, &rhs, 4.0), "{lhs:?} vs {rhs:?}");
    }

    #[test]
    fn shared_point_pattern() {
        // two 2-subsets sharing exactly one point: n^3
        let p = IntersectionPattern::new(2, &[(&[0], 1), (&[1], 1), (&[0, 1], 1)]).unwrap();
        let (lhs, rhs) = mecke_check(&|_| 1.0, &p, 4.0, 1, 4000, 10, 32).unwrap();
        assert!((rhs.value - 64.0).abs() < 1e-9);
        assert!(agree(&lhs, &rhs, 4.0), "{lhs:?} vs {rhs:?}");
    }

    #[test]
    fn three_subsets_count() {
        // E[# 3-subsets] = n^3 / 6
        let p = IntersectionPattern::new(1, &[(&[0], 3)]).unwrap();
        let (lhs, rhs) = mecke_check(&|_| 1.0, &p, 4.0, 1, 4000, 10, 33).unwrap();
        assert!((rhs.value - 64.0 / 6.0).abs() < 1e-9);
        assert!(agree(&lhs, &rhs, 4.0), "{lhs:?} vs {rhs:?}");
    }

    #[test]
    fn nonconstant_h() {
        // indicator of a close pair: rhs = n^2/2 * P[dist <= 0.1] = n^2/2 * 0.2 in d = 1
        let p = IntersectionPattern::new(1, &[(&[0], 2)]).unwrap();
        let h = |sets: &[Vec<TorusPoint>]| {
            let s = &sets[0];
            if crate::torus::distance(&s[0], &s[1]).unwrap() <= 0.1 {
                1.0
            } else {
                0.0
            }
        };
        let (lhs, rhs) = mecke_check(&h, &p, 5.0, 1, 6000, 50_000, 34).unwrap();
        assert!((rhs.value - 2.5).abs() < 4.0 * rhs.stderr);
        assert!(agree(&lhs, &rhs, 4.0), "{lhs:?} vs {rhs:?}");
    }

    #[test]
    fn zero_h_gives_zero() {
        let p = IntersectionPattern::new(1, &[(&[0], 2)]).unwrap();
        let (lhs, rhs) = mecke_check(&|_| 0.0, &p, 5.0, 1, 100, 100, 35).unwrap();
        assert_eq!(lhs.value, 0.0);
        assert_eq!(rhs.value, 0.0);
    }

    #[test]
    fn rejects_oversized_instances() {
        let p = IntersectionPattern::new(1, &[(&[0], 7)]).unwrap();
        assert!(matches!(
            mecke_check(&|_| 1.0, &p, 5.0, 1, 10, 10, 0),
            Err(Error::Unsupported(_))
        ));
        let p = IntersectionPattern::new(1, &[(&[0], 2)]).unwrap();
        assert!(mecke_check(&|_| 1.0, &p, 25.0, 1, 10, 10, 0).is_err());
    }
}
