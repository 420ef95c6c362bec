//! The three limiting covariance structures and regime classification.
//!
//! With `r = a n^{-p}` and `sigma = b n^{-q}`, the normalized covariance of
//! the observable converges (lag `u` fixed) to
//!
//! - slow (`sigma << r`): `sum_j lambda_j e^{-ju}` — a superposition of OU
//!   correlations,
//! - moderate (`sigma / r -> sqrt(beta)`): `lambda_1 e^{-u} + sum_{j>=2}
//!   lambda_j e^{-ju} zeta_j(beta)`, damped by the Brownian mixing factors
//!   `zeta_j = zeta_tilde_j / kappa_tilde_j <= 1`,
//! - fast (`sigma >> r`): a ratio that collapses to white noise after
//!   integration; the prelimit expression is exposed for direct comparison.
//!
//! `zeta_tilde_j(beta)` equals the unit-scale overlap integral with the
//! shared points displaced by centred Gaussians of variance `beta`, so it is
//! estimated by the same two-tuple sampler as the finite-`n` lag integrals.
//! Its Gaussian kernel has precision matrix `M(j, beta) = (j I - J) / (j
//! beta)` on the `j - 1` relative displacements, with determinant
//! `1 / (j beta^{j-1})`.

use crate::error::{Error, Result};
use crate::functional::InteractionFunctional;
use crate::moments::{comb_factor, theta_j_mc, GammaLimit, LimitConstants, MomentEstimate};

/// A power law `value(n) = coeff * n^{-exponent}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingLaw {
    pub coeff: f64,
    pub exponent: f64,
}

impl ScalingLaw {
    pub fn at(&self, n: f64) -> f64 {
        self.coeff * n.powf(-self.exponent)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    Slow,
    Moderate { beta: f64 },
    Fast,
}

/// An asymptotic condition and whether the given scalings satisfy it.
#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub name: String,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeReport {
    pub regime: Regime,
    pub gamma: GammaLimit,
    pub conditions: Vec<Condition>,
    /// All conditions hold: the matching limit theorem applies.
    pub valid: bool,
}

/// Scaling laws for the interaction radius and diffusion coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeSpec {
    pub d: usize,
    pub k: usize,
    pub r: ScalingLaw,
    pub sigma: ScalingLaw,
}

/// Classify the scaling regime and report the asymptotic conditions of the
/// matching limit theorem.
pub fn classify_regime(spec: &RegimeSpec) -> Result<RegimeReport> {
    let (d, k) = (spec.d as f64, spec.k as f64);
    if spec.k < 2 || spec.d == 0 {
        return Err(Error::invalid("spec", "need k >= 2 and d >= 1"));
    }
    let (a, p) = (spec.r.coeff, spec.r.exponent);
    let (b, q) = (spec.sigma.coeff, spec.sigma.exponent);
    if !(a > 0.0) {
        return Err(Error::invalid("r", "coefficient must be positive"));
    }
    if b < 0.0 {
        return Err(Error::invalid("sigma", "coefficient must be nonnegative"));
    }

    let mut conditions = vec![
        Condition {
            name: "r -> 0".into(),
            holds: p > 0.0,
        },
        Condition {
            name: "n^k r^{d(k-1)} -> infinity".into(),
            holds: k - p * d * (k - 1.0) > 0.0,
        },
    ];

    // gamma = lim n r^d from the sign of 1 - p d
    let gamma = if p * d > 1.0 {
        GammaLimit::Zero
    } else if p * d < 1.0 {
        GammaLimit::Infinity
    } else {
        GammaLimit::Finite(a.powf(d))
    };

    // sigma == 0 or faster decay than r: the motion is asymptotically frozen
    let regime = if b == 0.0 || q > p {
        Regime::Slow
    } else if q == p {
        Regime::Moderate {
            beta: (b / a) * (b / a),
        }
    } else {
        Regime::Fast
    };

    if let Regime::Fast = regime {
        conditions.push(Condition {
            name: "n r^d -> 0".into(),
            holds: p * d > 1.0,
        });
        conditions.push(Condition {
            name: "n sigma^d bounded".into(),
            holds: q * d >= 1.0,
        });
        conditions.push(Condition {
            name: "d(k-1) >= 3".into(),
            holds: d * (k - 1.0) >= 3.0,
        });
        conditions.push(Condition {
            name: "sigma/r << (n^k r^{d(k-1)})^{1/4}".into(),
            holds: p - q < (k - p * d * (k - 1.0)) / 4.0,
        });
    }

    let valid = conditions.iter().all(|c| c.holds);
    Ok(RegimeReport {
        regime,
        gamma,
        conditions,
        valid,
    })
}

/// Precision matrix `M(j, beta)` of the relative-displacement Gaussian
/// kernel: `(j I_{j-1} - J_{j-1}) / (j beta)`.
pub fn matrix_m(j: usize, beta: f64) -> Result<Vec<Vec<f64>>> {
    if j == 0 {
        return Err(Error::invalid("j", "must be >= 1"));
    }
    if !(beta > 0.0) {
        return Err(Error::invalid("beta", "must be positive"));
    }
    let m = j - 1;
    let mut out = vec![vec![0.0; m]; m];
    for (i, row) in out.iter_mut().enumerate() {
        for (t, v) in row.iter_mut().enumerate() {
            *v = if i == t {
                (j as f64 - 1.0) / (j as f64 * beta)
            } else {
                -1.0 / (j as f64 * beta)
            };
        }
    }
    Ok(out)
}

/// `det M(j, beta) = 1 / (j beta^{j-1})` in closed form.
pub fn det_m(j: usize, beta: f64) -> Result<f64> {
    if j == 0 {
        return Err(Error::invalid("j", "must be >= 1"));
    }
    if !(beta > 0.0) {
        return Err(Error::invalid("beta", "must be positive"));
    }
    Ok(1.0 / (j as f64 * beta.powi(j as i32 - 1)))
}

/// `zeta_tilde_j(beta)`: the unit-scale overlap integral with shared points
/// displaced by independent centred Gaussians of per-coordinate variance
/// `beta`.
pub fn zeta_tilde_mc(
    fnl: &InteractionFunctional,
    d: usize,
    j: usize,
    beta: f64,
    samples: u64,
    seed: u64,
) -> Result<MomentEstimate> {
    if !(beta > 0.0) {
        return Err(Error::invalid("beta", "must be positive"));
    }
    theta_j_mc(fnl, d, j, 1.0, beta, samples, seed)
}

/// `zeta_j(beta) = zeta_tilde_j(beta) / kappa_tilde_j`, with
/// `zeta_1 identically 1`; the standard error is propagated from the
/// numerator with `kappa_tilde_j` treated as known.
pub fn zeta_mc(
    fnl: &InteractionFunctional,
    d: usize,
    j: usize,
    beta: f64,
    kappa_tilde_j: f64,
    samples: u64,
    seed: u64,
) -> Result<MomentEstimate> {
    if j == 1 {
        return Ok(MomentEstimate {
            value: 1.0,
            stderr: 0.0,
            samples: 0,
        });
    }
    if !(kappa_tilde_j > 0.0) {
        return Err(Error::invalid("kappa_tilde_j", "must be positive"));
    }
    let zt = zeta_tilde_mc(fnl, d, j, beta, samples, seed)?;
    Ok(MomentEstimate {
        value: zt.value / kappa_tilde_j,
        stderr: zt.stderr / kappa_tilde_j,
        samples: zt.samples,
    })
}

fn check_weights(lambda: &[f64]) -> Result<()> {
    if lambda.is_empty() {
        return Err(Error::EmptySet);
    }
    let s: f64 = lambda.iter().sum();
    if lambda.iter().any(|&l| l < 0.0) || (s - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("lambda", format!("weights sum to {s}, not 1")));
    }
    Ok(())
}

/// Slow-regime limiting normalized covariance `sum_j lambda_j e^{-j u}`.
pub fn slow_limit_cov(lambda: &[f64], lag: f64) -> Result<f64> {
    check_weights(lambda)?;
    Ok(lambda
        .iter()
        .enumerate()
        .map(|(i, l)| l * (-((i + 1) as f64) * lag).exp())
        .sum())
}

/// Moderate-regime limiting normalized covariance
/// `lambda_1 e^{-u} + sum_{j>=2} lambda_j e^{-ju} zeta_j(beta)`;
/// `zetas[0]` must be 1.
pub fn moderate_limit_cov(lambda: &[f64], zetas: &[f64], lag: f64) -> Result<f64> {
    check_weights(lambda)?;
    if zetas.len() != lambda.len() {
        return Err(Error::invalid("zetas", "needs one entry per overlap order"));
    }
    if (zetas[0] - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("zetas", "zeta_1 must be 1"));
    }
    Ok(lambda
        .iter()
        .zip(zetas)
        .enumerate()
        .map(|(i, (l, z))| l * z * (-((i + 1) as f64) * lag).exp())
        .sum())
}

/// Fast-regime prelimit ratio for the normalized covariance at positive lag:
///
/// `sum_j e^{-ju} kappa_tilde_1 / c_j (2 pi u)^{-d(j-1)/2} j^{-d/2}
///  (n sigma^d)^{-j} (sigma / r)^d  /  sum_j kappa_j (n r^d)^{-j}`.
pub fn fast_cov_ratio(
    constants: &LimitConstants,
    n: f64,
    r: f64,
    sigma: f64,
    lag: f64,
) -> Result<f64> {
    if lag <= 0.0 {
        return Err(Error::SingularLag);
    }
    if !(n > 0.0 && r > 0.0 && sigma > 0.0) {
        return Err(Error::invalid("params", "n, r, sigma must be positive"));
    }
    let (k, d) = (constants.k, constants.d as f64);
    let kt1 = constants.kappa_tilde[0];
    let ns = n * sigma.powf(d);
    let nr = n * r.powf(d);
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 1..=k {
        let jf = j as f64;
        num += (-jf * lag).exp() * kt1 / comb_factor(k, j)
            * (2.0 * std::f64::consts::PI * lag).powf(-d * (jf - 1.0) / 2.0)
            * jf.powf(-d / 2.0)
            * ns.powi(-(j as i32))
            * (sigma / r).powf(d);
        den += constants.kappa(j)? * nr.powi(-(j as i32));
    }
    Ok(num / den)
}

/// Bounds on the integrated-covariance normalization in the fast regime:
/// `(r/sigma)^{2+eps} <~ M_n <~ (r/sigma)^{2 - 4/(d(k-1)+2)}`.
pub fn mn_bounds(r: f64, sigma: f64, d: usize, k: usize, eps: f64) -> Result<(f64, f64)> {
    if !(sigma > r && r > 0.0) {
        return Err(Error::invalid("sigma", "fast-regime bounds need sigma > r > 0"));
    }
    if !(eps > 0.0) {
        return Err(Error::invalid("eps", "must be positive"));
    }
    let ratio = r / sigma;
    let lo = ratio.powf(2.0 + eps);
    let hi = ratio.powf(2.0 - 4.0 / ((d * (k - 1)) as f64 + 2.0));
    Ok((lo, hi))
}
