//! Exact finite-intensity moments of the observable and the Monte-Carlo
//! machinery for the interaction constants behind them.
//!
//! With intensity `n` and scale `r`, writing `c_j = j! ((k-j)!)^2`:
//!
//! - `E[f] = n^k alpha(r) / k!` with `alpha(r) = r^{d(k-1)} alpha_unit`,
//! - `var[f] = sum_j n^{2k-j} alpha_j(r) / c_j`,
//! - `cov[f(t), f(t+u)] = sum_j e^{-j u} n^{2k-j} theta_j(r, u) / c_j`,
//!
//! where `alpha_j(r) = r^{d(2k-j-1)} kappa_tilde_j` exactly for
//! `r < 1/(2 delta)`, and `theta_j` couples two k-tuples sharing `j` points
//! that each diffused for the lag. The constants are estimated by importance
//! sampling from balls of radius `delta` (every contributing configuration
//! lies within `delta` of its anchor); a plain cube proposal is kept as an
//! independent cross-check.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::functional::InteractionFunctional;
use crate::rng::stream_rng;

/// A Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: u64,
}

impl MomentEstimate {
    /// Whether `truth` lies within `nsig` standard errors of the estimate.
    pub fn agrees_with(&self, truth: f64, nsig: f64) -> bool {
        (self.value - truth).abs() <= nsig * self.stderr
    }
}

/// `j! ((k-j)!)^2`, the overlap multiplicity in the moment formulas.
pub fn comb_factor(k: usize, j: usize) -> f64 {
    let fact = |m: usize| (1..=m).map(|x| x as f64).product::<f64>();
    fact(j) * fact(k - j) * fact(k - j)
}

/// Volume of the d-ball of the given radius.
pub fn ball_volume(d: usize, radius: f64) -> f64 {
    // Gamma(d/2 + 1) by the recursion from Gamma(1) = 1, Gamma(1/2) = sqrt(pi)
    let mut g = if d % 2 == 0 {
        1.0
    } else {
        std::f64::consts::PI.sqrt()
    };
    let mut x = if d % 2 == 0 { 1.0 } else { 0.5 };
    while x < d as f64 / 2.0 + 0.5 {
        g *= x;
        x += 1.0;
    }
    std::f64::consts::PI.powf(d as f64 / 2.0) * radius.powi(d as i32) / g
}

/// Uniform point in the d-ball around `center`, written into `out`.
pub fn sample_in_ball(rng: &mut impl Rng, d: usize, radius: f64, center: &[f64], out: &mut [f64]) {
    // gaussian direction, radial CDF inversion: draw count is input-independent
    let mut norm2 = 0.0;
    for slot in out.iter_mut().take(d) {
        let g: f64 = StandardNormal.sample(rng);
        *slot = g;
        norm2 += g * g;
    }
    let u: f64 = rng.gen_range(0.0..1.0f64);
    let scale = if norm2 > 0.0 {
        radius * u.powf(1.0 / d as f64) / norm2.sqrt()
    } else {
        0.0
    };
    for (slot, &c) in out.iter_mut().zip(center).take(d) {
        *slot = *slot * scale + c;
    }
}

fn check_j(k: usize, j: usize) -> Result<()> {
    if j == 0 || j > k {
        return Err(Error::invalid("j", format!("{j} not in 1..={k}")));
    }
    Ok(())
}

fn finalize(sum: f64, sumsq: f64, n: u64) -> MomentEstimate {
    let m = sum / n as f64;
    let var = (sumsq / n as f64 - m * m).max(0.0);
    MomentEstimate {
        value: m,
        stderr: (var / n as f64).sqrt(),
        samples: n,
    }
}

/// `alpha_unit = integral of xi_1(0, y_2..y_k)` over `R^{d(k-1)}`,
/// by importance sampling from the ball of radius `delta`.
pub fn alpha_unit_mc(
    fnl: &InteractionFunctional,
    d: usize,
    samples: u64,
    seed: u64,
) -> Result<MomentEstimate> {
    let k = fnl.k();
    let delta = fnl.delta();
    let weight = ball_volume(d, delta).powi(k as i32 - 1);
    let origin = vec![0.0; d];
    let mut rng = stream_rng(seed, 0);
    let mut coords = vec![0.0; k * d];
    let (mut sum, mut sumsq) = (0.0, 0.0);
    for _ in 0..samples {
        for i in 1..k {
            let (head, tail) = coords.split_at_mut(i * d);
            let _ = head;
            sample_in_ball(&mut rng, d, delta, &origin, &mut tail[..d]);
        }
        let v = fnl.evaluate_unit(&coords, d) * weight;
        sum += v;
        sumsq += v * v;
    }
    Ok(finalize(sum, sumsq, samples))
}

/// Shared evaluation of the two-tuple integrand: tuple one is
/// `(0, y_1..y_{k-1})`, tuple two shares the anchor and the first `j - 1`
/// free points, each shared point displaced by an independent centred
/// Gaussian of per-coordinate variance `disp_var`; the `k - j` fresh points
/// are proposed in the ball around the displaced anchor.
fn two_tuple_mc(
    fnl: &InteractionFunctional,
    d: usize,
    j: usize,
    ball_radius: f64,
    disp_var: f64,
    scale_r: f64,
    samples: u64,
    seed: u64,
    cube_proposal: bool,
) -> Result<MomentEstimate> {
    let k = fnl.k();
    check_j(k, j)?;
    let free = 2 * k - j - 1;
    let weight = if cube_proposal {
        (2.0 * ball_radius).powi((d * free) as i32)
    } else {
        ball_volume(d, ball_radius).powi(free as i32)
    };
    let sd = disp_var.sqrt();
    let origin = vec![0.0; d];
    let mut rng = stream_rng(seed, 1);
    let mut t1 = vec![0.0; k * d];
    let mut t2 = vec![0.0; k * d];
    let mut z = vec![0.0; d];
    let (mut sum, mut sumsq) = (0.0, 0.0);
    for _ in 0..samples {
        for i in 1..k {
            let slot = &mut t1[i * d..(i + 1) * d];
            if cube_proposal {
                for c in slot.iter_mut() {
                    *c = rng.gen_range(-ball_radius..ball_radius);
                }
            } else {
                sample_in_ball(&mut rng, d, ball_radius, &origin, slot);
            }
        }
        // shared points move; slot 0 of tuple two is the displaced anchor
        for i in 0..j {
            for (t, zt) in z.iter_mut().enumerate() {
                let g: f64 = StandardNormal.sample(&mut rng);
                *zt = t1[i * d + t] + sd * g;
            }
            t2[i * d..(i + 1) * d].copy_from_slice(&z);
        }
        let anchor2: Vec<f64> = t2[0..d].to_vec();
        for i in j..k {
            let slot = &mut t2[i * d..(i + 1) * d];
            if cube_proposal {
                for (c, a) in slot.iter_mut().zip(&anchor2) {
                    *c = a + rng.gen_range(-ball_radius..ball_radius);
                }
            } else {
                sample_in_ball(&mut rng, d, ball_radius, &anchor2, slot);
            }
        }
        let v1 = fnl.evaluate_scaled(&t1, d, scale_r);
        let v = if v1 == 0.0 {
            0.0
        } else {
            v1 * fnl.evaluate_scaled(&t2, d, scale_r) * weight
        };
        sum += v;
        sumsq += v * v;
    }
    Ok(finalize(sum, sumsq, samples))
}

/// `kappa_tilde_j`: the unit-scale overlap integral over `2k - j - 1` free
/// points (ball importance sampling).
pub fn kappa_tilde_mc(
    fnl: &InteractionFunctional,
    d: usize,
    j: usize,
    samples: u64,
    seed: u64,
) -> Result<MomentEstimate> {
    two_tuple_mc(fnl, d, j, fnl.delta(), 0.0, 1.0, samples, seed, false)
}

/// Cube-proposal variant of [`kappa_tilde_mc`]; an independent route to the
/// same integral, used for self-consistency checks.
pub fn kappa_tilde_mc_box(
    fnl: &InteractionFunctional,
    d: usize,
    j: usize,
    samples: u64,
    seed: u64,
) -> Result<MomentEstimate> {
    two_tuple_mc(fnl, d, j, fnl.delta(), 0.0, 1.0, samples, seed, true)
}

/// `theta_j(r, u)`: overlap integral at scale `r` with the `j` shared points
/// displaced by independent Brownian increments of per-coordinate variance
/// `sigma^2 * u`.
pub fn theta_j_mc(
    fnl: &InteractionFunctional,
    d: usize,
    j: usize,
    r: f64,
    disp_var: f64,
    samples: u64,
    seed: u64,
) -> Result<MomentEstimate> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::invalid("r", format!("{r} not in (0, 1]")));
    }
    if disp_var < 0.0 {
        return Err(Error::invalid("disp_var", "must be nonnegative"));
    }
    two_tuple_mc(fnl, d, j, fnl.delta() * r, disp_var, r, samples, seed, false)
}

/// Limit of the intensity-scale coupling `gamma_n = n r_n^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaLimit {
    Zero,
    Finite(f64),
    Infinity,
}

/// The interaction constants of a functional in a fixed dimension:
/// `alpha_unit` and `kappa_tilde_1..kappa_tilde_k`, with the derived
/// `kappa_j` and mixture weights `lambda_j(gamma)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitConstants {
    pub k: usize,
    pub d: usize,
    pub delta: f64,
    pub alpha_unit: f64,
    pub kappa_tilde: Vec<f64>,
}

impl LimitConstants {
    /// Estimate all constants by Monte Carlo with the given sample budget
    /// per integral.
    pub fn estimate(
        fnl: &InteractionFunctional,
        d: usize,
        samples: u64,
        seed: u64,
    ) -> Result<Self> {
        let k = fnl.k();
        let alpha_unit = alpha_unit_mc(fnl, d, samples, crate::rng::derive_seed(seed, 100))?.value;
        let mut kappa_tilde = Vec::with_capacity(k);
        for j in 1..=k {
            let est = kappa_tilde_mc(fnl, d, j, samples, crate::rng::derive_seed(seed, 200 + j as u64))?;
            kappa_tilde.push(est.value);
        }
        Ok(LimitConstants {
            k,
            d,
            delta: fnl.delta(),
            alpha_unit,
            kappa_tilde,
        })
    }

    pub fn from_values(
        k: usize,
        d: usize,
        delta: f64,
        alpha_unit: f64,
        kappa_tilde: Vec<f64>,
    ) -> Result<Self> {
        if kappa_tilde.len() != k {
            return Err(Error::invalid("kappa_tilde", "needs one entry per overlap order"));
        }
        Ok(LimitConstants {
            k,
            d,
            delta,
            alpha_unit,
            kappa_tilde,
        })
    }

    /// `kappa_j = kappa_tilde_j / c_j`.
    pub fn kappa(&self, j: usize) -> Result<f64> {
        check_j(self.k, j)?;
        Ok(self.kappa_tilde[j - 1] / comb_factor(self.k, j))
    }

    /// Mixture weights `lambda_j = kappa_j gamma^{-j} / sum_l kappa_l
    /// gamma^{-l}`; the degenerate limits put all weight on `j = k`
    /// (gamma -> 0) or `j = 1` (gamma -> infinity).
    pub fn lambda(&self, gamma: &GammaLimit) -> Result<Vec<f64>> {
        let k = self.k;
        let mut w = vec![0.0; k];
        match gamma {
            GammaLimit::Zero => w[k - 1] = 1.0,
            GammaLimit::Infinity => w[0] = 1.0,
            GammaLimit::Finite(g) => {
                if !(*g > 0.0 && g.is_finite()) {
                    return Err(Error::invalid("gamma", "finite limit must be positive"));
                }
                // factor out gamma^{-k} for numerical stability at small gamma
                let mut total = 0.0;
                for j in 1..=k {
                    let term = self.kappa(j)? * g.powi((k - j) as i32);
                    w[j - 1] = term;
                    total += term;
                }
                if total <= 0.0 {
                    return Err(Error::invalid("kappa_tilde", "weights sum to zero"));
                }
                for x in w.iter_mut() {
                    *x /= total;
                }
            }
        }
        Ok(w)
    }

    /// `alpha(r) = r^{d(k-1)} alpha_unit`.
    pub fn alpha(&self, r: f64) -> f64 {
        r.powi((self.d * (self.k - 1)) as i32) * self.alpha_unit
    }

    /// `alpha_j(r) = r^{d(2k-j-1)} kappa_tilde_j`; exact for `r < 1/(2 delta)`.
    pub fn alpha_j(&self, j: usize, r: f64) -> Result<f64> {
        check_j(self.k, j)?;
        if r >= 1.0 / (2.0 * self.delta) {
            return Err(Error::invalid(
                "r",
                format!("scaling identity needs r < 1/(2 delta) = {}", 1.0 / (2.0 * self.delta)),
            ));
        }
        Ok(r.powi((self.d * (2 * self.k - j - 1)) as i32) * self.kappa_tilde[j - 1])
    }

    /// `E[f] = n^k alpha(r) / k!`.
    pub fn mean_f(&self, n: f64, r: f64) -> f64 {
        n.powi(self.k as i32) * self.alpha(r) / comb_factor(self.k, self.k)
    }

    /// `var[f] = sum_j n^{2k-j} alpha_j(r) / c_j`.
    pub fn var_f(&self, n: f64, r: f64) -> Result<f64> {
        let mut total = 0.0;
        for j in 1..=self.k {
            total += n.powi((2 * self.k - j) as i32) * self.alpha_j(j, r)?
                / comb_factor(self.k, j);
        }
        Ok(total)
    }
}

/// Unnormalized lag covariance `sum_j e^{-j u} n^{2k-j} theta_j / c_j` from
/// supplied overlap integrals `theta_1..theta_k`.
pub fn lag_cov_f(k: usize, n: f64, lag: f64, thetas: &[f64]) -> Result<f64> {
    if thetas.len() != k {
        return Err(Error::invalid("thetas", "needs one entry per overlap order"));
    }
    let mut total = 0.0;
    for j in 1..=k {
        total += (-(j as f64) * lag).exp() * n.powi((2 * k - j) as i32) * thetas[j - 1]
            / comb_factor(k, j);
    }
    Ok(total)
}
