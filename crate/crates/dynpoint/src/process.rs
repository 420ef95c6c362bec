//! The two simulators of the dynamic point process.
//!
//! `sample_marked_process` builds the marked representation: a static Poisson
//! process of rate `n(1+T)` on the cube whose points carry (birth time,
//! lifetime, Brownian path) marks. `sample_direct_dynamic` is an independent
//! event-driven implementation (initial Poisson(n) configuration, birth
//! stream of rate n, exponential lifetimes, Brownian moves while alive) used
//! to test that the two have the same finite dimensional distributions.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::torus::{wrap_coord, TorusPoint};

/// Largest supported torus dimension; keeps per-point state inline.
pub const MAX_DIM: usize = 8;

/// Model and run parameters shared by both simulators.
#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    /// Intensity of the stationary configuration.
    pub n: f64,
    /// Time horizon T.
    pub t_horizon: f64,
    /// Brownian scale per unit time, per coordinate.
    pub sigma: f64,
    /// Torus dimension.
    pub d: usize,
    /// Order of the interaction functional.
    pub k: usize,
    /// Root seed of the experiment.
    pub seed: u64,
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.n > 0.0 && self.n.is_finite()) {
            return Err(Error::invalid("n", "must be positive and finite"));
        }
        if !(self.t_horizon > 0.0 && self.t_horizon.is_finite()) {
            return Err(Error::invalid("T", "must be positive and finite"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid("sigma", "must be nonnegative and finite"));
        }
        if self.d == 0 || self.d > MAX_DIM {
            return Err(Error::invalid("d", format!("must be in 1..={MAX_DIM}")));
        }
        if self.k < 2 {
            return Err(Error::invalid("k", "must be >= 2"));
        }
        Ok(())
    }
}

/// Lazily sampled Brownian path, queried at nondecreasing times.
///
/// Only the frontier (last sampled time and displacement) is retained; the
/// harness never queries backwards, so the dense history is not stored.
#[derive(Debug, Clone)]
pub struct BrownianPath {
    t_last: f64,
    d: usize,
    disp: [f64; MAX_DIM],
}

impl BrownianPath {
    fn new(birth: f64, d: usize) -> Self {
        BrownianPath {
            t_last: birth,
            d,
            disp: [0.0; MAX_DIM],
        }
    }

    pub fn t_last(&self) -> f64 {
        self.t_last
    }

    pub fn displacement(&self) -> &[f64] {
        &self.disp[..self.d]
    }
}

/// A point of the marked process: initial location plus (birth, lifetime,
/// Brownian path) marks and its private RNG stream.
#[derive(Debug, Clone)]
pub struct MarkedPoint {
    pub x0: [f64; MAX_DIM],
    pub birth: f64,
    pub lifetime: f64,
    pub path: BrownianPath,
    rng: ChaCha8Rng,
}

impl MarkedPoint {
    /// Alive indicator `birth <= t < birth + lifetime`.
    #[inline]
    pub fn is_alive(&self, t: f64) -> bool {
        self.birth <= t && t < self.birth + self.lifetime
    }

    /// Extend the Brownian path to time `t >= birth` and return the wrapped
    /// location. Queries must be nondecreasing in `t`; repeated queries at
    /// the frontier return the same value.
    pub fn position_at(&mut self, t: f64, sigma: f64) -> Result<TorusPoint> {
        self.advance(t, sigma)?;
        let d = self.path.d;
        let coords: Vec<f64> = self.x0[..d]
            .iter()
            .zip(&self.path.disp[..d])
            .map(|(x, z)| wrap_coord(x + z))
            .collect();
        Ok(TorusPoint::new(coords).expect("wrapped coords are finite"))
    }

    /// Advance the path frontier, appending the projected location to `out`.
    #[inline]
    pub fn position_into(&mut self, t: f64, sigma: f64, out: &mut Vec<f64>) -> Result<()> {
        self.advance(t, sigma)?;
        let d = self.path.d;
        for (x, z) in self.x0[..d].iter().zip(&self.path.disp[..d]) {
            out.push(wrap_coord(x + z));
        }
        Ok(())
    }

    fn advance(&mut self, t: f64, sigma: f64) -> Result<()> {
        if t < self.birth {
            return Err(Error::invalid("t", format!("{t} precedes birth {}", self.birth)));
        }
        if t < self.path.t_last {
            return Err(Error::OutOfOrderQuery {
                t,
                t_last: self.path.t_last,
            });
        }
        if t > self.path.t_last {
            if sigma > 0.0 {
                let std = sigma * (t - self.path.t_last).sqrt();
                let d = self.path.d;
                for z in &mut self.path.disp[..d] {
                    let g: f64 = StandardNormal.sample(&mut self.rng);
                    *z += std * g;
                }
            }
            self.path.t_last = t;
        }
        Ok(())
    }
}

/// A realization of the marked Poisson representation on `[0, T]`.
#[derive(Debug, Clone)]
pub struct MarkedProcess {
    pub params: SimParams,
    pub points: Vec<MarkedPoint>,
    // ascending-birth sweep over the alive set; valid because path queries
    // are nondecreasing in time anyway
    birth_order: Vec<u32>,
    next_birth: usize,
    active: Vec<u32>,
    t_cursor: f64,
}

/// Draw the marked process: `Poisson(n(1+T))` points, uniform locations,
/// `birth = 0` with probability `1/(1+T)` else uniform on `[0,T]`, unit-mean
/// exponential lifetimes, Brownian paths started at birth.
pub fn sample_marked_process(params: &SimParams) -> Result<MarkedProcess> {
    params.validate()?;
    let t_hor = params.t_horizon;
    let rate = params.n * (1.0 + t_hor);
    let mut master = stream_rng(params.seed, 0);
    let count = Poisson::new(rate)
        .expect("validated rate")
        .sample(&mut master) as usize;

    let mut points = Vec::with_capacity(count);
    for i in 0..count {
        let mut rng = stream_rng(params.seed, 1 + i as u64);
        let mut x0 = [0.0; MAX_DIM];
        for x in x0.iter_mut().take(params.d) {
            *x = rng.gen_range(-0.5..0.5);
        }
        let birth = if rng.gen::<f64>() < 1.0 / (1.0 + t_hor) {
            0.0
        } else {
            rng.gen_range(0.0..t_hor)
        };
        let lifetime: f64 = Exp1.sample(&mut rng);
        points.push(MarkedPoint {
            path: BrownianPath::new(birth, params.d),
            x0,
            birth,
            lifetime,
            rng,
        });
    }
    let mut birth_order: Vec<u32> = (0..points.len() as u32).collect();
    birth_order.sort_by(|&a, &b| {
        points[a as usize]
            .birth
            .total_cmp(&points[b as usize].birth)
            .then(a.cmp(&b))
    });
    Ok(MarkedProcess {
        params: params.clone(),
        points,
        birth_order,
        next_birth: 0,
        active: Vec::new(),
        t_cursor: f64::NEG_INFINITY,
    })
}

impl MarkedProcess {
    fn check_time(&self, t: f64) -> Result<()> {
        if !(0.0..=self.params.t_horizon).contains(&t) {
            return Err(Error::TimeOutOfRange {
                t,
                t_max: self.params.t_horizon,
            });
        }
        Ok(())
    }

    /// Alive indicator of point `i` at time `t` in `[0, T]`.
    pub fn alive(&self, i: usize, t: f64) -> Result<bool> {
        self.check_time(t)?;
        Ok(self.points[i].is_alive(t))
    }

    /// Locations of all points alive at time `t`.
    pub fn snapshot(&mut self, t: f64) -> Result<Vec<TorusPoint>> {
        self.check_time(t)?;
        let sigma = self.params.sigma;
        let mut out = Vec::new();
        for p in &mut self.points {
            if p.is_alive(t) {
                out.push(p.position_at(t, sigma)?);
            }
        }
        Ok(out)
    }

    /// Like [`snapshot`](Self::snapshot) but writes wrapped coordinates into
    /// a flat buffer (d per point); returns the number of alive points.
    pub fn snapshot_coords(&mut self, t: f64, out: &mut Vec<f64>) -> Result<usize> {
        self.check_time(t)?;
        if t < self.t_cursor {
            return Err(Error::OutOfOrderQuery {
                t,
                t_last: self.t_cursor,
            });
        }
        self.t_cursor = t;
        out.clear();
        while self.next_birth < self.birth_order.len() {
            let i = self.birth_order[self.next_birth];
            if self.points[i as usize].birth > t {
                break;
            }
            self.active.push(i);
            self.next_birth += 1;
        }
        let sigma = self.params.sigma;
        // drop expired entries in place, preserving order
        let mut kept = 0;
        for a in 0..self.active.len() {
            let i = self.active[a];
            let p = &mut self.points[i as usize];
            if !p.is_alive(t) {
                continue;
            }
            p.position_into(t, sigma, out)?;
            self.active[kept] = i;
            kept += 1;
        }
        self.active.truncate(kept);
        Ok(kept)
    }
}

/// Event-driven direct simulation: returns the alive configurations at each
/// grid time. Marginal at every `t` is a Poisson(n) process on the torus.
pub fn sample_direct_dynamic(params: &SimParams, grid: &[f64]) -> Result<Vec<Vec<TorusPoint>>> {
    let flat = direct_dynamic_snapshots(params, grid)?;
    Ok(flat
        .into_iter()
        .map(|coords| {
            coords
                .chunks(params.d)
                .map(|c| TorusPoint::new(c.to_vec()).expect("finite"))
                .collect()
        })
        .collect())
}

/// Direct simulator returning flat wrapped coordinates per grid time.
pub fn direct_dynamic_snapshots(params: &SimParams, grid: &[f64]) -> Result<Vec<Vec<f64>>> {
    params.validate()?;
    if grid.is_empty() {
        return Err(Error::invalid("grid", "must be nonempty"));
    }
    let t_hor = params.t_horizon;
    for w in grid.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::invalid("grid", "times must be strictly increasing"));
        }
    }
    if grid[0] < 0.0 || *grid.last().unwrap() > t_hor {
        return Err(Error::invalid("grid", format!("times must lie in [0, {t_hor}]")));
    }

    let mut master = stream_rng(params.seed, 0);
    let n_initial = Poisson::new(params.n)
        .expect("validated rate")
        .sample(&mut master) as usize;
    let n_born = Poisson::new(params.n * t_hor)
        .expect("validated rate")
        .sample(&mut master) as usize;

    let mut snapshots: Vec<Vec<f64>> = vec![Vec::new(); grid.len()];
    let total = n_initial + n_born;
    for i in 0..total {
        let mut rng = stream_rng(params.seed, 1 + i as u64);
        let birth = if i < n_initial {
            0.0
        } else {
            rng.gen_range(0.0..t_hor)
        };
        let lifetime: f64 = Exp1.sample(&mut rng);
        let death = birth + lifetime;
        // unwrapped coordinates; projected only at snapshot time so motion
        // variance is exact
        let mut coords: Vec<f64> = (0..params.d).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let mut t_prev = birth;
        for (gi, &t) in grid.iter().enumerate() {
            if t < birth {
                continue;
            }
            if t >= death {
                break;
            }
            if params.sigma > 0.0 && t > t_prev {
                let std = params.sigma * (t - t_prev).sqrt();
                for c in &mut coords {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    *c += std * g;
                }
            }
            t_prev = t;
            snapshots[gi].extend(coords.iter().map(|&c| wrap_coord(c)));
        }
    }
    Ok(snapshots)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: f64, t_hor: f64, sigma: f64, seed: u64) -> SimParams {
        SimParams {
            n,
            t_horizon: t_hor,
            sigma,
            d: 1,
            k: 2,
            seed,
        }
    }

    #[test]
    fn alive_indicator_half_open() {
        let mut proc = sample_marked_process(&params(5.0, 2.0, 0.0, 1)).unwrap();
        let p = &mut proc.points[0];
        p.birth = 0.0;
        p.lifetime = 2.0;
        assert!(p.is_alive(1.0));
        assert!(!p.is_alive(2.0));
        p.birth = 0.5;
        assert!(!p.is_alive(0.4));
        assert!(proc.alive(0, 3.0).is_err());
    }

    #[test]
    fn position_degenerate_and_at_birth() {
        let mut proc = sample_marked_process(&params(50.0, 1.0, 0.0, 2)).unwrap();
        for i in 0..proc.points.len().min(10) {
            let p = &mut proc.points[i];
            let birth = p.birth;
            let x0 = p.x0;
            let at_birth = p.position_at(birth, 0.5).unwrap();
            assert_eq!(at_birth.coords(), &x0[..1]);
            // sigma = 0: stays put forever
            let later = p.position_at(birth + 0.7, 0.0).unwrap();
            assert_eq!(later.coords(), &x0[..1]);
        }
    }

    #[test]
    fn out_of_order_query_rejected() {
        let mut proc = sample_marked_process(&params(50.0, 1.0, 0.1, 3)).unwrap();
        let p = &mut proc.points[0];
        p.birth = 0.0;
        p.position_at(0.8, 0.1).unwrap();
        assert!(matches!(
            p.position_at(0.3, 0.1),
            Err(Error::OutOfOrderQuery { .. })
        ));
    }

    #[test]
    fn brownian_increment_variance() {
        // per-coordinate variance of the displacement over [birth, birth+dt]
        // is sigma^2 * dt
        let sigma = 0.3;
        let dt = 0.5;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        let mut m = 0;
        for seed in 0..40 {
            let mut proc = sample_marked_process(&params(200.0, 1.0, sigma, seed)).unwrap();
            for p in &mut proc.points {
                if p.birth > 0.4 {
                    continue;
                }
                let t = p.birth + dt;
                p.advance(t, sigma).unwrap();
                let z = p.path.disp[0];
                sum += z;
                sumsq += z * z;
                m += 1;
            }
        }
        let mean = sum / m as f64;
        let var = sumsq / m as f64 - mean * mean;
        let expect = sigma * sigma * dt;
        // relative MC error ~ sqrt(2/m)
        let tol = 4.0 * expect * (2.0 / m as f64).sqrt();
        assert!(
            (var - expect).abs() < tol,
            "var {var} vs {expect} (m={m})"
        );
    }

    #[test]
    fn snapshot_count_is_stationary_poisson() {
        // mean and variance of the alive count are both ~ n
        let n = 100.0;
        let reps = 400;
        let mut counts = Vec::with_capacity(reps);
        for seed in 0..reps as u64 {
            let mut proc = sample_marked_process(&params(n, 1.0, 0.0, seed)).unwrap();
            counts.push(proc.snapshot(0.5).unwrap().len() as f64);
        }
        let m = counts.iter().sum::<f64>() / reps as f64;
        let v = counts.iter().map(|c| (c - m) * (c - m)).sum::<f64>() / (reps - 1) as f64;
        let se_mean = (n / reps as f64).sqrt();
        assert!((m - n).abs() < 4.0 * se_mean, "mean {m}");
        let se_var = n * (2.0 / reps as f64).sqrt() * 1.5;
        assert!((v - n).abs() < 4.0 * se_var, "var {v}");
    }

    #[test]
    fn birth_zero_probability_and_lifetime_mean() {
        let mut zero = 0usize;
        let mut total = 0usize;
        let mut life_sum = 0.0;
        for seed in 0..50 {
            let proc = sample_marked_process(&params(100.0, 1.0, 0.0, seed)).unwrap();
            for p in &proc.points {
                total += 1;
                if p.birth == 0.0 {
                    zero += 1;
                }
                life_sum += p.lifetime;
            }
        }
        let phat = zero as f64 / total as f64;
        let se = (0.25 / total as f64).sqrt();
        assert!((phat - 0.5).abs() < 4.0 * se, "P[birth=0] {phat}");
        let lmean = life_sum / total as f64;
        assert!((lmean - 1.0).abs() < 4.0 / (total as f64).sqrt(), "mean lifetime {lmean}");
    }

    #[test]
    fn joint_aliveness_memoryless() {
        // P[alive at 0 and delta] / P[alive at 0] = e^{-delta}
        let delta = 0.6;
        let mut alive0 = 0usize;
        let mut both = 0usize;
        for seed in 0..300 {
            let proc = sample_marked_process(&params(100.0, 1.0, 0.0, seed)).unwrap();
            for p in &proc.points {
                if p.is_alive(0.0) {
                    alive0 += 1;
                    if p.is_alive(delta) {
                        both += 1;
                    }
                }
            }
        }
        let ratio = both as f64 / alive0 as f64;
        let expect = (-delta).exp();
        let se = (expect * (1.0 - expect) / alive0 as f64).sqrt();
        assert!((ratio - expect).abs() < 4.0 * se, "ratio {ratio} vs {expect}");
    }

    #[test]
    fn determinism_bitwise() {
        let p = params(80.0, 1.0, 0.2, 99);
        let mut a = sample_marked_process(&p).unwrap();
        let mut b = sample_marked_process(&p).unwrap();
        for &t in &[0.0, 0.3, 0.9] {
            let sa = a.snapshot(t).unwrap();
            let sb = b.snapshot(t).unwrap();
            assert_eq!(sa.len(), sb.len());
            for (x, y) in sa.iter().zip(&sb) {
                assert_eq!(x.coords(), y.coords());
            }
        }
    }

    #[test]
    fn direct_dynamic_counts_stationary() {
        let grid = [0.0, 0.5, 1.0];
        let n = 100.0;
        let reps = 300;
        let mut sums = [0.0f64; 3];
        for seed in 0..reps as u64 {
            let snaps = sample_direct_dynamic(&params(n, 1.0, 0.1, seed), &grid).unwrap();
            for (i, s) in snaps.iter().enumerate() {
                sums[i] += s.len() as f64;
            }
        }
        for (i, s) in sums.iter().enumerate() {
            let mean = s / reps as f64;
            let se = (n / reps as f64).sqrt();
            assert!((mean - n).abs() < 4.0 * se, "grid point {i}: mean {mean}");
        }
    }

    #[test]
    fn direct_dynamic_validates_grid() {
        let p = params(10.0, 1.0, 0.0, 4);
        assert!(sample_direct_dynamic(&p, &[]).is_err());
        assert!(sample_direct_dynamic(&p, &[0.2, 0.1]).is_err());
        assert!(sample_direct_dynamic(&p, &[0.5, 1.5]).is_err());
        assert!(SimParams { n: 0.0, ..p }.validate().is_err());
    }
}
