//! Empirical estimation from replicated trajectories: lag covariances, the
//! integrated-process statistics, and distributional diagnostics.
//!
//! A batch holds the observable evaluated on a common time grid across
//! independent replicates. Replicates use derived seed streams so the batch
//! is reproducible and independent of the parallel schedule; all uncertainty
//! is quantified at replicate level (replicates are iid, snapshots within a
//! replicate are not).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::functional::{evaluate_f_coords, InteractionFunctional};
use crate::moments::MomentEstimate;
use crate::process::{direct_dynamic_snapshots, sample_marked_process, SimParams};
use crate::rng::derive_seed;

/// Which of the two distributionally equivalent simulators generates the
/// trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimulatorKind {
    Marked,
    Direct,
}

/// The observable on a common grid across replicates (row-major:
/// `values[rep * grid.len() + t]`).
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryBatch {
    pub params: SimParams,
    pub grid: Vec<f64>,
    pub replicates: usize,
    pub values: Vec<f64>,
}

impl TrajectoryBatch {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.grid.len()..(i + 1) * self.grid.len()]
    }

    /// All replicate values at one grid index.
    pub fn column(&self, t: usize) -> Vec<f64> {
        (0..self.replicates)
            .map(|i| self.values[i * self.grid.len() + t])
            .collect()
    }

    /// Uniform grid spacing; errors if the grid is not equispaced.
    pub fn spacing(&self) -> Result<f64> {
        if self.grid.len() < 2 {
            return Err(Error::invalid("grid", "need at least two snapshots"));
        }
        let h = self.grid[1] - self.grid[0];
        for w in self.grid.windows(2) {
            if ((w[1] - w[0]) - h).abs() > 1e-9 {
                return Err(Error::invalid("grid", "spacing is not uniform"));
            }
        }
        Ok(h)
    }
}

fn validate_grid(params: &SimParams, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid("grid", "must be nonempty"));
    }
    for w in grid.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::invalid("grid", "must be strictly increasing"));
        }
    }
    if grid[0] < 0.0 || *grid.last().unwrap() > params.t_horizon {
        return Err(Error::TimeOutOfRange {
            t: *grid.last().unwrap(),
            t_max: params.t_horizon,
        });
    }
    Ok(())
}

/// Simulate `replicates` independent trajectories of the observable on the
/// grid. Replicate `i` uses the seed stream `derive_seed(params.seed, 1+i)`,
/// so results are byte-identical for a given root seed regardless of thread
/// count.
pub fn simulate_batch(
    params: &SimParams,
    fnl: &InteractionFunctional,
    r: f64,
    grid: &[f64],
    replicates: usize,
    kind: SimulatorKind,
) -> Result<TrajectoryBatch> {
    params.validate()?;
    validate_grid(params, grid)?;
    if params.k != fnl.k() {
        return Err(Error::invalid("k", "functional order differs from params.k"));
    }
    if replicates == 0 {
        return Err(Error::invalid("replicates", "must be >= 1"));
    }
    let rows: Result<Vec<Vec<f64>>> = (0..replicates)
        .into_par_iter()
        .map(|i| {
            let mut rp = params.clone();
            rp.seed = derive_seed(params.seed, 1 + i as u64);
            match kind {
                SimulatorKind::Marked => {
                    let mut proc = sample_marked_process(&rp)?;
                    let mut coords = Vec::new();
                    grid.iter()
                        .map(|&t| {
                            proc.snapshot_coords(t, &mut coords)?;
                            evaluate_f_coords(&coords, rp.d, fnl, r)
                        })
                        .collect()
                }
                SimulatorKind::Direct => {
                    let snaps = direct_dynamic_snapshots(&rp, grid)?;
                    snaps
                        .iter()
                        .map(|coords| evaluate_f_coords(coords, rp.d, fnl, r))
                        .collect()
                }
            }
        })
        .collect();
    let mut values = Vec::with_capacity(replicates * grid.len());
    for row in rows? {
        values.extend(row);
    }
    Ok(TrajectoryBatch {
        params: params.clone(),
        grid: grid.to_vec(),
        replicates,
        values,
    })
}

/// How to center and scale the observable before forming covariances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Normalization {
    /// Exact moments from the closed-form formulas.
    Theoretical { mean: f64, var: f64 },
    /// Grand mean and grand variance of the batch itself.
    Empirical,
}

fn resolve_norm(batch: &TrajectoryBatch, norm: &Normalization) -> Result<(f64, f64)> {
    match *norm {
        Normalization::Theoretical { mean, var } => {
            if !(var > 0.0) {
                return Err(Error::invalid("var", "must be positive"));
            }
            Ok((mean, var))
        }
        Normalization::Empirical => {
            let n = batch.values.len() as f64;
            let mean = batch.values.iter().sum::<f64>() / n;
            let var = batch.values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
            if !(var > 0.0) {
                return Err(Error::invalid("var", "batch is degenerate"));
            }
            Ok((mean, var))
        }
    }
}

const MIN_REPLICATES: usize = 30;

fn check_replicates(batch: &TrajectoryBatch) -> Result<()> {
    if batch.replicates < MIN_REPLICATES {
        return Err(Error::InsufficientReplicates {
            need: MIN_REPLICATES,
            got: batch.replicates,
        });
    }
    Ok(())
}

fn lag_offset(h: f64, lag: f64) -> Result<usize> {
    let off = lag / h;
    let rounded = off.round();
    if (off - rounded).abs() > 1e-6 || rounded < 0.0 {
        return Err(Error::invalid(
            "lag",
            format!("{lag} is not a nonnegative multiple of the grid spacing {h}"),
        ));
    }
    Ok(rounded as usize)
}

/// Per-replicate average of lagged products of the normalized observable.
fn replicate_lag_products(row: &[f64], mean: f64, var: f64, off: usize) -> f64 {
    let m = row.len() - off;
    let mut s = 0.0;
    for t in 0..m {
        s += (row[t] - mean) * (row[t + off] - mean);
    }
    s / (m as f64 * var)
}

/// A normalized covariance estimate at one lag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagCovariance {
    pub lag: f64,
    pub value: f64,
    pub stderr: f64,
}

/// Normalized lag covariance, averaged over all grid pairs at each lag;
/// standard errors from the spread across replicates.
pub fn normalized_covariance(
    batch: &TrajectoryBatch,
    lags: &[f64],
    norm: &Normalization,
) -> Result<Vec<LagCovariance>> {
    check_replicates(batch)?;
    let h = batch.spacing()?;
    let (mean, var) = resolve_norm(batch, norm)?;
    let mut out = Vec::with_capacity(lags.len());
    for &lag in lags {
        let off = lag_offset(h, lag)?;
        if off >= batch.grid.len() {
            return Err(Error::invalid("lag", format!("{lag} exceeds the grid span")));
        }
        let per_rep: Vec<f64> = (0..batch.replicates)
            .map(|i| replicate_lag_products(batch.row(i), mean, var, off))
            .collect();
        let r = per_rep.len() as f64;
        let m = per_rep.iter().sum::<f64>() / r;
        let sd2 = per_rep.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (r - 1.0);
        out.push(LagCovariance {
            lag,
            value: m,
            stderr: (sd2 / r).sqrt(),
        });
    }
    Ok(out)
}

/// Trapezoidal rule on equispaced samples.
fn trapezoid(values: &[f64], h: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let inner: f64 = values[1..values.len() - 1].iter().sum();
    h * (0.5 * values[0] + inner + 0.5 * values[values.len() - 1])
}

/// The integrated-covariance normalization: the integral of the normalized
/// lag covariance over one time unit, by the trapezoidal rule on the grid.
pub fn estimate_mn(batch: &TrajectoryBatch, norm: &Normalization) -> Result<MomentEstimate> {
    check_replicates(batch)?;
    let h = batch.spacing()?;
    let (mean, var) = resolve_norm(batch, norm)?;
    let span = batch.grid.last().unwrap() - batch.grid[0];
    if span < 1.0 - 1e-9 {
        return Err(Error::invalid("grid", "integration needs a span of at least 1"));
    }
    let m = (1.0 / h).round() as usize;
    let per_rep: Vec<f64> = (0..batch.replicates)
        .map(|i| {
            let row = batch.row(i);
            let covs: Vec<f64> = (0..=m)
                .map(|off| replicate_lag_products(row, mean, var, off))
                .collect();
            trapezoid(&covs, h)
        })
        .collect();
    let r = per_rep.len() as f64;
    let mv = per_rep.iter().sum::<f64>() / r;
    let sd2 = per_rep.iter().map(|x| (x - mv) * (x - mv)).sum::<f64>() / (r - 1.0);
    Ok(MomentEstimate {
        value: mv,
        stderr: (sd2 / r).sqrt(),
        samples: per_rep.len() as u64,
    })
}

fn grid_index(batch: &TrajectoryBatch, t: f64) -> Result<usize> {
    batch
        .grid
        .iter()
        .position(|&g| (g - t).abs() < 1e-9)
        .ok_or(Error::invalid("t", format!("{t} is not a grid time")))
}

/// Covariance of the integrated normalized process
/// `I(t) = int_0^t (f(s) - mean) / sqrt(2 M var) ds` between two grid
/// times, with `M` estimated from the same batch.
pub fn integrated_cov(
    batch: &TrajectoryBatch,
    t1: f64,
    t2: f64,
    norm: &Normalization,
) -> Result<MomentEstimate> {
    check_replicates(batch)?;
    let h = batch.spacing()?;
    let (mean, var) = resolve_norm(batch, norm)?;
    let mn = estimate_mn(batch, norm)?.value;
    if !(mn > 0.0) {
        return Err(Error::invalid("mn", "estimated normalization is not positive"));
    }
    let i1 = grid_index(batch, t1)?;
    let i2 = grid_index(batch, t2)?;
    let scale = (2.0 * mn * var).sqrt();
    let pairs: Vec<(f64, f64)> = (0..batch.replicates)
        .map(|i| {
            let row = batch.row(i);
            let f_bar: Vec<f64> = row.iter().map(|x| (x - mean) / scale).collect();
            (trapezoid(&f_bar[..=i1], h), trapezoid(&f_bar[..=i2], h))
        })
        .collect();
    let r = pairs.len() as f64;
    let m1 = pairs.iter().map(|p| p.0).sum::<f64>() / r;
    let m2 = pairs.iter().map(|p| p.1).sum::<f64>() / r;
    let prods: Vec<f64> = pairs.iter().map(|p| (p.0 - m1) * (p.1 - m2)).collect();
    let c = prods.iter().sum::<f64>() / (r - 1.0);
    let sd2 = prods.iter().map(|x| (x - c) * (x - c)).sum::<f64>() / (r - 1.0);
    Ok(MomentEstimate {
        value: c,
        stderr: (sd2 / r).sqrt(),
        samples: pairs.len() as u64,
    })
}

/// Mean and variance of an iid sample, each with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStats {
    pub mean: f64,
    pub mean_stderr: f64,
    pub var: f64,
    pub var_stderr: f64,
    pub n: usize,
}

pub fn summary_stats(xs: &[f64]) -> Result<SummaryStats> {
    let n = xs.len();
    if n < 2 {
        return Err(Error::InsufficientReplicates { need: 2, got: n });
    }
    let nf = n as f64;
    let mean = xs.iter().sum::<f64>() / nf;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / nf;
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / nf;
    let var = m2 * nf / (nf - 1.0);
    // standard error of the sample variance from the fourth central moment
    let var_se = ((m4 - m2 * m2 * (nf - 3.0) / (nf - 1.0)) / nf).max(0.0).sqrt();
    Ok(SummaryStats {
        mean,
        mean_stderr: (var / nf).sqrt(),
        var,
        var_stderr: var_se,
        n,
    })
}

/// Skewness and excess kurtosis with their Gaussian-null standard errors
/// `sqrt(6/n)` and `sqrt(24/n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianityDiagnostics {
    pub skewness: f64,
    pub skew_stderr: f64,
    pub excess_kurtosis: f64,
    pub kurt_stderr: f64,
    pub n: usize,
}

pub fn gaussianity_diagnostics(xs: &[f64]) -> Result<GaussianityDiagnostics> {
    let n = xs.len();
    if n < 8 {
        return Err(Error::InsufficientReplicates { need: 8, got: n });
    }
    let nf = n as f64;
    let mean = xs.iter().sum::<f64>() / nf;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / nf;
    if !(m2 > 0.0) {
        return Err(Error::invalid("sample", "degenerate"));
    }
    let m3 = xs.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / nf;
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / nf;
    Ok(GaussianityDiagnostics {
        skewness: m3 / m2.powf(1.5),
        skew_stderr: (6.0 / nf).sqrt(),
        excess_kurtosis: m4 / (m2 * m2) - 3.0,
        kurt_stderr: (24.0 / nf).sqrt(),
        n,
    })
}

/// Two-sample Kolmogorov-Smirnov statistic: the sup distance between the
/// empirical CDFs.
pub fn ecdf_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(|x, y| x.partial_cmp(y).unwrap());
    sb.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < sa.len() && j < sb.len() {
        let x = sa[i].min(sb[j]);
        while i < sa.len() && sa[i] <= x {
            i += 1;
        }
        while j < sb.len() && sb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Asymptotic p-value of the two-sample KS statistic (Kolmogorov
/// distribution with the Stephens small-sample correction).
pub fn ks_two_sample_pvalue(a: &[f64], b: &[f64]) -> Result<f64> {
    let d = ecdf_distance(a, b)?;
    let ne = (a.len() * b.len()) as f64 / (a.len() + b.len()) as f64;
    let sn = ne.sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    let mut p = 0.0;
    for j in 1..=100 {
        let jf = j as f64;
        let term = 2.0 * (-1.0f64).powi(j + 1) * (-2.0 * jf * jf * lambda * lambda).exp();
        p += term;
        if term.abs() < 1e-12 {
            break;
        }
    }
    Ok(p.clamp(0.0, 1.0))
}
