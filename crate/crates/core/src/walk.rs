//! Stationary random walks with tensor-valued observables and Monte Carlo
//! estimates of `Pr(‖f(Σ_t g(v_t))‖_(k) ≥ ϑ)`.

use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::GraphMatrices;
use crate::io::fmt17;
use crate::rng::{derive_seed, substream};
use crate::scalar::{log_sum_exp, Real};
use crate::tensor::{random_hermitian, HermitianTensor, PolynomialSpec, TensorShape};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959963984540054;

pub const DEFAULT_TRIALS: usize = 10_000;
pub const DEFAULT_THRESHOLDS: usize = 50;
pub const MIN_TRIALS: usize = 100;

/// Per-vertex observable generators.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservableKind {
    /// An independent `random_hermitian` tensor of norm `r` per vertex.
    #[default]
    Random,
    /// `r·I` at every vertex.
    Constant,
    /// `+r·I` on even vertices, `−r·I` on odd ones.
    Signed,
}

impl ObservableKind {
    pub fn name(self) -> &'static str {
        match self {
            ObservableKind::Random => "random",
            ObservableKind::Constant => "constant",
            ObservableKind::Signed => "signed",
        }
    }
}

/// `g: V → Hermitian tensors` with `‖g(v)‖ ≤ r`.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservableMap<T> {
    assignments: Vec<HermitianTensor<T>>,
    bound_r: T,
    shape: TensorShape,
}

impl<T: Real> ObservableMap<T> {
    pub fn new(assignments: Vec<HermitianTensor<T>>, bound_r: T) -> Result<Self> {
        let Some(first) = assignments.first() else {
            return Err(Error::precondition("observable map needs at least one vertex"));
        };
        if !(bound_r > T::zero()) || !bound_r.is_finite() {
            return Err(Error::precondition("observable bound r must be positive"));
        }
        let shape = first.shape().clone();
        let slack = T::one() + T::lit(1e-12);
        for (i, g) in assignments.iter().enumerate() {
            if g.shape() != &shape {
                return Err(Error::ShapeMismatch(format!(
                    "observable at vertex {i} has shape {}, expected {shape}",
                    g.shape()
                )));
            }
            let norm = g.spectral_norm()?;
            if norm > bound_r * slack {
                return Err(Error::precondition(format!(
                    "observable at vertex {i} has spectral norm {norm} > r = {bound_r}"
                )));
            }
        }
        Ok(ObservableMap {
            assignments,
            bound_r,
            shape,
        })
    }

    pub fn generate(kind: ObservableKind, shape: &TensorShape, n: usize, r: T, seed: u64) -> Result<Self> {
        let id = HermitianTensor::identity(shape);
        let assignments = (0..n)
            .map(|i| match kind {
                ObservableKind::Random => random_hermitian(shape, r, derive_seed(seed, "observable", i as u64)),
                ObservableKind::Constant => Ok(id.scale(r)),
                ObservableKind::Signed => Ok(id.scale(if i % 2 == 0 { r } else { -r })),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(assignments, r)
    }

    /// Subtracts `Σ_i π_i g(v_i)`. The bound becomes the largest norm after
    /// centring, which can reach `2r`.
    pub fn centered(&self, pi: &[T]) -> Result<Self> {
        if pi.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: pi.len(),
            });
        }
        let mut mean = HermitianTensor::diagonal(&self.shape, &vec![T::zero(); self.shape.total()])?;
        for (g, &p) in self.assignments.iter().zip(pi) {
            mean = mean.add(&g.scale(p))?;
        }
        let neg = mean.scale(-T::one());
        let assignments = self.assignments.iter().map(|g| g.add(&neg)).collect::<Result<Vec<_>>>()?;
        let mut bound = T::zero();
        for g in &assignments {
            bound = bound.max(g.spectral_norm()?);
        }
        Self::new(assignments, bound.max(T::min_positive_value()))
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn bound_r(&self) -> T {
        self.bound_r
    }

    pub fn shape(&self) -> &TensorShape {
        &self.shape
    }

    pub fn get(&self, vertex: usize) -> &HermitianTensor<T> {
        &self.assignments[vertex]
    }

    /// `Σ_t g(v_t)`.
    pub fn walk_sum(&self, walk: &[usize]) -> Result<HermitianTensor<T>> {
        let mut acc = HermitianTensor::diagonal(&self.shape, &vec![T::zero(); self.shape.total()])?;
        for &v in walk {
            acc = acc.add(&self.assignments[v])?;
        }
        Ok(acc)
    }
}

/// `π_i = d_i / Σ_j d_j`.
pub fn stationary_distribution<T: Real>(m: &GraphMatrices<T>) -> Result<Vec<T>> {
    m.check_connected()?;
    if let Some(vertex) = m.degrees.iter().position(|&d| !(d > T::zero())) {
        return Err(Error::IsolatedVertex { vertex });
    }
    let total = m.volume();
    Ok(m.degrees.iter().map(|&d| d / total).collect())
}

fn cumulative<T: Real>(xs: impl Iterator<Item = T>) -> Vec<f64> {
    let mut acc = 0.0;
    xs.map(|x| {
        acc += x.as_f64();
        acc
    })
    .collect()
}

/// Index `i` with `cdf[i-1] ≤ u·total < cdf[i]`, skipping zero-mass entries.
fn invert(cdf: &[f64], u: f64) -> usize {
    let target = u * cdf[cdf.len() - 1];
    cdf.partition_point(|&c| c <= target).min(cdf.len() - 1)
}

/// Precomputed inverse-CDF tables for the stationary law and each row of `P`.
#[derive(Clone, Debug)]
pub struct WalkSampler {
    start: Vec<f64>,
    rows: Vec<Vec<f64>>,
}

impl WalkSampler {
    pub fn new<T: Real>(m: &GraphMatrices<T>) -> Result<Self> {
        let pi = stationary_distribution(m)?;
        Ok(WalkSampler {
            start: cumulative(pi.into_iter()),
            rows: (0..m.len()).map(|i| cumulative(m.transition.row(i).iter().copied())).collect(),
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.start.len()
    }

    /// `v_1 ~ π`, then `v_{t+1} ~ P(v_t, ·)`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, walk: &mut [usize]) {
        let mut v = invert(&self.start, rng.random::<f64>());
        for (t, slot) in walk.iter_mut().enumerate() {
            if t > 0 {
                v = invert(&self.rows[v], rng.random::<f64>());
            }
            *slot = v;
        }
    }

    pub fn sample(&self, k: usize, seed: u64) -> Vec<usize> {
        let mut walk = vec![0; k];
        self.sample_into(&mut substream(seed, "walk", 0), &mut walk);
        walk
    }
}

/// A stationary walk `v_1..v_K`.
pub fn sample_walk<T: Real>(m: &GraphMatrices<T>, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(Error::precondition("walk length K must be at least 1"));
    }
    Ok(WalkSampler::new(m)?.sample(k, seed))
}

/// Fraction of time spent at each vertex along one walk of length `k`.
pub fn visit_frequencies<T: Real>(m: &GraphMatrices<T>, k: usize, seed: u64) -> Result<Vec<f64>> {
    let walk = sample_walk(m, k, seed)?;
    let mut counts = vec![0usize; m.len()];
    for v in walk {
        counts[v] += 1;
    }
    Ok(counts.into_iter().map(|c| c as f64 / k as f64).collect())
}

/// `‖f(Σ_t g(v_t))‖_(k)`.
///
/// `f(H)` has eigenvalues `f(λ_i)`, so the Ky Fan norm is the sum of the `k`
/// largest `|f(λ_i)|`; no eigenvectors are formed.
pub fn walk_statistic<T: Real>(walk: &[usize], obs: &ObservableMap<T>, p: &PolynomialSpec<T>, k: usize) -> Result<T> {
    let sum = obs.walk_sum(walk)?;
    let n = obs.shape().total();
    if k == 0 || k > n {
        return Err(Error::precondition(format!("Ky Fan index k = {k} must lie in 1..={n}")));
    }
    let mut mapped: Vec<T> = sum.eigenvalues()?.into_iter().map(|l| p.eval(l).abs()).collect();
    mapped.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    Ok(mapped[..k].iter().copied().sum())
}

/// 95% Wilson score interval for `successes / trials`.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let low = if successes == 0 { 0.0 } else { (center - half).max(0.0).min(p) };
    let high = if successes == trials { 1.0 } else { (center + half).min(1.0).max(p) };
    (low, high)
}

/// `count` evenly spaced thresholds over `[0, K·r·f(1)]`.
pub fn default_thresholds<T: Real>(k: usize, r: T, p: &PolynomialSpec<T>, count: usize) -> Vec<T> {
    let top = T::from_usize_lossy(k) * r * p.eval(T::one());
    match count {
        0 => vec![],
        1 => vec![T::zero()],
        _ => (0..count)
            .map(|i| top * T::from_usize_lossy(i) / T::from_usize_lossy(count - 1))
            .collect(),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

/// Inputs of a tail estimate other than the graph and observables.
#[derive(Clone, Debug, PartialEq)]
pub struct TailConfig<T> {
    pub walk_length: usize,
    pub trials: usize,
    pub thresholds: Vec<T>,
    pub ky_fan_k: usize,
    pub seed: u64,
}

/// Exceedance frequencies with 95% Wilson intervals.
#[derive(Clone, Debug, PartialEq)]
pub struct TailEstimate<T> {
    pub thresholds: Vec<T>,
    pub counts: Vec<usize>,
    pub probabilities: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
    pub trials: usize,
    pub walk_length: usize,
    pub ky_fan_k: usize,
}

/// Statistic of every trial, in trial order. Trial `t` uses its own
/// substream, so the two execution modes agree bit for bit.
pub fn trial_statistics<T: Real>(
    m: &GraphMatrices<T>,
    obs: &ObservableMap<T>,
    p: &PolynomialSpec<T>,
    cfg: &TailConfig<T>,
    exec: Execution,
) -> Result<Vec<T>> {
    if obs.len() != m.len() {
        return Err(Error::DimensionMismatch {
            expected: m.len(),
            found: obs.len(),
        });
    }
    if cfg.walk_length == 0 {
        return Err(Error::precondition("walk length K must be at least 1"));
    }
    let sampler = WalkSampler::new(m)?;
    let one = |t: usize| -> Result<T> {
        let mut walk = vec![0; cfg.walk_length];
        sampler.sample_into(&mut substream(cfg.seed, "walk-trial", t as u64), &mut walk);
        walk_statistic(&walk, obs, p, cfg.ky_fan_k)
    };
    match exec {
        Execution::Sequential => (0..cfg.trials).map(one).collect(),
        Execution::Parallel => (0..cfg.trials).into_par_iter().map(one).collect(),
    }
}

pub fn estimate_tail<T: Real>(
    m: &GraphMatrices<T>,
    obs: &ObservableMap<T>,
    p: &PolynomialSpec<T>,
    cfg: &TailConfig<T>,
    exec: Execution,
) -> Result<TailEstimate<T>> {
    if cfg.trials < MIN_TRIALS {
        return Err(Error::precondition(format!("trials must be at least {MIN_TRIALS}")));
    }
    if cfg.thresholds.windows(2).any(|w| !(w[0] <= w[1])) || cfg.thresholds.iter().any(|x| x.is_nan()) {
        return Err(Error::precondition("thresholds must be ascending"));
    }
    let stats = trial_statistics(m, obs, p, cfg, exec)?;
    Ok(tail_from_statistics(&stats, cfg))
}

pub fn tail_from_statistics<T: Real>(stats: &[T], cfg: &TailConfig<T>) -> TailEstimate<T> {
    let trials = stats.len();
    let counts: Vec<usize> = cfg
        .thresholds
        .iter()
        .map(|&th| stats.iter().filter(|&&s| s >= th).count())
        .collect();
    let (ci_low, ci_high) = counts.iter().map(|&c| wilson_interval(c, trials)).unzip();
    TailEstimate {
        thresholds: cfg.thresholds.clone(),
        probabilities: counts.iter().map(|&c| c as f64 / trials as f64).collect(),
        counts,
        ci_low,
        ci_high,
        trials,
        walk_length: cfg.walk_length,
        ky_fan_k: cfg.ky_fan_k,
    }
}

impl<T: Real> TailEstimate<T> {
    /// `theta,prob,ci_low,ci_high,trials,K,k`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta,prob,ci_low,ci_high,trials,K,k\n");
        for i in 0..self.thresholds.len() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                fmt17(self.thresholds[i].as_f64()),
                fmt17(self.probabilities[i]),
                fmt17(self.ci_low[i]),
                fmt17(self.ci_high[i]),
                self.trials,
                self.walk_length,
                self.ky_fan_k
            );
        }
        out
    }
}

/// Outcome of the numerical spot check of `f(exp(tΣ)) ⪰ exp(t·f(Σ))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assumption3Report {
    pub walks_checked: usize,
    pub t_values: Vec<f64>,
    pub checks: usize,
    pub violations: usize,
    /// Smallest `ln f(e^{tλ}) − t·f(λ)`, relative to `max(1, |t·f(λ)|)`.
    pub worst_margin: f64,
    pub passed: bool,
}

/// Relative tolerance of the spot check.
pub const ASSUMPTION3_TOL: f64 = 1e-8;

/// `ln f(e^{tλ}) − t·f(λ)` and its scale, in log space.
///
/// Both operators are functions of `Σ`, so they share its eigenbasis and
/// the operator inequality holds iff it holds at every eigenvalue.
fn assumption3_margin(p: &PolynomialSpec<f64>, lambda: f64, t: f64) -> (f64, f64) {
    let terms: Vec<f64> = p
        .coeffs()
        .iter()
        .enumerate()
        .filter(|(_, &a)| a > 0.0)
        .map(|(l, &a)| a.ln() + t * l as f64 * lambda)
        .collect();
    let lhs = p.power() as f64 * log_sum_exp(&terms);
    let rhs = t * p.eval(lambda);
    (lhs - rhs, rhs.abs().max(1.0))
}

/// Checks assumption 3 at every eigenvalue of `Σ g(v_t)` for `walks` sampled
/// walks and each `t` in `t_values`.
pub fn assumption3_spot_check(
    m: &GraphMatrices<f64>,
    obs: &ObservableMap<f64>,
    p: &PolynomialSpec<f64>,
    walk_length: usize,
    walks: usize,
    t_values: &[f64],
    seed: u64,
) -> Result<Assumption3Report> {
    if t_values.iter().any(|&t| !(t > 0.0) || !t.is_finite()) {
        return Err(Error::precondition("spot-check t values must be positive"));
    }
    let sampler = WalkSampler::new(m)?;
    let mut walk = vec![0; walk_length.max(1)];
    let mut checks = 0;
    let mut violations = 0;
    let mut worst = f64::INFINITY;
    for w in 0..walks {
        sampler.sample_into(&mut substream(seed, "assumption3", w as u64), &mut walk);
        for lambda in obs.walk_sum(&walk)?.eigenvalues()? {
            for &t in t_values {
                let (margin, scale) = assumption3_margin(p, lambda, t);
                let rel = margin / scale;
                checks += 1;
                if rel < -ASSUMPTION3_TOL {
                    violations += 1;
                }
                worst = worst.min(rel);
            }
        }
    }
    Ok(Assumption3Report {
        walks_checked: walks,
        t_values: t_values.to_vec(),
        checks,
        violations,
        worst_margin: if checks == 0 { 0.0 } else { worst },
        passed: violations == 0,
    })
}

/// `count` geometrically spaced values in `[lo, hi]`.
pub fn geometric_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![lo],
        _ => (0..count)
            .map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64))
            .collect(),
    }
}
