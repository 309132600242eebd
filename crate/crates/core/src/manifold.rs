//! Analytic manifolds, ε-nets and Voronoi cell measures.
//!
//! Only round spheres `S^n(R) ⊂ R^{n+1}` are built in. Downstream modules see
//! a manifold through the [`Manifold`] trait, so another family (a flat torus,
//! say) only needs a new [`ManifoldFamily`] variant and its trait methods.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{substream, unit_sphere_point};
use crate::scalar::Real;
use crate::special::{sphere_volume, unit_ball_volume};

/// Monte Carlo work is split into batches of this many draws, each with its own substream.
pub const MC_BATCH: usize = 1 << 14;

/// FPS stops at `(1 - NET_SLACK)·ε`; the slack absorbs the candidate pool's fill distance.
pub const NET_SLACK: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifoldFamily {
    Sphere,
}

/// Geometric constants of a manifold.
#[derive(Clone, Debug, PartialEq)]
pub struct ManifoldDescriptor<T> {
    pub family: ManifoldFamily,
    /// Intrinsic dimension `n`.
    pub dim: usize,
    pub radius: T,
    pub diameter: T,
    pub injectivity_radius: T,
    /// Sectional curvature bound `K_M`.
    pub curvature_bound: T,
    pub total_volume: T,
}

impl<T: Real> ManifoldDescriptor<T> {
    /// `S^dim(radius)`.
    pub fn sphere(dim: usize, radius: T) -> Result<Self> {
        if dim == 0 {
            return Err(Error::precondition("sphere dimension must be at least 1"));
        }
        if !(radius > T::zero()) || !radius.is_finite() {
            return Err(Error::precondition("sphere radius must be positive and finite"));
        }
        Ok(ManifoldDescriptor {
            family: ManifoldFamily::Sphere,
            dim,
            radius,
            diameter: T::PI() * radius,
            injectivity_radius: T::PI() * radius,
            curvature_bound: T::one() / (radius * radius),
            total_volume: sphere_volume(dim, radius),
        })
    }
}

/// Operations a manifold family must supply.
pub trait Manifold<T: Real>: Sync {
    fn descriptor(&self) -> &ManifoldDescriptor<T>;

    /// Length of the coordinate vector of a point.
    fn ambient_dim(&self) -> usize;

    /// Geodesic distance `d_g(x, y)`.
    fn distance(&self, x: &[T], y: &[T]) -> T;

    /// Monotone surrogate of the distance (smaller is closer) for nearest-vertex scans.
    fn proximity(&self, x: &[T], y: &[T]) -> T {
        self.distance(x, y)
    }

    /// Converts a distance threshold to the `proximity` scale.
    fn proximity_threshold(&self, distance: T) -> T {
        distance
    }

    /// Draws a point from the normalised volume measure.
    fn sample_uniform(&self, rng: &mut crate::rng::StreamRng, out: &mut [T]);

    /// `i`-th Laplace–Beltrami eigenvalue (`i ≥ 1`).
    fn laplace_beltrami_eigenvalue(&self, i: usize, scale_by_radius: bool) -> Result<T>;
}

impl<T: Real> Manifold<T> for ManifoldDescriptor<T> {
    fn descriptor(&self) -> &ManifoldDescriptor<T> {
        self
    }

    fn ambient_dim(&self) -> usize {
        match self.family {
            ManifoldFamily::Sphere => self.dim + 1,
        }
    }

    fn distance(&self, x: &[T], y: &[T]) -> T {
        match self.family {
            // R·arccos(<x,y>/R²) written as 2R·atan2(|x−y|, |x+y|), which
            // stays accurate for nearly coincident and nearly antipodal pairs.
            ManifoldFamily::Sphere => {
                let (mut diff, mut sum) = (T::zero(), T::zero());
                for (&a, &b) in x.iter().zip(y) {
                    diff = diff + (a - b) * (a - b);
                    sum = sum + (a + b) * (a + b);
                }
                T::lit(2.0) * self.radius * diff.sqrt().atan2(sum.sqrt())
            }
        }
    }

    fn proximity(&self, x: &[T], y: &[T]) -> T {
        match self.family {
            // arccos is decreasing, so -<x,y> orders points like the geodesic distance.
            ManifoldFamily::Sphere => -dot(x, y),
        }
    }

    fn proximity_threshold(&self, distance: T) -> T {
        match self.family {
            ManifoldFamily::Sphere => -(self.radius * self.radius) * (distance / self.radius).cos(),
        }
    }

    fn sample_uniform(&self, rng: &mut crate::rng::StreamRng, out: &mut [T]) {
        match self.family {
            ManifoldFamily::Sphere => {
                let mut buf = vec![0.0f64; out.len()];
                unit_sphere_point(rng, &mut buf);
                for (o, b) in out.iter_mut().zip(buf) {
                    *o = T::lit(b) * self.radius;
                }
            }
        }
    }

    fn laplace_beltrami_eigenvalue(&self, i: usize, scale_by_radius: bool) -> Result<T> {
        if i == 0 {
            return Err(Error::precondition("eigenvalue index is 1-based"));
        }
        match self.family {
            ManifoldFamily::Sphere => {
                let k = T::from_usize_lossy(i - 1);
                let value = k * (k + T::from_usize_lossy(self.dim) - T::one());
                Ok(if scale_by_radius {
                    value / (self.radius * self.radius)
                } else {
                    value
                })
            }
        }
    }
}

#[inline]
fn dot<T: Real>(x: &[T], y: &[T]) -> T {
    x.iter().zip(y).fold(T::zero(), |acc, (&a, &b)| acc + a * b)
}

/// A vertex with the measure of its Voronoi cell.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplePoint<T> {
    pub coords: Vec<T>,
    pub measure: T,
}

/// An ε-net on a manifold together with per-vertex measures.
#[derive(Clone, Debug, PartialEq)]
pub struct ManifoldSampling<T> {
    pub descriptor: ManifoldDescriptor<T>,
    pub points: Vec<SamplePoint<T>>,
    pub epsilon: T,
    pub coverage_verified: bool,
}

impl<T: Real> ManifoldSampling<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn measures(&self) -> Vec<T> {
        self.points.iter().map(|p| p.measure).collect()
    }

    pub fn coords(&self) -> Vec<&[T]> {
        self.points.iter().map(|p| p.coords.as_slice()).collect()
    }
}

/// Geodesic distance between two sample points.
pub fn geodesic_distance<T: Real>(x: &SamplePoint<T>, y: &SamplePoint<T>, d: &ManifoldDescriptor<T>) -> Result<T> {
    let amb = d.ambient_dim();
    for p in [x, y] {
        if p.coords.len() != amb {
            return Err(Error::DimensionMismatch {
                expected: amb,
                found: p.coords.len(),
            });
        }
    }
    Ok(d.distance(&x.coords, &y.coords))
}

/// `λ_{M,i} = (i−1)(i+n−2)`, optionally divided by `R²`.
///
/// The closed form holds for every `i ≥ 1` as the list of distinct sphere
/// eigenvalues, not only for `i ≤ n`.
pub fn laplace_beltrami_eigenvalue<T: Real>(i: usize, d: &ManifoldDescriptor<T>, scale_by_radius: bool) -> Result<T> {
    d.laplace_beltrami_eigenvalue(i, scale_by_radius)
}

/// Number of independent spherical harmonics of degree `k` on `S^n`.
pub fn sphere_eigen_multiplicity(n: usize, k: usize) -> usize {
    fn binom(a: usize, b: usize) -> usize {
        if b > a {
            return 0;
        }
        let b = b.min(a - b);
        (0..b).fold(1usize, |acc, j| acc * (a - j) / (j + 1))
    }
    match k {
        0 => 1,
        _ => binom(n + k, n) - if k >= 2 { binom(n + k - 2, n) } else { 0 },
    }
}

/// First `count` Laplace–Beltrami eigenvalues of the sphere, ascending and
/// repeated according to multiplicity (`S¹`: 0, 1, 1, 4, 4, …).
pub fn sphere_spectrum_with_multiplicity<T: Real>(
    d: &ManifoldDescriptor<T>,
    count: usize,
    scale_by_radius: bool,
) -> Result<Vec<T>> {
    let mut out = Vec::with_capacity(count);
    let mut i = 1;
    while out.len() < count {
        let value = d.laplace_beltrami_eigenvalue(i, scale_by_radius)?;
        let mult = sphere_eigen_multiplicity(d.dim, i - 1);
        out.extend(std::iter::repeat_n(value, mult.min(count - out.len())));
        i += 1;
    }
    Ok(out)
}

/// Options for [`sample_epsilon_net`].
#[derive(Clone, Debug)]
pub struct NetOptions {
    /// Candidate pool size; defaults to `max(10⁵, 100/ε^dim)`.
    pub pool_size: Option<usize>,
    /// Fresh probes used to set `coverage_verified`.
    pub probes: usize,
}

impl Default for NetOptions {
    fn default() -> Self {
        NetOptions {
            pool_size: None,
            probes: 100_000,
        }
    }
}

/// Default candidate pool size.
pub fn default_pool_size(dim: usize, epsilon: f64) -> usize {
    let scaled = (100.0 / epsilon.powi(dim as i32)).ceil();
    (scaled.min(1e12) as usize).max(100_000)
}

/// Heuristic fill distance of `n` uniform points: the radius at which a
/// geodesic ball is expected to hold `ln n` of them.
fn fill_distance(dim: usize, volume: f64, n: usize) -> f64 {
    let n = n.max(2) as f64;
    (volume * n.ln() / (n * unit_ball_volume::<f64>(dim))).powf(1.0 / dim as f64)
}

/// Smallest pool whose fill distance is at most `NET_SLACK·ε`.
pub fn required_pool_size(dim: usize, volume: f64, epsilon: f64) -> usize {
    let target = NET_SLACK * epsilon;
    let mut n = 1024usize;
    while fill_distance(dim, volume, n) > target && n < (1usize << 50) {
        n *= 2;
    }
    // Bisect down between n/2 and n.
    let (mut lo, mut hi) = (n / 2, n);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if fill_distance(dim, volume, mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Uniform candidate points, generated in seeded batches.
pub fn candidate_pool<T: Real, M: Manifold<T>>(m: &M, size: usize, seed: u64) -> Vec<Vec<T>> {
    draw_uniform(m, size, seed, "net-pool")
}

fn draw_uniform<T: Real, M: Manifold<T>>(m: &M, size: usize, seed: u64, label: &str) -> Vec<Vec<T>> {
    let amb = m.ambient_dim();
    let batches = size.div_ceil(MC_BATCH);
    (0..batches)
        .into_par_iter()
        .flat_map_iter(|b| {
            let mut rng = substream(seed, label, b as u64);
            let len = MC_BATCH.min(size - b * MC_BATCH);
            (0..len)
                .map(|_| {
                    let mut p = vec![T::zero(); amb];
                    m.sample_uniform(&mut rng, &mut p);
                    p
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Farthest-point ε-net over a uniform candidate pool.
///
/// Measures are left at zero; call [`estimate_voronoi_measures`] next.
pub fn sample_epsilon_net<T: Real>(
    d: &ManifoldDescriptor<T>,
    epsilon: T,
    seed: u64,
    opts: &NetOptions,
) -> Result<ManifoldSampling<T>> {
    if !(epsilon > T::zero()) || !(epsilon < d.diameter) {
        return Err(Error::precondition(format!(
            "epsilon must lie in (0, diameter = {}), got {}",
            d.diameter, epsilon
        )));
    }
    let eps = epsilon.as_f64();
    let pool_size = opts.pool_size.unwrap_or_else(|| default_pool_size(d.dim, eps));
    let required = required_pool_size(d.dim, d.total_volume.as_f64(), eps);
    if pool_size < required {
        return Err(Error::PoolTooSmall {
            epsilon: eps,
            pool: pool_size,
            required,
        });
    }

    let pool = candidate_pool(d, pool_size, seed);
    let target = d.proximity_threshold(epsilon * T::lit(1.0 - NET_SLACK));

    let mut chosen = vec![0usize];
    let mut nearest: Vec<T> = pool.par_iter().map(|p| d.proximity(p, &pool[0])).collect();
    loop {
        let (far, &far_val) = nearest
            .iter()
            .enumerate()
            .fold((0, &T::neg_infinity()), |best, cur| if *cur.1 > *best.1 { cur } else { best });
        if far_val <= target {
            break;
        }
        chosen.push(far);
        let v = &pool[far];
        nearest.par_iter_mut().zip(pool.par_iter()).for_each(|(n, p)| {
            let q = d.proximity(p, v);
            if q < *n {
                *n = q;
            }
        });
    }

    let points = chosen
        .into_iter()
        .map(|i| SamplePoint {
            coords: pool[i].clone(),
            measure: T::zero(),
        })
        .collect();
    let mut sampling = ManifoldSampling {
        descriptor: d.clone(),
        points,
        epsilon,
        coverage_verified: false,
    };
    let report = verify_coverage(&sampling, opts.probes.max(1000), seed)?;
    sampling.coverage_verified = report.covered;
    Ok(sampling)
}

/// Equally spaced points on `S¹(R)` with exact cell measures `2πR/n`.
///
/// `coverage_verified` holds iff `epsilon` is at least the covering radius `πR/n`.
pub fn uniform_circle<T: Real>(n: usize, radius: T, epsilon: T) -> Result<ManifoldSampling<T>> {
    if n == 0 {
        return Err(Error::precondition("uniform circle needs at least one point"));
    }
    let descriptor = ManifoldDescriptor::sphere(1, radius)?;
    let step = T::lit(2.0) * T::PI() / T::from_usize_lossy(n);
    let measure = descriptor.total_volume / T::from_usize_lossy(n);
    let points = (0..n)
        .map(|k| {
            let theta = step * T::from_usize_lossy(k);
            SamplePoint {
                coords: vec![radius * theta.cos(), radius * theta.sin()],
                measure,
            }
        })
        .collect();
    Ok(ManifoldSampling {
        descriptor,
        points,
        epsilon,
        coverage_verified: epsilon >= T::PI() * radius / T::from_usize_lossy(n),
    })
}

fn nearest_vertex<T: Real, M: Manifold<T>>(m: &M, vertices: &[&[T]], p: &[T]) -> (usize, T) {
    let mut best = 0;
    let mut best_val = T::infinity();
    for (i, v) in vertices.iter().enumerate() {
        let q = m.proximity(p, v);
        // Strict comparison keeps the lowest index on ties.
        if q < best_val {
            best = i;
            best_val = q;
        }
    }
    (best, best_val)
}

/// Monte Carlo Voronoi measures: `μ_i = vol · count_i / mc_points`.
pub fn estimate_voronoi_measures<T: Real>(
    s: &ManifoldSampling<T>,
    mc_points: usize,
    seed: u64,
) -> Result<ManifoldSampling<T>> {
    let n = s.len();
    if n == 0 {
        return Err(Error::precondition("sampling has no vertices"));
    }
    if mc_points < 10 * n {
        return Err(Error::precondition(format!(
            "mc_points = {mc_points} must be at least 10·N = {}",
            10 * n
        )));
    }
    let d = &s.descriptor;
    let vertices = s.coords();
    let amb = d.ambient_dim();
    let batches = mc_points.div_ceil(MC_BATCH);
    let counts = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(seed, "voronoi", b as u64);
            let len = MC_BATCH.min(mc_points - b * MC_BATCH);
            let mut local = vec![0usize; n];
            let mut p = vec![T::zero(); amb];
            for _ in 0..len {
                d.sample_uniform(&mut rng, &mut p);
                local[nearest_vertex(d, &vertices, &p).0] += 1;
            }
            local
        })
        .reduce(
            || vec![0usize; n],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    if let Some(vertex) = counts.iter().position(|&c| c == 0) {
        return Err(Error::EmptyCell { vertex, mc_points });
    }
    let total = T::from_usize_lossy(mc_points);
    let mut out = s.clone();
    for (p, &c) in out.points.iter_mut().zip(&counts) {
        p.measure = d.total_volume * T::from_usize_lossy(c) / total;
    }
    Ok(out)
}

/// Result of a statistical coverage check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoverageReport<T> {
    pub covered: bool,
    /// Largest probe-to-net geodesic distance observed.
    pub max_gap: T,
}

/// Checks `M ⊂ ∪ B_ε(v_i)` on `probes` uniform probes.
///
/// This is statistical evidence only: a gap smaller than the probe spacing
/// can go unnoticed.
pub fn verify_coverage<T: Real>(s: &ManifoldSampling<T>, probes: usize, seed: u64) -> Result<CoverageReport<T>> {
    if probes < 1000 {
        return Err(Error::precondition("coverage verification needs at least 10³ probes"));
    }
    let d = &s.descriptor;
    let pts = draw_uniform(d, probes, seed, "coverage-probe");
    Ok(verify_coverage_on(s, &pts))
}

/// Coverage check against an explicit probe set (for example the candidate pool).
pub fn verify_coverage_on<T: Real>(s: &ManifoldSampling<T>, probes: &[Vec<T>]) -> CoverageReport<T> {
    let d = &s.descriptor;
    let vertices = s.coords();
    let worst = probes
        .par_iter()
        .map(|p| nearest_vertex(d, &vertices, p).0)
        .zip(probes.par_iter())
        .map(|(i, p)| d.distance(p, vertices[i]))
        .reduce(T::zero, T::max);
    CoverageReport {
        covered: worst <= s.epsilon,
        max_gap: worst,
    }
}
