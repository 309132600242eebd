//! Spectra of `L` and `P`, the spectral gap, the eigenvalue map
//! `λ_P ≈ 1 − λ_L/d_i` with its residuals, and the `Φ_L`/`Φ_U` envelopes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::GraphMatrices;
use crate::io::F17;
use crate::linalg::{Matrix, SymmetricEigen};
use crate::manifold::{Manifold, ManifoldDescriptor, ManifoldFamily};
use crate::scalar::Real;

/// Which non-Perron eigenvalue of `P` defines the gap `λ̄ = 1 − λ_{P,ĩ}`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapConvention {
    /// The second largest eigenvalue, as an ordered real.
    AlgebraicSecond,
    /// The largest `|λ|` over the non-Perron eigenvalues.
    #[default]
    AbsoluteSecond,
}

impl GapConvention {
    pub const ALL: [GapConvention; 2] = [GapConvention::AlgebraicSecond, GapConvention::AbsoluteSecond];

    pub fn name(self) -> &'static str {
        match self {
            GapConvention::AlgebraicSecond => "algebraic_second",
            GapConvention::AbsoluteSecond => "absolute_second",
        }
    }
}

/// Full Laplacian eigen-decomposition, for residual checks.
pub fn laplacian_eigen<T: Real>(m: &GraphMatrices<T>) -> Result<SymmetricEigen<T>> {
    SymmetricEigen::new(&m.laplacian)
}

/// Eigenvalues of `L = D − W`, ascending.
pub fn laplacian_spectrum<T: Real>(m: &GraphMatrices<T>) -> Result<Vec<T>> {
    SymmetricEigen::eigenvalues(&m.laplacian)
}

/// `S^{-1/2}·A·S^{-1/2}` for a positive diagonal `S`.
fn diagonal_similarity<T: Real>(a: &Matrix<T>, s: &[T]) -> Matrix<T> {
    let inv: Vec<T> = s.iter().map(|&x| x.sqrt().recip()).collect();
    Matrix::from_fn(a.rows(), a.cols(), |i, j| inv[i] * a[(i, j)] * inv[j])
}

/// Eigenvalues of `P = D⁻¹W`, descending, via the symmetric matrix
/// `D^{-1/2}·W·D^{-1/2}`.
pub fn transition_spectrum<T: Real>(m: &GraphMatrices<T>) -> Result<Vec<T>> {
    if let Some(vertex) = m.degrees.iter().position(|&d| !(d > T::zero())) {
        return Err(Error::IsolatedVertex { vertex });
    }
    let values = SymmetricEigen::eigenvalues(&diagonal_similarity(&m.weights, &m.degrees))?;
    // The spectrum of a stochastic matrix lies in [−1, 1]; anything outside is rounding.
    Ok(values.into_iter().rev().map(|x| x.max(-T::one()).min(T::one())).collect())
}

/// Eigenvalues of `L x = λ·diag(μ)·x`, ascending.
///
/// `diag(μ)⁻¹L` is the graph operator that approximates the Laplace–Beltrami
/// operator, so these are the values to compare against `λ_M`.
pub fn measure_normalized_spectrum<T: Real>(m: &GraphMatrices<T>) -> Result<Vec<T>> {
    if let Some(i) = m.measures.iter().position(|&x| !(x > T::zero())) {
        return Err(Error::precondition(format!("vertex {i} has non-positive measure")));
    }
    SymmetricEigen::eigenvalues(&diagonal_similarity(&m.laplacian, &m.measures))
}

/// `1 − λ_L / degree`.
pub fn eq7_map<T: Real>(lambda_l: T, degree: T) -> T {
    T::one() - lambda_l / degree
}

/// `|λ_{P,i} − (1 − λ_{L,i}/d_i)|` with `λ_P` descending and `λ_L` ascending
/// paired by rank, and `d_i` the degree of vertex `i`.
pub fn eq7_residuals<T: Real>(m: &GraphMatrices<T>) -> Result<Vec<T>> {
    let l = laplacian_spectrum(m)?;
    let p = transition_spectrum(m)?;
    Ok(residuals_from(&l, &p, &m.degrees))
}

fn residuals_from<T: Real>(l: &[T], p: &[T], degrees: &[T]) -> Vec<T> {
    l.iter()
        .zip(p)
        .zip(degrees)
        .map(|((&ll, &pp), &d)| (pp - eq7_map(ll, d)).abs())
        .collect()
}

fn max_or_zero<T: Real>(xs: &[T]) -> T {
    xs.iter().copied().fold(T::zero(), T::max)
}

/// Sorted spectra, gap and eigenvalue-map diagnostics of one graph.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralSummary<T> {
    pub laplacian_eigs: Vec<T>,
    pub transition_eigs: Vec<T>,
    /// `λ_{P,ĩ}` under `gap_convention`.
    pub second_largest: T,
    /// `λ̄ = 1 − λ_{P,ĩ}`.
    pub gap: T,
    pub eq7_residuals: Vec<T>,
    pub gap_convention: GapConvention,
}

impl<T: Real> SpectralSummary<T> {
    pub fn compute(m: &GraphMatrices<T>, convention: GapConvention) -> Result<Self> {
        if m.len() < 2 {
            return Err(Error::precondition("spectral gap needs at least two vertices"));
        }
        let laplacian_eigs = laplacian_spectrum(m)?;
        let transition_eigs = transition_spectrum(m)?;
        let eq7_residuals = residuals_from(&laplacian_eigs, &transition_eigs, &m.degrees);
        let mut s = SpectralSummary {
            laplacian_eigs,
            transition_eigs,
            second_largest: T::zero(),
            gap: T::zero(),
            eq7_residuals,
            gap_convention: convention,
        };
        s.second_largest = s.second_eigenvalue(convention);
        s.gap = T::one() - s.second_largest;
        Ok(s)
    }

    pub fn second_eigenvalue(&self, convention: GapConvention) -> T {
        let rest = &self.transition_eigs[1..];
        match convention {
            GapConvention::AlgebraicSecond => rest[0],
            GapConvention::AbsoluteSecond => rest.iter().fold(T::zero(), |acc, x| acc.max(x.abs())),
        }
    }

    pub fn gap_for(&self, convention: GapConvention) -> T {
        T::one() - self.second_eigenvalue(convention)
    }

    pub fn eq7_max_residual(&self) -> T {
        max_or_zero(&self.eq7_residuals)
    }
}

/// Spectrum report document.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub laplacian_eigs: Vec<F17>,
    pub transition_eigs: Vec<F17>,
    pub gap_algebraic: F17,
    pub gap_absolute: F17,
    pub eq7_max_residual: F17,
    /// Eigenvalues of `L x = λ diag(μ) x`, in manifold units.
    pub measure_normalized_eigs: Vec<F17>,
}

impl SpectrumReport {
    pub fn new(s: &SpectralSummary<f64>, measure_normalized: &[f64]) -> Self {
        SpectrumReport {
            laplacian_eigs: s.laplacian_eigs.iter().copied().map(F17).collect(),
            transition_eigs: s.transition_eigs.iter().copied().map(F17).collect(),
            gap_algebraic: F17(s.gap_for(GapConvention::AlgebraicSecond)),
            gap_absolute: F17(s.gap_for(GapConvention::AbsoluteSecond)),
            eq7_max_residual: F17(s.eq7_max_residual()),
            measure_normalized_eigs: measure_normalized.iter().copied().map(F17).collect(),
        }
    }

    pub fn from_matrices(m: &GraphMatrices<f64>) -> Result<Self> {
        let s = SpectralSummary::compute(m, GapConvention::default())?;
        Ok(Self::new(&s, &measure_normalized_spectrum(m)?))
    }
}

// ---------------------------------------------------------------------------
// Envelopes
// ---------------------------------------------------------------------------

/// Constants of the envelopes `Φ_{L/U}(λ) = λ ∓ C[(ε/κ + K_M κ²)λ + κλ^{3/2}]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvelopeParams<T> {
    pub c_const: T,
    pub epsilon: T,
    pub kappa: T,
    pub curvature_bound: T,
}

impl<T: Real> EnvelopeParams<T> {
    pub fn new(c_const: T, epsilon: T, kappa: T, curvature_bound: T) -> Result<Self> {
        let p = EnvelopeParams {
            c_const,
            epsilon,
            kappa,
            curvature_bound,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.c_const, self.epsilon, self.kappa, self.curvature_bound]
            .iter()
            .all(|x| x.is_finite());
        if !all_finite {
            return Err(Error::precondition("envelope parameters must be finite"));
        }
        if self.c_const < T::zero() || self.curvature_bound < T::zero() {
            return Err(Error::precondition("envelope C and K_M must be nonnegative"));
        }
        if !(self.epsilon > T::zero() && self.kappa > T::zero()) {
            return Err(Error::precondition("envelope epsilon and kappa must be positive"));
        }
        Ok(())
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.epsilon >= self.kappa {
            w.push(format!(
                "epsilon/kappa = {} >= 1: the envelope's epsilon/kappa term is not small",
                self.epsilon / self.kappa
            ));
        }
        w
    }
}

/// `(ε/κ + K_M κ²)λ + κλ^{3/2}`, the term multiplied by `C`.
pub fn envelope_bracket<T: Real>(lambda_m: T, epsilon: T, kappa: T, curvature_bound: T) -> T {
    (epsilon / kappa + curvature_bound * kappa * kappa) * lambda_m + kappa * lambda_m.powf(T::lit(1.5))
}

fn bracket<T: Real>(lambda_m: T, p: &EnvelopeParams<T>) -> T {
    envelope_bracket(lambda_m, p.epsilon, p.kappa, p.curvature_bound)
}

pub fn phi_lower<T: Real>(lambda_m: T, p: &EnvelopeParams<T>) -> T {
    lambda_m - p.c_const * bracket(lambda_m, p)
}

pub fn phi_upper<T: Real>(lambda_m: T, p: &EnvelopeParams<T>) -> T {
    lambda_m + p.c_const * bracket(lambda_m, p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeSide {
    Lower,
    Upper,
}

impl EnvelopeSide {
    pub fn eval<T: Real>(self, lambda_m: T, p: &EnvelopeParams<T>) -> T {
        match self {
            EnvelopeSide::Lower => phi_lower(lambda_m, p),
            EnvelopeSide::Upper => phi_upper(lambda_m, p),
        }
    }
}

/// `Φ(λ_{M,i})` on `S^n(R)`, with `λ_{M,i}` the `i`-th distinct eigenvalue.
pub fn sphere_phi<T: Real>(i: usize, d: &ManifoldDescriptor<T>, p: &EnvelopeParams<T>, which: EnvelopeSide) -> Result<T> {
    if d.family != ManifoldFamily::Sphere {
        return Err(Error::Unsupported(format!("{:?}", d.family)));
    }
    let k = T::one() / (d.radius * d.radius);
    if (p.curvature_bound - k).abs() > T::lit(1e-12) * k {
        return Err(Error::precondition(format!(
            "curvature bound {} does not match 1/R^2 = {}",
            p.curvature_bound, k
        )));
    }
    let lambda = d.laplace_beltrami_eigenvalue(i, true)?;
    Ok(which.eval(lambda, p))
}

// ---------------------------------------------------------------------------
// Empirical envelope constant
// ---------------------------------------------------------------------------

/// One refinement level: the measured graph spectrum (manifold units) and
/// the manifold spectrum it approximates, paired by rank.
#[derive(Clone, Debug, PartialEq)]
pub struct RefinementLevel<T> {
    pub epsilon: T,
    pub kappa: T,
    pub curvature_bound: T,
    pub graph_eigs: Vec<T>,
    pub manifold_eigs: Vec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopeFit<T> {
    /// Nonnegative least-squares estimate of `C`.
    pub c_const: T,
    pub observations: usize,
    /// Root mean square of `|λ_L − λ_M| − C·bracket`.
    pub rms_residual: T,
    pub degenerate: bool,
    pub warnings: Vec<String>,
}

/// Fits `|λ_{L,i} − λ_{M,i}| ≈ C·bracket_i` over the first `n_eigs` pairs of
/// every level. The estimate is empirical: it describes the supplied graphs
/// and carries no guarantee.
pub fn fit_envelope<T: Real>(levels: &[RefinementLevel<T>], n_eigs: usize) -> Result<EnvelopeFit<T>> {
    if levels.len() < 2 {
        return Err(Error::precondition("envelope fit needs at least two refinement levels"));
    }
    let mut pairs = Vec::new();
    for (k, lv) in levels.iter().enumerate() {
        let take = n_eigs.min(lv.graph_eigs.len()).min(lv.manifold_eigs.len());
        if take < n_eigs {
            return Err(Error::precondition(format!(
                "level {k} has only {take} eigenvalue pairs, {n_eigs} requested"
            )));
        }
        for i in 0..take {
            let x = envelope_bracket(lv.manifold_eigs[i], lv.epsilon, lv.kappa, lv.curvature_bound);
            let y = (lv.graph_eigs[i] - lv.manifold_eigs[i]).abs();
            pairs.push((x, y));
        }
    }
    let sxx: T = pairs.iter().map(|&(x, _)| x * x).sum();
    let sxy: T = pairs.iter().map(|&(x, y)| x * y).sum();
    let mut warnings = Vec::new();
    let mut distinct = 1;
    for (k, lv) in levels.iter().enumerate().skip(1) {
        if !levels[..k].contains(lv) {
            distinct += 1;
        }
    }
    let mut degenerate = false;
    if distinct < 2 {
        degenerate = true;
        warnings.push("all refinement levels are identical; the fit is degenerate".to_string());
    }
    let c_const = if sxx > T::zero() {
        (sxy / sxx).max(T::zero())
    } else {
        degenerate = true;
        warnings.push("every bracket term is zero; C is unidentifiable and reported as 0".to_string());
        T::zero()
    };
    let n = T::from_usize_lossy(pairs.len().max(1));
    let rms_residual = (pairs.iter().map(|&(x, y)| (y - c_const * x).powi(2)).sum::<T>() / n).sqrt();
    Ok(EnvelopeFit {
        c_const,
        observations: pairs.len(),
        rms_residual,
        degenerate,
        warnings,
    })
}
