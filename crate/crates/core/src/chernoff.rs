//! Tail bounds for `‖f(Σ_t g(v_t))‖_(k)` along a stationary walk.
//!
//! The tensor bound, minimised over `t > 0`, is
//!
//! ```text
//! (deg+1)^{s−1} e^{−ϑt} [ a₀K + C(K + √((𝕀−K)/K)) Σ_{l=1}^{deg} a_l
//!     exp(8Kλ̄ + 2(K+8λ̄)·lsr·t + 2(σ(K+8λ̄)·lsr)²·t²) ]
//! ```
//!
//! with `λ̄ = 1 − λ_{P,ĩ}`. Everything is evaluated in log space.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::fmt17;
use crate::manifold::ManifoldDescriptor;
use crate::scalar::{log_sum_exp, Real};
use crate::spectral::{phi_lower, phi_upper, sphere_phi, EnvelopeParams, EnvelopeSide, GapConvention, SpectralSummary};
use crate::tensor::{PolynomialSpec, TensorShape};

/// Log-values above this are reported as a symbolic `+∞`.
pub const LOG_OVERFLOW: f64 = 700.0;

pub const DEFAULT_T_MAX: f64 = 10.0;
pub const DEFAULT_TOL: f64 = 1e-9;
pub const GRID_POINTS: usize = 2000;

/// `2·exp(−c_Ω(1 − λ)Kϑ²)`, the scalar expander bound.
pub fn scalar_expander_bound<T: Real>(k: usize, theta: T, lambda2: T, c_omega: T) -> Result<T> {
    if !(lambda2 >= T::zero() && lambda2 <= T::one()) {
        return Err(Error::precondition("scalar bound needs 0 <= lambda <= 1"));
    }
    if !(c_omega > T::zero()) {
        return Err(Error::precondition("c_omega must be positive"));
    }
    let k = T::from_usize_lossy(k);
    Ok(T::lit(2.0) * (-c_omega * (T::one() - lambda2) * k * theta * theta).exp())
}

/// Parameters of the tensor bound other than `λ̄` and `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundParams<T> {
    /// Walk length `K`.
    pub k: usize,
    pub r: T,
    pub poly: PolynomialSpec<T>,
    /// Assumption-4 constant `C`.
    pub c_env: T,
    pub sigma: T,
    pub shape: TensorShape,
    pub ky_fan_k: usize,
    pub theta: T,
}

impl<T: Real> BoundParams<T> {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::precondition("walk length K must be at least 1"));
        }
        let total = self.shape.total();
        if total < self.k {
            return Err(Error::precondition(format!(
                "K = {} exceeds the tensor dimension {} of shape {}; the bound's radical is undefined",
                self.k, total, self.shape
            )));
        }
        if self.ky_fan_k == 0 || self.ky_fan_k > total {
            return Err(Error::precondition(format!("Ky Fan index must lie in 1..={total}")));
        }
        for (name, v) in [("r", self.r), ("C", self.c_env), ("sigma", self.sigma)] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::precondition(format!("{name} must be positive and finite")));
            }
        }
        if !(self.theta >= T::zero()) || !self.theta.is_finite() {
            return Err(Error::precondition("theta must be finite and nonnegative"));
        }
        Ok(())
    }

    pub fn with_theta(&self, theta: T) -> Self {
        BoundParams { theta, ..self.clone() }
    }

    /// `ln(C·(K + √((𝕀−K)/K)))`.
    fn log_prefactor(&self) -> T {
        let k = T::from_usize_lossy(self.k);
        let total = T::from_usize_lossy(self.shape.total());
        (self.c_env * (k + ((total - k) / k).sqrt())).ln()
    }
}

/// Where `λ̄` came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapKind {
    ExactSpectrum,
    Eq7Formula,
    EnvelopeLower,
    EnvelopeUpper,
}

impl GapKind {
    pub fn name(self) -> &'static str {
        match self {
            GapKind::ExactSpectrum => "exact_spectrum",
            GapKind::Eq7Formula => "eq7_formula",
            GapKind::EnvelopeLower => "envelope_lower",
            GapKind::EnvelopeUpper => "envelope_upper",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapSource {
    pub kind: GapKind,
    pub gap_value: f64,
    /// Free-form provenance: convention, eigenvalue index, envelope inputs.
    pub detail: String,
}

impl GapSource {
    /// Short label used in tables, e.g. `exact_spectrum:absolute_second`.
    pub fn label(&self) -> String {
        if self.detail.is_empty() {
            self.kind.name().to_string()
        } else {
            format!("{}:{}", self.kind.name(), self.detail)
        }
    }
}

/// Natural log of the integrand at `t`.
pub fn log_bound_integrand<T: Real>(t: T, p: &BoundParams<T>, gap: T) -> T {
    let k = T::from_usize_lossy(p.k);
    let s = T::from_usize_lossy(p.poly.power() as usize);
    let deg = p.poly.degree();
    let two = T::lit(2.0);
    let eight = T::lit(8.0);
    let lead = (s - T::one()) * T::from_usize_lossy(deg + 1).ln() - p.theta * t;
    let kg = k + eight * gap;
    let pre = p.log_prefactor();
    let mut terms = Vec::with_capacity(deg + 1);
    let coeffs = p.poly.coeffs();
    if coeffs[0] > T::zero() {
        terms.push((coeffs[0] * k).ln());
    }
    for (l, &a) in coeffs.iter().enumerate().skip(1) {
        if a > T::zero() {
            let lsr = T::from_usize_lossy(l) * s * p.r;
            let q = p.sigma * kg * lsr;
            terms.push(pre + a.ln() + eight * k * gap + two * kg * lsr * t + two * q * q * t * t);
        }
    }
    lead + log_sum_exp(&terms)
}

/// The integrand itself; `+∞` once its log exceeds [`LOG_OVERFLOW`].
pub fn bound_integrand<T: Real>(t: T, p: &BoundParams<T>, gap: T) -> T {
    let lv = log_bound_integrand(t, p, gap);
    if lv > T::lit(LOG_OVERFLOW) {
        T::infinity()
    } else {
        lv.exp()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Minimum sits at the lower end of the search interval (`t → 0⁺`).
    Lower,
    /// Minimum sits at `t_max`; a larger `t_max` may lower the bound.
    Upper,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinimizeOptions<T> {
    pub t_max: T,
    pub tol: T,
}

impl<T: Real> Default for MinimizeOptions<T> {
    fn default() -> Self {
        MinimizeOptions {
            t_max: T::lit(DEFAULT_T_MAX),
            tol: T::lit(DEFAULT_TOL),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundMinimum<T> {
    pub t_star: T,
    pub log_value: T,
    /// `exp(log_value)`, `+∞` when the log exceeds [`LOG_OVERFLOW`].
    pub bound_raw: T,
    /// `min(bound_raw, 1)`.
    pub bound_capped: T,
    pub boundary: Option<Boundary>,
    /// The grid cross-check found a lower point than the search (the
    /// integrand was not log-convex); the grid point was refined instead.
    pub grid_disagreement: bool,
}

/// Minimises the integrand over `t ∈ [tol, t_max]`.
///
/// The log of every summand is a convex quadratic in `t`, so the log of
/// the sum is convex and a ternary search on it converges to the global
/// minimum. A grid of [`GRID_POINTS`] points guards against surprises.
pub fn minimize_bound<T: Real>(p: &BoundParams<T>, gap: T, opts: MinimizeOptions<T>) -> Result<BoundMinimum<T>> {
    p.validate()?;
    if !(opts.tol > T::zero()) || !(opts.t_max > opts.tol) || !opts.t_max.is_finite() {
        return Err(Error::precondition("minimize_bound needs 0 < tol < t_max < inf"));
    }
    if !gap.is_finite() {
        return Err(Error::precondition("gap must be finite"));
    }
    let f = |t: T| log_bound_integrand(t, p, gap);
    let (lo, hi) = (opts.tol, opts.t_max);
    let mut t_star = ternary(&f, lo, hi);
    let mut best = f(t_star);

    let mut grid_disagreement = false;
    let step = (hi - lo) / T::from_usize_lossy(GRID_POINTS - 1);
    let (mut g_idx, mut g_best) = (0, T::infinity());
    for i in 0..GRID_POINTS {
        let v = f(lo + step * T::from_usize_lossy(i));
        if v < g_best {
            g_idx = i;
            g_best = v;
        }
    }
    let slack = T::lit(1e-12) * (T::one() + best.abs());
    if g_best < best - slack {
        grid_disagreement = true;
        let a = (lo + step * T::from_usize_lossy(g_idx.saturating_sub(1))).max(lo);
        let b = (lo + step * T::from_usize_lossy(g_idx + 1)).min(hi);
        t_star = ternary(&f, a, b);
        best = f(t_star);
    }

    let edge = T::lit(1e-6) * (hi - lo);
    let boundary = if t_star - lo <= edge {
        Some(Boundary::Lower)
    } else if hi - t_star <= edge {
        Some(Boundary::Upper)
    } else {
        None
    };
    let bound_raw = if best > T::lit(LOG_OVERFLOW) { T::infinity() } else { best.exp() };
    Ok(BoundMinimum {
        t_star,
        log_value: best,
        bound_raw,
        bound_capped: bound_raw.min(T::one()),
        boundary,
        grid_disagreement,
    })
}

/// Golden-section search for the minimum of a convex function on `[a, b]`.
fn ternary<T: Real>(f: &impl Fn(T) -> T, mut a: T, mut b: T) -> T {
    let inv_phi = T::lit(0.618_033_988_749_894_8);
    let mut c = b - (b - a) * inv_phi;
    let mut d = a + (b - a) * inv_phi;
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..400 {
        if b - a <= T::epsilon() * (T::one() + a.abs() + b.abs()) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * inv_phi;
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * inv_phi;
            fd = f(d);
        }
    }
    let mid = (a + b) / T::lit(2.0);
    // End points win ties so boundary minima are reported at the boundary.
    [a, mid, b]
        .into_iter()
        .fold((mid, f(mid)), |(bt, bv), t| {
            let v = f(t);
            if v < bv {
                (t, v)
            } else {
                (bt, bv)
            }
        })
        .0
}

/// The minimised bound together with the gap it was evaluated at.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport<T> {
    pub gap_source: GapSource,
    pub gap: T,
    pub minimum: BoundMinimum<T>,
    pub notes: Vec<String>,
}

pub fn bound_at_gap<T: Real>(p: &BoundParams<T>, source: GapSource, gap: T, opts: MinimizeOptions<T>) -> Result<BoundReport<T>> {
    let minimum = minimize_bound(p, gap, opts)?;
    let mut notes = Vec::new();
    if gap > T::one() {
        notes.push(format!("gap {gap} exceeds 1 (negative second eigenvalue); the formula is used as-is"));
    }
    match minimum.boundary {
        Some(Boundary::Upper) => notes.push("minimum at t_max; increase t_max".into()),
        Some(Boundary::Lower) => notes.push("minimum at t -> 0+".into()),
        None => {}
    }
    if minimum.bound_raw.is_infinite() {
        notes.push("bound overflows (log > 700); reported as +inf".into());
    }
    Ok(BoundReport {
        gap_source: source,
        gap,
        minimum,
        notes,
    })
}

/// Bound at the graph's exact spectral gap under `convention`.
pub fn theorem1_bound<T: Real>(
    p: &BoundParams<T>,
    s: &SpectralSummary<T>,
    convention: GapConvention,
    opts: MinimizeOptions<T>,
) -> Result<BoundReport<T>> {
    let gap = s.gap_for(convention);
    let source = GapSource {
        kind: GapKind::ExactSpectrum,
        gap_value: gap.as_f64(),
        detail: convention.name().into(),
    };
    bound_at_gap(p, source, gap, opts)
}

/// Derivative of the exponent with respect to `λ_L` when `λ̄ = λ_L/degree_sum`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonotonicityCheck<T> {
    pub increasing: bool,
    /// Smallest derivative over the interval and every `l ≥ 1`.
    pub min_derivative: T,
}

/// Checks that every exponent `8Kλ̄ + 2(K+8λ̄)lsrt + 2(σ(K+8λ̄)lsr)²t²` is
/// nondecreasing in `λ_L` on `[lo, hi]`, with `λ̄ = λ_L/degree_sum`.
///
/// The derivative `(8K + 16·lsr·t + 32σ²(K+8λ̄)(lsr)²t²)/degree_sum` is
/// affine in `λ̄`, so checking both ends of the interval suffices.
pub fn check_monotonicity<T: Real>(p: &BoundParams<T>, lambda_l_range: (T, T), degree_sum: T, t: T) -> MonotonicityCheck<T> {
    let k = T::from_usize_lossy(p.k);
    let s = T::from_usize_lossy(p.poly.power() as usize);
    let mut min_d = T::infinity();
    for lam in [lambda_l_range.0, lambda_l_range.1] {
        let gap = lam / degree_sum;
        for (l, &a) in p.poly.coeffs().iter().enumerate().skip(1) {
            if a > T::zero() {
                let lsr = T::from_usize_lossy(l) * s * p.r;
                let d = (T::lit(8.0) * k
                    + T::lit(16.0) * lsr * t
                    + T::lit(32.0) * p.sigma * p.sigma * (k + T::lit(8.0) * gap) * lsr * lsr * t * t)
                    / degree_sum;
                min_d = min_d.min(d);
            }
        }
    }
    if min_d == T::infinity() {
        // Constant polynomial: no exponential term depends on λ̄.
        min_d = T::zero();
    }
    MonotonicityCheck {
        increasing: min_d >= T::zero(),
        min_derivative: min_d,
    }
}

/// Bounds at `λ̄ = Φ_L(λ_M)/degree_sum` and `λ̄ = Φ_U(λ_M)/degree_sum`.
#[derive(Clone, Debug, PartialEq)]
pub struct CorollaryBounds<T> {
    pub lower: BoundReport<T>,
    pub upper: BoundReport<T>,
    /// `Φ_L(λ_M) < 0` was clamped to 0.
    pub lower_clamped: bool,
    pub monotonicity: MonotonicityCheck<T>,
}

fn corollary_from_phis<T: Real>(
    p: &BoundParams<T>,
    lambda_m: T,
    phi_l: T,
    phi_u: T,
    degree_sum: T,
    opts: MinimizeOptions<T>,
) -> Result<CorollaryBounds<T>> {
    if !(degree_sum > T::zero()) || !degree_sum.is_finite() {
        return Err(Error::precondition("degree_sum must be positive"));
    }
    let lower_clamped = phi_l < T::zero();
    let phi_l = phi_l.max(T::zero());
    let monotonicity = check_monotonicity(p, (phi_l, phi_u), degree_sum, opts.t_max);
    if !monotonicity.increasing {
        return Err(Error::precondition("bound is not monotone in the eigenvalue over the envelope"));
    }
    let detail = format!("lambda_M={}", fmt17(lambda_m.as_f64()));
    let mk = |kind, phi: T| {
        let gap = phi / degree_sum;
        let source = GapSource {
            kind,
            gap_value: gap.as_f64(),
            detail: detail.clone(),
        };
        bound_at_gap(p, source, gap, opts)
    };
    let mut lower = mk(GapKind::EnvelopeLower, phi_l)?;
    let upper = mk(GapKind::EnvelopeUpper, phi_u)?;
    if lower_clamped {
        lower.notes.push("Phi_L < 0 clamped to 0".into());
    }
    let slack = T::lit(1e-12) * (T::one() + upper.minimum.log_value.abs());
    if lower.minimum.log_value > upper.minimum.log_value + slack {
        return Err(Error::precondition("lower envelope bound exceeds upper envelope bound"));
    }
    Ok(CorollaryBounds {
        lower,
        upper,
        lower_clamped,
        monotonicity,
    })
}

pub fn corollary_bounds<T: Real>(
    p: &BoundParams<T>,
    lambda_m: T,
    env: &EnvelopeParams<T>,
    degree_sum: T,
    opts: MinimizeOptions<T>,
) -> Result<CorollaryBounds<T>> {
    if !(lambda_m >= T::zero()) {
        return Err(Error::precondition("lambda_M must be nonnegative"));
    }
    env.validate()?;
    corollary_from_phis(p, lambda_m, phi_lower(lambda_m, env), phi_upper(lambda_m, env), degree_sum, opts)
}

/// [`corollary_bounds`] at the `i`-th distinct eigenvalue of `S^n(R)`.
pub fn sphere_example_bounds<T: Real>(
    p: &BoundParams<T>,
    i: usize,
    d: &ManifoldDescriptor<T>,
    env: &EnvelopeParams<T>,
    degree_sum: T,
    opts: MinimizeOptions<T>,
) -> Result<CorollaryBounds<T>> {
    env.validate()?;
    let lambda_m = crate::manifold::laplace_beltrami_eigenvalue(i, d, true)?;
    let phi_l = sphere_phi(i, d, env, EnvelopeSide::Lower)?;
    let phi_u = sphere_phi(i, d, env, EnvelopeSide::Upper)?;
    corollary_from_phis(p, lambda_m, phi_l, phi_u, degree_sum, opts)
}

/// One line of the bound table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub theta: f64,
    pub gap_source: String,
    pub gap_value: f64,
    pub t_star: f64,
    pub bound_raw: f64,
    pub bound_capped: f64,
}

impl BoundRow {
    pub fn new<T: Real>(theta: T, r: &BoundReport<T>) -> Self {
        BoundRow {
            theta: theta.as_f64(),
            gap_source: r.gap_source.label(),
            gap_value: r.gap.as_f64(),
            t_star: r.minimum.t_star.as_f64(),
            bound_raw: r.minimum.bound_raw.as_f64(),
            bound_capped: r.minimum.bound_capped.as_f64(),
        }
    }
}

/// `theta,gap_source,gap_value,t_star,bound_raw,bound_capped`. An
/// overflowed raw bound is written as `inf`.
pub fn bound_csv(rows: &[BoundRow]) -> String {
    let mut out = String::from("theta,gap_source,gap_value,t_star,bound_raw,bound_capped\n");
    let real = |x: f64| if x.is_infinite() { "inf".to_string() } else { fmt17(x) };
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            real(r.theta),
            r.gap_source,
            real(r.gap_value),
            real(r.t_star),
            real(r.bound_raw),
            real(r.bound_capped)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(d: &[usize]) -> TensorShape {
        TensorShape::new(d.to_vec()).unwrap()
    }

    /// K = 4, f = identity, r = σ = C = 1, 𝕀 = 4.
    fn vertex_params(theta: f64) -> BoundParams<f64> {
        BoundParams {
            k: 4,
            r: 1.0,
            poly: PolynomialSpec::identity(),
            c_env: 1.0,
            sigma: 1.0,
            shape: shape(&[2, 2]),
            ky_fan_k: 1,
            theta,
        }
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn scalar_bound_examples() {
        assert_eq!(scalar_expander_bound(10, 0.3, 1.0, 1.0).unwrap(), 2.0);
        let v = scalar_expander_bound(100, 0.1f64, 0.0, 1.0).unwrap();
        assert!((v - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
        assert!((v - 0.7358).abs() < 1e-4);
        assert!(scalar_expander_bound(100, 0.1, 1.5, 1.0).is_err());
        let mut prev = f64::INFINITY;
        for k in 1..50 {
            let b = scalar_expander_bound(k, 0.2, 0.3, 0.5).unwrap();
            assert!(b <= prev);
            prev = b;
        }
    }

    #[test]
    fn integrand_examples() {
        let p = BoundParams { poly: PolynomialSpec::new(vec![1.0], 1).unwrap(), k: 10, theta: 1.0, shape: shape(&[4, 4]), ..vertex_params(1.0) };
        assert!(rel(bound_integrand(1.0, &p, 0.3), 10.0 / std::f64::consts::E) < 1e-15);
        let p = vertex_params(16.0);
        let want = 4.0 * (-0.5f64).exp();
        assert!(rel(bound_integrand(0.125, &p, 0.0), want) < 1e-14);
        assert!((want - 2.4261).abs() < 1e-4);
        // with a gap: 4·exp(8·4·λ̄ + 2(4+8λ̄)t + 2(4+8λ̄)²t² − 16t)
        let (t, g) = (0.3f64, 0.25f64);
        let kg = 4.0 + 8.0 * g;
        let by_hand = 4.0 * (32.0 * g + 2.0 * kg * t + 2.0 * kg * kg * t * t - 16.0 * t).exp();
        assert!(rel(bound_integrand(t, &p, g), by_hand) < 1e-13);
    }

    #[test]
    fn integrand_overflow_is_symbolic() {
        let p = vertex_params(1.0);
        assert_eq!(bound_integrand(50.0, &p, 1.0), f64::INFINITY);
        assert!(log_bound_integrand(50.0, &p, 1.0).is_finite());
    }

    #[test]
    fn radical_and_degree_prefactor() {
        // 𝕀 = 8, K = 4: C(K + 1); (deg + 1)^{s−1} = 3 for deg = 2, s = 2
        let poly = PolynomialSpec::new(vec![0.0, 0.0, 1.0], 2).unwrap();
        let p = BoundParams { poly, shape: shape(&[2, 2, 2]), ..vertex_params(3.0) };
        let (t, g) = (0.05f64, 0.1f64);
        let lsr = 2.0f64 * 2.0;
        let kg = 4.0 + 8.0 * g;
        let e = 32.0 * g + 2.0 * kg * lsr * t + 2.0 * (kg * lsr).powi(2) * t * t;
        let by_hand = 3.0 * (-3.0 * t).exp() * 5.0 * e.exp();
        assert!(rel(bound_integrand(t, &p, g), by_hand) < 1e-13);
    }

    #[test]
    fn params_validation() {
        let p = BoundParams { k: 8, ..vertex_params(1.0) };
        let e = p.validate().unwrap_err();
        assert_eq!(e.exit_code(), 6);
        assert!(BoundParams { ky_fan_k: 5, ..vertex_params(1.0) }.validate().is_err());
        assert!(BoundParams { sigma: 0.0, ..vertex_params(1.0) }.validate().is_err());
    }

    #[test]
    fn minimizer_closed_form_vertex() {
        let m = minimize_bound(&vertex_params(16.0), 0.0, MinimizeOptions::default()).unwrap();
        assert!(rel(m.t_star, 0.125) < 1e-6);
        assert!(rel(m.bound_raw, 4.0 * (-0.5f64).exp()) < 1e-6);
        assert_eq!(m.boundary, None);
        assert!(!m.grid_disagreement);
        assert_eq!(m.bound_capped, 1.0);
    }

    #[test]
    fn minimizer_boundaries() {
        let m = minimize_bound(&vertex_params(4.0), 0.0, MinimizeOptions::default()).unwrap();
        assert_eq!(m.boundary, Some(Boundary::Lower));
        assert!(rel(m.bound_raw, 4.0) < 1e-6);
        let a0 = BoundParams { poly: PolynomialSpec::new(vec![1.0], 1).unwrap(), ..vertex_params(2.0) };
        let m = minimize_bound(&a0, 0.0, MinimizeOptions::default()).unwrap();
        assert_eq!(m.boundary, Some(Boundary::Upper));
        assert!(rel(m.t_star, 10.0) < 1e-12);
        assert!(minimize_bound(&a0, 0.0, MinimizeOptions { t_max: 0.0, tol: 1e-9 }).is_err());
    }

    #[test]
    fn theorem1_on_exact_spectra() {
        use crate::graph::{assemble_matrices, WeightedGraph};
        use crate::linalg::Matrix;
        use crate::manifold::SamplePoint;
        let mk = |n: usize| {
            let g = WeightedGraph {
                descriptor: ManifoldDescriptor::sphere(1, 1.0).unwrap(),
                kappa: 1.0,
                epsilon: None,
                points: (0..n).map(|k| SamplePoint { coords: vec![(k as f64).cos(), (k as f64).sin()], measure: 1.0 }).collect(),
                weights: Matrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 1.0 }),
                self_weight: false,
            };
            SpectralSummary::compute(&assemble_matrices(&g).unwrap(), GapConvention::AbsoluteSecond).unwrap()
        };
        let p = vertex_params(20.0);
        let o = MinimizeOptions::default();
        let two = mk(2);
        let alg = theorem1_bound(&p, &two, GapConvention::AlgebraicSecond, o).unwrap();
        let abs = theorem1_bound(&p, &two, GapConvention::AbsoluteSecond, o).unwrap();
        assert!((alg.gap - 2.0).abs() < 1e-14 && abs.gap.abs() < 1e-14);
        assert!(alg.notes.iter().any(|n| n.contains("exceeds 1")));
        assert!(alg.minimum.log_value > abs.minimum.log_value);
        assert_eq!(abs.gap_source.label(), "exact_spectrum:absolute_second");
        let tri = theorem1_bound(&p, &mk(3), GapConvention::AlgebraicSecond, o).unwrap();
        assert!((tri.gap - 1.5).abs() < 1e-14);
    }

    #[test]
    fn monotonicity_check() {
        let p = vertex_params(10.0);
        let c = check_monotonicity(&p, (0.0, 3.0), 2.0, 0.5);
        assert!(c.increasing && c.min_derivative > 0.0);
        let c = check_monotonicity(&p, (0.0, 3.0), 2.0, 0.0);
        assert!(c.increasing && (c.min_derivative - 16.0).abs() < 1e-14);
        let a0 = BoundParams { poly: PolynomialSpec::new(vec![1.0], 1).unwrap(), ..p };
        assert!(check_monotonicity(&a0, (0.0, 1.0), 1.0, 1.0).increasing);
    }

    #[test]
    fn corollary_examples() {
        let p = vertex_params(20.0);
        let o = MinimizeOptions::default();
        let env = EnvelopeParams::new(1.0, 0.1, 0.4, 1.0).unwrap();
        let c = corollary_bounds(&p, 1.0, &env, 1.0, o).unwrap();
        assert!((c.lower.gap - 0.19).abs() < 1e-14 && (c.upper.gap - 1.81).abs() < 1e-14);
        assert!(c.lower.minimum.log_value <= c.upper.minimum.log_value);
        let direct = minimize_bound(&p, c.lower.gap, o).unwrap();
        assert_eq!(direct, c.lower.minimum);

        let flat = EnvelopeParams::new(0.0, 0.1, 0.4, 1.0).unwrap();
        let c = corollary_bounds(&p, 2.0, &flat, 4.0, o).unwrap();
        assert_eq!(c.lower.minimum, c.upper.minimum);
        assert_eq!(c.lower.minimum, minimize_bound(&p, 0.5, o).unwrap());

        let c = corollary_bounds(&p, 0.0, &env, 3.0, o).unwrap();
        assert_eq!(c.lower.gap, 0.0);
        assert_eq!(c.upper.gap, 0.0);

        let wide = EnvelopeParams::new(5.0, 0.1, 0.4, 1.0).unwrap();
        let c = corollary_bounds(&p, 1.0, &wide, 1.0, o).unwrap();
        assert!(c.lower_clamped && c.lower.gap == 0.0);
    }

    #[test]
    fn sphere_example_collapse() {
        let p = vertex_params(20.0);
        let o = MinimizeOptions::default();
        let d = ManifoldDescriptor::sphere(2, 1.0).unwrap();
        let env = EnvelopeParams::new(1.0, 0.1, 0.4, 1.0).unwrap();
        let c = sphere_example_bounds(&p, 1, &d, &env, 2.0, o).unwrap();
        assert_eq!((c.lower.gap, c.upper.gap), (0.0, 0.0));
        let flat = EnvelopeParams::new(0.0, 0.1, 0.4, 1.0).unwrap();
        let c = sphere_example_bounds(&p, 2, &d, &flat, 4.0, o).unwrap();
        assert_eq!((c.lower.gap, c.upper.gap), (0.5, 0.5));
    }

    #[test]
    fn csv_layout() {
        let p = vertex_params(16.0);
        let r = bound_at_gap(&p, GapSource { kind: GapKind::Eq7Formula, gap_value: 0.0, detail: String::new() }, 0.0, MinimizeOptions::default()).unwrap();
        let csv = bound_csv(&[BoundRow::new(16.0, &r)]);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("theta,gap_source,gap_value,t_star,bound_raw,bound_capped"));
        let row = lines.next().unwrap();
        assert!(row.starts_with("1.6000000000000000e1,eq7_formula,0.0000000000000000e0,"), "{row}");
        let t_star: f64 = row.split(',').nth(3).unwrap().parse().unwrap();
        assert!(rel(t_star, 0.125) < 1e-6);
        assert!(row.ends_with(",1.0000000000000000e0"));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn params() -> impl Strategy<Value = BoundParams<f64>> {
            (
                1usize..5,
                0.1f64..2.0,
                prop::collection::vec(0.0f64..2.0, 1..4),
                1u32..3,
                0.2f64..3.0,
                0.2f64..2.0,
                0.0f64..40.0,
            )
                .prop_map(|(k, r, mut coeffs, s, c, sigma, theta)| {
                    *coeffs.last_mut().unwrap() += 0.1;
                    BoundParams {
                        k,
                        r,
                        poly: PolynomialSpec::new(coeffs, s).unwrap(),
                        c_env: c,
                        sigma,
                        shape: TensorShape::new(vec![2, 2]).unwrap(),
                        ky_fan_k: 1,
                        theta,
                    }
                })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(100))]

            #[test]
            fn log_convex_in_t(p in params(), gap in 0.0f64..2.0, t1 in 1e-4f64..5.0, t2 in 1e-4f64..5.0) {
                let mid = log_bound_integrand((t1 + t2) / 2.0, &p, gap);
                let avg = 0.5 * (log_bound_integrand(t1, &p, gap) + log_bound_integrand(t2, &p, gap));
                prop_assert!(mid <= avg + 1e-12 * (1.0 + avg.abs()));
            }

            #[test]
            fn monotone_in_gap(p in params(), g1 in 0.0f64..2.0, g2 in 0.0f64..2.0, t in 1e-3f64..5.0) {
                let (lo, hi) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
                prop_assert!(log_bound_integrand(t, &p, lo) <= log_bound_integrand(t, &p, hi));
            }

            #[test]
            fn minimum_not_beaten_by_grid(p in params(), gap in 0.0f64..2.0) {
                let o = MinimizeOptions::default();
                let m = minimize_bound(&p, gap, o).unwrap();
                prop_assert!(!m.grid_disagreement);
                for i in 0..200 {
                    let t = 1e-9 + (10.0 - 1e-9) * i as f64 / 199.0;
                    prop_assert!(m.log_value <= log_bound_integrand(t, &p, gap) + 1e-12 * (1.0 + m.log_value.abs()));
                }
            }

            #[test]
            fn sphere_path_equals_generic(i in 1usize..6, n in 1usize..4, c in 0.0f64..2.0, ds in 0.5f64..20.0) {
                let p = BoundParams { theta: 10.0, ..vertex_params(10.0) };
                let d = ManifoldDescriptor::sphere(n, 1.0).unwrap();
                let env = EnvelopeParams::new(c, 0.1, 0.4, 1.0).unwrap();
                let o = MinimizeOptions::default();
                let lambda = crate::manifold::laplace_beltrami_eigenvalue(i, &d, true).unwrap();
                let a = sphere_example_bounds(&p, i, &d, &env, ds, o).unwrap();
                let b = corollary_bounds(&p, lambda, &env, ds, o).unwrap();
                prop_assert_eq!(a.lower.minimum, b.lower.minimum);
                prop_assert_eq!(a.upper.minimum, b.upper.minimum);
            }
        }
    }
}
