//! End-to-end experiment driver: configuration, pipeline stages, report.
//!
//! Every stage takes the validated [`ExperimentConfig`] and the outputs of
//! earlier stages, so the command-line tools can run any prefix of the
//! pipeline. All randomness comes from the config seeds.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::chernoff::{
    bound_at_gap, bound_csv, scalar_expander_bound, sphere_example_bounds, theorem1_bound, BoundParams, BoundRow,
    GapKind, GapSource, MinimizeOptions,
};
use crate::error::{Error, Result};
use crate::graph::{assemble_matrices, build_graph, read_graph, GraphMatrices, GraphOptions, WeightedGraph};
use crate::io::{f17_vec, fmt17, parse_json, read_json, F17};
use crate::manifold::{
    estimate_voronoi_measures, laplace_beltrami_eigenvalue, sample_epsilon_net, sphere_spectrum_with_multiplicity,
    uniform_circle, verify_coverage, ManifoldDescriptor, ManifoldFamily, ManifoldSampling, NetOptions,
};
use crate::spectral::{
    fit_envelope, measure_normalized_spectrum, EnvelopeParams, GapConvention, RefinementLevel, SpectralSummary,
};
use crate::svg::{tail_chart, ChartSeries};
use crate::tensor::{PolynomialSpec, TensorShape};
use crate::walk::{
    assumption3_spot_check, default_thresholds, estimate_tail, geometric_grid, stationary_distribution,
    Assumption3Report, Execution, ObservableKind, ObservableMap, TailConfig, TailEstimate, DEFAULT_THRESHOLDS,
    DEFAULT_TRIALS, MIN_TRIALS,
};

pub const CONFIG_VERSION: u32 = 1;

/// JSON schema of [`ExperimentReport`].
pub const REPORT_SCHEMA: &str = include_str!("../schema/report.schema.json");

/// Eigenvalue pairs used by [`fit_envelope_files`].
pub const FIT_EIGS: usize = 5;

/// Index of `λ_{M,2}`, the eigenvalue paired with the spectral gap.
const GAP_EIGEN_INDEX: usize = 2;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub manifold: ManifoldConfig,
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub graph: GraphConfig,
    pub walk: WalkConfig,
    #[serde(default)]
    pub polynomial: PolynomialConfig,
    #[serde(default)]
    pub bound: BoundConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldConfig {
    pub family: ManifoldFamily,
    pub dim: usize,
    #[serde(default = "one")]
    pub radius: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMethod {
    /// Farthest-point ε-net with Monte Carlo Voronoi measures.
    #[default]
    EpsilonNet,
    /// `n_points` equally spaced points on `S¹` with exact measures.
    Uniform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    #[serde(default)]
    pub method: SamplingMethod,
    /// Required for `epsilon_net`; defaults to the covering radius `πR/N` for `uniform`.
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub n_points: Option<usize>,
    #[serde(default = "default_mc_points")]
    pub mc_points: usize,
    pub seed: u64,
    #[serde(default)]
    pub pool_size: Option<usize>,
    #[serde(default = "default_probes")]
    pub coverage_probes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    /// Explicit `κ`; overrides `kappa_factor`.
    #[serde(default)]
    pub kappa: Option<f64>,
    /// `κ = kappa_factor·ε` when `kappa` is absent.
    #[serde(default = "default_kappa_factor")]
    pub kappa_factor: f64,
    #[serde(default)]
    pub include_self_weight: bool,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            kappa: None,
            kappa_factor: default_kappa_factor(),
            include_self_weight: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkConfig {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub observable: ObservableKind,
    #[serde(default = "one")]
    pub r: f64,
    /// Mode dimensions `I_1..I_M`; the tensors have shape `(I;I)`.
    pub shape: Vec<usize>,
    pub seed: u64,
    #[serde(default)]
    pub center: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolynomialConfig {
    pub coeffs: Vec<f64>,
    pub s: u32,
}

impl Default for PolynomialConfig {
    fn default() -> Self {
        PolynomialConfig {
            coeffs: vec![0.0, 1.0],
            s: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundConfig {
    #[serde(rename = "C_env", default = "one")]
    pub c_env: f64,
    #[serde(default = "one")]
    pub sigma: f64,
    #[serde(default = "default_ky_fan")]
    pub ky_fan_k: usize,
    /// Explicit ascending thresholds; default is an even grid over `[0, K·r·f(1)]`.
    #[serde(default)]
    pub thetas: Option<Vec<f64>>,
    #[serde(default = "default_n_thetas")]
    pub n_thetas: usize,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub gap_convention: GapConvention,
    #[serde(rename = "envelope_C", default = "one")]
    pub envelope_c: f64,
    #[serde(default = "one")]
    pub c_omega: f64,
    #[serde(default = "default_a3_walks")]
    pub assumption3_walks: usize,
}

impl Default for BoundConfig {
    fn default() -> Self {
        BoundConfig {
            c_env: 1.0,
            sigma: 1.0,
            ky_fan_k: 1,
            thetas: None,
            n_thetas: DEFAULT_THRESHOLDS,
            t_max: crate::chernoff::DEFAULT_T_MAX,
            tol: crate::chernoff::DEFAULT_TOL,
            gap_convention: GapConvention::default(),
            envelope_c: 1.0,
            c_omega: 1.0,
            assumption3_walks: default_a3_walks(),
        }
    }
}

fn one() -> f64 {
    1.0
}
fn default_mc_points() -> usize {
    200_000
}
fn default_probes() -> usize {
    100_000
}
fn default_kappa_factor() -> f64 {
    4.0
}
fn default_trials() -> usize {
    DEFAULT_TRIALS
}
fn default_ky_fan() -> usize {
    1
}
fn default_n_thetas() -> usize {
    DEFAULT_THRESHOLDS
}
fn default_t_max() -> f64 {
    crate::chernoff::DEFAULT_T_MAX
}
fn default_tol() -> f64 {
    crate::chernoff::DEFAULT_TOL
}
fn default_a3_walks() -> usize {
    200
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::precondition(format!("{name} must be positive and finite, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str, source_name: &str) -> Result<Self> {
        let cfg: Self = parse_json(text, source_name)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let cfg: Self = read_json(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every constraint the pipeline will rely on, before any work.
    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::precondition(format!(
                "unsupported config version {}, expected {CONFIG_VERSION}",
                self.version
            )));
        }
        let d = self.descriptor()?;
        let s = &self.sampling;
        match s.method {
            SamplingMethod::EpsilonNet => {
                let Some(eps) = s.epsilon else {
                    return Err(Error::precondition("sampling.epsilon is required for epsilon_net"));
                };
                if !(eps > 0.0 && eps < d.diameter) {
                    return Err(Error::precondition(format!(
                        "sampling.epsilon must lie in (0, {}), got {eps}",
                        d.diameter
                    )));
                }
                if s.n_points.is_some() {
                    return Err(Error::precondition("sampling.n_points only applies to the uniform method"));
                }
                if s.coverage_probes < 1000 {
                    return Err(Error::precondition("sampling.coverage_probes must be at least 1000"));
                }
                if s.mc_points < 20 {
                    return Err(Error::precondition("sampling.mc_points must be at least 20"));
                }
            }
            SamplingMethod::Uniform => {
                if d.dim != 1 {
                    return Err(Error::precondition("uniform sampling is only defined on the circle (dim 1)"));
                }
                match s.n_points {
                    Some(n) if n >= 2 => {}
                    _ => return Err(Error::precondition("uniform sampling needs n_points >= 2")),
                }
                if let Some(eps) = s.epsilon {
                    positive("sampling.epsilon", eps)?;
                }
            }
        }
        match self.graph.kappa {
            Some(k) => positive("graph.kappa", k)?,
            None => positive("graph.kappa_factor", self.graph.kappa_factor)?,
        }

        let w = &self.walk;
        if w.trials < MIN_TRIALS {
            return Err(Error::precondition(format!("walk.trials must be at least {MIN_TRIALS}")));
        }
        positive("walk.r", w.r)?;
        let poly = self.polynomial()?;

        let b = &self.bound;
        positive("bound.t_max", b.t_max)?;
        positive("bound.tol", b.tol)?;
        if b.tol >= b.t_max {
            return Err(Error::precondition("bound.tol must be below bound.t_max"));
        }
        positive("bound.envelope_C", b.envelope_c)?;
        positive("bound.c_omega", b.c_omega)?;
        if let Some(th) = &b.thetas {
            if th.is_empty() {
                return Err(Error::precondition("bound.thetas must not be empty"));
            }
            if th.iter().any(|&x| !(x >= 0.0 && x.is_finite())) || th.windows(2).any(|p| !(p[0] <= p[1])) {
                return Err(Error::precondition("bound.thetas must be finite, nonnegative and ascending"));
            }
        } else if b.n_thetas == 0 {
            return Err(Error::precondition("bound.n_thetas must be at least 1"));
        }
        // Checks K, r, C, σ, the Ky Fan index and K ≤ 𝕀₁^M.
        self.bound_params_with(poly)?.validate()
    }

    pub fn descriptor(&self) -> Result<ManifoldDescriptor<f64>> {
        match self.manifold.family {
            ManifoldFamily::Sphere => ManifoldDescriptor::sphere(self.manifold.dim, self.manifold.radius),
        }
    }

    /// Net radius `ε` after defaults.
    pub fn epsilon(&self) -> f64 {
        match (self.sampling.epsilon, self.sampling.n_points) {
            (Some(e), _) => e,
            (None, Some(n)) => std::f64::consts::PI * self.manifold.radius / n as f64,
            (None, None) => f64::NAN,
        }
    }

    pub fn kappa(&self) -> f64 {
        self.graph.kappa.unwrap_or(self.graph.kappa_factor * self.epsilon())
    }

    pub fn shape(&self) -> Result<TensorShape> {
        TensorShape::new(self.walk.shape.clone())
    }

    pub fn polynomial(&self) -> Result<PolynomialSpec<f64>> {
        PolynomialSpec::new(self.polynomial.coeffs.clone(), self.polynomial.s)
    }

    fn bound_params_with(&self, poly: PolynomialSpec<f64>) -> Result<BoundParams<f64>> {
        Ok(BoundParams {
            k: self.walk.k,
            r: self.walk.r,
            poly,
            c_env: self.bound.c_env,
            sigma: self.bound.sigma,
            shape: self.shape()?,
            ky_fan_k: self.bound.ky_fan_k,
            theta: 0.0,
        })
    }

    /// Bound parameters at `ϑ = 0`.
    pub fn bound_params(&self) -> Result<BoundParams<f64>> {
        self.bound_params_with(self.polynomial()?)
    }

    pub fn thresholds(&self) -> Result<Vec<f64>> {
        Ok(match &self.bound.thetas {
            Some(t) => t.clone(),
            None => default_thresholds(self.walk.k, self.walk.r, &self.polynomial()?, self.bound.n_thetas),
        })
    }

    pub fn minimize_options(&self) -> MinimizeOptions<f64> {
        MinimizeOptions {
            t_max: self.bound.t_max,
            tol: self.bound.tol,
        }
    }

    pub fn tail_config(&self) -> Result<TailConfig<f64>> {
        Ok(TailConfig {
            walk_length: self.walk.k,
            trials: self.walk.trials,
            thresholds: self.thresholds()?,
            ky_fan_k: self.bound.ky_fan_k,
            seed: self.walk.seed,
        })
    }
}

// ---------------------------------------------------------------------------
// Pipeline stages
// ---------------------------------------------------------------------------

/// Vertices and measures. Fails with [`Error::CoverageFailed`] when the
/// net does not cover the manifold.
pub fn build_sampling(cfg: &ExperimentConfig) -> Result<ManifoldSampling<f64>> {
    let d = cfg.descriptor()?;
    let s = &cfg.sampling;
    let eps = cfg.epsilon();
    let sampling = match s.method {
        SamplingMethod::Uniform => uniform_circle(s.n_points.unwrap_or(0), d.radius, eps)?,
        SamplingMethod::EpsilonNet => {
            let opts = NetOptions {
                pool_size: s.pool_size,
                probes: s.coverage_probes,
            };
            let net = sample_epsilon_net(&d, eps, s.seed, &opts)?;
            if !net.coverage_verified {
                let report = verify_coverage(&net, s.coverage_probes, s.seed)?;
                return Err(Error::CoverageFailed {
                    epsilon: eps,
                    max_gap: report.max_gap,
                });
            }
            estimate_voronoi_measures(&net, s.mc_points.max(10 * net.len()), s.seed)?
        }
    };
    if !sampling.coverage_verified {
        return Err(Error::CoverageFailed {
            epsilon: eps,
            max_gap: std::f64::consts::PI * d.radius / sampling.len() as f64,
        });
    }
    Ok(sampling)
}

pub fn build_graph_from_config(cfg: &ExperimentConfig) -> Result<WeightedGraph<f64>> {
    let s = build_sampling(cfg).map_err(|e| e.in_stage("sampling"))?;
    let opts = GraphOptions {
        include_self_weight: cfg.graph.include_self_weight,
    };
    build_graph(&s, cfg.kappa(), opts).map_err(|e| e.in_stage("graph"))
}

/// Observables of the config on a graph with `n` vertices, centred if asked.
pub fn observables_for(cfg: &ExperimentConfig, m: &GraphMatrices<f64>) -> Result<ObservableMap<f64>> {
    let w = &cfg.walk;
    let obs = ObservableMap::generate(w.observable, &cfg.shape()?, m.len(), w.r, w.seed)?;
    if w.center {
        obs.centered(&stationary_distribution(m)?)
    } else {
        Ok(obs)
    }
}

pub fn tail_for_graph(
    cfg: &ExperimentConfig,
    m: &GraphMatrices<f64>,
    obs: &ObservableMap<f64>,
    exec: Execution,
) -> Result<TailEstimate<f64>> {
    estimate_tail(m, obs, &cfg.polynomial()?, &cfg.tail_config()?, exec)
}

/// `Φ_{L/U}(λ_{M,2})` and the inputs they were computed from.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnvelopeSection {
    pub c_const: F17,
    pub epsilon: F17,
    pub kappa: F17,
    pub curvature_bound: F17,
    pub lambda_m: F17,
    pub phi_lower: F17,
    pub phi_upper: F17,
    /// Measured `λ_{L,2}` in manifold units.
    pub lambda_measured: F17,
    pub measured_inside: bool,
    pub degree_sum: F17,
    pub lower_clamped: bool,
    pub warnings: Vec<String>,
}

/// Bound rows for every threshold and gap source, plus the scalar baseline.
#[derive(Clone, Debug)]
pub struct BoundTable {
    pub rows: Vec<BoundRow>,
    pub envelope: Option<EnvelopeSection>,
    pub scalar_baseline: Vec<(f64, f64)>,
    pub notes: Vec<String>,
}

impl BoundTable {
    pub fn to_csv(&self) -> String {
        bound_csv(&self.rows)
    }

    /// Rows of one source label, in threshold order.
    pub fn series(&self, label: &str) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.gap_source == label)
            .map(|r| (r.theta, r.bound_capped))
            .collect()
    }

    pub fn labels(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.gap_source) {
                out.push(r.gap_source.clone());
            }
        }
        out
    }
}

/// Sources: the exact gap under the configured convention, the eigenvalue
/// map at vertex 1, and both envelopes at `λ_{M,2}` when `ε` is known.
pub fn bounds_for_graph(
    cfg: &ExperimentConfig,
    g: &WeightedGraph<f64>,
    m: &GraphMatrices<f64>,
    summary: &SpectralSummary<f64>,
) -> Result<BoundTable> {
    let base = cfg.bound_params()?;
    let opts = cfg.minimize_options();
    let thetas = cfg.thresholds()?;
    let conv = cfg.bound.gap_convention;
    let mut notes = Vec::new();

    let eq7_gap = summary.laplacian_eigs[1] / m.degrees[1];
    let eq7_source = GapSource {
        kind: GapKind::Eq7Formula,
        gap_value: eq7_gap,
        detail: "lambda_L2/d_2".into(),
    };

    let envelope = match g.epsilon {
        Some(eps) => {
            let d = &g.descriptor;
            let env = EnvelopeParams::new(cfg.bound.envelope_c, eps, g.kappa, d.curvature_bound)?;
            let lambda_m = laplace_beltrami_eigenvalue(GAP_EIGEN_INDEX, d, true)?;
            let degree_sum = m.degrees[1] / m.measures[1];
            let measured = measure_normalized_spectrum(m)?[1];
            let phi_l = crate::spectral::phi_lower(lambda_m, &env);
            let phi_u = crate::spectral::phi_upper(lambda_m, &env);
            Some((
                env,
                degree_sum,
                EnvelopeSection {
                    c_const: F17(env.c_const),
                    epsilon: F17(eps),
                    kappa: F17(g.kappa),
                    curvature_bound: F17(d.curvature_bound),
                    lambda_m: F17(lambda_m),
                    phi_lower: F17(phi_l),
                    phi_upper: F17(phi_u),
                    lambda_measured: F17(measured),
                    measured_inside: phi_l <= measured && measured <= phi_u,
                    degree_sum: F17(degree_sum),
                    lower_clamped: phi_l < 0.0,
                    warnings: env.warnings(),
                },
            ))
        }
        None => {
            notes.push("graph has no epsilon; envelope bounds skipped".into());
            None
        }
    };

    let lambda2 = summary.second_eigenvalue(GapConvention::AbsoluteSecond).clamp(0.0, 1.0);
    let mut rows = Vec::with_capacity(thetas.len() * 4);
    let mut scalar_baseline = Vec::with_capacity(thetas.len());
    for &theta in &thetas {
        let p = base.with_theta(theta);
        let exact = theorem1_bound(&p, summary, conv, opts)?;
        rows.push(BoundRow::new(theta, &exact));
        let eq7 = bound_at_gap(&p, eq7_source.clone(), eq7_gap, opts)?;
        rows.push(BoundRow::new(theta, &eq7));
        if let Some((env, degree_sum, _)) = &envelope {
            let c = sphere_example_bounds(&p, GAP_EIGEN_INDEX, &g.descriptor, env, *degree_sum, opts)?;
            rows.push(BoundRow::new(theta, &c.lower));
            rows.push(BoundRow::new(theta, &c.upper));
        }
        let per_step = theta / cfg.walk.k as f64;
        scalar_baseline.push((theta, scalar_expander_bound(cfg.walk.k, per_step, lambda2, cfg.bound.c_omega)?));
        for n in exact.notes {
            let n = format!("{}: {n}", exact.gap_source.label());
            if !notes.contains(&n) {
                notes.push(n);
            }
        }
    }
    Ok(BoundTable {
        rows,
        envelope: envelope.map(|(_, _, s)| s),
        scalar_baseline,
        notes,
    })
}

/// Spot-checks assumption 3 at `t` on a geometric grid up to `t_max`.
pub fn assumption3_for_graph(
    cfg: &ExperimentConfig,
    m: &GraphMatrices<f64>,
    obs: &ObservableMap<f64>,
) -> Result<Assumption3Report> {
    let t_max = cfg.bound.t_max;
    let ts = geometric_grid(t_max * 1e-3, t_max, 5);
    assumption3_spot_check(
        m,
        obs,
        &cfg.polynomial()?,
        cfg.walk.k,
        cfg.bound.assumption3_walks,
        &ts,
        cfg.walk.seed,
    )
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GraphSummary {
    pub n_vertices: usize,
    pub edge_count: usize,
    pub degree_min: F17,
    pub degree_max: F17,
    pub degree_mean: F17,
    pub epsilon: Option<F17>,
    pub kappa: F17,
    pub coverage_verified: bool,
    pub self_weight: bool,
}

impl GraphSummary {
    pub fn new(g: &WeightedGraph<f64>, m: &GraphMatrices<f64>) -> Self {
        let d = &m.degrees;
        GraphSummary {
            n_vertices: g.n_vertices(),
            edge_count: g.edge_count(),
            degree_min: F17(d.iter().copied().fold(f64::INFINITY, f64::min)),
            degree_max: F17(d.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
            degree_mean: F17(d.iter().sum::<f64>() / d.len() as f64),
            epsilon: g.epsilon.map(F17),
            kappa: F17(g.kappa),
            // Graphs are only built from verified samplings.
            coverage_verified: true,
            self_weight: g.self_weight,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralSection {
    pub gap_convention: GapConvention,
    pub second_largest: F17,
    pub gap: F17,
    pub gap_algebraic: F17,
    pub gap_absolute: F17,
    pub eq7_max_residual: F17,
    pub laplacian_eigs: Vec<F17>,
    pub transition_eigs: Vec<F17>,
    pub measure_normalized_eigs: Vec<F17>,
}

impl SpectralSection {
    pub fn new(s: &SpectralSummary<f64>, measure_normalized: &[f64]) -> Self {
        SpectralSection {
            gap_convention: s.gap_convention,
            second_largest: F17(s.second_largest),
            gap: F17(s.gap),
            gap_algebraic: F17(s.gap_for(GapConvention::AlgebraicSecond)),
            gap_absolute: F17(s.gap_for(GapConvention::AbsoluteSecond)),
            eq7_max_residual: F17(s.eq7_max_residual()),
            laplacian_eigs: f17_vec(s.laplacian_eigs.iter().copied()),
            transition_eigs: f17_vec(s.transition_eigs.iter().copied()),
            measure_normalized_eigs: f17_vec(measure_normalized.iter().copied()),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ObservableSection {
    pub kind: ObservableKind,
    pub shape: String,
    pub total_dimension: usize,
    pub bound_r: F17,
    pub centered: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TailSection {
    pub trials: usize,
    #[serde(rename = "K")]
    pub walk_length: usize,
    pub ky_fan_k: usize,
    pub thresholds: Vec<F17>,
    pub counts: Vec<usize>,
    pub probabilities: Vec<F17>,
    pub ci_low: Vec<F17>,
    pub ci_high: Vec<F17>,
}

impl From<&TailEstimate<f64>> for TailSection {
    fn from(t: &TailEstimate<f64>) -> Self {
        TailSection {
            trials: t.trials,
            walk_length: t.walk_length,
            ky_fan_k: t.ky_fan_k,
            thresholds: f17_vec(t.thresholds.iter().copied()),
            counts: t.counts.clone(),
            probabilities: f17_vec(t.probabilities.iter().copied()),
            ci_low: f17_vec(t.ci_low.iter().copied()),
            ci_high: f17_vec(t.ci_high.iter().copied()),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundRowRecord {
    pub theta: F17,
    pub gap_source: String,
    pub gap_value: F17,
    pub t_star: F17,
    /// `null` when the bound overflows.
    pub bound_raw: F17,
    pub bound_capped: F17,
}

impl From<&BoundRow> for BoundRowRecord {
    fn from(r: &BoundRow) -> Self {
        BoundRowRecord {
            theta: F17(r.theta),
            gap_source: r.gap_source.clone(),
            gap_value: F17(r.gap_value),
            t_star: F17(r.t_star),
            bound_raw: F17(r.bound_raw),
            bound_capped: F17(r.bound_capped),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BaselineRecord {
    pub theta: F17,
    pub value: F17,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub version: u32,
    pub config: ExperimentConfig,
    pub graph: GraphSummary,
    pub spectrum: SpectralSection,
    pub observable: ObservableSection,
    pub tail: TailSection,
    pub bounds: Vec<BoundRowRecord>,
    pub envelope: Option<EnvelopeSection>,
    /// `2·exp(−c_Ω(1−λ)K(ϑ/K)²)` with `λ` the absolute second eigenvalue.
    pub scalar_baseline: Vec<BaselineRecord>,
    pub assumption3: Assumption3Report,
    pub notes: Vec<String>,
    /// Wall-clock seconds per stage; the only nondeterministic field.
    pub timings: BTreeMap<String, f64>,
}

/// Everything `mwl experiment` writes.
#[derive(Clone, Debug)]
pub struct ExperimentOutputs {
    pub report: ExperimentReport,
    pub tail_csv: String,
    pub bound_csv: String,
    pub svg: String,
}

struct Stopwatch {
    timings: BTreeMap<String, f64>,
}

impl Stopwatch {
    fn run<R>(&mut self, stage: &'static str, f: impl FnOnce() -> Result<R>) -> Result<R> {
        let start = Instant::now();
        let out = f().map_err(|e| e.in_stage(stage));
        self.timings.insert(stage.into(), start.elapsed().as_secs_f64());
        out
    }
}

pub fn run_experiment(cfg: &ExperimentConfig, exec: Execution) -> Result<ExperimentOutputs> {
    cfg.validate().map_err(|e| e.in_stage("config"))?;
    let mut sw = Stopwatch {
        timings: BTreeMap::new(),
    };
    let sampling = sw.run("sampling", || build_sampling(cfg))?;
    let opts = GraphOptions {
        include_self_weight: cfg.graph.include_self_weight,
    };
    let (g, m) = sw.run("graph", || {
        let g = build_graph(&sampling, cfg.kappa(), opts)?;
        let m = assemble_matrices(&g)?;
        Ok((g, m))
    })?;
    let (summary, normalized) = sw.run("spectrum", || {
        Ok((
            SpectralSummary::compute(&m, cfg.bound.gap_convention)?,
            measure_normalized_spectrum(&m)?,
        ))
    })?;
    let obs = sw.run("observables", || observables_for(cfg, &m))?;
    let tail = sw.run("walk", || tail_for_graph(cfg, &m, &obs, exec))?;
    let table = sw.run("bound", || bounds_for_graph(cfg, &g, &m, &summary))?;
    let a3 = sw.run("assumption3", || assumption3_for_graph(cfg, &m, &obs))?;

    let mut notes = table.notes.clone();
    if !a3.passed {
        notes.push(format!(
            "assumption 3 spot check failed: {} of {} checks violated",
            a3.violations, a3.checks
        ));
    }
    let shape = cfg.shape()?;
    let svg = tail_chart(&tail, &chart_series(&table), &format!("K = {}, shape {}", cfg.walk.k, shape));
    let report = ExperimentReport {
        version: CONFIG_VERSION,
        config: cfg.clone(),
        graph: GraphSummary {
            coverage_verified: sampling.coverage_verified,
            ..GraphSummary::new(&g, &m)
        },
        spectrum: SpectralSection::new(&summary, &normalized),
        observable: ObservableSection {
            kind: cfg.walk.observable,
            shape: shape.to_string(),
            total_dimension: shape.total(),
            bound_r: F17(obs.bound_r()),
            centered: cfg.walk.center,
        },
        tail: TailSection::from(&tail),
        bounds: table.rows.iter().map(BoundRowRecord::from).collect(),
        envelope: table.envelope.clone(),
        scalar_baseline: table
            .scalar_baseline
            .iter()
            .map(|&(theta, value)| BaselineRecord {
                theta: F17(theta),
                value: F17(value),
            })
            .collect(),
        assumption3: a3,
        notes,
        timings: sw.timings,
    };
    Ok(ExperimentOutputs {
        tail_csv: tail.to_csv(),
        bound_csv: table.to_csv(),
        report,
        svg,
    })
}

fn chart_series(t: &BoundTable) -> Vec<ChartSeries> {
    t.labels()
        .into_iter()
        .map(|label| ChartSeries {
            points: t.series(&label),
            label,
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Envelope constant fit over graph files
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LevelSummary {
    pub n_vertices: usize,
    pub epsilon: F17,
    pub kappa: F17,
    pub graph_eigs: Vec<F17>,
    pub manifold_eigs: Vec<F17>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnvelopeFitReport {
    /// Always `"empirical"`: the constant describes these graphs only.
    pub label: String,
    pub c_const: F17,
    pub n_eigs: usize,
    pub observations: usize,
    pub rms_residual: F17,
    pub degenerate: bool,
    pub warnings: Vec<String>,
    pub dim: usize,
    pub radius: F17,
    pub levels: Vec<LevelSummary>,
}

/// Fits the envelope constant on graphs of one manifold.
pub fn fit_envelope_graphs(graphs: &[WeightedGraph<f64>]) -> Result<EnvelopeFitReport> {
    let Some(first) = graphs.first() else {
        return Err(Error::precondition("fit-envelope needs at least two graphs"));
    };
    let d = &first.descriptor;
    let mut levels = Vec::with_capacity(graphs.len());
    let mut summaries = Vec::with_capacity(graphs.len());
    for (k, g) in graphs.iter().enumerate() {
        if g.descriptor != *d {
            return Err(Error::precondition(format!(
                "graph {k} lies on S^{}({}) but graph 0 on S^{}({}); all inputs must share a manifold",
                g.dim(),
                fmt17(g.descriptor.radius),
                d.dim,
                fmt17(d.radius)
            )));
        }
        let Some(epsilon) = g.epsilon else {
            return Err(Error::precondition(format!("graph {k} records no epsilon")));
        };
        let m = assemble_matrices(g)?;
        let graph_eigs: Vec<f64> = measure_normalized_spectrum(&m)?.into_iter().take(FIT_EIGS).collect();
        let manifold_eigs = sphere_spectrum_with_multiplicity(d, FIT_EIGS, true)?;
        summaries.push(LevelSummary {
            n_vertices: g.n_vertices(),
            epsilon: F17(epsilon),
            kappa: F17(g.kappa),
            graph_eigs: f17_vec(graph_eigs.iter().copied()),
            manifold_eigs: f17_vec(manifold_eigs.iter().copied()),
        });
        levels.push(RefinementLevel {
            epsilon,
            kappa: g.kappa,
            curvature_bound: d.curvature_bound,
            graph_eigs,
            manifold_eigs,
        });
    }
    let fit = fit_envelope(&levels, FIT_EIGS)?;
    Ok(EnvelopeFitReport {
        label: "empirical".into(),
        c_const: F17(fit.c_const),
        n_eigs: FIT_EIGS,
        observations: fit.observations,
        rms_residual: F17(fit.rms_residual),
        degenerate: fit.degenerate,
        warnings: fit.warnings,
        dim: d.dim,
        radius: F17(d.radius),
        levels: summaries,
    })
}

pub fn fit_envelope_files<P: AsRef<Path>>(paths: &[P]) -> Result<EnvelopeFitReport> {
    let graphs = paths.iter().map(read_graph).collect::<Result<Vec<_>>>()?;
    fit_envelope_graphs(&graphs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle_config() -> ExperimentConfig {
        ExperimentConfig::from_json(
            r#"{
                "version": 1,
                "manifold": {"family": "sphere", "dim": 1, "radius": 1.0},
                "sampling": {"method": "uniform", "n_points": 24, "seed": 7},
                "walk": {"K": 4, "trials": 400, "shape": [2, 2], "seed": 11},
                "bound": {"n_thetas": 5}
            }"#,
            "inline",
        )
        .unwrap()
    }

    #[test]
    fn defaults_fill_in() {
        let c = circle_config();
        assert_eq!(c.graph.kappa_factor, 4.0);
        assert_eq!(c.polynomial.coeffs, vec![0.0, 1.0]);
        assert_eq!(c.bound.gap_convention, GapConvention::AbsoluteSecond);
        assert!((c.epsilon() - std::f64::consts::PI / 24.0).abs() < 1e-15);
        assert_eq!(c.thresholds().unwrap(), vec![0.0, 1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn unknown_fields_are_parse_errors() {
        let e = ExperimentConfig::from_json(r#"{"version": 1, "bogus": 2}"#, "x").unwrap_err();
        assert_eq!(e.exit_code(), 5);
    }

    #[test]
    fn walk_longer_than_tensor_dimension_is_rejected_up_front() {
        let mut c = circle_config();
        c.walk.shape = vec![2];
        let e = c.validate().unwrap_err();
        assert_eq!(e.exit_code(), 6);
        assert!(e.to_string().contains("exceeds the tensor dimension"), "{e}");
    }

    #[test]
    fn config_echo_round_trips() {
        let c = circle_config();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text, "echo").unwrap(), c);
    }

    #[test]
    fn uncovered_uniform_sampling_is_a_coverage_failure() {
        let mut c = circle_config();
        c.sampling.epsilon = Some(0.01);
        let e = build_sampling(&c).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn experiment_outputs_are_consistent() {
        let out = run_experiment(&circle_config(), Execution::Parallel).unwrap();
        let r = &out.report;
        assert_eq!(r.graph.n_vertices, 24);
        assert_eq!(r.tail.thresholds.len(), 5);
        // Four gap sources per threshold.
        assert_eq!(r.bounds.len(), 20);
        assert!(r.envelope.is_some());
        assert!(r.assumption3.passed);
        assert!(r.tail.probabilities.windows(2).all(|w| w[0].0 >= w[1].0));
        assert_eq!(out.tail_csv.lines().count(), 6);
        assert_eq!(out.bound_csv.lines().count(), 21);
        assert!(out.svg.starts_with("<svg"));
        for stage in ["sampling", "graph", "spectrum", "walk", "bound", "assumption3"] {
            assert!(r.timings.contains_key(stage), "{stage}");
        }
    }

    #[test]
    fn execution_modes_agree() {
        let c = circle_config();
        let a = run_experiment(&c, Execution::Parallel).unwrap();
        let b = run_experiment(&c, Execution::Sequential).unwrap();
        assert_eq!(a.tail_csv, b.tail_csv);
        assert_eq!(a.bound_csv, b.bound_csv);
    }

    #[test]
    fn fit_on_identical_graphs_is_degenerate() {
        let g = build_graph_from_config(&circle_config()).unwrap();
        let fit = fit_envelope_graphs(&[g.clone(), g]).unwrap();
        assert!(fit.degenerate);
        assert!(!fit.warnings.is_empty());
        assert!(fit.c_const.0 >= 0.0);
        assert_eq!(fit.label, "empirical");
    }

    #[test]
    fn fit_rejects_mixed_manifolds() {
        let g = build_graph_from_config(&circle_config()).unwrap();
        let mut c = circle_config();
        c.manifold.radius = 2.0;
        let h = build_graph_from_config(&c).unwrap();
        let e = fit_envelope_graphs(&[g, h]).unwrap_err();
        assert!(e.to_string().contains("share a manifold"), "{e}");
    }
}
