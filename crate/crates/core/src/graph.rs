//! The weighted approximation graph and its degree, Laplacian and transition
//! matrices.
//!
//! Vertices `v_i` with measures `μ_i` are joined when `d_g(v_i, v_j) < κ`,
//! with weight
//!
//! ```text
//! w_ij = 2(n+2)·Γ(1+n/2) / (π^{n/2}·κ^{n+2}) · μ_i·μ_j
//! ```
//!
//! From the weights: `d_i = Σ_j w_ij`, `L = diag(d) − W`, `P = diag(d)⁻¹·W`.

use std::collections::VecDeque;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{read_json, write_json, F17};
use crate::linalg::Matrix;
use crate::manifold::{Manifold, ManifoldDescriptor, ManifoldSampling, SamplePoint};
use crate::scalar::Real;
use crate::special::gamma_half;

/// `2(n+2)Γ(1+n/2) / (π^{n/2} κ^{n+2})`.
pub fn edge_weight_constant<T: Real>(dim: usize, kappa: T) -> T {
    let n = T::from_usize_lossy(dim);
    let two = T::lit(2.0);
    two * (n + two) * gamma_half::<T>(dim as u32 + 2) / (T::PI().powf(n / two) * kappa.powi(dim as i32 + 2))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GraphOptions {
    /// Count `w_ii = c·μ_i²` in the degree and on the diagonal of `W`
    /// (a lazy walk). Off by default: `W` has a zero diagonal.
    pub include_self_weight: bool,
}

/// `G_M(ε, μ, κ)`: symmetric nonnegative weights over sampled vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedGraph<T> {
    pub descriptor: ManifoldDescriptor<T>,
    pub kappa: T,
    /// Net radius of the source sampling, when known.
    pub epsilon: Option<T>,
    pub points: Vec<SamplePoint<T>>,
    pub weights: Matrix<T>,
    pub self_weight: bool,
}

impl<T: Real> WeightedGraph<T> {
    pub fn n_vertices(&self) -> usize {
        self.points.len()
    }

    pub fn dim(&self) -> usize {
        self.descriptor.dim
    }

    pub fn measures(&self) -> Vec<T> {
        self.points.iter().map(|p| p.measure).collect()
    }

    /// Number of positive off-diagonal weights with `i < j`.
    pub fn edge_count(&self) -> usize {
        let n = self.n_vertices();
        (0..n)
            .map(|i| ((i + 1)..n).filter(|&j| self.weights[(i, j)] > T::zero()).count())
            .sum()
    }

    pub fn degrees(&self) -> Vec<T> {
        let n = self.n_vertices();
        (0..n).map(|i| self.weights.row(i).iter().copied().sum()).collect()
    }

    /// Sizes of the connected components, largest first.
    pub fn component_sizes(&self) -> Vec<usize> {
        component_sizes(&self.weights)
    }

    /// Errors unless the graph is connected and no vertex has zero degree.
    pub fn check_connected(&self) -> Result<()> {
        let sizes = self.component_sizes();
        if sizes.len() > 1 {
            return Err(Error::Disconnected { component_sizes: sizes });
        }
        if let Some(vertex) = self.degrees().iter().position(|&d| !(d > T::zero())) {
            return Err(Error::IsolatedVertex { vertex });
        }
        Ok(())
    }

    /// Replaces every measure by `factor·μ_i` and rescales the weights.
    pub fn with_scaled_measures(&self, factor: T) -> Self {
        let mut g = self.clone();
        for p in &mut g.points {
            p.measure = p.measure * factor;
        }
        g.weights = g.weights.map(|w| w * factor * factor);
        g
    }
}

/// Component sizes of the graph with adjacency `w_ij > 0`, largest first.
pub fn component_sizes<T: Real>(w: &Matrix<T>) -> Vec<usize> {
    let n = w.rows();
    let mut seen = vec![false; n];
    let mut sizes = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        let mut size = 0;
        while let Some(u) = queue.pop_front() {
            size += 1;
            for v in 0..n {
                if !seen[v] && v != u && w[(u, v)] > T::zero() {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        sizes.push(size);
    }
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}

fn weight_matrix<T: Real>(s: &ManifoldSampling<T>, kappa: T, self_weight: bool) -> Matrix<T> {
    let c = edge_weight_constant(s.descriptor.dim, kappa);
    let n = s.len();
    let mut w = Matrix::zeros(n, n);
    for i in 0..n {
        let pi = &s.points[i];
        if self_weight {
            w[(i, i)] = c * pi.measure * pi.measure;
        }
        for j in (i + 1)..n {
            let pj = &s.points[j];
            if s.descriptor.distance(&pi.coords, &pj.coords) < kappa {
                let wij = c * pi.measure * pj.measure;
                w[(i, j)] = wij;
                w[(j, i)] = wij;
            }
        }
    }
    w
}

/// Builds `G_M(ε, μ, κ)` from a sampling with assigned measures and checks
/// that it is connected.
pub fn build_graph<T: Real>(s: &ManifoldSampling<T>, kappa: T, opts: GraphOptions) -> Result<WeightedGraph<T>> {
    if !(kappa > T::zero()) || !kappa.is_finite() {
        return Err(Error::precondition("kappa must be positive and finite"));
    }
    if s.is_empty() {
        return Err(Error::precondition("sampling has no vertices"));
    }
    if let Some(i) = s.points.iter().position(|p| !(p.measure > T::zero())) {
        return Err(Error::precondition(format!(
            "vertex {i} has no positive measure; estimate Voronoi measures first"
        )));
    }
    let amb = s.descriptor.ambient_dim();
    if let Some(p) = s.points.iter().find(|p| p.coords.len() != amb) {
        return Err(Error::DimensionMismatch {
            expected: amb,
            found: p.coords.len(),
        });
    }
    let g = WeightedGraph {
        descriptor: s.descriptor.clone(),
        kappa,
        epsilon: Some(s.epsilon),
        points: s.points.clone(),
        weights: weight_matrix(s, kappa, opts.include_self_weight),
        self_weight: opts.include_self_weight,
    };
    g.check_connected()?;
    Ok(g)
}

/// `D`, `L` and `P` of a connected weighted graph.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphMatrices<T> {
    pub degrees: Vec<T>,
    pub weights: Matrix<T>,
    pub laplacian: Matrix<T>,
    pub transition: Matrix<T>,
    /// Vertex measures `μ_i`, kept for the measure-normalised spectrum.
    pub measures: Vec<T>,
}

impl<T: Real> GraphMatrices<T> {
    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }

    /// Sum of all degrees.
    pub fn volume(&self) -> T {
        self.degrees.iter().copied().sum()
    }

    pub fn check_connected(&self) -> Result<()> {
        let sizes = component_sizes(&self.weights);
        if sizes.len() > 1 {
            return Err(Error::Disconnected { component_sizes: sizes });
        }
        Ok(())
    }
}

/// Row-sum tolerance for `P`; larger deviations are a construction bug.
fn row_sum_tolerance<T: Real>() -> T {
    T::lit(1e-12).max(T::epsilon() * T::lit(64.0))
}

pub fn assemble_matrices<T: Real>(g: &WeightedGraph<T>) -> Result<GraphMatrices<T>> {
    let n = g.n_vertices();
    let degrees = g.degrees();
    if let Some(vertex) = degrees.iter().position(|&d| !(d > T::zero())) {
        return Err(Error::IsolatedVertex { vertex });
    }
    let w = &g.weights;
    let laplacian = Matrix::from_fn(n, n, |i, j| if i == j { degrees[i] - w[(i, i)] } else { -w[(i, j)] });
    let mut transition = Matrix::from_fn(n, n, |i, j| w[(i, j)] / degrees[i]);
    let tol = row_sum_tolerance::<T>();
    for i in 0..n {
        let sum: T = transition.row(i).iter().copied().sum();
        if (sum - T::one()).abs() > tol {
            return Err(Error::precondition(format!(
                "transition row {i} sums to {sum}; degree/weight mismatch"
            )));
        }
        for j in 0..n {
            transition[(i, j)] = transition[(i, j)] / sum;
        }
    }
    Ok(GraphMatrices {
        degrees,
        weights: w.clone(),
        laplacian,
        transition,
        measures: g.measures(),
    })
}

// ---------------------------------------------------------------------------
// Graph file format
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VertexRecord {
    pub coords: Vec<F17>,
    pub measure: F17,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub i: usize,
    pub j: usize,
    pub w: F17,
}

/// On-disk graph document (`"version": 1`).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GraphFile {
    pub version: u32,
    pub dim: usize,
    pub kappa: F17,
    pub radius: F17,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<F17>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub self_weight: bool,
    pub vertices: Vec<VertexRecord>,
    pub edges: Vec<EdgeRecord>,
}

impl GraphFile {
    pub fn from_graph(g: &WeightedGraph<f64>) -> Self {
        let n = g.n_vertices();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let w = g.weights[(i, j)];
                if w > 0.0 {
                    edges.push(EdgeRecord { i, j, w: F17(w) });
                }
            }
        }
        GraphFile {
            version: 1,
            dim: g.dim(),
            kappa: F17(g.kappa),
            radius: F17(g.descriptor.radius),
            epsilon: g.epsilon.map(F17),
            self_weight: g.self_weight,
            vertices: g
                .points
                .iter()
                .map(|p| VertexRecord {
                    coords: p.coords.iter().copied().map(F17).collect(),
                    measure: F17(p.measure),
                })
                .collect(),
            edges,
        }
    }

    /// Rebuilds and validates the graph.
    pub fn into_graph(self) -> Result<WeightedGraph<f64>> {
        let bad = |msg: String| Error::Parse {
            source_name: "graph file".into(),
            message: msg,
        };
        if self.version != 1 {
            return Err(bad(format!("unsupported graph file version {}", self.version)));
        }
        let descriptor = ManifoldDescriptor::sphere(self.dim, self.radius.0).map_err(|e| bad(e.to_string()))?;
        let kappa = self.kappa.0;
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(bad("kappa must be positive".into()));
        }
        let amb = descriptor.ambient_dim();
        let points: Vec<SamplePoint<f64>> = self
            .vertices
            .into_iter()
            .enumerate()
            .map(|(k, v)| {
                if v.coords.len() != amb {
                    return Err(bad(format!("vertex {k} has {} coordinates, expected {amb}", v.coords.len())));
                }
                if !(v.measure.0 > 0.0 && v.measure.0.is_finite()) {
                    return Err(bad(format!("vertex {k} has non-positive measure")));
                }
                Ok(SamplePoint {
                    coords: v.coords.into_iter().map(|c| c.0).collect(),
                    measure: v.measure.0,
                })
            })
            .collect::<Result<_>>()?;
        let n = points.len();
        if n == 0 {
            return Err(bad("graph has no vertices".into()));
        }
        let mut weights = Matrix::zeros(n, n);
        for e in &self.edges {
            if !(e.i < e.j && e.j < n) {
                return Err(bad(format!("edge ({}, {}) must satisfy i < j < {n}", e.i, e.j)));
            }
            if !(e.w.0 > 0.0 && e.w.0.is_finite()) {
                return Err(bad(format!("edge ({}, {}) has non-positive weight", e.i, e.j)));
            }
            if weights[(e.i, e.j)] != 0.0 {
                return Err(bad(format!("duplicate edge ({}, {})", e.i, e.j)));
            }
            weights[(e.i, e.j)] = e.w.0;
            weights[(e.j, e.i)] = e.w.0;
        }
        if self.self_weight {
            let c = edge_weight_constant(self.dim, kappa);
            for (i, p) in points.iter().enumerate() {
                weights[(i, i)] = c * p.measure * p.measure;
            }
        }
        let g = WeightedGraph {
            descriptor,
            kappa,
            epsilon: self.epsilon.map(|e| e.0),
            points,
            weights,
            self_weight: self.self_weight,
        };
        g.check_connected()?;
        Ok(g)
    }
}

pub fn write_graph(path: impl AsRef<Path>, g: &WeightedGraph<f64>) -> Result<()> {
    write_json(path, &GraphFile::from_graph(g))
}

pub fn read_graph(path: impl AsRef<Path>) -> Result<WeightedGraph<f64>> {
    read_json::<GraphFile>(path)?.into_graph()
}
