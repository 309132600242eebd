//! Hermitian tensors of order `2M` under the Einstein product.
//!
//! A tensor with entries indexed by `(i_1..i_M, j_1..j_M)` is stored as its
//! square unfolding: row `enc(i_1..i_M)`, column `enc(j_1..j_M)`, where `enc`
//! is the mixed-radix encoding with `i_1` most significant. The Einstein
//! product is then the matrix product of unfoldings, and every spectral
//! notion is the matrix one.

use std::fmt;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{HermitianEigen, Matrix};
use crate::rng::{gaussian, substream};
use crate::scalar::Real;

/// Largest supported `𝕀₁^M`.
pub const MAX_TOTAL: usize = 64;

/// Asymmetry up to this (relative to `max(1, ‖A‖_F)`) is symmetrised away.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Mode dimensions `I_1..I_M` of one half of the index.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TensorShape {
    mode_dims: Vec<usize>,
}

impl TensorShape {
    pub fn new(mode_dims: Vec<usize>) -> Result<Self> {
        if mode_dims.is_empty() {
            return Err(Error::ShapeMismatch("tensor shape needs at least one mode".into()));
        }
        if mode_dims.contains(&0) {
            return Err(Error::ShapeMismatch(format!("mode dimensions must be positive: {mode_dims:?}")));
        }
        let total = mode_dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
        match total {
            Some(t) if t <= MAX_TOTAL => Ok(TensorShape { mode_dims }),
            _ => Err(Error::ShapeMismatch(format!(
                "product of mode dimensions {mode_dims:?} exceeds {MAX_TOTAL}"
            ))),
        }
    }

    /// Parses `"2,2;2,2"` (both halves, which must agree) or `"2,2"`.
    pub fn parse(text: &str) -> Result<Self> {
        let halves: Vec<&str> = text.trim().trim_matches(|c| c == '(' || c == ')').split(';').collect();
        let parse_half = |h: &str| -> Result<Vec<usize>> {
            h.split(',')
                .map(|x| {
                    x.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::ShapeMismatch(format!("bad tensor shape {text:?}")))
                })
                .collect()
        };
        match halves.as_slice() {
            [one] => Self::new(parse_half(one)?),
            [a, b] => {
                let (a, b) = (parse_half(a)?, parse_half(b)?);
                if a != b {
                    return Err(Error::ShapeMismatch(format!("square tensor needs equal halves, got {text:?}")));
                }
                Self::new(a)
            }
            _ => Err(Error::ShapeMismatch(format!("bad tensor shape {text:?}"))),
        }
    }

    pub fn mode_dims(&self) -> &[usize] {
        &self.mode_dims
    }

    /// `M`.
    pub fn modes(&self) -> usize {
        self.mode_dims.len()
    }

    /// `𝕀₁^M`.
    pub fn total(&self) -> usize {
        self.mode_dims.iter().product()
    }

    /// Mixed-radix position of a multi-index, first mode most significant.
    pub fn encode(&self, idx: &[usize]) -> usize {
        assert_eq!(idx.len(), self.modes(), "multi-index length");
        idx.iter().zip(&self.mode_dims).fold(0, |acc, (&i, &d)| {
            assert!(i < d, "index {i} out of range for mode of size {d}");
            acc * d + i
        })
    }

    pub fn decode(&self, mut pos: usize) -> Vec<usize> {
        let mut out = vec![0; self.modes()];
        for (slot, &d) in out.iter_mut().zip(&self.mode_dims).rev() {
            *slot = pos % d;
            pos /= d;
        }
        out
    }
}

impl fmt::Display for TensorShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let half = self.mode_dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(",");
        write!(f, "({half};{half})")
    }
}

/// A square order-`2M` complex tensor, not necessarily Hermitian.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T> {
    shape: TensorShape,
    unfolded: Matrix<Complex<T>>,
}

impl<T: Real> Tensor<T> {
    pub fn refold(m: Matrix<Complex<T>>, shape: &TensorShape) -> Result<Self> {
        let n = shape.total();
        if m.rows() != n || m.cols() != n {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} matrix cannot be refolded to shape {shape} (side {n})",
                m.rows(),
                m.cols()
            )));
        }
        Ok(Tensor {
            shape: shape.clone(),
            unfolded: m,
        })
    }

    pub fn shape(&self) -> &TensorShape {
        &self.shape
    }

    pub fn unfold(&self) -> &Matrix<Complex<T>> {
        &self.unfolded
    }

    /// Entry at `(i_1..i_M, j_1..j_M)`.
    pub fn get(&self, i: &[usize], j: &[usize]) -> Complex<T> {
        self.unfolded[(self.shape.encode(i), self.shape.encode(j))]
    }

    pub fn einstein_product(&self, other: &Tensor<T>) -> Result<Tensor<T>> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch(format!(
                "Einstein product of shapes {} and {}",
                self.shape, other.shape
            )));
        }
        Ok(Tensor {
            shape: self.shape.clone(),
            unfolded: self.unfolded.matmul(&other.unfolded),
        })
    }
}

/// A tensor whose unfolding equals its conjugate transpose.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianTensor<T> {
    inner: Tensor<T>,
}

impl<T: Real> HermitianTensor<T> {
    /// Accepts an unfolding within [`HERMITIAN_TOL`] of Hermitian and
    /// replaces it by `(A + A*)/2`.
    pub fn from_unfolding(m: Matrix<Complex<T>>, shape: &TensorShape) -> Result<Self> {
        let t = Tensor::refold(m, shape)?;
        Self::try_from_tensor(t)
    }

    pub fn try_from_tensor(t: Tensor<T>) -> Result<Self> {
        let m = &t.unfolded;
        let defect = m.hermitian_defect();
        let scale = T::one().max(m.frobenius_norm());
        if !(defect <= T::lit(HERMITIAN_TOL) * scale) {
            return Err(Error::NonHermitian {
                asymmetry: defect.as_f64(),
            });
        }
        let half = Complex::new(T::lit(0.5), T::zero());
        let sym = Matrix::from_fn(m.rows(), m.cols(), |i, j| (m[(i, j)] + m[(j, i)].conj()) * half);
        Ok(HermitianTensor {
            inner: Tensor {
                shape: t.shape,
                unfolded: sym,
            },
        })
    }

    pub fn identity(shape: &TensorShape) -> Self {
        Self::diagonal(shape, &vec![T::one(); shape.total()]).expect("diagonal of matching length")
    }

    /// Diagonal unfolding with the given real entries.
    pub fn diagonal(shape: &TensorShape, diag: &[T]) -> Result<Self> {
        if diag.len() != shape.total() {
            return Err(Error::ShapeMismatch(format!(
                "{} diagonal entries for shape {shape}",
                diag.len()
            )));
        }
        let d: Vec<Complex<T>> = diag.iter().map(|&x| Complex::new(x, T::zero())).collect();
        Ok(HermitianTensor {
            inner: Tensor {
                shape: shape.clone(),
                unfolded: Matrix::from_diagonal(&d),
            },
        })
    }

    pub fn shape(&self) -> &TensorShape {
        &self.inner.shape
    }

    pub fn unfold(&self) -> &Matrix<Complex<T>> {
        &self.inner.unfolded
    }

    pub fn get(&self, i: &[usize], j: &[usize]) -> Complex<T> {
        self.inner.get(i, j)
    }

    pub fn as_tensor(&self) -> &Tensor<T> {
        &self.inner
    }

    pub fn into_tensor(self) -> Tensor<T> {
        self.inner
    }

    pub fn einstein_product(&self, other: &HermitianTensor<T>) -> Result<Tensor<T>> {
        self.inner.einstein_product(&other.inner)
    }

    pub fn add(&self, other: &HermitianTensor<T>) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch(format!("sum of shapes {} and {}", self.shape(), other.shape())));
        }
        Ok(HermitianTensor {
            inner: Tensor {
                shape: self.shape().clone(),
                unfolded: self.unfold().zip_with(other.unfold(), |a, b| a + b),
            },
        })
    }

    pub fn scale(&self, c: T) -> Self {
        HermitianTensor {
            inner: Tensor {
                shape: self.shape().clone(),
                unfolded: self.unfold().map(|z| z * c),
            },
        }
    }

    pub fn eigen(&self) -> Result<HermitianEigen<T>> {
        HermitianEigen::new(self.unfold())
    }

    /// Eigenvalues of the unfolding, descending.
    pub fn eigenvalues(&self) -> Result<Vec<T>> {
        let mut v = self.eigen()?.values;
        v.reverse();
        Ok(v)
    }

    pub fn spectral_norm(&self) -> Result<T> {
        Ok(self.eigenvalues()?.iter().fold(T::zero(), |m, x| m.max(x.abs())))
    }

    /// Sum of the `k` largest singular values (`|λ|` for a Hermitian tensor).
    pub fn ky_fan_norm(&self, k: usize) -> Result<T> {
        let mut abs: Vec<T> = self.eigenvalues()?.iter().map(|x| x.abs()).collect();
        check_k(k, abs.len())?;
        abs.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
        Ok(abs[..k].iter().copied().sum())
    }

    /// Sum of the `k` largest signed eigenvalues. Not a norm on indefinite
    /// tensors; kept for comparison.
    pub fn ky_fan_signed(&self, k: usize) -> Result<T> {
        let v = self.eigenvalues()?;
        check_k(k, v.len())?;
        Ok(v[..k].iter().copied().sum())
    }

    /// `f(H) = U·diag(f(λ))·U*` for `f(x) = (Σ a_l x^l)^s`.
    pub fn apply_polynomial(&self, p: &PolynomialSpec<T>) -> Result<Self> {
        self.apply_fn(|x| p.eval(x))
    }

    /// Spectral calculus with an arbitrary real function.
    pub fn apply_fn(&self, f: impl Fn(T) -> T) -> Result<Self> {
        let m = self.eigen()?.reconstruct_with(f);
        Ok(HermitianTensor {
            inner: Tensor {
                shape: self.shape().clone(),
                unfolded: m,
            },
        })
    }
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::precondition(format!("Ky Fan index k = {k} must lie in 1..={n}")));
    }
    Ok(())
}

/// `f(x) = (a_0 + a_1 x + … + a_deg x^deg)^s` with nonnegative `a_l`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialSpec<T> {
    coeffs: Vec<T>,
    power: u32,
}

impl<T: Real> PolynomialSpec<T> {
    pub fn new(coeffs: Vec<T>, power: u32) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::precondition("polynomial needs at least one coefficient"));
        }
        if coeffs.iter().any(|&a| !(a >= T::zero()) || !a.is_finite()) {
            return Err(Error::precondition("polynomial coefficients must be finite and nonnegative"));
        }
        if !coeffs.iter().any(|&a| a > T::zero()) {
            return Err(Error::precondition("polynomial needs a positive coefficient"));
        }
        if power < 1 {
            return Err(Error::precondition("polynomial power s must be at least 1"));
        }
        Ok(PolynomialSpec { coeffs, power })
    }

    /// `f(x) = x`.
    pub fn identity() -> Self {
        PolynomialSpec {
            coeffs: vec![T::zero(), T::one()],
            power: 1,
        }
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    /// `s`.
    pub fn power(&self) -> u32 {
        self.power
    }

    /// `deg`, the index of the last coefficient.
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: T) -> T {
        let inner = self.coeffs.iter().rev().fold(T::zero(), |acc, &a| acc * x + a);
        inner.powi(self.power as i32)
    }
}

/// `(G + G*)/2` from a complex Gaussian `G`, rescaled to spectral norm `r`.
pub fn random_hermitian<T: Real>(shape: &TensorShape, r: T, seed: u64) -> Result<HermitianTensor<T>> {
    if !(r > T::zero()) || !r.is_finite() {
        return Err(Error::precondition("random_hermitian needs r > 0"));
    }
    let n = shape.total();
    let mut rng = substream(seed, "hermitian", 0);
    let g = Matrix::from_fn(n, n, |_, _| Complex::new(T::lit(gaussian(&mut rng)), T::lit(gaussian(&mut rng))));
    let half = Complex::new(T::lit(0.5), T::zero());
    let h = Matrix::from_fn(n, n, |i, j| (g[(i, j)] + g[(j, i)].conj()) * half);
    let h = HermitianTensor {
        inner: Tensor {
            shape: shape.clone(),
            unfolded: h,
        },
    };
    let norm = h.spectral_norm()?;
    Ok(h.scale(r / norm))
}

/// Literal fixture format: entries in unfolding row-major order. `shape`
/// lists all `2M` dimensions, or just `I_1..I_M`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TensorLiteral {
    pub shape: Vec<usize>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl TensorLiteral {
    pub fn from_tensor(t: &HermitianTensor<f64>) -> Self {
        let dims = t.shape().mode_dims();
        let data = t.unfold().as_slice();
        TensorLiteral {
            shape: dims.iter().chain(dims).copied().collect(),
            re: data.iter().map(|z| z.re).collect(),
            im: data.iter().map(|z| z.im).collect(),
        }
    }

    pub fn into_tensor(self) -> Result<HermitianTensor<f64>> {
        let s = &self.shape;
        let half = if s.len() % 2 == 0 && s[..s.len() / 2] == s[s.len() / 2..] {
            s[..s.len() / 2].to_vec()
        } else {
            s.clone()
        };
        let shape = TensorShape::new(half)?;
        let n = shape.total();
        if self.re.len() != n * n || self.im.len() != n * n {
            return Err(Error::ShapeMismatch(format!(
                "shape {shape} needs {} entries, got re {} / im {}",
                n * n,
                self.re.len(),
                self.im.len()
            )));
        }
        let data = self.re.iter().zip(&self.im).map(|(&a, &b)| Complex::new(a, b)).collect();
        HermitianTensor::from_unfolding(Matrix::from_row_major(n, n, data), &shape)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type C = Complex<f64>;

    fn shape(d: &[usize]) -> TensorShape {
        TensorShape::new(d.to_vec()).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    fn diag_of(t: &HermitianTensor<f64>) -> Vec<f64> {
        (0..t.shape().total()).map(|i| t.unfold()[(i, i)].re).collect()
    }

    #[test]
    fn shape_basics() {
        let s = shape(&[2, 3]);
        assert_eq!(s.total(), 6);
        assert_eq!(s.to_string(), "(2,3;2,3)");
        // 1-based (i1, i2) -> 3(i1 − 1) + i2
        for i1 in 1..=2 {
            for i2 in 1..=3 {
                assert_eq!(s.encode(&[i1 - 1, i2 - 1]) + 1, 3 * (i1 - 1) + i2);
            }
        }
        for p in 0..6 {
            assert_eq!(s.encode(&s.decode(p)), p);
        }
        assert_eq!(TensorShape::parse("2,2;2,2").unwrap(), shape(&[2, 2]));
        assert_eq!(TensorShape::parse("(2;2)").unwrap(), shape(&[2]));
        assert!(TensorShape::parse("2;3").is_err());
        assert!(TensorShape::new(vec![]).is_err());
        assert!(TensorShape::new(vec![8, 9]).is_err());
    }

    #[test]
    fn identity_unfolds_to_identity() {
        let t = HermitianTensor::<f64>::identity(&shape(&[2]));
        assert_eq!(t.unfold(), &Matrix::<C>::identity(2));
        let t = HermitianTensor::<f64>::identity(&shape(&[2, 2]));
        assert_eq!(t.eigenvalues().unwrap(), vec![1.0; 4]);
        assert_eq!(t.get(&[1, 0], &[1, 0]), C::new(1.0, 0.0));
        assert_eq!(t.get(&[1, 0], &[0, 1]), C::new(0.0, 0.0));
        assert_eq!(t.ky_fan_norm(2).unwrap(), 2.0);
    }

    #[test]
    fn refold_round_trip_and_mismatch() {
        let s = shape(&[2, 3]);
        let t = random_hermitian(&s, 1.0f64, 1).unwrap();
        let back = HermitianTensor::from_unfolding(t.unfold().clone(), &s).unwrap();
        assert_eq!(back, t);
        assert!(Tensor::refold(Matrix::<C>::zeros(5, 5), &s).is_err());
    }

    #[test]
    fn hermitian_enforcement() {
        let s = shape(&[2]);
        let mut m = Matrix::<C>::identity(2);
        m[(0, 1)] = C::new(0.5, 0.2);
        m[(1, 0)] = C::new(0.5, -0.2 + 5e-11);
        let t = HermitianTensor::from_unfolding(m.clone(), &s).unwrap();
        assert_eq!(t.unfold().hermitian_defect(), 0.0);
        m[(1, 0)] = C::new(0.5, 0.2);
        assert!(matches!(HermitianTensor::from_unfolding(m, &s), Err(Error::NonHermitian { .. })));
    }

    #[test]
    fn diagonal_examples() {
        let s = shape(&[3]);
        let t = HermitianTensor::diagonal(&s, &[3.0, 1.0, -2.0]).unwrap();
        assert!(close(&t.eigenvalues().unwrap(), &[3.0, 1.0, -2.0], 1e-15));
        assert_eq!(t.ky_fan_norm(1).unwrap(), 3.0);
        assert_eq!(t.ky_fan_norm(2).unwrap(), 5.0);
        assert_eq!(t.ky_fan_norm(3).unwrap(), 6.0);
        assert_eq!(t.ky_fan_signed(3).unwrap(), 2.0);
        assert!(t.ky_fan_norm(0).is_err() && t.ky_fan_norm(4).is_err());
        let sq = PolynomialSpec::new(vec![0.0, 0.0, 1.0], 1).unwrap();
        assert!(close(&diag_of(&t.apply_polynomial(&sq).unwrap()), &[9.0, 1.0, 4.0], 1e-14));
        let id = t.apply_polynomial(&PolynomialSpec::identity()).unwrap();
        assert!(close(&diag_of(&id), &[3.0, 1.0, -2.0], 1e-15));
        let b = HermitianTensor::diagonal(&s, &[2.0, -1.0, 0.5]).unwrap();
        let prod = t.einstein_product(&b).unwrap();
        for (i, want) in [6.0, -1.0, -1.0].iter().enumerate() {
            assert_eq!(prod.unfold()[(i, i)], C::new(*want, 0.0));
        }
        let p = PolynomialSpec::new(vec![1.0, 1.0], 2).unwrap();
        let d = HermitianTensor::diagonal(&shape(&[2]), &[1.0, 0.0]).unwrap();
        assert!(close(&diag_of(&d.apply_polynomial(&p).unwrap()), &[4.0, 1.0], 1e-14));
    }

    #[test]
    fn rank_one_projector() {
        let s = shape(&[2, 2]);
        let x = [C::new(0.5, 0.0), C::new(0.0, 0.5), C::new(-0.5, 0.0), C::new(0.0, -0.5)];
        let m = Matrix::from_fn(4, 4, |i, j| x[i] * x[j].conj());
        let t = HermitianTensor::from_unfolding(m, &s).unwrap();
        assert!(close(&t.eigenvalues().unwrap(), &[1.0, 0.0, 0.0, 0.0], 1e-14));
    }

    #[test]
    fn polynomial_spec_validation() {
        assert!(PolynomialSpec::<f64>::new(vec![], 1).is_err());
        assert!(PolynomialSpec::new(vec![0.0, -1.0], 1).is_err());
        assert!(PolynomialSpec::new(vec![0.0, 0.0], 1).is_err());
        assert!(PolynomialSpec::new(vec![1.0], 0).is_err());
        let p = PolynomialSpec::new(vec![1.0, 2.0, 0.5], 3).unwrap();
        assert_eq!(p.degree(), 2);
        assert_eq!(p.eval(2.0), (1.0f64 + 4.0 + 2.0).powi(3));
    }

    #[test]
    fn random_hermitian_norm_and_determinism() {
        let s = shape(&[2, 2]);
        for seed in 0..20 {
            let t = random_hermitian(&s, 1.7f64, seed).unwrap();
            assert!((t.spectral_norm().unwrap() - 1.7).abs() <= 1e-12);
            assert_eq!(t, random_hermitian(&s, 1.7f64, seed).unwrap());
        }
        assert_ne!(random_hermitian(&s, 1.0f64, 1).unwrap(), random_hermitian(&s, 1.0f64, 2).unwrap());
        let t32 = random_hermitian(&s, 1.0f32, 3).unwrap();
        assert!((t32.spectral_norm().unwrap() - 1.0).abs() < 1e-5);
    }

    #[test]
    fn random_hermitian_spectrum_is_symmetric() {
        // The GUE law is invariant under H -> -H, so the mean eigenvalue is 0.
        let s = shape(&[2, 2]);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut count = 0.0;
        for seed in 0..1000 {
            for l in random_hermitian(&s, 1.0f64, seed).unwrap().eigenvalues().unwrap() {
                sum += l;
                sum_sq += l * l;
                count += 1.0;
            }
        }
        let mean = sum / count;
        let sd = (sum_sq / count - mean * mean).sqrt();
        assert!(mean.abs() < 4.0 * sd / count.sqrt(), "mean {mean}, sd {sd}");
    }

    #[test]
    fn literal_round_trip() {
        let t = random_hermitian(&shape(&[2, 2]), 1.0f64, 9).unwrap();
        let lit = TensorLiteral::from_tensor(&t);
        assert_eq!(lit.shape, vec![2, 2, 2, 2]);
        let json = serde_json::to_string(&lit).unwrap();
        let back: TensorLiteral = serde_json::from_str(&json).unwrap();
        assert_eq!(back.into_tensor().unwrap(), t);
        let short = TensorLiteral { shape: vec![2], re: vec![1.0, 0.0, 0.0, 2.0], im: vec![0.0; 4] };
        assert_eq!(diag_of(&short.into_tensor().unwrap()), vec![1.0, 2.0]);
        let bad = TensorLiteral { shape: vec![2], re: vec![1.0; 3], im: vec![0.0; 3] };
        assert!(bad.into_tensor().is_err());
    }

    /// `Σ a_l t^{⋆l}`, then the `s`-th ⋆-power, by repeated Einstein products.
    pub(crate) fn polynomial_direct(t: &HermitianTensor<f64>, p: &PolynomialSpec<f64>) -> Matrix<C> {
        let id = HermitianTensor::<f64>::identity(t.shape()).into_tensor();
        let mut power = id.clone();
        let mut acc = Matrix::<C>::zeros(t.shape().total(), t.shape().total());
        for (l, &a) in p.coeffs().iter().enumerate() {
            if l > 0 {
                power = power.einstein_product(t.as_tensor()).unwrap();
            }
            acc = acc.zip_with(power.unfold(), |x, y| x + y * a);
        }
        let base = Tensor::refold(acc, t.shape()).unwrap();
        let mut out = id;
        for _ in 0..p.power() {
            out = out.einstein_product(&base).unwrap();
        }
        out.unfold().clone()
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn dist(a: &Matrix<C>, b: &Matrix<C>) -> f64 {
            a.zip_with(b, |x, y| x - y).frobenius_norm()
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn einstein_product_is_unfolded_matmul(seed in any::<u64>()) {
                let s = shape(&[2, 3]);
                let a = random_hermitian(&s, 1.0f64, seed).unwrap();
                let b = random_hermitian(&s, 2.0f64, seed ^ 1).unwrap();
                let p = a.einstein_product(&b).unwrap();
                // entrywise definition: Σ_k a[i; k] b[k; j]
                for i in 0..6 {
                    for j in 0..6 {
                        let (ii, jj) = (s.decode(i), s.decode(j));
                        let mut acc = C::new(0.0, 0.0);
                        for k1 in 0..2 {
                            for k2 in 0..3 {
                                acc += a.get(&ii, &[k1, k2]) * b.get(&[k1, k2], &jj);
                            }
                        }
                        prop_assert!((p.get(&ii, &jj) - acc).norm() <= 1e-12);
                    }
                }
                let id = HermitianTensor::identity(&s);
                let prod = a.einstein_product(&id).unwrap();
                prop_assert_eq!(prod.unfold(), a.unfold());
            }

            #[test]
            fn square_eigenvalues(seed in any::<u64>()) {
                let a = random_hermitian(&shape(&[2, 2]), 1.3f64, seed).unwrap();
                let sq = HermitianTensor::try_from_tensor(a.einstein_product(&a).unwrap()).unwrap();
                let mut want: Vec<f64> = a.eigenvalues().unwrap().iter().map(|x| x * x).collect();
                want.sort_by(|x, y| y.partial_cmp(x).unwrap());
                prop_assert!(close(&sq.eigenvalues().unwrap(), &want, 1e-10));
            }

            #[test]
            fn spectral_norm_is_ky_fan_one(seed in any::<u64>(), r in 0.1f64..5.0) {
                let a = random_hermitian(&shape(&[2, 2]), r, seed).unwrap();
                prop_assert_eq!(a.spectral_norm().unwrap(), a.ky_fan_norm(1).unwrap());
            }

            #[test]
            fn polynomial_matches_direct_expansion(
                seed in any::<u64>(), coeffs in prop::collection::vec(0.0f64..2.0, 1..4), s in 1u32..4
            ) {
                let mut coeffs = coeffs;
                coeffs[0] += 0.1;
                let p = PolynomialSpec::new(coeffs, s).unwrap();
                let t = random_hermitian(&shape(&[2, 2]), 1.0f64, seed).unwrap();
                let spectral = t.apply_polynomial(&p).unwrap();
                let direct = polynomial_direct(&t, &p);
                prop_assert!(dist(spectral.unfold(), &direct) <= 1e-8 * direct.frobenius_norm());
                prop_assert_eq!(spectral.unfold().hermitian_defect(), 0.0);
            }

            #[test]
            fn ky_fan_norm_axioms(seed in any::<u64>(), c in -3.0f64..3.0) {
                let s = shape(&[2, 2]);
                let a = random_hermitian(&s, 1.0f64, seed).unwrap();
                let b = random_hermitian(&s, 0.7f64, seed.wrapping_add(17)).unwrap();
                let sum = a.add(&b).unwrap();
                let mut prev = 0.0;
                for k in 1..=4 {
                    let na = a.ky_fan_norm(k).unwrap();
                    prop_assert!(na >= prev);
                    prev = na;
                    prop_assert!(sum.ky_fan_norm(k).unwrap() <= na + b.ky_fan_norm(k).unwrap() + 1e-10);
                    prop_assert!((a.scale(c).ky_fan_norm(k).unwrap() - c.abs() * na).abs() <= 1e-10);
                }
            }

            #[test]
            fn polynomial_commutes_with_unitary_conjugation(seed in any::<u64>()) {
                let s = shape(&[2, 2]);
                let t = random_hermitian(&s, 1.0f64, seed).unwrap();
                let basis = random_hermitian(&s, 1.0f64, seed ^ 0xabc).unwrap();
                let u = basis.eigen().unwrap().vectors;
                let conj = |m: &Matrix<C>| u.matmul(m).matmul(&u.conj_transpose());
                let p = PolynomialSpec::new(vec![0.5, 1.0, 0.25], 2).unwrap();
                let lhs = t.apply_polynomial(&p).unwrap();
                let rotated = HermitianTensor::from_unfolding(conj(t.unfold()), &s).unwrap();
                let rhs = rotated.apply_polynomial(&p).unwrap();
                prop_assert!(dist(&conj(lhs.unfold()), rhs.unfold()) <= 1e-10 * (1.0 + rhs.unfold().frobenius_norm()));
            }
        }
    }
}
