//! Anti-circulant and Hankel tensors and their FFT-based tensor-vector
//! products.
//!
//! An anti-circulant tensor of order `m` and dimension `n` with compressed
//! generating vector `c` has entries `c[(i_1 + ... + i_m) mod n]` and is
//! diagonalized by the Fourier matrix: `C = D ×_1 F_n ... ×_m F_n` with
//! `diag(D) = ifft(c)`. A Hankel tensor with generating vector `h` sits in the
//! leading corner of the anti-circulant tensor of dimension `d_H` whose
//! compressed generating vector is `h`, so zero-padding the vectors to length
//! `d_H` turns every Hankel product into an anti-circulant one.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fft::{self, Direction};
use crate::tensor::{self, hankel_dof, ComplexMatrix, DenseTensor};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Anti-circulant tensor stored by its compressed generating vector.
#[derive(Clone, Debug, PartialEq)]
pub struct AntiCirculantTensor {
    order: usize,
    c: Vec<Complex64>,
}

impl AntiCirculantTensor {
    pub fn new(order: usize, c: Vec<Complex64>) -> Result<Self> {
        if order < 2 {
            return Err(Error::InvalidParameter(format!("anti-circulant order must be >= 2, got {order}")));
        }
        if c.is_empty() {
            return Err(Error::Empty("compressed generating vector"));
        }
        Ok(Self { order, c })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn compressed_generating_vector(&self) -> &[Complex64] {
        &self.c
    }

    pub fn entry(&self, idx: &[usize]) -> Complex64 {
        self.c[idx.iter().sum::<usize>() % self.c.len()]
    }

    /// Diagonal of `D` in `C = D F_n^m`, i.e. `ifft(c)`.
    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut s = self.c.clone();
        fft::transform_in_place(&mut s, Direction::Inverse);
        s
    }

    /// Closed-form eigenpairs: `(n^{m-2} Σ c_k, 1)` and, for even `n`,
    /// `(n^{m-2} Σ (-1)^k c_k, [1, -1, 1, -1, ...])`.
    pub fn special_eigenpairs(&self) -> Vec<(Complex64, Vec<Complex64>)> {
        let n = self.dim();
        let scale = (n as f64).powi(self.order as i32 - 2);
        let ones = vec![Complex64::new(1.0, 0.0); n];
        let mut pairs = vec![(self.c.iter().sum::<Complex64>() * scale, ones)];
        if n % 2 == 0 {
            let alt: Vec<Complex64> =
                (0..n).map(|k| Complex64::new(if k % 2 == 0 { 1.0 } else { -1.0 }, 0.0)).collect();
            let lambda: Complex64 = self.c.iter().zip(&alt).map(|(a, b)| a * b).sum();
            pairs.push((lambda * scale, alt));
        }
        pairs
    }

    fn check_vectors(&self, xs: &[&[Complex64]], expected: usize) -> Result<()> {
        if xs.len() != expected {
            return Err(Error::Dimension(format!("expected {expected} vectors, got {}", xs.len())));
        }
        if let Some(x) = xs.iter().find(|x| x.len() != self.dim()) {
            return Err(Error::Dimension(format!("vector length {} != dimension {}", x.len(), self.dim())));
        }
        Ok(())
    }

    /// `y = C ×_2 x_2 ... ×_m x_m = fft(ifft(c) .* fft(x_2) .* ... .* fft(x_m))`.
    pub fn tvp_partial(&self, xs: &[&[Complex64]]) -> Result<Vec<Complex64>> {
        self.check_vectors(xs, self.order - 1)?;
        let mut acc = self.spectrum();
        multiply_transformed(&mut acc, xs);
        fft::transform_in_place(&mut acc, Direction::Forward);
        Ok(acc)
    }

    /// `α = ifft(c)ᵀ (fft(x_1) .* ... .* fft(x_m))`.
    pub fn tvp_full(&self, xs: &[&[Complex64]]) -> Result<Complex64> {
        self.check_vectors(xs, self.order)?;
        let mut acc = self.spectrum();
        multiply_transformed(&mut acc, xs);
        Ok(acc.iter().sum())
    }

    pub fn to_dense(&self) -> Result<DenseTensor> {
        tensor::build_acirc_dense(&self.c, self.order)
    }
}

/// `acc .*= fft(pad(x))` for every x, padding each to `acc.len()`.
fn multiply_transformed(acc: &mut [Complex64], xs: &[&[Complex64]]) {
    let mut buf = vec![ZERO; acc.len()];
    for x in xs {
        buf[..x.len()].copy_from_slice(x);
        buf[x.len()..].iter_mut().for_each(|z| *z = ZERO);
        fft::transform_in_place(&mut buf, Direction::Forward);
        acc.iter_mut().zip(&buf).for_each(|(a, b)| *a *= b);
    }
}

/// Hankel tensor stored by shape and generating vector; never materialized
/// by the fast paths.
#[derive(Clone, Debug, PartialEq)]
pub struct HankelTensor {
    shape: Vec<usize>,
    h: Vec<Complex64>,
}

impl HankelTensor {
    pub fn new(h: Vec<Complex64>, shape: Vec<usize>) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(Error::Dimension(format!("invalid Hankel shape {shape:?}")));
        }
        let d = hankel_dof(&shape);
        if h.len() != d {
            return Err(Error::Dimension(format!(
                "shape {shape:?} needs a generating vector of length {d}, got {}",
                h.len()
            )));
        }
        Ok(Self { shape, h })
    }

    /// Square tensor of order `m` whose generating vector is `h`; the
    /// dimension is `(len(h) + m - 1) / m` and must divide evenly.
    pub fn square(h: Vec<Complex64>, order: usize) -> Result<Self> {
        if order == 0 || (h.len() + order - 1) % order != 0 {
            return Err(Error::Dimension(format!(
                "a square order-{order} Hankel tensor cannot have {} generating entries",
                h.len()
            )));
        }
        let n = (h.len() + order - 1) / order;
        Self::new(h, vec![n; order])
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn generating_vector(&self) -> &[Complex64] {
        &self.h
    }

    /// `d_H = Σ n_p - m + 1`.
    pub fn degree_of_freedom(&self) -> usize {
        self.h.len()
    }

    pub fn is_square(&self) -> bool {
        self.shape.iter().all(|&n| n == self.shape[0])
    }

    pub fn entry(&self, idx: &[usize]) -> Complex64 {
        self.h[idx.iter().sum::<usize>()]
    }

    /// The anti-circulant tensor of dimension `d_H` with compressed
    /// generating vector `h`; this tensor is its leading corner.
    pub fn embed(&self) -> AntiCirculantTensor {
        AntiCirculantTensor { order: self.order(), c: self.h.clone() }
    }

    /// Precompute `ifft(h)` for repeated products with this tensor.
    pub fn plan(&self) -> HankelPlan<'_> {
        HankelPlan::with_length(self, self.h.len()).expect("d_H is a valid embedding length")
    }

    pub fn tvp_partial(&self, xs: &[&[Complex64]]) -> Result<Vec<Complex64>> {
        self.plan().tvp_partial(xs)
    }

    pub fn tvp_full(&self, xs: &[&[Complex64]]) -> Result<Complex64> {
        self.plan().tvp_full(xs)
    }

    /// `H ×_2 U_2 ... ×_m U_m`, shape `n_1 × R_2 × ... × R_m`.
    ///
    /// Factors are used as given; pass conjugated factors for HOOI.
    pub fn tmp(&self, factors: &[&ComplexMatrix]) -> Result<DenseTensor> {
        self.plan().project_except(0, factors)
    }

    pub fn to_dense(&self) -> Result<DenseTensor> {
        tensor::build_hankel_dense(&self.h, &self.shape)
    }
}

/// Cached spectrum of the embedding anti-circulant tensor.
#[derive(Clone, Debug)]
pub struct HankelPlan<'a> {
    tensor: &'a HankelTensor,
    spectrum: Vec<Complex64>,
}

impl<'a> HankelPlan<'a> {
    /// Embed into an anti-circulant tensor of dimension `len >= d_H`
    /// (`len > d_H` only pads the transforms, e.g. to a power of two).
    pub fn with_length(tensor: &'a HankelTensor, len: usize) -> Result<Self> {
        if len < tensor.h.len() {
            return Err(Error::InvalidParameter(format!(
                "embedding length {len} is smaller than d_H = {}",
                tensor.h.len()
            )));
        }
        let mut spectrum = tensor.h.clone();
        spectrum.resize(len, ZERO);
        fft::transform_in_place(&mut spectrum, Direction::Inverse);
        Ok(Self { tensor, spectrum })
    }

    pub fn tensor(&self) -> &HankelTensor {
        self.tensor
    }

    pub fn embedding_length(&self) -> usize {
        self.spectrum.len()
    }

    fn check(&self, free: Option<usize>, xs: &[&[Complex64]]) -> Result<()> {
        let shape = &self.tensor.shape;
        let expected = shape.len() - usize::from(free.is_some());
        if xs.len() != expected {
            return Err(Error::Dimension(format!("expected {expected} vectors, got {}", xs.len())));
        }
        let modes = (0..shape.len()).filter(|&q| Some(q) != free);
        for (q, x) in modes.zip(xs) {
            if x.len() != shape[q] {
                return Err(Error::Dimension(format!(
                    "vector for mode {q} has length {}, expected {}",
                    x.len(),
                    shape[q]
                )));
            }
        }
        Ok(())
    }

    /// `y = H ×_2 x_2 ... ×_m x_m`, length `n_1`.
    pub fn tvp_partial(&self, xs: &[&[Complex64]]) -> Result<Vec<Complex64>> {
        self.tvp_partial_free(0, xs)
    }

    /// Contract every mode except `free`; `xs` lists the other modes in
    /// increasing order. The entry depends only on the index sum, so any
    /// mode can play the role of the free one.
    pub fn tvp_partial_free(&self, free: usize, xs: &[&[Complex64]]) -> Result<Vec<Complex64>> {
        if free >= self.tensor.order() {
            return Err(Error::Dimension(format!("mode {free} out of range")));
        }
        self.check(Some(free), xs)?;
        let mut acc = self.spectrum.clone();
        multiply_transformed(&mut acc, xs);
        fft::transform_in_place(&mut acc, Direction::Forward);
        acc.truncate(self.tensor.shape[free]);
        Ok(acc)
    }

    /// `α = H ×_1 x_1 ... ×_m x_m`.
    pub fn tvp_full(&self, xs: &[&[Complex64]]) -> Result<Complex64> {
        self.check(None, xs)?;
        let mut acc = self.spectrum.clone();
        multiply_transformed(&mut acc, xs);
        Ok(acc.iter().sum())
    }

    /// `H ×_q U_q` for every `q != free`, built column combination by column
    /// combination from partial products. `factors` lists the other modes in
    /// increasing order. The result keeps `n_free` on mode `free` and `R_q`
    /// elsewhere.
    pub fn project_except(&self, free: usize, factors: &[&ComplexMatrix]) -> Result<DenseTensor> {
        let shape = &self.tensor.shape;
        let m = shape.len();
        if free >= m {
            return Err(Error::Dimension(format!("mode {free} out of range")));
        }
        if factors.len() + 1 != m {
            return Err(Error::Dimension(format!("expected {} factors, got {}", m - 1, factors.len())));
        }
        let others: Vec<usize> = (0..m).filter(|&q| q != free).collect();
        for (&q, u) in others.iter().zip(factors) {
            if u.rows() != shape[q] {
                return Err(Error::Dimension(format!(
                    "factor for mode {q} has {} rows, expected {}",
                    u.rows(),
                    shape[q]
                )));
            }
        }
        let len = self.spectrum.len();
        // transformed, padded columns of every factor
        let transformed: Vec<Vec<Vec<Complex64>>> = factors
            .iter()
            .map(|u| {
                (0..u.cols())
                    .map(|r| {
                        let mut buf = u.col(r).to_vec();
                        buf.resize(len, ZERO);
                        fft::transform_in_place(&mut buf, Direction::Forward);
                        buf
                    })
                    .collect()
            })
            .collect();
        let ranks: Vec<usize> = factors.iter().map(|u| u.cols()).collect();
        let combos: usize = ranks.iter().product();
        let nf = shape[free];

        let columns: Vec<Vec<Complex64>> = (0..combos)
            .into_par_iter()
            .map(|flat| {
                let mut acc = self.spectrum.clone();
                let mut rest = flat;
                for q in (0..ranks.len()).rev() {
                    let r = rest % ranks[q];
                    rest /= ranks[q];
                    acc.iter_mut().zip(&transformed[q][r]).for_each(|(a, b)| *a *= b);
                }
                fft::transform_in_place(&mut acc, Direction::Forward);
                acc.truncate(nf);
                acc
            })
            .collect();

        let mut out_shape = shape.clone();
        for (&q, &r) in others.iter().zip(&ranks) {
            out_shape[q] = r;
        }
        let mut out = DenseTensor::zeros(out_shape)?;
        let mut idx = vec![0usize; m];
        for (flat, col) in columns.iter().enumerate() {
            let mut rest = flat;
            for (k, &q) in others.iter().enumerate().rev() {
                idx[q] = rest % ranks[k];
                rest /= ranks[k];
            }
            for (i, v) in col.iter().enumerate() {
                idx[free] = i;
                out.set(&idx, *v);
            }
        }
        Ok(out)
    }
}

/// Rectangular Hankel matrix `I × (d - I + 1)` with entries `h[i + j]`.
pub fn hankel_matrix(h: &[Complex64], rows: usize) -> Result<ComplexMatrix> {
    if rows == 0 || rows > h.len() {
        return Err(Error::Dimension(format!("cannot form {rows} rows from {} entries", h.len())));
    }
    Ok(ComplexMatrix::from_fn(rows, h.len() - rows + 1, |i, j| h[i + j]))
}
