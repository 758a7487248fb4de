//! Block anti-circulant tensors with anti-circulant blocks (BAAB), block
//! Hankel tensors with Hankel blocks (BHHB), and their level-k
//! generalization.
//!
//! Mode-p vectors of a block tensor are `vec` of an `n_p × N_p` matrix
//! (inner index fastest). A BAAB tensor is diagonalized by `F_N ⊗ F_n`, so
//! products reduce to 2D FFTs of the reshaped vectors; a BHHB tensor is
//! embedded twice (blocks, then block structure) into the BAAB tensor whose
//! compressed generating matrix is the BHHB generating matrix.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fft::{self, Direction};
use crate::hankel::HankelTensor;
use crate::tensor::{self, hankel_dof, ComplexMatrix, DenseTensor};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn fft2_in_place(buf: &mut [Complex64], rows: usize, cols: usize, dir: Direction) {
    fft::transform_axis(buf, cols, rows, 1, dir);
    fft::transform_axis(buf, 1, cols, rows, dir);
}

/// `fft2` of `vec⁻¹(x)` (an `n × N` block) zero-padded into `rows × cols`.
fn padded_fft2(x: &[Complex64], n: usize, rows: usize, cols: usize) -> Vec<Complex64> {
    let mut buf = vec![ZERO; rows * cols];
    for (j, chunk) in x.chunks_exact(n).enumerate() {
        buf[j * rows..j * rows + n].copy_from_slice(chunk);
    }
    fft2_in_place(&mut buf, rows, cols, Direction::Forward);
    buf
}

/// BAAB tensor stored by its `n × N` compressed generating matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct BaabTensor {
    order: usize,
    c: ComplexMatrix,
}

impl BaabTensor {
    pub fn new(order: usize, c: ComplexMatrix) -> Result<Self> {
        if order < 2 {
            return Err(Error::InvalidParameter(format!("BAAB order must be >= 2, got {order}")));
        }
        Ok(Self { order, c })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `(n, N)`: inner (block) and outer dimension.
    pub fn dims(&self) -> (usize, usize) {
        self.c.shape()
    }

    pub fn compressed_generating_matrix(&self) -> &ComplexMatrix {
        &self.c
    }

    /// `ifft2(C) = (1/nN) conj(F_n) C conj(F_N)`; its `vec` is the diagonal of
    /// `D` in `C = D (F_N ⊗ F_n)^m`.
    pub fn spectrum(&self) -> ComplexMatrix {
        fft::ifft2(&self.c)
    }

    fn check(&self, xs: &[&[Complex64]], expected: usize) -> Result<()> {
        let (n, big_n) = self.dims();
        if xs.len() != expected {
            return Err(Error::Dimension(format!("expected {expected} vectors, got {}", xs.len())));
        }
        if let Some(x) = xs.iter().find(|x| x.len() != n * big_n) {
            return Err(Error::Dimension(format!("vector length {} != nN = {}", x.len(), n * big_n)));
        }
        Ok(())
    }

    fn accumulate(&self, xs: &[&[Complex64]]) -> Vec<Complex64> {
        let (n, big_n) = self.dims();
        let mut acc = self.spectrum().into_data();
        for x in xs {
            let fx = padded_fft2(x, n, n, big_n);
            acc.iter_mut().zip(&fx).for_each(|(a, b)| *a *= b);
        }
        acc
    }

    /// `y = vec(fft2(ifft2(C) .* fft2(X_2) .* ... .* fft2(X_m)))`.
    pub fn tvp_partial(&self, xs: &[&[Complex64]]) -> Result<Vec<Complex64>> {
        self.check(xs, self.order - 1)?;
        let (n, big_n) = self.dims();
        let mut acc = self.accumulate(xs);
        fft2_in_place(&mut acc, n, big_n, Direction::Forward);
        Ok(acc)
    }

    /// `α = ⟨ifft2(C), fft2(X_1) .* ... .* fft2(X_m)⟩` with the unconjugated
    /// pairing `⟨A, B⟩ = Σ A_jk B_jk`.
    pub fn tvp_full(&self, xs: &[&[Complex64]]) -> Result<Complex64> {
        self.check(xs, self.order)?;
        Ok(self.accumulate(xs).iter().sum())
    }

    pub fn to_dense(&self) -> Result<DenseTensor> {
        tensor::build_baab_dense(&self.c, self.order)
    }
}

/// BHHB tensor stored by its generating matrix
/// `H ∈ C^{(Σn_p - m + 1) × (ΣN_p - m + 1)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct BhhbTensor {
    block: Vec<usize>,
    outer: Vec<usize>,
    h: ComplexMatrix,
}

impl BhhbTensor {
    pub fn new(h: ComplexMatrix, outer: Vec<usize>, block: Vec<usize>) -> Result<Self> {
        if outer.len() != block.len() || outer.len() < 2 {
            return Err(Error::Dimension(format!(
                "need matching outer/block sizes of order >= 2, got {outer:?} and {block:?}"
            )));
        }
        if outer.contains(&0) || block.contains(&0) {
            return Err(Error::Dimension("zero block or outer size".into()));
        }
        let (d1, d2) = (hankel_dof(&block), hankel_dof(&outer));
        if h.shape() != (d1, d2) {
            return Err(Error::Dimension(format!(
                "generating matrix must be {d1}x{d2} for blocks {block:?} and outer sizes {outer:?}, got {}x{}",
                h.rows(),
                h.cols()
            )));
        }
        Ok(Self { block, outer, h })
    }

    pub fn order(&self) -> usize {
        self.block.len()
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block
    }

    pub fn outer_sizes(&self) -> &[usize] {
        &self.outer
    }

    pub fn generating_matrix(&self) -> &ComplexMatrix {
        &self.h
    }

    /// Mode sizes `n_p N_p`.
    pub fn dims(&self) -> Vec<usize> {
        self.block.iter().zip(&self.outer).map(|(a, b)| a * b).collect()
    }

    pub fn is_square(&self) -> bool {
        self.block.iter().all(|&n| n == self.block[0]) && self.outer.iter().all(|&n| n == self.outer[0])
    }

    /// The BAAB tensor this one sits in (compressed generating matrix `H`).
    pub fn embed(&self) -> BaabTensor {
        BaabTensor { order: self.order(), c: self.h.clone() }
    }

    pub fn plan(&self) -> BhhbPlan<'_> {
        BhhbPlan { tensor: self, spectrum: fft::ifft2(&self.h).into_data() }
    }

    pub fn tvp_partial(&self, xs: &[&[Complex64]]) -> Result<Vec<Complex64>> {
        self.plan().tvp_partial_free(0, xs)
    }

    /// Partial product kept as the `n_1 × N_1` matrix (no final `vec`).
    pub fn tvp_partial_matrix(&self, xs: &[&[Complex64]]) -> Result<ComplexMatrix> {
        let y = self.tvp_partial(xs)?;
        ComplexMatrix::new(self.block[0], self.outer[0], y)
    }

    pub fn tvp_full(&self, xs: &[&[Complex64]]) -> Result<Complex64> {
        self.plan().tvp_full(xs)
    }

    /// Mode-p unfolding with the redundant columns removed: a block Hankel
    /// matrix with Hankel blocks of size `n_p N_p × (d_1 - n_p + 1)(d_2 - N_p + 1)`,
    /// entry `H[i + a, j + b]` at row `i + n_p j`, column `a + (d_1 - n_p + 1) b`.
    pub fn reduced_unfold(&self, p: usize) -> Result<ComplexMatrix> {
        if p >= self.order() {
            return Err(Error::Dimension(format!("mode {p} out of range")));
        }
        let (n, big_n) = (self.block[p], self.outer[p]);
        let (d1, d2) = self.h.shape();
        let (ca, cb) = (d1 - n + 1, d2 - big_n + 1);
        Ok(ComplexMatrix::from_fn(n * big_n, ca * cb, |r, col| {
            let (i, j) = (r % n, r / n);
            let (a, b) = (col % ca, col / ca);
            self.h.get(i + a, j + b)
        }))
    }

    pub fn to_dense(&self) -> Result<DenseTensor> {
        tensor::build_bhhb_dense(&self.h, &self.outer, &self.block)
    }
}

/// Cached `ifft2(H)` for repeated products.
#[derive(Clone, Debug)]
pub struct BhhbPlan<'a> {
    tensor: &'a BhhbTensor,
    spectrum: Vec<Complex64>,
}

impl<'a> BhhbPlan<'a> {
    pub fn tensor(&self) -> &BhhbTensor {
        self.tensor
    }

    fn check(&self, free: Option<usize>, xs: &[&[Complex64]]) -> Result<()> {
        let t = self.tensor;
        let expected = t.order() - usize::from(free.is_some());
        if xs.len() != expected {
            return Err(Error::Dimension(format!("expected {expected} vectors, got {}", xs.len())));
        }
        let modes = (0..t.order()).filter(|&q| Some(q) != free);
        for (q, x) in modes.zip(xs) {
            if x.len() != t.block[q] * t.outer[q] {
                return Err(Error::Dimension(format!(
                    "vector for mode {q} has length {}, expected {}",
                    x.len(),
                    t.block[q] * t.outer[q]
                )));
            }
        }
        Ok(())
    }

    fn modes_except(&self, free: Option<usize>) -> Vec<usize> {
        (0..self.tensor.order()).filter(|&q| Some(q) != free).collect()
    }

    fn transformed(&self, q: usize, x: &[Complex64]) -> Vec<Complex64> {
        let (d1, d2) = self.tensor.h.shape();
        padded_fft2(x, self.tensor.block[q], d1, d2)
    }

    fn finish(&self, mut acc: Vec<Complex64>, free: usize) -> Vec<Complex64> {
        let (d1, d2) = self.tensor.h.shape();
        fft2_in_place(&mut acc, d1, d2, Direction::Forward);
        let (n, big_n) = (self.tensor.block[free], self.tensor.outer[free]);
        let mut y = Vec::with_capacity(n * big_n);
        for j in 0..big_n {
            y.extend_from_slice(&acc[j * d1..j * d1 + n]);
        }
        y
    }

    /// Contract every mode except `free`; returns `vec(Ỹ(0:n-1, 0:N-1))`.
    pub fn tvp_partial_free(&self, free: usize, xs: &[&[Complex64]]) -> Result<Vec<Complex64>> {
        if free >= self.tensor.order() {
            return Err(Error::Dimension(format!("mode {free} out of range")));
        }
        self.check(Some(free), xs)?;
        let mut acc = self.spectrum.clone();
        for (&q, x) in self.modes_except(Some(free)).iter().zip(xs) {
            let fx = self.transformed(q, x);
            acc.iter_mut().zip(&fx).for_each(|(a, b)| *a *= b);
        }
        Ok(self.finish(acc, free))
    }

    pub fn tvp_full(&self, xs: &[&[Complex64]]) -> Result<Complex64> {
        self.check(None, xs)?;
        let mut acc = self.spectrum.clone();
        for (q, x) in xs.iter().enumerate() {
            let fx = self.transformed(q, x);
            acc.iter_mut().zip(&fx).for_each(|(a, b)| *a *= b);
        }
        Ok(acc.iter().sum())
    }

    /// `H ×_q U_q` for all `q != free`, assembled from partial products.
    pub fn project_except(&self, free: usize, factors: &[&ComplexMatrix]) -> Result<DenseTensor> {
        let t = self.tensor;
        let m = t.order();
        if free >= m || factors.len() + 1 != m {
            return Err(Error::Dimension(format!("expected {} factors for free mode {free}", m - 1)));
        }
        let others = self.modes_except(Some(free));
        for (&q, u) in others.iter().zip(factors) {
            if u.rows() != t.block[q] * t.outer[q] {
                return Err(Error::Dimension(format!(
                    "factor for mode {q} has {} rows, expected {}",
                    u.rows(),
                    t.block[q] * t.outer[q]
                )));
            }
        }
        let transformed: Vec<Vec<Vec<Complex64>>> = others
            .iter()
            .zip(factors)
            .map(|(&q, u)| (0..u.cols()).map(|r| self.transformed(q, u.col(r))).collect())
            .collect();
        let ranks: Vec<usize> = factors.iter().map(|u| u.cols()).collect();
        let combos: usize = ranks.iter().product();
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
                self.finish(acc, free)
            })
            .collect();

        let mut shape = t.dims();
        for (&q, &r) in others.iter().zip(&ranks) {
            shape[q] = r;
        }
        let mut out = DenseTensor::zeros(shape)?;
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

/// Level-k block Hankel tensor.
///
/// `sizes[l][p]` is the level-`l` extent of mode `p`, level 0 innermost; the
/// generating tensor has axis `l` of length `Σ_p sizes[l][p] - m + 1`.
/// Level 1 is a plain Hankel tensor, level 2 a BHHB tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelKHankelTensor {
    sizes: Vec<Vec<usize>>,
    generating: DenseTensor,
}

impl LevelKHankelTensor {
    pub fn new(generating: DenseTensor, sizes: Vec<Vec<usize>>) -> Result<Self> {
        let k = sizes.len();
        if k == 0 || generating.order() != k {
            return Err(Error::Dimension(format!(
                "{k} levels need a generating tensor of order {k}, got {}",
                generating.order()
            )));
        }
        let m = sizes[0].len();
        if m < 2 {
            return Err(Error::Dimension("order must be at least 2".into()));
        }
        for (l, level) in sizes.iter().enumerate() {
            if level.len() != m || level.contains(&0) {
                return Err(Error::Dimension(format!("level {l} sizes {level:?} are invalid for order {m}")));
            }
            if generating.shape()[l] != hankel_dof(level) {
                return Err(Error::Dimension(format!(
                    "generating axis {l} must have length {}, got {}",
                    hankel_dof(level),
                    generating.shape()[l]
                )));
            }
        }
        Ok(Self { sizes, generating })
    }

    pub fn from_hankel(h: &HankelTensor) -> Self {
        let g = DenseTensor::new(vec![h.degree_of_freedom()], h.generating_vector().to_vec())
            .expect("generating vector is non-empty");
        Self { sizes: vec![h.shape().to_vec()], generating: g }
    }

    pub fn from_bhhb(b: &BhhbTensor) -> Self {
        let (d1, d2) = b.h.shape();
        let g = DenseTensor::from_fn(vec![d1, d2], |i| b.h.get(i[0], i[1])).expect("non-empty");
        Self { sizes: vec![b.block.clone(), b.outer.clone()], generating: g }
    }

    pub fn levels(&self) -> usize {
        self.sizes.len()
    }

    pub fn order(&self) -> usize {
        self.sizes[0].len()
    }

    pub fn sizes(&self) -> &[Vec<usize>] {
        &self.sizes
    }

    pub fn generating_tensor(&self) -> &DenseTensor {
        &self.generating
    }

    /// Mode sizes `Π_l sizes[l][p]`.
    pub fn dims(&self) -> Vec<usize> {
        (0..self.order()).map(|p| self.sizes.iter().map(|l| l[p]).product()).collect()
    }

    fn check(&self, free: Option<usize>, xs: &[&[Complex64]]) -> Result<()> {
        let dims = self.dims();
        let expected = self.order() - usize::from(free.is_some());
        if xs.len() != expected {
            return Err(Error::Dimension(format!("expected {expected} vectors, got {}", xs.len())));
        }
        let modes = (0..self.order()).filter(|&q| Some(q) != free);
        for (q, x) in modes.zip(xs) {
            if x.len() != dims[q] {
                return Err(Error::Dimension(format!(
                    "vector for mode {q} has length {}, expected {}",
                    x.len(),
                    dims[q]
                )));
            }
        }
        Ok(())
    }

    /// Scatter a mode-q vector (level 0 fastest) into the generating grid
    /// and transform every axis.
    fn transformed(&self, q: usize, x: &[Complex64]) -> Vec<Complex64> {
        let grid = self.generating.shape();
        let mut buf = vec![ZERO; self.generating.len()];
        for (flat, v) in x.iter().enumerate() {
            let mut rest = flat;
            let mut pos = 0;
            for (l, level) in self.sizes.iter().enumerate() {
                pos = pos * grid[l] + rest % level[q];
                rest /= level[q];
            }
            buf[pos] = *v;
        }
        fft::transform_nd_in_place(&mut buf, grid, Direction::Forward);
        buf
    }

    fn spectrum(&self) -> Vec<Complex64> {
        fft::ifftn(&self.generating).into_data()
    }

    pub fn tvp_partial(&self, xs: &[&[Complex64]]) -> Result<Vec<Complex64>> {
        self.check(Some(0), xs)?;
        let grid = self.generating.shape().to_vec();
        let mut acc = self.spectrum();
        for (q, x) in (1..self.order()).zip(xs) {
            let fx = self.transformed(q, x);
            acc.iter_mut().zip(&fx).for_each(|(a, b)| *a *= b);
        }
        fft::transform_nd_in_place(&mut acc, &grid, Direction::Forward);
        let n1 = self.dims()[0];
        Ok((0..n1)
            .map(|flat| {
                let mut rest = flat;
                let mut pos = 0;
                for (l, level) in self.sizes.iter().enumerate() {
                    pos = pos * grid[l] + rest % level[0];
                    rest /= level[0];
                }
                acc[pos]
            })
            .collect())
    }

    pub fn tvp_full(&self, xs: &[&[Complex64]]) -> Result<Complex64> {
        self.check(None, xs)?;
        let mut acc = self.spectrum();
        for (q, x) in xs.iter().enumerate() {
            let fx = self.transformed(q, x);
            acc.iter_mut().zip(&fx).for_each(|(a, b)| *a *= b);
        }
        Ok(acc.iter().sum())
    }

    pub fn to_dense(&self) -> Result<DenseTensor> {
        tensor::build_levelk_dense(&self.generating, &self.sizes)
    }
}
