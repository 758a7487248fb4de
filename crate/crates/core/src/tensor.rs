//! Dense complex containers, mode products, unfoldings and the brute-force
//! oracles every structured fast path is checked against.

use std::cell::Cell;
use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Default limit on the number of entries an oracle builder will materialize.
pub const DEFAULT_DENSE_CAP: usize = 10_000_000;

static DENSE_CAP: AtomicUsize = AtomicUsize::new(DEFAULT_DENSE_CAP);

thread_local! {
    static DENSE_BUILDS: Cell<usize> = const { Cell::new(0) };
}

/// Current entry cap for the dense oracle builders.
pub fn dense_cap() -> usize {
    DENSE_CAP.load(Ordering::Relaxed)
}

/// Change the entry cap for the dense oracle builders (process-wide).
pub fn set_dense_cap(cap: usize) {
    DENSE_CAP.store(cap, Ordering::Relaxed);
}

/// Number of dense structured tensors materialized on the calling thread.
///
/// Fast paths must leave this untouched; tests use it to prove that.
pub fn dense_builds_on_this_thread() -> usize {
    DENSE_BUILDS.with(|c| c.get())
}

fn reserve_dense(shape: &[usize]) -> Result<usize> {
    let entries = shape
        .iter()
        .try_fold(1usize, |acc, &n| acc.checked_mul(n))
        .unwrap_or(usize::MAX);
    let cap = dense_cap();
    if entries > cap {
        return Err(Error::DenseCapExceeded { entries, cap });
    }
    DENSE_BUILDS.with(|c| c.set(c.get() + 1));
    Ok(entries)
}

/// Column-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Build from column-major data.
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!("matrix must be non-empty, got {rows}x{cols}")));
        }
        if rows * cols != data.len() {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { ONE } else { ZERO })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Matrix whose columns are the given equal-length vectors.
    pub fn from_columns(columns: &[Vec<Complex64>]) -> Result<Self> {
        let rows = columns.first().map(Vec::len).ok_or(Error::Empty("column list"))?;
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::Dimension("columns have different lengths".into()));
        }
        Self::new(rows, columns.len(), columns.concat())
    }

    /// Matrix from row-major nested rows (convenient for literals).
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map(Vec::len).ok_or(Error::Empty("row list"))?;
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("rows have different lengths".into()));
        }
        Ok(Self::from_fn(r, c, |i, j| rows[i][j]))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Column-major entries.
    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i + self.rows * j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i + self.rows * j] = v;
    }

    pub fn col(&self, j: usize) -> &[Complex64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn conj(&self) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn matmul(&self, rhs: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for j in 0..rhs.cols {
            for k in 0..self.cols {
                let b = rhs.get(k, j);
                if b == ZERO {
                    continue;
                }
                let a = self.col(k);
                let o = &mut out.data[j * self.rows..(j + 1) * self.rows];
                for (oi, ai) in o.iter_mut().zip(a) {
                    *oi += ai * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.cols {
            return Err(Error::Dimension(format!("matrix has {} columns, vector {}", self.cols, x.len())));
        }
        let mut y = vec![ZERO; self.rows];
        for (j, &xj) in x.iter().enumerate() {
            for (yi, a) in y.iter_mut().zip(self.col(j)) {
                *yi += a * xj;
            }
        }
        Ok(y)
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.rows * rhs.rows, self.cols * rhs.cols, |i, j| {
            self.get(i / rhs.rows, j / rhs.cols) * rhs.get(i % rhs.rows, j % rhs.cols)
        })
    }

    /// Keep the listed rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> ComplexMatrix {
        ComplexMatrix::from_fn(rows.len(), self.cols, |i, j| self.get(rows[i], j))
    }

    /// Keep the first `n` columns.
    pub fn leading_columns(&self, n: usize) -> ComplexMatrix {
        let n = n.min(self.cols);
        ComplexMatrix { rows: self.rows, cols: n, data: self.data[..self.rows * n].to_vec() }
    }

    pub fn scale(&self, s: Complex64) -> ComplexMatrix {
        ComplexMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn sub(&self, rhs: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.shape() != rhs.shape() {
            return Err(Error::Dimension("matrix shapes differ".into()));
        }
        Ok(ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }

    pub fn to_nalgebra(&self) -> DMatrix<Complex64> {
        DMatrix::from_column_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_nalgebra(m: &DMatrix<Complex64>) -> ComplexMatrix {
        ComplexMatrix { rows: m.nrows(), cols: m.ncols(), data: m.as_slice().to_vec() }
    }

    /// The Fourier matrix `F_n = (exp(-2πi jk/n))_{j,k}`.
    pub fn fourier(n: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(n, n, |j, k| {
            let t = -2.0 * std::f64::consts::PI * ((j * k) % n) as f64 / n as f64;
            Complex64::from_polar(1.0, t)
        })
    }
}

/// Euclidean / Frobenius norm of a slice.
pub fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `‖a - b‖ / ‖b‖`, falling back to the absolute error when `b` is zero.
pub fn relative_error(a: &[Complex64], b: &[Complex64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
    let scale = norm(b);
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

/// Column-stacking `vec`.
pub fn vec_of(m: &ComplexMatrix) -> Vec<Complex64> {
    m.data().to_vec()
}

/// Inverse of [`vec_of`]: consecutive chunks of `rows` become columns.
pub fn unvec(v: &[Complex64], rows: usize, cols: usize) -> Result<ComplexMatrix> {
    ComplexMatrix::new(rows, cols, v.to_vec())
}

/// Dense complex tensor, row-major (last index fastest).
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<Complex64>,
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<Complex64>) -> Result<Self> {
        validate_shape(&shape)?;
        let len: usize = shape.iter().product();
        if len != data.len() {
            return Err(Error::Dimension(format!(
                "shape {shape:?} needs {len} entries, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        validate_shape(&shape)?;
        let len = shape.iter().product();
        Ok(Self { shape, data: vec![ZERO; len] })
    }

    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(&[usize]) -> Complex64) -> Result<Self> {
        validate_shape(&shape)?;
        let len: usize = shape.iter().product();
        let mut data = Vec::with_capacity(len);
        let mut idx = vec![0usize; shape.len()];
        for _ in 0..len {
            data.push(f(&idx));
            increment(&mut idx, &shape);
        }
        Ok(Self { shape, data })
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.len());
        idx.iter().zip(&self.shape).fold(0, |acc, (&i, &n)| {
            debug_assert!(i < n);
            acc * n + i
        })
    }

    pub fn get(&self, idx: &[usize]) -> Complex64 {
        self.data[self.linear_index(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: Complex64) {
        let k = self.linear_index(idx);
        self.data[k] = v;
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }

    pub fn sub(&self, rhs: &DenseTensor) -> Result<DenseTensor> {
        if self.shape != rhs.shape {
            return Err(Error::Dimension(format!("shapes {:?} and {:?} differ", self.shape, rhs.shape)));
        }
        Ok(DenseTensor {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn add(&self, rhs: &DenseTensor) -> Result<DenseTensor> {
        if self.shape != rhs.shape {
            return Err(Error::Dimension(format!("shapes {:?} and {:?} differ", self.shape, rhs.shape)));
        }
        Ok(DenseTensor {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn scale(&self, s: Complex64) -> DenseTensor {
        DenseTensor { shape: self.shape.clone(), data: self.data.iter().map(|z| z * s).collect() }
    }

    fn check_mode(&self, p: usize) -> Result<()> {
        if p >= self.order() {
            return Err(Error::Dimension(format!("mode {p} out of range for order {}", self.order())));
        }
        Ok(())
    }

    /// `(outer, n_p, inner)` view of the data around mode `p`.
    fn split_at_mode(&self, p: usize) -> (usize, usize, usize) {
        let outer = self.shape[..p].iter().product();
        let inner = self.shape[p + 1..].iter().product();
        (outer, self.shape[p], inner)
    }
}

fn validate_shape(shape: &[usize]) -> Result<()> {
    if shape.is_empty() {
        return Err(Error::Dimension("tensor order must be at least 1".into()));
    }
    if shape.contains(&0) {
        return Err(Error::Dimension(format!("zero extent in shape {shape:?}")));
    }
    Ok(())
}

/// Odometer step over a row-major multi-index.
pub(crate) fn increment(idx: &mut [usize], shape: &[usize]) {
    for k in (0..shape.len()).rev() {
        idx[k] += 1;
        if idx[k] < shape[k] {
            return;
        }
        idx[k] = 0;
    }
}

/// Mode-p product `A ×_p M` with `(A ×_p M)_{..j..} = Σ_i A_{..i..} M_{ij}`.
///
/// No conjugation and no transposition of `M`.
pub fn mode_p_product(a: &DenseTensor, p: usize, m: &ComplexMatrix) -> Result<DenseTensor> {
    a.check_mode(p)?;
    if m.rows() != a.shape[p] {
        return Err(Error::Dimension(format!(
            "mode {p} has extent {}, matrix has {} rows",
            a.shape[p],
            m.rows()
        )));
    }
    let (outer, np, inner) = a.split_at_mode(p);
    let nq = m.cols();
    let mut shape = a.shape.clone();
    shape[p] = nq;
    let mut out = vec![ZERO; outer * nq * inner];
    for o in 0..outer {
        let src = &a.data[o * np * inner..(o + 1) * np * inner];
        let dst = &mut out[o * nq * inner..(o + 1) * nq * inner];
        for j in 0..nq {
            let d = &mut dst[j * inner..(j + 1) * inner];
            for i in 0..np {
                let w = m.get(i, j);
                if w == ZERO {
                    continue;
                }
                for (dv, sv) in d.iter_mut().zip(&src[i * inner..(i + 1) * inner]) {
                    *dv += sv * w;
                }
            }
        }
    }
    DenseTensor::new(shape, out)
}

/// Mode-p unfolding: an `n_p × (N / n_p)` matrix whose columns run over the
/// remaining indices in row-major order (earliest remaining index slowest).
pub fn unfold(a: &DenseTensor, p: usize) -> Result<ComplexMatrix> {
    a.check_mode(p)?;
    let (outer, np, inner) = a.split_at_mode(p);
    Ok(ComplexMatrix::from_fn(np, outer * inner, |i, col| {
        let (o, r) = (col / inner, col % inner);
        a.data[(o * np + i) * inner + r]
    }))
}

/// Inverse of [`unfold`].
pub fn fold(m: &ComplexMatrix, p: usize, shape: &[usize]) -> Result<DenseTensor> {
    validate_shape(shape)?;
    if p >= shape.len() || m.rows() != shape[p] || m.rows() * m.cols() != shape.iter().product::<usize>() {
        return Err(Error::Dimension(format!(
            "cannot fold a {}x{} matrix along mode {p} into {shape:?}",
            m.rows(),
            m.cols()
        )));
    }
    let np = shape[p];
    let inner: usize = shape[p + 1..].iter().product();
    let mut data = vec![ZERO; m.rows() * m.cols()];
    for col in 0..m.cols() {
        let (o, r) = (col / inner, col % inner);
        for i in 0..np {
            data[(o * np + i) * inner + r] = m.get(i, col);
        }
    }
    DenseTensor::new(shape.to_vec(), data)
}

/// Brute-force `y = A ×_1 x_2 ... ×_m x_m` (vectors for modes `1..m`, zero-based).
pub fn tvp_contract(a: &DenseTensor, xs: &[&[Complex64]]) -> Result<Vec<Complex64>> {
    let m = a.order();
    if xs.len() + 1 != m {
        return Err(Error::Dimension(format!("order {m} tensor needs {} vectors, got {}", m - 1, xs.len())));
    }
    for (q, x) in xs.iter().enumerate() {
        if x.len() != a.shape[q + 1] {
            return Err(Error::Dimension(format!(
                "vector for mode {} has length {}, expected {}",
                q + 1,
                x.len(),
                a.shape[q + 1]
            )));
        }
    }
    // contract trailing modes one at a time
    let mut cur = a.data.clone();
    for q in (1..m).rev() {
        let n = a.shape[q];
        let x = xs[q - 1];
        cur = cur.chunks_exact(n).map(|chunk| chunk.iter().zip(x).map(|(v, w)| v * w).sum()).collect();
    }
    Ok(cur)
}

/// Brute-force `α = A ×_0 x_0 ×_1 x_1 ... ×_{m-1} x_{m-1}`.
pub fn tvp_full(a: &DenseTensor, xs: &[&[Complex64]]) -> Result<Complex64> {
    if xs.len() != a.order() {
        return Err(Error::Dimension(format!("order {} tensor needs {} vectors", a.order(), a.order())));
    }
    if xs[0].len() != a.shape[0] {
        return Err(Error::Dimension("first vector length mismatch".into()));
    }
    let y = tvp_contract(a, &xs[1..])?;
    Ok(y.iter().zip(xs[0]).map(|(a, b)| a * b).sum())
}

/// Degree of freedom `Σ n_p - m + 1` of a Hankel tensor with this shape.
pub fn hankel_dof(shape: &[usize]) -> usize {
    shape.iter().sum::<usize>() + 1 - shape.len()
}

/// Materialize a Hankel tensor: entry `(i_1..i_m) = h[i_1 + ... + i_m]`.
pub fn build_hankel_dense(h: &[Complex64], shape: &[usize]) -> Result<DenseTensor> {
    validate_shape(shape)?;
    let d = hankel_dof(shape);
    if h.len() != d {
        return Err(Error::Dimension(format!("shape {shape:?} needs a generating vector of length {d}, got {}", h.len())));
    }
    reserve_dense(shape)?;
    DenseTensor::from_fn(shape.to_vec(), |idx| h[idx.iter().sum::<usize>()])
}

/// Materialize an anti-circulant tensor: entry `= c[(i_1 + ... + i_m) mod n]`.
pub fn build_acirc_dense(c: &[Complex64], order: usize) -> Result<DenseTensor> {
    let n = c.len();
    if n == 0 || order == 0 {
        return Err(Error::Empty("anti-circulant generating vector"));
    }
    let shape = vec![n; order];
    reserve_dense(&shape)?;
    DenseTensor::from_fn(shape, |idx| c[idx.iter().sum::<usize>() % n])
}

/// Materialize a BHHB tensor. Mode-p index is `i_p + n_p j_p` (block `j_p`,
/// inner `i_p`) and the entry is `H[Σ i_p, Σ j_p]`.
pub fn build_bhhb_dense(h: &ComplexMatrix, outer: &[usize], block: &[usize]) -> Result<DenseTensor> {
    if outer.len() != block.len() {
        return Err(Error::Dimension("outer and block sizes must have the same order".into()));
    }
    validate_shape(outer)?;
    validate_shape(block)?;
    let (d1, d2) = (hankel_dof(block), hankel_dof(outer));
    if h.shape() != (d1, d2) {
        return Err(Error::Dimension(format!(
            "generating matrix must be {d1}x{d2}, got {}x{}",
            h.rows(),
            h.cols()
        )));
    }
    let shape: Vec<usize> = block.iter().zip(outer).map(|(n, big)| n * big).collect();
    reserve_dense(&shape)?;
    DenseTensor::from_fn(shape, |idx| {
        let (mut si, mut sj) = (0, 0);
        for (p, &k) in idx.iter().enumerate() {
            si += k % block[p];
            sj += k / block[p];
        }
        h.get(si, sj)
    })
}

/// Materialize a BAAB tensor of order `m` from its `n × N` compressed
/// generating matrix: entry `= C[(Σ i_p) mod n, (Σ j_p) mod N]` with mode
/// index `i_p + n j_p`.
pub fn build_baab_dense(c: &ComplexMatrix, order: usize) -> Result<DenseTensor> {
    if order == 0 {
        return Err(Error::Dimension("order must be at least 1".into()));
    }
    let (n, big_n) = c.shape();
    let shape = vec![n * big_n; order];
    reserve_dense(&shape)?;
    DenseTensor::from_fn(shape, |idx| {
        let (mut si, mut sj) = (0, 0);
        for &k in idx {
            si += k % n;
            sj += k / n;
        }
        c.get(si % n, sj % big_n)
    })
}

/// Materialize a level-k block Hankel tensor.
///
/// `sizes[l][p]` is the level-`l` extent of mode `p` (level 0 innermost) and
/// the mode-p index is `i^(0) + n^(0) (i^(1) + n^(1) (...))`. The entry is
/// `G[Σ_p i_p^(0), ..., Σ_p i_p^(k-1)]`; `G` is stored with its axes in level order.
pub fn build_levelk_dense(generating: &DenseTensor, sizes: &[Vec<usize>]) -> Result<DenseTensor> {
    let k = sizes.len();
    if k == 0 || generating.order() != k {
        return Err(Error::Dimension(format!(
            "level count {k} must match generating tensor order {}",
            generating.order()
        )));
    }
    let m = sizes[0].len();
    for level in sizes {
        if level.len() != m {
            return Err(Error::Dimension("every level must list one size per mode".into()));
        }
        validate_shape(level)?;
    }
    for (l, level) in sizes.iter().enumerate() {
        if generating.shape()[l] != hankel_dof(level) {
            return Err(Error::Dimension(format!(
                "generating tensor axis {l} must have length {}",
                hankel_dof(level)
            )));
        }
    }
    let shape: Vec<usize> = (0..m).map(|p| sizes.iter().map(|lv| lv[p]).product()).collect();
    reserve_dense(&shape)?;
    let mut gidx = vec![0usize; k];
    DenseTensor::from_fn(shape, |idx| {
        gidx.iter_mut().for_each(|g| *g = 0);
        for (p, &flat) in idx.iter().enumerate() {
            let mut rest = flat;
            for (l, level) in sizes.iter().enumerate() {
                gidx[l] += rest % level[p];
                rest /= level[p];
            }
        }
        generating.get(&gidx)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn identity_mode_product_is_noop() {
        let a = DenseTensor::from_fn(vec![2, 3, 4], |i| c((i[0] * 12 + i[1] * 4 + i[2]) as f64)).unwrap();
        for p in 0..3 {
            let b = mode_p_product(&a, p, &ComplexMatrix::identity(a.shape()[p])).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn matrix_mode_products_are_transpose_sandwich() {
        let a = ComplexMatrix::from_rows(&[vec![c(1.0), c(2.0)], vec![c(3.0), Complex64::new(0.0, 1.0)]]).unwrap();
        let m1 = ComplexMatrix::from_rows(&[vec![Complex64::new(1.0, 1.0), c(2.0)], vec![c(0.5), c(-1.0)]]).unwrap();
        let m2 = ComplexMatrix::from_rows(&[vec![c(2.0), Complex64::new(0.0, -3.0)], vec![c(1.0), c(4.0)]]).unwrap();
        let t = DenseTensor::from_fn(vec![2, 2], |i| a.get(i[0], i[1])).unwrap();
        let r = mode_p_product(&mode_p_product(&t, 0, &m1).unwrap(), 1, &m2).unwrap();
        let expected = m1.transpose().matmul(&a).unwrap().matmul(&m2).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((r.get(&[i, j]) - expected.get(i, j)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn mode_product_shape_mismatch() {
        let a = DenseTensor::zeros(vec![2, 3]).unwrap();
        let err = mode_p_product(&a, 1, &ComplexMatrix::identity(2)).unwrap_err();
        assert!(matches!(err, Error::Dimension(_)));
        assert!(mode_p_product(&a, 2, &ComplexMatrix::identity(2)).is_err());
    }

    #[test]
    fn acirc_unfolding_matches_printed_layout() {
        let cv = [c(10.0), c(11.0), c(12.0)];
        let t = build_acirc_dense(&cv, 3).unwrap();
        let u = unfold(&t, 0).unwrap();
        assert_eq!(u.shape(), (3, 9));
        // rows of the three 3x3 blocks, by index into c
        let expected = [
            [0, 1, 2, 1, 2, 0, 2, 0, 1],
            [1, 2, 0, 2, 0, 1, 0, 1, 2],
            [2, 0, 1, 0, 1, 2, 1, 2, 0],
        ];
        for i in 0..3 {
            for j in 0..9 {
                assert_eq!(u.get(i, j), cv[expected[i][j]]);
            }
        }
    }

    #[test]
    fn unfold_shape_and_roundtrip() {
        let a = DenseTensor::from_fn(vec![2, 3, 4], |i| Complex64::new(i[0] as f64, (i[1] * 4 + i[2]) as f64)).unwrap();
        let u = unfold(&a, 1).unwrap();
        assert_eq!(u.shape(), (3, 8));
        for p in 0..3 {
            assert_eq!(fold(&unfold(&a, p).unwrap(), p, a.shape()).unwrap(), a);
        }
    }

    #[test]
    fn zero_tensor_contracts_to_zero() {
        let a = DenseTensor::zeros(vec![3, 3, 3]).unwrap();
        let x = [c(1.0), c(2.0), c(3.0)];
        let y = tvp_contract(&a, &[&x, &x]).unwrap();
        assert!(y.iter().all(|v| *v == ZERO));
    }

    #[test]
    fn acirc_full_product_picks_corner() {
        let t = build_acirc_dense(&[c(1.0), c(2.0), c(3.0)], 3).unwrap();
        let e0 = [c(1.0), c(0.0), c(0.0)];
        assert_eq!(tvp_full(&t, &[&e0, &e0, &e0]).unwrap(), c(1.0));
    }

    #[test]
    fn hankel_contraction_with_ones() {
        // y_i = Σ_{j,k} (i + j + k) over j,k in 0..3
        let h: Vec<Complex64> = (0..7).map(|k| c(k as f64)).collect();
        let t = build_hankel_dense(&h, &[3, 3, 3]).unwrap();
        let ones = [c(1.0); 3];
        let y = tvp_contract(&t, &[&ones, &ones]).unwrap();
        assert_eq!(y, vec![c(18.0), c(27.0), c(36.0)]);
    }

    #[test]
    fn hankel_impulse() {
        let mut h = vec![ZERO; 7];
        h[0] = ONE;
        let t = build_hankel_dense(&h, &[3, 3, 3]).unwrap();
        assert_eq!(t.get(&[0, 0, 0]), ONE);
        assert_eq!(t.data().iter().filter(|v| **v != ZERO).count(), 1);
    }

    #[test]
    fn builder_rejects_wrong_length() {
        assert!(matches!(build_hankel_dense(&[ONE; 6], &[3, 3, 3]), Err(Error::Dimension(_))));
    }

    #[test]
    fn bhhb_with_unit_blocks_is_hankel() {
        let outer = [3, 2, 4];
        let d = hankel_dof(&outer);
        let h: Vec<Complex64> = (0..d).map(|k| Complex64::new(k as f64, -(k as f64) / 2.0)).collect();
        let hm = ComplexMatrix::new(1, d, h.clone()).unwrap();
        let b = build_bhhb_dense(&hm, &outer, &[1, 1, 1]).unwrap();
        assert_eq!(b, build_hankel_dense(&h, &outer).unwrap());
    }

    #[test]
    fn dense_cap_is_enforced_and_counted() {
        let before = dense_builds_on_this_thread();
        let big = vec![ONE; hankel_dof(&[300, 300, 300])];
        let err = build_hankel_dense(&big, &[300, 300, 300]).unwrap_err();
        assert!(matches!(err, Error::DenseCapExceeded { .. }));
        assert_eq!(dense_builds_on_this_thread(), before);
        build_hankel_dense(&[ONE; 3], &[2, 2]).unwrap();
        assert_eq!(dense_builds_on_this_thread(), before + 1);
    }
}
