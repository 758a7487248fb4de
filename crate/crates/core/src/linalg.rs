//! Dense complex linear algebra helpers on top of nalgebra: sorted SVDs with
//! a fixed phase convention, eigenvalues and null vectors of small matrices.

use nalgebra::{DMatrix, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tensor::ComplexMatrix;

/// Singular triplets sorted by descending singular value.
#[derive(Clone, Debug)]
pub struct SortedSvd {
    pub singular_values: Vec<f64>,
    /// Left singular vectors, one column per singular value.
    pub u: Option<ComplexMatrix>,
    /// Right singular vectors (not conjugated), one column per singular value.
    pub v: Option<ComplexMatrix>,
}

/// SVD with columns ordered by descending singular value; equal values keep
/// their original order. Each returned left singular vector is rotated so
/// that its largest-magnitude entry is real and positive; the matching right
/// vector gets the same phase so the triplets stay consistent.
pub fn svd(m: &ComplexMatrix, compute_u: bool, compute_v: bool) -> Result<SortedSvd> {
    let raw = SVD::try_new_unordered(m.to_nalgebra(), compute_u, compute_v, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
    let k = raw.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| raw.singular_values[b].total_cmp(&raw.singular_values[a]));

    let singular_values = order.iter().map(|&i| raw.singular_values[i]).collect();
    let phases: Vec<Complex64> = match (&raw.u, compute_v) {
        (Some(u), _) => order.iter().map(|&i| phase_of(u.column(i).as_slice())).collect(),
        (None, true) => {
            let vt = raw.v_t.as_ref().expect("requested");
            order.iter().map(|&i| phase_of(&vt.row(i).iter().map(|z| z.conj()).collect::<Vec<_>>())).collect()
        }
        _ => vec![Complex64::new(1.0, 0.0); k],
    };
    let u = raw.u.as_ref().map(|u| {
        ComplexMatrix::from_fn(u.nrows(), k, |r, c| u[(r, order[c])] * phases[c])
    });
    let v = raw.v_t.as_ref().map(|vt| {
        ComplexMatrix::from_fn(vt.ncols(), k, |r, c| vt[(order[c], r)].conj() * phases[c])
    });
    Ok(SortedSvd { singular_values, u, v })
}

/// Unit-modulus factor making the largest-magnitude entry real positive.
fn phase_of(col: &[Complex64]) -> Complex64 {
    let mut best = Complex64::new(0.0, 0.0);
    for z in col {
        if z.norm() > best.norm() {
            best = *z;
        }
    }
    if best.norm() == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        best.conj() / best.norm()
    }
}

pub fn singular_values(m: &ComplexMatrix) -> Result<Vec<f64>> {
    Ok(svd(m, false, false)?.singular_values)
}

/// Leading `r` left singular vectors.
pub fn leading_left_singular_vectors(m: &ComplexMatrix, r: usize) -> Result<ComplexMatrix> {
    let max = m.rows().min(m.cols());
    if r == 0 || r > max {
        return Err(Error::RankOutOfRange { rank: r, max });
    }
    let s = svd(m, true, false)?;
    Ok(s.u.expect("requested").leading_columns(r))
}

/// All right singular vectors of `m` as the columns of an `n × n` unitary
/// matrix, with the singular values (padded with zeros to length `n`).
pub fn full_right_singular_vectors(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    let (rows, cols) = m.shape();
    // zero rows leave V and the nonzero spectrum unchanged but make V square
    let padded = if rows < cols {
        let mut data = Vec::with_capacity(cols * cols);
        for j in 0..cols {
            data.extend_from_slice(m.col(j));
            data.extend(std::iter::repeat_n(Complex64::new(0.0, 0.0), cols - rows));
        }
        ComplexMatrix::new(cols, cols, data)?
    } else {
        m.clone()
    };
    let s = svd(&padded, false, true)?;
    Ok((s.singular_values, s.v.expect("requested")))
}

/// Eigenvalues of a square matrix (complex Schur form).
pub fn eigenvalues(m: &ComplexMatrix) -> Result<Vec<Complex64>> {
    if m.rows() != m.cols() {
        return Err(Error::Dimension("eigenvalues need a square matrix".into()));
    }
    let a: DMatrix<Complex64> = m.to_nalgebra();
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("matrix has non-finite entries".into()));
    }
    a.eigenvalues()
        .map(|v| v.iter().copied().collect())
        .ok_or_else(|| Error::Numerical("Schur iteration did not converge".into()))
}

/// Unit vector `v` minimizing `‖(M - λI) v‖`, i.e. an eigenvector for an
/// eigenvalue `λ` of `M`.
pub fn null_vector(m: &ComplexMatrix, lambda: Complex64) -> Result<Vec<Complex64>> {
    let n = m.rows();
    let shifted = ComplexMatrix::from_fn(n, n, |i, j| if i == j { m.get(i, j) - lambda } else { m.get(i, j) });
    let (_, v) = full_right_singular_vectors(&shifted)?;
    Ok(v.col(n - 1).to_vec())
}

pub fn inverse(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    m.to_nalgebra()
        .try_inverse()
        .map(|inv| ComplexMatrix::from_nalgebra(&inv))
        .ok_or_else(|| Error::Numerical("matrix is singular".into()))
}

/// `σ_max / σ_min` (infinite when singular).
pub fn condition_number(m: &ComplexMatrix) -> Result<f64> {
    let s = singular_values(m)?;
    let (max, min) = (s[0], *s.last().expect("non-empty"));
    Ok(if min == 0.0 { f64::INFINITY } else { max / min })
}

/// Minimum-norm least squares solution of `A x = b`.
pub fn least_squares(a: &ComplexMatrix, b: &[Complex64]) -> Result<Vec<Complex64>> {
    if a.rows() != b.len() {
        return Err(Error::Dimension("right-hand side length mismatch".into()));
    }
    let rhs = nalgebra::DVector::from_column_slice(b);
    let svd = SVD::try_new(a.to_nalgebra(), true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
    let eps = svd.singular_values.max() * 1e-13;
    let x = svd.solve(&rhs, eps).map_err(|e| Error::Numerical(e.to_string()))?;
    Ok(x.iter().copied().collect())
}
