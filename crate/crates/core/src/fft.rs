//! DFT primitives with the convention
//!
//! * `fft(v)_j  = Σ_k v_k exp(-2πi jk/n)` (unnormalized, `= F_n v`)
//! * `ifft(v)_j = (1/n) Σ_k v_k exp(+2πi jk/n)`
//!
//! for arbitrary lengths. Transforms are backed by `rustfft` (mixed radix,
//! Rader and Bluestein), with plans cached in a process-wide planner.

use std::sync::{Arc, LazyLock, Mutex};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::tensor::{ComplexMatrix, DenseTensor};

static PLANNER: LazyLock<Mutex<FftPlanner<f64>>> = LazyLock::new(|| Mutex::new(FftPlanner::new()));

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

fn plan(len: usize, dir: Direction) -> Arc<dyn Fft<f64>> {
    let mut planner = PLANNER.lock().unwrap_or_else(|e| e.into_inner());
    match dir {
        Direction::Forward => planner.plan_fft_forward(len),
        Direction::Inverse => planner.plan_fft_inverse(len),
    }
}

/// Transform `buf` in place; its length is the transform length.
pub fn transform_in_place(buf: &mut [Complex64], dir: Direction) {
    let n = buf.len();
    if n <= 1 {
        return;
    }
    plan(n, dir).process(buf);
    if dir == Direction::Inverse {
        let s = 1.0 / n as f64;
        buf.iter_mut().for_each(|z| *z *= s);
    }
}

pub fn fft1(v: &[Complex64]) -> Result<Vec<Complex64>> {
    if v.is_empty() {
        return Err(Error::Empty("fft input"));
    }
    let mut out = v.to_vec();
    transform_in_place(&mut out, Direction::Forward);
    Ok(out)
}

pub fn ifft1(v: &[Complex64]) -> Result<Vec<Complex64>> {
    if v.is_empty() {
        return Err(Error::Empty("ifft input"));
    }
    let mut out = v.to_vec();
    transform_in_place(&mut out, Direction::Inverse);
    Ok(out)
}

/// Transform axis of length `len` in data laid out as `[outer][len][inner]`.
pub fn transform_axis(data: &mut [Complex64], outer: usize, len: usize, inner: usize, dir: Direction) {
    debug_assert_eq!(data.len(), outer * len * inner);
    if len <= 1 {
        return;
    }
    let fft = plan(len, dir);
    let scale = if dir == Direction::Inverse { 1.0 / len as f64 } else { 1.0 };
    if inner == 1 {
        // contiguous: rustfft handles a batch of back-to-back transforms
        fft.process(data);
        if scale != 1.0 {
            data.iter_mut().for_each(|z| *z *= scale);
        }
        return;
    }
    let mut line = vec![Complex64::new(0.0, 0.0); len];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for o in 0..outer {
        let base = o * len * inner;
        for r in 0..inner {
            for (k, v) in line.iter_mut().enumerate() {
                *v = data[base + k * inner + r];
            }
            fft.process_with_scratch(&mut line, &mut scratch);
            for (k, v) in line.iter().enumerate() {
                data[base + k * inner + r] = v * scale;
            }
        }
    }
}

fn transform_matrix(m: &mut ComplexMatrix, dir: Direction) {
    let (rows, cols) = m.shape();
    let data = m.data_mut();
    // column-major: down each column, then along each row
    transform_axis(data, cols, rows, 1, dir);
    transform_axis(data, 1, cols, rows, dir);
}

/// `F_n M F_N` for an `n × N` matrix.
pub fn fft2(m: &ComplexMatrix) -> ComplexMatrix {
    let mut out = m.clone();
    transform_matrix(&mut out, Direction::Forward);
    out
}

/// `(1/nN) conj(F_n) M conj(F_N)`.
pub fn ifft2(m: &ComplexMatrix) -> ComplexMatrix {
    let mut out = m.clone();
    transform_matrix(&mut out, Direction::Inverse);
    out
}

/// In-place transform of a row-major array of the given shape along every axis.
pub fn transform_nd_in_place(data: &mut [Complex64], shape: &[usize], dir: Direction) {
    for p in 0..shape.len() {
        let outer: usize = shape[..p].iter().product();
        let inner: usize = shape[p + 1..].iter().product();
        transform_axis(data, outer, shape[p], inner, dir);
    }
}

pub fn fftn(t: &DenseTensor) -> DenseTensor {
    let mut out = t.clone();
    let shape = out.shape().to_vec();
    transform_nd_in_place(out.data_mut(), &shape, Direction::Forward);
    out
}

pub fn ifftn(t: &DenseTensor) -> DenseTensor {
    let mut out = t.clone();
    let shape = out.shape().to_vec();
    transform_nd_in_place(out.data_mut(), &shape, Direction::Inverse);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{mode_p_product, norm, relative_error};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
        (0..n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn impulse_and_constant() {
        assert_eq!(fft1(&[c(1.0), c(0.0), c(0.0), c(0.0)]).unwrap(), vec![c(1.0); 4]);
        let y = fft1(&[c(1.0); 4]).unwrap();
        assert!(relative_error(&y, &[c(4.0), c(0.0), c(0.0), c(0.0)]) < 1e-15);
    }

    #[test]
    fn empty_input_rejected() {
        assert!(fft1(&[]).is_err());
        assert!(ifft1(&[]).is_err());
    }

    #[test]
    fn roundtrip_odd_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let v = random_vec(&mut rng, 7);
        assert!(relative_error(&ifft1(&fft1(&v).unwrap()).unwrap(), &v) < 1e-13);
    }

    #[test]
    fn matches_explicit_dft_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=32 {
            let v = random_vec(&mut rng, n);
            let f = ComplexMatrix::fourier(n);
            let expected = f.matvec(&v).unwrap();
            assert!(relative_error(&fft1(&v).unwrap(), &expected) < 1e-12, "n = {n}");
            let inv = f.conj().matvec(&v).unwrap().into_iter().map(|z| z / n as f64).collect::<Vec<_>>();
            assert!(relative_error(&ifft1(&v).unwrap(), &inv) < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn parseval_and_linearity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [5, 16, 30, 97] {
            let a = random_vec(&mut rng, n);
            let b = random_vec(&mut rng, n);
            let fa = fft1(&a).unwrap();
            let lhs = norm(&fa).powi(2);
            let rhs = n as f64 * norm(&a).powi(2);
            assert!((lhs - rhs).abs() / rhs < 1e-12);
            let s = Complex64::new(0.3, -1.2);
            let combo: Vec<_> = a.iter().zip(&b).map(|(x, y)| x * s + y).collect();
            let fb = fft1(&b).unwrap();
            let expected: Vec<_> = fa.iter().zip(&fb).map(|(x, y)| x * s + y).collect();
            assert!(relative_error(&fft1(&combo).unwrap(), &expected) < 1e-13);
        }
    }

    #[test]
    fn fft2_of_impulse_is_ones() {
        let mut e = ComplexMatrix::zeros(3, 5);
        e.set(0, 0, c(1.0));
        assert!(fft2(&e).data().iter().all(|z| (z - c(1.0)).norm() < 1e-15));
    }

    #[test]
    fn fft2_is_kronecker_fourier() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (n, big_n) in [(2, 3), (3, 4), (4, 5)] {
            let x = random_vec(&mut rng, n * big_n);
            let m = ComplexMatrix::new(n, big_n, x.clone()).unwrap();
            let kron = ComplexMatrix::fourier(big_n).kron(&ComplexMatrix::fourier(n));
            let expected = kron.matvec(&x).unwrap();
            assert!(relative_error(fft2(&m).data(), &expected) < 1e-12);
            assert!(relative_error(ifft2(&fft2(&m)).data(), &x) < 1e-13);
        }
    }

    #[test]
    fn fftn_low_orders_reduce() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v = random_vec(&mut rng, 6);
        let t = DenseTensor::new(vec![6], v.clone()).unwrap();
        assert!(relative_error(fftn(&t).data(), &fft1(&v).unwrap()) < 1e-15);

        let m = ComplexMatrix::new(3, 4, random_vec(&mut rng, 12)).unwrap();
        let t2 = DenseTensor::from_fn(vec![3, 4], |i| m.get(i[0], i[1])).unwrap();
        let f2 = fft2(&m);
        let got = fftn(&t2);
        for i in 0..3 {
            for j in 0..4 {
                assert!((got.get(&[i, j]) - f2.get(i, j)).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn fftn_matches_mode_products_with_fourier() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let t = DenseTensor::new(vec![2, 3, 2], random_vec(&mut rng, 12)).unwrap();
        let mut expected = t.clone();
        for p in 0..3 {
            expected = mode_p_product(&expected, p, &ComplexMatrix::fourier(t.shape()[p])).unwrap();
        }
        assert!(relative_error(fftn(&t).data(), expected.data()) < 1e-13);
        assert!(relative_error(ifftn(&fftn(&t)).data(), t.data()) < 1e-13);
    }
}
