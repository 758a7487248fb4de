//! Low multilinear-rank approximation: reduced Hankel unfoldings, truncated
//! SVD, HOOI for general (dense or structured) tensors, the single-factor
//! HOOI for square Hankel / BHHB tensors, and total least squares.
//!
//! HOOI only ever needs `A ×_q conj(U_q)` for all modes but one, so it is
//! written against [`MultilinearOperator`]. Dense tensors implement that with
//! explicit mode products; Hankel and BHHB plans implement it with fast
//! partial products, one per column combination, and never form the tensor.

use num_complex::Complex64;

use crate::block::{BhhbPlan, BhhbTensor};
use crate::error::{Error, Result};
use crate::hankel::{hankel_matrix, HankelPlan, HankelTensor};
use crate::linalg;
use crate::tensor::{mode_p_product, unfold, ComplexMatrix, DenseTensor};

/// A tensor that HOOI can work with without looking at its entries.
pub trait MultilinearOperator: Sync {
    fn dims(&self) -> Vec<usize>;

    /// `A ×_q M_q` for every `q != free`; `factors` lists those modes in
    /// increasing order. The result has extent `dims[free]` on mode `free`.
    fn project_except(&self, free: usize, factors: &[&ComplexMatrix]) -> Result<DenseTensor>;

    /// A matrix with the same column space as `Unfold_p(A)`.
    fn reduced_unfolding(&self, mode: usize) -> Result<ComplexMatrix>;
}

impl MultilinearOperator for DenseTensor {
    fn dims(&self) -> Vec<usize> {
        self.shape().to_vec()
    }

    fn project_except(&self, free: usize, factors: &[&ComplexMatrix]) -> Result<DenseTensor> {
        if factors.len() + 1 != self.order() {
            return Err(Error::Dimension(format!("expected {} factors", self.order() - 1)));
        }
        let mut cur = self.clone();
        for (q, u) in (0..self.order()).filter(|&q| q != free).zip(factors) {
            cur = mode_p_product(&cur, q, u)?;
        }
        Ok(cur)
    }

    fn reduced_unfolding(&self, mode: usize) -> Result<ComplexMatrix> {
        unfold(self, mode)
    }
}

impl MultilinearOperator for HankelPlan<'_> {
    fn dims(&self) -> Vec<usize> {
        self.tensor().shape().to_vec()
    }

    fn project_except(&self, free: usize, factors: &[&ComplexMatrix]) -> Result<DenseTensor> {
        HankelPlan::project_except(self, free, factors)
    }

    fn reduced_unfolding(&self, mode: usize) -> Result<ComplexMatrix> {
        reduced_unfold(self.tensor(), mode)
    }
}

impl MultilinearOperator for BhhbPlan<'_> {
    fn dims(&self) -> Vec<usize> {
        self.tensor().dims()
    }

    fn project_except(&self, free: usize, factors: &[&ComplexMatrix]) -> Result<DenseTensor> {
        BhhbPlan::project_except(self, free, factors)
    }

    fn reduced_unfolding(&self, mode: usize) -> Result<ComplexMatrix> {
        self.tensor().reduced_unfold(mode)
    }
}

/// Mode-p unfolding of a Hankel tensor with the redundant columns removed:
/// the `I_p × (d_H - I_p + 1)` Hankel matrix with entries `h[i + j]`.
pub fn reduced_unfold(h: &HankelTensor, p: usize) -> Result<ComplexMatrix> {
    let shape = h.shape();
    if p >= shape.len() {
        return Err(Error::Dimension(format!("mode {p} out of range for order {}", shape.len())));
    }
    hankel_matrix(h.generating_vector(), shape[p])
}

/// The `r` leading left singular vectors of `m` (descending singular
/// values, largest entry of each vector real positive).
pub fn truncated_left_sv(m: &ComplexMatrix, r: usize) -> Result<ComplexMatrix> {
    linalg::leading_left_singular_vectors(m, r)
}

#[derive(Clone, Debug, PartialEq)]
pub struct HooiConfig {
    pub ranks: Vec<usize>,
    /// Stop when the relative change of `‖S‖_F` between iterations drops below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl HooiConfig {
    pub fn new(ranks: Vec<usize>) -> Self {
        Self { ranks, tol: 1e-10, max_iter: 100 }
    }

    pub fn uniform(rank: usize, order: usize) -> Self {
        Self::new(vec![rank; order])
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    fn validate(&self, dims: &[usize]) -> Result<()> {
        if self.ranks.len() != dims.len() {
            return Err(Error::Dimension(format!(
                "{} ranks given for an order-{} tensor",
                self.ranks.len(),
                dims.len()
            )));
        }
        for (&r, &n) in self.ranks.iter().zip(dims) {
            if r == 0 || r > n {
                return Err(Error::RankOutOfRange { rank: r, max: n });
            }
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be positive".into()));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::InvalidParameter("tol must be non-negative".into()));
        }
        Ok(())
    }
}

/// Tucker form `A ≈ S ×_1 U_1ᵀ ... ×_m U_mᵀ`.
#[derive(Clone, Debug, PartialEq)]
pub struct TuckerFactors {
    pub core: DenseTensor,
    pub factors: Vec<ComplexMatrix>,
}

impl TuckerFactors {
    pub fn reconstruct(&self) -> Result<DenseTensor> {
        let mut t = self.core.clone();
        for (p, u) in self.factors.iter().enumerate() {
            t = mode_p_product(&t, p, &u.transpose())?;
        }
        Ok(t)
    }

    /// Largest `‖U_p* U_p - I‖_F` over the factors.
    pub fn orthonormality_error(&self) -> f64 {
        self.factors
            .iter()
            .map(|u| {
                let g = u.adjoint().matmul(u).expect("compatible");
                g.sub(&ComplexMatrix::identity(u.cols())).expect("square").frobenius_norm()
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug)]
pub struct HooiResult {
    pub tucker: TuckerFactors,
    /// Number of factor updates (sweeps for the general variant).
    pub iterations: usize,
    pub converged: bool,
    /// `‖S‖_F` never dropped by more than `1e-12` (relative) between iterations.
    pub monotone: bool,
    /// `‖S‖_F` after initialization and after every iteration.
    pub fit_history: Vec<f64>,
}

impl HooiResult {
    pub fn fit(&self) -> f64 {
        self.tucker.core.frobenius_norm()
    }

    /// Mode-0 factor (the shared one for the symmetric variants).
    pub fn factor(&self) -> &ComplexMatrix {
        &self.tucker.factors[0]
    }
}

const MONOTONE_SLACK: f64 = 1e-12;

fn conj_refs<'a>(conj: &'a [ComplexMatrix], skip: usize) -> Vec<&'a ComplexMatrix> {
    conj.iter().enumerate().filter(|(q, _)| *q != skip).map(|(_, u)| u).collect()
}

fn relative_change(new: f64, old: f64) -> f64 {
    (new - old).abs() / new.max(f64::MIN_POSITIVE)
}

fn is_monotone(history: &[f64]) -> bool {
    history.windows(2).all(|w| w[1] >= w[0] - MONOTONE_SLACK * w[1].max(w[0]))
}

/// HOOI with one factor per mode, initialized from the (reduced)
/// unfoldings.
pub fn hooi<T: MultilinearOperator + ?Sized>(op: &T, cfg: &HooiConfig) -> Result<HooiResult> {
    let dims = op.dims();
    cfg.validate(&dims)?;
    let m = dims.len();
    let mut factors = (0..m)
        .map(|p| truncated_left_sv(&op.reduced_unfolding(p)?, cfg.ranks[p]))
        .collect::<Result<Vec<_>>>()?;

    let core_of = |factors: &[ComplexMatrix]| -> Result<DenseTensor> {
        let conj: Vec<ComplexMatrix> = factors.iter().map(ComplexMatrix::conj).collect();
        let b = op.project_except(0, &conj_refs(&conj, 0))?;
        mode_p_product(&b, 0, &conj[0])
    };

    let mut history = vec![core_of(&factors)?.frobenius_norm()];
    let mut best = (history[0], factors.clone());
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        iterations += 1;
        let mut last = None;
        for p in 0..m {
            let conj: Vec<ComplexMatrix> = factors.iter().map(ComplexMatrix::conj).collect();
            let b = op.project_except(p, &conj_refs(&conj, p))?;
            factors[p] = truncated_left_sv(&unfold(&b, p)?, cfg.ranks[p])?;
            last = Some(b);
        }
        let b = last.expect("order >= 1");
        let fit = mode_p_product(&b, m - 1, &factors[m - 1].conj())?.frobenius_norm();
        let prev = *history.last().expect("non-empty");
        history.push(fit);
        if fit > best.0 {
            best = (fit, factors.clone());
        }
        if relative_change(fit, prev) < cfg.tol {
            converged = true;
            break;
        }
    }
    let factors = best.1;
    let core = core_of(&factors)?;
    Ok(HooiResult {
        tucker: TuckerFactors { core, factors },
        iterations,
        converged,
        monotone: is_monotone(&history),
        fit_history: history,
    })
}

/// Reference HOOI on a dense tensor.
pub fn hooi_general(a: &DenseTensor, cfg: &HooiConfig) -> Result<HooiResult> {
    hooi(a, cfg)
}

/// HOOI with a single shared factor `U` for tensors that are invariant
/// under mode permutations (square Hankel, square BHHB):
/// `U ← R leading left singular vectors of Unfold_1(A ×_2 conj(U) ... ×_m conj(U))`.
///
/// The best iterate by `‖S‖_F` is returned; `monotone` reports whether the
/// fit ever decreased.
pub fn hooi_symmetric<T: MultilinearOperator + ?Sized>(op: &T, rank: usize, cfg: &HooiConfig) -> Result<HooiResult> {
    let dims = op.dims();
    if dims.iter().any(|&n| n != dims[0]) {
        return Err(Error::Dimension(format!("symmetric HOOI needs equal mode sizes, got {dims:?}")));
    }
    let m = dims.len();
    HooiConfig { ranks: vec![rank; m], ..cfg.clone() }.validate(&dims)?;

    let mut u = truncated_left_sv(&op.reduced_unfolding(0)?, rank)?;
    let mut history = Vec::new();
    let mut best: Option<(f64, ComplexMatrix, DenseTensor)> = None;
    let mut converged = false;
    let mut iterations = 0;
    loop {
        let cu = u.conj();
        let refs = vec![&cu; m - 1];
        let b = op.project_except(0, &refs)?;
        let core = mode_p_product(&b, 0, &cu)?;
        let fit = core.frobenius_norm();
        let prev = history.last().copied();
        history.push(fit);
        if best.as_ref().is_none_or(|(f, _, _)| fit > *f) {
            best = Some((fit, u.clone(), core));
        }
        if let Some(prev) = prev {
            if relative_change(fit, prev) < cfg.tol {
                converged = true;
                break;
            }
        }
        if iterations == cfg.max_iter {
            break;
        }
        u = truncated_left_sv(&unfold(&b, 0)?, rank)?;
        iterations += 1;
    }
    let (_, u, core) = best.expect("at least one iterate");
    Ok(HooiResult {
        tucker: TuckerFactors { core, factors: vec![u; m] },
        iterations,
        converged,
        monotone: is_monotone(&history),
        fit_history: history,
    })
}

/// Best rank-(R, ..., R) approximation of a square Hankel tensor using fast
/// Hankel tensor-matrix products; the tensor is never materialized.
pub fn hooi_square_hankel(h: &HankelTensor, rank: usize, cfg: &HooiConfig) -> Result<HooiResult> {
    if !h.is_square() {
        return Err(Error::Dimension(format!("expected a square Hankel tensor, got {:?}", h.shape())));
    }
    hooi_symmetric(&h.plan(), rank, cfg)
}

/// HOOI with distinct factors on a (possibly non-square) Hankel tensor,
/// using fast products.
pub fn hooi_hankel(h: &HankelTensor, cfg: &HooiConfig) -> Result<HooiResult> {
    hooi(&h.plan(), cfg)
}

/// Shared-factor HOOI for a BHHB tensor with equal block and outer sizes.
pub fn hooi_square_bhhb(b: &BhhbTensor, rank: usize, cfg: &HooiConfig) -> Result<HooiResult> {
    if !b.is_square() {
        return Err(Error::Dimension("expected equal block and outer sizes".into()));
    }
    hooi_symmetric(&b.plan(), rank, cfg)
}

pub fn hooi_bhhb(b: &BhhbTensor, cfg: &HooiConfig) -> Result<HooiResult> {
    hooi(&b.plan(), cfg)
}

/// Relative tolerance on `σ_min(V22) / σ_max(V22)` below which TLS is degenerate.
pub const TLS_DEGENERACY: f64 = 1e-12;

/// Classical total least squares for `A W ≈ B` (`A`, `B` both `p × K`):
/// with right singular vectors `V = [[V11, V12], [V21, V22]]` of `[A B]`,
/// `W = -V12 V22⁻¹`.
pub fn tls_solve(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if a.shape() != b.shape() {
        return Err(Error::Dimension(format!("A is {:?} but B is {:?}", a.shape(), b.shape())));
    }
    let (p, k) = a.shape();
    if p < k {
        return Err(Error::Dimension(format!("TLS needs at least {k} rows, got {p}")));
    }
    let stacked = ComplexMatrix::new(p, 2 * k, [a.data(), b.data()].concat())?;
    let (_, v) = linalg::full_right_singular_vectors(&stacked)?;
    let v12 = ComplexMatrix::from_fn(k, k, |i, j| v.get(i, k + j));
    let v22 = ComplexMatrix::from_fn(k, k, |i, j| v.get(k + i, k + j));
    let s = linalg::singular_values(&v22)?;
    let (smax, smin) = (s[0], *s.last().expect("k >= 1"));
    if !(smin >= TLS_DEGENERACY * smax) || smax == 0.0 {
        return Err(Error::DegenerateTls(format!(
            "trailing block of right singular vectors is singular (σ_min/σ_max = {:.3e})",
            if smax > 0.0 { smin / smax } else { 0.0 }
        )));
    }
    let inv = linalg::inverse(&v22)?;
    Ok(v12.matmul(&inv)?.scale(Complex64::new(-1.0, 0.0)))
}
