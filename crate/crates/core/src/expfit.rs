//! Exponential data fitting in one and two dimensions.
//!
//! A 1D signal `x_n = Σ c_k z_k^n` gives a Hankel tensor whose mode
//! factors span the column space of a Vandermonde matrix; a 2D signal
//! `x_{n1,n2} = Σ c_k z_{1,k}^{n1} z_{2,k}^{n2}` gives a BHHB tensor whose
//! factors span `Z_2 ⊘ Z_1` (column-wise Kronecker product). Poles follow
//! from shift invariance of that column space, solved by TLS.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::block::BhhbTensor;
use crate::decomposition::{
    hooi_bhhb, hooi_hankel, hooi_square_bhhb, hooi_square_hankel, reduced_unfold, tls_solve, HooiConfig, HooiResult,
};
use crate::error::{Error, Result};
use crate::hankel::HankelTensor;
use crate::linalg;
use crate::tensor::{build_bhhb_dense, build_hankel_dense, mode_p_product, ComplexMatrix, DenseTensor};

/// Ratio `σ_K / σ_1` of the mode-1 unfolding below which the data is
/// treated as having fewer than `K` components.
pub const RANK_TOLERANCE: f64 = 1e-13;

/// Condition number of the eigenvector matrix of `W_1` above which the
/// second-dimension poles cannot be paired reliably.
pub const PAIRING_CONDITION_LIMIT: f64 = 1e10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpTerm1D {
    pub amplitude: f64,
    pub phase: f64,
    pub damping: f64,
    pub pulsation: f64,
}

/// `x_n = Σ a_k e^{iφ_k} e^{(-α_k + iω_k) n Δt}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpModel1D {
    pub terms: Vec<ExpTerm1D>,
    pub dt: f64,
}

impl ExpModel1D {
    pub fn new(terms: Vec<ExpTerm1D>, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidParameter(format!("sampling interval must be positive, got {dt}")));
        }
        if terms.iter().any(|t| !(t.amplitude >= 0.0)) {
            return Err(Error::InvalidParameter("amplitudes must be non-negative".into()));
        }
        Ok(Self { terms, dt })
    }

    /// Model with the given complex amplitudes `c_k` and poles `z_k`, `Δt = 1`.
    pub fn from_poles(c: &[Complex64], z: &[Complex64]) -> Result<Self> {
        if c.len() != z.len() {
            return Err(Error::Dimension(format!("{} amplitudes for {} poles", c.len(), z.len())));
        }
        if z.iter().any(|z| z.norm() == 0.0) {
            return Err(Error::InvalidParameter("poles must be nonzero".into()));
        }
        let terms = c
            .iter()
            .zip(z)
            .map(|(c, z)| ExpTerm1D { amplitude: c.norm(), phase: c.arg(), damping: -z.norm().ln(), pulsation: z.arg() })
            .collect();
        Self::new(terms, 1.0)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn amplitudes(&self) -> Vec<Complex64> {
        self.terms.iter().map(|t| Complex64::from_polar(t.amplitude, t.phase)).collect()
    }

    pub fn poles(&self) -> Vec<Complex64> {
        self.terms.iter().map(|t| Complex64::new(-t.damping, t.pulsation).scale(self.dt).exp()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpTerm2D {
    pub amplitude: f64,
    pub phase: f64,
    /// `α_k`, `ω_k`: first dimension.
    pub damping1: f64,
    pub pulsation1: f64,
    /// `β_k`, `ν_k`: second dimension.
    pub damping2: f64,
    pub pulsation2: f64,
}

/// `x_{n1,n2} = Σ c_k z_{1,k}^{n1} z_{2,k}^{n2}` with
/// `z_{1,k} = e^{(-α_k + iω_k) Δt_1}` and `z_{2,k} = e^{(-β_k + iν_k) Δt_2}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpModel2D {
    pub terms: Vec<ExpTerm2D>,
    pub dt1: f64,
    pub dt2: f64,
}

impl ExpModel2D {
    pub fn new(terms: Vec<ExpTerm2D>, dt1: f64, dt2: f64) -> Result<Self> {
        for dt in [dt1, dt2] {
            if !(dt > 0.0) || !dt.is_finite() {
                return Err(Error::InvalidParameter(format!("sampling interval must be positive, got {dt}")));
            }
        }
        if terms.iter().any(|t| !(t.amplitude >= 0.0)) {
            return Err(Error::InvalidParameter("amplitudes must be non-negative".into()));
        }
        Ok(Self { terms, dt1, dt2 })
    }

    pub fn from_poles(c: &[Complex64], z1: &[Complex64], z2: &[Complex64]) -> Result<Self> {
        if c.len() != z1.len() || c.len() != z2.len() {
            return Err(Error::Dimension("amplitude and pole counts differ".into()));
        }
        if z1.iter().chain(z2).any(|z| z.norm() == 0.0) {
            return Err(Error::InvalidParameter("poles must be nonzero".into()));
        }
        let terms = (0..c.len())
            .map(|k| ExpTerm2D {
                amplitude: c[k].norm(),
                phase: c[k].arg(),
                damping1: -z1[k].norm().ln(),
                pulsation1: z1[k].arg(),
                damping2: -z2[k].norm().ln(),
                pulsation2: z2[k].arg(),
            })
            .collect();
        Self::new(terms, 1.0, 1.0)
    }

    /// Two unit-amplitude damped peaks:
    /// `z_1 = (e^{-0.01+0.40πi}, e^{-0.02+0.44πi})`,
    /// `z_2 = (e^{-0.02+0.36πi}, e^{-0.01-0.40πi})`.
    pub fn two_peak() -> Self {
        let term = |a1: f64, f1: f64, a2: f64, f2: f64| ExpTerm2D {
            amplitude: 1.0,
            phase: 0.0,
            damping1: a1,
            pulsation1: 2.0 * PI * f1,
            damping2: a2,
            pulsation2: 2.0 * PI * f2,
        };
        Self { terms: vec![term(0.01, 0.20, 0.02, 0.18), term(0.02, 0.22, 0.01, -0.20)], dt1: 1.0, dt2: 1.0 }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn amplitudes(&self) -> Vec<Complex64> {
        self.terms.iter().map(|t| Complex64::from_polar(t.amplitude, t.phase)).collect()
    }

    pub fn first_poles(&self) -> Vec<Complex64> {
        self.terms.iter().map(|t| Complex64::new(-t.damping1, t.pulsation1).scale(self.dt1).exp()).collect()
    }

    pub fn second_poles(&self) -> Vec<Complex64> {
        self.terms.iter().map(|t| Complex64::new(-t.damping2, t.pulsation2).scale(self.dt2).exp()).collect()
    }
}

/// Additive complex circular Gaussian noise: real and imaginary parts are
/// independent `N(0, σ²)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Noise {
    pub sigma: f64,
    pub seed: u64,
}

impl Noise {
    pub fn new(sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidParameter(format!("noise level must be finite and non-negative, got {sigma}")));
        }
        Ok(Self { sigma, seed })
    }

    /// Adds one noise draw per value, in order.
    pub fn apply(&self, values: &mut [Complex64]) {
        if self.sigma == 0.0 {
            return;
        }
        let normal = Normal::new(0.0, self.sigma).expect("validated sigma");
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        for v in values {
            let re = normal.sample(&mut rng);
            let im = normal.sample(&mut rng);
            *v += Complex64::new(re, im);
        }
    }
}

/// Samples `x_0 .. x_{n-1}`, optionally with noise.
pub fn synth_1d(model: &ExpModel1D, n: usize, noise: Option<Noise>) -> Vec<Complex64> {
    let c = model.amplitudes();
    let z = model.poles();
    let mut x: Vec<Complex64> = (0..n).map(|i| c.iter().zip(&z).map(|(c, z)| c * z.powu(i as u32)).sum()).collect();
    if let Some(noise) = noise {
        noise.apply(&mut x);
    }
    x
}

/// `N1 × N2` sample matrix `X[n1, n2]`; noise is drawn in row-major order.
pub fn synth_2d(model: &ExpModel2D, n1: usize, n2: usize, noise: Option<Noise>) -> ComplexMatrix {
    let c = model.amplitudes();
    let z1 = model.first_poles();
    let z2 = model.second_poles();
    let mut rowmajor: Vec<Complex64> = Vec::with_capacity(n1 * n2);
    for i in 0..n1 {
        for j in 0..n2 {
            rowmajor.push((0..c.len()).map(|k| c[k] * z1[k].powu(i as u32) * z2[k].powu(j as u32)).sum());
        }
    }
    if let Some(noise) = noise {
        noise.apply(&mut rowmajor);
    }
    ComplexMatrix::from_fn(n1, n2, |i, j| rowmajor[i * n2 + j])
}

/// `rows × K` Vandermonde matrix with entries `z_k^i`.
pub fn vandermonde(z: &[Complex64], rows: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, z.len(), |i, k| z[k].powu(i as u32))
}

/// Column-wise Kronecker product: column `k` is `a_k ⊗ b_k`, so row
/// `r·b.rows + s` holds `a[r,k]·b[s,k]`.
pub fn khatri_rao(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if a.cols() != b.cols() {
        return Err(Error::Dimension(format!("{} vs {} columns", a.cols(), b.cols())));
    }
    Ok(ComplexMatrix::from_fn(a.rows() * b.rows(), a.cols(), |row, k| {
        a.get(row / b.rows(), k) * b.get(row % b.rows(), k)
    }))
}

/// Outcome of checking a Vandermonde decomposition against the tensor built
/// directly from the samples.
#[derive(Clone, Debug)]
pub struct VandermondeCheck {
    pub relative_error: f64,
    pub warnings: Vec<String>,
}

fn coincidence_warnings(poles: &[&[Complex64]]) -> Vec<String> {
    let k = poles[0].len();
    let mut out = Vec::new();
    for a in 0..k {
        for b in a + 1..k {
            let same = poles.iter().all(|z| (z[a] - z[b]).norm() <= 1e-12 * z[a].norm().max(1.0));
            if same {
                out.push(format!("terms {a} and {b} share their poles; the decomposition is rank deficient"));
            }
        }
    }
    out
}

fn diagonal_core(c: &[Complex64], order: usize) -> Result<DenseTensor> {
    DenseTensor::from_fn(vec![c.len(); order], |i| if i.iter().all(|&v| v == i[0]) { c[i[0]] } else { Complex64::new(0.0, 0.0) })
}

fn core_times_factors(core: DenseTensor, factors: &[ComplexMatrix]) -> Result<DenseTensor> {
    let mut t = core;
    for (p, z) in factors.iter().enumerate() {
        t = mode_p_product(&t, p, &z.transpose())?;
    }
    Ok(t)
}

/// Compares `diag(c) ×_1 Z_1ᵀ ... ×_m Z_mᵀ` with the Hankel tensor of the
/// model's samples.
pub fn vandermonde_reconstruct_1d(model: &ExpModel1D, shape: &[usize]) -> Result<VandermondeCheck> {
    let k = model.len();
    if k == 0 || shape.is_empty() {
        return Err(Error::Empty("model or shape"));
    }
    if let Some(&n) = shape.iter().find(|&&n| n < k) {
        return Err(Error::RankOutOfRange { rank: k, max: n });
    }
    let z = model.poles();
    let factors: Vec<ComplexMatrix> = shape.iter().map(|&n| vandermonde(&z, n)).collect();
    let rec = core_times_factors(diagonal_core(&model.amplitudes(), shape.len())?, &factors)?;
    let len = shape.iter().sum::<usize>() + 1 - shape.len();
    let direct = build_hankel_dense(&synth_1d(model, len, None), shape)?;
    Ok(VandermondeCheck {
        relative_error: crate::tensor::relative_error(rec.data(), direct.data()),
        warnings: coincidence_warnings(&[&z]),
    })
}

/// Level-2 analogue: factors `Z_{2,p} ⊘ Z_{1,p}` against the BHHB tensor of
/// the model's samples.
pub fn vandermonde_reconstruct_2d(model: &ExpModel2D, block: &[usize], outer: &[usize]) -> Result<VandermondeCheck> {
    let k = model.len();
    if k == 0 || block.is_empty() {
        return Err(Error::Empty("model or shape"));
    }
    if block.len() != outer.len() {
        return Err(Error::Dimension("block and outer sizes differ in length".into()));
    }
    if let Some(&n) = block.iter().chain(outer).find(|&&n| n < k) {
        return Err(Error::RankOutOfRange { rank: k, max: n });
    }
    let z1 = model.first_poles();
    let z2 = model.second_poles();
    let factors = block
        .iter()
        .zip(outer)
        .map(|(&i, &j)| khatri_rao(&vandermonde(&z2, j), &vandermonde(&z1, i)))
        .collect::<Result<Vec<_>>>()?;
    let rec = core_times_factors(diagonal_core(&model.amplitudes(), block.len())?, &factors)?;
    let m = block.len();
    let x = synth_2d(model, block.iter().sum::<usize>() + 1 - m, outer.iter().sum::<usize>() + 1 - m, None);
    let direct = build_bhhb_dense(&x, outer, block)?;
    Ok(VandermondeCheck {
        relative_error: crate::tensor::relative_error(rec.data(), direct.data()),
        warnings: coincidence_warnings(&[&z1, &z2]),
    })
}

/// Shift selections on a matrix with `I·J` rows viewed as `J` blocks of `I`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shift {
    /// Drop the last row of every block.
    Up1,
    /// Drop the first row of every block.
    Down1,
    /// Drop the last block.
    Up2,
    /// Drop the first block.
    Down2,
}

pub fn selection(a: &ComplexMatrix, which: Shift, i: usize, j: usize) -> Result<ComplexMatrix> {
    if a.rows() != i * j {
        return Err(Error::Dimension(format!("{} rows, expected {i}·{j}", a.rows())));
    }
    let rows: Vec<usize> = match which {
        Shift::Up1 | Shift::Down1 => {
            if i < 2 {
                return Err(Error::Dimension(format!("first-dimension shifts need I ≥ 2, got {i}")));
            }
            let off = usize::from(which == Shift::Down1);
            (0..j).flat_map(|b| (0..i - 1).map(move |r| b * i + r + off)).collect()
        }
        Shift::Up2 | Shift::Down2 => {
            if j < 2 {
                return Err(Error::Dimension(format!("second-dimension shifts need J ≥ 2, got {j}")));
            }
            let off = if which == Shift::Down2 { i } else { 0 };
            (off..off + (j - 1) * i).collect()
        }
    };
    Ok(a.select_rows(&rows))
}

/// Estimated poles with optional comparison against known values.
#[derive(Clone, Debug, Default)]
pub struct PoleEstimate {
    pub poles: Vec<Complex64>,
    /// Second-dimension poles, paired index by index with `poles` (2D only).
    pub second_poles: Option<Vec<Complex64>>,
    /// `|ẑ - z| / |z|` per pole once [`PoleEstimate::compare`] has run.
    pub relative_errors: Option<Vec<f64>>,
    pub second_relative_errors: Option<Vec<f64>>,
    pub warnings: Vec<String>,
    pub hooi_iterations: usize,
    pub hooi_converged: bool,
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    let d = (a - b).norm();
    if b.norm() == 0.0 { d } else { d / b.norm() }
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; k], &mut out);
    out
}

/// Largest `K` for which matching tries every permutation; beyond it a
/// greedy nearest assignment is used.
const EXHAUSTIVE_MATCH_LIMIT: usize = 7;

impl PoleEstimate {
    pub fn len(&self) -> usize {
        self.poles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poles.is_empty()
    }

    /// Largest relative error over all compared poles.
    pub fn max_relative_error(&self) -> Option<f64> {
        let first = self.relative_errors.as_ref()?;
        let second = self.second_relative_errors.iter().flatten();
        Some(first.iter().chain(second).copied().fold(0.0, f64::max))
    }

    /// Reorders the estimates to best match `truth` (and `second_truth` for
    /// pairs, matched jointly) and records per-pole relative errors, listed
    /// in the order of the truth.
    pub fn compare(&mut self, truth: &[Complex64], second_truth: Option<&[Complex64]>) -> Result<()> {
        let k = self.poles.len();
        if truth.len() != k || second_truth.is_some_and(|s| s.len() != k) {
            return Err(Error::Dimension(format!("{k} estimated poles, {} given", truth.len())));
        }
        if second_truth.is_some() != self.second_poles.is_some() {
            return Err(Error::Dimension("truth and estimate disagree on dimensionality".into()));
        }
        let cost = |est: usize, tru: usize| -> f64 {
            let mut c = rel(self.poles[est], truth[tru]);
            if let (Some(s), Some(st)) = (&self.second_poles, second_truth) {
                c += rel(s[est], st[tru]);
            }
            c
        };
        // assignment[t] = estimate index matched to truth t
        let assignment: Vec<usize> = if k <= EXHAUSTIVE_MATCH_LIMIT {
            permutations(k)
                .into_iter()
                .map(|p| (p.iter().enumerate().map(|(t, &e)| cost(e, t)).sum::<f64>(), p))
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .map(|(_, p)| p)
                .unwrap_or_default()
        } else {
            let mut used = vec![false; k];
            (0..k)
                .map(|t| {
                    let e = (0..k)
                        .filter(|&e| !used[e])
                        .min_by(|&a, &b| cost(a, t).total_cmp(&cost(b, t)))
                        .expect("one estimate per truth");
                    used[e] = true;
                    e
                })
                .collect()
        };
        self.poles = assignment.iter().map(|&e| self.poles[e]).collect();
        self.relative_errors = Some(self.poles.iter().zip(truth).map(|(&a, &b)| rel(a, b)).collect());
        if let (Some(s), Some(st)) = (self.second_poles.as_mut(), second_truth) {
            *s = assignment.iter().map(|&e| s[e]).collect();
            self.second_relative_errors = Some(s.iter().zip(st).map(|(&a, &b)| rel(a, b)).collect());
        }
        Ok(())
    }
}

/// Sizes `I_1 ≥ ... ≥ I_m` as equal as possible with `Σ I_p - m + 1 = len`.
pub fn square_shape(len: usize, order: usize) -> Result<Vec<usize>> {
    if order == 0 || len == 0 {
        return Err(Error::InvalidParameter("order and length must be positive".into()));
    }
    let total = len + order - 1;
    let (base, rem) = (total / order, total % order);
    Ok((0..order).map(|p| base + usize::from(p < rem)).collect())
}

fn check_rank(unfolding: &ComplexMatrix, k: usize) -> Result<()> {
    let s = linalg::singular_values(unfolding)?;
    if k > s.len() {
        return Err(Error::RankOutOfRange { rank: k, max: s.len() });
    }
    if s[0] == 0.0 || !(s[k - 1] > RANK_TOLERANCE * s[0]) {
        return Err(Error::RankDeficient(format!(
            "signal has fewer than {k} resolvable components (σ_{k}/σ_1 = {:.3e})",
            if s[0] == 0.0 { 0.0 } else { s[k - 1] / s[0] }
        )));
    }
    Ok(())
}

fn sort_by_angle(poles: &mut [(Complex64, Option<Complex64>)]) {
    poles.sort_by(|a, b| a.0.arg().total_cmp(&b.0.arg()).then(a.0.norm().total_cmp(&b.0.norm())));
}

fn finish(pairs: Vec<(Complex64, Option<Complex64>)>, res: &HooiResult, warnings: Vec<String>) -> PoleEstimate {
    let mut pairs = pairs;
    sort_by_angle(&mut pairs);
    let second = if pairs.iter().all(|p| p.1.is_some()) && pairs.first().is_some_and(|p| p.1.is_some()) {
        Some(pairs.iter().map(|p| p.1.expect("checked")).collect())
    } else {
        None
    };
    let mut warnings = warnings;
    if !res.converged {
        warnings.push(format!("HOOI stopped after {} iterations without converging", res.iterations));
    }
    if !res.monotone {
        warnings.push("HOOI fit was not monotone; the best iterate was used".into());
    }
    PoleEstimate {
        poles: pairs.iter().map(|p| p.0).collect(),
        second_poles: second,
        relative_errors: None,
        second_relative_errors: None,
        warnings,
        hooi_iterations: res.iterations,
        hooi_converged: res.converged,
    }
}

/// Poles of a 1D signal from the Hankel tensor with sizes `shape`
/// (`Σ I_p - m + 1 = x.len()`).
pub fn estimate_poles_1d(x: &[Complex64], shape: &[usize], k: usize, cfg: Option<&HooiConfig>) -> Result<PoleEstimate> {
    if k == 0 {
        return Err(Error::InvalidParameter("number of components must be positive".into()));
    }
    let h = HankelTensor::new(x.to_vec(), shape.to_vec())?;
    if let Some(&n) = shape.iter().find(|&&n| n < k) {
        return Err(Error::RankOutOfRange { rank: k, max: n });
    }
    if shape[0] <= k {
        return Err(Error::Dimension(format!("the first size must exceed K = {k} for the shift equations")));
    }
    check_rank(&reduced_unfold(&h, 0)?, k)?;
    let cfg = cfg.cloned().unwrap_or_else(|| HooiConfig::uniform(k, shape.len()));
    let cfg = HooiConfig { ranks: vec![k; shape.len()], ..cfg };
    let res = if h.is_square() { hooi_square_hankel(&h, k, &cfg)? } else { hooi_hankel(&h, &cfg)? };
    let u = res.factor();
    let i = shape[0];
    let w = tls_solve(&selection(u, Shift::Up1, i, 1)?, &selection(u, Shift::Down1, i, 1)?)?;
    let poles = linalg::eigenvalues(&w)?;
    Ok(finish(poles.into_iter().map(|z| (z, None)).collect(), &res, Vec::new()))
}

/// Poles of a 2D signal `X` (`N_1 × N_2`) from the BHHB tensor with block
/// sizes `I_p` and outer sizes `J_p`; second-dimension poles are paired
/// through the eigenvectors of `W_1`.
pub fn estimate_poles_2d(
    x: &ComplexMatrix,
    block: &[usize],
    outer: &[usize],
    k: usize,
    cfg: Option<&HooiConfig>,
) -> Result<PoleEstimate> {
    if k == 0 {
        return Err(Error::InvalidParameter("number of components must be positive".into()));
    }
    let b = BhhbTensor::new(x.clone(), outer.to_vec(), block.to_vec())?;
    if let Some(&n) = block.iter().chain(outer).find(|&&n| n < k) {
        return Err(Error::RankOutOfRange { rank: k, max: n });
    }
    let (i, j) = (block[0], outer[0]);
    if i < 2 || j < 2 || (i - 1) * j < k || (j - 1) * i < k {
        return Err(Error::Dimension(format!("block {i} × outer {j} too small for the shift equations with K = {k}")));
    }
    check_rank(&b.reduced_unfold(0)?, k)?;
    let m = block.len();
    let cfg = cfg.cloned().unwrap_or_else(|| HooiConfig::uniform(k, m));
    let cfg = HooiConfig { ranks: vec![k; m], ..cfg };
    let res = if b.is_square() { hooi_square_bhhb(&b, k, &cfg)? } else { hooi_bhhb(&b, &cfg)? };
    let u = res.factor();
    let w1 = tls_solve(&selection(u, Shift::Up1, i, j)?, &selection(u, Shift::Down1, i, j)?)?;
    let w2 = tls_solve(&selection(u, Shift::Up2, i, j)?, &selection(u, Shift::Down2, i, j)?)?;

    let z1 = linalg::eigenvalues(&w1)?;
    let columns = z1.iter().map(|&l| linalg::null_vector(&w1, l)).collect::<Result<Vec<_>>>()?;
    let t = ComplexMatrix::from_columns(&columns)?;
    let cond = linalg::condition_number(&t)?;
    if !(cond <= PAIRING_CONDITION_LIMIT) {
        return Err(Error::Pairing(format!(
            "eigenvectors of the first-dimension shift matrix are nearly dependent (cond {cond:.3e})"
        )));
    }
    let d2 = linalg::inverse(&t)?.matmul(&w2)?.matmul(&t)?;
    let diag: Vec<Complex64> = (0..k).map(|q| d2.get(q, q)).collect();
    let diag_norm = crate::tensor::norm(&diag);
    let off = (d2.frobenius_norm().powi(2) - diag_norm.powi(2)).max(0.0).sqrt();
    let mut warnings = Vec::new();
    if off > 0.1 * diag_norm {
        warnings.push(format!(
            "pairing is unreliable: off-diagonal mass {off:.3e} exceeds 10% of the diagonal norm {diag_norm:.3e}"
        ));
    }
    Ok(finish(z1.into_iter().zip(diag).map(|(a, b)| (a, Some(b))).collect(), &res, warnings))
}

/// Singular values of the reduced mode-1 unfolding of the BHHB tensor
/// built from `x`.
pub fn mode1_singular_values(x: &ComplexMatrix, block: &[usize], outer: &[usize]) -> Result<Vec<f64>> {
    let b = BhhbTensor::new(x.clone(), outer.to_vec(), block.to_vec())?;
    linalg::singular_values(&b.reduced_unfold(0)?)
}

/// Signal and tensor sizes for a 2D study.
#[derive(Clone, Debug, PartialEq)]
pub struct Layout2D {
    pub block: Vec<usize>,
    pub outer: Vec<usize>,
}

impl Layout2D {
    pub fn new(block: Vec<usize>, outer: Vec<usize>) -> Result<Self> {
        if block.is_empty() || block.len() != outer.len() || block.iter().chain(&outer).any(|&n| n == 0) {
            return Err(Error::Dimension(format!("invalid block sizes {block:?} / outer sizes {outer:?}")));
        }
        Ok(Self { block, outer })
    }

    /// Order `m` with every mode of size `block·outer`.
    pub fn square(order: usize, block: usize, outer: usize) -> Result<Self> {
        Self::new(vec![block; order], vec![outer; order])
    }

    /// `(N_1, N_2)` sample counts.
    pub fn signal_size(&self) -> (usize, usize) {
        let m = self.block.len();
        (self.block.iter().sum::<usize>() + 1 - m, self.outer.iter().sum::<usize>() + 1 - m)
    }
}

/// One Monte-Carlo trial's mode-1 singular values.
#[derive(Clone, Debug, PartialEq)]
pub struct SvalRow {
    pub noise: f64,
    pub seed: u64,
    pub values: Vec<f64>,
}

/// Mode-1 singular values for every noise level and trial; trial `t` uses
/// seed `seed + t`. Trials run in parallel but results are ordered.
pub fn singular_value_study(
    model: &ExpModel2D,
    layout: &Layout2D,
    noise_levels: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<SvalRow>> {
    let (n1, n2) = layout.signal_size();
    let jobs: Vec<(f64, u64)> = noise_levels
        .iter()
        .flat_map(|&s| (0..trials as u64).map(move |t| (s, seed.wrapping_add(t))))
        .collect();
    jobs.into_par_iter()
        .map(|(sigma, seed)| {
            let x = synth_2d(model, n1, n2, Some(Noise::new(sigma, seed)?));
            Ok(SvalRow { noise: sigma, seed, values: mode1_singular_values(&x, &layout.block, &layout.outer)? })
        })
        .collect()
}

/// Per-trial largest relative pole error (both dimensions) for a noisy 2D fit.
pub fn pole_error_study(model: &ExpModel2D, layout: &Layout2D, sigma: f64, trials: usize, seed: u64) -> Result<Vec<f64>> {
    let (n1, n2) = layout.signal_size();
    let (z1, z2) = (model.first_poles(), model.second_poles());
    (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let x = synth_2d(model, n1, n2, Some(Noise::new(sigma, seed.wrapping_add(t))?));
            let mut est = estimate_poles_2d(&x, &layout.block, &layout.outer, model.len(), None)?;
            est.compare(&z1, Some(&z2))?;
            Ok(est.max_relative_error().expect("compared"))
        })
        .collect()
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Least-squares amplitudes `c_k` for known poles (not part of the pole
/// estimation itself).
pub fn estimate_amplitudes_1d(x: &[Complex64], poles: &[Complex64]) -> Result<Vec<Complex64>> {
    if poles.is_empty() || x.len() < poles.len() {
        return Err(Error::Dimension("need at least as many samples as poles".into()));
    }
    linalg::least_squares(&vandermonde(poles, x.len()), x)
}

/// 2D analogue of [`estimate_amplitudes_1d`] for paired poles.
pub fn estimate_amplitudes_2d(x: &ComplexMatrix, z1: &[Complex64], z2: &[Complex64]) -> Result<Vec<Complex64>> {
    if z1.len() != z2.len() || z1.is_empty() || x.rows() * x.cols() < z1.len() {
        return Err(Error::Dimension("inconsistent pole pairs".into()));
    }
    let basis = khatri_rao(&vandermonde(z2, x.cols()), &vandermonde(z1, x.rows()))?;
    linalg::least_squares(&basis, &crate::tensor::vec_of(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn synth_simple_models() {
        let m = ExpModel1D::from_poles(&[c(1.0)], &[c(1.0)]).unwrap();
        assert!(synth_1d(&m, 5, None).iter().all(|v| (v - c(1.0)).norm() < 1e-15));
        let m = ExpModel1D::from_poles(&[c(1.0)], &[c(0.5)]).unwrap();
        let x = synth_1d(&m, 4, None);
        for (a, b) in x.iter().zip([1.0, 0.5, 0.25, 0.125]) {
            assert!((a - c(b)).norm() < 1e-15);
        }
    }

    #[test]
    fn two_peak_model_values() {
        let m = ExpModel2D::two_peak();
        let x = synth_2d(&m, 3, 3, None);
        assert!((x.get(0, 0) - c(2.0)).norm() < 1e-14);
        let expected = Complex64::new(-0.02, 2.0 * PI * 0.18).exp() + Complex64::new(-0.01, -2.0 * PI * 0.20).exp();
        assert!((x.get(0, 1) - expected).norm() < 1e-14);
    }

    #[test]
    fn physical_parameters_roundtrip() {
        let z = Complex64::from_polar(0.9, 1.1);
        let m = ExpModel1D::from_poles(&[Complex64::new(0.0, 2.0)], &[z]).unwrap();
        assert!((m.poles()[0] - z).norm() < 1e-14);
        assert!((m.terms[0].damping - (-(0.9f64).ln())).abs() < 1e-14);
        assert!((m.amplitudes()[0] - Complex64::new(0.0, 2.0)).norm() < 1e-14);
        assert!(ExpModel1D::new(vec![], 0.0).is_err());
    }

    #[test]
    fn noise_is_seeded() {
        let m = ExpModel1D::from_poles(&[c(1.0)], &[c(0.9)]).unwrap();
        let a = synth_1d(&m, 10, Some(Noise::new(0.1, 7).unwrap()));
        let b = synth_1d(&m, 10, Some(Noise::new(0.1, 7).unwrap()));
        let d = synth_1d(&m, 10, Some(Noise::new(0.1, 8).unwrap()));
        assert_eq!(a, b);
        assert_ne!(a, d);
        assert!(Noise::new(-1.0, 0).is_err());
    }

    #[test]
    fn selection_rows() {
        let a = ComplexMatrix::from_fn(4, 1, |i, _| c(i as f64));
        let rows = |s| selection(&a, s, 2, 2).unwrap().col(0).iter().map(|z| z.re as usize).collect::<Vec<_>>();
        assert_eq!(rows(Shift::Up1), vec![0, 2]);
        assert_eq!(rows(Shift::Down1), vec![1, 3]);
        assert_eq!(rows(Shift::Up2), vec![0, 1]);
        assert_eq!(rows(Shift::Down2), vec![2, 3]);
        let b = ComplexMatrix::zeros(3, 1);
        assert!(selection(&b, Shift::Up2, 3, 1).is_err());
        assert!(selection(&b, Shift::Up1, 3, 1).is_ok());
        assert!(selection(&b, Shift::Up1, 1, 3).is_err());
    }

    #[test]
    fn khatri_rao_shift_identities() {
        let z1 = [Complex64::from_polar(0.9, 0.4), Complex64::from_polar(1.1, -2.0)];
        let z2 = [Complex64::from_polar(0.8, 1.4), Complex64::from_polar(0.95, 0.3)];
        let (i, j) = (3, 4);
        let a = khatri_rao(&vandermonde(&z2, j), &vandermonde(&z1, i)).unwrap();
        let d = |z: &[Complex64]| ComplexMatrix::from_fn(2, 2, |r, s| if r == s { z[r] } else { c(0.0) });
        let l = selection(&a, Shift::Up1, i, j).unwrap().matmul(&d(&z1)).unwrap();
        assert!(l.sub(&selection(&a, Shift::Down1, i, j).unwrap()).unwrap().frobenius_norm() < 1e-12);
        let l = selection(&a, Shift::Up2, i, j).unwrap().matmul(&d(&z2)).unwrap();
        assert!(l.sub(&selection(&a, Shift::Down2, i, j).unwrap()).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn vandermonde_checks() {
        let ones = ExpModel1D::from_poles(&[c(1.0)], &[c(1.0)]).unwrap();
        assert!(vandermonde_reconstruct_1d(&ones, &[3, 3, 3]).unwrap().relative_error < 1e-14);
        let m = ExpModel1D::from_poles(&[c(1.0), Complex64::new(0.2, -0.7)], &[Complex64::from_polar(0.9, 0.5), Complex64::from_polar(1.05, 2.5)])
            .unwrap();
        assert!(vandermonde_reconstruct_1d(&m, &[3, 3, 3]).unwrap().relative_error < 1e-12);
        assert!(vandermonde_reconstruct_1d(&m, &[3, 1, 3]).is_err());
        let check = vandermonde_reconstruct_2d(&ExpModel2D::two_peak(), &[3, 3, 3], &[2, 2, 2]).unwrap();
        assert!(check.relative_error < 1e-12);
        assert!(check.warnings.is_empty());
        let dup = ExpModel1D::from_poles(&[c(1.0), c(2.0)], &[c(0.5), c(0.5)]).unwrap();
        assert_eq!(vandermonde_reconstruct_1d(&dup, &[2, 2]).unwrap().warnings.len(), 1);
    }

    #[test]
    fn single_real_pole() {
        let m = ExpModel1D::from_poles(&[c(1.0)], &[c(0.9)]).unwrap();
        let est = estimate_poles_1d(&synth_1d(&m, 13, None), &[5, 5, 5], 1, None).unwrap();
        assert!((est.poles[0] - c(0.9)).norm() < 1e-8);
    }

    #[test]
    fn two_poles_noiseless_1d() {
        let z = [Complex64::new(-0.01, 2.0 * PI * 0.20).exp(), Complex64::new(-0.02, 2.0 * PI * 0.22).exp()];
        let m = ExpModel1D::from_poles(&[c(1.0), c(1.0)], &z).unwrap();
        let mut est = estimate_poles_1d(&synth_1d(&m, 28, None), &[10, 10, 10], 2, None).unwrap();
        est.compare(&z, None).unwrap();
        assert!(est.max_relative_error().unwrap() < 1e-6, "{:?}", est.relative_errors);
    }

    #[test]
    fn nonsquare_shape_1d() {
        let z = [Complex64::from_polar(0.97, 0.8), Complex64::from_polar(0.9, -1.3)];
        let m = ExpModel1D::from_poles(&[c(1.0), Complex64::new(0.0, 0.5)], &z).unwrap();
        let mut est = estimate_poles_1d(&synth_1d(&m, 14, None), &[6, 5, 5], 2, None).unwrap();
        est.compare(&z, None).unwrap();
        assert!(est.max_relative_error().unwrap() < 1e-8);
    }

    #[test]
    fn zero_signal_is_rank_deficient() {
        let err = estimate_poles_1d(&vec![c(0.0); 13], &[5, 5, 5], 1, None).unwrap_err();
        assert!(err.is_numerical(), "{err}");
        let err = estimate_poles_2d(&ComplexMatrix::zeros(7, 4), &[3, 3, 3], &[2, 2, 2], 1, None).unwrap_err();
        assert!(err.is_numerical());
    }

    #[test]
    fn bad_sizes_rejected() {
        let x = vec![c(1.0); 13];
        assert!(estimate_poles_1d(&x, &[5, 5, 4], 1, None).is_err());
        assert!(estimate_poles_1d(&x, &[5, 5, 5], 6, None).is_err());
        assert!(estimate_poles_1d(&x, &[5, 5, 5], 0, None).is_err());
    }

    #[test]
    fn separable_single_pair() {
        let m = ExpModel2D::from_poles(&[c(1.0)], &[c(0.9)], &[Complex64::new(0.0, 0.8)]).unwrap();
        let x = synth_2d(&m, 7, 4, None);
        let est = estimate_poles_2d(&x, &[3, 3, 3], &[2, 2, 2], 1, None).unwrap();
        assert!((est.poles[0] - c(0.9)).norm() < 1e-8);
        assert!((est.second_poles.as_ref().unwrap()[0] - Complex64::new(0.0, 0.8)).norm() < 1e-8);
    }

    #[test]
    fn two_peak_small_layout() {
        let m = ExpModel2D::two_peak();
        let x = synth_2d(&m, 7, 4, None);
        let mut est = estimate_poles_2d(&x, &[3, 3, 3], &[2, 2, 2], 2, None).unwrap();
        est.compare(&m.first_poles(), Some(&m.second_poles())).unwrap();
        assert!(est.max_relative_error().unwrap() < 1e-6, "{est:?}");
    }

    #[test]
    fn scale_invariance() {
        let m = ExpModel2D::two_peak();
        let x = synth_2d(&m, 7, 4, None);
        let a = estimate_poles_2d(&x, &[3, 3, 3], &[2, 2, 2], 2, None).unwrap();
        let b = estimate_poles_2d(&x.scale(Complex64::new(-3.0, 0.5)), &[3, 3, 3], &[2, 2, 2], 2, None).unwrap();
        for (p, q) in a.poles.iter().zip(&b.poles) {
            assert!((p - q).norm() < 1e-8);
        }
    }

    #[test]
    fn mode1_values_small_example() {
        let x = synth_2d(&ExpModel2D::two_peak(), 7, 4, None);
        let s = mode1_singular_values(&x, &[3, 3, 3], &[2, 2, 2]).unwrap();
        assert!(s[2] / s[0] <= 1e-10);
        assert!(s[1] / s[0] > 1e-10);
        let z = mode1_singular_values(&ComplexMatrix::zeros(7, 4), &[3, 3, 3], &[2, 2, 2]).unwrap();
        assert!(z.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn amplitudes_recovered() {
        let z = [Complex64::from_polar(0.9, 0.3), Complex64::from_polar(0.8, -1.0)];
        let amps = [Complex64::new(1.0, 1.0), c(-0.5)];
        let x = synth_1d(&ExpModel1D::from_poles(&amps, &z).unwrap(), 12, None);
        let got = estimate_amplitudes_1d(&x, &z).unwrap();
        for (g, e) in got.iter().zip(&amps) {
            assert!((g - e).norm() < 1e-10);
        }
        let m = ExpModel2D::two_peak();
        let x = synth_2d(&m, 7, 4, None);
        let got = estimate_amplitudes_2d(&x, &m.first_poles(), &m.second_poles()).unwrap();
        assert!(got.iter().all(|g| (g - c(1.0)).norm() < 1e-10));
    }

    #[test]
    fn square_shape_sums() {
        assert_eq!(square_shape(13, 3).unwrap(), vec![5, 5, 5]);
        assert_eq!(square_shape(14, 3).unwrap(), vec![6, 5, 5]);
        assert!(square_shape(0, 3).is_err());
    }

    #[test]
    fn compare_handles_permutations() {
        let mut est = PoleEstimate { poles: vec![c(2.0), c(1.0)], ..Default::default() };
        est.compare(&[c(1.0), c(2.0)], None).unwrap();
        assert_eq!(est.poles, vec![c(1.0), c(2.0)]);
        assert_eq!(est.relative_errors.unwrap(), vec![0.0, 0.0]);
    }
}
