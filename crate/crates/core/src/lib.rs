//! Structured tensor numerics for Hankel-type tensors.
//!
//! Hankel tensors (entries depending only on the index sum) are stored by
//! their generating vector and multiplied by vectors through an
//! anti-circulant embedding, so a product costs a handful of FFTs of length
//! `d_H = n_1 + ... + n_m - m + 1` instead of `O(n^m)` work. The same idea is
//! lifted to block Hankel tensors with Hankel blocks (2D FFT) and to level-k
//! block tensors (N-D FFT). On top of the fast kernels sit a Hankel-aware
//! HOOI and 1D/2D exponential data fitting (pole estimation).
//!
//! Conventions used everywhere in this crate:
//!
//! * modes are zero-based (`0..m`);
//! * the mode-p product `A ×_p M` contracts the p-th index of `A` with the
//!   *first* index of `M`, without conjugation (so for matrices
//!   `A ×_0 M1 ×_1 M2 = M1ᵀ A M2`);
//! * dense tensors are row-major (last index fastest), matrices are
//!   column-major, and `vec` stacks columns.

pub mod bench;
pub mod block;
pub mod decomposition;
pub mod error;
pub mod expfit;
pub mod fft;
pub mod hankel;
pub mod linalg;
pub mod tensor;

pub use num_complex::Complex64;

pub use block::{BaabTensor, BhhbTensor, LevelKHankelTensor};
pub use decomposition::{HooiConfig, HooiResult, TuckerFactors};
pub use error::{Error, Result};
pub use expfit::{ExpModel1D, ExpModel2D, PoleEstimate};
pub use hankel::{AntiCirculantTensor, HankelTensor};
pub use tensor::{ComplexMatrix, DenseTensor};
