//! Exact complex linear algebra for one and two qubits.
//!
//! Everything here works on dimension 2 (a single qubit) or 4 (a qubit
//! pair). Two-qubit amplitudes are ordered `00, 01, 10, 11`, and the first
//! tensor factor always belongs to Eve. Partial traces named `_e` remove that
//! first factor and keep Bob's qubit.

mod bloch;
mod decomp;
mod matrix;
mod uhlmann;

pub use bloch::{bloch_from_density, density_from_bloch, BlochVector};
pub use decomp::{hermitian_eigen_2x2, hermitian_eigenvalues, svd_2x2, Svd2};
pub use matrix::{DensityMatrix, Matrix, UnitaryMatrix};
pub use uhlmann::{
    canonical_purification, coefficient_matrix, fidelity, max_overlap_unitary, MaxOverlap,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Complex amplitude type used throughout.
pub type C64 = Complex64;

/// Tolerance for exact algebraic identities.
pub const TOL: f64 = 1e-9;

pub(crate) const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub(crate) fn check_dim(dim: usize) -> Result<()> {
    match dim {
        2 | 4 => Ok(()),
        other => Err(Error::UnsupportedDimension(other)),
    }
}

/// A normalized pure state of one or two qubits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<C64>", into = "Vec<C64>")]
pub struct StateVector {
    amps: Vec<C64>,
}

impl TryFrom<Vec<C64>> for StateVector {
    type Error = Error;

    fn try_from(amps: Vec<C64>) -> Result<Self> {
        StateVector::new(amps)
    }
}

impl From<StateVector> for Vec<C64> {
    fn from(v: StateVector) -> Self {
        v.amps
    }
}

impl StateVector {
    /// Builds a state from amplitudes that must already be normalized
    /// within [`TOL`].
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        check_dim(amps.len())?;
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let norm_sq: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > TOL {
            return Err(Error::NotNormalized(norm_sq));
        }
        Ok(Self { amps })
    }

    /// Rescales arbitrary non-zero amplitudes to unit norm.
    pub fn normalize(amps: Vec<C64>) -> Result<Self> {
        check_dim(amps.len())?;
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-300 {
            return Err(Error::NotNormalized(0.0));
        }
        Ok(Self {
            amps: amps.into_iter().map(|a| a / norm).collect(),
        })
    }

    pub(crate) fn from_raw(amps: Vec<C64>) -> Self {
        debug_assert!(matches!(amps.len(), 2 | 4));
        Self { amps }
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        check_dim(dim)?;
        if index >= dim {
            return Err(Error::Dimension {
                expected: dim,
                found: index,
            });
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self { amps })
    }

    pub fn zero() -> Self {
        Self::from_raw(vec![c(1.0, 0.0), c(0.0, 0.0)])
    }

    pub fn one() -> Self {
        Self::from_raw(vec![c(0.0, 0.0), c(1.0, 0.0)])
    }

    pub fn plus() -> Self {
        Self::from_raw(vec![c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)])
    }

    pub fn minus() -> Self {
        Self::from_raw(vec![c(FRAC_1_SQRT_2, 0.0), c(-FRAC_1_SQRT_2, 0.0)])
    }

    pub fn plus_i() -> Self {
        Self::from_raw(vec![c(FRAC_1_SQRT_2, 0.0), c(0.0, FRAC_1_SQRT_2)])
    }

    pub fn minus_i() -> Self {
        Self::from_raw(vec![c(FRAC_1_SQRT_2, 0.0), c(0.0, -FRAC_1_SQRT_2)])
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|<self|other>|^2`.
    pub fn overlap_sq(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Equality up to a global phase.
    pub fn same_ray(&self, other: &StateVector, tol: f64) -> bool {
        self.overlap_sq(other)
            .map(|o| (o - 1.0).abs() <= tol)
            .unwrap_or(false)
    }

    pub fn scale(&self, factor: C64) -> StateVector {
        Self::from_raw(self.amps.iter().map(|a| a * factor).collect())
    }

    /// `|self><self|`.
    pub fn density(&self) -> DensityMatrix {
        DensityMatrix::from_raw(Matrix::outer(&self.amps, &self.amps))
    }

    /// Whether a two-qubit state factorizes as `|e> (x) |b>`.
    pub fn is_product(&self, tol: f64) -> bool {
        if self.dim() != 4 {
            return true;
        }
        let a = &self.amps;
        (a[0] * a[3] - a[1] * a[2]).norm() <= tol
    }
}

/// `|a> (x) |b>` for two single-qubit states; the basis index of the result
/// is `2 * index(a) + index(b)`.
pub fn tensor(a: &StateVector, b: &StateVector) -> Result<StateVector> {
    for v in [a, b] {
        if v.dim() != 2 {
            return Err(Error::Dimension {
                expected: 2,
                found: v.dim(),
            });
        }
    }
    let amps = a
        .amps
        .iter()
        .flat_map(|x| b.amps.iter().map(move |y| x * y))
        .collect();
    StateVector::normalize(amps)
}

/// Traces out Eve's (first) qubit of a two-qubit density matrix.
pub fn partial_trace_e(rho: &DensityMatrix) -> Result<DensityMatrix> {
    let m = rho.matrix();
    if m.dim() != 4 {
        return Err(Error::Dimension {
            expected: 4,
            found: m.dim(),
        });
    }
    let mut out = Matrix::zeros(2);
    for b in 0..2 {
        for bp in 0..2 {
            out[(b, bp)] = m[(b, bp)] + m[(2 + b, 2 + bp)];
        }
    }
    Ok(DensityMatrix::from_raw(out))
}

/// Traces out Bob's (second) qubit of a two-qubit density matrix.
pub fn partial_trace_b(rho: &DensityMatrix) -> Result<DensityMatrix> {
    let m = rho.matrix();
    if m.dim() != 4 {
        return Err(Error::Dimension {
            expected: 4,
            found: m.dim(),
        });
    }
    let mut out = Matrix::zeros(2);
    for e in 0..2 {
        for ep in 0..2 {
            out[(e, ep)] = m[(2 * e, 2 * ep)] + m[(2 * e + 1, 2 * ep + 1)];
        }
    }
    Ok(DensityMatrix::from_raw(out))
}
