use std::ops::{Index, IndexMut, Mul};

use serde::{Deserialize, Serialize};

use super::{check_dim, hermitian_eigenvalues, StateVector, C64, TOL};
use crate::error::{Error, Result};

/// Dense square complex matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<C64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from row vectors.
    pub fn from_rows(rows: Vec<Vec<C64>>) -> Result<Self> {
        let dim = rows.len();
        check_dim(dim)?;
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend(row);
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { dim, data })
    }

    pub fn rows(&self) -> Vec<Vec<C64>> {
        self.data.chunks(self.dim).map(<[C64]>::to_vec).collect()
    }

    pub fn diag(values: &[C64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    /// `|a><b|`.
    pub fn outer(a: &[C64], b: &[C64]) -> Self {
        debug_assert_eq!(a.len(), b.len());
        let dim = a.len();
        let data = a
            .iter()
            .flat_map(|x| b.iter().map(move |y| x * y.conj()))
            .collect();
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.dim);
        for r in 0..self.dim {
            for c in 0..self.dim {
                out[(c, r)] = self[(r, c)].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn add(&self, other: &Matrix) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Matrix) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// Kronecker product `self (x) other`.
    pub fn kron(&self, other: &Matrix) -> Self {
        let dim = self.dim * other.dim;
        let mut out = Self::zeros(dim);
        for (r1, c1) in iproduct(self.dim) {
            let a = self[(r1, c1)];
            for (r2, c2) in iproduct(other.dim) {
                out[(r1 * other.dim + r2, c1 * other.dim + c2)] = a * other[(r2, c2)];
            }
        }
        out
    }

    /// Applies the matrix to a state; the result is not renormalized.
    pub fn apply(&self, v: &StateVector) -> Result<Vec<C64>> {
        if v.dim() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: v.dim(),
            });
        }
        Ok(self
            .data
            .chunks(self.dim)
            .map(|row| row.iter().zip(v.amps()).map(|(m, a)| m * a).sum())
            .collect())
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        if self.dim != other.dim {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_abs_diff(&self.adjoint()) <= tol
    }

    /// Max-norm of `U^dagger U - I`.
    pub fn unitarity_defect(&self) -> f64 {
        (&self.adjoint() * self).max_abs_diff(&Matrix::identity(self.dim))
    }

    pub fn determinant(&self) -> C64 {
        match self.dim {
            1 => self.data[0],
            2 => self[(0, 0)] * self[(1, 1)] - self[(0, 1)] * self[(1, 0)],
            n => {
                // Laplace expansion along the first row; n <= 4 here.
                (0..n)
                    .map(|c| {
                        let minor = self.minor(0, c);
                        let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
                        self[(0, c)] * minor.determinant() * sign
                    })
                    .sum()
            }
        }
    }

    fn minor(&self, row: usize, col: usize) -> Matrix {
        let dim = self.dim - 1;
        let mut data = Vec::with_capacity(dim * dim);
        for r in (0..self.dim).filter(|&r| r != row) {
            for c in (0..self.dim).filter(|&c| c != col) {
                data.push(self[(r, c)]);
            }
        }
        Matrix { dim, data }
    }
}

fn iproduct(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |r| (0..n).map(move |c| (r, c)))
}

impl Index<(usize, usize)> for Matrix {
    type Output = C64;

    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.dim + c]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.dim + c]
    }
}

impl Mul for &Matrix {
    type Output = Matrix;

    fn mul(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim, "matrix dimension mismatch");
        let n = self.dim;
        let mut out = Matrix::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self[(r, k)];
                for c in 0..n {
                    out[(r, c)] += a * rhs[(k, c)];
                }
            }
        }
        out
    }
}

/// Hermitian, positive semidefinite, trace-one matrix of dimension 2 or 4.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(Matrix);

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and non-negative spectrum within
    /// [`TOL`].
    pub fn new(m: Matrix) -> Result<Self> {
        check_dim(m.dim())?;
        if m.data
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite);
        }
        if !m.is_hermitian(TOL) {
            return Err(Error::InvalidDensity("not Hermitian".into()));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > TOL || tr.im.abs() > TOL {
            return Err(Error::InvalidDensity(format!("trace {tr} != 1")));
        }
        let min_eig = hermitian_eigenvalues(&m)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -TOL {
            return Err(Error::InvalidDensity(format!(
                "negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(Self(m))
    }

    pub(crate) fn from_raw(m: Matrix) -> Self {
        Self(m)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(Matrix::identity(dim).scale(C64::new(1.0 / dim as f64, 0.0)))
    }

    /// Uniform mixture of the given states.
    pub fn mixture<'a>(states: impl IntoIterator<Item = &'a DensityMatrix>) -> Result<Self> {
        let mut iter = states.into_iter();
        let first = iter
            .next()
            .ok_or(Error::Precondition("mixture of an empty list".into()))?;
        let mut acc = first.0.clone();
        let mut n = 1usize;
        for s in iter {
            if s.dim() != acc.dim() {
                return Err(Error::Dimension {
                    expected: acc.dim(),
                    found: s.dim(),
                });
            }
            acc = acc.add(&s.0);
            n += 1;
        }
        Ok(Self(acc.scale(C64::new(1.0 / n as f64, 0.0))))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    /// `Tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        (&self.0 * &self.0).trace().re
    }

    pub fn is_pure(&self, tol: f64) -> bool {
        (self.purity() - 1.0).abs() <= tol
    }

    /// `Tr(self * other)`.
    pub fn overlap(&self, other: &DensityMatrix) -> f64 {
        (&self.0 * &other.0).trace().re
    }

    /// `U rho U^dagger`.
    pub fn conjugate_by(&self, u: &UnitaryMatrix) -> Result<DensityMatrix> {
        if u.dim() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: u.dim(),
            });
        }
        let m = &(u.matrix() * &self.0) * &u.matrix().adjoint();
        Ok(Self(m))
    }

    /// `self (x) other`, first factor first.
    pub fn kron(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        if self.dim() != 2 || other.dim() != 2 {
            return Err(Error::Dimension {
                expected: 2,
                found: self.dim().max(other.dim()),
            });
        }
        Ok(Self(self.0.kron(&other.0)))
    }

    /// Probabilities of a standard-basis measurement, clamped to `[0, 1]`
    /// and renormalized.
    pub fn basis_probabilities(&self) -> Vec<f64> {
        let raw: Vec<f64> = (0..self.dim())
            .map(|i| self.0[(i, i)].re.max(0.0))
            .collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|p| p / total).collect()
    }

    /// Max-norm distance, the operator deviation metric used in reports.
    pub fn max_norm_distance(&self, other: &DensityMatrix) -> f64 {
        self.0.max_abs_diff(&other.0)
    }
}

/// Unitary matrix of dimension 2 or 4.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix(Matrix);

impl UnitaryMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        check_dim(m.dim())?;
        if m.data
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite);
        }
        let defect = m.unitarity_defect();
        if defect > TOL {
            return Err(Error::NotUnitary(defect));
        }
        Ok(Self(m))
    }

    pub(crate) fn from_raw(m: Matrix) -> Self {
        Self(m)
    }

    pub fn identity(dim: usize) -> Self {
        Self(Matrix::identity(dim))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn compose(&self, other: &UnitaryMatrix) -> Self {
        Self(&self.0 * &other.0)
    }

    /// `self (x) I_2`: acts on Eve's qubit of a pair.
    pub fn on_first_qubit(&self) -> Result<UnitaryMatrix> {
        if self.dim() != 2 {
            return Err(Error::Dimension {
                expected: 2,
                found: self.dim(),
            });
        }
        Ok(Self(self.0.kron(&Matrix::identity(2))))
    }

    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        let amps = self.0.apply(v)?;
        Ok(StateVector::from_raw(amps))
    }

    /// Equality up to a global phase, via `|Tr(A^dagger B)| = dim`.
    pub fn equal_up_to_phase(&self, other: &UnitaryMatrix, tol: f64) -> bool {
        if self.dim() != other.dim() {
            return false;
        }
        let t = (&self.0.adjoint() * &other.0).trace().norm();
        (t - self.dim() as f64).abs() <= tol
    }
}

impl Serialize for Matrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<C64>>::deserialize(d)?;
        Matrix::from_rows(rows).map_err(serde::de::Error::custom)
    }
}

impl Serialize for UnitaryMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de> Deserialize<'de> for UnitaryMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        UnitaryMatrix::new(Matrix::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

impl Serialize for DensityMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        DensityMatrix::new(Matrix::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}
