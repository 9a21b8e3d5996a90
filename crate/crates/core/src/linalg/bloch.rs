use serde::{Deserialize, Serialize};

use super::{DensityMatrix, Matrix, C64, TOL};
use crate::error::{Error, Result};

/// Bloch-ball coordinates of a single-qubit state, with `|0>` at `(0, 0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const ORIGIN: BlochVector = BlochVector {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(Error::NonFinite);
        }
        let v = Self { x, y, z };
        if v.norm() > 1.0 + TOL {
            return Err(Error::InvalidBloch(v.norm()));
        }
        Ok(v)
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(&self, other: &BlochVector) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn distance_sq(&self, other: &BlochVector) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        dx * dx + dy * dy + dz * dz
    }

    pub fn scaled(&self, f: f64) -> BlochVector {
        BlochVector {
            x: self.x * f,
            y: self.y * f,
            z: self.z * f,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// Arithmetic mean of a list of vectors; the origin for an empty list.
    pub fn mean<'a>(vs: impl IntoIterator<Item = &'a BlochVector>) -> BlochVector {
        let (mut sx, mut sy, mut sz, mut n) = (0.0, 0.0, 0.0, 0usize);
        for v in vs {
            sx += v.x;
            sy += v.y;
            sz += v.z;
            n += 1;
        }
        if n == 0 {
            return Self::ORIGIN;
        }
        let n = n as f64;
        BlochVector {
            x: sx / n,
            y: sy / n,
            z: sz / n,
        }
    }
}

/// Pauli expectations `(<X>, <Y>, <Z>)` of a single-qubit density matrix.
pub fn bloch_from_density(rho: &DensityMatrix) -> Result<BlochVector> {
    let m = rho.matrix();
    if m.dim() != 2 {
        return Err(Error::Dimension {
            expected: 2,
            found: m.dim(),
        });
    }
    let off = m[(0, 1)];
    let v = BlochVector {
        x: 2.0 * off.re,
        y: -2.0 * off.im,
        z: m[(0, 0)].re - m[(1, 1)].re,
    };
    if v.norm() > 1.0 + TOL {
        return Err(Error::InvalidBloch(v.norm()));
    }
    Ok(v)
}

/// `(I + x X + y Y + z Z) / 2`.
pub fn density_from_bloch(v: &BlochVector) -> Result<DensityMatrix> {
    if v.norm() > 1.0 + TOL {
        return Err(Error::InvalidBloch(v.norm()));
    }
    let mut m = Matrix::zeros(2);
    m[(0, 0)] = C64::new(0.5 * (1.0 + v.z), 0.0);
    m[(1, 1)] = C64::new(0.5 * (1.0 - v.z), 0.0);
    m[(0, 1)] = C64::new(0.5 * v.x, -0.5 * v.y);
    m[(1, 0)] = C64::new(0.5 * v.x, 0.5 * v.y);
    Ok(DensityMatrix::from_raw(m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::StateVector;

    fn close(v: BlochVector, want: [f64; 3]) -> bool {
        v.as_array()
            .iter()
            .zip(want)
            .all(|(a, b)| (a - b).abs() < TOL)
    }

    #[test]
    fn north_pole_and_center() {
        let zero = bloch_from_density(&StateVector::zero().density()).unwrap();
        assert!(close(zero, [0.0, 0.0, 1.0]));
        let mixed = bloch_from_density(&DensityMatrix::maximally_mixed(2)).unwrap();
        assert!(close(mixed, [0.0, 0.0, 0.0]));
    }

    #[test]
    fn plus_i_points_along_y() {
        let v = bloch_from_density(&StateVector::plus_i().density()).unwrap();
        assert!(close(v, [0.0, 1.0, 0.0]));
        let v = bloch_from_density(&StateVector::minus().density()).unwrap();
        assert!(close(v, [-1.0, 0.0, 0.0]));
    }

    #[test]
    fn rejects_vectors_outside_ball() {
        assert!(matches!(
            BlochVector::new(1.0, 1.0, 0.0),
            Err(Error::InvalidBloch(_))
        ));
        let outside = BlochVector {
            x: 0.0,
            y: 0.0,
            z: 1.5,
        };
        assert!(density_from_bloch(&outside).is_err());
    }

    #[test]
    fn round_trip() {
        let v = BlochVector::new(0.3, -0.4, 0.5).unwrap();
        let back = bloch_from_density(&density_from_bloch(&v).unwrap()).unwrap();
        assert!(close(back, v.as_array()));
        assert!(DensityMatrix::new(density_from_bloch(&v).unwrap().matrix().clone()).is_ok());
    }
}
