//! Random states and unitaries for property checks and brute-force oracles.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{BlochVector, DensityMatrix, Matrix, StateVector, UnitaryMatrix, C64};

fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random pure state of dimension 2 or 4.
pub fn haar_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> StateVector {
    loop {
        let amps: Vec<C64> = (0..dim).map(|_| gaussian_c64(rng)).collect();
        if let Ok(v) = StateVector::normalize(amps) {
            return v;
        }
    }
}

/// Haar-random single-qubit unitary.
pub fn haar_unitary_2<R: Rng + ?Sized>(rng: &mut R) -> UnitaryMatrix {
    let col = haar_state(rng, 2);
    let (a, b) = (col.amps()[0], col.amps()[1]);
    let phase = C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
    let m = Matrix::from_rows(vec![vec![a, -b.conj() * phase], vec![b, a.conj() * phase]])
        .expect("finite entries");
    UnitaryMatrix::new(m).expect("columns are orthonormal")
}

/// Uniformly random point of the unit ball.
pub fn ball_point<R: Rng + ?Sized>(rng: &mut R) -> BlochVector {
    let dir = random_direction(rng);
    let r: f64 = rng.random::<f64>().cbrt();
    dir.scaled(r)
}

/// Uniformly random point of the unit sphere.
pub fn random_direction<R: Rng + ?Sized>(rng: &mut R) -> BlochVector {
    loop {
        let v = BlochVector {
            x: rng.sample(StandardNormal),
            y: rng.sample(StandardNormal),
            z: rng.sample(StandardNormal),
        };
        let n = v.norm();
        if n > 1e-9 {
            return v.scaled(1.0 / n);
        }
    }
}

/// Random single-qubit density matrix, uniform in the Bloch ball.
pub fn random_qubit_density<R: Rng + ?Sized>(rng: &mut R) -> DensityMatrix {
    crate::linalg::density_from_bloch(&ball_point(rng)).expect("point inside ball")
}
