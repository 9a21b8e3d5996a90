use super::{Matrix, UnitaryMatrix, C64};
use crate::error::{Error, Result};

/// Eigen-decomposition of a 2x2 Hermitian matrix.
///
/// Returns eigenvalues in descending order together with orthonormal
/// eigenvectors `[v_hi, v_lo]`.
pub fn hermitian_eigen_2x2(m: &Matrix) -> Result<([f64; 2], [[C64; 2]; 2])> {
    if m.dim() != 2 {
        return Err(Error::Dimension {
            expected: 2,
            found: m.dim(),
        });
    }
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    // Average the off-diagonal pair so slightly non-Hermitian input is symmetrized.
    let b = (m[(0, 1)] + m[(1, 0)].conj()) * 0.5;
    let mean = 0.5 * (a + d);
    let half_gap = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    let hi = mean + half_gap;
    let lo = mean - half_gap;

    let v_hi = if b.norm() <= 1e-300 {
        if a >= d {
            [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]
        } else {
            [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]
        }
    } else {
        // Two algebraically equivalent candidates; take the better conditioned one.
        let c1 = [b, C64::new(hi - a, 0.0)];
        let c2 = [C64::new(hi - d, 0.0), b.conj()];
        let n1 = c1[0].norm_sqr() + c1[1].norm_sqr();
        let n2 = c2[0].norm_sqr() + c2[1].norm_sqr();
        let (v, n) = if n1 >= n2 { (c1, n1) } else { (c2, n2) };
        let n = n.sqrt();
        [v[0] / n, v[1] / n]
    };
    let v_lo = [-v_hi[1].conj(), v_hi[0].conj()];
    Ok(([hi, lo], [v_hi, v_lo]))
}

/// Eigenvalues (ascending) of a Hermitian matrix of any small dimension.
///
/// The complex `n x n` Hermitian `A + iB` is embedded as the real symmetric
/// `[[A, -B], [B, A]]`, whose spectrum is that of the original with every
/// eigenvalue doubled; cyclic Jacobi rotations then diagonalize it.
pub fn hermitian_eigenvalues(m: &Matrix) -> Vec<f64> {
    let n = m.dim();
    let size = 2 * n;
    let mut s = vec![0.0f64; size * size];
    for r in 0..n {
        for c in 0..n {
            let z = (m[(r, c)] + m[(c, r)].conj()) * 0.5;
            s[r * size + c] = z.re;
            s[(r + n) * size + (c + n)] = z.re;
            s[r * size + (c + n)] = -z.im;
            s[(r + n) * size + c] = z.im;
        }
    }
    jacobi_eigenvalues(&mut s, size);
    let mut diag: Vec<f64> = (0..size).map(|i| s[i * size + i]).collect();
    diag.sort_by(f64::total_cmp);
    // Each eigenvalue appears twice; keep one of each pair.
    diag.into_iter().step_by(2).collect()
}

fn jacobi_eigenvalues(a: &mut [f64], n: usize) {
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|r| (0..n).filter(move |&c| c != r).map(move |c| (r, c)))
            .map(|(r, c)| a[r * n + c] * a[r * n + c])
            .sum();
        if off < 1e-30 {
            return;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let cos = 1.0 / (t * t + 1.0).sqrt();
                let sin = t * cos;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = cos * akp - sin * akq;
                    a[k * n + q] = sin * akp + cos * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = cos * apk - sin * aqk;
                    a[q * n + k] = sin * apk + cos * aqk;
                }
            }
        }
    }
}

/// Singular value decomposition `m = u * diag(singular) * w^dagger` of a 2x2
/// complex matrix, singular values descending.
#[derive(Debug, Clone)]
pub struct Svd2 {
    pub u: UnitaryMatrix,
    pub singular: [f64; 2],
    pub w: UnitaryMatrix,
}

impl Svd2 {
    pub fn reconstruct(&self) -> Matrix {
        let s = Matrix::diag(&[
            C64::new(self.singular[0], 0.0),
            C64::new(self.singular[1], 0.0),
        ]);
        &(self.u.matrix() * &s) * &self.w.matrix().adjoint()
    }
}

pub fn svd_2x2(m: &Matrix) -> Result<Svd2> {
    if m.dim() != 2 {
        return Err(Error::Dimension {
            expected: 2,
            found: m.dim(),
        });
    }
    // Right singular vectors from the eigenbasis of m^dagger m.
    let gram = &m.adjoint() * m;
    let (_, [w1, w2]) = hermitian_eigen_2x2(&gram)?;
    let apply = |v: [C64; 2]| {
        [
            m[(0, 0)] * v[0] + m[(0, 1)] * v[1],
            m[(1, 0)] * v[0] + m[(1, 1)] * v[1],
        ]
    };
    let mw1 = apply(w1);
    let s1 = (mw1[0].norm_sqr() + mw1[1].norm_sqr()).sqrt();
    if s1 <= 1e-300 {
        return Ok(Svd2 {
            u: UnitaryMatrix::identity(2),
            singular: [0.0, 0.0],
            w: UnitaryMatrix::identity(2),
        });
    }
    let u1 = [mw1[0] / s1, mw1[1] / s1];
    // The second left vector is fixed by orthogonality; only its phase is
    // chosen, so a tiny second singular value never amplifies rounding error.
    let perp = [-u1[1].conj(), u1[0].conj()];
    let mw2 = apply(w2);
    let z = perp[0].conj() * mw2[0] + perp[1].conj() * mw2[1];
    let s2 = z.norm();
    let phase = if s2 > 1e-300 {
        z / s2
    } else {
        C64::new(1.0, 0.0)
    };
    let u2 = [perp[0] * phase, perp[1] * phase];

    let columns = |a: [C64; 2], b: [C64; 2]| {
        let mut out = Matrix::zeros(2);
        out[(0, 0)] = a[0];
        out[(1, 0)] = a[1];
        out[(0, 1)] = b[0];
        out[(1, 1)] = b[1];
        UnitaryMatrix::from_raw(out)
    };
    let (singular, u, w) = if s2 > s1 {
        ([s2, s1], columns(u2, u1), columns(w2, w1))
    } else {
        ([s1, s2], columns(u1, u2), columns(w1, w2))
    };
    Ok(Svd2 { u, singular, w })
}
