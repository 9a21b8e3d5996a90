//! Fidelity, purification and the Uhlmann optimal-overlap construction.

use super::{
    hermitian_eigen_2x2, svd_2x2, DensityMatrix, Matrix, StateVector, UnitaryMatrix, C64, TOL,
};
use crate::error::{Error, Result};

/// Squared fidelity `F(rho, sigma) = (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2`,
/// so that `F(|a><a|, |b><b|) = |<a|b>|^2`.
///
/// Single-qubit inputs use the closed form `Tr(rho sigma) + 2 sqrt(det rho det sigma)`.
/// Two-qubit inputs require at least one pure argument, in which case the
/// fidelity reduces to `Tr(rho sigma)`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::Dimension {
            expected: rho.dim(),
            found: sigma.dim(),
        });
    }
    let f = match rho.dim() {
        // sqrt(det) of a pure state amplifies rounding noise to ~1e-8.
        2 if rho.is_pure(TOL) || sigma.is_pure(TOL) => rho.overlap(sigma),
        2 => {
            let det_r = rho.matrix().determinant().re.max(0.0);
            let det_s = sigma.matrix().determinant().re.max(0.0);
            rho.overlap(sigma) + 2.0 * (det_r * det_s).sqrt()
        }
        _ => {
            if rho.is_pure(TOL) || sigma.is_pure(TOL) {
                rho.overlap(sigma)
            } else {
                return Err(Error::UnsupportedFidelity);
            }
        }
    };
    Ok(f.clamp(0.0, 1.0))
}

/// Two-qubit amplitudes as a 2x2 grid: row = Eve's index, column = Bob's.
pub fn coefficient_matrix(v: &StateVector) -> Result<Matrix> {
    if v.dim() != 4 {
        return Err(Error::Dimension {
            expected: 4,
            found: v.dim(),
        });
    }
    let a = v.amps();
    Matrix::from_rows(vec![vec![a[0], a[1]], vec![a[2], a[3]]])
}

/// `sum_k |k>_E (x) sqrt(rho)|k>_B`: the canonical purification of a
/// single-qubit state, with the purifying (Eve) qubit as the first factor.
pub fn canonical_purification(rho_b: &DensityMatrix) -> Result<StateVector> {
    if rho_b.dim() != 2 {
        return Err(Error::Dimension {
            expected: 2,
            found: rho_b.dim(),
        });
    }
    let (eigs, vecs) = hermitian_eigen_2x2(rho_b.matrix())?;
    let mut sqrt_rho = Matrix::zeros(2);
    for (lambda, v) in eigs.iter().zip(vecs.iter()) {
        let root = C64::new(lambda.max(0.0).sqrt(), 0.0);
        sqrt_rho = sqrt_rho.add(&Matrix::outer(v, v).scale(root));
    }
    // Eve index e, Bob index b: amplitude = sqrt(rho)[b][e].
    let amps = vec![
        sqrt_rho[(0, 0)],
        sqrt_rho[(1, 0)],
        sqrt_rho[(0, 1)],
        sqrt_rho[(1, 1)],
    ];
    StateVector::normalize(amps)
}

/// Result of [`max_overlap_unitary`].
#[derive(Debug, Clone)]
pub struct MaxOverlap {
    /// Single-qubit unitary applied to Eve's factor of `alpha`.
    pub v: UnitaryMatrix,
    /// `|<target|(V (x) I)|alpha>|^2` at the optimum.
    pub achieved: f64,
}

/// The single-qubit unitary on Eve's factor that maximizes
/// `|<target|(V (x) I)|alpha>|^2`.
///
/// With coefficient grids `A` (alpha) and `B` (target), the overlap equals
/// `Tr(V A B^dagger)`; for `A B^dagger = U S W^dagger` the optimum is
/// `V = W U^dagger` with value `(s_1 + s_2)^2`.
pub fn max_overlap_unitary(alpha: &StateVector, target: &StateVector) -> Result<MaxOverlap> {
    let a = coefficient_matrix(alpha)?;
    let b = coefficient_matrix(target)?;
    let svd = svd_2x2(&(&a * &b.adjoint()))?;
    let v = svd.w.compose(&svd.u.adjoint());
    let s = svd.singular[0] + svd.singular[1];
    Ok(MaxOverlap {
        v,
        achieved: (s * s).min(1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, partial_trace_e, tensor, FRAC_1_SQRT_2};

    fn assert_close(a: f64, b: f64) {
        assert!((a - b).abs() < TOL, "{a} != {b}");
    }

    #[test]
    fn fidelity_examples() {
        let zero = StateVector::zero().density();
        let plus = StateVector::plus().density();
        let mixed = DensityMatrix::maximally_mixed(2);
        assert_close(fidelity(&zero, &zero).unwrap(), 1.0);
        assert_close(fidelity(&plus, &mixed).unwrap(), 0.5);
        assert_close(fidelity(&mixed, &mixed).unwrap(), 1.0);
    }

    #[test]
    fn fidelity_two_qubit_cases() {
        let pure = tensor(&StateVector::plus(), &StateVector::minus())
            .unwrap()
            .density();
        let mixed = DensityMatrix::maximally_mixed(4);
        assert_close(fidelity(&pure, &mixed).unwrap(), 0.25);
        assert_close(fidelity(&mixed, &pure).unwrap(), 0.25);
        assert_eq!(fidelity(&mixed, &mixed), Err(Error::UnsupportedFidelity));
        assert!(matches!(
            fidelity(&pure, &StateVector::zero().density()),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn purification_examples() {
        let p = canonical_purification(&StateVector::zero().density()).unwrap();
        assert!(p.same_ray(&StateVector::basis(4, 0).unwrap(), TOL));

        let bell = StateVector::new(vec![
            c(FRAC_1_SQRT_2, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(FRAC_1_SQRT_2, 0.0),
        ])
        .unwrap();
        let p = canonical_purification(&DensityMatrix::maximally_mixed(2)).unwrap();
        assert!(p.same_ray(&bell, TOL));

        let rho = DensityMatrix::new(Matrix::diag(&[c(0.75, 0.0), c(0.25, 0.0)])).unwrap();
        let p = canonical_purification(&rho).unwrap();
        let want = [0.75f64.sqrt(), 0.0, 0.0, 0.5];
        for (got, w) in p.amps().iter().zip(want) {
            assert!((got - c(w, 0.0)).norm() < TOL, "{:?}", p.amps());
        }
        let back = partial_trace_e(&p.density()).unwrap();
        assert!(back.max_norm_distance(&rho) < TOL);
    }

    #[test]
    fn overlap_with_itself_needs_no_rotation() {
        let alpha = tensor(&StateVector::plus_i(), &StateVector::minus()).unwrap();
        let best = max_overlap_unitary(&alpha, &alpha).unwrap();
        assert_close(best.achieved, 1.0);
        assert!(best.v.equal_up_to_phase(&UnitaryMatrix::identity(2), TOL));
    }

    #[test]
    fn symmetric_bell_state_reaches_entangled_share() {
        let alpha = StateVector::new(vec![
            c(0.0, 0.0),
            c(FRAC_1_SQRT_2, 0.0),
            c(FRAC_1_SQRT_2, 0.0),
            c(0.0, 0.0),
        ])
        .unwrap();
        // U_01 |++> = (|00> - |01> + |10> + |11>) / 2 has Bob marginal I/2.
        let target =
            StateVector::new(vec![c(0.5, 0.0), c(-0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0)]).unwrap();
        let best = max_overlap_unitary(&alpha, &target).unwrap();
        assert_close(best.achieved, 1.0);
        let moved = best.v.on_first_qubit().unwrap().apply(&alpha).unwrap();
        assert!(moved.same_ray(&target, TOL));

        // A product target with a pure Bob marginal caps the overlap at 1/2.
        let product = tensor(&StateVector::minus(), &StateVector::minus()).unwrap();
        assert_close(max_overlap_unitary(&alpha, &product).unwrap().achieved, 0.5);
    }

    #[test]
    fn product_alpha_gets_half() {
        let alpha = StateVector::basis(4, 0).unwrap();
        let target = tensor(&StateVector::minus(), &StateVector::minus()).unwrap();
        let best = max_overlap_unitary(&alpha, &target).unwrap();
        assert_close(best.achieved, 0.5);
    }
}
