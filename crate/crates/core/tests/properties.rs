use ia_dof::channel::{lift_matrix_as, lift_scalar, rotation, ExtensionMode, Lifted, Signal};
use ia_dof::linalg::{orthonormality_defect, random_orthonormal};
use ia_dof::{Complex64, Scheme};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn c() -> impl Strategy<Value = Complex64> {
    (-3.0f64..3.0, -3.0f64..3.0).prop_map(|(re, im)| Complex64::new(re, im))
}

fn real(l: Lifted) -> DMatrix<f64> {
    l.as_real().unwrap().clone()
}

proptest! {
    #[test]
    fn lift_is_a_ring_homomorphism(a in c(), b in c(), t in 1usize..5) {
        let m = ExtensionMode::new(Scheme::Acs, t);
        let la = real(lift_scalar(a, m));
        let lb = real(lift_scalar(b, m));
        prop_assert!((real(lift_scalar(a * b, m)) - &la * &lb).norm() < 1e-12);
        prop_assert!((real(lift_scalar(a + b, m)) - (&la + &lb)).norm() < 1e-12);
        prop_assert!((real(lift_scalar(a.conj(), m)) - la.transpose()).norm() < 1e-12);
    }

    #[test]
    fn lift_of_adjoint_is_transpose(entries in proptest::collection::vec(c(), 12)) {
        let h = DMatrix::from_vec(4, 3, entries);
        let l: DMatrix<f64> = lift_matrix_as(&h, 2);
        let la: DMatrix<f64> = lift_matrix_as(&h.adjoint(), 2);
        prop_assert!((la - l.transpose()).norm() < 1e-12);
    }

    #[test]
    fn rotations_compose_and_are_orthogonal(a in -7.0f64..7.0, b in -7.0f64..7.0) {
        let ua = rotation(a);
        let ub = rotation(b);
        prop_assert!((ua.transpose() * ua - nalgebra::Matrix2::identity()).norm() < 1e-12);
        prop_assert!((ua * ub - rotation(a + b)).norm() < 1e-12);
    }

    #[test]
    fn lift_is_scaled_rotation(h in c()) {
        let l = f64::lift_scalar(h, 1);
        let r = rotation(h.arg()) * h.norm();
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!((l[(i, j)] - r[(i, j)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lifted_multiplication_matches_dense(h in c(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: DMatrix<f64> = random_orthonormal(6, 3, &mut rng);
        prop_assert!((f64::lifted_mul(h, &x) - f64::lift_scalar(h, 3) * &x).norm() < 1e-12);
    }

    #[test]
    fn random_bases_are_orthonormal(seed in any::<u64>(), n in 2usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q: DMatrix<f64> = random_orthonormal(n, n, &mut rng);
        prop_assert!(orthonormality_defect(&q) < 1e-12);
        let z: DMatrix<Complex64> = random_orthonormal(n, n / 2 + 1, &mut rng);
        prop_assert!(orthonormality_defect(&z) < 1e-12);
    }
}
