//! Dense complex tensor primitives shared by the rest of the crate.

pub mod density;
pub mod entropy;
pub mod linalg;
pub mod random;
mod tensor;

pub use density::{trace_env, trace_system, DensityMatrix};
pub use entropy::{entropy, renyi_entropy, von_neumann_entropy, Spectrum};
pub use linalg::{eig_hermitian, matrix_exp, svd_split};
pub use tensor::{contract, LabeledTensor};

#[cfg(test)]
mod properties {
    use super::*;
    use crate::tensorops::random::{random_density, random_hermitian, random_matrix, random_unitary};
    use crate::{CMat, C64};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tensor_from(m: &CMat, l: &str, r: &str) -> LabeledTensor {
        LabeledTensor::from_matrix(m, &[(l, m.nrows())], &[(r, m.ncols())]).unwrap()
    }

    #[test]
    fn triple_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_matrix(2, 3, &mut rng);
        let b = random_matrix(3, 4, &mut rng);
        let r = contract(&tensor_from(&a, "x", "k"), &tensor_from(&b, "k", "y"), &[("k", "k")]).unwrap();
        for i in 0..2 {
            for j in 0..4 {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..3 {
                    acc += a[(i, k)] * b[(k, j)];
                }
                assert!((r.get(&[i, j]) - acc).norm() < 1e-14);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn contraction_associative(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = LabeledTensor::from_matrix(&random_matrix(6, 3, &mut rng), &[("x", 2), ("y", 3)], &[("p", 3)]).unwrap();
            let b = LabeledTensor::from_matrix(&random_matrix(3, 8, &mut rng), &[("p", 3)], &[("q", 2), ("z", 4)]).unwrap();
            let c = LabeledTensor::from_matrix(&random_matrix(2, 5, &mut rng), &[("q", 2)], &[("w", 5)]).unwrap();
            let left = contract(&contract(&a, &b, &[("p", "p")]).unwrap(), &c, &[("q", "q")]).unwrap();
            let right = contract(&a, &contract(&b, &c, &[("q", "q")]).unwrap(), &[("p", "p")]).unwrap();
            prop_assert!(left.max_abs_diff(&right).unwrap() < 1e-12);
        }

        #[test]
        fn entropy_of_density_bounded(seed in any::<u64>(), n in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rho = random_density(n, n, &mut rng);
            let h = von_neumann_entropy(&Spectrum::of_hermitian(&rho).unwrap()).unwrap();
            prop_assert!(h >= 0.0 && h <= (n as f64).log2() + 1e-10);
        }

        #[test]
        fn singular_values_unitary_invariant(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_matrix(4, 6, &mut rng);
            let u = random_unitary(4, &mut rng);
            let v = random_unitary(6, &mut rng);
            let (_, s1, _) = svd_split(&tensor_from(&m, "l", "r"), &["l"]).unwrap();
            let (_, s2, _) = svd_split(&tensor_from(&(&u * &m * &v), "l", "r"), &["l"]).unwrap();
            for (a, b) in s1.iter().zip(&s2) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }

        #[test]
        fn exp_semigroup(seed in any::<u64>(), t1 in -1.0f64..1.0, t2 in -1.0f64..1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_matrix(4, 4, &mut rng) + random_hermitian(4, &mut rng);
            let lhs = matrix_exp(&m, t1 + t2).unwrap();
            let rhs = matrix_exp(&m, t1).unwrap() * matrix_exp(&m, t2).unwrap();
            prop_assert!((&lhs - &rhs).norm() <= 1e-9 * lhs.norm().max(1.0));
        }
    }
}
