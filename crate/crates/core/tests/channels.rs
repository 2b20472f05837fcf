mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{max_abs_diff, random_density};
use transmon_twin::channels::{crosstalk_unitary, decay_channel, deph, deph2, pauli_z, CMatrix};

/// Density-matrix basis `|i⟩⟨j|` of one qubit.
fn basis() -> Vec<CMatrix> {
    (0..4)
        .map(|k| {
            let mut m = CMatrix::zeros(2, 2);
            m[(k / 2, k % 2)] = common::c(1.0);
            m
        })
        .collect()
}

proptest! {
    #[test]
    fn decay_is_a_semigroup(
        t1 in 5e-6f64..100e-6,
        ratio in 0.05f64..2.0,
        p in 0.0f64..0.2,
        dt1 in 0.0f64..5e-6,
        dt2 in 0.0f64..5e-6,
    ) {
        let t2 = ratio * t1;
        let a = decay_channel(t1, t2, p, dt1).unwrap();
        let b = decay_channel(t1, t2, p, dt2).unwrap();
        let ab = decay_channel(t1, t2, p, dt1 + dt2).unwrap();
        for rho in basis() {
            let two_steps = b.apply_to(&a.apply_to(&rho));
            prop_assert!(max_abs_diff(&two_steps, &ab.apply_to(&rho)) < 1e-9);
        }
    }

    #[test]
    fn crosstalk_commutes_with_dephasing(
        beta in -1e7f64..1e7,
        d in 0.0f64..1e-6,
        delta in 0.0f64..0.5,
        delta2 in 0.0f64..0.75,
        seed in any::<u64>(),
    ) {
        let u = crosstalk_unitary(beta, d);
        let zz = pauli_z().kronecker(&pauli_z());
        prop_assert!(max_abs_diff(&(&u * &zz), &(&zz * &u)) < 1e-14);

        let rho = random_density(2, &mut ChaCha8Rng::seed_from_u64(seed));
        let conj = |r: &CMatrix| &u * r * u.adjoint();
        let id = CMatrix::identity(2, 2);
        let local = deph(delta).unwrap();
        let deph_on_first = |r: &CMatrix| {
            local
                .kraus()
                .iter()
                .map(|k| {
                    let k = k.kronecker(&id);
                    &k * r * k.adjoint()
                })
                .fold(CMatrix::zeros(4, 4), |acc, m| acc + m)
        };
        let pair = deph2(delta2).unwrap();
        prop_assert!(max_abs_diff(&conj(&pair.apply_to(&rho)), &pair.apply_to(&conj(&rho))) < 1e-12);
        prop_assert!(max_abs_diff(&conj(&deph_on_first(&rho)), &deph_on_first(&conj(&rho))) < 1e-12);
    }
}
