mod common;

use common::{exam1, exam3, random_principal_seed, rows};
use proptest::prelude::*;
use qcluster::qtorus::{ExpVec, TorusElem};
use qcluster::seeds::QuantumSeed;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn seed_strategy(max_n: usize) -> impl Strategy<Value = QuantumSeed> {
    (2..=max_n, any::<u64>()).prop_map(|(n, s)| {
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        random_principal_seed(&mut rng, n)
    })
}

fn assert_involutive(s: &QuantumSeed) {
    for k in 1..=s.n() {
        let once = s.mutate(k).unwrap();
        let twice = once.mutate(k).unwrap();
        assert_eq!(
            rows(twice.form().matrix()),
            rows(s.form().matrix()),
            "k = {k}"
        );
        assert_eq!(
            rows(twice.exchange().matrix()),
            rows(s.exchange().matrix()),
            "k = {k}"
        );
    }
}

#[test]
fn example_seeds_are_involutive() {
    assert_involutive(&exam1());
    assert_involutive(&exam3());
}

#[test]
fn exam1_mutated_variable() {
    let s = exam1();
    let expected = &TorusElem::basis(s.form(), ExpVec::new(vec![-1, 0, 1, 0])).unwrap()
        + &TorusElem::basis(s.form(), ExpVec::new(vec![-1, 2, 0, 0])).unwrap();
    assert_eq!(s.mutated_variable(1).unwrap(), expected);
    assert_eq!(s.exchange().column(1), ExpVec::new(vec![0, -2, 1, 0]));
}

#[test]
fn zero_exchange_matrix_variables() {
    let s = QuantumSeed::principal(
        &qcluster::matrix::IntMatrix::zeros(2, 2),
        &qcluster::seeds::Skewsymmetrizer::identity(2),
    )
    .unwrap();
    assert!(s.quiver_edges().is_empty());
    for k in 1..=2 {
        let e = ExpVec::unit(4, k - 1);
        let f = ExpVec::unit(4, k + 1);
        let expected = &TorusElem::basis(s.form(), &f - &e).unwrap()
            + &TorusElem::basis(s.form(), -&e).unwrap();
        assert_eq!(s.mutated_variable(k).unwrap(), expected);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mutation_is_an_involution(s in seed_strategy(4)) {
        assert_involutive(&s);
    }

    #[test]
    fn mutation_preserves_compatibility(s in seed_strategy(4)) {
        for k in 1..=s.n() {
            let mu = s.mutate(k).unwrap();
            prop_assert!(mu.validate_compatibility().is_ok());
            prop_assert_eq!(mu.symmetrizer().entries(), s.symmetrizer().entries());
            // a second direction keeps the pair compatible as well
            for k2 in 1..=s.n() {
                prop_assert!(mu.mutate(k2).unwrap().validate_compatibility().is_ok());
            }
        }
    }

    #[test]
    fn mutated_form_bookkeeping(s in seed_strategy(3)) {
        let n = s.n();
        for i in 1..=n {
            let mu = s.mutate(i).unwrap();
            prop_assert_eq!(mu.lambda(i, n + i), s.d(i));
            for j in 1..=n {
                if j == i {
                    continue;
                }
                // -d_i b_ij when b_ji <= 0; the two contributions cancel when b_ji > 0
                let expected = if s.b(j, i) > 0 { 0 } else { -s.d(i) * s.b(i, j) };
                prop_assert_eq!(mu.lambda(i, n + j), expected);
            }
        }
    }

    #[test]
    fn exchange_terms_quasi_commute(s in seed_strategy(3)) {
        for k in 1..=s.n() {
            let (plus, minus) = s.exchange_exponents(k);
            prop_assert_eq!(s.form().pairing(&plus, &minus).abs(), s.d(k));
        }
    }

    #[test]
    fn json_roundtrip(s in seed_strategy(3)) {
        let back = QuantumSeed::from_json(&s.to_json()).unwrap();
        prop_assert_eq!(rows(back.form().matrix()), rows(s.form().matrix()));
        prop_assert_eq!(rows(back.exchange().matrix()), rows(s.exchange().matrix()));
        prop_assert_eq!(back.symmetrizer().entries(), s.symmetrizer().entries());
    }
}
