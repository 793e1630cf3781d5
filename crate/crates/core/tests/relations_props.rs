mod common;

use common::{exam1, exam3, random_principal_seeds};
use qcluster::parallel::Execution;
use qcluster::relations::{
    commutator_check, commutator_witness, higher_verify, lemma_sum_check, one_step_variables,
    power_product_check, quantum_group_checks, run_check, run_checks, Check, LemmaVariant, Side,
};
use qcluster::seeds::QuantumSeed;

fn seeds() -> Vec<QuantumSeed> {
    let mut out = vec![exam1(), exam3()];
    out.extend(random_principal_seeds(20, 0x5eed));
    out
}

fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (1..=n).flat_map(move |i| (1..=n).filter(move |&j| j != i).map(move |j| (i, j)))
}

#[test]
fn higher_relations_hold_beyond_the_boundary() {
    for s in seeds() {
        for (i, j) in pairs(s.n()) {
            let b = s.b(i, j).abs();
            let ls: Vec<i64> = if b == 0 {
                vec![1, 2]
            } else {
                (1..=b).collect()
            };
            for l in ls {
                for m in l * b..=l * b + 2 {
                    let c = higher_verify(&s, i, j, l, m, false).unwrap();
                    assert!(c.pass, "{}\n{}", s, c.render_block());
                    assert!(!c.exploratory);
                }
            }
        }
    }
}

#[test]
fn commutator_has_at_most_one_term() {
    for s in seeds() {
        let ys = one_step_variables(&s).unwrap();
        for (i, j) in pairs(s.n()) {
            let comm = &(&ys[i - 1] * &ys[j - 1]) - &(&ys[j - 1] * &ys[i - 1]);
            assert!(comm.len() <= 1);
            assert_eq!(comm.is_zero(), s.b(i, j) == 0);
            let w = commutator_witness(&s, i, j).unwrap();
            assert_eq!(
                comm.terms().map(|(e, _)| e.clone()).collect::<Vec<_>>(),
                w.terms().map(|(e, _)| e.clone()).collect::<Vec<_>>()
            );
            assert!(commutator_check(&s, i, j).unwrap().pass);
        }
    }
}

#[test]
fn first_order_lemma_is_the_base_case_of_the_general_one() {
    for s in seeds() {
        for (i, j) in pairs(s.n()) {
            let b = s.b(i, j);
            if b == 0 {
                assert!(lemma_sum_check(&s, i, j, LemmaVariant::L32).is_err());
                continue;
            }
            let first = lemma_sum_check(&s, i, j, LemmaVariant::L32).unwrap();
            let general =
                lemma_sum_check(&s, i, j, LemmaVariant::L41 { m: b.abs(), t: 0 }).unwrap();
            assert!(first.pass && general.pass);
            assert_eq!(first.remainder, general.remainder);
            for t in 0..b.abs() {
                let l = t + 1;
                for m in l * b.abs()..=l * b.abs() + 1 {
                    let c = lemma_sum_check(&s, i, j, LemmaVariant::L41 { m, t }).unwrap();
                    assert!(c.pass, "{}", c.render_block());
                }
            }
        }
    }
}

#[test]
fn reduction_inner_sums_have_predicted_support() {
    for s in seeds() {
        for (i, j) in pairs(s.n()) {
            let b = s.b(i, j).abs();
            for l in 1..=b {
                let c = run_check(&s, &Check::ReductionSupport { i, j, l }).unwrap();
                assert!(c.pass, "{}\n{}", s, c.render_block());
            }
        }
    }
}

#[test]
fn power_products_agree_on_random_seeds() {
    for s in seeds().into_iter().take(8) {
        for i in 1..=s.n() {
            for t in 1..=3 {
                for side in [Side::Left, Side::Right] {
                    let c = power_product_check(&s, i, t, side).unwrap();
                    assert!(c.pass, "{}", c.render_block());
                }
            }
        }
    }
}

#[test]
fn exploratory_instances_are_flagged() {
    let s = exam1();
    // b_21 = -2, so l = 3 is outside the stated range
    let c = higher_verify(&s, 2, 1, 3, 6, true).unwrap();
    assert!(c.exploratory);
    assert!(c.render_block().contains("exploratory"));
    assert!(higher_verify(&s, 2, 1, 0, 6, true).is_err());
}

#[test]
fn schedule_does_not_change_reports() {
    for s in seeds().into_iter().take(6) {
        let checks = quantum_group_checks(&s);
        let render = |exec| {
            run_checks(&s, &checks, exec)
                .into_iter()
                .map(|c| c.unwrap().render_block())
                .collect::<Vec<_>>()
        };
        assert_eq!(render(Execution::Sequential), render(Execution::Parallel));
    }
}

#[test]
fn linear_order_does_not_change_results() {
    for s in seeds().into_iter().take(8) {
        let reversed: Vec<usize> = (1..=s.n()).rev().collect();
        let r = s.clone().with_order(&reversed).unwrap();
        for (i, j) in pairs(s.n()) {
            assert_eq!(
                commutator_witness(&s, i, j).unwrap().canonical_string(),
                commutator_witness(&r, i, j).unwrap().canonical_string()
            );
            assert!(commutator_check(&r, i, j).unwrap().pass);
        }
        for i in 1..=s.n() {
            assert!(power_product_check(&r, i, 3, Side::Left).unwrap().pass);
        }
    }
}
