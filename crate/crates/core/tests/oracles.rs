//! Independent oracles: a depth-stabilizing term enumeration that evaluates
//! terms symbolically (never composing tables), checked against the
//! closure-based clones, and the brute-force polynomial-matrix route checked
//! against the matrix-condition verdicts.

mod common;

use std::collections::BTreeSet;

use common::*;
use finalg::algebra::{decode_tuple, tuples};
use finalg::centrality::{check_matrix_condition, full_matrix_set};
use finalg::clones::{polynomial_clone, term_clone, unary_polynomials};
use finalg::oracle;
use finalg::{Assignment, FiniteAlgebra, MatrixCondition, Operation, Term};

/// All tables of term operations in `arity` variables realized by terms of
/// increasing depth, evaluated through the symbolic term evaluator, stopping
/// when two consecutive depths realize the same set.
fn term_tables_by_depth_stabilization(alg: &FiniteAlgebra, arity: usize) -> BTreeSet<Vec<usize>> {
    let n = alg.size();
    let eval_table = |t: &Term| -> Vec<usize> {
        tuples(n, arity)
            .map(|args| {
                let asg = Assignment::from_pairs(args.iter().enumerate().map(|(i, &a)| (i + 1, a)));
                alg.eval(t, &asg).unwrap()
            })
            .collect()
    };
    let mut terms: Vec<Term> = (1..=arity).map(Term::var).collect();
    for op in alg.operations() {
        if op.arity == 0 {
            terms.push(Term::constant(op.symbol.clone()));
        }
    }
    let mut tables: BTreeSet<Vec<usize>> = terms.iter().map(&eval_table).collect();
    // one representative term per distinct table keeps the frontier finite
    let mut reps: Vec<Term> = terms;
    loop {
        let mut new_terms = Vec::new();
        let mut new_tables = tables.clone();
        for op in alg.operations() {
            if op.arity == 0 {
                continue;
            }
            let mut idxs = vec![0usize; op.arity];
            loop {
                let args: Vec<Term> = idxs.iter().map(|&i| reps[i].clone()).collect();
                let t = Term::apply(op.symbol.clone(), args);
                if new_tables.insert(eval_table(&t)) {
                    new_terms.push(t);
                }
                let mut pos = op.arity;
                loop {
                    if pos == 0 {
                        break;
                    }
                    pos -= 1;
                    idxs[pos] += 1;
                    if idxs[pos] < reps.len() {
                        break;
                    }
                    idxs[pos] = 0;
                }
                if idxs.iter().all(|&i| i == 0) {
                    break;
                }
            }
        }
        if new_tables == tables {
            return tables;
        }
        tables = new_tables;
        reps.extend(new_terms);
    }
}

#[test]
fn term_clone_matches_the_depth_oracle() {
    for (name, alg) in corpus() {
        if alg.size() > 3 {
            continue;
        }
        for arity in 1..=2usize {
            let clone = term_clone(&alg, arity, 100_000).unwrap();
            assert!(clone.exhausted());
            let closure_tables: BTreeSet<Vec<usize>> =
                clone.maps().iter().map(|m| m.table().to_vec()).collect();
            let oracle_tables = term_tables_by_depth_stabilization(&alg, arity);
            assert_eq!(
                closure_tables, oracle_tables,
                "{name}: term clone at arity {arity} disagrees with the depth oracle"
            );
        }
    }
}

#[test]
fn polynomial_clone_matches_the_depth_oracle_on_the_expansion() {
    for (name, alg) in corpus() {
        if alg.size() > 3 {
            continue;
        }
        for arity in 1..=2usize {
            let clone = polynomial_clone(&alg, arity, 100_000).unwrap();
            let closure_tables: BTreeSet<Vec<usize>> =
                clone.maps().iter().map(|m| m.table().to_vec()).collect();
            let oracle_tables =
                term_tables_by_depth_stabilization(&alg.constant_expansion(), arity);
            assert_eq!(
                closure_tables, oracle_tables,
                "{name}: polynomial clone at arity {arity} disagrees"
            );
        }
    }
}

#[test]
fn unary_polynomials_equal_arity_one_polynomial_clone() {
    for (name, alg) in corpus() {
        let u = unary_polynomials(&alg, false);
        let p = polynomial_clone(&alg, 1, 100_000).unwrap();
        assert!(u.same_maps(&p), "{name}");
    }
}

/// Every two-element algebra with a single binary operation.
fn all_two_element_binary() -> Vec<FiniteAlgebra> {
    (0..16usize)
        .map(|code| {
            let table: Vec<usize> = (0..4).map(|i| (code >> i) & 1).collect();
            FiniteAlgebra::new(2, vec![Operation::new("f", 2, table)]).unwrap()
        })
        .collect()
}

#[test]
fn checker_verdicts_match_the_polynomial_matrix_oracle() {
    for alg in all_two_element_binary() {
        let matrices = oracle::polynomial_matrices(&alg, 3, 100_000).unwrap();
        for cond in [
            MatrixCondition::Abelian,
            MatrixCondition::StronglyRectangular,
            MatrixCondition::StronglyAbelian,
        ] {
            let via_closure = check_matrix_condition(&alg, cond).unwrap().is_holds();
            let via_oracle = oracle::condition_holds_on(&matrices, cond);
            assert_eq!(
                via_closure, via_oracle,
                "{alg:?}: {cond:?} verdicts disagree"
            );
        }
    }
}

#[test]
fn closure_matrices_are_exactly_the_oracle_matrices_for_two_element_algebras() {
    // at size 2 with arity-3 polynomials the brute force is complete enough
    // to match the closure set exactly
    for alg in all_two_element_binary() {
        let set = full_matrix_set(&alg, false).unwrap();
        let oracle_set = oracle::polynomial_matrices(&alg, 3, 1_000_000).unwrap();
        for m in &oracle_set {
            assert!(set.contains(m));
        }
        // closure side: every matrix of the closure should be produced by
        // some polynomial; check via the derivation-free containment of the
        // (sorted, deduplicated) oracle list
        if oracle_set.len() == set.len() {
            continue;
        }
        // otherwise the closure found matrices needing arity > 3; verify each
        // via its derivation instead
        let tracked = full_matrix_set(&alg, true).unwrap();
        for i in 0..tracked.len() {
            let d = tracked.derivation(i).unwrap();
            assert!(finalg::centrality::verify_matrix_derivation_as_polynomial(
                &alg,
                &d,
                &tracked.matrices()[i]
            )
            .unwrap());
        }
    }
}

#[test]
fn maltsev_verdicts_match_a_direct_scan_of_the_clone() {
    for (name, alg) in corpus() {
        if alg.size() > 3 {
            continue;
        }
        let clone = term_clone(&alg, 3, 1_000_000).unwrap();
        assert!(clone.exhausted());
        let n = alg.size();
        let direct = clone.maps().iter().any(|m| {
            (0..n).all(|x| {
                (0..n).all(|y| {
                    m.table()[finalg::algebra::encode_tuple(n, &[x, x, y])] == y
                        && m.table()[finalg::algebra::encode_tuple(n, &[y, x, x])] == y
                })
            })
        });
        let verdict =
            finalg::clones::find_maltsev(&alg, finalg::MaltsevMode::Term, 1_000_000).unwrap();
        assert_eq!(verdict.is_holds(), direct, "{name}");
    }
}

#[test]
fn property_p_routes_agree_across_the_corpus() {
    for (name, alg) in corpus() {
        for zero in 0..alg.size() {
            let closure = match finalg::centrality::check_property_p(&alg, zero) {
                Ok(v) => v.is_holds(),
                Err(_) => continue, // {zero} not a subuniverse and no violation
            };
            let brute = finalg::centrality::property_p_bruteforce(&alg, zero, 3, 1_000_000)
                .unwrap()
                .is_none();
            assert_eq!(closure, brute, "{name} zero={zero}");
        }
    }
}

#[test]
fn quotient_tables_agree_with_class_arithmetic() {
    // decode/encode sanity for the quotient of z3 by the full congruence
    let alg = z3();
    let theta = finalg::Congruence::full(3);
    let q = finalg::congruence::quotient_algebra(&alg, &theta).unwrap();
    assert_eq!(q.algebra.size(), 1);
    let args = decode_tuple(1, 2, 0);
    assert_eq!(q.algebra.apply(0, &args), 0);
}
