//! Brute-force cross-validation: enumerate polynomial matrices directly from
//! the bounded polynomial clone, with every split of the coordinates into a
//! row block and a column block and every choice of argument tuples. Used
//! only to check the closure-based matrix set, never as a primary route.

use crate::algebra::{decode_tuple, encode_tuple, FiniteAlgebra};
use crate::centrality::{Matrix2x2, MatrixCondition};
use crate::clones;
use crate::error::{Error, Result};

/// All matrices `[[t(a,u), t(a,v)], [t(b,u), t(b,v)]]` where `t` ranges over
/// the polynomial clone up to `max_arity`, the coordinates split arbitrarily
/// into the `a/b` and `u/v` blocks, and the tuples range over everything.
/// The result is deduplicated and sorted by encoded value.
pub fn polynomial_matrices(
    alg: &FiniteAlgebra,
    max_arity: usize,
    clone_cap: usize,
) -> Result<Vec<Matrix2x2>> {
    let full = crate::congruence::Congruence::full(alg.size());
    polynomial_matrices_constrained(alg, max_arity, clone_cap, &full, &full)
}

/// The brute-force matrix list with the row tuples related coordinatewise by
/// `row_constraint` and the column tuples by `col_constraint`.
pub fn polynomial_matrices_constrained(
    alg: &FiniteAlgebra,
    max_arity: usize,
    clone_cap: usize,
    row_constraint: &crate::congruence::Congruence,
    col_constraint: &crate::congruence::Congruence,
) -> Result<Vec<Matrix2x2>> {
    let n = alg.size();
    let mut seen = vec![false; n * n * n * n];
    let mut out: Vec<Matrix2x2> = Vec::new();
    let mut record = |m: Matrix2x2| {
        let code = m.encode(n) as usize;
        if !seen[code] {
            seen[code] = true;
            out.push(m);
        }
    };
    // arity 0 polynomials are the constants: constant matrices
    for c in 0..n {
        record(Matrix2x2::new(c, c, c, c));
    }
    for arity in 1..=max_arity {
        let clone = clones::polynomial_clone(alg, arity, clone_cap)?;
        if !clone.exhausted() {
            return Err(Error::ResourceCap {
                what: format!("brute-force polynomial enumeration at arity {arity}"),
                needed: clone.len() + 1,
                cap: clone_cap,
            });
        }
        // every split of the coordinates into row block / column block
        for split in 0..(1usize << arity) {
            let row_coords: Vec<usize> = (0..arity).filter(|i| split & (1 << i) != 0).collect();
            let col_coords: Vec<usize> = (0..arity).filter(|i| split & (1 << i) == 0).collect();
            let rows = n.pow(row_coords.len() as u32);
            let cols = n.pow(col_coords.len() as u32);
            for map in clone.maps() {
                let mut args = vec![0usize; arity];
                for ab in 0..rows * rows {
                    let a = decode_tuple(n, row_coords.len(), ab / rows);
                    let b = decode_tuple(n, row_coords.len(), ab % rows);
                    if !a
                        .iter()
                        .zip(b.iter())
                        .all(|(&x, &y)| row_constraint.related(x, y))
                    {
                        continue;
                    }
                    for uv in 0..cols * cols {
                        let u = decode_tuple(n, col_coords.len(), uv / cols);
                        let v = decode_tuple(n, col_coords.len(), uv % cols);
                        if !u
                            .iter()
                            .zip(v.iter())
                            .all(|(&x, &y)| col_constraint.related(x, y))
                        {
                            continue;
                        }
                        let mut eval = |x: &[usize], y: &[usize]| {
                            for (j, &c) in row_coords.iter().enumerate() {
                                args[c] = x[j];
                            }
                            for (j, &c) in col_coords.iter().enumerate() {
                                args[c] = y[j];
                            }
                            map.table()[encode_tuple(n, &args)]
                        };
                        let m =
                            Matrix2x2::new(eval(&a, &u), eval(&a, &v), eval(&b, &u), eval(&b, &v));
                        record(m);
                    }
                }
            }
        }
    }
    out.sort_by_key(|m| m.encode(n));
    Ok(out)
}

/// Evaluate a matrix condition over the brute-force matrix list instead of
/// the closure set.
pub fn condition_holds_on(matrices: &[Matrix2x2], cond: MatrixCondition) -> bool {
    matrices.iter().all(|m| match cond {
        MatrixCondition::Abelian => (m.p != m.q || m.r == m.s) && (m.p != m.r || m.q == m.s),
        MatrixCondition::StronglyRectangular => m.q != m.r || m.r == m.s,
        MatrixCondition::StronglyAbelian => {
            (m.p != m.q || m.r == m.s) && (m.p != m.r || m.q == m.s) && (m.q != m.r || m.r == m.s)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Operation;
    use crate::centrality::full_matrix_set;

    #[test]
    fn oracle_matrices_of_z2_lie_in_the_closure_set() {
        let alg = FiniteAlgebra::new(2, vec![Operation::new("add", 2, vec![0, 1, 1, 0])]).unwrap();
        let oracle = polynomial_matrices(&alg, 2, 100_000).unwrap();
        let set = full_matrix_set(&alg, false).unwrap();
        for m in &oracle {
            assert!(set.contains(m), "{m} missing from the closure set");
        }
    }

    #[test]
    fn oracle_on_no_op_algebra_gives_constant_rows_and_columns() {
        let alg = FiniteAlgebra::new(2, vec![]).unwrap();
        let oracle = polynomial_matrices(&alg, 3, 100_000).unwrap();
        // projections and constants only: generator-shaped matrices
        let set = full_matrix_set(&alg, false).unwrap();
        assert_eq!(oracle.len(), set.len());
    }

    #[test]
    fn oracle_finds_the_semilattice_witness() {
        let alg = FiniteAlgebra::new(2, vec![Operation::new("meet", 2, vec![0, 0, 0, 1])]).unwrap();
        let oracle = polynomial_matrices(&alg, 2, 100_000).unwrap();
        assert!(oracle.contains(&Matrix2x2::new(0, 0, 1, 0)));
        assert!(!condition_holds_on(&oracle, MatrixCondition::Abelian));
    }
}
