//! Fixture algebras shared by the benchmarks.

use finalg::{FiniteAlgebra, Operation};

pub fn z2() -> FiniteAlgebra {
    FiniteAlgebra::new(2, vec![Operation::new("add", 2, vec![0, 1, 1, 0])]).unwrap()
}

pub fn z3() -> FiniteAlgebra {
    let table = (0..3)
        .flat_map(|a| (0..3).map(move |b| (a + b) % 3))
        .collect();
    FiniteAlgebra::new(3, vec![Operation::new("add", 2, table)]).unwrap()
}

pub fn left_zero(n: usize) -> FiniteAlgebra {
    let table = (0..n).flat_map(|x| std::iter::repeat_n(x, n)).collect();
    FiniteAlgebra::new(n, vec![Operation::new("f", 2, table)]).unwrap()
}

/// A 4-element algebra with a binary and a unary operation, dense enough to
/// make the fixpoint engines work.
pub fn mixed4() -> FiniteAlgebra {
    let binary: Vec<usize> = (0..16).map(|i| (i * 7 + 3) % 4).collect();
    let unary = vec![1, 2, 3, 0];
    FiniteAlgebra::new(
        4,
        vec![
            Operation::new("f", 2, binary),
            Operation::new("g", 1, unary),
        ],
    )
    .unwrap()
}
