//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use finalg::{FiniteAlgebra, Operation};
use rand::rngs::StdRng;
use rand::Rng;

pub fn z2() -> FiniteAlgebra {
    FiniteAlgebra::new(2, vec![Operation::new("add", 2, vec![0, 1, 1, 0])]).unwrap()
}

pub fn meet2() -> FiniteAlgebra {
    FiniteAlgebra::new(2, vec![Operation::new("meet", 2, vec![0, 0, 0, 1])]).unwrap()
}

pub fn left_zero(n: usize) -> FiniteAlgebra {
    let table = (0..n).flat_map(|x| std::iter::repeat_n(x, n)).collect();
    FiniteAlgebra::new(n, vec![Operation::new("f", 2, table)]).unwrap()
}

pub fn no_op(n: usize) -> FiniteAlgebra {
    FiniteAlgebra::new(n, vec![]).unwrap()
}

pub fn one_element() -> FiniteAlgebra {
    FiniteAlgebra::new(1, vec![Operation::new("f", 2, vec![0])]).unwrap()
}

pub fn z3() -> FiniteAlgebra {
    let mut table = Vec::new();
    for a in 0..3 {
        for b in 0..3 {
            table.push((a + b) % 3);
        }
    }
    FiniteAlgebra::new(3, vec![Operation::new("add", 2, table)]).unwrap()
}

/// The flip map as a unary operation.
pub fn flip2() -> FiniteAlgebra {
    FiniteAlgebra::new(2, vec![Operation::new("f", 1, vec![1, 0])]).unwrap()
}

/// A small committee of named algebras with sizes up to 3.
pub fn corpus() -> Vec<(&'static str, FiniteAlgebra)> {
    vec![
        ("one-element", one_element()),
        ("z2", z2()),
        ("meet2", meet2()),
        ("left-zero-2", left_zero(2)),
        ("left-zero-3", left_zero(3)),
        ("no-op-2", no_op(2)),
        ("no-op-3", no_op(3)),
        ("flip-2", flip2()),
        ("z3", z3()),
    ]
}

/// A random algebra with 1..=max_ops operations of arity <= 2.
pub fn random_algebra(rng: &mut StdRng, max_size: usize, max_ops: usize) -> FiniteAlgebra {
    let n = rng.random_range(1..=max_size);
    let ops = rng.random_range(1..=max_ops);
    let names = ["f", "g", "h"];
    let mut operations = Vec::new();
    for (i, name) in names.iter().enumerate().take(ops) {
        let arity = rng.random_range(0..=2);
        let cells = n.pow(arity as u32);
        let table = (0..cells).map(|_| rng.random_range(0..n)).collect();
        operations.push(Operation::new(*name, arity, table));
        let _ = i;
    }
    FiniteAlgebra::new(n, operations).unwrap()
}
