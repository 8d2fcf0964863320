//! Finite algebras presented by operation tables.
//!
//! The universe of an algebra of size `n` is always `0..n`. Operation tables
//! are stored in row-major order: the table entry for arguments
//! `(a_1, ..., a_k)` sits at index `a_1 * n^(k-1) + ... + a_k`, i.e. the first
//! argument is the most significant digit. Powers of an algebra reuse the same
//! encoding for their elements, so files, tables and product elements share
//! one bit-exact convention.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, NodePath, Result};

/// Hard ceiling on universe sizes produced by `power`.
pub const DEFAULT_POWER_CAP: usize = 1_000_000;
/// Hard ceiling on single-table cell counts produced by `power`.
pub const DEFAULT_TABLE_CELL_CAP: usize = 100_000_000;

/// Encode a tuple over `0..n` as a row-major index (first coordinate most
/// significant).
pub fn encode_tuple(n: usize, tuple: &[usize]) -> usize {
    let mut idx = 0;
    for &a in tuple {
        debug_assert!(a < n);
        idx = idx * n + a;
    }
    idx
}

/// Decode a row-major index back into a `k`-tuple over `0..n`.
pub fn decode_tuple(n: usize, k: usize, mut idx: usize) -> Vec<usize> {
    let mut out = vec![0; k];
    for slot in out.iter_mut().rev() {
        *slot = idx % n;
        idx /= n;
    }
    out
}

/// Iterate over all `k`-tuples over `0..n` in row-major order.
pub fn tuples(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = n.checked_pow(k as u32).expect("tuple space overflow");
    (0..total).map(move |i| decode_tuple(n, k, i))
}

/// A named finitary operation given by its full table.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Operation {
    pub symbol: String,
    pub arity: usize,
    pub table: Vec<usize>,
}

impl Operation {
    pub fn new(symbol: impl Into<String>, arity: usize, table: Vec<usize>) -> Self {
        Operation {
            symbol: symbol.into(),
            arity,
            table,
        }
    }
}

/// A finite algebra: a universe `0..size` and a list of operation tables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FiniteAlgebra {
    size: usize,
    operations: Vec<Operation>,
}

impl FiniteAlgebra {
    /// Validates every structural invariant: table lengths, entry ranges,
    /// symbol uniqueness.
    pub fn new(size: usize, operations: Vec<Operation>) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidAlgebra("universe must be nonempty".into()));
        }
        let mut seen = BTreeMap::new();
        for (i, op) in operations.iter().enumerate() {
            if let Some(_prev) = seen.insert(op.symbol.clone(), i) {
                return Err(Error::InvalidAlgebra(format!(
                    "duplicate operation symbol `{}`",
                    op.symbol
                )));
            }
            let expected = size.checked_pow(op.arity as u32).ok_or_else(|| {
                Error::InvalidAlgebra(format!("table for `{}` would overflow", op.symbol))
            })?;
            if op.table.len() != expected {
                return Err(Error::InvalidAlgebra(format!(
                    "operation `{}` of arity {} needs {} entries, got {}",
                    op.symbol,
                    op.arity,
                    expected,
                    op.table.len()
                )));
            }
            if let Some(&bad) = op.table.iter().find(|&&v| v >= size) {
                return Err(Error::InvalidAlgebra(format!(
                    "operation `{}` has entry {} out of range 0..{}",
                    op.symbol, bad, size
                )));
            }
        }
        Ok(FiniteAlgebra { size, operations })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn operations(&self) -> &[Operation] {
        &self.operations
    }

    pub fn op_index(&self, symbol: &str) -> Option<usize> {
        self.operations.iter().position(|op| op.symbol == symbol)
    }

    pub fn operation(&self, idx: usize) -> &Operation {
        &self.operations[idx]
    }

    /// Apply operation `idx` to `args` by table lookup.
    pub fn apply(&self, idx: usize, args: &[usize]) -> usize {
        let op = &self.operations[idx];
        debug_assert_eq!(args.len(), op.arity);
        op.table[encode_tuple(self.size, args)]
    }

    pub fn has_constants(&self) -> bool {
        self.operations.iter().any(|op| op.arity == 0)
    }

    /// Values of all 0-ary operations.
    pub fn constant_values(&self) -> Vec<usize> {
        self.operations
            .iter()
            .filter(|op| op.arity == 0)
            .map(|op| op.table[0])
            .collect()
    }

    /// SHA-256 over a canonical byte rendering; used for report and
    /// certificate digests.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update((self.size as u64).to_le_bytes());
        for op in &self.operations {
            h.update(op.symbol.as_bytes());
            h.update([0u8]);
            h.update((op.arity as u64).to_le_bytes());
            for &v in &op.table {
                h.update((v as u64).to_le_bytes());
            }
        }
        hex(&h.finalize())
    }

    /// Evaluate a term bottom-up under an assignment.
    pub fn eval(&self, term: &Term, asg: &Assignment) -> Result<usize> {
        let mut path = Vec::new();
        self.eval_at(term, asg, &mut path)
    }

    fn eval_at(&self, term: &Term, asg: &Assignment, path: &mut NodePath) -> Result<usize> {
        match term {
            Term::Variable(i) => asg.get(*i).ok_or_else(|| Error::UnassignedVariable {
                index: *i,
                path: path.clone(),
            }),
            Term::Apply { symbol, args } => {
                let idx = self.op_index(symbol).ok_or_else(|| Error::UnknownSymbol {
                    symbol: symbol.clone(),
                    path: path.clone(),
                })?;
                let op = &self.operations[idx];
                if op.arity != args.len() {
                    return Err(Error::ArityMismatch {
                        symbol: symbol.clone(),
                        declared: op.arity,
                        applied: args.len(),
                        path: path.clone(),
                    });
                }
                let mut vals = Vec::with_capacity(args.len());
                for (i, child) in args.iter().enumerate() {
                    path.push(i);
                    vals.push(self.eval_at(child, asg, path)?);
                    path.pop();
                }
                Ok(self.apply(idx, &vals))
            }
        }
    }

    /// The direct power with coordinatewise operations. Elements of the power
    /// are encoded row-major, first coordinate most significant.
    pub fn power(&self, k: usize, element_cap: usize) -> Result<FiniteAlgebra> {
        assert!(k >= 1, "power exponent must be positive");
        let n = self.size;
        let big = n
            .checked_pow(k as u32)
            .filter(|&m| m <= element_cap)
            .ok_or_else(|| Error::ResourceCap {
                what: format!("building the {k}th power of a {n}-element algebra"),
                needed: n.checked_pow(k as u32).unwrap_or(usize::MAX),
                cap: element_cap,
            })?;
        let mut operations = Vec::with_capacity(self.operations.len());
        for op in &self.operations {
            let cells = big
                .checked_pow(op.arity as u32)
                .filter(|&c| c <= DEFAULT_TABLE_CELL_CAP)
                .ok_or_else(|| Error::ResourceCap {
                    what: format!("building the power table for `{}`", op.symbol),
                    needed: big.checked_pow(op.arity as u32).unwrap_or(usize::MAX),
                    cap: DEFAULT_TABLE_CELL_CAP,
                })?;
            let mut table = Vec::with_capacity(cells);
            let mut args = vec![0usize; op.arity];
            let mut coords = vec![0usize; op.arity];
            for idx in 0..cells {
                // Decode each power-element argument, then apply coordinatewise.
                let mut rem = idx;
                for slot in args.iter_mut().rev() {
                    *slot = rem % big;
                    rem /= big;
                }
                let mut out = 0usize;
                for j in 0..k {
                    for (c, &a) in coords.iter_mut().zip(args.iter()) {
                        // j-th coordinate of power element a
                        *c = (a / n.pow((k - 1 - j) as u32)) % n;
                    }
                    out = out * n + op.table[encode_tuple(n, &coords)];
                }
                table.push(out);
            }
            operations.push(Operation::new(op.symbol.clone(), op.arity, table));
        }
        FiniteAlgebra::new(big, operations)
    }

    /// Least subset containing `seed` and all constants, closed under every
    /// operation. Fixpoint of one-step application.
    pub fn subuniverse_closure(&self, seed: &[usize]) -> Result<Vec<usize>> {
        for &s in seed {
            if s >= self.size {
                return Err(Error::ElementOutOfRange {
                    element: s,
                    size: self.size,
                });
            }
        }
        if seed.is_empty() && !self.has_constants() {
            return Err(Error::EmptySubuniverse);
        }
        let mut member = vec![false; self.size];
        let mut elems: Vec<usize> = Vec::new();
        let push = |e: usize, member: &mut Vec<bool>, elems: &mut Vec<usize>| {
            if !member[e] {
                member[e] = true;
                elems.push(e);
            }
        };
        for &s in seed {
            push(s, &mut member, &mut elems);
        }
        for c in self.constant_values() {
            push(c, &mut member, &mut elems);
        }
        // Frontier fixpoint: every new element is combined with everything
        // already present.
        let mut frontier_start = 0;
        while frontier_start < elems.len() {
            let frontier_end = elems.len();
            for op_idx in 0..self.operations.len() {
                let arity = self.operations[op_idx].arity;
                if arity == 0 {
                    continue;
                }
                // All tuples over the current set with at least one coordinate
                // in the frontier.
                let snapshot = elems.clone();
                let mut tuple = vec![0usize; arity];
                apply_tuples_touching(
                    &snapshot,
                    frontier_start,
                    frontier_end,
                    arity,
                    &mut tuple,
                    &mut |args| {
                        let v = self.apply(op_idx, args);
                        if !member[v] {
                            member[v] = true;
                            elems.push(v);
                        }
                    },
                );
            }
            frontier_start = frontier_end;
        }
        elems.sort_unstable();
        Ok(elems)
    }

    /// All subuniverses, each as a sorted element list, in deterministic
    /// (sorted) order. Enumerated by closing singletons and extending one
    /// element at a time.
    pub fn all_subuniverses(&self) -> Vec<Vec<usize>> {
        use std::collections::BTreeSet;
        let mut found: BTreeSet<Vec<usize>> = BTreeSet::new();
        let mut queue: Vec<Vec<usize>> = Vec::new();
        if self.has_constants() {
            let base = self.subuniverse_closure(&[]).expect("constants close");
            if found.insert(base.clone()) {
                queue.push(base);
            }
        }
        for a in 0..self.size {
            let s = self.subuniverse_closure(&[a]).expect("in range");
            if found.insert(s.clone()) {
                queue.push(s);
            }
        }
        while let Some(s) = queue.pop() {
            for a in 0..self.size {
                if s.binary_search(&a).is_ok() {
                    continue;
                }
                let mut seed = s.clone();
                seed.push(a);
                let bigger = self.subuniverse_closure(&seed).expect("in range");
                if found.insert(bigger.clone()) {
                    queue.push(bigger);
                }
            }
        }
        found.into_iter().collect()
    }

    /// Restrict the algebra to a closed subset. `subset` must be sorted and
    /// closed under every operation; returns the reindexed algebra together
    /// with the map from new indices to old elements.
    pub fn subalgebra(&self, subset: &[usize]) -> Result<(FiniteAlgebra, Vec<usize>)> {
        let mut old_to_new = vec![usize::MAX; self.size];
        for (new, &old) in subset.iter().enumerate() {
            if old >= self.size {
                return Err(Error::ElementOutOfRange {
                    element: old,
                    size: self.size,
                });
            }
            old_to_new[old] = new;
        }
        let m = subset.len();
        let mut operations = Vec::with_capacity(self.operations.len());
        for (op_idx, op) in self.operations.iter().enumerate() {
            let mut table = Vec::with_capacity(m.pow(op.arity as u32));
            let mut args_old = vec![0usize; op.arity];
            for args_new in tuples(m, op.arity) {
                for (o, &a) in args_old.iter_mut().zip(args_new.iter()) {
                    *o = subset[a];
                }
                let v = self.apply(op_idx, &args_old);
                if old_to_new[v] == usize::MAX {
                    return Err(Error::InvalidAlgebra(format!(
                        "subset not closed: `{}` applied to {:?} escapes to {}",
                        op.symbol, args_old, v
                    )));
                }
                table.push(old_to_new[v]);
            }
            operations.push(Operation::new(op.symbol.clone(), op.arity, table));
        }
        Ok((FiniteAlgebra::new(m, operations)?, subset.to_vec()))
    }

    /// Adds one fresh constant symbol per element. Term operations of the
    /// result are exactly the polynomial operations of `self`.
    pub fn constant_expansion(&self) -> FiniteAlgebra {
        let mut operations = self.operations.clone();
        for a in 0..self.size {
            operations.push(Operation::new(constant_symbol(self, a), 0, vec![a]));
        }
        FiniteAlgebra::new(self.size, operations).expect("expansion preserves validity")
    }

    /// True iff `s ≈ t` holds under every assignment to the variables of both
    /// sides.
    pub fn satisfies(&self, s: &Term, t: &Term) -> Result<bool> {
        Ok(self.identity_counterexample(s, t)?.is_none())
    }

    /// First assignment (in row-major order over the sorted variable list)
    /// where the two terms disagree.
    pub fn identity_counterexample(&self, s: &Term, t: &Term) -> Result<Option<Assignment>> {
        let mut vars: Vec<usize> = Vec::new();
        s.collect_vars(&mut vars);
        t.collect_vars(&mut vars);
        vars.sort_unstable();
        vars.dedup();
        let k = vars.len();
        for combo in tuples(self.size, k) {
            let asg = Assignment::from_pairs(vars.iter().copied().zip(combo.iter().copied()));
            if self.eval(s, &asg)? != self.eval(t, &asg)? {
                return Ok(Some(asg));
            }
        }
        Ok(None)
    }
}

/// Deterministic symbol for the constant naming element `a` in the full
/// constant expansion. Underscores are prepended until the name is fresh.
pub fn constant_symbol(alg: &FiniteAlgebra, a: usize) -> String {
    let mut name = format!("c{a}");
    while alg.op_index(&name).is_some() {
        name.insert(0, '_');
    }
    name
}

/// Call `f` on every `arity`-tuple over `elems` that touches the frontier
/// `elems[frontier_start..frontier_end]` at least once. Tuples over the older
/// prefix were handled in earlier rounds.
pub(crate) fn apply_tuples_touching(
    elems: &[usize],
    frontier_start: usize,
    frontier_end: usize,
    _arity: usize,
    tuple: &mut [usize],
    f: &mut impl FnMut(&[usize]),
) {
    fn rec(
        elems: &[usize],
        frontier_start: usize,
        frontier_end: usize,
        pos: usize,
        touched: bool,
        tuple: &mut [usize],
        f: &mut impl FnMut(&[usize]),
    ) {
        if pos == tuple.len() {
            if touched {
                f(tuple);
            }
            return;
        }
        // At the last slot, an untouched tuple must pick from the frontier.
        let start = if !touched && pos + 1 == tuple.len() {
            frontier_start
        } else {
            0
        };
        for i in start..frontier_end {
            tuple[pos] = elems[i];
            rec(
                elems,
                frontier_start,
                frontier_end,
                pos + 1,
                touched || i >= frontier_start,
                tuple,
                f,
            );
        }
    }
    rec(elems, frontier_start, frontier_end, 0, false, tuple, f);
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// A term over an algebraic signature. Variables are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Term {
    Variable(usize),
    Apply { symbol: String, args: Vec<Term> },
}

impl Term {
    pub fn var(i: usize) -> Term {
        assert!(i >= 1, "variable indices are 1-based");
        Term::Variable(i)
    }

    pub fn apply(symbol: impl Into<String>, args: Vec<Term>) -> Term {
        Term::Apply {
            symbol: symbol.into(),
            args,
        }
    }

    pub fn constant(symbol: impl Into<String>) -> Term {
        Term::apply(symbol, Vec::new())
    }

    fn collect_vars(&self, out: &mut Vec<usize>) {
        match self {
            Term::Variable(i) => out.push(*i),
            Term::Apply { args, .. } => {
                for a in args {
                    a.collect_vars(out);
                }
            }
        }
    }

    pub fn vars(&self) -> Vec<usize> {
        let mut v = Vec::new();
        self.collect_vars(&mut v);
        v.sort_unstable();
        v.dedup();
        v
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Variable(i) => write!(f, "x{i}"),
            Term::Apply { symbol, args } => {
                if args.is_empty() {
                    write!(f, "{symbol}")
                } else {
                    write!(f, "{symbol}(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            write!(f, ",")?;
                        }
                        write!(f, "{a}")?;
                    }
                    write!(f, ")")
                }
            }
        }
    }
}

/// A finite map from variable indices to universe elements.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment(BTreeMap<usize, usize>);

impl Assignment {
    pub fn new() -> Self {
        Assignment(BTreeMap::new())
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        Assignment(pairs.into_iter().collect())
    }

    pub fn set(&mut self, var: usize, value: usize) {
        self.0.insert(var, value);
    }

    pub fn get(&self, var: usize) -> Option<usize> {
        self.0.get(&var).copied()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.0.iter().map(|(&k, &v)| (k, v))
    }
}

/// The quotient of an algebra by a congruence, together with the projection.
/// Classes are indexed in order of least member, so quotients are canonical.
#[derive(Debug, Clone)]
pub struct Quotient {
    pub algebra: FiniteAlgebra,
    /// element of the source -> class index
    pub projection: Vec<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn z2() -> FiniteAlgebra {
        FiniteAlgebra::new(2, vec![Operation::new("add", 2, vec![0, 1, 1, 0])]).unwrap()
    }

    fn left_zero(n: usize) -> FiniteAlgebra {
        let mut table = Vec::new();
        for x in 0..n {
            for _y in 0..n {
                table.push(x);
            }
        }
        FiniteAlgebra::new(n, vec![Operation::new("f", 2, table)]).unwrap()
    }

    fn meet2() -> FiniteAlgebra {
        FiniteAlgebra::new(2, vec![Operation::new("meet", 2, vec![0, 0, 0, 1])]).unwrap()
    }

    #[test]
    fn validation_rejects_bad_tables() {
        let err = FiniteAlgebra::new(2, vec![Operation::new("f", 2, vec![0, 1, 1])]).unwrap_err();
        assert!(matches!(err, Error::InvalidAlgebra(_)));
        let err = FiniteAlgebra::new(2, vec![Operation::new("f", 1, vec![0, 2])]).unwrap_err();
        assert!(matches!(err, Error::InvalidAlgebra(_)));
        let err = FiniteAlgebra::new(
            2,
            vec![
                Operation::new("f", 0, vec![0]),
                Operation::new("f", 0, vec![1]),
            ],
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidAlgebra(_)));
    }

    #[test]
    fn eval_is_projection_on_variables() {
        let alg = z2();
        for a in 0..2 {
            let asg = Assignment::from_pairs([(1, a)]);
            assert_eq!(alg.eval(&Term::var(1), &asg).unwrap(), a);
        }
    }

    #[test]
    fn eval_sum_of_three() {
        let alg = z2();
        let t = Term::apply(
            "add",
            vec![
                Term::var(1),
                Term::apply("add", vec![Term::var(2), Term::var(3)]),
            ],
        );
        let asg = Assignment::from_pairs([(1, 1), (2, 1), (3, 1)]);
        assert_eq!(alg.eval(&t, &asg).unwrap(), 1);
    }

    #[test]
    fn eval_left_zero_is_first_argument() {
        let alg = left_zero(3);
        let t = Term::apply("f", vec![Term::var(1), Term::var(2)]);
        for a in 0..3 {
            for b in 0..3 {
                let asg = Assignment::from_pairs([(1, a), (2, b)]);
                assert_eq!(alg.eval(&t, &asg).unwrap(), a);
            }
        }
    }

    #[test]
    fn eval_error_paths_carry_node_positions() {
        let alg = z2();
        let t = Term::apply("add", vec![Term::var(1), Term::apply("mul", vec![])]);
        match alg.eval(&t, &Assignment::from_pairs([(1, 0)])) {
            Err(Error::UnknownSymbol { symbol, path }) => {
                assert_eq!(symbol, "mul");
                assert_eq!(path, vec![1]);
            }
            other => panic!("expected unknown symbol, got {other:?}"),
        }
        let t = Term::apply("add", vec![Term::var(1)]);
        assert!(matches!(
            alg.eval(&t, &Assignment::from_pairs([(1, 0)])),
            Err(Error::ArityMismatch { .. })
        ));
        let t = Term::var(7);
        assert!(matches!(
            alg.eval(&t, &Assignment::new()),
            Err(Error::UnassignedVariable { index: 7, .. })
        ));
    }

    #[test]
    fn power_of_z2_adds_coordinatewise() {
        let alg = z2();
        let sq = alg.power(2, DEFAULT_POWER_CAP).unwrap();
        assert_eq!(sq.size(), 4);
        // encode(1,0) + encode(0,1) = encode(1,1)
        let e10 = encode_tuple(2, &[1, 0]);
        let e01 = encode_tuple(2, &[0, 1]);
        let e11 = encode_tuple(2, &[1, 1]);
        assert_eq!(sq.apply(0, &[e10, e01]), e11);
    }

    #[test]
    fn power_identity_and_one_element() {
        let alg = z2();
        let p1 = alg.power(1, DEFAULT_POWER_CAP).unwrap();
        assert_eq!(p1, alg);
        let one = FiniteAlgebra::new(1, vec![Operation::new("f", 2, vec![0])]).unwrap();
        let p5 = one.power(5, DEFAULT_POWER_CAP).unwrap();
        assert_eq!(p5.size(), 1);
    }

    #[test]
    fn power_cap_is_a_resource_error() {
        let alg = left_zero(10);
        let err = alg.power(7, 1_000_000).unwrap_err();
        assert!(err.is_resource_cap());
    }

    #[test]
    fn closure_examples() {
        let alg = z2();
        assert_eq!(alg.subuniverse_closure(&[1]).unwrap(), vec![0, 1]);
        assert_eq!(alg.subuniverse_closure(&[0]).unwrap(), vec![0]);
        let free = FiniteAlgebra::new(3, vec![]).unwrap();
        assert_eq!(free.subuniverse_closure(&[2, 0]).unwrap(), vec![0, 2]);
        assert!(matches!(
            free.subuniverse_closure(&[]),
            Err(Error::EmptySubuniverse)
        ));
    }

    #[test]
    fn closure_collects_constants() {
        let alg = FiniteAlgebra::new(
            3,
            vec![
                Operation::new("k", 0, vec![2]),
                Operation::new("f", 1, vec![1, 0, 2]),
            ],
        )
        .unwrap();
        assert_eq!(alg.subuniverse_closure(&[]).unwrap(), vec![2]);
        assert_eq!(alg.subuniverse_closure(&[0]).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn all_subuniverses_of_left_zero_is_every_nonempty_subset() {
        let alg = left_zero(3);
        assert_eq!(alg.all_subuniverses().len(), 7);
        let z = z2();
        // {0} and {0,1}
        assert_eq!(z.all_subuniverses(), vec![vec![0], vec![0, 1]]);
    }

    #[test]
    fn subalgebra_reindexes_tables() {
        let alg = left_zero(3);
        let (sub, back) = alg.subalgebra(&[0, 2]).unwrap();
        assert_eq!(sub.size(), 2);
        assert_eq!(back, vec![0, 2]);
        assert_eq!(sub.apply(0, &[1, 0]), 1);
        assert!(alg.subalgebra(&[0]).is_ok());
        let z = z2();
        assert!(z.subalgebra(&[1]).is_err()); // 1+1=0 escapes
    }

    #[test]
    fn constant_expansion_realizes_translations() {
        let alg = z2();
        let exp = alg.constant_expansion();
        assert_eq!(exp.size(), alg.size());
        assert_eq!(exp.operations().len(), 3);
        // x1 + c1 realizes a |-> a+1
        let t = Term::apply("add", vec![Term::var(1), Term::constant("c1")]);
        for a in 0..2 {
            let asg = Assignment::from_pairs([(1, a)]);
            assert_eq!(exp.eval(&t, &asg).unwrap(), (a + 1) % 2);
        }
    }

    #[test]
    fn constant_symbols_avoid_collisions() {
        let alg = FiniteAlgebra::new(2, vec![Operation::new("c0", 2, vec![0, 0, 0, 0])]).unwrap();
        let exp = alg.constant_expansion();
        assert!(exp.op_index("_c0").is_some());
        assert_eq!(exp.operations().len(), 3);
    }

    #[test]
    fn identities() {
        let alg = z2();
        let xy = Term::apply("add", vec![Term::var(1), Term::var(2)]);
        let yx = Term::apply("add", vec![Term::var(2), Term::var(1)]);
        assert!(alg.satisfies(&xy, &yx).unwrap());

        let lz = left_zero(2);
        let fxy = Term::apply("f", vec![Term::var(1), Term::var(2)]);
        assert!(lz.satisfies(&fxy, &Term::var(1)).unwrap());

        let m = meet2();
        let mxy = Term::apply("meet", vec![Term::var(1), Term::var(2)]);
        let cex = m.identity_counterexample(&mxy, &Term::var(1)).unwrap();
        assert_eq!(cex, Some(Assignment::from_pairs([(1, 1), (2, 0)])));
    }

    #[test]
    fn tuple_encoding_round_trips() {
        for idx in 0..27 {
            let t = decode_tuple(3, 3, idx);
            assert_eq!(encode_tuple(3, &t), idx);
        }
    }
}
