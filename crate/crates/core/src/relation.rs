//! Binary relations over a finite universe, stored as bit matrices, plus the
//! compatible-closure engine used for congruence generation and quasiorders.

use serde::{Deserialize, Serialize};

use crate::algebra::FiniteAlgebra;
use crate::congruence::Congruence;
use crate::error::{Error, Result};
use crate::verdict::{Verdict, Witness};

/// An `n x n` boolean matrix. Row `a`, column `b` set means the pair `(a, b)`
/// is in the relation; for orders we read `(a, b)` as `a >= b`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryRelation {
    n: usize,
    words_per_row: usize,
    bits: Vec<u64>,
}

impl BinaryRelation {
    pub fn empty(n: usize) -> Self {
        let words_per_row = n.div_ceil(64).max(1);
        BinaryRelation {
            n,
            words_per_row,
            bits: vec![0; words_per_row * n],
        }
    }

    pub fn diagonal(n: usize) -> Self {
        let mut r = Self::empty(n);
        for a in 0..n {
            r.insert(a, a);
        }
        r
    }

    pub fn full(n: usize) -> Self {
        let mut r = Self::empty(n);
        for a in 0..n {
            for b in 0..n {
                r.insert(a, b);
            }
        }
        r
    }

    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut r = Self::empty(n);
        for &(a, b) in pairs {
            if a >= n || b >= n {
                return Err(Error::ElementOutOfRange {
                    element: a.max(b),
                    size: n,
                });
            }
            r.insert(a, b);
        }
        Ok(r)
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.bits[a * self.words_per_row + b / 64] & (1 << (b % 64)) != 0
    }

    #[inline]
    pub fn insert(&mut self, a: usize, b: usize) -> bool {
        let w = &mut self.bits[a * self.words_per_row + b / 64];
        let mask = 1 << (b % 64);
        let fresh = *w & mask == 0;
        *w |= mask;
        fresh
    }

    /// Pairs in row-major order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 0..self.n {
            for b in 0..self.n {
                if self.contains(a, b) {
                    out.push((a, b));
                }
            }
        }
        out
    }

    pub fn count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn converse(&self) -> Self {
        let mut r = Self::empty(self.n);
        for a in 0..self.n {
            for b in 0..self.n {
                if self.contains(a, b) {
                    r.insert(b, a);
                }
            }
        }
        r
    }

    pub fn intersect(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let mut r = self.clone();
        for (w, o) in r.bits.iter_mut().zip(other.bits.iter()) {
            *w &= o;
        }
        r
    }

    pub fn union_in_place(&mut self, other: &Self) {
        assert_eq!(self.n, other.n);
        for (w, o) in self.bits.iter_mut().zip(other.bits.iter()) {
            *w |= o;
        }
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.bits
            .iter()
            .zip(other.bits.iter())
            .all(|(w, o)| w & !o == 0)
    }

    /// In-place transitive closure; rows are OR-combined wordwise.
    pub fn transitive_close(&mut self) {
        let wpr = self.words_per_row;
        for k in 0..self.n {
            for a in 0..self.n {
                if a != k && self.contains(a, k) {
                    for w in 0..wpr {
                        let kw = self.bits[k * wpr + w];
                        self.bits[a * wpr + w] |= kw;
                    }
                }
            }
        }
    }

    pub fn reflexive_close(&mut self) {
        for a in 0..self.n {
            self.insert(a, a);
        }
    }

    pub fn symmetric_close(&mut self) {
        let conv = self.converse();
        self.union_in_place(&conv);
    }

    pub fn missing_reflexive(&self) -> Option<usize> {
        (0..self.n).find(|&a| !self.contains(a, a))
    }

    pub fn symmetry_violation(&self) -> Option<(usize, usize)> {
        for a in 0..self.n {
            for b in 0..self.n {
                if self.contains(a, b) && !self.contains(b, a) {
                    return Some((a, b));
                }
            }
        }
        None
    }

    pub fn antisymmetry_violation(&self) -> Option<(usize, usize)> {
        for a in 0..self.n {
            for b in a + 1..self.n {
                if self.contains(a, b) && self.contains(b, a) {
                    return Some((a, b));
                }
            }
        }
        None
    }

    /// Returns `(a, b, c)` with `a ~ b` and `b ~ c` but not `a ~ c`.
    pub fn transitivity_violation(&self) -> Option<(usize, usize, usize)> {
        for a in 0..self.n {
            for b in 0..self.n {
                if !self.contains(a, b) {
                    continue;
                }
                for c in 0..self.n {
                    if self.contains(b, c) && !self.contains(a, c) {
                        return Some((a, b, c));
                    }
                }
            }
        }
        None
    }

    /// First `(operation, lhs, rhs)` where componentwise-related tuples map to
    /// an unrelated pair, in canonical order.
    pub fn compatibility_violation(
        &self,
        alg: &FiniteAlgebra,
    ) -> Option<(String, Vec<usize>, Vec<usize>)> {
        let pairs = self.pairs();
        for (op_idx, op) in alg.operations().iter().enumerate() {
            let k = op.arity;
            if k == 0 {
                let v = alg.apply(op_idx, &[]);
                if !self.contains(v, v) {
                    return Some((op.symbol.clone(), vec![], vec![]));
                }
                continue;
            }
            if pairs.is_empty() {
                continue;
            }
            let mut idxs = vec![0usize; k];
            let mut lhs = vec![0usize; k];
            let mut rhs = vec![0usize; k];
            'tuples: loop {
                for (j, &i) in idxs.iter().enumerate() {
                    lhs[j] = pairs[i].0;
                    rhs[j] = pairs[i].1;
                }
                let va = alg.apply(op_idx, &lhs);
                let vb = alg.apply(op_idx, &rhs);
                if !self.contains(va, vb) {
                    return Some((op.symbol.clone(), lhs, rhs));
                }
                let mut pos = k;
                loop {
                    if pos == 0 {
                        break 'tuples;
                    }
                    pos -= 1;
                    idxs[pos] += 1;
                    if idxs[pos] < pairs.len() {
                        break;
                    }
                    idxs[pos] = 0;
                }
            }
        }
        None
    }
}

/// The structural kinds `validate` can assert.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelationKind {
    Equivalence,
    Congruence,
    Quasiorder,
    PartialOrder,
    Tolerance,
}

impl RelationKind {
    pub fn name(&self) -> &'static str {
        match self {
            RelationKind::Equivalence => "equivalence",
            RelationKind::Congruence => "congruence",
            RelationKind::Quasiorder => "quasiorder",
            RelationKind::PartialOrder => "partial-order",
            RelationKind::Tolerance => "tolerance",
        }
    }

    fn needs_symmetric(&self) -> bool {
        matches!(
            self,
            RelationKind::Equivalence | RelationKind::Congruence | RelationKind::Tolerance
        )
    }

    fn needs_transitive(&self) -> bool {
        !matches!(self, RelationKind::Tolerance)
    }

    fn needs_antisymmetric(&self) -> bool {
        matches!(self, RelationKind::PartialOrder)
    }

    fn needs_compatible(&self) -> bool {
        !matches!(self, RelationKind::Equivalence)
    }
}

/// Check that `r` is a relation of the given kind over `alg`, returning a
/// minimal witness on failure.
pub fn validate(alg: &FiniteAlgebra, r: &BinaryRelation, kind: RelationKind) -> Result<Verdict> {
    if r.size() != alg.size() {
        return Err(Error::SizeMismatch {
            relation: r.size(),
            algebra: alg.size(),
        });
    }
    if let Some(a) = r.missing_reflexive() {
        return Ok(Verdict::fails(
            Witness::MissingReflexive { element: a },
            format!("not reflexive: ({a},{a}) missing"),
        ));
    }
    if kind.needs_symmetric() {
        if let Some((a, b)) = r.symmetry_violation() {
            return Ok(Verdict::fails(
                Witness::Pair { a, b },
                format!("not symmetric: ({a},{b}) present, ({b},{a}) missing"),
            ));
        }
    }
    if kind.needs_antisymmetric() {
        if let Some((a, b)) = r.antisymmetry_violation() {
            return Ok(Verdict::fails(
                Witness::Pair { a, b },
                format!("not antisymmetric: both ({a},{b}) and ({b},{a}) present"),
            ));
        }
    }
    if kind.needs_transitive() {
        if let Some((a, b, c)) = r.transitivity_violation() {
            return Ok(Verdict::fails(
                Witness::Pair { a, b: c },
                format!("not transitive: ({a},{b}) and ({b},{c}) present, ({a},{c}) missing"),
            ));
        }
    }
    if kind.needs_compatible() {
        if let Some((symbol, lhs, rhs)) = r.compatibility_violation(alg) {
            let note = format!(
                "not compatible: `{symbol}` maps related tuples {lhs:?} ~ {rhs:?} to an unrelated pair"
            );
            return Ok(Verdict::fails(
                Witness::Compatibility { symbol, lhs, rhs },
                note,
            ));
        }
    }
    Ok(Verdict::holds(format!("valid {}", kind.name())))
}

/// Which closure properties `compatible_closure` enforces besides being a
/// subuniverse of the square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClosureFlags {
    pub reflexive: bool,
    pub symmetric: bool,
    pub transitive: bool,
}

impl ClosureFlags {
    pub const EQUIVALENCE: ClosureFlags = ClosureFlags {
        reflexive: true,
        symmetric: true,
        transitive: true,
    };
    pub const QUASIORDER: ClosureFlags = ClosureFlags {
        reflexive: true,
        symmetric: false,
        transitive: true,
    };
}

/// Least relation containing `seed` that is a subuniverse of `alg`² and has
/// the flagged properties. Interleaved fixpoint: operation application on
/// pairs alternates with the flagged closures until stable.
pub fn compatible_closure(
    alg: &FiniteAlgebra,
    seed: &[(usize, usize)],
    flags: ClosureFlags,
) -> Result<BinaryRelation> {
    let n = alg.size();
    let mut rel = BinaryRelation::from_pairs(n, seed)?;
    if flags.reflexive {
        rel.reflexive_close();
    }
    loop {
        let mut changed = false;
        if flags.symmetric {
            let before = rel.clone();
            rel.symmetric_close();
            changed |= rel != before;
        }
        if flags.transitive {
            let before = rel.clone();
            rel.transitive_close();
            changed |= rel != before;
        }
        // One full pass of operation application on pairs.
        let pairs = rel.pairs();
        for (op_idx, op) in alg.operations().iter().enumerate() {
            let k = op.arity;
            if k == 0 {
                let v = alg.apply(op_idx, &[]);
                changed |= rel.insert(v, v);
                continue;
            }
            if pairs.is_empty() {
                continue;
            }
            let mut lhs = vec![0usize; k];
            let mut rhs = vec![0usize; k];
            let mut idxs = vec![0usize; k];
            'tuples: loop {
                for (j, &i) in idxs.iter().enumerate() {
                    lhs[j] = pairs[i].0;
                    rhs[j] = pairs[i].1;
                }
                let va = alg.apply(op_idx, &lhs);
                let vb = alg.apply(op_idx, &rhs);
                changed |= rel.insert(va, vb);
                let mut pos = k;
                loop {
                    if pos == 0 {
                        break 'tuples;
                    }
                    pos -= 1;
                    idxs[pos] += 1;
                    if idxs[pos] < pairs.len() {
                        break;
                    }
                    idxs[pos] = 0;
                }
            }
        }
        if !changed {
            return Ok(rel);
        }
    }
}

/// `r ∩ rᵀ`. For a compatible quasiorder the result is an equivalence that
/// validates as a congruence.
pub fn intersect_with_converse(r: &BinaryRelation) -> BinaryRelation {
    r.intersect(&r.converse())
}

/// Quotient a θ-saturated relation to θ-classes. Fails with a witness pair if
/// relating representatives does not relate whole classes.
pub fn quotient_relation(r: &BinaryRelation, theta: &Congruence) -> Result<BinaryRelation> {
    let n = r.size();
    if theta.size() != n {
        return Err(Error::SizeMismatch {
            relation: n,
            algebra: theta.size(),
        });
    }
    for a in 0..n {
        for b in 0..n {
            if !r.contains(a, b) {
                continue;
            }
            for &a2 in theta.block_of(a) {
                for &b2 in theta.block_of(b) {
                    if !r.contains(a2, b2) {
                        return Err(Error::NotSaturated { a, b, c: a2, d: b2 });
                    }
                }
            }
        }
    }
    let m = theta.num_classes();
    let mut out = BinaryRelation::empty(m);
    for a in 0..n {
        for b in 0..n {
            if r.contains(a, b) {
                out.insert(theta.class_of(a), theta.class_of(b));
            }
        }
    }
    Ok(out)
}
