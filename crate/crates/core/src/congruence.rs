//! Congruences as canonical partitions, principal-congruence generation by
//! two independent algorithms, and enumeration of the whole congruence
//! lattice.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::algebra::FiniteAlgebra;
use crate::clones;
use crate::error::{Error, Result};
use crate::relation::{self, BinaryRelation, ClosureFlags};

/// A partition of `0..size` in canonical form: classes are numbered in order
/// of their least member, blocks and block members are sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<usize>>", into = "Vec<Vec<usize>>")]
pub struct Congruence {
    class_of: Vec<usize>,
    blocks: Vec<Vec<usize>>,
}

impl Congruence {
    pub fn identity(n: usize) -> Self {
        Congruence {
            class_of: (0..n).collect(),
            blocks: (0..n).map(|a| vec![a]).collect(),
        }
    }

    pub fn full(n: usize) -> Self {
        Congruence {
            class_of: vec![0; n],
            blocks: vec![(0..n).collect()],
        }
    }

    /// Build from an arbitrary class-index vector, renumbering canonically.
    pub fn from_class_vec(raw: &[usize]) -> Self {
        let n = raw.len();
        let mut remap = vec![usize::MAX; n.max(raw.iter().map(|&c| c + 1).max().unwrap_or(0))];
        let mut class_of = vec![0usize; n];
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for (e, &c) in raw.iter().enumerate() {
            if remap[c] == usize::MAX {
                remap[c] = blocks.len();
                blocks.push(Vec::new());
            }
            class_of[e] = remap[c];
            blocks[remap[c]].push(e);
        }
        Congruence { class_of, blocks }
    }

    /// Build from explicit blocks; they must partition `0..n` exactly.
    pub fn from_blocks(blocks: Vec<Vec<usize>>) -> Result<Self> {
        let n: usize = blocks.iter().map(|b| b.len()).sum();
        let mut class_of = vec![usize::MAX; n];
        for (c, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::InvalidPartition("empty block".into()));
            }
            for &e in block {
                if e >= n {
                    return Err(Error::InvalidPartition(format!(
                        "element {e} out of range for {n} elements"
                    )));
                }
                if class_of[e] != usize::MAX {
                    return Err(Error::InvalidPartition(format!(
                        "element {e} occurs in two blocks"
                    )));
                }
                class_of[e] = c;
            }
        }
        Ok(Self::from_class_vec(&class_of))
    }

    /// Build from an equivalence relation; rejects non-equivalences.
    pub fn from_relation(r: &BinaryRelation) -> Result<Self> {
        if let Some(a) = r.missing_reflexive() {
            return Err(Error::InvalidPartition(format!("({a},{a}) missing")));
        }
        if let Some((a, b)) = r.symmetry_violation() {
            return Err(Error::InvalidPartition(format!(
                "({a},{b}) present without ({b},{a})"
            )));
        }
        if let Some((a, b, c)) = r.transitivity_violation() {
            return Err(Error::InvalidPartition(format!(
                "({a},{b}),({b},{c}) present without ({a},{c})"
            )));
        }
        let n = r.size();
        let mut class_of = vec![usize::MAX; n];
        let mut next = 0;
        for a in 0..n {
            if class_of[a] != usize::MAX {
                continue;
            }
            for (b, slot) in class_of.iter_mut().enumerate().skip(a) {
                if r.contains(a, b) {
                    *slot = next;
                }
            }
            next += 1;
        }
        Ok(Self::from_class_vec(&class_of))
    }

    pub fn size(&self) -> usize {
        self.class_of.len()
    }

    pub fn num_classes(&self) -> usize {
        self.blocks.len()
    }

    pub fn class_of(&self, e: usize) -> usize {
        self.class_of[e]
    }

    pub fn classes(&self) -> &[usize] {
        &self.class_of
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_of(&self, e: usize) -> &[usize] {
        &self.blocks[self.class_of[e]]
    }

    pub fn related(&self, a: usize, b: usize) -> bool {
        self.class_of[a] == self.class_of[b]
    }

    pub fn is_identity(&self) -> bool {
        self.num_classes() == self.size()
    }

    pub fn is_full(&self) -> bool {
        self.num_classes() == 1
    }

    pub fn as_relation(&self) -> BinaryRelation {
        let n = self.size();
        let mut r = BinaryRelation::empty(n);
        for block in &self.blocks {
            for &a in block {
                for &b in block {
                    r.insert(a, b);
                }
            }
        }
        r
    }

    /// `self ⊆ other` as relations.
    pub fn refines(&self, other: &Congruence) -> bool {
        (0..self.size()).all(|e| {
            let b = self.block_of(e);
            b.iter().all(|&x| other.related(e, x))
        })
    }

    /// Join in the partition lattice: transitive closure of the union. The
    /// join of two congruences of the same algebra is again a congruence.
    pub fn join(&self, other: &Congruence) -> Congruence {
        let mut uf = UnionFind::new(self.size());
        for block in self.blocks.iter().chain(other.blocks.iter()) {
            for w in block.windows(2) {
                uf.union(w[0], w[1]);
            }
        }
        uf.into_congruence()
    }

    /// Meet: intersection of the two equivalences.
    pub fn meet(&self, other: &Congruence) -> Congruence {
        let n = self.size();
        let mut key: Vec<(usize, usize)> = (0..n)
            .map(|e| (self.class_of[e], other.class_of(e)))
            .collect();
        let mut distinct: Vec<(usize, usize)> = key.clone();
        distinct.sort_unstable();
        distinct.dedup();
        for k in key.iter_mut() {
            *k = (distinct.binary_search(k).unwrap(), 0);
        }
        Congruence::from_class_vec(&key.iter().map(|k| k.0).collect::<Vec<_>>())
    }

    /// View `self` as a congruence of the quotient by `theta`; requires
    /// `theta ⊆ self`.
    pub fn quotient_by(&self, theta: &Congruence) -> Result<Congruence> {
        if !theta.refines(self) {
            return Err(Error::InvalidPartition(
                "quotient_by requires the modulus to refine the congruence".into(),
            ));
        }
        let m = theta.num_classes();
        let mut raw = vec![0usize; m];
        for (c, block) in theta.blocks().iter().enumerate() {
            raw[c] = self.class_of(block[0]);
        }
        Ok(Congruence::from_class_vec(&raw))
    }
}

impl fmt::Display for Congruence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, block) in self.blocks.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "[")?;
            for (j, e) in block.iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{e}")?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

impl TryFrom<Vec<Vec<usize>>> for Congruence {
    type Error = Error;
    fn try_from(blocks: Vec<Vec<usize>>) -> Result<Self> {
        Congruence::from_blocks(blocks)
    }
}

impl From<Congruence> for Vec<Vec<usize>> {
    fn from(c: Congruence) -> Self {
        c.blocks
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut a: usize) -> usize {
        while self.parent[a] != a {
            self.parent[a] = self.parent[self.parent[a]];
            a = self.parent[a];
        }
        a
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // root at the smaller element keeps numbering canonical
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }

    fn into_congruence(mut self) -> Congruence {
        let n = self.parent.len();
        let roots: Vec<usize> = (0..n).map(|a| self.find(a)).collect();
        Congruence::from_class_vec(&roots)
    }
}

/// Which of the two congruence-generation algorithms to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CongruenceAlgorithm {
    /// Compatible closure of the generating pairs with all three equivalence
    /// flags.
    Relational,
    /// Close the generating pairs under all unary polynomials, then take the
    /// reflexive-symmetric-transitive closure; iterate to a fixpoint.
    MaltsevChain,
}

/// Least congruence containing `pairs`.
pub fn congruence_generated(
    alg: &FiniteAlgebra,
    pairs: &[(usize, usize)],
    algorithm: CongruenceAlgorithm,
) -> Result<Congruence> {
    match algorithm {
        CongruenceAlgorithm::Relational => {
            let rel = relation::compatible_closure(alg, pairs, ClosureFlags::EQUIVALENCE)?;
            Congruence::from_relation(&rel)
        }
        CongruenceAlgorithm::MaltsevChain => {
            let n = alg.size();
            for &(a, b) in pairs {
                if a >= n || b >= n {
                    return Err(Error::ElementOutOfRange {
                        element: a.max(b),
                        size: n,
                    });
                }
            }
            let pol1 = clones::unary_polynomials(alg, false);
            let mut current: Vec<(usize, usize)> = pairs.to_vec();
            let mut cong = Congruence::identity(n);
            loop {
                let mut uf = UnionFind::new(n);
                for block in cong.blocks() {
                    for w in block.windows(2) {
                        uf.union(w[0], w[1]);
                    }
                }
                for f in pol1.maps() {
                    for &(x, y) in &current {
                        uf.union(f.table()[x], f.table()[y]);
                    }
                }
                let next = uf.into_congruence();
                if next == cong {
                    return Ok(cong);
                }
                // feed every related pair back through the polynomials
                current = next
                    .blocks()
                    .iter()
                    .flat_map(|b| {
                        b.iter()
                            .flat_map(|&x| b.iter().map(move |&y| (x, y)))
                            .collect::<Vec<_>>()
                    })
                    .collect();
                cong = next;
            }
        }
    }
}

/// The principal congruence `Cg(a, b)` via the relational algorithm.
pub fn principal_congruence(alg: &FiniteAlgebra, a: usize, b: usize) -> Result<Congruence> {
    congruence_generated(alg, &[(a, b)], CongruenceAlgorithm::Relational)
}

/// Validate a congruence against an algebra, with a compatibility witness in
/// the error.
pub fn validate_congruence(alg: &FiniteAlgebra, theta: &Congruence) -> Result<()> {
    if theta.size() != alg.size() {
        return Err(Error::SizeMismatch {
            relation: theta.size(),
            algebra: alg.size(),
        });
    }
    if let Some((symbol, lhs, rhs)) = theta.as_relation().compatibility_violation(alg) {
        return Err(Error::NotACongruence { symbol, lhs, rhs });
    }
    Ok(())
}

/// The quotient by a validated congruence, with classes ordered by least
/// member so quotients are canonical.
pub fn quotient_algebra(
    alg: &FiniteAlgebra,
    theta: &Congruence,
) -> Result<crate::algebra::Quotient> {
    validate_congruence(alg, theta)?;
    let m = theta.num_classes();
    let mut operations = Vec::with_capacity(alg.operations().len());
    for (op_idx, op) in alg.operations().iter().enumerate() {
        let mut table = Vec::with_capacity(m.pow(op.arity as u32));
        let mut rep_args = vec![0usize; op.arity];
        for args in crate::algebra::tuples(m, op.arity) {
            for (slot, &class) in rep_args.iter_mut().zip(args.iter()) {
                *slot = theta.blocks()[class][0];
            }
            table.push(theta.class_of(alg.apply(op_idx, &rep_args)));
        }
        operations.push(crate::algebra::Operation::new(
            op.symbol.clone(),
            op.arity,
            table,
        ));
    }
    Ok(crate::algebra::Quotient {
        algebra: FiniteAlgebra::new(m, operations)?,
        projection: theta.classes().to_vec(),
    })
}

/// The whole congruence lattice, canonically ordered (identity first, full
/// last), generated as the join closure of the principal congruences.
pub fn all_congruences(alg: &FiniteAlgebra, cap: usize) -> Result<Vec<Congruence>> {
    let n = alg.size();
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut out: Vec<Congruence> = Vec::new();
    let mut queue: Vec<Congruence> = Vec::new();
    let mut push = |c: Congruence, out: &mut Vec<Congruence>, queue: &mut Vec<Congruence>| {
        if seen.insert(c.classes().to_vec()) {
            out.push(c.clone());
            queue.push(c);
        }
    };
    push(Congruence::identity(n), &mut out, &mut queue);
    for a in 0..n {
        for b in a + 1..n {
            push(principal_congruence(alg, a, b)?, &mut out, &mut queue);
            if out.len() > cap {
                return Err(Error::ResourceCap {
                    what: "enumerating the congruence lattice".into(),
                    needed: out.len(),
                    cap,
                });
            }
        }
    }
    let mut cursor = 0;
    while cursor < queue.len() {
        let current = queue[cursor].clone();
        cursor += 1;
        let snapshot = out.clone();
        for other in snapshot {
            let j = current.join(&other);
            push(j, &mut out, &mut queue);
            if out.len() > cap {
                return Err(Error::ResourceCap {
                    what: "enumerating the congruence lattice".into(),
                    needed: out.len(),
                    cap,
                });
            }
        }
    }
    out.sort_by(|a, b| {
        b.num_classes()
            .cmp(&a.num_classes())
            .then_with(|| a.classes().cmp(b.classes()))
    });
    Ok(out)
}
