//! Generic fixpoint engine: close a set of fixed-width vectors over `0..n`
//! under pointwise application of an algebra's operations.
//!
//! One engine serves three workloads: clone enumeration (vectors are whole
//! operation tables), the 2x2 matrix sets (width 4), and pair closures
//! (width 2). Points are deduplicated through a bitset over `n^width` codes
//! or, when that space is too large, a hash map keyed by the vector.

use std::collections::HashMap;

use crate::algebra::FiniteAlgebra;
use crate::error::Result;

/// Where a closure point came from: a generator leaf, or an operation applied
/// to earlier points. Children are stored by index so shared subtrees are not
/// copied.
#[derive(Debug, Clone)]
pub(crate) enum Prov<L> {
    Leaf(L),
    Step { op: usize, children: Vec<u32> },
}

pub(crate) struct Closure<L> {
    pub width: usize,
    /// points in insertion order, `width` entries each
    pub flat: Vec<usize>,
    pub provenance: Option<Vec<Prov<L>>>,
    /// true iff the closure reached its fixpoint within the budget
    pub exhausted: bool,
    /// index of the point the visitor stopped on, if any
    pub stopped_at: Option<usize>,
}

impl<L> Closure<L> {
    pub fn len(&self) -> usize {
        self.flat.len().checked_div(self.width).unwrap_or(0)
    }

    pub fn point(&self, i: usize) -> &[usize] {
        &self.flat[i * self.width..(i + 1) * self.width]
    }
}

enum Membership {
    Bits(Vec<u64>),
    Hash(HashMap<Vec<usize>, ()>),
}

impl Membership {
    fn new(n: usize, width: usize, hint: usize) -> Self {
        // 2^26 bits = 8 MiB; beyond that fall back to hashing
        match n.checked_pow(width as u32) {
            Some(space) if space <= (1 << 26) => Membership::Bits(vec![0; space.div_ceil(64)]),
            _ => Membership::Hash(HashMap::with_capacity(hint)),
        }
    }

    /// True iff the point was not seen before (and is now recorded).
    fn insert(&mut self, n: usize, point: &[usize]) -> bool {
        match self {
            Membership::Bits(bits) => {
                let mut code = 0usize;
                for &v in point {
                    code = code * n + v;
                }
                let (w, m) = (code / 64, 1u64 << (code % 64));
                let fresh = bits[w] & m == 0;
                bits[w] |= m;
                fresh
            }
            Membership::Hash(map) => map.insert(point.to_vec(), ()).is_none(),
        }
    }
}

pub(crate) struct CloseOptions {
    pub with_provenance: bool,
    /// soft size budget: when a new point would exceed it the closure stops
    /// with `exhausted = false`
    pub cap: usize,
    /// maximum number of frontier rounds after the generators; None = run to
    /// the fixpoint
    pub max_rounds: Option<usize>,
}

impl Default for CloseOptions {
    fn default() -> Self {
        CloseOptions {
            with_provenance: false,
            cap: usize::MAX,
            max_rounds: None,
        }
    }
}

enum Step {
    Added,
    Duplicate,
    CapHit,
    Stopped,
}

struct Engine<L, V> {
    width: usize,
    n: usize,
    out: Closure<L>,
    member: Membership,
    cap: usize,
    visit: V,
}

impl<L, V: FnMut(usize, &[usize]) -> bool> Engine<L, V> {
    fn push(&mut self, point: &[usize], prov: Prov<L>) -> Step {
        debug_assert_eq!(point.len(), self.width);
        if !self.member.insert(self.n, point) {
            return Step::Duplicate;
        }
        if self.out.len() >= self.cap {
            return Step::CapHit;
        }
        let idx = self.out.len();
        self.out.flat.extend_from_slice(point);
        if let Some(provs) = self.out.provenance.as_mut() {
            provs.push(prov);
        }
        if (self.visit)(idx, self.out.point(idx)) {
            self.out.stopped_at = Some(idx);
            return Step::Stopped;
        }
        Step::Added
    }
}

/// Close `generators` under pointwise application of every operation of
/// `alg`. `visit` sees each distinct point once, in insertion order; returning
/// `true` stops the closure early (recorded in `stopped_at`).
pub(crate) fn close_pointwise<L: Clone>(
    alg: &FiniteAlgebra,
    width: usize,
    generators: Vec<(Vec<usize>, L)>,
    opts: CloseOptions,
    visit: impl FnMut(usize, &[usize]) -> bool,
) -> Result<Closure<L>> {
    let n = alg.size();
    let hint = generators.len() * 2;
    let mut eng = Engine {
        width,
        n,
        out: Closure {
            width,
            flat: Vec::new(),
            provenance: opts.with_provenance.then(Vec::new),
            exhausted: false,
            stopped_at: None,
        },
        member: Membership::new(n, width, hint),
        cap: opts.cap,
        visit,
    };

    for (point, leaf) in generators {
        match eng.push(&point, Prov::Leaf(leaf)) {
            Step::Stopped | Step::CapHit => return Ok(eng.out),
            _ => {}
        }
    }
    // 0-ary operations contribute one constant point each.
    for (op_idx, op) in alg.operations().iter().enumerate() {
        if op.arity == 0 {
            let point = vec![op.table[0]; width];
            match eng.push(
                &point,
                Prov::Step {
                    op: op_idx,
                    children: vec![],
                },
            ) {
                Step::Stopped | Step::CapHit => return Ok(eng.out),
                _ => {}
            }
        }
    }

    let mut frontier_start = 0;
    let mut rounds = 0;
    loop {
        let frontier_end = eng.out.len();
        if frontier_start == frontier_end {
            eng.out.exhausted = true;
            return Ok(eng.out);
        }
        if let Some(max) = opts.max_rounds {
            if rounds >= max {
                return Ok(eng.out);
            }
        }
        rounds += 1;
        let mut scratch = vec![0usize; width];
        for (op_idx, op) in alg.operations().iter().enumerate() {
            let k = op.arity;
            if k == 0 {
                continue;
            }
            let mut idxs = vec![0usize; k];
            if !advance_first(&mut idxs, frontier_start, frontier_end) {
                continue;
            }
            loop {
                for (j, slot) in scratch.iter_mut().enumerate() {
                    let mut code = 0usize;
                    for &c in idxs.iter() {
                        code = code * n + eng.out.flat[c * width + j];
                    }
                    *slot = op.table[code];
                }
                let prov = Prov::Step {
                    op: op_idx,
                    children: idxs.iter().map(|&c| c as u32).collect(),
                };
                match eng.push(&scratch, prov) {
                    Step::Stopped | Step::CapHit => return Ok(eng.out),
                    _ => {}
                }
                if !advance(&mut idxs, frontier_start, frontier_end) {
                    break;
                }
            }
        }
        frontier_start = frontier_end;
    }
}

/// Position `idxs` at the first tuple over `0..end` touching
/// `[start, end)`; returns false if none exists.
fn advance_first(idxs: &mut [usize], start: usize, end: usize) -> bool {
    if end == 0 || (start >= end) {
        return false;
    }
    for v in idxs.iter_mut() {
        *v = 0;
    }
    if let Some(last) = idxs.last_mut() {
        *last = start;
        true
    } else {
        false
    }
}

/// Advance to the next tuple over `0..end` that touches `[start, end)`, in
/// lexicographic order. A tuple "touches" if some coordinate is >= start.
fn advance(idxs: &mut [usize], start: usize, end: usize) -> bool {
    let k = idxs.len();
    let mut pos = k;
    loop {
        if pos == 0 {
            return false;
        }
        pos -= 1;
        idxs[pos] += 1;
        if idxs[pos] < end {
            break;
        }
        idxs[pos] = 0;
    }
    // if no coordinate before the last touches the frontier, the last one must
    if idxs[..k - 1].iter().all(|&i| i < start) && idxs[k - 1] < start {
        idxs[k - 1] = start;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Operation;

    #[test]
    fn touching_tuples_cover_the_product_exactly_once() {
        // simulate two rounds over a 2-ary operation and check coverage
        let mut seen = std::collections::BTreeSet::new();
        let (start, end) = (2, 5);
        let mut idxs = vec![0usize; 2];
        assert!(advance_first(&mut idxs, start, end));
        loop {
            assert!(idxs.iter().any(|&i| i >= start));
            assert!(seen.insert(idxs.clone()));
            if !advance(&mut idxs, start, end) {
                break;
            }
        }
        let expected = end * end - start * start;
        assert_eq!(seen.len(), expected);
    }

    #[test]
    fn closure_of_z2_pairs_reaches_fixpoint() {
        let alg = FiniteAlgebra::new(2, vec![Operation::new("add", 2, vec![0, 1, 1, 0])]).unwrap();
        // width-2 vectors seeded with (0,1): closes to the whole parity-set
        let c = close_pointwise(
            &alg,
            2,
            vec![((vec![0, 1]), ()), ((vec![0, 0]), ()), ((vec![1, 1]), ())],
            CloseOptions::default(),
            |_, _| false,
        )
        .unwrap();
        assert!(c.exhausted);
        assert_eq!(c.len(), 4);
    }
}
