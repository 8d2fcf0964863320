//! The 2x2 matrix set of polynomial applications, and every term-condition
//! predicate built on it: abelian, strongly rectangular, strongly abelian,
//! rectangularity with respect to an order, the relativized term condition,
//! strongly abelian congruences, strong solvability, affineness, and the
//! zero-preservation property.
//!
//! A matrix here is a 2x2 array of values `[[p, q], [r, s]]` obtained by
//! evaluating one polynomial on two row tuples crossed with two column
//! tuples. The full set of such matrices is computed as a generated
//! subuniverse of the fourth power: row generators `[[a,a],[b,b]]` and column
//! generators `[[u,v],[u,v]]`, closed under entrywise operations. A short
//! structural induction shows the closure is exactly the set of polynomial
//! matrices; the test suite re-checks both inclusions against a brute-force
//! polynomial enumeration.
//!
//! Witness scans run over matrices in descending encoded order, one
//! implication form at a time, so reported counterexamples are canonical.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::algebra::{constant_symbol, Assignment, FiniteAlgebra, Term};
use crate::clones::{self, Derivation, MaltsevMode};
use crate::closure::{close_pointwise, CloseOptions, Closure, Prov};
use crate::congruence::{self, Congruence};
use crate::error::{Error, Result};
use crate::relation::{self, BinaryRelation, ClosureFlags, RelationKind};
use crate::verdict::{Verdict, Witness};

/// A 2x2 value matrix: p top-left, q top-right, r bottom-left, s bottom-right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Matrix2x2 {
    pub p: usize,
    pub q: usize,
    pub r: usize,
    pub s: usize,
}

impl Matrix2x2 {
    pub fn new(p: usize, q: usize, r: usize, s: usize) -> Self {
        Matrix2x2 { p, q, r, s }
    }

    pub fn from_slice(v: &[usize]) -> Self {
        Matrix2x2 {
            p: v[0],
            q: v[1],
            r: v[2],
            s: v[3],
        }
    }

    pub fn entries(&self) -> [usize; 4] {
        [self.p, self.q, self.r, self.s]
    }

    pub fn encode(&self, n: usize) -> u64 {
        (((self.p as u64 * n as u64) + self.q as u64) * n as u64 + self.r as u64) * n as u64
            + self.s as u64
    }

    pub fn row_swap(&self) -> Self {
        Matrix2x2::new(self.r, self.s, self.p, self.q)
    }

    pub fn col_swap(&self) -> Self {
        Matrix2x2::new(self.q, self.p, self.s, self.r)
    }

    pub fn transpose(&self) -> Self {
        Matrix2x2::new(self.p, self.r, self.q, self.s)
    }
}

impl fmt::Display for Matrix2x2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{},{}],[{},{}]]", self.p, self.q, self.r, self.s)
    }
}

/// Generator leaves of a matrix derivation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MatrixLeaf {
    /// `[[a,a],[b,b]]`: one coordinate of the row tuples
    Row { top: usize, bottom: usize },
    /// `[[u,v],[u,v]]`: one coordinate of the column tuples
    Col { left: usize, right: usize },
}

impl MatrixLeaf {
    pub fn matrix(&self) -> Matrix2x2 {
        match *self {
            MatrixLeaf::Row { top, bottom } => Matrix2x2::new(top, top, bottom, bottom),
            MatrixLeaf::Col { left, right } => Matrix2x2::new(left, right, left, right),
        }
    }
}

/// Generator leaves of the zero-preservation pair closure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PairLeaf {
    /// `(a, a)`: a constant position of the polynomial
    Diagonal(usize),
    /// `(s, zero)`: a substituted variable position
    Substituted(usize),
}

/// The closed set of 2x2 matrices for one pair of row/column constraints.
#[derive(Debug, Clone)]
pub struct MatrixSet {
    size: usize,
    matrices: Vec<Matrix2x2>,
    codes: HashSet<u64>,
    provenance: Option<Vec<Prov<MatrixLeaf>>>,
    op_symbols: Vec<String>,
    row_constraint: Congruence,
    col_constraint: Congruence,
}

impl MatrixSet {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn matrices(&self) -> &[Matrix2x2] {
        &self.matrices
    }

    pub fn contains(&self, m: &Matrix2x2) -> bool {
        self.codes.contains(&m.encode(self.size))
    }

    pub fn row_constraint(&self) -> &Congruence {
        &self.row_constraint
    }

    pub fn col_constraint(&self) -> &Congruence {
        &self.col_constraint
    }

    /// Matrix indices sorted by descending encoded value; witness scans use
    /// this order.
    pub fn indices_desc(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.matrices.len()).collect();
        idx.sort_by_key(|&i| std::cmp::Reverse(self.matrices[i].encode(self.size)));
        idx
    }

    pub fn derivation(&self, i: usize) -> Option<Derivation<MatrixLeaf>> {
        let provs = self.provenance.as_ref()?;
        Some(self.build_tree(provs, i))
    }

    fn build_tree(&self, provs: &[Prov<MatrixLeaf>], i: usize) -> Derivation<MatrixLeaf> {
        match &provs[i] {
            Prov::Leaf(l) => Derivation::Leaf(*l),
            Prov::Step { op, children } => Derivation::Apply {
                symbol: self.op_symbols[*op].clone(),
                args: children
                    .iter()
                    .map(|&c| self.build_tree(provs, c as usize))
                    .collect(),
            },
        }
    }

    /// The set is closed under row swap and column swap; under transpose as
    /// well whenever the two constraints coincide.
    fn assert_symmetries(&self) -> Result<()> {
        for m in &self.matrices {
            if !self.contains(&m.row_swap()) || !self.contains(&m.col_swap()) {
                return Err(Error::InternalInvariant(format!(
                    "matrix set not closed under row/column swap at {m}"
                )));
            }
            if self.row_constraint == self.col_constraint && !self.contains(&m.transpose()) {
                return Err(Error::InternalInvariant(format!(
                    "matrix set not closed under transpose at {m}"
                )));
            }
        }
        Ok(())
    }
}

fn matrix_generators(
    row_constraint: &Congruence,
    col_constraint: &Congruence,
) -> Vec<(Vec<usize>, MatrixLeaf)> {
    let n = row_constraint.size();
    let mut gens = Vec::new();
    for a in 0..n {
        for &b in row_constraint.block_of(a) {
            gens.push((vec![a, a, b, b], MatrixLeaf::Row { top: a, bottom: b }));
        }
    }
    for u in 0..n {
        for &v in col_constraint.block_of(u) {
            gens.push((vec![u, v, u, v], MatrixLeaf::Col { left: u, right: v }));
        }
    }
    gens
}

fn close_matrices(
    alg: &FiniteAlgebra,
    row_constraint: &Congruence,
    col_constraint: &Congruence,
    with_derivations: bool,
    stop: impl FnMut(&Matrix2x2) -> bool,
) -> Result<(MatrixSet, Option<usize>)> {
    let n = alg.size();
    if row_constraint.size() != n || col_constraint.size() != n {
        return Err(Error::SizeMismatch {
            relation: row_constraint.size().min(col_constraint.size()),
            algebra: n,
        });
    }
    let mut stop = stop;
    let closure: Closure<MatrixLeaf> = close_pointwise(
        alg,
        4,
        matrix_generators(row_constraint, col_constraint),
        CloseOptions {
            with_provenance: with_derivations,
            cap: usize::MAX,
            max_rounds: None,
        },
        |_, point| stop(&Matrix2x2::from_slice(point)),
    )?;
    let matrices: Vec<Matrix2x2> = (0..closure.len())
        .map(|i| Matrix2x2::from_slice(closure.point(i)))
        .collect();
    let codes = matrices.iter().map(|m| m.encode(n)).collect();
    let set = MatrixSet {
        size: n,
        matrices,
        codes,
        provenance: closure.provenance,
        op_symbols: alg.operations().iter().map(|o| o.symbol.clone()).collect(),
        row_constraint: row_constraint.clone(),
        col_constraint: col_constraint.clone(),
    };
    Ok((set, closure.stopped_at))
}

/// The matrix set for the given row/column constraints; the full constraints
/// on both sides give the plain matrix set of the algebra.
pub fn matrix_set(
    alg: &FiniteAlgebra,
    row_constraint: &Congruence,
    col_constraint: &Congruence,
    with_derivations: bool,
) -> Result<MatrixSet> {
    let (set, _) = close_matrices(
        alg,
        row_constraint,
        col_constraint,
        with_derivations,
        |_| false,
    )?;
    set.assert_symmetries()?;
    Ok(set)
}

/// Convenience: the unconstrained matrix set.
pub fn full_matrix_set(alg: &FiniteAlgebra, with_derivations: bool) -> Result<MatrixSet> {
    let full = Congruence::full(alg.size());
    matrix_set(alg, &full, &full, with_derivations)
}

/// Re-evaluate a matrix derivation entrywise, independently of the closure.
pub fn replay_matrix_derivation(
    alg: &FiniteAlgebra,
    d: &Derivation<MatrixLeaf>,
) -> Result<Matrix2x2> {
    match d {
        Derivation::Leaf(l) => Ok(l.matrix()),
        Derivation::Apply { symbol, args } => {
            let op_idx = alg.op_index(symbol).ok_or_else(|| Error::UnknownSymbol {
                symbol: symbol.clone(),
                path: vec![],
            })?;
            let children: Vec<Matrix2x2> = args
                .iter()
                .map(|a| replay_matrix_derivation(alg, a))
                .collect::<Result<_>>()?;
            let mut out = [0usize; 4];
            for (j, slot) in out.iter_mut().enumerate() {
                let vals: Vec<usize> = children.iter().map(|c| c.entries()[j]).collect();
                *slot = alg.apply(op_idx, &vals);
            }
            Ok(Matrix2x2::from_slice(&out))
        }
    }
}

/// The row and column tuples named by a derivation's leaves, in depth-first
/// order: rows give the two outer argument tuples, columns the two inner ones.
#[allow(clippy::type_complexity)]
pub fn derivation_tuples(d: &Derivation<MatrixLeaf>) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
    fn walk(
        d: &Derivation<MatrixLeaf>,
        rows: &mut Vec<(usize, usize)>,
        cols: &mut Vec<(usize, usize)>,
    ) {
        match d {
            Derivation::Leaf(MatrixLeaf::Row { top, bottom }) => rows.push((*top, *bottom)),
            Derivation::Leaf(MatrixLeaf::Col { left, right }) => cols.push((*left, *right)),
            Derivation::Apply { args, .. } => {
                for a in args {
                    walk(a, rows, cols);
                }
            }
        }
    }
    let (mut rows, mut cols) = (Vec::new(), Vec::new());
    walk(d, &mut rows, &mut cols);
    (rows, cols)
}

/// Check that a matrix derivation is a genuine polynomial instance: render it
/// as a term with one variable per leaf, evaluate the term under the four
/// row/column substitutions through the ordinary term evaluator, and compare
/// with the expected matrix. This route is independent of the closure engine.
pub fn verify_matrix_derivation_as_polynomial(
    alg: &FiniteAlgebra,
    d: &Derivation<MatrixLeaf>,
    expected: &Matrix2x2,
) -> Result<bool> {
    enum Slot {
        Row(usize, usize),
        Col(usize, usize),
    }
    fn to_term(d: &Derivation<MatrixLeaf>, slots: &mut Vec<Slot>) -> Term {
        match d {
            Derivation::Leaf(MatrixLeaf::Row { top, bottom }) => {
                slots.push(Slot::Row(*top, *bottom));
                Term::var(slots.len())
            }
            Derivation::Leaf(MatrixLeaf::Col { left, right }) => {
                slots.push(Slot::Col(*left, *right));
                Term::var(slots.len())
            }
            Derivation::Apply { symbol, args } => Term::apply(
                symbol.clone(),
                args.iter().map(|a| to_term(a, slots)).collect(),
            ),
        }
    }
    let mut slots = Vec::new();
    let term = to_term(d, &mut slots);
    let eval = |row_top: bool, col_left: bool| -> Result<usize> {
        let asg = Assignment::from_pairs(slots.iter().enumerate().map(|(i, slot)| {
            let v = match slot {
                Slot::Row(t, b) => {
                    if row_top {
                        *t
                    } else {
                        *b
                    }
                }
                Slot::Col(l, r) => {
                    if col_left {
                        *l
                    } else {
                        *r
                    }
                }
            };
            (i + 1, v)
        }));
        alg.eval(&term, &asg)
    };
    let got = Matrix2x2::new(
        eval(true, true)?,
        eval(true, false)?,
        eval(false, true)?,
        eval(false, false)?,
    );
    Ok(got == *expected)
}

/// The three equality-based matrix conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixCondition {
    Abelian,
    StronglyRectangular,
    StronglyAbelian,
}

impl MatrixCondition {
    pub fn name(&self) -> &'static str {
        match self {
            MatrixCondition::Abelian => "abelian",
            MatrixCondition::StronglyRectangular => "strongly-rectangular",
            MatrixCondition::StronglyAbelian => "strongly-abelian",
        }
    }

    /// Scan forms in a fixed order; each form is checked over the whole set
    /// before the next one, so witnesses are deterministic.
    fn forms(&self) -> &'static [ImplicationForm] {
        match self {
            MatrixCondition::Abelian => &[ImplicationForm::Rows, ImplicationForm::Columns],
            MatrixCondition::StronglyRectangular => &[ImplicationForm::Cross],
            MatrixCondition::StronglyAbelian => &[
                ImplicationForm::Rows,
                ImplicationForm::Columns,
                ImplicationForm::Cross,
            ],
        }
    }

    /// Any form violated on one matrix (used by early-exit boolean checks).
    fn violated_by(&self, m: &Matrix2x2) -> bool {
        self.forms().iter().any(|f| f.violated_strict(m))
    }
}

#[derive(Debug, Clone, Copy)]
enum ImplicationForm {
    /// p = q implies r = s
    Rows,
    /// p = r implies q = s
    Columns,
    /// q = r implies r = s
    Cross,
}

impl ImplicationForm {
    fn label(&self) -> &'static str {
        match self {
            ImplicationForm::Rows => "p=q implies r=s",
            ImplicationForm::Columns => "p=r implies q=s",
            ImplicationForm::Cross => "q=r implies r=s",
        }
    }

    fn violated_strict(&self, m: &Matrix2x2) -> bool {
        match self {
            ImplicationForm::Rows => m.p == m.q && m.r != m.s,
            ImplicationForm::Columns => m.p == m.r && m.q != m.s,
            ImplicationForm::Cross => m.q == m.r && m.r != m.s,
        }
    }

    fn violated_mod(&self, m: &Matrix2x2, theta: &Congruence) -> bool {
        match self {
            ImplicationForm::Rows => theta.related(m.p, m.q) && !theta.related(m.r, m.s),
            ImplicationForm::Columns => theta.related(m.p, m.r) && !theta.related(m.q, m.s),
            ImplicationForm::Cross => theta.related(m.q, m.r) && !theta.related(m.r, m.s),
        }
    }
}

fn scan_for_violation(
    set: &MatrixSet,
    forms: &[ImplicationForm],
    violated: impl Fn(&ImplicationForm, &Matrix2x2) -> bool,
) -> Option<(usize, &'static str)> {
    let order = set.indices_desc();
    for form in forms {
        for &i in &order {
            if violated(form, &set.matrices()[i]) {
                return Some((i, form.label()));
            }
        }
    }
    None
}

fn matrix_witness(set: &MatrixSet, idx: usize, violated: &str) -> Witness {
    Witness::Matrix {
        matrix: set.matrices()[idx],
        derivation: set.derivation(idx),
        violated: violated.to_string(),
    }
}

/// Evaluate one of the equality-based matrix conditions over the full matrix
/// set, with a derivation-carrying witness on failure.
pub fn check_matrix_condition(alg: &FiniteAlgebra, cond: MatrixCondition) -> Result<Verdict> {
    let set = full_matrix_set(alg, true)?;
    match scan_for_violation(&set, cond.forms(), |f, m| f.violated_strict(m)) {
        Some((idx, label)) => Ok(Verdict::fails(
            matrix_witness(&set, idx, label),
            format!(
                "{} fails: {} violated at {}",
                cond.name(),
                label,
                set.matrices()[idx]
            ),
        )),
        None => Ok(Verdict::holds(format!(
            "{} holds over {} matrices",
            cond.name(),
            set.len()
        ))),
    }
}

/// Early-exit boolean route for sweeps: the closure stops at the first
/// violating matrix.
pub fn matrix_condition_holds(alg: &FiniteAlgebra, cond: MatrixCondition) -> Result<bool> {
    let full = Congruence::full(alg.size());
    let (_, stopped) = close_matrices(alg, &full, &full, false, |m| cond.violated_by(m))?;
    Ok(stopped.is_none())
}

/// Early-exit boolean check of a matrix condition on the quotient by `theta`,
/// evaluated on the parent's matrices: the matrix set of the quotient is the
/// image of the parent's matrix set.
pub fn quotient_matrix_condition_holds(
    alg: &FiniteAlgebra,
    theta: &Congruence,
    cond: MatrixCondition,
) -> Result<bool> {
    let full = Congruence::full(alg.size());
    let (_, stopped) = close_matrices(alg, &full, &full, false, |m| {
        cond.forms().iter().any(|f| f.violated_mod(m, theta))
    })?;
    Ok(stopped.is_none())
}

/// Rectangularity with respect to a given compatible partial order: for every
/// matrix and every u, `u >= q` and `u >= r` together imply `u >= s`.
pub fn check_rectangular(alg: &FiniteAlgebra, order: &BinaryRelation) -> Result<Verdict> {
    let v = relation::validate(alg, order, RelationKind::PartialOrder)?;
    if !v.is_holds() {
        return Err(Error::InvalidRelation {
            kind: "compatible partial order".into(),
            detail: v.note,
        });
    }
    let set = full_matrix_set(alg, true)?;
    Ok(rectangular_verdict(&set, order))
}

fn rectangular_violation(set: &MatrixSet, order: &BinaryRelation) -> Option<(usize, usize)> {
    let idx = set.indices_desc();
    for &i in &idx {
        let m = &set.matrices()[i];
        for u in (0..set.size()).rev() {
            if order.contains(u, m.q) && order.contains(u, m.r) && !order.contains(u, m.s) {
                return Some((i, u));
            }
        }
    }
    None
}

fn rectangular_verdict(set: &MatrixSet, order: &BinaryRelation) -> Verdict {
    match rectangular_violation(set, order) {
        Some((i, u)) => Verdict::fails(
            Witness::MatrixElement {
                matrix: set.matrices()[i],
                element: u,
                derivation: set.derivation(i),
            },
            format!(
                "rectangularity fails: u={u} majorizes q and r but not s in {}",
                set.matrices()[i]
            ),
        ),
        None => Verdict::holds(format!(
            "rectangular with respect to the given order over {} matrices",
            set.len()
        )),
    }
}

/// Search for a compatible partial order witnessing rectangularity.
/// Enumerates compatible partial orders breadth-first from the diagonal by
/// single-pair extension and closure, deduplicated; holds with the first
/// order that rectangulates, fails if the space is exhausted, inconclusive at
/// the cap.
pub fn search_rectangulating_order(alg: &FiniteAlgebra, cap: usize) -> Result<Verdict> {
    let n = alg.size();
    let set = full_matrix_set(alg, true)?;
    let mut seen: BTreeSet<Vec<(usize, usize)>> = BTreeSet::new();
    let mut queue: VecDeque<BinaryRelation> = VecDeque::new();
    let diag = BinaryRelation::diagonal(n);
    seen.insert(diag.pairs());
    queue.push_back(diag);
    let mut examined = 0usize;
    while let Some(order) = queue.pop_front() {
        examined += 1;
        if examined > cap {
            return Ok(Verdict::inconclusive(format!(
                "order search capped after {cap} compatible partial orders"
            )));
        }
        if rectangular_violation(&set, &order).is_none() {
            return Ok(Verdict::holds_with(
                Witness::Order {
                    pairs: order.pairs(),
                },
                format!(
                    "rectangular with respect to a compatible partial order ({} pairs)",
                    order.count()
                ),
            ));
        }
        let mut base = order.pairs();
        for a in 0..n {
            for b in 0..n {
                if a == b || order.contains(a, b) {
                    continue;
                }
                base.push((a, b));
                let cand = relation::compatible_closure(alg, &base, ClosureFlags::QUASIORDER)?;
                base.pop();
                if cand.antisymmetry_violation().is_none() && seen.insert(cand.pairs()) {
                    queue.push_back(cand);
                }
            }
        }
    }
    Ok(Verdict::fails_bare(format!(
        "no compatible partial order rectangulates ({examined} orders exhausted)"
    )))
}

/// The relativized term condition: over every matrix, `p ≡ q` implies
/// `r ≡ s` and `p ≡ r` implies `q ≡ s`, all modulo `theta`. Computed on the
/// parent's matrix set and cross-checked against the abelian check of the
/// quotient algebra; the two routes must agree.
pub fn term_condition_c11(alg: &FiniteAlgebra, theta: &Congruence) -> Result<Verdict> {
    congruence::validate_congruence(alg, theta)?;
    let set = full_matrix_set(alg, true)?;
    let forms = [ImplicationForm::Rows, ImplicationForm::Columns];
    let direct = scan_for_violation(&set, &forms, |f, m| f.violated_mod(m, theta));

    // independent route: quotient, then the plain abelian check
    let quotient = congruence::quotient_algebra(alg, theta)?;
    let via_quotient = check_matrix_condition(&quotient.algebra, MatrixCondition::Abelian)?;
    if direct.is_some() == via_quotient.is_holds() {
        return Err(Error::InternalInvariant(
            "relativized term condition disagrees with the quotient abelian check".into(),
        ));
    }
    Ok(match direct {
        Some((idx, label)) => Verdict::fails(
            matrix_witness(&set, idx, label),
            format!(
                "term condition modulo the congruence fails: {} (mod theta) at {}",
                label,
                set.matrices()[idx]
            ),
        ),
        None => Verdict::holds(format!(
            "term condition modulo the congruence holds over {} matrices (quotient abelian check agrees)",
            set.len()
        )),
    })
}

/// Both strong implications over the theta,theta matrix set: `p=q` implies
/// `r=s` and `q=r` implies `r=s` with plain equality.
pub fn congruence_strongly_abelian(alg: &FiniteAlgebra, theta: &Congruence) -> Result<Verdict> {
    congruence::validate_congruence(alg, theta)?;
    let set = matrix_set(alg, theta, theta, true)?;
    let forms = [ImplicationForm::Rows, ImplicationForm::Cross];
    match scan_for_violation(&set, &forms, |f, m| f.violated_strict(m)) {
        Some((idx, label)) => Ok(Verdict::fails(
            matrix_witness(&set, idx, label),
            format!(
                "congruence is not strongly abelian: {} violated at {}",
                label,
                set.matrices()[idx]
            ),
        )),
        None => Ok(Verdict::holds(format!(
            "strongly abelian congruence ({} constrained matrices)",
            set.len()
        ))),
    }
}

/// Early-exit boolean route of the same check.
pub fn congruence_strongly_abelian_holds(alg: &FiniteAlgebra, theta: &Congruence) -> Result<bool> {
    let forms = [ImplicationForm::Rows, ImplicationForm::Cross];
    let (_, stopped) = close_matrices(alg, theta, theta, false, |m| {
        forms.iter().any(|f| f.violated_strict(m))
    })?;
    Ok(stopped.is_none())
}

/// Search the congruence lattice for a chain from the identity to the full
/// congruence where every interval is a strongly abelian congruence of the
/// corresponding quotient.
pub fn check_strongly_solvable(alg: &FiniteAlgebra, con_cap: usize) -> Result<Verdict> {
    let cons = congruence::all_congruences(alg, con_cap)?;
    let bottom = cons
        .iter()
        .position(|c| c.is_identity())
        .expect("identity present");
    // memoized search over all strictly increasing steps, not just covers
    let mut memo: HashMap<usize, Option<Vec<usize>>> = HashMap::new();
    let mut quotients: HashMap<usize, crate::algebra::Quotient> = HashMap::new();

    fn solve(
        alg: &FiniteAlgebra,
        cons: &[Congruence],
        at: usize,
        memo: &mut HashMap<usize, Option<Vec<usize>>>,
        quotients: &mut HashMap<usize, crate::algebra::Quotient>,
    ) -> Result<Option<Vec<usize>>> {
        if let Some(hit) = memo.get(&at) {
            return Ok(hit.clone());
        }
        if cons[at].is_full() {
            let chain = vec![at];
            memo.insert(at, Some(chain.clone()));
            return Ok(Some(chain));
        }
        if let std::collections::hash_map::Entry::Vacant(e) = quotients.entry(at) {
            e.insert(congruence::quotient_algebra(alg, &cons[at])?);
        }
        let quotient = quotients.get(&at).unwrap().algebra.clone();
        for (next, other) in cons.iter().enumerate() {
            if next == at || !cons[at].refines(other) {
                continue;
            }
            let interval = other.quotient_by(&cons[at])?;
            if !congruence_strongly_abelian_holds(&quotient, &interval)? {
                continue;
            }
            if let Some(mut rest) = solve(alg, cons, next, memo, quotients)? {
                let mut chain = vec![at];
                chain.append(&mut rest);
                memo.insert(at, Some(chain.clone()));
                return Ok(Some(chain));
            }
        }
        memo.insert(at, None);
        Ok(None)
    }

    match solve(alg, &cons, bottom, &mut memo, &mut quotients)? {
        Some(chain_idx) => {
            let chain: Vec<Congruence> = chain_idx.iter().map(|&i| cons[i].clone()).collect();
            let steps = chain.len() - 1;
            Ok(Verdict::holds_with(
                Witness::CongruenceChain { chain },
                format!("strongly solvable via a chain of {steps} strongly abelian steps"),
            ))
        }
        None => Ok(Verdict::fails_bare(format!(
            "no chain with strongly abelian intervals exists ({} congruences searched)",
            cons.len()
        ))),
    }
}

/// Abelian plus a Maltsev operation in the chosen clone. The verdict carries
/// both sub-verdicts and states the mode used.
pub fn check_affine(alg: &FiniteAlgebra, mode: MaltsevMode, clone_cap: usize) -> Result<Verdict> {
    let abelian = check_matrix_condition(alg, MatrixCondition::Abelian)?;
    let maltsev = clones::find_maltsev(alg, mode, clone_cap)?;
    let note_mode = mode.name();
    let parts = Witness::Parts {
        parts: vec![
            ("abelian".to_string(), abelian.clone()),
            (format!("maltsev({note_mode})"), maltsev.clone()),
        ],
    };
    let verdict = if abelian.is_fails() {
        Verdict::fails(
            parts,
            format!("not affine ({note_mode} mode): abelian sub-check failed"),
        )
    } else if maltsev.is_fails() {
        Verdict::fails(
            parts,
            format!("not affine ({note_mode} mode): abelian holds but no Maltsev operation exists"),
        )
    } else if abelian.is_holds() && maltsev.is_holds() {
        Verdict::holds_with(
            parts,
            format!("affine ({note_mode} mode): abelian with a Maltsev operation"),
        )
    } else {
        Verdict::inconclusive(format!(
            "affine ({note_mode} mode) undecided: Maltsev search capped"
        ))
    };
    Ok(verdict)
}

/// The zero-preservation property: for every polynomial p and tuple s,
/// `p(s) = zero` implies `p(0) = zero`. Decided through the pair closure
/// generated by the diagonal together with all pairs `(s, zero)`; a failing
/// pair is returned with its derivation and the reconstructed polynomial.
pub fn check_property_p(alg: &FiniteAlgebra, zero: usize) -> Result<Verdict> {
    let n = alg.size();
    if zero >= n {
        return Err(Error::ElementOutOfRange {
            element: zero,
            size: n,
        });
    }
    let mut generators: Vec<(Vec<usize>, PairLeaf)> = Vec::new();
    for a in 0..n {
        generators.push((vec![a, a], PairLeaf::Diagonal(a)));
    }
    for s in 0..n {
        generators.push((vec![s, zero], PairLeaf::Substituted(s)));
    }
    let closure = close_pointwise(
        alg,
        2,
        generators,
        CloseOptions {
            with_provenance: true,
            cap: usize::MAX,
            max_rounds: None,
        },
        |_, point| point[0] == zero && point[1] != zero,
    )?;
    if let Some(idx) = closure.stopped_at {
        let point = closure.point(idx).to_vec();
        let derivation = materialize_pair_derivation(alg, &closure, idx);
        let (polynomial, arguments) = pair_polynomial(alg, &derivation);
        // re-check the witness through the term evaluator before reporting
        let expansion = alg.constant_expansion();
        let at_args =
            Assignment::from_pairs(arguments.iter().enumerate().map(|(i, &s)| (i + 1, s)));
        let at_zero = Assignment::from_pairs((0..arguments.len()).map(|i| (i + 1, zero)));
        let v_args = expansion.eval(&polynomial, &at_args)?;
        let v_zero = expansion.eval(&polynomial, &at_zero)?;
        if v_args != point[0] || v_zero != point[1] {
            return Err(Error::InternalInvariant(
                "zero-preservation witness does not replay through its polynomial".into(),
            ));
        }
        return Ok(Verdict::fails(
            Witness::PropertyP {
                value: point[0],
                image_of_zero: point[1],
                derivation,
                polynomial,
                arguments,
            },
            format!(
                "zero-preservation fails: a polynomial maps some tuple to {zero} but maps the all-zero tuple to {}",
                point[1]
            ),
        ));
    }
    // No violation: the property statement still presumes {zero} is a
    // one-element subuniverse.
    for (op_idx, op) in alg.operations().iter().enumerate() {
        let v = alg.apply(op_idx, &vec![zero; op.arity]);
        if v != zero {
            return Err(Error::hypothesis(
                "zero-subuniverse",
                format!(
                    "`{}` applied to the all-{zero} tuple yields {v}, so {{{zero}}} is not a subuniverse",
                    op.symbol
                ),
            ));
        }
    }
    Ok(Verdict::holds(format!(
        "zero-preservation holds ({} closure pairs)",
        closure.len()
    )))
}

fn materialize_pair_derivation(
    alg: &FiniteAlgebra,
    closure: &Closure<PairLeaf>,
    idx: usize,
) -> Derivation<PairLeaf> {
    fn build(alg: &FiniteAlgebra, provs: &[Prov<PairLeaf>], i: usize) -> Derivation<PairLeaf> {
        match &provs[i] {
            Prov::Leaf(l) => Derivation::Leaf(*l),
            Prov::Step { op, children } => Derivation::Apply {
                symbol: alg.operation(*op).symbol.clone(),
                args: children
                    .iter()
                    .map(|&c| build(alg, provs, c as usize))
                    .collect(),
            },
        }
    }
    build(alg, closure.provenance.as_ref().expect("tracked"), idx)
}

/// Rebuild a polynomial from a pair derivation: diagonal leaves become
/// constants, substituted leaves become fresh variables whose intended values
/// are returned alongside.
pub fn pair_polynomial(alg: &FiniteAlgebra, d: &Derivation<PairLeaf>) -> (Term, Vec<usize>) {
    fn walk(alg: &FiniteAlgebra, d: &Derivation<PairLeaf>, args: &mut Vec<usize>) -> Term {
        match d {
            Derivation::Leaf(PairLeaf::Diagonal(a)) => Term::constant(constant_symbol(alg, *a)),
            Derivation::Leaf(PairLeaf::Substituted(s)) => {
                args.push(*s);
                Term::var(args.len())
            }
            Derivation::Apply { symbol, args: ds } => Term::apply(
                symbol.clone(),
                ds.iter().map(|c| walk(alg, c, args)).collect(),
            ),
        }
    }
    let mut args = Vec::new();
    let term = walk(alg, d, &mut args);
    (term, args)
}

/// Brute-force route for the zero-preservation property: enumerate the
/// polynomial clone up to `max_arity` and test every tuple directly. Returns
/// the first violating (map, tuple) or None.
pub fn property_p_bruteforce(
    alg: &FiniteAlgebra,
    zero: usize,
    max_arity: usize,
    clone_cap: usize,
) -> Result<Option<(clones::FiniteMap, Vec<usize>)>> {
    let n = alg.size();
    for k in 1..=max_arity {
        let clone = clones::polynomial_clone(alg, k, clone_cap)?;
        if !clone.exhausted() {
            return Err(Error::ResourceCap {
                what: format!("brute-force polynomial enumeration at arity {k}"),
                needed: clone.len() + 1,
                cap: clone_cap,
            });
        }
        let zeros = vec![zero; k];
        for map in clone.maps() {
            if map.apply(&zeros) == zero {
                continue;
            }
            // p(0) != zero: any tuple with p(s) = zero is a violation
            for t in 0..n.pow(k as u32) {
                if map.table()[t] == zero {
                    return Ok(Some((map.clone(), crate::algebra::decode_tuple(n, k, t))));
                }
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Operation;
    use crate::congruence::quotient_algebra;

    fn z2() -> FiniteAlgebra {
        FiniteAlgebra::new(2, vec![Operation::new("add", 2, vec![0, 1, 1, 0])]).unwrap()
    }

    fn meet2() -> FiniteAlgebra {
        FiniteAlgebra::new(2, vec![Operation::new("meet", 2, vec![0, 0, 0, 1])]).unwrap()
    }

    fn left_zero(n: usize) -> FiniteAlgebra {
        let table = (0..n).flat_map(|x| std::iter::repeat_n(x, n)).collect();
        FiniteAlgebra::new(n, vec![Operation::new("f", 2, table)]).unwrap()
    }

    fn no_op(n: usize) -> FiniteAlgebra {
        FiniteAlgebra::new(n, vec![]).unwrap()
    }

    fn one_element() -> FiniteAlgebra {
        FiniteAlgebra::new(1, vec![Operation::new("f", 2, vec![0])]).unwrap()
    }

    #[test]
    fn matrix_set_of_no_op_algebra_is_generators_only() {
        let set = full_matrix_set(&no_op(2), true).unwrap();
        assert_eq!(set.len(), 6); // 2n^2 - n distinct generators
        let set = full_matrix_set(&no_op(3), false).unwrap();
        assert_eq!(set.len(), 15);
    }

    #[test]
    fn matrix_set_of_z2_is_the_even_parity_matrices() {
        let set = full_matrix_set(&z2(), true).unwrap();
        assert_eq!(set.len(), 8);
        for m in set.matrices() {
            assert_eq!((m.p + m.q + m.r + m.s) % 2, 0, "{m}");
        }
    }

    #[test]
    fn identity_constrained_matrix_set_is_constant_matrices() {
        let alg = z2();
        let id = Congruence::identity(2);
        let set = matrix_set(&alg, &id, &id, false).unwrap();
        assert_eq!(set.len(), 2);
        for m in set.matrices() {
            assert!(m.p == m.q && m.q == m.r && m.r == m.s);
        }
    }

    #[test]
    fn matrix_derivations_replay_both_ways() {
        for alg in [z2(), meet2(), left_zero(3)] {
            let set = full_matrix_set(&alg, true).unwrap();
            for i in 0..set.len() {
                let d = set.derivation(i).unwrap();
                assert_eq!(
                    replay_matrix_derivation(&alg, &d).unwrap(),
                    set.matrices()[i]
                );
                assert!(
                    verify_matrix_derivation_as_polynomial(&alg, &d, &set.matrices()[i]).unwrap()
                );
            }
        }
    }

    #[test]
    fn z2_is_abelian_but_not_strongly_rectangular() {
        let alg = z2();
        assert!(check_matrix_condition(&alg, MatrixCondition::Abelian)
            .unwrap()
            .is_holds());
        let v = check_matrix_condition(&alg, MatrixCondition::StronglyRectangular).unwrap();
        assert!(v.is_fails());
        match v.witness.as_ref().unwrap() {
            Witness::Matrix {
                matrix, derivation, ..
            } => {
                assert_eq!(*matrix, Matrix2x2::new(1, 0, 0, 1));
                let d = derivation.as_ref().unwrap();
                assert_eq!(replay_matrix_derivation(&alg, d).unwrap(), *matrix);
            }
            w => panic!("unexpected witness {w:?}"),
        }
        // strongly-abelian shares the witness since abelian holds
        let v = check_matrix_condition(&alg, MatrixCondition::StronglyAbelian).unwrap();
        match v.witness.as_ref().unwrap() {
            Witness::Matrix { matrix, .. } => assert_eq!(*matrix, Matrix2x2::new(1, 0, 0, 1)),
            w => panic!("unexpected witness {w:?}"),
        }
    }

    #[test]
    fn semilattice_abelian_witness_is_pinned() {
        let v = check_matrix_condition(&meet2(), MatrixCondition::Abelian).unwrap();
        assert!(v.is_fails());
        match v.witness.as_ref().unwrap() {
            Witness::Matrix { matrix, .. } => assert_eq!(*matrix, Matrix2x2::new(0, 0, 1, 0)),
            w => panic!("unexpected witness {w:?}"),
        }
    }

    #[test]
    fn one_element_algebra_is_strongly_abelian() {
        let v = check_matrix_condition(&one_element(), MatrixCondition::StronglyAbelian).unwrap();
        assert!(v.is_holds());
    }

    #[test]
    fn strongly_abelian_is_the_conjunction() {
        for alg in [
            z2(),
            meet2(),
            left_zero(2),
            left_zero(3),
            no_op(3),
            one_element(),
        ] {
            let sa = check_matrix_condition(&alg, MatrixCondition::StronglyAbelian)
                .unwrap()
                .is_holds();
            let ab = check_matrix_condition(&alg, MatrixCondition::Abelian)
                .unwrap()
                .is_holds();
            let sr = check_matrix_condition(&alg, MatrixCondition::StronglyRectangular)
                .unwrap()
                .is_holds();
            assert_eq!(sa, ab && sr);
            // and the early-exit route agrees with the witness route
            assert_eq!(
                matrix_condition_holds(&alg, MatrixCondition::StronglyAbelian).unwrap(),
                sa
            );
        }
    }

    #[test]
    fn rectangular_with_diagonal_collapses_to_strongly_rectangular() {
        for alg in [z2(), meet2(), left_zero(2), left_zero(3), one_element()] {
            let diag = BinaryRelation::diagonal(alg.size());
            let rect = check_rectangular(&alg, &diag).unwrap().is_holds();
            let sr = check_matrix_condition(&alg, MatrixCondition::StronglyRectangular)
                .unwrap()
                .is_holds();
            assert_eq!(rect, sr);
        }
    }

    #[test]
    fn rectangular_check_agrees_with_direct_quantifier() {
        let alg = meet2();
        // 0 <= 1 read as >=: {(1,0)} plus diagonal
        let order = BinaryRelation::from_pairs(2, &[(0, 0), (1, 1), (1, 0)]).unwrap();
        let verdict = check_rectangular(&alg, &order).unwrap();
        let set = full_matrix_set(&alg, false).unwrap();
        let mut direct_holds = true;
        for m in set.matrices() {
            for u in 0..2 {
                if order.contains(u, m.q) && order.contains(u, m.r) && !order.contains(u, m.s) {
                    direct_holds = false;
                }
            }
        }
        assert_eq!(verdict.is_holds(), direct_holds);
    }

    #[test]
    fn rectangular_rejects_invalid_orders() {
        let alg = z2();
        let not_antisym = BinaryRelation::from_pairs(2, &[(0, 0), (1, 1), (0, 1), (1, 0)]).unwrap();
        assert!(matches!(
            check_rectangular(&alg, &not_antisym),
            Err(Error::InvalidRelation { .. })
        ));
    }

    #[test]
    fn order_search_examples() {
        assert!(search_rectangulating_order(&one_element(), 100)
            .unwrap()
            .is_holds());
        // strongly rectangular algebras succeed with the diagonal
        let v = search_rectangulating_order(&left_zero(2), 100).unwrap();
        assert!(v.is_holds());
        match v.witness.as_ref().unwrap() {
            Witness::Order { pairs } => assert_eq!(pairs, &[(0, 0), (1, 1)]),
            w => panic!("unexpected witness {w:?}"),
        }
        // only the diagonal is a compatible partial order of z2, so the
        // search exhausts and fails
        let v = search_rectangulating_order(&z2(), 100).unwrap();
        assert!(v.is_fails());
        // the semilattice rectangulates with 1 below 0
        let v = search_rectangulating_order(&meet2(), 100).unwrap();
        assert!(v.is_holds());
    }

    #[test]
    fn term_condition_examples() {
        let alg = meet2();
        assert!(term_condition_c11(&alg, &Congruence::full(2))
            .unwrap()
            .is_holds());
        assert!(term_condition_c11(&z2(), &Congruence::identity(2))
            .unwrap()
            .is_holds());
        let v = term_condition_c11(&alg, &Congruence::identity(2)).unwrap();
        assert!(v.is_fails());
        match v.witness.as_ref().unwrap() {
            Witness::Matrix { matrix, .. } => assert_eq!(*matrix, Matrix2x2::new(0, 0, 1, 0)),
            w => panic!("unexpected witness {w:?}"),
        }
    }

    #[test]
    fn quotient_condition_route_matches_explicit_quotient() {
        let lz = left_zero(3);
        let theta = Congruence::from_blocks(vec![vec![0, 1], vec![2]]).unwrap();
        for cond in [
            MatrixCondition::Abelian,
            MatrixCondition::StronglyRectangular,
            MatrixCondition::StronglyAbelian,
        ] {
            let via_parent = quotient_matrix_condition_holds(&lz, &theta, cond).unwrap();
            let q = quotient_algebra(&lz, &theta).unwrap();
            let direct = check_matrix_condition(&q.algebra, cond).unwrap().is_holds();
            assert_eq!(via_parent, direct);
        }
    }

    #[test]
    fn strongly_abelian_congruence_examples() {
        // identity congruence: only constant matrices, always holds
        for alg in [z2(), meet2(), left_zero(3)] {
            let id = Congruence::identity(alg.size());
            assert!(congruence_strongly_abelian(&alg, &id).unwrap().is_holds());
        }
        // full congruence of z2 is the plain strongly-abelian check
        let v = congruence_strongly_abelian(&z2(), &Congruence::full(2)).unwrap();
        assert!(v.is_fails());
        // no-op 2-element algebra: generator-only set satisfies both forms
        let v = congruence_strongly_abelian(&no_op(2), &Congruence::full(2)).unwrap();
        assert!(v.is_holds());
        // agreement with the unconstrained check at the full congruence
        for alg in [z2(), meet2(), left_zero(2), no_op(3)] {
            let full = Congruence::full(alg.size());
            assert_eq!(
                congruence_strongly_abelian(&alg, &full).unwrap().is_holds(),
                check_matrix_condition(&alg, MatrixCondition::StronglyAbelian)
                    .unwrap()
                    .is_holds()
            );
            assert_eq!(
                congruence_strongly_abelian_holds(&alg, &full).unwrap(),
                congruence_strongly_abelian(&alg, &full).unwrap().is_holds()
            );
        }
    }

    #[test]
    fn strong_solvability_examples() {
        let v = check_strongly_solvable(&one_element(), 1000).unwrap();
        assert!(v.is_holds());
        match v.witness.as_ref().unwrap() {
            Witness::CongruenceChain { chain } => assert_eq!(chain.len(), 1),
            w => panic!("unexpected witness {w:?}"),
        }

        let v = check_strongly_solvable(&left_zero(2), 1000).unwrap();
        assert!(v.is_holds());
        match v.witness.as_ref().unwrap() {
            Witness::CongruenceChain { chain } => {
                assert_eq!(chain.len(), 2);
                assert!(chain[0].is_identity() && chain[1].is_full());
            }
            w => panic!("unexpected witness {w:?}"),
        }

        assert!(check_strongly_solvable(&z2(), 1000).unwrap().is_fails());
    }

    #[test]
    fn affine_examples() {
        let v = check_affine(&z2(), MaltsevMode::Term, 10_000).unwrap();
        assert!(v.is_holds());
        let v = check_affine(&no_op(2), MaltsevMode::Term, 10_000).unwrap();
        assert!(v.is_fails());
        assert!(v.note.contains("no Maltsev"));
        for mode in [MaltsevMode::Term, MaltsevMode::Polynomial] {
            let v = check_affine(&meet2(), mode, 10_000).unwrap();
            assert!(v.is_fails());
            assert!(v.note.contains("abelian sub-check failed"));
        }
    }

    #[test]
    fn property_p_examples() {
        assert!(check_property_p(&one_element(), 0).unwrap().is_holds());

        // unary flip: f(1) = 0 while f(0) = 1
        let flip = FiniteAlgebra::new(2, vec![Operation::new("f", 1, vec![1, 0])]).unwrap();
        let v = check_property_p(&flip, 0).unwrap();
        assert!(v.is_fails());
        match v.witness.as_ref().unwrap() {
            Witness::PropertyP {
                value,
                image_of_zero,
                polynomial,
                arguments,
                ..
            } => {
                assert_eq!((*value, *image_of_zero), (0, 1));
                assert_eq!(arguments, &[1]);
                assert_eq!(polynomial.to_string(), "f(x1)");
            }
            w => panic!("unexpected witness {w:?}"),
        }

        // no violating pair, but {0} is not a subuniverse either
        let const_one = FiniteAlgebra::new(2, vec![Operation::new("g", 1, vec![1, 1])]).unwrap();
        assert!(matches!(
            check_property_p(&const_one, 0),
            Err(Error::HypothesisFailed { .. })
        ));
    }

    #[test]
    fn property_p_agrees_with_bruteforce() {
        let flip = FiniteAlgebra::new(2, vec![Operation::new("f", 1, vec![1, 0])]).unwrap();
        let cases: Vec<(FiniteAlgebra, usize)> = vec![
            (one_element(), 0),
            (left_zero(2), 0),
            (left_zero(3), 1),
            (no_op(3), 2),
            (z2(), 0),
            (flip, 0),
        ];
        for (alg, zero) in cases {
            let closure_route = match check_property_p(&alg, zero) {
                Ok(v) => Some(v.is_holds()),
                Err(Error::HypothesisFailed { .. }) => None,
                Err(e) => panic!("{e}"),
            };
            if let Some(expected) = closure_route {
                let brute = property_p_bruteforce(&alg, zero, 3, 100_000).unwrap();
                assert_eq!(brute.is_none(), expected, "{alg:?} zero={zero}");
            }
        }
    }
}
