//! Replayable pipeline certificates.
//!
//! A certificate records every assertion a construction pipeline checked,
//! each with enough inline data to re-verify it from scratch. Replay
//! recomputes deterministic checks (closures, congruence generation,
//! implication scans) but never reruns a search: searched-for witnesses are
//! re-verified from their stored derivations instead.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::algebra::{FiniteAlgebra, DEFAULT_POWER_CAP};
use crate::centrality::{self, Matrix2x2, MatrixCondition, MatrixLeaf};
use crate::clones::Derivation;
use crate::congruence::{self, Congruence, CongruenceAlgorithm};
use crate::construct;
use crate::error::{Error, Result};
use crate::relation::{self, BinaryRelation, ClosureFlags, RelationKind};
use crate::verdict::Outcome;

/// A relation as portable data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationData {
    pub size: usize,
    pub pairs: Vec<(usize, usize)>,
}

impl RelationData {
    pub fn from_relation(r: &BinaryRelation) -> Self {
        RelationData {
            size: r.size(),
            pairs: r.pairs(),
        }
    }

    pub fn to_relation(&self) -> Result<BinaryRelation> {
        BinaryRelation::from_pairs(self.size, &self.pairs)
    }
}

/// One recorded, re-verifiable assertion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    /// what the pipeline observed when it ran the check
    pub holds: bool,
    /// what the pipeline demanded of the check
    pub expected: bool,
    /// monitored assertions are recorded but do not gate the verdict
    pub required: bool,
    pub check: CertCheck,
}

impl Assertion {
    pub fn satisfied(&self) -> bool {
        self.holds == self.expected || !self.required
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub name: String,
    pub input_digest: String,
    pub output_digest: String,
    pub assertions: Vec<Assertion>,
}

/// Reference to the document the pipeline ran on, for staleness detection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceRef {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineCertificate {
    pub pipeline: String,
    pub tool_version: String,
    pub config: BTreeMap<String, String>,
    pub source: Option<SourceRef>,
    pub stages: Vec<Stage>,
    pub verdict: Outcome,
}

impl PipelineCertificate {
    pub fn new(pipeline: &str, config: BTreeMap<String, String>) -> Self {
        PipelineCertificate {
            pipeline: pipeline.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            source: None,
            stages: Vec::new(),
            verdict: Outcome::Inconclusive,
        }
    }

    pub fn assertion_count(&self) -> usize {
        self.stages.iter().map(|s| s.assertions.len()).sum()
    }

    pub fn all_required_hold(&self) -> bool {
        self.stages
            .iter()
            .flat_map(|s| &s.assertions)
            .all(|a| a.satisfied())
    }
}

/// Every check a pipeline can record. Each variant carries its own data and
/// can be re-verified in isolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "kebab-case")]
pub enum CertCheck {
    /// One of the equality matrix conditions on an algebra.
    MatrixConditionHolds {
        algebra: FiniteAlgebra,
        condition: MatrixCondition,
    },
    /// `theta` is a congruence of `algebra`.
    IsCongruence {
        algebra: FiniteAlgebra,
        theta: Congruence,
    },
    /// Both strong implications over the theta,theta matrix set.
    CongruenceStronglyAbelian {
        algebra: FiniteAlgebra,
        theta: Congruence,
    },
    /// `theta` differs from the identity congruence.
    CongruenceNontrivial {
        theta: Congruence,
    },
    /// A matrix condition of the quotient, evaluated on the parent's
    /// matrices modulo theta and cross-checked on the explicit quotient.
    QuotientCondition {
        algebra: FiniteAlgebra,
        theta: Congruence,
        condition: MatrixCondition,
    },
    /// `pairs` is exactly the graph of theta, listed sorted.
    GraphUniverse {
        algebra: FiniteAlgebra,
        theta: Congruence,
        pairs: Vec<(usize, usize)>,
    },
    /// `result` is the congruence generated by `generators`; both generation
    /// algorithms are recomputed and must agree.
    GeneratedCongruence {
        algebra: FiniteAlgebra,
        generators: Vec<(usize, usize)>,
        result: Congruence,
    },
    /// The listed elements form one single class of `congruence`, with the
    /// given canonical class index.
    ElementsFormOneClass {
        congruence: Congruence,
        elements: Vec<usize>,
        class: usize,
    },
    /// `quotient` is the canonical quotient of `algebra` by `theta`.
    QuotientAlgebraIs {
        algebra: FiniteAlgebra,
        theta: Congruence,
        quotient: FiniteAlgebra,
    },
    SizeAtLeast {
        algebra: FiniteAlgebra,
        min: usize,
    },
    /// `{zero}` is closed under every operation.
    ZeroSubuniverse {
        algebra: FiniteAlgebra,
        zero: usize,
    },
    /// Zero preservation via the pair closure.
    PropertyPClosure {
        algebra: FiniteAlgebra,
        zero: usize,
    },
    /// Zero preservation by brute-force polynomial enumeration.
    PropertyPBruteforce {
        algebra: FiniteAlgebra,
        zero: usize,
        max_arity: usize,
    },
    /// Zero preservation via unary polynomials only (the coordinatewise
    /// chain route).
    PropertyPChain {
        algebra: FiniteAlgebra,
        zero: usize,
    },
    /// Bounded independence transfer: identities of `source` that ignore a
    /// position force the target operation to ignore that coordinate.
    TermIndependence {
        source: FiniteAlgebra,
        target: FiniteAlgebra,
        arity: usize,
        rounds: usize,
        clone_cap: usize,
    },
    /// `result` is the compatible closure of `seed` under the given flags.
    CompatibleClosureIs {
        algebra: FiniteAlgebra,
        seed: Vec<(usize, usize)>,
        flags: ClosureFlags,
        result: RelationData,
    },
    /// `congruence` is the symmetric part of `relation` and validates as a
    /// congruence.
    SymmetricPartCongruence {
        algebra: FiniteAlgebra,
        relation: RelationData,
        congruence: Congruence,
    },
    /// `result` is the quotient of `relation` by `theta`.
    QuotientRelationIs {
        relation: RelationData,
        theta: Congruence,
        result: RelationData,
    },
    /// `order` is a compatible partial order, optionally with a least
    /// element.
    ValidOrder {
        algebra: FiniteAlgebra,
        order: RelationData,
        least: Option<usize>,
    },
    /// `relation` validates with the given structural kind.
    ValidKind {
        algebra: FiniteAlgebra,
        relation: RelationData,
        kind: RelationKind,
    },
    /// Every element sits above `zero` in `relation`.
    LeastElement {
        relation: RelationData,
        zero: usize,
    },
    /// `sub` is contained in `sup`.
    RelationExtends {
        sub: RelationData,
        sup: RelationData,
    },
    /// Nothing except zero sits below zero.
    ZeroDownsetTrivial {
        relation: RelationData,
        zero: usize,
    },
    /// `result` equals the quasiorder comparing elements by which unary
    /// polynomials send them to zero. Recording the output also makes this
    /// serve as the bi-implication check on the quotient.
    ZeroImplicationQuasiorder {
        algebra: FiniteAlgebra,
        zero: usize,
        result: RelationData,
    },
    /// Every matrix rectangulates with respect to `order`.
    Rectangulates {
        algebra: FiniteAlgebra,
        order: RelationData,
    },
    /// A searched-for matrix re-verified from its derivation: it replays
    /// entrywise and as a polynomial instance, its cross diagonal is
    /// theta-related and its bottom row is not.
    WitnessMatrix {
        algebra: FiniteAlgebra,
        theta: Congruence,
        matrix: Matrix2x2,
        derivation: Derivation<MatrixLeaf>,
    },
    /// No two same-row or same-column entries of `matrix` are theta-related.
    MatrixThetaSeparation {
        theta: Congruence,
        matrix: Matrix2x2,
    },
    /// `universe` (pairs of the square, sorted) is the subuniverse generated
    /// by the diagonal and `extra_pairs`.
    SquareSubuniverse {
        base: FiniteAlgebra,
        extra_pairs: Vec<(usize, usize)>,
        universe: Vec<(usize, usize)>,
    },
    /// The two displayed generator evaluations land on `pq` and `rs` inside
    /// `universe`.
    PairMembership {
        base: FiniteAlgebra,
        derivation: Derivation<MatrixLeaf>,
        pq: (usize, usize),
        rs: (usize, usize),
        universe: Vec<(usize, usize)>,
    },
    /// The diagonal positions of `c_pairs` are a union of gamma-classes, and
    /// diagonal elements in one gamma-class project to theta-related values.
    GammaDiagonal {
        c_pairs: Vec<(usize, usize)>,
        gamma: Congruence,
        theta: Congruence,
    },
    /// `a` and `b` lie in different gamma-classes.
    GammaSeparates {
        gamma: Congruence,
        a: usize,
        b: usize,
    },
    /// A matrix over the subalgebra, given by a generator derivation, equals
    /// `expected` (the displayed counterexample matrix).
    SubalgebraMatrixInstance {
        algebra: FiniteAlgebra,
        derivation: Derivation<MatrixLeaf>,
        expected: Matrix2x2,
    },
}

impl CertCheck {
    /// Recompute the truth of the recorded check from its own data.
    pub fn verify(&self) -> Result<bool> {
        match self {
            CertCheck::MatrixConditionHolds { algebra, condition } => {
                Ok(centrality::check_matrix_condition(algebra, *condition)?.is_holds())
            }
            CertCheck::IsCongruence { algebra, theta } => {
                Ok(congruence::validate_congruence(algebra, theta).is_ok())
            }
            CertCheck::CongruenceStronglyAbelian { algebra, theta } => {
                Ok(centrality::congruence_strongly_abelian(algebra, theta)?.is_holds())
            }
            CertCheck::CongruenceNontrivial { theta } => Ok(!theta.is_identity()),
            CertCheck::QuotientCondition {
                algebra,
                theta,
                condition,
            } => {
                let on_parent =
                    centrality::quotient_matrix_condition_holds(algebra, theta, *condition)?;
                let q = congruence::quotient_algebra(algebra, theta)?;
                let direct = centrality::check_matrix_condition(&q.algebra, *condition)?.is_holds();
                if on_parent != direct {
                    return Err(Error::InternalInvariant(
                        "quotient condition routes disagree on replay".into(),
                    ));
                }
                Ok(on_parent)
            }
            CertCheck::GraphUniverse {
                algebra,
                theta,
                pairs,
            } => {
                if congruence::validate_congruence(algebra, theta).is_err() {
                    return Ok(false);
                }
                let mut expected = Vec::new();
                for a in 0..algebra.size() {
                    for &b in theta.block_of(a) {
                        expected.push((a, b));
                    }
                }
                expected.sort_unstable();
                Ok(&expected == pairs)
            }
            CertCheck::GeneratedCongruence {
                algebra,
                generators,
                result,
            } => {
                let rel = congruence::congruence_generated(
                    algebra,
                    generators,
                    CongruenceAlgorithm::Relational,
                )?;
                let chain = congruence::congruence_generated(
                    algebra,
                    generators,
                    CongruenceAlgorithm::MaltsevChain,
                )?;
                if rel != chain {
                    return Err(Error::InternalInvariant(
                        "congruence generation algorithms disagree on replay".into(),
                    ));
                }
                Ok(&rel == result)
            }
            CertCheck::ElementsFormOneClass {
                congruence,
                elements,
                class,
            } => {
                if *class >= congruence.num_classes() {
                    return Ok(false);
                }
                let block = &congruence.blocks()[*class];
                let mut sorted = elements.clone();
                sorted.sort_unstable();
                Ok(block == &sorted)
            }
            CertCheck::QuotientAlgebraIs {
                algebra,
                theta,
                quotient,
            } => {
                let q = congruence::quotient_algebra(algebra, theta)?;
                Ok(&q.algebra == quotient)
            }
            CertCheck::SizeAtLeast { algebra, min } => Ok(algebra.size() >= *min),
            CertCheck::ZeroSubuniverse { algebra, zero } => Ok(algebra
                .operations()
                .iter()
                .enumerate()
                .all(|(i, op)| algebra.apply(i, &vec![*zero; op.arity]) == *zero)),
            CertCheck::PropertyPClosure { algebra, zero } => {
                Ok(centrality::check_property_p(algebra, *zero)?.is_holds())
            }
            CertCheck::PropertyPBruteforce {
                algebra,
                zero,
                max_arity,
            } => Ok(
                centrality::property_p_bruteforce(algebra, *zero, *max_arity, 1_000_000)?.is_none(),
            ),
            CertCheck::PropertyPChain { algebra, zero } => {
                Ok(construct::property_p_unary_chain(algebra, *zero))
            }
            CertCheck::TermIndependence {
                source,
                target,
                arity,
                rounds,
                clone_cap,
            } => {
                let budget = construct::IndependenceBudget {
                    arity: *arity,
                    rounds: *rounds,
                    clone_cap: *clone_cap,
                };
                Ok(construct::term_independence_check(source, target, &budget)?.holds)
            }
            CertCheck::CompatibleClosureIs {
                algebra,
                seed,
                flags,
                result,
            } => {
                let r = relation::compatible_closure(algebra, seed, *flags)?;
                Ok(RelationData::from_relation(&r) == *result)
            }
            CertCheck::SymmetricPartCongruence {
                algebra,
                relation: rel,
                congruence: cong,
            } => {
                let r = rel.to_relation()?;
                let sym = relation::intersect_with_converse(&r);
                let as_cong = match Congruence::from_relation(&sym) {
                    Ok(c) => c,
                    Err(_) => return Ok(false),
                };
                if &as_cong != cong {
                    return Ok(false);
                }
                Ok(congruence::validate_congruence(algebra, cong).is_ok())
            }
            CertCheck::QuotientRelationIs {
                relation: rel,
                theta,
                result,
            } => {
                let r = rel.to_relation()?;
                let q = relation::quotient_relation(&r, theta)?;
                Ok(RelationData::from_relation(&q) == *result)
            }
            CertCheck::ValidOrder {
                algebra,
                order,
                least,
            } => {
                let r = order.to_relation()?;
                if !relation::validate(algebra, &r, RelationKind::PartialOrder)?.is_holds() {
                    return Ok(false);
                }
                if let Some(zero) = least {
                    return Ok((0..r.size()).all(|a| r.contains(a, *zero)));
                }
                Ok(true)
            }
            CertCheck::ValidKind {
                algebra,
                relation: rel,
                kind,
            } => {
                let r = rel.to_relation()?;
                Ok(relation::validate(algebra, &r, *kind)?.is_holds())
            }
            CertCheck::LeastElement { relation, zero } => {
                let r = relation.to_relation()?;
                Ok((0..r.size()).all(|a| r.contains(a, *zero)))
            }
            CertCheck::RelationExtends { sub, sup } => {
                let a = sub.to_relation()?;
                let b = sup.to_relation()?;
                Ok(a.is_subset_of(&b))
            }
            CertCheck::ZeroDownsetTrivial { relation, zero } => {
                let r = relation.to_relation()?;
                Ok((0..r.size()).all(|b| !r.contains(*zero, b) || b == *zero))
            }
            CertCheck::ZeroImplicationQuasiorder {
                algebra,
                zero,
                result,
            } => {
                let r = construct::zero_implication_quasiorder(algebra, *zero)?;
                Ok(RelationData::from_relation(&r) == *result)
            }
            CertCheck::Rectangulates { algebra, order } => {
                let r = order.to_relation()?;
                Ok(centrality::check_rectangular(algebra, &r)?.is_holds())
            }
            CertCheck::WitnessMatrix {
                algebra,
                theta,
                matrix,
                derivation,
            } => {
                let replayed = centrality::replay_matrix_derivation(algebra, derivation)?;
                if replayed != *matrix {
                    return Ok(false);
                }
                if !centrality::verify_matrix_derivation_as_polynomial(algebra, derivation, matrix)?
                {
                    return Ok(false);
                }
                Ok(theta.related(matrix.q, matrix.r) && !theta.related(matrix.r, matrix.s))
            }
            CertCheck::MatrixThetaSeparation { theta, matrix } => {
                let m = matrix;
                Ok(!theta.related(m.p, m.q)
                    && !theta.related(m.r, m.s)
                    && !theta.related(m.p, m.r)
                    && !theta.related(m.q, m.s))
            }
            CertCheck::SquareSubuniverse {
                base,
                extra_pairs,
                universe,
            } => {
                let square = base.power(2, DEFAULT_POWER_CAP)?;
                let n = base.size();
                let mut seed: Vec<usize> = (0..n).map(|a| a * n + a).collect();
                seed.extend(extra_pairs.iter().map(|&(u, v)| u * n + v));
                let closed = square.subuniverse_closure(&seed)?;
                let expected: Vec<(usize, usize)> =
                    closed.iter().map(|&c| (c / n, c % n)).collect();
                Ok(&expected == universe)
            }
            CertCheck::PairMembership {
                base,
                derivation,
                pq,
                rs,
                universe,
            } => {
                let top = construct::eval_derivation_pairwise(base, derivation, true)?;
                let bottom = construct::eval_derivation_pairwise(base, derivation, false)?;
                Ok(top == *pq
                    && bottom == *rs
                    && universe.binary_search(pq).is_ok()
                    && universe.binary_search(rs).is_ok())
            }
            CertCheck::GammaDiagonal {
                c_pairs,
                gamma,
                theta,
            } => {
                for (i, &(a, b)) in c_pairs.iter().enumerate() {
                    if a != b {
                        continue;
                    }
                    for (j, &(c, d)) in c_pairs.iter().enumerate() {
                        if !gamma.related(i, j) {
                            continue;
                        }
                        if c != d || !theta.related(a, c) {
                            return Ok(false);
                        }
                    }
                }
                Ok(true)
            }
            CertCheck::GammaSeparates { gamma, a, b } => Ok(!gamma.related(*a, *b)),
            CertCheck::SubalgebraMatrixInstance {
                algebra,
                derivation,
                expected,
            } => {
                let replayed = centrality::replay_matrix_derivation(algebra, derivation)?;
                if replayed != *expected {
                    return Ok(false);
                }
                centrality::verify_matrix_derivation_as_polynomial(algebra, derivation, expected)
            }
        }
    }
}

/// The outcome of replaying a certificate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplayReport {
    pub assertions: usize,
    /// (stage, assertion, recorded, recomputed)
    pub mismatches: Vec<(String, String, bool, bool)>,
    pub ok: bool,
}

/// Re-verify every recorded assertion. Replay succeeds when every
/// recomputation matches its recorded value, every required assertion holds,
/// and the recorded verdict is consistent.
pub fn replay_certificate(cert: &PipelineCertificate) -> Result<ReplayReport> {
    let mut mismatches = Vec::new();
    let mut assertions = 0;
    for stage in &cert.stages {
        for a in &stage.assertions {
            assertions += 1;
            let recomputed = a.check.verify()?;
            if recomputed != a.holds {
                mismatches.push((stage.name.clone(), a.name.clone(), a.holds, recomputed));
            }
        }
    }
    let ok = mismatches.is_empty() && cert.all_required_hold() && cert.verdict == Outcome::Holds;
    Ok(ReplayReport {
        assertions,
        mismatches,
        ok,
    })
}

/// SHA-256 over a list of canonical text parts; used for stage digests.
pub fn digest_parts(parts: &[String]) -> String {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0u8]);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
