//! Check outcomes with replayable witnesses.

use serde::{Deserialize, Serialize};

use crate::algebra::Term;
use crate::centrality::{Matrix2x2, MatrixLeaf, PairLeaf};
use crate::clones::Derivation;
use crate::congruence::Congruence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Holds,
    Fails,
    Inconclusive,
}

/// Evidence attached to a failing (or holding, for searches) verdict. Every
/// failing witness carries enough data to re-check the violation without
/// rerunning the search that found it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Witness {
    /// A matrix violating a term condition, with the implication it breaks.
    Matrix {
        matrix: Matrix2x2,
        derivation: Option<Derivation<MatrixLeaf>>,
        violated: String,
    },
    /// A matrix plus the order element that breaks rectangularity.
    MatrixElement {
        matrix: Matrix2x2,
        element: usize,
        derivation: Option<Derivation<MatrixLeaf>>,
    },
    Pair {
        a: usize,
        b: usize,
    },
    /// A zero-preservation failure: the pair (p(s), p(0)) with the polynomial
    /// reconstructed from the closure derivation.
    PropertyP {
        value: usize,
        image_of_zero: usize,
        derivation: Derivation<PairLeaf>,
        polynomial: Term,
        arguments: Vec<usize>,
    },
    Compatibility {
        symbol: String,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    MissingReflexive {
        element: usize,
    },
    Assignment {
        values: Vec<(usize, usize)>,
    },
    /// An operation found by a clone search, as a table plus a defining term.
    Map {
        arity: usize,
        table: Vec<usize>,
        term: Term,
    },
    /// A compatible partial order, as its pair list.
    Order {
        pairs: Vec<(usize, usize)>,
    },
    CongruenceChain {
        chain: Vec<Congruence>,
    },
    /// Sub-verdicts of a compound check.
    Parts {
        parts: Vec<(String, Verdict)>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub outcome: Outcome,
    pub witness: Option<Witness>,
    pub note: String,
}

impl Verdict {
    pub fn holds(note: impl Into<String>) -> Self {
        Verdict {
            outcome: Outcome::Holds,
            witness: None,
            note: note.into(),
        }
    }

    pub fn holds_with(witness: Witness, note: impl Into<String>) -> Self {
        Verdict {
            outcome: Outcome::Holds,
            witness: Some(witness),
            note: note.into(),
        }
    }

    pub fn fails(witness: Witness, note: impl Into<String>) -> Self {
        Verdict {
            outcome: Outcome::Fails,
            witness: Some(witness),
            note: note.into(),
        }
    }

    /// A failure established by exhaustion rather than a finite witness.
    pub fn fails_bare(note: impl Into<String>) -> Self {
        Verdict {
            outcome: Outcome::Fails,
            witness: None,
            note: note.into(),
        }
    }

    pub fn inconclusive(note: impl Into<String>) -> Self {
        Verdict {
            outcome: Outcome::Inconclusive,
            witness: None,
            note: note.into(),
        }
    }

    pub fn is_holds(&self) -> bool {
        self.outcome == Outcome::Holds
    }

    pub fn is_fails(&self) -> bool {
        self.outcome == Outcome::Fails
    }

    pub fn is_inconclusive(&self) -> bool {
        self.outcome == Outcome::Inconclusive
    }

    /// The CLI exit-code contract: 0 holds, 1 fails, 2 inconclusive.
    pub fn exit_code(&self) -> i32 {
        match self.outcome {
            Outcome::Holds => 0,
            Outcome::Fails => 1,
            Outcome::Inconclusive => 2,
        }
    }
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Outcome::Holds => write!(f, "holds"),
            Outcome::Fails => write!(f, "fails"),
            Outcome::Inconclusive => write!(f, "inconclusive"),
        }
    }
}
