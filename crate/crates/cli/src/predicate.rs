//! The search predicate language: property atoms combined with and/or/not
//! and the bounded congruence quantifiers `exists-theta(...)` and
//! `forall-theta(...)`. Theta-scoped atoms are only meaningful under a
//! quantifier.
//!
//! ```text
//! expr   := term (("or" | "∨" | "|") term)*
//! term   := factor (("and" | "∧" | "&") factor)*
//! factor := ("not" | "¬" | "!") factor | "(" expr ")" | quant | atom
//! quant  := ("exists-theta" | "forall-theta") "(" expr ")"
//! atom   := abelian | strongly-rectangular | strongly-abelian | rectangular
//!         | strongly-solvable | affine["(" mode ")"] | maltsev["(" mode ")"]
//!         | nontrivial | proper | congruence-strongly-abelian | c11
//! ```

use finalg::centrality;
use finalg::clones;
use finalg::congruence::all_congruences;
use finalg::{Congruence, FiniteAlgebra, MaltsevMode, MatrixCondition, Outcome};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pred {
    And(Box<Pred>, Box<Pred>),
    Or(Box<Pred>, Box<Pred>),
    Not(Box<Pred>),
    ExistsTheta(Box<Pred>),
    ForallTheta(Box<Pred>),
    Atom(Atom),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Atom {
    Abelian,
    StronglyRectangular,
    StronglyAbelian,
    Rectangular,
    StronglySolvable,
    Affine(MaltsevMode),
    Maltsev(MaltsevMode),
    // theta-scoped
    Nontrivial,
    Proper,
    CongruenceStronglyAbelian,
    TermConditionC11,
}

impl Atom {
    fn theta_scoped(&self) -> bool {
        matches!(
            self,
            Atom::Nontrivial
                | Atom::Proper
                | Atom::CongruenceStronglyAbelian
                | Atom::TermConditionC11
        )
    }
}

/// Evaluation budgets for the predicate atoms.
#[derive(Debug, Clone, Copy)]
pub struct PredicateBudget {
    pub clone_cap: usize,
    pub congruence_cap: usize,
    pub order_cap: usize,
}

impl Default for PredicateBudget {
    fn default() -> Self {
        PredicateBudget {
            clone_cap: 1_000_000,
            congruence_cap: 10_000,
            order_cap: 10_000,
        }
    }
}

fn tokenize(input: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in input.chars() {
        match ch {
            '(' | ')' => {
                if !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                }
                tokens.push(ch.to_string());
            }
            '∧' | '&' | '∨' | '|' | '¬' | '!' => {
                if !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                }
                tokens.push(ch.to_string());
            }
            c if c.is_whitespace() => {
                if !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                }
            }
            c => current.push(c),
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

struct Parser {
    tokens: Vec<String>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&str> {
        self.tokens.get(self.pos).map(|s| s.as_str())
    }

    fn bump(&mut self) -> Option<String> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: &str) -> Result<(), CliError> {
        match self.bump() {
            Some(t) if t == tok => Ok(()),
            other => Err(CliError::input(format!(
                "predicate: expected `{tok}`, found {}",
                other.as_deref().unwrap_or("end of input")
            ))),
        }
    }

    fn expr(&mut self) -> Result<Pred, CliError> {
        let mut left = self.term()?;
        while matches!(self.peek(), Some("or") | Some("∨") | Some("|")) {
            self.bump();
            let right = self.term()?;
            left = Pred::Or(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn term(&mut self) -> Result<Pred, CliError> {
        let mut left = self.factor()?;
        while matches!(self.peek(), Some("and") | Some("∧") | Some("&")) {
            self.bump();
            let right = self.factor()?;
            left = Pred::And(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn factor(&mut self) -> Result<Pred, CliError> {
        match self.peek() {
            Some("not") | Some("¬") | Some("!") => {
                self.bump();
                Ok(Pred::Not(Box::new(self.factor()?)))
            }
            Some("(") => {
                self.bump();
                let inner = self.expr()?;
                self.expect(")")?;
                Ok(inner)
            }
            Some("exists-theta") => {
                self.bump();
                self.expect("(")?;
                let inner = self.expr()?;
                self.expect(")")?;
                Ok(Pred::ExistsTheta(Box::new(inner)))
            }
            Some("forall-theta") => {
                self.bump();
                self.expect("(")?;
                let inner = self.expr()?;
                self.expect(")")?;
                Ok(Pred::ForallTheta(Box::new(inner)))
            }
            Some(_) => {
                let word = self.bump().unwrap();
                let mode = if self.peek() == Some("(") {
                    self.bump();
                    let m = self.bump().unwrap_or_default();
                    self.expect(")")?;
                    Some(match m.as_str() {
                        "term" => MaltsevMode::Term,
                        "polynomial" => MaltsevMode::Polynomial,
                        other => {
                            return Err(CliError::input(format!(
                                "predicate: unknown mode `{other}` (expected term or polynomial)"
                            )))
                        }
                    })
                } else {
                    None
                };
                let default_mode = mode.unwrap_or(MaltsevMode::Polynomial);
                let atom = match word.as_str() {
                    "abelian" => Atom::Abelian,
                    "strongly-rectangular" => Atom::StronglyRectangular,
                    "strongly-abelian" => Atom::StronglyAbelian,
                    "rectangular" => Atom::Rectangular,
                    "strongly-solvable" => Atom::StronglySolvable,
                    "affine" => Atom::Affine(default_mode),
                    "maltsev" => Atom::Maltsev(default_mode),
                    "nontrivial" => Atom::Nontrivial,
                    "proper" => Atom::Proper,
                    "congruence-strongly-abelian" => Atom::CongruenceStronglyAbelian,
                    "c11" => Atom::TermConditionC11,
                    other => {
                        return Err(CliError::input(format!(
                            "predicate: unknown atom `{other}`"
                        )))
                    }
                };
                if mode.is_some() && !matches!(atom, Atom::Affine(_) | Atom::Maltsev(_)) {
                    return Err(CliError::input(format!(
                        "predicate: atom `{word}` takes no mode"
                    )));
                }
                Ok(Pred::Atom(atom))
            }
            None => Err(CliError::input("predicate: unexpected end of input".into())),
        }
    }
}

pub fn parse_predicate(input: &str) -> Result<Pred, CliError> {
    let mut p = Parser {
        tokens: tokenize(input),
        pos: 0,
    };
    let pred = p.expr()?;
    if p.pos != p.tokens.len() {
        return Err(CliError::input(format!(
            "predicate: trailing input from `{}`",
            p.tokens[p.pos..].join(" ")
        )));
    }
    check_scoping(&pred, false)?;
    Ok(pred)
}

fn check_scoping(p: &Pred, under_quantifier: bool) -> Result<(), CliError> {
    match p {
        Pred::And(a, b) | Pred::Or(a, b) => {
            check_scoping(a, under_quantifier)?;
            check_scoping(b, under_quantifier)
        }
        Pred::Not(a) => check_scoping(a, under_quantifier),
        Pred::ExistsTheta(a) | Pred::ForallTheta(a) => check_scoping(a, true),
        Pred::Atom(atom) => {
            if atom.theta_scoped() && !under_quantifier {
                return Err(CliError::input(format!(
                    "predicate: `{atom:?}` needs a theta quantifier around it"
                )));
            }
            Ok(())
        }
    }
}

/// Evaluate a predicate on one algebra. An inconclusive atom (a capped
/// search) aborts the evaluation so the caller can flag partial results.
pub fn eval_predicate(
    pred: &Pred,
    alg: &FiniteAlgebra,
    theta: Option<&Congruence>,
    budget: &PredicateBudget,
) -> Result<bool, CliError> {
    match pred {
        Pred::And(a, b) => {
            Ok(eval_predicate(a, alg, theta, budget)? && eval_predicate(b, alg, theta, budget)?)
        }
        Pred::Or(a, b) => {
            Ok(eval_predicate(a, alg, theta, budget)? || eval_predicate(b, alg, theta, budget)?)
        }
        Pred::Not(a) => Ok(!eval_predicate(a, alg, theta, budget)?),
        Pred::ExistsTheta(inner) => {
            let cons = all_congruences(alg, budget.congruence_cap)?;
            for c in &cons {
                if eval_predicate(inner, alg, Some(c), budget)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        Pred::ForallTheta(inner) => {
            let cons = all_congruences(alg, budget.congruence_cap)?;
            for c in &cons {
                if !eval_predicate(inner, alg, Some(c), budget)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        Pred::Atom(atom) => eval_atom(*atom, alg, theta, budget),
    }
}

fn inconclusive(what: &str) -> CliError {
    CliError::inconclusive(format!("predicate atom `{what}` hit its search cap"))
}

fn eval_atom(
    atom: Atom,
    alg: &FiniteAlgebra,
    theta: Option<&Congruence>,
    budget: &PredicateBudget,
) -> Result<bool, CliError> {
    Ok(match atom {
        Atom::Abelian => centrality::matrix_condition_holds(alg, MatrixCondition::Abelian)?,
        Atom::StronglyRectangular => {
            centrality::matrix_condition_holds(alg, MatrixCondition::StronglyRectangular)?
        }
        Atom::StronglyAbelian => {
            centrality::matrix_condition_holds(alg, MatrixCondition::StronglyAbelian)?
        }
        Atom::Rectangular => {
            let v = centrality::search_rectangulating_order(alg, budget.order_cap)?;
            match v.outcome {
                Outcome::Holds => true,
                Outcome::Fails => false,
                Outcome::Inconclusive => return Err(inconclusive("rectangular")),
            }
        }
        Atom::StronglySolvable => {
            centrality::check_strongly_solvable(alg, budget.congruence_cap)?.is_holds()
        }
        Atom::Affine(mode) => {
            let v = centrality::check_affine(alg, mode, budget.clone_cap)?;
            match v.outcome {
                Outcome::Holds => true,
                Outcome::Fails => false,
                Outcome::Inconclusive => return Err(inconclusive("affine")),
            }
        }
        Atom::Maltsev(mode) => {
            let v = clones::find_maltsev(alg, mode, budget.clone_cap)?;
            match v.outcome {
                Outcome::Holds => true,
                Outcome::Fails => false,
                Outcome::Inconclusive => return Err(inconclusive("maltsev")),
            }
        }
        Atom::Nontrivial => !theta_ref(theta)?.is_identity(),
        Atom::Proper => !theta_ref(theta)?.is_full(),
        Atom::CongruenceStronglyAbelian => {
            centrality::congruence_strongly_abelian_holds(alg, theta_ref(theta)?)?
        }
        Atom::TermConditionC11 => centrality::quotient_matrix_condition_holds(
            alg,
            theta_ref(theta)?,
            MatrixCondition::Abelian,
        )?,
    })
}

fn theta_ref(theta: Option<&Congruence>) -> Result<&Congruence, CliError> {
    theta.ok_or_else(|| CliError::input("theta-scoped atom outside a quantifier".into()))
}
