//! Exhaustive search over operation tables: enumerate every algebra of a
//! given size and signature in lexicographic table order, evaluate a
//! predicate, and stream the matches.

use finalg::{FiniteAlgebra, Operation};

use crate::document::AlgebraDocument;
use crate::predicate::{eval_predicate, Pred, PredicateBudget};
use crate::CliError;

#[derive(Debug, Clone)]
pub struct SearchSpec {
    pub size: usize,
    pub signature: Vec<usize>,
    pub predicate: Pred,
    /// stop streaming after this many matches
    pub limit: Option<usize>,
    /// stop examining after this many candidates; exceeding it flags the
    /// result inconclusive
    pub budget: usize,
    /// keep only candidates that are the lexicographically least member of
    /// their isomorphism class (naive table canonicalization)
    pub filter_isomorphs: bool,
}

/// All permutations of `0..n` in lexicographic order.
fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..n).collect();
    fn rec(current: &mut Vec<usize>, pos: usize, out: &mut Vec<Vec<usize>>) {
        if pos == current.len() {
            out.push(current.clone());
            return;
        }
        for i in pos..current.len() {
            current.swap(pos, i);
            rec(current, pos + 1, out);
            current.swap(pos, i);
        }
    }
    rec(&mut current, 0, &mut out);
    out.sort();
    out
}

/// The concatenated tables of the relabelled algebra: entry for arguments
/// x under the image is sigma(t(sigma^-1 x)).
fn relabelled_digits(
    n: usize,
    signature: &[usize],
    cells: &[usize],
    digits: &[usize],
    sigma: &[usize],
) -> Vec<usize> {
    let mut inverse = vec![0usize; n];
    for (i, &s) in sigma.iter().enumerate() {
        inverse[s] = i;
    }
    let mut out = Vec::with_capacity(digits.len());
    let mut offset = 0;
    for (&arity, &len) in signature.iter().zip(cells.iter()) {
        for code in 0..len {
            // decode the argument tuple, pull back along sigma, look up, push forward
            let mut args_code = 0usize;
            let mut rem = code;
            let mut pulled = vec![0usize; arity];
            for slot in pulled.iter_mut().rev() {
                *slot = inverse[rem % n];
                rem /= n;
            }
            for &a in &pulled {
                args_code = args_code * n + a;
            }
            out.push(sigma[digits[offset + args_code]]);
        }
        offset += len;
    }
    out
}

#[derive(Debug)]
pub struct SearchResult {
    pub examined: usize,
    pub matches: Vec<(usize, AlgebraDocument)>,
    /// the whole space was visited (or the match limit was reached first)
    pub complete: bool,
    /// the candidate budget ran out before the space was exhausted
    pub truncated: bool,
}

/// Lexicographic enumeration: the concatenated tables of all operations form
/// one base-`size` odometer, most significant digit first.
pub fn run_search(spec: &SearchSpec, budget: &PredicateBudget) -> Result<SearchResult, CliError> {
    let n = spec.size;
    if n == 0 {
        return Err(CliError::input("search size must be positive".into()));
    }
    let cells: Vec<usize> = spec
        .signature
        .iter()
        .map(|&k| {
            n.checked_pow(k as u32)
                .ok_or_else(|| CliError::input("signature arity too large".into()))
        })
        .collect::<Result<_, _>>()?;
    let total_cells: usize = cells.iter().sum();
    let mut digits = vec![0usize; total_cells];
    let mut examined = 0usize;
    let mut matches = Vec::new();
    let mut complete = false;
    let mut truncated = false;
    loop {
        if examined >= spec.budget {
            truncated = true;
            break;
        }
        // materialize the candidate
        let mut ops = Vec::with_capacity(spec.signature.len());
        let mut offset = 0;
        for (i, (&arity, &len)) in spec.signature.iter().zip(cells.iter()).enumerate() {
            ops.push(Operation::new(
                format!("f{i}"),
                arity,
                digits[offset..offset + len].to_vec(),
            ));
            offset += len;
        }
        let alg = FiniteAlgebra::new(n, ops).expect("enumerated tables are valid");
        let ordinal = examined;
        examined += 1;
        let canonical = !spec.filter_isomorphs
            || permutations(n).iter().all(|sigma| {
                relabelled_digits(n, &spec.signature, &cells, &digits, sigma) >= digits
            });
        if canonical && eval_predicate(&spec.predicate, &alg, None, budget)? {
            let mut doc = AlgebraDocument::from_algebra(&format!("candidate-{ordinal}"), &alg);
            doc.zero = None;
            matches.push((ordinal, doc));
            if spec.limit.is_some_and(|l| matches.len() >= l) {
                complete = true;
                break;
            }
        }
        // advance the odometer
        let mut pos = total_cells;
        loop {
            if pos == 0 {
                complete = true;
                break;
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < n {
                break;
            }
            digits[pos] = 0;
        }
        if pos == 0 && digits.iter().all(|&d| d == 0) {
            complete = true;
        }
        if complete {
            break;
        }
    }
    Ok(SearchResult {
        examined,
        matches,
        complete,
        truncated,
    })
}
