//! The five workbench commands. Each builds a deterministic report, may
//! write artifact files, and yields the exit code contract:
//! 0 holds/success, 1 fails, 2 inconclusive, 3 input error.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use finalg::centrality::{self, MatrixCondition};
use finalg::certificate::{self, PipelineCertificate, SourceRef};
use finalg::congruence::all_congruences;
use finalg::construct::{
    build_s, collapse_to_ordered, lemma_witness_pipeline, theorem2_pipeline, IndependenceBudget,
    LemmaOutcome,
};
use finalg::{oracle, Congruence, FiniteAlgebra, MaltsevMode, Outcome, Verdict};

use crate::document::{parse_algebra, resolve_order, resolve_theta, AlgebraDocument};
use crate::predicate::{parse_predicate, PredicateBudget};
use crate::report::Report;
use crate::search::{run_search, SearchSpec};
use crate::CliError;

pub struct CmdOutcome {
    pub report: Report,
    pub exit: i32,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn load_document(path: &Path) -> Result<(AlgebraDocument, FiniteAlgebra, String), CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    let digest = sha256_hex(text.as_bytes());
    let doc = parse_algebra(&text)?;
    let alg = doc.to_algebra()?;
    Ok((doc, alg, digest))
}

#[derive(Debug, Clone)]
pub struct CheckOptions {
    pub property: String,
    pub theta: Option<String>,
    pub order: Option<String>,
    pub zero: Option<usize>,
    pub mode: MaltsevMode,
    pub oracle: bool,
    pub max_arity: usize,
    pub out: Option<PathBuf>,
}

const CLONE_CAP: usize = 1_000_000;
const CONGRUENCE_CAP: usize = 10_000;

pub fn cmd_check(file: &Path, opts: &CheckOptions) -> Result<CmdOutcome, CliError> {
    let started = Instant::now();
    let (doc, alg, digest) = load_document(file)?;
    let mut report = Report::new("check");
    report.kv("input", format!("{} (sha256:{digest})", file.display()));
    report.kv("algebra", format!("{} (size {})", doc.name, doc.size));
    report.kv("property", &opts.property);

    let theta = opts
        .theta
        .as_deref()
        .map(|t| resolve_theta(&doc, t))
        .transpose()?;
    let order = opts
        .order
        .as_deref()
        .map(|o| resolve_order(&doc, o))
        .transpose()?;
    let zero = opts.zero.or(doc.zero);

    let need = |cond: bool, what: &str| -> Result<(), CliError> {
        if cond {
            Ok(())
        } else {
            Err(CliError::input(format!(
                "property `{}` requires {what}",
                opts.property
            )))
        }
    };

    let verdict: Verdict = match opts.property.as_str() {
        "abelian" => centrality::check_matrix_condition(&alg, MatrixCondition::Abelian)?,
        "strongly-rectangular" => {
            centrality::check_matrix_condition(&alg, MatrixCondition::StronglyRectangular)?
        }
        "strongly-abelian" => {
            centrality::check_matrix_condition(&alg, MatrixCondition::StronglyAbelian)?
        }
        "rectangular" => {
            need(order.is_some(), "--order")?;
            centrality::check_rectangular(&alg, order.as_ref().unwrap())?
        }
        "affine" => {
            report.kv("mode", opts.mode.name());
            centrality::check_affine(&alg, opts.mode, CLONE_CAP)?
        }
        "strongly-solvable" => centrality::check_strongly_solvable(&alg, CONGRUENCE_CAP)?,
        "property-p" => {
            need(zero.is_some(), "--zero (or a document zero)")?;
            report.kv("zero", zero.unwrap());
            centrality::check_property_p(&alg, zero.unwrap())?
        }
        "c11" => {
            need(theta.is_some(), "--theta")?;
            report.kv("theta", theta.as_ref().unwrap());
            centrality::term_condition_c11(&alg, theta.as_ref().unwrap())?
        }
        "congruence-strongly-abelian" => {
            need(theta.is_some(), "--theta")?;
            report.kv("theta", theta.as_ref().unwrap());
            centrality::congruence_strongly_abelian(&alg, theta.as_ref().unwrap())?
        }
        other => {
            return Err(CliError::input(format!(
                "unknown property `{other}`; expected one of abelian, strongly-rectangular, \
                 strongly-abelian, rectangular, affine, strongly-solvable, property-p, c11, \
                 congruence-strongly-abelian"
            )))
        }
    };
    report.verdict(&verdict);

    let mut exit = verdict.exit_code();
    if opts.oracle {
        report.kv("oracle-max-arity", opts.max_arity);
        match oracle_agreement(&alg, opts, &theta, &order, zero, &verdict)? {
            OracleOutcome::Agree(detail) => report.kv("oracle", format!("agree ({detail})")),
            OracleOutcome::Disagree(detail) => {
                report.kv("oracle", format!("DISAGREE ({detail})"));
                exit = 2;
            }
            OracleOutcome::NotApplicable => report.kv("oracle", "not-applicable"),
        }
    }
    report.kv("exit", exit);
    report.timing("total", started.elapsed());
    if let Some(out) = &opts.out {
        fs::write(out, report.render())
            .map_err(|e| CliError::input(format!("cannot write {}: {e}", out.display())))?;
    }
    Ok(CmdOutcome { report, exit })
}

enum OracleOutcome {
    Agree(String),
    Disagree(String),
    NotApplicable,
}

/// Brute-force cross-check of the verdict by direct polynomial enumeration.
fn oracle_agreement(
    alg: &FiniteAlgebra,
    opts: &CheckOptions,
    theta: &Option<Congruence>,
    order: &Option<finalg::BinaryRelation>,
    zero: Option<usize>,
    verdict: &Verdict,
) -> Result<OracleOutcome, CliError> {
    if verdict.is_inconclusive() {
        return Ok(OracleOutcome::NotApplicable);
    }
    let holds = verdict.is_holds();
    let outcome = |oracle_holds: bool, detail: String| {
        if oracle_holds == holds {
            OracleOutcome::Agree(detail)
        } else {
            OracleOutcome::Disagree(detail)
        }
    };
    Ok(match opts.property.as_str() {
        "abelian" | "strongly-rectangular" | "strongly-abelian" => {
            let matrices = oracle::polynomial_matrices(alg, opts.max_arity, CLONE_CAP)?;
            let cond = match opts.property.as_str() {
                "abelian" => MatrixCondition::Abelian,
                "strongly-rectangular" => MatrixCondition::StronglyRectangular,
                _ => MatrixCondition::StronglyAbelian,
            };
            let oracle_holds = oracle::condition_holds_on(&matrices, cond);
            outcome(
                oracle_holds,
                format!("{} matrices, arity<={}", matrices.len(), opts.max_arity),
            )
        }
        "rectangular" => {
            let matrices = oracle::polynomial_matrices(alg, opts.max_arity, CLONE_CAP)?;
            let r = order.as_ref().expect("checked");
            let oracle_holds = matrices.iter().all(|m| {
                (0..alg.size())
                    .all(|u| !(r.contains(u, m.q) && r.contains(u, m.r)) || r.contains(u, m.s))
            });
            outcome(
                oracle_holds,
                format!("{} matrices, arity<={}", matrices.len(), opts.max_arity),
            )
        }
        "c11" => {
            let t = theta.as_ref().expect("checked");
            let matrices = oracle::polynomial_matrices(alg, opts.max_arity, CLONE_CAP)?;
            let oracle_holds = matrices.iter().all(|m| {
                (!t.related(m.p, m.q) || t.related(m.r, m.s))
                    && (!t.related(m.p, m.r) || t.related(m.q, m.s))
            });
            outcome(
                oracle_holds,
                format!("{} matrices, arity<={}", matrices.len(), opts.max_arity),
            )
        }
        "congruence-strongly-abelian" => {
            let t = theta.as_ref().expect("checked");
            let matrices =
                oracle::polynomial_matrices_constrained(alg, opts.max_arity, CLONE_CAP, t, t)?;
            let oracle_holds = matrices
                .iter()
                .all(|m| (m.p != m.q || m.r == m.s) && (m.q != m.r || m.r == m.s));
            outcome(
                oracle_holds,
                format!(
                    "{} constrained matrices, arity<={}",
                    matrices.len(),
                    opts.max_arity
                ),
            )
        }
        "property-p" => {
            let z = zero.expect("checked");
            let brute = centrality::property_p_bruteforce(alg, z, opts.max_arity, CLONE_CAP)?;
            outcome(
                brute.is_none(),
                format!("polynomials of arity<={}", opts.max_arity),
            )
        }
        _ => OracleOutcome::NotApplicable,
    })
}

#[derive(Debug, Clone)]
pub struct ConstructOptions {
    pub theta: Option<String>,
    pub order: Option<String>,
    pub zero: Option<usize>,
    pub out: Option<PathBuf>,
}

fn out_base(file: &Path, pipeline: &str, out: &Option<PathBuf>) -> PathBuf {
    match out {
        Some(p) => p.clone(),
        None => {
            let stem = file.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
            file.with_file_name(format!("{stem}-{pipeline}.json"))
        }
    }
}

fn cert_path(base: &Path) -> PathBuf {
    let mut s = base.as_os_str().to_owned();
    s.push(".cert.json");
    PathBuf::from(s)
}

fn write_certificate(
    path: &Path,
    mut cert: PipelineCertificate,
    source_path: &Path,
    source_digest: &str,
) -> Result<(), CliError> {
    cert.source = Some(SourceRef {
        path: source_path.display().to_string(),
        sha256: source_digest.to_string(),
    });
    let mut text = serde_json::to_string_pretty(&cert).expect("certificate serializes");
    text.push('\n');
    fs::write(path, text)
        .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))
}

fn report_stages(report: &mut Report, cert: &PipelineCertificate) {
    for stage in &cert.stages {
        let green = stage.assertions.iter().filter(|a| a.satisfied()).count();
        let total = stage.assertions.len();
        let mark = if green == total { "ok" } else { "MONITORED" };
        report.kv(
            &format!("stage {}", stage.name),
            format!("{green}/{total} assertions {mark}"),
        );
        for a in &stage.assertions {
            if a.holds != a.expected {
                report.kv(
                    &format!("  {}", a.name),
                    format!(
                        "observed {}, expected {} ({})",
                        a.holds,
                        a.expected,
                        if a.required { "required" } else { "monitored" }
                    ),
                );
            }
        }
    }
    report.kv("certificate-assertions", cert.assertion_count());
    report.kv("certificate-verdict", cert.verdict);
}

pub fn cmd_construct(
    pipeline: &str,
    file: &Path,
    opts: &ConstructOptions,
) -> Result<CmdOutcome, CliError> {
    let started = Instant::now();
    let (doc, alg, digest) = load_document(file)?;
    let mut report = Report::new("construct");
    report.kv("pipeline", pipeline);
    report.kv("input", format!("{} (sha256:{digest})", file.display()));
    report.kv("algebra", format!("{} (size {})", doc.name, doc.size));
    let base = out_base(file, pipeline, &opts.out);
    let budget = IndependenceBudget::default();

    match pipeline {
        "build-s" => {
            let theta_arg = opts
                .theta
                .as_deref()
                .ok_or_else(|| CliError::input("build-s requires --theta".into()))?;
            let theta = resolve_theta(&doc, theta_arg)?;
            report.kv("theta", &theta);
            let (s, cert) = build_s(&alg, &theta, &budget, true)?;
            let mut out_doc = AlgebraDocument::from_algebra(&format!("{}-s", doc.name), &s.algebra);
            out_doc.zero = Some(s.zero);
            fs::write(&base, out_doc.to_json())
                .map_err(|e| CliError::input(format!("cannot write {}: {e}", base.display())))?;
            let cpath = cert_path(&base);
            write_certificate(&cpath, cert.clone(), file, &digest)?;
            report.kv("result-size", s.algebra.size());
            report.kv("result-zero", s.zero);
            report.kv("algebra-out", base.display());
            report.kv("certificate-out", cpath.display());
            report_stages(&mut report, &cert);
        }
        "collapse-ordered" => {
            let theta_arg = opts
                .theta
                .as_deref()
                .ok_or_else(|| CliError::input("collapse-ordered requires --theta".into()))?;
            let theta = resolve_theta(&doc, theta_arg)?;
            report.kv("theta", &theta);
            let (s, _) = build_s(&alg, &theta, &budget, true)?;
            let (collapsed, cert) = collapse_to_ordered(&s, &budget, true)?;
            let mut out_doc = AlgebraDocument::from_algebra(
                &format!("{}-collapsed", doc.name),
                &collapsed.algebra,
            );
            out_doc.zero = Some(collapsed.zero);
            out_doc
                .orders
                .insert("leq".to_string(), collapsed.order.pairs());
            fs::write(&base, out_doc.to_json())
                .map_err(|e| CliError::input(format!("cannot write {}: {e}", base.display())))?;
            let cpath = cert_path(&base);
            write_certificate(&cpath, cert.clone(), file, &digest)?;
            report.kv("result-size", collapsed.algebra.size());
            report.kv("result-zero", collapsed.zero);
            report.kv("algebra-out", base.display());
            report.kv("certificate-out", cpath.display());
            report_stages(&mut report, &cert);
        }
        "theorem2" => {
            let order_arg = opts
                .order
                .as_deref()
                .ok_or_else(|| CliError::input("theorem2 requires --order".into()))?;
            let order = resolve_order(&doc, order_arg)?;
            let zero = opts
                .zero
                .or(doc.zero)
                .ok_or_else(|| CliError::input("theorem2 requires --zero (or a document zero)".into()))?;
            report.kv("order", order_arg);
            report.kv("zero", zero);
            let (out, cert) = theorem2_pipeline(&alg, &order, zero)?;
            let mut out_doc =
                AlgebraDocument::from_algebra(&format!("{}-t", doc.name), &out.algebra);
            out_doc.zero = Some(out.zero);
            out_doc.orders.insert("leq".to_string(), out.order.pairs());
            fs::write(&base, out_doc.to_json())
                .map_err(|e| CliError::input(format!("cannot write {}: {e}", base.display())))?;
            let cpath = cert_path(&base);
            write_certificate(&cpath, cert.clone(), file, &digest)?;
            report.kv("result-size", out.algebra.size());
            report.kv("result-zero", out.zero);
            report.kv("algebra-out", base.display());
            report.kv("certificate-out", cpath.display());
            report_stages(&mut report, &cert);
        }
        "lemma-witness" => {
            let theta_arg = opts
                .theta
                .as_deref()
                .ok_or_else(|| CliError::input("lemma-witness requires --theta".into()))?;
            let theta = resolve_theta(&doc, theta_arg)?;
            report.kv("theta", &theta);
            let (outcome, cert) = lemma_witness_pipeline(&alg, &theta)?;
            let verdict = outcome.verdict();
            report.verdict(&verdict);
            if let LemmaOutcome::Witness(w) = &outcome {
                let mut wpath = base.as_os_str().to_owned();
                wpath.push(".witness.json");
                let wpath = PathBuf::from(wpath);
                let mut text = serde_json::to_string_pretty(w.as_ref()).expect("serializes");
                text.push('\n');
                fs::write(&wpath, text).map_err(|e| {
                    CliError::input(format!("cannot write {}: {e}", wpath.display()))
                })?;
                report.kv("witness-out", wpath.display());
                report.kv("witness-subalgebra-size", w.c_algebra.size());
            }
            let cpath = cert_path(&base);
            write_certificate(&cpath, cert.clone(), file, &digest)?;
            report.kv("certificate-out", cpath.display());
            report_stages(&mut report, &cert);
        }
        other => {
            return Err(CliError::input(format!(
                "unknown pipeline `{other}`; expected build-s, collapse-ordered, theorem2 or lemma-witness"
            )))
        }
    }
    report.kv("exit", 0);
    report.timing("total", started.elapsed());
    Ok(CmdOutcome { report, exit: 0 })
}

pub fn cmd_replay(file: &Path) -> Result<CmdOutcome, CliError> {
    let started = Instant::now();
    let text = fs::read_to_string(file)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", file.display())))?;
    let cert: PipelineCertificate = serde_json::from_str(&text)
        .map_err(|e| CliError::input(format!("certificate parse error: {e}")))?;
    let mut report = Report::new("replay");
    report.kv("certificate", file.display());
    report.kv("pipeline", &cert.pipeline);
    report.kv("tool-version", &cert.tool_version);

    let mut exit = 0;
    if let Some(source) = &cert.source {
        let path = Path::new(&source.path);
        if path.exists() {
            let bytes = fs::read(path)
                .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
            let digest = sha256_hex(&bytes);
            if digest != source.sha256 {
                report.kv(
                    "source",
                    format!("{}: DIGEST MISMATCH (stale certificate)", source.path),
                );
                exit = 1;
            } else {
                report.kv("source", format!("{}: digest ok", source.path));
            }
        } else {
            report.kv(
                "source",
                format!("{}: not found (skipping digest)", source.path),
            );
        }
    }
    let replay = certificate::replay_certificate(&cert)?;
    report.kv("assertions-replayed", replay.assertions);
    if replay.mismatches.is_empty() {
        report.kv("assertions", "all re-verified");
    } else {
        for (stage, name, recorded, recomputed) in &replay.mismatches {
            report.kv(
                &format!("mismatch {stage}/{name}"),
                format!("recorded {recorded}, recomputed {recomputed}"),
            );
        }
        exit = 1;
    }
    if !replay.ok {
        exit = 1;
    }
    report.kv("replay", if exit == 0 { "ok" } else { "FAILED" });
    report.kv("exit", exit);
    report.timing("total", started.elapsed());
    Ok(CmdOutcome { report, exit })
}

#[derive(Debug, Clone)]
pub struct SearchOptions {
    pub size: usize,
    pub signature: Vec<usize>,
    pub predicate: String,
    pub limit: Option<usize>,
    pub budget: Option<usize>,
    pub filter_isomorphs: bool,
    pub out: Option<PathBuf>,
}

pub fn cmd_search(opts: &SearchOptions) -> Result<CmdOutcome, CliError> {
    let started = Instant::now();
    let predicate = parse_predicate(&opts.predicate)?;
    let spec = SearchSpec {
        size: opts.size,
        signature: opts.signature.clone(),
        predicate,
        limit: opts.limit,
        budget: opts.budget.unwrap_or(1_000_000),
        filter_isomorphs: opts.filter_isomorphs,
    };
    let mut report = Report::new("search");
    report.kv("size", opts.size);
    report.kv(
        "signature",
        format!(
            "[{}]",
            opts.signature
                .iter()
                .map(|a| a.to_string())
                .collect::<Vec<_>>()
                .join(",")
        ),
    );
    report.kv("predicate", &opts.predicate);
    if let Some(limit) = opts.limit {
        report.kv("limit", limit);
    }
    report.kv("budget", spec.budget);
    if spec.filter_isomorphs {
        report.kv("filter-isomorphs", "on");
    }
    let result = run_search(&spec, &PredicateBudget::default())?;
    for (ordinal, doc) in &result.matches {
        report.line(format!(
            "match {}: {}",
            ordinal,
            serde_json::to_string(doc).expect("serializes")
        ));
    }
    report.kv("examined", result.examined);
    report.kv("matched", result.matches.len());
    report.kv(
        "coverage",
        if result.truncated {
            "budget exhausted (partial, inconclusive)"
        } else if result.complete {
            "complete"
        } else {
            "stopped at limit"
        },
    );
    if let Some(out) = &opts.out {
        let mut text = String::new();
        for (_, doc) in &result.matches {
            text.push_str(&serde_json::to_string(doc).expect("serializes"));
            text.push('\n');
        }
        fs::write(out, text)
            .map_err(|e| CliError::input(format!("cannot write {}: {e}", out.display())))?;
        report.kv("matches-out", out.display());
    }
    let exit = if result.truncated { 2 } else { 0 };
    report.kv("exit", exit);
    report.timing("total", started.elapsed());
    Ok(CmdOutcome { report, exit })
}

pub fn cmd_congruences(file: &Path, limit: Option<usize>) -> Result<CmdOutcome, CliError> {
    let started = Instant::now();
    let (doc, alg, digest) = load_document(file)?;
    let mut report = Report::new("congruences");
    report.kv("input", format!("{} (sha256:{digest})", file.display()));
    report.kv("algebra", format!("{} (size {})", doc.name, doc.size));
    let cap = limit.unwrap_or(CONGRUENCE_CAP);
    let cons = all_congruences(&alg, cap)?;
    for c in &cons {
        report.line(format!("congruence: {c}"));
    }
    report.kv("count", cons.len());
    report.kv("exit", 0);
    report.timing("total", started.elapsed());
    Ok(CmdOutcome { report, exit: 0 })
}

/// Map library errors onto the exit-code contract.
pub fn classify_error(e: &finalg::Error) -> i32 {
    use finalg::Error::*;
    match e {
        ResourceCap { .. } => 2,
        HypothesisFailed { .. } | Degenerate { .. } => 1,
        InternalInvariant(_) => 2,
        _ => 3,
    }
}

/// Outcome-to-exit used by tests.
pub fn outcome_exit(o: Outcome) -> i32 {
    match o {
        Outcome::Holds => 0,
        Outcome::Fails => 1,
        Outcome::Inconclusive => 2,
    }
}
