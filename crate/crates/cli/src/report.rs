//! Deterministic plain-text reports. Everything above the timing marker is a
//! pure function of the inputs and flags; the timing section is excluded from
//! byte-for-byte comparisons.

use std::time::Duration;

use finalg::{Verdict, Witness};

pub const TIMING_MARKER: &str = "--- timing ---";

#[derive(Debug, Default)]
pub struct Report {
    body: Vec<String>,
    timings: Vec<(String, Duration)>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        let mut r = Report::default();
        r.kv("finalg", env!("CARGO_PKG_VERSION"));
        r.kv("command", command);
        r
    }

    pub fn kv(&mut self, key: &str, value: impl std::fmt::Display) {
        self.body.push(format!("{key}: {value}"));
    }

    pub fn line(&mut self, s: impl Into<String>) {
        self.body.push(s.into());
    }

    pub fn blank(&mut self) {
        self.body.push(String::new());
    }

    pub fn timing(&mut self, label: &str, d: Duration) {
        self.timings.push((label.to_string(), d));
    }

    pub fn verdict(&mut self, v: &Verdict) {
        self.kv("verdict", v.outcome);
        self.kv("note", &v.note);
        if let Some(w) = &v.witness {
            for line in render_witness(w, 0) {
                self.line(line);
            }
        }
    }

    /// Body plus the timing section.
    pub fn render(&self) -> String {
        let mut out = self.body.join("\n");
        out.push('\n');
        out.push_str(TIMING_MARKER);
        out.push('\n');
        for (label, d) in &self.timings {
            out.push_str(&format!("{label}-ms: {}\n", d.as_millis()));
        }
        out
    }

    /// The part of a rendered report that must be byte-identical across runs.
    pub fn strip_timing(rendered: &str) -> &str {
        match rendered.find(TIMING_MARKER) {
            Some(pos) => &rendered[..pos],
            None => rendered,
        }
    }
}

fn indent(depth: usize) -> String {
    "  ".repeat(depth)
}

/// Render a witness as stable text lines.
pub fn render_witness(w: &Witness, depth: usize) -> Vec<String> {
    let pad = indent(depth);
    match w {
        Witness::Matrix {
            matrix,
            derivation,
            violated,
        } => {
            let mut out = vec![
                format!("{pad}witness-matrix: {matrix}"),
                format!("{pad}violated: {violated}"),
            ];
            if let Some(d) = derivation {
                out.push(format!("{pad}derivation: {}", render_matrix_derivation(d)));
            }
            out
        }
        Witness::MatrixElement {
            matrix,
            element,
            derivation,
        } => {
            let mut out = vec![
                format!("{pad}witness-matrix: {matrix}"),
                format!("{pad}majorizing-element: {element}"),
            ];
            if let Some(d) = derivation {
                out.push(format!("{pad}derivation: {}", render_matrix_derivation(d)));
            }
            out
        }
        Witness::Pair { a, b } => vec![format!("{pad}witness-pair: ({a},{b})")],
        Witness::PropertyP {
            value,
            image_of_zero,
            polynomial,
            arguments,
            ..
        } => vec![
            format!("{pad}witness-pair: ({value},{image_of_zero})"),
            format!("{pad}polynomial: {polynomial}"),
            format!(
                "{pad}arguments: [{}]",
                arguments
                    .iter()
                    .map(|a| a.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            ),
        ],
        Witness::Compatibility { symbol, lhs, rhs } => vec![format!(
            "{pad}witness-compatibility: `{symbol}` on {lhs:?} ~ {rhs:?}"
        )],
        Witness::MissingReflexive { element } => {
            vec![format!("{pad}witness-missing-reflexive: {element}")]
        }
        Witness::Assignment { values } => vec![format!(
            "{pad}witness-assignment: {{{}}}",
            values
                .iter()
                .map(|(v, x)| format!("x{v}={x}"))
                .collect::<Vec<_>>()
                .join(",")
        )],
        Witness::Map { table, term, .. } => vec![
            format!("{pad}witness-operation: {term}"),
            format!(
                "{pad}table: [{}]",
                table
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            ),
        ],
        Witness::Order { pairs } => vec![format!(
            "{pad}witness-order: [{}]",
            pairs
                .iter()
                .map(|(a, b)| format!("[{a},{b}]"))
                .collect::<Vec<_>>()
                .join(",")
        )],
        Witness::CongruenceChain { chain } => vec![format!(
            "{pad}witness-chain: {}",
            chain
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(" < ")
        )],
        Witness::Parts { parts } => {
            let mut out = Vec::new();
            for (name, verdict) in parts {
                out.push(format!("{pad}{name}: {}", verdict.outcome));
                out.push(format!("{pad}  note: {}", verdict.note));
                if let Some(w) = &verdict.witness {
                    out.extend(render_witness(w, depth + 1));
                }
            }
            out
        }
    }
}

/// Prefix term notation over the generator leaves: `row(a,b)` is the matrix
/// `[[a,a],[b,b]]` and `col(u,v)` is `[[u,v],[u,v]]`.
pub fn render_matrix_derivation(d: &finalg::Derivation<finalg::centrality::MatrixLeaf>) -> String {
    use finalg::centrality::MatrixLeaf;
    use finalg::Derivation;
    match d {
        Derivation::Leaf(MatrixLeaf::Row { top, bottom }) => format!("row({top},{bottom})"),
        Derivation::Leaf(MatrixLeaf::Col { left, right }) => format!("col({left},{right})"),
        Derivation::Apply { symbol, args } => {
            let children: Vec<String> = args.iter().map(render_matrix_derivation).collect();
            format!("{symbol}({})", children.join(","))
        }
    }
}
