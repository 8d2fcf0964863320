//! The JSON algebra document: operation tables in the library's row-major
//! convention, plus optional named congruences (block lists), named orders
//! (pair lists, read as `a >= b`), and a designated zero element.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use finalg::{BinaryRelation, Congruence, FiniteAlgebra, Operation};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperationDoc {
    pub symbol: String,
    pub arity: usize,
    pub table: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlgebraDocument {
    pub name: String,
    pub size: usize,
    pub operations: Vec<OperationDoc>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub congruences: BTreeMap<String, Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub orders: BTreeMap<String, Vec<(usize, usize)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero: Option<usize>,
}

impl AlgebraDocument {
    pub fn from_algebra(name: &str, alg: &FiniteAlgebra) -> Self {
        AlgebraDocument {
            name: name.to_string(),
            size: alg.size(),
            operations: alg
                .operations()
                .iter()
                .map(|op| OperationDoc {
                    symbol: op.symbol.clone(),
                    arity: op.arity,
                    table: op.table.clone(),
                })
                .collect(),
            congruences: BTreeMap::new(),
            orders: BTreeMap::new(),
            zero: None,
        }
    }

    pub fn to_algebra(&self) -> Result<FiniteAlgebra, CliError> {
        let ops = self
            .operations
            .iter()
            .map(|o| Operation::new(o.symbol.clone(), o.arity, o.table.clone()))
            .collect();
        FiniteAlgebra::new(self.size, ops)
            .map_err(|e| CliError::input(format!("document `{}`: {e}", self.name)))
    }

    /// Canonical serialization; `parse` of this text reproduces the document.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("document serializes");
        s.push('\n');
        s
    }

    pub fn named_congruence(&self, name: &str) -> Option<&Vec<Vec<usize>>> {
        self.congruences.get(name)
    }

    pub fn named_order(&self, name: &str) -> Option<&Vec<(usize, usize)>> {
        self.orders.get(name)
    }
}

/// Parse and validate an algebra document. Syntax errors carry line and
/// column; semantic errors name the offending item.
pub fn parse_algebra(text: &str) -> Result<AlgebraDocument, CliError> {
    let doc: AlgebraDocument = serde_json::from_str(text).map_err(|e| {
        CliError::input(format!(
            "syntax error at line {}, column {}: {e}",
            e.line(),
            e.column()
        ))
    })?;
    // semantic validation via the library constructor
    doc.to_algebra()?;
    for (name, blocks) in &doc.congruences {
        let c = Congruence::from_blocks(blocks.clone())
            .map_err(|e| CliError::input(format!("congruence `{name}`: {e}")))?;
        if c.size() != doc.size {
            return Err(CliError::input(format!(
                "congruence `{name}` partitions {} elements, document has {}",
                c.size(),
                doc.size
            )));
        }
    }
    for (name, pairs) in &doc.orders {
        BinaryRelation::from_pairs(doc.size, pairs)
            .map_err(|e| CliError::input(format!("order `{name}`: {e}")))?;
    }
    if let Some(zero) = doc.zero {
        if zero >= doc.size {
            return Err(CliError::input(format!(
                "zero element {zero} out of range 0..{}",
                doc.size
            )));
        }
    }
    Ok(doc)
}

/// Resolve a `--theta` argument: a name from the document or an inline block
/// list like `[[0,1],[2]]`.
pub fn resolve_theta(doc: &AlgebraDocument, arg: &str) -> Result<Congruence, CliError> {
    let blocks: Vec<Vec<usize>> = if let Some(named) = doc.named_congruence(arg) {
        named.clone()
    } else if arg.trim_start().starts_with('[') {
        serde_json::from_str(arg)
            .map_err(|e| CliError::input(format!("inline congruence `{arg}`: {e}")))?
    } else if arg == "full" {
        return Ok(Congruence::full(doc.size));
    } else if arg == "identity" {
        return Ok(Congruence::identity(doc.size));
    } else {
        return Err(CliError::input(format!(
            "no congruence named `{arg}` in the document (and not inline blocks)"
        )));
    };
    let c = Congruence::from_blocks(blocks)
        .map_err(|e| CliError::input(format!("congruence `{arg}`: {e}")))?;
    if c.size() != doc.size {
        return Err(CliError::input(format!(
            "congruence `{arg}` partitions {} elements, document has {}",
            c.size(),
            doc.size
        )));
    }
    Ok(c)
}

/// Resolve an `--order` argument: a name from the document, `diagonal`, or an
/// inline pair list like `[[1,0],[0,0],[1,1]]`, read as `a >= b`.
pub fn resolve_order(doc: &AlgebraDocument, arg: &str) -> Result<BinaryRelation, CliError> {
    let pairs: Vec<(usize, usize)> = if let Some(named) = doc.named_order(arg) {
        named.clone()
    } else if arg.trim_start().starts_with('[') {
        serde_json::from_str(arg)
            .map_err(|e| CliError::input(format!("inline order `{arg}`: {e}")))?
    } else if arg == "diagonal" {
        return Ok(BinaryRelation::diagonal(doc.size));
    } else {
        return Err(CliError::input(format!(
            "no order named `{arg}` in the document (and not inline pairs)"
        )));
    };
    BinaryRelation::from_pairs(doc.size, &pairs)
        .map_err(|e| CliError::input(format!("order `{arg}`: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_document_round_trips() {
        let text =
            r#"{"name":"Z2","size":2,"operations":[{"symbol":"add","arity":2,"table":[0,1,1,0]}]}"#;
        let doc = parse_algebra(text).unwrap();
        assert_eq!(doc.size, 2);
        let again = parse_algebra(&doc.to_json()).unwrap();
        assert_eq!(doc, again);
    }

    #[test]
    fn wrong_table_length_names_the_operation() {
        let text =
            r#"{"name":"bad","size":2,"operations":[{"symbol":"add","arity":2,"table":[0,1,1]}]}"#;
        let err = parse_algebra(text).unwrap_err();
        assert_eq!(err.exit, 3);
        assert!(err.message.contains("add"), "{}", err.message);
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = parse_algebra("{\n  \"name\": }").unwrap_err();
        assert!(err.message.contains("line 2"), "{}", err.message);
    }

    #[test]
    fn named_blocks_parse_to_partitions() {
        let text = r#"{"name":"three","size":3,"operations":[],
            "congruences":{"theta":[[0,1],[2]]},
            "orders":{"leq":[[0,0],[1,1],[2,2],[1,0]]},
            "zero":0}"#;
        let doc = parse_algebra(text).unwrap();
        let theta = resolve_theta(&doc, "theta").unwrap();
        assert_eq!(theta.blocks(), &[vec![0, 1], vec![2]]);
        let inline = resolve_theta(&doc, "[[0],[1,2]]").unwrap();
        assert_eq!(inline.num_classes(), 2);
        let order = resolve_order(&doc, "leq").unwrap();
        assert!(order.contains(1, 0));
        assert!(resolve_theta(&doc, "missing").is_err());
    }
}
