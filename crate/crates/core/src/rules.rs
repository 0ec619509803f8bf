//! Learned rules: decoding from assignments, classification, rendering.
//!
//! A rule is k clauses over the binary feature space. CNF polarity means the
//! stored clauses are disjunctions of features joined conjunctively, and a
//! row classifies positive when every clause contains some feature true in
//! the row (an empty clause is false, so a rule containing one predicts a
//! constant 0). A DNF-polarity rule stores the clauses of the CNF learned on
//! negated labels and classifies as the negation of that CNF's value, which
//! by De Morgan reads as a disjunction of terms whose members are the
//! negated features.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::FeatureMap;
use crate::encoder::VarLayout;
use crate::solver::Model;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Cnf,
    Dnf,
}

impl std::fmt::Display for Polarity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Polarity::Cnf => write!(f, "cnf"),
            Polarity::Dnf => write!(f, "dnf"),
        }
    }
}

/// A learned k-clause rule over m named binary features.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    polarity: Polarity,
    clauses: Vec<BTreeSet<usize>>,
    feature_names: Vec<String>,
}

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("assignment is missing selector variables (has {got}, needs {needed})")]
    IncompleteAssignment { got: usize, needed: usize },
    #[error("row has {got} features, rule expects {expected}")]
    RowLength { expected: usize, got: usize },
    #[error("feature index {index} out of range (m = {m})")]
    IndexOutOfRange { index: usize, m: usize },
    #[error("feature map covers {got} features, rule references {needed}")]
    MapTooSmall { needed: usize, got: usize },
    #[error("rule file: {detail}")]
    Format { detail: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Reads the rule off a model: feature j belongs to clause l exactly when
/// selector b(l, j) is true. The result has CNF polarity; DNF training wraps
/// it afterwards.
pub fn decode(model: &Model, layout: &VarLayout, names: &[String]) -> Result<Rule, RuleError> {
    if model.values().len() < layout.num_vars() + 1 {
        return Err(RuleError::IncompleteAssignment {
            got: model.values().len().saturating_sub(1),
            needed: layout.num_vars(),
        });
    }
    let mut clauses = Vec::with_capacity(layout.k());
    for l in 0..layout.k() {
        let clause: BTreeSet<usize> = (0..layout.m())
            .filter(|&j| model.value(layout.selector(l, j)))
            .collect();
        clauses.push(clause);
    }
    let rule = Rule {
        polarity: Polarity::Cnf,
        clauses,
        feature_names: names.to_vec(),
    };
    if rule.clauses.iter().any(BTreeSet::is_empty) {
        log::warn!("decoded rule has an empty clause (predicts a constant class)");
    }
    Ok(rule)
}

impl Rule {
    pub fn new(
        polarity: Polarity,
        clauses: Vec<BTreeSet<usize>>,
        feature_names: Vec<String>,
    ) -> Result<Rule, RuleError> {
        let m = feature_names.len();
        for clause in &clauses {
            if let Some(&index) = clause.iter().find(|&&j| j >= m) {
                return Err(RuleError::IndexOutOfRange { index, m });
            }
        }
        Ok(Rule {
            polarity,
            clauses,
            feature_names,
        })
    }

    pub fn polarity(&self) -> Polarity {
        self.polarity
    }

    pub fn k(&self) -> usize {
        self.clauses.len()
    }

    pub fn num_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Clause contents (feature indices, 0-based). Under DNF polarity these
    /// are the clauses of the complementary CNF.
    pub fn clauses(&self) -> &[BTreeSet<usize>] {
        &self.clauses
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Re-polarized copy (used by DNF training to wrap a CNF decode).
    pub fn with_polarity(mut self, polarity: Polarity) -> Rule {
        self.polarity = polarity;
        self
    }

    /// Total literal count over all clauses.
    pub fn size(&self) -> usize {
        self.clauses.iter().map(BTreeSet::len).sum()
    }

    /// Classifies one binary row.
    pub fn classify(&self, row: &[bool]) -> Result<bool, RuleError> {
        if row.len() != self.feature_names.len() {
            return Err(RuleError::RowLength {
                expected: self.feature_names.len(),
                got: row.len(),
            });
        }
        let cnf_value = self
            .clauses
            .iter()
            .all(|clause| clause.iter().any(|&j| row[j]));
        Ok(match self.polarity {
            Polarity::Cnf => cnf_value,
            Polarity::Dnf => !cnf_value,
        })
    }

    /// Renders the rule over the original column names and thresholds.
    ///
    /// CNF: clauses in slot order joined by AND, features ascending inside.
    /// DNF: each stored clause becomes a term of negated features, terms
    /// joined by OR. Duplicate clauses render once with a multiplicity note.
    /// A rule whose clauses are all empty is the constant FALSE (CNF) or
    /// TRUE (DNF).
    pub fn render(&self, map: &FeatureMap) -> Result<String, RuleError> {
        if map.len() < self.feature_names.len() {
            return Err(RuleError::MapTooSmall {
                needed: self.feature_names.len(),
                got: map.len(),
            });
        }
        let (negate, joiner, inner_joiner, constant) = match self.polarity {
            Polarity::Cnf => (false, " AND ", " OR ", "FALSE"),
            Polarity::Dnf => (true, " OR ", " AND ", "TRUE"),
        };
        if self.clauses.iter().all(BTreeSet::is_empty) {
            return Ok(constant.to_string());
        }
        let mut seen: Vec<(&BTreeSet<usize>, usize)> = Vec::new();
        for clause in &self.clauses {
            match seen.iter_mut().find(|(c, _)| *c == clause) {
                Some((_, count)) => *count += 1,
                None => seen.push((clause, 1)),
            }
        }
        let mut parts = Vec::with_capacity(seen.len());
        for (clause, count) in seen {
            let body = if clause.is_empty() {
                constant.to_string()
            } else {
                clause
                    .iter()
                    .map(|&j| {
                        let entry = &map.entries()[j];
                        if negate {
                            entry.negated_name()
                        } else {
                            entry.display_name()
                        }
                    })
                    .collect::<Vec<_>>()
                    .join(inner_joiner)
            };
            let note = if count > 1 {
                format!(" [x{count}]")
            } else {
                String::new()
            };
            parts.push(format!("( {body} ){note}"));
        }
        Ok(parts.join(joiner))
    }

    pub fn to_toml(&self, provenance: Option<&Provenance>) -> String {
        let repr = RuleRepr {
            polarity: self.polarity,
            k: self.clauses.len(),
            // 1-based in the file, matching the rendered feature numbering
            clauses: self
                .clauses
                .iter()
                .map(|c| c.iter().map(|&j| j + 1).collect())
                .collect(),
            feature_names: self.feature_names.clone(),
            provenance: provenance.cloned(),
        };
        toml::to_string_pretty(&repr).expect("rule serialization cannot fail")
    }

    pub fn from_toml(text: &str) -> Result<(Rule, Option<Provenance>), RuleError> {
        let repr: RuleRepr = toml::from_str(text).map_err(|e| RuleError::Format {
            detail: e.to_string(),
        })?;
        if repr.k != repr.clauses.len() {
            return Err(RuleError::Format {
                detail: format!("k = {} but {} clauses listed", repr.k, repr.clauses.len()),
            });
        }
        let m = repr.feature_names.len();
        let mut clauses = Vec::with_capacity(repr.clauses.len());
        for raw in &repr.clauses {
            let mut clause = BTreeSet::new();
            for &index in raw {
                if index == 0 || index > m {
                    return Err(RuleError::Format {
                        detail: format!("feature index {index} out of range 1..={m}"),
                    });
                }
                clause.insert(index - 1);
            }
            clauses.push(clause);
        }
        Ok((
            Rule {
                polarity: repr.polarity,
                clauses,
                feature_names: repr.feature_names,
            },
            repr.provenance,
        ))
    }

    pub fn save(&self, path: &Path, provenance: Option<&Provenance>) -> Result<(), RuleError> {
        std::fs::write(path, self.to_toml(provenance))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<(Rule, Option<Provenance>), RuleError> {
        let text = std::fs::read_to_string(path)?;
        Rule::from_toml(&text)
    }
}

/// Training context stored alongside a rule file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub lambda: String,
    pub sparsity: String,
    pub solver_status: String,
    pub objective_cost: u64,
    pub training_errors: usize,
    /// Path of the feature map the rule indexes into.
    pub map: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct RuleRepr {
    polarity: Polarity,
    k: usize,
    clauses: Vec<Vec<usize>>,
    feature_names: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    provenance: Option<Provenance>,
}
