//! Partial weighted MaxSAT formulas and classic DIMACS WCNF serialization.
//!
//! The file format is the pre-2022 WCNF with an explicit top weight:
//! `p wcnf <vars> <clauses> <top>`, one 0-terminated clause per line, hard
//! clauses carrying weight = top, soft clauses their own weight. Comment
//! lines start with `c `.

use std::io::{BufRead, Write};

use thiserror::Error;

use super::VarLayout;

/// DIMACS-style literal: positive = variable true, negative = false.
/// Variables are numbered from 1.
pub type Lit = i32;

/// Variable index (1-based) of a literal.
pub fn lit_var(lit: Lit) -> usize {
    lit.unsigned_abs() as usize
}

/// A partial weighted MaxSAT instance in minimization form: find an
/// assignment satisfying every hard clause that minimizes the total weight of
/// violated soft clauses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WcnfFormula {
    num_vars: usize,
    hard: Vec<Vec<Lit>>,
    soft: Vec<(u64, Vec<Lit>)>,
    top: u64,
}

#[derive(Debug, Error)]
pub enum WcnfError {
    #[error("wcnf: empty hard clause")]
    EmptyHardClause,
    #[error("wcnf: literal {lit} out of range (1..={num_vars})")]
    LiteralOutOfRange { lit: Lit, num_vars: usize },
    #[error("wcnf: soft clause weight must be at least 1")]
    ZeroSoftWeight,
    #[error("wcnf: top weight {top} does not exceed the soft weight sum {soft_sum}")]
    TopTooSmall { top: u64, soft_sum: u64 },
    #[error("wcnf: weight arithmetic overflow")]
    WeightOverflow,
    #[error("wcnf parse: line {line}: {detail}")]
    Parse { line: usize, detail: String },
    #[error("wcnf parse: header declares {declared} clauses, found {found}")]
    ClauseCountMismatch { declared: usize, found: usize },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl WcnfFormula {
    /// Builds a formula, checking every invariant: literals in range, no
    /// empty hard clause, soft weights >= 1, top > sum of soft weights.
    pub fn new(
        num_vars: usize,
        hard: Vec<Vec<Lit>>,
        soft: Vec<(u64, Vec<Lit>)>,
        top: u64,
    ) -> Result<Self, WcnfError> {
        let mut soft_sum: u64 = 0;
        for (w, clause) in &soft {
            if *w == 0 {
                return Err(WcnfError::ZeroSoftWeight);
            }
            soft_sum = soft_sum.checked_add(*w).ok_or(WcnfError::WeightOverflow)?;
            check_lits(clause, num_vars)?;
        }
        for clause in &hard {
            if clause.is_empty() {
                return Err(WcnfError::EmptyHardClause);
            }
            check_lits(clause, num_vars)?;
        }
        if top <= soft_sum {
            return Err(WcnfError::TopTooSmall { top, soft_sum });
        }
        Ok(WcnfFormula {
            num_vars,
            hard,
            soft,
            top,
        })
    }

    /// Builds a formula computing top = 1 + sum of soft weights.
    pub fn with_computed_top(
        num_vars: usize,
        hard: Vec<Vec<Lit>>,
        soft: Vec<(u64, Vec<Lit>)>,
    ) -> Result<Self, WcnfError> {
        let mut soft_sum: u64 = 0;
        for (w, _) in &soft {
            soft_sum = soft_sum.checked_add(*w).ok_or(WcnfError::WeightOverflow)?;
        }
        let top = soft_sum.checked_add(1).ok_or(WcnfError::WeightOverflow)?;
        WcnfFormula::new(num_vars, hard, soft, top)
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn hard_clauses(&self) -> &[Vec<Lit>] {
        &self.hard
    }

    pub fn soft_clauses(&self) -> &[(u64, Vec<Lit>)] {
        &self.soft
    }

    pub fn top(&self) -> u64 {
        self.top
    }

    pub fn num_clauses(&self) -> usize {
        self.hard.len() + self.soft.len()
    }

    /// True when the assignment (indexed by variable, entry 0 unused)
    /// satisfies every hard clause.
    pub fn hard_satisfied(&self, values: &[bool]) -> bool {
        self.hard.iter().all(|c| clause_satisfied(c, values))
    }

    /// Total weight of soft clauses the assignment violates.
    pub fn violation_cost(&self, values: &[bool]) -> u64 {
        self.soft
            .iter()
            .filter(|(_, c)| !clause_satisfied(c, values))
            .map(|(w, _)| *w)
            .sum()
    }
}

/// Evaluates one clause under a full assignment (`values[var]`, 1-based).
pub fn clause_satisfied(clause: &[Lit], values: &[bool]) -> bool {
    clause.iter().any(|&lit| {
        let v = values[lit_var(lit)];
        if lit > 0 {
            v
        } else {
            !v
        }
    })
}

fn check_lits(clause: &[Lit], num_vars: usize) -> Result<(), WcnfError> {
    for &lit in clause {
        let var = lit_var(lit);
        if lit == 0 || var > num_vars {
            return Err(WcnfError::LiteralOutOfRange { lit, num_vars });
        }
    }
    Ok(())
}

/// Writes the formula in classic DIMACS WCNF, preceded by a comment block
/// mapping every variable id to its role (selector / noise / aux) and, for
/// selectors, the feature name.
pub fn emit_wcnf(
    formula: &WcnfFormula,
    layout: &VarLayout,
    feature_names: &[String],
    mut sink: impl Write,
) -> Result<(), WcnfError> {
    writeln!(sink, "c k-clause rule learning instance")?;
    writeln!(
        sink,
        "c layout: k={} m={} n={} (selectors, then noise, then aux)",
        layout.k(),
        layout.m(),
        layout.n()
    )?;
    for var in 1..=layout.num_vars() {
        match layout.role(var) {
            super::VarRole::Selector { clause, feature } => {
                let name = feature_names
                    .get(feature)
                    .map(String::as_str)
                    .unwrap_or("?");
                writeln!(
                    sink,
                    "c var {var} selector clause={} feature={} name={name}",
                    clause + 1,
                    feature + 1
                )?;
            }
            super::VarRole::Noise { sample } => {
                writeln!(sink, "c var {var} noise sample={}", sample + 1)?;
            }
            super::VarRole::Aux { sample, clause } => {
                writeln!(
                    sink,
                    "c var {var} aux sample={} clause={}",
                    sample + 1,
                    clause + 1
                )?;
            }
        }
    }
    writeln!(
        sink,
        "p wcnf {} {} {}",
        formula.num_vars,
        formula.num_clauses(),
        formula.top
    )?;
    for (w, clause) in &formula.soft {
        write_clause(&mut sink, *w, clause)?;
    }
    for clause in &formula.hard {
        write_clause(&mut sink, formula.top, clause)?;
    }
    sink.flush()?;
    Ok(())
}

fn write_clause(sink: &mut impl Write, weight: u64, clause: &[Lit]) -> std::io::Result<()> {
    write!(sink, "{weight}")?;
    for lit in clause {
        write!(sink, " {lit}")?;
    }
    writeln!(sink, " 0")
}

/// Parses classic-format WCNF text back into a formula.
///
/// The result is clause-for-clause equal (order preserved) to what
/// [`emit_wcnf`] produced for the same formula.
pub fn parse_wcnf(reader: impl BufRead) -> Result<WcnfFormula, WcnfError> {
    let mut header: Option<(usize, usize, u64)> = None;
    let mut hard: Vec<Vec<Lit>> = Vec::new();
    let mut soft: Vec<(u64, Vec<Lit>)> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let text = line.trim();
        if text.is_empty() || text.starts_with('c') {
            continue;
        }
        if text.starts_with('p') {
            if header.is_some() {
                return Err(WcnfError::Parse {
                    line: lineno,
                    detail: "duplicate header".into(),
                });
            }
            let mut parts = text.split_whitespace();
            let (_p, fmt) = (parts.next(), parts.next());
            if fmt != Some("wcnf") {
                return Err(WcnfError::Parse {
                    line: lineno,
                    detail: format!("expected 'p wcnf', got '{text}'"),
                });
            }
            let nums: Vec<&str> = parts.collect();
            if nums.len() != 3 {
                return Err(WcnfError::Parse {
                    line: lineno,
                    detail: "header needs <vars> <clauses> <top>".into(),
                });
            }
            let vars = nums[0].parse().map_err(|_| WcnfError::Parse {
                line: lineno,
                detail: format!("bad variable count '{}'", nums[0]),
            })?;
            let clauses = nums[1].parse().map_err(|_| WcnfError::Parse {
                line: lineno,
                detail: format!("bad clause count '{}'", nums[1]),
            })?;
            let top = nums[2].parse().map_err(|_| WcnfError::Parse {
                line: lineno,
                detail: format!("bad top weight '{}'", nums[2]),
            })?;
            header = Some((vars, clauses, top));
            continue;
        }
        let (num_vars, _, top) = header.ok_or(WcnfError::Parse {
            line: lineno,
            detail: "clause before header".into(),
        })?;
        let mut tokens = text.split_whitespace();
        let weight: u64 = tokens
            .next()
            .expect("non-empty line")
            .parse()
            .map_err(|_| WcnfError::Parse {
                line: lineno,
                detail: "clause line must start with a weight".into(),
            })?;
        let mut lits: Vec<Lit> = Vec::new();
        let mut terminated = false;
        for tok in tokens {
            let lit: Lit = tok.parse().map_err(|_| WcnfError::Parse {
                line: lineno,
                detail: format!("bad literal '{tok}'"),
            })?;
            if lit == 0 {
                terminated = true;
                break;
            }
            if lit_var(lit) > num_vars {
                return Err(WcnfError::Parse {
                    line: lineno,
                    detail: format!("literal {lit} exceeds declared {num_vars} variables"),
                });
            }
            lits.push(lit);
        }
        if !terminated {
            return Err(WcnfError::Parse {
                line: lineno,
                detail: "clause not 0-terminated".into(),
            });
        }
        if weight > top {
            return Err(WcnfError::Parse {
                line: lineno,
                detail: format!("weight {weight} exceeds top {top} on a soft line"),
            });
        }
        if weight == top {
            hard.push(lits);
        } else {
            soft.push((weight, lits));
        }
    }
    let (num_vars, declared, top) = header.ok_or(WcnfError::Parse {
        line: 0,
        detail: "missing 'p wcnf' header".into(),
    })?;
    let found = hard.len() + soft.len();
    if found != declared {
        return Err(WcnfError::ClauseCountMismatch { declared, found });
    }
    WcnfFormula::new(num_vars, hard, soft, top)
}
