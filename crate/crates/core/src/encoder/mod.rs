//! Construction of the MaxSAT instance for k-clause rule learning.
//!
//! Variables, in one contiguous 1-based numbering:
//!
//! * selectors `b(l, j)`: feature j belongs to clause l of the learned rule
//!   (row-major: all features of clause 1, then clause 2, ...);
//! * noise `eta(i)`: sample i is written off as noise (misclassified);
//! * aux `z(i, l)`: Tseitin variable standing for "clause l misses sample
//!   i's row", allocated only for samples labeled 0.
//!
//! Per sample the instance carries a soft unit clause against its noise
//! variable (weight lambda), per selector a soft unit clause against it
//! (weight = the feature's cost), and hard clauses tying noise variables to
//! actual rule behavior on the row: positively labeled samples demand every
//! clause hit the row unless the noise variable is set; negatively labeled
//! samples demand some clause miss the row, encoded one-sidedly through the
//! aux variables (only `z -> clause misses` is emitted; the reverse is never
//! needed because z appears positively in one clause only and soft pressure
//! never pushes z high).

mod wcnf;

pub use wcnf::{
    clause_satisfied, emit_wcnf, lit_var, parse_wcnf, Lit, WcnfError, WcnfFormula,
};

use thiserror::Error;

use crate::dataset::BinaryDataset;

/// Variable numbering for one encoded instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarLayout {
    k: usize,
    m: usize,
    n: usize,
    /// Samples labeled 0, ascending; their position is the aux block index.
    neg_samples: Vec<usize>,
    /// Per sample: position in `neg_samples`, if negative.
    neg_index: Vec<Option<usize>>,
}

/// What one variable id stands for. All fields are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarRole {
    Selector { clause: usize, feature: usize },
    Noise { sample: usize },
    Aux { sample: usize, clause: usize },
}

impl VarLayout {
    pub fn new(k: usize, m: usize, labels: &[bool]) -> VarLayout {
        let neg_samples: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
        let mut neg_index = vec![None; labels.len()];
        for (pos, &i) in neg_samples.iter().enumerate() {
            neg_index[i] = Some(pos);
        }
        VarLayout {
            k,
            m,
            n: labels.len(),
            neg_samples,
            neg_index,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Samples labeled 0, ascending.
    pub fn negative_samples(&self) -> &[usize] {
        &self.neg_samples
    }

    pub fn is_negative(&self, sample: usize) -> bool {
        self.neg_index[sample].is_some()
    }

    pub fn num_vars(&self) -> usize {
        self.k * self.m + self.n + self.k * self.neg_samples.len()
    }

    /// Variable id of selector b(clause, feature); arguments 0-based.
    pub fn selector(&self, clause: usize, feature: usize) -> usize {
        debug_assert!(clause < self.k && feature < self.m);
        clause * self.m + feature + 1
    }

    /// Variable id of the noise variable of a sample; argument 0-based.
    pub fn noise(&self, sample: usize) -> usize {
        debug_assert!(sample < self.n);
        self.k * self.m + sample + 1
    }

    /// Variable id of aux z(sample, clause); `None` for positive samples.
    pub fn aux(&self, sample: usize, clause: usize) -> Option<usize> {
        debug_assert!(sample < self.n && clause < self.k);
        self.neg_index[sample]
            .map(|pos| self.k * self.m + self.n + pos * self.k + clause + 1)
    }

    pub fn role(&self, var: usize) -> VarRole {
        debug_assert!(var >= 1 && var <= self.num_vars());
        let v = var - 1;
        let sel_block = self.k * self.m;
        if v < sel_block {
            VarRole::Selector {
                clause: v / self.m,
                feature: v % self.m,
            }
        } else if v < sel_block + self.n {
            VarRole::Noise {
                sample: v - sel_block,
            }
        } else {
            let off = v - sel_block - self.n;
            VarRole::Aux {
                sample: self.neg_samples[off / self.k],
                clause: off % self.k,
            }
        }
    }
}

/// How rule size enters the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SparsityMode {
    /// Every selected literal costs its feature's weight (one soft unit
    /// clause per selector).
    #[default]
    PerLiteral,
    /// One soft clause per feature, violated only when the feature appears
    /// in all k clauses.
    DistinctFeature,
}

/// Error penalty: one weight for all samples, or split by label so false
/// positives and false negatives cost differently.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LambdaSpec {
    Uniform(u64),
    CostSensitive {
        /// Penalty for predicting 1 on a sample labeled 0.
        false_positive: u64,
        /// Penalty for predicting 0 on a sample labeled 1.
        false_negative: u64,
    },
}

impl LambdaSpec {
    /// Penalty charged when the given sample is misclassified.
    pub fn penalty(&self, label: bool) -> u64 {
        match *self {
            LambdaSpec::Uniform(l) => l,
            LambdaSpec::CostSensitive {
                false_positive,
                false_negative,
            } => {
                if label {
                    false_negative
                } else {
                    false_positive
                }
            }
        }
    }

    /// The spec for the label-negated problem (used for DNF training): an
    /// error on a flipped sample is the opposite kind of error on the
    /// original, so the two penalties swap.
    pub fn flipped(&self) -> LambdaSpec {
        match *self {
            LambdaSpec::Uniform(l) => LambdaSpec::Uniform(l),
            LambdaSpec::CostSensitive {
                false_positive,
                false_negative,
            } => LambdaSpec::CostSensitive {
                false_positive: false_negative,
                false_negative: false_positive,
            },
        }
    }
}

/// Objective configuration for [`encode`].
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveConfig {
    pub lambda: LambdaSpec,
    /// Per-feature costs (length m); `None` means all 1.
    pub feature_costs: Option<Vec<u64>>,
    pub sparsity: SparsityMode,
}

impl ObjectiveConfig {
    pub fn uniform(lambda: u64) -> ObjectiveConfig {
        ObjectiveConfig {
            lambda: LambdaSpec::Uniform(lambda),
            feature_costs: None,
            sparsity: SparsityMode::PerLiteral,
        }
    }

    pub fn cost_sensitive(false_positive: u64, false_negative: u64) -> ObjectiveConfig {
        ObjectiveConfig {
            lambda: LambdaSpec::CostSensitive {
                false_positive,
                false_negative,
            },
            feature_costs: None,
            sparsity: SparsityMode::PerLiteral,
        }
    }

    pub fn validate(&self, m: usize) -> Result<(), EncodeError> {
        match self.lambda {
            LambdaSpec::Uniform(l) if l == 0 => {
                return Err(EncodeError::BadConfig("lambda must be at least 1".into()))
            }
            LambdaSpec::CostSensitive {
                false_positive,
                false_negative,
            } if false_positive == 0 || false_negative == 0 => {
                return Err(EncodeError::BadConfig(
                    "cost-sensitive penalties must be at least 1".into(),
                ))
            }
            _ => {}
        }
        if let Some(costs) = &self.feature_costs {
            if costs.len() != m {
                return Err(EncodeError::BadConfig(format!(
                    "feature costs have length {}, expected {m}",
                    costs.len()
                )));
            }
            if costs.iter().any(|&c| c == 0) {
                return Err(EncodeError::BadConfig(
                    "feature costs must be at least 1".into(),
                ));
            }
        }
        Ok(())
    }

    /// Cost of feature j (0-based).
    pub fn feature_cost(&self, j: usize) -> u64 {
        self.feature_costs.as_ref().map_or(1, |c| c[j])
    }

    /// The configuration for the label-negated problem.
    pub fn flipped(&self) -> ObjectiveConfig {
        ObjectiveConfig {
            lambda: self.lambda.flipped(),
            feature_costs: self.feature_costs.clone(),
            sparsity: self.sparsity,
        }
    }
}

#[derive(Debug, Error)]
pub enum EncodeError {
    #[error("encode: k must be at least 1")]
    ZeroClauses,
    #[error("encode: {0}")]
    BadConfig(String),
    #[error("encode: instance needs {needed} variables, exceeding the cap of {cap}")]
    VarBudget { needed: usize, cap: usize },
    #[error(transparent)]
    Wcnf(#[from] WcnfError),
}

/// Default ceiling on instance size; [`encode_with_limit`] overrides it.
pub const DEFAULT_VAR_LIMIT: usize = 20_000_000;

/// Builds the MaxSAT instance for learning a k-clause CNF rule on `data`.
pub fn encode(
    data: &BinaryDataset,
    k: usize,
    objective: &ObjectiveConfig,
) -> Result<(WcnfFormula, VarLayout), EncodeError> {
    encode_with_limit(data, k, objective, DEFAULT_VAR_LIMIT)
}

/// [`encode`] with an explicit variable budget.
pub fn encode_with_limit(
    data: &BinaryDataset,
    k: usize,
    objective: &ObjectiveConfig,
    var_limit: usize,
) -> Result<(WcnfFormula, VarLayout), EncodeError> {
    if k == 0 {
        return Err(EncodeError::ZeroClauses);
    }
    let m = data.num_features();
    objective.validate(m)?;

    let layout = VarLayout::new(k, m, data.labels());
    let needed = layout.num_vars();
    let cap = var_limit.min(i32::MAX as usize);
    if needed > cap {
        return Err(EncodeError::VarBudget { needed, cap });
    }

    let mut soft: Vec<(u64, Vec<Lit>)> = Vec::new();
    // noise clauses, one per sample
    for (i, &label) in data.labels().iter().enumerate() {
        soft.push((
            objective.lambda.penalty(label),
            vec![-(layout.noise(i) as Lit)],
        ));
    }
    // sparsity clauses
    match objective.sparsity {
        SparsityMode::PerLiteral => {
            for l in 0..k {
                for j in 0..m {
                    soft.push((
                        objective.feature_cost(j),
                        vec![-(layout.selector(l, j) as Lit)],
                    ));
                }
            }
        }
        SparsityMode::DistinctFeature => {
            for j in 0..m {
                let clause: Vec<Lit> =
                    (0..k).map(|l| -(layout.selector(l, j) as Lit)).collect();
                soft.push((objective.feature_cost(j), clause));
            }
        }
    }

    let mut hard: Vec<Vec<Lit>> = Vec::new();
    for (i, &label) in data.labels().iter().enumerate() {
        let row = data.row(i);
        let support: Vec<usize> = (0..m).filter(|&j| row[j]).collect();
        if label {
            // every clause must hit the row, unless the sample is noise
            for l in 0..k {
                let mut clause: Vec<Lit> = Vec::with_capacity(support.len() + 1);
                clause.push(layout.noise(i) as Lit);
                clause.extend(support.iter().map(|&j| layout.selector(l, j) as Lit));
                hard.push(clause);
            }
        } else {
            // some clause must miss the row (via aux), unless noise
            let mut head: Vec<Lit> = Vec::with_capacity(k + 1);
            head.push(layout.noise(i) as Lit);
            head.extend((0..k).map(|l| layout.aux(i, l).expect("negative sample") as Lit));
            hard.push(head);
            for l in 0..k {
                let z = layout.aux(i, l).expect("negative sample") as Lit;
                for &j in &support {
                    hard.push(vec![-z, -(layout.selector(l, j) as Lit)]);
                }
            }
        }
    }

    let formula = WcnfFormula::with_computed_top(layout.num_vars(), hard, soft)?;
    Ok((formula, layout))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::BinaryDataset;

    pub(crate) fn toy_dataset() -> BinaryDataset {
        BinaryDataset::new(
            vec![vec![true, false, true], vec![false, true, true]],
            vec![false, true],
            vec!["x1".into(), "x2".into(), "x3".into()],
        )
        .unwrap()
    }

    fn single(row: Vec<bool>, label: bool) -> BinaryDataset {
        let names = (1..=row.len()).map(|j| format!("x{j}")).collect();
        BinaryDataset::new(vec![row], vec![label], names).unwrap()
    }

    #[test]
    fn layout_numbers_selectors_then_noise_then_aux() {
        let layout = VarLayout::new(2, 3, &[false, true]);
        assert_eq!(layout.selector(0, 0), 1);
        assert_eq!(layout.selector(0, 2), 3);
        assert_eq!(layout.selector(1, 0), 4);
        assert_eq!(layout.noise(0), 7);
        assert_eq!(layout.noise(1), 8);
        assert_eq!(layout.aux(0, 0), Some(9));
        assert_eq!(layout.aux(0, 1), Some(10));
        assert_eq!(layout.aux(1, 0), None);
        assert_eq!(layout.num_vars(), 10);
        assert_eq!(layout.role(5), VarRole::Selector { clause: 1, feature: 1 });
        assert_eq!(layout.role(8), VarRole::Noise { sample: 1 });
        assert_eq!(layout.role(10), VarRole::Aux { sample: 0, clause: 1 });
    }

    #[test]
    fn variable_count_formula_holds() {
        for (k, m, labels) in [
            (1, 1, vec![true]),
            (2, 3, vec![false, true]),
            (3, 4, vec![false, false, true, false]),
        ] {
            let layout = VarLayout::new(k, m, &labels);
            let negs = labels.iter().filter(|&&b| !b).count();
            assert_eq!(layout.num_vars(), k * m + labels.len() + k * negs);
        }
    }

    #[test]
    fn smallest_positive_instance() {
        let data = single(vec![true], true);
        let (f, layout) = encode(&data, 1, &ObjectiveConfig::uniform(5)).unwrap();
        assert_eq!(f.num_vars(), 2);
        assert_eq!(
            f.soft_clauses(),
            &[(5, vec![-(layout.noise(0) as Lit)]), (1, vec![-1])]
        );
        assert_eq!(f.hard_clauses(), &[vec![2, 1]]);
        assert_eq!(f.top(), 7);
    }

    #[test]
    fn smallest_negative_instance() {
        let data = single(vec![true], false);
        let (f, layout) = encode(&data, 1, &ObjectiveConfig::uniform(1)).unwrap();
        // vars: b=1, eta=2, z=3
        assert_eq!(f.num_vars(), 3);
        assert_eq!(f.soft_clauses(), &[(1, vec![-2]), (1, vec![-1])]);
        assert_eq!(f.hard_clauses(), &[vec![2, 3], vec![-3, -1]]);
        let _ = layout;
    }

    #[test]
    fn toy_instance_matches_hand_encoding() {
        let (f, layout) = encode(&toy_dataset(), 2, &ObjectiveConfig::uniform(1)).unwrap();
        // b11=1 b12=2 b13=3 b21=4 b22=5 b23=6 eta1=7 eta2=8 z11=9 z12=10
        assert_eq!(f.num_vars(), 10);
        let soft: Vec<(u64, Vec<Lit>)> = f.soft_clauses().to_vec();
        assert_eq!(
            soft,
            vec![
                (1, vec![-7]),
                (1, vec![-8]),
                (1, vec![-1]),
                (1, vec![-2]),
                (1, vec![-3]),
                (1, vec![-4]),
                (1, vec![-5]),
                (1, vec![-6]),
            ]
        );
        let hard: Vec<Vec<Lit>> = f.hard_clauses().to_vec();
        assert_eq!(
            hard,
            vec![
                vec![7, 9, 10],
                vec![-9, -1],
                vec![-9, -3],
                vec![-10, -4],
                vec![-10, -6],
                vec![8, 2, 3],
                vec![8, 5, 6],
            ]
        );
        assert_eq!(layout.negative_samples(), &[0]);
    }

    #[test]
    fn distinct_feature_mode_groups_selectors() {
        let (f, _) = encode(
            &toy_dataset(),
            2,
            &ObjectiveConfig {
                lambda: LambdaSpec::Uniform(1),
                feature_costs: None,
                sparsity: SparsityMode::DistinctFeature,
            },
        )
        .unwrap();
        let grouped: Vec<&(u64, Vec<Lit>)> = f
            .soft_clauses()
            .iter()
            .filter(|(_, c)| c.len() == 2)
            .collect();
        assert_eq!(
            grouped,
            vec![&(1, vec![-1, -4]), &(1, vec![-2, -5]), &(1, vec![-3, -6])]
        );
    }

    #[test]
    fn cost_sensitive_weights_split_by_label() {
        let (f, layout) =
            encode(&toy_dataset(), 1, &ObjectiveConfig::cost_sensitive(3, 7)).unwrap();
        // sample 0 is labeled 0 -> false-positive penalty
        assert_eq!(f.soft_clauses()[0], (3, vec![-(layout.noise(0) as Lit)]));
        assert_eq!(f.soft_clauses()[1], (7, vec![-(layout.noise(1) as Lit)]));
    }

    #[test]
    fn per_feature_costs_reach_selector_clauses() {
        let obj = ObjectiveConfig {
            lambda: LambdaSpec::Uniform(1),
            feature_costs: Some(vec![2, 3, 4]),
            sparsity: SparsityMode::PerLiteral,
        };
        let (f, _) = encode(&toy_dataset(), 1, &obj).unwrap();
        let weights: Vec<u64> = f.soft_clauses()[2..].iter().map(|(w, _)| *w).collect();
        assert_eq!(weights, vec![2, 3, 4]);
    }

    #[test]
    fn hard_clauses_satisfiable_by_all_noise() {
        let (f, layout) = encode(&toy_dataset(), 2, &ObjectiveConfig::uniform(1)).unwrap();
        let mut values = vec![false; f.num_vars() + 1];
        for i in 0..layout.n() {
            values[layout.noise(i)] = true;
        }
        assert!(f.hard_satisfied(&values));
    }

    #[test]
    fn var_budget_is_enforced() {
        let err = encode_with_limit(&toy_dataset(), 2, &ObjectiveConfig::uniform(1), 5)
            .unwrap_err();
        assert!(matches!(err, EncodeError::VarBudget { needed: 10, cap: 5 }));
    }

    #[test]
    fn weight_overflow_is_guarded() {
        let err = encode(&toy_dataset(), 1, &ObjectiveConfig::uniform(u64::MAX)).unwrap_err();
        assert!(matches!(err, EncodeError::Wcnf(WcnfError::WeightOverflow)));
    }

    #[test]
    fn zero_lambda_is_rejected() {
        let err = encode(&toy_dataset(), 1, &ObjectiveConfig::uniform(0)).unwrap_err();
        assert!(matches!(err, EncodeError::BadConfig(_)));
    }
}
