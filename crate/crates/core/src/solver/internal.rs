//! Built-in exact search.
//!
//! For instances produced by the encoder the search runs in rule space: only
//! the k*m selector variables are branched on, because for any fixed
//! selector vector every noise variable is forced (a sample's noise variable
//! is 1 exactly when the decoded rule misclassifies it) and every aux
//! variable is determined. The bound at a partial assignment is the cost of
//! selectors already set plus the penalties of samples whose misclassification
//! is already unavoidable, which is admissible, so the search is exact.
//!
//! Branching is depth-first in selector order with 0 tried before 1, so
//! leaves are visited in lexicographic order of the selector vector and the
//! first optimal leaf found is the lexicographically smallest optimum,
//! the canonical tie-break. A greedy upper bound seeds the search and serves
//! as the fallback model when the budget expires.
//!
//! Formulas that do not match the encoder's shape (e.g. hand-written WCNF
//! files) fall back to a plain exhaustive search over all variables, accepted
//! up to the same variable cap.

use std::time::{Duration, Instant};

use crate::encoder::{lit_var, Lit, SparsityMode, VarLayout, VarRole, WcnfFormula};

use super::{Model, SolveOutcome, SolverError};

/// Exact search; `cap` bounds the selector count (or, for non-encoder
/// formulas, the total variable count).
pub fn solve_internal(
    formula: &WcnfFormula,
    layout: &VarLayout,
    budget: Duration,
    cap: usize,
) -> Result<SolveOutcome, SolverError> {
    match Instance::recover(formula, layout) {
        Ok(inst) => {
            let needed = inst.k * inst.m;
            if needed > cap {
                return Err(SolverError::VarCapExceeded { needed, cap });
            }
            Ok(search_rule_space(&inst, layout, budget))
        }
        Err(_) => {
            if formula.num_vars() > cap {
                return Err(SolverError::VarCapExceeded {
                    needed: formula.num_vars(),
                    cap,
                });
            }
            Ok(search_generic(formula, budget))
        }
    }
}

/// The training problem read back off an encoded formula.
struct Instance {
    k: usize,
    m: usize,
    n: usize,
    labels: Vec<bool>,
    /// Per sample: features true in its row, ascending.
    support: Vec<Vec<usize>>,
    /// Per feature: samples whose row has it true, ascending.
    rows_with: Vec<Vec<usize>>,
    /// Per sample: misclassification penalty.
    penalty: Vec<u64>,
    /// Per feature: selection cost.
    cost: Vec<u64>,
    mode: SparsityMode,
}

/// Shape mismatch found while recovering an instance; the caller falls back
/// to the generic search.
struct ShapeError;

impl Instance {
    fn recover(formula: &WcnfFormula, layout: &VarLayout) -> Result<Instance, ShapeError> {
        let (k, m, n) = (layout.k(), layout.m(), layout.n());
        if formula.num_vars() != layout.num_vars() || n == 0 || m == 0 || k == 0 {
            return Err(ShapeError);
        }
        let labels: Vec<bool> = (0..n).map(|i| !layout.is_negative(i)).collect();

        let mut penalty: Vec<Option<u64>> = vec![None; n];
        let mut lit_cost: Vec<Option<u64>> = vec![None; k * m];
        let mut distinct_cost: Vec<Option<u64>> = vec![None; m];
        for (w, clause) in formula.soft_clauses() {
            match classify_soft(clause, layout) {
                Some(SoftKind::Noise(i)) => {
                    if penalty[i].replace(*w).is_some() {
                        return Err(ShapeError);
                    }
                }
                Some(SoftKind::Selector(l, j)) => {
                    if lit_cost[l * m + j].replace(*w).is_some() {
                        return Err(ShapeError);
                    }
                }
                Some(SoftKind::Distinct(j)) => {
                    if distinct_cost[j].replace(*w).is_some() {
                        return Err(ShapeError);
                    }
                }
                None => return Err(ShapeError),
            }
        }
        let penalty: Vec<u64> = penalty.into_iter().collect::<Option<_>>().ok_or(ShapeError)?;
        let (mode, cost) = if lit_cost.iter().all(Option::is_some) {
            if distinct_cost.iter().any(Option::is_some) {
                return Err(ShapeError);
            }
            let per: Vec<u64> = lit_cost.into_iter().map(Option::unwrap).collect();
            // the same feature must cost the same in every clause slot
            let cost: Vec<u64> = per[..m].to_vec();
            for l in 1..k {
                if per[l * m..(l + 1) * m] != cost[..] {
                    return Err(ShapeError);
                }
            }
            (SparsityMode::PerLiteral, cost)
        } else if distinct_cost.iter().all(Option::is_some) && lit_cost.iter().all(Option::is_none)
        {
            (
                SparsityMode::DistinctFeature,
                distinct_cost.into_iter().map(Option::unwrap).collect(),
            )
        } else {
            return Err(ShapeError);
        };

        // hard clauses: recover each sample's support
        let mut pos_support: Vec<Vec<Option<Vec<usize>>>> = vec![vec![None; k]; n];
        let mut pos_bare = vec![0usize; n]; // clauses [noise] with no selectors
        let mut neg_head = vec![false; n];
        let mut neg_support: Vec<Vec<Vec<usize>>> = vec![vec![Vec::new(); k]; n];
        for clause in formula.hard_clauses() {
            match classify_hard(clause, layout)? {
                HardKind::PositiveRow { sample, slot, js } => match slot {
                    Some(l) => {
                        if pos_support[sample][l].replace(js).is_some() {
                            return Err(ShapeError);
                        }
                    }
                    None => pos_bare[sample] += 1,
                },
                HardKind::NegativeHead { sample } => {
                    if std::mem::replace(&mut neg_head[sample], true) {
                        return Err(ShapeError);
                    }
                }
                HardKind::AuxBinding { sample, slot, feature } => {
                    neg_support[sample][slot].push(feature);
                }
            }
        }

        fn sorted_unique(v: &[usize]) -> bool {
            v.windows(2).all(|w| w[0] < w[1])
        }

        let mut support: Vec<Vec<usize>> = Vec::with_capacity(n);
        for i in 0..n {
            if labels[i] {
                if pos_bare[i] > 0 {
                    // empty-row sample: k identical [noise] clauses
                    if pos_bare[i] != k || pos_support[i].iter().any(Option::is_some) {
                        return Err(ShapeError);
                    }
                    support.push(Vec::new());
                } else {
                    let mut per_slot = pos_support[i].iter().cloned();
                    let first = per_slot.next().flatten().ok_or(ShapeError)?;
                    if !sorted_unique(&first) {
                        return Err(ShapeError);
                    }
                    for s in per_slot {
                        if s.as_ref() != Some(&first) {
                            return Err(ShapeError);
                        }
                    }
                    support.push(first);
                }
            } else {
                if !neg_head[i] || pos_bare[i] > 0 {
                    return Err(ShapeError);
                }
                let mut slots = neg_support[i].iter_mut();
                let first = {
                    let s = slots.next().ok_or(ShapeError)?;
                    s.sort_unstable();
                    s.clone()
                };
                if !sorted_unique(&first) {
                    return Err(ShapeError);
                }
                for s in slots {
                    s.sort_unstable();
                    if *s != first {
                        return Err(ShapeError);
                    }
                }
                support.push(first);
            }
        }

        let mut rows_with: Vec<Vec<usize>> = vec![Vec::new(); m];
        for (i, s) in support.iter().enumerate() {
            for &j in s {
                rows_with[j].push(i);
            }
        }

        Ok(Instance {
            k,
            m,
            n,
            labels,
            support,
            rows_with,
            penalty,
            cost,
            mode,
        })
    }

    /// Expands a selector vector into a full model over every variable,
    /// setting noise variables to the misclassification indicator and aux
    /// variables to their maximal feasible value.
    fn expand(&self, selectors: &[bool], layout: &VarLayout, cost: u64) -> Model {
        let mut values = vec![false; layout.num_vars() + 1];
        for l in 0..self.k {
            for j in 0..self.m {
                values[layout.selector(l, j)] = selectors[l * self.m + j];
            }
        }
        for i in 0..self.n {
            let mut all_slots_hit = true;
            for l in 0..self.k {
                let hit = self.support[i]
                    .iter()
                    .any(|&j| selectors[l * self.m + j]);
                if !hit {
                    all_slots_hit = false;
                }
                if let Some(z) = layout.aux(i, l) {
                    values[z] = !hit;
                }
            }
            // prediction = all slots hit; error when it disagrees with label
            values[layout.noise(i)] = all_slots_hit != self.labels[i];
        }
        Model::new(values, cost)
    }
}

enum SoftKind {
    Noise(usize),
    Selector(usize, usize),
    Distinct(usize),
}

fn classify_soft(clause: &[Lit], layout: &VarLayout) -> Option<SoftKind> {
    if clause.iter().any(|&l| l >= 0) {
        return None;
    }
    if clause.len() == 1 {
        return match layout.role(lit_var(clause[0])) {
            VarRole::Noise { sample } => Some(SoftKind::Noise(sample)),
            VarRole::Selector { clause: l, feature } => Some(SoftKind::Selector(l, feature)),
            VarRole::Aux { .. } => None,
        };
    }
    // distinct-feature clause: all k selectors of one feature, negated
    if clause.len() != layout.k() {
        return None;
    }
    let mut feature = None;
    let mut slots_seen = vec![false; layout.k()];
    for &lit in clause {
        match layout.role(lit_var(lit)) {
            VarRole::Selector { clause: l, feature: j } => {
                if *feature.get_or_insert(j) != j || std::mem::replace(&mut slots_seen[l], true) {
                    return None;
                }
            }
            _ => return None,
        }
    }
    feature.map(SoftKind::Distinct)
}

enum HardKind {
    /// `noise(i) v selectors of one slot`; slot is `None` when the row is
    /// empty and the clause is the bare unit `[noise(i)]`.
    PositiveRow {
        sample: usize,
        slot: Option<usize>,
        js: Vec<usize>,
    },
    /// `noise(i) v aux(i, 0..k)`.
    NegativeHead { sample: usize },
    /// `!aux(i, l) v !selector(l, j)`.
    AuxBinding {
        sample: usize,
        slot: usize,
        feature: usize,
    },
}

fn classify_hard(clause: &[Lit], layout: &VarLayout) -> Result<HardKind, ShapeError> {
    let noise_lit = clause.iter().find(|&&l| {
        l > 0 && matches!(layout.role(lit_var(l)), VarRole::Noise { .. })
    });
    if let Some(&nl) = noise_lit {
        let sample = match layout.role(lit_var(nl)) {
            VarRole::Noise { sample } => sample,
            _ => unreachable!(),
        };
        let rest: Vec<Lit> = clause.iter().copied().filter(|&l| l != nl).collect();
        if rest.is_empty() {
            return Ok(HardKind::PositiveRow {
                sample,
                slot: None,
                js: Vec::new(),
            });
        }
        // either all positive selectors of one slot, or all aux of this sample
        let mut slot: Option<usize> = None;
        let mut js = Vec::new();
        let mut aux_slots = Vec::new();
        for &lit in &rest {
            if lit <= 0 {
                return Err(ShapeError);
            }
            match layout.role(lit_var(lit)) {
                VarRole::Selector { clause: l, feature } => {
                    if *slot.get_or_insert(l) != l || !aux_slots.is_empty() {
                        return Err(ShapeError);
                    }
                    js.push(feature);
                }
                VarRole::Aux { sample: s, clause: l } => {
                    if s != sample || slot.is_some() {
                        return Err(ShapeError);
                    }
                    aux_slots.push(l);
                }
                VarRole::Noise { .. } => return Err(ShapeError),
            }
        }
        if !aux_slots.is_empty() {
            aux_slots.sort_unstable();
            if aux_slots != (0..layout.k()).collect::<Vec<_>>() {
                return Err(ShapeError);
            }
            return Ok(HardKind::NegativeHead { sample });
        }
        js.sort_unstable();
        return Ok(HardKind::PositiveRow {
            sample,
            slot,
            js,
        });
    }
    // binding clause [-z, -b]
    if clause.len() == 2 && clause.iter().all(|&l| l < 0) {
        let roles = (
            layout.role(lit_var(clause[0])),
            layout.role(lit_var(clause[1])),
        );
        let (aux, sel) = match roles {
            (VarRole::Aux { sample, clause: l }, VarRole::Selector { clause: sl, feature }) => {
                ((sample, l), (sl, feature))
            }
            (VarRole::Selector { clause: sl, feature }, VarRole::Aux { sample, clause: l }) => {
                ((sample, l), (sl, feature))
            }
            _ => return Err(ShapeError),
        };
        if aux.1 != sel.0 {
            return Err(ShapeError);
        }
        return Ok(HardKind::AuxBinding {
            sample: aux.0,
            slot: aux.1,
            feature: sel.1,
        });
    }
    Err(ShapeError)
}

// ---------------------------------------------------------------------------
// rule-space branch and bound
// ---------------------------------------------------------------------------

struct Search<'a> {
    inst: &'a Instance,
    selectors: Vec<bool>,
    /// Per (sample, slot): selected features hitting the row / undecided ones.
    sat_cnt: Vec<u32>,
    und_cnt: Vec<u32>,
    slots_sat: Vec<u32>,
    slots_dead: Vec<u32>,
    guaranteed: Vec<bool>,
    ones_per_feature: Vec<u32>,
    lit_cost: u64,
    err_bound: u64,
    threshold: u64,
    best: Option<(u64, Vec<bool>)>,
    deadline: Instant,
    nodes: u64,
    timed_out: bool,
}

impl<'a> Search<'a> {
    fn new(inst: &'a Instance, seed_cost: u64, deadline: Instant) -> Search<'a> {
        let (k, n) = (inst.k, inst.n);
        let mut und_cnt = vec![0u32; n * k];
        let mut slots_dead = vec![0u32; n];
        let mut guaranteed = vec![false; n];
        let mut err_bound = 0u64;
        for i in 0..n {
            let width = inst.support[i].len() as u32;
            for l in 0..k {
                und_cnt[i * k + l] = width;
            }
            if width == 0 {
                slots_dead[i] = k as u32;
                // empty rows are misclassified by every rule iff labeled 1
                if inst.labels[i] {
                    guaranteed[i] = true;
                    err_bound += inst.penalty[i];
                }
            }
        }
        Search {
            inst,
            selectors: vec![false; inst.k * inst.m],
            sat_cnt: vec![0; n * k],
            und_cnt,
            slots_sat: vec![0; n],
            slots_dead,
            guaranteed,
            ones_per_feature: vec![0; inst.m],
            lit_cost: 0,
            err_bound,
            threshold: seed_cost.saturating_add(1),
            best: None,
            deadline,
            nodes: 0,
            timed_out: false,
        }
    }

    fn refresh_guarantee(&mut self, i: usize) {
        let now = if self.inst.labels[i] {
            self.slots_dead[i] > 0
        } else {
            self.slots_sat[i] == self.inst.k as u32
        };
        if now != self.guaranteed[i] {
            if now {
                self.err_bound += self.inst.penalty[i];
            } else {
                self.err_bound -= self.inst.penalty[i];
            }
            self.guaranteed[i] = now;
        }
    }

    fn apply(&mut self, pos: usize, value: bool) {
        let (k, m) = (self.inst.k, self.inst.m);
        let (l, j) = (pos / m, pos % m);
        self.selectors[pos] = value;
        if value {
            self.ones_per_feature[j] += 1;
            match self.inst.mode {
                SparsityMode::PerLiteral => self.lit_cost += self.inst.cost[j],
                SparsityMode::DistinctFeature => {
                    if self.ones_per_feature[j] == k as u32 {
                        self.lit_cost += self.inst.cost[j];
                    }
                }
            }
        }
        for &i in &self.inst.rows_with[j] {
            let idx = i * k + l;
            if value {
                self.sat_cnt[idx] += 1;
                if self.sat_cnt[idx] == 1 {
                    self.slots_sat[i] += 1;
                    self.refresh_guarantee(i);
                }
            } else {
                self.und_cnt[idx] -= 1;
                if self.und_cnt[idx] == 0 && self.sat_cnt[idx] == 0 {
                    self.slots_dead[i] += 1;
                    self.refresh_guarantee(i);
                }
            }
        }
    }

    fn undo(&mut self, pos: usize, value: bool) {
        let (k, m) = (self.inst.k, self.inst.m);
        let (l, j) = (pos / m, pos % m);
        self.selectors[pos] = false;
        if value {
            match self.inst.mode {
                SparsityMode::PerLiteral => self.lit_cost -= self.inst.cost[j],
                SparsityMode::DistinctFeature => {
                    if self.ones_per_feature[j] == k as u32 {
                        self.lit_cost -= self.inst.cost[j];
                    }
                }
            }
            self.ones_per_feature[j] -= 1;
        }
        for &i in &self.inst.rows_with[j] {
            let idx = i * k + l;
            if value {
                self.sat_cnt[idx] -= 1;
                if self.sat_cnt[idx] == 0 {
                    self.slots_sat[i] -= 1;
                    self.refresh_guarantee(i);
                }
            } else {
                if self.und_cnt[idx] == 0 && self.sat_cnt[idx] == 0 {
                    self.slots_dead[i] -= 1;
                }
                self.und_cnt[idx] += 1;
                self.refresh_guarantee(i);
            }
        }
    }

    fn dfs(&mut self, pos: usize) {
        if self.timed_out {
            return;
        }
        self.nodes += 1;
        if self.nodes % 4096 == 0 && Instant::now() >= self.deadline {
            self.timed_out = true;
            return;
        }
        let bound = self.lit_cost + self.err_bound;
        if bound >= self.threshold {
            return;
        }
        if pos == self.inst.k * self.inst.m {
            // all slots decided: the bound is the exact cost here
            self.best = Some((bound, self.selectors.clone()));
            self.threshold = bound;
            return;
        }
        for value in [false, true] {
            self.apply(pos, value);
            self.dfs(pos + 1);
            self.undo(pos, value);
            if self.timed_out {
                return;
            }
        }
    }
}

fn search_rule_space(inst: &Instance, layout: &VarLayout, budget: Duration) -> SolveOutcome {
    let deadline = Instant::now() + budget;
    let (seed_cost, seed_vec) = greedy_seed(inst, deadline);
    let mut search = Search::new(inst, seed_cost, deadline);
    search.dfs(0);
    match (search.timed_out, search.best) {
        (false, Some((cost, sel))) => SolveOutcome::Optimum(inst.expand(&sel, layout, cost)),
        (false, None) => {
            // unreachable: the threshold starts at seed+1, so the first leaf
            // at or below the seed cost is always recorded; kept as a
            // safeguard so a bound bug degrades to the greedy answer
            SolveOutcome::Optimum(inst.expand(&seed_vec, layout, seed_cost))
        }
        (true, Some((cost, sel))) => {
            SolveOutcome::FeasibleBest(inst.expand(&sel, layout, cost))
        }
        (true, None) => SolveOutcome::FeasibleBest(inst.expand(&seed_vec, layout, seed_cost)),
    }
}

// ---------------------------------------------------------------------------
// greedy upper bound
// ---------------------------------------------------------------------------

/// State for evaluating toggle moves on a concrete selector vector.
struct GreedyState<'a> {
    inst: &'a Instance,
    selectors: Vec<bool>,
    sat_cnt: Vec<u32>,
    slots_sat: Vec<u32>,
    ones_per_feature: Vec<u32>,
    cost: u64,
}

impl<'a> GreedyState<'a> {
    fn new(inst: &'a Instance, selectors: Vec<bool>) -> GreedyState<'a> {
        let (k, n, m) = (inst.k, inst.n, inst.m);
        let mut sat_cnt = vec![0u32; n * k];
        let mut slots_sat = vec![0u32; n];
        let mut ones_per_feature = vec![0u32; m];
        for (pos, &s) in selectors.iter().enumerate() {
            if s {
                ones_per_feature[pos % m] += 1;
            }
        }
        for i in 0..n {
            for l in 0..k {
                let cnt = inst.support[i]
                    .iter()
                    .filter(|&&j| selectors[l * m + j])
                    .count() as u32;
                sat_cnt[i * k + l] = cnt;
                if cnt > 0 {
                    slots_sat[i] += 1;
                }
            }
        }
        let mut state = GreedyState {
            inst,
            selectors,
            sat_cnt,
            slots_sat,
            ones_per_feature,
            cost: 0,
        };
        state.cost = state.full_cost();
        state
    }

    fn predicted(&self, i: usize) -> bool {
        self.slots_sat[i] == self.inst.k as u32
    }

    fn full_cost(&self) -> u64 {
        let inst = self.inst;
        let mut cost: u64 = match inst.mode {
            SparsityMode::PerLiteral => (0..inst.k * inst.m)
                .filter(|&p| self.selectors[p])
                .map(|p| inst.cost[p % inst.m])
                .sum(),
            SparsityMode::DistinctFeature => (0..inst.m)
                .filter(|&j| self.ones_per_feature[j] == inst.k as u32)
                .map(|j| inst.cost[j])
                .sum(),
        };
        for i in 0..inst.n {
            if self.predicted(i) != inst.labels[i] {
                cost += inst.penalty[i];
            }
        }
        cost
    }

    /// Cost delta of toggling position `pos`, without applying it.
    fn toggle_delta(&self, pos: usize) -> i128 {
        let inst = self.inst;
        let (l, j) = (pos / inst.m, pos % inst.m);
        let adding = !self.selectors[pos];
        let mut delta: i128 = match inst.mode {
            SparsityMode::PerLiteral => {
                if adding {
                    inst.cost[j] as i128
                } else {
                    -(inst.cost[j] as i128)
                }
            }
            SparsityMode::DistinctFeature => {
                if adding && self.ones_per_feature[j] + 1 == inst.k as u32 {
                    inst.cost[j] as i128
                } else if !adding && self.ones_per_feature[j] == inst.k as u32 {
                    -(inst.cost[j] as i128)
                } else {
                    0
                }
            }
        };
        for &i in &inst.rows_with[j] {
            let idx = i * inst.k + l;
            let flips = if adding {
                self.sat_cnt[idx] == 0 && self.slots_sat[i] == inst.k as u32 - 1
            } else {
                self.sat_cnt[idx] == 1 && self.slots_sat[i] == inst.k as u32
            };
            if flips {
                // prediction flips: 0->1 when adding, 1->0 when removing
                let new_pred = adding;
                let was_err = !new_pred != inst.labels[i]; // old prediction = !new_pred
                let now_err = new_pred != inst.labels[i];
                match (was_err, now_err) {
                    (true, false) => delta -= inst.penalty[i] as i128,
                    (false, true) => delta += inst.penalty[i] as i128,
                    _ => {}
                }
            }
        }
        delta
    }

    fn toggle(&mut self, pos: usize) {
        let inst = self.inst;
        let (l, j) = (pos / inst.m, pos % inst.m);
        let adding = !self.selectors[pos];
        let delta = self.toggle_delta(pos);
        self.selectors[pos] = adding;
        self.ones_per_feature[j] = if adding {
            self.ones_per_feature[j] + 1
        } else {
            self.ones_per_feature[j] - 1
        };
        for &i in &inst.rows_with[j] {
            let idx = i * inst.k + l;
            if adding {
                self.sat_cnt[idx] += 1;
                if self.sat_cnt[idx] == 1 {
                    self.slots_sat[i] += 1;
                }
            } else {
                self.sat_cnt[idx] -= 1;
                if self.sat_cnt[idx] == 0 {
                    self.slots_sat[i] -= 1;
                }
            }
        }
        self.cost = (self.cost as i128 + delta) as u64;
    }
}

/// Hill-climbs to a local minimum: best single toggle per round, and when
/// those stall, the best toggle pair (which can trade one selector for
/// another, the move interval-shaped rules need).
fn hill_climb(inst: &Instance, start: Vec<bool>, deadline: Instant) -> (u64, Vec<bool>) {
    let km = inst.k * inst.m;
    let mut state = GreedyState::new(inst, start);
    let mut moves = 0usize;
    while moves <= 10_000 && Instant::now() < deadline {
        moves += 1;
        let single = (0..km)
            .map(|p| (state.toggle_delta(p), p))
            .min_by_key(|&(d, _)| d)
            .filter(|&(d, _)| d < 0);
        if let Some((_, pos)) = single {
            state.toggle(pos);
            continue;
        }
        let mut best_pair: Option<(i128, usize, usize)> = None;
        for first in 0..km {
            let d1 = state.toggle_delta(first);
            state.toggle(first);
            for second in 0..km {
                if second == first {
                    continue;
                }
                let total = d1 + state.toggle_delta(second);
                if total < 0 && best_pair.map_or(true, |(b, _, _)| total < b) {
                    best_pair = Some((total, first, second));
                }
            }
            state.toggle(first);
        }
        match best_pair {
            Some((_, first, second)) => {
                state.toggle(first);
                state.toggle(second);
            }
            None => break,
        }
    }
    debug_assert_eq!(state.cost, state.full_cost());
    (state.cost, state.selectors)
}

/// The instance restricted to a single clause slot (shared supports and
/// weights), used to grow a starting point for the k-slot climb.
fn single_slot_view(inst: &Instance) -> Instance {
    Instance {
        k: 1,
        m: inst.m,
        n: inst.n,
        labels: inst.labels.clone(),
        support: inst.support.clone(),
        rows_with: inst.rows_with.clone(),
        penalty: inst.penalty.clone(),
        cost: inst.cost.clone(),
        mode: SparsityMode::PerLiteral,
    }
}

/// Upper bound for the search: the best of the empty rule, a toggle climb
/// from the all-selected vector, and a toggle climb from the best single
/// clause replicated into every slot (a strong start for interval-shaped
/// rules, which single toggles then specialize per slot).
fn greedy_seed(inst: &Instance, deadline: Instant) -> (u64, Vec<bool>) {
    let km = inst.k * inst.m;
    let empty_cost: u64 = (0..inst.n)
        .filter(|&i| inst.labels[i])
        .map(|i| inst.penalty[i])
        .sum();
    let mut best = (empty_cost, vec![false; km]);

    let from_full = hill_climb(inst, vec![true; km], deadline);
    if from_full.0 < best.0 {
        best = from_full;
    }

    if inst.k > 1 {
        let one = single_slot_view(inst);
        let (_, clause) = hill_climb(&one, vec![true; inst.m], deadline);
        let mut replicated = Vec::with_capacity(km);
        for _ in 0..inst.k {
            replicated.extend_from_slice(&clause);
        }
        let from_replicated = hill_climb(inst, replicated, deadline);
        if from_replicated.0 < best.0 {
            best = from_replicated;
        }
    }
    best
}

// ---------------------------------------------------------------------------
// generic fallback for non-encoder formulas
// ---------------------------------------------------------------------------

struct GenericSearch<'a> {
    formula: &'a WcnfFormula,
    /// Per variable: (clause id, phase) memberships; clause ids cover hard
    /// clauses first, then soft.
    occurs: Vec<Vec<(usize, bool)>>,
    sat: Vec<u32>,
    und: Vec<u32>,
    values: Vec<bool>,
    cost: u64,
    threshold: u64,
    best: Option<(u64, Vec<bool>)>,
    deadline: Instant,
    nodes: u64,
    timed_out: bool,
}

fn search_generic(formula: &WcnfFormula, budget: Duration) -> SolveOutcome {
    let num_vars = formula.num_vars();
    let num_hard = formula.hard_clauses().len();
    let all: Vec<&Vec<Lit>> = formula
        .hard_clauses()
        .iter()
        .chain(formula.soft_clauses().iter().map(|(_, c)| c))
        .collect();
    let mut occurs: Vec<Vec<(usize, bool)>> = vec![Vec::new(); num_vars + 1];
    let mut und: Vec<u32> = Vec::with_capacity(all.len());
    for (ci, clause) in all.iter().enumerate() {
        und.push(clause.len() as u32);
        for &lit in *clause {
            occurs[lit_var(lit)].push((ci, lit > 0));
        }
    }
    let mut search = GenericSearch {
        formula,
        occurs,
        sat: vec![0; all.len()],
        und,
        values: vec![false; num_vars + 1],
        cost: 0,
        threshold: u64::MAX,
        best: None,
        deadline: Instant::now() + budget,
        nodes: 0,
        timed_out: false,
    };
    search.dfs(1, num_hard);
    match (search.timed_out, search.best) {
        (false, Some((cost, values))) => SolveOutcome::Optimum(Model::new(values, cost)),
        (false, None) => SolveOutcome::Infeasible,
        (true, Some((cost, values))) => SolveOutcome::FeasibleBest(Model::new(values, cost)),
        (true, None) => SolveOutcome::TimeoutNone,
    }
}

impl GenericSearch<'_> {
    /// Returns false when some hard clause became unsatisfiable.
    fn assign(&mut self, var: usize, value: bool, num_hard: usize) -> bool {
        self.values[var] = value;
        let mut feasible = true;
        for idx in 0..self.occurs[var].len() {
            let (ci, phase) = self.occurs[var][idx];
            self.und[ci] -= 1;
            if phase == value {
                self.sat[ci] += 1;
            }
            if self.und[ci] == 0 && self.sat[ci] == 0 {
                if ci < num_hard {
                    feasible = false;
                } else {
                    self.cost += self.formula.soft_clauses()[ci - num_hard].0;
                }
            }
        }
        feasible
    }

    fn unassign(&mut self, var: usize, value: bool, num_hard: usize) {
        for idx in 0..self.occurs[var].len() {
            let (ci, phase) = self.occurs[var][idx];
            if self.und[ci] == 0 && self.sat[ci] == 0 && ci >= num_hard {
                self.cost -= self.formula.soft_clauses()[ci - num_hard].0;
            }
            self.und[ci] += 1;
            if phase == value {
                self.sat[ci] -= 1;
            }
        }
    }

    fn dfs(&mut self, var: usize, num_hard: usize) {
        if self.timed_out {
            return;
        }
        self.nodes += 1;
        if self.nodes % 4096 == 0 && Instant::now() >= self.deadline {
            self.timed_out = true;
            return;
        }
        if self.cost >= self.threshold {
            return;
        }
        if var > self.formula.num_vars() {
            self.best = Some((self.cost, self.values.clone()));
            self.threshold = self.cost;
            return;
        }
        for value in [false, true] {
            let feasible = self.assign(var, value, num_hard);
            if feasible {
                self.dfs(var + 1, num_hard);
            }
            self.unassign(var, value, num_hard);
            if self.timed_out {
                return;
            }
        }
    }
}
