//! The assignment subroutine.
//!
//! The network relaxation can split a decision node's 21 units over several
//! diversity nodes, and it cannot express the pairwise dependency clause.
//! Both are resolved by branch-and-bound on top of a warm-started min-cost
//! flow: a partial decision edge is branched into "assigned" (bounds fixed
//! at 21) and "not assigned" (capacity 0); an integral solution that puts
//! two dependent reviewers on one paper is branched by removing either of
//! them from that paper, lower-similarity member first.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::flow::{FlowError, InfeasibilityCertificate, MinCostState};
use crate::model::feasibility::diversity_violations;
use crate::model::{Assignment, ConferenceInstance, Reviewer};
use crate::network::{
    build_network, extract_assignment, pair_score, NetworkError, NetworkLayout, PairSet,
};
use crate::textsim::{transform_f, F_AT_ONE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubroutineConfig {
    /// Maximise the similarity objective instead of stopping at the first
    /// feasible assignment.
    pub optimize_similarity: bool,
    /// Dependency branchings allowed along one search path.
    pub dependency_repair_retries: usize,
    /// Branch-and-bound nodes solved after the dive before giving up on
    /// proving optimality.
    pub node_limit: usize,
}

impl Default for SubroutineConfig {
    fn default() -> Self {
        SubroutineConfig {
            optimize_similarity: true,
            dependency_repair_retries: 10,
            node_limit: 5000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubOutcome {
    pub assignment: Assignment,
    /// Sum of `f(s)` over assigned pairs.
    pub objective: f64,
    /// Sum of the integer pair scores the solver optimises.
    pub score: i64,
    pub nodes_explored: usize,
    pub dependency_repairs: usize,
    /// False when the node limit or the dependency retry cap cut the search.
    pub proven_optimal: bool,
}

/// Why no assignment was produced, mapped back to ids.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct InfeasibleReport {
    /// Papers whose diversity or demand nodes were left short.
    pub papers: Vec<String>,
    /// Reviewers whose lower bound could not be met.
    pub reviewers: Vec<String>,
    pub node_limit_hit: bool,
    pub dependency_retries_exhausted: bool,
    pub certificate: Option<InfeasibilityCertificate>,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SubError {
    #[error("no feasible assignment (papers: {})", .0.papers.join(", "))]
    Infeasible(InfeasibleReport),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("internal flow error: {0}")]
    Internal(String),
}

impl SubError {
    pub fn is_infeasible(&self) -> bool {
        matches!(self, SubError::Infeasible(_))
    }
}

struct Search<'a> {
    instance: &'a ConferenceInstance,
    layout: NetworkLayout,
    edge_of: HashMap<(usize, usize), usize>,
    pc_index: HashMap<&'a str, usize>,
    /// Decision indices per paper.
    by_paper: Vec<Vec<usize>>,
    config: SubroutineConfig,
}

/// Candidates per paper considered by the dive, and sets tried per paper.
const DIVE_CANDIDATES: usize = 14;
const DIVE_SETS: usize = 12;
const DIVE_RESTARTS: usize = 8;
const DIVE_CARRIERS: usize = 3;

struct Node {
    state: MinCostState,
    dep_depth: usize,
}

enum Leaf {
    Partial(usize),
    Dependent {
        paper: usize,
        first: usize,
        second: usize,
    },
    Done(Assignment),
}

impl Search<'_> {
    fn classify(&self, state: &MinCostState) -> Result<Leaf, SubError> {
        let scale = self.layout.scale;
        let mut best: Option<(i64, usize)> = None;
        for (k, d) in self.layout.decisions.iter().enumerate() {
            let f = state.flow(d.edge);
            if f != 0 && f != scale && best.is_none_or(|(bf, _)| f > bf) {
                best = Some((f, k));
            }
        }
        if let Some((_, k)) = best {
            return Ok(Leaf::Partial(k));
        }
        let flows = state.flows();
        let assignment = extract_assignment(&flows, &self.layout)?;
        for (j, paper) in self.layout.paper_ids.iter().enumerate() {
            let set = assignment.reviewers(paper).unwrap_or(&[]);
            for (a, ra) in set.iter().enumerate() {
                for rb in &set[a + 1..] {
                    if self.instance.dep.depends(ra, rb) {
                        return Ok(Leaf::Dependent {
                            paper: j,
                            first: self.pc_index[ra.as_str()],
                            second: self.pc_index[rb.as_str()],
                        });
                    }
                }
            }
        }
        Ok(Leaf::Done(assignment))
    }

    /// Fixes one whole reviewer set per paper, most constrained paper first.
    ///
    /// Each set is diverse and dependency free, so a completed dive is a
    /// feasible assignment. Candidates are ranked by relaxation flow, then
    /// by similarity. A paper that admits no set is moved to the front and
    /// the dive restarts, a bounded number of times.
    fn dive(
        &self,
        root: &MinCostState,
        solves: &mut usize,
    ) -> Result<Option<(i64, Assignment)>, SubError> {
        let mut order: Vec<usize> = (0..self.by_paper.len()).collect();
        order.sort_by_key(|&j| (self.by_paper[j].len(), j));
        for _ in 0..DIVE_RESTARTS {
            match self.dive_once(root, &order, solves)? {
                Ok(found) => return Ok(Some(found)),
                Err(j) => {
                    let at = order.iter().position(|&x| x == j).unwrap_or(0);
                    if at == 0 {
                        return Ok(None);
                    }
                    order.remove(at);
                    order.insert(0, j);
                }
            }
        }
        Ok(None)
    }

    /// One pass of [`Search::dive`]; `Err` carries the paper that failed.
    fn dive_once(
        &self,
        root: &MinCostState,
        order: &[usize],
        solves: &mut usize,
    ) -> Result<Result<(i64, Assignment), usize>, SubError> {
        let mut state = root.clone();
        for &j in order {
            let mut placed = false;
            // Sets sharing a reviewer that already sank two trials are skipped.
            let mut failures: HashMap<usize, usize> = HashMap::new();
            let mut attempts = 0;
            for chosen in self.dive_sets(&state, j) {
                if attempts == DIVE_SETS {
                    break;
                }
                if chosen
                    .iter()
                    .any(|k| failures.get(k).is_some_and(|&n| n >= 2))
                {
                    continue;
                }
                attempts += 1;
                let mut trial = state.clone();
                for &k in &self.by_paper[j] {
                    let v = if chosen.contains(&k) {
                        self.layout.scale
                    } else {
                        0
                    };
                    trial
                        .set_bounds(self.layout.decisions[k].edge, v, v)
                        .map_err(flow_err)?;
                }
                *solves += 1;
                match trial.solve() {
                    Ok(()) => {
                        state = trial;
                        placed = true;
                        break;
                    }
                    Err(FlowError::Infeasible(_)) => {
                        for &k in &chosen {
                            *failures.entry(k).or_insert(0) += 1;
                        }
                    }
                    Err(e) => return Err(flow_err(e)),
                }
            }
            if !placed {
                return Ok(Err(j));
            }
        }
        if self.config.optimize_similarity {
            state = self.polish(state, solves)?;
        }
        match self.classify(&state)? {
            Leaf::Done(a) => Ok(Ok((state.cost(), a))),
            _ => Err(SubError::Internal(
                "dive ended on a non-integral flow".into(),
            )),
        }
    }

    /// Re-chooses each paper's set with all other papers held fixed, keeping
    /// only strict improvements.
    fn polish(
        &self,
        mut state: MinCostState,
        solves: &mut usize,
    ) -> Result<MinCostState, SubError> {
        for j in 0..self.by_paper.len() {
            let mut open = state.clone();
            for &k in &self.by_paper[j] {
                open.set_bounds(self.layout.decisions[k].edge, 0, self.layout.scale)
                    .map_err(flow_err)?;
            }
            *solves += 1;
            if open.solve().is_err() || open.cost() >= state.cost() {
                continue;
            }
            for chosen in self.dive_sets(&open, j).into_iter().take(DIVE_SETS) {
                let mut trial = open.clone();
                for &k in &self.by_paper[j] {
                    let v = if chosen.contains(&k) {
                        self.layout.scale
                    } else {
                        0
                    };
                    trial
                        .set_bounds(self.layout.decisions[k].edge, v, v)
                        .map_err(flow_err)?;
                }
                *solves += 1;
                if trial.solve().is_ok() {
                    if trial.cost() < state.cost() {
                        state = trial;
                    }
                    break;
                }
            }
        }
        Ok(state)
    }

    /// Diverse, dependency-free λ-sets for paper `j`, best first.
    fn dive_sets(&self, state: &MinCostState, j: usize) -> Vec<Vec<usize>> {
        let paper = &self.layout.paper_ids[j];
        let mut ranked: Vec<(i64, i64, usize)> = self.by_paper[j]
            .iter()
            .map(|&k| {
                let d = self.layout.decisions[k];
                (
                    state.flow(d.edge),
                    pair_score(self.instance.sim_pc.get(d.reviewer, j)),
                    k,
                )
            })
            .collect();
        ranked.sort_by(|a, b| b.0.cmp(&a.0).then(b.1.cmp(&a.1)).then(a.2.cmp(&b.2)));
        // The head of the ranking, plus the best few carriers of each
        // attribute a set must contain.
        let reviewer = |k: usize| &self.instance.pc[self.layout.decisions[k].reviewer];
        let mut keep: Vec<bool> = (0..ranked.len()).map(|x| x < DIVE_CANDIDATES).collect();
        let needs: [fn(&Reviewer) -> bool; 3] = [
            Reviewer::is_senior,
            |r| r.prof_bg.industry_capable(),
            |r| r.prof_bg.academia_capable(),
        ];
        for need in needs {
            for x in (0..ranked.len())
                .filter(|&x| need(reviewer(ranked[x].2)))
                .take(DIVE_CARRIERS)
            {
                keep[x] = true;
            }
        }
        let mut x = 0;
        ranked.retain(|_| {
            x += 1;
            keep[x - 1]
        });
        let positions: Vec<usize> = (0..ranked.len()).collect();
        let mut sets: Vec<(i64, i64, Vec<usize>)> = combinations(&positions, self.instance.lambda)
            .into_iter()
            .filter_map(|c| {
                let members: Vec<&Reviewer> = c
                    .iter()
                    .map(|&x| &self.instance.pc[self.layout.decisions[ranked[x].2].reviewer])
                    .collect();
                if !diversity_violations(paper, &members).is_empty() {
                    return None;
                }
                for (a, ra) in members.iter().enumerate() {
                    if members[a + 1..]
                        .iter()
                        .any(|rb| self.instance.dep.depends(&ra.id, &rb.id))
                    {
                        return None;
                    }
                }
                let flow = c.iter().map(|&x| ranked[x].0).sum();
                let score = c.iter().map(|&x| ranked[x].1).sum();
                Some((flow, score, c.iter().map(|&x| ranked[x].2).collect()))
            })
            .collect();
        sets.sort_by(|a, b| b.0.cmp(&a.0).then(b.1.cmp(&a.1)).then(a.2.cmp(&b.2)));
        sets.into_iter().map(|(_, _, c)| c).collect()
    }

    fn report(&self, cert: Option<InfeasibilityCertificate>) -> InfeasibleReport {
        let mut papers = BTreeSet::new();
        let mut reviewers = BTreeSet::new();
        if let Some(c) = &cert {
            for &(v, _) in &c.unmet {
                if let Some(j) = self.layout.paper_of(v) {
                    papers.insert(self.layout.paper_ids[j].clone());
                } else if let Some(i) = self.layout.reviewer_nodes.iter().position(|&r| r == v) {
                    reviewers.insert(self.layout.reviewer_ids[i].clone());
                }
            }
        }
        InfeasibleReport {
            papers: papers.into_iter().collect(),
            reviewers: reviewers.into_iter().collect(),
            certificate: cert,
            ..Default::default()
        }
    }
}

fn flow_err(e: FlowError) -> SubError {
    SubError::Internal(e.to_string())
}

/// Solves the assignment subproblem over the committee of `instance`.
///
/// `mu_lower` and `mu_upper` are per committee member. On success the
/// assignment satisfies every clause of the feasibility predicate for the
/// given bounds; with `optimize_similarity` it maximises the similarity
/// objective (exactly, unless `proven_optimal` is false).
pub fn sub(
    instance: &ConferenceInstance,
    pairs: &PairSet,
    mu_lower: &[u32],
    mu_upper: &[u32],
    config: &SubroutineConfig,
) -> Result<SubOutcome, SubError> {
    if pairs.is_empty() && instance.submissions.is_empty() {
        return Ok(SubOutcome {
            assignment: Assignment::new(instance.lambda),
            objective: 0.0,
            score: 0,
            nodes_explored: 0,
            dependency_repairs: 0,
            proven_optimal: true,
        });
    }
    if pairs.is_empty() {
        return Err(SubError::Infeasible(InfeasibleReport {
            papers: instance.submissions.iter().map(|s| s.id.clone()).collect(),
            ..Default::default()
        }));
    }
    let (net, layout) = build_network(
        instance,
        pairs,
        mu_lower,
        mu_upper,
        config.optimize_similarity,
    )?;
    let edge_of = layout
        .decisions
        .iter()
        .map(|d| ((d.reviewer, d.paper), d.edge))
        .collect();
    let pc_index = instance
        .pc
        .iter()
        .enumerate()
        .map(|(i, r)| (r.id.as_str(), i))
        .collect();
    let mut by_paper = vec![Vec::new(); layout.paper_ids.len()];
    for (k, d) in layout.decisions.iter().enumerate() {
        by_paper[d.paper].push(k);
    }
    let search = Search {
        instance,
        layout,
        edge_of,
        pc_index,
        by_paper,
        config: *config,
    };
    let infeasible = |e| match e {
        FlowError::Infeasible(c) => SubError::Infeasible(search.report(Some(c))),
        other => flow_err(other),
    };
    let mut root = MinCostState::new(&net).map_err(infeasible)?;
    root.solve().map_err(infeasible)?;

    let mut explored = 0usize;
    let mut bb_nodes = 0usize;
    let mut incumbent = search.dive(&root, &mut explored)?;
    if incumbent.is_none() && config.optimize_similarity {
        // Flow-guided ranking on the costed relaxation can dead-end; the
        // cost-free relaxation spreads flow differently.
        let (plain, _) = build_network(instance, pairs, mu_lower, mu_upper, false)?;
        let mut state = MinCostState::new(&plain).map_err(flow_err)?;
        state.solve().map_err(flow_err)?;
        if let Some((_, a)) = search.dive(&state, &mut explored)? {
            let (_, score) = objective_of(instance, &a);
            incumbent = Some((-score * search.layout.scale, a));
        }
    }
    let mut stack = Vec::new();
    if incumbent.is_none() || config.optimize_similarity {
        stack.push(Node {
            state: root,
            dep_depth: 0,
        });
    }
    let mut repairs = 0usize;
    let mut first_cert: Option<InfeasibilityCertificate> = None;
    let mut limit_hit = false;
    let mut retries_exhausted = false;

    while let Some(mut node) = stack.pop() {
        if bb_nodes >= search.config.node_limit {
            limit_hit = true;
            break;
        }
        explored += 1;
        bb_nodes += 1;
        match node.state.solve() {
            Ok(()) => {}
            Err(FlowError::Infeasible(c)) => {
                first_cert.get_or_insert(c);
                continue;
            }
            Err(e) => return Err(flow_err(e)),
        }
        let cost = node.state.cost();
        if let Some((best, _)) = &incumbent {
            if cost >= *best {
                continue;
            }
        }
        match search.classify(&node.state)? {
            Leaf::Done(assignment) => {
                incumbent = Some((cost, assignment));
                if !search.config.optimize_similarity {
                    break;
                }
            }
            Leaf::Partial(k) => {
                let d = search.layout.decisions[k];
                let scale = search.layout.scale;
                let mut fix = node.state.clone();
                fix.set_bounds(d.edge, scale, scale).map_err(flow_err)?;
                let mut drop = node.state;
                drop.set_bounds(d.edge, 0, 0).map_err(flow_err)?;
                let fix_first = fix.flow(d.edge) * 2 > scale || drop.flow(d.edge) * 2 > scale;
                let (first, second) = if fix_first { (fix, drop) } else { (drop, fix) };
                stack.push(Node {
                    state: second,
                    dep_depth: node.dep_depth,
                });
                stack.push(Node {
                    state: first,
                    dep_depth: node.dep_depth,
                });
            }
            Leaf::Dependent {
                paper,
                first,
                second,
            } => {
                if node.dep_depth >= search.config.dependency_repair_retries {
                    retries_exhausted = true;
                    continue;
                }
                repairs += 1;
                let sim = |i: usize| instance.sim_pc.get(i, paper);
                let (low, high) =
                    if sim(first) < sim(second) || (sim(first) == sim(second) && first > second) {
                        (first, second)
                    } else {
                        (second, first)
                    };
                let mut children = Vec::with_capacity(2);
                for removed in [low, high] {
                    let e = search.edge_of[&(removed, paper)];
                    let mut s = node.state.clone();
                    s.set_bounds(e, 0, 0).map_err(flow_err)?;
                    children.push(Node {
                        state: s,
                        dep_depth: node.dep_depth + 1,
                    });
                }
                stack.extend(children.into_iter().rev());
            }
        }
    }

    match incumbent {
        Some((_, assignment)) => {
            let (objective, score) = objective_of(instance, &assignment);
            let exhaustive = stack.is_empty() && !limit_hit && !retries_exhausted;
            Ok(SubOutcome {
                assignment,
                objective,
                score,
                nodes_explored: explored,
                dependency_repairs: repairs,
                proven_optimal: search.config.optimize_similarity && exhaustive,
            })
        }
        None => {
            let mut report = search.report(first_cert);
            report.node_limit_hit = limit_hit;
            report.dependency_retries_exhausted = retries_exhausted;
            Err(SubError::Infeasible(report))
        }
    }
}

/// All `k`-subsets of `items`, in lexicographic order of positions.
pub(crate) fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if items.len() < k {
        return Vec::new();
    }
    let mut out = Vec::new();
    for (a, &x) in items.iter().enumerate() {
        for mut rest in combinations(&items[a + 1..], k - 1) {
            rest.insert(0, x);
            out.push(rest);
        }
    }
    out
}

/// `(J, integer score)` of an assignment over committee members of `instance`.
pub fn objective_of(instance: &ConferenceInstance, assignment: &Assignment) -> (f64, i64) {
    let index = instance.reviewer_index();
    let mut j_total = 0.0;
    let mut score = 0;
    for (p, sub_idx) in instance.submissions.iter().zip(0..) {
        for r in assignment.reviewers(&p.id).unwrap_or(&[]) {
            if let Some(&(pool, i)) = index.get(r.as_str()) {
                let s = instance.similarity(pool, i, sub_idx);
                j_total += transform_f(s.clamp(0.0, 1.0)).unwrap_or(F_AT_ONE);
                score += pair_score(s);
            }
        }
    }
    (j_total, score)
}

pub mod oracle {
    //! Exhaustive search over λ-subsets per paper.
    use super::*;

    /// Best integer score over all assignments that satisfy every clause,
    /// or `None` when none exists.
    pub fn best_score(
        instance: &ConferenceInstance,
        pairs: &PairSet,
        mu_lower: &[u32],
        mu_upper: &[u32],
    ) -> Option<i64> {
        let lambda = instance.lambda;
        let m = instance.submissions.len();
        let mut options: Vec<Vec<(Vec<usize>, i64)>> = Vec::with_capacity(m);
        for j in 0..m {
            let cand: Vec<usize> = pairs.reviewers_for(j).collect();
            let mut sets = Vec::new();
            for combo in combinations(&cand, lambda) {
                let members: Vec<&Reviewer> = combo.iter().map(|&i| &instance.pc[i]).collect();
                if !diversity_violations("x", &members).is_empty() {
                    continue;
                }
                let dep = combo.iter().enumerate().any(|(a, &x)| {
                    combo[a + 1..]
                        .iter()
                        .any(|&y| instance.dep.depends(&instance.pc[x].id, &instance.pc[y].id))
                });
                if dep {
                    continue;
                }
                let score = combo
                    .iter()
                    .map(|&i| pair_score(instance.sim_pc.get(i, j)))
                    .sum();
                sets.push((combo, score));
            }
            options.push(sets);
        }
        let mut load = vec![0u32; instance.pc.len()];
        let mut best = None;
        recurse(0, &options, &mut load, 0, mu_lower, mu_upper, &mut best);
        best
    }

    fn recurse(
        j: usize,
        options: &[Vec<(Vec<usize>, i64)>],
        load: &mut [u32],
        acc: i64,
        lo: &[u32],
        hi: &[u32],
        best: &mut Option<i64>,
    ) {
        if j == options.len() {
            if load.iter().zip(lo).all(|(l, b)| l >= b) && best.is_none_or(|b| acc > b) {
                *best = Some(acc);
            }
            return;
        }
        for (set, score) in &options[j] {
            if set.iter().all(|&i| load[i] < hi[i]) {
                set.iter().for_each(|&i| load[i] += 1);
                recurse(j + 1, options, load, acc + score, lo, hi, best);
                set.iter().for_each(|&i| load[i] -= 1);
            }
        }
    }
}
