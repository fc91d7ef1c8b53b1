//! Comparison assigners without diversity or dependency constraints.

use std::fmt;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::transformed;
use crate::model::{Assignment, ConferenceInstance, COI};
use crate::rng::{stream_rng, BASELINE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineKind {
    Greedy,
    IterativeWorstOff,
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaselineKind::Greedy => "greedy",
            BaselineKind::IterativeWorstOff => "iterative-worst-off",
        })
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum BaselineError {
    #[error("capacity exhausted at paper {paper}: {found} of {needed} reviewers available")]
    CapacityExhausted {
        paper: String,
        found: usize,
        needed: usize,
    },
    #[error("expected {expected} upper bounds, got {got}")]
    BoundsLength { expected: usize, got: usize },
}

/// Committee members of paper `j` ordered by similarity, best first; ties
/// by committee index. Conflicts are excluded.
fn ranked(instance: &ConferenceInstance, j: usize) -> Vec<usize> {
    let mut cand: Vec<usize> = (0..instance.pc.len())
        .filter(|&i| instance.sim_pc.get(i, j) != COI)
        .collect();
    cand.sort_by(|&a, &b| {
        instance
            .sim_pc
            .get(b, j)
            .total_cmp(&instance.sim_pc.get(a, j))
            .then(a.cmp(&b))
    });
    cand
}

fn check_bounds(instance: &ConferenceInstance, mu_upper: &[u32]) -> Result<(), BaselineError> {
    if mu_upper.len() != instance.pc.len() {
        return Err(BaselineError::BoundsLength {
            expected: instance.pc.len(),
            got: mu_upper.len(),
        });
    }
    Ok(())
}

/// Picks the best `lambda` reviewers with spare capacity; the error carries
/// how many were found.
fn take_best(order: &[usize], remaining: &[u32], lambda: usize) -> Result<Vec<usize>, usize> {
    let set: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| remaining[i] > 0)
        .take(lambda)
        .collect();
    if set.len() == lambda {
        Ok(set)
    } else {
        Err(set.len())
    }
}

fn ids(instance: &ConferenceInstance, set: &[usize]) -> Vec<String> {
    set.iter().map(|&i| instance.pc[i].id.clone()).collect()
}

/// Papers in input order, each taking its λ most similar reviewers that
/// still have capacity.
pub fn greedy_assign(
    instance: &ConferenceInstance,
    mu_upper: &[u32],
) -> Result<Assignment, BaselineError> {
    check_bounds(instance, mu_upper)?;
    let lambda = instance.lambda;
    let mut remaining = mu_upper.to_vec();
    let mut out = Assignment::new(lambda);
    for (j, paper) in instance.submissions.iter().enumerate() {
        let set = take_best(&ranked(instance, j), &remaining, lambda).map_err(|found| {
            BaselineError::CapacityExhausted {
                paper: paper.id.clone(),
                found,
                needed: lambda,
            }
        })?;
        for &i in &set {
            remaining[i] -= 1;
        }
        out.insert(paper.id.clone(), ids(instance, &set));
    }
    Ok(out)
}

/// Reviewer sets chosen for the open papers of one completion.
type Completion = Vec<(usize, Vec<usize>)>;

/// Result of [`iterative_worst_off`] with the per-iteration record.
#[derive(Debug, Clone, PartialEq)]
pub struct WorstOffRun {
    pub assignment: Assignment,
    /// Summed transformed similarity of the set fixed in each iteration.
    pub trace: Vec<f64>,
}

/// Fairness-driven baseline: each round builds `merges` candidate
/// completions in random paper orders, keeps the one with the highest
/// minimum per-paper score, and fixes that candidate's worst-off paper.
pub fn iterative_worst_off(
    instance: &ConferenceInstance,
    mu_upper: &[u32],
    merges: usize,
    seed: u64,
) -> Result<WorstOffRun, BaselineError> {
    check_bounds(instance, mu_upper)?;
    let lambda = instance.lambda;
    let m = instance.submissions.len();
    let orders: Vec<Vec<usize>> = (0..m).map(|j| ranked(instance, j)).collect();
    let set_score = |j: usize, set: &[usize]| -> f64 {
        set.iter()
            .map(|&i| transformed(instance.sim_pc.get(i, j)))
            .sum()
    };
    let mut remaining = mu_upper.to_vec();
    let mut fixed: Vec<Option<Vec<usize>>> = vec![None; m];
    let mut fixed_floor = f64::INFINITY;
    let mut trace = Vec::with_capacity(m);
    let mut rng = stream_rng(seed, BASELINE, 0);

    for _round in 0..m {
        let mut open: Vec<usize> = (0..m).filter(|&j| fixed[j].is_none()).collect();
        let mut best: Option<(f64, Completion)> = None;
        let mut stuck: Option<(usize, usize)> = None;
        for _ in 0..merges.max(1) {
            open.shuffle(&mut rng);
            let mut cap = remaining.clone();
            let mut sets = Vec::with_capacity(open.len());
            let mut ok = true;
            for &j in &open {
                match take_best(&orders[j], &cap, lambda) {
                    Ok(set) => {
                        for &i in &set {
                            cap[i] -= 1;
                        }
                        sets.push((j, set));
                    }
                    Err(found) => {
                        stuck.get_or_insert((j, found));
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                continue;
            }
            let gamma = sets
                .iter()
                .map(|(j, s)| set_score(*j, s))
                .fold(fixed_floor, f64::min);
            if best.as_ref().is_none_or(|(g, _)| gamma > *g) {
                best = Some((gamma, sets));
            }
        }
        let Some((_, sets)) = best else {
            let (j, found) = stuck.expect("a failed candidate records its paper");
            return Err(BaselineError::CapacityExhausted {
                paper: instance.submissions[j].id.clone(),
                found,
                needed: lambda,
            });
        };
        let (j, set) = sets
            .into_iter()
            .min_by(|(ja, a), (jb, b)| {
                set_score(*ja, a)
                    .total_cmp(&set_score(*jb, b))
                    .then(ja.cmp(jb))
            })
            .expect("at least one open paper");
        let score = set_score(j, &set);
        for &i in &set {
            remaining[i] -= 1;
        }
        fixed_floor = fixed_floor.min(score);
        trace.push(score);
        fixed[j] = Some(set);
    }

    let mut assignment = Assignment::new(lambda);
    for (j, set) in fixed.into_iter().enumerate() {
        let set = set.expect("every paper fixed");
        assignment.insert(instance.submissions[j].id.clone(), ids(instance, &set));
    }
    Ok(WorstOffRun { assignment, trace })
}
