//! The main routine: committee checks, threshold filtering, committee
//! extension from the candidate pool, randomized tries and selection of the
//! most diverse assignment.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use log::{debug, info, warn};
use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assign::{objective_of, sub, InfeasibleReport, SubError, SubroutineConfig};
use crate::metrics;
use crate::model::{
    Assignment, ConferenceInstance, Continent, ModelError, Origin, Provenance, Reviewer, COI,
};
use crate::network::PairSet;
use crate::rng::{stream_rng, SAMPLING, TRIES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MainConfig {
    /// Minimum admissible similarity.
    pub theta: f64,
    /// Committee insertions per iteration.
    pub kappa: usize,
    /// Randomized solves over reduced pair sets.
    pub tries: usize,
    /// Fraction of pairs dropped in each try.
    pub drop_pct: f64,
    /// Solves used to estimate how often a paper makes a run fail.
    pub sample_runs: usize,
    /// Fraction of papers left out of each sampling solve.
    pub sample_drop_pct: f64,
    /// Every original committee member with an eligible paper must review.
    pub restrictive: bool,
    pub seed: u64,
    /// Score bonus per scarce attribute a candidate carries.
    pub diversity_bonus: f64,
    /// Extension rounds before giving up.
    pub max_iterations: usize,
    pub sub: SubroutineConfig,
}

impl Default for MainConfig {
    fn default() -> Self {
        MainConfig {
            theta: 0.0,
            kappa: 10,
            tries: 25,
            drop_pct: 0.1,
            sample_runs: 20,
            sample_drop_pct: 0.1,
            restrictive: false,
            seed: 0,
            diversity_bonus: 0.1,
            max_iterations: 50,
            sub: SubroutineConfig {
                node_limit: 200,
                ..SubroutineConfig::default()
            },
        }
    }
}

impl MainConfig {
    pub fn validate(&self) -> Result<(), DiversError> {
        let bad = |m: String| Err(DiversError::Config(m));
        if !(0.0..1.0).contains(&self.theta) {
            return bad(format!("theta must lie in [0, 1), got {}", self.theta));
        }
        if self.kappa == 0 || self.tries == 0 || self.sample_runs == 0 || self.max_iterations == 0 {
            return bad("kappa, tries, sample_runs and max_iterations must be positive".into());
        }
        for (name, v) in [
            ("drop_pct", self.drop_pct),
            ("sample_drop_pct", self.sample_drop_pct),
        ] {
            if !(0.0..1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1), got {v}"));
            }
        }
        if !self.diversity_bonus.is_finite() || self.diversity_bonus < 0.0 {
            return bad("diversity_bonus must be non-negative".into());
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum DiversError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("abilities of the committee are not enough: {missing} capacity {have} < {need} and the candidate pool has no reviewer to add")]
    InsufficientAbilities {
        missing: &'static str,
        have: u64,
        need: u64,
    },
    #[error("no assignable submissions at theta {theta}")]
    NoAssignableSubmissions { theta: f64 },
    #[error("no feasible assignment after {iterations} extension rounds")]
    NoProgress {
        iterations: usize,
        report: Box<InfeasibleReport>,
    },
    #[error("restrictive setting is infeasible: not every committee member can be used")]
    RestrictiveInfeasible(Box<InfeasibleReport>),
    #[error("subroutine failed: {0}")]
    Sub(SubError),
}

impl DiversError {
    /// True when the instance admits no assignment, as opposed to bad input.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            DiversError::InsufficientAbilities { .. }
                | DiversError::NoAssignableSubmissions { .. }
                | DiversError::NoProgress { .. }
                | DiversError::RestrictiveInfeasible(_)
        ) || matches!(self, DiversError::Sub(e) if e.is_infeasible())
    }

    /// The last infeasibility report, if one was produced.
    pub fn report(&self) -> Option<&InfeasibleReport> {
        match self {
            DiversError::NoProgress { report, .. } | DiversError::RestrictiveInfeasible(report) => {
                Some(report)
            }
            DiversError::Sub(SubError::Infeasible(r)) => Some(r),
            _ => None,
        }
    }
}

/// A reviewer moved from the candidate pool into the committee.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Insertion {
    pub reviewer_id: String,
    pub score: f64,
    pub explanation: String,
    /// Round of the main loop; 0 for the preflight checks.
    pub iteration: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    pub reviewer_id: String,
    pub name: String,
    pub attributes: String,
    pub score: f64,
    pub explanation: String,
    pub example_submission_ids: Vec<String>,
}

/// Inserted reviewers that ended up reviewing, best first.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SuggestionList(pub Vec<Suggestion>);

impl SuggestionList {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Suggestion> {
        self.0.iter()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("suggestions serialize")
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::from("# Suggested reviewers\n\n");
        if self.0.is_empty() {
            out.push_str("The committee covers every submission; no additions are needed.\n");
            return out;
        }
        for (rank, s) in self.0.iter().enumerate() {
            let _ = writeln!(
                out,
                "{}. **{}** (`{}`), score {:.3}",
                rank + 1,
                s.name,
                s.reviewer_id,
                s.score
            );
            let _ = writeln!(out, "   - {}", s.attributes);
            let _ = writeln!(out, "   - {}", s.explanation);
            let _ = writeln!(
                out,
                "   - example submissions: {}",
                s.example_submission_ids.join(", ")
            );
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoutineOutput {
    pub assignment: Assignment,
    pub suggestions: SuggestionList,
    pub out_of_scope_papers: Vec<String>,
    /// Original committee members with no paper.
    pub unused_pc: Vec<String>,
    /// Committee members removed because their lower bound exceeded their
    /// eligible papers.
    pub dropped_reviewers: Vec<String>,
    /// Inserted reviewers that received no paper.
    pub unused_insertions: Vec<String>,
    pub iterations: usize,
    pub div: f64,
    pub objective: f64,
    /// Feasible assignments the selection chose from.
    pub candidates: usize,
    /// The committee and submissions the assignment was solved over, with
    /// the lower bounds that were enforced.
    #[serde(skip)]
    pub effective_instance: ConferenceInstance,
}

/// Capacities the preflight checks compare against `|M|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Capacities {
    total: u64,
    senior: u64,
    industry: u64,
    academia: u64,
}

fn capacities(instance: &ConferenceInstance) -> Capacities {
    Capacities {
        total: instance.pc_capacity(|_| true),
        senior: instance.pc_capacity(Reviewer::is_senior),
        industry: instance.pc_capacity(|r| r.prof_bg.industry_capable()),
        academia: instance.pc_capacity(|r| r.prof_bg.academia_capable()),
    }
}

/// Attributes the committee is short of.
#[derive(Debug, Clone, Default, PartialEq)]
struct Scarcity {
    senior: bool,
    industry: bool,
    academia: bool,
    absent_continents: BTreeSet<Continent>,
}

impl Scarcity {
    fn of(instance: &ConferenceInstance) -> Self {
        let need = instance.submissions.len() as u64;
        let caps = capacities(instance);
        let present: BTreeSet<Continent> = instance
            .pc
            .iter()
            .flat_map(|r| r.locations.iter().copied())
            .collect();
        Scarcity {
            senior: caps.senior < need,
            industry: caps.industry < need,
            academia: caps.academia < need,
            absent_continents: Continent::ALL
                .into_iter()
                .filter(|c| !present.contains(c))
                .collect(),
        }
    }

    /// Scarce attributes carried by `r`, as readable phrases.
    fn carried(&self, r: &Reviewer) -> Vec<String> {
        let mut out = Vec::new();
        if self.senior && r.is_senior() {
            out.push("senior".to_owned());
        }
        if self.industry && r.prof_bg.industry_capable() {
            out.push("industry background".to_owned());
        }
        if self.academia && r.prof_bg.academia_capable() {
            out.push("academic background".to_owned());
        }
        for c in r.locations.intersection(&self.absent_continents) {
            out.push(format!("based in {}", c.name()));
        }
        out
    }
}

fn clamp_sim(s: f64) -> f64 {
    if s == COI {
        0.0
    } else {
        s.max(0.0)
    }
}

fn mean_similarity(instance: &ConferenceInstance, erc: usize, papers: &[usize]) -> f64 {
    if papers.is_empty() {
        return 0.0;
    }
    papers
        .iter()
        .map(|&j| clamp_sim(instance.sim_erc.get(erc, j)))
        .sum::<f64>()
        / papers.len() as f64
}

fn explain(carried: &[String], fitting: &[(String, f64)], fallback: &str) -> String {
    let mut parts = Vec::new();
    if !carried.is_empty() {
        parts.push(format!("adds {}", carried.join(", ")));
    }
    if !fitting.is_empty() {
        let list: Vec<String> = fitting
            .iter()
            .map(|(id, s)| format!("{id} ({s:.2})"))
            .collect();
        parts.push(format!("topically fitting {}", list.join(", ")));
    }
    if parts.is_empty() {
        parts.push(fallback.to_owned());
    }
    parts.join("; ")
}

/// Best-fitting papers of ERC member `erc` among `papers`.
fn fitting_papers(
    instance: &ConferenceInstance,
    erc: usize,
    papers: &[usize],
    k: usize,
) -> Vec<(String, f64)> {
    let mut scored: Vec<(usize, f64)> = papers
        .iter()
        .map(|&j| (j, instance.sim_erc.get(erc, j)))
        .filter(|&(_, s)| s != COI && s > 0.0)
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored
        .into_iter()
        .take(k)
        .map(|(j, s)| (instance.submissions[j].id.clone(), s))
        .collect()
}

/// Adds candidates until the committee has enough total, senior, industry
/// and academia capacity for every submission.
pub fn preflight_extend(
    instance: &mut ConferenceInstance,
    config: &MainConfig,
) -> Result<Vec<Insertion>, DiversError> {
    let m = instance.submissions.len() as u64;
    let lambda = instance.lambda as u64;
    let all: Vec<usize> = (0..instance.submissions.len()).collect();
    let mut inserted = Vec::new();
    loop {
        let caps = capacities(instance);
        type Need = (&'static str, u64, u64, fn(&Reviewer) -> bool);
        let checks: [Need; 4] = [
            ("senior", caps.senior, m, Reviewer::is_senior),
            ("industry", caps.industry, m, |r| {
                r.prof_bg.industry_capable()
            }),
            ("academia", caps.academia, m, |r| {
                r.prof_bg.academia_capable()
            }),
            ("total", caps.total, lambda * m, |_| true),
        ];
        let Some(&(missing, have, need, carries)) = checks.iter().find(|c| c.1 < c.2) else {
            return Ok(inserted);
        };
        let best = (0..instance.erc.len())
            .filter(|&c| carries(&instance.erc[c]))
            .map(|c| (c, mean_similarity(instance, c, &all)))
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
        let Some((c, avg)) = best else {
            return Err(DiversError::InsufficientAbilities {
                missing,
                have,
                need,
            });
        };
        let scarcity = Scarcity::of(instance);
        let carried = scarcity.carried(&instance.erc[c]);
        let fitting = fitting_papers(instance, c, &all, 2);
        let explanation = explain(&carried, &fitting, &format!("adds {missing} capacity"));
        let score = avg + config.diversity_bonus * carried.len() as f64;
        let idx = instance.promote_erc(c);
        info!(
            "preflight: inserted {} for {missing} capacity",
            instance.pc[idx].id
        );
        inserted.push(Insertion {
            reviewer_id: instance.pc[idx].id.clone(),
            score,
            explanation,
            iteration: 0,
        });
    }
}

/// The instance after thresholding.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaFilter {
    /// Submissions and committee that remain; similarities below the
    /// threshold are marked as conflicts in both pools.
    pub instance: ConferenceInstance,
    pub out_of_scope: Vec<String>,
    pub dropped_reviewers: Vec<String>,
    pub pairs: PairSet,
}

fn remove_pc(instance: &mut ConferenceInstance, drop: &BTreeSet<usize>) {
    let keep: Vec<usize> = (0..instance.pc.len())
        .filter(|i| !drop.contains(i))
        .collect();
    instance.sim_pc = instance.sim_pc.select_rows(&keep);
    let mut k = 0;
    instance.pc.retain(|_| {
        k += 1;
        !drop.contains(&(k - 1))
    });
}

/// Marks similarities below `theta` as conflicts, removes submissions no
/// reviewer in either pool reaches, and removes committee members whose
/// lower bound exceeds their eligible papers.
pub fn apply_theta(instance: &ConferenceInstance, theta: f64) -> Result<ThetaFilter, DiversError> {
    let mut inst = instance.clone();
    for sim in [&mut inst.sim_pc, &mut inst.sim_erc] {
        for i in 0..sim.rows() {
            for j in 0..sim.cols() {
                if sim.get(i, j) < theta {
                    sim.set(i, j, COI);
                }
            }
        }
    }
    let m = inst.submissions.len();
    let reachable = |j: usize| {
        (0..inst.pc.len()).any(|i| !inst.sim_pc.is_coi(i, j))
            || (0..inst.erc.len()).any(|i| !inst.sim_erc.is_coi(i, j))
    };
    let keep: Vec<usize> = (0..m).filter(|&j| reachable(j)).collect();
    let out_of_scope: Vec<String> = (0..m)
        .filter(|j| !keep.contains(j))
        .map(|j| inst.submissions[j].id.clone())
        .collect();
    if keep.is_empty() {
        return Err(DiversError::NoAssignableSubmissions { theta });
    }
    let mut inst = inst.with_submissions(&keep);
    let drop: BTreeSet<usize> = (0..inst.pc.len())
        .filter(|&i| {
            let eligible = (0..keep.len())
                .filter(|&j| !inst.sim_pc.is_coi(i, j))
                .count();
            inst.pc[i].mu_lower as usize > eligible
        })
        .collect();
    let dropped_reviewers = drop.iter().map(|&i| inst.pc[i].id.clone()).collect();
    remove_pc(&mut inst, &drop);
    let pairs = PairSet::from_instance(&inst, theta);
    Ok(ThetaFilter {
        instance: inst,
        out_of_scope,
        dropped_reviewers,
        pairs,
    })
}

fn max_similarity(instance: &ConferenceInstance, j: usize) -> f64 {
    (0..instance.pc.len())
        .map(|i| instance.sim_pc.get(i, j))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn feasibility_config(config: &MainConfig) -> SubroutineConfig {
    SubroutineConfig {
        optimize_similarity: false,
        ..config.sub
    }
}

fn upper_bounds(instance: &ConferenceInstance) -> Vec<u32> {
    instance.pc.iter().map(|r| r.mu_upper).collect()
}

/// Papers ranked by how likely they make the subroutine fail.
///
/// Papers with fewer than λ eligible committee members come first with
/// probability 1, fewest candidates and then weakest best match first. The
/// remaining papers are scored by sampled solves that leave out those
/// papers and a random fraction of the rest.
pub fn identify_problem_papers(
    instance: &ConferenceInstance,
    pairs: &PairSet,
    config: &MainConfig,
) -> Vec<(String, f64)> {
    identify_round(instance, pairs, config, 0)
}

fn identify_round(
    instance: &ConferenceInstance,
    pairs: &PairSet,
    config: &MainConfig,
    round: u64,
) -> Vec<(String, f64)> {
    let m = instance.submissions.len();
    let counts = pairs.counts_per_paper(m);
    let mut few: Vec<usize> = (0..m).filter(|&j| counts[j] < instance.lambda).collect();
    few.sort_by(|&a, &b| {
        counts[a]
            .cmp(&counts[b])
            .then(max_similarity(instance, a).total_cmp(&max_similarity(instance, b)))
            .then(a.cmp(&b))
    });
    let mut out: Vec<(String, f64)> = few
        .iter()
        .map(|&j| (instance.submissions[j].id.clone(), 1.0))
        .collect();

    let rest: Vec<usize> = (0..m).filter(|j| !few.contains(j)).collect();
    if rest.is_empty() {
        return out;
    }
    let leave_out = ((rest.len() as f64) * config.sample_drop_pct).round() as usize;
    let sub_config = feasibility_config(config);
    let runs: Vec<(Vec<usize>, bool)> = (0..config.sample_runs)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(config.seed, SAMPLING, (round << 20) | r as u64);
            let skipped: BTreeSet<usize> = sample(&mut rng, rest.len(), leave_out)
                .into_iter()
                .collect();
            let included: Vec<usize> = (0..rest.len())
                .filter(|k| !skipped.contains(k))
                .map(|k| rest[k])
                .collect();
            let reduced = instance.with_submissions(&included);
            let reduced_pairs = remap_pairs(pairs, &included);
            let failed = match sub(
                &reduced,
                &reduced_pairs,
                &vec![0; reduced.pc.len()],
                &upper_bounds(&reduced),
                &sub_config,
            ) {
                Ok(_) => false,
                Err(e) => {
                    if !e.is_infeasible() {
                        warn!("sampling run {r} failed: {e}");
                    }
                    true
                }
            };
            (included, failed)
        })
        .collect();
    let mut seen = vec![0usize; m];
    let mut failed = vec![0usize; m];
    for (included, f) in &runs {
        for &j in included {
            seen[j] += 1;
            failed[j] += usize::from(*f);
        }
    }
    let mut scored: Vec<(usize, f64)> = rest
        .iter()
        .filter(|&&j| failed[j] > 0)
        .map(|&j| (j, failed[j] as f64 / seen[j] as f64))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    out.extend(
        scored
            .into_iter()
            .map(|(j, p)| (instance.submissions[j].id.clone(), p)),
    );
    out
}

/// Pairs restricted to `papers`, renumbered to positions in that list.
fn remap_pairs(pairs: &PairSet, papers: &[usize]) -> PairSet {
    let pos: BTreeMap<usize, usize> = papers.iter().enumerate().map(|(k, &j)| (j, k)).collect();
    pairs
        .iter()
        .filter_map(|(i, j)| pos.get(&j).map(|&k| (i, k)))
        .collect()
}

/// Moves up to `kappa` candidates into the committee, ranked by mean
/// similarity to `targets` plus a bonus per scarce attribute.
///
/// Candidates that reach none of the targets are skipped unless there are
/// no targets at all.
pub fn extend_pc(
    instance: &mut ConferenceInstance,
    targets: &[usize],
    kappa: usize,
    config: &MainConfig,
    iteration: usize,
) -> Vec<Insertion> {
    let scarcity = Scarcity::of(instance);
    let all: Vec<usize> = (0..instance.submissions.len()).collect();
    let basis: &[usize] = if targets.is_empty() { &all } else { targets };
    let mut ranked: Vec<(usize, f64, Vec<String>)> = (0..instance.erc.len())
        .filter(|&c| targets.is_empty() || targets.iter().any(|&j| !instance.sim_erc.is_coi(c, j)))
        .map(|c| {
            let carried = scarcity.carried(&instance.erc[c]);
            let score =
                mean_similarity(instance, c, basis) + config.diversity_bonus * carried.len() as f64;
            (c, score, carried)
        })
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.truncate(kappa);
    if ranked.len() < kappa {
        warn!(
            "candidate pool exhausted: inserting {} of {kappa}",
            ranked.len()
        );
    }
    let mut out: Vec<Insertion> = ranked
        .iter()
        .map(|(c, score, carried)| Insertion {
            reviewer_id: instance.erc[*c].id.clone(),
            score: *score,
            explanation: explain(
                carried,
                &fitting_papers(instance, *c, basis, 2),
                "broadens the committee",
            ),
            iteration,
        })
        .collect();
    let mut indices: Vec<usize> = ranked.iter().map(|r| r.0).collect();
    indices.sort_unstable_by(|a, b| b.cmp(a));
    for c in indices {
        instance.promote_erc(c);
    }
    out.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.reviewer_id.cmp(&b.reviewer_id))
    });
    out
}

/// Papers that no diverse λ-set of eligible reviewers from either pool can
/// cover: fewer than λ candidates, or none senior, industry- or
/// academia-capable, or all sharing one continent.
fn unreachable_papers(instance: &ConferenceInstance) -> Vec<usize> {
    (0..instance.submissions.len())
        .filter(|&j| {
            let eligible: Vec<&Reviewer> = (0..instance.pc.len())
                .filter(|&i| !instance.sim_pc.is_coi(i, j))
                .map(|i| &instance.pc[i])
                .chain(
                    (0..instance.erc.len())
                        .filter(|&i| !instance.sim_erc.is_coi(i, j))
                        .map(|i| &instance.erc[i]),
                )
                .collect();
            let shared = Continent::ALL
                .into_iter()
                .any(|c| eligible.iter().all(|r| r.locations.contains(&c)));
            eligible.len() < instance.lambda
                || !eligible.iter().any(|r| r.is_senior())
                || !eligible.iter().any(|r| r.prof_bg.industry_capable())
                || !eligible.iter().any(|r| r.prof_bg.academia_capable())
                || shared
        })
        .collect()
}

fn lower_bounds(instance: &ConferenceInstance, pairs: &PairSet, restrictive: bool) -> Vec<u32> {
    let counts = {
        let mut c = vec![0usize; instance.pc.len()];
        for (i, _) in pairs.iter() {
            c[i] += 1;
        }
        c
    };
    instance
        .pc
        .iter()
        .enumerate()
        .map(|(i, r)| {
            if restrictive && r.origin == Origin::OriginalPc && counts[i] > 0 {
                r.mu_lower.max(1)
            } else {
                r.mu_lower
            }
        })
        .collect()
}

struct Candidate {
    assignment: Assignment,
    div: f64,
    objective: f64,
    /// `None` for the solve over every pair.
    try_index: Option<usize>,
}

/// Runs the whole routine: extension until the subroutine succeeds, then
/// randomized tries, returning the most diverse feasible assignment.
pub fn run(
    instance: &ConferenceInstance,
    config: &MainConfig,
) -> Result<RoutineOutput, DiversError> {
    config.validate()?;
    instance.validate()?;
    let mut inst = instance.clone();
    for r in &mut inst.erc {
        r.origin = Origin::Erc;
    }
    let mut insertions = preflight_extend(&mut inst, config)?;
    let filtered = apply_theta(&inst, config.theta)?;
    let mut work = filtered.instance;
    let mut out_of_scope = filtered.out_of_scope;
    let mut pairs = filtered.pairs;
    let theta = config.theta;
    let check = feasibility_config(config);

    let mut iteration = 1;
    loop {
        let result = sub(
            &work,
            &pairs,
            &vec![0; work.pc.len()],
            &upper_bounds(&work),
            &check,
        );
        let report = match result {
            Ok(_) => break,
            Err(SubError::Infeasible(r)) => r,
            Err(e) => return Err(DiversError::Sub(e)),
        };
        if iteration > config.max_iterations {
            return Err(DiversError::NoProgress {
                iterations: iteration - 1,
                report: Box::new(report),
            });
        }
        let ranking = identify_round(&work, &pairs, config, iteration as u64);
        debug!("round {iteration}: problem papers {ranking:?}");
        let counts = pairs.counts_per_paper(work.submissions.len());
        let top_p = ranking.first().map_or(0.0, |r| r.1);
        let targets: Vec<usize> = ranking
            .iter()
            .filter(|(_, p)| *p >= 1.0 || *p >= top_p)
            .filter_map(|(id, _)| work.submission_index(id))
            .chain((0..counts.len()).filter(|&j| counts[j] < work.lambda))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let added = extend_pc(&mut work, &targets, config.kappa, config, iteration);
        info!(
            "round {iteration}: {} problem papers, {} insertions",
            targets.len(),
            added.len()
        );
        insertions.extend(added.iter().cloned());

        let unreachable = unreachable_papers(&work);
        if added.is_empty() && unreachable.is_empty() {
            return Err(DiversError::NoProgress {
                iterations: iteration,
                report: Box::new(report),
            });
        }
        if !unreachable.is_empty() {
            out_of_scope.extend(unreachable.iter().map(|&j| work.submissions[j].id.clone()));
            let keep: Vec<usize> = (0..work.submissions.len())
                .filter(|j| !unreachable.contains(j))
                .collect();
            if keep.is_empty() {
                return Err(DiversError::NoAssignableSubmissions { theta });
            }
            work = work.with_submissions(&keep);
        }
        pairs = PairSet::from_instance(&work, theta);
        iteration += 1;
    }

    let lower = lower_bounds(&work, &pairs, config.restrictive);
    for (r, &lo) in work.pc.iter_mut().zip(&lower) {
        r.mu_lower = lo;
    }
    let upper = upper_bounds(&work);
    let solve = |p: &PairSet, try_index: Option<usize>| -> Result<Candidate, SubError> {
        let out = sub(&work, p, &lower, &upper, &config.sub)?;
        let mut assignment = out.assignment;
        assignment.provenance = Some(Provenance {
            iteration,
            try_index,
        });
        let div = metrics::diversity(&assignment, &work).unwrap_or(0.0);
        Ok(Candidate {
            assignment,
            div,
            objective: out.objective,
            try_index,
        })
    };
    let undropped = solve(&pairs, None);
    let all_pairs: Vec<(usize, usize)> = pairs.iter().collect();
    let drop_count = ((all_pairs.len() as f64) * config.drop_pct).round() as usize;
    let tries: Vec<Candidate> = (0..config.tries)
        .into_par_iter()
        .filter_map(|t| {
            let mut rng = stream_rng(config.seed, TRIES, t as u64);
            let dropped: BTreeSet<usize> = sample(&mut rng, all_pairs.len(), drop_count)
                .into_iter()
                .collect();
            let reduced: PairSet = all_pairs
                .iter()
                .enumerate()
                .filter(|(k, _)| !dropped.contains(k))
                .map(|(_, &p)| p)
                .collect();
            match solve(&reduced, Some(t)) {
                Ok(c) => Some(c),
                Err(e) => {
                    if !e.is_infeasible() {
                        warn!("try {t} failed: {e}");
                    }
                    None
                }
            }
        })
        .collect();

    let undropped_report = match &undropped {
        Err(SubError::Infeasible(r)) => Some(r.clone()),
        Err(e) => return Err(DiversError::Sub(e.clone())),
        Ok(_) => None,
    };
    let mut candidates: Vec<Candidate> = undropped.into_iter().chain(tries).collect();
    let count = candidates.len();
    candidates.sort_by(|a, b| {
        b.div
            .total_cmp(&a.div)
            .then(b.objective.total_cmp(&a.objective))
            .then(
                a.try_index
                    .map_or(0, |t| t + 1)
                    .cmp(&b.try_index.map_or(0, |t| t + 1)),
            )
    });
    let Some(best) = candidates.into_iter().next() else {
        let report = undropped_report.unwrap_or_default();
        return Err(if config.restrictive {
            DiversError::RestrictiveInfeasible(Box::new(report))
        } else {
            DiversError::Sub(SubError::Infeasible(report))
        });
    };

    let loads = best.assignment.loads();
    let used: BTreeSet<&str> = loads.keys().copied().collect();
    let unused_pc = instance
        .pc
        .iter()
        .filter(|r| r.origin == Origin::OriginalPc && !used.contains(r.id.as_str()))
        .map(|r| r.id.clone())
        .collect();
    let unused_insertions = insertions
        .iter()
        .filter(|i| !used.contains(i.reviewer_id.as_str()))
        .map(|i| i.reviewer_id.clone())
        .collect();
    let suggestions = build_suggestions(&insertions, &best.assignment, &work);
    let (objective, _) = objective_of(&work, &best.assignment);
    Ok(RoutineOutput {
        suggestions,
        out_of_scope_papers: out_of_scope,
        unused_pc,
        dropped_reviewers: filtered.dropped_reviewers,
        unused_insertions,
        iterations: iteration,
        div: best.div,
        objective,
        candidates: count,
        assignment: best.assignment,
        effective_instance: work,
    })
}

fn build_suggestions(
    insertions: &[Insertion],
    assignment: &Assignment,
    instance: &ConferenceInstance,
) -> SuggestionList {
    let mut assigned: BTreeMap<&str, Vec<(f64, &str)>> = BTreeMap::new();
    for (j, s) in instance.submissions.iter().enumerate() {
        for r in assignment.reviewers(&s.id).unwrap_or(&[]) {
            if let Some(i) = instance.pc.iter().position(|x| &x.id == r) {
                assigned
                    .entry(r.as_str())
                    .or_default()
                    .push((instance.sim_pc.get(i, j), s.id.as_str()));
            }
        }
    }
    let mut chosen: Vec<(&Insertion, &Reviewer, Vec<String>)> = insertions
        .iter()
        .filter_map(|ins| {
            let papers = assigned.get(ins.reviewer_id.as_str())?;
            let reviewer = instance.pc.iter().find(|r| r.id == ins.reviewer_id)?;
            let mut papers = papers.clone();
            papers.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(b.1)));
            Some((
                ins,
                reviewer,
                papers.iter().take(3).map(|p| p.1.to_owned()).collect(),
            ))
        })
        .collect();
    chosen.sort_by(|a, b| {
        b.0.score
            .total_cmp(&a.0.score)
            .then(a.0.iteration.cmp(&b.0.iteration))
            .then(a.0.reviewer_id.cmp(&b.0.reviewer_id))
    });
    SuggestionList(
        chosen
            .into_iter()
            .map(|(ins, r, examples)| Suggestion {
                reviewer_id: r.id.clone(),
                name: r.name.clone(),
                attributes: r.attribute_summary(),
                score: ins.score,
                explanation: ins.explanation.clone(),
                example_submission_ids: examples,
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate, planted_papers, GenConfig};
    use crate::model::fixtures::{instance, reviewer};
    use crate::model::{is_feasible, ProfBg, Seniority, SimilarityMatrix};
    use Continent::*;
    use ProfBg::*;
    use Seniority::*;

    fn diverse_pc() -> Vec<Reviewer> {
        vec![
            reviewer("a", Both, Senior, &[Europe], 3),
            reviewer("b", Academia, Senior, &[Asia], 3),
            reviewer("c", Industry, Junior, &[NorthAmerica], 3),
            reviewer("d", Academia, Advanced, &[Europe], 3),
            reviewer("e", Industry, Senior, &[Oceania], 3),
            reviewer("f", Academia, Junior, &[SouthAmerica], 3),
        ]
    }

    fn with_erc(
        mut inst: ConferenceInstance,
        erc: Vec<Reviewer>,
        sims: Vec<Vec<f64>>,
    ) -> ConferenceInstance {
        let m = inst.submissions.len();
        inst.sim_erc = SimilarityMatrix::from_rows(sims, m).unwrap();
        inst.erc = erc
            .into_iter()
            .map(|mut r| {
                r.origin = Origin::Erc;
                r
            })
            .collect();
        inst
    }

    fn quick() -> MainConfig {
        MainConfig {
            tries: 3,
            sample_runs: 4,
            ..MainConfig::default()
        }
    }

    #[test]
    fn preflight_leaves_sufficient_committee_alone() {
        let mut inst = instance(diverse_pc(), 3, 0.4, 3);
        let before = inst.clone();
        assert!(preflight_extend(&mut inst, &quick()).unwrap().is_empty());
        assert_eq!(inst, before);
    }

    #[test]
    fn preflight_adds_minimal_seniors() {
        let pc = vec![
            reviewer("a", Both, Junior, &[Europe], 3),
            reviewer("b", Academia, Advanced, &[Asia], 3),
            reviewer("c", Industry, Junior, &[NorthAmerica], 3),
            reviewer("d", Academia, Advanced, &[Europe], 3),
        ];
        let erc = vec![
            reviewer("x", Academia, Senior, &[Europe], 3),
            reviewer("y", Academia, Senior, &[Asia], 3),
            reviewer("z", Industry, Junior, &[Asia], 3),
        ];
        let inst = instance(pc, 2, 0.3, 3);
        let mut inst = with_erc(
            inst,
            erc,
            vec![vec![0.2, 0.2], vec![0.5, 0.4], vec![0.9, 0.9]],
        );
        let added = preflight_extend(&mut inst, &quick()).unwrap();
        assert_eq!(added.len(), 1);
        assert_eq!(added[0].reviewer_id, "y");
        assert!(added[0].explanation.contains("senior"));
        assert_eq!(inst.pc.last().unwrap().origin, Origin::Inserted);
        assert_eq!(inst.erc.len(), 2);
    }

    #[test]
    fn preflight_fails_without_candidates() {
        let pc = vec![reviewer("a", Both, Junior, &[Europe], 3)];
        let mut inst = instance(pc, 2, 0.3, 3);
        let err = preflight_extend(&mut inst, &quick()).unwrap_err();
        assert!(matches!(
            err,
            DiversError::InsufficientAbilities {
                missing: "senior",
                ..
            }
        ));
        assert!(err.is_infeasible());
    }

    #[test]
    fn zero_theta_keeps_everything() {
        let mut inst = instance(diverse_pc(), 3, 0.0, 3);
        inst.sim_pc.set(0, 1, COI);
        let f = apply_theta(&inst, 0.0).unwrap();
        assert!(f.out_of_scope.is_empty());
        assert_eq!(f.instance.submissions.len(), 3);
        assert_eq!(f.pairs.len(), 6 * 3 - 1);
    }

    #[test]
    fn weak_paper_is_out_of_scope() {
        let mut inst = instance(diverse_pc(), 3, 0.4, 3);
        for i in 0..6 {
            inst.sim_pc.set(i, 2, 0.1);
        }
        let f = apply_theta(&inst, 0.15).unwrap();
        assert_eq!(f.out_of_scope, vec!["p2".to_owned()]);
        assert_eq!(f.instance.submissions.len(), 2);
        let all_low = instance(diverse_pc(), 1, 0.1, 3);
        assert!(matches!(
            apply_theta(&all_low, 0.15),
            Err(DiversError::NoAssignableSubmissions { .. })
        ));
    }

    #[test]
    fn reviewer_without_eligible_papers_is_dropped() {
        let mut pc = diverse_pc();
        pc[5].mu_lower = 1;
        let mut inst = instance(pc, 2, 0.4, 3);
        inst.sim_pc.set(5, 0, 0.05);
        inst.sim_pc.set(5, 1, COI);
        let f = apply_theta(&inst, 0.1).unwrap();
        assert_eq!(f.dropped_reviewers, vec!["f".to_owned()]);
        assert_eq!(f.instance.pc.len(), 5);
        assert_eq!(f.instance.sim_pc.rows(), 5);
    }

    #[test]
    fn few_candidate_paper_ranks_first() {
        let mut inst = instance(diverse_pc(), 3, 0.4, 3);
        for i in 2..6 {
            inst.sim_pc.set(i, 1, COI);
        }
        let pairs = PairSet::from_instance(&inst, 0.0);
        let ranking = identify_problem_papers(&inst, &pairs, &quick());
        assert_eq!(ranking[0], ("p1".to_owned(), 1.0));
    }

    #[test]
    fn feasible_instance_has_no_problem_papers() {
        let inst = instance(diverse_pc(), 3, 0.4, 3);
        let pairs = PairSet::from_instance(&inst, 0.0);
        assert!(identify_problem_papers(&inst, &pairs, &quick()).is_empty());
    }

    #[test]
    fn extension_prefers_fit_then_scarce_attributes() {
        let pc = vec![
            reviewer("a", Both, Junior, &[Europe], 3),
            reviewer("b", Academia, Advanced, &[Asia], 3),
        ];
        let base = instance(pc, 2, 0.3, 3);
        let erc = vec![
            reviewer("x", Academia, Advanced, &[Europe], 3),
            reviewer("y", Academia, Junior, &[Asia], 3),
        ];
        let mut inst = with_erc(base.clone(), erc, vec![vec![0.2, 0.0], vec![0.6, 0.0]]);
        let added = extend_pc(&mut inst, &[0], 1, &quick(), 1);
        assert_eq!(added[0].reviewer_id, "y");

        // Equal fit: the senior wins because the committee has no senior.
        let erc = vec![
            reviewer("x", Academia, Advanced, &[Asia], 3),
            reviewer("y", Academia, Senior, &[Asia], 3),
        ];
        let mut inst = with_erc(base.clone(), erc, vec![vec![0.5, 0.5], vec![0.5, 0.5]]);
        let added = extend_pc(&mut inst, &[0], 1, &quick(), 1);
        assert_eq!(added[0].reviewer_id, "y");
        assert!((added[0].score - 0.6).abs() < 1e-12);

        let erc = vec![reviewer("x", Academia, Advanced, &[Asia], 3)];
        let mut inst = with_erc(base, erc, vec![vec![0.5, 0.5]]);
        let added = extend_pc(&mut inst, &[0], 5, &quick(), 1);
        assert_eq!(added.len(), 1);
        assert!(inst.erc.is_empty());
    }

    #[test]
    fn sufficient_committee_finishes_in_one_round() {
        let inst = instance(diverse_pc(), 3, 0.4, 3);
        let out = run(&inst, &quick()).unwrap();
        assert_eq!(out.iterations, 1);
        assert!(out.suggestions.is_empty());
        assert_eq!(out.assignment.len(), 3);
    }

    fn generated(seed: u64, planted: usize) -> (GenConfig, ConferenceInstance) {
        let cfg = GenConfig {
            n_papers: 10,
            n_pc: 12,
            n_erc: 40,
            planted_problem_papers: planted,
            seed,
            ..GenConfig::default()
        };
        let inst = generate(&cfg).unwrap();
        (cfg, inst)
    }

    #[test]
    fn output_is_feasible_and_dependency_free() {
        for seed in 0..6 {
            let (_, inst) = generated(seed, 1);
            let cfg = MainConfig {
                theta: 0.1,
                seed,
                ..quick()
            };
            let out = run(&inst, &cfg).unwrap();
            let report =
                is_feasible(&out.assignment, &out.effective_instance, true, cfg.theta).unwrap();
            assert!(report.is_feasible(), "{:?}", report.violations);
            assert_eq!(metrics::dependency_pct(&out.assignment, &inst.dep), 0.0);
            for s in out.suggestions.iter() {
                assert!(out.assignment.loads().contains_key(s.reviewer_id.as_str()));
                assert!(!s.explanation.is_empty());
            }
            for w in out.suggestions.0.windows(2) {
                assert!(w[0].score >= w[1].score);
            }
            for p in &out.out_of_scope_papers {
                assert!(out.assignment.reviewers(p).is_none());
            }
        }
    }

    #[test]
    fn restrictive_uses_every_eligible_member() {
        let (_, inst) = generated(3, 0);
        let cfg = MainConfig {
            restrictive: true,
            ..quick()
        };
        let out = run(&inst, &cfg).unwrap();
        assert!(out.unused_pc.is_empty(), "{:?}", out.unused_pc);
    }

    #[test]
    fn tries_never_lose_diversity() {
        let (_, inst) = generated(5, 0);
        let cfg = MainConfig {
            tries: 6,
            ..quick()
        };
        let out = run(&inst, &cfg).unwrap();
        let work = &out.effective_instance;
        let pairs = PairSet::from_instance(work, cfg.theta);
        let lo: Vec<u32> = work.pc.iter().map(|r| r.mu_lower).collect();
        let undropped = sub(work, &pairs, &lo, &upper_bounds(work), &cfg.sub).unwrap();
        assert!(out.div >= metrics::diversity(&undropped.assignment, work).unwrap());
    }

    #[test]
    fn identical_inputs_identical_output() {
        let (_, inst) = generated(8, 1);
        let cfg = MainConfig {
            theta: 0.1,
            seed: 4,
            ..quick()
        };
        let a = run(&inst, &cfg).unwrap();
        let b = run(&inst, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn planted_paper_ranks_first() {
        let (cfg, inst) = generated(11, 1);
        let planted = &inst.submissions[planted_papers(&cfg)[0]].id;
        let f = apply_theta(&inst, 0.1).unwrap();
        let ranking = identify_problem_papers(&f.instance, &f.pairs, &quick());
        assert_eq!(&ranking[0].0, planted);
    }

    #[test]
    fn config_validation() {
        assert!(MainConfig {
            theta: 1.0,
            ..quick()
        }
        .validate()
        .is_err());
        assert!(MainConfig {
            drop_pct: 1.0,
            ..quick()
        }
        .validate()
        .is_err());
        assert!(MainConfig {
            tries: 0,
            ..quick()
        }
        .validate()
        .is_err());
        assert!(quick().validate().is_ok());
    }
}
