//! The six-layer assignment network.
//!
//! Layers: source, committee members, one decision node per allowed
//! (reviewer, paper) pair, twenty diversity nodes per paper, papers, sink.
//! A single reviewer-to-paper assignment carries [`SCALE`] units. At the
//! decision node they split into 7 units to the reviewer's background node,
//! 7 units to its seniority node, and 1 unit to each of the seven location
//! nodes (`l_y` when the reviewer lists continent `y`, `l_y'` otherwise).
//! Per-paper bounds on the diversity-to-paper edges encode the clauses:
//!
//! | node    | lower | capacity   |
//! |---------|-------|------------|
//! | `a0`    | 0     | 7(λ−1)     |
//! | `a1`    | 0     | 7(λ−1)     |
//! | `a2`    | 0     | 7λ         |
//! | `s0`    | 7     | 7λ         |
//! | `s1,s2` | 0     | 7(λ−1)     |
//! | `l_y`   | 0     | λ−1        |
//! | `l_y'`  | 1     | λ          |
//!
//! Each paper sends exactly 21λ units to the sink.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::flow::{BoundedFlowNetwork, EdgeId, FlowResult, NodeId};
use crate::model::{Assignment, ConferenceInstance, Continent, COI};
use crate::textsim::{transform_f, F_AT_ONE};

/// Flow units per reviewer-to-paper assignment.
pub const SCALE: i64 = 21;
/// Units routed to the background and to the seniority node.
pub const GROUP_UNITS: i64 = 7;
/// Multiplier that turns `f(s)` into an integer per-unit cost.
pub const COST_RESOLUTION: f64 = 1e4;
/// Diversity nodes per paper.
pub const DIVERSITY_NODES: usize = 20;

/// Offsets of the diversity nodes inside a paper's block of twenty.
pub mod slot {
    pub const A: usize = 0;
    pub const L: usize = 3;
    pub const L_ABSENT: usize = 10;
    pub const S: usize = 17;
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum NetworkError {
    #[error("no allowed reviewer-paper pairs")]
    EmptyPairs,
    #[error("reviewer {0} lists no location")]
    EmptyLocations(String),
    #[error("pair ({reviewer}, {paper}) is out of range")]
    PairOutOfRange { reviewer: usize, paper: usize },
    #[error("pair ({reviewer}, {paper}) has similarity {similarity}, which is not assignable")]
    InvalidPair {
        reviewer: String,
        paper: String,
        similarity: f64,
    },
    #[error("expected {expected} per-reviewer bounds, got {got}")]
    BoundsLength { expected: usize, got: usize },
    #[error("flow bounds overflow")]
    Overflow,
    #[error("decision edge for ({reviewer}, {paper}) carries partial flow {flow}")]
    PartialFlow {
        reviewer: String,
        paper: String,
        flow: i64,
    },
    #[error("paper {paper} received {got} reviewers, expected {expected}")]
    WrongSetSize {
        paper: String,
        expected: usize,
        got: usize,
    },
}

/// Allowed (committee index, submission index) pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PairSet {
    allowed: BTreeSet<(usize, usize)>,
}

impl PairSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Every committee pair that is not a conflict and has similarity ≥ `theta`.
    pub fn from_instance(instance: &ConferenceInstance, theta: f64) -> Self {
        let mut allowed = BTreeSet::new();
        for i in 0..instance.pc.len() {
            for j in 0..instance.submissions.len() {
                let s = instance.sim_pc.get(i, j);
                if s != COI && s >= theta {
                    allowed.insert((i, j));
                }
            }
        }
        PairSet { allowed }
    }

    pub fn insert(&mut self, reviewer: usize, paper: usize) -> bool {
        self.allowed.insert((reviewer, paper))
    }

    pub fn remove(&mut self, reviewer: usize, paper: usize) -> bool {
        self.allowed.remove(&(reviewer, paper))
    }

    pub fn contains(&self, reviewer: usize, paper: usize) -> bool {
        self.allowed.contains(&(reviewer, paper))
    }

    pub fn len(&self) -> usize {
        self.allowed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.allowed.is_empty()
    }

    /// Pairs in (reviewer, paper) order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.allowed.iter().copied()
    }

    pub fn reviewers_for(&self, paper: usize) -> impl Iterator<Item = usize> + '_ {
        self.allowed
            .iter()
            .filter(move |p| p.1 == paper)
            .map(|p| p.0)
    }

    /// Allowed reviewers per paper, for `papers` papers.
    pub fn counts_per_paper(&self, papers: usize) -> Vec<usize> {
        let mut out = vec![0; papers];
        for &(_, j) in &self.allowed {
            if j < papers {
                out[j] += 1;
            }
        }
        out
    }

    pub fn retain(&mut self, mut keep: impl FnMut(usize, usize) -> bool) {
        self.allowed.retain(|&(i, j)| keep(i, j));
    }
}

impl FromIterator<(usize, usize)> for PairSet {
    fn from_iter<T: IntoIterator<Item = (usize, usize)>>(iter: T) -> Self {
        PairSet {
            allowed: iter.into_iter().collect(),
        }
    }
}

/// One L3 node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decision {
    pub reviewer: usize,
    pub paper: usize,
    pub node: NodeId,
    /// The reviewer-to-decision edge.
    pub edge: EdgeId,
}

/// Where every layer lives in the built network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkLayout {
    pub scale: i64,
    pub lambda: usize,
    pub source: NodeId,
    pub sink: NodeId,
    pub reviewer_nodes: Vec<NodeId>,
    pub source_edges: Vec<EdgeId>,
    pub decisions: Vec<Decision>,
    pub diversity_nodes: Vec<[NodeId; DIVERSITY_NODES]>,
    pub paper_nodes: Vec<NodeId>,
    pub reviewer_ids: Vec<String>,
    pub paper_ids: Vec<String>,
}

impl NetworkLayout {
    /// The paper a node belongs to, if it is a diversity or paper node.
    pub fn paper_of(&self, node: NodeId) -> Option<usize> {
        if let Some(j) = self.paper_nodes.iter().position(|&p| p == node) {
            return Some(j);
        }
        self.diversity_nodes
            .iter()
            .position(|block| block.contains(&node))
    }

    /// Human-readable node name for DOT output.
    pub fn label(&self, node: NodeId) -> String {
        if node == self.source {
            return "source".into();
        }
        if node == self.sink {
            return "sink".into();
        }
        if let Some(i) = self.reviewer_nodes.iter().position(|&v| v == node) {
            return self.reviewer_ids[i].clone();
        }
        if let Some(d) = self.decisions.iter().find(|d| d.node == node) {
            return format!(
                "{}|{}",
                self.reviewer_ids[d.reviewer], self.paper_ids[d.paper]
            );
        }
        if let Some(j) = self.paper_nodes.iter().position(|&v| v == node) {
            return self.paper_ids[j].clone();
        }
        for (j, block) in self.diversity_nodes.iter().enumerate() {
            if let Some(k) = block.iter().position(|&v| v == node) {
                let name = match k {
                    0..=2 => format!("a{k}"),
                    3..=9 => format!("l{}", k - slot::L),
                    10..=16 => format!("l{}'", k - slot::L_ABSENT),
                    _ => format!("s{}", k - slot::S),
                };
                return format!("{}:{name}", self.paper_ids[j]);
            }
        }
        node.to_string()
    }

    pub fn to_dot(&self, net: &BoundedFlowNetwork, result: Option<&FlowResult>) -> String {
        net.to_dot_labeled(result, |v| self.label(v))
    }
}

/// Integer cost of one flow unit on a decision edge with similarity `s`.
pub fn unit_cost(s: f64) -> i64 {
    -pair_score(s)
}

/// `round(f(s) · 10⁴)` with `f` capped at its value at `s = 1`.
pub fn pair_score(s: f64) -> i64 {
    let f = transform_f(s.clamp(0.0, 1.0))
        .unwrap_or(F_AT_ONE)
        .min(F_AT_ONE);
    (f * COST_RESOLUTION).round() as i64
}

fn mul(a: i64, b: i64) -> Result<i64, NetworkError> {
    a.checked_mul(b).ok_or(NetworkError::Overflow)
}

/// Builds the network over the committee of `instance` and its submissions.
pub fn build_network(
    instance: &ConferenceInstance,
    pairs: &PairSet,
    mu_lower: &[u32],
    mu_upper: &[u32],
    with_costs: bool,
) -> Result<(BoundedFlowNetwork, NetworkLayout), NetworkError> {
    let n_rev = instance.pc.len();
    let n_pap = instance.submissions.len();
    if pairs.is_empty() {
        return Err(NetworkError::EmptyPairs);
    }
    for bounds in [mu_lower, mu_upper] {
        if bounds.len() != n_rev {
            return Err(NetworkError::BoundsLength {
                expected: n_rev,
                got: bounds.len(),
            });
        }
    }
    for r in &instance.pc {
        if r.locations.is_empty() {
            return Err(NetworkError::EmptyLocations(r.id.clone()));
        }
    }
    let lambda = i64::try_from(instance.lambda).map_err(|_| NetworkError::Overflow)?;
    let per_paper = mul(SCALE, lambda)?;
    mul(per_paper, n_pap as i64)?;

    let source = 0;
    // The sink index is fixed once all other nodes exist.
    let mut net = BoundedFlowNetwork::new(1, source, source);
    let reviewer_nodes: Vec<NodeId> = (0..n_rev).map(|_| net.add_node()).collect();
    let mut source_edges = Vec::with_capacity(n_rev);
    for i in 0..n_rev {
        let lo = mul(SCALE, i64::from(mu_lower[i]))?;
        let hi = mul(SCALE, i64::from(mu_upper[i]))?;
        source_edges.push(net.add_edge(source, reviewer_nodes[i], lo, hi, 0));
    }
    let mut decisions = Vec::with_capacity(pairs.len());
    for (i, j) in pairs.iter() {
        if i >= n_rev || j >= n_pap {
            return Err(NetworkError::PairOutOfRange {
                reviewer: i,
                paper: j,
            });
        }
        let s = instance.sim_pc.get(i, j);
        if s == COI || !(0.0..=1.0).contains(&s) {
            return Err(NetworkError::InvalidPair {
                reviewer: instance.pc[i].id.clone(),
                paper: instance.submissions[j].id.clone(),
                similarity: s,
            });
        }
        let node = net.add_node();
        let cost = if with_costs { unit_cost(s) } else { 0 };
        let edge = net.add_edge(reviewer_nodes[i], node, 0, SCALE, cost);
        decisions.push(Decision {
            reviewer: i,
            paper: j,
            node,
            edge,
        });
    }
    let diversity_nodes: Vec<[NodeId; DIVERSITY_NODES]> = (0..n_pap)
        .map(|_| std::array::from_fn(|_| net.add_node()))
        .collect();
    let paper_nodes: Vec<NodeId> = (0..n_pap).map(|_| net.add_node()).collect();
    let sink = net.add_node();

    for d in &decisions {
        let r = &instance.pc[d.reviewer];
        let block = &diversity_nodes[d.paper];
        net.add_edge(
            d.node,
            block[slot::A + r.prof_bg.node_index()],
            0,
            GROUP_UNITS,
            0,
        );
        for c in Continent::ALL {
            let target = if r.locations.contains(&c) {
                block[slot::L + c.index()]
            } else {
                block[slot::L_ABSENT + c.index()]
            };
            net.add_edge(d.node, target, 0, 1, 0);
        }
        net.add_edge(
            d.node,
            block[slot::S + r.seniority.level()],
            0,
            GROUP_UNITS,
            0,
        );
    }
    let g = GROUP_UNITS;
    for (j, block) in diversity_nodes.iter().enumerate() {
        let p = paper_nodes[j];
        net.add_edge(block[slot::A], p, 0, g * (lambda - 1), 0);
        net.add_edge(block[slot::A + 1], p, 0, g * (lambda - 1), 0);
        net.add_edge(block[slot::A + 2], p, 0, g * lambda, 0);
        for y in 0..Continent::ALL.len() {
            net.add_edge(block[slot::L + y], p, 0, lambda - 1, 0);
            net.add_edge(block[slot::L_ABSENT + y], p, 1, lambda, 0);
        }
        net.add_edge(block[slot::S], p, g, g * lambda, 0);
        net.add_edge(block[slot::S + 1], p, 0, g * (lambda - 1), 0);
        net.add_edge(block[slot::S + 2], p, 0, g * (lambda - 1), 0);
        net.add_edge(p, sink, per_paper, per_paper, 0);
    }
    net.set_sink(sink);
    net.set_required_value(Some(per_paper * n_pap as i64));

    let layout = NetworkLayout {
        scale: SCALE,
        lambda: instance.lambda,
        source,
        sink,
        reviewer_nodes,
        source_edges,
        decisions,
        diversity_nodes,
        paper_nodes,
        reviewer_ids: instance.pc.iter().map(|r| r.id.clone()).collect(),
        paper_ids: instance.submissions.iter().map(|s| s.id.clone()).collect(),
    };
    Ok((net, layout))
}

/// Reviewer `i` reviews paper `j` iff its decision edge carries the full
/// scale. Any other non-zero amount is an invariant breach.
pub fn extract_assignment(
    flow: &[i64],
    layout: &NetworkLayout,
) -> Result<Assignment, NetworkError> {
    let mut sets: Vec<Vec<String>> = vec![Vec::new(); layout.paper_ids.len()];
    for d in &layout.decisions {
        match flow[d.edge] {
            0 => {}
            f if f == layout.scale => sets[d.paper].push(layout.reviewer_ids[d.reviewer].clone()),
            f => {
                return Err(NetworkError::PartialFlow {
                    reviewer: layout.reviewer_ids[d.reviewer].clone(),
                    paper: layout.paper_ids[d.paper].clone(),
                    flow: f,
                })
            }
        }
    }
    let mut out = Assignment::new(layout.lambda);
    for (j, set) in sets.into_iter().enumerate() {
        if set.len() != layout.lambda {
            return Err(NetworkError::WrongSetSize {
                paper: layout.paper_ids[j].clone(),
                expected: layout.lambda,
                got: set.len(),
            });
        }
        out.insert(layout.paper_ids[j].clone(), set);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{min_cost_feasible_flow, FlowError};
    use crate::model::fixtures::{instance, reviewer};
    use crate::model::{ProfBg, Seniority};
    use Continent::*;

    fn bounds(inst: &ConferenceInstance) -> (Vec<u32>, Vec<u32>) {
        (
            inst.pc.iter().map(|r| r.mu_lower).collect(),
            inst.pc.iter().map(|r| r.mu_upper).collect(),
        )
    }

    #[test]
    fn forced_single_paper() {
        let inst = instance(
            vec![
                reviewer("r1", ProfBg::Industry, Seniority::Senior, &[Europe], 1),
                reviewer("r2", ProfBg::Academia, Seniority::Junior, &[Asia], 1),
                reviewer("r3", ProfBg::Both, Seniority::Advanced, &[Africa], 1),
            ],
            1,
            0.5,
            3,
        );
        let pairs = PairSet::from_instance(&inst, 0.0);
        let (lo, hi) = bounds(&inst);
        let (net, layout) = build_network(&inst, &pairs, &lo, &hi, true).unwrap();
        assert_eq!(layout.diversity_nodes[0].len(), 20);
        let r = min_cost_feasible_flow(&net).unwrap();
        let a = extract_assignment(&r.flow, &layout).unwrap();
        assert_eq!(a.reviewers("p0").unwrap(), ["r1", "r2", "r3"]);
        assert!(layout.to_dot(&net, Some(&r)).contains("p0:s0"));
    }

    #[test]
    fn all_junior_is_infeasible() {
        let inst = instance(
            vec![
                reviewer("r1", ProfBg::Industry, Seniority::Junior, &[Europe], 1),
                reviewer("r2", ProfBg::Academia, Seniority::Junior, &[Asia], 1),
                reviewer("r3", ProfBg::Both, Seniority::Junior, &[Africa], 1),
            ],
            1,
            0.5,
            3,
        );
        let pairs = PairSet::from_instance(&inst, 0.0);
        let (lo, hi) = bounds(&inst);
        let (net, _) = build_network(&inst, &pairs, &lo, &hi, false).unwrap();
        assert!(matches!(
            min_cost_feasible_flow(&net),
            Err(FlowError::Infeasible(_))
        ));
    }

    #[test]
    fn all_industry_is_infeasible() {
        let inst = instance(
            vec![
                reviewer("r1", ProfBg::Industry, Seniority::Senior, &[Europe], 1),
                reviewer("r2", ProfBg::Industry, Seniority::Junior, &[Asia], 1),
                reviewer("r3", ProfBg::Industry, Seniority::Advanced, &[Africa], 1),
            ],
            1,
            0.5,
            3,
        );
        let pairs = PairSet::from_instance(&inst, 0.0);
        let (lo, hi) = bounds(&inst);
        let (net, _) = build_network(&inst, &pairs, &lo, &hi, false).unwrap();
        assert!(matches!(
            min_cost_feasible_flow(&net),
            Err(FlowError::Infeasible(_))
        ));
    }

    #[test]
    fn shared_location_is_infeasible() {
        let inst = instance(
            vec![
                reviewer("r1", ProfBg::Industry, Seniority::Senior, &[Europe], 1),
                reviewer(
                    "r2",
                    ProfBg::Academia,
                    Seniority::Junior,
                    &[Europe, Asia],
                    1,
                ),
                reviewer("r3", ProfBg::Both, Seniority::Advanced, &[Europe], 1),
            ],
            1,
            0.5,
            3,
        );
        let pairs = PairSet::from_instance(&inst, 0.0);
        let (lo, hi) = bounds(&inst);
        let (net, _) = build_network(&inst, &pairs, &lo, &hi, false).unwrap();
        assert!(min_cost_feasible_flow(&net).is_err());
    }

    #[test]
    fn conservation_splits_units_evenly() {
        let inst = instance(
            vec![
                reviewer(
                    "r1",
                    ProfBg::Industry,
                    Seniority::Senior,
                    &[Europe, Asia],
                    2,
                ),
                reviewer("r2", ProfBg::Academia, Seniority::Junior, &[Asia], 2),
                reviewer("r3", ProfBg::Both, Seniority::Advanced, &[Africa], 2),
            ],
            2,
            0.4,
            3,
        );
        let pairs = PairSet::from_instance(&inst, 0.0);
        let (lo, hi) = bounds(&inst);
        let (net, layout) = build_network(&inst, &pairs, &lo, &hi, true).unwrap();
        let r = min_cost_feasible_flow(&net).unwrap();
        for (j, block) in layout.diversity_nodes.iter().enumerate() {
            let into = |range: std::ops::Range<usize>| -> i64 {
                net.edges()
                    .iter()
                    .zip(&r.flow)
                    .filter(|(e, _)| block[range.clone()].contains(&e.to))
                    .map(|(_, f)| f)
                    .sum()
            };
            assert_eq!(into(0..3), 21, "paper {j}");
            assert_eq!(into(3..17), 21, "paper {j}");
            assert_eq!(into(17..20), 21, "paper {j}");
        }
    }

    #[test]
    fn empty_locations_are_rejected() {
        let mut r1 = reviewer("r1", ProfBg::Industry, Seniority::Senior, &[Europe], 1);
        r1.locations.clear();
        let inst = instance(vec![r1], 1, 0.5, 3);
        let pairs = PairSet::from_instance(&inst, 0.0);
        let err = build_network(&inst, &pairs, &[0], &[1], false).unwrap_err();
        assert_eq!(err, NetworkError::EmptyLocations("r1".into()));
    }

    #[test]
    fn partial_flow_is_an_error() {
        let inst = instance(
            vec![reviewer(
                "r1",
                ProfBg::Both,
                Seniority::Senior,
                &[Europe],
                1,
            )],
            1,
            0.5,
            1,
        );
        let pairs = PairSet::from_instance(&inst, 0.0);
        let (net, layout) = build_network(&inst, &pairs, &[0], &[1], false).unwrap();
        let mut flow = vec![0; net.edges().len()];
        flow[layout.decisions[0].edge] = 7;
        assert!(matches!(
            extract_assignment(&flow, &layout),
            Err(NetworkError::PartialFlow { flow: 7, .. })
        ));
    }

    #[test]
    fn pair_scores_follow_transform() {
        assert_eq!(pair_score(0.0), 10_000);
        assert_eq!(pair_score(0.5), 20_000);
        assert_eq!(pair_score(1.0), 10_000_000_000);
        assert_eq!(unit_cost(0.5), -20_000);
    }
}
