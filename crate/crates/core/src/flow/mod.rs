//! Integral network flow with per-edge lower bounds.
//!
//! Three solvers share one network type:
//!
//! * [`max_flow`]: Dinic on a network without lower bounds.
//! * [`feasible_flow`]: lower bounds are moved into node imbalances,
//!   a super source/sink circulation is checked with Dinic, and the
//!   remaining source-to-sink throughput is maximised.
//! * [`min_cost_feasible_flow`]: successive shortest paths with node
//!   potentials over the same reduction. [`MinCostState`] keeps the
//!   residual graph and potentials so bounds can be tightened and the flow
//!   re-optimised without starting over.
//!
//! Infeasibility is reported with a cut certificate: the nodes that can
//! still be reached from the super source once no more flow can be routed,
//! plus the nodes whose imbalance stayed unmet.

mod dinic;
mod mincost;

pub use dinic::{feasible_flow, max_flow};
pub use mincost::{min_cost_feasible_flow, MinCostState};

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

pub type NodeId = usize;
pub type EdgeId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowEdge {
    pub from: NodeId,
    pub to: NodeId,
    pub lower: i64,
    pub capacity: i64,
    pub cost: i64,
    pub tag: u64,
}

/// Directed network with designated source and sink. When
/// `required_value` is set the source-to-sink throughput must equal it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundedFlowNetwork {
    node_count: usize,
    source: NodeId,
    sink: NodeId,
    edges: Vec<FlowEdge>,
    required_value: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FlowResult {
    pub flow: Vec<i64>,
    pub value: i64,
    pub cost: i64,
}

/// Why a flow problem has no solution.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct InfeasibilityCertificate {
    /// Original nodes on the super-source side of the final residual cut.
    pub source_side: Vec<NodeId>,
    /// Nodes whose imbalance could not be routed: positive for surplus,
    /// negative for unmet demand.
    pub unmet: Vec<(NodeId, i64)>,
    /// Edge whose lower bound exceeds its capacity, if that is the cause.
    pub conflicting_edge: Option<EdgeId>,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum FlowError {
    #[error("structurally invalid network: {0}")]
    Structural(String),
    #[error("no feasible flow")]
    Infeasible(InfeasibilityCertificate),
    #[error("residual graph contains a negative-cost cycle")]
    NegativeCycle,
    #[error("edge {0} has lower bounds; max_flow requires a network without them")]
    LowerBoundsPresent(EdgeId),
}

impl BoundedFlowNetwork {
    pub fn new(node_count: usize, source: NodeId, sink: NodeId) -> Self {
        BoundedFlowNetwork {
            node_count,
            source,
            sink,
            edges: Vec::new(),
            required_value: None,
        }
    }

    pub fn add_node(&mut self) -> NodeId {
        self.node_count += 1;
        self.node_count - 1
    }

    pub fn add_edge(
        &mut self,
        from: NodeId,
        to: NodeId,
        lower: i64,
        capacity: i64,
        cost: i64,
    ) -> EdgeId {
        self.add_tagged_edge(from, to, lower, capacity, cost, 0)
    }

    pub fn add_tagged_edge(
        &mut self,
        from: NodeId,
        to: NodeId,
        lower: i64,
        capacity: i64,
        cost: i64,
        tag: u64,
    ) -> EdgeId {
        self.edges.push(FlowEdge {
            from,
            to,
            lower,
            capacity,
            cost,
            tag,
        });
        self.edges.len() - 1
    }

    pub fn set_sink(&mut self, sink: NodeId) {
        self.sink = sink;
    }

    pub fn set_required_value(&mut self, value: Option<i64>) {
        self.required_value = value;
    }

    pub fn required_value(&self) -> Option<i64> {
        self.required_value
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn source(&self) -> NodeId {
        self.source
    }

    pub fn sink(&self) -> NodeId {
        self.sink
    }

    pub fn edges(&self) -> &[FlowEdge] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> &FlowEdge {
        &self.edges[e]
    }

    /// Structural checks; a lower bound above capacity is reported as
    /// infeasibility rather than a structural error.
    pub fn validate(&self) -> Result<(), FlowError> {
        let n = self.node_count;
        if self.source >= n || self.sink >= n || self.source == self.sink {
            return Err(FlowError::Structural(
                "source and sink must be distinct existing nodes".into(),
            ));
        }
        if let Some(v) = self.required_value {
            if v < 0 {
                return Err(FlowError::Structural("negative required value".into()));
            }
        }
        for (k, e) in self.edges.iter().enumerate() {
            if e.from >= n || e.to >= n {
                return Err(FlowError::Structural(format!(
                    "edge {k} leaves the node range"
                )));
            }
            if e.from == e.to {
                return Err(FlowError::Structural(format!("edge {k} is a self-loop")));
            }
            if e.to == self.source {
                return Err(FlowError::Structural(format!("edge {k} enters the source")));
            }
            if e.from == self.sink {
                return Err(FlowError::Structural(format!("edge {k} leaves the sink")));
            }
            if e.lower < 0 || e.capacity < 0 {
                return Err(FlowError::Structural(format!(
                    "edge {k} has a negative bound"
                )));
            }
        }
        for (k, e) in self.edges.iter().enumerate() {
            if e.lower > e.capacity {
                return Err(FlowError::Infeasible(InfeasibilityCertificate {
                    conflicting_edge: Some(k),
                    ..Default::default()
                }));
            }
        }
        Ok(())
    }

    /// Checks bounds and conservation of `flow`, and the required value.
    pub fn check_flow(&self, flow: &[i64]) -> Result<i64, String> {
        if flow.len() != self.edges.len() {
            return Err("flow vector length mismatch".into());
        }
        let mut balance = vec![0i64; self.node_count];
        for (k, (e, &f)) in self.edges.iter().zip(flow).enumerate() {
            if f < e.lower || f > e.capacity {
                return Err(format!(
                    "edge {k}: flow {f} outside [{}, {}]",
                    e.lower, e.capacity
                ));
            }
            balance[e.from] -= f;
            balance[e.to] += f;
        }
        for (v, &b) in balance.iter().enumerate() {
            if v != self.source && v != self.sink && b != 0 {
                return Err(format!("node {v}: imbalance {b}"));
            }
        }
        let value = balance[self.sink];
        if balance[self.source] != -value {
            return Err("source and sink imbalance differ".into());
        }
        if let Some(req) = self.required_value {
            if value != req {
                return Err(format!("value {value} differs from required {req}"));
            }
        }
        Ok(value)
    }

    pub(crate) fn result_from_flow(&self, flow: Vec<i64>) -> FlowResult {
        let mut value = 0;
        let mut cost = 0;
        for (e, &f) in self.edges.iter().zip(&flow) {
            if e.to == self.sink {
                value += f;
            }
            if e.from == self.sink {
                value -= f;
            }
            cost += e.cost * f;
        }
        FlowResult { flow, value, cost }
    }

    /// Graphviz rendering with `lower/cap/cost[/flow]` edge labels.
    pub fn to_dot(&self, result: Option<&FlowResult>) -> String {
        self.to_dot_labeled(result, |v| {
            if v == self.source {
                "source".into()
            } else if v == self.sink {
                "sink".into()
            } else {
                v.to_string()
            }
        })
    }

    /// Like [`Self::to_dot`] with caller-supplied node labels.
    pub fn to_dot_labeled(
        &self,
        result: Option<&FlowResult>,
        label: impl Fn(NodeId) -> String,
    ) -> String {
        let mut out = String::from("digraph flow {\n  rankdir=LR;\n");
        for v in 0..self.node_count {
            let shape = if v == self.source || v == self.sink {
                "box"
            } else {
                "ellipse"
            };
            let _ = writeln!(out, "  {v} [shape={shape},label=\"{}\"];", label(v));
        }
        for (k, e) in self.edges.iter().enumerate() {
            let mut text = format!("{}/{}/{}", e.lower, e.capacity, e.cost);
            if let Some(r) = result {
                let _ = write!(text, "/{}", r.flow[k]);
            }
            let _ = writeln!(out, "  {} -> {} [label=\"{}\"];", e.from, e.to, text);
        }
        out.push_str("}\n");
        out
    }
}

pub mod oracle {
    //! Exhaustive enumeration over integral flows for tiny networks.
    use super::*;

    /// Every edge's flow ranges over `lower..=capacity`; returns the
    /// feasible flow with minimum cost (ties: first in enumeration order)
    /// and, separately, the maximum feasible value.
    pub fn enumerate(net: &BoundedFlowNetwork) -> Option<(i64, i64)> {
        let edges = net.edges();
        if edges.iter().any(|e| e.lower > e.capacity) {
            return None;
        }
        let mut flow: Vec<i64> = edges.iter().map(|e| e.lower).collect();
        let mut best_cost: Option<i64> = None;
        let mut best_value: Option<i64> = None;
        loop {
            if let Ok(value) = net.check_flow(&flow) {
                let cost: i64 = edges.iter().zip(&flow).map(|(e, f)| e.cost * f).sum();
                best_cost = Some(best_cost.map_or(cost, |c| c.min(cost)));
                best_value = Some(best_value.map_or(value, |v| v.max(value)));
            }
            let mut k = 0;
            loop {
                if k == edges.len() {
                    return best_cost.zip(best_value);
                }
                if flow[k] < edges[k].capacity {
                    flow[k] += 1;
                    break;
                }
                flow[k] = edges[k].lower;
                k += 1;
            }
        }
    }

    /// Minimum s-t cut capacity by enumerating subsets of interior nodes.
    pub fn min_cut(net: &BoundedFlowNetwork) -> i64 {
        let n = net.node_count();
        let interior: Vec<usize> = (0..n)
            .filter(|&v| v != net.source() && v != net.sink())
            .collect();
        let mut best = i64::MAX;
        for mask in 0u32..(1 << interior.len()) {
            let mut side = vec![false; n];
            side[net.source()] = true;
            for (b, &v) in interior.iter().enumerate() {
                if mask & (1 << b) != 0 {
                    side[v] = true;
                }
            }
            let cut: i64 = net
                .edges()
                .iter()
                .filter(|e| side[e.from] && !side[e.to])
                .map(|e| e.capacity)
                .sum();
            best = best.min(cut);
        }
        best
    }
}
