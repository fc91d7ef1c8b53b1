use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};
use std::sync::Arc;

use super::{BoundedFlowNetwork, EdgeId, FlowError, FlowResult, InfeasibilityCertificate};

const INF: i64 = i64::MAX / 4;

/// Residual graph layout shared between cloned states. Edge `e` owns arcs
/// `2e` (forward) and `2e + 1` (reverse). The last edge is the sink-to-source
/// return edge that carries the throughput.
#[derive(Debug)]
struct Graph {
    start: Vec<usize>,
    adj: Vec<usize>,
    to: Vec<usize>,
    cost: Vec<i64>,
    net: BoundedFlowNetwork,
}

impl Graph {
    fn arcs(&self, u: usize) -> &[usize] {
        &self.adj[self.start[u]..self.start[u + 1]]
    }

    fn from(&self, a: usize) -> usize {
        self.to[a ^ 1]
    }
}

/// Min-cost flow state that can be re-optimised after bound changes.
///
/// The flow is kept optimal for its current node imbalances: every residual
/// arc has non-negative reduced cost under `potential`. [`Self::solve`]
/// removes the imbalances by shortest augmenting paths; [`Self::set_bounds`]
/// changes one edge and restores the invariant locally, so a subsequent
/// solve only repairs what the change broke.
#[derive(Debug, Clone)]
pub struct MinCostState {
    g: Arc<Graph>,
    cap: Vec<i64>,
    lo: Vec<i64>,
    hi: Vec<i64>,
    excess: Vec<i64>,
    potential: Vec<i64>,
    dist: Vec<i64>,
    level: Vec<u32>,
    iter: Vec<usize>,
}

impl MinCostState {
    /// Starts from the flow at the lower bounds. With a free value the
    /// return edge is unbounded and the cheapest feasible flow of any value
    /// is sought.
    pub fn new(net: &BoundedFlowNetwork) -> Result<Self, FlowError> {
        net.validate()?;
        let n = net.node_count();
        let m = net.edges().len();
        let mut lo: Vec<i64> = net.edges().iter().map(|e| e.lower).collect();
        let mut hi: Vec<i64> = net.edges().iter().map(|e| e.capacity).collect();
        let mut ends: Vec<(usize, usize, i64)> =
            net.edges().iter().map(|e| (e.from, e.to, e.cost)).collect();
        match net.required_value() {
            Some(v) => {
                lo.push(v);
                hi.push(v);
            }
            None => {
                let big = net
                    .edges()
                    .iter()
                    .filter(|e| e.from == net.source())
                    .map(|e| e.capacity)
                    .sum::<i64>();
                lo.push(0);
                hi.push(big);
            }
        }
        ends.push((net.sink(), net.source(), 0));

        let mut to = Vec::with_capacity(2 * (m + 1));
        let mut cost = Vec::with_capacity(2 * (m + 1));
        let mut degree = vec![0usize; n + 1];
        for &(u, v, c) in &ends {
            to.push(v);
            to.push(u);
            cost.push(c);
            cost.push(-c);
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut start = vec![0usize; n + 1];
        for v in 0..n {
            start[v + 1] = start[v] + degree[v];
        }
        let mut fill = start.clone();
        let mut adj = vec![0usize; to.len()];
        for a in 0..to.len() {
            let u = to[a ^ 1];
            adj[fill[u]] = a;
            fill[u] += 1;
        }
        let g = Arc::new(Graph {
            start,
            adj,
            to,
            cost,
            net: net.clone(),
        });

        let mut state = MinCostState {
            cap: vec![0; 2 * (m + 1)],
            excess: vec![0; n],
            potential: vec![0; n],
            dist: vec![0; n],
            level: vec![0; n],
            iter: vec![0; n],
            g,
            lo,
            hi,
        };
        for e in 0..=m {
            let f = state.lo[e];
            state.place(e, f);
        }
        if !state.potentials_from_dag() {
            // Saturating every negative arc leaves only non-negative residual
            // costs, so zero potentials are valid.
            for e in 0..=m {
                if state.g.cost[2 * e] < 0 {
                    let f = state.hi[e];
                    state.move_flow(e, f);
                }
            }
            state.potential.iter_mut().for_each(|p| *p = 0);
        }
        Ok(state)
    }

    fn place(&mut self, e: usize, f: i64) {
        self.cap[2 * e] = self.hi[e] - f;
        self.cap[2 * e + 1] = f - self.lo[e];
        let (u, v) = (self.g.from(2 * e), self.g.to[2 * e]);
        self.excess[v] += f;
        self.excess[u] -= f;
    }

    fn move_flow(&mut self, e: usize, f: i64) {
        let old = self.flow(e);
        self.shift(e, old, f);
    }

    /// Sets the flow of `e` to `f` given that it was `old`, under the
    /// current bounds.
    fn shift(&mut self, e: usize, old: i64, f: i64) {
        let (u, v) = (self.g.from(2 * e), self.g.to[2 * e]);
        self.excess[v] += f - old;
        self.excess[u] -= f - old;
        self.cap[2 * e] = self.hi[e] - f;
        self.cap[2 * e + 1] = f - self.lo[e];
    }

    /// Shortest distances from a virtual root over the residual graph, when
    /// that graph is acyclic. Returns false on a cycle.
    fn potentials_from_dag(&mut self) -> bool {
        let n = self.excess.len();
        let mut indeg = vec![0usize; n];
        for a in 0..self.cap.len() {
            if self.cap[a] > 0 {
                indeg[self.g.to[a]] += 1;
            }
        }
        let mut queue: VecDeque<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut dist = vec![0i64; n];
        let mut seen = 0;
        while let Some(u) = queue.pop_front() {
            seen += 1;
            for &a in self.g.arcs(u) {
                if self.cap[a] > 0 {
                    let v = self.g.to[a];
                    dist[v] = dist[v].min(dist[u] + self.g.cost[a]);
                    indeg[v] -= 1;
                    if indeg[v] == 0 {
                        queue.push_back(v);
                    }
                }
            }
        }
        if seen < n {
            return false;
        }
        self.potential = dist;
        true
    }

    fn reduced(&self, a: usize) -> i64 {
        self.g.cost[a] + self.potential[self.g.from(a)] - self.potential[self.g.to[a]]
    }

    pub fn network(&self) -> &BoundedFlowNetwork {
        &self.g.net
    }

    pub fn flow(&self, e: EdgeId) -> i64 {
        self.lo[e] + self.cap[2 * e + 1]
    }

    pub fn bounds(&self, e: EdgeId) -> (i64, i64) {
        (self.lo[e], self.hi[e])
    }

    pub fn flows(&self) -> Vec<i64> {
        (0..self.g.net.edges().len())
            .map(|e| self.flow(e))
            .collect()
    }

    pub fn cost(&self) -> i64 {
        self.g
            .net
            .edges()
            .iter()
            .enumerate()
            .map(|(e, edge)| edge.cost * self.flow(e))
            .sum()
    }

    pub fn result(&self) -> FlowResult {
        self.g.net.result_from_flow(self.flows())
    }

    /// Replaces the bounds of edge `e`. The flow on `e` moves to whichever
    /// end keeps its residual arcs non-negative in reduced cost; the
    /// resulting imbalance is removed by the next [`Self::solve`].
    pub fn set_bounds(&mut self, e: EdgeId, lower: i64, upper: i64) -> Result<(), FlowError> {
        if lower < 0 || lower > upper {
            return Err(FlowError::Infeasible(InfeasibilityCertificate {
                conflicting_edge: Some(e),
                ..Default::default()
            }));
        }
        let rc = self.reduced(2 * e);
        let f = if rc < 0 {
            upper
        } else if rc > 0 {
            lower
        } else {
            self.flow(e).clamp(lower, upper)
        };
        let old = self.flow(e);
        self.lo[e] = lower;
        self.hi[e] = upper;
        self.shift(e, old, f);
        Ok(())
    }

    /// Routes all imbalance at minimum cost. On failure the state is left
    /// partially solved and should be discarded.
    pub fn solve(&mut self) -> Result<(), FlowError> {
        loop {
            if !self.excess.iter().any(|&x| x > 0) {
                return Ok(());
            }
            let reach = self.dijkstra();
            let Some(limit) = reach else {
                return Err(FlowError::Infeasible(self.certificate()));
            };
            for v in 0..self.potential.len() {
                self.potential[v] += self.dist[v].min(limit);
            }
            while self.admissible_levels() {
                self.iter.iter_mut().for_each(|i| *i = 0);
                let sources: Vec<usize> = (0..self.excess.len())
                    .filter(|&v| self.excess[v] > 0)
                    .collect();
                for u in sources {
                    while self.excess[u] > 0 {
                        let pushed = self.push(u, self.excess[u]);
                        if pushed == 0 {
                            break;
                        }
                        self.excess[u] -= pushed;
                    }
                }
            }
        }
    }

    /// Multi-source Dijkstra on reduced costs from all surplus nodes, stopped
    /// at the first deficit node. Returns its distance.
    fn dijkstra(&mut self) -> Option<i64> {
        self.dist.iter_mut().for_each(|d| *d = INF);
        let mut heap = BinaryHeap::new();
        for (v, &x) in self.excess.iter().enumerate() {
            if x > 0 {
                self.dist[v] = 0;
                heap.push(Reverse((0i64, v)));
            }
        }
        while let Some(Reverse((d, u))) = heap.pop() {
            if d > self.dist[u] {
                continue;
            }
            if self.excess[u] < 0 {
                return Some(d);
            }
            for &a in self.g.arcs(u) {
                if self.cap[a] <= 0 {
                    continue;
                }
                let v = self.g.to[a];
                let rc = self.reduced(a);
                debug_assert!(rc >= 0, "negative reduced cost {rc} on arc {a}");
                let nd = d + rc;
                if nd < self.dist[v] {
                    self.dist[v] = nd;
                    heap.push(Reverse((nd, v)));
                }
            }
        }
        None
    }

    fn certificate(&self) -> InfeasibilityCertificate {
        InfeasibilityCertificate {
            source_side: (0..self.dist.len())
                .filter(|&v| self.dist[v] < INF)
                .collect(),
            unmet: (0..self.excess.len())
                .filter(|&v| self.excess[v] != 0)
                .map(|v| (v, self.excess[v]))
                .collect(),
            conflicting_edge: None,
        }
    }

    /// BFS levels over zero-reduced-cost residual arcs from surplus nodes.
    /// True when some deficit node is reachable.
    fn admissible_levels(&mut self) -> bool {
        self.level.iter_mut().for_each(|l| *l = u32::MAX);
        let mut queue = VecDeque::new();
        for (v, &x) in self.excess.iter().enumerate() {
            if x > 0 {
                self.level[v] = 0;
                queue.push_back(v);
            }
        }
        let mut found = false;
        while let Some(u) = queue.pop_front() {
            if self.excess[u] < 0 {
                found = true;
                continue;
            }
            for &a in self.g.arcs(u) {
                let v = self.g.to[a];
                if self.cap[a] > 0 && self.level[v] == u32::MAX && self.reduced(a) == 0 {
                    self.level[v] = self.level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        found
    }

    fn push(&mut self, u: usize, limit: i64) -> i64 {
        if self.excess[u] < 0 {
            let take = limit.min(-self.excess[u]);
            self.excess[u] += take;
            return take;
        }
        let g = Arc::clone(&self.g);
        let arcs = g.arcs(u);
        while self.iter[u] < arcs.len() {
            let a = arcs[self.iter[u]];
            let v = g.to[a];
            if self.cap[a] > 0 && self.level[v] == self.level[u] + 1 && self.reduced(a) == 0 {
                let pushed = self.push(v, limit.min(self.cap[a]));
                if pushed > 0 {
                    self.cap[a] -= pushed;
                    self.cap[a ^ 1] += pushed;
                    return pushed;
                }
            }
            self.iter[u] += 1;
        }
        0
    }
}

/// Cheapest flow meeting every bound (and the required value, if set).
pub fn min_cost_feasible_flow(net: &BoundedFlowNetwork) -> Result<FlowResult, FlowError> {
    let mut state = MinCostState::new(net)?;
    state.solve()?;
    Ok(state.result())
}
