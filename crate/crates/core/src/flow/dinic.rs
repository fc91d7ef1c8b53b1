use std::collections::VecDeque;

use super::{BoundedFlowNetwork, FlowError, FlowResult, InfeasibilityCertificate, NodeId};

/// Plain Dinic over a residual graph with paired arcs (`a ^ 1` is the reverse).
#[derive(Debug, Clone)]
struct Dinic {
    adj: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<i64>,
    level: Vec<i32>,
    iter: Vec<usize>,
}

impl Dinic {
    fn new(n: usize) -> Self {
        Dinic {
            adj: vec![Vec::new(); n],
            to: Vec::new(),
            cap: Vec::new(),
            level: vec![0; n],
            iter: vec![0; n],
        }
    }

    fn add_arc(&mut self, from: usize, to: usize, cap: i64) -> usize {
        let a = self.to.len();
        self.adj[from].push(a);
        self.to.push(to);
        self.cap.push(cap);
        self.adj[to].push(a + 1);
        self.to.push(from);
        self.cap.push(0);
        a
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &a in &self.adj[u] {
                let v = self.to[a];
                if self.cap[a] > 0 && self.level[v] < 0 {
                    self.level[v] = self.level[u] + 1;
                    q.push_back(v);
                }
            }
        }
        self.level[t] >= 0
    }

    fn dfs(&mut self, u: usize, t: usize, limit: i64) -> i64 {
        if u == t {
            return limit;
        }
        while self.iter[u] < self.adj[u].len() {
            let a = self.adj[u][self.iter[u]];
            let v = self.to[a];
            if self.cap[a] > 0 && self.level[v] == self.level[u] + 1 {
                let pushed = self.dfs(v, t, limit.min(self.cap[a]));
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

    fn run(&mut self, s: usize, t: usize) -> i64 {
        let mut total = 0;
        while self.bfs(s, t) {
            self.iter.iter_mut().for_each(|i| *i = 0);
            loop {
                let f = self.dfs(s, t, i64::MAX);
                if f == 0 {
                    break;
                }
                total += f;
            }
        }
        total
    }

    fn reachable(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[s] = true;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &a in &self.adj[u] {
                let v = self.to[a];
                if self.cap[a] > 0 && !seen[v] {
                    seen[v] = true;
                    q.push_back(v);
                }
            }
        }
        seen
    }
}

/// Maximum source-to-sink flow. Every edge must have lower bound 0; the
/// required value, if any, is ignored.
pub fn max_flow(net: &BoundedFlowNetwork) -> Result<FlowResult, FlowError> {
    net.validate()?;
    if let Some(k) = net.edges().iter().position(|e| e.lower != 0) {
        return Err(FlowError::LowerBoundsPresent(k));
    }
    let mut g = Dinic::new(net.node_count());
    let arcs: Vec<usize> = net
        .edges()
        .iter()
        .map(|e| g.add_arc(e.from, e.to, e.capacity))
        .collect();
    g.run(net.source(), net.sink());
    let flow = arcs.iter().map(|&a| g.cap[a ^ 1]).collect();
    Ok(net.result_from_flow(flow))
}

/// A flow meeting every lower bound and capacity. With a required value the
/// throughput equals it; otherwise the throughput is maximised.
pub fn feasible_flow(net: &BoundedFlowNetwork) -> Result<FlowResult, FlowError> {
    net.validate()?;
    let n = net.node_count();
    let (s, t) = (net.source(), net.sink());
    let (ss, tt) = (n, n + 1);
    let mut g = Dinic::new(n + 2);
    let mut excess = vec![0i64; n];
    let arcs: Vec<usize> = net
        .edges()
        .iter()
        .map(|e| {
            excess[e.to] += e.lower;
            excess[e.from] -= e.lower;
            g.add_arc(e.from, e.to, e.capacity - e.lower)
        })
        .collect();
    let back = match net.required_value() {
        Some(v) => {
            excess[s] += v;
            excess[t] -= v;
            None
        }
        None => {
            let big = net.edges().iter().map(|e| e.capacity).sum::<i64>() + 1;
            Some(g.add_arc(t, s, big))
        }
    };
    let mut need = 0;
    let mut supply_arcs: Vec<(NodeId, usize)> = Vec::new();
    for (v, &x) in excess.iter().enumerate() {
        if x > 0 {
            supply_arcs.push((v, g.add_arc(ss, v, x)));
            need += x;
        } else if x < 0 {
            supply_arcs.push((v, g.add_arc(v, tt, -x)));
        }
    }
    let routed = g.run(ss, tt);
    if routed < need {
        let seen = g.reachable(ss);
        let unmet = supply_arcs
            .iter()
            .filter(|(_, a)| g.cap[*a] > 0)
            .map(|&(v, a)| (v, if excess[v] > 0 { g.cap[a] } else { -g.cap[a] }))
            .collect();
        return Err(FlowError::Infeasible(InfeasibilityCertificate {
            source_side: (0..n).filter(|&v| seen[v]).collect(),
            unmet,
            conflicting_edge: None,
        }));
    }
    for &(_, a) in &supply_arcs {
        g.cap[a] = 0;
        g.cap[a ^ 1] = 0;
    }
    if let Some(a) = back {
        g.cap[a] = 0;
        g.cap[a ^ 1] = 0;
        g.run(s, t);
    }
    let flow = net
        .edges()
        .iter()
        .zip(&arcs)
        .map(|(e, &a)| e.lower + g.cap[a ^ 1])
        .collect();
    Ok(net.result_from_flow(flow))
}

#[cfg(test)]
mod tests {
    use super::super::oracle;
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn diamond_has_value_two() {
        let mut net = BoundedFlowNetwork::new(4, 0, 3);
        net.add_edge(0, 1, 0, 1, 0);
        net.add_edge(0, 2, 0, 1, 0);
        net.add_edge(1, 3, 0, 1, 0);
        net.add_edge(2, 3, 0, 1, 0);
        let r = max_flow(&net).unwrap();
        assert_eq!(r.value, 2);
        net.check_flow(&r.flow).unwrap();
    }

    #[test]
    fn zero_capacity_gives_zero() {
        let mut net = BoundedFlowNetwork::new(3, 0, 2);
        net.add_edge(0, 1, 0, 0, 0);
        net.add_edge(1, 2, 0, 0, 0);
        assert_eq!(max_flow(&net).unwrap().value, 0);
    }

    #[test]
    fn max_flow_rejects_lower_bounds() {
        let mut net = BoundedFlowNetwork::new(2, 0, 1);
        net.add_edge(0, 1, 1, 2, 0);
        assert_eq!(max_flow(&net), Err(FlowError::LowerBoundsPresent(0)));
    }

    #[test]
    fn single_edge_with_demand() {
        let mut net = BoundedFlowNetwork::new(2, 0, 1);
        net.add_edge(0, 1, 2, 3, 0);
        net.set_required_value(Some(2));
        let r = feasible_flow(&net).unwrap();
        assert_eq!(r.flow, vec![2]);
        assert_eq!(r.value, 2);
    }

    #[test]
    fn single_edge_lower_above_capacity() {
        let mut net = BoundedFlowNetwork::new(2, 0, 1);
        net.add_edge(0, 1, 4, 3, 0);
        assert!(matches!(feasible_flow(&net), Err(FlowError::Infeasible(_))));
    }

    #[test]
    fn certificate_names_starved_node() {
        // 0 -> 1 -> 3 and 0 -> 2 -> 3, but 2 -> 3 needs 2 units while 0 -> 2 allows 1.
        let mut net = BoundedFlowNetwork::new(4, 0, 3);
        net.add_edge(0, 1, 0, 5, 0);
        net.add_edge(0, 2, 0, 1, 0);
        net.add_edge(1, 3, 0, 5, 0);
        net.add_edge(2, 3, 2, 2, 0);
        match feasible_flow(&net) {
            Err(FlowError::Infeasible(c)) => {
                assert!(c.unmet.iter().any(|&(v, x)| v == 2 && x < 0));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn free_value_is_maximised() {
        let mut net = BoundedFlowNetwork::new(4, 0, 3);
        net.add_edge(0, 1, 1, 3, 0);
        net.add_edge(1, 3, 0, 2, 0);
        net.add_edge(0, 2, 0, 2, 0);
        net.add_edge(2, 3, 1, 4, 0);
        let r = feasible_flow(&net).unwrap();
        assert_eq!(r.value, 4);
        net.check_flow(&r.flow).unwrap();
    }

    pub(crate) fn random_net(
        rng: &mut ChaCha8Rng,
        nodes: usize,
        edges: usize,
        lower: bool,
    ) -> BoundedFlowNetwork {
        let mut net = BoundedFlowNetwork::new(nodes, 0, nodes - 1);
        for _ in 0..edges {
            let a = rng.gen_range(0..nodes - 1);
            let b = rng.gen_range(1..nodes);
            if a == b {
                continue;
            }
            let cap = rng.gen_range(0..=3);
            let lo = if lower {
                rng.gen_range(0..=cap.min(2))
            } else {
                0
            };
            net.add_edge(a, b, lo, cap, rng.gen_range(-3..=5));
        }
        net
    }

    #[test]
    fn feasibility_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut checked = 0;
        while checked < 60 {
            let nodes = rng.gen_range(3..=6);
            let net = {
                let mut n = {
                    let k = rng.gen_range(2..=7);
                    random_net(&mut rng, nodes, k, true)
                };
                if rng.gen_bool(0.5) {
                    n.set_required_value(Some(rng.gen_range(0..=3)));
                }
                n
            };
            let brute = oracle::enumerate(&net);
            match feasible_flow(&net) {
                Ok(r) => {
                    let (_, best_value) = brute.expect("oracle found no flow");
                    net.check_flow(&r.flow).unwrap();
                    assert_eq!(r.value, best_value);
                }
                Err(FlowError::Infeasible(_)) => assert!(brute.is_none()),
                Err(e) => panic!("{e}"),
            }
            checked += 1;
        }
    }

    #[test]
    fn max_flow_equals_min_cut() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let nodes = rng.gen_range(2..=10);
            let net = {
                let k = rng.gen_range(0..20);
                random_net(&mut rng, nodes, k, false)
            };
            assert_eq!(max_flow(&net).unwrap().value, oracle::min_cut(&net));
        }
    }
}
