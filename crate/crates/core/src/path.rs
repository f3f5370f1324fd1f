//! Shortest routes over a [`RouteGraph`] and their unit-flow certificate.
//!
//! The solver keeps two label tables, as in the classic hand formulation of
//! Dijkstra's method: `settled` (final labels) and `tentative` (marks that
//! may still improve). Each label stores the accumulated distance, the
//! predecessor and the iteration that produced it. Ties are resolved
//! deterministically: fewer hops first, then the lexicographically smallest
//! node sequence.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::graph::RouteGraph;

/// 1-based node identifier; node 1 is the source, node `m` the sink.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn from_index(i: usize) -> Self {
        NodeId(i as u32 + 1)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Label {
    pub dist: f64,
    pub hops: u32,
    pub predecessor: Option<usize>,
    pub iteration: u32,
}

/// Solver bookkeeping after a run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub settled: Vec<Option<Label>>,
    pub tentative: Vec<Option<Label>>,
    /// Node indices in the order they were settled.
    pub order: Vec<usize>,
}

impl SolverState {
    fn new(m: usize) -> Self {
        Self { settled: vec![None; m], tentative: vec![None; m], order: Vec::new() }
    }

    fn path_to(&self, mut v: usize) -> Vec<usize> {
        let mut p = vec![v];
        while let Some(u) = self.settled[v].and_then(|l| l.predecessor) {
            p.push(u);
            v = u;
        }
        p.reverse();
        p
    }

    /// Orders two candidate labels for the same node.
    fn cmp_labels(&self, a: &Label, b: &Label) -> Ordering {
        a.dist.total_cmp(&b.dist).then(a.hops.cmp(&b.hops)).then_with(|| match (a.predecessor, b.predecessor) {
            (Some(pa), Some(pb)) if pa != pb => self.path_to(pa).cmp(&self.path_to(pb)),
            _ => Ordering::Equal,
        })
    }

    fn cmp_nodes(&self, u: usize, v: usize) -> Ordering {
        let (Some(a), Some(b)) = (self.tentative[u], self.tentative[v]) else {
            return Ordering::Equal;
        };
        a.dist.total_cmp(&b.dist).then(a.hops.cmp(&b.hops)).then_with(|| {
            let mut pu = a.predecessor.map(|p| self.path_to(p)).unwrap_or_default();
            let mut pv = b.predecessor.map(|p| self.path_to(p)).unwrap_or_default();
            pu.push(u);
            pv.push(v);
            pu.cmp(&pv)
        })
    }
}

/// Optimal source to sink route.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub path: Vec<NodeId>,
    #[serde(rename = "hops")]
    pub hop_count: usize,
    #[serde(rename = "cost_px")]
    pub total_cost: f64,
}

fn check_ids(graph: &RouteGraph, ids: &[NodeId]) -> Result<(), Error> {
    for id in ids {
        if id.0 == 0 || id.index() >= graph.m() {
            return Err(Error::InvalidNode(id.0));
        }
    }
    Ok(())
}

/// Shortest path from `source` to `sink`. `Ok(None)` when the sink is not
/// reachable.
pub fn dijkstra(graph: &RouteGraph, source: NodeId, sink: NodeId) -> Result<Option<Route>, Error> {
    Ok(dijkstra_with_state(graph, source, sink)?.0)
}

/// Like [`dijkstra`], also returning the label tables.
pub fn dijkstra_with_state(
    graph: &RouteGraph,
    source: NodeId,
    sink: NodeId,
) -> Result<(Option<Route>, SolverState), Error> {
    check_ids(graph, &[source, sink])?;
    if source == sink {
        return Err(Error::SameEndpoints);
    }
    let m = graph.m();
    let (s, t) = (source.index(), sink.index());
    let mut st = SolverState::new(m);
    st.tentative[s] = Some(Label { dist: 0.0, hops: 0, predecessor: None, iteration: 0 });

    let mut iteration = 0u32;
    loop {
        // Save the marked node with the best label.
        let mut best: Option<usize> = None;
        for v in 0..m {
            if st.tentative[v].is_none() {
                continue;
            }
            best = match best {
                Some(b) if st.cmp_nodes(b, v) != Ordering::Greater => Some(b),
                _ => Some(v),
            };
        }
        let Some(u) = best else {
            return Ok((None, st));
        };
        iteration += 1;
        let label = st.tentative[u].take().expect("selected node is marked");
        st.settled[u] = Some(label);
        st.order.push(u);
        if u == t {
            break;
        }
        // Mark neighbours, keeping the smaller of old and new marks.
        for v in 0..m {
            if v == u || st.settled[v].is_some() {
                continue;
            }
            let Some(c) = graph.cost(u, v) else { continue };
            let cand = Label { dist: label.dist + c, hops: label.hops + 1, predecessor: Some(u), iteration };
            let replace = match &st.tentative[v] {
                None => true,
                Some(old) => st.cmp_labels(&cand, old) == Ordering::Less,
            };
            if replace {
                st.tentative[v] = Some(cand);
            }
        }
    }

    let path: Vec<NodeId> = st.path_to(t).into_iter().map(NodeId::from_index).collect();
    let total = st.settled[t].map(|l| l.dist).unwrap_or_default();
    Ok((Some(Route { hop_count: path.len() - 1, path, total_cost: total }), st))
}

/// Edge flows keyed by directed node-id pairs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FlowVector {
    pub x: BTreeMap<(NodeId, NodeId), f64>,
}

impl FlowVector {
    pub fn get(&self, i: NodeId, j: NodeId) -> f64 {
        self.x.get(&(i, j)).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, i: NodeId, j: NodeId, v: f64) {
        if v == 0.0 {
            self.x.remove(&(i, j));
        } else {
            self.x.insert((i, j), v);
        }
    }
}

/// One flow per consecutive pair of the route.
pub fn route_to_flow(route: &Route) -> FlowVector {
    let mut f = FlowVector::default();
    for w in route.path.windows(2) {
        f.set(w[0], w[1], 1.0);
    }
    f
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Total outflow of the source differs from 1.
    SourceOutflow(f64),
    SourceInflow(f64),
    /// Total inflow of the sink differs from 1.
    SinkInflow(f64),
    SinkOutflow(f64),
    /// Inflow minus outflow at an interior node is not 0.
    Conservation { node: NodeId, net: f64 },
    Bounds { from: NodeId, to: NodeId, value: f64 },
    MissingEdge { from: NodeId, to: NodeId },
    UnknownNode { from: NodeId, to: NodeId },
    Integrality { from: NodeId, to: NodeId, value: f64 },
    /// More than one unit passes through an interior node.
    NodeThroughput { node: NodeId, inflow: f64 },
    /// Flow on a circulation that is not part of the source to sink path.
    Detached { edges: usize },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FlowReport {
    pub violations: Vec<Violation>,
}

impl FlowReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

const FLOW_TOL: f64 = 1e-9;

/// Checks a flow against the unit-flow constraints of the routing problem:
/// source emits one unit, sink absorbs one unit, interior nodes conserve
/// flow, each edge carries 0 or 1, and nothing flows on missing edges. A
/// valid flow is exactly a simple source to sink path.
pub fn validate_flow(x: &FlowVector, graph: &RouteGraph) -> FlowReport {
    let m = graph.m();
    let mut v = Vec::new();
    let mut inflow = vec![0.0; m];
    let mut outflow = vec![0.0; m];
    for (&(i, j), &val) in &x.x {
        if i.0 == 0 || j.0 == 0 || i.index() >= m || j.index() >= m || i == j {
            v.push(Violation::UnknownNode { from: i, to: j });
            continue;
        }
        if !(0.0..=1.0).contains(&val) {
            v.push(Violation::Bounds { from: i, to: j, value: val });
        } else if val != 0.0 && val != 1.0 {
            v.push(Violation::Integrality { from: i, to: j, value: val });
        }
        if val != 0.0 && graph.cost(i.index(), j.index()).is_none() {
            v.push(Violation::MissingEdge { from: i, to: j });
        }
        outflow[i.index()] += val;
        inflow[j.index()] += val;
    }
    let (s, t) = (0, m - 1);
    let off = |a: f64, b: f64| libm::fabs(a - b) > FLOW_TOL;
    if off(outflow[s], 1.0) {
        v.push(Violation::SourceOutflow(outflow[s]));
    }
    if off(inflow[s], 0.0) {
        v.push(Violation::SourceInflow(inflow[s]));
    }
    if off(inflow[t], 1.0) {
        v.push(Violation::SinkInflow(inflow[t]));
    }
    if off(outflow[t], 0.0) {
        v.push(Violation::SinkOutflow(outflow[t]));
    }
    for k in 1..m - 1 {
        let node = NodeId::from_index(k);
        if off(inflow[k], outflow[k]) {
            v.push(Violation::Conservation { node, net: inflow[k] - outflow[k] });
        } else if inflow[k] > 1.0 + FLOW_TOL {
            v.push(Violation::NodeThroughput { node, inflow: inflow[k] });
        }
    }
    if v.is_empty() {
        // Walk the path from the source; any unit edge not on it belongs to a
        // detached circulation.
        let used: Vec<(usize, usize)> = x.x.iter().filter(|(_, &val)| val == 1.0).map(|(&(i, j), _)| (i.index(), j.index())).collect();
        let mut cur = s;
        let mut walked = 0;
        while cur != t && walked <= used.len() {
            match used.iter().find(|(i, _)| *i == cur) {
                Some(&(_, j)) => {
                    cur = j;
                    walked += 1;
                }
                None => break,
            }
        }
        if walked != used.len() || cur != t {
            v.push(Violation::Detached { edges: used.len().saturating_sub(walked) });
        }
    }
    FlowReport { violations: v }
}

/// Total cost carried by a valid flow.
pub fn objective(x: &FlowVector, graph: &RouteGraph) -> Result<f64, Error> {
    if !validate_flow(x, graph).is_valid() {
        return Err(Error::InvalidFlow);
    }
    Ok(x
        .x
        .iter()
        .map(|(&(i, j), &val)| val * graph.cost(i.index(), j.index()).unwrap_or(0.0))
        .sum())
}
