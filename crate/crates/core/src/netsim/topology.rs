//! Nodes, links and routes built from a validated scenario.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use petgraph::algo::astar;
use petgraph::graph::{NodeIndex, UnGraph};

use super::scenario::{LinkKind, NodeBehavior, Role, ScenarioConfig};
use super::NetsimError;
use crate::economics::CapabilityQuote;
use crate::time::SimDuration;
use crate::NodeId;

/// Metres per second in vacuum.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub role: Role,
    pub position: [f64; 2],
    pub hash_rate: u64,
    pub cache_capacity: u64,
    pub forwarding_cost: u64,
    pub price: u64,
    pub behavior: NodeBehavior,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Link {
    pub a: NodeId,
    pub b: NodeId,
    pub kind: LinkKind,
    /// One-way propagation plus processing.
    pub delay: SimDuration,
    /// Bytes per second.
    pub bandwidth: f64,
    pub technology: String,
    pub length_meters: f64,
}

impl Link {
    pub fn joins(&self, x: &NodeId, y: &NodeId) -> bool {
        (&self.a == x && &self.b == y) || (&self.a == y && &self.b == x)
    }

    pub fn serialization(&self, bytes: u64) -> SimDuration {
        SimDuration::from_secs_f64(bytes as f64 / self.bandwidth)
    }
}

/// Time for `bytes` to cross `link`: propagation and processing plus
/// serialization at the link bandwidth.
pub fn transfer_time(bytes: u64, link: &Link) -> SimDuration {
    link.delay + link.serialization(bytes)
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Route {
    pub nodes: Vec<NodeId>,
    pub latency: SimDuration,
}

/// Latency of one message over edge-to-edge links versus the ISP backbone.
#[derive(Clone, Debug, PartialEq)]
pub struct PathComparison {
    pub edge: Route,
    pub isp: Route,
}

#[derive(Clone, Debug)]
pub struct Topology {
    nodes: BTreeMap<NodeId, Node>,
    links: Vec<Link>,
    control_delay: SimDuration,
}

impl Topology {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        let nodes: BTreeMap<NodeId, Node> = cfg
            .nodes
            .iter()
            .map(|n| {
                let id = NodeId::from(n.id.as_str());
                (
                    id.clone(),
                    Node {
                        id,
                        role: n.role,
                        position: n.position,
                        hash_rate: n.hash_rate,
                        cache_capacity: n.cache_capacity,
                        forwarding_cost: n.forwarding_cost,
                        price: n.price,
                        behavior: n.behavior,
                    },
                )
            })
            .collect();
        let processing = SimDuration::from_secs_f64(cfg.params.processing_delay);
        let control_delay = SimDuration::from_secs_f64(cfg.params.control_delay);
        let links = cfg
            .links
            .iter()
            .map(|l| {
                let a = NodeId::from(l.endpoints[0].as_str());
                let b = NodeId::from(l.endpoints[1].as_str());
                let length_meters = match (nodes.get(&a), nodes.get(&b)) {
                    (Some(x), Some(y)) => distance(x.position, y.position),
                    _ => 0.0,
                };
                let delay = match (l.delay, l.kind) {
                    (Some(d), _) => SimDuration::from_secs_f64(d),
                    (None, LinkKind::EdgeWireless) => {
                        SimDuration::from_secs_f64(length_meters / SPEED_OF_LIGHT) + processing
                    }
                    (None, _) => control_delay,
                };
                Link { a, b, kind: l.kind, delay, bandwidth: l.bandwidth, technology: l.technology.clone(), length_meters }
            })
            .collect();
        Topology { nodes, links, control_delay }
    }

    pub fn node(&self, id: &NodeId) -> Option<&Node> {
        self.nodes.get(id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn node_ids(&self) -> Vec<NodeId> {
        self.nodes.keys().cloned().collect()
    }

    /// The data link used between two adjacent nodes; edge links win over
    /// backhaul when both exist.
    pub fn data_link(&self, x: &NodeId, y: &NodeId) -> Option<&Link> {
        let find = |kind| self.links.iter().find(|l| l.kind == kind && l.joins(x, y));
        find(LinkKind::EdgeWireless).or_else(|| find(LinkKind::IspBackhaul))
    }

    /// One-way control-plane latency. A dedicated control link sets it,
    /// otherwise the scenario-wide control delay applies.
    pub fn control_delay(&self, x: &NodeId, y: &NodeId) -> SimDuration {
        if x == y {
            return SimDuration::ZERO;
        }
        self.links
            .iter()
            .find(|l| l.kind == LinkKind::ControlPlane && l.joins(x, y))
            .map_or(self.control_delay, |l| l.delay)
    }

    pub fn data_neighbours(&self, x: &NodeId) -> BTreeSet<NodeId> {
        self.links
            .iter()
            .filter(|l| l.kind != LinkKind::ControlPlane)
            .filter_map(|l| {
                if &l.a == x {
                    Some(l.b.clone())
                } else if &l.b == x {
                    Some(l.a.clone())
                } else {
                    None
                }
            })
            .collect()
    }

    /// Hops from `from` to `to` over data links.
    pub fn hop_distance(&self, from: &NodeId, to: &NodeId) -> Option<usize> {
        let mut seen = BTreeSet::from([from.clone()]);
        let mut queue = VecDeque::from([(from.clone(), 0usize)]);
        while let Some((n, d)) = queue.pop_front() {
            if &n == to {
                return Some(d);
            }
            for m in self.data_neighbours(&n) {
                if seen.insert(m.clone()) {
                    queue.push_back((m, d + 1));
                }
            }
        }
        None
    }

    /// Fastest route for a `bytes`-long message using only links of the given kinds.
    pub fn route(&self, src: &NodeId, dst: &NodeId, bytes: u64, kinds: &[LinkKind]) -> Option<Route> {
        let mut graph: UnGraph<NodeId, u64> = UnGraph::new_undirected();
        let index: BTreeMap<&NodeId, NodeIndex> =
            self.nodes.keys().map(|id| (id, graph.add_node(id.clone()))).collect();
        for l in self.links.iter().filter(|l| kinds.contains(&l.kind)) {
            graph.add_edge(index[&l.a], index[&l.b], transfer_time(bytes, l).as_nanos());
        }
        let (start, goal) = (*index.get(src)?, *index.get(dst)?);
        let (cost, path) = astar(&graph, start, |n| n == goal, |e| *e.weight(), |_| 0)?;
        Some(Route { nodes: path.into_iter().map(|i| graph[i].clone()).collect(), latency: SimDuration(cost) })
    }

    /// Sums per-hop transfer times along the best edge-only and ISP-only
    /// routes. A model without a link of one kind falls back to any data link.
    pub fn compare_paths(&self, src: &NodeId, dst: &NodeId, bytes: u64) -> Result<PathComparison, NetsimError> {
        let any = [LinkKind::EdgeWireless, LinkKind::IspBackhaul];
        let pick = |kind: LinkKind| {
            self.route(src, dst, bytes, &[kind]).or_else(|| self.route(src, dst, bytes, &any))
        };
        let no_route = || NetsimError::NoRoute { src: src.to_string(), dst: dst.to_string() };
        Ok(PathComparison { edge: pick(LinkKind::EdgeWireless).ok_or_else(no_route)?, isp: pick(LinkKind::IspBackhaul).ok_or_else(no_route)? })
    }

    /// What `node` would quote for carrying `bytes` over its link to `next`.
    pub fn quote(&self, node: &NodeId, next: &NodeId, bytes: u64, price: u64) -> Option<CapabilityQuote> {
        let link = self.data_link(node, next)?;
        Some(CapabilityQuote {
            node_id: node.clone(),
            technology_tag: link.technology.clone(),
            range_meters: link.length_meters.ceil().min(u32::MAX as f64) as u32,
            expected_latency: transfer_time(bytes, link),
            price,
        })
    }
}
