//! Declarative scenario documents (TOML) and their structural validation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::coding::MAX_GENERATION_SIZE;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub seed: u64,
    /// Seconds of simulated time after which the run stops.
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default)]
    pub ledger: LedgerSection,
    #[serde(default)]
    pub params: ParamsSection,
    #[serde(default)]
    pub nodes: Vec<NodeSection>,
    #[serde(default)]
    pub links: Vec<LinkSection>,
    #[serde(default)]
    pub chains: Vec<ChainSection>,
    #[serde(default)]
    pub workloads: Vec<WorkloadSection>,
    #[serde(default)]
    pub comparisons: Vec<ComparisonSection>,
}

fn default_horizon() -> f64 {
    86_400.0
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LedgerSection {
    #[serde(default)]
    pub confirmation_delay: f64,
    #[serde(default)]
    pub publication_delay: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsSection {
    /// Chunks a forwarder retains in its window.
    pub window_chunks: usize,
    /// Inactivity timeout for forwarders, receivers and senders, seconds.
    pub ack_timeout: f64,
    /// How long a node holding a key waits for the previous block to be claimed.
    pub claim_patience: f64,
    /// Per-hop processing added to edge links without an explicit delay.
    pub processing_delay: f64,
    /// Control-plane latency between nodes without a control_plane link.
    pub control_delay: f64,
    pub surge_window: f64,
    pub surge_cap: f64,
    /// Contractor margin as a fraction of the agreed price.
    pub margin: f64,
}

impl Default for ParamsSection {
    fn default() -> Self {
        ParamsSection {
            window_chunks: 8,
            ack_timeout: 10.0,
            claim_patience: 5.0,
            processing_delay: 0.0001,
            control_delay: 0.020,
            surge_window: 1.0,
            surge_cap: crate::economics::DEFAULT_SURGE_CAP,
            margin: 0.10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Sender,
    Forwarder,
    Receiver,
    Cracker,
    Cache,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeBehavior {
    #[default]
    Honest,
    WithholdAck,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSection {
    pub id: String,
    pub role: Role,
    #[serde(default)]
    pub position: [f64; 2],
    /// Hash applications per simulated second (crackers).
    #[serde(default)]
    pub hash_rate: u64,
    /// Bytes of content a cache may hold.
    #[serde(default)]
    pub cache_capacity: u64,
    /// Cost charged for every message the node forwards.
    #[serde(default)]
    pub forwarding_cost: u64,
    /// Base asking price for contracts and cache deliveries.
    #[serde(default)]
    pub price: u64,
    #[serde(default)]
    pub behavior: NodeBehavior,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    EdgeWireless,
    IspBackhaul,
    ControlPlane,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSection {
    pub endpoints: [String; 2],
    pub kind: LinkKind,
    /// Bytes per second.
    pub bandwidth: f64,
    /// Seconds. Edge links default to distance / c plus processing delay;
    /// other kinds default to the control delay.
    #[serde(default)]
    pub delay: Option<f64>,
    #[serde(default)]
    pub technology: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    pub id: String,
    pub iterations: u64,
    pub values: Vec<u64>,
    /// When set together with `publisher`, the chain is published on its own
    /// at this time instead of being used by a workload.
    #[serde(default)]
    pub publish_at: Option<f64>,
    #[serde(default)]
    pub publisher: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    DoubleIncentive,
    AllOrNothing,
    Contract,
    Competing,
    CacheDemo,
}

impl Model {
    pub fn as_str(self) -> &'static str {
        match self {
            Model::DoubleIncentive => "double_incentive",
            Model::AllOrNothing => "all_or_nothing",
            Model::Contract => "contract",
            Model::Competing => "competing",
            Model::CacheDemo => "cache_demo",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultKind {
    Drop,
    Corrupt,
}

/// A scripted fault on one chunk crossing one link.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultSection {
    pub kind: FaultKind,
    pub from: String,
    pub to: String,
    pub chunk: u64,
    #[serde(default = "one")]
    pub probability: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSection {
    pub id: String,
    pub model: Model,
    #[serde(default)]
    pub start: f64,
    /// Sender first, receiver last (double_incentive, all_or_nothing, cache_demo).
    #[serde(default)]
    pub path: Vec<String>,
    /// Forwarder lists, one per competing path.
    #[serde(default)]
    pub paths: Vec<Vec<String>>,
    #[serde(default)]
    pub sender: Option<String>,
    #[serde(default)]
    pub receiver: Option<String>,
    #[serde(default)]
    pub chain: Option<String>,
    pub message_length: u64,
    pub chunk_size: u64,
    #[serde(default)]
    pub faults: Vec<FaultSection>,
    // contract
    #[serde(default)]
    pub principal: Option<String>,
    #[serde(default)]
    pub contractor: Option<String>,
    #[serde(default)]
    pub price: Option<u64>,
    // competing
    #[serde(default)]
    pub reward_pool: Option<u64>,
    #[serde(default)]
    pub packets_per_path: Option<usize>,
    #[serde(default)]
    pub upstream_share: f64,
    // cache_demo
    #[serde(default)]
    pub requests: Vec<f64>,
}

/// Analytic ISP-versus-edge comparison written to latency.csv.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonSection {
    pub src: String,
    pub dst: String,
    #[serde(default)]
    pub message_length: u64,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn node(&self, id: &str) -> Option<&NodeSection> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn chain(&self, id: &str) -> Option<&ChainSection> {
        self.chains.iter().find(|c| c.id == id)
    }
}

/// One validation finding, located by a dotted field path.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Diagnostic {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

struct Checker<'a> {
    cfg: &'a ScenarioConfig,
    ids: BTreeSet<&'a str>,
    out: Vec<Diagnostic>,
}

impl<'a> Checker<'a> {
    fn push(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.out.push(Diagnostic { field: field.into(), message: message.into() });
    }

    fn node_ref(&mut self, field: String, id: &str) -> bool {
        if self.ids.contains(id) {
            true
        } else {
            self.push(field, format!("unknown node `{id}`"));
            false
        }
    }

    fn has_data_link(&self, a: &str, b: &str) -> bool {
        self.cfg.links.iter().any(|l| {
            l.kind != LinkKind::ControlPlane
                && ((l.endpoints[0] == a && l.endpoints[1] == b) || (l.endpoints[0] == b && l.endpoints[1] == a))
        })
    }

    fn connected(&self, a: &str, b: &str) -> bool {
        let mut seen = BTreeSet::from([a]);
        let mut stack = vec![a];
        while let Some(n) = stack.pop() {
            if n == b {
                return true;
            }
            for l in self.cfg.links.iter().filter(|l| l.kind != LinkKind::ControlPlane) {
                let [x, y] = &l.endpoints;
                let next = if x == n { y } else if y == n { x } else { continue };
                if seen.insert(next.as_str()) {
                    stack.push(next.as_str());
                }
            }
        }
        false
    }

    fn positive(&mut self, field: &str, v: f64) {
        if !(v.is_finite() && v > 0.0) {
            self.push(field, format!("must be positive, got {v}"));
        }
    }

    fn non_negative(&mut self, field: &str, v: f64) {
        if !(v.is_finite() && v >= 0.0) {
            self.push(field, format!("must be non-negative, got {v}"));
        }
    }

    fn line_path(&mut self, wf: &str, path: &[String], min_len: usize) -> bool {
        if path.len() < min_len {
            self.push(format!("{wf}.path"), format!("needs at least {min_len} nodes, got {}", path.len()));
            return false;
        }
        let mut ok = true;
        let mut seen = BTreeSet::new();
        for (i, n) in path.iter().enumerate() {
            ok &= self.node_ref(format!("{wf}.path[{i}]"), n);
            if !seen.insert(n.as_str()) {
                self.push(format!("{wf}.path[{i}]"), format!("node `{n}` appears twice"));
                ok = false;
            }
        }
        if ok {
            for (i, pair) in path.windows(2).enumerate() {
                if !self.has_data_link(&pair[0], &pair[1]) {
                    self.push(format!("{wf}.path[{i}]"), format!("no data link between `{}` and `{}`", pair[0], pair[1]));
                    ok = false;
                }
            }
        }
        ok
    }

    fn chain_ref(&mut self, wf: &str, w: &WorkloadSection) -> Option<&'a ChainSection> {
        match &w.chain {
            None => {
                self.push(format!("{wf}.chain"), "missing chain reference");
                None
            }
            Some(id) => {
                let c = self.cfg.chain(id);
                if c.is_none() {
                    self.push(format!("{wf}.chain"), format!("unknown chain `{id}`"));
                }
                c
            }
        }
    }

    fn role_of(&self, id: &str) -> Option<Role> {
        self.cfg.node(id).map(|n| n.role)
    }
}

/// Lists every structural problem in `cfg`; an empty result means it will run.
pub fn validate(cfg: &ScenarioConfig) -> Vec<Diagnostic> {
    let mut ck = Checker { cfg, ids: BTreeSet::new(), out: Vec::new() };

    if !(cfg.horizon.is_finite() && cfg.horizon > 0.0) {
        ck.push("horizon", "must be positive");
    }
    ck.non_negative("ledger.confirmation_delay", cfg.ledger.confirmation_delay);
    ck.non_negative("ledger.publication_delay", cfg.ledger.publication_delay);
    let p = &cfg.params;
    if p.window_chunks == 0 {
        ck.push("params.window_chunks", "must be at least 1");
    }
    ck.positive("params.ack_timeout", p.ack_timeout);
    ck.non_negative("params.claim_patience", p.claim_patience);
    ck.non_negative("params.processing_delay", p.processing_delay);
    ck.non_negative("params.control_delay", p.control_delay);
    ck.positive("params.surge_window", p.surge_window);
    if p.surge_cap.is_nan() || p.surge_cap < 1.0 {
        ck.push("params.surge_cap", "must be at least 1");
    }
    if !(0.0..1.0).contains(&p.margin) {
        ck.push("params.margin", "must be in [0, 1)");
    }

    for (i, n) in cfg.nodes.iter().enumerate() {
        if n.id.is_empty() {
            ck.push(format!("nodes[{i}].id"), "empty node id");
        } else if !ck.ids.insert(&n.id) {
            ck.push(format!("nodes[{i}].id"), format!("duplicate node id `{}`", n.id));
        }
        if n.role == Role::Cracker && n.hash_rate == 0 {
            ck.push(format!("nodes[{i}].hash_rate"), "crackers need a positive hash rate");
        }
        if !(n.position[0].is_finite() && n.position[1].is_finite()) {
            ck.push(format!("nodes[{i}].position"), "must be finite");
        }
    }

    for (i, l) in cfg.links.iter().enumerate() {
        let f = format!("links[{i}]");
        let a = ck.node_ref(format!("{f}.endpoints[0]"), &l.endpoints[0]);
        let b = ck.node_ref(format!("{f}.endpoints[1]"), &l.endpoints[1]);
        if a && b && l.endpoints[0] == l.endpoints[1] {
            ck.push(format!("{f}.endpoints"), "a link needs two distinct endpoints");
        }
        if !(l.bandwidth.is_finite() && l.bandwidth > 0.0) {
            ck.push(format!("{f}.bandwidth"), format!("must be positive, got {}", l.bandwidth));
        }
        if let Some(d) = l.delay {
            ck.non_negative(&format!("{f}.delay"), d);
        }
    }

    let mut chain_ids = BTreeSet::new();
    for (i, c) in cfg.chains.iter().enumerate() {
        let f = format!("chains[{i}]");
        if !chain_ids.insert(c.id.as_str()) {
            ck.push(format!("{f}.id"), format!("duplicate chain id `{}`", c.id));
        }
        if c.iterations == 0 {
            ck.push(format!("{f}.iterations"), "must be at least 1");
        }
        if c.values.is_empty() {
            ck.push(format!("{f}.values"), "a chain needs at least one block");
        }
        match (&c.publish_at, &c.publisher) {
            (Some(t), Some(p)) => {
                ck.non_negative(&format!("{f}.publish_at"), *t);
                ck.node_ref(format!("{f}.publisher"), p);
            }
            (None, None) => {}
            _ => ck.push(format!("{f}.publish_at"), "publish_at and publisher go together"),
        }
    }

    let mut workload_ids = BTreeSet::new();
    for (i, w) in cfg.workloads.iter().enumerate() {
        let wf = format!("workloads[{i}]");
        if !workload_ids.insert(w.id.as_str()) {
            ck.push(format!("{wf}.id"), format!("duplicate workload id `{}`", w.id));
        }
        ck.non_negative(&format!("{wf}.start"), w.start);
        if w.message_length == 0 {
            ck.push(format!("{wf}.message_length"), "must be at least 1 byte");
        }
        if w.chunk_size == 0 || w.chunk_size > w.message_length.max(1) {
            ck.push(format!("{wf}.chunk_size"), "must be in 1..=message_length");
        }
        match w.model {
            Model::DoubleIncentive | Model::AllOrNothing => {
                let min = if w.model == Model::DoubleIncentive { 3 } else { 2 };
                let path_ok = ck.line_path(&wf, &w.path, min);
                let forwarders = w.path.len().saturating_sub(2);
                if w.model == Model::AllOrNothing && forwarders == 0 {
                    // direct radio: no chain needed
                } else if let Some(c) = ck.chain_ref(&wf, w) {
                    if path_ok && c.values.len() != forwarders {
                        ck.push(
                            format!("{wf}.chain"),
                            format!(
                                "chain `{}` has {} values but the path has {} forwarders; one reward block is generated for each forwarder",
                                c.id,
                                c.values.len(),
                                forwarders
                            ),
                        );
                    }
                }
            }
            Model::CacheDemo => {
                let path_ok = ck.line_path(&wf, &w.path, 3);
                if let Some(c) = ck.chain_ref(&wf, w) {
                    if path_ok && c.values.len() != w.path.len() - 2 {
                        ck.push(
                            format!("{wf}.chain"),
                            format!("chain `{}` needs one value per forwarder on the origin path", c.id),
                        );
                    }
                }
                if w.requests.is_empty() {
                    ck.push(format!("{wf}.requests"), "at least one request time");
                }
                for (j, t) in w.requests.iter().enumerate() {
                    ck.non_negative(&format!("{wf}.requests[{j}]"), *t);
                }
            }
            Model::Contract => {
                let mut refs = BTreeMap::new();
                for (name, v) in [
                    ("sender", &w.sender),
                    ("receiver", &w.receiver),
                    ("principal", &w.principal),
                    ("contractor", &w.contractor),
                ] {
                    match v {
                        None => ck.push(format!("{wf}.{name}"), "missing"),
                        Some(id) => {
                            if ck.node_ref(format!("{wf}.{name}"), id) {
                                refs.insert(name, id.clone());
                            }
                        }
                    }
                }
                if w.price.is_none() {
                    ck.push(format!("{wf}.price"), "missing agreed price");
                }
                ck.chain_ref(&wf, w);
                if let (Some(s), Some(r)) = (refs.get("sender"), refs.get("receiver")) {
                    if s == r {
                        ck.push(format!("{wf}.receiver"), "sender and receiver must differ");
                    }
                }
            }
            Model::Competing => {
                let s = w.sender.clone();
                let r = w.receiver.clone();
                let s_ok = match &s {
                    Some(id) => ck.node_ref(format!("{wf}.sender"), id),
                    None => {
                        ck.push(format!("{wf}.sender"), "missing");
                        false
                    }
                };
                let r_ok = match &r {
                    Some(id) => ck.node_ref(format!("{wf}.receiver"), id),
                    None => {
                        ck.push(format!("{wf}.receiver"), "missing");
                        false
                    }
                };
                if w.paths.len() < 2 {
                    ck.push(format!("{wf}.paths"), "competing forwarders need at least two paths");
                }
                let mut used = BTreeSet::new();
                for (j, path) in w.paths.iter().enumerate() {
                    if path.is_empty() {
                        ck.push(format!("{wf}.paths[{j}]"), "empty path");
                        continue;
                    }
                    let mut ok = true;
                    for (k, n) in path.iter().enumerate() {
                        ok &= ck.node_ref(format!("{wf}.paths[{j}][{k}]"), n);
                        if !used.insert(n.clone()) {
                            ck.push(format!("{wf}.paths[{j}][{k}]"), format!("node `{n}` is on more than one path"));
                        }
                    }
                    if ok && s_ok && r_ok {
                        let mut full = vec![s.clone().unwrap()];
                        full.extend(path.iter().cloned());
                        full.push(r.clone().unwrap());
                        for pair in full.windows(2) {
                            if !ck.has_data_link(&pair[0], &pair[1]) {
                                ck.push(
                                    format!("{wf}.paths[{j}]"),
                                    format!("no data link between `{}` and `{}`", pair[0], pair[1]),
                                );
                            }
                        }
                    }
                }
                ck.chain_ref(&wf, w);
                let k = w.message_length.div_ceil(w.chunk_size.max(1));
                if k as usize > MAX_GENERATION_SIZE {
                    ck.push(format!("{wf}.chunk_size"), format!("generation size {k} exceeds {MAX_GENERATION_SIZE}"));
                }
                if !(0.0..=1.0).contains(&w.upstream_share) {
                    ck.push(format!("{wf}.upstream_share"), "must be in [0, 1]");
                }
            }
        }
        if w.model != Model::Competing && w.model != Model::Contract {
            for (j, f) in w.faults.iter().enumerate() {
                let ff = format!("{wf}.faults[{j}]");
                let on_path = w.path.windows(2).any(|p| p[0] == f.from && p[1] == f.to);
                if !on_path {
                    ck.push(format!("{ff}.from"), format!("`{}` -> `{}` is not a hop of the path", f.from, f.to));
                }
                if !(0.0..=1.0).contains(&f.probability) {
                    ck.push(format!("{ff}.probability"), "must be in [0, 1]");
                }
            }
        } else if !w.faults.is_empty() {
            ck.push(format!("{wf}.faults"), "scripted faults apply to line workloads only");
        }
        if w.model == Model::DoubleIncentive || w.model == Model::AllOrNothing {
            for (j, n) in w.path.iter().enumerate() {
                if let Some(role) = ck.role_of(n) {
                    if role == Role::Cracker {
                        ck.push(format!("{wf}.path[{j}]"), "crackers do not forward");
                    }
                }
            }
        }
    }

    for (i, c) in cfg.comparisons.iter().enumerate() {
        let a = ck.node_ref(format!("comparisons[{i}].src"), &c.src);
        let b = ck.node_ref(format!("comparisons[{i}].dst"), &c.dst);
        if a && b && !ck.connected(&c.src, &c.dst) {
            ck.push(format!("comparisons[{i}]"), format!("no data route from `{}` to `{}`", c.src, c.dst));
        }
    }

    ck.out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
seed = 1
[[nodes]]
id = "S"
role = "sender"
[[nodes]]
id = "F1"
role = "forwarder"
position = [100.0, 0.0]
[[nodes]]
id = "R"
role = "receiver"
position = [200.0, 0.0]
[[links]]
endpoints = ["S", "F1"]
kind = "edge_wireless"
bandwidth = 1e6
[[links]]
endpoints = ["F1", "R"]
kind = "edge_wireless"
bandwidth = 1e6
[[chains]]
id = "c"
iterations = 10
values = [5]
[[workloads]]
id = "w"
model = "double_incentive"
path = ["S", "F1", "R"]
chain = "c"
message_length = 100
chunk_size = 10
"#;

    #[test]
    fn small_scenario_is_valid() {
        let cfg = ScenarioConfig::from_toml(SMALL).unwrap();
        assert!(validate(&cfg).is_empty(), "{:?}", validate(&cfg));
        let again = ScenarioConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn unknown_link_endpoint_is_named() {
        let text = SMALL.replace(r#"endpoints = ["F1", "R"]"#, r#"endpoints = ["F1", "Q"]"#);
        let d = validate(&ScenarioConfig::from_toml(&text).unwrap());
        assert!(d.iter().any(|d| d.field == "links[1].endpoints[1]" && d.message.contains("`Q`")), "{d:?}");
    }

    #[test]
    fn block_count_must_match_forwarders() {
        let text = SMALL.replace("values = [5]", "values = [5, 5]");
        let d = validate(&ScenarioConfig::from_toml(&text).unwrap());
        assert_eq!(d.len(), 1);
        assert!(d[0].message.contains("one reward block is generated for each forwarder"));
    }

    #[test]
    fn every_violation_is_listed() {
        let text = SMALL
            .replace("bandwidth = 1e6\n[[links]]", "bandwidth = 0.0\n[[links]]")
            .replace("iterations = 10", "iterations = 0")
            .replace("chunk_size = 10", "chunk_size = 1000");
        let d = validate(&ScenarioConfig::from_toml(&text).unwrap());
        let fields: Vec<&str> = d.iter().map(|d| d.field.as_str()).collect();
        assert!(fields.contains(&"links[0].bandwidth"));
        assert!(fields.contains(&"chains[0].iterations"));
        assert!(fields.contains(&"workloads[0].chunk_size"));
    }

    #[test]
    fn missing_node_id_is_a_parse_error_naming_the_field() {
        let text = SMALL.replacen("id = \"S\"\n", "", 1);
        let err = ScenarioConfig::from_toml(&text).unwrap_err();
        assert!(err.to_string().contains("id"), "{err}");
    }

    #[test]
    fn empty_scenario_is_valid() {
        let cfg = ScenarioConfig::from_toml("").unwrap();
        assert!(validate(&cfg).is_empty());
    }
}
