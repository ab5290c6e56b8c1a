//! Kripke-structure construction over configurations: successor
//! generation, state identity and deadlock tagging.
//!
//! A configuration is one model-checking state: the current net, the rule
//! set, the id bookkeeping (max id, step size) and the two identifier
//! pools. By default two configurations are the same state iff their full
//! canonical encodings agree, pools included; the opt-in semantic mode
//! relabels ids structurally and compares the net alone, collapsing
//! isomorphic nets that differ only in identifier history.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::digest::{fnv1a64, hex16};
use crate::firing::{self, FiringSemantics};
use crate::net::{Capacity, PetriNet, TransitionId};
use crate::rules::{apply_rule, find_matches, IdKind, IdPool, Rule};

/// One Kripke state of the model-checking process.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    net: PetriNet,
    rules: Vec<Rule>,
    max_id: u64,
    step_size: u64,
    place_pool: IdPool,
    transition_pool: IdPool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("step size must be at least 1")]
    ZeroStepSize,
    #[error("duplicate rule name {0}")]
    DuplicateRuleName(String),
    #[error("pooled {kind:?} id {id} collides with a live element")]
    PoolCollision { kind: IdKind, id: u64 },
    #[error("max id {max_id} is below live or pooled id {id}")]
    MaxIdTooSmall { max_id: u64, id: u64 },
}

impl Configuration {
    /// Full constructor; validates every configuration invariant.
    pub fn new(
        net: PetriNet,
        rules: Vec<Rule>,
        max_id: u64,
        step_size: u64,
        place_pool: IdPool,
        transition_pool: IdPool,
    ) -> Result<Configuration, ConfigError> {
        if step_size == 0 {
            return Err(ConfigError::ZeroStepSize);
        }
        let mut rules = rules;
        rules.sort_by(|a, b| a.name().cmp(b.name()));
        for pair in rules.windows(2) {
            if pair[0].name() == pair[1].name() {
                return Err(ConfigError::DuplicateRuleName(pair[0].name().to_string()));
            }
        }
        let live_places: BTreeSet<u64> = net.places().map(|p| p.id.0).collect();
        let live_transitions: BTreeSet<u64> = net.transitions().map(|t| t.id.0).collect();
        for id in place_pool.ids() {
            if live_places.contains(&id) {
                return Err(ConfigError::PoolCollision { kind: IdKind::Place, id });
            }
        }
        for id in transition_pool.ids() {
            if live_transitions.contains(&id) {
                return Err(ConfigError::PoolCollision { kind: IdKind::Transition, id });
            }
        }
        let highest = live_places
            .iter()
            .chain(live_transitions.iter())
            .chain(place_pool.ids().collect::<Vec<_>>().iter())
            .chain(transition_pool.ids().collect::<Vec<_>>().iter())
            .max()
            .copied();
        if let Some(id) = highest {
            if max_id < id {
                return Err(ConfigError::MaxIdTooSmall { max_id, id });
            }
        }
        Ok(Configuration { net, rules, max_id, step_size, place_pool, transition_pool })
    }

    /// Start-of-run configuration: empty pools, max id taken from the
    /// highest live element id.
    pub fn initial(
        net: PetriNet,
        rules: Vec<Rule>,
        step_size: u64,
    ) -> Result<Configuration, ConfigError> {
        let max_id = net
            .places()
            .map(|p| p.id.0)
            .chain(net.transitions().map(|t| t.id.0))
            .max()
            .unwrap_or(0);
        Configuration::new(
            net,
            rules,
            max_id,
            step_size,
            IdPool::new(IdKind::Place),
            IdPool::new(IdKind::Transition),
        )
    }

    pub fn net(&self) -> &PetriNet {
        &self.net
    }

    /// Rules in name order.
    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn rule(&self, name: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.name() == name)
    }

    pub fn max_id(&self) -> u64 {
        self.max_id
    }

    pub fn step_size(&self) -> u64 {
        self.step_size
    }

    pub fn place_pool(&self) -> &IdPool {
        &self.place_pool
    }

    pub fn transition_pool(&self) -> &IdPool {
        &self.transition_pool
    }

    /// Successor configuration with the same rule set (used by firing and
    /// rule application).
    pub(crate) fn with_net(&self, net: PetriNet) -> Configuration {
        Configuration { net, ..self.clone() }
    }

    pub(crate) fn with_transformed_net(
        &self,
        net: PetriNet,
        max_id: u64,
        place_pool: IdPool,
        transition_pool: IdPool,
    ) -> Configuration {
        Configuration {
            net,
            rules: self.rules.clone(),
            max_id,
            step_size: self.step_size,
            place_pool,
            transition_pool,
        }
    }

    /// Compact human-readable marking, e.g. `A@3 ; A@4*2`.
    pub fn marking_summary(&self) -> String {
        let entries: Vec<String> = self
            .net
            .marking()
            .iter()
            .map(|(p, c)| {
                let label = self.net.place(p).map(|pl| pl.label.as_str()).unwrap_or("?");
                if c == 1 {
                    format!("{label}@{}", p.0)
                } else {
                    format!("{label}@{}*{c}", p.0)
                }
            })
            .collect();
        if entries.is_empty() {
            "empty".to_string()
        } else {
            entries.join(" ; ")
        }
    }
}

/// The action that produced a successor state.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ActionLabel {
    Fire(TransitionId),
    Rule { name: String, digest: u64 },
}

impl fmt::Display for ActionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActionLabel::Fire(t) => write!(f, "fire {t}"),
            ActionLabel::Rule { name, digest } => write!(f, "rule {name} #{}", hex16(*digest)),
        }
    }
}

/// How state identity is decided.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum StateIdentity {
    /// Full term identity: net, rules, max id, step size and pools.
    #[default]
    Term,
    /// Net-only identity after structural relabeling of ids. Collapses
    /// states that differ only in identifier bookkeeping; best effort on
    /// highly symmetric nets (never merges non-isomorphic ones).
    Semantic,
}

/// Deterministic state key. Equal keys mean equal states under the chosen
/// identity mode.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalKey(Vec<u8>);

impl CanonicalKey {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    /// Short display digest; identity still uses the full key.
    pub fn digest(&self) -> String {
        hex16(fnv1a64(&self.0))
    }
}

struct Encoder {
    bytes: Vec<u8>,
}

impl Encoder {
    fn new() -> Encoder {
        Encoder { bytes: Vec::new() }
    }

    fn u64(&mut self, v: u64) {
        self.bytes.extend_from_slice(&v.to_le_bytes());
    }

    fn tag(&mut self, t: u8) {
        self.bytes.push(t);
    }

    fn str(&mut self, s: &str) {
        self.u64(s.len() as u64);
        self.bytes.extend_from_slice(s.as_bytes());
    }

    fn capacity(&mut self, c: Capacity) {
        match c {
            Capacity::Omega => self.tag(0),
            Capacity::Finite(n) => {
                self.tag(1);
                self.u64(n);
            }
        }
    }

    fn net(&mut self, net: &PetriNet) {
        self.tag(b'P');
        self.u64(net.place_count() as u64);
        for p in net.places() {
            self.u64(p.id.0);
            self.str(&p.label);
            self.capacity(p.capacity);
        }
        self.tag(b'T');
        self.u64(net.transition_count() as u64);
        for t in net.transitions() {
            self.u64(t.id.0);
            self.str(&t.label);
        }
        for (tag, row) in [(b'<', true), (b'>', false)] {
            self.tag(tag);
            for t in net.transitions() {
                let m = if row { net.pre(t.id) } else { net.post(t.id) };
                self.u64(t.id.0);
                self.u64(m.iter().count() as u64);
                for (p, c) in m.iter() {
                    self.u64(p.0);
                    self.u64(c);
                }
            }
        }
        self.tag(b'M');
        self.u64(net.marking().iter().count() as u64);
        for (p, c) in net.marking().iter() {
            self.u64(p.0);
            self.u64(c);
        }
    }

    fn pool(&mut self, pool: &IdPool) {
        self.u64(pool.len() as u64);
        for id in pool.ids() {
            self.u64(id);
        }
    }
}

/// Canonical key under the default term identity.
pub fn canonical_key(config: &Configuration) -> CanonicalKey {
    canonical_key_with(config, StateIdentity::Term)
}

pub fn canonical_key_with(config: &Configuration, identity: StateIdentity) -> CanonicalKey {
    let mut enc = Encoder::new();
    match identity {
        StateIdentity::Term => {
            enc.tag(0);
            enc.net(config.net());
            enc.u64(config.rules().len() as u64);
            for rule in config.rules() {
                enc.str(rule.name());
                enc.net(rule.lhs());
                enc.net(rule.rhs());
            }
            enc.u64(config.max_id());
            enc.u64(config.step_size());
            enc.pool(config.place_pool());
            enc.pool(config.transition_pool());
        }
        StateIdentity::Semantic => {
            enc.tag(1);
            enc.net(&relabel_structurally(config.net()));
        }
    }
    CanonicalKey(enc.bytes)
}

/// Relabel place and transition ids by iterated structural refinement so
/// that isomorphic nets usually produce identical encodings. Signature
/// collisions only cost merging opportunities, never soundness.
fn relabel_structurally(net: &PetriNet) -> PetriNet {
    let mut psig: BTreeMap<_, u64> = net
        .places()
        .map(|p| {
            let mut e = Encoder::new();
            e.str(&p.label);
            e.capacity(p.capacity);
            e.u64(net.marking().count(p.id));
            (p.id, fnv1a64(&e.bytes))
        })
        .collect();
    let mut tsig: BTreeMap<_, u64> = net
        .transitions()
        .map(|t| {
            let mut e = Encoder::new();
            e.str(&t.label);
            (t.id, fnv1a64(&e.bytes))
        })
        .collect();

    for _ in 0..3 {
        let mut next_psig = BTreeMap::new();
        for p in net.places() {
            let mut neigh: Vec<(u8, u64, u64)> = Vec::new();
            for t in net.transitions() {
                let w_out = net.pre(t.id).count(p.id);
                if w_out > 0 {
                    neigh.push((b'o', w_out, tsig[&t.id]));
                }
                let w_in = net.post(t.id).count(p.id);
                if w_in > 0 {
                    neigh.push((b'i', w_in, tsig[&t.id]));
                }
            }
            neigh.sort();
            let mut e = Encoder::new();
            e.u64(psig[&p.id]);
            for (d, w, s) in neigh {
                e.tag(d);
                e.u64(w);
                e.u64(s);
            }
            next_psig.insert(p.id, fnv1a64(&e.bytes));
        }
        let mut next_tsig = BTreeMap::new();
        for t in net.transitions() {
            let mut neigh: Vec<(u8, u64, u64)> = Vec::new();
            for (p, w) in net.pre(t.id).iter() {
                neigh.push((b'i', w, psig[&p]));
            }
            for (p, w) in net.post(t.id).iter() {
                neigh.push((b'o', w, psig[&p]));
            }
            neigh.sort();
            let mut e = Encoder::new();
            e.u64(tsig[&t.id]);
            for (d, w, s) in neigh {
                e.tag(d);
                e.u64(w);
                e.u64(s);
            }
            next_tsig.insert(t.id, fnv1a64(&e.bytes));
        }
        psig = next_psig;
        tsig = next_tsig;
    }

    let mut place_order: Vec<_> = net.places().map(|p| p.id).collect();
    place_order.sort_by_key(|id| (psig[id], id.0));
    let place_rename: BTreeMap<_, _> = place_order
        .iter()
        .enumerate()
        .map(|(i, &id)| (id, crate::net::PlaceId(i as u64)))
        .collect();
    let mut transition_order: Vec<_> = net.transitions().map(|t| t.id).collect();
    transition_order.sort_by_key(|id| (tsig[id], id.0));
    let transition_rename: BTreeMap<_, _> = transition_order
        .iter()
        .enumerate()
        .map(|(i, &id)| (id, TransitionId(i as u64)))
        .collect();

    let places = net
        .places()
        .map(|p| crate::net::Place { id: place_rename[&p.id], ..p.clone() })
        .collect();
    let transitions = net
        .transitions()
        .map(|t| crate::net::Transition { id: transition_rename[&t.id], ..t.clone() })
        .collect();
    let pre = net
        .transitions()
        .map(|t| (transition_rename[&t.id], net.pre(t.id).map_places(|p| place_rename[&p])))
        .collect();
    let post = net
        .transitions()
        .map(|t| (transition_rename[&t.id], net.post(t.id).map_places(|p| place_rename[&p])))
        .collect();
    let marking = net.marking().map_places(|p| place_rename[&p]);
    PetriNet::new(places, transitions, pre, post, marking)
        .expect("relabeling preserves validity")
}

/// All semantic successors of a configuration: one per activated
/// transition (ascending id), then one per gluing-valid rule match (rules
/// in name order, matches in their deterministic order).
pub fn successors(config: &Configuration) -> Vec<(ActionLabel, Configuration)> {
    successors_with(config, FiringSemantics::default())
}

pub fn successors_with(
    config: &Configuration,
    semantics: FiringSemantics,
) -> Vec<(ActionLabel, Configuration)> {
    let mut out = Vec::new();
    for t in firing::enabled_transitions_with(config.net(), semantics) {
        let fired = firing::fire_with(config.net(), t, semantics)
            .expect("enabled transitions fire");
        out.push((ActionLabel::Fire(t), config.with_net(fired)));
    }
    for rule in config.rules() {
        for m in find_matches(config.net(), rule) {
            if let Ok(next) = apply_rule(config, &m) {
                out.push((
                    ActionLabel::Rule { name: rule.name().to_string(), digest: m.digest() },
                    next,
                ));
            }
        }
    }
    out
}

/// Exploration bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExploreLimits {
    pub max_states: usize,
    pub max_depth: Option<usize>,
}

impl Default for ExploreLimits {
    fn default() -> ExploreLimits {
        ExploreLimits { max_states: 1_000_000, max_depth: None }
    }
}

/// Everything that shapes an exploration run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExploreOptions {
    pub limits: ExploreLimits,
    pub semantics: FiringSemantics,
    pub identity: StateIdentity,
    /// Number of workers for frontier expansion; 0 or 1 runs
    /// sequentially. The resulting graph is identical either way.
    pub workers: usize,
}

/// Dense state id inside a [`StateGraph`].
pub type StateId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateNode {
    pub key: CanonicalKey,
    pub config: Configuration,
    pub edges: Vec<(ActionLabel, StateId)>,
    pub depth: usize,
    pub expanded: bool,
}

/// Explicit Kripke structure over configurations. State 0 is the initial
/// state; deadlock states have no stored edges and are listed in
/// `deadlocks` (their implicit self-loop is added by consumers that need
/// a total relation).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateGraph {
    nodes: Vec<StateNode>,
    deadlocks: BTreeSet<StateId>,
    truncated: bool,
    identity: StateIdentity,
    semantics: FiringSemantics,
}

impl StateGraph {
    pub fn initial(&self) -> StateId {
        0
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: StateId) -> &StateNode {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[StateNode] {
        &self.nodes
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.iter().map(|n| n.edges.len()).sum()
    }

    pub fn deadlocks(&self) -> &BTreeSet<StateId> {
        &self.deadlocks
    }

    pub fn is_deadlock(&self, id: StateId) -> bool {
        self.deadlocks.contains(&id)
    }

    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn identity(&self) -> StateIdentity {
        self.identity
    }

    pub fn semantics(&self) -> FiringSemantics {
        self.semantics
    }

    /// Line-oriented dump: states with digests and marking summaries,
    /// then edges.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "states {} edges {} deadlocks {} truncated {}\n",
            self.len(),
            self.edge_count(),
            self.deadlocks.len(),
            self.truncated
        ));
        out.push_str("initial 0\n");
        for (i, node) in self.nodes.iter().enumerate() {
            let tag = if self.is_deadlock(i) { " deadlock" } else { "" };
            out.push_str(&format!(
                "state {i} {} depth {} marking{{{}}}{tag}\n",
                node.key.digest(),
                node.depth,
                node.config.marking_summary()
            ));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            for (label, target) in &node.edges {
                out.push_str(&format!("edge {i} -> {target} [{label}]\n"));
            }
        }
        out
    }

    /// GraphViz rendering; deadlock states are drawn as double circles.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph states {\n  rankdir=LR;\n");
        for (i, node) in self.nodes.iter().enumerate() {
            let shape = if self.is_deadlock(i) { "doublecircle" } else { "circle" };
            out.push_str(&format!(
                "  s{i} [shape={shape},label=\"{}\\n{}\"];\n",
                node.key.digest(),
                node.config.marking_summary().replace('"', "'")
            ));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            for (label, target) in &node.edges {
                out.push_str(&format!(
                    "  s{i} -> s{target} [label=\"{}\"];\n",
                    label.to_string().replace('"', "'")
                ));
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Breadth-first construction of the reachable state graph. Stops at the
/// limits with the truncation flag set; shortest paths from the initial
/// state are preserved by construction.
pub fn explore(initial: &Configuration, opts: &ExploreOptions) -> StateGraph {
    let max_states = opts.limits.max_states.max(1);
    let mut nodes: Vec<StateNode> = Vec::new();
    let mut index: HashMap<CanonicalKey, StateId> = HashMap::new();
    let mut deadlocks = BTreeSet::new();
    let mut truncated = false;

    let key0 = canonical_key_with(initial, opts.identity);
    index.insert(key0.clone(), 0);
    nodes.push(StateNode {
        key: key0,
        config: initial.clone(),
        edges: Vec::new(),
        depth: 0,
        expanded: false,
    });

    let mut frontier: Vec<StateId> = vec![0];
    let mut depth = 0usize;

    while !frontier.is_empty() {
        if let Some(max_depth) = opts.limits.max_depth {
            if depth >= max_depth {
                truncated = true;
                break;
            }
        }

        let semantics = opts.semantics;
        let expansions: Vec<Vec<(ActionLabel, Configuration)>> = if opts.workers > 1 {
            let configs: Vec<&Configuration> =
                frontier.iter().map(|&id| &nodes[id].config).collect();
            configs
                .par_iter()
                .map(|config| successors_with(config, semantics))
                .collect()
        } else {
            frontier
                .iter()
                .map(|&id| successors_with(&nodes[id].config, semantics))
                .collect()
        };

        let mut next_frontier = Vec::new();
        for (&source, succs) in frontier.iter().zip(expansions) {
            nodes[source].expanded = true;
            if succs.is_empty() {
                deadlocks.insert(source);
                continue;
            }
            for (label, config) in succs {
                let key = canonical_key_with(&config, opts.identity);
                let target = match index.get(&key) {
                    Some(&t) => t,
                    None => {
                        if nodes.len() >= max_states {
                            truncated = true;
                            continue;
                        }
                        let id = nodes.len();
                        index.insert(key.clone(), id);
                        nodes.push(StateNode {
                            key,
                            config,
                            edges: Vec::new(),
                            depth: depth + 1,
                            expanded: false,
                        });
                        next_frontier.push(id);
                        id
                    }
                };
                nodes[source].edges.push((label, target));
            }
        }
        frontier = next_frontier;
        depth += 1;
    }

    StateGraph { nodes, deadlocks, truncated, identity: opts.identity, semantics: opts.semantics }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{Marking, Place, PlaceId, Transition};
    use crate::rules::Rule;

    fn m(entries: &[(u64, u64)]) -> Marking {
        entries.iter().map(|&(p, c)| (PlaceId(p), c)).collect()
    }

    fn n1() -> PetriNet {
        PetriNet::new(
            vec![Place::omega(2, "A"), Place::omega(3, "A"), Place::omega(4, "A")],
            vec![
                Transition::new(5, "T"),
                Transition::new(6, "T"),
                Transition::new(7, "T"),
            ],
            vec![
                (TransitionId(5), m(&[(4, 1)])),
                (TransitionId(6), m(&[(2, 1)])),
                (TransitionId(7), m(&[(3, 1)])),
            ],
            vec![
                (TransitionId(5), m(&[(3, 1)])),
                (TransitionId(6), m(&[(4, 1)])),
                (TransitionId(7), m(&[(2, 1)])),
            ],
            m(&[(3, 1), (4, 1)]),
        )
        .unwrap()
    }

    fn r1() -> Rule {
        let lhs = PetriNet::new(
            vec![Place::omega(17, "A"), Place::omega(20, "A")],
            vec![Transition::new(24, "T")],
            vec![(TransitionId(24), m(&[(17, 1)]))],
            vec![(TransitionId(24), m(&[(20, 1)]))],
            m(&[(17, 1)]),
        )
        .unwrap();
        let rhs = PetriNet::new(
            vec![Place::omega(17, "A"), Place::omega(20, "A")],
            vec![Transition::new(26, "T")],
            vec![(TransitionId(26), m(&[(20, 1)]))],
            vec![(TransitionId(26), m(&[(17, 1)]))],
            m(&[(17, 1)]),
        )
        .unwrap();
        Rule::new("r1", lhs, rhs).unwrap()
    }

    #[test]
    fn n1_r1_has_two_fires_and_two_rule_successors() {
        let config = Configuration::initial(n1(), vec![r1()], 10).unwrap();
        let succ = successors(&config);
        let fires = succ.iter().filter(|(l, _)| matches!(l, ActionLabel::Fire(_))).count();
        let rules = succ.iter().filter(|(l, _)| matches!(l, ActionLabel::Rule { .. })).count();
        assert_eq!((fires, rules), (2, 2));
        // fires first, ascending transition id
        assert_eq!(succ[0].0, ActionLabel::Fire(TransitionId(5)));
        assert_eq!(succ[1].0, ActionLabel::Fire(TransitionId(7)));
    }

    #[test]
    fn empty_net_has_no_successors() {
        let net = PetriNet::new(vec![], vec![], vec![], vec![], Marking::empty()).unwrap();
        let config = Configuration::initial(net, vec![], 10).unwrap();
        assert!(successors(&config).is_empty());
    }

    #[test]
    fn canonical_key_is_deterministic() {
        let config = Configuration::initial(n1(), vec![r1()], 10).unwrap();
        assert_eq!(canonical_key(&config), canonical_key(&config));
    }

    #[test]
    fn rule_order_does_not_affect_identity() {
        let other = Rule::new(
            "zz",
            PetriNet::new(vec![Place::omega(1, "X")], vec![], vec![], vec![], Marking::empty())
                .unwrap(),
            PetriNet::new(vec![Place::omega(1, "X")], vec![], vec![], vec![], Marking::empty())
                .unwrap(),
        )
        .unwrap();
        let a = Configuration::initial(n1(), vec![r1(), other.clone()], 10).unwrap();
        let b = Configuration::initial(n1(), vec![other, r1()], 10).unwrap();
        assert_eq!(canonical_key(&a), canonical_key(&b));
    }

    #[test]
    fn fire_and_unfire_restores_the_key() {
        // two places in a ping-pong loop
        let net = PetriNet::new(
            vec![Place::omega(1, "A"), Place::omega(2, "A")],
            vec![Transition::new(3, "T"), Transition::new(4, "T")],
            vec![(TransitionId(3), m(&[(1, 1)])), (TransitionId(4), m(&[(2, 1)]))],
            vec![(TransitionId(3), m(&[(2, 1)])), (TransitionId(4), m(&[(1, 1)]))],
            m(&[(1, 1)]),
        )
        .unwrap();
        let config = Configuration::initial(net, vec![], 10).unwrap();
        let key0 = canonical_key(&config);
        let there = config.with_net(firing::fire(config.net(), TransitionId(3)).unwrap());
        assert_ne!(canonical_key(&there), key0);
        let back = there.with_net(firing::fire(there.net(), TransitionId(4)).unwrap());
        assert_eq!(canonical_key(&back), key0);
    }

    #[test]
    fn semantic_identity_collapses_relabeled_nets() {
        let a = PetriNet::new(
            vec![Place::omega(1, "A"), Place::omega(2, "B")],
            vec![Transition::new(3, "T")],
            vec![(TransitionId(3), m(&[(1, 1)]))],
            vec![(TransitionId(3), m(&[(2, 1)]))],
            m(&[(1, 1)]),
        )
        .unwrap();
        let b = PetriNet::new(
            vec![Place::omega(10, "A"), Place::omega(20, "B")],
            vec![Transition::new(30, "T")],
            vec![(TransitionId(30), m(&[(10, 1)]))],
            vec![(TransitionId(30), m(&[(20, 1)]))],
            m(&[(10, 1)]),
        )
        .unwrap();
        let ca = Configuration::initial(a, vec![], 10).unwrap();
        let cb = Configuration::initial(b, vec![], 10).unwrap();
        assert_ne!(canonical_key(&ca), canonical_key(&cb));
        assert_eq!(
            canonical_key_with(&ca, StateIdentity::Semantic),
            canonical_key_with(&cb, StateIdentity::Semantic)
        );
    }

    #[test]
    fn explore_is_deterministic_and_closed() {
        let config = Configuration::initial(n1(), vec![r1()], 10).unwrap();
        let opts = ExploreOptions::default();
        let g1 = explore(&config, &opts);
        let g2 = explore(&config, &opts);
        assert_eq!(g1, g2);
        assert!(!g1.truncated());
        for node in g1.nodes() {
            let recomputed = successors(&node.config);
            assert_eq!(node.edges.len(), recomputed.len());
            for ((label, target), (expected_label, expected_config)) in
                node.edges.iter().zip(recomputed)
            {
                assert_eq!(label, &expected_label);
                assert_eq!(g1.node(*target).key, canonical_key(&expected_config));
            }
        }
    }

    #[test]
    fn parallel_exploration_matches_sequential() {
        let config = Configuration::initial(n1(), vec![r1()], 10).unwrap();
        let seq = explore(&config, &ExploreOptions::default());
        let par =
            explore(&config, &ExploreOptions { workers: 4, ..ExploreOptions::default() });
        assert_eq!(seq, par);
    }

    #[test]
    fn n1_r1_reaches_a_two_token_deadlock() {
        let config = Configuration::initial(n1(), vec![r1()], 10).unwrap();
        let graph = explore(&config, &ExploreOptions::default());
        assert!(!graph.truncated());
        assert!(!graph.deadlocks().is_empty());
        assert!(graph.deadlocks().iter().any(|&id| {
            let marking = graph.node(id).config.net().marking();
            marking.iter().count() == 1 && marking.size() == 2
        }));
    }

    #[test]
    fn state_limit_truncates() {
        let config = Configuration::initial(n1(), vec![r1()], 10).unwrap();
        let graph = explore(
            &config,
            &ExploreOptions {
                limits: ExploreLimits { max_states: 1, max_depth: None },
                ..ExploreOptions::default()
            },
        );
        assert!(graph.truncated());
        assert_eq!(graph.len(), 1);
    }

    #[test]
    fn depth_limit_truncates() {
        let config = Configuration::initial(n1(), vec![r1()], 10).unwrap();
        let graph = explore(
            &config,
            &ExploreOptions {
                limits: ExploreLimits { max_states: 1_000_000, max_depth: Some(1) },
                ..ExploreOptions::default()
            },
        );
        assert!(graph.truncated());
        assert_eq!(graph.len(), 5); // initial plus its four successors
    }

    #[test]
    fn exports_mention_every_state() {
        let config = Configuration::initial(n1(), vec![r1()], 10).unwrap();
        let graph = explore(&config, &ExploreOptions::default());
        let text = graph.to_text();
        let dot = graph.to_dot();
        for i in 0..graph.len() {
            assert!(text.contains(&format!("state {i} ")));
            assert!(dot.contains(&format!("s{i} [")));
        }
    }
}
