//! Net transformation rules: representation, injective match search,
//! gluing-condition checks, rule application and the identifier pools
//! that keep the id universe bounded.
//!
//! A rule is a pair of nets over a shared rule-local id space. Ids present
//! on both sides are preserved (the interface), ids only on the left are
//! deleted, ids only on the right are created. The interface net itself is
//! not stored; it is implied by the shared ids.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use crate::digest::fnv1a64;
use crate::net::{Marking, PetriNet, Place, PlaceId, Transition, TransitionId, Violation};
use crate::state::Configuration;

/// Which id namespace a pool serves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IdKind {
    Place,
    Transition,
}

/// An ordered pool of recycled identifiers. Acquisition takes the front;
/// released ids are prepended, so the most recently released id is handed
/// out first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IdPool {
    kind: IdKind,
    available: VecDeque<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PoolError {
    #[error("id {0} is already in the pool")]
    DuplicateId(u64),
}

impl IdPool {
    pub fn new(kind: IdKind) -> IdPool {
        IdPool { kind, available: VecDeque::new() }
    }

    pub fn with_ids(kind: IdKind, ids: impl IntoIterator<Item = u64>) -> Result<IdPool, PoolError> {
        let mut pool = IdPool::new(kind);
        let mut seen = BTreeSet::new();
        for id in ids {
            if !seen.insert(id) {
                return Err(PoolError::DuplicateId(id));
            }
            pool.available.push_back(id);
        }
        Ok(pool)
    }

    pub fn kind(&self) -> IdKind {
        self.kind
    }

    pub fn is_empty(&self) -> bool {
        self.available.is_empty()
    }

    pub fn len(&self) -> usize {
        self.available.len()
    }

    pub fn contains(&self, id: u64) -> bool {
        self.available.contains(&id)
    }

    /// Ids in pool order (front first).
    pub fn ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.available.iter().copied()
    }

    /// Take the next fresh id. If the pool is empty it is refilled with
    /// exactly `max_id + 1 ..= max_id + step_size` first; the returned
    /// max id reflects the refill. `step_size` must be at least 1.
    pub fn acquire(&self, max_id: u64, step_size: u64) -> (u64, IdPool, u64) {
        debug_assert!(step_size >= 1, "step size must be positive");
        let mut next = self.clone();
        if next.available.is_empty() {
            next.available.extend(max_id + 1..=max_id + step_size);
            let id = next.available.pop_front().expect("refill is non-empty");
            (id, next, max_id + step_size)
        } else {
            let id = next.available.pop_front().expect("non-empty");
            (id, next, max_id)
        }
    }

    /// Return a deleted element's id to the pool (front insertion).
    pub fn release(&self, id: u64) -> Result<IdPool, PoolError> {
        if self.contains(id) {
            return Err(PoolError::DuplicateId(id));
        }
        let mut next = self.clone();
        next.available.push_front(id);
        Ok(next)
    }
}

/// A net transformation rule: left-hand side matched against the host,
/// right-hand side spliced in.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rule {
    name: String,
    lhs: PetriNet,
    rhs: PetriNet,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("rule {rule}: id {id} would be deleted and created under conflicting labels")]
    IdentificationConflict { rule: String, id: u64 },
    #[error("rule {rule}: preserved transition t{id} has different arcs on the two sides")]
    PreservedArcsDiffer { rule: String, id: u64 },
    #[error("rule {rule}: invalid {side} net: {violations:?}")]
    InvalidNet { rule: String, side: &'static str, violations: Vec<Violation> },
    #[error("no rule named {0} is loaded")]
    UnknownRule(String),
    #[error("match does not fit the current net")]
    StaleMatch,
    #[error("dangling condition violated: deleted place {0} has an arc outside the match")]
    DanglingViolation(PlaceId),
    #[error("deleted place {place} holds {host_tokens} tokens, rule accounts for {rule_tokens}")]
    DeletedMarkingMismatch { place: PlaceId, host_tokens: u64, rule_tokens: u64 },
    #[error("applying the rule would exceed the capacity of {0}")]
    CapacityExceeded(PlaceId),
    #[error(transparent)]
    Pool(#[from] PoolError),
}

impl Rule {
    /// Build a rule, rejecting identification conflicts and preserved
    /// transitions whose arcs differ between the two sides.
    pub fn new(name: impl Into<String>, lhs: PetriNet, rhs: PetriNet) -> Result<Rule, RuleError> {
        let rule = Rule { name: name.into(), lhs, rhs };
        if !identification_ok(&rule) {
            let id = rule
                .conflicting_id()
                .expect("identification failure implies a conflicting id");
            return Err(RuleError::IdentificationConflict { rule: rule.name, id });
        }
        if let Some(t) = rule.preserved_transitions().into_iter().find(|&t| {
            rule.lhs.pre(t) != rule.rhs.pre(t) || rule.lhs.post(t) != rule.rhs.post(t)
        }) {
            return Err(RuleError::PreservedArcsDiffer { rule: rule.name, id: t.0 });
        }
        Ok(rule)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn lhs(&self) -> &PetriNet {
        &self.lhs
    }

    pub fn rhs(&self) -> &PetriNet {
        &self.rhs
    }

    pub fn preserved_places(&self) -> Vec<PlaceId> {
        self.lhs.places().map(|p| p.id).filter(|&id| self.rhs.place(id).is_some()).collect()
    }

    pub fn deleted_places(&self) -> Vec<PlaceId> {
        self.lhs.places().map(|p| p.id).filter(|&id| self.rhs.place(id).is_none()).collect()
    }

    pub fn created_places(&self) -> Vec<PlaceId> {
        self.rhs.places().map(|p| p.id).filter(|&id| self.lhs.place(id).is_none()).collect()
    }

    pub fn preserved_transitions(&self) -> Vec<TransitionId> {
        self.lhs
            .transitions()
            .map(|t| t.id)
            .filter(|&id| self.rhs.transition(id).is_some())
            .collect()
    }

    pub fn deleted_transitions(&self) -> Vec<TransitionId> {
        self.lhs
            .transitions()
            .map(|t| t.id)
            .filter(|&id| self.rhs.transition(id).is_none())
            .collect()
    }

    pub fn created_transitions(&self) -> Vec<TransitionId> {
        self.rhs
            .transitions()
            .map(|t| t.id)
            .filter(|&id| self.lhs.transition(id).is_none())
            .collect()
    }

    fn conflicting_id(&self) -> Option<u64> {
        for p in self.lhs.places() {
            if let Some(other) = self.rhs.place(p.id) {
                if p.label != other.label || p.capacity != other.capacity {
                    return Some(p.id.0);
                }
            }
        }
        for t in self.lhs.transitions() {
            if let Some(other) = self.rhs.transition(t.id) {
                if t.label != other.label {
                    return Some(t.id.0);
                }
            }
        }
        None
    }
}

/// Identification condition: no rule-local id may stand for an element
/// that is deleted and created under conflicting labels or capacities.
pub fn identification_ok(rule: &Rule) -> bool {
    rule.conflicting_id().is_none()
}

/// An injective embedding of a rule's left-hand side into a host net.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Match {
    pub rule_name: String,
    /// rule-local place id -> host place id
    pub place_map: BTreeMap<PlaceId, PlaceId>,
    /// rule-local transition id -> host transition id
    pub transition_map: BTreeMap<TransitionId, TransitionId>,
}

impl Match {
    pub fn host_place(&self, rule_place: PlaceId) -> PlaceId {
        self.place_map[&rule_place]
    }

    pub fn host_transition(&self, rule_transition: TransitionId) -> TransitionId {
        self.transition_map[&rule_transition]
    }

    /// Stable digest identifying this match among all matches of a rule.
    pub fn digest(&self) -> u64 {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(self.rule_name.as_bytes());
        bytes.push(0);
        for (k, v) in &self.place_map {
            bytes.extend_from_slice(&k.0.to_le_bytes());
            bytes.extend_from_slice(&v.0.to_le_bytes());
        }
        bytes.push(1);
        for (k, v) in &self.transition_map {
            bytes.extend_from_slice(&k.0.to_le_bytes());
            bytes.extend_from_slice(&v.0.to_le_bytes());
        }
        fnv1a64(&bytes)
    }

    /// Sort key: mapped host ids in rule-id order, transitions first.
    fn order_key(&self) -> (Vec<u64>, Vec<u64>) {
        (
            self.transition_map.values().map(|t| t.0).collect(),
            self.place_map.values().map(|p| p.0).collect(),
        )
    }
}

fn places_compatible(rule_place: &Place, host_place: &Place) -> bool {
    rule_place.label == host_place.label && rule_place.capacity == host_place.capacity
}

/// Extend `pmap` so that the rule row maps exactly onto the host row.
///
/// Rows must correspond completely: every host token count in the row has
/// to be explained by a mapped rule place with the same multiplicity.
/// Returns every consistent extension.
fn unify_row(
    rule_net: &PetriNet,
    host_net: &PetriNet,
    rule_row: &Marking,
    host_row: &Marking,
    pmap: &BTreeMap<PlaceId, PlaceId>,
    used_hosts: &BTreeSet<PlaceId>,
) -> Vec<(BTreeMap<PlaceId, PlaceId>, BTreeSet<PlaceId>)> {
    let rule_entries: Vec<(PlaceId, u64)> = rule_row.iter().collect();
    let mut remaining: BTreeMap<PlaceId, u64> = host_row.iter().collect();
    let mut results = Vec::new();
    unify_entries(
        rule_net,
        host_net,
        &rule_entries,
        0,
        &mut remaining,
        pmap.clone(),
        used_hosts.clone(),
        &mut results,
    );
    results
}

#[allow(clippy::too_many_arguments)]
fn unify_entries(
    rule_net: &PetriNet,
    host_net: &PetriNet,
    entries: &[(PlaceId, u64)],
    idx: usize,
    remaining: &mut BTreeMap<PlaceId, u64>,
    pmap: BTreeMap<PlaceId, PlaceId>,
    used: BTreeSet<PlaceId>,
    out: &mut Vec<(BTreeMap<PlaceId, PlaceId>, BTreeSet<PlaceId>)>,
) {
    if idx == entries.len() {
        if remaining.is_empty() {
            out.push((pmap, used));
        }
        return;
    }
    let (rp, count) = entries[idx];
    if let Some(&hp) = pmap.get(&rp) {
        if remaining.get(&hp) == Some(&count) {
            remaining.remove(&hp);
            unify_entries(rule_net, host_net, entries, idx + 1, remaining, pmap, used, out);
            remaining.insert(hp, count);
        }
        return;
    }
    let rule_place = rule_net.place(rp).expect("rule row references rule place");
    let candidates: Vec<PlaceId> = remaining
        .iter()
        .filter(|&(&hp, &c)| {
            c == count
                && !used.contains(&hp)
                && host_net.place(hp).map(|h| places_compatible(rule_place, h)).unwrap_or(false)
        })
        .map(|(&hp, _)| hp)
        .collect();
    for hp in candidates {
        let mut pmap2 = pmap.clone();
        let mut used2 = used.clone();
        pmap2.insert(rp, hp);
        used2.insert(hp);
        remaining.remove(&hp);
        unify_entries(rule_net, host_net, entries, idx + 1, remaining, pmap2, used2, out);
        remaining.insert(hp, count);
    }
}

/// All injective, label-, capacity- and arc-consistent embeddings of the
/// rule's left-hand side whose marking condition holds, in a deterministic
/// order. Gluing conditions are *not* applied here; callers filter with
/// [`dangling_ok`] and [`deleted_marking_ok`].
pub fn find_matches(net: &PetriNet, rule: &Rule) -> Vec<Match> {
    let lhs = rule.lhs();
    let rule_ts: Vec<TransitionId> = lhs.transitions().map(|t| t.id).collect();
    let mut found = Vec::new();
    extend_transitions(
        net,
        rule,
        &rule_ts,
        0,
        BTreeMap::new(),
        BTreeSet::new(),
        BTreeMap::new(),
        BTreeSet::new(),
        &mut found,
    );
    found.sort_by_key(|m| m.order_key());
    found
}

#[allow(clippy::too_many_arguments)]
fn extend_transitions(
    net: &PetriNet,
    rule: &Rule,
    rule_ts: &[TransitionId],
    idx: usize,
    tmap: BTreeMap<TransitionId, TransitionId>,
    used_ts: BTreeSet<TransitionId>,
    pmap: BTreeMap<PlaceId, PlaceId>,
    used_ps: BTreeSet<PlaceId>,
    out: &mut Vec<Match>,
) {
    let lhs = rule.lhs();
    if idx == rule_ts.len() {
        extend_free_places(net, rule, tmap, pmap, used_ps, out);
        return;
    }
    let rt = rule_ts[idx];
    let rule_label = &lhs.transition(rt).expect("rule transition exists").label;
    for host in net.transitions() {
        if used_ts.contains(&host.id) || &host.label != rule_label {
            continue;
        }
        for (pmap2, used2) in
            unify_row(lhs, net, lhs.pre(rt), net.pre(host.id), &pmap, &used_ps)
        {
            for (pmap3, used3) in
                unify_row(lhs, net, lhs.post(rt), net.post(host.id), &pmap2, &used2)
            {
                let mut tmap2 = tmap.clone();
                let mut used_ts2 = used_ts.clone();
                tmap2.insert(rt, host.id);
                used_ts2.insert(host.id);
                extend_transitions(
                    net, rule, rule_ts, idx + 1, tmap2, used_ts2, pmap3, used3, out,
                );
            }
        }
    }
}

fn extend_free_places(
    net: &PetriNet,
    rule: &Rule,
    tmap: BTreeMap<TransitionId, TransitionId>,
    pmap: BTreeMap<PlaceId, PlaceId>,
    used_ps: BTreeSet<PlaceId>,
    out: &mut Vec<Match>,
) {
    let lhs = rule.lhs();
    let free: Vec<PlaceId> =
        lhs.places().map(|p| p.id).filter(|id| !pmap.contains_key(id)).collect();

    #[allow(clippy::too_many_arguments)]
    fn rec(
        net: &PetriNet,
        rule: &Rule,
        free: &[PlaceId],
        idx: usize,
        tmap: &BTreeMap<TransitionId, TransitionId>,
        pmap: BTreeMap<PlaceId, PlaceId>,
        used_ps: BTreeSet<PlaceId>,
        out: &mut Vec<Match>,
    ) {
        if idx == free.len() {
            let mapped = rule.lhs().marking().map_places(|p| pmap[&p]);
            if mapped.leq(net.marking()) {
                out.push(Match {
                    rule_name: rule.name().to_string(),
                    place_map: pmap,
                    transition_map: tmap.clone(),
                });
            }
            return;
        }
        let rp = free[idx];
        let rule_place = rule.lhs().place(rp).expect("free place exists");
        for host in net.places() {
            if used_ps.contains(&host.id) || !places_compatible(rule_place, host) {
                continue;
            }
            let mut pmap2 = pmap.clone();
            let mut used2 = used_ps.clone();
            pmap2.insert(rp, host.id);
            used2.insert(host.id);
            rec(net, rule, free, idx + 1, tmap, pmap2, used2, out);
        }
    }

    rec(net, rule, &free, 0, &tmap, pmap, used_ps, out);
}

/// Dangling condition: every deleted place's host image may only have
/// arcs to transitions that the match deletes as well.
pub fn dangling_ok(net: &PetriNet, rule: &Rule, m: &Match) -> bool {
    let deleted_hosts: BTreeSet<TransitionId> =
        rule.deleted_transitions().iter().map(|&t| m.host_transition(t)).collect();
    for dp in rule.deleted_places() {
        let hp = m.host_place(dp);
        for t in net.transitions() {
            if deleted_hosts.contains(&t.id) {
                continue;
            }
            if net.pre(t.id).count(hp) > 0 || net.post(t.id).count(hp) > 0 {
                return false;
            }
        }
    }
    true
}

/// A place may only be deleted while every token on it is accounted for
/// by the rule's left-hand side marking.
pub fn deleted_marking_ok(net: &PetriNet, rule: &Rule, m: &Match) -> bool {
    rule.deleted_places().iter().all(|&dp| {
        net.marking().count(m.host_place(dp)) == rule.lhs().marking().count(dp)
    })
}

/// Check every application condition for a match. `Ok` means the match is
/// gluing-valid and the resulting marking respects all capacities.
pub fn check_application(net: &PetriNet, rule: &Rule, m: &Match) -> Result<(), RuleError> {
    if !match_fits(net, rule, m) {
        return Err(RuleError::StaleMatch);
    }
    if !identification_ok(rule) {
        return Err(RuleError::IdentificationConflict {
            rule: rule.name().to_string(),
            id: rule.conflicting_id().unwrap_or(0),
        });
    }
    if !dangling_ok(net, rule, m) {
        let place = rule
            .deleted_places()
            .into_iter()
            .map(|dp| m.host_place(dp))
            .next()
            .unwrap_or(PlaceId(0));
        return Err(RuleError::DanglingViolation(place));
    }
    if let Some(&dp) = rule.deleted_places().iter().find(|&&dp| {
        net.marking().count(m.host_place(dp)) != rule.lhs().marking().count(dp)
    }) {
        return Err(RuleError::DeletedMarkingMismatch {
            place: m.host_place(dp),
            host_tokens: net.marking().count(m.host_place(dp)),
            rule_tokens: rule.lhs().marking().count(dp),
        });
    }
    Ok(())
}

fn match_fits(net: &PetriNet, rule: &Rule, m: &Match) -> bool {
    rule.lhs().places().all(|p| {
        m.place_map
            .get(&p.id)
            .and_then(|hp| net.place(*hp))
            .map(|h| places_compatible(p, h))
            .unwrap_or(false)
    }) && rule.lhs().transitions().all(|t| {
        m.transition_map
            .get(&t.id)
            .and_then(|ht| net.transition(*ht))
            .map(|h| h.label == t.label)
            .unwrap_or(false)
    }) && rule.lhs().marking().map_places(|p| m.host_place(p)).leq(net.marking())
}

/// Apply a gluing-valid match, producing the successor configuration.
///
/// Fresh ids for created elements are acquired first (places before
/// transitions, each in ascending rule-local id order), then the deleted
/// ids are released, so a deleted id becomes available to the *next*
/// application rather than the current one.
pub fn apply_rule(config: &Configuration, m: &Match) -> Result<Configuration, RuleError> {
    let rule = config
        .rule(&m.rule_name)
        .ok_or_else(|| RuleError::UnknownRule(m.rule_name.clone()))?
        .clone();
    let net = config.net();
    check_application(net, &rule, m)?;

    let mut max_id = config.max_id();
    let step = config.step_size();
    let mut place_pool = config.place_pool().clone();
    let mut transition_pool = config.transition_pool().clone();

    // Fresh ids for created elements.
    let mut created_place_ids: BTreeMap<PlaceId, PlaceId> = BTreeMap::new();
    for rp in rule.created_places() {
        let (id, pool, new_max) = place_pool.acquire(max_id, step);
        place_pool = pool;
        max_id = new_max;
        created_place_ids.insert(rp, PlaceId(id));
    }
    let mut created_transition_ids: BTreeMap<TransitionId, TransitionId> = BTreeMap::new();
    for rt in rule.created_transitions() {
        let (id, pool, new_max) = transition_pool.acquire(max_id, step);
        transition_pool = pool;
        max_id = new_max;
        created_transition_ids.insert(rt, TransitionId(id));
    }

    let rhs_place = |rp: PlaceId| -> PlaceId {
        created_place_ids.get(&rp).copied().unwrap_or_else(|| m.host_place(rp))
    };

    let deleted_places: BTreeSet<PlaceId> =
        rule.deleted_places().iter().map(|&p| m.host_place(p)).collect();
    let deleted_transitions: BTreeSet<TransitionId> =
        rule.deleted_transitions().iter().map(|&t| m.host_transition(t)).collect();

    let mut places: Vec<Place> =
        net.places().filter(|p| !deleted_places.contains(&p.id)).cloned().collect();
    for (&rp, &new_id) in &created_place_ids {
        let template = rule.rhs().place(rp).expect("created place exists in rhs");
        places.push(Place { id: new_id, label: template.label.clone(), capacity: template.capacity });
    }

    let mut transitions: Vec<Transition> = net
        .transitions()
        .filter(|t| !deleted_transitions.contains(&t.id))
        .cloned()
        .collect();
    let mut pre: Vec<(TransitionId, Marking)> = transitions
        .iter()
        .map(|t| (t.id, net.pre(t.id).clone()))
        .collect();
    let mut post: Vec<(TransitionId, Marking)> = transitions
        .iter()
        .map(|t| (t.id, net.post(t.id).clone()))
        .collect();
    for (&rt, &new_id) in &created_transition_ids {
        let template = rule.rhs().transition(rt).expect("created transition exists in rhs");
        transitions.push(Transition { id: new_id, label: template.label.clone() });
        pre.push((new_id, rule.rhs().pre(rt).map_places(rhs_place)));
        post.push((new_id, rule.rhs().post(rt).map_places(rhs_place)));
    }

    let consumed = rule.lhs().marking().map_places(|p| m.host_place(p));
    let produced = rule.rhs().marking().map_places(rhs_place);
    let marking = net
        .marking()
        .sub(&consumed)
        .expect("marking condition verified by check_application")
        .add(&produced);

    let next_net = PetriNet::new(places, transitions, pre, post, marking).map_err(|violations| {
        match violations.first() {
            Some(Violation::CapacityExceeded { place, .. }) => RuleError::CapacityExceeded(*place),
            _ => RuleError::StaleMatch,
        }
    })?;

    // Release the deleted ids after acquisition, ascending id order.
    for &p in &deleted_places {
        place_pool = place_pool.release(p.0)?;
    }
    for &t in &deleted_transitions {
        transition_pool = transition_pool.release(t.0)?;
    }

    Ok(config.with_transformed_net(next_net, max_id, place_pool, transition_pool))
}
