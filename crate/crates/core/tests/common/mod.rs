//! Shared fixtures, generators and independent oracles for the
//! integration suites. The oracle functions re-derive their conditions
//! from the definitions with plain loops so they stay independent of the
//! implementation paths they check.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use rpncheck::ltl::{Atom, Formula, MarkingPattern};
use rpncheck::net::{Capacity, Marking, PetriNet, Place, PlaceId, Transition, TransitionId};
use rpncheck::pnml;
use rpncheck::rules::{Match, Rule};
use rpncheck::state::Configuration;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn load_net(name: &str) -> PetriNet {
    pnml::parse_net_file(fixture(name)).expect("fixture net parses")
}

pub fn load_rule(name: &str) -> Rule {
    pnml::parse_rule_file(fixture(name)).expect("fixture rule parses")
}

pub fn n1() -> PetriNet {
    load_net("n1.pnml")
}

pub fn n2() -> PetriNet {
    load_net("n2.pnml")
}

pub fn r1() -> Rule {
    load_rule("r1.rule.pnml")
}

pub fn r2() -> Rule {
    load_rule("r2.rule.pnml")
}

pub fn r3() -> Rule {
    load_rule("r3.rule.pnml")
}

pub fn config(net: PetriNet, rules: Vec<Rule>) -> Configuration {
    Configuration::initial(net, rules, 10).expect("valid configuration")
}

pub fn marking(entries: &[(u64, u64)]) -> Marking {
    entries.iter().map(|&(p, c)| (PlaceId(p), c)).collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Ring of `n` places and `n` transitions with one token on the first
/// place. Labels are per-element, so generic A/T rules never match.
pub fn circle_net(n: u64) -> PetriNet {
    assert!(n >= 1);
    let places: Vec<Place> =
        (1..=n).map(|i| Place::omega(i, format!("P{i}"))).collect();
    let transitions: Vec<Transition> =
        (1..=n).map(|i| Transition::new(n + i, format!("T{i}"))).collect();
    let pre = (1..=n)
        .map(|i| (TransitionId(n + i), marking(&[(i, 1)])))
        .collect();
    let post = (1..=n)
        .map(|i| (TransitionId(n + i), marking(&[(i % n + 1, 1)])))
        .collect();
    PetriNet::new(places, transitions, pre, post, marking(&[(1, 1)]))
        .expect("ring is valid")
}

/// Random marked net: up to `max_places`/`max_transitions` elements over
/// a two-letter label alphabet, mixed capacities, at most `max_tokens`
/// tokens.
pub fn random_net(
    rng: &mut ChaCha8Rng,
    max_places: usize,
    max_transitions: usize,
    max_tokens: u64,
) -> PetriNet {
    let n_places = rng.gen_range(1..=max_places) as u64;
    let n_transitions = rng.gen_range(0..=max_transitions) as u64;
    let labels = ["A", "B"];

    let places: Vec<Place> = (1..=n_places)
        .map(|i| {
            let capacity = if rng.gen_bool(0.5) {
                Capacity::Omega
            } else {
                Capacity::Finite(rng.gen_range(1..=4))
            };
            Place::new(i, *labels.choose(rng).unwrap(), capacity)
        })
        .collect();
    let transitions: Vec<Transition> = (1..=n_transitions)
        .map(|i| Transition::new(n_places + i, *labels.choose(rng).unwrap()))
        .collect();

    let random_row = |rng: &mut ChaCha8Rng| -> Marking {
        let mut row = Marking::empty();
        for _ in 0..rng.gen_range(0..=2) {
            row.insert(PlaceId(rng.gen_range(1..=n_places)), rng.gen_range(1..=2));
        }
        row
    };
    let pre: Vec<(TransitionId, Marking)> = transitions
        .iter()
        .map(|t| (t.id, random_row(rng)))
        .collect();
    let post: Vec<(TransitionId, Marking)> = transitions
        .iter()
        .map(|t| (t.id, random_row(rng)))
        .collect();

    let mut tokens = Marking::empty();
    for _ in 0..rng.gen_range(0..=max_tokens) {
        let place = &places[rng.gen_range(0..places.len())];
        let current = tokens.count(place.id);
        if place.capacity.admits(current + 1) {
            tokens.insert(place.id, 1);
        }
    }

    PetriNet::new(places, transitions, pre, post, tokens).expect("generated net is valid")
}

/// Left-hand side for match-search tests: half the time a genuine subnet
/// of the host (relabeled into a rule-local id space, marking reduced),
/// otherwise an unrelated random net.
pub fn random_rule_lhs(rng: &mut ChaCha8Rng, host: &PetriNet) -> PetriNet {
    if host.transition_count() == 0 || rng.gen_bool(0.5) {
        return random_net(rng, 3, 2, 2);
    }
    let all: Vec<&Transition> = host.transitions().collect();
    let count = rng.gen_range(1..=all.len().min(2));
    let chosen: Vec<&Transition> = all.choose_multiple(rng, count).copied().collect();

    let mut place_ids: BTreeSet<PlaceId> = BTreeSet::new();
    for t in &chosen {
        place_ids.extend(host.pre(t.id).places());
        place_ids.extend(host.post(t.id).places());
    }
    if rng.gen_bool(0.3) {
        let extras: Vec<PlaceId> = host.places().map(|p| p.id).collect();
        place_ids.insert(*extras.choose(rng).unwrap());
    }

    let place_rename: BTreeMap<PlaceId, PlaceId> = place_ids
        .iter()
        .enumerate()
        .map(|(i, &p)| (p, PlaceId(100 + i as u64)))
        .collect();
    let places: Vec<Place> = place_ids
        .iter()
        .map(|p| {
            let host_place = host.place(*p).unwrap();
            Place { id: place_rename[p], ..host_place.clone() }
        })
        .collect();
    let transitions: Vec<Transition> = chosen
        .iter()
        .enumerate()
        .map(|(i, t)| Transition::new(200 + i as u64, t.label.clone()))
        .collect();
    let pre = chosen
        .iter()
        .enumerate()
        .map(|(i, t)| {
            (TransitionId(200 + i as u64), host.pre(t.id).map_places(|p| place_rename[&p]))
        })
        .collect();
    let post = chosen
        .iter()
        .enumerate()
        .map(|(i, t)| {
            (TransitionId(200 + i as u64), host.post(t.id).map_places(|p| place_rename[&p]))
        })
        .collect();
    let mut tokens = Marking::empty();
    for (&p, &renamed) in &place_rename {
        let available = host.marking().count(p);
        if available > 0 {
            tokens.insert(renamed, rng.gen_range(0..=available));
        }
    }
    PetriNet::new(places, transitions, pre, post, tokens).expect("subnet is valid")
}

/// Straight-line activation test from the definitions: the marking covers
/// the pre multiset and every post place stays within its capacity.
pub fn oracle_activated(net: &PetriNet, t: TransitionId, strict: bool) -> bool {
    if net.transition(t).is_none() {
        return false;
    }
    for (p, need) in net.pre(t).iter() {
        let mut have = 0;
        for (q, c) in net.marking().iter() {
            if q == p {
                have += c;
            }
        }
        if have < need {
            return false;
        }
    }
    for (p, add) in net.post(t).iter() {
        let consumed = if strict { 0 } else { net.pre(t).count(p) };
        let base = net.marking().count(p) - consumed.min(net.marking().count(p));
        match net.place(p).map(|pl| pl.capacity) {
            Some(Capacity::Finite(cap)) => {
                if base + add > cap {
                    return false;
                }
            }
            Some(Capacity::Omega) => {}
            None => return false,
        }
    }
    true
}

/// Post-fire marking computed element by element.
pub fn oracle_fire_marking(net: &PetriNet, t: TransitionId) -> Vec<(u64, u64)> {
    let mut counts: BTreeMap<u64, i64> = BTreeMap::new();
    for (p, c) in net.marking().iter() {
        *counts.entry(p.0).or_insert(0) += c as i64;
    }
    for (p, c) in net.pre(t).iter() {
        *counts.entry(p.0).or_insert(0) -= c as i64;
    }
    for (p, c) in net.post(t).iter() {
        *counts.entry(p.0).or_insert(0) += c as i64;
    }
    counts
        .into_iter()
        .filter(|&(_, c)| c != 0)
        .map(|(p, c)| {
            assert!(c > 0, "oracle fired a non-activated transition");
            (p, c as u64)
        })
        .collect()
}

pub type MatchMaps = (BTreeMap<u64, u64>, BTreeMap<u64, u64>);

pub fn match_maps(m: &Match) -> MatchMaps {
    (
        m.place_map.iter().map(|(k, v)| (k.0, v.0)).collect(),
        m.transition_map.iter().map(|(k, v)| (k.0, v.0)).collect(),
    )
}

/// Exhaustive injective search over all place and transition assignments,
/// filtered by the embedding conditions.
pub fn brute_force_matches(net: &PetriNet, rule: &Rule) -> BTreeSet<MatchMaps> {
    let lhs = rule.lhs();
    let rule_places: Vec<&Place> = lhs.places().collect();
    let rule_transitions: Vec<&Transition> = lhs.transitions().collect();
    let host_places: Vec<&Place> = net.places().collect();
    let host_transitions: Vec<&Transition> = net.transitions().collect();

    let mut results = BTreeSet::new();
    let mut pmap: BTreeMap<u64, u64> = BTreeMap::new();
    let mut tmap: BTreeMap<u64, u64> = BTreeMap::new();

    fn assign_places(
        idx: usize,
        rule_places: &[&Place],
        host_places: &[&Place],
        pmap: &mut BTreeMap<u64, u64>,
        then: &mut dyn FnMut(&mut BTreeMap<u64, u64>),
    ) {
        if idx == rule_places.len() {
            then(pmap);
            return;
        }
        let rp = rule_places[idx];
        for hp in host_places {
            if pmap.values().any(|&v| v == hp.id.0) {
                continue;
            }
            if rp.label != hp.label || rp.capacity != hp.capacity {
                continue;
            }
            pmap.insert(rp.id.0, hp.id.0);
            assign_places(idx + 1, rule_places, host_places, pmap, then);
            pmap.remove(&rp.id.0);
        }
    }

    fn assign_transitions(
        idx: usize,
        rule_transitions: &[&Transition],
        host_transitions: &[&Transition],
        tmap: &mut BTreeMap<u64, u64>,
        then: &mut dyn FnMut(&mut BTreeMap<u64, u64>),
    ) {
        if idx == rule_transitions.len() {
            then(tmap);
            return;
        }
        let rt = rule_transitions[idx];
        for ht in host_transitions {
            if tmap.values().any(|&v| v == ht.id.0) {
                continue;
            }
            if rt.label != ht.label {
                continue;
            }
            tmap.insert(rt.id.0, ht.id.0);
            assign_transitions(idx + 1, rule_transitions, host_transitions, tmap, then);
            tmap.remove(&rt.id.0);
        }
    }

    let rows_match = |pmap: &BTreeMap<u64, u64>, rule_row: &Marking, host_row: &Marking| {
        let mut mapped: BTreeMap<u64, u64> = BTreeMap::new();
        for (p, c) in rule_row.iter() {
            *mapped.entry(pmap[&p.0]).or_insert(0) += c;
        }
        let host: BTreeMap<u64, u64> = host_row.iter().map(|(p, c)| (p.0, c)).collect();
        mapped == host
    };

    assign_places(0, &rule_places, &host_places, &mut pmap, &mut |pmap| {
        assign_transitions(
            0,
            &rule_transitions,
            &host_transitions,
            &mut tmap,
            &mut |tmap| {
                for rt in &rule_transitions {
                    let ht = TransitionId(tmap[&rt.id.0]);
                    if !rows_match(pmap, lhs.pre(rt.id), net.pre(ht))
                        || !rows_match(pmap, lhs.post(rt.id), net.post(ht))
                    {
                        return;
                    }
                }
                for (p, c) in lhs.marking().iter() {
                    if net.marking().count(PlaceId(pmap[&p.0])) < c {
                        return;
                    }
                }
                results.insert((pmap.clone(), tmap.clone()));
            },
        );
    });
    results
}

/// Dangling condition from its definition: each deleted place's image may
/// only touch arcs of deleted transitions.
pub fn oracle_dangling(net: &PetriNet, rule: &Rule, m: &Match) -> bool {
    let deleted_transitions: BTreeSet<u64> = rule
        .deleted_transitions()
        .iter()
        .map(|t| m.transition_map[t].0)
        .collect();
    for dp in rule.deleted_places() {
        let hp = m.place_map[&dp];
        for t in net.transitions() {
            if deleted_transitions.contains(&t.id.0) {
                continue;
            }
            let touches = net.pre(t.id).iter().any(|(p, _)| p == hp)
                || net.post(t.id).iter().any(|(p, _)| p == hp);
            if touches {
                return false;
            }
        }
    }
    true
}

/// Token accounting for deleted places, re-derived: host tokens on the
/// image must equal the rule's left-hand tokens on the deleted place.
pub fn oracle_deleted_marking(net: &PetriNet, rule: &Rule, m: &Match) -> bool {
    rule.deleted_places().iter().all(|dp| {
        let host = net.marking().count(m.place_map[dp]);
        let expected = rule.lhs().marking().count(*dp);
        host == expected
    })
}

/// Random LTL formula of bounded depth over the given atoms.
pub fn random_formula(rng: &mut ChaCha8Rng, depth: usize, atoms: &[Atom]) -> Formula {
    if depth == 0 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..6) {
            0 => Formula::True,
            1 => Formula::False,
            _ => Formula::Atom(atoms[rng.gen_range(0..atoms.len())].clone()),
        };
    }
    let sub = |rng: &mut ChaCha8Rng| Box::new(random_formula(rng, depth - 1, atoms));
    match rng.gen_range(0..9) {
        0 => Formula::Not(sub(rng)),
        1 => Formula::Next(sub(rng)),
        2 => Formula::Always(sub(rng)),
        3 => Formula::Eventually(sub(rng)),
        4 => Formula::And(sub(rng), sub(rng)),
        5 => Formula::Or(sub(rng), sub(rng)),
        6 => Formula::Implies(sub(rng), sub(rng)),
        7 => Formula::Until(sub(rng), sub(rng)),
        _ => Formula::Release(sub(rng), sub(rng)),
    }
}

/// Two distinguishable dummy atoms for abstract-graph tests.
pub fn abstract_atoms() -> Vec<Atom> {
    let mut a = BTreeMap::new();
    a.insert("a".to_string(), 1);
    let mut b = BTreeMap::new();
    b.insert("b".to_string(), 1);
    vec![
        Atom::Reachable(MarkingPattern::ByLabel(a)),
        Atom::Reachable(MarkingPattern::ByLabel(b)),
    ]
}

/// Enumerate lassos by walking the successor relation up to `max_len`
/// steps; every edge back into the current walk closes a candidate. The
/// formula is evaluated on each lasso by direct fixpoint semantics.
/// Returns true when some enumerated lasso violates the formula.
pub fn oracle_finds_violation(
    initial: usize,
    succ: &[Vec<usize>],
    formula: &Formula,
    valuation: &dyn Fn(usize, &Atom) -> bool,
    max_len: usize,
) -> bool {
    fn walk(
        current: usize,
        succ: &[Vec<usize>],
        path: &mut Vec<usize>,
        formula: &Formula,
        valuation: &dyn Fn(usize, &Atom) -> bool,
        max_len: usize,
    ) -> bool {
        for &next in &succ[current] {
            for pos in 0..path.len() {
                if path[pos] != next {
                    continue;
                }
                let states: Vec<usize> = path.clone();
                let violates = !rpncheck::ltl::eval_lasso(
                    formula,
                    pos,
                    states.len(),
                    &|i, atom| valuation(states[i], atom),
                );
                if violates {
                    return true;
                }
            }
            if path.len() < max_len {
                path.push(next);
                if walk(next, succ, path, formula, valuation, max_len) {
                    return true;
                }
                path.pop();
            }
        }
        false
    }
    let mut path = vec![initial];
    walk(initial, succ, &mut path, formula, valuation, max_len)
}

/// Random total successor relation over `n` states (out-degree 1..=2).
pub fn random_total_graph(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<usize>> {
    (0..n)
        .map(|_| {
            let degree = rng.gen_range(1..=2);
            (0..degree).map(|_| rng.gen_range(0..n)).collect()
        })
        .collect()
}
