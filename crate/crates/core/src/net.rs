//! Core value types for marked Petri nets: places, transitions, markings
//! and the multiset algebra everything else is built on.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// External rendering of the unbounded capacity sentinel.
pub const OMEGA_RENDERING: u64 = 2_147_483_647;

/// Identifier of a place. Place and transition ids live in separate
/// namespaces; a place and a transition may share the same number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlaceId(pub u64);

/// Identifier of a transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TransitionId(pub u64);

impl fmt::Display for PlaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

impl fmt::Display for TransitionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}

/// Place capacity: a positive bound or unbounded.
///
/// `Omega` is a distinct sentinel rather than a large number so that no
/// arithmetic is ever performed on "infinity"; it is rendered as
/// 2147483647 in external formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Capacity {
    Finite(u64),
    Omega,
}

impl Capacity {
    /// Parse the external numeric form; 2147483647 is reserved for omega.
    pub fn from_rendering(value: u64) -> Capacity {
        if value == OMEGA_RENDERING {
            Capacity::Omega
        } else {
            Capacity::Finite(value)
        }
    }

    pub fn rendering(self) -> u64 {
        match self {
            Capacity::Finite(n) => n,
            Capacity::Omega => OMEGA_RENDERING,
        }
    }

    pub fn admits(self, count: u64) -> bool {
        match self {
            Capacity::Finite(n) => count <= n,
            Capacity::Omega => true,
        }
    }
}

impl fmt::Display for Capacity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.rendering())
    }
}

/// A labelled place with its capacity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Place {
    pub id: PlaceId,
    pub label: String,
    pub capacity: Capacity,
}

impl Place {
    pub fn new(id: u64, label: impl Into<String>, capacity: Capacity) -> Place {
        Place { id: PlaceId(id), label: label.into(), capacity }
    }

    /// Place with unbounded capacity.
    pub fn omega(id: u64, label: impl Into<String>) -> Place {
        Place::new(id, label, Capacity::Omega)
    }
}

/// A labelled transition.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Transition {
    pub id: TransitionId,
    pub label: String,
}

impl Transition {
    pub fn new(id: u64, label: impl Into<String>) -> Transition {
        Transition { id: TransitionId(id), label: label.into() }
    }
}

/// A multiset of places: place id -> token count.
///
/// Zero-count entries are never stored, so equality and ordering are
/// structural.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Marking {
    counts: BTreeMap<PlaceId, u64>,
}

/// Multiset subtraction would go negative.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("marking underflow at {place}: cannot remove {remove} tokens from {have}")]
pub struct MarkingUnderflow {
    pub place: PlaceId,
    pub have: u64,
    pub remove: u64,
}

impl Marking {
    pub fn empty() -> Marking {
        Marking::default()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn count(&self, place: PlaceId) -> u64 {
        self.counts.get(&place).copied().unwrap_or(0)
    }

    /// Total number of tokens.
    pub fn size(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn insert(&mut self, place: PlaceId, count: u64) {
        if count > 0 {
            *self.counts.entry(place).or_insert(0) += count;
        }
    }

    /// Entries in ascending place-id order.
    pub fn iter(&self) -> impl Iterator<Item = (PlaceId, u64)> + '_ {
        self.counts.iter().map(|(&p, &c)| (p, c))
    }

    pub fn places(&self) -> impl Iterator<Item = PlaceId> + '_ {
        self.counts.keys().copied()
    }

    /// True iff `self` is a sub-multiset of `other` (pointwise `<=`).
    pub fn leq(&self, other: &Marking) -> bool {
        self.counts.iter().all(|(p, &c)| c <= other.count(*p))
    }

    /// Pointwise sum.
    pub fn add(&self, other: &Marking) -> Marking {
        let mut out = self.clone();
        for (p, c) in other.iter() {
            out.insert(p, c);
        }
        out
    }

    /// Pointwise difference. Fails unless `other.leq(self)`; an underflow
    /// here signals a caller bug, never user input.
    pub fn sub(&self, other: &Marking) -> Result<Marking, MarkingUnderflow> {
        let mut counts = self.counts.clone();
        for (p, c) in other.iter() {
            let have = counts.get(&p).copied().unwrap_or(0);
            if c > have {
                return Err(MarkingUnderflow { place: p, have, remove: c });
            }
            if c == have {
                counts.remove(&p);
            } else {
                counts.insert(p, have - c);
            }
        }
        Ok(Marking { counts })
    }

    /// Rewrite every place id through `f`, keeping counts.
    pub fn map_places(&self, mut f: impl FnMut(PlaceId) -> PlaceId) -> Marking {
        let mut out = Marking::empty();
        for (p, c) in self.iter() {
            out.insert(f(p), c);
        }
        out
    }
}

impl FromIterator<(PlaceId, u64)> for Marking {
    fn from_iter<I: IntoIterator<Item = (PlaceId, u64)>>(iter: I) -> Marking {
        let mut m = Marking::empty();
        for (p, c) in iter {
            m.insert(p, c);
        }
        m
    }
}

/// Capacity condition: adding `added` on top of `base` stays within every
/// affected place's capacity. Omega capacities always pass; places not
/// present in `added` are not inspected.
pub fn capacity_ok(base: &Marking, added: &Marking, net: &PetriNet) -> bool {
    added.iter().all(|(p, c)| match net.place(p) {
        Some(place) => place.capacity.admits(base.count(p) + c),
        None => false,
    })
}

/// A structural problem found while validating a net.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    DuplicatePlaceId(PlaceId),
    DuplicateTransitionId(TransitionId),
    /// pre/post row for a transition that does not exist.
    UnknownTransition(TransitionId),
    /// Arc or marking references a place that does not exist.
    UnknownPlace(PlaceId),
    /// Initial marking exceeds a finite capacity.
    CapacityExceeded { place: PlaceId, count: u64, capacity: u64 },
    /// Capacity below one.
    ZeroCapacity(PlaceId),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicatePlaceId(p) => write!(f, "duplicate place id {p}"),
            Violation::DuplicateTransitionId(t) => write!(f, "duplicate transition id {t}"),
            Violation::UnknownTransition(t) => write!(f, "pre/post row for unknown transition {t}"),
            Violation::UnknownPlace(p) => write!(f, "reference to unknown place {p}"),
            Violation::CapacityExceeded { place, count, capacity } => {
                write!(f, "marking of {place} is {count}, above capacity {capacity}")
            }
            Violation::ZeroCapacity(p) => write!(f, "capacity of {p} must be at least 1"),
        }
    }
}

/// A marked Petri net.
///
/// `pre` and `post` are kept keyed by exactly the transition set: every
/// transition has a row, possibly empty. All types here are immutable
/// values after construction.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PetriNet {
    places: BTreeMap<PlaceId, Place>,
    transitions: BTreeMap<TransitionId, Transition>,
    pre: BTreeMap<TransitionId, Marking>,
    post: BTreeMap<TransitionId, Marking>,
    marking: Marking,
}

impl PetriNet {
    /// Assemble and validate a net. All violations are reported, not just
    /// the first.
    pub fn new(
        places: Vec<Place>,
        transitions: Vec<Transition>,
        pre: Vec<(TransitionId, Marking)>,
        post: Vec<(TransitionId, Marking)>,
        marking: Marking,
    ) -> Result<PetriNet, Vec<Violation>> {
        let violations = validate_parts(&places, &transitions, &pre, &post, &marking);
        if !violations.is_empty() {
            return Err(violations);
        }

        let place_map: BTreeMap<_, _> = places.into_iter().map(|p| (p.id, p)).collect();
        let transition_map: BTreeMap<_, _> =
            transitions.into_iter().map(|t| (t.id, t)).collect();
        let mut pre_map: BTreeMap<_, _> =
            transition_map.keys().map(|&t| (t, Marking::empty())).collect();
        let mut post_map = pre_map.clone();
        for (t, m) in pre {
            pre_map.insert(t, pre_map[&t].add(&m));
        }
        for (t, m) in post {
            post_map.insert(t, post_map[&t].add(&m));
        }

        Ok(PetriNet {
            places: place_map,
            transitions: transition_map,
            pre: pre_map,
            post: post_map,
            marking,
        })
    }

    pub fn place(&self, id: PlaceId) -> Option<&Place> {
        self.places.get(&id)
    }

    pub fn transition(&self, id: TransitionId) -> Option<&Transition> {
        self.transitions.get(&id)
    }

    /// Places in ascending id order.
    pub fn places(&self) -> impl Iterator<Item = &Place> {
        self.places.values()
    }

    /// Transitions in ascending id order.
    pub fn transitions(&self) -> impl Iterator<Item = &Transition> {
        self.transitions.values()
    }

    pub fn place_count(&self) -> usize {
        self.places.len()
    }

    pub fn transition_count(&self) -> usize {
        self.transitions.len()
    }

    /// Pre multiset of a transition (empty if the id is unknown).
    pub fn pre(&self, t: TransitionId) -> &Marking {
        static EMPTY: Marking = Marking { counts: BTreeMap::new() };
        self.pre.get(&t).unwrap_or(&EMPTY)
    }

    /// Post multiset of a transition (empty if the id is unknown).
    pub fn post(&self, t: TransitionId) -> &Marking {
        static EMPTY: Marking = Marking { counts: BTreeMap::new() };
        self.post.get(&t).unwrap_or(&EMPTY)
    }

    pub fn marking(&self) -> &Marking {
        &self.marking
    }

    /// Replace the marking, keeping the structure. The caller is
    /// responsible for capacity discipline (firing checks it up front).
    pub fn with_marking(&self, marking: Marking) -> PetriNet {
        PetriNet { marking, ..self.clone() }
    }

    /// Re-check the stored net. Construction enforces these invariants,
    /// so this is only interesting after code changes or for callers that
    /// assemble nets through transformations.
    pub fn validate(&self) -> Vec<Violation> {
        let places: Vec<Place> = self.places.values().cloned().collect();
        let transitions: Vec<Transition> = self.transitions.values().cloned().collect();
        let pre: Vec<_> = self.pre.iter().map(|(&t, m)| (t, m.clone())).collect();
        let post: Vec<_> = self.post.iter().map(|(&t, m)| (t, m.clone())).collect();
        validate_parts(&places, &transitions, &pre, &post, &self.marking)
    }
}

fn validate_parts(
    places: &[Place],
    transitions: &[Transition],
    pre: &[(TransitionId, Marking)],
    post: &[(TransitionId, Marking)],
    marking: &Marking,
) -> Vec<Violation> {
    let mut violations = Vec::new();

    let mut place_ids = BTreeMap::new();
    for p in places {
        if place_ids.insert(p.id, p).is_some() {
            violations.push(Violation::DuplicatePlaceId(p.id));
        }
        if p.capacity == Capacity::Finite(0) {
            violations.push(Violation::ZeroCapacity(p.id));
        }
    }
    let mut transition_ids = BTreeMap::new();
    for t in transitions {
        if transition_ids.insert(t.id, t).is_some() {
            violations.push(Violation::DuplicateTransitionId(t.id));
        }
    }

    for (t, row) in pre.iter().chain(post) {
        if !transition_ids.contains_key(t) {
            violations.push(Violation::UnknownTransition(*t));
        }
        for (p, _) in row.iter() {
            if !place_ids.contains_key(&p) {
                violations.push(Violation::UnknownPlace(p));
            }
        }
    }

    for (p, count) in marking.iter() {
        match place_ids.get(&p) {
            None => violations.push(Violation::UnknownPlace(p)),
            Some(place) => {
                if let Capacity::Finite(cap) = place.capacity {
                    if count > cap {
                        violations.push(Violation::CapacityExceeded {
                            place: p,
                            count,
                            capacity: cap,
                        });
                    }
                }
            }
        }
    }

    violations
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(entries: &[(u64, u64)]) -> Marking {
        entries.iter().map(|&(p, c)| (PlaceId(p), c)).collect()
    }

    /// The running three-place cycle: A2, A3, A4 with T5: A4->A3,
    /// T6: A2->A4, T7: A3->A2 and marking A3 + A4.
    pub(crate) fn n1() -> PetriNet {
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
        .expect("n1 is valid")
    }

    #[test]
    fn empty_marking_below_everything() {
        assert!(Marking::empty().leq(&m(&[(2, 1), (4, 1)])));
        assert!(Marking::empty().leq(&Marking::empty()));
    }

    #[test]
    fn leq_on_n1_pre_sets() {
        // pre(T6) = A2 against the A2 + A4 variant of the marking
        let pre_t6 = m(&[(2, 1)]);
        assert!(pre_t6.leq(&m(&[(2, 1), (4, 1)])));
        assert!(!m(&[(2, 2)]).leq(&m(&[(2, 1), (4, 1)])));
    }

    #[test]
    fn add_sub_roundtrip() {
        // {A2:1, A4:1} - {A2:1} + {A4:1} = {A4:2}
        let start = m(&[(2, 1), (4, 1)]);
        let result = start.sub(&m(&[(2, 1)])).unwrap().add(&m(&[(4, 1)]));
        assert_eq!(result, m(&[(4, 2)]));
    }

    #[test]
    fn add_sub_identity() {
        let x = m(&[(1, 2), (9, 1)]);
        assert_eq!(x.add(&Marking::empty()), x);
        assert_eq!(x.sub(&Marking::empty()).unwrap(), x);
    }

    #[test]
    fn sub_underflow() {
        let err = m(&[(4, 2)]).sub(&m(&[(2, 1)])).unwrap_err();
        assert_eq!(err.place, PlaceId(2));
    }

    #[test]
    fn no_zero_entries_survive() {
        let x = m(&[(1, 1)]).sub(&m(&[(1, 1)])).unwrap();
        assert!(x.is_empty());
        let mut y = Marking::empty();
        y.insert(PlaceId(7), 0);
        assert!(y.is_empty());
    }

    #[test]
    fn capacity_empty_addition_passes() {
        let net = n1();
        assert!(capacity_ok(net.marking(), &Marking::empty(), &net));
    }

    #[test]
    fn capacity_omega_always_passes() {
        let net = n1();
        assert!(capacity_ok(&m(&[(2, 500)]), &m(&[(2, 500), (3, 9)]), &net));
    }

    #[test]
    fn capacity_finite_bound() {
        let net = PetriNet::new(
            vec![Place::new(1, "A", Capacity::Finite(1))],
            vec![],
            vec![],
            vec![],
            m(&[(1, 1)]),
        )
        .unwrap();
        // cap 1, one token present, one more requested: 2 > 1
        assert!(!capacity_ok(&m(&[(1, 1)]), &m(&[(1, 1)]), &net));
        assert!(capacity_ok(&Marking::empty(), &m(&[(1, 1)]), &net));
    }

    #[test]
    fn n1_validates() {
        assert!(n1().validate().is_empty());
    }

    #[test]
    fn unknown_place_in_pre_is_reported() {
        let err = PetriNet::new(
            vec![Place::omega(1, "A")],
            vec![Transition::new(2, "T")],
            vec![(TransitionId(2), m(&[(99, 1)]))],
            vec![],
            Marking::empty(),
        )
        .unwrap_err();
        assert!(err.contains(&Violation::UnknownPlace(PlaceId(99))));
    }

    #[test]
    fn overfull_initial_marking_is_reported() {
        let err = PetriNet::new(
            vec![Place::new(1, "A", Capacity::Finite(1))],
            vec![],
            vec![],
            vec![],
            m(&[(1, 2)]),
        )
        .unwrap_err();
        assert_eq!(
            err,
            vec![Violation::CapacityExceeded { place: PlaceId(1), count: 2, capacity: 1 }]
        );
    }

    #[test]
    fn duplicate_ids_are_reported() {
        let err = PetriNet::new(
            vec![Place::omega(1, "A"), Place::omega(1, "B")],
            vec![Transition::new(2, "T"), Transition::new(2, "T")],
            vec![],
            vec![],
            Marking::empty(),
        )
        .unwrap_err();
        assert!(err.contains(&Violation::DuplicatePlaceId(PlaceId(1))));
        assert!(err.contains(&Violation::DuplicateTransitionId(TransitionId(2))));
    }

    #[test]
    fn omega_rendering_roundtrip() {
        assert_eq!(Capacity::from_rendering(2147483647), Capacity::Omega);
        assert_eq!(Capacity::Omega.rendering(), 2147483647);
        assert_eq!(Capacity::from_rendering(5), Capacity::Finite(5));
    }
}
