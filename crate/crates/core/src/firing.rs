//! The token game: activation test and firing step.
//!
//! A transition is activated when its pre multiset is covered by the
//! current marking and the capacity condition holds for its post places.
//! By default the capacity is checked against the post-fire marking
//! `(m - pre) + post`; the strict variant checks `m + post` without
//! deducting the consumed tokens first, which disables self-loops on
//! full places.

use thiserror::Error;

use crate::net::{capacity_ok, PetriNet, PlaceId, TransitionId};

/// Which base marking the capacity condition uses.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FiringSemantics {
    pub strict_capacity: bool,
}

impl FiringSemantics {
    pub fn strict() -> FiringSemantics {
        FiringSemantics { strict_capacity: true }
    }
}

/// Why a transition could not fire.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FiringError {
    #[error("unknown transition {0}")]
    UnknownTransition(TransitionId),
    #[error("{transition} not activated: marking lacks tokens on {place}")]
    TokenShortfall { transition: TransitionId, place: PlaceId },
    #[error("{transition} not activated: firing would exceed the capacity of {place}")]
    CapacityExceeded { transition: TransitionId, place: PlaceId },
}

fn activation(
    net: &PetriNet,
    t: TransitionId,
    semantics: FiringSemantics,
) -> Result<(), FiringError> {
    if net.transition(t).is_none() {
        return Err(FiringError::UnknownTransition(t));
    }
    let pre = net.pre(t);
    let marking = net.marking();
    if !pre.leq(marking) {
        let place = pre
            .iter()
            .find(|&(p, c)| marking.count(p) < c)
            .map(|(p, _)| p)
            .expect("some place is short");
        return Err(FiringError::TokenShortfall { transition: t, place });
    }
    let base = if semantics.strict_capacity {
        marking.clone()
    } else {
        marking.sub(pre).expect("pre covered by marking")
    };
    let post = net.post(t);
    if !capacity_ok(&base, post, net) {
        let place = post
            .iter()
            .find(|&(p, c)| {
                net.place(p)
                    .map(|pl| !pl.capacity.admits(base.count(p) + c))
                    .unwrap_or(true)
            })
            .map(|(p, _)| p)
            .expect("some place overflows");
        return Err(FiringError::CapacityExceeded { transition: t, place });
    }
    Ok(())
}

/// Activation test under the default semantics.
pub fn is_activated(net: &PetriNet, t: TransitionId) -> Result<bool, FiringError> {
    is_activated_with(net, t, FiringSemantics::default())
}

pub fn is_activated_with(
    net: &PetriNet,
    t: TransitionId,
    semantics: FiringSemantics,
) -> Result<bool, FiringError> {
    match activation(net, t, semantics) {
        Ok(()) => Ok(true),
        Err(FiringError::UnknownTransition(t)) => Err(FiringError::UnknownTransition(t)),
        Err(_) => Ok(false),
    }
}

/// Fire an activated transition, producing the successor net. The input
/// net is left untouched.
pub fn fire(net: &PetriNet, t: TransitionId) -> Result<PetriNet, FiringError> {
    fire_with(net, t, FiringSemantics::default())
}

pub fn fire_with(
    net: &PetriNet,
    t: TransitionId,
    semantics: FiringSemantics,
) -> Result<PetriNet, FiringError> {
    activation(net, t, semantics)?;
    let next = net
        .marking()
        .sub(net.pre(t))
        .expect("activation guarantees coverage")
        .add(net.post(t));
    Ok(net.with_marking(next))
}

/// All activated transitions, in ascending id order.
pub fn enabled_transitions(net: &PetriNet) -> Vec<TransitionId> {
    enabled_transitions_with(net, FiringSemantics::default())
}

pub fn enabled_transitions_with(net: &PetriNet, semantics: FiringSemantics) -> Vec<TransitionId> {
    net.transitions()
        .map(|t| t.id)
        .filter(|&t| activation(net, t, semantics).is_ok())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{Capacity, Marking, Place, Transition};

    fn m(entries: &[(u64, u64)]) -> Marking {
        entries.iter().map(|&(p, c)| (PlaceId(p), c)).collect()
    }

    fn n1_with_marking(marking: Marking) -> PetriNet {
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
            marking,
        )
        .unwrap()
    }

    /// The post-transformation shape with T26: A3 -> A4 instead of T5 and
    /// both tokens on A4: nothing can fire.
    fn deadlocked_net() -> PetriNet {
        PetriNet::new(
            vec![Place::omega(2, "A"), Place::omega(3, "A"), Place::omega(4, "A")],
            vec![
                Transition::new(6, "T"),
                Transition::new(7, "T"),
                Transition::new(26, "T"),
            ],
            vec![
                (TransitionId(6), m(&[(2, 1)])),
                (TransitionId(7), m(&[(3, 1)])),
                (TransitionId(26), m(&[(3, 1)])),
            ],
            vec![
                (TransitionId(6), m(&[(4, 1)])),
                (TransitionId(7), m(&[(2, 1)])),
                (TransitionId(26), m(&[(4, 1)])),
            ],
            m(&[(4, 2)]),
        )
        .unwrap()
    }

    #[test]
    fn t5_activated_on_initial_marking() {
        let net = n1_with_marking(m(&[(3, 1), (4, 1)]));
        assert!(is_activated(&net, TransitionId(5)).unwrap());
    }

    #[test]
    fn deadlock_net_has_nothing_activated() {
        let net = deadlocked_net();
        for t in net.transitions().map(|t| t.id).collect::<Vec<_>>() {
            assert!(!is_activated(&net, t).unwrap());
        }
        assert!(enabled_transitions(&net).is_empty());
    }

    #[test]
    fn empty_pre_is_always_activated() {
        let net = PetriNet::new(
            vec![Place::omega(1, "A")],
            vec![Transition::new(2, "T")],
            vec![],
            vec![(TransitionId(2), m(&[(1, 1)]))],
            Marking::empty(),
        )
        .unwrap();
        assert!(is_activated(&net, TransitionId(2)).unwrap());
    }

    #[test]
    fn unknown_transition_is_an_error() {
        let net = deadlocked_net();
        assert_eq!(
            is_activated(&net, TransitionId(99)),
            Err(FiringError::UnknownTransition(TransitionId(99)))
        );
    }

    #[test]
    fn fire_t6_from_a2_a4() {
        let net = n1_with_marking(m(&[(2, 1), (4, 1)]));
        let next = fire(&net, TransitionId(6)).unwrap();
        assert_eq!(*next.marking(), m(&[(4, 2)]));
        // the source net is unchanged
        assert_eq!(*net.marking(), m(&[(2, 1), (4, 1)]));
    }

    #[test]
    fn fire_t5_from_a2_a4() {
        let net = n1_with_marking(m(&[(2, 1), (4, 1)]));
        let next = fire(&net, TransitionId(5)).unwrap();
        assert_eq!(*next.marking(), m(&[(2, 1), (3, 1)]));
    }

    #[test]
    fn fire_unactivated_fails_with_shortfall() {
        let net = n1_with_marking(m(&[(3, 1), (4, 1)]));
        let err = fire(&net, TransitionId(6)).unwrap_err();
        assert_eq!(
            err,
            FiringError::TokenShortfall { transition: TransitionId(6), place: PlaceId(2) }
        );
    }

    #[test]
    fn enabled_set_on_initial_n1() {
        let net = n1_with_marking(m(&[(3, 1), (4, 1)]));
        assert_eq!(enabled_transitions(&net), vec![TransitionId(5), TransitionId(7)]);
    }

    #[test]
    fn enabled_set_of_transitionless_net() {
        let net =
            PetriNet::new(vec![Place::omega(1, "A")], vec![], vec![], vec![], m(&[(1, 1)]))
                .unwrap();
        assert!(enabled_transitions(&net).is_empty());
    }

    /// Self-loop on a full place: fine by default, rejected when strict.
    #[test]
    fn self_loop_capacity_semantics() {
        let net = PetriNet::new(
            vec![Place::new(1, "A", Capacity::Finite(1))],
            vec![Transition::new(2, "T")],
            vec![(TransitionId(2), m(&[(1, 1)]))],
            vec![(TransitionId(2), m(&[(1, 1)]))],
            m(&[(1, 1)]),
        )
        .unwrap();
        assert!(is_activated(&net, TransitionId(2)).unwrap());
        assert!(!is_activated_with(&net, TransitionId(2), FiringSemantics::strict()).unwrap());
        let err = fire_with(&net, TransitionId(2), FiringSemantics::strict()).unwrap_err();
        assert_eq!(
            err,
            FiringError::CapacityExceeded { transition: TransitionId(2), place: PlaceId(1) }
        );
    }

    #[test]
    fn token_conservation() {
        let net = n1_with_marking(m(&[(3, 1), (4, 1)]));
        let t = TransitionId(5);
        let next = fire(&net, t).unwrap();
        assert_eq!(
            next.marking().size(),
            net.marking().size() - net.pre(t).size() + net.post(t).size()
        );
    }
}
