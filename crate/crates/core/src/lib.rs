//! Model checker for reconfigurable Petri nets.
//!
//! A reconfigurable Petri net pairs a marked place/transition net with a
//! set of transformation rules that can rewrite the net's structure at
//! runtime. This crate executes the token game, applies rules under the
//! gluing condition, builds the reachable state space of configurations
//! and checks LTL formulae over it, producing lasso counterexamples.

pub mod cli;
mod digest;
pub mod firing;
pub mod ltl;
pub mod maude;
pub mod net;
pub mod pnml;
pub mod rules;
pub mod state;

pub use firing::{enabled_transitions, fire, is_activated, FiringSemantics};
pub use ltl::{model_check, parse_formula, Atom, Formula, Lasso, Verdict};
pub use net::{Capacity, Marking, PetriNet, Place, PlaceId, Transition, TransitionId};
pub use rules::{apply_rule, find_matches, IdPool, Match, Rule};
pub use state::{
    canonical_key, explore, successors, ActionLabel, Configuration, ExploreLimits,
    ExploreOptions, StateGraph, StateIdentity,
};
