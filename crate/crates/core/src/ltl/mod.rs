//! LTL syntax, atomic propositions over configurations and
//! automaton-based model checking with lasso counterexamples.
//!
//! Checking proceeds by negating the formula, translating it to a Büchi
//! automaton and running a nested depth-first search on the product with
//! the explored state graph. Deadlock states are given an implicit
//! self-loop so every path is infinite.

mod buchi;
mod ndfs;
mod parse;

pub use parse::parse_formula;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::firing::{enabled_transitions_with, FiringSemantics};
use crate::net::PlaceId;
use crate::rules::{apply_rule, find_matches};
use crate::state::{
    canonical_key_with, explore, ActionLabel, Configuration, ExploreOptions, StateGraph,
};

/// Token pattern for the `reachable` proposition.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MarkingPattern {
    /// Exact places: (label, place id) -> required count.
    ById(BTreeMap<(String, u64), u64>),
    /// Any places with the label: label -> required total count.
    ByLabel(BTreeMap<String, u64>),
}

impl fmt::Display for MarkingPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut entries: Vec<String> = Vec::new();
        match self {
            MarkingPattern::ById(map) => {
                for ((label, id), count) in map {
                    for _ in 0..*count {
                        entries.push(format!("{label}@{id}"));
                    }
                }
            }
            MarkingPattern::ByLabel(map) => {
                for (label, count) in map {
                    for _ in 0..*count {
                        entries.push(label.clone());
                    }
                }
            }
        }
        write!(f, "{}", entries.join(" ; "))
    }
}

/// Atomic propositions over configurations.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    /// Some transition is activated.
    TEnabled,
    /// Some transition is activated or some rule has an applicable match.
    Enabled,
    /// The pattern is a sub-multiset of the current marking.
    Reachable(MarkingPattern),
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::TEnabled => write!(f, "t-enabled"),
            Atom::Enabled => write!(f, "enabled"),
            Atom::Reachable(p) => write!(f, "reachable({p})"),
        }
    }
}

/// LTL syntax tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Atom(Atom),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    Release(Box<Formula>, Box<Formula>),
    Always(Box<Formula>),
    Eventually(Box<Formula>),
}

impl Formula {
    pub fn negated(&self) -> Formula {
        Formula::Not(Box::new(self.clone()))
    }

    fn atoms_into(&self, out: &mut Vec<Atom>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(a) => {
                if !out.contains(a) {
                    out.push(a.clone());
                }
            }
            Formula::Not(x) | Formula::Next(x) | Formula::Always(x) | Formula::Eventually(x) => {
                x.atoms_into(out)
            }
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Implies(a, b)
            | Formula::Until(a, b)
            | Formula::Release(a, b) => {
                a.atoms_into(out);
                b.atoms_into(out);
            }
        }
    }

    /// Distinct atoms in first-occurrence order.
    pub fn atoms(&self) -> Vec<Atom> {
        let mut out = Vec::new();
        self.atoms_into(&mut out);
        out
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::Not(x) => write!(f, "~ {x}"),
            Formula::Next(x) => write!(f, "X {x}"),
            Formula::Always(x) => write!(f, "[] {x}"),
            Formula::Eventually(x) => write!(f, "<> {x}"),
            Formula::And(a, b) => write!(f, "({a} /\\ {b})"),
            Formula::Or(a, b) => write!(f, "({a} \\/ {b})"),
            Formula::Implies(a, b) => write!(f, "({a} -> {b})"),
            Formula::Until(a, b) => write!(f, "({a} U {b})"),
            Formula::Release(a, b) => write!(f, "({a} R {b})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("formula syntax error at byte {at}: {message}")]
    Syntax { at: usize, message: String },
    #[error("reachable pattern references place {id} with label {label}, which does not exist")]
    UnknownPlace { label: String, id: u64 },
    #[error("reachable pattern references unknown label {0}")]
    UnknownLabel(String),
    #[error("reachable pattern mixes id-addressed and label-only entries")]
    MixedPattern,
    #[error("formula uses more than 64 distinct atoms")]
    TooManyAtoms,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error("state space exceeded: exploration truncated at {states} states")]
    StateSpaceExceeded { states: usize },
    #[error(transparent)]
    Formula(#[from] FormulaError),
}

/// One lasso step: the configuration and the action taken from it. The
/// action is absent exactly on the implicit deadlock self-loop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub config: Configuration,
    pub action: Option<ActionLabel>,
}

/// A violating run: finite prefix followed by a repeating cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lasso {
    pub prefix: Vec<Step>,
    pub cycle: Vec<Step>,
    pub deadlock_tail: bool,
}

impl Lasso {
    pub fn steps(&self) -> impl Iterator<Item = &Step> {
        self.prefix.iter().chain(self.cycle.iter())
    }
}

/// Outcome of a model check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Violated(Lasso),
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds)
    }

    pub fn counterexample(&self) -> Option<&Lasso> {
        match self {
            Verdict::Holds => None,
            Verdict::Violated(lasso) => Some(lasso),
        }
    }
}

/// Evaluate an atomic proposition on a configuration.
pub fn eval_atom(config: &Configuration, atom: &Atom) -> bool {
    eval_atom_with(config, atom, FiringSemantics::default())
}

pub fn eval_atom_with(config: &Configuration, atom: &Atom, semantics: FiringSemantics) -> bool {
    match atom {
        Atom::TEnabled => !enabled_transitions_with(config.net(), semantics).is_empty(),
        Atom::Enabled => {
            !enabled_transitions_with(config.net(), semantics).is_empty()
                || config.rules().iter().any(|rule| {
                    find_matches(config.net(), rule)
                        .iter()
                        .any(|m| apply_rule(config, m).is_ok())
                })
        }
        Atom::Reachable(pattern) => match pattern {
            MarkingPattern::ById(entries) => entries
                .iter()
                .all(|((_, id), &count)| config.net().marking().count(PlaceId(*id)) >= count),
            MarkingPattern::ByLabel(entries) => entries.iter().all(|(label, &count)| {
                let total: u64 = config
                    .net()
                    .marking()
                    .iter()
                    .filter(|(p, _)| {
                        config.net().place(*p).map(|pl| &pl.label == label).unwrap_or(false)
                    })
                    .map(|(_, c)| c)
                    .sum();
                total >= count
            }),
        },
    }
}

/// Reject reachable patterns that do not speak about the loaded net.
pub fn validate_formula(formula: &Formula, config: &Configuration) -> Result<(), FormulaError> {
    for atom in formula.atoms() {
        if let Atom::Reachable(pattern) = atom {
            match pattern {
                MarkingPattern::ById(entries) => {
                    for (label, id) in entries.keys() {
                        let found = config
                            .net()
                            .place(PlaceId(*id))
                            .map(|p| &p.label == label)
                            .unwrap_or(false);
                        if !found {
                            return Err(FormulaError::UnknownPlace {
                                label: label.clone(),
                                id: *id,
                            });
                        }
                    }
                }
                MarkingPattern::ByLabel(entries) => {
                    for label in entries.keys() {
                        if !config.net().places().any(|p| &p.label == label) {
                            return Err(FormulaError::UnknownLabel(label.clone()));
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

fn to_nnf(
    formula: &Formula,
    negate: bool,
    arena: &mut buchi::NnfArena,
    atoms: &[Atom],
) -> usize {
    use buchi::Nnf;
    match formula {
        Formula::True => arena.intern(if negate { Nnf::False } else { Nnf::True }),
        Formula::False => arena.intern(if negate { Nnf::True } else { Nnf::False }),
        Formula::Atom(a) => {
            let atom = atoms.iter().position(|x| x == a).expect("atom was collected");
            arena.intern(Nnf::Lit { atom, positive: !negate })
        }
        Formula::Not(x) => to_nnf(x, !negate, arena, atoms),
        Formula::And(a, b) => {
            let left = to_nnf(a, negate, arena, atoms);
            let right = to_nnf(b, negate, arena, atoms);
            arena.intern(if negate { Nnf::Or(left, right) } else { Nnf::And(left, right) })
        }
        Formula::Or(a, b) => {
            let left = to_nnf(a, negate, arena, atoms);
            let right = to_nnf(b, negate, arena, atoms);
            arena.intern(if negate { Nnf::And(left, right) } else { Nnf::Or(left, right) })
        }
        Formula::Implies(a, b) => {
            // a -> b == ~a \/ b
            let left = to_nnf(a, !negate, arena, atoms);
            let right = to_nnf(b, negate, arena, atoms);
            arena.intern(if negate { Nnf::And(left, right) } else { Nnf::Or(left, right) })
        }
        Formula::Next(x) => {
            let inner = to_nnf(x, negate, arena, atoms);
            arena.intern(buchi::Nnf::Next(inner))
        }
        Formula::Until(a, b) => {
            let left = to_nnf(a, negate, arena, atoms);
            let right = to_nnf(b, negate, arena, atoms);
            arena.intern(if negate { Nnf::Release(left, right) } else { Nnf::Until(left, right) })
        }
        Formula::Release(a, b) => {
            let left = to_nnf(a, negate, arena, atoms);
            let right = to_nnf(b, negate, arena, atoms);
            arena.intern(if negate { Nnf::Until(left, right) } else { Nnf::Release(left, right) })
        }
        Formula::Always(x) => {
            // [] x == false R x, ~[] x == true U ~x
            let inner = to_nnf(x, negate, arena, atoms);
            if negate {
                let t = arena.intern(Nnf::True);
                arena.intern(Nnf::Until(t, inner))
            } else {
                let f = arena.intern(Nnf::False);
                arena.intern(Nnf::Release(f, inner))
            }
        }
        Formula::Eventually(x) => {
            // <> x == true U x, ~<> x == false R ~x
            let inner = to_nnf(x, negate, arena, atoms);
            if negate {
                let f = arena.intern(Nnf::False);
                arena.intern(Nnf::Release(f, inner))
            } else {
                let t = arena.intern(Nnf::True);
                arena.intern(Nnf::Until(t, inner))
            }
        }
    }
}

/// Verdict over an abstract transition system: state indices only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TsVerdict {
    /// (prefix, cycle) of state indices; `None` when the formula holds.
    pub lasso: Option<(Vec<usize>, Vec<usize>)>,
}

impl TsVerdict {
    pub fn holds(&self) -> bool {
        self.lasso.is_none()
    }
}

/// Check a formula over an explicit transition system. `successors` must
/// be total (every state has at least one successor) and `atom_true`
/// decides the atoms per state.
pub fn check_transition_system(
    initial: usize,
    successors: &[Vec<usize>],
    formula: &Formula,
    mut atom_true: impl FnMut(usize, &Atom) -> bool,
) -> Result<TsVerdict, FormulaError> {
    let atoms = formula.atoms();
    if atoms.len() > 64 {
        return Err(FormulaError::TooManyAtoms);
    }
    let valuations: Vec<u64> = (0..successors.len())
        .map(|state| {
            atoms
                .iter()
                .enumerate()
                .fold(0u64, |mask, (i, atom)| {
                    if atom_true(state, atom) {
                        mask | (1 << i)
                    } else {
                        mask
                    }
                })
        })
        .collect();

    let mut arena = buchi::NnfArena::default();
    let root = to_nnf(formula, true, &mut arena, &atoms);
    let automaton = buchi::build_buchi(&arena, root);
    let lasso = ndfs::find_accepting_lasso(initial, successors, &valuations, &automaton);
    Ok(TsVerdict { lasso })
}

/// Model check a formula from an initial configuration, exploring the
/// state space first. Refuses to judge truncated graphs.
pub fn model_check(
    initial: &Configuration,
    formula: &Formula,
    opts: &ExploreOptions,
) -> Result<Verdict, CheckError> {
    validate_formula(formula, initial)?;
    let graph = explore(initial, opts);
    model_check_graph(&graph, formula)
}

/// Model check over an already-explored graph.
pub fn model_check_graph(graph: &StateGraph, formula: &Formula) -> Result<Verdict, CheckError> {
    if graph.truncated() {
        return Err(CheckError::StateSpaceExceeded { states: graph.len() });
    }
    validate_formula(formula, &graph.node(graph.initial()).config)?;

    // totalize: deadlock states loop on themselves
    let successors: Vec<Vec<usize>> = (0..graph.len())
        .map(|id| {
            if graph.is_deadlock(id) {
                vec![id]
            } else {
                graph.node(id).edges.iter().map(|(_, t)| *t).collect()
            }
        })
        .collect();

    let semantics = graph.semantics();
    let verdict = check_transition_system(graph.initial(), &successors, formula, |state, atom| {
        eval_atom_with(&graph.node(state).config, atom, semantics)
    })?;

    let Some((prefix_ids, cycle_ids)) = verdict.lasso else {
        return Ok(Verdict::Holds);
    };

    let action_between = |from: usize, to: usize| -> Option<ActionLabel> {
        graph
            .node(from)
            .edges
            .iter()
            .find(|(_, target)| *target == to)
            .map(|(label, _)| label.clone())
    };
    let build_steps = |ids: &[usize], next_of_last: usize| -> Vec<Step> {
        ids.iter()
            .enumerate()
            .map(|(i, &id)| {
                let next = if i + 1 < ids.len() { ids[i + 1] } else { next_of_last };
                Step {
                    config: graph.node(id).config.clone(),
                    action: action_between(id, next),
                }
            })
            .collect()
    };

    let knot = cycle_ids[0];
    let mut cycle = build_steps(&cycle_ids, knot);
    let deadlock_tail =
        cycle_ids.iter().all(|&id| id == knot) && graph.is_deadlock(knot);
    let mut prefix_ids = prefix_ids;
    if deadlock_tail {
        cycle = vec![Step { config: graph.node(knot).config.clone(), action: None }];
        // the product may have stuttered on the deadlock before closing
        // the cycle; those prefix steps carry no information
        while prefix_ids.last() == Some(&knot) {
            prefix_ids.pop();
        }
    }
    let prefix = build_steps(&prefix_ids, knot);

    let lasso = Lasso { prefix, cycle, deadlock_tail };
    debug_assert!(
        replay_lasso(&graph.node(graph.initial()).config, &lasso, semantics, graph.identity())
            .is_ok(),
        "emitted counterexample must replay"
    );
    Ok(Verdict::Violated(lasso))
}

/// Evaluate a formula over an ultimately periodic word by fixpoint
/// iteration. Positions run 0..total; position total-1 is followed by
/// prefix_len. Exact on lassos, used as an independent oracle for the
/// automaton pipeline.
pub fn eval_lasso(
    formula: &Formula,
    prefix_len: usize,
    total: usize,
    atom_true: &dyn Fn(usize, &Atom) -> bool,
) -> bool {
    assert!(prefix_len < total, "cycle must be non-empty");
    let next = |i: usize| if i + 1 < total { i + 1 } else { prefix_len };

    fn eval(
        f: &Formula,
        total: usize,
        next: &dyn Fn(usize) -> usize,
        atom_true: &dyn Fn(usize, &Atom) -> bool,
    ) -> Vec<bool> {
        match f {
            Formula::True => vec![true; total],
            Formula::False => vec![false; total],
            Formula::Atom(a) => (0..total).map(|i| atom_true(i, a)).collect(),
            Formula::Not(x) => {
                eval(x, total, next, atom_true).into_iter().map(|b| !b).collect()
            }
            Formula::And(a, b) => {
                let va = eval(a, total, next, atom_true);
                let vb = eval(b, total, next, atom_true);
                va.into_iter().zip(vb).map(|(x, y)| x && y).collect()
            }
            Formula::Or(a, b) => {
                let va = eval(a, total, next, atom_true);
                let vb = eval(b, total, next, atom_true);
                va.into_iter().zip(vb).map(|(x, y)| x || y).collect()
            }
            Formula::Implies(a, b) => {
                let va = eval(a, total, next, atom_true);
                let vb = eval(b, total, next, atom_true);
                va.into_iter().zip(vb).map(|(x, y)| !x || y).collect()
            }
            Formula::Next(x) => {
                let vx = eval(x, total, next, atom_true);
                (0..total).map(|i| vx[next(i)]).collect()
            }
            Formula::Until(a, b) => {
                let va = eval(a, total, next, atom_true);
                let vb = eval(b, total, next, atom_true);
                least_fixpoint(total, next, |i, v| vb[i] || (va[i] && v[next(i)]))
            }
            Formula::Release(a, b) => {
                let va = eval(a, total, next, atom_true);
                let vb = eval(b, total, next, atom_true);
                greatest_fixpoint(total, next, |i, v| vb[i] && (va[i] || v[next(i)]))
            }
            Formula::Eventually(x) => {
                let vx = eval(x, total, next, atom_true);
                least_fixpoint(total, next, |i, v| vx[i] || v[next(i)])
            }
            Formula::Always(x) => {
                let vx = eval(x, total, next, atom_true);
                greatest_fixpoint(total, next, |i, v| vx[i] && v[next(i)])
            }
        }
    }

    fn least_fixpoint(
        total: usize,
        _next: &dyn Fn(usize) -> usize,
        step: impl Fn(usize, &[bool]) -> bool,
    ) -> Vec<bool> {
        let mut v = vec![false; total];
        loop {
            let mut changed = false;
            for i in (0..total).rev() {
                let value = step(i, &v);
                if value != v[i] {
                    v[i] = value;
                    changed = true;
                }
            }
            if !changed {
                return v;
            }
        }
    }

    fn greatest_fixpoint(
        total: usize,
        _next: &dyn Fn(usize) -> usize,
        step: impl Fn(usize, &[bool]) -> bool,
    ) -> Vec<bool> {
        let mut v = vec![true; total];
        loop {
            let mut changed = false;
            for i in (0..total).rev() {
                let value = step(i, &v);
                if value != v[i] {
                    v[i] = value;
                    changed = true;
                }
            }
            if !changed {
                return v;
            }
        }
    }

    eval(formula, total, &next, atom_true)[0]
}

/// Evaluate a formula over a lasso of configurations.
pub fn eval_lasso_configs(
    formula: &Formula,
    lasso: &Lasso,
    semantics: FiringSemantics,
) -> bool {
    let states: Vec<&Configuration> = lasso.steps().map(|s| &s.config).collect();
    eval_lasso(formula, lasso.prefix.len(), states.len(), &|i, atom| {
        eval_atom_with(states[i], atom, semantics)
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("lasso step {step}: configuration does not match the replayed state")]
    StateMismatch { step: usize },
    #[error("lasso step {step}: action failed: {message}")]
    ActionFailed { step: usize, message: String },
    #[error("lasso step {step}: stutter on a state that is not a deadlock")]
    BadStutter { step: usize },
    #[error("lasso has an empty cycle")]
    EmptyCycle,
    #[error("cycle does not close back onto its first state")]
    OpenCycle,
}

/// Re-simulate a lasso's actions from the initial configuration and
/// verify that each listed state is reproduced and the cycle closes.
pub fn replay_lasso(
    initial: &Configuration,
    lasso: &Lasso,
    semantics: FiringSemantics,
    identity: crate::state::StateIdentity,
) -> Result<(), ReplayError> {
    use crate::firing::fire_with;

    if lasso.cycle.is_empty() {
        return Err(ReplayError::EmptyCycle);
    }
    let key = |c: &Configuration| canonical_key_with(c, identity);

    let mut current = initial.clone();
    for (index, step) in lasso.steps().enumerate() {
        if key(&current) != key(&step.config) {
            return Err(ReplayError::StateMismatch { step: index });
        }
        current = match &step.action {
            Some(ActionLabel::Fire(t)) => {
                let net = fire_with(current.net(), *t, semantics).map_err(|e| {
                    ReplayError::ActionFailed { step: index, message: e.to_string() }
                })?;
                current.with_net(net)
            }
            Some(ActionLabel::Rule { name, digest }) => {
                let rule = current.rule(name).ok_or_else(|| ReplayError::ActionFailed {
                    step: index,
                    message: format!("no rule named {name}"),
                })?;
                let matched = find_matches(current.net(), rule)
                    .into_iter()
                    .find(|m| m.digest() == *digest)
                    .ok_or_else(|| ReplayError::ActionFailed {
                        step: index,
                        message: "match digest not found".to_string(),
                    })?;
                apply_rule(&current, &matched).map_err(|e| ReplayError::ActionFailed {
                    step: index,
                    message: e.to_string(),
                })?
            }
            None => {
                if !crate::state::successors_with(&current, semantics).is_empty() {
                    return Err(ReplayError::BadStutter { step: index });
                }
                current
            }
        };
    }
    if key(&current) != key(&lasso.cycle[0].config) {
        return Err(ReplayError::OpenCycle);
    }
    Ok(())
}
