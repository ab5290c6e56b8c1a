//! Tableau translation from LTL into a Büchi automaton.
//!
//! The formula is brought into negation normal form, expanded node by
//! node into a generalized Büchi automaton with one acceptance set per
//! until subformula, then degeneralized with the usual counter
//! construction.

use std::collections::{BTreeSet, HashMap};

/// Negation-normal-form formula over interned atoms. Nodes are
//  hash-consed into an arena so closure sets are plain id sets.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) enum Nnf {
    True,
    False,
    Lit { atom: usize, positive: bool },
    And(usize, usize),
    Or(usize, usize),
    Next(usize),
    Until(usize, usize),
    Release(usize, usize),
}

#[derive(Debug, Default)]
pub(crate) struct NnfArena {
    nodes: Vec<Nnf>,
    memo: HashMap<Nnf, usize>,
}

impl NnfArena {
    /// Intern with constant folding; the expansion and the acceptance
    /// sets rely on `True`/`False` never appearing inside composites.
    pub fn intern(&mut self, node: Nnf) -> usize {
        let node = match node {
            Nnf::And(a, b) => {
                if self.is(a, &Nnf::False) || self.is(b, &Nnf::False) {
                    Nnf::False
                } else if self.is(a, &Nnf::True) {
                    return b;
                } else if self.is(b, &Nnf::True) {
                    return a;
                } else {
                    Nnf::And(a, b)
                }
            }
            Nnf::Or(a, b) => {
                if self.is(a, &Nnf::True) || self.is(b, &Nnf::True) {
                    Nnf::True
                } else if self.is(a, &Nnf::False) {
                    return b;
                } else if self.is(b, &Nnf::False) {
                    return a;
                } else {
                    Nnf::Or(a, b)
                }
            }
            Nnf::Next(a) if self.is(a, &Nnf::True) => Nnf::True,
            Nnf::Next(a) if self.is(a, &Nnf::False) => Nnf::False,
            Nnf::Until(a, b) => {
                if self.is(b, &Nnf::True) {
                    Nnf::True
                } else if self.is(b, &Nnf::False) {
                    Nnf::False
                } else if self.is(a, &Nnf::False) {
                    return b;
                } else {
                    Nnf::Until(a, b)
                }
            }
            Nnf::Release(a, b) => {
                if self.is(b, &Nnf::True) {
                    Nnf::True
                } else if self.is(b, &Nnf::False) {
                    Nnf::False
                } else if self.is(a, &Nnf::True) {
                    return b;
                } else {
                    Nnf::Release(a, b)
                }
            }
            other => other,
        };
        if let Some(&id) = self.memo.get(&node) {
            return id;
        }
        let id = self.nodes.len();
        self.nodes.push(node.clone());
        self.memo.insert(node, id);
        id
    }

    fn is(&self, id: usize, expected: &Nnf) -> bool {
        self.node(id) == expected
    }

    pub fn node(&self, id: usize) -> &Nnf {
        &self.nodes[id]
    }

    fn untils(&self) -> Vec<(usize, usize)> {
        self.nodes
            .iter()
            .enumerate()
            .filter_map(|(id, n)| match n {
                Nnf::Until(_, rhs) => Some((id, *rhs)),
                _ => None,
            })
            .collect()
    }
}

/// In-construction tableau node.
#[derive(Debug, Clone)]
struct Node {
    incoming: BTreeSet<usize>,
    new: BTreeSet<usize>,
    old: BTreeSet<usize>,
    next: BTreeSet<usize>,
}

/// Sentinel id marking edges from "before the first letter".
const INIT: usize = usize::MAX;

#[derive(Debug)]
struct StoredNode {
    incoming: BTreeSet<usize>,
    old: BTreeSet<usize>,
    next: BTreeSet<usize>,
}

fn expand(mut node: Node, stored: &mut Vec<StoredNode>, arena: &NnfArena) {
    let Some(&formula) = node.new.iter().next() else {
        // Fully processed: merge with an equivalent node or store and
        // spawn the successor obligations.
        if let Some(existing) = stored
            .iter_mut()
            .find(|n| n.old == node.old && n.next == node.next)
        {
            existing.incoming.extend(node.incoming.iter().copied());
            return;
        }
        let id = stored.len();
        stored.push(StoredNode {
            incoming: node.incoming,
            old: node.old,
            next: node.next.clone(),
        });
        expand(
            Node {
                incoming: BTreeSet::from([id]),
                new: node.next,
                old: BTreeSet::new(),
                next: BTreeSet::new(),
            },
            stored,
            arena,
        );
        return;
    };
    node.new.remove(&formula);

    let push_new = |node: &mut Node, sub: usize| {
        if !node.old.contains(&sub) {
            node.new.insert(sub);
        }
    };

    match *arena.node(formula) {
        Nnf::False => {} // contradiction: the node is dropped
        Nnf::True => expand(node, stored, arena),
        Nnf::Lit { atom, positive } => {
            let contradicts = node.old.iter().any(|&o| {
                matches!(arena.node(o), Nnf::Lit { atom: a, positive: p }
                    if *a == atom && *p != positive)
            });
            if !contradicts {
                node.old.insert(formula);
                expand(node, stored, arena);
            }
        }
        Nnf::And(a, b) => {
            node.old.insert(formula);
            push_new(&mut node, a);
            push_new(&mut node, b);
            expand(node, stored, arena);
        }
        Nnf::Or(a, b) => {
            let mut left = node.clone();
            left.old.insert(formula);
            push_new(&mut left, a);
            expand(left, stored, arena);
            node.old.insert(formula);
            push_new(&mut node, b);
            expand(node, stored, arena);
        }
        Nnf::Next(a) => {
            node.old.insert(formula);
            node.next.insert(a);
            expand(node, stored, arena);
        }
        Nnf::Until(a, b) => {
            // either the promise is kept later (a now, X(a U b))...
            let mut wait = node.clone();
            wait.old.insert(formula);
            push_new(&mut wait, a);
            wait.next.insert(formula);
            expand(wait, stored, arena);
            // ...or fulfilled now (b)
            node.old.insert(formula);
            push_new(&mut node, b);
            expand(node, stored, arena);
        }
        Nnf::Release(a, b) => {
            // b holds as long as a has not occurred
            let mut hold = node.clone();
            hold.old.insert(formula);
            push_new(&mut hold, b);
            hold.next.insert(formula);
            expand(hold, stored, arena);
            // or a and b release together
            node.old.insert(formula);
            push_new(&mut node, a);
            push_new(&mut node, b);
            expand(node, stored, arena);
        }
    }
}

/// A degeneralized Büchi automaton over atom constraints.
#[derive(Debug)]
pub(crate) struct Buchi {
    pub states: Vec<BuchiState>,
    pub initial: Vec<usize>,
}

#[derive(Debug)]
pub(crate) struct BuchiState {
    /// Atoms that must hold in a Kripke state entering this automaton state.
    pub pos: u64,
    /// Atoms that must not hold.
    pub neg: u64,
    pub succ: Vec<usize>,
    pub accepting: bool,
}

impl BuchiState {
    pub fn admits(&self, valuation: u64) -> bool {
        valuation & self.pos == self.pos && valuation & self.neg == 0
    }
}

/// Translate an NNF root into a Büchi automaton. Atom ids must be < 64.
pub(crate) fn build_buchi(arena: &NnfArena, root: usize) -> Buchi {
    let mut stored: Vec<StoredNode> = Vec::new();
    expand(
        Node {
            incoming: BTreeSet::from([INIT]),
            new: BTreeSet::from([root]),
            old: BTreeSet::new(),
            next: BTreeSet::new(),
        },
        &mut stored,
        arena,
    );

    // Acceptance sets, one per until subformula.
    let untils = arena.untils();
    let acceptance: Vec<Vec<bool>> = untils
        .iter()
        .map(|&(until_id, rhs)| {
            stored
                .iter()
                .map(|n| !n.old.contains(&until_id) || n.old.contains(&rhs))
                .collect()
        })
        .collect();
    let k = acceptance.len();

    // GBA edges: stored node q' is a successor of q iff q is listed in
    // q'.incoming.
    let node_count = stored.len();
    let mut gba_succ: Vec<Vec<usize>> = vec![Vec::new(); node_count];
    let mut gba_initial: Vec<usize> = Vec::new();
    for (target, node) in stored.iter().enumerate() {
        for &source in &node.incoming {
            if source == INIT {
                gba_initial.push(target);
            } else {
                gba_succ[source].push(target);
            }
        }
    }
    for succ in &mut gba_succ {
        succ.sort_unstable();
        succ.dedup();
    }
    gba_initial.sort_unstable();
    gba_initial.dedup();

    let constraints: Vec<(u64, u64)> = stored
        .iter()
        .map(|n| {
            let mut pos = 0u64;
            let mut neg = 0u64;
            for &f in &n.old {
                if let Nnf::Lit { atom, positive } = arena.node(f) {
                    debug_assert!(*atom < 64);
                    if *positive {
                        pos |= 1 << atom;
                    } else {
                        neg |= 1 << atom;
                    }
                }
            }
            (pos, neg)
        })
        .collect();

    // Degeneralize: counter i in 0..=k, accepting at i == k.
    let advance = |mut i: usize, node: usize| {
        while i < k && acceptance[i][node] {
            i += 1;
        }
        i
    };
    let state_index = |node: usize, counter: usize| node * (k + 1) + counter;

    let mut states: Vec<BuchiState> = Vec::with_capacity(node_count * (k + 1));
    for node in 0..node_count {
        for counter in 0..=k {
            let base = if counter == k { 0 } else { counter };
            let succ = gba_succ[node]
                .iter()
                .map(|&target| state_index(target, advance(base, target)))
                .collect();
            let (pos, neg) = constraints[node];
            states.push(BuchiState { pos, neg, succ, accepting: counter == k && k > 0 });
        }
    }
    if k == 0 {
        // no liveness obligations: every infinite run is accepting
        for state in &mut states {
            state.accepting = true;
        }
    }
    let initial = gba_initial
        .iter()
        .map(|&node| state_index(node, advance(0, node)))
        .collect();

    Buchi { states, initial }
}
