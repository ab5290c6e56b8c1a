//! Nested depth-first search for accepting lassos in the product of a
//! totalized Kripke structure and a Büchi automaton.

use std::collections::HashMap;

use super::buchi::Buchi;

/// Product state: Kripke state in the high word, automaton state low.
fn pack(kripke: usize, buchi: usize) -> u64 {
    ((kripke as u64) << 32) | buchi as u64
}

fn kripke_of(packed: u64) -> usize {
    (packed >> 32) as usize
}

fn buchi_of(packed: u64) -> usize {
    (packed & 0xffff_ffff) as usize
}

const CYAN: u8 = 1;
const BLUE: u8 = 2;
const RED: u8 = 3;

struct Search<'a> {
    succ: &'a [Vec<usize>],
    valuations: &'a [u64],
    buchi: &'a Buchi,
    colors: HashMap<u64, u8>,
}

impl<'a> Search<'a> {
    fn product_succ(&self, state: u64) -> Vec<u64> {
        let k = kripke_of(state);
        let b = buchi_of(state);
        let mut out = Vec::new();
        for &k2 in &self.succ[k] {
            for &b2 in &self.buchi.states[b].succ {
                if self.buchi.states[b2].admits(self.valuations[k2]) {
                    out.push(pack(k2, b2));
                }
            }
        }
        out
    }

    fn accepting(&self, state: u64) -> bool {
        self.buchi.states[buchi_of(state)].accepting
    }

    fn color(&self, state: u64) -> u8 {
        self.colors.get(&state).copied().unwrap_or(0)
    }

    /// Outer search from one initial product state. Returns the lasso as
    /// (prefix, cycle) of product states when an accepting cycle exists.
    fn blue_dfs(&mut self, root: u64) -> Option<(Vec<u64>, Vec<u64>)> {
        // frame: (state, successor list, cursor)
        let mut stack: Vec<(u64, Vec<u64>, usize)> = Vec::new();
        self.colors.insert(root, CYAN);
        stack.push((root, self.product_succ(root), 0));

        while let Some(frame) = stack.last_mut() {
            let (state, succs, cursor) = (frame.0, &frame.1, frame.2);
            if cursor < succs.len() {
                let target = succs[cursor];
                frame.2 += 1;
                if self.color(target) == 0 {
                    self.colors.insert(target, CYAN);
                    let target_succ = self.product_succ(target);
                    stack.push((target, target_succ, 0));
                }
                continue;
            }
            // postorder
            if self.accepting(state) {
                if let Some(red_path) = self.red_dfs(state) {
                    let blue_path: Vec<u64> = stack.iter().map(|f| f.0).collect();
                    return Some(assemble_lasso(&blue_path, &red_path));
                }
            }
            self.colors.insert(state, BLUE);
            stack.pop();
        }
        None
    }

    /// Inner search from an accepting seed. Reaching any state on the
    /// outer stack (cyan) closes an accepting cycle; the returned path is
    /// seed .. cyan-state inclusive.
    fn red_dfs(&mut self, seed: u64) -> Option<Vec<u64>> {
        let mut stack: Vec<(u64, Vec<u64>, usize)> = Vec::new();
        stack.push((seed, self.product_succ(seed), 0));

        while let Some(frame) = stack.last_mut() {
            let (succs, cursor) = (&frame.1, frame.2);
            if cursor < succs.len() {
                let target = succs[cursor];
                frame.2 += 1;
                match self.color(target) {
                    CYAN => {
                        let mut path: Vec<u64> = stack.iter().map(|f| f.0).collect();
                        path.push(target);
                        return Some(path);
                    }
                    BLUE => {
                        self.colors.insert(target, RED);
                        let target_succ = self.product_succ(target);
                        stack.push((target, target_succ, 0));
                    }
                    _ => {}
                }
                continue;
            }
            stack.pop();
        }
        None
    }
}

/// Stitch the outer stack and the inner path into a lasso.
///
/// The outer stack runs init .. t .. seed; the inner path runs
/// seed .. t where t is some state on the outer stack. The cycle starts
/// at t, follows the stack down to the seed and returns through the
/// inner path.
fn assemble_lasso(blue_path: &[u64], red_path: &[u64]) -> (Vec<u64>, Vec<u64>) {
    let knot = *red_path.last().expect("red path ends at a cyan state");
    let knot_index = blue_path
        .iter()
        .position(|&s| s == knot)
        .expect("cyan states live on the outer stack");
    let prefix = blue_path[..knot_index].to_vec();
    let mut cycle = blue_path[knot_index..].to_vec();
    // red interior: everything strictly between seed and the knot
    cycle.extend_from_slice(&red_path[1..red_path.len() - 1]);
    (prefix, cycle)
}

/// Search for an accepting lasso. `succ` must be total and `valuations`
/// are atom bitmasks per Kripke state. Returns Kripke-level (prefix,
/// cycle) with the cycle head as the knot, or `None` when the product has
/// no accepting cycle.
pub(crate) fn find_accepting_lasso(
    initial: usize,
    succ: &[Vec<usize>],
    valuations: &[u64],
    buchi: &Buchi,
) -> Option<(Vec<usize>, Vec<usize>)> {
    let mut search = Search { succ, valuations, buchi, colors: HashMap::new() };
    let roots: Vec<u64> = buchi
        .initial
        .iter()
        .filter(|&&b| buchi.states[b].admits(valuations[initial]))
        .map(|&b| pack(initial, b))
        .collect();
    for root in roots {
        if search.color(root) != 0 {
            continue;
        }
        if let Some((prefix, cycle)) = search.blue_dfs(root) {
            let prefix = prefix.into_iter().map(kripke_of).collect();
            let cycle: Vec<usize> = cycle.into_iter().map(kripke_of).collect();
            debug_assert!(!cycle.is_empty());
            return Some((prefix, cycle));
        }
    }
    None
}
