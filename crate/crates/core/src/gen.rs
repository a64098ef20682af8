//! Seeded random instances for tests, benches and the acceptance suite.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::machines::{Action, Fsm, FsmTransition, LiftStyle, Machine, Network, Pdm, PdmRule, StackEffect, BOTTOM};
use crate::parikh::{Fsa, FsaEdge, Grammar, Production, Symbol};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

fn value_names(n: usize) -> Vec<String> {
    (1..=n).map(|v| v.to_string()).collect()
}

fn action<R: Rng>(rng: &mut R, values: usize) -> Action {
    let v = rng.gen_range(0..values);
    if rng.gen_bool(0.5) {
        Action::read(v)
    } else {
        Action::write(v)
    }
}

fn accepting<R: Rng>(rng: &mut R, states: usize) -> BTreeSet<usize> {
    let mut set: BTreeSet<usize> = (0..states).filter(|_| rng.gen_bool(0.4)).collect();
    if set.is_empty() {
        set.insert(rng.gen_range(0..states));
    }
    set
}

/// FSM with one or two outgoing transitions per state.
pub fn fsm<R: Rng>(rng: &mut R, values: usize, states: usize, buchi: bool) -> Fsm {
    let mut transitions = Vec::new();
    for src in 0..states {
        for _ in 0..rng.gen_range(1..=2) {
            transitions.push(FsmTransition { src, action: action(rng, values), dst: rng.gen_range(0..states) });
        }
    }
    Fsm {
        values: value_names(values),
        states: names("s", states),
        initial: 0,
        transitions,
        accepting: buchi.then(|| accepting(rng, states)),
    }
}

/// Büchi property over the leader actions. Every state has a transition
/// on each action with probability 0.7.
pub fn property<R: Rng>(rng: &mut R, values: usize, states: usize) -> Fsm {
    let mut transitions = Vec::new();
    for src in 0..states {
        for v in 0..values {
            for a in [Action::read(v), Action::write(v)] {
                if rng.gen_bool(0.7) {
                    transitions.push(FsmTransition { src, action: a, dst: rng.gen_range(0..states) });
                }
            }
        }
    }
    Fsm {
        values: value_names(values),
        states: names("a", states),
        initial: 0,
        transitions,
        accepting: Some(accepting(rng, states)),
    }
}

/// PDM over `bot` plus `symbols` stack symbols. Every (state, top) pair
/// gets up to two rules; the bottom symbol is never popped.
pub fn pdm<R: Rng>(rng: &mut R, values: usize, states: usize, symbols: usize) -> Pdm {
    let mut stack = vec!["bot".to_string()];
    stack.extend(names("g", symbols));
    let mut rules = Vec::new();
    for src in 0..states {
        for top in 0..stack.len() {
            for _ in 0..rng.gen_range(0..=2) {
                let effect = if top == BOTTOM || symbols > 0 && rng.gen_bool(0.5) {
                    if symbols == 0 {
                        continue;
                    }
                    StackEffect::Push(rng.gen_range(1..=symbols))
                } else {
                    StackEffect::Pop
                };
                rules.push(PdmRule { src, action: action(rng, values), top, dst: rng.gen_range(0..states), effect });
            }
        }
    }
    Pdm { values: value_names(values), states: names("p", states), stack, initial: 0, rules, accepting: None }
}

/// Inputs of a random network before the property product.
#[derive(Clone, Debug)]
pub struct NetParts {
    pub property: Fsm,
    pub leader: Machine,
    pub contributor: Machine,
}

impl NetParts {
    pub fn network(&self) -> Network {
        Network::from_parts(&self.property, &self.leader, &self.contributor).expect("generated parts are valid")
    }

    /// Both machines turned into PDMs with the same language.
    pub fn lifted(&self) -> NetParts {
        let lift = |m: &Machine| match m {
            Machine::Fsm(f) => Machine::Pdm(Pdm::from_fsm(f, LiftStyle::Alternating)),
            Machine::Pdm(_) => m.clone(),
        };
        NetParts { property: self.property.clone(), leader: lift(&self.leader), contributor: lift(&self.contributor) }
    }
}

/// FSM leader and contributor with at most `max_values` values, at most
/// four states in property times leader and at most three contributor
/// states.
pub fn fsm_net(seed: u64, max_values: usize) -> NetParts {
    let mut r = rng(seed);
    let values = r.gen_range(1..=max_values);
    let p_states = r.gen_range(1..=2);
    let d_states = r.gen_range(1..=4 / p_states);
    let c_states = r.gen_range(1..=3);
    NetParts {
        property: property(&mut r, values, p_states),
        leader: Machine::Fsm(fsm(&mut r, values, d_states, false)),
        contributor: Machine::Fsm(fsm(&mut r, values, c_states, false)),
    }
}

/// PDM leader (up to two states, one stack symbol besides `bot`) and a
/// single-state PDM contributor over `bot` and one more symbol, so the
/// restriction depth stays at 5.
pub fn pdm_net(seed: u64) -> NetParts {
    let mut r = rng(seed);
    let values = r.gen_range(1..=2);
    let d_states = r.gen_range(1..=2);
    NetParts {
        property: property(&mut r, values, 1),
        leader: Machine::Pdm(pdm(&mut r, values, d_states, 1)),
        contributor: Machine::Pdm(pdm(&mut r, values, 1, 1)),
    }
}

/// Random automaton with `initial = 0` and a random final state.
pub fn fsa<R: Rng>(rng: &mut R, max_states: usize, max_letters: usize) -> Fsa {
    let states = rng.gen_range(1..=max_states);
    let letters = rng.gen_range(1..=max_letters);
    let count = rng.gen_range(0..=2 * states);
    let edges = (0..count)
        .map(|_| FsaEdge {
            src: rng.gen_range(0..states),
            letter: rng.gen_range(0..letters),
            dst: rng.gen_range(0..states),
        })
        .collect();
    Fsa { states, letters, initial: 0, final_state: rng.gen_range(0..states), edges }
}

/// Random grammar with up to three productions per nonterminal and right
/// sides of length at most three.
pub fn grammar<R: Rng>(rng: &mut R, max_nonterminals: usize, max_terminals: usize) -> Grammar {
    let nonterminals = rng.gen_range(1..=max_nonterminals);
    let terminals = rng.gen_range(1..=max_terminals);
    let mut productions = Vec::new();
    for lhs in 0..nonterminals {
        for _ in 0..rng.gen_range(1..=3) {
            let len = rng.gen_range(0..=3);
            let rhs = (0..len)
                .map(|_| {
                    if rng.gen_bool(0.55) {
                        Symbol::T(rng.gen_range(0..terminals))
                    } else {
                        Symbol::N(rng.gen_range(0..nonterminals))
                    }
                })
                .collect();
            productions.push(Production { lhs, rhs });
        }
    }
    productions.shuffle(rng);
    Grammar { nonterminals, terminals, start: 0, productions }
}
