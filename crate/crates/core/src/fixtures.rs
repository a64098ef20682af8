//! Small hand-built machines used by tests, benches and the CLI samples.

use std::collections::BTreeSet;

use crate::machines::{
    Action, Fsm, FsmTransition, Machine, Network, Pdm, PdmRule, StackEffect, ValueId, BOTTOM,
};

fn names(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

fn fsm(values: &[&str], states: &[&str], trans: &[(usize, Action, usize)]) -> Fsm {
    Fsm {
        values: names(values),
        states: names(states),
        initial: 0,
        transitions: trans.iter().map(|&(src, action, dst)| FsmTransition { src, action, dst }).collect(),
        accepting: None,
    }
}

/// Leader that reads 1, 2, 3 in a loop.
pub fn fig1_leader() -> Fsm {
    use Action as A;
    fsm(&["1", "2", "3"], &["d0", "d1", "d2"], &[(0, A::read(0), 1), (1, A::read(1), 2), (2, A::read(2), 0)])
}

/// Contributor with three loops through `c0`, each starting with a write.
pub fn fig1_contributor() -> Fsm {
    use Action as A;
    fsm(
        &["1", "2", "3"],
        &["c0", "c1", "c2", "c3", "c4", "c5", "c6"],
        &[
            (0, A::write(0), 1),
            (1, A::read(2), 2),
            (2, A::read(0), 0),
            (0, A::write(1), 3),
            (3, A::read(0), 4),
            (4, A::read(1), 0),
            (0, A::write(2), 5),
            (5, A::read(1), 6),
            (6, A::read(2), 0),
        ],
    )
}

/// One accepting state with a self-loop on every action.
pub fn universal_property(values: &[String]) -> Fsm {
    let transitions = (0..values.len())
        .flat_map(|v| [Action::read(v), Action::write(v)])
        .map(|action| FsmTransition { src: 0, action, dst: 0 })
        .collect();
    Fsm {
        values: values.to_vec(),
        states: vec!["all".into()],
        initial: 0,
        transitions,
        accepting: Some(BTreeSet::from([0])),
    }
}

/// Two-state Büchi automaton for "infinitely many leader reads of `value`".
pub fn infinitely_often_read(values: &[String], value: ValueId) -> Fsm {
    let target = Action::read(value);
    let mut transitions = Vec::new();
    for src in 0..2 {
        for v in 0..values.len() {
            for action in [Action::read(v), Action::write(v)] {
                let dst = usize::from(action == target);
                transitions.push(FsmTransition { src, action, dst });
            }
        }
    }
    Fsm {
        values: values.to_vec(),
        states: vec!["wait".into(), "seen".into()],
        initial: 0,
        transitions,
        accepting: Some(BTreeSet::from([1])),
    }
}

/// Property accepting nothing.
pub fn empty_property(values: &[String]) -> Fsm {
    Fsm { accepting: Some(BTreeSet::new()), ..universal_property(values) }
}

pub fn fig1_network() -> Network {
    let d = fig1_leader();
    let a = infinitely_often_read(&d.values, 0);
    Network::from_parts(&a, &Machine::Fsm(d), &Machine::Fsm(fig1_contributor())).unwrap()
}

/// A single contributor transition `q0 --w(1)--> q1` and a leader stuck in
/// one accepting state.
pub fn ex2_leader() -> Fsm {
    fsm(&["1"], &["q"], &[])
}

pub fn ex2_contributor() -> Fsm {
    fsm(&["1"], &["q0", "q1"], &[(0, Action::write(0), 1)])
}

pub fn ex2_network() -> Network {
    let d = ex2_leader();
    let a = universal_property(&d.values);
    Network::from_parts(&a, &Machine::Fsm(d), &Machine::Fsm(ex2_contributor())).unwrap()
}

/// Single-state PDM over `{bot, alpha}` with rules
/// `ra: p bot -> p alpha bot`, `rb: p alpha -> p alpha alpha` and
/// `rc: p alpha -> p`. The rules write `a`, `b` and `c` respectively so
/// that words identify rule sequences.
pub fn ex3_pdm() -> Pdm {
    let rule = |top, value, effect| PdmRule { src: 0, action: Action::write(value), top, dst: 0, effect };
    Pdm {
        values: names(&["a", "b", "c"]),
        states: names(&["p"]),
        stack: names(&["bot", "alpha"]),
        initial: 0,
        rules: vec![
            rule(BOTTOM, 0, StackEffect::Push(1)),
            rule(1, 1, StackEffect::Push(1)),
            rule(1, 2, StackEffect::Pop),
        ],
        accepting: None,
    }
}

/// Rule sequence `ra rb rb rc rc rc` of [`ex3_pdm`].
pub fn ex3_run() -> Vec<usize> {
    vec![0, 1, 1, 2, 2, 2]
}

/// Contributor that writes 1 on every push and may pop silently by
/// reading 1; a leader reading 1 forever is fed by it.
pub fn pushing_writer() -> Pdm {
    Pdm {
        values: names(&["1"]),
        states: names(&["p"]),
        stack: names(&["bot", "alpha"]),
        initial: 0,
        rules: vec![
            PdmRule { src: 0, action: Action::write(0), top: BOTTOM, dst: 0, effect: StackEffect::Push(1) },
            PdmRule { src: 0, action: Action::write(0), top: 1, dst: 0, effect: StackEffect::Push(1) },
            PdmRule { src: 0, action: Action::read(0), top: 1, dst: 0, effect: StackEffect::Pop },
        ],
        accepting: None,
    }
}

/// Leader reading 1 forever.
pub fn reader_of_one() -> Fsm {
    fsm(&["1"], &["r"], &[(0, Action::read(0), 0)])
}

/// Leader PDM that pushes on every read of 1.
pub fn pushing_reader() -> Pdm {
    Pdm {
        values: names(&["1"]),
        states: names(&["r"]),
        stack: names(&["bot", "alpha"]),
        initial: 0,
        rules: vec![
            PdmRule { src: 0, action: Action::read(0), top: BOTTOM, dst: 0, effect: StackEffect::Push(1) },
            PdmRule { src: 0, action: Action::read(0), top: 1, dst: 0, effect: StackEffect::Push(1) },
        ],
        accepting: None,
    }
}

/// A contributor writer of 1 with a single FSM state.
pub fn single_writer() -> Fsm {
    fsm(&["1"], &["w"], &[(0, Action::write(0), 0)])
}
