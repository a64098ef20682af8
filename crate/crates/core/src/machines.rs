//! Automata over read/write alphabets.
//!
//! A network is built from two machines: the leader (after the property
//! automaton has been multiplied in, so it carries a Büchi set) and the
//! contributor, which every anonymous process runs. Machines are plain data;
//! [`Network::new`] validates them once and precomputes adjacency so the
//! engines can share one immutable network across threads.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type StateId = usize;
pub type SymbolId = usize;
pub type ValueId = usize;

/// Index of the bottom-of-stack symbol in every PDM stack alphabet.
pub const BOTTOM: SymbolId = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ActionKind {
    Read,
    Write,
}

/// A read or write of a register value. The role (leader or contributor)
/// is not stored here: it is implied by which machine the action belongs to,
/// which keeps the two alphabets disjoint by construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Action {
    pub kind: ActionKind,
    pub value: ValueId,
}

impl Action {
    pub fn read(value: ValueId) -> Self {
        Action { kind: ActionKind::Read, value }
    }

    pub fn write(value: ValueId) -> Self {
        Action { kind: ActionKind::Write, value }
    }

    pub fn is_read(&self) -> bool {
        self.kind == ActionKind::Read
    }

    /// Store value after this action fires from `store`, or `None` if the
    /// action is disabled there. `None` as a store means the register is
    /// still uninitialized.
    pub fn fire(&self, store: Option<ValueId>) -> Option<Option<ValueId>> {
        match self.kind {
            ActionKind::Write => Some(Some(self.value)),
            ActionKind::Read if store == Some(self.value) => Some(store),
            ActionKind::Read => None,
        }
    }

    pub fn display<'a>(&self, values: &'a [String]) -> ActionDisplay<'a> {
        ActionDisplay { action: *self, values }
    }
}

pub struct ActionDisplay<'a> {
    action: Action,
    values: &'a [String],
}

impl fmt::Display for ActionDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self.action.kind {
            ActionKind::Read => 'r',
            ActionKind::Write => 'w',
        };
        match self.values.get(self.action.value) {
            Some(v) => write!(f, "{c}({v})"),
            None => write!(f, "{c}(?{})", self.action.value),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Role {
    Leader,
    Contributor,
}

/// Stable identity of a leader or contributor transition (or PDM rule).
/// Leader identities order before contributor identities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TransitionId {
    pub owner: Role,
    pub index: usize,
}

impl TransitionId {
    pub fn leader(index: usize) -> Self {
        TransitionId { owner: Role::Leader, index }
    }

    pub fn contributor(index: usize) -> Self {
        TransitionId { owner: Role::Contributor, index }
    }

    pub fn is_leader(&self) -> bool {
        self.owner == Role::Leader
    }
}

impl fmt::Display for TransitionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.owner {
            Role::Leader => write!(f, "L{}", self.index),
            Role::Contributor => write!(f, "C{}", self.index),
        }
    }
}

impl FromStr for TransitionId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (owner, rest) = match s.as_bytes().first() {
            Some(b'L') => (Role::Leader, &s[1..]),
            Some(b'C') => (Role::Contributor, &s[1..]),
            _ => return Err(format!("bad transition id `{s}`")),
        };
        let index = rest
            .parse()
            .map_err(|_| format!("bad transition id `{s}`"))?;
        Ok(TransitionId { owner, index })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FsmTransition {
    pub src: StateId,
    pub action: Action,
    pub dst: StateId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fsm {
    pub values: Vec<String>,
    pub states: Vec<String>,
    pub initial: StateId,
    pub transitions: Vec<FsmTransition>,
    /// Present iff this is a Büchi automaton.
    pub accepting: Option<BTreeSet<StateId>>,
}

impl Fsm {
    pub fn is_accepting(&self, state: StateId) -> bool {
        self.accepting.as_ref().is_none_or(|f| f.contains(&state))
    }

    /// Does `word` label some path from the initial state?
    pub fn accepts_prefix(&self, word: &[Action]) -> bool {
        let mut cur = BTreeSet::from([self.initial]);
        for &a in word {
            cur = self.transitions.iter().filter(|t| t.action == a && cur.contains(&t.src)).map(|t| t.dst).collect();
        }
        !cur.is_empty()
    }

    /// Does the automaton accept `stem · cycle^ω`? Runs a reachability
    /// check on the product of the automaton with the positions of `cycle`.
    pub fn accepts_lasso(&self, stem: &[Action], cycle: &[Action]) -> bool {
        assert!(!cycle.is_empty(), "cycle must be nonempty");
        let step = |from: &BTreeSet<StateId>, a: Action| -> BTreeSet<StateId> {
            self.transitions
                .iter()
                .filter(|t| t.action == a && from.contains(&t.src))
                .map(|t| t.dst)
                .collect()
        };
        let mut cur = BTreeSet::from([self.initial]);
        for &a in stem {
            cur = step(&cur, a);
        }
        let m = cycle.len();
        let node = |q: StateId, i: usize| q * m + i;
        let succ = |v: usize| -> Vec<usize> {
            let (q, i) = (v / m, v % m);
            self.transitions
                .iter()
                .filter(|t| t.src == q && t.action == cycle[i])
                .map(|t| node(t.dst, (i + 1) % m))
                .collect()
        };
        let reach = |roots: Vec<usize>| -> BTreeSet<usize> {
            let mut seen = BTreeSet::new();
            let mut stack = roots;
            while let Some(v) = stack.pop() {
                if seen.insert(v) {
                    stack.extend(succ(v));
                }
            }
            seen
        };
        let reachable = reach(cur.iter().map(|&q| node(q, 0)).collect());
        reachable
            .iter()
            .filter(|&&v| self.is_accepting(v / m))
            .any(|&v| reach(succ(v)).contains(&v))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StackEffect {
    /// Push a symbol on top of the current top (which stays below it).
    Push(SymbolId),
    Pop,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PdmRule {
    pub src: StateId,
    pub action: Action,
    pub top: SymbolId,
    pub dst: StateId,
    pub effect: StackEffect,
}

impl PdmRule {
    /// Applies the stack effect to `stack` (top at the end). Returns false,
    /// leaving the stack untouched, when the rule is not enabled: wrong top,
    /// or a pop that would remove the bottom symbol.
    pub fn apply(&self, stack: &mut Vec<SymbolId>) -> bool {
        if stack.last() != Some(&self.top) {
            return false;
        }
        match self.effect {
            StackEffect::Push(g) => stack.push(g),
            StackEffect::Pop => {
                if stack.len() < 2 {
                    return false;
                }
                stack.pop();
            }
        }
        true
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pdm {
    pub values: Vec<String>,
    pub states: Vec<String>,
    /// Stack alphabet; index [`BOTTOM`] is the bottom symbol.
    pub stack: Vec<String>,
    pub initial: StateId,
    pub rules: Vec<PdmRule>,
    pub accepting: Option<BTreeSet<StateId>>,
}

impl Pdm {
    pub fn is_accepting(&self, state: StateId) -> bool {
        self.accepting.as_ref().is_none_or(|f| f.contains(&state))
    }

    /// Embeds an FSM as a PDM with the same ω-language.
    ///
    /// Both styles use a single extra stack symbol `tick`. Every FSM
    /// transition `i` becomes rules `2i` and `2i+1`; see [`LiftStyle`].
    pub fn from_fsm(fsm: &Fsm, style: LiftStyle) -> Pdm {
        const TICK: SymbolId = 1;
        let mut rules = Vec::with_capacity(fsm.transitions.len() * 2);
        for t in &fsm.transitions {
            let on_bottom = PdmRule {
                src: t.src,
                action: t.action,
                top: BOTTOM,
                dst: t.dst,
                effect: StackEffect::Push(TICK),
            };
            let on_tick = PdmRule {
                top: TICK,
                effect: match style {
                    LiftStyle::Alternating => StackEffect::Pop,
                    LiftStyle::PushOnly => StackEffect::Push(TICK),
                },
                ..on_bottom
            };
            rules.push(on_bottom);
            rules.push(on_tick);
        }
        Pdm {
            values: fsm.values.clone(),
            states: fsm.states.clone(),
            stack: vec!["bot".into(), "tick".into()],
            initial: fsm.initial,
            rules,
            accepting: fsm.accepting.clone(),
        }
    }
}

/// How [`Pdm::from_fsm`] simulates an FSM.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LiftStyle {
    /// Stack alternates between `bot` and `tick bot`.
    Alternating,
    /// Every step pushes `tick`; nothing is ever popped.
    PushOnly,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Machine {
    Fsm(Fsm),
    Pdm(Pdm),
}

impl Machine {
    pub fn values(&self) -> &[String] {
        match self {
            Machine::Fsm(m) => &m.values,
            Machine::Pdm(m) => &m.values,
        }
    }

    pub fn states(&self) -> &[String] {
        match self {
            Machine::Fsm(m) => &m.states,
            Machine::Pdm(m) => &m.states,
        }
    }

    pub fn initial(&self) -> StateId {
        match self {
            Machine::Fsm(m) => m.initial,
            Machine::Pdm(m) => m.initial,
        }
    }

    pub fn accepting(&self) -> Option<&BTreeSet<StateId>> {
        match self {
            Machine::Fsm(m) => m.accepting.as_ref(),
            Machine::Pdm(m) => m.accepting.as_ref(),
        }
    }

    pub fn is_accepting(&self, state: StateId) -> bool {
        match self {
            Machine::Fsm(m) => m.is_accepting(state),
            Machine::Pdm(m) => m.is_accepting(state),
        }
    }

    pub fn is_pdm(&self) -> bool {
        matches!(self, Machine::Pdm(_))
    }

    /// Number of transitions (FSM) or rules (PDM).
    pub fn transition_count(&self) -> usize {
        match self {
            Machine::Fsm(m) => m.transitions.len(),
            Machine::Pdm(m) => m.rules.len(),
        }
    }

    /// Source state, action and target state of transition or rule `i`.
    pub fn edge(&self, i: usize) -> (StateId, Action, StateId) {
        match self {
            Machine::Fsm(m) => {
                let t = &m.transitions[i];
                (t.src, t.action, t.dst)
            }
            Machine::Pdm(m) => {
                let r = &m.rules[i];
                (r.src, r.action, r.dst)
            }
        }
    }

    pub fn as_fsm(&self) -> Option<&Fsm> {
        match self {
            Machine::Fsm(m) => Some(m),
            Machine::Pdm(_) => None,
        }
    }

    pub fn as_pdm(&self) -> Option<&Pdm> {
        match self {
            Machine::Pdm(m) => Some(m),
            Machine::Fsm(_) => None,
        }
    }

    /// Rewrites value indices onto a larger value list that contains every
    /// value this machine declares.
    pub fn remap_values(&self, target: &[String]) -> Machine {
        let map: Vec<ValueId> = self
            .values()
            .iter()
            .map(|v| target.iter().position(|t| t == v).expect("value missing from target domain"))
            .collect();
        let remap = |a: Action| Action { kind: a.kind, value: map[a.value] };
        match self {
            Machine::Fsm(m) => Machine::Fsm(Fsm {
                values: target.to_vec(),
                transitions: m
                    .transitions
                    .iter()
                    .map(|t| FsmTransition { action: remap(t.action), ..*t })
                    .collect(),
                ..m.clone()
            }),
            Machine::Pdm(m) => Machine::Pdm(Pdm {
                values: target.to_vec(),
                rules: m.rules.iter().map(|r| PdmRule { action: remap(r.action), ..*r }).collect(),
                ..m.clone()
            }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
}

impl Diagnostic {
    fn error(message: impl Into<String>) -> Self {
        Diagnostic { severity: Severity::Error, message: message.into() }
    }

    fn warning(message: impl Into<String>) -> Self {
        Diagnostic { severity: Severity::Warning, message: message.into() }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{tag}: {}", self.message)
    }
}

/// Checks the well-formedness invariants of a machine. Never fails; an
/// empty list means the machine is valid. Values of the domain that no
/// action uses are reported as warnings.
pub fn validate(machine: &Machine) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let values = machine.values();
    let states = machine.states();
    if values.is_empty() {
        out.push(Diagnostic::error("value domain is empty"));
    }
    if states.is_empty() {
        out.push(Diagnostic::error("machine has no states"));
    }
    check_unique("value", values, &mut out);
    check_unique("state", states, &mut out);
    if machine.initial() >= states.len() {
        out.push(Diagnostic::error(format!("initial state #{} is not declared", machine.initial())));
    }
    if let Some(acc) = machine.accepting() {
        for &s in acc {
            if s >= states.len() {
                out.push(Diagnostic::error(format!("accepting state #{s} is not declared")));
            }
        }
    }
    let mut used = vec![false; values.len()];
    let mut check_edge = |i: usize, src: StateId, action: Action, dst: StateId, out: &mut Vec<Diagnostic>| {
        for (end, s) in [("source", src), ("target", dst)] {
            if s >= states.len() {
                out.push(Diagnostic::error(format!("transition {i}: {end} state #{s} is not declared")));
            }
        }
        match used.get_mut(action.value) {
            Some(u) => *u = true,
            None => out.push(Diagnostic::error(format!(
                "transition {i}: value #{} is not in the value domain",
                action.value
            ))),
        }
    };
    match machine {
        Machine::Fsm(m) => {
            for (i, t) in m.transitions.iter().enumerate() {
                check_edge(i, t.src, t.action, t.dst, &mut out);
            }
        }
        Machine::Pdm(m) => {
            if m.stack.is_empty() {
                out.push(Diagnostic::error("stack alphabet must contain the bottom symbol"));
            }
            check_unique("stack symbol", &m.stack, &mut out);
            for (i, r) in m.rules.iter().enumerate() {
                check_edge(i, r.src, r.action, r.dst, &mut out);
                if r.top >= m.stack.len() {
                    out.push(Diagnostic::error(format!("rule {i}: stack symbol #{} is not declared", r.top)));
                }
                match r.effect {
                    StackEffect::Push(BOTTOM) => {
                        out.push(Diagnostic::error(format!("rule {i}: the bottom symbol cannot be pushed")))
                    }
                    StackEffect::Push(g) if g >= m.stack.len() => {
                        out.push(Diagnostic::error(format!("rule {i}: stack symbol #{g} is not declared")))
                    }
                    StackEffect::Pop if r.top == BOTTOM => out.push(Diagnostic::warning(format!(
                        "rule {i} pops the bottom symbol and can never fire"
                    ))),
                    _ => {}
                }
            }
        }
    }
    for (v, u) in values.iter().zip(&used) {
        if !u {
            out.push(Diagnostic::warning(format!("value {v} unused")));
        }
    }
    out
}

fn check_unique(what: &str, names: &[String], out: &mut Vec<Diagnostic>) {
    let mut seen = BTreeSet::new();
    for n in names {
        if !seen.insert(n) {
            out.push(Diagnostic::error(format!("duplicate {what} `{n}`")));
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProductError {
    #[error("property and leader are over different value domains")]
    AlphabetMismatch,
    #[error("property automaton has no accepting set")]
    NotBuchi,
}

/// Synchronous product of a Büchi property `a` with a leader `d` over the
/// leader alphabet. The product state is accepting iff the property
/// component is accepting; when `d` carries its own Büchi set a phase bit
/// is added and acceptance additionally requires phase 0, so that both
/// acceptance sets must be visited infinitely often.
pub fn buchi_product(a: &Fsm, d: &Machine) -> Result<Machine, ProductError> {
    let f_a = a.accepting.as_ref().ok_or(ProductError::NotBuchi)?;
    if a.values != d.values() {
        return Err(ProductError::AlphabetMismatch);
    }
    let nd = d.states().len();
    let phased = d.accepting().is_some();
    let phases = if phased { 2 } else { 1 };
    let index = |qa: StateId, qd: StateId, ph: usize| (qa * nd + qd) * phases + ph;
    let next_phase = |qa: StateId, qd: StateId, ph: usize| -> usize {
        if !phased {
            0
        } else if ph == 0 && f_a.contains(&qa) {
            1
        } else if ph == 1 && d.is_accepting(qd) {
            0
        } else {
            ph
        }
    };

    let mut states = Vec::with_capacity(a.states.len() * nd * phases);
    let mut accepting = BTreeSet::new();
    for (qa, na) in a.states.iter().enumerate() {
        for ndn in d.states() {
            for ph in 0..phases {
                let name = if phased { format!("{na}|{ndn}|{ph}") } else { format!("{na}|{ndn}") };
                if f_a.contains(&qa) && ph == 0 {
                    accepting.insert(states.len());
                }
                states.push(name);
            }
        }
    }
    let initial = index(a.initial, d.initial(), 0);

    match d {
        Machine::Fsm(dm) => {
            let mut transitions = Vec::new();
            for ta in &a.transitions {
                for td in dm.transitions.iter().filter(|t| t.action == ta.action) {
                    for ph in 0..phases {
                        transitions.push(FsmTransition {
                            src: index(ta.src, td.src, ph),
                            action: ta.action,
                            dst: index(ta.dst, td.dst, next_phase(ta.src, td.src, ph)),
                        });
                    }
                }
            }
            Ok(Machine::Fsm(Fsm {
                values: a.values.clone(),
                states,
                initial,
                transitions,
                accepting: Some(accepting),
            }))
        }
        Machine::Pdm(dm) => {
            let mut rules = Vec::new();
            for ta in &a.transitions {
                for rd in dm.rules.iter().filter(|r| r.action == ta.action) {
                    for ph in 0..phases {
                        rules.push(PdmRule {
                            src: index(ta.src, rd.src, ph),
                            action: ta.action,
                            top: rd.top,
                            dst: index(ta.dst, rd.dst, next_phase(ta.src, rd.src, ph)),
                            effect: rd.effect,
                        });
                    }
                }
            }
            Ok(Machine::Pdm(Pdm {
                values: a.values.clone(),
                states,
                stack: dm.stack.clone(),
                initial,
                rules,
                accepting: Some(accepting),
            }))
        }
    }
}

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("{role} machine is invalid: {first}")]
    Invalid { role: &'static str, first: Diagnostic, all: Vec<Diagnostic> },
    #[error("leader has no accepting set; multiply in a property first")]
    LeaderNotBuchi,
    #[error("leader and contributor are over different value domains")]
    AlphabetMismatch,
}

/// A validated (leader, contributor) pair sharing one value domain. The
/// leader is a Büchi machine; the contributor's accepting set, if any, is
/// ignored.
#[derive(Clone, Debug)]
pub struct Network {
    leader: Machine,
    contributor: Machine,
    leader_out: Vec<Vec<usize>>,
    contributor_out: Vec<Vec<usize>>,
}

impl Network {
    pub fn new(leader: Machine, contributor: Machine) -> Result<Network, NetworkError> {
        for (role, m) in [("leader", &leader), ("contributor", &contributor)] {
            let diags = validate(m);
            if let Some(first) = diags.iter().find(|d| d.is_error()) {
                return Err(NetworkError::Invalid { role, first: first.clone(), all: diags });
            }
        }
        if leader.accepting().is_none() {
            return Err(NetworkError::LeaderNotBuchi);
        }
        if leader.values() != contributor.values() {
            return Err(NetworkError::AlphabetMismatch);
        }
        let leader_out = adjacency(&leader);
        let contributor_out = adjacency(&contributor);
        Ok(Network { leader, contributor, leader_out, contributor_out })
    }

    /// Builds `property × leader` and pairs it with the contributor, first
    /// moving all three machines onto the union of their value domains.
    pub fn from_parts(property: &Fsm, leader: &Machine, contributor: &Machine) -> Result<Network, BuildError> {
        let mut values: Vec<String> = Vec::new();
        for v in leader
            .values()
            .iter()
            .chain(contributor.values())
            .chain(&property.values)
        {
            if !values.contains(v) {
                values.push(v.clone());
            }
        }
        let property = match Machine::Fsm(property.clone()).remap_values(&values) {
            Machine::Fsm(f) => f,
            Machine::Pdm(_) => unreachable!(),
        };
        let leader = leader.remap_values(&values);
        let contributor = contributor.remap_values(&values);
        let product = buchi_product(&property, &leader)?;
        Ok(Network::new(product, contributor)?)
    }

    pub fn values(&self) -> &[String] {
        self.leader.values()
    }

    pub fn leader(&self) -> &Machine {
        &self.leader
    }

    pub fn contributor(&self) -> &Machine {
        &self.contributor
    }

    pub fn machine(&self, role: Role) -> &Machine {
        match role {
            Role::Leader => &self.leader,
            Role::Contributor => &self.contributor,
        }
    }

    /// Indices of transitions (or rules) leaving `state`, ascending.
    pub fn outgoing(&self, role: Role, state: StateId) -> &[usize] {
        match role {
            Role::Leader => &self.leader_out[state],
            Role::Contributor => &self.contributor_out[state],
        }
    }

    pub fn action(&self, t: TransitionId) -> Action {
        self.machine(t.owner).edge(t.index).1
    }

    pub fn transition_count(&self, role: Role) -> usize {
        self.machine(role).transition_count()
    }

    /// Source and target contributor states of a contributor transition.
    pub fn contributor_edge(&self, index: usize) -> (StateId, StateId) {
        let (s, _, d) = self.contributor.edge(index);
        (s, d)
    }

    pub fn contributor_states(&self) -> usize {
        self.contributor.states().len()
    }
}

#[derive(Debug, Error)]
pub enum BuildError {
    #[error(transparent)]
    Product(#[from] ProductError),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

fn adjacency(m: &Machine) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); m.states().len()];
    for i in 0..m.transition_count() {
        out[m.edge(i).0].push(i);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn fig1_leader_is_clean() {
        let d = fixtures::fig1_leader();
        assert!(validate(&Machine::Fsm(d)).is_empty());
    }

    #[test]
    fn undeclared_state_is_an_error() {
        let mut d = fixtures::fig1_leader();
        d.transitions[0].dst = 17;
        let diags = validate(&Machine::Fsm(d));
        assert!(diags.iter().any(|d| d.is_error() && d.message.contains("#17")));
    }

    #[test]
    fn unused_value_is_a_warning() {
        let m = Fsm {
            values: vec!["1".into(), "2".into()],
            states: vec!["q".into()],
            initial: 0,
            transitions: vec![FsmTransition { src: 0, action: Action::write(0), dst: 0 }],
            accepting: None,
        };
        let diags = validate(&Machine::Fsm(m));
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].severity, Severity::Warning);
        assert_eq!(diags[0].message, "value 2 unused");
    }

    #[test]
    fn pushing_bottom_is_an_error() {
        let m = Pdm {
            values: vec!["1".into()],
            states: vec!["q".into()],
            stack: vec!["bot".into(), "A".into()],
            initial: 0,
            rules: vec![PdmRule {
                src: 0,
                action: Action::write(0),
                top: 1,
                dst: 0,
                effect: StackEffect::Push(BOTTOM),
            }],
            accepting: None,
        };
        assert!(validate(&Machine::Pdm(m)).iter().any(Diagnostic::is_error));
    }

    #[test]
    fn universal_property_gives_leader_back() {
        let d = fixtures::fig1_leader();
        let a = fixtures::universal_property(&d.values);
        let Machine::Fsm(p) = buchi_product(&a, &Machine::Fsm(d.clone())).unwrap() else { panic!() };
        assert_eq!(p.states.len(), d.states.len());
        assert_eq!(p.transitions.len(), d.transitions.len());
        assert_eq!(p.accepting.as_ref().unwrap().len(), d.states.len());
    }

    #[test]
    fn infinitely_many_r1_product_has_six_states() {
        let d = fixtures::fig1_leader();
        let a = fixtures::infinitely_often_read(&d.values, 0);
        let Machine::Fsm(p) = buchi_product(&a, &Machine::Fsm(d)).unwrap() else { panic!() };
        assert_eq!(p.states.len(), 6);
        assert_eq!(p.transitions.len(), 6);
        // the only run reads 1,2,3 forever and is accepted
        let word = [Action::read(0), Action::read(1), Action::read(2)];
        assert!(p.accepts_lasso(&[], &word));
    }

    #[test]
    fn empty_accepting_set_is_preserved() {
        let d = fixtures::fig1_leader();
        let mut a = fixtures::universal_property(&d.values);
        a.accepting = Some(BTreeSet::new());
        let p = buchi_product(&a, &Machine::Fsm(d)).unwrap();
        assert!(p.accepting().unwrap().is_empty());
    }

    #[test]
    fn product_rejects_other_domains() {
        let d = fixtures::fig1_leader();
        let a = fixtures::universal_property(&["x".to_string()]);
        assert_eq!(buchi_product(&a, &Machine::Fsm(d)), Err(ProductError::AlphabetMismatch));
    }

    #[test]
    fn transition_id_round_trips() {
        for t in [TransitionId::leader(0), TransitionId::contributor(12)] {
            assert_eq!(t.to_string().parse::<TransitionId>().unwrap(), t);
        }
        assert!("X3".parse::<TransitionId>().is_err());
        assert!(TransitionId::leader(9) < TransitionId::contributor(0));
    }

    #[test]
    fn pop_never_removes_bottom() {
        let r = PdmRule { src: 0, action: Action::read(0), top: BOTTOM, dst: 0, effect: StackEffect::Pop };
        let mut stack = vec![BOTTOM];
        assert!(!r.apply(&mut stack));
        assert_eq!(stack, vec![BOTTOM]);
    }
}
