//! PDM leaders with FSM contributors: saturation-based reachability over
//! an abstract pushdown system, loop automata for accepting cycles that
//! never pop their first symbol, and the decision procedure built on
//! them.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::hash::Hash;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use crate::abstraction::{contributor_moves, AbstractConfig, StateSet};
use crate::cycle::{add_realizability, expand_stem, letter, letter_transition};
use crate::explicit::{assign_fsm_actors, replay, Outcome, Verdict};
use crate::machines::{Network, Pdm, Role, StackEffect, StateId, SymbolId, TransitionId, ValueId, BOTTOM};
use crate::par;
use crate::parikh::cfg::derive;
use crate::parikh::{parikh_cfg, solve, Grammar, Production, Solution, Symbol};
use crate::{BudgetExceeded, Options};

/// Stack effect of a move on the top symbol `γ`: remove it, keep it, or
/// push a symbol above it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Effect {
    Pop,
    Keep,
    Push(SymbolId),
}

pub trait PushdownSystem {
    type Control: Clone + Eq + Hash;

    /// Moves from control `c` with `top` on the stack, in a fixed order.
    fn moves(&self, c: &Self::Control, top: SymbolId) -> Vec<(TransitionId, Self::Control, Effect)>;
}

fn rule_effect(e: StackEffect) -> Effect {
    match e {
        StackEffect::Push(g) => Effect::Push(g),
        StackEffect::Pop => Effect::Pop,
    }
}

/// A PDM read as a plain pushdown system: actions are ignored and rules
/// are labelled as leader transitions.
impl PushdownSystem for Pdm {
    type Control = StateId;

    fn moves(&self, c: &StateId, top: SymbolId) -> Vec<(TransitionId, StateId, Effect)> {
        self.rules
            .iter()
            .enumerate()
            .filter(|(_, r)| r.src == *c && r.top == top && !(r.effect == StackEffect::Pop && top == BOTTOM))
            .map(|(i, r)| (TransitionId::leader(i), r.dst, rule_effect(r.effect)))
            .collect()
    }
}

/// Pushdown system whose controls are abstract configurations and whose
/// stack is the leader's. Contributor moves leave the stack alone.
pub struct AbstractPdm<'a> {
    pub net: &'a Network,
}

impl PushdownSystem for AbstractPdm<'_> {
    type Control = AbstractConfig;

    fn moves(&self, c: &AbstractConfig, top: SymbolId) -> Vec<(TransitionId, AbstractConfig, Effect)> {
        let pdm = self.net.leader().as_pdm().expect("leader is a PDM");
        let mut out = Vec::new();
        for &i in self.net.outgoing(Role::Leader, c.leader) {
            let r = &pdm.rules[i];
            if r.top != top || (r.effect == StackEffect::Pop && top == BOTTOM) {
                continue;
            }
            if let Some(g) = r.action.fire(c.store) {
                let next = AbstractConfig { leader: r.dst, store: g, set: c.set.clone() };
                out.push((TransitionId::leader(i), next, rule_effect(r.effect)));
            }
        }
        for (i, g, set) in contributor_moves(self.net, c.store, &c.set) {
            out.push((TransitionId::contributor(i), AbstractConfig { leader: c.leader, store: g, set }, Effect::Keep));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Node {
    Control(u32),
    Mid(u32, SymbolId),
    Final,
}

type Edge = (u32, Option<SymbolId>, u32);

/// Automaton recognizing the reachable configurations of a pushdown
/// system, built by post* saturation from one initial configuration with
/// stack `⊥`. Controls are discovered on the fly.
pub struct Saturation<C> {
    pub controls: Vec<C>,
    index: HashMap<C, u32>,
    nodes: Vec<Node>,
    node_index: HashMap<Node, u32>,
    rel: HashSet<Edge>,
    out: Vec<Vec<(Option<SymbolId>, u32)>>,
    eps_into: HashMap<u32, Vec<u32>>,
    heads: Vec<(u32, SymbolId)>,
    head_set: HashSet<(u32, SymbolId)>,
    initial: u32,
}

impl<C: Clone + Eq + Hash> Saturation<C> {
    fn node(&mut self, n: Node) -> u32 {
        if let Some(&i) = self.node_index.get(&n) {
            return i;
        }
        let i = self.nodes.len() as u32;
        self.nodes.push(n);
        self.node_index.insert(n, i);
        self.out.push(Vec::new());
        i
    }

    fn control(&mut self, c: C, cap: usize) -> Result<u32, BudgetExceeded> {
        let ci = match self.index.get(&c) {
            Some(&ci) => ci,
            None => {
                if self.controls.len() >= cap {
                    return Err(BudgetExceeded::Configs(cap));
                }
                let ci = self.controls.len() as u32;
                self.controls.push(c.clone());
                self.index.insert(c, ci);
                ci
            }
        };
        Ok(self.node(Node::Control(ci)))
    }

    fn insert(&mut self, e: Edge) -> bool {
        if !self.rel.insert(e) {
            return false;
        }
        self.out[e.0 as usize].push((e.1, e.2));
        if let (Node::Control(c), Some(g)) = (self.nodes[e.0 as usize], e.1) {
            if self.head_set.insert((c, g)) {
                self.heads.push((c, g));
            }
        }
        true
    }

    /// Pairs `(control, top)` heading some reachable configuration, in
    /// discovery order. Controls index [`Saturation::controls`].
    pub fn heads(&self) -> &[(u32, SymbolId)] {
        &self.heads
    }

    pub fn initial_control(&self) -> &C {
        &self.controls[self.initial as usize]
    }

    pub fn transition_count(&self) -> usize {
        self.rel.len()
    }

    /// Is `(c, stack)` reachable? `stack` is listed top first.
    pub fn accepts(&self, c: &C, stack: &[SymbolId]) -> bool {
        let Some(&ci) = self.index.get(c) else { return false };
        let start = self.node_index[&Node::Control(ci)];
        let close = |set: &mut Vec<u32>| {
            let mut i = 0;
            while i < set.len() {
                for &(g, d) in &self.out[set[i] as usize] {
                    if g.is_none() && !set.contains(&d) {
                        set.push(d);
                    }
                }
                i += 1;
            }
        };
        let mut cur = vec![start];
        close(&mut cur);
        for &s in stack {
            let mut next = Vec::new();
            for &v in &cur {
                for &(g, d) in &self.out[v as usize] {
                    if g == Some(s) && !next.contains(&d) {
                        next.push(d);
                    }
                }
            }
            close(&mut next);
            cur = next;
        }
        let f = self.node_index.get(&Node::Final);
        cur.iter().any(|v| Some(v) == f)
    }

    /// Checks that every saturation rule is already satisfied, i.e. that a
    /// further round would add nothing.
    pub fn is_closed<S: PushdownSystem<Control = C>>(&self, sys: &S) -> bool {
        let has = |e: Edge| self.rel.contains(&e);
        let ctrl = |c: &C| self.index.get(c).and_then(|&ci| self.node_index.get(&Node::Control(ci))).copied();
        for &(p, g, q) in &self.rel {
            match (self.nodes[p as usize], g) {
                (Node::Control(ci), Some(g)) => {
                    for (_, c2, eff) in sys.moves(&self.controls[ci as usize], g) {
                        let Some(p2) = ctrl(&c2) else { return false };
                        let ok = match eff {
                            Effect::Pop => has((p2, None, q)),
                            Effect::Keep => has((p2, Some(g), q)),
                            Effect::Push(g2) => {
                                let ci2 = self.index[&c2];
                                match self.node_index.get(&Node::Mid(ci2, g2)) {
                                    Some(&m) => has((p2, Some(g2), m)) && has((m, Some(g), q)),
                                    None => false,
                                }
                            }
                        };
                        if !ok {
                            return false;
                        }
                    }
                }
                (_, None) => {
                    for &(g2, q2) in &self.out[q as usize] {
                        if g2.is_some() && !has((p, g2, q2)) {
                            return false;
                        }
                    }
                }
                _ => {}
            }
        }
        true
    }
}

/// post* saturation from `(init, ⊥)`. Fails once more than `cap` controls
/// are discovered.
pub fn post_star<S: PushdownSystem>(sys: &S, init: S::Control, cap: usize) -> Result<Saturation<S::Control>, BudgetExceeded> {
    let mut s = Saturation {
        controls: Vec::new(),
        index: HashMap::new(),
        nodes: Vec::new(),
        node_index: HashMap::new(),
        rel: HashSet::new(),
        out: Vec::new(),
        eps_into: HashMap::new(),
        heads: Vec::new(),
        head_set: HashSet::new(),
        initial: 0,
    };
    let p0 = s.control(init, cap)?;
    let f = s.node(Node::Final);
    let mut trans: VecDeque<Edge> = VecDeque::from([(p0, Some(BOTTOM), f)]);
    while let Some(t) = trans.pop_front() {
        if !s.insert(t) {
            continue;
        }
        let (p, g, q) = t;
        match g {
            Some(g) => {
                let Node::Control(ci) = s.nodes[p as usize] else { unreachable!("worklist edges start at controls") };
                let c = s.controls[ci as usize].clone();
                for (_, c2, eff) in sys.moves(&c, g) {
                    let p2 = s.control(c2, cap)?;
                    match eff {
                        Effect::Pop => trans.push_back((p2, None, q)),
                        Effect::Keep => trans.push_back((p2, Some(g), q)),
                        Effect::Push(g2) => {
                            let Node::Control(ci2) = s.nodes[p2 as usize] else { unreachable!() };
                            let m = s.node(Node::Mid(ci2, g2));
                            trans.push_back((p2, Some(g2), m));
                            if s.insert((m, Some(g), q)) {
                                for &p3 in s.eps_into.get(&m).map(Vec::as_slice).unwrap_or(&[]) {
                                    trans.push_back((p3, Some(g), q));
                                }
                            }
                        }
                    }
                }
            }
            None => {
                for &(g2, q2) in &s.out[q as usize] {
                    if g2.is_some() {
                        trans.push_back((p, g2, q2));
                    }
                }
                if matches!(s.nodes[q as usize], Node::Mid(..)) {
                    s.eps_into.entry(q).or_default().push(p);
                }
            }
        }
    }
    Ok(s)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PdaRule {
    pub src: usize,
    pub top: SymbolId,
    pub letter: usize,
    pub dst: usize,
    pub effect: Effect,
}

/// Finite-word pushdown automaton. Its words label runs from control
/// `start` with `pivot` on top to control `accept` with `pivot` on top,
/// never popping the starting `pivot`.
#[derive(Clone, Debug)]
pub struct Pda {
    pub controls: usize,
    pub symbols: usize,
    pub letters: usize,
    pub start: usize,
    pub pivot: SymbolId,
    pub accept: Option<usize>,
    pub rules: Vec<PdaRule>,
}

/// Control of a loop automaton: leader state and store, with the
/// contributor set fixed, plus whether an accepting leader state was seen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LoopControl {
    pub leader: StateId,
    pub store: Option<ValueId>,
    pub seen: bool,
}

/// Loop automaton at `(q, γ)`: runs from `q` with `γ` on top back to the
/// leader state and store of `q` with `γ` on top, never popping the first
/// `γ` and passing an accepting leader state. Contributor moves are those
/// that keep the contributor set of `q`. Letters follow [`letter`].
pub fn build_loop_pda(net: &Network, q: &AbstractConfig, gamma: SymbolId) -> (Pda, Vec<LoopControl>) {
    let pdm = net.leader().as_pdm().expect("leader is a PDM");
    let symbols = pdm.stack.len();
    let acc = |s: StateId| net.leader().is_accepting(s);
    let start = LoopControl { leader: q.leader, store: q.store, seen: acc(q.leader) };
    let mut controls = vec![start];
    let mut index = HashMap::from([(start, 0usize)]);
    let mut rules = Vec::new();
    let mut i = 0;
    while i < controls.len() {
        let x = controls[i];
        let mut add = |dst: LoopControl, controls: &mut Vec<LoopControl>| -> usize {
            *index.entry(dst).or_insert_with(|| {
                controls.push(dst);
                controls.len() - 1
            })
        };
        for &r in net.outgoing(Role::Leader, x.leader) {
            let rule = &pdm.rules[r];
            if rule.effect == StackEffect::Pop && rule.top == BOTTOM {
                continue;
            }
            if let Some(g) = rule.action.fire(x.store) {
                let dst = LoopControl { leader: rule.dst, store: g, seen: x.seen || acc(rule.dst) };
                let d = add(dst, &mut controls);
                rules.push(PdaRule {
                    src: i,
                    top: rule.top,
                    letter: letter(net, TransitionId::leader(r)),
                    dst: d,
                    effect: rule_effect(rule.effect),
                });
            }
        }
        for (c, g, set) in contributor_moves(net, x.store, &q.set) {
            if set != q.set {
                continue;
            }
            let d = add(LoopControl { store: g, ..x }, &mut controls);
            for top in 0..symbols {
                rules.push(PdaRule {
                    src: i,
                    top,
                    letter: letter(net, TransitionId::contributor(c)),
                    dst: d,
                    effect: Effect::Keep,
                });
            }
        }
        i += 1;
    }
    let accept = index.get(&LoopControl { leader: q.leader, store: q.store, seen: true }).copied();
    let letters = net.transition_count(Role::Leader) + net.transition_count(Role::Contributor);
    let pda = Pda { controls: controls.len(), symbols, letters, start: 0, pivot: gamma, accept, rules };
    (pda, controls)
}

/// Grammar with the same language as `pda`. Nonterminal `S(x, σ, y)`
/// derives the words of runs from `x` with `σ` on top that end by popping
/// that `σ` in `y`; `L(x, σ)` derives the words of runs from `x` with `σ`
/// on top that reach acceptance without popping `σ`. Only productive
/// summaries are generated.
pub fn pda_to_cfg(pda: &Pda) -> Grammar {
    let mut pops: HashMap<(usize, SymbolId), Vec<&PdaRule>> = HashMap::new();
    let mut keeps_by_dst: HashMap<(usize, SymbolId), Vec<&PdaRule>> = HashMap::new();
    let mut pushes_by_dst: HashMap<(usize, SymbolId), Vec<&PdaRule>> = HashMap::new();
    let mut pushes_by_top: HashMap<SymbolId, Vec<&PdaRule>> = HashMap::new();
    let mut by_src: HashMap<(usize, SymbolId), Vec<&PdaRule>> = HashMap::new();
    for r in &pda.rules {
        by_src.entry((r.src, r.top)).or_default().push(r);
        match r.effect {
            Effect::Pop => pops.entry((r.src, r.top)).or_default().push(r),
            Effect::Keep => keeps_by_dst.entry((r.dst, r.top)).or_default().push(r),
            Effect::Push(s) => {
                pushes_by_dst.entry((r.dst, s)).or_default().push(r);
                pushes_by_top.entry(r.top).or_default().push(r);
            }
        }
    }

    // productive summaries by worklist
    let mut sum: HashSet<(usize, SymbolId, usize)> = HashSet::new();
    let mut by_first: HashMap<(usize, SymbolId), Vec<usize>> = HashMap::new();
    let mut work: Vec<(usize, SymbolId, usize)> = Vec::new();
    for r in &pda.rules {
        if r.effect == Effect::Pop {
            work.push((r.src, r.top, r.dst));
        }
    }
    while let Some(t) = work.pop() {
        if !sum.insert(t) {
            continue;
        }
        let (a, s, c) = t;
        by_first.entry((a, s)).or_default().push(c);
        for r in keeps_by_dst.get(&(a, s)).into_iter().flatten() {
            work.push((r.src, s, c));
        }
        // t as the inner summary of a push
        for r in pushes_by_dst.get(&(a, s)).into_iter().flatten() {
            for &y in by_first.get(&(c, r.top)).into_iter().flatten() {
                work.push((r.src, r.top, y));
            }
        }
        // t as the outer summary: S(x1, σ', a) must already hold
        for r in pushes_by_top.get(&s).into_iter().flatten() {
            let Effect::Push(inner) = r.effect else { unreachable!() };
            if sum.contains(&(r.dst, inner, a)) {
                work.push((r.src, s, c));
            }
        }
    }

    let mut nts: HashMap<(bool, usize, SymbolId, usize), usize> = HashMap::new();
    let mut order: Vec<(bool, usize, SymbolId, usize)> = Vec::new();
    let mut intern = |k: (bool, usize, SymbolId, usize), order: &mut Vec<_>| -> usize {
        *nts.entry(k).or_insert_with(|| {
            order.push(k);
            order.len() - 1
        })
    };
    let l_key = |x: usize, s: SymbolId| (true, x, s, 0);
    let s_key = |x: usize, s: SymbolId, y: usize| (false, x, s, y);
    let start = intern(l_key(pda.start, pda.pivot), &mut order);
    let mut productions = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let (is_l, x, s, y) = order[i];
        let lhs = i;
        i += 1;
        let rules = by_src.get(&(x, s)).map(Vec::as_slice).unwrap_or(&[]);
        if is_l {
            if pda.accept == Some(x) && s == pda.pivot {
                productions.push(Production { lhs, rhs: vec![] });
            }
            for r in rules {
                match r.effect {
                    Effect::Pop => {}
                    Effect::Keep => {
                        let n = intern(l_key(r.dst, s), &mut order);
                        productions.push(Production { lhs, rhs: vec![Symbol::T(r.letter), Symbol::N(n)] });
                    }
                    Effect::Push(inner) => {
                        let n = intern(l_key(r.dst, inner), &mut order);
                        productions.push(Production { lhs, rhs: vec![Symbol::T(r.letter), Symbol::N(n)] });
                        for &z in by_first.get(&(r.dst, inner)).into_iter().flatten() {
                            let a = intern(s_key(r.dst, inner, z), &mut order);
                            let b = intern(l_key(z, s), &mut order);
                            productions.push(Production { lhs, rhs: vec![Symbol::T(r.letter), Symbol::N(a), Symbol::N(b)] });
                        }
                    }
                }
            }
        } else {
            for r in rules {
                match r.effect {
                    Effect::Pop => {
                        if r.dst == y {
                            productions.push(Production { lhs, rhs: vec![Symbol::T(r.letter)] });
                        }
                    }
                    Effect::Keep => {
                        if sum.contains(&(r.dst, s, y)) {
                            let n = intern(s_key(r.dst, s, y), &mut order);
                            productions.push(Production { lhs, rhs: vec![Symbol::T(r.letter), Symbol::N(n)] });
                        }
                    }
                    Effect::Push(inner) => {
                        for &z in by_first.get(&(r.dst, inner)).into_iter().flatten() {
                            if sum.contains(&(z, s, y)) {
                                let a = intern(s_key(r.dst, inner, z), &mut order);
                                let b = intern(s_key(z, s, y), &mut order);
                                productions.push(Production { lhs, rhs: vec![Symbol::T(r.letter), Symbol::N(a), Symbol::N(b)] });
                            }
                        }
                    }
                }
            }
        }
    }
    Grammar { nonterminals: order.len(), terminals: pda.letters, start, productions }
}

/// Shortest path of the abstract pushdown system from its initial
/// configuration to control `target` with `top` on the stack, found by
/// breadth-first search over controls with full stacks.
fn stem_to<S: PushdownSystem>(
    sys: &S,
    init: S::Control,
    target: &S::Control,
    top: SymbolId,
    cap: usize,
) -> Result<Option<Vec<TransitionId>>, BudgetExceeded> {
    type Cfg<C> = (C, Vec<SymbolId>);
    type Node<C> = (Cfg<C>, Option<(usize, TransitionId)>);
    let root: Cfg<S::Control> = (init, vec![BOTTOM]);
    let mut seen: HashMap<Cfg<S::Control>, usize> = HashMap::new();
    let mut nodes: Vec<Node<S::Control>> = vec![(root.clone(), None)];
    seen.insert(root, 0);
    let mut i = 0;
    while i < nodes.len() {
        let (c, stack) = nodes[i].0.clone();
        let g = *stack.last().expect("bottom is never popped");
        if &c == target && g == top {
            let mut path = Vec::new();
            let mut v = i;
            while let Some((p, t)) = nodes[v].1 {
                path.push(t);
                v = p;
            }
            path.reverse();
            return Ok(Some(path));
        }
        for (t, c2, eff) in sys.moves(&c, g) {
            let mut s2 = stack.clone();
            match eff {
                Effect::Pop => {
                    s2.pop();
                }
                Effect::Keep => {}
                Effect::Push(x) => s2.push(x),
            }
            let key = (c2, s2);
            if !seen.contains_key(&key) {
                if nodes.len() >= cap {
                    return Err(BudgetExceeded::Configs(cap));
                }
                seen.insert(key.clone(), nodes.len());
                nodes.push((key, Some((i, t))));
            }
        }
        i += 1;
    }
    Ok(None)
}

/// Outcome of checking one `(q, γ)` candidate: the cycle as a transition
/// sequence.
fn loop_candidate(net: &Network, q: &AbstractConfig, gamma: SymbolId, opts: &Options) -> Result<Option<Vec<TransitionId>>, BudgetExceeded> {
    let (pda, _) = build_loop_pda(net, q, gamma);
    if pda.accept.is_none() {
        return Ok(None);
    }
    let g = pda_to_cfg(&pda);
    let mut p = parikh_cfg(&g);
    add_realizability(net, &mut p.system, &p.terminals);
    match solve(&p.system, opts.budget.max_solver_nodes) {
        Solution::Sat(x) => {
            let counts = p.production_counts(&g, &x);
            let word = derive(&g, &counts, opts.budget.max_solver_nodes.max(100_000))
                .expect("production counts from a feasible Parikh system are derivable");
            Ok(Some(word.into_iter().map(|l| letter_transition(net, l)).collect()))
        }
        Solution::Unsat => Ok(None),
        Solution::Budget(e) => Err(e),
    }
}

/// Decides non-emptiness for a PDM leader and an FSM contributor.
pub fn check_pdm_fsm(net: &Network, opts: &Options) -> Outcome {
    assert!(net.leader().is_pdm() && !net.contributor().is_pdm(), "check_pdm_fsm needs a PDM leader and FSM contributor");
    let mut stats = BTreeMap::new();
    let sys = AbstractPdm { net };
    let init = AbstractConfig::initial(net);
    let sat = match post_star(&sys, init.clone(), opts.budget.max_configs) {
        Ok(s) => s,
        Err(e) => return Outcome { verdict: Verdict::Budget(e), stats },
    };
    stats.insert("abstract_controls", sat.controls.len() as u64);
    stats.insert("saturation_edges", sat.transition_count() as u64);

    // candidates grouped by contributor set, in discovery order
    let mut groups: Vec<(StateSet, Vec<(u32, SymbolId)>)> = Vec::new();
    let mut group_of: HashMap<StateSet, usize> = HashMap::new();
    for &(c, g) in sat.heads() {
        let set = &sat.controls[c as usize].set;
        let gi = *group_of.entry(set.clone()).or_insert_with(|| {
            groups.push((set.clone(), Vec::new()));
            groups.len() - 1
        });
        groups[gi].1.push((c, g));
    }
    stats.insert("candidates", sat.heads().len() as u64);
    let over_budget = AtomicBool::new(false);
    let solver_calls = AtomicU64::new(0);
    let found = par::find_first(opts.parallelism, &groups, |_, (_, cands)| {
        for &(c, g) in cands {
            solver_calls.fetch_add(1, Ordering::Relaxed);
            match loop_candidate(net, &sat.controls[c as usize], g, opts) {
                Ok(Some(cycle)) => return Some((c, g, cycle)),
                Ok(None) => {}
                Err(_) => over_budget.store(true, Ordering::Relaxed),
            }
        }
        None
    });
    stats.insert("solver_calls", solver_calls.load(Ordering::Relaxed));
    let Some((_, (c, gamma, cycle))) = found else {
        let verdict = if over_budget.load(Ordering::Relaxed) {
            Verdict::Budget(BudgetExceeded::Solver(opts.budget.max_solver_nodes))
        } else {
            Verdict::Empty
        };
        return Outcome { verdict, stats };
    };
    let q = sat.controls[c as usize].clone();
    let stem = match stem_to(&sys, init, &q, gamma, opts.budget.max_configs) {
        Ok(Some(s)) => s,
        Ok(None) => unreachable!("saturation reported a head the search cannot reach"),
        Err(e) => return Outcome { verdict: Verdict::Budget(e), stats },
    };
    for attempt in 0..4 {
        let n = cycle.len() as u64 * (1 << attempt);
        let (k, long_stem) = expand_stem(net, &stem, q.set.iter(), n);
        let Some(mut w) = assign_fsm_actors(net, k, &long_stem, &cycle) else { continue };
        w.pivot = Some((q.leader, gamma));
        if replay(net, &w).is_ok() {
            stats.insert("k", w.k as u64);
            stats.insert("cycle_length", w.cycle.len() as u64);
            return Outcome { verdict: Verdict::Nonempty(Box::new(w)), stats };
        }
    }
    panic!("feasible loop at a pushdown head could not be concretized");
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::machines::{Action, LiftStyle, Machine, PdmRule};

    fn pushdown_only() -> Pdm {
        Pdm {
            values: vec!["a".into()],
            states: vec!["p".into()],
            stack: vec!["bot".into(), "alpha".into()],
            initial: 0,
            rules: vec![PdmRule { src: 0, action: Action::write(0), top: BOTTOM, dst: 0, effect: StackEffect::Push(1) }],
            accepting: None,
        }
    }

    #[test]
    fn push_only_reaches_one_alpha() {
        // only the bottom can be pushed on, so alpha^n bot needs n <= 1
        let p = pushdown_only();
        let s = post_star(&p, 0, 100).unwrap();
        assert!(s.accepts(&0, &[0]));
        assert!(s.accepts(&0, &[1, 0]));
        assert!(!s.accepts(&0, &[1, 1, 0]));
        assert!(s.is_closed(&p));
    }

    #[test]
    fn unbounded_pushes() {
        let p = fixtures::pushing_reader();
        let s = post_star(&p, 0, 100).unwrap();
        for n in 0..6 {
            let mut w = vec![1; n];
            w.push(0);
            assert!(s.accepts(&0, &w), "{n}");
        }
        assert!(!s.accepts(&0, &[0, 0]));
    }

    #[test]
    fn push_then_pop() {
        let mut p = pushdown_only();
        p.states.push("p2".into());
        p.rules[0].dst = 0;
        p.rules.push(PdmRule { src: 0, action: Action::write(0), top: 1, dst: 1, effect: StackEffect::Pop });
        let s = post_star(&p, 0, 100).unwrap();
        assert!(s.accepts(&1, &[0]));
        assert!(!s.accepts(&1, &[1, 0]));
        assert!(s.is_closed(&p));
    }

    #[test]
    fn no_rules_only_initial() {
        let mut p = pushdown_only();
        p.rules.clear();
        let s = post_star(&p, 0, 100).unwrap();
        assert!(s.accepts(&0, &[0]));
        assert!(!s.accepts(&0, &[1, 0]));
        assert_eq!(s.heads(), &[(0, BOTTOM)]);
    }

    #[test]
    fn single_letter_pda() {
        let pda = Pda {
            controls: 2,
            symbols: 1,
            letters: 1,
            start: 0,
            pivot: 0,
            accept: Some(1),
            rules: vec![PdaRule { src: 0, top: 0, letter: 0, dst: 1, effect: Effect::Keep }],
        };
        let g = pda_to_cfg(&pda);
        assert_eq!(derive(&g, &vec![1; g.productions.len()], 100), Some(vec![0]));
    }

    #[test]
    fn balanced_loop_pda() {
        // push on 0 with letter 0, pop with letter 1, back to control 0
        let pda = Pda {
            controls: 2,
            symbols: 2,
            letters: 2,
            start: 0,
            pivot: 0,
            accept: Some(0),
            rules: vec![
                PdaRule { src: 0, top: 0, letter: 0, dst: 1, effect: Effect::Push(1) },
                PdaRule { src: 1, top: 1, letter: 1, dst: 0, effect: Effect::Pop },
            ],
        };
        let g = pda_to_cfg(&pda);
        let p = parikh_cfg(&g);
        for a in 0..4 {
            for b in 0..4 {
                let mut s = p.system.clone();
                s.add_linear(crate::parikh::Linear::eq([(p.terminals[0], 1)], a));
                s.add_linear(crate::parikh::Linear::eq([(p.terminals[1], 1)], b));
                assert_eq!(solve(&s, 10_000).is_sat(), a == b, "{a} {b}");
            }
        }
    }

    #[test]
    fn empty_pda_gives_false() {
        let pda = Pda { controls: 1, symbols: 1, letters: 1, start: 0, pivot: 0, accept: None, rules: vec![] };
        let g = pda_to_cfg(&pda);
        assert!(g.useful_productions().is_empty());
    }

    fn lifted(net_leader: &crate::Fsm, contributor: &crate::Fsm, style: LiftStyle) -> Network {
        let lifted = Pdm::from_fsm(net_leader, style);
        Network::from_parts(
            &fixtures::universal_property(&net_leader.values),
            &Machine::Pdm(lifted),
            &Machine::Fsm(contributor.clone()),
        )
        .unwrap()
    }

    #[test]
    fn ex2_lifted_is_empty() {
        for style in [LiftStyle::Alternating, LiftStyle::PushOnly] {
            let net = lifted(&fixtures::ex2_leader(), &fixtures::ex2_contributor(), style);
            assert_eq!(check_pdm_fsm(&net, &Options::default()).verdict, Verdict::Empty);
        }
    }

    #[test]
    fn pushing_reader_fed_by_writer() {
        let d = fixtures::pushing_reader();
        let net = Network::from_parts(
            &fixtures::universal_property(&d.values),
            &Machine::Pdm(d),
            &Machine::Fsm(fixtures::single_writer()),
        )
        .unwrap();
        let out = check_pdm_fsm(&net, &Options::default());
        let w = out.verdict.witness().expect("nonempty");
        replay(&net, w).unwrap();
        assert!(w.pivot.is_some());
    }

    #[test]
    fn unwritten_value_is_empty() {
        // leader must read 1, contributor can only write 2
        let mut d = fixtures::pushing_reader();
        d.values.push("2".into());
        let c = crate::Fsm {
            values: d.values.clone(),
            transitions: vec![crate::machines::FsmTransition { src: 0, action: Action::write(1), dst: 0 }],
            ..fixtures::single_writer()
        };
        let a = fixtures::infinitely_often_read(&d.values, 0);
        let net = Network::from_parts(&a, &Machine::Pdm(d), &Machine::Fsm(c)).unwrap();
        assert_eq!(check_pdm_fsm(&net, &Options::default()).verdict, Verdict::Empty);
    }

    #[test]
    fn fig1_lifted_is_nonempty() {
        for style in [LiftStyle::Alternating, LiftStyle::PushOnly] {
            let d = Pdm::from_fsm(&fixtures::fig1_leader(), style);
            let net = Network::from_parts(
                &fixtures::infinitely_often_read(&d.values, 0),
                &Machine::Pdm(d),
                &Machine::Fsm(fixtures::fig1_contributor()),
            )
            .unwrap();
            let out = check_pdm_fsm(&net, &Options::default());
            replay(&net, out.verdict.witness().expect("nonempty")).unwrap();
        }
    }
}
