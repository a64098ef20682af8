//! Concrete semantics for a fixed number of contributors.
//!
//! Contributors are anonymous, so a configuration stores a population
//! (a multiset of contributor local states) rather than one state per
//! process. Witnesses name individual processes; actor indices are
//! assigned when a witness is built and checked by [`replay`].

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::machines::{Machine, Network, Role, StateId, SymbolId, TransitionId, ValueId, BOTTOM};
use crate::par;
use crate::{BudgetExceeded, Options};

/// State of one process: control state plus stack (top at the end; empty
/// for FSMs).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Local {
    pub state: StateId,
    pub stack: Vec<SymbolId>,
}

impl Local {
    pub fn initial(m: &Machine) -> Local {
        let stack = if m.is_pdm() { vec![BOTTOM] } else { Vec::new() };
        Local { state: m.initial(), stack }
    }

    pub fn top(&self) -> Option<SymbolId> {
        self.stack.last().copied()
    }

    /// Fires transition (or rule) `i` of `m` from this local state.
    /// Returns the new local state and store, or `None` if disabled. With a
    /// `bound`, pushes beyond that stack height are disabled too.
    pub fn step(
        &self,
        m: &Machine,
        i: usize,
        store: Option<ValueId>,
        bound: Option<usize>,
    ) -> Option<(Local, Option<ValueId>)> {
        let (src, action, dst) = m.edge(i);
        if src != self.state {
            return None;
        }
        let store = action.fire(store)?;
        let mut stack = self.stack.clone();
        if let Machine::Pdm(p) = m {
            if !p.rules[i].apply(&mut stack) {
                return None;
            }
            if bound.is_some_and(|b| stack.len() > b) {
                return None;
            }
        }
        Some((Local { state: dst, stack }, store))
    }
}

/// Multiset of contributor local states, kept sorted with positive counts.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Population(Vec<(Local, u32)>);

impl Population {
    pub fn uniform(local: Local, k: u32) -> Population {
        if k == 0 {
            return Population::default();
        }
        Population(vec![(local, k)])
    }

    pub fn from_locals<I: IntoIterator<Item = Local>>(locals: I) -> Population {
        let mut m: BTreeMap<Local, u32> = BTreeMap::new();
        for l in locals {
            *m.entry(l).or_default() += 1;
        }
        Population(m.into_iter().collect())
    }

    pub fn size(&self) -> u64 {
        self.0.iter().map(|(_, c)| u64::from(*c)).sum()
    }

    pub fn count(&self, local: &Local) -> u32 {
        self.0
            .binary_search_by(|(l, _)| l.cmp(local))
            .map_or(0, |i| self.0[i].1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Local, u32)> {
        self.0.iter().map(|(l, c)| (l, *c))
    }

    /// Moves one token from `from` (which must be populated) to `to`.
    pub fn moved(&self, from: &Local, to: Local) -> Population {
        let mut v = self.0.clone();
        let i = v.binary_search_by(|(l, _)| l.cmp(from)).expect("source not populated");
        v[i].1 -= 1;
        if v[i].1 == 0 {
            v.remove(i);
        }
        match v.binary_search_by(|(l, _)| l.cmp(&to)) {
            Ok(j) => v[j].1 += 1,
            Err(j) => v.insert(j, (to, 1)),
        }
        Population(v)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ConcreteConfig {
    pub leader: Local,
    /// `None` until the first write.
    pub store: Option<ValueId>,
    pub population: Population,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExplicitError {
    #[error("the number of contributors must be at least 1")]
    ZeroContributors,
    #[error("a stack bound is required when a machine is a PDM")]
    MissingStackBound,
}

pub fn initial_config(net: &Network, k: usize) -> Result<ConcreteConfig, ExplicitError> {
    if k == 0 {
        return Err(ExplicitError::ZeroContributors);
    }
    Ok(ConcreteConfig {
        leader: Local::initial(net.leader()),
        store: None,
        population: Population::uniform(Local::initial(net.contributor()), k as u32),
    })
}

/// A transition of the concrete system. `moved` is the contributor local
/// state a token left (`None` for leader moves).
#[derive(Clone, Debug)]
pub struct Move {
    pub transition: TransitionId,
    pub moved: Option<Local>,
    pub config: ConcreteConfig,
}

/// All transitions enabled at `c`, leader moves first, then contributor
/// moves by local state and transition index. With a `bound`, moves that
/// push a stack past it are omitted.
pub fn moves(net: &Network, c: &ConcreteConfig, bound: Option<usize>) -> Vec<Move> {
    let mut out = Vec::new();
    let leader = net.leader();
    for &i in net.outgoing(Role::Leader, c.leader.state) {
        if let Some((l, store)) = c.leader.step(leader, i, c.store, bound) {
            out.push(Move {
                transition: TransitionId::leader(i),
                moved: None,
                config: ConcreteConfig { leader: l, store, population: c.population.clone() },
            });
        }
    }
    let contributor = net.contributor();
    for (local, _) in c.population.iter() {
        for &i in net.outgoing(Role::Contributor, local.state) {
            if let Some((l, store)) = local.step(contributor, i, c.store, bound) {
                out.push(Move {
                    transition: TransitionId::contributor(i),
                    moved: Some(local.clone()),
                    config: ConcreteConfig {
                        leader: c.leader.clone(),
                        store,
                        population: c.population.moved(local, l),
                    },
                });
            }
        }
    }
    out
}

pub fn successors(net: &Network, c: &ConcreteConfig) -> Vec<(TransitionId, ConcreteConfig)> {
    moves(net, c, None).into_iter().map(|m| (m.transition, m.config)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Step {
    /// 0 is the leader, 1..=k the contributors.
    pub actor: usize,
    pub transition: TransitionId,
}

/// An accepting lasso: `stem` from the initial configuration, then `cycle`
/// repeated forever.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub k: usize,
    pub stem: Vec<Step>,
    pub cycle: Vec<Step>,
    /// For PDM leaders: the leader state and top-of-stack symbol at the
    /// start of the cycle. The cycle never pops that symbol.
    pub pivot: Option<(StateId, SymbolId)>,
    /// Set when contributor transitions refer to the k-restriction of a
    /// PDM contributor with this k.
    pub restrict: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Nonempty(Box<Witness>),
    Empty,
    Budget(BudgetExceeded),
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Nonempty(_) => "NONEMPTY",
            Verdict::Empty => "EMPTY",
            Verdict::Budget(_) => "BUDGET",
        }
    }

    pub fn is_nonempty(&self) -> bool {
        matches!(self, Verdict::Nonempty(_))
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            Verdict::Nonempty(w) => Some(w),
            _ => None,
        }
    }
}

/// Verdict plus counters describing the work done.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub verdict: Verdict,
    pub stats: BTreeMap<&'static str, u64>,
}

struct Graph {
    configs: Vec<ConcreteConfig>,
    parent: Vec<u32>,
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

impl Graph {
    fn succ(&self, v: u32) -> &[u32] {
        &self.targets[self.offsets[v as usize]..self.offsets[v as usize + 1]]
    }
}

fn explore(
    net: &Network,
    root: ConcreteConfig,
    bound: Option<usize>,
    opts: &Options,
) -> Result<Graph, BudgetExceeded> {
    let cap = opts.budget.max_configs;
    let mut index: HashMap<ConcreteConfig, u32> = HashMap::new();
    let mut g = Graph { configs: vec![root.clone()], parent: vec![u32::MAX], offsets: vec![0], targets: Vec::new() };
    index.insert(root, 0);
    let mut start = 0;
    while start < g.configs.len() {
        let end = g.configs.len();
        let layer = &g.configs[start..end];
        let succs = par::map(opts.parallelism, layer, |c| {
            moves(net, c, bound).into_iter().map(|m| m.config).collect::<Vec<_>>()
        });
        for (off, list) in succs.into_iter().enumerate() {
            let from = (start + off) as u32;
            for c in list {
                let id = match index.get(&c) {
                    Some(&id) => id,
                    None => {
                        let id = g.configs.len() as u32;
                        if g.configs.len() >= cap {
                            return Err(BudgetExceeded::Configs(cap));
                        }
                        index.insert(c.clone(), id);
                        g.configs.push(c);
                        g.parent.push(from);
                        id
                    }
                };
                g.targets.push(id);
            }
            g.offsets.push(g.targets.len());
        }
        start = end;
    }
    Ok(g)
}

/// Strongly connected components, as a component id per vertex.
pub(crate) fn tarjan(n: usize, succ: impl Fn(u32) -> Vec<u32>) -> Vec<u32> {
    const NONE: u32 = u32::MAX;
    let mut index = vec![NONE; n];
    let mut low = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![NONE; n];
    let mut stack = Vec::new();
    let mut next = 0u32;
    let mut ncomp = 0u32;
    for root in 0..n as u32 {
        if index[root as usize] != NONE {
            continue;
        }
        let mut call: Vec<(u32, Vec<u32>, usize)> = vec![(root, succ(root), 0)];
        index[root as usize] = next;
        low[root as usize] = next;
        next += 1;
        stack.push(root);
        on_stack[root as usize] = true;
        while let Some((v, edges, pos)) = call.last_mut() {
            let v = *v;
            if *pos < edges.len() {
                let w = edges[*pos];
                *pos += 1;
                if index[w as usize] == NONE {
                    index[w as usize] = next;
                    low[w as usize] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w as usize] = true;
                    call.push((w, succ(w), 0));
                } else if on_stack[w as usize] {
                    low[v as usize] = low[v as usize].min(index[w as usize]);
                }
            } else {
                call.pop();
                if let Some((u, _, _)) = call.last() {
                    low[*u as usize] = low[*u as usize].min(low[v as usize]);
                }
                if low[v as usize] == index[v as usize] {
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w as usize] = false;
                        comp[w as usize] = ncomp;
                        if w == v {
                            break;
                        }
                    }
                    ncomp += 1;
                }
            }
        }
    }
    comp
}

/// Decides whether some run with `k` contributors visits accepting leader
/// states infinitely often. PDMs need a `stack_bound`; the verdict is then
/// relative to runs whose stacks stay within it.
pub fn check_explicit(
    net: &Network,
    k: usize,
    stack_bound: Option<usize>,
    opts: &Options,
) -> Result<Outcome, ExplicitError> {
    let root = initial_config(net, k)?;
    if (net.leader().is_pdm() || net.contributor().is_pdm()) && stack_bound.is_none() {
        return Err(ExplicitError::MissingStackBound);
    }
    let g = match explore(net, root, stack_bound, opts) {
        Ok(g) => g,
        Err(e) => return Ok(Outcome { verdict: Verdict::Budget(e), stats: BTreeMap::new() }),
    };
    let mut stats = BTreeMap::new();
    stats.insert("configs", g.configs.len() as u64);
    stats.insert("edges", g.targets.len() as u64);
    let n = g.configs.len();
    let comp = tarjan(n, |v| g.succ(v).to_vec());
    let mut comp_size = vec![0u32; n];
    for &c in &comp {
        comp_size[c as usize] += 1;
    }
    let nontrivial = |v: u32| comp_size[comp[v as usize] as usize] > 1 || g.succ(v).contains(&v);
    let Some(a) = (0..n as u32).find(|&v| net.leader().is_accepting(g.configs[v as usize].leader.state) && nontrivial(v))
    else {
        return Ok(Outcome { verdict: Verdict::Empty, stats });
    };

    let mut stem_path = vec![a];
    while let Some(&v) = stem_path.last() {
        let p = g.parent[v as usize];
        if p == u32::MAX {
            break;
        }
        stem_path.push(p);
    }
    stem_path.reverse();

    // shortest cycle through `a` inside its component
    let ca = comp[a as usize];
    let mut prev: HashMap<u32, u32> = HashMap::new();
    let mut queue = VecDeque::from([a]);
    let mut closing = None;
    'bfs: while let Some(v) = queue.pop_front() {
        for &w in g.succ(v) {
            if comp[w as usize] != ca {
                continue;
            }
            if w == a {
                closing = Some(v);
                break 'bfs;
            }
            if let std::collections::hash_map::Entry::Vacant(e) = prev.entry(w) {
                e.insert(v);
                queue.push_back(w);
            }
        }
    }
    let mut back = Vec::new();
    let mut v = closing.expect("nontrivial component has a cycle");
    while v != a {
        back.push(v);
        v = prev[&v];
    }
    back.reverse();
    let cycle_path: Vec<u32> = std::iter::once(a).chain(back).chain(std::iter::once(a)).collect();

    let label = |path: &[u32]| -> Vec<(TransitionId, Option<Local>)> {
        path.windows(2)
            .map(|w| {
                let from = &g.configs[w[0] as usize];
                let to = &g.configs[w[1] as usize];
                let m = moves(net, from, stack_bound)
                    .into_iter()
                    .find(|m| &m.config == to)
                    .expect("edge has a move");
                (m.transition, m.moved)
            })
            .collect()
    };
    let mut stem = label(&stem_path);
    let mut cycle = label(&cycle_path);
    let mut pivot = None;
    if net.leader().is_pdm() {
        // rotate so the cycle starts where the leader stack is lowest
        let heights: Vec<usize> =
            cycle_path[..cycle_path.len() - 1].iter().map(|&v| g.configs[v as usize].leader.stack.len()).collect();
        let m = (0..heights.len()).min_by_key(|&i| (heights[i], i)).unwrap();
        stem.extend(cycle[..m].iter().cloned());
        cycle.rotate_left(m);
        let start = &g.configs[cycle_path[m] as usize].leader;
        pivot = Some((start.state, start.top().expect("leader stack never empties")));
    }
    let steps = assign_actors(net, k, stack_bound, &stem, &cycle);
    let (stem, cycle) = steps.split_at(stem.len());
    let witness = Witness { k, stem: stem.to_vec(), cycle: cycle.to_vec(), pivot, restrict: None };
    Ok(Outcome { verdict: Verdict::Nonempty(Box::new(witness)), stats })
}

/// Gives each contributor step to the lowest-numbered process whose local
/// state is `moved`.
fn assign_actors(
    net: &Network,
    k: usize,
    bound: Option<usize>,
    stem: &[(TransitionId, Option<Local>)],
    cycle: &[(TransitionId, Option<Local>)],
) -> Vec<Step> {
    let mut actors = vec![Local::initial(net.contributor()); k];
    let mut store = None;
    let mut leader = Local::initial(net.leader());
    let mut out = Vec::new();
    for (t, moved) in stem.iter().chain(cycle) {
        match moved {
            None => {
                let (l, s) = leader.step(net.leader(), t.index, store, bound).expect("leader move enabled");
                leader = l;
                store = s;
                out.push(Step { actor: 0, transition: *t });
            }
            Some(from) => {
                let i = actors.iter().position(|a| a == from).expect("moved token exists");
                let (l, s) = actors[i].step(net.contributor(), t.index, store, bound).expect("move enabled");
                actors[i] = l;
                store = s;
                out.push(Step { actor: i + 1, transition: *t });
            }
        }
    }
    out
}

/// Assigns actors to a transition sequence over FSM contributors, picking
/// for each contributor step the lowest-numbered process in its source
/// state. Returns `None` if some step has no such process.
pub fn assign_fsm_actors(net: &Network, k: usize, stem: &[TransitionId], cycle: &[TransitionId]) -> Option<Witness> {
    let mut actors = vec![net.contributor().initial(); k];
    let mut steps = Vec::with_capacity(stem.len() + cycle.len());
    for t in stem.iter().chain(cycle) {
        if t.is_leader() {
            steps.push(Step { actor: 0, transition: *t });
        } else {
            let (src, dst) = net.contributor_edge(t.index);
            let i = actors.iter().position(|&a| a == src)?;
            actors[i] = dst;
            steps.push(Step { actor: i + 1, transition: *t });
        }
    }
    let cycle_steps = steps.split_off(stem.len());
    Some(Witness { k, stem: steps, cycle: cycle_steps, pivot: None, restrict: None })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReplayFailure {
    ZeroContributors,
    NoSuchActor(usize),
    UnknownTransition(TransitionId),
    WrongOwner(TransitionId),
    NotEnabled(TransitionId),
    EmptyCycle,
    NoAccepting,
    MissingPivot,
    PivotMismatch,
    PivotPopped,
    LeaderMismatch,
    StoreMismatch,
    PopulationMismatch,
}

impl fmt::Display for ReplayFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReplayFailure::ZeroContributors => write!(f, "witness has no contributors"),
            ReplayFailure::NoSuchActor(a) => write!(f, "actor {a} does not exist"),
            ReplayFailure::UnknownTransition(t) => write!(f, "transition {t} does not exist"),
            ReplayFailure::WrongOwner(t) => write!(f, "transition {t} does not belong to this actor"),
            ReplayFailure::NotEnabled(t) => write!(f, "transition {t} is not enabled"),
            ReplayFailure::EmptyCycle => write!(f, "cycle is empty"),
            ReplayFailure::NoAccepting => write!(f, "cycle visits no accepting leader state"),
            ReplayFailure::MissingPivot => write!(f, "pushdown leader witness needs a pivot"),
            ReplayFailure::PivotMismatch => write!(f, "leader state or top symbol differs from the pivot"),
            ReplayFailure::PivotPopped => write!(f, "cycle pops the pivot symbol"),
            ReplayFailure::LeaderMismatch => write!(f, "cycle does not return to the leader state"),
            ReplayFailure::StoreMismatch => write!(f, "cycle does not return to the store value"),
            ReplayFailure::PopulationMismatch => write!(f, "cycle does not return to the population"),
        }
    }
}

/// Replay failure at `step`, counted over stem then cycle. A mismatch at
/// the end of the cycle is reported at index `stem.len() + cycle.len()`.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("step {step}: {reason}")]
pub struct ReplayError {
    pub step: usize,
    pub reason: ReplayFailure,
}

struct Sim<'a> {
    net: &'a Network,
    leader: Local,
    store: Option<ValueId>,
    actors: Vec<Local>,
}

impl Sim<'_> {
    fn apply(&mut self, s: &Step) -> Result<(), ReplayFailure> {
        let owner = if s.actor == 0 { Role::Leader } else { Role::Contributor };
        if s.actor > self.actors.len() {
            return Err(ReplayFailure::NoSuchActor(s.actor));
        }
        if s.transition.owner != owner {
            return Err(ReplayFailure::WrongOwner(s.transition));
        }
        let m = self.net.machine(owner);
        if s.transition.index >= m.transition_count() {
            return Err(ReplayFailure::UnknownTransition(s.transition));
        }
        let local = if s.actor == 0 { &mut self.leader } else { &mut self.actors[s.actor - 1] };
        let (l, store) = local
            .step(m, s.transition.index, self.store, None)
            .ok_or(ReplayFailure::NotEnabled(s.transition))?;
        *local = l;
        self.store = store;
        Ok(())
    }

    fn population(&self) -> Population {
        Population::from_locals(self.actors.iter().cloned())
    }
}

/// Checks a witness step by step against the concrete semantics.
pub fn replay(net: &Network, w: &Witness) -> Result<(), ReplayError> {
    let fail = |step, reason| Err(ReplayError { step, reason });
    if w.k == 0 {
        return fail(0, ReplayFailure::ZeroContributors);
    }
    let mut sim = Sim {
        net,
        leader: Local::initial(net.leader()),
        store: None,
        actors: vec![Local::initial(net.contributor()); w.k],
    };
    for (i, s) in w.stem.iter().enumerate() {
        if let Err(r) = sim.apply(s) {
            return fail(i, r);
        }
    }
    let base = w.stem.len();
    if w.cycle.is_empty() {
        return fail(base, ReplayFailure::EmptyCycle);
    }
    let pdm = net.leader().is_pdm();
    let pivot = match (pdm, w.pivot) {
        (true, None) => return fail(base, ReplayFailure::MissingPivot),
        (true, Some(p)) => Some(p),
        (false, _) => None,
    };
    if let Some((q, g)) = pivot {
        if sim.leader.state != q || sim.leader.top() != Some(g) {
            return fail(base, ReplayFailure::PivotMismatch);
        }
    }
    let start_leader = sim.leader.clone();
    let start_store = sim.store;
    let start_pop = sim.population();
    let mut accepting = false;
    for (i, s) in w.cycle.iter().enumerate() {
        accepting |= net.leader().is_accepting(sim.leader.state);
        if let Err(r) = sim.apply(s) {
            return fail(base + i, r);
        }
        if pivot.is_some() && sim.leader.stack.len() < start_leader.stack.len() {
            return fail(base + i, ReplayFailure::PivotPopped);
        }
    }
    let end = base + w.cycle.len();
    if !accepting {
        return fail(end, ReplayFailure::NoAccepting);
    }
    match pivot {
        Some((q, g)) => {
            if sim.leader.state != q || sim.leader.top() != Some(g) {
                return fail(end, ReplayFailure::PivotMismatch);
            }
        }
        None => {
            if sim.leader != start_leader {
                return fail(end, ReplayFailure::LeaderMismatch);
            }
        }
    }
    if sim.store != start_store {
        return fail(end, ReplayFailure::StoreMismatch);
    }
    if sim.population() != start_pop {
        return fail(end, ReplayFailure::PopulationMismatch);
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Monotonicity {
    Holds,
    /// NONEMPTY at `k` but EMPTY at `k + 1`.
    Violated { k: usize },
    Budget(BudgetExceeded),
}

/// Checks that nonemptiness with `k` contributors carries over to `k + 1`.
pub fn monotone_check(net: &Network, k: usize, opts: &Options) -> Result<Monotonicity, ExplicitError> {
    let small = check_explicit(net, k, None, opts)?.verdict;
    match small {
        Verdict::Budget(b) => return Ok(Monotonicity::Budget(b)),
        Verdict::Empty => return Ok(Monotonicity::Holds),
        Verdict::Nonempty(_) => {}
    }
    Ok(match check_explicit(net, k + 1, None, opts)?.verdict {
        Verdict::Nonempty(_) => Monotonicity::Holds,
        Verdict::Empty => Monotonicity::Violated { k },
        Verdict::Budget(b) => Monotonicity::Budget(b),
    })
}
