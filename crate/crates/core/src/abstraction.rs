//! Abstract transition system: populations are replaced by the set of
//! contributor states they occupy. Along any path that set only grows.

use std::collections::HashMap;
use std::fmt;

use crate::explicit::Population;
use crate::machines::{Network, Role, StateId, TransitionId, ValueId};
use crate::par;
use crate::{BudgetExceeded, Options};

/// Set of contributor states as a bitset.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateSet(Box<[u64]>);

impl StateSet {
    pub fn empty(n: usize) -> StateSet {
        StateSet(vec![0; n.div_ceil(64).max(1)].into_boxed_slice())
    }

    pub fn singleton(n: usize, q: StateId) -> StateSet {
        let mut s = StateSet::empty(n);
        s.insert(q);
        s
    }

    pub fn from_states(n: usize, qs: impl IntoIterator<Item = StateId>) -> StateSet {
        let mut s = StateSet::empty(n);
        for q in qs {
            s.insert(q);
        }
        s
    }

    pub fn insert(&mut self, q: StateId) {
        self.0[q / 64] |= 1 << (q % 64);
    }

    pub fn contains(&self, q: StateId) -> bool {
        self.0.get(q / 64).is_some_and(|w| w & (1 << (q % 64)) != 0)
    }

    pub fn with(&self, q: StateId) -> StateSet {
        let mut s = self.clone();
        s.insert(q);
        s
    }

    pub fn union(&self, other: &StateSet) -> StateSet {
        StateSet(self.0.iter().zip(other.0.iter()).map(|(a, b)| a | b).collect())
    }

    pub fn is_subset(&self, other: &StateSet) -> bool {
        self.0.iter().zip(other.0.iter()).all(|(a, b)| a & !b == 0)
    }

    pub fn len(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = StateId> + '_ {
        self.0.iter().enumerate().flat_map(|(i, &w)| {
            (0..64).filter(move |b| w & (1 << b) != 0).map(move |b| i * 64 + b)
        })
    }
}

impl fmt::Debug for StateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AbstractConfig {
    pub leader: StateId,
    pub store: Option<ValueId>,
    pub set: StateSet,
}

impl AbstractConfig {
    pub fn initial(net: &Network) -> AbstractConfig {
        AbstractConfig {
            leader: net.leader().initial(),
            store: None,
            set: StateSet::singleton(net.contributor_states(), net.contributor().initial()),
        }
    }
}

/// States with a positive count in some member of `pops`.
pub fn alpha<'a>(n: usize, pops: impl IntoIterator<Item = &'a Population>) -> StateSet {
    let mut s = StateSet::empty(n);
    for p in pops {
        for (l, _) in p.iter() {
            s.insert(l.state);
        }
    }
    s
}

/// Membership in the concretization of `set`: zero outside it.
pub fn gamma(set: &StateSet, p: &Population) -> bool {
    p.iter().all(|(l, _)| set.contains(l.state))
}

/// Contributor moves from store `store` and populated states `set`:
/// `(transition index, new store, new set)` sorted by transition index.
pub(crate) fn contributor_moves(
    net: &Network,
    store: Option<ValueId>,
    set: &StateSet,
) -> Vec<(usize, Option<ValueId>, StateSet)> {
    let mut out = Vec::new();
    for q in set.iter() {
        for &i in net.outgoing(Role::Contributor, q) {
            let (_, action, dst) = net.contributor().edge(i);
            if let Some(g) = action.fire(store) {
                out.push((i, g, set.with(dst)));
            }
        }
    }
    out.sort_by_key(|m| m.0);
    out
}

/// Successors of `a`, sorted by transition identity. Requires FSM leader
/// and contributor.
pub fn abstract_successors(net: &Network, a: &AbstractConfig) -> Vec<(TransitionId, AbstractConfig)> {
    assert!(!net.leader().is_pdm() && !net.contributor().is_pdm(), "abstract successors need FSMs");
    let mut out = Vec::new();
    for &i in net.outgoing(Role::Leader, a.leader) {
        let (_, action, dst) = net.leader().edge(i);
        if let Some(g) = action.fire(a.store) {
            out.push((TransitionId::leader(i), AbstractConfig { leader: dst, store: g, set: a.set.clone() }));
        }
    }
    for (i, g, set) in contributor_moves(net, a.store, &a.set) {
        out.push((TransitionId::contributor(i), AbstractConfig { leader: a.leader, store: g, set }));
    }
    out
}

/// Reachable part of the abstract system. Configurations are numbered in
/// breadth-first discovery order; `pred` keeps the first discovered
/// incoming edge.
#[derive(Clone, Debug)]
pub struct AbstractGraph {
    pub configs: Vec<AbstractConfig>,
    pub index: HashMap<AbstractConfig, u32>,
    pub pred: Vec<Option<(u32, TransitionId)>>,
    pub edges: Vec<Vec<(TransitionId, u32)>>,
}

impl AbstractGraph {
    /// Edges of a path from the initial configuration to `v`.
    pub fn stem(&self, v: u32) -> Vec<(TransitionId, u32)> {
        let mut out = Vec::new();
        let mut cur = v;
        while let Some((p, t)) = self.pred[cur as usize] {
            out.push((t, cur));
            cur = p;
        }
        out.reverse();
        out
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }
}

pub fn reachable_abstract(net: &Network, opts: &Options) -> Result<AbstractGraph, BudgetExceeded> {
    let cap = opts.budget.max_configs;
    let root = AbstractConfig::initial(net);
    let mut g = AbstractGraph {
        configs: vec![root.clone()],
        index: HashMap::from([(root, 0)]),
        pred: vec![None],
        edges: Vec::new(),
    };
    let mut start = 0;
    while start < g.configs.len() {
        let end = g.configs.len();
        let succs = par::map(opts.parallelism, &g.configs[start..end], |a| abstract_successors(net, a));
        for (off, list) in succs.into_iter().enumerate() {
            let from = (start + off) as u32;
            let mut out = Vec::with_capacity(list.len());
            for (t, c) in list {
                let id = match g.index.get(&c) {
                    Some(&id) => id,
                    None => {
                        if g.configs.len() >= cap {
                            return Err(BudgetExceeded::Configs(cap));
                        }
                        let id = g.configs.len() as u32;
                        g.index.insert(c.clone(), id);
                        g.configs.push(c);
                        g.pred.push(Some((from, t)));
                        id
                    }
                };
                out.push((t, id));
            }
            g.edges.push(out);
        }
        start = end;
    }
    Ok(g)
}

/// Net change of a transition on the population, indexed by contributor
/// state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeltaVector(pub Vec<i32>);

pub fn delta(net: &Network, t: TransitionId) -> DeltaVector {
    let mut v = vec![0; net.contributor_states()];
    if !t.is_leader() {
        let (src, dst) = net.contributor_edge(t.index);
        v[src] -= 1;
        v[dst] += 1;
    }
    DeltaVector(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::explicit::Local;
    use crate::machines::{Fsm, Machine};

    #[test]
    fn galois_examples() {
        let q0 = Local { state: 0, stack: vec![] };
        let q1 = Local { state: 1, stack: vec![] };
        let p = Population::from_locals([q0.clone(), q0.clone(), q1.clone()]);
        assert_eq!(alpha(2, [&p]), StateSet::from_states(2, [0, 1]));
        let ks: Vec<_> = (1..5).map(|k| Population::uniform(q0.clone(), k)).collect();
        assert_eq!(alpha(2, &ks), StateSet::singleton(2, 0));
        let only_q0 = StateSet::singleton(2, 0);
        assert!(gamma(&only_q0, &Population::uniform(q0.clone(), 3)));
        assert!(!gamma(&only_q0, &Population::from_locals([q0, q1])));
    }

    #[test]
    fn ex2_reachable() {
        let net = fixtures::ex2_network();
        let g = reachable_abstract(&net, &Options::default()).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.configs[1].store, Some(0));
        assert_eq!(g.configs[1].set, StateSet::from_states(2, [0, 1]));
        // self-loop on the second config
        assert_eq!(g.edges[1], vec![(TransitionId::contributor(0), 1)]);
    }

    #[test]
    fn fig1_reaches_full_set() {
        let net = fixtures::fig1_network();
        let g = reachable_abstract(&net, &Options::default()).unwrap();
        assert!(g.configs.iter().any(|c| c.set.len() == 7));
        for (v, out) in g.edges.iter().enumerate() {
            for &(_, w) in out {
                assert!(g.configs[v].set.is_subset(&g.configs[w as usize].set));
            }
        }
    }

    #[test]
    fn silent_contributor_only_moves_leader() {
        let d = fixtures::fig1_leader();
        let c = Fsm { transitions: vec![], ..fixtures::ex2_contributor() };
        let c = Fsm { values: d.values.clone(), ..c };
        let net = Network::from_parts(
            &fixtures::universal_property(&d.values),
            &Machine::Fsm(d),
            &Machine::Fsm(c),
        )
        .unwrap();
        let g = reachable_abstract(&net, &Options::default()).unwrap();
        // store stays uninitialized, so no leader read is ever enabled
        assert_eq!(g.len(), 1);
    }

    #[test]
    fn delta_examples() {
        let net = fixtures::ex2_network();
        assert_eq!(delta(&net, TransitionId::contributor(0)).0, vec![-1, 1]);
        let fig = fixtures::fig1_network();
        assert!(delta(&fig, TransitionId::leader(0)).0.iter().all(|&x| x == 0));
    }
}
