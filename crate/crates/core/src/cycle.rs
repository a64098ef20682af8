//! Non-emptiness for FSM leaders and FSM contributors: find an accepting
//! abstract configuration with a cycle whose contributor moves balance
//! out, then turn the abstract lasso into a concrete witness.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use crate::abstraction::{reachable_abstract, AbstractGraph};
use crate::explicit::{assign_fsm_actors, replay, Outcome, Verdict, Witness};
use crate::machines::{Network, Role, TransitionId};
use crate::par;
use crate::parikh::{euler_witness, parikh_fsa, solve, Fsa, FsaEdge, FsaParikh, Linear, LinearSystem, Solution, VarId};
use crate::Options;

/// Letter of a transition: leader transitions first, then contributor ones.
pub fn letter(net: &Network, t: TransitionId) -> usize {
    if t.is_leader() {
        t.index
    } else {
        net.transition_count(Role::Leader) + t.index
    }
}

pub fn letter_transition(net: &Network, l: usize) -> TransitionId {
    let nl = net.transition_count(Role::Leader);
    if l < nl {
        TransitionId::leader(l)
    } else {
        TransitionId::contributor(l - nl)
    }
}

/// Automaton of abstract cycles through one configuration: its states are
/// the configurations with the same contributor set that lie on a cycle
/// through it.
#[derive(Clone, Debug)]
pub struct CycleFsa {
    pub fsa: Fsa,
    /// Abstract configuration (index into the graph) of each state; state 0
    /// is the anchor.
    pub configs: Vec<u32>,
}

pub fn build_cycle_fsa(net: &Network, g: &AbstractGraph, a: u32) -> CycleFsa {
    let set = &g.configs[a as usize].set;
    let same = |v: u32| &g.configs[v as usize].set == set;
    let mut local: HashMap<u32, usize> = HashMap::from([(a, 0)]);
    let mut configs = vec![a];
    let mut i = 0;
    while i < configs.len() {
        for &(_, w) in &g.edges[configs[i] as usize] {
            if same(w) && !local.contains_key(&w) {
                local.insert(w, configs.len());
                configs.push(w);
            }
        }
        i += 1;
    }
    // keep states that can return to the anchor
    let mut back = vec![false; configs.len()];
    back[0] = true;
    loop {
        let mut changed = false;
        for (s, &v) in configs.iter().enumerate() {
            if !back[s] && g.edges[v as usize].iter().any(|&(_, w)| local.get(&w).is_some_and(|&t| back[t])) {
                back[s] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let kept: Vec<u32> = configs.iter().zip(&back).filter(|(_, &b)| b).map(|(&v, _)| v).collect();
    let renum: HashMap<u32, usize> = kept.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut edges = Vec::new();
    for (s, &v) in kept.iter().enumerate() {
        for &(t, w) in &g.edges[v as usize] {
            if let Some(&d) = renum.get(&w) {
                edges.push(FsaEdge { src: s, letter: letter(net, t), dst: d });
            }
        }
    }
    let letters = net.transition_count(Role::Leader) + net.transition_count(Role::Contributor);
    CycleFsa { fsa: Fsa { states: kept.len(), letters, initial: 0, final_state: 0, edges }, configs: kept }
}

/// Parikh image of the cycle automaton, plus contributor flow balance and
/// at least one transition. Letter variables are indexed by [`letter`].
pub fn realizability_system(net: &Network, cf: &CycleFsa) -> FsaParikh {
    let mut p = parikh_fsa(&cf.fsa);
    add_realizability(net, &mut p.system, &p.letters);
    p
}

/// Conjoins contributor flow balance and `Σ x ≥ 1` over letter variables
/// indexed by [`letter`].
pub fn add_realizability(net: &Network, sys: &mut LinearSystem, letters: &[VarId]) {
    for q in 0..net.contributor_states() {
        let mut terms = Vec::new();
        for j in 0..net.transition_count(Role::Contributor) {
            let (src, dst) = net.contributor_edge(j);
            let x = letters[letter(net, TransitionId::contributor(j))];
            if dst == q {
                terms.push((x, 1));
            }
            if src == q {
                terms.push((x, -1));
            }
        }
        sys.add_linear(Linear::eq(terms, 0));
    }
    sys.add_linear(Linear::ge(letters.iter().map(|&x| (x, 1)), 1));
}

/// Builds a concrete lasso from an abstract stem to `a` and an edge-count
/// solution of its realizability system. Contributor stem steps are
/// repeated so that every state of the cycle's set holds `scale · n`
/// tokens when the cycle starts, `n` being the cycle length. Returns
/// `None` if no Euler walk exists or the result does not replay.
pub fn concretize(net: &Network, g: &AbstractGraph, a: u32, cf: &CycleFsa, edge_counts: &[i64], scale: u64) -> Option<Witness> {
    let path = euler_witness(&cf.fsa, edge_counts)?;
    let cycle: Vec<TransitionId> = cf.fsa.word(&path).into_iter().map(|l| letter_transition(net, l)).collect();
    let n = cycle.len() as u64 * scale;

    let stem_abs: Vec<TransitionId> = g.stem(a).into_iter().map(|(t, _)| t).collect();
    let (k, stem) = expand_stem(net, &stem_abs, g.configs[a as usize].set.iter(), n);
    let w = assign_fsm_actors(net, k, &stem, &cycle)?;
    replay(net, &w).ok().map(|_| w)
}

/// Repeats the contributor steps of an abstract stem so that it ends with
/// at least `n` tokens on every state of `targets`, walking the stem
/// backwards: a step moving into a state with demand `m` is fired `m`
/// times and passes the demand on to its source. Returns the number of
/// contributors needed and the expanded stem.
pub fn expand_stem(
    net: &Network,
    stem: &[TransitionId],
    targets: impl IntoIterator<Item = usize>,
    n: u64,
) -> (usize, Vec<TransitionId>) {
    let mut demand = vec![0u64; net.contributor_states()];
    for q in targets {
        demand[q] = n;
    }
    let mut reps = vec![1u64; stem.len()];
    for (i, t) in stem.iter().enumerate().rev() {
        if t.is_leader() {
            continue;
        }
        let (src, dst) = net.contributor_edge(t.index);
        if src == dst {
            demand[src] = demand[src].max(1);
        } else {
            let m = demand[dst].max(1);
            reps[i] = m;
            demand[dst] = 0;
            demand[src] += m;
        }
    }
    let k = demand[net.contributor().initial()].max(1) as usize;
    let mut out = Vec::new();
    for (&t, &m) in stem.iter().zip(&reps) {
        out.extend(std::iter::repeat_n(t, m as usize));
    }
    (k, out)
}

/// Decides non-emptiness for FSM/FSM networks.
pub fn check_fsm_fsm(net: &Network, opts: &Options) -> Outcome {
    assert!(!net.leader().is_pdm() && !net.contributor().is_pdm(), "check_fsm_fsm needs FSMs");
    let mut stats = BTreeMap::new();
    let g = match reachable_abstract(net, opts) {
        Ok(g) => g,
        Err(e) => return Outcome { verdict: Verdict::Budget(e), stats },
    };
    stats.insert("abstract_configs", g.len() as u64);

    let candidates = cycle_candidates(net, &g);
    stats.insert("candidates", candidates.len() as u64);
    let over_budget = AtomicBool::new(false);
    let solver_calls = AtomicU64::new(0);
    let found = par::find_first(opts.parallelism, &candidates, |_, &a| {
        let cf = build_cycle_fsa(net, &g, a);
        let p = realizability_system(net, &cf);
        solver_calls.fetch_add(1, Ordering::Relaxed);
        match solve(&p.system, opts.budget.max_solver_nodes) {
            Solution::Sat(x) => Some((cf, p.edge_counts(&x))),
            Solution::Unsat => None,
            Solution::Budget(_) => {
                over_budget.store(true, Ordering::Relaxed);
                None
            }
        }
    });
    stats.insert("solver_calls", solver_calls.load(Ordering::Relaxed));
    let Some((i, (cf, counts))) = found else {
        let verdict = if over_budget.load(Ordering::Relaxed) {
            Verdict::Budget(crate::BudgetExceeded::Solver(opts.budget.max_solver_nodes))
        } else {
            Verdict::Empty
        };
        return Outcome { verdict, stats };
    };
    let a = candidates[i];
    for attempt in 0..4 {
        if let Some(w) = concretize(net, &g, a, &cf, &counts, 1 << attempt) {
            stats.insert("k", w.k as u64);
            stats.insert("cycle_length", w.cycle.len() as u64);
            return Outcome { verdict: Verdict::Nonempty(Box::new(w)), stats };
        }
    }
    panic!("feasible cycle at abstract configuration {a} could not be concretized");
}

/// Accepting configurations, in discovery order, that lie on a cycle
/// keeping the contributor set fixed.
pub fn cycle_candidates(net: &Network, g: &AbstractGraph) -> Vec<u32> {
    let n = g.len();
    let same_succ = |v: u32| -> Vec<u32> {
        let set = &g.configs[v as usize].set;
        g.edges[v as usize].iter().map(|&(_, w)| w).filter(|&w| &g.configs[w as usize].set == set).collect()
    };
    let comp = crate::explicit::tarjan(n, same_succ);
    let mut size = vec![0u32; n];
    for &c in &comp {
        size[c as usize] += 1;
    }
    (0..n as u32)
        .filter(|&v| net.leader().is_accepting(g.configs[v as usize].leader))
        .filter(|&v| size[comp[v as usize] as usize] > 1 || g.edges[v as usize].iter().any(|&(_, w)| w == v))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abstraction::StateSet;
    use crate::fixtures;
    use crate::machines::Machine;

    #[test]
    fn ex2_cycle_fsa_is_a_self_loop() {
        let net = fixtures::ex2_network();
        let g = reachable_abstract(&net, &Options::default()).unwrap();
        let a = g.index.iter().find(|(c, _)| c.set == StateSet::from_states(2, [0, 1])).map(|(_, &i)| i).unwrap();
        let cf = build_cycle_fsa(&net, &g, a);
        assert_eq!(cf.fsa.states, 1);
        assert_eq!(cf.fsa.edges, vec![FsaEdge { src: 0, letter: letter(&net, TransitionId::contributor(0)), dst: 0 }]);
        let p = realizability_system(&net, &cf);
        assert_eq!(solve(&p.system, 1000), Solution::Unsat);
    }

    #[test]
    fn ex2_is_empty() {
        let out = check_fsm_fsm(&fixtures::ex2_network(), &Options::default());
        assert_eq!(out.verdict, Verdict::Empty);
    }

    #[test]
    fn fig1_is_nonempty_and_replays() {
        let net = fixtures::fig1_network();
        let out = check_fsm_fsm(&net, &Options::default());
        let w = out.verdict.witness().expect("nonempty");
        replay(&net, w).unwrap();
    }

    #[test]
    fn fig1_full_set_cycle_is_strongly_connected() {
        let net = fixtures::fig1_network();
        let g = reachable_abstract(&net, &Options::default()).unwrap();
        let a = cycle_candidates(&net, &g).into_iter().find(|&v| g.configs[v as usize].set.len() == 7).unwrap();
        let cf = build_cycle_fsa(&net, &g, a);
        let used: std::collections::BTreeSet<usize> = cf.fsa.edges.iter().map(|e| e.letter).collect();
        // the leader reads 1, 2 and 3 inside the cycle automaton
        let reads: std::collections::BTreeSet<_> = (0..net.transition_count(Role::Leader))
            .filter(|&i| used.contains(&letter(&net, TransitionId::leader(i))))
            .map(|i| net.action(TransitionId::leader(i)))
            .collect();
        assert_eq!(reads.len(), 3);
        let mut reach = vec![false; cf.fsa.states];
        reach[0] = true;
        for _ in 0..cf.fsa.states {
            for e in &cf.fsa.edges {
                if reach[e.src] {
                    reach[e.dst] = true;
                }
            }
        }
        assert!(reach.iter().all(|&r| r));
    }

    #[test]
    fn empty_property_is_empty() {
        let d = fixtures::fig1_leader();
        let net = Network::from_parts(
            &fixtures::empty_property(&d.values),
            &Machine::Fsm(d),
            &Machine::Fsm(fixtures::fig1_contributor()),
        )
        .unwrap();
        assert_eq!(check_fsm_fsm(&net, &Options::default()).verdict, Verdict::Empty);
    }

    #[test]
    fn leader_self_loop_needs_one_contributor() {
        let d = fixtures::reader_of_one();
        let net = Network::from_parts(
            &fixtures::universal_property(&d.values),
            &Machine::Fsm(d),
            &Machine::Fsm(fixtures::single_writer()),
        )
        .unwrap();
        let out = check_fsm_fsm(&net, &Options::default());
        let w = out.verdict.witness().unwrap();
        assert_eq!(w.k, 1);
        replay(&net, w).unwrap();
    }

    #[test]
    fn doubled_solution_still_concretizes() {
        let net = fixtures::fig1_network();
        let g = reachable_abstract(&net, &Options::default()).unwrap();
        for a in cycle_candidates(&net, &g) {
            let cf = build_cycle_fsa(&net, &g, a);
            let p = realizability_system(&net, &cf);
            if let Solution::Sat(x) = solve(&p.system, 100_000) {
                let doubled: Vec<i64> = p.edge_counts(&x).iter().map(|c| 2 * c).collect();
                let w = concretize(&net, &g, a, &cf, &doubled, 1).unwrap();
                replay(&net, &w).unwrap();
                return;
            }
        }
        panic!("no feasible candidate");
    }
}
