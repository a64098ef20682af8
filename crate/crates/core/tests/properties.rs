use std::collections::{BTreeSet, HashSet, VecDeque};

use proptest::prelude::*;
use rand::Rng;

use paramck::abstraction::{alpha, gamma, reachable_abstract, AbstractConfig, StateSet};
use paramck::cycle::expand_stem;
use paramck::explicit::{check_explicit, initial_config, moves, ConcreteConfig, Local, Population, Verdict};
use paramck::format::{parse_machine, print_machine};
use paramck::gen;
use paramck::machines::{buchi_product, Action, Fsm, Machine, Pdm, BOTTOM};
use paramck::parikh::{euler_witness, parikh_fsa, solve, Solution};
use paramck::pushdown::post_star;
use paramck::reduction::RunPrefix;
use paramck::{Network, Options, TransitionId};

fn explicit_reach(net: &Network, k: usize, depth: usize) -> Vec<ConcreteConfig> {
    let mut seen = HashSet::new();
    let root = initial_config(net, k).unwrap();
    seen.insert(root.clone());
    let mut out = vec![root.clone()];
    let mut frontier = vec![root];
    for _ in 0..depth {
        let mut next = Vec::new();
        for c in &frontier {
            for m in moves(net, c, None) {
                if seen.insert(m.config.clone()) {
                    out.push(m.config.clone());
                    next.push(m.config);
                }
            }
        }
        frontier = next;
    }
    out
}

/// Lasso acceptance through the relation of one cycle pass: some state
/// reachable after the stem lies on a loop of cycle passes that visits an
/// accepting state.
fn lasso_oracle(f: &Fsm, stem: &[Action], cycle: &[Action]) -> bool {
    let n = f.states.len();
    let after = |from: &BTreeSet<usize>, a: Action| -> BTreeSet<usize> {
        f.transitions.iter().filter(|t| t.action == a && from.contains(&t.src)).map(|t| t.dst).collect()
    };
    let mut start = BTreeSet::from([f.initial]);
    for &a in stem {
        start = after(&start, a);
    }
    // pass[p] = (q, visited an accepting state) pairs after one cycle
    let mut pass: Vec<BTreeSet<(usize, bool)>> = vec![BTreeSet::new(); n];
    for (p, out) in pass.iter_mut().enumerate() {
        let mut cur = BTreeSet::from([(p, false)]);
        for &a in cycle {
            let mut next = BTreeSet::new();
            for &(q, flag) in &cur {
                for t in f.transitions.iter().filter(|t| t.src == q && t.action == a) {
                    next.insert((t.dst, flag || f.is_accepting(t.dst)));
                }
            }
            cur = next;
        }
        *out = cur;
    }
    let closure = |from: &BTreeSet<usize>| -> BTreeSet<usize> {
        let mut seen = from.clone();
        let mut todo: Vec<usize> = from.iter().copied().collect();
        while let Some(p) = todo.pop() {
            for &(q, _) in &pass[p] {
                if seen.insert(q) {
                    todo.push(q);
                }
            }
        }
        seen
    };
    let reach = closure(&start);
    reach.iter().any(|&p| pass[p].iter().any(|&(q, flag)| flag && closure(&BTreeSet::from([q])).contains(&p)))
}

fn random_actions<R: Rng>(r: &mut R, values: usize, len: usize) -> Vec<Action> {
    (0..len)
        .map(|_| {
            let v = r.gen_range(0..values);
            if r.gen_bool(0.5) {
                Action::read(v)
            } else {
                Action::write(v)
            }
        })
        .collect()
}

fn random_population<R: Rng>(r: &mut R, states: usize) -> Population {
    let k = r.gen_range(1..=4);
    Population::from_locals((0..k).map(|_| Local { state: r.gen_range(0..states), stack: vec![] }))
}

/// Configurations of a PDM reachable within `depth` steps and `height`.
fn pdm_reach(pdm: &Pdm, depth: usize, height: usize) -> HashSet<(usize, Vec<usize>)> {
    let root = (pdm.initial, vec![BOTTOM]);
    let mut seen = HashSet::from([root.clone()]);
    let mut queue = VecDeque::from([(root, 0)]);
    while let Some(((q, w), d)) = queue.pop_front() {
        if d == depth {
            continue;
        }
        for r in pdm.rules.iter().filter(|r| r.src == q) {
            let mut w2 = w.clone();
            if r.apply(&mut w2) && w2.len() <= height && seen.insert((r.dst, w2.clone())) {
                queue.push_back(((r.dst, w2), d + 1));
            }
        }
    }
    seen
}

fn stacks_upto(symbols: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![BOTTOM]];
    let mut layer = vec![vec![BOTTOM]];
    for _ in 1..len {
        layer = layer
            .iter()
            .flat_map(|w| {
                (1..=symbols).map(move |g| {
                    let mut v = w.clone();
                    v.push(g);
                    v
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn machines_round_trip(seed in any::<u64>()) {
        let f = gen::fsm_net(seed, 2);
        let p = gen::pdm_net(seed);
        for m in [f.leader, f.contributor, Machine::Fsm(f.property), p.leader, p.contributor] {
            prop_assert_eq!(parse_machine(&print_machine(&m)).unwrap(), m);
        }
    }

    #[test]
    fn product_state_bound(seed in any::<u64>()) {
        let mut r = gen::rng(seed);
        let a_states = r.gen_range(1..=3);
        let a = gen::property(&mut r, 2, a_states);
        let buchi = r.gen_bool(0.5);
        let d_states = r.gen_range(1..=4);
        let d = Machine::Fsm(gen::fsm(&mut r, 2, d_states, buchi));
        let p = buchi_product(&a, &d).unwrap();
        let phases = if buchi { 2 } else { 1 };
        prop_assert!(p.states().len() <= a.states.len() * d.states().len() * phases);
        let pd = Machine::Pdm(gen::pdm(&mut r, 2, 2, 1));
        prop_assert!(buchi_product(&a, &pd).unwrap().states().len() <= a.states.len() * 2);
    }

    #[test]
    fn lasso_membership(seed in any::<u64>()) {
        let mut r = gen::rng(seed);
        let states = r.gen_range(1..=3);
        let f = gen::fsm(&mut r, 2, states, true);
        let stem_len = r.gen_range(0..4);
        let stem = random_actions(&mut r, 2, stem_len);
        let cycle_len = r.gen_range(1..4);
        let cycle = random_actions(&mut r, 2, cycle_len);
        prop_assert_eq!(f.accepts_lasso(&stem, &cycle), lasso_oracle(&f, &stem, &cycle));
    }

    #[test]
    fn population_size_is_invariant(seed in any::<u64>(), k in 1usize..4) {
        let net = gen::fsm_net(seed, 2).network();
        for c in explicit_reach(&net, k, 5) {
            prop_assert_eq!(c.population.size(), k as u64);
        }
    }

    #[test]
    fn galois_laws(seed in any::<u64>()) {
        let mut r = gen::rng(seed);
        let n = r.gen_range(1..=4);
        let p = random_population(&mut r, n);
        let q = random_population(&mut r, n);
        let s = StateSet::from_states(n, (0..n).filter(|_| r.gen_bool(0.5)));
        prop_assert!(gamma(&alpha(n, [&p]), &p));
        prop_assert!(alpha(n, [&p]).is_subset(&alpha(n, [&p, &q])));
        prop_assert_eq!(gamma(&s, &p), alpha(n, [&p]).is_subset(&s));
    }

    #[test]
    fn explicit_runs_are_abstract_paths(seed in any::<u64>(), k in 1usize..4) {
        let net = gen::fsm_net(seed, 2).network();
        let g = reachable_abstract(&net, &Options::default()).unwrap();
        let n = net.contributor_states();
        let mut r = gen::rng(seed ^ 0x5eed);
        let mut c = initial_config(&net, k).unwrap();
        let mut a = AbstractConfig { leader: c.leader.state, store: c.store, set: alpha(n, [&c.population]) };
        for _ in 0..12 {
            let ms = moves(&net, &c, None);
            if ms.is_empty() {
                break;
            }
            let m = ms[r.gen_range(0..ms.len())].clone();
            let next = AbstractConfig {
                leader: m.config.leader.state,
                store: m.config.store,
                set: a.set.union(&alpha(n, [&m.config.population])),
            };
            let from = g.index[&a];
            let to = g.index.get(&next).copied();
            prop_assert!(to.is_some_and(|to| g.edges[from as usize].contains(&(m.transition, to))));
            a = next;
            c = m.config;
        }
    }

    #[test]
    fn abstract_configs_are_covered(seed in any::<u64>()) {
        let net = gen::fsm_net(seed, 2).network();
        let g = reachable_abstract(&net, &Options::default()).unwrap();
        for v in 0..g.len() as u32 {
            let a = &g.configs[v as usize];
            let stem: Vec<TransitionId> = g.stem(v).into_iter().map(|(t, _)| t).collect();
            let (k, expanded) = expand_stem(&net, &stem, a.set.iter(), 1);
            let mut c = initial_config(&net, k).unwrap();
            for t in expanded {
                let m = moves(&net, &c, None).into_iter().find(|m| m.transition == t);
                prop_assert!(m.is_some(), "transition {:?} disabled", t);
                c = m.unwrap().config;
            }
            prop_assert_eq!((c.leader.state, c.store), (a.leader, a.store));
            let covered = a.set.iter().all(|q| c.population.count(&Local { state: q, stack: vec![] }) > 0);
            prop_assert!(covered);
        }
    }

    #[test]
    fn explicit_cycles_have_zero_net_effect(seed in any::<u64>()) {
        let net = gen::fsm_net(seed, 2).network();
        if let Verdict::Nonempty(w) = check_explicit(&net, 3, None, &Options::default()).unwrap().verdict {
            let mut total = vec![0i32; net.contributor_states()];
            for s in &w.cycle {
                for (t, d) in total.iter_mut().zip(paramck::abstraction::delta(&net, s.transition).0) {
                    *t += d;
                }
            }
            prop_assert!(total.iter().all(|&x| x == 0));
        }
    }

    #[test]
    fn post_star_matches_bounded_search(seed in any::<u64>()) {
        let mut r = gen::rng(seed);
        let symbols = r.gen_range(1..=2);
        let states = r.gen_range(1..=2);
        let pdm = gen::pdm(&mut r, 2, states, symbols);
        let sat = post_star(&pdm, pdm.initial, 10_000).unwrap();
        prop_assert!(sat.is_closed(&pdm));
        for (q, w) in pdm_reach(&pdm, 12, 13) {
            let top_first: Vec<usize> = w.iter().rev().copied().collect();
            prop_assert!(sat.accepts(&q, &top_first), "reachable ({}, {:?}) rejected", q, w);
        }
        let wide = pdm_reach(&pdm, 60, 16);
        for q in 0..pdm.states.len() {
            for w in stacks_upto(symbols, 6) {
                let top_first: Vec<usize> = w.iter().rev().copied().collect();
                if sat.accepts(&q, &top_first) {
                    prop_assert!(wide.contains(&(q, w.clone())), "accepted ({}, {:?}) not found", q, w);
                }
            }
        }
    }

    #[test]
    fn esh_one_recurs_in_every_period(seed in any::<u64>()) {
        let mut r = gen::rng(seed);
        let (states, symbols) = (r.gen_range(1..=2), r.gen_range(1..=2));
        let pdm = gen::pdm(&mut r, 2, states, symbols);
        let mut stem = Vec::new();
        let (mut q, mut w) = (pdm.initial, vec![BOTTOM]);
        for _ in 0..r.gen_range(0..5) {
            let enabled: Vec<usize> = (0..pdm.rules.len())
                .filter(|&i| pdm.rules[i].src == q && pdm.rules[i].apply(&mut w.clone()))
                .collect();
            if enabled.is_empty() {
                break;
            }
            let i = enabled[r.gen_range(0..enabled.len())];
            pdm.rules[i].apply(&mut w);
            q = pdm.rules[i].dst;
            stem.push(i);
        }
        let lasso = cycles(&pdm, 4).into_iter().find_map(|c| RunPrefix::lasso(&pdm, stem.clone(), c).ok());
        if let Some(run) = lasso {
            let s = stem.len();
            let c = run.len() - s;
            for period in 0..3 {
                let ones = (s + period * c..s + (period + 1) * c)
                    .filter(|&i| run.effective_stack_height(i).unwrap() == 1)
                    .count();
                prop_assert!(ones >= 1, "period {} has no position of height 1", period);
            }
        }
    }

    #[test]
    fn euler_witness_is_a_member(seed in any::<u64>()) {
        let mut r = gen::rng(seed);
        let f = gen::fsa(&mut r, 5, 3);
        let p = parikh_fsa(&f);
        if let Solution::Sat(x) = solve(&p.system, 100_000) {
            let path = euler_witness(&f, &p.edge_counts(&x));
            prop_assert!(path.is_some());
            let word = f.word(&path.unwrap());
            prop_assert!(f.accepts(&word));
            let mut counts = vec![0i64; f.letters];
            for l in word {
                counts[l] += 1;
            }
            prop_assert_eq!(counts, p.letter_counts(&x));
        }
    }
}

/// All rule sequences of length `1..=max`.
fn cycles(pdm: &Pdm, max: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut layer = vec![Vec::new()];
    for _ in 0..max {
        layer = layer
            .iter()
            .flat_map(|c: &Vec<usize>| {
                (0..pdm.rules.len()).map(move |i| {
                    let mut d = c.clone();
                    d.push(i);
                    d
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}
