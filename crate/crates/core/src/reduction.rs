//! PDM contributors: effective stack height, k-restrictions, run
//! distributions and the PDM/PDM checker.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::cycle::check_fsm_fsm;
use crate::explicit::{Outcome, Verdict};
use crate::machines::{Action, Fsm, FsmTransition, Machine, Network, Pdm, StackEffect, StateId, SymbolId, BOTTOM};
use crate::pushdown::check_pdm_fsm;
use crate::{BudgetExceeded, Options};

/// A PDM configuration; the stack has its top at the end.
pub type Config = (StateId, Vec<SymbolId>);

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum RunError {
    #[error("rule {rule} at position {position} does not exist")]
    UnknownRule { position: usize, rule: usize },
    #[error("rule at position {position} is not enabled")]
    NotEnabled { position: usize },
    #[error("position {position} is beyond the run of length {len}")]
    OutOfRange { position: usize, len: usize },
    #[error("lasso cycle is empty")]
    EmptyCycle,
    #[error("lasso cycle pops below its starting height at cycle position {position}")]
    CyclePopsPivot { position: usize },
    #[error("lasso cycle does not end in its starting state and top symbol")]
    CycleNotClosed,
}

/// A sequence of rules applied from the initial configuration `q0 bot`.
///
/// With `lasso = Some(s)` the run is infinite: `rules[..s]` is the stem and
/// `rules[s..]` repeats forever. The cycle must start and end in the same
/// state with the same top symbol and never pop that symbol, which makes
/// every period behave identically.
#[derive(Clone, Debug)]
pub struct RunPrefix<'a> {
    pub pdm: &'a Pdm,
    pub rules: Vec<usize>,
    pub lasso: Option<usize>,
}

impl<'a> RunPrefix<'a> {
    pub fn finite(pdm: &'a Pdm, rules: Vec<usize>) -> Result<Self, RunError> {
        let run = RunPrefix { pdm, rules, lasso: None };
        run.validate()?;
        Ok(run)
    }

    pub fn lasso(pdm: &'a Pdm, stem: Vec<usize>, cycle: Vec<usize>) -> Result<Self, RunError> {
        let s = stem.len();
        let mut rules = stem;
        rules.extend(cycle);
        let run = RunPrefix { pdm, rules, lasso: Some(s) };
        run.validate()?;
        Ok(run)
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn validate(&self) -> Result<(), RunError> {
        let configs = self.walk(&self.rules)?;
        let Some(s) = self.lasso else { return Ok(()) };
        if s >= self.rules.len() {
            return Err(RunError::EmptyCycle);
        }
        let (q, ref start) = configs[s];
        let h = start.len();
        for (offset, (_, w)) in configs[s + 1..].iter().enumerate() {
            if w.len() < h {
                return Err(RunError::CyclePopsPivot { position: offset + 1 });
            }
        }
        let (q_end, end) = configs.last().expect("nonempty");
        if *q_end != q || end.last() != start.last() {
            return Err(RunError::CycleNotClosed);
        }
        Ok(())
    }

    fn walk(&self, rules: &[usize]) -> Result<Vec<Config>, RunError> {
        let mut q = self.pdm.initial;
        let mut w = vec![BOTTOM];
        let mut out = Vec::with_capacity(rules.len() + 1);
        out.push((q, w.clone()));
        for (i, &r) in rules.iter().enumerate() {
            let position = i + 1;
            let rule = self.pdm.rules.get(r).ok_or(RunError::UnknownRule { position, rule: r })?;
            if rule.src != q || !rule.apply(&mut w) {
                return Err(RunError::NotEnabled { position });
            }
            q = rule.dst;
            out.push((q, w.clone()));
        }
        Ok(out)
    }

    /// Rules of the first `len` steps, unrolling the cycle as needed.
    fn unrolled(&self, len: usize) -> Vec<usize> {
        match self.lasso {
            None => self.rules[..len.min(self.rules.len())].to_vec(),
            Some(s) => {
                let cycle = &self.rules[s..];
                (0..len).map(|i| if i < s { self.rules[i] } else { cycle[(i - s) % cycle.len()] }).collect()
            }
        }
    }

    /// Configurations at positions `0..=len`. Lassos are unrolled; finite
    /// runs are cut at their length.
    pub fn configs(&self, len: usize) -> Vec<Config> {
        self.walk(&self.unrolled(len)).expect("validated run")
    }

    /// Last position whose later stacks decide the effective stack height
    /// at `i`: the end of the run, or for lassos the end of the period
    /// containing `i`.
    fn horizon(&self, i: usize) -> Result<usize, RunError> {
        match self.lasso {
            None if i > self.rules.len() => Err(RunError::OutOfRange { position: i, len: self.rules.len() }),
            None => Ok(self.rules.len()),
            Some(s) => {
                let c = self.rules.len() - s;
                Ok(if i < s { s + c } else { s + ((i - s) / c + 1) * c })
            }
        }
    }

    pub fn effective_stack_height(&self, i: usize) -> Result<usize, RunError> {
        let h = self.horizon(i)?;
        let stacks: Vec<Vec<SymbolId>> = self.configs(h).into_iter().map(|(_, w)| w).collect();
        Ok(esh_within(&stacks, i))
    }

    /// Effective stack heights at positions `0..=len()`.
    pub fn esh_profile(&self) -> Vec<usize> {
        let h = self.horizon(self.rules.len()).expect("in range");
        let stacks: Vec<Vec<SymbolId>> = self.configs(h).into_iter().map(|(_, w)| w).collect();
        (0..=self.rules.len()).map(|i| esh_within(&stacks, i)).collect()
    }
}

fn common_prefix(a: &[SymbolId], b: &[SymbolId]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

/// Height of the stack at `i` minus its dark part: the longest bottom
/// segment that stays strictly below the top of every stack from `i` on.
fn esh_within(stacks: &[Vec<SymbolId>], i: usize) -> usize {
    let w = &stacks[i];
    let dark = stacks[i..].iter().map(|v| common_prefix(w, v).min(v.len() - 1)).min().expect("nonempty");
    w.len() - dark
}

/// Largest effective stack height of a finite rule sequence, or `None` if
/// the rules do not form a run.
fn max_esh(pdm: &Pdm, rules: &[usize]) -> Option<usize> {
    let run = RunPrefix::finite(pdm, rules.to_vec()).ok()?;
    run.esh_profile().into_iter().max()
}

/// The FSM simulating runs of a PDM that never look deeper than `k`
/// symbols, with the PDM rule behind every transition.
#[derive(Clone, Debug)]
pub struct Restriction {
    pub k: usize,
    pub fsm: Fsm,
    /// Per FSM state: PDM state and the top `k` stack symbols, top first.
    pub states: Vec<(StateId, Vec<SymbolId>)>,
    pub rule_of: Vec<usize>,
}

/// Builds the reachable part of the k-restriction of `pdm`.
///
/// States pair a PDM state with up to `k` top stack symbols. A push
/// prepends and truncates to `k`; a pop drops the top symbol and is only
/// available while at least two symbols are remembered.
pub fn restrict(pdm: &Pdm, k: usize, cap: usize) -> Result<Restriction, BudgetExceeded> {
    assert!(k >= 1, "restriction needs k >= 1");
    let over = || BudgetExceeded::Restriction { k, cap };
    let mut index: HashMap<(StateId, Vec<SymbolId>), usize> = HashMap::new();
    let mut states = vec![(pdm.initial, vec![BOTTOM])];
    index.insert(states[0].clone(), 0);
    if cap == 0 {
        return Err(over());
    }
    let mut transitions = Vec::new();
    let mut rule_of = Vec::new();
    let mut next = 0;
    while next < states.len() {
        let (q, t) = states[next].clone();
        for (r, rule) in pdm.rules.iter().enumerate() {
            if rule.src != q || t[0] != rule.top {
                continue;
            }
            let t2 = match rule.effect {
                StackEffect::Push(g) => std::iter::once(g).chain(t.iter().copied()).take(k).collect(),
                StackEffect::Pop if t.len() >= 2 => t[1..].to_vec(),
                StackEffect::Pop => continue,
            };
            let key = (rule.dst, t2);
            let dst = match index.get(&key) {
                Some(&d) => d,
                None => {
                    if states.len() >= cap {
                        return Err(over());
                    }
                    states.push(key.clone());
                    index.insert(key, states.len() - 1);
                    states.len() - 1
                }
            };
            transitions.push(FsmTransition { src: next, action: rule.action, dst });
            rule_of.push(r);
        }
        next += 1;
    }
    let names = states
        .iter()
        .map(|(q, t)| {
            let syms: Vec<&str> = t.iter().map(|&s| pdm.stack[s].as_str()).collect();
            format!("{}:{}", pdm.states[*q], syms.join("."))
        })
        .collect();
    let fsm = Fsm { values: pdm.values.clone(), states: names, initial: 0, transitions, accepting: None };
    Ok(Restriction { k, fsm, states, rule_of })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Agreement {
    /// Both sides produce the same words; `words` is how many.
    Holds { words: usize },
    /// Shortest, then least, word on which the two sides differ.
    Counterexample { word: Vec<Action>, bounded_run: bool, restricted_path: bool },
}

/// Compares, for every action word of length at most `len`, whether some
/// run of `pdm` labelled by it has effective stack height at most `k`
/// everywhere (measured within that run) against whether it labels a path
/// of the k-restriction.
pub fn kbounded_agreement(pdm: &Pdm, k: usize, len: usize, cap: usize) -> Result<Agreement, BudgetExceeded> {
    let mut runs = BTreeSet::new();
    let mut visited = 0usize;
    let mut rules = Vec::new();
    let mut word = Vec::new();
    bounded_words(pdm, k, len, cap, &mut visited, &mut rules, &mut word, &mut runs)?;

    let restriction = restrict(pdm, k, cap)?;
    let mut paths = BTreeSet::new();
    let mut frontier: BTreeSet<(usize, Vec<Action>)> = BTreeSet::from([(0, Vec::new())]);
    for _ in 0..=len {
        let mut grown = BTreeSet::new();
        for (s, w) in &frontier {
            paths.insert(w.clone());
            if w.len() == len {
                continue;
            }
            for t in restriction.fsm.transitions.iter().filter(|t| t.src == *s) {
                let mut w2 = w.clone();
                w2.push(t.action);
                grown.insert((t.dst, w2));
            }
        }
        if grown.len() > cap {
            return Err(BudgetExceeded::Configs(cap));
        }
        frontier = grown;
    }

    let key = |w: &Vec<Action>| (w.len(), w.clone());
    let diff = runs.symmetric_difference(&paths).min_by_key(|w| key(w));
    Ok(match diff {
        None => Agreement::Holds { words: runs.len() },
        Some(w) => Agreement::Counterexample {
            word: w.clone(),
            bounded_run: runs.contains(w),
            restricted_path: paths.contains(w),
        },
    })
}

#[allow(clippy::too_many_arguments)]
fn bounded_words(
    pdm: &Pdm,
    k: usize,
    len: usize,
    cap: usize,
    visited: &mut usize,
    rules: &mut Vec<usize>,
    word: &mut Vec<Action>,
    out: &mut BTreeSet<Vec<Action>>,
) -> Result<(), BudgetExceeded> {
    *visited += 1;
    if *visited > cap {
        return Err(BudgetExceeded::Configs(cap));
    }
    // a longer horizon only raises effective heights, so prune here
    match max_esh(pdm, rules) {
        Some(m) if m <= k => {}
        _ => return Ok(()),
    }
    out.insert(word.clone());
    if rules.len() == len || rules.len() + 1 > k + len {
        return Ok(());
    }
    for r in 0..pdm.rules.len() {
        rules.push(r);
        word.push(pdm.rules[r].action);
        let res = bounded_words(pdm, k, len, cap, visited, rules, word, out);
        rules.pop();
        word.pop();
        res?;
    }
    Ok(())
}

/// `2 q² g + 1` for `q` states and `g` stack symbols.
pub fn n_bound(states: usize, symbols: usize) -> usize {
    2 * states * states * symbols + 1
}

/// Restriction depth sufficient for a PDM contributor. The stack alphabet
/// is counted including the bottom symbol.
pub fn compute_n(contributor: &Pdm) -> usize {
    n_bound(contributor.states.len(), contributor.stack.len())
}

/// `net` with its PDM contributor replaced by the `k`-restriction.
pub fn restricted_network(net: &Network, k: usize, cap: usize) -> Result<(Network, Restriction), BudgetExceeded> {
    let pdm = net.contributor().as_pdm().expect("PDM contributor");
    let r = restrict(pdm, k, cap)?;
    let restricted = Network::new(net.leader().clone(), Machine::Fsm(r.fsm.clone()))
        .expect("restriction keeps the alphabet of a valid contributor");
    Ok((restricted, r))
}

/// Decides networks with a PDM contributor by running the FSM-contributor
/// procedure on its N-restriction. Witness contributor transitions refer to
/// the restriction, recorded in [`crate::explicit::Witness::restrict`].
pub fn check_pdm_pdm(net: &Network, opts: &Options) -> Outcome {
    let Some(pdm) = net.contributor().as_pdm() else {
        return if net.leader().is_pdm() { check_pdm_fsm(net, opts) } else { check_fsm_fsm(net, opts) };
    };
    let n = compute_n(pdm);
    let mut stats = BTreeMap::new();
    stats.insert("n", n as u64);
    let (restricted, r) = match restricted_network(net, n, opts.budget.max_restriction_states) {
        Ok(x) => x,
        Err(e) => return Outcome { verdict: Verdict::Budget(e), stats },
    };
    stats.insert("restriction_states", r.states.len() as u64);
    let mut out =
        if net.leader().is_pdm() { check_pdm_fsm(&restricted, opts) } else { check_fsm_fsm(&restricted, opts) };
    if let Verdict::Nonempty(w) = &mut out.verdict {
        w.restrict = Some(n);
    }
    out.stats.extend(stats);
    out
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum DistributionError {
    #[error("child {child} is not a run: {error}")]
    IllegalChild { child: usize, error: RunError },
    #[error("child {child} runs a different machine or is infinite")]
    Incompatible { child: usize },
    #[error("embedding of child {child} has the wrong length")]
    Arity { child: usize },
    #[error("child {child} position {position} maps outside the parent")]
    OutOfRange { child: usize, position: usize },
    #[error("child {child} position {position} uses a different rule than its image")]
    RuleMismatch { child: usize, position: usize },
    #[error("child {child} embedding is not increasing at position {position}")]
    NotMonotone { child: usize, position: usize },
    #[error("parent position {position} is not covered")]
    NotSurjective { position: usize },
}

/// Finite runs `children` embedded into `parent`. `psi[c][i]` is the
/// parent position (1-based) of the rule at 1-based position `i + 1` of
/// child `c`.
#[derive(Clone, Debug)]
pub struct Distribution<'a> {
    pub parent: RunPrefix<'a>,
    pub children: Vec<RunPrefix<'a>>,
    pub psi: Vec<Vec<usize>>,
}

impl Distribution<'_> {
    pub fn validate(&self) -> Result<(), DistributionError> {
        let n = self.parent.len();
        let mut covered = vec![false; n + 1];
        if self.psi.len() != self.children.len() {
            return Err(DistributionError::Arity { child: self.psi.len().min(self.children.len()) });
        }
        for (c, (child, psi)) in self.children.iter().zip(&self.psi).enumerate() {
            if !std::ptr::eq(child.pdm, self.parent.pdm) && child.pdm != self.parent.pdm || child.lasso.is_some() {
                return Err(DistributionError::Incompatible { child: c });
            }
            child.validate().map_err(|error| DistributionError::IllegalChild { child: c, error })?;
            if psi.len() != child.len() {
                return Err(DistributionError::Arity { child: c });
            }
            let mut prev = 0;
            for (i, &p) in psi.iter().enumerate() {
                let position = i + 1;
                if p == 0 || p > n {
                    return Err(DistributionError::OutOfRange { child: c, position });
                }
                if child.rules[i] != self.parent.rules[p - 1] {
                    return Err(DistributionError::RuleMismatch { child: c, position });
                }
                if p <= prev {
                    return Err(DistributionError::NotMonotone { child: c, position });
                }
                prev = p;
                covered[p] = true;
            }
        }
        match (1..=n).find(|&p| !covered[p]) {
            Some(position) => Err(DistributionError::NotSurjective { position }),
            None => Ok(()),
        }
    }

    /// Number of rules of child `c` mapped to parent positions `<= i`.
    pub fn last(&self, c: usize, i: usize) -> usize {
        self.psi[c].iter().take_while(|&&p| p <= i).count()
    }

    /// Wherever the parent has effective stack height 1, every child sits
    /// in the same configuration, also with effective stack height 1.
    pub fn is_synchronized(&self) -> bool {
        let parent = self.parent.configs(self.parent.len());
        let profile = self.parent.esh_profile();
        let children: Vec<(Vec<Config>, Vec<usize>)> =
            self.children.iter().map(|ch| (ch.configs(ch.len()), ch.esh_profile())).collect();
        (0..=self.parent.len()).filter(|&i| profile[i] == 1).all(|i| {
            children.iter().enumerate().all(|(c, (configs, esh))| {
                let l = self.last(c, i);
                configs[l] == parent[i] && esh[l] == 1
            })
        })
    }

    /// Every child has effective stack height at most `k` at the images of
    /// parent positions `0..=z`.
    pub fn is_bounded(&self, z: usize, k: usize) -> bool {
        self.children.iter().enumerate().all(|(c, ch)| {
            let esh = ch.esh_profile();
            (0..=z.min(self.parent.len())).all(|i| esh[self.last(c, i)] <= k)
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum FlattenError {
    #[error("only finite runs can be flattened")]
    Lasso,
    #[error("position {position} is beyond the run of length {len}")]
    OutOfRange { position: usize, len: usize },
    #[error("position {position} has effective stack height {esh}, expected the first to exceed {n}")]
    Precondition { position: usize, esh: usize, n: usize },
    #[error("no three levels share a push state, symbol and pop state")]
    NoRepeat,
}

/// Splits `run` into two shorter runs around `z`, the first position whose
/// effective stack height exceeds `n`.
///
/// Among the top `n + 1` stack levels at `z` that are pushed before and
/// popped after `z`, picks the lexicographically first three levels
/// `j1 < j2 < j3` agreeing on the state after the push, the symbol and the
/// state after the pop. The first child cuts out the segments between the
/// pushes and between the pops of `j1` and `j2`; the second does the same
/// for `j2` and `j3`.
pub fn flatten_run<'a>(run: &RunPrefix<'a>, z: usize, n: usize) -> Result<Distribution<'a>, FlattenError> {
    if run.lasso.is_some() {
        return Err(FlattenError::Lasso);
    }
    if z > run.len() {
        return Err(FlattenError::OutOfRange { position: z, len: run.len() });
    }
    let profile = run.esh_profile();
    if let Some(position) = (0..z).find(|&i| profile[i] > n) {
        return Err(FlattenError::Precondition { position, esh: profile[position], n });
    }
    if profile[z] != n + 1 {
        return Err(FlattenError::Precondition { position: z, esh: profile[z], n });
    }
    let configs = run.configs(run.len());
    let height = |t: usize| configs[t].1.len();
    let h = height(z);

    // (push position, pop position, triple) per active level, 1-based positions
    let mut levels = Vec::new();
    for level in h - n..=h {
        let push = (1..=z).rev().find(|&t| height(t) == level && height(t - 1) == level - 1);
        let pop = (z + 1..=run.len()).find(|&t| height(t) == level - 1);
        if let (Some(push), Some(pop)) = (push, pop) {
            let triple = (configs[push].0, configs[z].1[level - 1], configs[pop].0);
            levels.push((push, pop, triple));
        }
    }
    let mut chosen = None;
    'search: for a in 0..levels.len() {
        for b in a + 1..levels.len() {
            if levels[b].2 != levels[a].2 {
                continue;
            }
            for c in b + 1..levels.len() {
                if levels[c].2 == levels[a].2 {
                    chosen = Some((levels[a], levels[b], levels[c]));
                    break 'search;
                }
            }
        }
    }
    let Some((j1, j2, j3)) = chosen else { return Err(FlattenError::NoRepeat) };

    let cut = |lo: (usize, usize, _), hi: (usize, usize, _)| -> Vec<usize> {
        let (push_lo, pop_lo, _) = lo;
        let (push_hi, pop_hi, _) = hi;
        (1..=run.len())
            .filter(|&p| !(push_lo < p && p <= push_hi) && !(pop_hi < p && p <= pop_lo))
            .collect()
    };
    let psi = vec![cut(j1, j2), cut(j2, j3)];
    let children = psi
        .iter()
        .map(|keep| {
            let rules = keep.iter().map(|&p| run.rules[p - 1]).collect();
            RunPrefix::finite(run.pdm, rules).expect("matched push and pop segments cut cleanly")
        })
        .collect();
    Ok(Distribution { parent: run.clone(), children, psi })
}
