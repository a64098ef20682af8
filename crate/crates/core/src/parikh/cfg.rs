//! Parikh image of a context-free grammar.

use super::linear::{sum, Formula, Linear, LinearSystem, VarId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Symbol {
    T(usize),
    N(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Production {
    pub lhs: usize,
    pub rhs: Vec<Symbol>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grammar {
    pub nonterminals: usize,
    pub terminals: usize,
    pub start: usize,
    pub productions: Vec<Production>,
}

impl Grammar {
    /// Indices of productions that are productive and reachable from the
    /// start symbol through productive productions.
    pub fn useful_productions(&self) -> Vec<usize> {
        let mut productive = vec![false; self.nonterminals];
        let ok = |s: &Symbol, productive: &[bool]| match *s {
            Symbol::T(_) => true,
            Symbol::N(a) => productive[a],
        };
        loop {
            let mut changed = false;
            for p in &self.productions {
                if !productive[p.lhs] && p.rhs.iter().all(|s| ok(s, &productive)) {
                    productive[p.lhs] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let live: Vec<usize> = (0..self.productions.len())
            .filter(|&i| self.productions[i].rhs.iter().all(|s| ok(s, &productive)))
            .collect();
        let mut reached = vec![false; self.nonterminals];
        if !productive[self.start] {
            return Vec::new();
        }
        reached[self.start] = true;
        let mut stack = vec![self.start];
        while let Some(a) = stack.pop() {
            for &i in &live {
                let p = &self.productions[i];
                if p.lhs != a {
                    continue;
                }
                for s in &p.rhs {
                    if let Symbol::N(b) = *s {
                        if !reached[b] {
                            reached[b] = true;
                            stack.push(b);
                        }
                    }
                }
            }
        }
        live.into_iter().filter(|&i| reached[self.productions[i].lhs]).collect()
    }
}

/// The system for a grammar. Terminal variables come first, so
/// `terminals[t] == VarId(t)`. `productions` pairs each useful production
/// (by index in the grammar) with its use-count variable.
#[derive(Clone, Debug)]
pub struct CfgParikh {
    pub system: LinearSystem,
    pub terminals: Vec<VarId>,
    pub productions: Vec<(usize, VarId)>,
    pub depths: Vec<VarId>,
}

impl CfgParikh {
    pub fn terminal_counts(&self, x: &[i64]) -> Vec<i64> {
        self.terminals.iter().map(|v| x[v.0]).collect()
    }

    /// Use count per grammar production, zero for pruned ones.
    pub fn production_counts(&self, g: &Grammar, x: &[i64]) -> Vec<i64> {
        let mut out = vec![0; g.productions.len()];
        for &(i, v) in &self.productions {
            out[i] = x[v.0];
        }
        out
    }
}

fn occurrences(p: &Production, s: Symbol) -> i64 {
    p.rhs.iter().filter(|&&r| r == s).count() as i64
}

/// Solutions projected onto the terminal variables are exactly the Parikh
/// vectors of words of the grammar. The constraint is `False` if the
/// language is empty.
pub fn parikh_cfg(g: &Grammar) -> CfgParikh {
    let mut sys = LinearSystem::new();
    let terminals: Vec<VarId> = (0..g.terminals).map(|t| sys.var(format!("x{t}"))).collect();
    let useful = g.useful_productions();
    let productions: Vec<(usize, VarId)> = useful.iter().map(|&i| (i, sys.var(format!("y{i}")))).collect();
    let depths: Vec<VarId> = (0..g.nonterminals).map(|a| sys.var(format!("z{a}"))).collect();
    if productions.is_empty() {
        sys.add(Formula::False);
        return CfgParikh { system: sys, terminals, productions, depths };
    }
    let prod = |i: usize| &g.productions[i];

    for (t, &x) in terminals.iter().enumerate() {
        let terms = productions.iter().map(|&(i, y)| (y, -occurrences(prod(i), Symbol::T(t))));
        sys.add_linear(Linear::eq(terms.chain([(x, 1)]), 0));
    }
    for a in 0..g.nonterminals {
        // produced occurrences (plus the start symbol) equal expansions
        let mut terms = Vec::new();
        for &(i, y) in &productions {
            let p = prod(i);
            let k = occurrences(p, Symbol::N(a)) - i64::from(p.lhs == a);
            terms.push((y, k));
        }
        sys.add_linear(Linear::eq(terms, -i64::from(a == g.start)));
    }
    let n = g.nonterminals as i64;
    sys.add_linear(Linear::eq([(depths[g.start], 1)], 0));
    for a in 0..g.nonterminals {
        sys.add_linear(Linear::le([(depths[a], 1)], n));
        if a == g.start {
            continue;
        }
        let expansions = productions.iter().filter(|&&(i, _)| prod(i).lhs == a).map(|&(_, y)| y);
        let mut options = vec![Formula::atom(Linear::eq(sum(expansions), 0))];
        for &(i, y) in &productions {
            let p = prod(i);
            if p.lhs != a && p.rhs.contains(&Symbol::N(a)) {
                options.push(Formula::and([
                    Formula::atom(Linear::ge([(y, 1)], 1)),
                    Formula::atom(Linear::le([(depths[p.lhs], 1), (depths[a], -1)], -1)),
                ]));
            }
        }
        sys.add(Formula::or(options));
    }
    CfgParikh { system: sys, terminals, productions, depths }
}

/// A leftmost derivation using production `i` exactly `counts[i]` times,
/// returned as the derived word. Backtracks over production choices and
/// gives up after `max_steps` expansions in total.
pub fn derive(g: &Grammar, counts: &[i64], max_steps: usize) -> Option<Vec<usize>> {
    if counts.len() != g.productions.len() || counts.iter().any(|&c| c < 0) {
        return None;
    }
    let mut by_lhs: Vec<Vec<usize>> = vec![Vec::new(); g.nonterminals];
    for (i, p) in g.productions.iter().enumerate() {
        if counts[i] > 0 {
            by_lhs[p.lhs].push(i);
        }
    }
    let mut d = Deriver { g, by_lhs, left: counts.to_vec(), steps: 0, max_steps, word: Vec::new() };
    let stack = vec![Symbol::N(g.start)];
    d.go(stack).then_some(d.word)
}

struct Deriver<'a> {
    g: &'a Grammar,
    by_lhs: Vec<Vec<usize>>,
    left: Vec<i64>,
    steps: usize,
    max_steps: usize,
    word: Vec<usize>,
}

impl Deriver<'_> {
    /// Every nonterminal still owed an expansion is reachable from a
    /// pending one through productions with uses left.
    fn connected(&self, stack: &[Symbol]) -> bool {
        let mut seen = vec![false; self.g.nonterminals];
        let mut todo: Vec<usize> = Vec::new();
        for s in stack {
            if let Symbol::N(a) = *s {
                if !seen[a] {
                    seen[a] = true;
                    todo.push(a);
                }
            }
        }
        while let Some(a) = todo.pop() {
            for &i in &self.by_lhs[a] {
                if self.left[i] == 0 {
                    continue;
                }
                for s in &self.g.productions[i].rhs {
                    if let Symbol::N(b) = *s {
                        if !seen[b] {
                            seen[b] = true;
                            todo.push(b);
                        }
                    }
                }
            }
        }
        (0..self.g.nonterminals).all(|a| seen[a] || self.by_lhs[a].iter().all(|&i| self.left[i] == 0))
    }

    fn go(&mut self, mut stack: Vec<Symbol>) -> bool {
        let mark = self.word.len();
        loop {
            match stack.pop() {
                None => {
                    if self.left.iter().all(|&c| c == 0) {
                        return true;
                    }
                    self.word.truncate(mark);
                    return false;
                }
                Some(Symbol::T(t)) => self.word.push(t),
                Some(Symbol::N(a)) => {
                    let choices: Vec<usize> =
                        self.by_lhs[a].iter().copied().filter(|&i| self.left[i] > 0).collect();
                    for i in choices {
                        self.steps += 1;
                        if self.steps > self.max_steps {
                            break;
                        }
                        self.left[i] -= 1;
                        let mut next = stack.clone();
                        next.extend(self.g.productions[i].rhs.iter().rev().copied());
                        if self.connected(&next) && self.go(next) {
                            return true;
                        }
                        self.left[i] += 1;
                    }
                    self.word.truncate(mark);
                    return false;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parikh::solver::{solve, Solution};

    fn with_terminals(p: &CfgParikh, xs: &[i64]) -> LinearSystem {
        let mut s = p.system.clone();
        for (t, &x) in xs.iter().enumerate() {
            s.add_linear(Linear::eq([(p.terminals[t], 1)], x));
        }
        s
    }

    /// S -> t0 S t1 | ε
    fn nested() -> Grammar {
        Grammar {
            nonterminals: 1,
            terminals: 2,
            start: 0,
            productions: vec![
                Production { lhs: 0, rhs: vec![Symbol::T(0), Symbol::N(0), Symbol::T(1)] },
                Production { lhs: 0, rhs: vec![] },
            ],
        }
    }

    #[test]
    fn nested_is_balanced() {
        let g = nested();
        let p = parikh_cfg(&g);
        for a in 0..4 {
            for b in 0..4 {
                assert_eq!(solve(&with_terminals(&p, &[a, b]), 10_000).is_sat(), a == b);
            }
        }
        let Solution::Sat(x) = solve(&with_terminals(&p, &[2, 2]), 10_000) else { panic!() };
        let w = derive(&g, &p.production_counts(&g, &x), 1000).unwrap();
        assert_eq!(w, vec![0, 0, 1, 1]);
    }

    #[test]
    fn single_terminal() {
        let g = Grammar {
            nonterminals: 1,
            terminals: 1,
            start: 0,
            productions: vec![Production { lhs: 0, rhs: vec![Symbol::T(0)] }],
        };
        let p = parikh_cfg(&g);
        assert!(solve(&with_terminals(&p, &[1]), 1000).is_sat());
        assert!(!solve(&with_terminals(&p, &[2]), 1000).is_sat());
        assert!(!solve(&with_terminals(&p, &[0]), 1000).is_sat());
    }

    #[test]
    fn empty_language_is_false() {
        // S -> S t0 only
        let g = Grammar {
            nonterminals: 1,
            terminals: 1,
            start: 0,
            productions: vec![Production { lhs: 0, rhs: vec![Symbol::N(0), Symbol::T(0)] }],
        };
        assert_eq!(*parikh_cfg(&g).system.constraint(), Formula::False);
    }

    #[test]
    fn unreachable_loop_is_not_counted() {
        // S -> t0 ; A -> t1 A | ε, A unreachable
        let g = Grammar {
            nonterminals: 2,
            terminals: 2,
            start: 0,
            productions: vec![
                Production { lhs: 0, rhs: vec![Symbol::T(0)] },
                Production { lhs: 1, rhs: vec![Symbol::T(1), Symbol::N(1)] },
                Production { lhs: 1, rhs: vec![] },
            ],
        };
        assert_eq!(g.useful_productions(), vec![0]);
        let p = parikh_cfg(&g);
        assert!(!solve(&with_terminals(&p, &[1, 1]), 1000).is_sat());
    }

    #[test]
    fn derive_rejects_disconnected_counts() {
        let g = nested();
        assert_eq!(derive(&g, &[0, 1], 100), Some(vec![]));
        assert_eq!(derive(&g, &[1, 2], 100), None);
    }
}
