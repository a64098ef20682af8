//! Parikh image of a finite automaton with one initial and one final state.

use super::linear::{sum, Formula, Linear, LinearSystem, VarId};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FsaEdge {
    pub src: usize,
    pub letter: usize,
    pub dst: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fsa {
    pub states: usize,
    pub letters: usize,
    pub initial: usize,
    pub final_state: usize,
    pub edges: Vec<FsaEdge>,
}

impl Fsa {
    /// Letters along a path given as edge indices.
    pub fn word(&self, path: &[usize]) -> Vec<usize> {
        path.iter().map(|&e| self.edges[e].letter).collect()
    }

    /// Does some path from the initial to the final state spell `word`?
    pub fn accepts(&self, word: &[usize]) -> bool {
        let mut cur = vec![false; self.states];
        cur[self.initial] = true;
        for &l in word {
            let mut next = vec![false; self.states];
            for e in &self.edges {
                if e.letter == l && cur[e.src] {
                    next[e.dst] = true;
                }
            }
            cur = next;
        }
        cur[self.final_state]
    }
}

/// The system for `fsa` together with its variable layout. Letter
/// variables come first, so `letters[l] == VarId(l)`.
#[derive(Clone, Debug)]
pub struct FsaParikh {
    pub system: LinearSystem,
    pub letters: Vec<VarId>,
    pub edges: Vec<VarId>,
    pub depths: Vec<VarId>,
}

impl FsaParikh {
    pub fn letter_counts(&self, x: &[i64]) -> Vec<i64> {
        self.letters.iter().map(|v| x[v.0]).collect()
    }

    pub fn edge_counts(&self, x: &[i64]) -> Vec<i64> {
        self.edges.iter().map(|v| x[v.0]).collect()
    }
}

/// Solutions projected onto the letter variables are exactly the Parikh
/// vectors of accepted words. Edge variables count edge uses and depth
/// variables order used states along a spanning tree rooted at the
/// initial state.
pub fn parikh_fsa(fsa: &Fsa) -> FsaParikh {
    let mut sys = LinearSystem::new();
    let letters: Vec<VarId> = (0..fsa.letters).map(|l| sys.var(format!("x{l}"))).collect();
    let edges: Vec<VarId> = (0..fsa.edges.len()).map(|i| sys.var(format!("e{i}"))).collect();
    let depths: Vec<VarId> = (0..fsa.states).map(|q| sys.var(format!("z{q}"))).collect();

    for (l, &x) in letters.iter().enumerate() {
        let uses = fsa.edges.iter().zip(&edges).filter(|(e, _)| e.letter == l).map(|(_, &v)| (v, -1));
        sys.add_linear(Linear::eq(uses.chain([(x, 1)]), 0));
    }
    for q in 0..fsa.states {
        let mut terms = Vec::new();
        for (e, &v) in fsa.edges.iter().zip(&edges) {
            if e.dst == q {
                terms.push((v, 1));
            }
            if e.src == q {
                terms.push((v, -1));
            }
        }
        let rhs = i64::from(q == fsa.final_state) - i64::from(q == fsa.initial);
        sys.add_linear(Linear::eq(terms, rhs));
    }
    let n = fsa.states as i64;
    sys.add_linear(Linear::eq([(depths[fsa.initial], 1)], 0));
    for q in 0..fsa.states {
        sys.add_linear(Linear::le([(depths[q], 1)], n));
        if q == fsa.initial {
            continue;
        }
        let incoming: Vec<VarId> =
            fsa.edges.iter().zip(&edges).filter(|(e, _)| e.dst == q).map(|(_, &v)| v).collect();
        let mut options = vec![Formula::atom(Linear::eq(sum(incoming), 0))];
        for (e, &v) in fsa.edges.iter().zip(&edges) {
            if e.dst == q && e.src != q {
                options.push(Formula::and([
                    Formula::atom(Linear::ge([(v, 1)], 1)),
                    Formula::atom(Linear::le([(depths[e.src], 1), (depths[q], -1)], -1)),
                ]));
            }
        }
        sys.add(Formula::or(options));
    }
    FsaParikh { system: sys, letters, edges, depths }
}

/// A path from the initial to the final state using edge `i` exactly
/// `counts[i]` times, as edge indices. At each state the unused edge with
/// the smallest letter is taken first. `None` if the counts do not
/// describe such a path.
pub fn euler_witness(fsa: &Fsa, counts: &[i64]) -> Option<Vec<usize>> {
    if counts.len() != fsa.edges.len() || counts.iter().any(|&c| c < 0) {
        return None;
    }
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); fsa.states];
    for (i, e) in fsa.edges.iter().enumerate() {
        if counts[i] > 0 {
            out[e.src].push(i);
        }
    }
    for list in &mut out {
        list.sort_by_key(|&i| (fsa.edges[i].letter, i));
    }
    let mut left = counts.to_vec();
    let mut cursor = vec![0usize; fsa.states];
    let mut stack: Vec<(usize, Option<usize>)> = vec![(fsa.initial, None)];
    let mut path = Vec::new();
    while let Some(&(v, via)) = stack.last() {
        while cursor[v] < out[v].len() && left[out[v][cursor[v]]] == 0 {
            cursor[v] += 1;
        }
        match out[v].get(cursor[v]) {
            Some(&e) => {
                left[e] -= 1;
                stack.push((fsa.edges[e].dst, Some(e)));
            }
            None => {
                stack.pop();
                path.extend(via);
            }
        }
    }
    path.reverse();
    let total: i64 = counts.iter().sum();
    let mut at = fsa.initial;
    for &e in &path {
        if fsa.edges[e].src != at {
            return None;
        }
        at = fsa.edges[e].dst;
    }
    (path.len() as i64 == total && at == fsa.final_state).then_some(path)
}
