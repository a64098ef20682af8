//! Existential linear arithmetic over the naturals: variables, linear
//! atoms and and/or formulas over them.

use std::fmt::Write as _;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

/// `Σ coef·var  cmp  rhs`, with variables merged and zero terms dropped.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Linear {
    pub terms: Vec<(VarId, i64)>,
    pub cmp: Cmp,
    pub rhs: i64,
}

impl Linear {
    pub fn new(terms: impl IntoIterator<Item = (VarId, i64)>, cmp: Cmp, rhs: i64) -> Linear {
        let mut t: Vec<(VarId, i64)> = terms.into_iter().collect();
        t.sort_by_key(|&(v, _)| v);
        let mut merged: Vec<(VarId, i64)> = Vec::with_capacity(t.len());
        for (v, c) in t {
            match merged.last_mut() {
                Some((w, d)) if *w == v => *d += c,
                _ => merged.push((v, c)),
            }
        }
        merged.retain(|&(_, c)| c != 0);
        Linear { terms: merged, cmp, rhs }
    }

    pub fn eq(terms: impl IntoIterator<Item = (VarId, i64)>, rhs: i64) -> Linear {
        Linear::new(terms, Cmp::Eq, rhs)
    }

    pub fn le(terms: impl IntoIterator<Item = (VarId, i64)>, rhs: i64) -> Linear {
        Linear::new(terms, Cmp::Le, rhs)
    }

    pub fn ge(terms: impl IntoIterator<Item = (VarId, i64)>, rhs: i64) -> Linear {
        Linear::new(terms, Cmp::Ge, rhs)
    }

    pub fn lhs(&self, x: &[i64]) -> i128 {
        self.terms.iter().map(|&(v, c)| i128::from(c) * i128::from(x[v.0])).sum()
    }

    pub fn holds(&self, x: &[i64]) -> bool {
        let l = self.lhs(x);
        let r = i128::from(self.rhs);
        match self.cmp {
            Cmp::Le => l <= r,
            Cmp::Ge => l >= r,
            Cmp::Eq => l == r,
        }
    }

    /// Truth value when there are no variables left.
    pub fn constant(&self) -> Option<bool> {
        self.terms.is_empty().then(|| self.holds(&[]))
    }
}

/// `Σ vars` with unit coefficients.
pub fn sum(vars: impl IntoIterator<Item = VarId>) -> Vec<(VarId, i64)> {
    vars.into_iter().map(|v| (v, 1)).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Formula {
    True,
    False,
    Atom(Linear),
    And(Vec<Formula>),
    Or(Vec<Formula>),
}

impl Formula {
    pub fn atom(l: Linear) -> Formula {
        match l.constant() {
            Some(true) => Formula::True,
            Some(false) => Formula::False,
            None => Formula::Atom(l),
        }
    }

    pub fn and(parts: impl IntoIterator<Item = Formula>) -> Formula {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Formula::True => {}
                Formula::False => return Formula::False,
                Formula::And(inner) => out.extend(inner),
                f => out.push(f),
            }
        }
        match out.len() {
            0 => Formula::True,
            1 => out.pop().unwrap(),
            _ => Formula::And(out),
        }
    }

    pub fn or(parts: impl IntoIterator<Item = Formula>) -> Formula {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Formula::False => {}
                Formula::True => return Formula::True,
                Formula::Or(inner) => out.extend(inner),
                f => out.push(f),
            }
        }
        match out.len() {
            0 => Formula::False,
            1 => out.pop().unwrap(),
            _ => Formula::Or(out),
        }
    }

    pub fn holds(&self, x: &[i64]) -> bool {
        match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom(l) => l.holds(x),
            Formula::And(fs) => fs.iter().all(|f| f.holds(x)),
            Formula::Or(fs) => fs.iter().any(|f| f.holds(x)),
        }
    }
}

/// Named natural-number variables and a constraint over them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearSystem {
    names: Vec<String>,
    constraint: Formula,
}

impl Default for LinearSystem {
    fn default() -> Self {
        LinearSystem { names: Vec::new(), constraint: Formula::True }
    }
}

impl LinearSystem {
    pub fn new() -> LinearSystem {
        LinearSystem::default()
    }

    pub fn var(&mut self, name: impl Into<String>) -> VarId {
        self.names.push(name.into());
        VarId(self.names.len() - 1)
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, v: VarId) -> &str {
        &self.names[v.0]
    }

    pub fn constraint(&self) -> &Formula {
        &self.constraint
    }

    /// Conjoins `f` to the constraint.
    pub fn add(&mut self, f: Formula) {
        let old = std::mem::replace(&mut self.constraint, Formula::True);
        self.constraint = Formula::and([old, f]);
    }

    pub fn add_linear(&mut self, l: Linear) {
        self.add(Formula::atom(l));
    }

    /// Does `x` (one value per variable, all nonnegative) satisfy the system?
    pub fn check(&self, x: &[i64]) -> bool {
        x.len() == self.names.len() && x.iter().all(|&v| v >= 0) && self.constraint.holds(x)
    }

    /// SMT-LIB2 script (QF_LIA) asserting the system.
    pub fn to_smtlib(&self) -> String {
        let mut s = String::from("(set-logic QF_LIA)\n");
        let ident = |i: usize| format!("|{}|", self.names[i].replace('|', "_"));
        for i in 0..self.names.len() {
            let _ = writeln!(s, "(declare-fun {} () Int)", ident(i));
            let _ = writeln!(s, "(assert (>= {} 0))", ident(i));
        }
        let _ = writeln!(s, "(assert {})", smt_formula(&self.constraint, &ident));
        s.push_str("(check-sat)\n");
        s
    }
}

fn smt_int(v: i64) -> String {
    if v < 0 {
        format!("(- {})", v.unsigned_abs())
    } else {
        v.to_string()
    }
}

fn smt_formula(f: &Formula, ident: &dyn Fn(usize) -> String) -> String {
    match f {
        Formula::True => "true".into(),
        Formula::False => "false".into(),
        Formula::Atom(l) => {
            let terms: Vec<String> =
                l.terms.iter().map(|&(v, c)| format!("(* {} {})", smt_int(c), ident(v.0))).collect();
            let lhs = match terms.len() {
                0 => "0".into(),
                1 => terms[0].clone(),
                _ => format!("(+ {})", terms.join(" ")),
            };
            let op = match l.cmp {
                Cmp::Le => "<=",
                Cmp::Ge => ">=",
                Cmp::Eq => "=",
            };
            format!("({op} {lhs} {})", smt_int(l.rhs))
        }
        Formula::And(fs) => format!("(and {})", fs.iter().map(|f| smt_formula(f, ident)).collect::<Vec<_>>().join(" ")),
        Formula::Or(fs) => format!("(or {})", fs.iter().map(|f| smt_formula(f, ident)).collect::<Vec<_>>().join(" ")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn terms_are_merged() {
        let l = Linear::eq([(VarId(1), 2), (VarId(0), 1), (VarId(1), -2)], 3);
        assert_eq!(l.terms, vec![(VarId(0), 1)]);
        assert!(l.holds(&[3, 99]));
    }

    #[test]
    fn constants_fold() {
        assert_eq!(Formula::atom(Linear::ge([], 1)), Formula::False);
        assert_eq!(Formula::and([Formula::True, Formula::True]), Formula::True);
        assert_eq!(Formula::or([Formula::False]), Formula::False);
    }

    #[test]
    fn smtlib_mentions_every_variable() {
        let mut s = LinearSystem::new();
        let x = s.var("x");
        let y = s.var("y");
        s.add_linear(Linear::eq([(x, 1), (y, -1)], 0));
        s.add(Formula::or([Formula::atom(Linear::ge([(x, 1)], 1)), Formula::atom(Linear::le([(y, 1)], -2))]));
        let text = s.to_smtlib();
        assert!(text.contains("(declare-fun |x| () Int)"));
        assert!(text.contains("(<= (* 1 |y|) (- 2))"));
        assert!(text.ends_with("(check-sat)\n"));
    }
}
