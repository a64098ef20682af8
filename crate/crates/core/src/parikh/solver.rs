//! Feasibility over the naturals for [`LinearSystem`]s.
//!
//! Disjunctions are split lazily: the conjunction of everything decided so
//! far is solved as an integer program, and only a disjunction the current
//! solution violates is branched on. Integer programs are solved by
//! branch and bound over an exact simplex minimizing the sum of the
//! variables. Every branch adds rows to the parent's optimal tableau and
//! reoptimizes with the dual simplex. Arithmetic starts on `i64`
//! rationals and the whole search is rerun on wider numbers if an
//! intermediate value overflows.

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{CheckedDiv, CheckedMul, CheckedSub, Signed, ToPrimitive, Zero};

use super::linear::{Cmp, Formula, Linear, LinearSystem};
use crate::BudgetExceeded;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Solution {
    /// One value per variable of the system.
    Sat(Vec<i64>),
    Unsat,
    Budget(BudgetExceeded),
}

impl Solution {
    pub fn is_sat(&self) -> bool {
        matches!(self, Solution::Sat(_))
    }
}

/// Decides the system. A `Sat` model always satisfies the system exactly;
/// `Unsat` is only returned when the search space was exhausted.
pub fn solve(sys: &LinearSystem, max_nodes: usize) -> Solution {
    let Some((base, clauses)) = normalize(sys.constraint()) else {
        return Solution::Unsat;
    };
    let n = sys.num_vars();
    let result = search::<Ratio<i64>>(&base, &clauses, n, max_nodes)
        .or_else(|_| search::<Ratio<i128>>(&base, &clauses, n, max_nodes))
        .or_else(|_| search::<BigRational>(&base, &clauses, n, max_nodes));
    match result {
        Ok(Some(x)) => {
            assert!(sys.check(&x), "solver produced a model that does not satisfy the system");
            Solution::Sat(x)
        }
        Ok(None) => Solution::Unsat,
        Err(Stop::Budget) => Solution::Budget(BudgetExceeded::Solver(max_nodes)),
        Err(Stop::Overflow) => unreachable!("big rationals do not overflow"),
    }
}

type Cube = Vec<Linear>;

/// Splits the constraint into a conjunction of atoms plus clauses, each a
/// disjunction of cubes. `None` if the constraint is trivially false.
fn normalize(f: &Formula) -> Option<(Vec<Linear>, Vec<Vec<Cube>>)> {
    let mut base = Vec::new();
    let mut clauses = Vec::new();
    let parts: Vec<&Formula> = match f {
        Formula::And(fs) => fs.iter().collect(),
        other => vec![other],
    };
    for p in parts {
        match p {
            Formula::True => {}
            Formula::False => return None,
            Formula::Atom(l) => base.push(l.clone()),
            other => {
                let cubes = dnf(other);
                if cubes.is_empty() {
                    return None;
                }
                if cubes.iter().any(|c| c.is_empty()) {
                    continue;
                }
                if cubes.len() == 1 {
                    base.extend(cubes.into_iter().next().unwrap());
                } else {
                    clauses.push(cubes);
                }
            }
        }
    }
    Some((base, clauses))
}

fn dnf(f: &Formula) -> Vec<Cube> {
    match f {
        Formula::True => vec![vec![]],
        Formula::False => vec![],
        Formula::Atom(l) => vec![vec![l.clone()]],
        Formula::Or(fs) => fs.iter().flat_map(dnf).collect(),
        Formula::And(fs) => {
            let mut acc: Vec<Cube> = vec![vec![]];
            for g in fs {
                let d = dnf(g);
                let mut next = Vec::with_capacity(acc.len() * d.len());
                for a in &acc {
                    for b in &d {
                        let mut c = a.clone();
                        c.extend(b.iter().cloned());
                        next.push(c);
                    }
                }
                acc = next;
            }
            acc
        }
    }
}

#[derive(Debug)]
enum Stop {
    Overflow,
    Budget,
}

impl From<Overflow> for Stop {
    fn from(_: Overflow) -> Stop {
        Stop::Overflow
    }
}

fn search<F: Field>(base: &[Linear], clauses: &[Vec<Cube>], n: usize, cap: usize) -> Result<Option<Vec<i64>>, Stop> {
    let mut rows = base.to_vec();
    if let Some(b) = small_solution_bound(base, clauses, n) {
        rows.extend((0..n).map(|j| Linear::le([(super::linear::VarId(j), 1)], b)));
    }
    let Some(root) = Lp::<F>::build(&rows, n)? else {
        return Ok(None);
    };
    let mut s = Search { n, clauses, nodes: 0, cap, chosen: Vec::new() };
    s.run(root)
}

struct Search<'a> {
    n: usize,
    clauses: &'a [Vec<Cube>],
    nodes: usize,
    cap: usize,
    chosen: Vec<usize>,
}

impl Search<'_> {
    fn tick(&mut self) -> Result<(), Stop> {
        self.nodes += 1;
        if self.nodes > self.cap {
            return Err(Stop::Budget);
        }
        Ok(())
    }

    fn run<F: Field>(&mut self, lp: Lp<F>) -> Result<Option<Vec<i64>>, Stop> {
        self.tick()?;
        let Some(x) = self.branch_and_bound(lp.clone())? else {
            return Ok(None);
        };
        let violated = (0..self.clauses.len()).find(|&c| {
            !self.chosen.contains(&c) && !self.clauses[c].iter().any(|cube| cube.iter().all(|l| l.holds(&x)))
        });
        let Some(c) = violated else {
            return Ok(Some(x));
        };
        for cube in &self.clauses[c] {
            let mut child = lp.clone();
            for l in cube {
                child.add_linear(l)?;
            }
            if !child.dual()? {
                continue;
            }
            self.chosen.push(c);
            let r = self.run(child)?;
            self.chosen.pop();
            if r.is_some() {
                return Ok(r);
            }
        }
        Ok(None)
    }

    /// Depth-first, rounding down first.
    fn branch_and_bound<F: Field>(&mut self, root: Lp<F>) -> Result<Option<Vec<i64>>, Stop> {
        let mut stack = vec![root];
        while let Some(lp) = stack.pop() {
            self.tick()?;
            let x = lp.values(self.n);
            match x.iter().position(|v| !v.is_integer()) {
                None => {
                    let sol = x.iter().map(|v| v.floor_i64().ok_or(Stop::Overflow)).collect::<Result<_, _>>()?;
                    return Ok(Some(sol));
                }
                Some(j) => {
                    let fl = x[j].floor_i64().ok_or(Stop::Overflow)?;
                    let mut up = lp.clone();
                    up.add_row(&[(j, -1)], -(i128::from(fl) + 1))?;
                    if up.dual()? {
                        stack.push(up);
                    }
                    let mut down = lp;
                    down.add_row(&[(j, 1)], i128::from(fl))?;
                    if down.dual()? {
                        stack.push(down);
                    }
                }
            }
        }
        Ok(None)
    }
}

/// Bound on the entries of some solution of a feasible integer program
/// with these rows: `n (m a)^(2m+1)` over the equality form with slacks,
/// taken over the base rows together with the largest cube of every
/// clause. `None` if it does not fit in an `i64`.
fn small_solution_bound(base: &[Linear], clauses: &[Vec<Cube>], n: usize) -> Option<i64> {
    let widest = clauses.iter().filter_map(|c| c.iter().max_by_key(|cube| cube.len()));
    let rows: Vec<&Linear> = base.iter().chain(widest.flatten()).collect();
    let m = rows.len() as u64;
    let slacks = rows.iter().filter(|r| r.cmp != Cmp::Eq).count();
    let a = rows
        .iter()
        .flat_map(|r| r.terms.iter().map(|t| t.1.unsigned_abs()).chain([r.rhs.unsigned_abs()]))
        .chain(clauses.iter().flatten().flatten().flat_map(|r| r.terms.iter().map(|t| t.1.unsigned_abs()).chain([r.rhs.unsigned_abs()])))
        .max()
        .unwrap_or(1)
        .max(1);
    let base = BigInt::from(m.max(1)) * BigInt::from(a);
    let b = BigInt::from((n + slacks).max(1)) * num_traits::pow(base, (2 * m + 1) as usize);
    b.to_i64()
}

#[derive(Debug)]
struct Overflow;

trait Field: Clone + PartialOrd {
    fn from_i128(v: i128) -> Result<Self, Overflow>;
    fn zero() -> Self;
    fn is_zero(&self) -> bool;
    fn is_pos(&self) -> bool;
    fn is_neg(&self) -> bool;
    fn is_integer(&self) -> bool;
    fn floor_i64(&self) -> Option<i64>;
    fn sub(&self, o: &Self) -> Result<Self, Overflow>;
    fn mul(&self, o: &Self) -> Result<Self, Overflow>;
    fn div(&self, o: &Self) -> Result<Self, Overflow>;
}

macro_rules! small_field {
    ($t:ty) => {
        impl Field for Ratio<$t> {
            fn from_i128(v: i128) -> Result<Self, Overflow> {
                <$t>::try_from(v).map(Ratio::from_integer).map_err(|_| Overflow)
            }
            fn zero() -> Self {
                Zero::zero()
            }
            fn is_zero(&self) -> bool {
                Zero::is_zero(self)
            }
            fn is_pos(&self) -> bool {
                Signed::is_positive(self)
            }
            fn is_neg(&self) -> bool {
                Signed::is_negative(self)
            }
            fn is_integer(&self) -> bool {
                Ratio::is_integer(self)
            }
            fn floor_i64(&self) -> Option<i64> {
                self.floor().to_integer().to_i64()
            }
            fn sub(&self, o: &Self) -> Result<Self, Overflow> {
                self.checked_sub(o).ok_or(Overflow)
            }
            fn mul(&self, o: &Self) -> Result<Self, Overflow> {
                self.checked_mul(o).ok_or(Overflow)
            }
            fn div(&self, o: &Self) -> Result<Self, Overflow> {
                self.checked_div(o).ok_or(Overflow)
            }
        }
    };
}

small_field!(i64);
small_field!(i128);

impl Field for BigRational {
    fn from_i128(v: i128) -> Result<Self, Overflow> {
        Ok(BigRational::from_integer(BigInt::from(v)))
    }
    fn zero() -> Self {
        Zero::zero()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_pos(&self) -> bool {
        Signed::is_positive(self)
    }
    fn is_neg(&self) -> bool {
        Signed::is_negative(self)
    }
    fn is_integer(&self) -> bool {
        BigRational::is_integer(self)
    }
    fn floor_i64(&self) -> Option<i64> {
        self.floor().to_integer().to_i64()
    }
    fn sub(&self, o: &Self) -> Result<Self, Overflow> {
        Ok(self - o)
    }
    fn mul(&self, o: &Self) -> Result<Self, Overflow> {
        Ok(self * o)
    }
    fn div(&self, o: &Self) -> Result<Self, Overflow> {
        Ok(self / o)
    }
}

/// Simplex tableau for `min Σ x_j (j < n)` over nonnegative columns. The
/// first `n` columns are the variables, the rest slacks. Row `i` has a
/// unit entry in column `basis[i]` and zeros in the other basic columns;
/// `obj` holds reduced costs.
#[derive(Clone)]
struct Lp<F> {
    rows: Vec<Vec<F>>,
    rhs: Vec<F>,
    obj: Vec<F>,
    basis: Vec<usize>,
}

impl<F: Field> Lp<F> {
    /// Optimal tableau for `rows`, by the two-phase method. `None` if
    /// infeasible.
    fn build(rows: &[Linear], n: usize) -> Result<Option<Lp<F>>, Overflow> {
        let slacks = rows.iter().filter(|r| r.cmp != Cmp::Eq).count();
        let needs_art = |r: &Linear| match r.cmp {
            Cmp::Eq => true,
            Cmp::Le => r.rhs < 0,
            Cmp::Ge => r.rhs >= 0,
        };
        let arts = rows.iter().filter(|r| needs_art(r)).count();
        let first_art = n + slacks;
        let cols = first_art + arts;
        let mut lp = Lp { rows: Vec::new(), rhs: Vec::new(), obj: vec![F::zero(); cols], basis: Vec::new() };
        let (mut s, mut a) = (n, first_art);
        for r in rows {
            let mut row = vec![F::zero(); cols];
            let sign: i128 = if r.rhs < 0 { -1 } else { 1 };
            for &(v, c) in &r.terms {
                row[v.0] = F::from_i128(sign * i128::from(c))?;
            }
            let art = needs_art(r);
            if r.cmp != Cmp::Eq {
                let coef = if r.cmp == Cmp::Le { 1 } else { -1 };
                row[s] = F::from_i128(sign * coef)?;
                if !art {
                    lp.basis.push(s);
                }
                s += 1;
            }
            if art {
                row[a] = F::from_i128(1)?;
                lp.basis.push(a);
                a += 1;
            }
            lp.rows.push(row);
            lp.rhs.push(F::from_i128(sign * i128::from(r.rhs))?);
        }

        // phase 1: minimize the sum of artificials
        for (i, row) in lp.rows.iter().enumerate() {
            if lp.basis[i] >= first_art {
                for (j, a) in row.iter().enumerate().take(first_art) {
                    if !a.is_zero() {
                        lp.obj[j] = lp.obj[j].sub(a)?;
                    }
                }
            }
        }
        lp.primal(first_art)?;
        if (0..lp.rows.len()).any(|i| lp.basis[i] >= first_art && !lp.rhs[i].is_zero()) {
            return Ok(None);
        }
        let mut i = 0;
        while i < lp.rows.len() {
            if lp.basis[i] < first_art {
                i += 1;
                continue;
            }
            match (0..first_art).find(|&j| !lp.rows[i][j].is_zero()) {
                Some(j) => {
                    lp.pivot(i, j)?;
                    i += 1;
                }
                None => {
                    // redundant row
                    lp.rows.swap_remove(i);
                    lp.rhs.swap_remove(i);
                    lp.basis.swap_remove(i);
                }
            }
        }
        for row in &mut lp.rows {
            row.truncate(first_art);
        }

        // phase 2
        lp.obj = vec![F::zero(); first_art];
        for j in 0..n {
            lp.obj[j] = F::from_i128(1)?;
        }
        for i in 0..lp.rows.len() {
            if lp.basis[i] < n {
                for j in 0..first_art {
                    if !lp.rows[i][j].is_zero() {
                        lp.obj[j] = lp.obj[j].sub(&lp.rows[i][j])?;
                    }
                }
            }
        }
        lp.primal(first_art)?;
        Ok(Some(lp))
    }

    fn values(&self, n: usize) -> Vec<F> {
        let mut x = vec![F::zero(); n];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < n {
                x[b] = self.rhs[i].clone();
            }
        }
        x
    }

    fn add_linear(&mut self, l: &Linear) -> Result<(), Overflow> {
        let terms: Vec<(usize, i64)> = l.terms.iter().map(|&(v, c)| (v.0, c)).collect();
        let neg: Vec<(usize, i64)> = terms.iter().map(|&(j, c)| (j, -c)).collect();
        let rhs = i128::from(l.rhs);
        if l.cmp != Cmp::Ge {
            self.add_row(&terms, rhs)?;
        }
        if l.cmp != Cmp::Le {
            self.add_row(&neg, -rhs)?;
        }
        Ok(())
    }

    /// Adds `Σ c x_j ≤ rhs` with a fresh basic slack. The tableau stays
    /// dual feasible; its primal value may turn negative.
    fn add_row(&mut self, terms: &[(usize, i64)], rhs: i128) -> Result<(), Overflow> {
        let slack = self.obj.len();
        for row in &mut self.rows {
            row.push(F::zero());
        }
        self.obj.push(F::zero());
        let mut row = vec![F::zero(); slack + 1];
        row[slack] = F::from_i128(1)?;
        for &(j, c) in terms {
            row[j] = F::from_i128(i128::from(c))?;
        }
        let mut b = F::from_i128(rhs)?;
        for (i, r) in self.rows.iter().enumerate() {
            let f = row[self.basis[i]].clone();
            if f.is_zero() {
                continue;
            }
            for (j, v) in r.iter().enumerate() {
                if !v.is_zero() {
                    row[j] = row[j].sub(&f.mul(v)?)?;
                }
            }
            b = b.sub(&f.mul(&self.rhs[i])?)?;
        }
        self.rows.push(row);
        self.rhs.push(b);
        self.basis.push(slack);
        Ok(())
    }

    /// Dual simplex with smallest-index choices. Returns whether the
    /// tableau is feasible; if so it is optimal.
    fn dual(&mut self) -> Result<bool, Overflow> {
        loop {
            let Some(r) = (0..self.rows.len()).filter(|&i| self.rhs[i].is_neg()).min_by_key(|&i| self.basis[i]) else {
                return Ok(true);
            };
            let mut best: Option<(usize, F)> = None;
            for (j, a) in self.rows[r].iter().enumerate() {
                if a.is_neg() {
                    let ratio = self.obj[j].div(&F::zero().sub(a)?)?;
                    if best.as_ref().is_none_or(|(_, br)| ratio < *br) {
                        best = Some((j, ratio));
                    }
                }
            }
            match best {
                Some((j, _)) => self.pivot(r, j)?,
                None => return Ok(false),
            }
        }
    }

    /// Primal simplex with entering columns restricted to `< limit`.
    /// Prices by most negative reduced cost and falls back to Bland's rule
    /// after a run of degenerate pivots.
    fn primal(&mut self, limit: usize) -> Result<(), Overflow> {
        let mut degenerate = 0;
        loop {
            let entering = if degenerate < 20 {
                let mut best: Option<usize> = None;
                for j in 0..limit {
                    if self.obj[j].is_neg() && best.is_none_or(|b| self.obj[j] < self.obj[b]) {
                        best = Some(j);
                    }
                }
                best
            } else {
                (0..limit).find(|&j| self.obj[j].is_neg())
            };
            let Some(j) = entering else {
                return Ok(());
            };
            let mut best: Option<(usize, F)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[j].is_pos() {
                    let ratio = self.rhs[i].div(&row[j])?;
                    let better = match &best {
                        None => true,
                        Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                    };
                    if better {
                        best = Some((i, ratio));
                    }
                }
            }
            match best {
                Some((i, ratio)) => {
                    if ratio.is_zero() {
                        degenerate += 1;
                    } else if degenerate < 20 {
                        degenerate = 0;
                    }
                    self.pivot(i, j)?
                }
                // objective is bounded below by zero, so this cannot happen
                None => return Ok(()),
            }
        }
    }

    fn pivot(&mut self, r: usize, c: usize) -> Result<(), Overflow> {
        let p = self.rows[r][c].clone();
        let nz: Vec<usize> = (0..self.rows[r].len()).filter(|&j| !self.rows[r][j].is_zero()).collect();
        for &j in &nz {
            self.rows[r][j] = self.rows[r][j].div(&p)?;
        }
        self.rhs[r] = self.rhs[r].div(&p)?;
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][c].clone();
            if f.is_zero() {
                continue;
            }
            for &j in &nz {
                self.rows[i][j] = self.rows[i][j].sub(&f.mul(&pivot_row[j])?)?;
            }
            self.rhs[i] = self.rhs[i].sub(&f.mul(&pivot_rhs)?)?;
        }
        let f = self.obj[c].clone();
        if !f.is_zero() {
            for &j in &nz {
                self.obj[j] = self.obj[j].sub(&f.mul(&pivot_row[j])?)?;
            }
        }
        self.basis[r] = c;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parikh::linear::{sum, VarId};

    fn sys(n: usize) -> (LinearSystem, Vec<VarId>) {
        let mut s = LinearSystem::new();
        let vs = (0..n).map(|i| s.var(format!("v{i}"))).collect();
        (s, vs)
    }

    #[test]
    fn equal_and_positive() {
        let (mut s, v) = sys(2);
        s.add_linear(Linear::eq([(v[0], 1), (v[1], -1)], 0));
        s.add_linear(Linear::ge([(v[0], 1)], 1));
        assert_eq!(solve(&s, 1000), Solution::Sat(vec![1, 1]));
    }

    #[test]
    fn sum_one_with_both_positive_is_unsat() {
        let (mut s, v) = sys(2);
        s.add_linear(Linear::eq(sum(v.clone()), 1));
        s.add_linear(Linear::ge([(v[0], 1)], 1));
        s.add_linear(Linear::ge([(v[1], 1)], 1));
        assert_eq!(solve(&s, 1000), Solution::Unsat);
    }

    #[test]
    fn parity_needs_branching() {
        // 2x + 2y = 2z + 1 has no integer solution
        let (mut s, v) = sys(3);
        s.add_linear(Linear::eq([(v[0], 2), (v[1], 2), (v[2], -2)], 1));
        s.add_linear(Linear::le([(v[2], 1)], 3));
        assert_eq!(solve(&s, 10_000), Solution::Unsat);
    }

    #[test]
    fn integral_point_inside_thin_polytope() {
        // 3x - 2y = 1, x ≥ 2
        let (mut s, v) = sys(2);
        s.add_linear(Linear::eq([(v[0], 3), (v[1], -2)], 1));
        s.add_linear(Linear::ge([(v[0], 1)], 2));
        assert_eq!(solve(&s, 10_000), Solution::Sat(vec![3, 4]));
    }

    #[test]
    fn disjunction_is_split() {
        let (mut s, v) = sys(2);
        s.add_linear(Linear::eq(sum(v.clone()), 5));
        s.add(Formula::or([
            Formula::atom(Linear::ge([(v[0], 1)], 7)),
            Formula::atom(Linear::ge([(v[1], 1)], 4)),
        ]));
        let Solution::Sat(x) = solve(&s, 1000) else { panic!() };
        assert!(x[1] >= 4 && x[0] + x[1] == 5);
    }

    #[test]
    fn false_is_unsat() {
        let (mut s, _) = sys(1);
        s.add(Formula::False);
        assert_eq!(solve(&s, 10), Solution::Unsat);
    }

    #[test]
    fn budget_is_reported() {
        let (mut s, v) = sys(2);
        s.add_linear(Linear::eq([(v[0], 3), (v[1], -2)], 1));
        s.add_linear(Linear::ge([(v[0], 1)], 2));
        assert!(matches!(solve(&s, 2), Solution::Budget(_)));
    }

    #[test]
    fn unbounded_parity_search_hits_the_budget() {
        // bound too large for a box, and no integer point
        let (mut s, v) = sys(3);
        s.add_linear(Linear::eq([(v[0], 2000), (v[1], -2000)], 1001));
        s.add_linear(Linear::ge([(v[2], 1000)], 1));
        s.add_linear(Linear::ge([(v[2], 3000), (v[0], 5)], 7));
        assert!(matches!(solve(&s, 30), Solution::Budget(_)));
    }
}
