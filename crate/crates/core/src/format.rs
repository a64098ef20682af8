//! Text formats for machines and witnesses.
//!
//! Machine files are line oriented; `#` starts a comment:
//!
//! ```text
//! kind = buchi-pdm          # fsm | pdm | buchi-fsm | buchi-pdm
//! values = 1 2
//! states = q0 q1
//! initial = q0
//! accepting = q1            # buchi kinds only
//! stack = bot A             # pdm kinds only; the first symbol is the bottom
//! trans = q0 w(1) q1        # fsm kinds only
//! rule = q0 r(1) bot -> q1 push A
//! rule = q1 w(2) A -> q0 pop
//! ```
//!
//! Witness files:
//!
//! ```text
//! witness v1
//! k = 2
//! pivot = 0 1               # optional: leader state and stack symbol index
//! restrict = 5              # optional: depth of the contributor restriction
//! stem:
//! 1 C0                      # actor (0 = leader) and transition
//! 0 L2
//! cycle:
//! 0 L0
//! end
//! ```

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::explicit::{Step, Witness};
use crate::machines::{validate, Action, Diagnostic, Fsm, FsmTransition, Machine, Pdm, PdmRule, StackEffect};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, column {column}: {message}")]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum MachineFileError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("invalid machine: {}", .0.iter().filter(|d| d.is_error()).map(|d| d.message.as_str()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
}

/// A whitespace-separated word with its 1-based column.
#[derive(Clone, Copy)]
struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokens(s: &str, offset: usize) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (col, (i, c)) in s.char_indices().enumerate() {
        match (c.is_whitespace(), start) {
            (false, None) => start = Some((i, col)),
            (true, Some((b, bc))) => {
                out.push(Token { text: &s[b..i], column: offset + bc + 1 });
                start = None;
            }
            _ => {}
        }
    }
    if let Some((b, bc)) = start {
        out.push(Token { text: &s[b..], column: offset + bc + 1 });
    }
    out
}

struct Line<'a> {
    number: usize,
    key: Token<'a>,
    eq_column: usize,
    rest: Vec<Token<'a>>,
}

impl Line<'_> {
    fn err(&self, column: usize, message: impl Into<String>) -> SyntaxError {
        SyntaxError { line: self.number, column, message: message.into() }
    }

    fn end_column(&self) -> usize {
        self.rest.last().map_or(self.eq_column + 1, |t| t.column + t.text.chars().count())
    }
}

/// Splits `text` into `key = value` lines, dropping comments and blanks.
fn lines(text: &str) -> Result<Vec<Line<'_>>, SyntaxError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let number = i + 1;
        let body = raw.split('#').next().unwrap_or("");
        if body.trim().is_empty() {
            continue;
        }
        let Some(eq) = body.find('=') else {
            let column = body.chars().take_while(|c| c.is_whitespace()).count() + 1;
            return Err(SyntaxError { line: number, column, message: "expected `key = value`".into() });
        };
        let head = tokens(&body[..eq], 0);
        let eq_column = body[..eq].chars().count() + 1;
        let [key] = head[..] else {
            return Err(SyntaxError { line: number, column: 1, message: "expected a single key before `=`".into() });
        };
        out.push(Line { number, key, eq_column, rest: tokens(&body[eq + 1..], eq_column) });
    }
    Ok(out)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Fsm,
    Pdm,
    BuchiFsm,
    BuchiPdm,
}

impl Kind {
    fn is_pdm(self) -> bool {
        matches!(self, Kind::Pdm | Kind::BuchiPdm)
    }

    fn is_buchi(self) -> bool {
        matches!(self, Kind::BuchiFsm | Kind::BuchiPdm)
    }
}

fn lookup(names: &[String], t: Token<'_>, what: &str, line: &Line<'_>) -> Result<usize, SyntaxError> {
    names.iter().position(|n| n == t.text).ok_or_else(|| line.err(t.column, format!("unknown {what} `{}`", t.text)))
}

fn action(values: &[String], t: Token<'_>, line: &Line<'_>) -> Result<Action, SyntaxError> {
    let bad = || line.err(t.column, format!("expected r(value) or w(value), found `{}`", t.text));
    let (make, inner): (fn(usize) -> Action, &str) = if let Some(s) = t.text.strip_prefix("r(") {
        (Action::read, s)
    } else if let Some(s) = t.text.strip_prefix("w(") {
        (Action::write, s)
    } else {
        return Err(bad());
    };
    let name = inner.strip_suffix(')').ok_or_else(bad)?;
    let v = values
        .iter()
        .position(|n| n == name)
        .ok_or_else(|| line.err(t.column + 2, format!("unknown value `{name}`")))?;
    Ok(make(v))
}

/// Parses and validates a machine file. Warnings are dropped; any error
/// diagnostic rejects the machine.
pub fn parse_machine(text: &str) -> Result<Machine, MachineFileError> {
    let machine = parse_machine_unchecked(text)?;
    let diags = validate(&machine);
    if diags.iter().any(Diagnostic::is_error) {
        return Err(MachineFileError::Invalid(diags));
    }
    Ok(machine)
}

/// Parses a machine file without running validation.
pub fn parse_machine_unchecked(text: &str) -> Result<Machine, SyntaxError> {
    let lines = lines(text)?;
    let mut header: HashMap<&str, &Line<'_>> = HashMap::new();
    for line in &lines {
        match line.key.text {
            "kind" | "values" | "states" | "initial" | "accepting" | "stack" => {
                if let Some(prev) = header.insert(line.key.text, line) {
                    return Err(line.err(
                        line.key.column,
                        format!("duplicate `{}` (first on line {})", line.key.text, prev.number),
                    ));
                }
            }
            "trans" | "rule" => {}
            other => return Err(line.err(line.key.column, format!("unknown key `{other}`"))),
        }
    }
    let last = lines.last().map_or(1, |l| l.number);
    let missing = |key: &str| SyntaxError { line: last, column: 1, message: format!("missing `{key}`") };
    let single = |line: &Line<'_>| -> Result<(), SyntaxError> {
        match line.rest.len() {
            1 => Ok(()),
            0 => Err(line.err(line.end_column(), "expected a value")),
            _ => Err(line.err(line.rest[1].column, "expected a single value")),
        }
    };

    let kind_line = *header.get("kind").ok_or_else(|| missing("kind"))?;
    single(kind_line)?;
    let kind = match kind_line.rest[0].text {
        "fsm" => Kind::Fsm,
        "pdm" => Kind::Pdm,
        "buchi-fsm" => Kind::BuchiFsm,
        "buchi-pdm" => Kind::BuchiPdm,
        other => return Err(kind_line.err(kind_line.rest[0].column, format!("unknown kind `{other}`"))),
    };
    let list = |key: &str| -> Result<Vec<String>, SyntaxError> {
        let line = header.get(key).ok_or_else(|| missing(key))?;
        Ok(line.rest.iter().map(|t| t.text.to_string()).collect())
    };
    let values = list("values")?;
    let states = list("states")?;
    let initial_line = *header.get("initial").ok_or_else(|| missing("initial"))?;
    single(initial_line)?;
    let initial = lookup(&states, initial_line.rest[0], "state", initial_line)?;
    let accepting = match (header.get("accepting"), kind.is_buchi()) {
        (Some(line), true) => {
            let mut set = BTreeSet::new();
            for &t in &line.rest {
                set.insert(lookup(&states, t, "state", line)?);
            }
            Some(set)
        }
        (None, true) => return Err(missing("accepting")),
        (Some(line), false) => return Err(line.err(line.key.column, "`accepting` needs a buchi kind")),
        (None, false) => None,
    };
    let stack = match (header.get("stack"), kind.is_pdm()) {
        (Some(_), true) => list("stack")?,
        (None, true) => return Err(missing("stack")),
        (Some(line), false) => return Err(line.err(line.key.column, "`stack` needs a pdm kind")),
        (None, false) => Vec::new(),
    };

    let mut transitions = Vec::new();
    let mut rules = Vec::new();
    for line in &lines {
        match (line.key.text, kind.is_pdm()) {
            ("trans", false) => {
                let [src, act, dst] = line.rest[..] else {
                    return Err(line.err(line.eq_column + 1, "expected `src action dst`"));
                };
                transitions.push(FsmTransition {
                    src: lookup(&states, src, "state", line)?,
                    action: action(&values, act, line)?,
                    dst: lookup(&states, dst, "state", line)?,
                });
            }
            ("rule", true) => {
                let shape = || line.err(line.eq_column + 1, "expected `src action top -> dst push sym` or `... pop`");
                let (&[src, act, top, arrow, dst, op], tail) = line.rest.split_at(6.min(line.rest.len())) else {
                    return Err(shape());
                };
                if arrow.text != "->" {
                    return Err(line.err(arrow.column, "expected `->`"));
                }
                let effect = match (op.text, tail) {
                    ("pop", []) => StackEffect::Pop,
                    ("push", [sym]) => StackEffect::Push(lookup(&stack, *sym, "stack symbol", line)?),
                    ("push", []) => return Err(line.err(line.end_column(), "`push` needs a stack symbol")),
                    ("pop" | "push", [extra, ..]) => return Err(line.err(extra.column, "unexpected token")),
                    _ => return Err(line.err(op.column, format!("expected push or pop, found `{}`", op.text))),
                };
                rules.push(PdmRule {
                    src: lookup(&states, src, "state", line)?,
                    action: action(&values, act, line)?,
                    top: lookup(&stack, top, "stack symbol", line)?,
                    dst: lookup(&states, dst, "state", line)?,
                    effect,
                });
            }
            ("trans", true) => return Err(line.err(line.key.column, "`trans` needs an fsm kind; use `rule`")),
            ("rule", false) => return Err(line.err(line.key.column, "`rule` needs a pdm kind; use `trans`")),
            _ => {}
        }
    }
    Ok(if kind.is_pdm() {
        Machine::Pdm(Pdm { values, states, stack, initial, rules, accepting })
    } else {
        Machine::Fsm(Fsm { values, states, initial, transitions, accepting })
    })
}

fn print_action(values: &[String], a: Action) -> String {
    format!("{}({})", if a.is_read() { "r" } else { "w" }, values[a.value])
}

/// Canonical text of a machine; [`parse_machine`] inverts it.
pub fn print_machine(m: &Machine) -> String {
    let mut out = String::new();
    let kind = match (m.is_pdm(), m.accepting().is_some()) {
        (false, false) => "fsm",
        (true, false) => "pdm",
        (false, true) => "buchi-fsm",
        (true, true) => "buchi-pdm",
    };
    let states = m.states();
    let _ = writeln!(out, "kind = {kind}");
    let _ = writeln!(out, "values = {}", m.values().join(" "));
    let _ = writeln!(out, "states = {}", states.join(" "));
    let _ = writeln!(out, "initial = {}", states[m.initial()]);
    if let Some(acc) = m.accepting() {
        let names: Vec<&str> = acc.iter().map(|&s| states[s].as_str()).collect();
        let _ = writeln!(out, "accepting = {}", names.join(" "));
    }
    match m {
        Machine::Fsm(f) => {
            for t in &f.transitions {
                let a = print_action(&f.values, t.action);
                let _ = writeln!(out, "trans = {} {a} {}", states[t.src], states[t.dst]);
            }
        }
        Machine::Pdm(p) => {
            let _ = writeln!(out, "stack = {}", p.stack.join(" "));
            for r in &p.rules {
                let a = print_action(&p.values, r.action);
                let effect = match r.effect {
                    StackEffect::Push(g) => format!("push {}", p.stack[g]),
                    StackEffect::Pop => "pop".into(),
                };
                let _ = writeln!(out, "rule = {} {a} {} -> {} {effect}", states[r.src], p.stack[r.top], states[r.dst]);
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("witness line {line}: {message}")]
pub struct WitnessFileError {
    pub line: usize,
    pub message: String,
}

pub fn print_witness(w: &Witness) -> String {
    let mut out = String::from("witness v1\n");
    let _ = writeln!(out, "k = {}", w.k);
    if let Some((s, g)) = w.pivot {
        let _ = writeln!(out, "pivot = {s} {g}");
    }
    if let Some(n) = w.restrict {
        let _ = writeln!(out, "restrict = {n}");
    }
    for (label, steps) in [("stem:", &w.stem), ("cycle:", &w.cycle)] {
        out.push_str(label);
        out.push('\n');
        for s in steps {
            let _ = writeln!(out, "{} {}", s.actor, s.transition);
        }
    }
    out.push_str("end\n");
    out
}

pub fn parse_witness(text: &str) -> Result<Witness, WitnessFileError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let last = text.lines().count().max(1);
    let err = |line: usize, message: &str| WitnessFileError { line, message: message.into() };
    let mut next = |what: &str| lines.next().ok_or_else(|| err(last, &format!("unexpected end of file, expected {what}")));

    let (n, l) = next("`witness v1`")?;
    if l != "witness v1" {
        return Err(err(n, "expected `witness v1`"));
    }
    let field = |l: &str, key: &str| -> Option<String> {
        let (k, v) = l.split_once('=')?;
        (k.trim() == key).then(|| v.trim().to_string())
    };
    let (n, l) = next("`k = ...`")?;
    let k = field(l, "k").and_then(|v| v.parse().ok()).ok_or_else(|| err(n, "expected `k = <count>`"))?;
    let mut pivot = None;
    let mut restrict = None;
    let mut stem = Vec::new();
    let mut cycle = Vec::new();
    let mut section: Option<&mut Vec<Step>> = None;
    let mut seen_cycle = false;
    loop {
        let (n, l) = next("`end`")?;
        match l {
            "end" => break,
            "stem:" if section.is_none() && !seen_cycle => section = Some(&mut stem),
            "cycle:" if !seen_cycle => {
                seen_cycle = true;
                section = Some(&mut cycle);
            }
            _ if section.is_none() => {
                if let Some(v) = field(l, "pivot") {
                    let parts: Vec<usize> = v.split_whitespace().filter_map(|x| x.parse().ok()).collect();
                    let [s, g] = parts[..] else { return Err(err(n, "expected `pivot = <state> <symbol>`")) };
                    pivot = Some((s, g));
                } else if let Some(v) = field(l, "restrict") {
                    restrict = Some(v.parse().map_err(|_| err(n, "expected `restrict = <depth>`"))?);
                } else {
                    return Err(err(n, "expected `pivot`, `restrict` or `stem:`"));
                }
            }
            _ => {
                let mut parts = l.split_whitespace();
                let (Some(a), Some(t), None) = (parts.next(), parts.next(), parts.next()) else {
                    return Err(err(n, "expected `<actor> <transition>`"));
                };
                let actor = a.parse().map_err(|_| err(n, "actor must be a number"))?;
                let transition = t.parse().map_err(|_| err(n, "transition must look like L3 or C0"))?;
                section.as_mut().expect("inside a section").push(Step { actor, transition });
            }
        }
    }
    if !seen_cycle {
        return Err(err(last, "missing `cycle:`"));
    }
    if let Some((n, _)) = lines.next() {
        return Err(err(n, "text after `end`"));
    }
    Ok(Witness { k, stem, cycle, pivot, restrict })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{ex3_pdm, fig1_contributor, fig1_leader, infinitely_often_read};
    use crate::machines::TransitionId;

    fn round_trip(m: Machine) {
        let text = print_machine(&m);
        assert_eq!(parse_machine(&text).unwrap(), m, "{text}");
    }

    #[test]
    fn fixtures_round_trip() {
        round_trip(Machine::Fsm(fig1_leader()));
        round_trip(Machine::Fsm(fig1_contributor()));
        round_trip(Machine::Fsm(infinitely_often_read(&fig1_leader().values, 0)));
        round_trip(Machine::Pdm(ex3_pdm()));
        let mut p = ex3_pdm();
        p.accepting = Some(BTreeSet::from([0]));
        round_trip(Machine::Pdm(p));
    }

    #[test]
    fn fig1_contributor_file() {
        let text = "\
kind = fsm
values = 1 2 3
states = c0 c1 c2 c3 c4 c5 c6   # three loops through c0
initial = c0
trans = c0 w(1) c1
trans = c1 r(3) c2
trans = c2 r(1) c0
trans = c0 w(2) c3
trans = c3 r(1) c4
trans = c4 r(2) c0
trans = c0 w(3) c5
trans = c5 r(2) c6
trans = c6 r(3) c0
";
        let m = parse_machine(text).unwrap();
        assert_eq!(m.states().len(), 7);
        assert_eq!(m, Machine::Fsm(fig1_contributor()));
    }

    #[test]
    fn duplicate_initial_is_a_syntax_error() {
        let text = "kind = fsm\nvalues = 1\nstates = a b\ninitial = a\ninitial = b\n";
        let e = parse_machine(text).unwrap_err();
        assert!(matches!(e, MachineFileError::Syntax(SyntaxError { line: 5, column: 1, .. })), "{e}");
    }

    #[test]
    fn pushing_bottom_is_invalid() {
        let text = "kind = pdm\nvalues = 1\nstates = p\ninitial = p\nstack = bot A\nrule = p w(1) bot -> p push bot\n";
        assert!(matches!(parse_machine(text), Err(MachineFileError::Invalid(_))));
    }

    #[test]
    fn errors_point_at_the_token() {
        let text = "kind = fsm\nvalues = 1\nstates = a\ninitial = a\ntrans = a w(1) b\n";
        let e = parse_machine_unchecked(text).unwrap_err();
        assert_eq!((e.line, e.column), (5, 16));
        let text = "kind = fsm\nvalues = 1\nstates = a\ninitial = a\ntrans = a x(1) a\n";
        assert_eq!(parse_machine_unchecked(text).unwrap_err().column, 11);
        let text = "kind = pdm\nvalues = 1\nstates = a\ninitial = a\nstack = bot\nrule = a w(1) bot => a pop\n";
        assert_eq!(parse_machine_unchecked(text).unwrap_err().column, 19);
        assert!(parse_machine_unchecked("kind = fsm\nvalues = 1\n").unwrap_err().message.contains("states"));
    }

    #[test]
    fn kind_guards_keys() {
        let text = "kind = fsm\nvalues = 1\nstates = a\ninitial = a\nrule = a w(1) bot -> a pop\n";
        assert!(parse_machine_unchecked(text).is_err());
        let text = "kind = fsm\nvalues = 1\nstates = a\ninitial = a\naccepting = a\n";
        assert!(parse_machine_unchecked(text).is_err());
    }

    fn sample_witness() -> Witness {
        Witness {
            k: 2,
            stem: vec![Step { actor: 1, transition: TransitionId::contributor(0) }],
            cycle: vec![
                Step { actor: 0, transition: TransitionId::leader(2) },
                Step { actor: 2, transition: TransitionId::contributor(1) },
            ],
            pivot: Some((0, 1)),
            restrict: Some(5),
        }
    }

    #[test]
    fn witness_round_trip() {
        let w = sample_witness();
        assert_eq!(parse_witness(&print_witness(&w)).unwrap(), w);
        let plain = Witness { pivot: None, restrict: None, stem: vec![], ..w };
        assert_eq!(parse_witness(&print_witness(&plain)).unwrap(), plain);
    }

    #[test]
    fn truncated_witness_is_rejected() {
        let text = print_witness(&sample_witness());
        let cut: String = text.lines().take(5).map(|l| format!("{l}\n")).collect();
        assert!(parse_witness(&cut).unwrap_err().message.contains("end of file"));
        assert!(parse_witness("witness v2\n").is_err());
        assert!(parse_witness(&format!("{text}extra\n")).is_err());
    }
}
