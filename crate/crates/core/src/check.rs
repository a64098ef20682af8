//! Mode selection and orchestration on top of the individual checkers.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::cycle::check_fsm_fsm;
use crate::explicit::{check_explicit, replay, ExplicitError, Outcome, ReplayError, Verdict, Witness};
use crate::format::print_witness;
use crate::machines::{BuildError, Fsm, LiftStyle, Machine, Network, Pdm};
use crate::pushdown::check_pdm_fsm;
use crate::reduction::{check_pdm_pdm, restricted_network};
use crate::{BudgetExceeded, Options};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Auto,
    FsmFsm,
    PdmFsm,
    PdmPdm,
    Explicit,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Auto => "auto",
            Mode::FsmFsm => "fsm-fsm",
            Mode::PdmFsm => "pdm-fsm",
            Mode::PdmPdm => "pdm-pdm",
            Mode::Explicit => "explicit",
        }
    }

    /// The parameterized mode for the given machine kinds.
    pub fn for_kinds(leader_pdm: bool, contributor_pdm: bool) -> Mode {
        match (leader_pdm, contributor_pdm) {
            (false, false) => Mode::FsmFsm,
            (true, false) => Mode::PdmFsm,
            (_, true) => Mode::PdmPdm,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("unknown mode `{0}`; expected auto, fsm-fsm, pdm-fsm, pdm-pdm or explicit")]
pub struct UnknownMode(String);

impl FromStr for Mode {
    type Err = UnknownMode;

    fn from_str(s: &str) -> Result<Mode, UnknownMode> {
        [Mode::Auto, Mode::FsmFsm, Mode::PdmFsm, Mode::PdmPdm, Mode::Explicit]
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| UnknownMode(s.to_string()))
    }
}

/// Inputs of one check. `contributors` bounds the explicit mode, which
/// tries every count from 1 up to it.
#[derive(Clone, Debug)]
pub struct NetworkSpec {
    pub property: Fsm,
    pub leader: Machine,
    pub contributor: Machine,
    pub mode: Mode,
    pub contributors: usize,
    pub stack_bound: Option<usize>,
}

impl NetworkSpec {
    pub fn new(property: Fsm, leader: Machine, contributor: Machine) -> NetworkSpec {
        NetworkSpec { property, leader, contributor, mode: Mode::Auto, contributors: 4, stack_bound: None }
    }
}

/// Stack bound used by the explicit mode when none is given and a machine
/// is a PDM.
pub const DEFAULT_STACK_BOUND: usize = 6;

#[derive(Debug, thiserror::Error)]
pub enum CheckError {
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error("mode {mode} needs an FSM {role}")]
    NeedsFsm { mode: Mode, role: &'static str },
    #[error(transparent)]
    Explicit(#[from] ExplicitError),
}

fn lift(m: &Machine) -> Machine {
    match m {
        Machine::Fsm(f) => Machine::Pdm(Pdm::from_fsm(f, LiftStyle::Alternating)),
        Machine::Pdm(_) => m.clone(),
    }
}

/// Resolves `auto` and builds the network the mode runs on. The PDM modes
/// accept FSMs and lift them to PDMs that keep their language.
pub fn prepare(spec: &NetworkSpec) -> Result<(Mode, Network), CheckError> {
    let (leader, contributor) = (&spec.leader, &spec.contributor);
    let mode = match spec.mode {
        Mode::Auto => Mode::for_kinds(leader.is_pdm(), contributor.is_pdm()),
        m => m,
    };
    let (leader, contributor) = match mode {
        Mode::FsmFsm | Mode::PdmFsm if contributor.is_pdm() => {
            return Err(CheckError::NeedsFsm { mode, role: "contributor" })
        }
        Mode::FsmFsm if leader.is_pdm() => return Err(CheckError::NeedsFsm { mode, role: "leader" }),
        Mode::PdmFsm => (lift(leader), contributor.clone()),
        Mode::PdmPdm => (lift(leader), lift(contributor)),
        _ => (leader.clone(), contributor.clone()),
    };
    Ok((mode, Network::from_parts(&spec.property, &leader, &contributor)?))
}

#[derive(Clone, Debug)]
pub struct CheckRun {
    pub mode: Mode,
    pub network: Network,
    pub outcome: Outcome,
}

pub fn run_check(spec: &NetworkSpec, opts: &Options) -> Result<CheckRun, CheckError> {
    let (mode, network) = prepare(spec)?;
    let outcome = match mode {
        Mode::FsmFsm => check_fsm_fsm(&network, opts),
        Mode::PdmFsm => check_pdm_fsm(&network, opts),
        Mode::PdmPdm => check_pdm_pdm(&network, opts),
        Mode::Explicit => explicit_upto(&network, spec, opts)?,
        Mode::Auto => unreachable!("resolved by prepare"),
    };
    Ok(CheckRun { mode, network, outcome })
}

fn explicit_upto(net: &Network, spec: &NetworkSpec, opts: &Options) -> Result<Outcome, ExplicitError> {
    let any_pdm = net.leader().is_pdm() || net.contributor().is_pdm();
    let bound = spec.stack_bound.or(any_pdm.then_some(DEFAULT_STACK_BOUND));
    let mut last = Outcome { verdict: Verdict::Empty, stats: BTreeMap::new() };
    for k in 1..=spec.contributors.max(1) {
        last = check_explicit(net, k, bound, opts)?;
        last.stats.insert("k", k as u64);
        if !matches!(last.verdict, Verdict::Empty) {
            break;
        }
    }
    Ok(last)
}

/// Machine-readable summary of a check.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub verdict: &'static str,
    pub mode: Mode,
    pub statistics: BTreeMap<&'static str, u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

impl Report {
    pub fn new(run: &CheckRun) -> Report {
        let v = &run.outcome.verdict;
        Report {
            verdict: v.label(),
            mode: run.mode,
            statistics: run.outcome.stats.clone(),
            budget: match v {
                Verdict::Budget(b) => Some(b.to_string()),
                _ => None,
            },
            witness: v.witness().map(print_witness),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReplayCheckError {
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error("witness refers to a restriction but the contributor is not a pushdown machine")]
    NotRestrictable,
    #[error(transparent)]
    Budget(#[from] BudgetExceeded),
    #[error(transparent)]
    Replay(#[from] ReplayError),
}

impl ReplayCheckError {
    /// The witness itself is wrong, as opposed to the inputs around it.
    pub fn is_invalid_witness(&self) -> bool {
        matches!(self, ReplayCheckError::Replay(_) | ReplayCheckError::NotRestrictable)
    }
}

/// Replays `w` on the network it was produced for: FSM leaders are lifted
/// when the witness carries a pivot, and contributors are restricted when
/// it carries a restriction depth.
pub fn replay_witness(
    property: &Fsm,
    leader: &Machine,
    contributor: &Machine,
    w: &Witness,
    opts: &Options,
) -> Result<(), ReplayCheckError> {
    let leader = if w.pivot.is_some() { lift(leader) } else { leader.clone() };
    let contributor = if w.restrict.is_some() { lift(contributor) } else { contributor.clone() };
    let net = Network::from_parts(property, &leader, &contributor)?;
    match w.restrict {
        None => replay(&net, w)?,
        Some(n) => {
            let (restricted, _) = restricted_network(&net, n, opts.budget.max_restriction_states)?;
            replay(&restricted, w)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{ex2_contributor, ex2_leader, fig1_contributor, fig1_leader, infinitely_often_read, universal_property};

    fn fig1_spec() -> NetworkSpec {
        let d = fig1_leader();
        NetworkSpec::new(infinitely_often_read(&d.values, 0), Machine::Fsm(d), Machine::Fsm(fig1_contributor()))
    }

    #[test]
    fn modes_parse_and_print() {
        for m in [Mode::Auto, Mode::FsmFsm, Mode::PdmFsm, Mode::PdmPdm, Mode::Explicit] {
            assert_eq!(m.name().parse::<Mode>(), Ok(m));
        }
        assert!("fsm".parse::<Mode>().is_err());
    }

    #[test]
    fn every_mode_agrees_on_fig1() {
        let mut spec = fig1_spec();
        for mode in [Mode::Auto, Mode::FsmFsm, Mode::PdmFsm, Mode::PdmPdm, Mode::Explicit] {
            spec.mode = mode;
            let run = run_check(&spec, &Options::default()).unwrap();
            let Verdict::Nonempty(w) = &run.outcome.verdict else { panic!("{mode}: {:?}", run.outcome.verdict) };
            replay_witness(&spec.property, &spec.leader, &spec.contributor, w, &Options::default())
                .unwrap_or_else(|e| panic!("{mode}: {e}"));
        }
    }

    #[test]
    fn ex2_is_empty_in_every_mode() {
        let d = ex2_leader();
        let mut spec =
            NetworkSpec::new(universal_property(&d.values), Machine::Fsm(d), Machine::Fsm(ex2_contributor()));
        for mode in [Mode::FsmFsm, Mode::PdmFsm, Mode::PdmPdm, Mode::Explicit] {
            spec.mode = mode;
            assert_eq!(run_check(&spec, &Options::default()).unwrap().outcome.verdict, Verdict::Empty, "{mode}");
        }
    }

    #[test]
    fn fsm_mode_rejects_pdms() {
        let mut spec = fig1_spec();
        spec.contributor = lift(&spec.contributor);
        spec.mode = Mode::FsmFsm;
        assert!(matches!(prepare(&spec), Err(CheckError::NeedsFsm { role: "contributor", .. })));
        spec.mode = Mode::Auto;
        assert_eq!(prepare(&spec).unwrap().0, Mode::PdmPdm);
    }

    #[test]
    fn report_serializes() {
        let run = run_check(&fig1_spec(), &Options::default()).unwrap();
        let r = Report::new(&run);
        assert_eq!(r.verdict, "NONEMPTY");
        assert_eq!(r.mode, Mode::FsmFsm);
        assert!(r.witness.unwrap().starts_with("witness v1"));
    }
}
