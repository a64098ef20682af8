//! Liveness checking for parameterized networks of one leader and any
//! number of identical contributors that talk through a single shared
//! register.
//!
//! Entry points:
//! - [`check::check`] runs a decision procedure selected by [`check::Mode`].
//! - [`explicit`] is the brute-force engine for a fixed contributor count,
//!   and the reference semantics witnesses are replayed against.
//! - [`cycle::check_fsm_fsm`], [`pushdown::check_pdm_fsm`] and
//!   [`reduction::check_pdm_pdm`] are the parameterized procedures.

pub mod abstraction;
pub mod check;
pub mod cycle;
pub mod explicit;
pub mod fixtures;
pub mod format;
pub mod gen;
pub mod machines;
pub mod par;
pub mod parikh;
pub mod pushdown;
pub mod reduction;

pub use machines::{Action, Fsm, Machine, Network, Pdm, Role, TransitionId};
pub use par::Parallelism;

/// Resource caps shared by all engines. Exceeding one yields an explicit
/// budget outcome, never a verdict.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    /// Configurations stored by the explicit engine, abstract configurations
    /// and abstract pushdown configurations.
    pub max_configs: usize,
    /// Branch-and-bound plus case-split nodes per solver call.
    pub max_solver_nodes: usize,
    /// States of a k-restriction.
    pub max_restriction_states: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_configs: 5_000_000, max_solver_nodes: 200_000, max_restriction_states: 200_000 }
    }
}

impl Budget {
    /// Default caps, with every cap replaced by `PARAMCK_BUDGET` when that
    /// variable holds a positive integer.
    pub fn from_env() -> Budget {
        std::env::var("PARAMCK_BUDGET")
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&n| n > 0)
            .map_or_else(Budget::default, Budget::uniform)
    }

    pub fn uniform(n: usize) -> Budget {
        Budget { max_configs: n, max_solver_nodes: n, max_restriction_states: n }
    }
}

/// Knobs shared by every checker.
#[derive(Clone, Copy, Debug, Default)]
pub struct Options {
    pub budget: Budget,
    pub parallelism: Parallelism,
}

impl Options {
    pub fn sequential() -> Options {
        Options { parallelism: Parallelism::Sequential, ..Options::default() }
    }
}

/// Which resource ran out.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum BudgetExceeded {
    #[error("configuration budget of {0} exceeded")]
    Configs(usize),
    #[error("solver node budget of {0} exceeded")]
    Solver(usize),
    #[error("restriction with k = {k} exceeds {cap} states")]
    Restriction { k: usize, cap: usize },
}
