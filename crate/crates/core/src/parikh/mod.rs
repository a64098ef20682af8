//! Parikh images of finite automata and context-free grammars as
//! existential linear arithmetic, plus an exact solver for it.

pub mod cfg;
pub mod fsa;
pub mod linear;
pub mod solver;

pub use cfg::{parikh_cfg, CfgParikh, Grammar, Production, Symbol};
pub use fsa::{euler_witness, parikh_fsa, Fsa, FsaEdge, FsaParikh};
pub use linear::{Cmp, Formula, Linear, LinearSystem, VarId};
pub use solver::{solve, Solution};
