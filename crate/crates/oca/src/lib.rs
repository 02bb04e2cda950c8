//! NFA constructions for the regular abstractions of one-counter languages.
//!
//! Given a one-counter automaton (OCA) this crate builds nondeterministic
//! finite automata recognizing three regular abstractions of its language:
//!
//! * the **upward closure** ↑L (all superwords), [`closures::upward_closure_nfa`],
//! * the **downward closure** ↓L (all subwords), [`closures::downward_closure_nfa`],
//! * a **Parikh-equivalent** language (same letter-count vectors), either via
//!   semilinear synthesis for a fixed alphabet
//!   ([`parikh_fixed::parikh_nfa_fixed`]) or via the reversal-bounding
//!   pipeline that works for any alphabet
//!   ([`parikh_general::parikh_nfa_general`]).
//!
//! Every construction is validated at desk scale against independent
//! brute-force deciders in [`oracle`]. The [`completeness`] module carries the
//! reduction machinery showing a family of hard automata complete for
//! polynomial Parikh-equivalent NFA constructions.
//!
//! All types are immutable after construction and all operations are pure
//! functions, so values can be shared freely across threads.

pub mod closures;
pub mod completeness;
pub mod core;
pub mod format;
pub mod oracle;
pub mod parikh_fixed;
pub mod parikh_general;
pub mod reduction;
pub mod semilinear;

use thiserror::Error as ThisError;

/// Errors across the library.
#[derive(Debug, ThisError)]
pub enum Error {
    #[error("decrement below zero")]
    NegativeCounter,
    #[error("zero test failed at positive counter")]
    ZeroTestFailed,
    #[error("transition source does not match configuration state")]
    SourceMismatch,
    #[error("unknown letter: {0}")]
    UnknownLetter(String),
    #[error("unknown state: {0}")]
    UnknownState(String),
    #[error("duplicate state id: {0}")]
    DuplicateState(String),
    #[error("invalid letter token: {0:?}")]
    BadLetterToken(String),
    #[error("kind violation: {0}")]
    KindViolation(&'static str),
    #[error("alphabet mismatch")]
    AlphabetMismatch,
    #[error("ε transitions present; apply epsilon_to_letter first")]
    EpsilonPresent,
    #[error("Parikh vector dimension mismatch")]
    DimensionMismatch,
    #[error("sequence is not a Dyck sequence")]
    NotDyck,
    #[error("Dyck sequence sum out of range [0, N]")]
    SumOutOfRange,
    #[error("automaton is not reversal-bounded within the given bound")]
    NotReversalBounded,
    #[error("automaton is not a reversal-bounded acyclic automaton: {0}")]
    NotRba(&'static str),
    #[error("automaton is not loop-counting")]
    NotLoopCounting,
    #[error("state budget exceeded: construction needs more than {0} states")]
    StateBudget(usize),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}
