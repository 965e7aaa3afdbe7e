//! Interactive error detection for rows of binary data tables.
//!
//! A new row (a candidate object) is checked against the implications that
//! hold in an existing table. Two question generators are provided: the
//! canonical-base approach, which is exponential in the worst case, and the
//! crucial-implication approach, which is polynomial and also finds
//! attributes that should be removed. A [`session::Session`] drives the
//! question/answer loop with a human expert.

pub mod bench;
pub mod bitset;
pub mod canonical_base;
pub mod context;
pub mod crucial;
mod error;
pub mod fixtures;
pub mod implications;
pub mod io;
pub mod session;

pub use bitset::BitSet;
pub use canonical_base::{canonical_base, canonical_base_within, inspect_base, pseudo_intents, CanonicalBase};
pub use context::{AttributeId, AttributeSet, CandidateObject, FormalContext, ObjectId, ObjectSet};
pub use crucial::{
    candidates, incremental_questions, inspect_closure, max_candidates, max_intent_questions, CandidateFamily,
    CrucialSet, MaxIntentQuestions,
};
pub use error::{Error, Result};
pub use implications::{forward_closure, holds, respects, support, to_units, Implication, Literal, Polarity};
