//! Toolkit for simulating demographically-inspired query variants and
//! measuring how they change retrieval evaluation.
//!
//! The pipeline expands seed topics into profile-conditioned variants through a
//! completion provider ([`genkit`]), checks them ([`validate`], [`textkit`]),
//! runs them against a desk-scale BM25 index or imported TREC runs
//! ([`retrieval`]), fills relevance gaps with model labels ([`judge`]) and
//! analyses the resulting effectiveness matrix ([`evalstats`]).

// Negated float comparisons are used on purpose so that NaN fails checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evalstats;
pub mod genkit;
pub mod judge;
pub mod model;
pub mod retrieval;
pub mod textkit;
pub mod validate;

pub use error::{Error, Result};
