//! Private information retrieval for distributed storage over arbitrary
//! linear codes.
//!
//! The crate covers the whole pipeline: finite-field and code machinery
//! ([`field`], [`matrix`], [`code`]), PIR achievable rate matrices and their
//! interference matrices ([`rate`]), the multi-round retrieval protocol
//! ([`protocol`]), an in-memory storage simulator with privacy audits
//! ([`dss`]), closed-form rates and code classification ([`analysis`]), and
//! the command-line front end ([`cli`]).

pub mod error;
pub mod field;
pub mod matrix;
pub mod code;
pub mod rate;
pub mod protocol;
pub mod dss;
pub mod analysis;
pub mod cli;

pub use code::{AutomorphismKind, CoordinateSet, LinearCode, Permutation};
pub use error::{Error, Result};
pub use field::{field_arith, FieldElement, FieldOp, FieldSpec};
pub use matrix::FieldMatrix;
pub use rate::{InterferencePair, RateMatrix, SearchOutcome};
pub use protocol::{build_queries, decode, node_respond, ProtocolParams, QueryPlan};
pub use dss::{encode_storage, privacy_audit, run_session, FileSet, StorageArray};
pub use analysis::{achievable_rate, classify, mds_pir_capacity, necessary_condition, Classification, Verdict};
