//! Core algorithms for predicting rankings of software verification tools.
//!
//! Programs written in a small C subset are turned into *verification graphs*
//! ([`graph::VerificationGraph`]): one abstract syntax tree per statement, with
//! the statement roots wired together by control-flow, control-dependence and
//! data-dependence edges. A Weisfeiler-Lehman style kernel ([`wl`]) compares
//! such graphs, a soft-margin SVM on the resulting Gram matrix ([`svm`]) learns
//! pairwise tool preferences, and ranking by pairwise comparison ([`ranking`])
//! combines them into a full ranking of the tools.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, parallelism and
//! the command line live in the `toolrank` crate.
#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod competition;
pub mod frontend;
pub mod graph;
pub mod ranking;
pub mod svm;
pub mod wl;

pub use graph::{EdgeKind, NeighborSelector, NodeLabel, VerificationGraph};
pub use ranking::{Ranking, RpcEnsemble, ToolSet};
pub use svm::{PairwiseModel, SvmConfig};
pub use wl::{CompressionTable, GramMatrix, KernelConfig};
