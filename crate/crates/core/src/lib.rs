//! Low-order linear state-space identification and spatiotemporal mode
//! decomposition from output-only time series.
//!
//! The pipeline delay-embeds the outputs into block-Hankel data matrices,
//! solves the rank-constrained regression `min ||Y_f - Theta Y_p||_F`
//! subject to `rank(Theta) <= n` in closed form by SVD, extracts state-space
//! matrices `(A, C)` from the factored minimizer, and decomposes the model
//! into spatial modes and temporal eigenvalue trends. The UPC subspace
//! method and classic truncated-SVD DMD are included as baselines, together
//! with constructive mappings between the model forms used to certify their
//! equivalence in tests.
//!
//! The [`cli`] module exposes the batch front end behind the `siddmd`
//! binary: CSV or PGM-frame ingestion, model persistence, mode rendering,
//! and report generation.

pub mod baselines;
pub mod cli;
pub mod datagen;
pub mod embedding;
pub mod equivalence;
pub mod error;
pub mod lowrank;
pub mod matdecomp;
pub mod sysid;

pub use embedding::{hankel_embed, stacked_window, HankelPair, OutputSequence};
pub use error::{Error, Result};
pub use lowrank::{solve_rank_constrained, LowRankMap};
pub use sysid::{identify, Identification, ModeSet, PredictMethod, Prediction, StateSpaceModel};
