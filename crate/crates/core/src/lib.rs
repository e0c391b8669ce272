//! Curriculum-ordered preference dataset construction for soft-constraint
//! instruction following.
//!
//! The pipeline ingests seed instructions, progressively injects one
//! constraint per step, generates an output per instruction, reorders
//! outputs with a pairwise judge tournament, bins the resulting preference
//! pairs into difficulty curricula, and emits training files, a manifest,
//! and analytics reports.

pub mod analytics;
pub mod builder;
pub mod config;
pub mod curriculum;
pub mod jsonl;
pub mod judger;
pub mod pipeline;
pub mod provider;
pub mod seeds;
pub mod synthesis;
pub mod validate;
