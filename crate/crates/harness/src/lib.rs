//! Test-case generation and differential checking for `capbox`.
//!
//! [`gen`] builds environments, types and well-typed terms from a seed;
//! [`mutate`] removes box operations to produce inputs for box inference;
//! [`runner`] executes the named properties of [`props`] and reports
//! shrunk, replayable failures.

pub mod gen;
pub mod mutate;
pub mod props;
pub mod runner;

pub use gen::{gen_types, gen_welltyped, hostile_term, Gen, GenConfig, GenError};
pub use mutate::{broken_cv, drop_boxes};
pub use props::{check, generate, shrink, Input, InputRepr, Mutation, Property, Settings, Verdict};
pub use runner::{
    replay, run_differential, CaseResult, Failure, Finding, Report, RunConfig, Stats, MIXED_BIASES,
};
