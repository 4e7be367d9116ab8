//! ktforge: knowledge-driven unit test generation for Java codebases.
//!
//! The library mines project structure and usage knowledge from subject
//! sources, retrieves related functions by shared usage, and drives a
//! staged, prompt-orchestrated pipeline that turns a focal method into a
//! complete test class: framework generation, multi-view test case design,
//! method transformation, integration, and a bounded repair loop.
//!
//! Start from [`frontend::parse_project`] and [`kb::build_index`], or see
//! the runnable programs under `examples/` for each major capability.

pub mod cli;
pub mod config;
pub mod eval;
pub mod frontend;
pub mod gateway;
pub mod integrate;
pub mod kb;
pub mod mining;
pub mod pipeline;
pub mod refine;
pub mod retrieval;

pub use frontend::model;
