//! Core of the slope-stability assistant.
//!
//! - [`model`]: canonical problem representation, validation, units, defaults
//! - [`extract`]: natural-language and annotation parameter extraction
//! - [`kb`]: knowledge-base chunking, embedding and exact retrieval
//! - [`emit`]: target-profile script emitters and parsers
//! - [`solver`]: limit-equilibrium factor-of-safety solver
//! - [`agent`]: conversation state machine and tool dispatch

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agent;
pub mod emit;
pub mod extract;
pub mod kb;
pub mod model;
pub mod solver;
