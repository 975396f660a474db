//! Simulation and evaluation of conversational intent clarification with
//! yes/no questions.
//!
//! A simulated user holds one facet of an ambiguous or faceted topic. A
//! selection policy asks clarifying questions from a candidate pool until the
//! user confirms one or the turn budget runs out; every "no" is negative
//! feedback the next selection can use.
//!
//! The neural scorers, losses, optimizer and ranking metrics are generic
//! over [`Scalar`]; the aliases below fix the common `f64`/`f32` choices.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod feedback;
pub mod neural;
pub mod num;
pub mod pipeline;
pub mod retrieval;
pub mod simulator;
pub mod synthetic;

pub use error::{Error, Result};
pub use num::Scalar;

pub type Mlp64 = neural::Mlp<f64>;
pub type Mlp32 = neural::Mlp<f32>;
pub type InitScorer64 = neural::InitScorer<f64>;
pub type InitScorer32 = neural::InitScorer<f32>;
pub type MmrScorer64 = neural::MmrScorer<f64>;
pub type MmrScorer32 = neural::MmrScorer<f32>;
pub type Network64 = neural::Network<f64>;
pub type Adam64 = neural::Adam<f64>;
