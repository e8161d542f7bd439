//! Simulated GUI agent training: a deterministic screen world, rule-based
//! rewards on raw text, a linear softmax policy over enumerated responses,
//! RLOO policy gradients, reasoning-injection distillation and
//! error-recovery scenario synthesis.

pub mod cli;
pub mod config;
pub mod distill;
pub mod error;
pub mod eval;
pub mod pipeline;
pub mod policy;
pub mod reward;
pub mod scenario;
pub mod seed;
pub mod sim;
pub mod text;
pub mod train;

pub use config::Config;
pub use error::{Error, Result};
