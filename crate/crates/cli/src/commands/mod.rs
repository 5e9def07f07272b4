//! Subcommand implementations.

pub mod bandit;
pub mod bench;
pub mod envelope;
pub mod sweep;
pub mod verify;
