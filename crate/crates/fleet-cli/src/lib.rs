//! Library surface of the `fleet` CLI: scenario files, the simulation
//! harness and the subcommand implementations.

pub mod commands;
pub mod scenario;
pub mod sim;
