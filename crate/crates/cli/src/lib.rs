//! Command-line surface for the Adam descent-ascent laboratory: configuration,
//! subcommands, the invariant battery and the acceptance criteria.

pub mod acceptance;
pub mod battery;
pub mod commands;
pub mod config;
