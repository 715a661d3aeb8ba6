//! Command implementations and the session server behind the `elastica`
//! binary.

pub mod commands;
pub mod server;
