//! Command-line front end and WebSocket server for the flight engine.

pub mod check;
pub mod cli;
pub mod server;
