//! Command-line front end for the scenario engine: validation, headless
//! scripted runs, log replay and a live WebSocket session server.

pub mod commands;
pub mod playthrough;
pub mod report;
pub mod serve;
