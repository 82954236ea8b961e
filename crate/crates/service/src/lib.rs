//! Service layer around `slopesim-core`: configuration, the remote model
//! backend, the HTTP API and the command-line front end.

pub mod api;
pub mod cli;
pub mod config;
pub mod error;
pub mod remote;
pub mod state;
