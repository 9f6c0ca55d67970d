//! File formats, sessions, the HTTP service and the command line for the
//! structure discovery engine in [`sheetgram_core`].

pub use sheetgram_core as core;

pub mod io;
pub mod repl;
pub mod server;
pub mod session;
pub mod views;
