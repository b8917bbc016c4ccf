//! Configuration input and file output.

pub mod bundle;
pub mod config;
pub mod csv;
pub mod number;
pub mod plot;
