//! Configuration, execution and reporting for the `symdyn` command-line tool.

pub mod config;
pub mod exit;
pub mod report;
pub mod run;
pub mod suite;
