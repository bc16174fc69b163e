//! Desk-scale acceptance suite: one runnable criterion per exit requirement,
//! shared between the integration test target and the CLI `accept` command.

use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct CriterionOutcome {
    pub id: usize,
    pub name: &'static str,
    pub pass: bool,
    pub lines: Vec<String>,
}

mod suite;
pub use suite::*;
