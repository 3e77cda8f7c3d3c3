//! Experiment harness around [`swarmtune_core`]: connection-log ingestion,
//! occupancy bucketing, supervised task assembly, cached fitness evaluation,
//! topology search (swarm and grid), and the `swarmtune` command line tool.

#![warn(missing_docs)]

pub mod cli;
pub mod config;
pub mod data;
pub mod fitness;
pub mod pipeline;
pub mod report;
pub mod search;
