//! Agent-based simulation of a school evacuation during an active-shooter
//! incident, with and without a gunshot detection system.
//!
//! The crate is organised bottom-up:
//!
//! - [`layout`]: ASCII floor plans, validation, distances and line of sight
//! - [`pathfind`]: deterministic shortest paths and exit selection
//! - [`behavior`]: per-role decision rules (students, shooter, officer)
//! - [`engine`]: the tick loop, event log and run outcomes
//! - [`audit`]: replay checks for event logs
//! - [`experiment`]: paired detector-on/off batches over a configuration matrix
//! - [`report`]: results files, Markdown tables and SVG charts
//! - [`cli`]: the `egress-sim` command-line front end

pub mod audit;
pub mod behavior;
pub mod cli;
pub mod engine;
pub mod experiment;
pub mod layout;
pub mod maps;
pub mod pathfind;
pub mod report;

pub use layout::{layout_stats, manhattan, Cell, CellKind, FloorLayout, LayoutStats};
pub use pathfind::{nearest_exit, shortest_path, step_toward, Path};
