//! Command-line front end for the `kypc` analysis library: system-file
//! parsing and the analysis commands behind the `kypc` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bundle;
pub mod commands;

pub use bundle::{emit_system_file, parse_system_file, parse_system_str, BundleError, Kind, SystemBundle};
pub use commands::{CommandError, FeedbackKind};
