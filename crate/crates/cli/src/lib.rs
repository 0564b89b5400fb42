//! Batch driver for `droplet-core`: config parsing, run artifacts and the
//! validation subcommands.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod expr;
pub mod output;
