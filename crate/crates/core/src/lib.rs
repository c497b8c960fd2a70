//! Panel-analysis toolkit for screening which regional time-series factors
//! move with a target variable.
//!
//! The pieces compose into one pipeline: ingest a rectangular
//! region × year × variable panel ([`panel`]), estimate per-region OLS
//! trends of the target and split regions at a threshold ([`trend`]),
//! correlate each factor with the target per region ([`assoc`]), bin the
//! correlation columns with Jenks natural breaks ([`breaks`]), and compare
//! factor series between the two trend groups with a two-sample Hotelling
//! T² test backed by a permutation oracle ([`stat_test`]). The special
//! functions and linear solves live in [`numerics`] so the library carries
//! no numerical dependencies.

pub mod assoc;
pub mod breaks;
pub mod numerics;
pub mod panel;
pub mod trend;
