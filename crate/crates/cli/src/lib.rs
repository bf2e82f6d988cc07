//! File formats, configuration, reports and the command-line front end for
//! `trendgate-core`.

pub mod cli;
pub mod config;
pub mod csv_io;
pub mod report;
pub mod svg;
