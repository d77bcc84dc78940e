//! File formats, reports and the command line around `insider-core`.

pub mod cli;
pub mod format;
pub mod repo;
pub mod report;
pub mod s2am;
