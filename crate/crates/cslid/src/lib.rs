//! File formats, dataset readers, reports and the command-line interface
//! for `cslid-core`.

pub mod cli;
pub mod modelfile;
pub mod predict;
pub mod profiles;
pub mod readers;
pub mod report;
