//! Export complexity, environmental efficiency and benchmark networks for
//! country panels.

pub mod complexity;
pub mod dea;
pub mod ingest;
pub mod networks;
pub mod similarity;
pub mod pipeline;
pub mod report;
pub mod fixture;
