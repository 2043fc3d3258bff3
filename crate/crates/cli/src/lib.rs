//! Driver library behind the `certify` binary: certificate orchestration,
//! report assembly, the growth oracle, and the regression-corpus runner.

pub mod corpus;
pub mod oracle;
pub mod report;
pub mod sturm;
