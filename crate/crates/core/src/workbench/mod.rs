//! Scenario-driven front end: load a JSON scenario, run the construction
//! and its checks, and write the report and figures.

pub mod report;
pub mod run;
pub mod scenario;

pub use report::*;
pub use run::*;
pub use scenario::*;
