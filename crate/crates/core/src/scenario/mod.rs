//! JSON scenarios, their execution, and the built-in self-test.

pub mod random;
pub mod report;
pub mod run;
pub mod schema;
pub mod selftest;

pub use report::{CheckRecord, Report, Verdict};
pub use run::{run, RunOptions, Selection};
pub use schema::{parse_scenario, CheckKind, CheckSpec, Scenario};
pub use selftest::selftest;
