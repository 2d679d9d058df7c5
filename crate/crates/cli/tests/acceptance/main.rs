//! Acceptance suite. Runs without the libtest harness, prints one PASS/FAIL
//! line per criterion and exits non-zero if any criterion fails.

#[path = "../../../core/tests/support/mod.rs"]
mod support;

mod algebra;
mod e2e;
mod fixtures;
mod perf;
mod persistence;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

/// Result of one criterion: a short detail line, or the reason it failed.
pub type Outcome = Result<String, String>;

#[macro_export]
macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if $cond {
        } else {
            return Err(format!($($msg)+));
        }
    };
}

type Check = fn() -> Outcome;

const CRITERIA: &[(&str, Check)] = &[
    ("layer-algebra", algebra::layer_algebra),
    ("resize-oracle", algebra::resize_oracle),
    ("tone-bijection", algebra::tone_bijection),
    ("changeset-suite", algebra::changeset_suite),
    ("mock-end-to-end", e2e::mock_end_to_end),
    ("example-fixtures", fixtures::example_fixtures),
    ("compose-performance", perf::compose_performance),
    ("persistence-identity", persistence::persistence_identity),
];

fn main() -> ExitCode {
    let mut failed = Vec::new();
    for (name, run) in CRITERIA {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(format!("panic: {msg}"))
        });
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail} [{secs:.2} s]"),
            Err(reason) => {
                println!("FAIL {name}: {reason} [{secs:.2} s]");
                failed.push(*name);
            }
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", CRITERIA.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
