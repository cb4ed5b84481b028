//! Command-line pipeline driver.

pub mod config;
pub mod report;
pub mod stages;

use qvbench_core::Error;

/// Process exit code for a failed run.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Imbalance(_) => 4,
        e if e.is_provider_failure() => 3,
        _ => 2,
    }
}
