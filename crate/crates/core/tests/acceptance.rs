//! One line per acceptance criterion; exits non-zero if any fails.

use std::process::ExitCode;

use sasaki_core::verify::{run_suite, Suite};

fn main() -> ExitCode {
    let results = run_suite(Suite::All);
    for r in &results {
        println!("{r}");
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
