//! Prints one PASS/FAIL line per criterion and fails if any criterion fails.

use pauli_tomo_acceptance::CRITERIA;
use std::process::ExitCode;
use std::time::Instant;

fn main() -> ExitCode {
    let mut failed = 0;
    for criterion in CRITERIA {
        let start = Instant::now();
        let verdict = criterion();
        println!("{verdict} ({:.2} s)", start.elapsed().as_secs_f64());
        if !verdict.passed {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", CRITERIA.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
