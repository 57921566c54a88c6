//! The eleven acceptance criteria at full scale, one line each. Runs
//! without the test harness so the lines always reach the output.

use gcstar_core::suite::{run_suite, SuiteConfig};
use std::process::ExitCode;

fn main() -> ExitCode {
    let results = run_suite(&SuiteConfig::acceptance(7));
    let mut failed = Vec::new();
    for r in &results {
        println!("{}", r.line());
        if !r.passed() {
            failed.push(r.id);
            for c in r.report.failures() {
                println!("      {c}");
            }
        }
    }
    if results.len() != 11 {
        println!("expected 11 criteria, ran {}", results.len());
        return ExitCode::FAILURE;
    }
    if !failed.is_empty() {
        println!("criteria failed: {failed:?}");
        return ExitCode::FAILURE;
    }
    println!("acceptance: 11/11 criteria passed");
    ExitCode::SUCCESS
}
