use std::process::ExitCode;

use hbapprox::verify;

fn main() -> ExitCode {
    let mut failed = 0;
    for (id, _) in verify::CRITERIA {
        let report = verify::run(id);
        println!("{report}");
        if !report.passed {
            failed += 1;
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        verify::CRITERIA.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
