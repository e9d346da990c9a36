//! End-to-end acceptance run: every criterion suite at its full scale, with
//! one pass/fail line per criterion (run with `-- --nocapture` to see them
//! on success).

use sfl_core::suites::{criterion_summary, run_axiom_suite, RunConfig};

#[test]
fn acceptance_criteria() {
    let cfg = RunConfig::default();
    let outcome = run_axiom_suite(&cfg);

    let lines = criterion_summary(&outcome);
    let mut all = true;
    for line in &lines {
        let tag = if line.pass { "PASS" } else { "FAIL" };
        println!("criterion {:2}: {tag}: {}", line.number, line.label);
        all &= line.pass;
    }
    for r in &outcome.reports {
        if !r.passed() {
            println!(
                "suite {} ({} instances): first failure {:?}",
                r.suite,
                r.instances,
                r.failures.first()
            );
        }
    }
    for (suite, secs) in &outcome.timings {
        println!("timing {suite}: {secs:.1} s");
    }
    assert!(all, "acceptance criteria failed");
    assert!(outcome.all_passed(), "auxiliary suites failed");
}
