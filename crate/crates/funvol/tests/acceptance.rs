//! Toolkit guarantees as an integration suite: one pass/fail line per
//! criterion (run with `--nocapture` to see every line).

use funvol::suite::{self, SuiteConfig};

#[test]
fn acceptance_criteria() {
    let cfg = SuiteConfig::default();
    let runs = suite::run_all(&cfg).expect("suite runs to completion");
    let mut all = true;
    for run in &runs {
        let ok = run.passed();
        all &= ok;
        println!(
            "criterion {:2} ({}): {}",
            run.index,
            run.name,
            if ok { "PASS" } else { "FAIL" }
        );
        for o in &run.outcomes {
            if !o.passed {
                println!(
                    "    {}: value {:e}, stderr {:e}, discrepancy {:e} > tolerance {:e}",
                    o.id, o.value, o.stderr, o.discrepancy, o.tolerance
                );
            }
        }
    }
    assert!(all, "some acceptance criteria failed (see lines above)");
}
