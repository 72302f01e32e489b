//! Runs the nine acceptance criteria at desk scale and prints one line each.
//!
//! `ACCEPTANCE_ONLY=3,5` restricts the run to a subset of criteria.
//! Built without the libtest harness so the lines show even when all pass.

use finsler_lab::checks::{run_check_reported, Scale, Suite, Tolerances, CHECKS};

fn selected() -> Vec<usize> {
    match std::env::var("ACCEPTANCE_ONLY") {
        Ok(s) if !s.trim().is_empty() => s.split(',').filter_map(|t| t.trim().parse().ok()).collect(),
        _ => CHECKS.iter().map(|c| c.id).collect(),
    }
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance_criteria: test");
        return;
    }
    let suite = Suite::new(Scale::default(), 7).expect("suite");
    let tol = Tolerances::default();
    let mut failed = Vec::new();
    for id in selected() {
        let r = run_check_reported(id, &suite, &tol);
        println!("{}", r.line());
        if std::env::var_os("ACCEPTANCE_VERBOSE").is_some() {
            for m in &r.measures {
                println!("    {:<5} {:<60} {:.3e} (limit {:.1e})", if m.passed { "ok" } else { "FAIL" }, m.label, m.value, m.limit);
            }
        }
        if !r.passed {
            failed.push(r.id);
        }
    }
    if !failed.is_empty() {
        eprintln!("criteria failed: {failed:?}");
        std::process::exit(1);
    }
    println!("acceptance: all selected criteria passed");
}
