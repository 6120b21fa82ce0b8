//! `msavg verify`: run the invariant suites and print a summary table.

use msavg::verify::{run_all, run_suite, SuiteOutcome, VerifyOptions, SUITES};

use crate::exit::{CliResult, Failure};

pub fn run(suite: Option<&str>, solver_tol: Option<f64>, seed: Option<u64>) -> CliResult<()> {
    let mut opts = VerifyOptions::default();
    if let Some(t) = solver_tol {
        if !(t > 0.0) {
            return Err(Failure::usage(anyhow::anyhow!("solver tolerance must be positive, got {t}")));
        }
        opts.solver_tol = t;
    }
    if let Some(s) = seed {
        opts.seed = s;
    }
    let outcomes = match suite {
        Some(name) => vec![run_suite(name, &opts).ok_or_else(|| {
            Failure::usage(anyhow::anyhow!("unknown suite {name:?}; available: {}", SUITES.join(", ")))
        })?],
        None => run_all(&opts),
    };
    print!("{}", table(&outcomes));
    match outcomes.iter().find(|o| !o.passed) {
        Some(f) => Err(Failure::numerical(anyhow::anyhow!("suite {} failed: {}", f.name, f.detail))),
        None => Ok(()),
    }
}

pub fn table(outcomes: &[SuiteOutcome]) -> String {
    let width = outcomes.iter().map(|o| o.name.len()).max().unwrap_or(5).max(5);
    let mut s = format!("{:<width$}  result  {:>6}  detail\n", "suite", "cases");
    for o in outcomes {
        s.push_str(&format!(
            "{:<width$}  {:<6}  {:>6}  {}\n",
            o.name,
            if o.passed { "PASS" } else { "FAIL" },
            o.cases,
            o.detail
        ));
    }
    s
}
