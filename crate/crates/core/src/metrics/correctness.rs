//! Per-file test-case accounting from compile and execution outcomes.

use crate::postprocess::{ExecResult, ExecStatus};

use super::report::CaseCounts;

/// Names of gtest cases reported as passed (`[       OK ] Suite.Name`).
pub fn gtest_passed(stdout: &str) -> Vec<&str> {
    stdout
        .lines()
        .filter_map(|l| l.trim_start().strip_prefix("[       OK ]"))
        .filter_map(|rest| rest.split_whitespace().next())
        .collect()
}

/// `cases` is the file's test-case count. A file that did not compile
/// contributes only to `generated`. Passed cases come from the framework's
/// per-test report when present, else all-or-nothing on the exit status.
pub fn case_counts(cases: usize, compiled: bool, exec: Option<&ExecResult>) -> CaseCounts {
    let n = cases as u64;
    let mut c = CaseCounts {
        generated: n,
        ..CaseCounts::default()
    };
    if !compiled {
        return c;
    }
    c.compiled = n;
    c.passed = match exec {
        None => 0,
        Some(r) => {
            let ok = gtest_passed(&r.stdout).len() as u64;
            if ok > 0 {
                ok.min(n)
            } else if r.status == ExecStatus::Pass {
                n
            } else {
                0
            }
        }
    };
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::time::Duration;

    fn exec(status: ExecStatus, stdout: &str) -> ExecResult {
        ExecResult {
            status,
            stdout: stdout.into(),
            stderr: String::new(),
            duration: Duration::ZERO,
        }
    }

    const GTEST_OUT: &str = "\
[==========] Running 3 tests from 1 test suite.
[ RUN      ] Calc.Add
[       OK ] Calc.Add (0 ms)
[ RUN      ] Calc.Sub
t.cpp:9: Failure
[  FAILED  ] Calc.Sub (0 ms)
[ RUN      ] Calc.Mul
[       OK ] Calc.Mul (0 ms)
[  FAILED  ] 1 test, listed below:
";

    #[test]
    fn gtest_report_counts_passes() {
        assert_eq!(gtest_passed(GTEST_OUT), ["Calc.Add", "Calc.Mul"]);
        let c = case_counts(
            3,
            true,
            Some(&exec(ExecStatus::AssertionFailure, GTEST_OUT)),
        );
        assert_eq!((c.generated, c.compiled, c.passed), (3, 3, 2));
    }

    #[test]
    fn exit_status_fallback() {
        assert_eq!(
            case_counts(2, true, Some(&exec(ExecStatus::Pass, ""))).passed,
            2
        );
        assert_eq!(
            case_counts(2, true, Some(&exec(ExecStatus::Crash, ""))).passed,
            0
        );
        assert_eq!(
            case_counts(2, false, None),
            CaseCounts {
                generated: 2,
                compiled: 0,
                passed: 0
            }
        );
    }
}
