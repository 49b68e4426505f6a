//! Timed checks that report one line each.

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

#[derive(Debug)]
pub struct Outcome {
    pub name: String,
    pub passed: bool,
    pub elapsed: Duration,
    pub detail: String,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {} ({:.2}s): {}", self.name, self.elapsed.as_secs_f64(), self.detail)
    }
}

/// Run `check` and time it. A panic or a blown time budget is a failure.
pub fn run(name: &str, budget: Duration, check: impl FnOnce() -> Result<String, String>) -> Outcome {
    let started = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
        let msg = panic
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into());
        Err(format!("panic: {msg}"))
    });
    let elapsed = started.elapsed();
    let (passed, detail) = match result {
        Ok(detail) if elapsed <= budget => (true, detail),
        Ok(detail) => (false, format!("{detail}; over the {}s budget", budget.as_secs_f64())),
        Err(e) => (false, e),
    };
    Outcome { name: name.to_string(), passed, elapsed, detail }
}

/// Write a line straight to stdout so it shows even when the test harness
/// captures output.
pub fn emit(line: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

/// Fail with `msg` unless `cond` holds.
pub fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}
