//! Pass/fail bookkeeping for the acceptance run.

use std::time::{Duration, Instant};

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

#[derive(Debug, Default)]
pub struct Report {
    pub outcomes: Vec<Outcome>,
}

impl Report {
    /// Runs one check and prints its line as soon as it finishes. A check
    /// that returns `Err` fails with the error as its detail.
    pub fn check<F>(&mut self, name: &str, f: F)
    where
        F: FnOnce() -> Result<(bool, String), String>,
    {
        let start = Instant::now();
        let (passed, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
        let o = Outcome {
            name: name.to_string(),
            passed,
            detail,
            elapsed: start.elapsed(),
        };
        println!("{}", o.line());
        self.outcomes.push(o);
    }

    pub fn failures(&self) -> usize {
        self.outcomes.iter().filter(|o| !o.passed).count()
    }
}

impl Outcome {
    pub fn line(&self) -> String {
        format!(
            "{} {} ({:.1}s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.elapsed.as_secs_f64(),
            self.detail
        )
    }
}
