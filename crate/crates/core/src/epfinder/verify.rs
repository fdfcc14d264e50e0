use std::fmt;

use super::{coefficient_mismatch, EpProblem, EpSolution, Mode};
use crate::linalg::{kernel_dimension, C64};
use crate::model::{symmetry_violations, GainLossProfile};

/// Largest allowed `|p_k - q_k|` relative to `max(1, max |p_k|)`.
pub const COEFFICIENT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub family_id: usize,
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        writeln!(f, "family {}: {status}", self.family_id)?;
        for c in &self.checks {
            let mark = if c.passed { "ok  " } else { "FAIL" };
            writeln!(f, "  [{mark}] {:<16} {}", c.name, c.detail)?;
        }
        Ok(())
    }
}

fn check(name: &'static str, passed: bool, detail: impl Into<String>) -> Check {
    Check {
        name,
        passed,
        detail: detail.into(),
    }
}

/// Re-derives every invariant of a stored solution from its `(a, b, gamma)`
/// alone: coefficient matching at the stored `gamma`, kernel dimension, PT
/// symmetry and normalization, and the canonical sign.
pub fn verify_solution(sol: &EpSolution) -> VerificationReport {
    let mut checks = Vec::new();
    let shape_ok = sol.order >= 2 && sol.a.len() == sol.order && sol.b.len() == sol.order;
    checks.push(check(
        "shape",
        shape_ok,
        format!("order {}, |a| = {}, |b| = {}", sol.order, sol.a.len(), sol.b.len()),
    ));
    let problem = match EpProblem::new(sol.order, sol.mode, sol.epsilon) {
        Ok(p) if shape_ok => p,
        Ok(_) => return report(sol, checks),
        Err(e) => {
            checks.push(check("problem", false, e.to_string()));
            return report(sol, checks);
        }
    };

    let profile = GainLossProfile {
        n: sol.order,
        a: sol.a.clone(),
        b: sol.b.clone(),
    };
    let violations = symmetry_violations(&profile);
    checks.push(check(
        "pt-symmetry",
        violations.is_empty(),
        if violations.is_empty() {
            "mirror relations hold".to_string()
        } else {
            violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
        },
    ));

    let expected_a1 = match sol.mode {
        Mode::Leading => 0.0,
        Mode::Full => 1.0,
    };
    checks.push(check(
        "normalization",
        sol.a[0] == expected_a1,
        format!("a_1 = {}, expected {expected_a1}", sol.a[0]),
    ));

    let first = sol.b.iter().find(|b| b.abs() > 1e-10);
    checks.push(check(
        "canonical-sign",
        first.is_none_or(|b| *b > 0.0),
        match first {
            Some(b) => format!("first nonzero b = {b}"),
            None => "no gain/loss".to_string(),
        },
    ));

    match problem.matrix(&sol.a, &sol.b) {
        Ok(m) => {
            match coefficient_mismatch(&m, sol.gamma) {
                Ok((diff, scale)) => {
                    let worst = diff.iter().map(|z| z.norm()).fold(0.0, f64::max);
                    let tol = COEFFICIENT_TOLERANCE * scale.max(1.0);
                    checks.push(check(
                        "residual",
                        worst <= tol,
                        format!("max coefficient mismatch {worst:.3e} (tolerance {tol:.1e})"),
                    ));
                }
                Err(e) => checks.push(check("residual", false, e.to_string())),
            }
            match kernel_dimension(&m, C64::new(sol.gamma, 0.0), problem.kernel_tolerance()) {
                Ok(k) => checks.push(check("kernel-dimension", k == 1, format!("dim ker(M - gamma I) = {k}"))),
                Err(e) => checks.push(check("kernel-dimension", false, e.to_string())),
            }
        }
        Err(e) => checks.push(check("matrix", false, e.to_string())),
    }
    report(sol, checks)
}

fn report(sol: &EpSolution, checks: Vec<Check>) -> VerificationReport {
    VerificationReport {
        family_id: sol.family_id,
        checks,
    }
}
