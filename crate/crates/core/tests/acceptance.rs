//! Acceptance gate: every criterion on one full-suite run at the default seed,
//! plus a rerun for determinism and wall-clock budgets.

use std::io::Write;
use std::time::Instant;

use esos_core::harness::CheckOutcome;
use esos_core::{run_suite, SamplePolicy, SuiteConfig, SuiteLevel};

/// Trailing `-L<n>` of a check id.
fn sites(id: &str) -> Option<usize> {
    id.rsplit_once("-L").and_then(|(_, n)| n.parse().ok())
}

struct Criterion {
    number: usize,
    title: &'static str,
    /// Bound the criterion puts on this check, `None` when the check is not covered.
    bound: fn(&str) -> Option<f64>,
}

fn funceq_bound(l: usize) -> f64 {
    if l <= 2 {
        1e-9
    } else {
        1e-6
    }
}

fn criteria() -> Vec<Criterion> {
    vec![
        Criterion { number: 1, title: "theta normalization", bound: |id| (id == "theta-limit").then_some(1e-10) },
        Criterion { number: 2, title: "dynamical Yang-Baxter", bound: |id| (id == "dyb-residual").then_some(1e-12) },
        Criterion {
            number: 3,
            title: "algebra identities",
            bound: |id| {
                let algebra = ["SAB-", "SDBH-", "AL1-", "DL1-"].iter().any(|p| id.starts_with(p));
                match (algebra, sites(id)) {
                    (true, Some(2)) => Some(1e-10),
                    (true, Some(3)) => Some(1e-8),
                    _ => None,
                }
            },
        },
        Criterion {
            number: 4,
            title: "highest-weight structure",
            bound: |id| {
                let l = sites(id)?;
                if l > 3 {
                    None
                } else if id.starts_with("zero-annihilation-") {
                    Some(1e-13)
                } else if id.starts_with("lambdas-eigenvalues-") {
                    Some(1e-11)
                } else {
                    None
                }
            },
        },
        Criterion {
            number: 5,
            title: "functional equations",
            bound: |id| {
                let eq = ["eqA-", "eqD-", "eqADneu-", "eqADper-"].iter().any(|p| id.starts_with(p));
                (eq && id.contains("-residual-")).then(|| funceq_bound(sites(id).unwrap_or(usize::MAX)))
            },
        },
        Criterion {
            number: 6,
            title: "Cramer relations",
            bound: |id| match (id.split_once("-L").map(|s| s.0), sites(id)) {
                (Some("ztau-cramer"), Some(l)) if l <= 2 => Some(1e-9),
                (Some("ZZ-ZZZ-ratios"), Some(2)) => Some(1e-8),
                _ => None,
            },
        },
        Criterion {
            number: 7,
            title: "determinant representations",
            bound: |id| {
                let l = sites(id)?;
                let det = if l <= 2 { 1e-8 } else { 1e-6 };
                if id.starts_with("thmZ1-oracle-match-")
                    || id.starts_with("thmZ234-oracle-match-")
                    || id.starts_with("thmZ1-x0-invariance-")
                {
                    (l <= 3).then_some(det)
                } else if id.starts_with("taugam-ratios-") {
                    // Same L range as the worked ratio identities; at L = 3 the
                    // suite applies the deep-cancellation tier instead.
                    (l <= 2).then_some(1e-9)
                } else {
                    None
                }
            },
        },
        Criterion {
            number: 8,
            title: "six-vertex limit",
            bound: |id| {
                let six = ["det6vA-", "det6vD-", "redAsys-", "redDsys-"].iter().any(|p| id.starts_with(p));
                (six && sites(id)? <= 3).then_some(1e-9)
            },
        },
        Criterion {
            number: 9,
            title: "structural",
            bound: |id| (id == "nrs-pair-index-bijective" || id.starts_with("omdef-")).then_some(0.5),
        },
    ]
}

fn line(out: &mut impl Write, number: usize, title: &str, pass: bool, detail: &str) {
    let status = if pass { "PASS" } else { "FAIL" };
    writeln!(out, "{status} criterion {number:>2} {title:<30} {detail}").unwrap();
}

/// Residuals and verdicts without timings.
fn fingerprint(checks: &[CheckOutcome]) -> Vec<(String, u64, bool)> {
    checks.iter().map(|c| (c.record.id.clone(), c.record.residual.to_bits(), c.record.pass)).collect()
}

#[test]
fn acceptance_criteria() {
    let mut out = std::io::stdout().lock();
    let policy = SamplePolicy::default();

    let start = Instant::now();
    let full = run_suite(&SuiteConfig::new(SuiteLevel::Full, policy.clone())).expect("full suite runs");
    let full_seconds = start.elapsed().as_secs_f64();

    let mut failures = Vec::new();
    for crit in criteria() {
        let covered: Vec<(&CheckOutcome, f64)> = full.checks.iter().filter_map(|c| (crit.bound)(&c.record.id).map(|b| (c, b))).collect();
        assert!(!covered.is_empty(), "criterion {} matches no check", crit.number);
        let mut bad = Vec::new();
        for (c, bound) in &covered {
            let r = &c.record;
            if r.tolerance > *bound {
                bad.push(format!("{} tolerance {:e} looser than {:e}", r.id, r.tolerance, bound));
            }
            if !r.pass || r.residual >= *bound {
                bad.push(format!(
                    "{} residual {:.3e} (bound {:e}){}",
                    r.id,
                    r.residual,
                    bound,
                    c.error.as_deref().map(|e| format!(": {e}")).unwrap_or_default()
                ));
            }
        }
        let worst =
            covered
                .iter()
                .map(|(c, b)| (c.record.residual / b, c.record.id.as_str()))
                .fold((0.0, ""), |a, x| if x.0 > a.0 { x } else { a });
        let detail = if worst.1.is_empty() {
            format!("{} checks, all exact", covered.len())
        } else {
            format!("{} checks, worst {} at {:.1e} of its bound", covered.len(), worst.1, worst.0)
        };
        line(&mut out, crit.number, crit.title, bad.is_empty(), &detail);
        for b in &bad {
            writeln!(out, "     {b}").unwrap();
        }
        if !bad.is_empty() {
            failures.push(crit.number);
        }
    }

    // A different pool size must not change anything.
    let mut again = SuiteConfig::new(SuiteLevel::Full, policy.clone());
    again.workers = 3;
    let rerun = run_suite(&again).expect("full suite reruns");
    let start = Instant::now();
    let quick = run_suite(&SuiteConfig::new(SuiteLevel::Quick, policy)).expect("quick suite runs");
    let quick_seconds = start.elapsed().as_secs_f64();
    let deterministic = fingerprint(&full.checks) == fingerprint(&rerun.checks);
    let on_time = quick_seconds < 10.0 && full_seconds < 300.0;
    let ok = deterministic && on_time && quick.pass && full.pass;
    let detail = format!(
        "rerun identical: {deterministic}; quick {quick_seconds:.2} s (< 10), full {full_seconds:.2} s (< 300); suites pass: quick {} full {}",
        quick.pass, full.pass
    );
    line(&mut out, 10, "reproducibility", ok, &detail);
    if !ok {
        failures.push(10);
    }
    drop(out);

    assert!(failures.is_empty(), "failing criteria: {failures:?}; failing checks: {:?}", full.failing_ids());
}
