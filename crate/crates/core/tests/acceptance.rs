//! Acceptance suite: twelve criteria at seed 42, one line each.
//!
//! Runs without the libtest harness so the lines always print; exits non-zero
//! if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use normgeo::bilinear::{attainment_set, is_operator_smooth, BilinearOp, NormOptions, ATTAINMENT_TOL, CLUSTER_RADIUS};
use normgeo::oracle::{verify_theorem, TheoremReport};
use normgeo::{Result, SpaceSpec};

const SEED: u64 = 42;

struct Verdict {
    passed: bool,
    detail: String,
}

fn suites(runs: &[(&str, usize)]) -> Result<(Verdict, Vec<TheoremReport>)> {
    let mut reports = Vec::new();
    for &(id, trials) in runs {
        reports.push(verify_theorem(id, trials, SEED)?);
    }
    let detail = reports
        .iter()
        .map(|r| {
            format!(
                "{} {}/{} pass, {} skipped, {} counterexamples",
                r.theorem_id,
                r.passes,
                r.trials,
                r.skipped_boundary,
                r.counterexamples.len()
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    let passed = reports.iter().all(TheoremReport::passed);
    Ok((Verdict { passed, detail }, reports))
}

fn closed_form_fidelity() -> Result<Verdict> {
    let (mut v, reports) = suites(&[("RHO-CLOSED", 10_000)])?;
    let worst = reports[0].max_residual;
    v.passed &= worst <= 1e-8;
    v.detail.push_str(&format!("; max |closed - numeric| = {worst:.2e}"));
    Ok(v)
}

fn smoothness_fixtures() -> Result<Verdict> {
    let l2 = SpaceSpec::l2(2);
    let opts = NormOptions { seed: SEED, ..NormOptions::default() };
    let smooth = BilinearOp::rank_one(l2.clone(), l2.clone(), l2.clone(), &[0.6, -0.8], &[1.0, 2.0], &[3.0, -1.0])?;
    let diagonal = BilinearOp::from_flat(l2.clone(), l2.clone(), l2.clone(), vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0])?;
    let tied = BilinearOp::rank_one(l2.clone(), l2, SpaceSpec::linf(2), &[2.0, 1.0], &[-1.0, 1.0], &[1.0, -1.0])?;
    let mut lines = Vec::new();
    let mut passed = true;
    for (name, t, smooth_expected, orbits_expected) in
        [("smooth rank-one", smooth, true, 1), ("l2 diagonal", diagonal, false, 2), ("rank-one into tied l_inf", tied, false, 1)]
    {
        let v = is_operator_smooth(&t, &opts)?;
        let orbits = attainment_set(&t, &opts, ATTAINMENT_TOL, CLUSTER_RADIUS)?.count();
        let ok = v.holds == smooth_expected && orbits == orbits_expected;
        passed &= ok;
        lines.push(format!("{name}: smooth={} orbits={orbits}", v.holds));
    }
    let (suite, _) = suites(&[("BOP-SMOOTH", 200), ("BOP-SMOOTH-NA", 200)])?;
    Ok(Verdict {
        passed: passed && suite.passed,
        detail: format!("{}; {}", lines.join(", "), suite.detail),
    })
}

/// Reruns suites with a different worker count and compares the JSON.
fn determinism(first: &[(usize, TheoremReport)]) -> Result<Verdict> {
    std::env::set_var("NORMGEO_THREADS", "3");
    let mut same = true;
    for (trials, r) in first {
        let again = verify_theorem(&r.theorem_id, *trials, SEED)?;
        same &= serde_json::to_string(r).unwrap() == serde_json::to_string(&again).unwrap();
    }
    std::env::remove_var("NORMGEO_THREADS");
    let ids: Vec<_> = first.iter().map(|(_, r)| r.theorem_id.as_str()).collect();
    Ok(Verdict {
        passed: !first.is_empty() && same,
        detail: format!("{} rerun on 3 workers, byte-identical: {same}", ids.join(", ")),
    })
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut failures = 0;
    let mut report = |n: usize, name: &str, v: Result<Verdict>| {
        let (passed, detail) = match v {
            Ok(v) => (v.passed, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !passed {
            failures += 1;
        }
        println!("[{}] {n:>2} {name}: {detail}", if passed { "PASS" } else { "FAIL" });
    };

    report(1, "closed-form fidelity", closed_form_fidelity());

    let parts = suites(&[("T2.1", 10_000), ("T2.2", 10_000)]);
    let mut rerun = Vec::new();
    report(2, "derivative signs match part membership", parts.map(|(v, r)| {
        rerun.push((10_000, r[0].clone()));
        v
    }));

    report(3, "lp, l_inf and l1 sign conditions", suites(&[("TLP", 10_000), ("TLINF", 10_000), ("TL1P", 10_000), ("TL1M", 10_000)]).map(|r| r.0));
    report(4, "strong orthogonality and l1-sums", suites(&[("TSB", 10_000), ("CSUM1", 10_000)]).map(|r| r.0));
    report(5, "B* orthogonality", suites(&[("TBSTAR", 1_000)]).map(|r| r.0));
    report(6, "supporting functional sandwich", suites(&[("L5416", 1_000)]).map(|r| r.0));
    report(7, "James criterion", suites(&[("JAMES", 10_000)]).map(|r| r.0));
    report(8, "operator norm accuracy", suites(&[("BOP-NORM", 100)]).map(|r| r.0));

    let orth = suites(&[("BOP-ORTH", 200), ("BOP-COR", 200)]);
    report(9, "operator orthogonality and single-orbit case", orth.map(|(v, r)| {
        rerun.push((200, r[0].clone()));
        v
    }));

    report(10, "operator smoothness fixtures", smoothness_fixtures());
    report(11, "approximate operator orthogonality", suites(&[("BOP-APPROX", 200)]).map(|r| r.0));
    report(12, "determinism", determinism(&rerun));

    println!("acceptance: {} of 12 passed in {:.1} s", 12 - failures, start.elapsed().as_secs_f64());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
