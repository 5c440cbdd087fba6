//! Brute-force references and the theorem-verification harness.
//!
//! Every suite draws trial `i` from its own stream `seeded_rng(seed, i)`, so a
//! report depends only on `(id, trials, seed)` and not on how trials are
//! spread over worker threads (`NORMGEO_THREADS`).

mod operator;
mod vector;

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{input, Result};
use crate::minimize::golden_section;
use crate::spaces::{SpaceSpec, Vector};

pub const DEFAULT_VECTOR_TRIALS: usize = 10_000;
pub const DEFAULT_OPERATOR_TRIALS: usize = 200;
/// Suites that scan an inner parameter grid on every trial.
pub const DEFAULT_SCAN_TRIALS: usize = 1_000;
pub const DEFAULT_LAMBDA_STEPS: usize = 100_000;
/// Instances this close to a strict inequality are skipped, not judged.
pub const BOUNDARY_MARGIN: f64 = 1e-8;

/// Dense scan of `f` over `[lo, hi]` followed by golden-section refinement
/// around the best sample. Returns `(λ*, f(λ*))`.
pub fn grid_min_lambda<F>(mut f: F, bracket: (f64, f64), steps: usize) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let (lo, hi) = bracket;
    let steps = steps.max(1);
    let h = (hi - lo) / steps as f64;
    let mut best = (lo, f(lo));
    for k in 1..=steps {
        let t = if k == steps { hi } else { lo + h * k as f64 };
        let v = f(t);
        if v < best.1 {
            best = (t, v);
        }
    }
    let a = (best.0 - h).max(lo);
    let b = (best.0 + h).min(hi);
    let m = golden_section(&mut f, a, b, 1e-13 * (1.0 + best.0.abs()));
    if m.value < best.1 {
        (m.arg, m.value)
    } else {
        best
    }
}

/// Unit vectors on an angular mesh with `resolution` points per angle:
/// `±1` in dimension 1, a circle in dimension 2, an azimuth/polar grid in
/// dimension 3. Each point is normalized in the space's own norm.
pub fn sphere_mesh(space: &SpaceSpec, resolution: usize) -> Result<Vec<Vector>> {
    if resolution == 0 {
        return input("mesh resolution must be positive");
    }
    let tau = std::f64::consts::TAU;
    let raw: Vec<Vec<f64>> = match space.dim() {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..resolution)
            .map(|k| {
                let (s, c) = (tau * k as f64 / resolution as f64).sin_cos();
                vec![c, s]
            })
            .collect(),
        3 => {
            let rings = (resolution / 2).max(1);
            let mut pts = vec![vec![0.0, 0.0, 1.0], vec![0.0, 0.0, -1.0]];
            for j in 1..rings {
                let (st, ct) = (std::f64::consts::PI * j as f64 / rings as f64).sin_cos();
                for k in 0..resolution {
                    let (sp, cp) = (tau * k as f64 / resolution as f64).sin_cos();
                    pts.push(vec![st * cp, st * sp, ct]);
                }
            }
            pts
        }
        d => return input(format!("sphere meshes need dimension at most 3, got {d}")),
    };
    Ok(raw
        .into_iter()
        .map(|v| {
            let n = space.norm_of(&v);
            Vector {
                space: space.clone(),
                coords: v.into_iter().map(|c| c / n).collect(),
            }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleRecord {
    pub trial: usize,
    pub family: String,
    pub residual: f64,
    pub detail: String,
    pub inputs: serde_json::Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub theorem_id: String,
    pub trials: usize,
    pub passes: usize,
    pub skipped_boundary: usize,
    pub counterexamples: Vec<CounterexampleRecord>,
    pub max_residual: f64,
    pub seed: u64,
    /// Kept out of the JSON so identical runs serialize identically.
    #[serde(skip)]
    pub wall_time: f64,
}

impl TheoremReport {
    pub fn passed(&self) -> bool {
        self.counterexamples.is_empty()
    }

    pub fn table_row(&self) -> String {
        format!(
            "{:<14} {:>7} {:>7} {:>7} {:>5} {:>11.3e} {}",
            self.theorem_id,
            self.trials,
            self.passes,
            self.skipped_boundary,
            self.counterexamples.len(),
            self.max_residual,
            if self.passed() { "pass" } else { "FAIL" }
        )
    }
}

pub const TABLE_HEADER: &str = "id               trials  passes skipped  fail    residual verdict";

/// Renders reports as a fixed-width table.
pub fn render_table(reports: &[TheoremReport]) -> String {
    let mut out = String::from(TABLE_HEADER);
    out.push('\n');
    for r in reports {
        let _ = writeln!(out, "{}", r.table_row());
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub passed: bool,
    pub reports: Vec<TheoremReport>,
}

impl Summary {
    pub fn new(reports: Vec<TheoremReport>) -> Self {
        Summary {
            passed: reports.iter().all(TheoremReport::passed),
            reports,
        }
    }
}

/// Result of one trial.
#[derive(Clone, Debug)]
pub(crate) enum Outcome {
    Pass(f64),
    Skip,
    Fail {
        residual: f64,
        detail: String,
        inputs: serde_json::Value,
    },
}

impl Outcome {
    pub(crate) fn fail(residual: f64, detail: impl Into<String>, inputs: serde_json::Value) -> Self {
        Outcome::Fail {
            residual,
            detail: detail.into(),
            inputs,
        }
    }

    /// Agreement of two boolean verdicts; disagreement is a failure.
    pub(crate) fn agree(
        a: bool,
        b: bool,
        detail: impl FnOnce() -> String,
        inputs: impl FnOnce() -> serde_json::Value,
    ) -> Self {
        if a == b {
            Outcome::Pass(0.0)
        } else {
            Outcome::fail(0.0, detail(), inputs())
        }
    }

    /// Folds a further check into this one: skips and failures win.
    pub(crate) fn and(self, other: Outcome) -> Outcome {
        match (self, other) {
            (f @ Outcome::Fail { .. }, _) | (_, f @ Outcome::Fail { .. }) => f,
            (Outcome::Skip, _) | (_, Outcome::Skip) => Outcome::Skip,
            (Outcome::Pass(a), Outcome::Pass(b)) => Outcome::Pass(a.max(b)),
        }
    }
}

/// Worker count: `NORMGEO_THREADS` when set to a positive integer, else the
/// available parallelism.
pub fn worker_count() -> usize {
    std::env::var("NORMGEO_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs `f(0..count)` over contiguous index blocks and returns the outcomes
/// in index order.
pub(crate) fn run_trials<F>(count: usize, f: F) -> Result<Vec<Outcome>>
where
    F: Fn(usize) -> Result<Outcome> + Sync,
{
    let workers = worker_count().min(count).max(1);
    if workers == 1 {
        return (0..count).map(&f).collect();
    }
    let chunk = count.div_ceil(workers);
    let parts: Vec<Vec<Result<Outcome>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let f = &f;
                scope.spawn(move || {
                    let lo = w * chunk;
                    let hi = ((w + 1) * chunk).min(count);
                    (lo..hi).map(f).collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("trial worker panicked"))
            .collect()
    });
    parts.into_iter().flatten().collect()
}

/// A suite run over named families, `trials` trials each.
pub(crate) struct FamilyRun<'a> {
    pub(crate) id: &'a str,
    pub(crate) seed: u64,
    pub(crate) trials: usize,
    pub(crate) families: Vec<String>,
}

impl FamilyRun<'_> {
    /// Runs `f(family_index, global_trial_index)` and aggregates a report.
    pub(crate) fn run<F>(&self, f: F) -> Result<TheoremReport>
    where
        F: Fn(usize, usize) -> Result<Outcome> + Sync,
    {
        let start = Instant::now();
        let per = self.trials;
        let total = per * self.families.len();
        let outcomes = run_trials(total, |i| f(i / per, i))?;
        let mut report = TheoremReport {
            theorem_id: self.id.to_string(),
            trials: total,
            passes: 0,
            skipped_boundary: 0,
            counterexamples: Vec::new(),
            max_residual: 0.0,
            seed: self.seed,
            wall_time: 0.0,
        };
        for (i, o) in outcomes.into_iter().enumerate() {
            match o {
                Outcome::Pass(r) => {
                    report.passes += 1;
                    report.max_residual = report.max_residual.max(r);
                }
                Outcome::Skip => report.skipped_boundary += 1,
                Outcome::Fail {
                    residual,
                    detail,
                    inputs,
                } => {
                    report.max_residual = report.max_residual.max(residual);
                    report.counterexamples.push(CounterexampleRecord {
                        trial: i,
                        family: self.families[i / per].clone(),
                        residual,
                        detail,
                        inputs,
                    });
                }
            }
        }
        report.wall_time = start.elapsed().as_secs_f64();
        Ok(report)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteScale {
    Vector,
    Scan,
    Operator,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TheoremInfo {
    pub id: &'static str,
    pub scale: SuiteScale,
    pub checks: &'static str,
}

impl TheoremInfo {
    pub fn default_trials(&self) -> usize {
        match self.scale {
            SuiteScale::Vector => DEFAULT_VECTOR_TRIALS,
            SuiteScale::Scan => DEFAULT_SCAN_TRIALS,
            SuiteScale::Operator => DEFAULT_OPERATOR_TRIALS,
        }
    }
}

use SuiteScale::{Operator as Op, Scan, Vector as Vec_};

/// Every registered suite.
pub const THEOREMS: &[TheoremInfo] = &[
    TheoremInfo { id: "T2.1", scale: Vec_, checks: "rho_plus(x,y) >= 0 iff y is in the positive part of x" },
    TheoremInfo { id: "T2.2", scale: Vec_, checks: "rho_minus(x,y) <= 0 iff y is in the negative part of x" },
    TheoremInfo { id: "TLP", scale: Vec_, checks: "lp sign of sum y_i x_i |x_i|^(p-2) gives the signs of rho" },
    TheoremInfo { id: "TLINF", scale: Vec_, checks: "l_inf signs of rho from the max-coordinate set" },
    TheoremInfo { id: "TL1P", scale: Vec_, checks: "l1 sign of rho_plus from disjoint supports or S + Z" },
    TheoremInfo { id: "TL1M", scale: Vec_, checks: "l1 sign of rho_minus from disjoint supports or S - Z" },
    TheoremInfo { id: "TSB", scale: Vec_, checks: "strong orthogonality in l1/l_inf iff rho_plus > 0 > rho_minus" },
    TheoremInfo { id: "CSUM1", scale: Vec_, checks: "strong orthogonality in an l1-sum from summed child derivatives" },
    TheoremInfo { id: "CLS", scale: Vec_, checks: "left-symmetric implication via rho matches the part-membership form" },
    TheoremInfo { id: "CRS", scale: Vec_, checks: "right-symmetric implication via rho matches the part-membership form" },
    TheoremInfo { id: "L5416", scale: Vec_, checks: "rho_minus(x,y) <= f(y) <= rho_plus(x,y) for supporting f" },
    TheoremInfo { id: "TBSTAR", scale: Scan, checks: "B* orthogonality via rho_minus = 0 matches the t-grid definition" },
    TheoremInfo { id: "RHO-CLOSED", scale: Vec_, checks: "closed-form rho agrees with the difference quotient" },
    TheoremInfo { id: "RHO-PROPS", scale: Vec_, checks: "scaling, smoothness and Lipschitz laws of rho" },
    TheoremInfo { id: "JAMES", scale: Vec_, checks: "James' criterion agrees with Birkhoff-James orthogonality" },
    TheoremInfo { id: "BOP-NORM", scale: Op, checks: "alternating operator norm against the grid and rank-one values" },
    TheoremInfo { id: "BOP-ORTH", scale: Op, checks: "operator orthogonality by minimization matches the attainment certificate" },
    TheoremInfo { id: "BOP-COR", scale: Op, checks: "single attainment orbit: T perp A iff T(x0,y0) perp A(x0,y0)" },
    TheoremInfo { id: "BOP-SMOOTH-NA", scale: Op, checks: "smooth operators attain their norm on a single orbit" },
    TheoremInfo { id: "BOP-SMOOTH", scale: Op, checks: "smoothness iff single orbit and smooth T(x0,y0)" },
    TheoremInfo { id: "BOP-APPROX", scale: Op, checks: "approximate operator orthogonality: certificate, eps = 0 and monotonicity" },
    TheoremInfo { id: "BOP-SEQ", scale: Op, checks: "norming-sequence clauses certify exactly the orthogonal pairs" },
];

pub fn theorem_info(id: &str) -> Option<&'static TheoremInfo> {
    THEOREMS.iter().find(|t| t.id == id)
}

/// Runs the suite registered under `theorem_id`.
pub fn verify_theorem(theorem_id: &str, trials: usize, seed: u64) -> Result<TheoremReport> {
    if trials == 0 {
        return input("trials must be at least 1");
    }
    match theorem_id {
        "T2.1" => vector::parts(theorem_id, trials, seed, true),
        "T2.2" => vector::parts(theorem_id, trials, seed, false),
        "TLP" | "TLINF" | "TL1P" | "TL1M" => vector::sign_conditions(theorem_id, trials, seed),
        "TSB" => vector::strong(theorem_id, trials, seed),
        "CSUM1" => vector::strong_sum(theorem_id, trials, seed),
        "CLS" => vector::symmetric(theorem_id, trials, seed, true),
        "CRS" => vector::symmetric(theorem_id, trials, seed, false),
        "L5416" => vector::sandwich(theorem_id, trials, seed),
        "TBSTAR" => vector::b_star(theorem_id, trials, seed),
        "RHO-CLOSED" => vector::closed_fidelity(theorem_id, trials, seed),
        "RHO-PROPS" => vector::rho_properties(theorem_id, trials, seed),
        "JAMES" => vector::james(theorem_id, trials, seed),
        "BOP-NORM" => operator::norm_accuracy(theorem_id, trials, seed),
        "BOP-ORTH" => operator::orthogonality(theorem_id, trials, seed),
        "BOP-COR" => operator::corollary(theorem_id, trials, seed),
        "BOP-SMOOTH-NA" => operator::smooth_attainment(theorem_id, trials, seed),
        "BOP-SMOOTH" => operator::smoothness(theorem_id, trials, seed),
        "BOP-APPROX" => operator::approximate(theorem_id, trials, seed),
        "BOP-SEQ" => operator::norming(theorem_id, trials, seed),
        other => input(format!("unknown theorem id {other:?}; see list-theorems")),
    }
}

/// Runs every registered suite at its default trial count, or at `trials`
/// when given.
pub fn verify_all(trials: Option<usize>, seed: u64) -> Result<Summary> {
    let reports = THEOREMS
        .iter()
        .map(|t| verify_theorem(t.id, trials.unwrap_or_else(|| t.default_trials()), seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(Summary::new(reports))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orthogonality::{is_birkhoff, DEFAULT_TOL};
    use crate::orthogonality::Witness;
    use approx::assert_abs_diff_eq;

    #[test]
    fn grid_min_examples() {
        let (_, v) = grid_min_lambda(|t: f64| (1.0 + t).abs() + (1.0 - t).abs(), (-3.0, 3.0), 100_000);
        assert_abs_diff_eq!(v, 2.0, epsilon = 1e-12);
        let (t, v) = grid_min_lambda(|t: f64| (t - 2.0).powi(2), (-10.0, 10.0), 100_000);
        assert_abs_diff_eq!(t, 2.0, epsilon = 1e-6);
        assert!(v < 1e-12);
    }

    #[test]
    fn grid_min_matches_birkhoff_witness() {
        let s = SpaceSpec::l2(2);
        let (x, y) = ([1.0, 0.0], [1.0, 1.0]);
        let v = is_birkhoff(&s, &x, &y, DEFAULT_TOL).unwrap();
        let Some(Witness::Minimizer { lambda, value }) = v.witness else { panic!() };
        let (t, m) = grid_min_lambda(
            |l| s.norm_of(&[x[0] + l * y[0], x[1] + l * y[1]]),
            (-3.0, 3.0),
            100_000,
        );
        assert_abs_diff_eq!(t, lambda, epsilon = 1e-6);
        assert_abs_diff_eq!(m, value, epsilon = 1e-9);
    }

    #[test]
    fn mesh_examples() {
        let m = sphere_mesh(&SpaceSpec::l2(2), 4).unwrap();
        let want = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
        for (p, w) in m.iter().zip(want) {
            assert_abs_diff_eq!(p.coords[0], w[0], epsilon = 1e-15);
            assert_abs_diff_eq!(p.coords[1], w[1], epsilon = 1e-15);
        }
        let m = sphere_mesh(&SpaceSpec::linf(2), 721).unwrap();
        assert!(m
            .iter()
            .any(|p| (p.coords[0] - 1.0).abs() < 1e-2 && (p.coords[1] - 1.0).abs() < 1e-2));
        let m = sphere_mesh(&SpaceSpec::l1(3), 64).unwrap();
        assert!(m.iter().all(|p| (p.norm() - 1.0).abs() <= 1e-12));
        assert!(sphere_mesh(&SpaceSpec::l2(4), 8).is_err());
    }

    #[test]
    fn registry_is_exhaustive() {
        let required = [
            "T2.1", "T2.2", "TLP", "TLINF", "TL1P", "TL1M", "TSB", "CSUM1", "CLS", "CRS",
            "L5416", "TBSTAR", "BOP-ORTH", "BOP-COR", "BOP-SMOOTH-NA", "BOP-SMOOTH",
            "BOP-APPROX", "BOP-SEQ",
        ];
        for id in required {
            assert!(theorem_info(id).is_some(), "{id} missing");
        }
        for t in THEOREMS {
            // Every registered id dispatches to a suite.
            let r = verify_theorem(t.id, 1, 0).unwrap();
            assert!(r.trials >= 1);
        }
        assert!(verify_theorem("T9.9", 1, 0).is_err());
    }

    #[test]
    fn reports_are_reproducible() {
        let a = serde_json::to_string(&verify_theorem("TSB", 200, 9).unwrap()).unwrap();
        let b = serde_json::to_string(&verify_theorem("TSB", 200, 9).unwrap()).unwrap();
        assert_eq!(a, b);
        assert!(!a.contains("wall_time"));
    }

    #[test]
    fn outcome_folding() {
        let f = Outcome::fail(1.0, "x", serde_json::Value::Null);
        assert!(matches!(Outcome::Pass(0.1).and(Outcome::Skip), Outcome::Skip));
        assert!(matches!(Outcome::Skip.and(f), Outcome::Fail { .. }));
        assert!(matches!(Outcome::Pass(0.1).and(Outcome::Pass(0.3)), Outcome::Pass(r) if r == 0.3));
    }
}
