//! Vector-level suites. Each trial draws a unit `x` and a direction `y`
//! from its own stream; about a third of the directions are projected onto
//! the kernel of a supporting functional at `x`, which puts many instances
//! exactly on the orthogonality boundary.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::{FamilyRun, Outcome, TheoremReport, BOUNDARY_MARGIN};
use crate::derivatives::{rho, rho_closed, rho_numeric, rho_sign_conditions};
use crate::error::Result;
use crate::orthogonality::{
    b_star_definitional, bracket, check_james, dot, in_negative_part, in_positive_part,
    is_b_star, is_birkhoff, is_strong_birkhoff, min_increment, strong_definitional,
    support_set, SupportShape, DEFAULT_TOL,
};
use crate::spaces::{random_unit, seeded_rng, SpaceSpec};

/// A minimum counts as "non-negative up to rounding" above this.
const STRICT_FLOOR: f64 = 1e-14;
const PROBES: usize = 100;
/// `⊥_{B*}` instances with `1e-9 < |ρ₋| ≤ 1e-5` fall between the
/// derivative tolerance and the resolution of the `t`-grid.
const BSTAR_GRID_FLOOR: f64 = 1e-5;
const BSTAR_INNER_TOL: f64 = 1e-12;
const LIPSCHITZ_STEP: f64 = 1e-3;

fn names(spaces: &[SpaceSpec]) -> Vec<String> {
    spaces.iter().map(ToString::to_string).collect()
}

fn inputs(space: &SpaceSpec, x: &[f64], y: &[f64]) -> serde_json::Value {
    json!({ "space": space, "x": x, "y": y })
}

fn normalized(space: &SpaceSpec, v: Vec<f64>) -> Option<Vec<f64>> {
    let n = space.norm_of(&v);
    (n > 1e-9).then(|| v.into_iter().map(|c| c / n).collect())
}

/// A supporting functional at unit `x`: for ℓp leaves a random extreme
/// point of `J(x)`, otherwise the default one.
fn some_support<R: Rng>(space: &SpaceSpec, x: &[f64], rng: &mut R) -> Vec<f64> {
    if let (SpaceSpec::Lp { .. }, Ok(set)) = (space, support_set(space, x)) {
        let k = rng.random_range(0..set.extreme_points.len());
        return set.extreme_points[k].clone();
    }
    space.supporting_functional(x)
}

/// A unit direction for trials at `x`; with probability 0.3 it lies in
/// the kernel of a supporting functional, so that `x ⊥_B y`.
fn direction<R: Rng>(space: &SpaceSpec, x: &[f64], rng: &mut R) -> Vec<f64> {
    let w = random_unit(space, rng);
    if !rng.random_bool(0.3) {
        return w;
    }
    let f = some_support(space, x, rng);
    let c = dot(&f, &w) / dot(&f, x);
    let y = w.iter().zip(x).map(|(a, b)| a - c * b).collect();
    normalized(space, y).unwrap_or(w)
}

/// `Some(min ≥ −tol)` when a strict floor agrees, `None` when the verdict
/// depends on the tolerance.
fn settled(min: f64, tol: f64) -> Option<bool> {
    let loose = min >= -tol;
    (loose == (min >= -STRICT_FLOOR)).then_some(loose)
}

/// `y ∈ x⁺` (`positive`) or `y ∈ x⁻` by minimizing on one half-line.
fn half_line(space: &SpaceSpec, x: &[f64], y: &[f64], positive: bool) -> Option<bool> {
    let ny = space.norm_of(y);
    if ny == 0.0 {
        return Some(true);
    }
    let l = bracket(space.norm_of(x), ny);
    let m = if positive {
        min_increment(space, x, y, 0.0, l)
    } else {
        min_increment(space, x, y, -l, 0.0)
    };
    settled(m.value, BOUNDARY_MARGIN)
}

fn near_zero(v: f64) -> bool {
    v.abs() <= BOUNDARY_MARGIN
}

fn draw(space: &SpaceSpec, seed: u64, i: usize) -> (ChaCha8Rng, Vec<f64>, Vec<f64>) {
    let mut rng = seeded_rng(seed, i as u64);
    let x = random_unit(space, &mut rng);
    let y = direction(space, &x, &mut rng);
    (rng, x, y)
}

fn standard_families() -> Vec<SpaceSpec> {
    vec![
        SpaceSpec::l1(3),
        SpaceSpec::l2(3),
        SpaceSpec::lp(3.0, 3).expect("valid exponent"),
        SpaceSpec::linf(3),
        SpaceSpec::sum_l1(SpaceSpec::l1(2), SpaceSpec::linf(2)),
    ]
}

fn lp_families() -> Vec<SpaceSpec> {
    vec![
        SpaceSpec::l1(3),
        SpaceSpec::l2(3),
        SpaceSpec::lp(3.0, 3).expect("valid exponent"),
        SpaceSpec::linf(3),
    ]
}

fn run_over<F>(id: &str, trials: usize, seed: u64, spaces: &[SpaceSpec], f: F) -> Result<TheoremReport>
where
    F: Fn(&SpaceSpec, usize) -> Result<Outcome> + Sync,
{
    FamilyRun {
        id,
        seed,
        trials,
        families: names(spaces),
    }
    .run(|fam, i| f(&spaces[fam], i))
}

/// Sign of `ρ₊` (resp. `ρ₋`) against membership in `x⁺` (resp. `x⁻`) read
/// from the norm along the half-line.
pub(super) fn parts(id: &str, trials: usize, seed: u64, positive: bool) -> Result<TheoremReport> {
    run_over(id, trials, seed, &standard_families(), |space, i| {
        let (_, x, y) = draw(space, seed, i);
        let r = rho(space, &x, &y)?;
        if near_zero(if positive { r.rho_plus } else { r.rho_minus }) {
            return Ok(Outcome::Skip);
        }
        let Some(def) = half_line(space, &x, &y, positive) else {
            return Ok(Outcome::Skip);
        };
        let claim = if positive {
            in_positive_part(space, &x, &y)?
        } else {
            in_negative_part(space, &x, &y)?
        };
        Ok(Outcome::agree(
            claim,
            def,
            || format!("derivative test {claim}, half-line minimum {def}"),
            || inputs(space, &x, &y),
        ))
    })
}

/// Coordinate conditions against the signs of the closed-form `ρ±`.
pub(super) fn sign_conditions(id: &str, trials: usize, seed: u64) -> Result<TheoremReport> {
    let (spaces, plus, minus) = match id {
        "TLP" => (
            vec![
                SpaceSpec::lp(3.0, 4).expect("valid exponent"),
                SpaceSpec::lp(1.5, 3).expect("valid exponent"),
            ],
            true,
            true,
        ),
        "TLINF" => (vec![SpaceSpec::linf(4), SpaceSpec::linf(2)], true, true),
        "TL1P" => (vec![SpaceSpec::l1(4), SpaceSpec::l1(3)], true, false),
        _ => (vec![SpaceSpec::l1(4), SpaceSpec::l1(3)], false, true),
    };
    run_over(id, trials, seed, &spaces, |space, i| {
        let (_, x, y) = draw(space, seed, i);
        let r = rho_closed(space, &x, &y)?;
        let c = rho_sign_conditions(space, &x, &y)?;
        let mut out = Outcome::Pass(0.0);
        if plus {
            out = out.and(if near_zero(r.rho_plus) {
                Outcome::Skip
            } else {
                Outcome::agree(
                    c.plus_nonneg,
                    r.rho_plus >= -1e-10,
                    || format!("plus condition {} but rho_plus = {}", c.plus_nonneg, r.rho_plus),
                    || inputs(space, &x, &y),
                )
            });
        }
        if minus {
            out = out.and(if near_zero(r.rho_minus) {
                Outcome::Skip
            } else {
                Outcome::agree(
                    c.minus_nonpos,
                    r.rho_minus <= 1e-10,
                    || format!("minus condition {} but rho_minus = {}", c.minus_nonpos, r.rho_minus),
                    || inputs(space, &x, &y),
                )
            });
        }
        Ok(out)
    })
}

fn strong_check(space: &SpaceSpec, x: &[f64], y: &[f64]) -> Result<Outcome> {
    let claim = is_strong_birkhoff(space, x, y)?.holds;
    let def = strong_definitional(space, x, y)?;
    let mut out = Outcome::agree(
        claim,
        def,
        || format!("strong verdict {claim}, sampled definition {def}"),
        || inputs(space, x, y),
    );
    if claim && !is_birkhoff(space, x, y, DEFAULT_TOL)?.holds {
        out = out.and(Outcome::fail(0.0, "strong orthogonality without plain orthogonality", inputs(space, x, y)));
    }
    Ok(out)
}

/// Strong orthogonality in ℓ1 and ℓ∞ against the sampled definition.
pub(super) fn strong(id: &str, trials: usize, seed: u64) -> Result<TheoremReport> {
    let spaces = vec![
        SpaceSpec::l1(3),
        SpaceSpec::linf(3),
        SpaceSpec::l1(2),
        SpaceSpec::linf(2),
    ];
    run_over(id, trials, seed, &spaces, |space, i| {
        let (_, x, y) = draw(space, seed, i);
        let r = rho(space, &x, &y)?;
        if near_zero(r.rho_plus) || near_zero(r.rho_minus) {
            return Ok(Outcome::Skip);
        }
        strong_check(space, &x, &y)
    })
}

/// Strong orthogonality in `ℓ1² ⊕₁ ℓ∞²` from the summed child derivatives.
pub(super) fn strong_sum(id: &str, trials: usize, seed: u64) -> Result<TheoremReport> {
    let (left, right) = (SpaceSpec::l1(2), SpaceSpec::linf(2));
    let spaces = vec![SpaceSpec::sum_l1(left.clone(), right.clone())];
    run_over(id, trials, seed, &spaces, |space, i| {
        let (_, x, y) = draw(space, seed, i);
        let a = rho(&left, &x[..2], &y[..2])?;
        let b = rho(&right, &x[2..], &y[2..])?;
        let (plus, minus) = (a.rho_plus + b.rho_plus, a.rho_minus + b.rho_minus);
        if near_zero(plus) || near_zero(minus) {
            return Ok(Outcome::Skip);
        }
        let corollary = plus > 0.0 && minus < 0.0;
        let claim = is_strong_birkhoff(space, &x, &y)?.holds;
        Ok(Outcome::agree(
            corollary,
            claim,
            || format!("summed derivatives give {corollary}, strong verdict {claim}"),
            || inputs(space, &x, &y),
        )
        .and(strong_check(space, &x, &y)?))
    })
}

/// Per-direction form of the symmetric-point characterizations: the
/// implication through `ρ₊` must match the implication through part
/// membership, and clause (b) at `y` must match clause (c) at `−y`.
pub(super) fn symmetric(id: &str, trials: usize, seed: u64, left: bool) -> Result<TheoremReport> {
    let spaces = vec![
        SpaceSpec::l1(2),
        SpaceSpec::linf(2),
        SpaceSpec::l2(2),
        SpaceSpec::lp(3.0, 2).expect("valid exponent"),
        SpaceSpec::l1(3),
        SpaceSpec::linf(3),
    ];
    run_over(id, trials, seed, &spaces, |space, i| {
        let (_, x, y) = draw(space, seed, i);
        let xy = rho(space, &x, &y)?;
        let yx = rho(space, &y, &x)?;
        if near_zero(xy.rho_plus) || near_zero(yx.rho_plus) {
            return Ok(Outcome::Skip);
        }
        let (Some(y_in_x), Some(x_in_y)) = (
            half_line(space, &x, &y, true),
            half_line(space, &y, &x, true),
        ) else {
            return Ok(Outcome::Skip);
        };
        let (by_rho, by_parts) = if left {
            (xy.rho_plus < 0.0 || yx.rho_plus >= 0.0, !y_in_x || x_in_y)
        } else {
            (yx.rho_plus < 0.0 || xy.rho_plus >= 0.0, !x_in_y || y_in_x)
        };
        let neg_y: Vec<f64> = y.iter().map(|c| -c).collect();
        let xn = rho(space, &x, &neg_y)?;
        let nx = rho(space, &neg_y, &x)?;
        let clause_c = if left {
            xn.rho_minus > 0.0 || nx.rho_minus <= 0.0
        } else {
            nx.rho_minus > 0.0 || xn.rho_minus <= 0.0
        };
        Ok(Outcome::agree(
            by_rho,
            by_parts,
            || format!("implication via rho {by_rho}, via parts {by_parts}"),
            || inputs(space, &x, &y),
        )
        .and(Outcome::agree(
            by_rho,
            clause_c,
            || format!("clause (b) at y {by_rho}, clause (c) at -y {clause_c}"),
            || inputs(space, &x, &y),
        )))
    })
}

/// `ρ₋(x, y) ≤ f(y) ≤ ρ₊(x, y)` for every extreme supporting functional.
pub(super) fn sandwich(id: &str, trials: usize, seed: u64) -> Result<TheoremReport> {
    run_over(id, trials, seed, &lp_families(), |space, i| {
        let mut rng = seeded_rng(seed, i as u64);
        let x = random_unit(space, &mut rng);
        let set = support_set(space, &x)?;
        let mut worst = 0.0f64;
        for f in &set.extreme_points {
            worst = worst.max((dot(f, &x) - 1.0).abs());
            worst = worst.max((space.dual_norm_of(f) - 1.0).abs());
        }
        for _ in 0..PROBES {
            let y = direction(space, &x, &mut rng);
            let r = rho(space, &x, &y)?;
            for f in &set.extreme_points {
                let v = dot(f, &y);
                worst = worst.max(r.rho_minus - v).max(v - r.rho_plus);
            }
        }
        Ok(if worst > DEFAULT_TOL {
            Outcome::fail(worst, "supporting functional outside [rho_minus, rho_plus]", json!({ "space": space, "x": x }))
        } else {
            Outcome::Pass(worst)
        })
    })
}

/// A supporting functional at `x` that is an extreme point or a random
/// convex combination of them.
fn mixed_support(space: &SpaceSpec, x: &[f64], rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let set = support_set(space, x)?;
    let pts = &set.extreme_points;
    if pts.len() == 1 || rng.random_bool(0.5) {
        return Ok(pts[rng.random_range(0..pts.len())].clone());
    }
    Ok(match &set.shape {
        SupportShape::Box { lower, upper } => lower
            .iter()
            .zip(upper)
            .map(|(l, u)| if l == u { *l } else { rng.random_range(-1.0..1.0) })
            .collect(),
        _ => {
            let w: Vec<f64> = pts.iter().map(|_| rng.random::<f64>()).collect();
            let total: f64 = w.iter().sum();
            (0..x.len())
                .map(|k| pts.iter().zip(&w).map(|(f, wi)| f[k] * wi).sum::<f64>() / total)
                .collect()
        }
    })
}

fn b_star_clause(space: &SpaceSpec, x: &[f64], y: &[f64], derivative: f64) -> Result<Outcome> {
    let d = derivative.abs();
    if d > DEFAULT_TOL && d <= BSTAR_GRID_FLOOR {
        return Ok(Outcome::Skip);
    }
    let claim = is_b_star(space, x, y)?.holds;
    let def = b_star_definitional(space, x, y, BSTAR_INNER_TOL)?.holds;
    Ok(Outcome::agree(
        claim,
        def,
        || format!("derivative test {claim}, t-grid {def} (derivative {derivative})"),
        || inputs(space, x, y),
    ))
}

/// `⊥_{B*}` through `ρ₋ = 0` (and `(−x) ⊥_{B*} y` through `ρ₊ = 0`) against
/// the definition on orthogonal unit pairs in the plane.
pub(super) fn b_star(id: &str, trials: usize, seed: u64) -> Result<TheoremReport> {
    let spaces = vec![SpaceSpec::l1(2), SpaceSpec::linf(2), SpaceSpec::l2(2)];
    run_over(id, trials, seed, &spaces, |space, i| {
        let mut rng = seeded_rng(seed, i as u64);
        let x = random_unit(space, &mut rng);
        let f = mixed_support(space, &x, &mut rng)?;
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let Some(y) = normalized(space, vec![-sign * f[1], sign * f[0]]) else {
            return Ok(Outcome::Skip);
        };
        let r = rho(space, &x, &y)?;
        let neg_x: Vec<f64> = x.iter().map(|c| -c).collect();
        Ok(b_star_clause(space, &x, &y, r.rho_minus)?
            .and(b_star_clause(space, &neg_x, &y, r.rho_plus)?))
    })
}

/// Closed forms against the difference quotient.
pub(super) fn closed_fidelity(id: &str, trials: usize, seed: u64) -> Result<TheoremReport> {
    let spaces = vec![
        SpaceSpec::l1(4),
        SpaceSpec::l2(4),
        SpaceSpec::lp(3.0, 4).expect("valid exponent"),
        SpaceSpec::linf(4),
        SpaceSpec::sum_l1(SpaceSpec::l1(2), SpaceSpec::linf(2)),
    ];
    run_over(id, trials, seed, &spaces, |space, i| {
        let (_, x, y) = draw(space, seed, i);
        let c = rho_closed(space, &x, &y)?;
        let n = rho_numeric(space, &x, &y)?;
        let err = (c.rho_plus - n.rho_plus).abs().max((c.rho_minus - n.rho_minus).abs());
        Ok(if err > BOUNDARY_MARGIN {
            Outcome::fail(err, format!("closed {:?} vs numeric {:?}", (c.rho_plus, c.rho_minus), (n.rho_plus, n.rho_minus)), inputs(space, &x, &y))
        } else {
            Outcome::Pass(err)
        })
    })
}

/// Ordering and bounds, positive/negative scaling in `x`, equality at smooth
/// points and the 1-Lipschitz bound in `y`.
pub(super) fn rho_properties(id: &str, trials: usize, seed: u64) -> Result<TheoremReport> {
    let mut spaces = standard_families();
    spaces.push(SpaceSpec::product_max(SpaceSpec::l1(2), SpaceSpec::l2(2)));
    run_over(id, trials, seed, &spaces, |space, i| {
        let (mut rng, x, y) = draw(space, seed, i);
        let r = rho(space, &x, &y)?;
        let ny = space.norm_of(&y);
        let mut worst = (r.rho_minus - r.rho_plus)
            .max(r.rho_plus.abs() - ny)
            .max(r.rho_minus.abs() - ny)
            .max(0.0);
        // Positively homogeneous in y, sign-flipping ρ₊ ↔ ρ₋ for α < 0. In x
        // the quotient is invariant under α > 0, so only the flip survives.
        for alpha in [2.0, 0.5, -1.0, -3.0] {
            let (p, m) = if alpha > 0.0 {
                (alpha * r.rho_plus, alpha * r.rho_minus)
            } else {
                (alpha * r.rho_minus, alpha * r.rho_plus)
            };
            let ay: Vec<f64> = y.iter().map(|c| alpha * c).collect();
            let s = rho(space, &x, &ay)?;
            worst = worst.max((s.rho_plus - p).abs()).max((s.rho_minus - m).abs());

            let (p, m) = if alpha > 0.0 { (r.rho_plus, r.rho_minus) } else { (-r.rho_minus, -r.rho_plus) };
            let ax: Vec<f64> = x.iter().map(|c| alpha * c).collect();
            let s = rho(space, &ax, &y)?;
            worst = worst.max((s.rho_plus - p).abs()).max((s.rho_minus - m).abs());
        }
        if matches!(space, SpaceSpec::Lp { .. }) && !space.is_polyhedral() {
            worst = worst.max((r.rho_plus - r.rho_minus).abs());
        }
        let bump = random_unit(space, &mut rng);
        let y2: Vec<f64> = y.iter().zip(&bump).map(|(a, b)| a + LIPSCHITZ_STEP * b).collect();
        let d = space.norm_of(&y.iter().zip(&y2).map(|(a, b)| a - b).collect::<Vec<_>>());
        let s = rho(space, &x, &y2)?;
        worst = worst
            .max((s.rho_plus - r.rho_plus).abs() - d)
            .max((s.rho_minus - r.rho_minus).abs() - d);
        Ok(if worst > DEFAULT_TOL {
            Outcome::fail(worst, "derivative law violated", inputs(space, &x, &y))
        } else {
            Outcome::Pass(worst.max(0.0))
        })
    })
}

/// James' criterion against the minimization test for `⊥_B`.
pub(super) fn james(id: &str, trials: usize, seed: u64) -> Result<TheoremReport> {
    run_over(id, trials, seed, &lp_families(), |space, i| {
        let (_, x, y) = draw(space, seed, i);
        let r = rho(space, &x, &y)?;
        if near_zero(r.rho_plus) || near_zero(r.rho_minus) {
            return Ok(Outcome::Skip);
        }
        let l = bracket(space.norm_of(&x), space.norm_of(&y));
        let Some(def) = settled(min_increment(space, &x, &y, -l, l).value, DEFAULT_TOL) else {
            return Ok(Outcome::Skip);
        };
        let claim = check_james(space, &x, &y)?;
        Ok(Outcome::agree(
            claim,
            def,
            || format!("James {claim}, minimization {def}"),
            || inputs(space, &x, &y),
        ))
    })
}
