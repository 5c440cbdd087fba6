//! Operator-level suites on 2×2×2 tensors. The space triples cycle with the
//! trial index; the orthogonality suites stay on triples where the inner
//! maximization is exact, so the minimization verdict is not polluted by a
//! local maximum.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::{FamilyRun, Outcome, TheoremReport};
use crate::bilinear::{
    attainment_set, is_operator_approx_birkhoff, is_operator_birkhoff, is_operator_smooth,
    norming_sequence_conditions, operator_norm, BilinearOp, NormMethod, NormOptions,
    OperatorOrthogonality, ATTAINMENT_TOL, CERTIFICATE_TOL, CLUSTER_RADIUS, DEFAULT_RESTARTS,
    OPERATOR_TOL,
};
use crate::error::Result;
use crate::orthogonality::{bracket, dot, min_increment, Witness};
use crate::spaces::{seeded_rng, SpaceSpec};

/// Disagreements this close to a verdict threshold are skipped.
const OPERATOR_MARGIN: f64 = 1e-6;
const GRID_GAP: f64 = 1e-3;
const RANK_ONE_TOL: f64 = 1e-6;
/// Step of the one-sided difference quotients of the operator norm.
const KINK_STEP: f64 = 1e-6;
const KINK_THRESHOLD: f64 = 1e-3;
/// Kinks in this band are neither clearly smooth nor clearly not.
const KINK_BAND: (f64, f64) = (1e-4, 1e-2);
const EPSILONS: [f64; 4] = [0.0, 0.1, 0.3, 0.7];

type Triple = (SpaceSpec, SpaceSpec, SpaceSpec);

fn triple(x: SpaceSpec, y: SpaceSpec, z: SpaceSpec) -> Triple {
    (x, y, z)
}

fn lp(p: f64) -> SpaceSpec {
    SpaceSpec::lp(p, 2).expect("valid exponent")
}

/// Triples on which every inner maximization is exact.
fn exact_triples() -> Vec<Triple> {
    let (l1, l2, li) = (SpaceSpec::l1(2), SpaceSpec::l2(2), SpaceSpec::linf(2));
    vec![
        triple(l2.clone(), l2.clone(), l2.clone()),
        triple(l1.clone(), l2.clone(), li.clone()),
        triple(li.clone(), l1.clone(), l1.clone()),
        triple(l2.clone(), li.clone(), li.clone()),
        triple(li.clone(), li.clone(), l2.clone()),
        triple(l1.clone(), l1, l2),
    ]
}

fn norm_triples() -> Vec<Triple> {
    let mut t = exact_triples();
    t.push(triple(lp(3.0), lp(3.0), lp(3.0)));
    t.push(triple(lp(1.5), SpaceSpec::l2(2), lp(4.0)));
    t
}

fn random_tensor(t: &Triple, rng: &mut ChaCha8Rng) -> BilinearOp {
    let len = t.0.dim() * t.1.dim() * t.2.dim();
    let c = (0..len).map(|_| rng.random_range(-1.0..=1.0)).collect();
    BilinearOp::from_flat(t.0.clone(), t.1.clone(), t.2.clone(), c).expect("valid shape")
}

fn gaussian(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.sample(rand_distr::StandardNormal)).collect()
}

fn options(seed: u64, i: usize) -> NormOptions {
    NormOptions {
        seed: seed.wrapping_mul(1_000_003).wrapping_add(i as u64),
        ..NormOptions::default()
    }
}

fn pair_inputs(t: &BilinearOp, a: &BilinearOp) -> serde_json::Value {
    json!({ "T": t, "A": a })
}

#[derive(Clone, Copy, Debug)]
enum Kind {
    Random,
    Projected,
    Vanishing,
}

/// `(T, A)` for trial `i`. `Projected` makes `T(x₀,y₀) ⊥_B A(x₀,y₀)` at the
/// best pair of `T`; `Vanishing` makes `A(x₀,y₀) = 0`.
fn orthogonality_instance(seed: u64, i: usize) -> Result<(BilinearOp, BilinearOp, Kind)> {
    let triples = exact_triples();
    let t3 = &triples[i % triples.len()];
    let kind = match (i / triples.len()) % 3 {
        0 => Kind::Random,
        1 => Kind::Projected,
        _ => Kind::Vanishing,
    };
    let mut rng = seeded_rng(seed, i as u64);
    let t = random_tensor(t3, &mut rng);
    let b = random_tensor(t3, &mut rng);
    let a = match kind {
        Kind::Random => b,
        Kind::Projected | Kind::Vanishing => {
            let best = operator_norm(&t, &options(seed, i))?;
            let (x0, y0) = (&best.pair.x, &best.pair.y);
            let bz = b.apply(x0, y0)?;
            if let Kind::Projected = kind {
                let z0 = t.apply(x0, y0)?;
                let f = t3.2.supporting_functional(&z0);
                b.combine(-dot(&f, &bz) / t3.2.norm_of(&z0), &t)?
            } else {
                let f = t3.0.supporting_functional(x0);
                let g = t3.1.supporting_functional(y0);
                let r = BilinearOp::rank_one(t3.0.clone(), t3.1.clone(), t3.2.clone(), &f, &g, &bz)?;
                b.combine(-1.0, &r)?
            }
        }
    };
    Ok((t, a, kind))
}

fn numeric_gap(v: &OperatorOrthogonality) -> f64 {
    match v.numeric.witness {
        Some(Witness::Minimizer { value, .. }) => value - v.norm,
        _ => 0.0,
    }
}

/// A failing verdict that misses its threshold by less than the margin.
fn narrowly_fails(slack: f64, tol: f64) -> bool {
    slack < -tol && slack >= -OPERATOR_MARGIN
}

fn operator_run(id: &str, trials: usize, seed: u64) -> FamilyRun<'_> {
    FamilyRun {
        id,
        seed,
        trials,
        families: vec!["2x2x2".into()],
    }
}

/// Alternating ascent against the dense grid on random tensors, and against
/// `‖f‖_* ‖g‖_* ‖z₀‖` on rank-one tensors.
pub(super) fn norm_accuracy(id: &str, trials: usize, seed: u64) -> Result<TheoremReport> {
    let triples = norm_triples();
    operator_run(id, trials, seed).run(|_, i| {
        let t3 = &triples[i % triples.len()];
        let mut rng = seeded_rng(seed, i as u64);
        let t = random_tensor(t3, &mut rng);
        let opts = options(seed, i);
        let alt = operator_norm(&t, &opts)?.value;
        let grid = operator_norm(&t, &NormOptions { method: NormMethod::Grid, ..opts })?.value;
        let gap = grid - alt;

        let (f, g, z0) = (gaussian(2, &mut rng), gaussian(2, &mut rng), gaussian(2, &mut rng));
        let r = BilinearOp::rank_one(t3.0.clone(), t3.1.clone(), t3.2.clone(), &f, &g, &z0)?;
        let exact = t3.0.dual_norm_of(&f) * t3.1.dual_norm_of(&g) * t3.2.norm_of(&z0);
        let err = (operator_norm(&r, &opts)?.value - exact).abs();

        let residual = gap.max(0.0).max(err);
        Ok(if gap > GRID_GAP || err > RANK_ONE_TOL {
            Outcome::fail(
                residual,
                format!("grid {grid} vs alternating {alt}; rank-one error {err}"),
                json!({ "T": t, "rank_one": r }),
            )
        } else {
            Outcome::Pass(residual)
        })
    })
}

fn orthogonality_outcome(t: &BilinearOp, a: &BilinearOp, v: &OperatorOrthogonality) -> Outcome {
    if v.numeric.holds == v.certificate.holds {
        return Outcome::Pass(0.0);
    }
    let c = &v.certificate;
    if narrowly_fails(numeric_gap(v), OPERATOR_TOL)
        || narrowly_fails(c.best_plus, CERTIFICATE_TOL)
        || narrowly_fails(-c.best_minus, CERTIFICATE_TOL)
    {
        return Outcome::Skip;
    }
    Outcome::fail(
        numeric_gap(v).abs(),
        format!(
            "minimization {} vs certificate {} (gap {}, rho+ {}, rho- {})",
            v.numeric.holds,
            c.holds,
            numeric_gap(v),
            c.best_plus,
            c.best_minus
        ),
        pair_inputs(t, a),
    )
}

/// Minimization verdict against the attainment-pair certificate.
pub(super) fn orthogonality(id: &str, trials: usize, seed: u64) -> Result<TheoremReport> {
    operator_run(id, trials, seed).run(|_, i| {
        let (t, a, _) = orthogonality_instance(seed, i)?;
        let v = is_operator_birkhoff(&t, &a, &options(seed, i), OPERATOR_TOL)?;
        Ok(orthogonality_outcome(&t, &a, &v))
    })
}

/// On a single attainment orbit, `T ⊥_B A` iff `T(x₀,y₀) ⊥_B A(x₀,y₀)`.
/// Instances with several orbits are outside the statement and skipped.
pub(super) fn corollary(id: &str, trials: usize, seed: u64) -> Result<TheoremReport> {
    operator_run(id, trials, seed).run(|_, i| {
        let (t, a, _) = orthogonality_instance(seed, i)?;
        let opts = options(seed, i);
        let set = attainment_set(&t, &opts, ATTAINMENT_TOL, CLUSTER_RADIUS)?;
        if set.count() != 1 {
            return Ok(Outcome::Skip);
        }
        let p = &set.representatives[0];
        let z = t.apply(&p.x, &p.y)?;
        let w = a.apply(&p.x, &p.y)?;
        let zs = t.z_space();
        let nw = zs.norm_of(&w);
        let pointwise_slack = if nw <= 1e-12 * zs.norm_of(&z) {
            0.0
        } else {
            let l = bracket(zs.norm_of(&z), nw);
            min_increment(zs, &z, &w, -l, l).value
        };
        let pointwise = pointwise_slack >= -OPERATOR_TOL;
        let v = is_operator_birkhoff(&t, &a, &opts, OPERATOR_TOL)?;
        if v.numeric.holds == pointwise {
            return Ok(Outcome::Pass(0.0));
        }
        if narrowly_fails(numeric_gap(&v), OPERATOR_TOL) || narrowly_fails(pointwise_slack, OPERATOR_TOL) {
            return Ok(Outcome::Skip);
        }
        Ok(Outcome::fail(
            pointwise_slack.abs(),
            format!("operator verdict {} vs pointwise {pointwise}", v.numeric.holds),
            pair_inputs(&t, &a),
        ))
    })
}

/// Random unit-determinant rotation of the plane.
fn rotation(rng: &mut ChaCha8Rng) -> [[f64; 2]; 2] {
    let (s, c) = rng.random_range(0.0..std::f64::consts::TAU).sin_cos();
    [[c, -s], [s, c]]
}

/// Smoothness fixtures and random tensors, cycling through: random exact
/// triple, rotated diagonal in ℓ2 (two orbits), rank-one into ℓ∞ with a tied
/// value, rank-one in ℓ2.
fn smoothness_instance(seed: u64, i: usize) -> Result<BilinearOp> {
    let mut rng = seeded_rng(seed, i as u64);
    let l2 = SpaceSpec::l2(2);
    Ok(match i % 4 {
        0 => {
            let triples = exact_triples();
            random_tensor(&triples[(i / 4) % triples.len()], &mut rng)
        }
        1 => {
            let (q, r, s) = (rotation(&mut rng), rotation(&mut rng), rotation(&mut rng));
            let scale = rng.random_range(0.5..2.0);
            let mut c = vec![0.0; 8];
            for k in 0..2 {
                for i2 in 0..2 {
                    for j in 0..2 {
                        c[(k * 2 + i2) * 2 + j] = scale
                            * (0..2).map(|d| q[k][d] * r[d][i2] * s[d][j]).sum::<f64>();
                    }
                }
            }
            BilinearOp::from_flat(l2.clone(), l2.clone(), l2, c)?
        }
        2 => {
            let z0 = [
                if rng.random_bool(0.5) { 1.0 } else { -1.0 },
                if rng.random_bool(0.5) { 1.0 } else { -1.0 },
            ];
            let (f, g) = (gaussian(2, &mut rng), gaussian(2, &mut rng));
            BilinearOp::rank_one(l2.clone(), l2, SpaceSpec::linf(2), &f, &g, &z0)?
        }
        _ => {
            let (f, g, z0) = (gaussian(2, &mut rng), gaussian(2, &mut rng), gaussian(2, &mut rng));
            BilinearOp::rank_one(l2.clone(), l2.clone(), l2, &f, &g, &z0)?
        }
    })
}

/// Largest jump `ρ₊ − ρ₋` of the operator norm at `T` along the coordinate
/// tensors, from one-sided difference quotients.
fn norm_kink(t: &BilinearOp, opts: &NormOptions) -> Result<f64> {
    let base = operator_norm(t, opts)?.value;
    let mut worst = 0.0f64;
    for e in 0..t.coeffs().len() {
        let mut c = vec![0.0; t.coeffs().len()];
        c[e] = 1.0;
        let dir = BilinearOp::from_flat(t.x_space().clone(), t.y_space().clone(), t.z_space().clone(), c)?;
        let up = operator_norm(&t.combine(KINK_STEP, &dir)?, opts)?.value;
        let down = operator_norm(&t.combine(-KINK_STEP, &dir)?, opts)?.value;
        worst = worst.max((up - base) / KINK_STEP - (base - down) / KINK_STEP);
    }
    Ok(worst)
}

/// `Some(smooth)` from the difference quotients, `None` inside the band.
fn smooth_by_quotients(t: &BilinearOp, opts: &NormOptions) -> Result<(Option<bool>, f64)> {
    let kink = norm_kink(t, opts)?;
    let settled = !(kink > KINK_BAND.0 && kink < KINK_BAND.1);
    Ok((settled.then_some(kink < KINK_THRESHOLD), kink))
}

/// A smooth operator attains its norm on a single orbit.
pub(super) fn smooth_attainment(id: &str, trials: usize, seed: u64) -> Result<TheoremReport> {
    operator_run(id, trials, seed).run(|_, i| {
        let t = smoothness_instance(seed, i)?;
        let opts = options(seed, i);
        let (Some(smooth), kink) = smooth_by_quotients(&t, &opts)? else {
            return Ok(Outcome::Skip);
        };
        if !smooth {
            return Ok(Outcome::Pass(0.0));
        }
        let set = attainment_set(&t, &opts, ATTAINMENT_TOL, CLUSTER_RADIUS)?;
        Ok(if set.count() == 1 {
            Outcome::Pass(0.0)
        } else {
            Outcome::fail(kink, format!("smooth (kink {kink}) but {} orbits", set.count()), json!({ "T": t }))
        })
    })
}

/// Single orbit plus smooth `T(x₀,y₀)` against the difference quotients.
pub(super) fn smoothness(id: &str, trials: usize, seed: u64) -> Result<TheoremReport> {
    operator_run(id, trials, seed).run(|_, i| {
        let t = smoothness_instance(seed, i)?;
        let opts = options(seed, i);
        let (Some(smooth), kink) = smooth_by_quotients(&t, &opts)? else {
            return Ok(Outcome::Skip);
        };
        let v = is_operator_smooth(&t, &opts)?;
        Ok(Outcome::agree(
            v.holds,
            smooth,
            || format!("characterization {} ({}), quotient kink {kink}", v.holds, v.diagnosis),
            || json!({ "T": t }),
        ))
    })
}

/// Approximate orthogonality: at `ε = 0` the verdict equals the plain one;
/// the pair certificate matches the minimization; verdicts grow with `ε`.
pub(super) fn approximate(id: &str, trials: usize, seed: u64) -> Result<TheoremReport> {
    operator_run(id, trials, seed).run(|_, i| {
        let (t, a, _) = orthogonality_instance(seed, i)?;
        let opts = options(seed, i);
        let plain = is_operator_birkhoff(&t, &a, &opts, OPERATOR_TOL)?;
        let mut out = Outcome::Pass(0.0);
        let mut previous: Option<(f64, bool)> = None;
        for eps in EPSILONS {
            let v = is_operator_approx_birkhoff(&t, &a, eps, &opts, OPERATOR_TOL)?;
            let scale = 2.0 * v.norm.max(f64::MIN_POSITIVE);
            let gap = match v.numeric.witness {
                Some(Witness::Minimizer { value, .. }) => value / scale,
                _ => 0.0,
            };
            if eps == 0.0 && v.numeric.holds != plain.numeric.holds {
                out = out.and(Outcome::fail(0.0, "eps = 0 differs from plain orthogonality", pair_inputs(&t, &a)));
            }
            let c = &v.certificate;
            if v.numeric.holds != c.holds {
                let near = narrowly_fails(gap, OPERATOR_TOL)
                    || narrowly_fails(c.plus_slack / scale, OPERATOR_TOL)
                    || narrowly_fails(c.minus_slack / scale, OPERATOR_TOL);
                out = out.and(if near {
                    Outcome::Skip
                } else {
                    Outcome::fail(
                        gap.abs(),
                        format!("eps {eps}: minimization {} vs certificate {}", v.numeric.holds, c.holds),
                        pair_inputs(&t, &a),
                    )
                });
            }
            if let Some((e0, held)) = previous {
                if held && !v.numeric.holds {
                    out = out.and(if narrowly_fails(gap, OPERATOR_TOL) {
                        Outcome::Skip
                    } else {
                        Outcome::fail(gap.abs(), format!("holds at eps {e0} but not at {eps}"), pair_inputs(&t, &a))
                    });
                }
            }
            previous = Some((eps, v.numeric.holds));
        }
        Ok(out)
    })
}

/// The norming-sequence clauses certify exactly the orthogonal pairs.
pub(super) fn norming(id: &str, trials: usize, seed: u64) -> Result<TheoremReport> {
    operator_run(id, trials, seed).run(|_, i| {
        let (t, a, _) = orthogonality_instance(seed, i)?;
        let r = norming_sequence_conditions(&t, &a, DEFAULT_RESTARTS, options(seed, i).seed)?;
        if r.consistent {
            return Ok(Outcome::Pass(0.0));
        }
        if narrowly_fails(r.numeric_gap, OPERATOR_TOL)
            || narrowly_fails(r.plus_slack, OPERATOR_TOL)
            || narrowly_fails(r.minus_slack, OPERATOR_TOL)
        {
            return Ok(Outcome::Skip);
        }
        Ok(Outcome::fail(
            r.numeric_gap.abs(),
            format!(
                "clauses (a) {} (b) {} vs minimization {}",
                r.clause_a, r.clause_b, r.operator_birkhoff
            ),
            pair_inputs(&t, &a),
        ))
    })
}
