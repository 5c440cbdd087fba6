//! Vector-level orthogonality relations and the geometry around them:
//! Birkhoff-James (`⊥_B`), strong (`⊥_SB`), approximate (`⊥_B^ε`), `⊥_{B*}`,
//! positive/negative parts, the `ρ`-relations, supporting functionals,
//! 2-D orthogonality cones and symmetric-point falsifiers.

use serde::{Deserialize, Serialize};

use crate::derivatives::{rho, RhoResult};
use crate::error::{domain, input, Error, Result};
use crate::minimize::{golden_section, Minimum};
use crate::spaces::{
    is_nonzero, max_set, random_unit, seeded_rng, sgn, Exponent, SpaceSpec,
};

pub const DEFAULT_TOL: f64 = 1e-9;
/// Slack on the sign tests `ρ₊ ≥ 0` and `ρ₋ ≤ 0`.
pub const PART_TOL: f64 = 1e-10;
const SEARCH_WIDTH: f64 = 1e-12;
const UNIT_TOL: f64 = 1e-9;
/// Points in the definitional `t`-grid of `⊥_{B*}`.
pub const BSTAR_GRID: usize = 512;
/// Magnitudes probed on each side by [`strong_definitional`].
const STRONG_PROBES: usize = 500;
const STRONG_MIN_STEP: f64 = 1e-6;
/// Cap on enumerated extreme points of an ℓ1 face.
pub const MAX_EXTREME_POINTS: usize = 1 << 10;
const FALSIFIER_MARGIN: f64 = 1e-8;
const PREMISE_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// Minimizing parameter and minimum of the relation's objective.
    Minimizer { lambda: f64, value: f64 },
    /// One-sided derivatives the verdict was read from.
    Derivatives { rho_plus: f64, rho_minus: f64 },
    /// A violating parameter (`t` for `⊥_{B*}`, `λ` for `⊥_SB`).
    Parameter { value: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrthoVerdict {
    pub relation: String,
    pub holds: bool,
    pub witness: Option<Witness>,
    pub tol: f64,
}

impl OrthoVerdict {
    fn new(relation: &str, holds: bool, witness: Option<Witness>, tol: f64) -> Self {
        OrthoVerdict {
            relation: relation.to_string(),
            holds,
            witness,
            tol,
        }
    }
}

fn derivatives_witness(r: &RhoResult) -> Option<Witness> {
    Some(Witness::Derivatives {
        rho_plus: r.rho_plus,
        rho_minus: r.rho_minus,
    })
}

fn check_pair(space: &SpaceSpec, x: &[f64], y: &[f64]) -> Result<()> {
    space.check(x)?;
    space.check(y)
}

/// Half-width of the search interval for `λ ↦ ‖x + λy‖`: beyond it
/// `|λ|‖y‖ > 2‖x‖`, so the norm already exceeds `‖x‖`.
pub fn bracket(norm_x: f64, norm_y: f64) -> f64 {
    2.0 * norm_x / norm_y + 1.0
}

/// Minimum of `λ ↦ ‖x + λy‖ − ‖x‖` over `[lo, hi]`.
pub fn min_increment(space: &SpaceSpec, x: &[f64], y: &[f64], lo: f64, hi: f64) -> Minimum {
    golden_section(|t| space.norm_increment(x, y, t), lo, hi, SEARCH_WIDTH)
}

/// `x ⊥_B y`: `‖x + λy‖ ≥ ‖x‖` for every real `λ`, decided by minimizing the
/// convex function `λ ↦ ‖x + λy‖` on `[−L, L]`.
pub fn is_birkhoff(space: &SpaceSpec, x: &[f64], y: &[f64], tol: f64) -> Result<OrthoVerdict> {
    check_pair(space, x, y)?;
    let (nx, ny) = (space.norm_of(x), space.norm_of(y));
    if ny == 0.0 {
        return Ok(OrthoVerdict::new("birkhoff", true, None, tol));
    }
    let l = bracket(nx, ny);
    let m = min_increment(space, x, y, -l, l);
    Ok(OrthoVerdict::new(
        "birkhoff",
        m.value >= -tol,
        Some(Witness::Minimizer {
            lambda: m.arg,
            value: nx + m.value,
        }),
        tol,
    ))
}

/// `y ∈ x⁺`, read from the sign of `ρ₊(x, y)`.
pub fn in_positive_part(space: &SpaceSpec, x: &[f64], y: &[f64]) -> Result<bool> {
    Ok(rho(space, x, y)?.rho_plus >= -PART_TOL)
}

/// `y ∈ x⁻`, read from the sign of `ρ₋(x, y)`.
pub fn in_negative_part(space: &SpaceSpec, x: &[f64], y: &[f64]) -> Result<bool> {
    Ok(rho(space, x, y)?.rho_minus <= PART_TOL)
}

/// `x ⊥_SB y`: `‖x + λy‖ > ‖x‖` for every `λ ≠ 0`.
///
/// Polyhedral spaces use `ρ₊ > 0 > ρ₋`; smooth `ℓp` uses `⊥_B`, which
/// coincides with `⊥_SB` under strict convexity. Other composites use the
/// derivative test when it is conclusive and [`strong_definitional`] otherwise.
pub fn is_strong_birkhoff(space: &SpaceSpec, x: &[f64], y: &[f64]) -> Result<OrthoVerdict> {
    check_pair(space, x, y)?;
    if space.norm_of(x) == 0.0 || space.norm_of(y) == 0.0 {
        return domain("strong orthogonality needs x != 0 and y != 0");
    }
    if let SpaceSpec::Lp {
        p: Exponent::Finite(_),
        ..
    } = space
    {
        let mut v = is_birkhoff(space, x, y, DEFAULT_TOL)?;
        v.relation = "strong".into();
        return Ok(v);
    }
    let r = rho(space, x, y)?;
    let strict = r.rho_plus > PART_TOL && r.rho_minus < -PART_TOL;
    let holds = if space.is_polyhedral() || strict {
        strict
    } else if r.rho_plus < -PART_TOL || r.rho_minus > PART_TOL {
        false
    } else {
        strong_definitional(space, x, y)?
    };
    Ok(OrthoVerdict::new("strong", holds, derivatives_witness(&r), PART_TOL))
}

/// Direct check of `‖x + λy‖ > ‖x‖` on 1000 values of `λ`, log-spaced in
/// magnitude over `[1e-6, L]` on both sides of zero.
pub fn strong_definitional(space: &SpaceSpec, x: &[f64], y: &[f64]) -> Result<bool> {
    check_pair(space, x, y)?;
    let ny = space.norm_of(y);
    if ny == 0.0 {
        return Ok(false);
    }
    let top = bracket(space.norm_of(x), ny);
    let span = (top / STRONG_MIN_STEP).ln();
    for k in 0..STRONG_PROBES {
        let mag = STRONG_MIN_STEP * (span * k as f64 / (STRONG_PROBES - 1) as f64).exp();
        for lambda in [mag, -mag] {
            if space.norm_increment(x, y, lambda) <= 0.0 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// `x ⊥_B^ε y`: `‖x + λy‖² ≥ ‖x‖² − 2ε‖x‖‖λy‖` for all `λ`.
pub fn is_approx_birkhoff(
    space: &SpaceSpec,
    x: &[f64],
    y: &[f64],
    eps: f64,
    tol: f64,
) -> Result<OrthoVerdict> {
    check_pair(space, x, y)?;
    if !(0.0..1.0).contains(&eps) {
        return input(format!("epsilon must lie in [0, 1), got {eps}"));
    }
    let (nx, ny) = (space.norm_of(x), space.norm_of(y));
    if ny == 0.0 {
        return Ok(OrthoVerdict::new("approx", true, None, tol));
    }
    let l = bracket(nx, ny);
    // ‖x+λy‖² − ‖x‖² = d(2‖x‖ + d) with d the norm increment.
    let g = |t: f64| {
        let d = space.norm_increment(x, y, t);
        d * (2.0 * nx + d) + 2.0 * eps * nx * ny * t.abs()
    };
    let m = golden_section(g, -l, l, SEARCH_WIDTH);
    Ok(OrthoVerdict::new(
        "approx",
        m.value >= -tol * nx.powi(2).max(1.0),
        Some(Witness::Minimizer {
            lambda: m.arg,
            value: m.value,
        }),
        tol,
    ))
}

fn check_unit(space: &SpaceSpec, v: &[f64], name: &str) -> Result<()> {
    let n = space.norm_of(v);
    if (n - 1.0).abs() > UNIT_TOL {
        return input(format!("{name} must be a unit vector, has norm {n}"));
    }
    Ok(())
}

/// `x ⊥_{B*} y` for unit `x, y`, via `ρ₋(x, y) = 0`.
pub fn is_b_star(space: &SpaceSpec, x: &[f64], y: &[f64]) -> Result<OrthoVerdict> {
    check_pair(space, x, y)?;
    check_unit(space, x, "x")?;
    check_unit(space, y, "y")?;
    let r = rho(space, x, y)?;
    Ok(OrthoVerdict::new(
        "bstar",
        r.rho_minus.abs() <= DEFAULT_TOL,
        derivatives_witness(&r),
        DEFAULT_TOL,
    ))
}

/// The `t`-grid of the definitional `⊥_{B*}` check: 256 uniform points of
/// `(0, 1)` and 256 points crowding `t = 1` geometrically down to `1 − 1e-5`.
pub fn b_star_grid() -> Vec<f64> {
    let half = BSTAR_GRID / 2;
    let mut t: Vec<f64> = (1..=half).map(|k| k as f64 / (half + 1) as f64).collect();
    t.extend((1..=half).map(|k| 1.0 - 10f64.powf(-5.0 * k as f64 / half as f64)));
    t
}

/// Definitional `⊥_{B*}`: `x ⊥_B y` and `x` is not orthogonal to any
/// `ty + (1−t)x` on the [`b_star_grid`]. The witness carries the first
/// offending `t`.
pub fn b_star_definitional(
    space: &SpaceSpec,
    x: &[f64],
    y: &[f64],
    tol: f64,
) -> Result<OrthoVerdict> {
    check_pair(space, x, y)?;
    check_unit(space, x, "x")?;
    check_unit(space, y, "y")?;
    if !is_birkhoff(space, x, y, tol)?.holds {
        return Ok(OrthoVerdict::new("bstar", false, None, tol));
    }
    let mut u = vec![0.0; x.len()];
    for t in b_star_grid() {
        for ((ui, xi), yi) in u.iter_mut().zip(x).zip(y) {
            *ui = t * yi + (1.0 - t) * xi;
        }
        if is_birkhoff(space, x, &u, tol)?.holds {
            return Ok(OrthoVerdict::new(
                "bstar",
                false,
                Some(Witness::Parameter { value: t }),
                tol,
            ));
        }
    }
    Ok(OrthoVerdict::new("bstar", true, None, tol))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RhoOrthogonality {
    pub perp_rho_plus: bool,
    pub perp_rho_minus: bool,
    pub perp_rho: bool,
}

/// `x ⊥_{ρ₊} y`, `x ⊥_{ρ₋} y` and `x ⊥_ρ y` (`ρ₊ + ρ₋ = 0`).
pub fn rho_orthogonal(space: &SpaceSpec, x: &[f64], y: &[f64]) -> Result<RhoOrthogonality> {
    check_pair(space, x, y)?;
    if space.norm_of(x) == 0.0 {
        return domain("rho-orthogonality needs x != 0");
    }
    let r = rho(space, x, y)?;
    Ok(RhoOrthogonality {
        perp_rho_plus: r.rho_plus.abs() <= DEFAULT_TOL,
        perp_rho_minus: r.rho_minus.abs() <= DEFAULT_TOL,
        perp_rho: (r.rho_plus + r.rho_minus).abs() <= DEFAULT_TOL,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SupportShape {
    /// Smooth point: `J(x)` is a single functional.
    Unique,
    /// ℓ1 face: coordinate `i` ranges over `[lower_i, upper_i]`.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// ℓ∞ face: convex hull of the extreme points.
    Hull,
}

/// `J(x)`, the norm-one functionals with `f(x) = ‖x‖`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportSet {
    pub shape: SupportShape,
    pub extreme_points: Vec<Vec<f64>>,
    /// Set when the box has more than [`MAX_EXTREME_POINTS`] vertices and
    /// only the first ones were listed.
    pub truncated: bool,
}

impl SupportSet {
    /// `(min, max)` of `f(y)` over `f ∈ J(x)`.
    pub fn range_on(&self, y: &[f64]) -> (f64, f64) {
        if let SupportShape::Box { lower, upper } = &self.shape {
            let (mut lo, mut hi) = (0.0, 0.0);
            for ((l, u), b) in lower.iter().zip(upper).zip(y) {
                let (a, c) = (l * b, u * b);
                lo += a.min(c);
                hi += a.max(c);
            }
            return (lo, hi);
        }
        self.extreme_points
            .iter()
            .map(|f| dot(f, y))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            })
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(s, t)| s * t).sum()
}

/// Supporting functionals at a unit `x` of an `ℓp^n`.
pub fn support_set(space: &SpaceSpec, x: &[f64]) -> Result<SupportSet> {
    space.check(x)?;
    let SpaceSpec::Lp { p, .. } = space else {
        return input(format!("support sets are described for lp spaces, got {space}"));
    };
    check_unit(space, x, "x")?;
    Ok(match p {
        Exponent::Finite(_) => SupportSet {
            shape: SupportShape::Unique,
            extreme_points: vec![space.supporting_functional(x)],
            truncated: false,
        },
        Exponent::Infinity => SupportSet {
            shape: SupportShape::Hull,
            extreme_points: max_set(x)
                .into_iter()
                .map(|i| {
                    let mut f = vec![0.0; x.len()];
                    f[i] = sgn(x[i]);
                    f
                })
                .collect(),
            truncated: false,
        },
        Exponent::One => {
            let mut lower = Vec::with_capacity(x.len());
            let mut upper = Vec::with_capacity(x.len());
            let mut free = Vec::new();
            for (i, &c) in x.iter().enumerate() {
                if is_nonzero(c, 1.0) {
                    lower.push(sgn(c));
                    upper.push(sgn(c));
                } else {
                    lower.push(-1.0);
                    upper.push(1.0);
                    free.push(i);
                }
            }
            let total = 1usize.checked_shl(free.len() as u32).unwrap_or(usize::MAX);
            let count = total.min(MAX_EXTREME_POINTS);
            let extreme_points = (0..count)
                .map(|mask| {
                    let mut f = lower.clone();
                    for (bit, &i) in free.iter().enumerate() {
                        if mask >> bit & 1 == 1 {
                            f[i] = 1.0;
                        }
                    }
                    f
                })
                .collect();
            SupportSet {
                shape: SupportShape::Box { lower, upper },
                extreme_points,
                truncated: total > count,
            }
        }
    })
}

/// James' criterion: some `f ∈ J(x)` has `f(y) = 0`.
///
/// On `ℓp` the attainable values `f(y)` are read off [`support_set`];
/// elsewhere they form the interval `[ρ₋(x, y), ρ₊(x, y)]`.
pub fn check_james(space: &SpaceSpec, x: &[f64], y: &[f64]) -> Result<bool> {
    check_pair(space, x, y)?;
    let nx = space.norm_of(x);
    if nx == 0.0 {
        return domain("James' criterion needs x != 0");
    }
    let (lo, hi) = if let SpaceSpec::Lp { .. } = space {
        let unit: Vec<f64> = x.iter().map(|c| c / nx).collect();
        support_set(space, &unit)?.range_on(y)
    } else {
        let r = rho(space, x, y)?;
        (r.rho_minus, r.rho_plus)
    };
    Ok(lo <= DEFAULT_TOL && hi >= -DEFAULT_TOL)
}

/// Arc of directions in `span{x, y}` orthogonal to `x` that contains `y`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cone2D {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Clockwise end of the arc.
    pub v1: Vec<f64>,
    /// Counterclockwise end of the arc.
    pub v2: Vec<f64>,
}

struct Plane<'a> {
    space: &'a SpaceSpec,
    x: &'a [f64],
    y: &'a [f64],
}

impl Plane<'_> {
    fn point(&self, theta: f64) -> Vec<f64> {
        let (s, c) = theta.sin_cos();
        let w: Vec<f64> = self.x.iter().zip(self.y).map(|(a, b)| c * a + s * b).collect();
        let n = self.space.norm_of(&w);
        w.into_iter().map(|v| v / n).collect()
    }

    fn member(&self, theta: f64) -> Result<bool> {
        let r = rho(self.space, self.x, &self.point(theta))?;
        Ok(r.rho_plus >= -PART_TOL && r.rho_minus <= PART_TOL)
    }

    /// Walks from `θ = π/2` in steps of `±step` while inside the set, then
    /// bisects the last crossing. Returns the boundary angle.
    fn edge(&self, step: f64, max_steps: usize) -> Result<f64> {
        let mut inside = std::f64::consts::FRAC_PI_2;
        for _ in 0..max_steps {
            let next = inside + step;
            if !self.member(next)? {
                return self.bisect(inside, next);
            }
            inside = next;
        }
        Err(Error::Internal(
            "orthogonal directions cover half the plane".into(),
        ))
    }

    fn bisect(&self, mut inside: f64, mut outside: f64) -> Result<f64> {
        for _ in 0..64 {
            let mid = 0.5 * (inside + outside);
            if mid == inside || mid == outside {
                break;
            }
            if self.member(mid)? {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        Ok(inside)
    }
}

/// Scans the unit circle of `span{x, y}` at `resolution` angles and returns
/// the boundary of the arc of `{w : x ⊥_B w}` through `y`. At a smooth `x`
/// the arc collapses and `v1 = v2 = y`.
pub fn orthogonality_cone(
    space: &SpaceSpec,
    x: &[f64],
    y: &[f64],
    resolution: usize,
) -> Result<Cone2D> {
    check_pair(space, x, y)?;
    check_unit(space, x, "x")?;
    check_unit(space, y, "y")?;
    if resolution < 4 {
        return input("cone resolution must be at least 4");
    }
    if independence_gap(x, y) < 1e-9 {
        return input("x and y must be linearly independent");
    }
    if !is_birkhoff(space, x, y, DEFAULT_TOL)?.holds {
        return Err(Error::Precondition("x is not Birkhoff-James orthogonal to y".into()));
    }
    let plane = Plane { space, x, y };
    if !plane.member(std::f64::consts::FRAC_PI_2)? {
        return Err(Error::Internal(
            "y passes the minimization test but fails the derivative test".into(),
        ));
    }
    let step = std::f64::consts::TAU / resolution as f64;
    let lo = plane.edge(-step, resolution / 2)?;
    let hi = plane.edge(step, resolution / 2)?;
    Ok(Cone2D {
        x: x.to_vec(),
        y: y.to_vec(),
        v1: plane.point(lo),
        v2: plane.point(hi),
    })
}

/// `1 − |cos∠(x, y)|` in the Euclidean sense.
fn independence_gap(x: &[f64], y: &[f64]) -> f64 {
    let (nx, ny) = (dot(x, x).sqrt(), dot(y, y).sqrt());
    if nx == 0.0 || ny == 0.0 {
        return 0.0;
    }
    1.0 - (dot(x, y) / (nx * ny)).abs()
}

/// A direction breaking a symmetric-point implication.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub y: Vec<f64>,
    /// Which implication failed, e.g. `"rho_plus(x,y) >= 0 => rho_plus(y,x) >= 0"`.
    pub clause: String,
    pub premise: f64,
    pub conclusion: f64,
    pub trial: usize,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    Left,
    Right,
}

/// Searches for `y` with `ρ₊(x, y) ≥ 0` but `ρ₊(y, x) < 0` (or the `ρ₋`
/// analogue). `None` means no counterexample in `trials` samples.
pub fn falsify_left_symmetric(
    space: &SpaceSpec,
    x: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Option<Counterexample>> {
    falsify(space, x, trials, seed, Symmetry::Left)
}

/// Searches for `y` with `ρ₊(y, x) ≥ 0` but `ρ₊(x, y) < 0` (or the `ρ₋`
/// analogue).
pub fn falsify_right_symmetric(
    space: &SpaceSpec,
    x: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Option<Counterexample>> {
    falsify(space, x, trials, seed, Symmetry::Right)
}

fn falsify(
    space: &SpaceSpec,
    x: &[f64],
    trials: usize,
    seed: u64,
    side: Symmetry,
) -> Result<Option<Counterexample>> {
    space.check(x)?;
    if space.norm_of(x) == 0.0 {
        return domain("symmetric-point search needs x != 0");
    }
    if trials == 0 {
        return input("trials must be at least 1");
    }
    let mut rng = seeded_rng(seed, 0);
    for trial in 0..trials {
        let y = random_unit(space, &mut rng);
        if let Some(c) = symmetry_violation(space, x, &y, side)? {
            return Ok(Some(Counterexample { trial, ..c }));
        }
    }
    Ok(None)
}

fn symmetry_violation(
    space: &SpaceSpec,
    x: &[f64],
    y: &[f64],
    side: Symmetry,
) -> Result<Option<Counterexample>> {
    let xy = rho(space, x, y)?;
    let yx = rho(space, y, x)?;
    let (from, to, names) = match side {
        Symmetry::Left => (&xy, &yx, ("(x,y)", "(y,x)")),
        Symmetry::Right => (&yx, &xy, ("(y,x)", "(x,y)")),
    };
    let found = |premise: f64, conclusion: f64, clause: String| Counterexample {
        y: y.to_vec(),
        clause,
        premise,
        conclusion,
        trial: 0,
    };
    if from.rho_plus >= -PREMISE_SLACK && to.rho_plus < -FALSIFIER_MARGIN {
        return Ok(Some(found(
            from.rho_plus,
            to.rho_plus,
            format!("rho_plus{} >= 0 => rho_plus{} >= 0", names.0, names.1),
        )));
    }
    if from.rho_minus <= PREMISE_SLACK && to.rho_minus > FALSIFIER_MARGIN {
        return Ok(Some(found(
            from.rho_minus,
            to.rho_minus,
            format!("rho_minus{} <= 0 => rho_minus{} <= 0", names.0, names.1),
        )));
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit(space: &SpaceSpec, v: &[f64]) -> Vec<f64> {
        let n = space.norm_of(v);
        v.iter().map(|c| c / n).collect()
    }

    #[test]
    fn birkhoff_examples() {
        for p in [1.0, 1.5, 2.0, 7.0] {
            let s = SpaceSpec::lp(p, 2).unwrap();
            assert!(is_birkhoff(&s, &[1.0, 0.0], &[0.0, 1.0], DEFAULT_TOL).unwrap().holds);
        }
        assert!(is_birkhoff(&SpaceSpec::linf(2), &[1.0, 0.0], &[0.0, 1.0], DEFAULT_TOL)
            .unwrap()
            .holds);

        let v = is_birkhoff(&SpaceSpec::l1(2), &[1.0, 1.0], &[1.0, -1.0], DEFAULT_TOL).unwrap();
        assert!(v.holds);
        let Some(Witness::Minimizer { value, .. }) = v.witness else { panic!() };
        assert_abs_diff_eq!(value, 2.0, epsilon = 1e-12);

        let v = is_birkhoff(&SpaceSpec::l2(2), &[1.0, 0.0], &[1.0, 1.0], DEFAULT_TOL).unwrap();
        assert!(!v.holds);
        let Some(Witness::Minimizer { lambda, value }) = v.witness else { panic!() };
        assert_abs_diff_eq!(lambda, -0.5, epsilon = 1e-6);
        assert!(value < 1.0 - DEFAULT_TOL);
    }

    #[test]
    fn zero_direction_is_orthogonal() {
        assert!(is_birkhoff(&SpaceSpec::l2(2), &[1.0, 0.0], &[0.0, 0.0], DEFAULT_TOL)
            .unwrap()
            .holds);
    }

    #[test]
    fn parts() {
        let inf = SpaceSpec::linf(2);
        assert!(in_positive_part(&inf, &[1.0, 1.0], &[1.0, -1.0]).unwrap());
        assert!(in_negative_part(&inf, &[1.0, 1.0], &[1.0, -1.0]).unwrap());
        let l2 = SpaceSpec::l2(2);
        assert!(in_positive_part(&l2, &[1.0, 0.0], &[1.0, 0.0]).unwrap());
        assert!(!in_negative_part(&l2, &[1.0, 0.0], &[1.0, 0.0]).unwrap());
        let l1 = SpaceSpec::l1(2);
        assert!(!in_positive_part(&l1, &[1.0, 0.0], &[-1.0, 0.0]).unwrap());
        assert!(in_negative_part(&l1, &[1.0, 0.0], &[-1.0, 0.0]).unwrap());
    }

    #[test]
    fn strong_examples() {
        let l1 = SpaceSpec::l1(2);
        assert!(is_strong_birkhoff(&l1, &[1.0, 0.0], &[0.0, 1.0]).unwrap().holds);
        assert!(!is_strong_birkhoff(&l1, &[1.0, 1.0], &[1.0, -1.0]).unwrap().holds);
        assert!(!is_strong_birkhoff(&SpaceSpec::linf(2), &[2.0, 1.0], &[0.0, 5.0])
            .unwrap()
            .holds);
        assert!(is_strong_birkhoff(&SpaceSpec::l2(2), &[1.0, 0.0], &[0.0, 1.0]).unwrap().holds);
        assert!(matches!(
            is_strong_birkhoff(&l1, &[0.0, 0.0], &[0.0, 1.0]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn strong_definitional_agrees_on_examples() {
        let l1 = SpaceSpec::l1(2);
        assert!(strong_definitional(&l1, &[1.0, 0.0], &[0.0, 1.0]).unwrap());
        assert!(!strong_definitional(&l1, &[1.0, 1.0], &[1.0, -1.0]).unwrap());
        // Mixed composite: the smooth half is strictly convex.
        let mixed = SpaceSpec::sum_l1(SpaceSpec::l2(2), SpaceSpec::l1(1));
        let v = is_strong_birkhoff(&mixed, &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).unwrap();
        assert!(v.holds);
    }

    #[test]
    fn approx_examples() {
        let l2 = SpaceSpec::l2(2);
        let e = 0.3f64;
        let y = [e, (1.0 - e * e).sqrt()];
        let v = is_approx_birkhoff(&l2, &[1.0, 0.0], &y, e, DEFAULT_TOL).unwrap();
        assert!(v.holds);
        let Some(Witness::Minimizer { value, .. }) = v.witness else { panic!() };
        assert_abs_diff_eq!(value, 0.0, epsilon = 1e-9);

        let x = [0.3, -1.2];
        assert!(!is_approx_birkhoff(&l2, &x, &x, 0.5, DEFAULT_TOL).unwrap().holds);
        assert!(matches!(
            is_approx_birkhoff(&l2, &x, &x, 1.0, DEFAULT_TOL),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn b_star_examples() {
        let inf = SpaceSpec::linf(2);
        assert!(is_b_star(&inf, &[1.0, 1.0], &[1.0, 0.0]).unwrap().holds);
        assert!(b_star_definitional(&inf, &[1.0, 1.0], &[1.0, 0.0], 1e-12).unwrap().holds);
        assert!(!is_b_star(&inf, &[1.0, 1.0], &[-1.0, 0.0]).unwrap().holds);
        assert!(is_b_star(&inf, &[-1.0, -1.0], &[-1.0, 0.0]).unwrap().holds);
        assert!(is_b_star(&SpaceSpec::l2(2), &[1.0, 0.0], &[0.0, 1.0]).unwrap().holds);
        assert!(matches!(
            is_b_star(&inf, &[2.0, 0.0], &[0.0, 1.0]),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn b_star_grid_shape() {
        let g = b_star_grid();
        assert_eq!(g.len(), BSTAR_GRID);
        assert!(g.iter().all(|t| *t > 0.0 && *t < 1.0));
        assert_abs_diff_eq!(g[BSTAR_GRID - 1], 1.0 - 1e-5, epsilon = 1e-15);
    }

    #[test]
    fn rho_orthogonality_examples() {
        let r = rho_orthogonal(&SpaceSpec::linf(2), &[1.0, 1.0], &[1.0, -1.0]).unwrap();
        assert_eq!((r.perp_rho_plus, r.perp_rho_minus, r.perp_rho), (false, false, true));
        let r = rho_orthogonal(&SpaceSpec::l2(2), &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!((r.perp_rho_plus, r.perp_rho_minus, r.perp_rho), (true, true, true));
        let r = rho_orthogonal(&SpaceSpec::l1(2), &[1.0, 0.0], &[1.0, 0.0]).unwrap();
        assert_eq!((r.perp_rho_plus, r.perp_rho_minus, r.perp_rho), (false, false, false));
    }

    #[test]
    fn support_set_examples() {
        let s = support_set(&SpaceSpec::l2(2), &[0.6, 0.8]).unwrap();
        assert_eq!(s.shape, SupportShape::Unique);
        assert_abs_diff_eq!(s.extreme_points[0][0], 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(s.extreme_points[0][1], 0.8, epsilon = 1e-12);

        let s = support_set(&SpaceSpec::linf(2), &[1.0, 1.0]).unwrap();
        assert_eq!(s.extreme_points, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);

        let s = support_set(&SpaceSpec::l1(3), &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(s.extreme_points.len(), 4);
        assert!(s.extreme_points.iter().all(|f| f[0] == 1.0));
        assert_eq!(s.range_on(&[0.5, 1.0, -2.0]), (-2.5, 3.5));
        assert!(!s.truncated);
    }

    #[test]
    fn support_set_truncates_large_faces() {
        let mut x = vec![0.0; 12];
        x[0] = 1.0;
        let s = support_set(&SpaceSpec::l1(12), &x).unwrap();
        assert!(s.truncated);
        assert_eq!(s.extreme_points.len(), MAX_EXTREME_POINTS);
        // The range stays exact through the box description.
        assert_eq!(s.range_on(&[0.0; 12].map(|_| 1.0)), (-10.0, 12.0));
    }

    #[test]
    fn james_examples() {
        assert!(check_james(&SpaceSpec::linf(2), &[1.0, 1.0], &[1.0, -1.0]).unwrap());
        assert!(!check_james(&SpaceSpec::l2(2), &[1.0, 0.0], &[1.0, 0.0]).unwrap());
        assert!(check_james(&SpaceSpec::l2(2), &[3.0, 0.0], &[0.0, 1.0]).unwrap());
    }

    #[test]
    fn cone_in_linf_corner() {
        let s = SpaceSpec::linf(2);
        let c = orthogonality_cone(&s, &[1.0, 1.0], &[1.0, -1.0], 4096).unwrap();
        let mut ends = [c.v1.clone(), c.v2.clone()];
        ends.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
        // The quadrant {w₁ ≥ 0 ≥ w₂} has edges along (0, −1) and (1, 0).
        assert_abs_diff_eq!(ends[0][0], 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(ends[0][1], -1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(ends[1][0], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(ends[1][1], 0.0, epsilon = 1e-9);
        for (a, b) in [(1.0, 0.0), (0.3, 0.7), (0.0, 1.0)] {
            let w: Vec<f64> = c.v1.iter().zip(&c.v2).map(|(p, q)| a * p + b * q).collect();
            assert!(is_birkhoff(&s, &c.x, &w, DEFAULT_TOL).unwrap().holds);
        }
    }

    #[test]
    fn cone_collapses_at_smooth_point() {
        let s = SpaceSpec::l2(2);
        let y = unit(&s, &[0.0, 1.0]);
        let c = orthogonality_cone(&s, &[1.0, 0.0], &y, 4096).unwrap();
        for v in [&c.v1, &c.v2] {
            assert_abs_diff_eq!(v[0], 0.0, epsilon = 1e-9);
            assert_abs_diff_eq!(v[1], 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn cone_in_l1() {
        // From x = e₁ the orthogonal directions are |w₁| ≤ |w₂|.
        let s = SpaceSpec::l1(2);
        let c = orthogonality_cone(&s, &[1.0, 0.0], &[0.0, 1.0], 4096).unwrap();
        for v in [&c.v1, &c.v2] {
            assert_abs_diff_eq!(v[0].abs(), 0.5, epsilon = 1e-9);
            assert_abs_diff_eq!(v[1], 0.5, epsilon = 1e-9);
        }
        assert!(c.v1[0] * c.v2[0] < 0.0);
    }

    #[test]
    fn cone_errors() {
        let s = SpaceSpec::l2(2);
        let y = unit(&s, &[1.0, 1.0]);
        assert!(matches!(
            orthogonality_cone(&s, &[1.0, 0.0], &y, 512),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            orthogonality_cone(&s, &[1.0, 0.0], &[1.0, 0.0], 512),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn euclidean_points_are_symmetric() {
        let s = SpaceSpec::l2(3);
        let x = unit(&s, &[1.0, -2.0, 0.5]);
        assert!(falsify_left_symmetric(&s, &x, 2000, 3).unwrap().is_none());
        assert!(falsify_right_symmetric(&s, &x, 2000, 3).unwrap().is_none());
    }

    #[test]
    fn linf_axis_is_not_right_symmetric() {
        let s = SpaceSpec::linf(2);
        let c = symmetry_violation(&s, &[1.0, 0.0], &[1.0, 1.0], Symmetry::Right)
            .unwrap()
            .unwrap();
        assert_eq!(c.conclusion, 1.0);
        assert!(falsify_right_symmetric(&s, &[1.0, 0.0], 1000, 1).unwrap().is_some());
    }

    #[test]
    fn l1_diagonal_left_falsifier_finds_nothing() {
        // Frozen outcome: the diagonal of the ℓ1 square survives 10⁴ probes.
        let s = SpaceSpec::l1(2);
        assert!(falsify_left_symmetric(&s, &[0.5, 0.5], 10_000, 42).unwrap().is_none());
    }
}
