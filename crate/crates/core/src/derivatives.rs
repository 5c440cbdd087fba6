//! One-sided Gâteaux derivatives of the norm,
//!
//! ```text
//! ρ₊(x, y) = lim_{λ→0⁺} (‖x + λy‖ − ‖x‖) / λ,
//! ρ₋(x, y) = lim_{λ→0⁻} (‖x + λy‖ − ‖x‖) / λ,
//! ```
//!
//! computed two ways: a shrinking-step quotient that works in every
//! [`SpaceSpec`], and closed forms for `ℓp^n` and ℓ1-direct sums of them.

use serde::{Deserialize, Serialize};

use crate::error::{domain, input, Error, Result};
use crate::spaces::{is_nonzero, max_set, sgn, sip_lp, Exponent, SpaceSpec};

/// Two successive quotients closer than this end the step schedule.
pub const SETTLE_TOL: f64 = 1e-10;
const FIRST_STEP: i32 = 4;
const LAST_STEP: i32 = 48;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoMethod {
    Closed,
    Numeric,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoResult {
    pub rho_plus: f64,
    pub rho_minus: f64,
    pub method: RhoMethod,
    /// `(λ, quotient)` pairs visited by the numeric schedule; negative `λ`
    /// belong to the left derivative.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub step_trace: Vec<(f64, f64)>,
}

fn check_pair(space: &SpaceSpec, x: &[f64], y: &[f64]) -> Result<()> {
    space.check(x)?;
    space.check(y)
}

/// Limit of the difference quotient along `λ_k = ±2^{−k}`, `k = 4..=48`,
/// stopping once two successive quotients agree to [`SETTLE_TOL`].
///
/// `ρ±(0, y) = ±‖y‖`.
pub fn rho_numeric(space: &SpaceSpec, x: &[f64], y: &[f64]) -> Result<RhoResult> {
    check_pair(space, x, y)?;
    if space.norm_of(x) == 0.0 {
        let ny = space.norm_of(y);
        return Ok(RhoResult {
            rho_plus: ny,
            rho_minus: -ny,
            method: RhoMethod::Numeric,
            step_trace: Vec::new(),
        });
    }
    let mut trace = Vec::new();
    let rho_plus = settle(space, x, y, 1.0, &mut trace)?;
    let rho_minus = settle(space, x, y, -1.0, &mut trace)?;
    Ok(RhoResult {
        rho_plus,
        rho_minus,
        method: RhoMethod::Numeric,
        step_trace: trace,
    })
}

fn settle(
    space: &SpaceSpec,
    x: &[f64],
    y: &[f64],
    side: f64,
    trace: &mut Vec<(f64, f64)>,
) -> Result<f64> {
    let mut prev: Option<f64> = None;
    for k in FIRST_STEP..=LAST_STEP {
        let lambda = side * 2f64.powi(-k);
        let q = space.norm_increment(x, y, lambda) / lambda;
        trace.push((lambda, q));
        if let Some(p) = prev {
            if (q - p).abs() < SETTLE_TOL {
                return Ok(q);
            }
        }
        prev = Some(q);
    }
    Err(Error::Numeric {
        message: format!(
            "difference quotient did not settle by step 2^-{LAST_STEP} (side {side:+})"
        ),
        trace: trace.clone(),
    })
}

/// Whether [`rho_closed`] handles `space`: ℓp leaves and ℓ1-direct sums of
/// supported spaces.
pub fn supports_closed_form(space: &SpaceSpec) -> bool {
    match space {
        SpaceSpec::Lp { .. } => true,
        SpaceSpec::SumL1(a, b) => supports_closed_form(a) && supports_closed_form(b),
        SpaceSpec::ProductMax(..) => false,
    }
}

/// Closed-form `(ρ₊, ρ₋)`.
///
/// * `1 < p < ∞`: both equal `[y, x] / ‖x‖`.
/// * `p = ∞`: max / min of `sgn(x_i) y_i` over the max-coordinate set of `x`.
/// * `p = 1`: `S ± Z` with `S = Σ_{x_i≠0} sgn(x_i) y_i`, `Z = Σ_{x_i=0} |y_i|`.
/// * `X ⊕₁ Y`: child derivatives add.
pub fn rho_closed(space: &SpaceSpec, x: &[f64], y: &[f64]) -> Result<RhoResult> {
    check_pair(space, x, y)?;
    if !supports_closed_form(space) {
        return input(format!("no closed form for ρ± in {space}"));
    }
    if space.norm_of(x) == 0.0 {
        return domain("closed-form ρ± needs x != 0");
    }
    let (rho_plus, rho_minus) = closed_pair(space, x, y);
    Ok(RhoResult {
        rho_plus,
        rho_minus,
        method: RhoMethod::Closed,
        step_trace: Vec::new(),
    })
}

fn closed_pair(space: &SpaceSpec, x: &[f64], y: &[f64]) -> (f64, f64) {
    let nx = space.norm_of(x);
    if nx == 0.0 {
        let ny = space.norm_of(y);
        return (ny, -ny);
    }
    match space {
        SpaceSpec::Lp { p, .. } => match p {
            Exponent::Finite(p) => {
                let r = sip_lp(y, x, *p).expect("validated exponent and x != 0") / nx;
                (r, r)
            }
            Exponent::Infinity => {
                let m = max_set(x);
                let vals = m.iter().map(|&i| sgn(x[i]) * y[i]);
                vals.fold((f64::NEG_INFINITY, f64::INFINITY), |(hi, lo), v| {
                    (hi.max(v), lo.min(v))
                })
            }
            Exponent::One => {
                let (s, z) = l1_parts(x, y, nx);
                (s + z, s - z)
            }
        },
        SpaceSpec::SumL1(a, b) => {
            let k = a.dim();
            let (pl, ml) = closed_pair(a, &x[..k], &y[..k]);
            let (pr, mr) = closed_pair(b, &x[k..], &y[k..]);
            (pl + pr, ml + mr)
        }
        SpaceSpec::ProductMax(..) => unreachable!("guarded by supports_closed_form"),
    }
}

/// `(S, Z)` for the ℓ1 formulas.
fn l1_parts(x: &[f64], y: &[f64], nx: f64) -> (f64, f64) {
    let mut s = 0.0;
    let mut z = 0.0;
    for (a, b) in x.iter().zip(y) {
        if is_nonzero(*a, nx) {
            s += sgn(*a) * b;
        } else {
            z += b.abs();
        }
    }
    (s, z)
}

/// `ρ±` by closed form when available (and `x ≠ 0`), else numerically.
pub fn rho(space: &SpaceSpec, x: &[f64], y: &[f64]) -> Result<RhoResult> {
    check_pair(space, x, y)?;
    if supports_closed_form(space) && space.norm_of(x) > 0.0 {
        rho_closed(space, x, y)
    } else {
        rho_numeric(space, x, y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignConditions {
    /// The stated condition for `ρ₊(x, y) ≥ 0`.
    pub plus_nonneg: bool,
    /// The stated condition for `ρ₋(x, y) ≤ 0`.
    pub minus_nonpos: bool,
}

/// Coordinate conditions characterizing the signs of `ρ±` in `ℓp^n`,
/// evaluated directly and independently of [`rho_closed`]:
///
/// * `1 < p < ∞`: sign of `Σ y_i x_i |x_i|^{p−2}`;
/// * `p = ∞`: some `i₀` with `|x_{i₀}| = ‖x‖` has `sgn(x_{i₀}) y_{i₀} ≥ 0` (resp. `≤ 0`);
/// * `p = 1`: disjoint supports, or `S + Z ≥ 0` (resp. `S − Z ≤ 0`).
pub fn rho_sign_conditions(space: &SpaceSpec, x: &[f64], y: &[f64]) -> Result<SignConditions> {
    check_pair(space, x, y)?;
    let SpaceSpec::Lp { p, .. } = space else {
        return input(format!("sign conditions are stated for lp spaces, got {space}"));
    };
    let nx = space.norm_of(x);
    if nx == 0.0 {
        return domain("sign conditions need x != 0");
    }
    Ok(match p {
        Exponent::Finite(p) => {
            let s: f64 = x
                .iter()
                .zip(y)
                .map(|(a, b)| b * sgn(*a) * (a.abs() / nx).powf(p - 1.0))
                .sum();
            SignConditions {
                plus_nonneg: s >= 0.0,
                minus_nonpos: s <= 0.0,
            }
        }
        Exponent::Infinity => {
            let m = max_set(x);
            SignConditions {
                plus_nonneg: m.iter().any(|&i| sgn(x[i]) * y[i] >= 0.0),
                minus_nonpos: m.iter().any(|&i| sgn(x[i]) * y[i] <= 0.0),
            }
        }
        Exponent::One => {
            let ny = space.norm_of(y);
            let disjoint = !x
                .iter()
                .zip(y)
                .any(|(a, b)| is_nonzero(*a, nx) && is_nonzero(*b, ny));
            let (s, z) = l1_parts(x, y, nx);
            SignConditions {
                plus_nonneg: disjoint || s + z >= 0.0,
                minus_nonpos: disjoint || s - z <= 0.0,
            }
        }
    })
}
