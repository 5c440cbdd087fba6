//! Concrete finite-dimensional normed spaces.
//!
//! A [`SpaceSpec`] is one of
//!
//! * `ℓp^n` for `p = 1`, `1 < p < ∞` or `p = ∞`,
//! * an ℓ1-direct sum `X ⊕₁ Y` with norm `‖(x, y)‖ = ‖x‖ + ‖y‖`,
//! * a max-norm product `X × Y` with norm `‖(x, y)‖ = max(‖x‖, ‖y‖)`.
//!
//! Composite coordinates are the left child's coordinates followed by the
//! right child's. Besides the norm itself every space knows its dual norm,
//! one supporting functional per point and the maximizer of a linear
//! functional over its unit ball; the bilinear code builds on those three.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{domain, input, Error, Result};

/// Relative threshold below which a coordinate counts as zero (`|v_i| ≤ 1e-12·‖v‖`).
pub const RELATIVE_ZERO: f64 = 1e-12;

/// Relative tolerance for membership in the max-coordinate set of an ℓ∞ vector.
pub const MAX_SET_TOL: f64 = 1e-11;

/// Probability that a sampled leaf is snapped to a non-smooth sphere point.
const SNAP_PROBABILITY: f64 = 0.25;

/// Exponent of an ℓp norm. `∞` is a tag, never a large float.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Exponent {
    One,
    /// `1 < p < ∞`.
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn new(p: f64) -> Result<Self> {
        if p == 1.0 {
            Ok(Exponent::One)
        } else if p == f64::INFINITY {
            Ok(Exponent::Infinity)
        } else if p.is_finite() && p > 1.0 {
            Ok(Exponent::Finite(p))
        } else {
            input(format!("exponent must lie in [1, inf], got {p}"))
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Exponent::One => 1.0,
            Exponent::Finite(p) => p,
            Exponent::Infinity => f64::INFINITY,
        }
    }

    /// Hölder conjugate `q` with `1/p + 1/q = 1`.
    pub fn conjugate(self) -> Exponent {
        match self {
            Exponent::One => Exponent::Infinity,
            Exponent::Infinity => Exponent::One,
            Exponent::Finite(p) => Exponent::Finite(p / (p - 1.0)),
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::One => write!(f, "1"),
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinity => write!(f, "inf"),
        }
    }
}

/// A concrete finite-dimensional normed space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpace", into = "RawSpace")]
pub enum SpaceSpec {
    Lp { p: Exponent, n: usize },
    SumL1(Box<SpaceSpec>, Box<SpaceSpec>),
    ProductMax(Box<SpaceSpec>, Box<SpaceSpec>),
}

impl SpaceSpec {
    pub fn lp(p: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return input("dimension must be at least 1");
        }
        Ok(SpaceSpec::Lp {
            p: Exponent::new(p)?,
            n,
        })
    }

    pub fn l1(n: usize) -> Self {
        SpaceSpec::Lp {
            p: Exponent::One,
            n,
        }
    }

    pub fn l2(n: usize) -> Self {
        SpaceSpec::Lp {
            p: Exponent::Finite(2.0),
            n,
        }
    }

    pub fn linf(n: usize) -> Self {
        SpaceSpec::Lp {
            p: Exponent::Infinity,
            n,
        }
    }

    pub fn sum_l1(left: SpaceSpec, right: SpaceSpec) -> Self {
        SpaceSpec::SumL1(Box::new(left), Box::new(right))
    }

    pub fn product_max(left: SpaceSpec, right: SpaceSpec) -> Self {
        SpaceSpec::ProductMax(Box::new(left), Box::new(right))
    }

    /// Total dimension (sum of child dimensions for composites).
    pub fn dim(&self) -> usize {
        match self {
            SpaceSpec::Lp { n, .. } => *n,
            SpaceSpec::SumL1(a, b) | SpaceSpec::ProductMax(a, b) => a.dim() + b.dim(),
        }
    }

    /// True when every ℓp leaf has `p ∈ {1, ∞}`, i.e. the unit ball is a polytope.
    pub fn is_polyhedral(&self) -> bool {
        match self {
            SpaceSpec::Lp { p, .. } => !matches!(p, Exponent::Finite(_)),
            SpaceSpec::SumL1(a, b) | SpaceSpec::ProductMax(a, b) => {
                a.is_polyhedral() && b.is_polyhedral()
            }
        }
    }

    pub fn check(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim() {
            return input(format!(
                "dimension mismatch: space {} has dimension {}, vector has {}",
                self,
                self.dim(),
                v.len()
            ));
        }
        if v.iter().any(|c| !c.is_finite()) {
            return input("vector coordinates must be finite");
        }
        Ok(())
    }

    /// `‖v‖` without dimension checks.
    pub fn norm_of(&self, v: &[f64]) -> f64 {
        debug_assert_eq!(v.len(), self.dim());
        match self {
            SpaceSpec::Lp { p, .. } => lp_norm(*p, v),
            SpaceSpec::SumL1(a, b) => {
                let (l, r) = v.split_at(a.dim());
                a.norm_of(l) + b.norm_of(r)
            }
            SpaceSpec::ProductMax(a, b) => {
                let (l, r) = v.split_at(a.dim());
                a.norm_of(l).max(b.norm_of(r))
            }
        }
    }

    /// Norm of the dual space evaluated at the functional `g`
    /// (coordinates in the dual basis).
    pub fn dual_norm_of(&self, g: &[f64]) -> f64 {
        match self {
            SpaceSpec::Lp { p, .. } => lp_norm(p.conjugate(), g),
            SpaceSpec::SumL1(a, b) => {
                let (l, r) = g.split_at(a.dim());
                a.dual_norm_of(l).max(b.dual_norm_of(r))
            }
            SpaceSpec::ProductMax(a, b) => {
                let (l, r) = g.split_at(a.dim());
                a.dual_norm_of(l) + b.dual_norm_of(r)
            }
        }
    }

    /// `‖x + λy‖ − ‖x‖`, evaluated without catastrophic cancellation so that
    /// difference quotients stay accurate for tiny `λ`.
    pub fn norm_increment(&self, x: &[f64], y: &[f64], lambda: f64) -> f64 {
        match self {
            SpaceSpec::Lp { p, .. } => lp_increment(*p, x, y, lambda),
            SpaceSpec::SumL1(a, b) => {
                let k = a.dim();
                a.norm_increment(&x[..k], &y[..k], lambda)
                    + b.norm_increment(&x[k..], &y[k..], lambda)
            }
            SpaceSpec::ProductMax(a, b) => {
                let k = a.dim();
                let (nl, nr) = (a.norm_of(&x[..k]), b.norm_of(&x[k..]));
                let top = nl.max(nr);
                let il = a.norm_increment(&x[..k], &y[..k], lambda) + (nl - top);
                let ir = b.norm_increment(&x[k..], &y[k..], lambda) + (nr - top);
                il.max(ir)
            }
        }
    }

    /// One supporting functional at `z`: `‖f‖_* = 1` and `f(z) = ‖z‖`.
    /// Returns the zero functional for `z = 0`.
    pub fn supporting_functional(&self, z: &[f64]) -> Vec<f64> {
        match self {
            SpaceSpec::Lp { p, .. } => lp_support(*p, z),
            SpaceSpec::SumL1(a, b) => {
                let k = a.dim();
                let mut f = a.supporting_functional(&z[..k]);
                f.extend(b.supporting_functional(&z[k..]));
                f
            }
            SpaceSpec::ProductMax(a, b) => {
                let k = a.dim();
                let (nl, nr) = (a.norm_of(&z[..k]), b.norm_of(&z[k..]));
                if nl >= nr {
                    let mut f = a.supporting_functional(&z[..k]);
                    f.extend(std::iter::repeat_n(0.0, b.dim()));
                    f
                } else {
                    let mut f = vec![0.0; k];
                    f.extend(b.supporting_functional(&z[k..]));
                    f
                }
            }
        }
    }

    /// A unit vector maximizing `⟨g, x⟩` over the closed unit ball, so that
    /// `⟨g, x⟩ = ‖g‖_*`. Free coordinates (ties) follow `hint` when given.
    pub fn ball_argmax(&self, g: &[f64], hint: Option<&[f64]>) -> Vec<f64> {
        let x = self.ball_argmax_raw(g, hint);
        let n = self.norm_of(&x);
        if n > 0.0 {
            x.iter().map(|c| c / n).collect()
        } else {
            self.fallback_unit(hint)
        }
    }

    fn ball_argmax_raw(&self, g: &[f64], hint: Option<&[f64]>) -> Vec<f64> {
        match self {
            SpaceSpec::Lp { p, .. } => lp_ball_argmax(*p, g, hint),
            SpaceSpec::SumL1(a, b) => {
                let k = a.dim();
                let (hl, hr) = split_hint(hint, k);
                if a.dual_norm_of(&g[..k]) >= b.dual_norm_of(&g[k..]) {
                    let mut x = a.ball_argmax(&g[..k], hl);
                    x.extend(std::iter::repeat_n(0.0, b.dim()));
                    x
                } else {
                    let mut x = vec![0.0; k];
                    x.extend(b.ball_argmax(&g[k..], hr));
                    x
                }
            }
            SpaceSpec::ProductMax(a, b) => {
                let k = a.dim();
                let (hl, hr) = split_hint(hint, k);
                let mut x = a.ball_argmax(&g[..k], hl);
                x.extend(b.ball_argmax(&g[k..], hr));
                x
            }
        }
    }

    fn fallback_unit(&self, hint: Option<&[f64]>) -> Vec<f64> {
        if let Some(h) = hint {
            let n = self.norm_of(h);
            if n > 0.0 {
                return h.iter().map(|c| c / n).collect();
            }
        }
        let mut e = vec![0.0; self.dim()];
        e[0] = 1.0;
        let n = self.norm_of(&e);
        e[0] /= n;
        e
    }
}

fn split_hint(hint: Option<&[f64]>, k: usize) -> (Option<&[f64]>, Option<&[f64]>) {
    match hint {
        Some(h) => (Some(&h[..k]), Some(&h[k..])),
        None => (None, None),
    }
}

/// Sign with `sgn(0) = 0`.
pub fn sgn(t: f64) -> f64 {
    if t > 0.0 {
        1.0
    } else if t < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Indices `i` with `|v_i| ≥ ‖v‖∞ (1 − 1e-11)`.
pub fn max_set(v: &[f64]) -> Vec<usize> {
    let top = v.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if top == 0.0 {
        return Vec::new();
    }
    let cut = top * (1.0 - MAX_SET_TOL);
    (0..v.len()).filter(|&i| v[i].abs() >= cut).collect()
}

/// `|t| > 1e-12 · scale`.
pub fn is_nonzero(t: f64, scale: f64) -> bool {
    t.abs() > RELATIVE_ZERO * scale
}

fn lp_norm(p: Exponent, v: &[f64]) -> f64 {
    match p {
        Exponent::One => v.iter().map(|c| c.abs()).sum(),
        Exponent::Infinity => v.iter().fold(0.0f64, |m, c| m.max(c.abs())),
        Exponent::Finite(p) => {
            let top = v.iter().fold(0.0f64, |m, c| m.max(c.abs()));
            if top == 0.0 {
                return 0.0;
            }
            let s: f64 = v.iter().map(|c| (c.abs() / top).powf(p)).sum();
            top * s.powf(1.0 / p)
        }
    }
}

fn lp_increment(p: Exponent, x: &[f64], y: &[f64], lambda: f64) -> f64 {
    match p {
        Exponent::One => x
            .iter()
            .zip(y)
            .map(|(a, b)| (a + lambda * b).abs() - a.abs())
            .sum(),
        Exponent::Infinity => {
            let top = lp_norm(p, x);
            x.iter()
                .zip(y)
                .map(|(a, b)| ((a + lambda * b).abs() - a.abs()) + (a.abs() - top))
                .fold(f64::NEG_INFINITY, f64::max)
        }
        Exponent::Finite(p) => {
            let top = x.iter().fold(0.0f64, |m, c| m.max(c.abs()));
            if top == 0.0 {
                return lambda.abs() * lp_norm(Exponent::Finite(p), y);
            }
            // Work with x/top, y/top; the increment scales back by `top`.
            let mut s = 0.0;
            let mut d = 0.0;
            for (a, b) in x.iter().zip(y) {
                let a = a / top;
                let b = b / top;
                let pa = a.abs().powf(p);
                s += pa;
                if a == 0.0 {
                    d += (lambda * b).abs().powf(p);
                    continue;
                }
                let r = lambda * b / a;
                if r.abs() < 0.5 {
                    d += pa * (p * r.ln_1p()).exp_m1();
                } else {
                    d += (a + lambda * b).abs().powf(p) - pa;
                }
            }
            let norm = s.powf(1.0 / p);
            top * norm * ((d / s).ln_1p() / p).exp_m1()
        }
    }
}

fn lp_support(p: Exponent, z: &[f64]) -> Vec<f64> {
    let n = lp_norm(p, z);
    let mut f = vec![0.0; z.len()];
    if n == 0.0 {
        return f;
    }
    match p {
        Exponent::One => {
            for (fi, zi) in f.iter_mut().zip(z) {
                if is_nonzero(*zi, n) {
                    *fi = sgn(*zi);
                }
            }
        }
        Exponent::Infinity => {
            let i = max_set(z)[0];
            f[i] = sgn(z[i]);
        }
        Exponent::Finite(p) => {
            for (fi, zi) in f.iter_mut().zip(z) {
                *fi = sgn(*zi) * (zi.abs() / n).powf(p - 1.0);
            }
        }
    }
    f
}

fn lp_ball_argmax(p: Exponent, g: &[f64], hint: Option<&[f64]>) -> Vec<f64> {
    let mut x = vec![0.0; g.len()];
    let top = g.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if top == 0.0 {
        if let Some(h) = hint {
            x.copy_from_slice(h);
        }
        return x;
    }
    match p {
        Exponent::One => {
            // Dual is ℓ∞: put all mass on a coordinate of maximal |g_k|,
            // preferring the one the hint already uses.
            let cands = max_set(g);
            let k = match hint {
                Some(h) => *cands
                    .iter()
                    .max_by(|&&a, &&b| h[a].abs().total_cmp(&h[b].abs()).then(b.cmp(&a)))
                    .unwrap(),
                None => cands[0],
            };
            x[k] = sgn(g[k]);
        }
        Exponent::Infinity => {
            for i in 0..g.len() {
                x[i] = if is_nonzero(g[i], top) {
                    sgn(g[i])
                } else {
                    hint.map_or(0.0, |h| h[i].clamp(-1.0, 1.0))
                };
            }
        }
        Exponent::Finite(p) => {
            let q = p / (p - 1.0);
            let gn = lp_norm(Exponent::Finite(q), g);
            for (xi, gi) in x.iter_mut().zip(g) {
                *xi = sgn(*gi) * (gi.abs() / gn).powf(q - 1.0);
            }
        }
    }
    x
}

/// `‖v‖` in `space`.
pub fn norm(space: &SpaceSpec, v: &[f64]) -> Result<f64> {
    space.check(v)?;
    Ok(space.norm_of(v))
}

/// The semi-inner product on smooth `ℓp^n` compatible with the norm:
/// `[x, y] = ‖y‖^{2−p} Σ x_i y_i |y_i|^{p−2}`.
pub fn sip_lp(x: &[f64], y: &[f64], p: f64) -> Result<f64> {
    if !(p.is_finite() && p > 1.0) {
        return input(format!("semi-inner product needs 1 < p < inf, got {p}"));
    }
    if x.len() != y.len() {
        return input(format!(
            "dimension mismatch: {} vs {}",
            x.len(),
            y.len()
        ));
    }
    let ny = lp_norm(Exponent::Finite(p), y);
    if ny == 0.0 {
        return domain("semi-inner product [x, y] needs y != 0");
    }
    // y_i |y_i|^{p-2} = sgn(y_i) |y_i|^{p-1}, which stays finite at y_i = 0.
    let s: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| a * sgn(*b) * (b.abs() / ny).powf(p - 1.0))
        .sum();
    Ok(ny * s)
}

/// Deterministic generator for `(seed, stream)`; streams split one seed into
/// independent per-trial sequences.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws unit vectors that land on non-smooth sphere points with positive
/// probability.
pub fn random_unit<R: Rng + ?Sized>(space: &SpaceSpec, rng: &mut R) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..space.dim()).map(|_| rng.sample(StandardNormal)).collect();
        snap(space, &mut v, rng);
        let n = space.norm_of(&v);
        if n > 1e-300 {
            v.iter_mut().for_each(|c| *c /= n);
            return v;
        }
    }
}

/// Unit vector from plain Gaussian coordinates (no snapping).
pub fn random_direction<R: Rng + ?Sized>(space: &SpaceSpec, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..space.dim()).map(|_| rng.sample(StandardNormal)).collect();
        let n = space.norm_of(&v);
        if n > 1e-300 {
            return v.iter().map(|c| c / n).collect();
        }
    }
}

fn snap<R: Rng + ?Sized>(space: &SpaceSpec, v: &mut [f64], rng: &mut R) {
    match space {
        SpaceSpec::Lp { p, n } => {
            let n = *n;
            if n < 2 || !rng.random_bool(SNAP_PROBABILITY) {
                return;
            }
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(rng);
            match p {
                Exponent::Infinity => {
                    let k = rng.random_range(2..=n);
                    let top = v.iter().fold(0.0f64, |m, c| m.max(c.abs()));
                    for &i in &idx[..k] {
                        v[i] = if v[i] < 0.0 { -top } else { top };
                    }
                }
                Exponent::One => {
                    let k = rng.random_range(1..n);
                    for &i in &idx[..k] {
                        v[i] = 0.0;
                    }
                }
                Exponent::Finite(_) => {}
            }
        }
        SpaceSpec::SumL1(a, b) | SpaceSpec::ProductMax(a, b) => {
            let k = a.dim();
            let (l, r) = v.split_at_mut(k);
            snap(a, l, rng);
            snap(b, r, rng);
            if matches!(space, SpaceSpec::SumL1(..)) && rng.random_bool(0.1) {
                let side = if rng.random_bool(0.5) { l } else { r };
                side.iter_mut().for_each(|c| *c = 0.0);
            }
        }
    }
}

/// `count` unit vectors of `space`, reproducible from `seed`.
pub fn sphere_sample(space: &SpaceSpec, seed: u64, count: usize) -> Result<Vec<Vector>> {
    if count == 0 {
        return input("count must be at least 1");
    }
    let mut rng = seeded_rng(seed, 0);
    Ok((0..count)
        .map(|_| Vector {
            space: space.clone(),
            coords: random_unit(space, &mut rng),
        })
        .collect())
}

/// Coordinates tagged with the space they live in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vector {
    pub space: SpaceSpec,
    #[serde(rename = "v")]
    pub coords: Vec<f64>,
}

impl Vector {
    pub fn new(space: SpaceSpec, coords: Vec<f64>) -> Result<Self> {
        space.check(&coords)?;
        Ok(Vector { space, coords })
    }

    pub fn norm(&self) -> f64 {
        self.space.norm_of(&self.coords)
    }
}

// JSON schema: {"kind":"lp","p":"inf"|number,"n":int} | {"kind":"sum1"|"prodmax","left":..,"right":..}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum RawExponent {
    Number(f64),
    Text(String),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpace {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    p: Option<RawExponent>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    left: Option<Box<RawSpace>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    right: Option<Box<RawSpace>>,
}

impl TryFrom<RawSpace> for SpaceSpec {
    type Error = Error;

    fn try_from(raw: RawSpace) -> Result<Self> {
        match raw.kind.as_str() {
            "lp" => {
                if raw.left.is_some() || raw.right.is_some() {
                    return input("lp space takes no children");
                }
                let p = match raw.p {
                    Some(RawExponent::Number(p)) => p,
                    Some(RawExponent::Text(s)) => parse_exponent(&s)?,
                    None => return input("lp space needs \"p\""),
                };
                let n = raw.n.ok_or_else(|| Error::Input("lp space needs \"n\"".into()))?;
                SpaceSpec::lp(p, n)
            }
            "sum1" | "prodmax" => {
                if raw.p.is_some() || raw.n.is_some() {
                    return input(format!("{} space takes only left/right", raw.kind));
                }
                let (Some(l), Some(r)) = (raw.left, raw.right) else {
                    return input(format!("{} space needs \"left\" and \"right\"", raw.kind));
                };
                let l = SpaceSpec::try_from(*l)?;
                let r = SpaceSpec::try_from(*r)?;
                Ok(if raw.kind == "sum1" {
                    SpaceSpec::sum_l1(l, r)
                } else {
                    SpaceSpec::product_max(l, r)
                })
            }
            other => input(format!("unknown space kind {other:?}")),
        }
    }
}

impl From<SpaceSpec> for RawSpace {
    fn from(space: SpaceSpec) -> Self {
        match space {
            SpaceSpec::Lp { p, n } => RawSpace {
                kind: "lp".into(),
                p: Some(match p {
                    Exponent::Infinity => RawExponent::Text("inf".into()),
                    other => RawExponent::Number(other.value()),
                }),
                n: Some(n),
                left: None,
                right: None,
            },
            SpaceSpec::SumL1(a, b) => composite("sum1", *a, *b),
            SpaceSpec::ProductMax(a, b) => composite("prodmax", *a, *b),
        }
    }
}

fn composite(kind: &str, left: SpaceSpec, right: SpaceSpec) -> RawSpace {
    RawSpace {
        kind: kind.into(),
        p: None,
        n: None,
        left: Some(Box::new(left.into())),
        right: Some(Box::new(right.into())),
    }
}

fn parse_exponent(s: &str) -> Result<f64> {
    match s.trim() {
        "inf" | "infinity" | "Infinity" | "∞" => Ok(f64::INFINITY),
        t => t
            .parse::<f64>()
            .map_err(|_| Error::Input(format!("bad exponent {t:?}"))),
    }
}

impl FromStr for SpaceSpec {
    type Err = Error;

    /// Accepts the JSON schema or the compact form `lp:<p>:<n>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            return serde_json::from_str(s).map_err(|e| Error::Input(format!("bad space JSON: {e}")));
        }
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["lp", p, n] => {
                let n = n
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Input(format!("bad dimension {n:?}")))?;
                SpaceSpec::lp(parse_exponent(p)?, n)
            }
            _ => input(format!("unrecognized space {s:?}; use JSON or lp:<p>:<n>")),
        }
    }
}

impl fmt::Display for SpaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceSpec::Lp { p, n } => write!(f, "lp:{p}:{n}"),
            SpaceSpec::SumL1(a, b) => write!(f, "sum1({a}, {b})"),
            SpaceSpec::ProductMax(a, b) => write!(f, "prodmax({a}, {b})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn mixed() -> SpaceSpec {
        SpaceSpec::sum_l1(SpaceSpec::l1(2), SpaceSpec::linf(2))
    }

    fn all_spaces() -> Vec<SpaceSpec> {
        vec![
            SpaceSpec::l1(3),
            SpaceSpec::l2(3),
            SpaceSpec::lp(3.0, 3).unwrap(),
            SpaceSpec::lp(1.2, 3).unwrap(),
            SpaceSpec::linf(3),
            SpaceSpec::sum_l1(SpaceSpec::l2(1), SpaceSpec::linf(2)),
            SpaceSpec::product_max(SpaceSpec::l1(1), SpaceSpec::l2(2)),
        ]
    }

    #[test]
    fn norm_examples() {
        assert_abs_diff_eq!(norm(&SpaceSpec::l2(2), &[3.0, 4.0]).unwrap(), 5.0, epsilon = 1e-15);
        assert_eq!(norm(&SpaceSpec::linf(2), &[2.0, -7.0]).unwrap(), 7.0);
        assert_eq!(norm(&mixed(), &[1.0, 1.0, 2.0, -3.0]).unwrap(), 5.0);
        let prod = SpaceSpec::product_max(SpaceSpec::l1(2), SpaceSpec::l2(2));
        assert_eq!(norm(&prod, &[1.0, 1.0, 3.0, 4.0]).unwrap(), 5.0);
        assert!(matches!(norm(&SpaceSpec::l2(2), &[1.0]), Err(Error::Input(_))));
    }

    #[test]
    fn nested_composites_compose() {
        let inner = mixed();
        let outer = SpaceSpec::product_max(inner.clone(), SpaceSpec::l2(1));
        assert_eq!(outer.dim(), 5);
        let v = [1.0, -1.0, 0.5, 3.0, -4.5];
        let expected = inner.norm_of(&v[..4]).max(4.5);
        assert_eq!(outer.norm_of(&v), expected);
    }

    #[test]
    fn exponents_are_tagged() {
        assert_eq!(SpaceSpec::lp(f64::INFINITY, 2).unwrap(), SpaceSpec::linf(2));
        assert_eq!(SpaceSpec::lp(1.0, 2).unwrap(), SpaceSpec::l1(2));
        assert!(SpaceSpec::lp(0.5, 2).is_err());
        assert!(SpaceSpec::lp(2.0, 0).is_err());
        assert!(SpaceSpec::lp(f64::NAN, 2).is_err());
    }

    #[test]
    fn sip_examples() {
        assert_abs_diff_eq!(sip_lp(&[3.0, 4.0], &[4.0, -3.0], 2.0).unwrap(), 0.0, epsilon = 1e-14);
        for p in [1.5, 2.0, 3.0, 7.0] {
            let n = SpaceSpec::lp(p, 2).unwrap().norm_of(&[1.0, 2.0]);
            assert_abs_diff_eq!(sip_lp(&[1.0, 2.0], &[1.0, 2.0], p).unwrap(), n * n, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(sip_lp(&[1.0, -1.0], &[1.0, 1.0], 3.0).unwrap(), 0.0, epsilon = 1e-15);
        assert!(matches!(sip_lp(&[1.0, 0.0], &[0.0, 0.0], 2.0), Err(Error::Domain(_))));
        assert!(matches!(sip_lp(&[1.0, 0.0], &[1.0, 0.0], 1.0), Err(Error::Input(_))));
    }

    #[test]
    fn sphere_sample_examples() {
        let s = sphere_sample(&SpaceSpec::l2(3), 1, 10).unwrap();
        assert_eq!(s.len(), 10);
        assert!(s.iter().all(|v| (v.norm() - 1.0).abs() <= 1e-12));
        assert_eq!(sphere_sample(&SpaceSpec::l1(2), 7, 1).unwrap(), sphere_sample(&SpaceSpec::l1(2), 7, 1).unwrap());
        let tied = sphere_sample(&SpaceSpec::linf(4), 2, 1000)
            .unwrap()
            .iter()
            .any(|v| v.coords.iter().filter(|c| (c.abs() - 1.0).abs() <= 1e-3).count() >= 2);
        assert!(tied);
        assert!(sphere_sample(&SpaceSpec::l2(2), 0, 0).is_err());
    }

    #[test]
    fn supporting_functionals_norm_and_dual() {
        let mut rng = seeded_rng(5, 0);
        for s in all_spaces() {
            for _ in 0..50 {
                let z = random_unit(&s, &mut rng);
                let f = s.supporting_functional(&z);
                let fz: f64 = f.iter().zip(&z).map(|(a, b)| a * b).sum();
                assert_abs_diff_eq!(fz, 1.0, epsilon = 1e-9);
                assert_abs_diff_eq!(s.dual_norm_of(&f), 1.0, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn increment_matches_difference_of_norms() {
        let mut rng = seeded_rng(9, 0);
        for s in all_spaces() {
            for _ in 0..50 {
                let (x, y) = (random_unit(&s, &mut rng), random_direction(&s, &mut rng));
                let lambda = rng.random_range(-2.0..2.0);
                let moved: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + lambda * b).collect();
                assert_abs_diff_eq!(s.norm_increment(&x, &y, lambda), s.norm_of(&moved) - s.norm_of(&x), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn json_and_compact_forms() {
        let s: SpaceSpec = "lp:inf:3".parse().unwrap();
        assert_eq!(s, SpaceSpec::linf(3));
        let j = serde_json::to_string(&mixed()).unwrap();
        assert_eq!(j.parse::<SpaceSpec>().unwrap(), mixed());
        assert_eq!(r#"{"kind":"lp","p":"inf","n":2}"#.parse::<SpaceSpec>().unwrap(), SpaceSpec::linf(2));
        for bad in ["lp:2", "lq:2:2", r#"{"kind":"lp","p":2}"#, r#"{"kind":"sum1","left":{"kind":"lp","p":1,"n":1}}"#, r#"{"kind":"lp","p":2,"n":2,"q":1}"#] {
            assert!(matches!(bad.parse::<SpaceSpec>(), Err(Error::Input(_))), "{bad}");
        }
    }

    fn coords(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-10.0f64..10.0, n)
    }

    proptest! {
        #[test]
        fn triangle_inequality(u in coords(3), v in coords(3)) {
            for s in all_spaces() {
                let w: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
                prop_assert!(s.norm_of(&w) <= s.norm_of(&u) + s.norm_of(&v) + 1e-12 * (1.0 + s.norm_of(&w)));
            }
        }

        #[test]
        fn homogeneity(v in coords(3), alpha in -100.0f64..100.0) {
            for s in all_spaces() {
                let w: Vec<f64> = v.iter().map(|c| alpha * c).collect();
                let expected = alpha.abs() * s.norm_of(&v);
                prop_assert!((s.norm_of(&w) - expected).abs() <= 1e-12 * expected.max(1.0));
            }
        }

        #[test]
        fn sip_compatible_and_homogeneous(x in coords(4), y in coords(4), p in 1.05f64..12.0) {
            prop_assume!(y.iter().any(|c| c.abs() > 1e-3));
            let n = SpaceSpec::lp(p, 4).unwrap().norm_of(&y);
            prop_assert!((sip_lp(&y, &y, p).unwrap() - n * n).abs() <= 1e-10 * n * n);
            let base = sip_lp(&x, &y, p).unwrap();
            for alpha in [0.5, 2.0, 10.0] {
                let ay: Vec<f64> = y.iter().map(|c| alpha * c).collect();
                prop_assert!((sip_lp(&x, &ay, p).unwrap() - alpha * base).abs() <= 1e-10 * (1.0 + base.abs()) * alpha);
            }
        }
    }
}
