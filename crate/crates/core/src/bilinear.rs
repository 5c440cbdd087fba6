//! Bilinear operators `T: X × Y → Z` stored as coefficient tensors
//! `T(x, y)_k = Σ_{i,j} c[k][i][j] x_i y_j`, with operator norms, norm
//! attainment sets and operator-level orthogonality and smoothness.
//!
//! Every space here is finite-dimensional, so every bilinear operator is
//! compact and weak-weak continuous and attains its norm; none of that is
//! checked at runtime.

use std::cell::RefCell;

use nalgebra::{DMatrix, SymmetricEigen};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::derivatives::rho;
use crate::error::{domain, input, Error, Result};
use crate::minimize::golden_section;
use crate::orthogonality::{bracket, dot, OrthoVerdict, Witness};
use crate::spaces::{random_unit, seeded_rng, Exponent, SpaceSpec};

pub const DEFAULT_RESTARTS: usize = 32;
pub const DEFAULT_GRID_RESOLUTION: usize = 721;
pub const ATTAINMENT_TOL: f64 = 1e-6;
pub const CLUSTER_RADIUS: f64 = 1e-3;
pub const OPERATOR_TOL: f64 = 1e-8;
/// Slack on the sign tests inside certificates.
pub const CERTIFICATE_TOL: f64 = 1e-10;
/// Smoothness of `z₀` is read from `|ρ₊ − ρ₋|` below this on a probe basis.
pub const SMOOTH_POINT_TOL: f64 = 1e-9;

const ASCENT_ITERATIONS: usize = 500;
const ASCENT_STOP: f64 = 1e-12;
const INNER_RESTARTS: usize = 8;
const POWER_ITERATIONS: usize = 200;
/// Largest factor handled by vertex or sign enumeration.
const MAX_ENUMERATION_DIM: usize = 16;
const MULTISTART_POOL: usize = 256;
const LAMBDA_WIDTH: f64 = 1e-10;
/// Stream offset separating inner-evaluation seeds from outer restarts.
const INNER_STREAM: u64 = 1 << 32;

/// `T: X × Y → Z` as a dense coefficient tensor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTensor", into = "RawTensor")]
pub struct BilinearOp {
    x_space: SpaceSpec,
    y_space: SpaceSpec,
    z_space: SpaceSpec,
    /// `c[k][i][j]` at `(k * nx + i) * ny + j`.
    coeffs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTensor {
    #[serde(rename = "X")]
    x: SpaceSpec,
    #[serde(rename = "Y")]
    y: SpaceSpec,
    #[serde(rename = "Z")]
    z: SpaceSpec,
    c: Vec<Vec<Vec<f64>>>,
}

impl TryFrom<RawTensor> for BilinearOp {
    type Error = Error;

    fn try_from(raw: RawTensor) -> Result<Self> {
        BilinearOp::new(raw.x, raw.y, raw.z, raw.c)
    }
}

impl From<BilinearOp> for RawTensor {
    fn from(t: BilinearOp) -> Self {
        let c = (0..t.z_space.dim())
            .map(|k| {
                (0..t.x_space.dim())
                    .map(|i| (0..t.y_space.dim()).map(|j| t.coeff(k, i, j)).collect())
                    .collect()
            })
            .collect();
        RawTensor {
            x: t.x_space,
            y: t.y_space,
            z: t.z_space,
            c,
        }
    }
}

impl BilinearOp {
    /// Builds `T` from nested coefficients indexed `[k][i][j]`.
    pub fn new(
        x_space: SpaceSpec,
        y_space: SpaceSpec,
        z_space: SpaceSpec,
        c: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        let (nx, ny, nz) = (x_space.dim(), y_space.dim(), z_space.dim());
        if c.len() != nz
            || c.iter().any(|m| m.len() != nx)
            || c.iter().flatten().any(|r| r.len() != ny)
        {
            return input(format!(
                "coefficient tensor must have shape [{nz}][{nx}][{ny}] for spaces Z, X, Y"
            ));
        }
        let flat = c.into_iter().flatten().flatten().collect();
        Self::from_flat(x_space, y_space, z_space, flat)
    }

    /// Builds `T` from coefficients flattened in `[k][i][j]` order.
    pub fn from_flat(
        x_space: SpaceSpec,
        y_space: SpaceSpec,
        z_space: SpaceSpec,
        coeffs: Vec<f64>,
    ) -> Result<Self> {
        for (name, s) in [("X", &x_space), ("Y", &y_space), ("Z", &z_space)] {
            if s.dim() < 2 {
                return input(format!("{name} must have dimension at least 2, got {s}"));
            }
        }
        let len = x_space.dim() * y_space.dim() * z_space.dim();
        if coeffs.len() != len {
            return input(format!("expected {len} coefficients, got {}", coeffs.len()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return input("coefficients must be finite");
        }
        Ok(BilinearOp {
            x_space,
            y_space,
            z_space,
            coeffs,
        })
    }

    /// `T(x, y) = f(x) g(y) z₀`.
    pub fn rank_one(
        x_space: SpaceSpec,
        y_space: SpaceSpec,
        z_space: SpaceSpec,
        f: &[f64],
        g: &[f64],
        z0: &[f64],
    ) -> Result<Self> {
        if f.len() != x_space.dim() || g.len() != y_space.dim() || z0.len() != z_space.dim() {
            return input("rank-one factors do not match the space dimensions");
        }
        let mut coeffs = Vec::with_capacity(z0.len() * f.len() * g.len());
        for zk in z0 {
            for fi in f {
                for gj in g {
                    coeffs.push(zk * fi * gj);
                }
            }
        }
        Self::from_flat(x_space, y_space, z_space, coeffs)
    }

    pub fn x_space(&self) -> &SpaceSpec {
        &self.x_space
    }

    pub fn y_space(&self) -> &SpaceSpec {
        &self.y_space
    }

    pub fn z_space(&self) -> &SpaceSpec {
        &self.z_space
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    fn dims(&self) -> (usize, usize, usize) {
        (self.x_space.dim(), self.y_space.dim(), self.z_space.dim())
    }

    pub fn coeff(&self, k: usize, i: usize, j: usize) -> f64 {
        let (nx, ny, _) = self.dims();
        self.coeffs[(k * nx + i) * ny + j]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == 0.0)
    }

    fn same_spaces(&self, other: &BilinearOp) -> Result<()> {
        if self.x_space != other.x_space
            || self.y_space != other.y_space
            || self.z_space != other.z_space
        {
            return input("operators must share domain and codomain spaces");
        }
        Ok(())
    }

    /// `self + λ·other`.
    pub fn combine(&self, lambda: f64, other: &BilinearOp) -> Result<BilinearOp> {
        self.same_spaces(other)?;
        Ok(self.combine_unchecked(lambda, other))
    }

    fn combine_unchecked(&self, lambda: f64, other: &BilinearOp) -> BilinearOp {
        BilinearOp {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + lambda * b)
                .collect(),
            ..self.clone()
        }
    }

    pub fn scaled(&self, alpha: f64) -> BilinearOp {
        BilinearOp {
            coeffs: self.coeffs.iter().map(|c| alpha * c).collect(),
            ..self.clone()
        }
    }

    /// `T(x, y)`.
    pub fn apply(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        self.x_space.check(x)?;
        self.y_space.check(y)?;
        Ok(self.apply_unchecked(x, y))
    }

    fn apply_unchecked(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let m = self.matrix_for_y(y);
        mat_vec(&m, self.x_space.dim(), x)
    }

    /// The `nz × nx` matrix of `x ↦ T(x, y)`, row-major.
    pub fn matrix_for_y(&self, y: &[f64]) -> Vec<f64> {
        let (nx, ny, nz) = self.dims();
        (0..nz * nx)
            .map(|r| dot(&self.coeffs[r * ny..(r + 1) * ny], y))
            .collect()
    }

    /// The `nz × ny` matrix of `y ↦ T(x, y)`, row-major.
    pub fn matrix_for_x(&self, x: &[f64]) -> Vec<f64> {
        let (nx, ny, nz) = self.dims();
        let mut m = vec![0.0; nz * ny];
        for k in 0..nz {
            for (i, xi) in x.iter().enumerate() {
                let row = &self.coeffs[(k * nx + i) * ny..(k * nx + i + 1) * ny];
                for (mj, c) in m[k * ny..(k + 1) * ny].iter_mut().zip(row) {
                    *mj += xi * c;
                }
            }
        }
        m
    }

    /// `‖T(x, y)‖_Z`.
    pub fn value_at(&self, x: &[f64], y: &[f64]) -> f64 {
        self.z_space.norm_of(&self.apply_unchecked(x, y))
    }
}

fn mat_vec(m: &[f64], cols: usize, v: &[f64]) -> Vec<f64> {
    m.chunks_exact(cols).map(|row| dot(row, v)).collect()
}

fn mat_t_vec(m: &[f64], cols: usize, w: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; cols];
    for (row, wk) in m.chunks_exact(cols).zip(w) {
        for (o, r) in out.iter_mut().zip(row) {
            *o += wk * r;
        }
    }
    out
}

fn negated(v: &[f64]) -> Vec<f64> {
    v.iter().map(|c| -c).collect()
}

/// Among candidate unit vectors keeps the largest `‖Mu‖`, breaking ties
/// toward `hint`.
fn best_candidate(
    cands: impl IntoIterator<Item = Vec<f64>>,
    m: &[f64],
    z: &SpaceSpec,
    hint: &[f64],
) -> (f64, Vec<f64>) {
    let cols = hint.len();
    let mut best: Option<(f64, f64, Vec<f64>)> = None;
    for u in cands {
        let value = z.norm_of(&mat_vec(m, cols, &u));
        let align = dot(&u, hint);
        let better = match &best {
            None => true,
            Some((bv, ba, _)) => {
                let tie = (value - bv).abs() <= 1e-14 * bv.max(1.0);
                if tie {
                    align > *ba
                } else {
                    value > *bv
                }
            }
        };
        if better {
            best = Some((value, align, u));
        }
    }
    let (v, _, u) = best.expect("at least one candidate");
    (v, u)
}

fn leaf_exponent(s: &SpaceSpec) -> Option<Exponent> {
    match s {
        SpaceSpec::Lp { p, .. } => Some(*p),
        _ => None,
    }
}

/// Maximizes `‖Mu‖_Z` over the unit sphere of `U` (`M` is `nz × nu`).
///
/// Exact when `U` is ℓ1 or ℓ∞ (vertex enumeration), when `Z` is ℓ∞ or ℓ1
/// (dual-norm formulas), or for ℓ2 → ℓ2 (top singular vector). Otherwise a
/// nonlinear power iteration from `hint` and a few random starts.
fn maximize_linear(
    m: &[f64],
    u_space: &SpaceSpec,
    z_space: &SpaceSpec,
    hint: &[f64],
    rng: &mut ChaCha8Rng,
) -> (f64, Vec<f64>) {
    let nu = u_space.dim();
    let nz = z_space.dim();
    let (pu, pz) = (leaf_exponent(u_space), leaf_exponent(z_space));

    if pu == Some(Exponent::One) {
        let cands = (0..nu).flat_map(|i| {
            let mut e = vec![0.0; nu];
            e[i] = 1.0;
            [negated(&e), e]
        });
        return best_candidate(cands, m, z_space, hint);
    }
    if pz == Some(Exponent::Infinity) {
        let cands = m.chunks_exact(nu).flat_map(|row| {
            [
                u_space.ball_argmax(row, Some(hint)),
                u_space.ball_argmax(&negated(row), Some(hint)),
            ]
        });
        return best_candidate(cands, m, z_space, hint);
    }
    if pz == Some(Exponent::One) && nz <= MAX_ENUMERATION_DIM {
        let cands = (0..1usize << (nz - 1)).flat_map(|mask| {
            let s: Vec<f64> = (0..nz)
                .map(|k| if k > 0 && mask >> (k - 1) & 1 == 1 { -1.0 } else { 1.0 })
                .collect();
            let g = mat_t_vec(m, nu, &s);
            [
                u_space.ball_argmax(&g, Some(hint)),
                u_space.ball_argmax(&negated(&g), Some(hint)),
            ]
        });
        return best_candidate(cands, m, z_space, hint);
    }
    if pu == Some(Exponent::Infinity) && nu <= MAX_ENUMERATION_DIM {
        let cands = (0..1usize << nu).map(|mask| {
            (0..nu)
                .map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 })
                .collect::<Vec<f64>>()
        });
        return best_candidate(cands, m, z_space, hint);
    }
    if pu == Some(Exponent::Finite(2.0)) && pz == Some(Exponent::Finite(2.0)) {
        return top_singular(m, nz, nu, hint, z_space);
    }
    power_iteration(m, u_space, z_space, hint, rng)
}

fn top_singular(
    m: &[f64],
    nz: usize,
    nu: usize,
    hint: &[f64],
    z_space: &SpaceSpec,
) -> (f64, Vec<f64>) {
    let a = DMatrix::from_row_slice(nz, nu, m);
    let eig = SymmetricEigen::new(a.transpose() * &a);
    let mut order: Vec<usize> = (0..nu).collect();
    order.sort_by(|&p, &q| eig.eigenvalues[q].total_cmp(&eig.eigenvalues[p]));
    let top = eig.eigenvalues[order[0]];
    let tied: Vec<usize> = order
        .into_iter()
        .take_while(|&i| top - eig.eigenvalues[i] <= 1e-12 * top.max(1e-300))
        .collect();
    // On a repeated top eigenvalue follow the hint inside the eigenspace.
    let mut u = vec![0.0; nu];
    for &i in &tied {
        let v = eig.eigenvectors.column(i);
        let c: f64 = if tied.len() > 1 {
            v.iter().zip(hint).map(|(a, b)| a * b).sum()
        } else {
            1.0
        };
        for (uj, vj) in u.iter_mut().zip(v.iter()) {
            *uj += c * vj;
        }
    }
    let n = dot(&u, &u).sqrt();
    let mut u: Vec<f64> = if n > 1e-12 {
        u.iter().map(|c| c / n).collect()
    } else {
        eig.eigenvectors.column(tied[0]).iter().copied().collect()
    };
    if dot(&u, hint) < 0.0 {
        u = negated(&u);
    }
    let value = z_space.norm_of(&mat_vec(m, nu, &u));
    (value, u)
}

/// `u ← argmax_{‖u‖≤1} ⟨Mᵀ J(Mu), u⟩`; each step does not decrease `‖Mu‖`.
fn power_iteration(
    m: &[f64],
    u_space: &SpaceSpec,
    z_space: &SpaceSpec,
    hint: &[f64],
    rng: &mut ChaCha8Rng,
) -> (f64, Vec<f64>) {
    let nu = u_space.dim();
    let mut starts = vec![hint.to_vec()];
    starts.extend((0..INNER_RESTARTS).map(|_| random_unit(u_space, rng)));
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mut u in starts {
        let mut value = z_space.norm_of(&mat_vec(m, nu, &u));
        for _ in 0..POWER_ITERATIONS {
            let w = mat_vec(m, nu, &u);
            let g = mat_t_vec(m, nu, &z_space.supporting_functional(&w));
            let next = u_space.ball_argmax(&g, Some(&u));
            let v = z_space.norm_of(&mat_vec(m, nu, &next));
            if v <= value {
                break;
            }
            let gain = v - value;
            u = next;
            value = v;
            if gain <= 1e-15 * value.max(1.0) {
                break;
            }
        }
        if best.as_ref().is_none_or(|(bv, _)| value > *bv) {
            best = Some((value, u));
        }
    }
    best.expect("at least the hint start")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pair {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
struct Run {
    value: f64,
    x: Vec<f64>,
    y: Vec<f64>,
}

/// Alternating maximization in `x` and `y` from `(x, y)`.
fn ascend(t: &BilinearOp, mut x: Vec<f64>, mut y: Vec<f64>, rng: &mut ChaCha8Rng) -> Run {
    let mut value = t.value_at(&x, &y);
    for _ in 0..ASCENT_ITERATIONS {
        let (_, nx) = maximize_linear(&t.matrix_for_y(&y), &t.x_space, &t.z_space, &x, rng);
        let (v, ny) = maximize_linear(&t.matrix_for_x(&nx), &t.y_space, &t.z_space, &y, rng);
        if v < value {
            break;
        }
        let gain = v - value;
        x = nx;
        y = ny;
        value = v;
        if gain < ASCENT_STOP {
            break;
        }
    }
    Run { value, x, y }
}

fn random_start(t: &BilinearOp, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let x = random_unit(&t.x_space, rng);
    let y = random_unit(&t.y_space, rng);
    (x, y)
}

/// One alternating run per restart, restart `r` drawing from stream `r`.
fn alternating_runs(t: &BilinearOp, restarts: usize, seed: u64) -> Vec<Run> {
    (0..restarts.max(1))
        .map(|r| {
            let mut rng = seeded_rng(seed, r as u64);
            let (x, y) = random_start(t, &mut rng);
            ascend(t, x, y, &mut rng)
        })
        .collect()
}

fn multistart_runs(t: &BilinearOp, restarts: usize, seed: u64) -> Vec<Run> {
    let restarts = restarts.max(1);
    let mut rng = seeded_rng(seed, 0);
    let mut pool: Vec<Run> = (0..restarts * MULTISTART_POOL)
        .map(|_| {
            let (x, y) = random_start(t, &mut rng);
            Run {
                value: t.value_at(&x, &y),
                x,
                y,
            }
        })
        .collect();
    pool.sort_by(|a, b| b.value.total_cmp(&a.value));
    pool.truncate(restarts);
    pool.into_iter()
        .enumerate()
        .map(|(r, run)| {
            let mut rng = seeded_rng(seed, 1 + r as u64);
            ascend(t, run.x, run.y, &mut rng)
        })
        .collect()
}

fn grid_run(t: &BilinearOp, resolution: usize) -> Result<Run> {
    let xs = crate::oracle::sphere_mesh(&t.x_space, resolution)?;
    let ys = crate::oracle::sphere_mesh(&t.y_space, resolution)?;
    let mut best = Run {
        value: f64::NEG_INFINITY,
        x: Vec::new(),
        y: Vec::new(),
    };
    for y in &ys {
        let m = t.matrix_for_y(&y.coords);
        let nx = t.x_space.dim();
        for x in &xs {
            let v = t.z_space.norm_of(&mat_vec(&m, nx, &x.coords));
            if v > best.value {
                best = Run {
                    value: v,
                    x: x.coords.clone(),
                    y: y.coords.clone(),
                };
            }
        }
    }
    Ok(best)
}

fn best_run(runs: &[Run]) -> &Run {
    runs.iter()
        .reduce(|b, r| if r.value > b.value { r } else { b })
        .expect("at least one run")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMethod {
    Alternating,
    Multistart,
    Grid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormOptions {
    pub method: NormMethod,
    pub seed: u64,
    pub restarts: usize,
    pub grid_resolution: usize,
}

impl Default for NormOptions {
    fn default() -> Self {
        NormOptions {
            method: NormMethod::Alternating,
            seed: 0,
            restarts: DEFAULT_RESTARTS,
            grid_resolution: DEFAULT_GRID_RESOLUTION,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub method: NormMethod,
    pub restarts: usize,
    pub seed: u64,
    pub value: f64,
    pub pair: Pair,
}

/// `‖T‖ = sup ‖T(x, y)‖` over unit `x, y`. The alternating and multistart
/// values are lower bounds; the grid is the brute-force reference for
/// factors of dimension at most 3.
pub fn operator_norm(t: &BilinearOp, opts: &NormOptions) -> Result<NormReport> {
    let run = match opts.method {
        NormMethod::Alternating => best_run(&alternating_runs(t, opts.restarts, opts.seed)).clone(),
        NormMethod::Multistart => best_run(&multistart_runs(t, opts.restarts, opts.seed)).clone(),
        NormMethod::Grid => grid_run(t, opts.grid_resolution)?,
    };
    Ok(NormReport {
        method: opts.method,
        restarts: opts.restarts,
        seed: opts.seed,
        value: run.value,
        pair: Pair { x: run.x, y: run.y },
    })
}

/// Clustered sample of `M_T = {(x, y) ∈ S_X × S_Y : ‖T(x, y)‖ = ‖T‖}`,
/// one representative per `(±x, ±y)` orbit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttainmentSet {
    pub norm: f64,
    pub representatives: Vec<Pair>,
    pub cluster_radius: f64,
    pub tol: f64,
}

impl AttainmentSet {
    pub fn count(&self) -> usize {
        self.representatives.len()
    }
}

/// Flips the sign so the first coordinate above `1e-9` in magnitude is
/// positive.
fn sign_fix(v: &mut [f64]) {
    if let Some(first) = v.iter().find(|c| c.abs() > 1e-9) {
        if *first < 0.0 {
            v.iter_mut().for_each(|c| *c = -*c);
        }
    }
}

/// Orbit representative of `(x, y)`: sign-fix `x`, then `y`.
pub fn canonical_pair(x: &[f64], y: &[f64]) -> Pair {
    let mut p = Pair {
        x: x.to_vec(),
        y: y.to_vec(),
    };
    sign_fix(&mut p.x);
    sign_fix(&mut p.y);
    p
}

fn pair_distance(a: &Pair, b: &Pair) -> f64 {
    a.x.iter()
        .zip(&b.x)
        .chain(a.y.iter().zip(&b.y))
        .fold(0.0, |m, (s, t)| m.max((s - t).abs()))
}

/// Harvests the alternating runs finishing within `tol` of `‖T‖`,
/// canonicalizes them and clusters greedily in the max-coordinate distance,
/// taking runs in decreasing value.
pub fn attainment_set(
    t: &BilinearOp,
    opts: &NormOptions,
    tol: f64,
    cluster_radius: f64,
) -> Result<AttainmentSet> {
    let runs = alternating_runs(t, opts.restarts, opts.seed);
    let norm = best_run(&runs).value;
    if norm == 0.0 {
        return domain("the zero operator has no attainment set");
    }
    // Best runs first, so each cluster is represented by its best point.
    let mut near: Vec<&Run> = runs.iter().filter(|r| r.value >= norm - tol).collect();
    near.sort_by(|a, b| b.value.total_cmp(&a.value));
    let mut representatives: Vec<Pair> = Vec::new();
    for run in near {
        let p = canonical_pair(&run.x, &run.y);
        if representatives
            .iter()
            .all(|q| pair_distance(q, &p) > cluster_radius)
        {
            representatives.push(p);
        }
    }
    Ok(AttainmentSet {
        norm,
        representatives,
        cluster_radius,
        tol,
    })
}

/// Pair-based certificate for `T ⊥_B A`: some `(x, y) ∈ M_T` with
/// `A(x, y) ∈ T(x, y)⁺` and some `(u, v) ∈ M_T` with `A(u, v) ∈ T(u, v)⁻`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub holds: bool,
    /// Index of a representative witnessing the positive part.
    pub plus_pair: Option<usize>,
    /// Index of a representative witnessing the negative part.
    pub minus_pair: Option<usize>,
    /// `max ρ₊(T(x,y), A(x,y))` over representatives.
    pub best_plus: f64,
    /// `min ρ₋(T(x,y), A(x,y))` over representatives.
    pub best_minus: f64,
    pub representatives: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorOrthogonality {
    pub norm: f64,
    /// Minimization of `λ ↦ ‖T + λA‖`.
    pub numeric: OrthoVerdict,
    pub certificate: Certificate,
}

struct NormCurve<'a> {
    t: &'a BilinearOp,
    a: &'a BilinearOp,
    warm: RefCell<(Vec<f64>, Vec<f64>)>,
    seed: u64,
}

impl NormCurve<'_> {
    /// `‖T + λA‖`, warm-started from the best pair of the previous call.
    fn eval(&self, lambda: f64) -> f64 {
        let op = self.t.combine_unchecked(lambda, self.a);
        let (wx, wy) = self.warm.borrow().clone();
        let mut rng = seeded_rng(self.seed, INNER_STREAM);
        let mut best = ascend(&op, wx, wy, &mut rng);
        for r in 0..INNER_RESTARTS {
            let mut rng = seeded_rng(self.seed, INNER_STREAM + 1 + r as u64);
            let (x, y) = random_start(&op, &mut rng);
            let run = ascend(&op, x, y, &mut rng);
            if run.value > best.value {
                best = run;
            }
        }
        *self.warm.borrow_mut() = (best.x, best.y);
        best.value
    }
}

fn norm_of_other(a: &BilinearOp, opts: &NormOptions) -> f64 {
    best_run(&alternating_runs(a, opts.restarts, opts.seed)).value
}

/// `T ⊥_B A` in the operator norm, decided two ways: by minimizing
/// `λ ↦ ‖T + λA‖` over `[−(2‖T‖/‖A‖ + 1), 2‖T‖/‖A‖ + 1]`, and by the
/// attainment-pair [`Certificate`].
pub fn is_operator_birkhoff(
    t: &BilinearOp,
    a: &BilinearOp,
    opts: &NormOptions,
    tol: f64,
) -> Result<OperatorOrthogonality> {
    t.same_spaces(a)?;
    let runs = alternating_runs(t, opts.restarts, opts.seed);
    let top = best_run(&runs).clone();
    let trivial = |norm| OperatorOrthogonality {
        norm,
        numeric: OrthoVerdict {
            relation: "operator_birkhoff".into(),
            holds: true,
            witness: None,
            tol,
        },
        certificate: Certificate {
            holds: true,
            plus_pair: None,
            minus_pair: None,
            best_plus: 0.0,
            best_minus: 0.0,
            representatives: 0,
        },
    };
    if a.is_zero() || top.value == 0.0 {
        return Ok(trivial(top.value));
    }
    let na = norm_of_other(a, opts);
    let l = bracket(top.value, na);
    let curve = NormCurve {
        t,
        a,
        warm: RefCell::new((top.x.clone(), top.y.clone())),
        seed: opts.seed,
    };
    let m = golden_section(|s| curve.eval(s), -l, l, LAMBDA_WIDTH);
    let numeric = OrthoVerdict {
        relation: "operator_birkhoff".into(),
        holds: m.value >= top.value - tol,
        witness: Some(Witness::Minimizer {
            lambda: m.arg,
            value: m.value,
        }),
        tol,
    };
    let set = attainment_set(t, opts, ATTAINMENT_TOL, CLUSTER_RADIUS)?;
    Ok(OperatorOrthogonality {
        norm: top.value,
        numeric,
        certificate: certificate(t, a, &set)?,
    })
}

/// Evaluates the attainment-pair conditions with the sign of `ρ±` in `Z`.
pub fn certificate(t: &BilinearOp, a: &BilinearOp, set: &AttainmentSet) -> Result<Certificate> {
    let mut cert = Certificate {
        holds: false,
        plus_pair: None,
        minus_pair: None,
        best_plus: f64::NEG_INFINITY,
        best_minus: f64::INFINITY,
        representatives: set.count(),
    };
    for (idx, p) in set.representatives.iter().enumerate() {
        let z = t.apply_unchecked(&p.x, &p.y);
        let w = a.apply_unchecked(&p.x, &p.y);
        let r = rho(&t.z_space, &z, &w)?;
        if r.rho_plus > cert.best_plus {
            cert.best_plus = r.rho_plus;
        }
        if r.rho_minus < cert.best_minus {
            cert.best_minus = r.rho_minus;
        }
        if cert.plus_pair.is_none() && r.rho_plus >= -CERTIFICATE_TOL {
            cert.plus_pair = Some(idx);
        }
        if cert.minus_pair.is_none() && r.rho_minus <= CERTIFICATE_TOL {
            cert.minus_pair = Some(idx);
        }
    }
    cert.holds = cert.plus_pair.is_some() && cert.minus_pair.is_some();
    Ok(cert)
}

/// Which clause of the norming-sequence characterization certified
/// `T ⊥_B A`, at the `εₙ = 0` limit reached by norming sequences in finite
/// dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormingReport {
    /// Some attainment pair has `‖A(x, y)‖ ≤ tol`.
    pub clause_a: bool,
    /// Attainment pairs put `A(x, y)` in `T(x, y)⁺` and `T(u, v)⁻`, checked by
    /// minimizing `‖T(x,y) + λA(x,y)‖` on each half-line.
    pub clause_b: bool,
    pub certified: bool,
    pub operator_birkhoff: bool,
    pub consistent: bool,
    /// `min_λ ‖T + λA‖ − ‖T‖` from the minimization.
    pub numeric_gap: f64,
    /// Best half-line minima of `‖T(x,y) + λA(x,y)‖ − ‖T(x,y)‖` over
    /// representatives, for `λ ≥ 0` and `λ ≤ 0`.
    pub plus_slack: f64,
    pub minus_slack: f64,
}

pub fn norming_sequence_conditions(
    t: &BilinearOp,
    a: &BilinearOp,
    samples: usize,
    seed: u64,
) -> Result<NormingReport> {
    t.same_spaces(a)?;
    let opts = NormOptions {
        seed,
        restarts: samples.max(1),
        ..NormOptions::default()
    };
    let ortho = is_operator_birkhoff(t, a, &opts, OPERATOR_TOL)?;
    if a.is_zero() || ortho.norm == 0.0 {
        return Ok(NormingReport {
            clause_a: true,
            clause_b: true,
            certified: true,
            operator_birkhoff: ortho.numeric.holds,
            consistent: ortho.numeric.holds,
            numeric_gap: 0.0,
            plus_slack: 0.0,
            minus_slack: 0.0,
        });
    }
    let set = attainment_set(t, &opts, ATTAINMENT_TOL, CLUSTER_RADIUS)?;
    let z_space = &t.z_space;
    let mut clause_a = false;
    let (mut plus_slack, mut minus_slack) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in &set.representatives {
        let z = t.apply_unchecked(&p.x, &p.y);
        let w = a.apply_unchecked(&p.x, &p.y);
        let nw = z_space.norm_of(&w);
        clause_a |= nw <= OPERATOR_TOL;
        if nw == 0.0 {
            plus_slack = plus_slack.max(0.0);
            minus_slack = minus_slack.max(0.0);
            continue;
        }
        let l = bracket(z_space.norm_of(&z), nw);
        let inc = |s: f64| z_space.norm_increment(&z, &w, s);
        plus_slack = plus_slack.max(golden_section(inc, 0.0, l, 1e-12).value);
        minus_slack = minus_slack.max(golden_section(inc, -l, 0.0, 1e-12).value);
    }
    let clause_b = plus_slack >= -OPERATOR_TOL && minus_slack >= -OPERATOR_TOL;
    let numeric_gap = match ortho.numeric.witness {
        Some(Witness::Minimizer { value, .. }) => value - ortho.norm,
        _ => 0.0,
    };
    let certified = clause_a || clause_b;
    Ok(NormingReport {
        clause_a,
        clause_b,
        certified,
        operator_birkhoff: ortho.numeric.holds,
        consistent: certified == ortho.numeric.holds,
        numeric_gap,
        plus_slack,
        minus_slack,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessVerdict {
    pub holds: bool,
    pub representatives: usize,
    /// `T(x₀, y₀)` for the first representative.
    pub z0: Vec<f64>,
    pub z0_smooth: bool,
    pub diagnosis: String,
}

/// `z` is smooth in `space` when `ρ₊(z, e_k) = ρ₋(z, e_k)` on the coordinate
/// basis.
pub fn is_smooth_point(space: &SpaceSpec, z: &[f64]) -> Result<bool> {
    space.check(z)?;
    if space.norm_of(z) == 0.0 {
        return Ok(false);
    }
    for k in 0..space.dim() {
        let mut e = vec![0.0; space.dim()];
        e[k] = 1.0;
        let r = rho(space, z, &e)?;
        if (r.rho_plus - r.rho_minus).abs() > SMOOTH_POINT_TOL {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `T` is a smooth point of the operator space iff `M_T` is a single orbit
/// `{(±x₀, ±y₀)}` and `T(x₀, y₀)` is smooth in `Z`.
pub fn is_operator_smooth(t: &BilinearOp, opts: &NormOptions) -> Result<SmoothnessVerdict> {
    let set = attainment_set(t, opts, ATTAINMENT_TOL, CLUSTER_RADIUS)?;
    let p = &set.representatives[0];
    let z0 = t.apply_unchecked(&p.x, &p.y);
    let z0_smooth = is_smooth_point(&t.z_space, &z0)?;
    let single = set.count() == 1;
    let diagnosis = match (single, z0_smooth) {
        (true, true) => "single attainment orbit and T(x0,y0) is smooth".to_string(),
        (false, _) => format!(
            "attainment set has {} orbits, not a single (+-x0, +-y0)",
            set.count()
        ),
        (true, false) => "T(x0,y0) is not a smooth point of Z".to_string(),
    };
    Ok(SmoothnessVerdict {
        holds: single && z0_smooth,
        representatives: set.count(),
        z0,
        z0_smooth,
        diagnosis,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproxCertificate {
    pub holds: bool,
    pub plus_pair: Option<usize>,
    pub minus_pair: Option<usize>,
    pub representatives: usize,
    /// Best half-line minima of `‖T(x,y) + λA(x,y)‖² − ‖T‖² + 2ε|λ|‖T‖‖A‖`
    /// over representatives, for `λ ≥ 0` and `λ ≤ 0`.
    pub plus_slack: f64,
    pub minus_slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorApprox {
    pub norm: f64,
    pub eps: f64,
    pub numeric: OrthoVerdict,
    pub certificate: ApproxCertificate,
}

/// `T ⊥_B^ε A`: `‖T + λA‖² ≥ ‖T‖² − 2ε|λ|‖T‖‖A‖` for all `λ`.
///
/// Decided as `min_λ √(‖T + λA‖² + 2ε|λ|‖T‖‖A‖) ≥ ‖T‖ − tol`, so that `ε = 0`
/// reproduces [`is_operator_birkhoff`] exactly. The certificate looks for
/// attainment pairs satisfying the inequality on `λ ≥ 0` and on `λ ≤ 0`.
pub fn is_operator_approx_birkhoff(
    t: &BilinearOp,
    a: &BilinearOp,
    eps: f64,
    opts: &NormOptions,
    tol: f64,
) -> Result<OperatorApprox> {
    t.same_spaces(a)?;
    if !(0.0..1.0).contains(&eps) {
        return input(format!("epsilon must lie in [0, 1), got {eps}"));
    }
    let runs = alternating_runs(t, opts.restarts, opts.seed);
    let top = best_run(&runs).clone();
    if a.is_zero() || top.value == 0.0 {
        return Ok(OperatorApprox {
            norm: top.value,
            eps,
            numeric: OrthoVerdict {
                relation: "operator_approx".into(),
                holds: true,
                witness: None,
                tol,
            },
            certificate: ApproxCertificate {
                holds: true,
                plus_pair: None,
                minus_pair: None,
                representatives: 0,
                plus_slack: 0.0,
                minus_slack: 0.0,
            },
        });
    }
    let na = norm_of_other(a, opts);
    let l = bracket(top.value, na);
    let curve = NormCurve {
        t,
        a,
        warm: RefCell::new((top.x.clone(), top.y.clone())),
        seed: opts.seed,
    };
    let slope = 2.0 * eps * top.value * na;
    let phi = |s: f64| {
        let n = curve.eval(s);
        let extra = slope * s.abs();
        if extra == 0.0 {
            n
        } else {
            (n * n + extra).sqrt()
        }
    };
    let m = golden_section(phi, -l, l, LAMBDA_WIDTH);
    let numeric = OrthoVerdict {
        relation: "operator_approx".into(),
        holds: m.value >= top.value - tol,
        witness: Some(Witness::Minimizer {
            lambda: m.arg,
            value: m.value * m.value - top.value * top.value,
        }),
        tol,
    };

    let set = attainment_set(t, opts, ATTAINMENT_TOL, CLUSTER_RADIUS)?;
    let z_space = &t.z_space;
    let mut cert = ApproxCertificate {
        holds: false,
        plus_pair: None,
        minus_pair: None,
        representatives: set.count(),
        plus_slack: f64::NEG_INFINITY,
        minus_slack: f64::NEG_INFINITY,
    };
    let nt = top.value;
    for (idx, p) in set.representatives.iter().enumerate() {
        let z = t.apply_unchecked(&p.x, &p.y);
        let w = a.apply_unchecked(&p.x, &p.y);
        let nz = z_space.norm_of(&z);
        // ‖z + λw‖² − ‖T‖² + 2ε|λ|‖T‖‖A‖, written through the stable increment.
        let g = |s: f64| {
            let d = z_space.norm_increment(&z, &w, s);
            (nz + d).powi(2) - nt * nt + slope * s.abs()
        };
        let floor = -2.0 * nt * tol;
        let plus = golden_section(g, 0.0, l, 1e-12).value;
        let minus = golden_section(g, -l, 0.0, 1e-12).value;
        cert.plus_slack = cert.plus_slack.max(plus);
        cert.minus_slack = cert.minus_slack.max(minus);
        if cert.plus_pair.is_none() && plus >= floor {
            cert.plus_pair = Some(idx);
        }
        if cert.minus_pair.is_none() && minus >= floor {
            cert.minus_pair = Some(idx);
        }
    }
    cert.holds = cert.plus_pair.is_some() && cert.minus_pair.is_some();
    Ok(OperatorApprox {
        norm: nt,
        eps,
        numeric,
        certificate: cert,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn diagonal(s: SpaceSpec) -> BilinearOp {
        let mut c = vec![0.0; 8];
        c[0] = 1.0; // c[0][0][0]
        c[7] = 1.0; // c[1][1][1]
        BilinearOp::from_flat(s.clone(), s.clone(), s, c).unwrap()
    }

    fn single(s: SpaceSpec, k: usize, i: usize, j: usize) -> BilinearOp {
        let mut c = vec![0.0; 8];
        c[(k * 2 + i) * 2 + j] = 1.0;
        BilinearOp::from_flat(s.clone(), s.clone(), s, c).unwrap()
    }

    fn opts() -> NormOptions {
        NormOptions {
            seed: 5,
            ..NormOptions::default()
        }
    }

    #[test]
    fn apply_examples() {
        let t = diagonal(SpaceSpec::l2(2));
        assert_eq!(t.apply(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), vec![1.0, 0.0]);
        assert_eq!(t.apply(&[0.0, 0.0], &[0.3, 0.7]).unwrap(), vec![0.0, 0.0]);
        let s = SpaceSpec::l2(2);
        let r = BilinearOp::rank_one(s.clone(), s.clone(), s, &[1.0, 0.0], &[1.0, 0.0], &[0.0, 1.0])
            .unwrap();
        assert_eq!(r.apply(&[2.0, 0.0], &[3.0, 0.0]).unwrap(), vec![0.0, 6.0]);
        assert!(matches!(t.apply(&[1.0], &[1.0, 0.0]), Err(Error::Input(_))));
    }

    #[test]
    fn construction_checks() {
        let s = SpaceSpec::l2(2);
        assert!(BilinearOp::from_flat(SpaceSpec::l2(1), s.clone(), s.clone(), vec![0.0; 4]).is_err());
        assert!(BilinearOp::new(s.clone(), s.clone(), s, vec![vec![vec![1.0; 2]; 2]; 3]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let t = diagonal(SpaceSpec::linf(2));
        let js = serde_json::to_string(&t).unwrap();
        assert!(js.contains("\"c\":[[[1.0,0.0],[0.0,0.0]],[[0.0,0.0],[0.0,1.0]]]"));
        let back: BilinearOp = serde_json::from_str(&js).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn matrices_agree_with_apply() {
        let s = SpaceSpec::l2(2);
        let t = BilinearOp::from_flat(
            s.clone(),
            s.clone(),
            s,
            vec![1.0, -2.0, 0.5, 3.0, -1.0, 0.0, 2.0, 1.5],
        )
        .unwrap();
        let (x, y) = ([0.3, -0.8], [1.1, 0.4]);
        let z = t.apply(&x, &y).unwrap();
        assert_eq!(mat_vec(&t.matrix_for_y(&y), 2, &x), z);
        let zy = mat_vec(&t.matrix_for_x(&x), 2, &y);
        for (a, b) in z.iter().zip(zy) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn rank_one_norm_factorizes() {
        let s = SpaceSpec::l2(2);
        let f = [0.6, -0.8];
        let t = BilinearOp::rank_one(s.clone(), s.clone(), s, &f, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        let n = operator_norm(&t, &opts()).unwrap();
        assert_abs_diff_eq!(n.value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn diagonal_norms() {
        for s in [SpaceSpec::l2(2), SpaceSpec::linf(2), SpaceSpec::l1(2)] {
            let t = diagonal(s);
            for method in [NormMethod::Alternating, NormMethod::Multistart, NormMethod::Grid] {
                let n = operator_norm(
                    &t,
                    &NormOptions {
                        method,
                        ..opts()
                    },
                )
                .unwrap();
                assert_abs_diff_eq!(n.value, 1.0, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn attainment_examples() {
        let set = attainment_set(&diagonal(SpaceSpec::l2(2)), &opts(), 1e-6, 1e-3).unwrap();
        assert_eq!(set.count(), 2);
        let s = SpaceSpec::l2(2);
        let r = BilinearOp::rank_one(s.clone(), s.clone(), s, &[0.6, 0.8], &[1.0, 0.0], &[1.0, 0.0])
            .unwrap();
        let set = attainment_set(&r, &opts(), 1e-6, 1e-3).unwrap();
        assert_eq!(set.count(), 1);
        assert_abs_diff_eq!(set.representatives[0].x[0], 0.6, epsilon = 1e-9);
        let set = attainment_set(&diagonal(SpaceSpec::linf(2)), &opts(), 1e-6, 1e-3).unwrap();
        assert!(set.count() >= 3, "{}", set.count());
        let s = SpaceSpec::l2(2);
        let zero = BilinearOp::from_flat(s.clone(), s.clone(), s, vec![0.0; 8]).unwrap();
        assert!(matches!(attainment_set(&zero, &opts(), 1e-6, 1e-3), Err(Error::Domain(_))));
    }

    #[test]
    fn canonical_pairs_fold_the_orbit() {
        let a = canonical_pair(&[-0.6, 0.8], &[0.0, -1.0]);
        assert_eq!(a, Pair { x: vec![0.6, -0.8], y: vec![0.0, 1.0] });
        assert_eq!(canonical_pair(&[0.6, -0.8], &[0.0, 1.0]), a);
    }

    #[test]
    fn operator_orthogonality_examples() {
        let s = SpaceSpec::l2(2);
        let t = single(s.clone(), 0, 0, 0);
        let a = single(s.clone(), 0, 1, 1);
        let v = is_operator_birkhoff(&t, &a, &opts(), OPERATOR_TOL).unwrap();
        assert!(v.numeric.holds);
        assert!(v.certificate.holds);
        let r = norming_sequence_conditions(&t, &a, 16, 1).unwrap();
        assert!(r.clause_a && r.consistent);

        let v = is_operator_birkhoff(&t, &t, &opts(), OPERATOR_TOL).unwrap();
        assert!(!v.numeric.holds);
        assert!(!v.certificate.holds);
        let r = norming_sequence_conditions(&t, &t, 16, 1).unwrap();
        assert!(!r.certified && !r.operator_birkhoff && r.consistent);

        // Rank-one A agreeing with T at its only attainment orbit.
        let b = BilinearOp::rank_one(s.clone(), s.clone(), s.clone(), &[1.0, 1.0], &[1.0, 0.0], &[1.0, 0.0])
            .unwrap();
        let v = is_operator_birkhoff(&t, &b, &opts(), OPERATOR_TOL).unwrap();
        assert!(!v.numeric.holds);
        assert!(!v.certificate.holds);
    }

    #[test]
    fn clause_b_certifies_through_orthogonal_values() {
        let s = SpaceSpec::l2(2);
        let t = diagonal(s.clone());
        let a = single(s, 1, 0, 0);
        let r = norming_sequence_conditions(&t, &a, 16, 2).unwrap();
        assert!(r.clause_b && r.operator_birkhoff && r.consistent);
    }

    #[test]
    fn smoothness_fixtures() {
        let s = SpaceSpec::l2(2);
        assert!(is_operator_smooth(&single(s.clone(), 0, 0, 0), &opts()).unwrap().holds);
        let v = is_operator_smooth(&diagonal(s.clone()), &opts()).unwrap();
        assert!(!v.holds);
        assert_eq!(v.representatives, 2);
        let tied = BilinearOp::rank_one(
            s.clone(),
            s,
            SpaceSpec::linf(2),
            &[1.0, 0.0],
            &[1.0, 0.0],
            &[1.0, 1.0],
        )
        .unwrap();
        let v = is_operator_smooth(&tied, &opts()).unwrap();
        assert!(!v.holds);
        assert_eq!(v.representatives, 1);
        assert!(!v.z0_smooth);
    }

    #[test]
    fn approx_examples() {
        let s = SpaceSpec::l2(2);
        let t = single(s.clone(), 0, 0, 0);
        let a = single(s, 0, 1, 1);
        for eps in [0.0, 0.3, 0.7] {
            let v = is_operator_approx_birkhoff(&t, &a, eps, &opts(), OPERATOR_TOL).unwrap();
            assert!(v.numeric.holds && v.certificate.holds, "eps {eps}");
        }
        let v = is_operator_approx_birkhoff(&t, &t, 0.9, &opts(), OPERATOR_TOL).unwrap();
        assert!(!v.numeric.holds && !v.certificate.holds);
        assert!(matches!(
            is_operator_approx_birkhoff(&t, &t, 1.0, &opts(), OPERATOR_TOL),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn smooth_points() {
        assert!(is_smooth_point(&SpaceSpec::l2(2), &[1.0, 0.0]).unwrap());
        assert!(!is_smooth_point(&SpaceSpec::linf(2), &[1.0, 1.0]).unwrap());
        assert!(is_smooth_point(&SpaceSpec::linf(2), &[1.0, 0.5]).unwrap());
        assert!(!is_smooth_point(&SpaceSpec::l1(2), &[1.0, 0.0]).unwrap());
    }
}
