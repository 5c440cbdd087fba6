//! Cross-module properties on random instances.

use normgeo::bilinear::{
    is_operator_approx_birkhoff, operator_norm, BilinearOp, NormOptions, OPERATOR_TOL,
};
use normgeo::derivatives::rho;
use normgeo::orthogonality::{
    in_negative_part, in_positive_part, is_approx_birkhoff, is_birkhoff, is_strong_birkhoff,
    orthogonality_cone, DEFAULT_TOL,
};
use normgeo::spaces::{random_direction, random_unit, seeded_rng};
use normgeo::SpaceSpec;
use proptest::prelude::*;
use rand::Rng;

/// Decisions closer than this to the boundary are not asserted.
const MARGIN: f64 = 1e-8;

fn families() -> Vec<SpaceSpec> {
    vec![
        SpaceSpec::l1(3),
        SpaceSpec::l2(3),
        SpaceSpec::lp(3.0, 3).unwrap(),
        SpaceSpec::linf(3),
        SpaceSpec::sum_l1(SpaceSpec::l1(2), SpaceSpec::linf(2)),
    ]
}

fn clear_of_boundary(space: &SpaceSpec, x: &[f64], y: &[f64]) -> bool {
    let r = rho(space, x, y).unwrap();
    r.rho_plus.abs() > MARGIN && r.rho_minus.abs() > MARGIN
}

/// `w − (f(w)/f(x)) x` normalized, with `f` supporting `x`: a direction
/// orthogonal to `x` in the sense of James.
fn orthogonal_direction(space: &SpaceSpec, x: &[f64], w: &[f64]) -> Vec<f64> {
    let f = space.supporting_functional(x);
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(s, t)| s * t).sum::<f64>();
    let c = dot(&f, w) / dot(&f, x);
    let y: Vec<f64> = w.iter().zip(x).map(|(a, b)| a - c * b).collect();
    let n = space.norm_of(&y);
    y.iter().map(|v| v / n).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn perp_is_positive_and_negative_part(seed in any::<u64>()) {
        let mut rng = seeded_rng(seed, 0);
        for s in families() {
            let (x, y) = (random_unit(&s, &mut rng), random_direction(&s, &mut rng));
            if !clear_of_boundary(&s, &x, &y) {
                continue;
            }
            let both = in_positive_part(&s, &x, &y).unwrap() && in_negative_part(&s, &x, &y).unwrap();
            prop_assert_eq!(is_birkhoff(&s, &x, &y, DEFAULT_TOL).unwrap().holds, both);
        }
    }

    #[test]
    fn birkhoff_is_homogeneous(seed in any::<u64>()) {
        let mut rng = seeded_rng(seed, 0);
        for s in families() {
            let x = random_unit(&s, &mut rng);
            let w = random_direction(&s, &mut rng);
            let y = if rng.random_bool(0.5) { w } else { orthogonal_direction(&s, &x, &w) };
            if y.iter().any(|c| !c.is_finite()) {
                continue;
            }
            let base = is_birkhoff(&s, &x, &y, DEFAULT_TOL).unwrap().holds;
            for (a, b) in [(0.5, 2.0), (-2.0, 0.5), (2.0, -0.5), (-0.5, -2.0)] {
                let ax: Vec<f64> = x.iter().map(|c| a * c).collect();
                let by: Vec<f64> = y.iter().map(|c| b * c).collect();
                prop_assert_eq!(is_birkhoff(&s, &ax, &by, DEFAULT_TOL).unwrap().holds, base);
            }
        }
    }

    #[test]
    fn strong_implies_plain(seed in any::<u64>()) {
        let mut rng = seeded_rng(seed, 0);
        for s in families() {
            let x = random_unit(&s, &mut rng);
            let y = orthogonal_direction(&s, &x, &random_direction(&s, &mut rng));
            if y.iter().any(|c| !c.is_finite()) {
                continue;
            }
            let strong = is_strong_birkhoff(&s, &x, &y).unwrap().holds;
            let plain = is_birkhoff(&s, &x, &y, DEFAULT_TOL).unwrap().holds;
            prop_assert!(!strong || plain);
            if let SpaceSpec::Lp { .. } = s {
                if !s.is_polyhedral() {
                    prop_assert_eq!(strong, plain);
                }
            }
        }
    }

    #[test]
    fn approx_is_monotone_in_eps(seed in any::<u64>()) {
        let mut rng = seeded_rng(seed, 0);
        for s in families() {
            let (x, y) = (random_unit(&s, &mut rng), random_direction(&s, &mut rng));
            let mut held = false;
            for eps in [0.0, 0.1, 0.3, 0.6, 0.9] {
                let now = is_approx_birkhoff(&s, &x, &y, eps, DEFAULT_TOL).unwrap().holds;
                prop_assert!(!held || now, "lost at eps {}", eps);
                held = now;
            }
        }
    }

    #[test]
    fn cone_combinations_stay_orthogonal(seed in any::<u64>()) {
        let mut rng = seeded_rng(seed, 0);
        for s in [SpaceSpec::l1(2), SpaceSpec::linf(2), SpaceSpec::lp(1.5, 2).unwrap()] {
            let x = random_unit(&s, &mut rng);
            let y = orthogonal_direction(&s, &x, &random_direction(&s, &mut rng));
            let Ok(cone) = orthogonality_cone(&s, &x, &y, 720) else { continue };
            prop_assert!(cone.v1.iter().zip(&cone.v2).any(|(a, b)| (a + b).abs() > 1e-9));
            for _ in 0..20 {
                let (a, b): (f64, f64) = (rng.random(), rng.random());
                let w: Vec<f64> = cone.v1.iter().zip(&cone.v2).map(|(p, q)| a * p + b * q).collect();
                if s.norm_of(&w) < 1e-6 {
                    continue;
                }
                prop_assert!(is_birkhoff(&s, &x, &w, 1e-7).unwrap().holds);
            }
        }
    }
}

fn random_op(rng: &mut impl Rng, z: SpaceSpec) -> BilinearOp {
    let c = (0..8).map(|_| rng.random_range(-1.0..=1.0)).collect();
    BilinearOp::from_flat(SpaceSpec::l2(2), SpaceSpec::linf(2), z, c).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn operator_norm_homogeneous_and_bounding(seed in any::<u64>()) {
        let mut rng = seeded_rng(seed, 0);
        let t = random_op(&mut rng, SpaceSpec::linf(2));
        let opts = NormOptions { seed, ..NormOptions::default() };
        let n = operator_norm(&t, &opts).unwrap().value;
        for alpha in [-3.0, 0.5, 2.0] {
            let m = operator_norm(&t.scaled(alpha), &opts).unwrap().value;
            prop_assert!((m - alpha.abs() * n).abs() <= 1e-8 * (1.0 + m));
        }
        let (xs, ys) = (SpaceSpec::l2(2), SpaceSpec::linf(2));
        for _ in 0..1000 {
            let x: Vec<f64> = (0..2).map(|_| rng.random_range(-3.0..3.0)).collect();
            let y: Vec<f64> = (0..2).map(|_| rng.random_range(-3.0..3.0)).collect();
            let v = t.z_space().norm_of(&t.apply(&x, &y).unwrap());
            prop_assert!(v <= n * xs.norm_of(&x) * ys.norm_of(&y) + 1e-9);
        }
    }

    #[test]
    fn operator_approx_nests(seed in any::<u64>()) {
        let mut rng = seeded_rng(seed, 0);
        let t = random_op(&mut rng, SpaceSpec::l1(2));
        let a = random_op(&mut rng, SpaceSpec::l1(2));
        let opts = NormOptions { seed, ..NormOptions::default() };
        let mut held = false;
        for eps in [0.0, 0.2, 0.5, 0.8] {
            let now = is_operator_approx_birkhoff(&t, &a, eps, &opts, OPERATOR_TOL).unwrap().numeric.holds;
            prop_assert!(!held || now, "lost at eps {}", eps);
            held = now;
        }
    }
}
