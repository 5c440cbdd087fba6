//! Golden-section search for convex functions of one real variable.

/// `(3 − √5) / 2`, the fraction of the bracket cut off each step.
const INV_PHI_SQ: f64 = 0.381_966_011_250_105_1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Minimum {
    pub arg: f64,
    pub value: f64,
    pub evaluations: usize,
}

/// Minimizes `f` on `[lo, hi]` until the bracket is narrower than `width`,
/// or than a few ulps of its endpoints when `width` is below float spacing.
///
/// `f` is assumed convex (unimodal suffices). The returned point is the best
/// evaluated point, endpoints included, so `value == f(arg)` exactly.
pub fn golden_section<F>(mut f: F, lo: f64, hi: f64, width: f64) -> Minimum
where
    F: FnMut(f64) -> f64,
{
    debug_assert!(lo <= hi);
    let mut best = Minimum {
        arg: lo,
        value: f(lo),
        evaluations: 1,
    };
    let track = |arg: f64, value: f64, best: &mut Minimum| {
        best.evaluations += 1;
        if value < best.value {
            best.arg = arg;
            best.value = value;
        }
    };
    let fhi = f(hi);
    track(hi, fhi, &mut best);

    let (mut a, mut b) = (lo, hi);
    let mut c = a + INV_PHI_SQ * (b - a);
    let mut d = b - INV_PHI_SQ * (b - a);
    let mut fc = f(c);
    track(c, fc, &mut best);
    let mut fd = f(d);
    track(d, fd, &mut best);

    while b - a > width.max(4.0 * f64::EPSILON * a.abs().max(b.abs())) {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = a + INV_PHI_SQ * (b - a);
            fc = f(c);
            track(c, fc, &mut best);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = b - INV_PHI_SQ * (b - a);
            fd = f(d);
            track(d, fd, &mut best);
        }
    }
    best
}
