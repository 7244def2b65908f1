//! Golden-section search for one-dimensional minimization.

/// Location and value of a minimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Minimizes a unimodal `f` over `[lo, hi]` to absolute tolerance `xtol`.
///
/// Infinite values are allowed and simply lose every comparison, so `f` may
/// be `+inf` on an infeasible tail of the interval. The endpoints are
/// evaluated as candidates too.
pub fn golden_section_min<F>(mut f: F, lo: f64, hi: f64, xtol: f64) -> Minimum
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while (b - a).abs() > xtol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    let mut best = if f1 <= f2 {
        Minimum { x: x1, value: f1 }
    } else {
        Minimum { x: x2, value: f2 }
    };
    for x in [lo, hi] {
        let v = f(x);
        if v < best.value {
            best = Minimum { x, value: v };
        }
    }
    best
}
