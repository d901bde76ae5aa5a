//! Adaptive Gauss-Kronrod quadrature and expectations over exponential laws.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::QuadratureError;

/// Absolute error target used by [`expectation_quadrature`].
pub const EXPECTATION_ABS_TOL: f64 = 1e-13;
/// Relative error target used by [`expectation_quadrature`].
pub const EXPECTATION_REL_TOL: f64 = 1e-13;
const MAX_INTERVALS: usize = 4000;

// 15-point Kronrod abscissae on [-1, 1] (nonnegative half) with weights; the
// odd entries are the 7-point Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
) -> Result<Segment, QuadratureError> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    if !fc.is_finite() {
        return Err(QuadratureError::NonFinite(center));
    }
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (j, (&x, &w)) in XGK[..7].iter().zip(&WGK[..7]).enumerate() {
        let dx = half * x;
        let (x1, x2) = (center - dx, center + dx);
        let (f1, f2) = (f(x1), f(x2));
        if !f1.is_finite() {
            return Err(QuadratureError::NonFinite(x1));
        }
        if !f2.is_finite() {
            return Err(QuadratureError::NonFinite(x2));
        }
        kronrod += w * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    Ok(Segment {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    })
}

/// Integrates `f` over the finite interval `[a, b]`, bisecting the segment
/// with the largest error estimate until the summed estimate falls below
/// `max(abs_tol, rel_tol * |I|)`.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64, QuadratureError> {
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(QuadratureError::Domain(format!("[{a}, {b}]")));
    }
    if a == b {
        return Ok(0.0);
    }
    let mut heap = BinaryHeap::new();
    let first = gauss_kronrod(&mut f, a, b)?;
    let mut value = first.value;
    let mut error = first.error;
    heap.push(first);
    while error > abs_tol.max(rel_tol * value.abs()) {
        if heap.len() >= MAX_INTERVALS {
            return Err(QuadratureError::NotConverged {
                estimate: value,
                error,
                intervals: heap.len(),
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Segment cannot be split further in floating point.
            return Err(QuadratureError::NotConverged {
                estimate: value,
                error,
                intervals: heap.len() + 1,
            });
        }
        let left = gauss_kronrod(&mut f, worst.a, mid)?;
        let right = gauss_kronrod(&mut f, mid, worst.b)?;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // Re-sum to drop drift from the incremental updates.
    Ok(heap.iter().map(|s| s.value).sum())
}

/// `∫_lower^∞ f(γ) e^{-γ/m} / m dγ`, i.e. `E[f(γ); γ > lower]` for an
/// exponential `γ` with mean `m`.
///
/// The tail is shifted to the origin and mapped onto `[0, 1)` through
/// `t = u / (1 - u)`, which keeps the integrand bounded for any `f` growing
/// slower than `e^{γ/m}`.
pub fn expectation_quadrature<F: Fn(f64) -> f64>(
    f: F,
    mean: f64,
    lower: f64,
) -> Result<f64, QuadratureError> {
    if !(mean > 0.0 && mean.is_finite()) {
        return Err(QuadratureError::Domain(format!("mean {mean}")));
    }
    if !(lower >= 0.0 && lower.is_finite()) {
        return Err(QuadratureError::Domain(format!("lower bound {lower}")));
    }
    let scale = (-lower / mean).exp();
    if scale == 0.0 {
        return Ok(0.0);
    }
    let integrand = |u: f64| {
        let one_minus = 1.0 - u;
        let t = u / one_minus;
        let decay = (-t).exp();
        if decay == 0.0 {
            return 0.0;
        }
        f(lower + mean * t) * decay / (one_minus * one_minus)
    };
    let inner = integrate(
        integrand,
        0.0,
        1.0,
        EXPECTATION_ABS_TOL / scale,
        EXPECTATION_REL_TOL,
    )?;
    Ok(scale * inner)
}

/// `E[f(G); G > lower]` where `G` is the maximum of `count` i.i.d. exponential
/// variables with the given mean.
pub fn expectation_max_of_exponentials<F: Fn(f64) -> f64>(
    f: F,
    mean: f64,
    count: usize,
    lower: f64,
) -> Result<f64, QuadratureError> {
    if count == 0 {
        return Err(QuadratureError::Domain("maximum of zero variables".into()));
    }
    let m = count as f64;
    let exponent = (count - 1) as i32;
    // Density of the maximum relative to a single exponential density.
    expectation_quadrature(
        |g| f(g) * m * (-(-g / mean).exp_m1()).powi(exponent),
        mean,
        lower,
    )
}
