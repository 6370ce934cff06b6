//! Composite quadrature on uniform grids.

/// Composite Simpson rule for samples on a uniform grid with spacing `h`.
///
/// The number of intervals `f.len() - 1` must be even.
pub fn simpson(h: f64, f: &[f64]) -> f64 {
    let n = f.len() - 1;
    debug_assert!(n >= 2 && n % 2 == 0);
    let mut odd = 0.0;
    let mut even = 0.0;
    for k in 1..n {
        if k % 2 == 1 {
            odd += f[k];
        } else {
            even += f[k];
        }
    }
    h / 3.0 * (f[0] + f[n] + 4.0 * odd + 2.0 * even)
}

/// Running integral `I_k = ∫_{x_0}^{x_k} f` on a uniform grid.
///
/// Even nodes use composite Simpson; the first interval uses the three-point
/// parabola rule, so every entry is fourth-order accurate.
pub fn cumulative(h: f64, f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    if n == 2 {
        out[1] = 0.5 * h * (f[0] + f[1]);
        return out;
    }
    out[1] = h / 12.0 * (5.0 * f[0] + 8.0 * f[1] - f[2]);
    for k in 2..n {
        out[k] = out[k - 2] + h / 3.0 * (f[k - 2] + 4.0 * f[k - 1] + f[k]);
    }
    out
}

/// Running integral from each node to the right end, `∫_{x_k}^{x_N} f`.
pub fn cumulative_from_right(h: f64, f: &[f64]) -> Vec<f64> {
    let rev: Vec<f64> = f.iter().rev().copied().collect();
    let mut out = cumulative(h, &rev);
    out.reverse();
    out
}

/// Five-point Gauss–Legendre rule on `[a, b]`.
pub fn gauss5(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    const X: [f64; 5] = [
        -0.906_179_845_938_664,
        -0.538_469_310_105_683_1,
        0.0,
        0.538_469_310_105_683_1,
        0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.236_926_885_056_189_08,
        0.478_628_670_499_366_47,
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_47,
        0.236_926_885_056_189_08,
    ];
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    X.iter().zip(W.iter()).map(|(x, w)| w * f(c + r * x)).sum::<f64>() * r
}
