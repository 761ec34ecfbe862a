//! Composite Gauss–Kronrod (7/15) quadrature.

/// Kronrod abscissae on [-1, 1] (positive half, descending; last is 0).
pub const GK15_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

pub const GK15_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

/// Gauss weights for the embedded 7-point rule, attached to Kronrod nodes
/// 1, 3, 5 and 7.
pub const G7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// The 15 nodes of one panel `[a, b]` with their Kronrod and Gauss weights
/// (Gauss weight zero on Kronrod-only nodes).
pub fn panel_nodes(a: f64, b: f64) -> [(f64, f64, f64); 15] {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let mut out = [(0.0, 0.0, 0.0); 15];
    for j in 0..7 {
        let gw = if j % 2 == 1 { G7_WEIGHTS[j / 2] } else { 0.0 };
        out[2 * j] = (c - r * GK15_NODES[j], r * GK15_WEIGHTS[j], r * gw);
        out[2 * j + 1] = (c + r * GK15_NODES[j], r * GK15_WEIGHTS[j], r * gw);
    }
    out[14] = (c, r * GK15_WEIGHTS[7], r * G7_WEIGHTS[3]);
    out
}

/// Kronrod estimate and `|K - G|` error estimate on `[a, b]`.
pub fn gk15<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> (f64, f64) {
    let mut k = 0.0;
    let mut g = 0.0;
    for (x, wk, wg) in panel_nodes(a, b) {
        let v = f(x);
        k += wk * v;
        g += wg * v;
    }
    (k, (k - g).abs())
}

/// Composite rule on `panels` equal panels.
pub fn composite<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> (f64, f64) {
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    let mut err = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let hi = if p + 1 == panels { b } else { lo + h };
        let (v, e) = gk15(&f, lo, hi);
        total += v;
        err += e;
    }
    (total, err)
}

/// Doubles the panel count from `initial_panels` until the summed error
/// estimate drops below `tol`. Returns `(value, error_estimate, converged)`.
pub fn adaptive<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
    initial_panels: usize,
    max_doublings: usize,
) -> (f64, f64, bool) {
    let mut panels = initial_panels.max(1);
    let mut last = composite(&f, a, b, panels);
    for _ in 0..max_doublings {
        if last.1 <= tol {
            return (last.0, last.1, true);
        }
        panels *= 2;
        last = composite(&f, a, b, panels);
    }
    (last.0, last.1, last.1 <= tol)
}

/// Antiderivative `F(x) = \int_a^x f` tabulated at `n + 1` uniform points,
/// each cell integrated with one Gauss–Kronrod panel.
pub fn cumulative<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let n = n.max(1);
    let h = (b - a) / n as f64;
    let mut xs = Vec::with_capacity(n + 1);
    let mut acc = Vec::with_capacity(n + 1);
    let mut total = 0.0;
    xs.push(a);
    acc.push(0.0);
    for i in 0..n {
        let lo = a + i as f64 * h;
        let hi = if i + 1 == n { b } else { lo + h };
        total += gk15(&f, lo, hi).0;
        xs.push(hi);
        acc.push(total);
    }
    (xs, acc)
}
