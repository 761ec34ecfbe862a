//! Scalar root finding and one-dimensional extremum refinement.
//!
//! Every implicit equation in this crate (`t + L(t) = xi`, `t - L(t) = xi`)
//! involves a map that is strictly increasing when `|L'| < 1`, so a
//! bracketing method always applies.

use crate::error::{Error, Result};

const MAX_ITER: usize = 200;

/// Brent's method (inverse quadratic interpolation / secant, safeguarded by
/// bisection) on a sign-changing bracket `[lo, hi]`.
///
/// Terminates when the bracket is narrower than `tol` (absolute).
pub fn brent<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return Err(Error::Bracketing { lo, hi });
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..MAX_ITER {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(m) };
        fb = f(b);
    }
    Ok(b)
}

/// Solves `g(t) = 0` for a strictly increasing `g` with `g(start) <= 0`,
/// searching upward from `start` with a growing step until the root is
/// bracketed or `limit` is reached.
pub fn solve_increasing<F: Fn(f64) -> f64>(
    g: F,
    start: f64,
    initial_step: f64,
    limit: f64,
    tol: f64,
) -> Result<f64> {
    let g0 = g(start);
    if g0 > 0.0 {
        return Err(Error::Bracketing { lo: start, hi: start });
    }
    if g0 == 0.0 {
        return Ok(start);
    }
    let mut lo = start;
    let mut step = initial_step.max(f64::EPSILON * (1.0 + start.abs()));
    loop {
        let hi = (lo + step).min(limit);
        let ghi = g(hi);
        if ghi >= 0.0 {
            return brent(&g, lo, hi, tol);
        }
        if hi >= limit {
            return Err(Error::Bracketing { lo: start, hi: limit });
        }
        lo = hi;
        step *= 2.0;
    }
}

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
/// Returns `(argmax, max)`.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..MAX_ITER {
        if (b - a).abs() <= tol {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Samples `f` on `n` uniform points of `[a, b]`, then refines the best
/// sample by golden-section search on its neighbouring cells.
/// Returns `(argmax, max)`.
pub fn sampled_max<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> (f64, f64) {
    let n = n.max(3);
    let h = (b - a) / (n - 1) as f64;
    let mut best = (a, f(a));
    let mut best_i = 0;
    for i in 1..n {
        let x = if i == n - 1 { b } else { a + i as f64 * h };
        let v = f(x);
        if v > best.1 {
            best = (x, v);
            best_i = i;
        }
    }
    let lo = if best_i == 0 { a } else { a + (best_i - 1) as f64 * h };
    let hi = if best_i + 1 >= n { b } else { a + (best_i + 1) as f64 * h };
    let refined = golden_max(&f, lo, hi, 1e-13 * (1.0 + (b - a).abs()));
    if refined.1 > best.1 {
        refined
    } else {
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_cubic_root() {
        let r = brent(|x| x * x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-13);
    }

    #[test]
    fn brent_rejects_unbracketed() {
        assert!(matches!(
            brent(|x| x * x + 1.0, -1.0, 1.0, 1e-12),
            Err(Error::Bracketing { .. })
        ));
    }

    #[test]
    fn increasing_search_expands_bracket() {
        let r = solve_increasing(|t| t - 0.3 * t - 7.0, 0.0, 0.01, 100.0, 1e-13).unwrap();
        assert!((r - 10.0).abs() < 1e-12);
        assert!(solve_increasing(|t| t - 50.0, 0.0, 0.1, 10.0, 1e-13).is_err());
    }

    #[test]
    fn golden_section_locates_parabola_peak() {
        let (x, v) = golden_max(|x| -(x - 0.3).powi(2) + 1.0, -1.0, 2.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-6);
        assert!((v - 1.0).abs() < 1e-12);
        let (x, _) = sampled_max(|x| (3.0 * x).sin(), 0.0, 2.0, 50);
        assert!((x - std::f64::consts::FRAC_PI_6).abs() < 1e-6);
    }
}
