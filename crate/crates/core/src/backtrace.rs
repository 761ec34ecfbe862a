//! Reference evaluation of `R` by stepping back through the functional
//! equation until the argument lands in the seed interval.

use rayon::prelude::*;

use crate::boundary::BoundaryMotion;
use crate::error::{Error, Result};
use crate::roots::brent;
use crate::seed::{SeedFunction, SeedPolynomial};
use crate::transform::TransformFn;

const ROOT_TOL: f64 = 1e-13;
const MAX_REFLECTIONS: usize = 1_000_000;

/// Result of one backtraced evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Backtraced {
    pub value: f64,
    pub derivative: f64,
    pub reflections: usize,
}

#[derive(Clone, Debug)]
pub struct Backtracer {
    seed: SeedPolynomial,
    motion: BoundaryMotion,
}

impl Backtracer {
    pub fn new(seed: SeedPolynomial, motion: BoundaryMotion) -> Result<Self> {
        if (seed.l0() - motion.initial_length()).abs() > 1e-12 * (1.0 + seed.l0()) {
            return Err(Error::Precondition("seed half-width differs from L(0)".into()));
        }
        Ok(Self { seed, motion })
    }

    pub fn seed(&self) -> &SeedPolynomial {
        &self.seed
    }

    pub fn motion(&self) -> &BoundaryMotion {
        &self.motion
    }

    /// `R(xi)`, `R'(xi)` and the number of reflections used.
    pub fn eval(&self, xi: f64) -> Result<Backtraced> {
        let l0 = self.seed.l0();
        let t_max = self.motion.t_max();
        let end = t_max + self.motion.length_at(t_max);
        if !(xi >= -l0 - 1e-12 * l0) || xi > end + 1e-10 * (1.0 + end) {
            return Err(Error::domain("xi", xi, -l0, end));
        }
        let mut x = xi;
        let mut count = 0usize;
        let mut slope = 1.0;
        while x > l0 {
            if count >= MAX_REFLECTIONS {
                return Err(Error::NonTermination(count));
            }
            let t = if x >= end {
                t_max
            } else {
                brent(|t| t + self.motion.length_at(t) - x, 0.0, t_max, ROOT_TOL)?
            };
            let ld = self.motion.speed_at(t);
            slope *= (1.0 - ld) / (1.0 + ld);
            x = t - self.motion.length_at(t);
            count += 1;
        }
        let x = x.max(-l0);
        Ok(Backtraced {
            value: self.seed.value_at(x) + 2.0 * count as f64,
            derivative: self.seed.derivative_at(x) * slope,
            reflections: count,
        })
    }

    /// `(value, reflections)` for every point, in parallel.
    pub fn eval_many(&self, xis: &[f64]) -> Result<Vec<(f64, usize)>> {
        xis.par_iter()
            .map(|&x| self.eval(x).map(|b| (b.value, b.reflections)))
            .collect()
    }

    /// Upper bound on reflections for any argument in the window.
    pub fn reflection_bound(&self) -> usize {
        let t_max = self.motion.t_max();
        let n = 10_000;
        let min_len = (0..=n)
            .map(|i| self.motion.length_at(t_max * i as f64 / n as f64))
            .fold(f64::INFINITY, f64::min);
        ((t_max + self.motion.length_at(t_max) + self.seed.l0()) / (2.0 * min_len)).ceil() as usize
    }
}

impl TransformFn for Backtracer {
    fn value(&self, xi: f64) -> Result<f64> {
        Ok(self.eval(xi)?.value)
    }

    fn derivative(&self, xi: f64) -> Result<f64> {
        Ok(self.eval(xi)?.derivative)
    }

    fn domain(&self) -> (f64, f64) {
        let t_max = self.motion.t_max();
        (-self.seed.l0(), t_max + self.motion.length_at(t_max))
    }
}

/// One-shot form of [`Backtracer::eval`]: `(R(xi), reflections)`.
pub fn backtrace_eval(seed: &SeedPolynomial, motion: &BoundaryMotion, xi: f64) -> Result<(f64, usize)> {
    let b = Backtracer::new(seed.clone(), motion.clone())?.eval(xi)?;
    Ok((b.value, b.reflections))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::SeedDegree;
    use crate::transform::{residual_bc_r, time_grid};
    use proptest::prelude::*;

    #[test]
    fn constant_length_one_step() {
        let m = BoundaryMotion::constant(1.0, 10.0);
        let s = SeedPolynomial::build(1.0, 0.0, 0.0, SeedDegree::Quadratic).unwrap();
        let (v, n) = backtrace_eval(&s, &m, 3.0).unwrap();
        assert_eq!(n, 1);
        assert!((v - 4.0).abs() < 1e-13);
        assert_eq!(backtrace_eval(&s, &m, 0.25).unwrap(), (1.25, 0));
    }

    #[test]
    fn linear_two_reflections_by_hand() {
        // L = 0.5 + 0.3 t: t + L = xi gives t = (xi - 0.5) / 1.3 and
        // t - L = 0.7 t - 0.5.
        let m = BoundaryMotion::linear(0.5, 0.3, 10.0);
        let s = SeedPolynomial::build(0.5, 0.3, 0.0, SeedDegree::Quadratic).unwrap();
        let xi = 4.0;
        let t1 = (xi - 0.5) / 1.3;
        let x1 = 0.7 * t1 - 0.5;
        let t2 = (x1 - 0.5) / 1.3;
        let x2 = 0.7 * t2 - 0.5;
        assert!(x1 > 0.5 && x2 <= 0.5);
        let by_hand = s.value_at(x2) + 4.0;
        let (v, n) = backtrace_eval(&s, &m, xi).unwrap();
        assert_eq!(n, 2);
        assert!((v - by_hand).abs() < 1e-12);
    }

    #[test]
    fn backtraced_transform_satisfies_functional_equation() {
        for m in [
            BoundaryMotion::linear(0.5, 0.3, 8.0),
            BoundaryMotion::sinh_inverse(1.0, 1.0, 1.0, 5.0),
        ] {
            let s = SeedPolynomial::for_motion(&m, SeedDegree::Cubic).unwrap();
            let b = Backtracer::new(s, m.clone()).unwrap();
            for t in time_grid(m.t_max(), 300) {
                assert!(residual_bc_r(&b, &m, t).unwrap() <= 1e-12, "t={t}");
            }
        }
    }

    #[test]
    fn derivative_matches_fd() {
        let m = BoundaryMotion::sinh_inverse(1.0, 1.0, 1.0, 4.0);
        let s = SeedPolynomial::for_motion(&m, SeedDegree::Cubic).unwrap();
        let b = Backtracer::new(s, m).unwrap();
        let h = 1e-6;
        for xi in [0.2, 1.3, 2.9, 4.0] {
            let fd = (b.value(xi + h).unwrap() - b.value(xi - h).unwrap()) / (2.0 * h);
            let d = b.derivative(xi).unwrap();
            assert!((fd - d).abs() < 1e-6 * d.abs(), "xi={xi} fd={fd} d={d}");
        }
    }

    proptest! {
        #[test]
        fn reflections_bounded_and_steps_shrink(u in 0.0f64..1.0) {
            let m = BoundaryMotion::sinh_inverse(1.0, 1.0, 1.0, 5.0);
            let s = SeedPolynomial::for_motion(&m, SeedDegree::Cubic).unwrap();
            let b = Backtracer::new(s, m.clone()).unwrap();
            let (lo, hi) = b.domain();
            let xi = lo + u * (hi - lo);
            let r = b.eval(xi).unwrap();
            prop_assert!(r.reflections <= b.reflection_bound());
            // Each step moves back by 2 L(t) >= 2 min L.
            if xi > m.initial_length() {
                let t = brent(|t| t + m.length_at(t) - xi, 0.0, 5.0, 1e-13).unwrap();
                let back = t - m.length_at(t);
                let min_len = (0..=1000).map(|i| m.length_at(5.0 * i as f64 / 1000.0)).fold(f64::INFINITY, f64::min);
                prop_assert!(xi - back >= 2.0 * min_len * (1.0 - 1e-9));
            }
        }
    }
}
