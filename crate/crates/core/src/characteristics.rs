//! Interpolation-based method of characteristics: `u = w(t - x) - w(t + x)`
//! with `w` transported unchanged by `w(t + L) = w(t - L)`.

use std::f64::consts::FRAC_PI_2;

use crate::boundary::BoundaryMotion;
use crate::error::Result;
use crate::imr::{build_time_grid, extend, ImrOptions, KnotPolicy, PiecewiseFunction, TimeGrid};
use crate::modes::InitialCondition;
use crate::seed::SeedFunction;
use crate::spline::CubicSpline;
use crate::transform::rms_over_time;

/// Spline of `w = (-f - G) / 2` on `[-L0, L0]`.
#[derive(Clone, Debug)]
pub struct WSeed {
    spline: CubicSpline,
    l0: f64,
}

impl SeedFunction for WSeed {
    fn half_width(&self) -> f64 {
        self.l0
    }

    #[inline]
    fn value_at(&self, xi: f64) -> f64 {
        self.spline.eval(xi)
    }

    #[inline]
    fn derivative_at(&self, xi: f64) -> f64 {
        self.spline.derivative(xi)
    }

    fn cubic_pieces(&self) -> Vec<(f64, [f64; 4])> {
        self.spline.knots().iter().copied().zip(self.spline.coefficients().iter().copied()).collect()
    }
}

impl WSeed {
    pub fn sample_count(&self) -> usize {
        self.spline.len()
    }
}

/// Samples `w` on `max(512, 16 rho)` points, clustered towards `±L0`.
pub fn seed_w(ic: &InitialCondition, rho: f64) -> Result<WSeed> {
    let l0 = ic.l0();
    let n = (16.0 * rho).max(512.0) as usize;
    let xs: Vec<f64> = (0..n)
        .map(|i| {
            let s = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
            // d xi / d s is smallest at s = ±1.
            (l0 * (0.5 * s + 0.5 * (FRAC_PI_2 * s).sin())).clamp(-l0, l0)
        })
        .collect();
    let ys: Vec<f64> = xs.iter().map(|&x| ic.w_seed(x)).collect();
    Ok(WSeed {
        spline: CubicSpline::not_a_knot(&xs, &ys)?,
        l0,
    })
}

/// The extended `w`.
pub type CharacteristicFunction = PiecewiseFunction<WSeed>;

pub fn extend_w(seed: WSeed, motion: &BoundaryMotion, grid: &TimeGrid, policy: KnotPolicy) -> Result<CharacteristicFunction> {
    extend(seed, motion, grid, 0.0, policy)
}

/// Seed and extension in one call; the seed degree in `opts` is unused.
pub fn build_characteristic(
    motion: &BoundaryMotion,
    ic: &InitialCondition,
    opts: &ImrOptions,
) -> Result<CharacteristicFunction> {
    let seed = seed_w(ic, opts.rho)?;
    let grid = build_time_grid(motion, opts.rho, opts.policy)?;
    extend_w(seed, motion, &grid, opts.policy)
}

impl PiecewiseFunction<WSeed> {
    /// `u(x, t) = w(t - x) - w(t + x)`.
    pub fn eval_u(&self, x: f64, t: f64) -> Result<f64> {
        Ok(self.eval(t - x)? - self.eval(t + x)?)
    }
}

/// `|w(t + L(t)) - w(t - L(t))|`.
pub fn residual_bc_w(w: &CharacteristicFunction, motion: &BoundaryMotion, t: f64) -> Result<f64> {
    let l = motion.length(t)?;
    Ok((w.eval(t + l)? - w.eval(t - l)?).abs())
}

pub fn residual_bc_w_rms(w: &CharacteristicFunction, motion: &BoundaryMotion) -> Result<f64> {
    rms_over_time(motion.t_max(), |t| residual_bc_w(w, motion, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;
    use std::sync::Arc;

    #[test]
    fn zero_condition_stays_zero() {
        let m = BoundaryMotion::sinh_inverse(1.0, 1.0, 1.0, 3.0);
        let ic = InitialCondition::zero(m.initial_length());
        let w = build_characteristic(&m, &ic, &ImrOptions { rho: 50.0, ..Default::default() }).unwrap();
        let (lo, hi) = (-m.initial_length(), w.domain_end());
        for i in 0..100 {
            assert_eq!(w.eval(lo + (hi - lo) * i as f64 / 99.0).unwrap(), 0.0);
        }
        assert_eq!(residual_bc_w_rms(&w, &m).unwrap(), 0.0);
    }

    #[test]
    fn gaussian_seed_is_antisymmetric_copy_of_f() {
        let ic = InitialCondition::gaussian(0.8);
        assert_eq!(seed_w(&ic, 10.0).unwrap().sample_count(), 512);
        let s = seed_w(&ic, 1000.0).unwrap();
        assert_eq!(s.sample_count(), 16000);
        for x in [0.1, 0.35, 0.4, 0.63] {
            assert!((s.value_at(x) + ic.f(x) / 2.0).abs() < 1e-11);
            assert!((s.value_at(-x) - ic.f(x) / 2.0).abs() < 1e-11);
        }
    }

    #[test]
    fn sine_seed_left_end() {
        let m = BoundaryMotion::sinh_inverse(1.0, 1.0, 1.0, 3.0);
        let l0 = m.initial_length();
        let ic = InitialCondition::sine(l0, m.speed_at(0.0));
        let s = seed_w(&ic, 100.0).unwrap();
        assert!((s.value_at(-l0) + ic.big_g(l0) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn standing_pulse_on_fixed_domain() {
        let m = BoundaryMotion::constant(1.0, 4.0);
        let ic = InitialCondition::gaussian(1.0);
        let w = build_characteristic(&m, &ic, &ImrOptions { rho: 1000.0, ..Default::default() }).unwrap();
        // d'Alembert: u = (F(x - t) + F(x + t)) / 2 with F the odd 2-periodic
        // extension of f.
        let fext = |y: f64| {
            let z = y.rem_euclid(2.0);
            if z <= 1.0 {
                ic.f(z)
            } else {
                -ic.f(2.0 - z)
            }
        };
        let mut worst: f64 = 0.0;
        for i in 0..=50 {
            for j in 0..=50 {
                let x = i as f64 / 50.0;
                let t = 4.0 * j as f64 / 50.0;
                let exact = 0.5 * (fext(x - t) + fext(x + t));
                worst = worst.max((w.eval_u(x, t).unwrap() - exact).abs());
            }
        }
        assert!(worst < 1e-9, "worst {worst}");
        for i in 0..=20 {
            let x = i as f64 / 20.0;
            assert!((w.eval_u(x, 2.0).unwrap() - w.eval_u(x, 0.0).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn structural_zero_at_fixed_wall_and_knot_continuity() {
        let m = BoundaryMotion::sinh_inverse(1.0, 1.0, 1.0, 4.0);
        let ic = InitialCondition::sine(m.initial_length(), m.speed_at(0.0));
        let w = build_characteristic(&m, &ic, &ImrOptions { rho: 500.0, ..Default::default() }).unwrap();
        for j in w.knot_jumps() {
            assert!(j < 1e-10);
        }
        for t in [0.0, 1.1, 3.7] {
            assert_eq!(w.eval_u(0.0, t).unwrap(), 0.0);
            let l = m.length_at(t);
            assert!(w.eval_u(l, t).unwrap().abs() <= 2.0 * residual_bc_w(&w, &m, t).unwrap() + 1e-15);
        }
    }

    #[test]
    fn fixed_wall_sine_standing_wave() {
        let m = BoundaryMotion::constant(1.0, 3.0);
        let ic = InitialCondition::from_fns(
            "standing",
            1.0,
            Arc::new(|x| 2.0 * (PI * x).sin()),
            Arc::new(|x| 2.0 * PI * (PI * x).cos()),
            Arc::new(|_| 0.0),
            Some(Arc::new(|_| 0.0)),
        )
        .unwrap();
        let w = build_characteristic(&m, &ic, &ImrOptions { rho: 1000.0, ..Default::default() }).unwrap();
        for i in 0..=10 {
            for j in 0..=10 {
                let (x, t) = (i as f64 / 10.0, 0.3 * j as f64);
                let u = w.eval_u(x, t).unwrap();
                assert!((u - 2.0 * (PI * x).sin() * (PI * t).cos()).abs() < 1e-10);
            }
        }
    }
}
