//! Evaluable transforms `R(xi)`, the exact catalog, and the boundary residual
//! `|R(t + L) - R(t - L) - 2|`.

use std::sync::Arc;

use crate::backtrace::Backtracer;
use crate::boundary::{BoundaryMotion, MotionKind};
use crate::error::{Error, Result};
use crate::imr::PiecewiseTransform;
use crate::moore::MooreTransform;

/// Points of the uniform time grid used for rms aggregates over `[0, t_max]`.
pub const RMS_GRID: usize = 2048;

/// Strictly increasing map with a derivative, defined on `domain()`.
pub trait TransformFn: Send + Sync {
    fn value(&self, xi: f64) -> Result<f64>;
    fn derivative(&self, xi: f64) -> Result<f64>;
    /// Closed interval on which the transform may be evaluated.
    fn domain(&self) -> (f64, f64);
}

const LINEAR_V_EPS: f64 = 1e-12;

#[derive(Clone, Debug)]
pub enum Transform {
    /// `R = ln(1 + v xi / L0) / atanh(v)`, or `xi / L0` when `v` vanishes.
    ExactLinear { l0: f64, v: f64 },
    /// `R = A sinh(k (xi - xi0))`.
    ExactSinh { a: f64, k: f64, xi0: f64 },
    Moore(Arc<MooreTransform>),
    Piecewise(Arc<PiecewiseTransform>),
    Backtrace(Arc<Backtracer>),
}

impl Transform {
    /// Closed-form transform paired with `motion`, if one is known.
    pub fn exact_for(motion: &BoundaryMotion) -> Option<Transform> {
        match *motion.kind() {
            MotionKind::Linear { l0, v } => Some(Transform::ExactLinear { l0, v }),
            MotionKind::SinhInverse { a, k, xi0 } => Some(Transform::ExactSinh { a, k, xi0 }),
            _ => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Transform::ExactLinear { .. } | Transform::ExactSinh { .. })
    }

    fn linear_pole(l0: f64, v: f64, xi: f64) -> Result<()> {
        if v.abs() < LINEAR_V_EPS {
            return Ok(());
        }
        let pole = -l0 / v;
        if xi == pole {
            return Err(Error::Singularity { what: "xi", value: xi });
        }
        if (v > 0.0 && xi < pole) || (v < 0.0 && xi > pole) {
            let (lo, hi) = if v > 0.0 { (pole, f64::INFINITY) } else { (f64::NEG_INFINITY, pole) };
            return Err(Error::domain("xi", xi, lo, hi));
        }
        Ok(())
    }
}

impl TransformFn for Transform {
    fn value(&self, xi: f64) -> Result<f64> {
        match self {
            &Transform::ExactLinear { l0, v } => {
                Self::linear_pole(l0, v, xi)?;
                if v.abs() < LINEAR_V_EPS {
                    Ok(xi / l0)
                } else {
                    Ok((v * xi / l0).ln_1p() / v.atanh())
                }
            }
            &Transform::ExactSinh { a, k, xi0 } => Ok(a * (k * (xi - xi0)).sinh()),
            Transform::Moore(m) => m.value(xi),
            Transform::Piecewise(p) => p.value(xi),
            Transform::Backtrace(b) => b.value(xi),
        }
    }

    fn derivative(&self, xi: f64) -> Result<f64> {
        match self {
            &Transform::ExactLinear { l0, v } => {
                Self::linear_pole(l0, v, xi)?;
                if v.abs() < LINEAR_V_EPS {
                    Ok(1.0 / l0)
                } else {
                    Ok(v / ((l0 + v * xi) * v.atanh()))
                }
            }
            &Transform::ExactSinh { a, k, xi0 } => Ok(a * k * (k * (xi - xi0)).cosh()),
            Transform::Moore(m) => m.derivative(xi),
            Transform::Piecewise(p) => p.derivative(xi),
            Transform::Backtrace(b) => b.derivative(xi),
        }
    }

    fn domain(&self) -> (f64, f64) {
        match self {
            &Transform::ExactLinear { l0, v } => {
                if v.abs() < LINEAR_V_EPS {
                    (f64::NEG_INFINITY, f64::INFINITY)
                } else if v > 0.0 {
                    (-l0 / v, f64::INFINITY)
                } else {
                    (f64::NEG_INFINITY, -l0 / v)
                }
            }
            Transform::ExactSinh { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Transform::Moore(m) => m.domain(),
            Transform::Piecewise(p) => p.domain(),
            Transform::Backtrace(b) => b.domain(),
        }
    }
}

/// `|R(t + L(t)) - R(t - L(t)) - 2|`.
pub fn residual_bc_r(r: &dyn TransformFn, motion: &BoundaryMotion, t: f64) -> Result<f64> {
    let l = motion.length(t)?;
    Ok((r.value(t + l)? - r.value(t - l)? - 2.0).abs())
}

/// Uniform grid of `n` times on `[0, t_max]`.
pub fn time_grid(t_max: f64, n: usize) -> impl Iterator<Item = f64> {
    let n = n.max(2);
    (0..n).map(move |i| if i + 1 == n { t_max } else { t_max * i as f64 / (n - 1) as f64 })
}

/// Root mean square of `f(t)` over the [`RMS_GRID`]-point grid on `[0, t_max]`.
pub fn rms_over_time<F: FnMut(f64) -> Result<f64>>(t_max: f64, mut f: F) -> Result<f64> {
    let mut acc = 0.0;
    for t in time_grid(t_max, RMS_GRID) {
        let v = f(t)?;
        acc += v * v;
    }
    Ok((acc / RMS_GRID as f64).sqrt())
}

/// rms of [`residual_bc_r`] over `[0, t_max]`.
pub fn residual_bc_r_rms(r: &dyn TransformFn, motion: &BoundaryMotion) -> Result<f64> {
    rms_over_time(motion.t_max(), |t| residual_bc_r(r, motion, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_values() {
        let lin0 = Transform::ExactLinear { l0: 1.0, v: 0.0 };
        assert_eq!(lin0.value(0.7).unwrap(), 0.7);
        assert_eq!(lin0.derivative(3.0).unwrap(), 1.0);
        let sinh = Transform::ExactSinh { a: 1.0, k: 1.0, xi0: 1.0 };
        assert_eq!(sinh.value(1.0).unwrap(), 0.0);
        assert_eq!(sinh.derivative(1.0).unwrap(), 1.0);
        let lin = Transform::ExactLinear { l0: 0.5, v: 0.3 };
        let expect = 2.0 * 1.3f64.ln() / (13.0f64 / 7.0).ln();
        assert!((lin.value(0.5).unwrap() - expect).abs() < 1e-15);
        assert!((expect - 0.847_650).abs() < 1e-6);
        let d_expect = 2.0 / (13.0f64 / 7.0).ln() * 0.6;
        assert!((lin.derivative(0.0).unwrap() - d_expect).abs() < 1e-14);
        let h = 1e-6;
        let fd = (lin.value(h).unwrap() - lin.value(-h).unwrap()) / (2.0 * h);
        assert!((fd - d_expect).abs() < 1e-8);
    }

    #[test]
    fn linear_pole_and_domain() {
        let lin = Transform::ExactLinear { l0: 0.5, v: 0.25 };
        assert!(matches!(lin.value(-2.0), Err(Error::Singularity { .. })));
        assert!(matches!(lin.value(-3.0), Err(Error::Domain { .. })));
        let shrink = Transform::ExactLinear { l0: 0.5, v: -0.25 };
        assert!(matches!(shrink.derivative(2.0), Err(Error::Singularity { .. })));
        assert!(shrink.value(1.9).is_ok());
    }

    #[test]
    fn backtrace_variant_delegates() {
        use crate::seed::{SeedDegree, SeedPolynomial};
        let m = BoundaryMotion::sinh_inverse(1.0, 1.0, 1.0, 3.0);
        let b = Backtracer::new(SeedPolynomial::for_motion(&m, SeedDegree::Cubic).unwrap(), m.clone()).unwrap();
        let r = Transform::Backtrace(Arc::new(b.clone()));
        assert_eq!(r.domain(), b.domain());
        let (lo, hi) = b.domain();
        for u in [0.0, 0.1, 0.45, 0.8, 1.0] {
            let xi = lo + u * (hi - lo);
            let e = b.eval(xi).unwrap();
            assert_eq!(r.value(xi).unwrap(), e.value);
            assert_eq!(r.derivative(xi).unwrap(), e.derivative);
        }
        assert!(residual_bc_r_rms(&r, &m).unwrap() < 1e-12);
    }

    #[test]
    fn exact_pairs_have_no_residual() {
        let cases = [
            BoundaryMotion::linear(0.5, 0.3, 10.0),
            BoundaryMotion::linear(0.7, -0.05, 10.0),
            BoundaryMotion::constant(1.0, 10.0),
            BoundaryMotion::sinh_inverse(1.0, 1.0, 1.0, 5.0),
            BoundaryMotion::sinh_inverse(2.0, 1.0, 1.0, 5.0),
            BoundaryMotion::sinh_inverse(0.1, 1.0, 1.0, 5.0),
        ];
        for m in &cases {
            let r = Transform::exact_for(m).unwrap();
            for t in time_grid(m.t_max(), 500) {
                let res = residual_bc_r(&r, m, t).unwrap();
                // sinh grows large at late times, so scale by |R|.
                let scale = 1.0 + r.value(t + m.length_at(t)).unwrap().abs();
                assert!(res <= 1e-12 * scale, "{m:?} t={t} res={res}");
            }
        }
        assert!(Transform::exact_for(&BoundaryMotion::exponential(0.5, 1.0)).is_none());
    }

    proptest! {
        #[test]
        fn exact_transforms_are_increasing(
            pairs in proptest::collection::vec((-0.5f64..8.0, -0.5f64..8.0), 10_000)
        ) {
            let ts = [
                Transform::ExactLinear { l0: 0.5, v: 0.3 },
                Transform::ExactSinh { a: 1.0, k: 1.0, xi0: 1.0 },
            ];
            for r in &ts {
                for &(a, b) in &pairs {
                    if a < b {
                        prop_assert!(r.value(a).unwrap() < r.value(b).unwrap());
                    }
                }
            }
        }

        #[test]
        fn derivative_matches_finite_difference(xi in -0.4f64..6.0) {
            let h = 1e-5;
            for r in [
                Transform::ExactLinear { l0: 0.5, v: 0.3 },
                Transform::ExactSinh { a: 1.0, k: 1.0, xi0: 1.0 },
            ] {
                let fd = (r.value(xi + h).unwrap() - r.value(xi - h).unwrap()) / (2.0 * h);
                let d = r.derivative(xi).unwrap();
                prop_assert!((fd - d).abs() <= 1e-6 * d.abs());
            }
        }
    }
}
