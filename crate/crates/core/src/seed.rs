//! Seed data on the initial interval `[-L0, L0]`.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryMotion;
use crate::error::{Error, Result};

/// Anything that can start the region-by-region extension: a function known
/// on `[-half_width, half_width]`.
pub trait SeedFunction: Send + Sync {
    fn half_width(&self) -> f64;
    fn value_at(&self, xi: f64) -> f64;
    fn derivative_at(&self, xi: f64) -> f64;
    /// The seed as cubic pieces `(left end, [c0, c1, c2, c3])` in the local
    /// variable `xi - left end`, ordered and covering the interval.
    fn cubic_pieces(&self) -> Vec<(f64, [f64; 4])>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum SeedDegree {
    #[serde(rename = "2")]
    Quadratic,
    #[default]
    #[serde(rename = "3")]
    Cubic,
}

impl SeedDegree {
    pub fn from_int(d: u32) -> Result<Self> {
        match d {
            2 => Ok(SeedDegree::Quadratic),
            3 => Ok(SeedDegree::Cubic),
            _ => Err(Error::Config(format!("seed degree must be 2 or 3, got {d}"))),
        }
    }

    pub fn as_int(self) -> u32 {
        match self {
            SeedDegree::Quadratic => 2,
            SeedDegree::Cubic => 3,
        }
    }
}

/// Polynomial `R(xi) = sum a_j s^j` in the shifted variable `s = xi + L0`.
#[derive(Clone, Debug, PartialEq)]
pub struct SeedPolynomial {
    degree: SeedDegree,
    coeffs: [f64; 4],
    l0: f64,
    ldot0: f64,
    lddot0: f64,
}

impl SeedPolynomial {
    /// Builds the seed. The quadratic satisfies the endpoint values and the
    /// first-derivative junction; the cubic also matches second derivatives
    /// across `xi = L0` using `lddot0`.
    pub fn build(l0: f64, ldot0: f64, lddot0: f64, degree: SeedDegree) -> Result<Self> {
        if !(l0 > 0.0) || !l0.is_finite() {
            return Err(Error::Precondition(format!("L0 must be positive, got {l0}")));
        }
        if !(ldot0.abs() < 1.0) {
            return Err(Error::Precondition(format!("|L'(0)| must be below 1, got {ldot0}")));
        }
        let coeffs = match degree {
            SeedDegree::Quadratic => [0.0, (1.0 + ldot0) / l0, -ldot0 / (2.0 * l0 * l0), 0.0],
            SeedDegree::Cubic => {
                if !lddot0.is_finite() {
                    return Err(Error::Precondition("L''(0) must be finite".into()));
                }
                cubic_coefficients(l0, ldot0, lddot0)?
            }
        };
        let seed = Self {
            degree,
            coeffs,
            l0,
            ldot0,
            lddot0: if degree == SeedDegree::Cubic { lddot0 } else { 0.0 },
        };
        seed.check_monotone()?;
        Ok(seed)
    }

    /// Seed for a motion, taking `L(0)`, `L'(0)` and `L''(0)` from it.
    pub fn for_motion(motion: &BoundaryMotion, degree: SeedDegree) -> Result<Self> {
        Self::build(
            motion.initial_length(),
            motion.speed_at(0.0),
            motion.acceleration_at(0.0),
            degree,
        )
    }

    pub fn degree(&self) -> SeedDegree {
        self.degree
    }

    /// Coefficients `a_0..a_3` in `s = xi + L0`.
    pub fn coefficients(&self) -> [f64; 4] {
        self.coeffs
    }

    pub fn l0(&self) -> f64 {
        self.l0
    }

    pub fn ldot0(&self) -> f64 {
        self.ldot0
    }

    pub fn lddot0(&self) -> f64 {
        self.lddot0
    }

    pub fn eval(&self, xi: f64) -> Result<f64> {
        self.check(xi)?;
        Ok(self.value_at(xi))
    }

    pub fn eval_derivative(&self, xi: f64) -> Result<f64> {
        self.check(xi)?;
        Ok(self.derivative_at(xi))
    }

    pub fn second_derivative_at(&self, xi: f64) -> f64 {
        let s = xi + self.l0;
        let [_, _, a2, a3] = self.coeffs;
        2.0 * a2 + 6.0 * a3 * s
    }

    fn check(&self, xi: f64) -> Result<()> {
        let slack = 1e-12 * self.l0;
        if !(xi >= -self.l0 - slack && xi <= self.l0 + slack) {
            return Err(Error::domain("xi", xi, -self.l0, self.l0));
        }
        Ok(())
    }

    fn check_monotone(&self) -> Result<()> {
        let [_, a1, a2, a3] = self.coeffs;
        let w = 2.0 * self.l0;
        // R'(s) = a1 + 2 a2 s + 3 a3 s^2 on [0, w].
        let dr = |s: f64| a1 + 2.0 * a2 * s + 3.0 * a3 * s * s;
        let mut candidates = vec![0.0, w];
        if a3 != 0.0 {
            let s = -a2 / (3.0 * a3);
            if s > 0.0 && s < w {
                candidates.push(s);
            }
        }
        let (s_min, d_min) = candidates
            .into_iter()
            .map(|s| (s, dr(s)))
            .fold((0.0, f64::INFINITY), |acc, c| if c.1 < acc.1 { c } else { acc });
        if d_min > 0.0 {
            return Ok(());
        }
        // Report a zero of R' inside the interval when there is one.
        let roots = quadratic_roots(3.0 * a3, 2.0 * a2, a1);
        let xi = roots
            .into_iter()
            .find(|s| (0.0..=w).contains(s))
            .unwrap_or(s_min)
            - self.l0;
        Err(Error::NonMonotoneSeed { xi })
    }
}

impl SeedFunction for SeedPolynomial {
    fn half_width(&self) -> f64 {
        self.l0
    }

    #[inline]
    fn value_at(&self, xi: f64) -> f64 {
        let s = xi + self.l0;
        let [a0, a1, a2, a3] = self.coeffs;
        a0 + s * (a1 + s * (a2 + s * a3))
    }

    #[inline]
    fn derivative_at(&self, xi: f64) -> f64 {
        let s = xi + self.l0;
        let [_, a1, a2, a3] = self.coeffs;
        a1 + s * (2.0 * a2 + 3.0 * a3 * s)
    }

    fn cubic_pieces(&self) -> Vec<(f64, [f64; 4])> {
        vec![(-self.l0, self.coeffs)]
    }
}

fn cubic_coefficients(l0: f64, ld: f64, ldd: f64) -> Result<[f64; 4]> {
    let w = 2.0 * l0;
    let (p, m) = (1.0 + ld, 1.0 - ld);
    // Rows: R(-L0) = 0; R(L0) = 2;
    // R'(L0)(1+L') - R'(-L0)(1-L') = 0;
    // R''(L0)(1+L')^2 + R'(L0)L'' - R''(-L0)(1-L')^2 + R'(-L0)L'' = 0.
    let a = Matrix4::new(
        1.0,
        0.0,
        0.0,
        0.0,
        1.0,
        w,
        w * w,
        w * w * w,
        0.0,
        p - m,
        2.0 * w * p,
        3.0 * w * w * p,
        0.0,
        2.0 * ldd,
        2.0 * p * p + 2.0 * w * ldd - 2.0 * m * m,
        6.0 * w * p * p + 3.0 * w * w * ldd,
    );
    let b = Vector4::new(0.0, 2.0, 0.0, 0.0);
    let x = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Precondition("cubic seed system is singular".into()))?;
    Ok([x[0], x[1], x[2], x[3]])
}

/// Real roots of `a x^2 + b x + c` (degenerating to linear when `a = 0`).
fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        return if b == 0.0 { vec![] } else { vec![-c / b] };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return vec![];
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let mut r = vec![q / a];
    if q != 0.0 {
        r.push(c / q);
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn junction1(s: &SeedPolynomial) -> f64 {
        let l0 = s.l0();
        s.derivative_at(l0) * (1.0 + s.ldot0()) - s.derivative_at(-l0) * (1.0 - s.ldot0())
    }

    fn junction2(s: &SeedPolynomial) -> f64 {
        let (l0, ld, ldd) = (s.l0(), s.ldot0(), s.lddot0());
        s.second_derivative_at(l0) * (1.0 + ld).powi(2) + s.derivative_at(l0) * ldd
            - s.second_derivative_at(-l0) * (1.0 - ld).powi(2)
            + s.derivative_at(-l0) * ldd
    }

    #[test]
    fn identity_seeds() {
        let q = SeedPolynomial::build(1.0, 0.0, 0.0, SeedDegree::Quadratic).unwrap();
        assert_eq!(q.eval(0.0).unwrap(), 1.0);
        assert_eq!(q.eval(-1.0).unwrap(), 0.0);
        assert_eq!(q.eval(1.0).unwrap(), 2.0);
        let c = SeedPolynomial::build(1.0, 0.0, 0.0, SeedDegree::Cubic).unwrap();
        for xi in [-1.0, -0.3, 0.0, 0.8, 1.0] {
            assert!((c.eval(xi).unwrap() - (xi + 1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn quadratic_example() {
        let q = SeedPolynomial::build(0.5, 0.3, 0.0, SeedDegree::Quadratic).unwrap();
        assert!((q.derivative_at(-0.5) - 2.6).abs() < 1e-14);
        assert!((q.derivative_at(0.5) - 1.4).abs() < 1e-14);
        assert!((1.4f64 * 1.3 - 2.6 * 0.7).abs() < 1e-14);
        // 2.6 * 0.5 - 0.6 * 0.25
        assert!((q.eval(0.0).unwrap() - 1.15).abs() < 1e-14);
    }

    #[test]
    fn out_of_interval() {
        let q = SeedPolynomial::build(0.5, 0.3, 0.0, SeedDegree::Quadratic).unwrap();
        assert!(matches!(q.eval(0.6), Err(Error::Domain { .. })));
    }

    #[test]
    fn non_monotone_cubic_is_rejected() {
        match SeedPolynomial::build(0.5, 0.9, -10.0, SeedDegree::Cubic) {
            Err(Error::NonMonotoneSeed { xi }) => assert!(xi.abs() <= 0.5 + 1e-12),
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn cubic_for_sinh_motion() {
        let m = BoundaryMotion::sinh_inverse(1.0, 1.0, 1.0, 5.0);
        let s = SeedPolynomial::for_motion(&m, SeedDegree::Cubic).unwrap();
        assert!(junction1(&s).abs() < 1e-12);
        assert!(junction2(&s).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn seed_invariants(l0 in 0.05f64..3.0, ld in -0.8f64..0.8, ldd in -0.5f64..0.5, cubic in any::<bool>()) {
            let degree = if cubic { SeedDegree::Cubic } else { SeedDegree::Quadratic };
            let Ok(s) = SeedPolynomial::build(l0, ld, ldd / l0, degree) else { return Ok(()); };
            prop_assert!(s.eval(-l0).unwrap().abs() < 1e-14);
            prop_assert!((s.eval(l0).unwrap() - 2.0).abs() < 1e-12);
            prop_assert!(junction1(&s).abs() < 1e-12 * (1.0 + 1.0 / l0));
            if cubic {
                prop_assert!(junction2(&s).abs() < 1e-12 * (1.0 + 1.0 / (l0 * l0)));
            }
            for i in 0..1000 {
                let xi = -l0 + 2.0 * l0 * i as f64 / 999.0;
                prop_assert!(s.derivative_at(xi) > 0.0);
            }
        }

        #[test]
        fn quadratic_is_always_monotone(l0 in 0.05f64..3.0, ld in -0.99f64..0.99) {
            prop_assert!(SeedPolynomial::build(l0, ld, 0.0, SeedDegree::Quadratic).is_ok());
        }
    }
}
