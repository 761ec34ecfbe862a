//! Boundary motions `L(t)`, their validation, and the inverse method that
//! recovers `L` from a given transform.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots::sampled_max;
use crate::transform::TransformFn;

/// Shared scalar callback used by custom motions and initial conditions.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Resolution used by the IMR when none is given; validation samples ten
/// times this many points.
pub const DEFAULT_RESOLUTION: f64 = 1000.0;

const WINDOW_SLACK: f64 = 1e-12;

#[derive(Clone)]
pub enum MotionKind {
    /// `L(t) = l0 + v t`.
    Linear { l0: f64, v: f64 },
    /// `L(t) = exp(-k t)`.
    Exponential { k: f64 },
    /// `L(t) = asinh(sech(k (t - xi0)) / a) / k`, the motion whose exact
    /// transform is `a sinh(k (xi - xi0))`.
    SinhInverse { a: f64, k: f64, xi0: f64 },
    /// User-supplied length with an optional analytic derivative.
    Custom {
        length: ScalarFn,
        speed: Option<ScalarFn>,
    },
}

impl fmt::Debug for MotionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MotionKind::Linear { l0, v } => write!(f, "Linear {{ l0: {l0}, v: {v} }}"),
            MotionKind::Exponential { k } => write!(f, "Exponential {{ k: {k} }}"),
            MotionKind::SinhInverse { a, k, xi0 } => {
                write!(f, "SinhInverse {{ a: {a}, k: {k}, xi0: {xi0} }}")
            }
            MotionKind::Custom { speed, .. } => {
                write!(f, "Custom {{ analytic_speed: {} }}", speed.is_some())
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct BoundaryMotion {
    kind: MotionKind,
    t_max: f64,
}

/// Outcome of [`BoundaryMotion::validate`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MotionReport {
    pub max_speed: f64,
    pub t_max_speed: f64,
    pub min_length: f64,
    pub t_min_length: f64,
}

impl BoundaryMotion {
    pub fn new(kind: MotionKind, t_max: f64) -> Self {
        Self { kind, t_max }
    }

    pub fn linear(l0: f64, v: f64, t_max: f64) -> Self {
        Self::new(MotionKind::Linear { l0, v }, t_max)
    }

    /// Fixed wall at `l0`.
    pub fn constant(l0: f64, t_max: f64) -> Self {
        Self::linear(l0, 0.0, t_max)
    }

    pub fn exponential(k: f64, t_max: f64) -> Self {
        Self::new(MotionKind::Exponential { k }, t_max)
    }

    pub fn sinh_inverse(a: f64, k: f64, xi0: f64, t_max: f64) -> Self {
        Self::new(MotionKind::SinhInverse { a, k, xi0 }, t_max)
    }

    pub fn custom(length: ScalarFn, speed: Option<ScalarFn>, t_max: f64) -> Self {
        Self::new(MotionKind::Custom { length, speed }, t_max)
    }

    pub fn kind(&self) -> &MotionKind {
        &self.kind
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    /// Same motion on a different time window.
    pub fn with_t_max(&self, t_max: f64) -> Self {
        Self {
            kind: self.kind.clone(),
            t_max,
        }
    }

    fn check_window(&self, t: f64) -> Result<()> {
        let slack = WINDOW_SLACK * (1.0 + self.t_max.abs());
        if !(t >= -slack && t <= self.t_max + slack) {
            return Err(Error::domain("t", t, 0.0, self.t_max));
        }
        Ok(())
    }

    /// `L(t)` for `t` in `[0, t_max]`.
    pub fn length(&self, t: f64) -> Result<f64> {
        self.check_window(t)?;
        Ok(self.length_at(t))
    }

    /// `L'(t)` for `t` in `[0, t_max]`.
    pub fn speed(&self, t: f64) -> Result<f64> {
        self.check_window(t)?;
        Ok(self.speed_at(t))
    }

    /// `L(0)`.
    pub fn initial_length(&self) -> f64 {
        self.length_at(0.0)
    }

    /// Closed form without the window check.
    pub fn length_at(&self, t: f64) -> f64 {
        match &self.kind {
            MotionKind::Linear { l0, v } => l0 + v * t,
            MotionKind::Exponential { k } => (-k * t).exp(),
            MotionKind::SinhInverse { a, k, xi0 } => {
                let s = 1.0 / (k * (t - xi0)).cosh();
                (s / a).asinh() / k
            }
            MotionKind::Custom { length, .. } => length(t),
        }
    }

    pub fn speed_at(&self, t: f64) -> f64 {
        match &self.kind {
            MotionKind::Linear { v, .. } => *v,
            MotionKind::Exponential { k } => -k * (-k * t).exp(),
            MotionKind::SinhInverse { a, k, xi0 } => {
                let u = k * (t - xi0);
                let s = 1.0 / u.cosh();
                -s * u.tanh() / (a * a + s * s).sqrt()
            }
            MotionKind::Custom { length, speed } => match speed {
                Some(ds) => ds(t),
                None => {
                    let h = self.fd_step();
                    (length(t + h) - length(t - h)) / (2.0 * h)
                }
            },
        }
    }

    /// `L''(t)`; custom motions use finite differences.
    pub fn acceleration_at(&self, t: f64) -> f64 {
        match &self.kind {
            MotionKind::Linear { .. } => 0.0,
            MotionKind::Exponential { k } => k * k * (-k * t).exp(),
            MotionKind::SinhInverse { a, k, xi0 } => {
                let u = k * (t - xi0);
                let s = 1.0 / u.cosh();
                let th = u.tanh();
                let ds = -s * th;
                let dds = s * th * th - s * s * s;
                let q = (a * a + s * s).sqrt();
                k * (dds / q - s * ds * ds / (q * q * q))
            }
            MotionKind::Custom { length, speed } => match speed {
                Some(ds) => {
                    let h = self.fd_step();
                    (ds(t + h) - ds(t - h)) / (2.0 * h)
                }
                None => {
                    // A second difference needs a wider step than the first.
                    let h = (1e-4f64).max(1e-6 * self.t_max);
                    (length(t + h) - 2.0 * length(t) + length(t - h)) / (h * h)
                }
            },
        }
    }

    /// Central-difference step for custom derivatives.
    pub fn fd_step(&self) -> f64 {
        (1e-6f64).max(1e-8 * self.t_max)
    }

    /// Checks `L > 0` and `|L'| < 1` on `[0, t_max]` by dense sampling with
    /// golden-section refinement around the worst samples.
    pub fn validate(&self) -> Result<MotionReport> {
        if !(self.t_max > 0.0) || !self.t_max.is_finite() {
            return Err(Error::InvalidMotion {
                t: self.t_max,
                reason: "t_max must be positive and finite".into(),
            });
        }
        let n = (10.0 * DEFAULT_RESOLUTION) as usize + 1;
        let (t_speed, max_speed) = sampled_max(|t| self.speed_at(t).abs(), 0.0, self.t_max, n);
        let (t_len, neg_min) = sampled_max(|t| -self.length_at(t), 0.0, self.t_max, n);
        let min_length = -neg_min;
        if !min_length.is_finite() || !max_speed.is_finite() {
            return Err(Error::InvalidMotion {
                t: if min_length.is_finite() { t_speed } else { t_len },
                reason: "length or speed is not finite".into(),
            });
        }
        if min_length <= 0.0 {
            return Err(Error::InvalidMotion {
                t: t_len,
                reason: format!("length {min_length} is not positive"),
            });
        }
        if max_speed >= 1.0 - 1e-9 {
            return Err(Error::InvalidMotion {
                t: t_speed,
                reason: format!("boundary speed {max_speed} is not below the wave speed"),
            });
        }
        Ok(MotionReport {
            max_speed,
            t_max_speed: t_speed,
            min_length,
            t_min_length: t_len,
        })
    }

    /// Maximum relative disagreement between a supplied derivative callback
    /// and central differences of the length on `samples` points; `None`
    /// when no derivative callback exists.
    pub fn derivative_consistency(&self, samples: usize) -> Option<f64> {
        let MotionKind::Custom {
            length,
            speed: Some(speed),
        } = &self.kind
        else {
            return None;
        };
        let h = self.fd_step();
        let worst = (0..samples)
            .map(|i| {
                let t = self.t_max * i as f64 / (samples.max(2) - 1) as f64;
                let fd = (length(t + h) - length(t - h)) / (2.0 * h);
                let an = speed(t);
                (fd - an).abs() / an.abs().max(1e-3)
            })
            .fold(0.0, f64::max);
        Some(worst)
    }
}

/// `L` recovered from a transform by the inverse method, on a uniform grid.
#[derive(Clone, Debug)]
pub struct SampledLength {
    pub t: Vec<f64>,
    pub length: Vec<f64>,
    /// Number of RK4 steps of the accepted refinement.
    pub steps: usize,
}

impl SampledLength {
    pub fn max_deviation<F: Fn(f64) -> f64>(&self, reference: F) -> f64 {
        self.t
            .iter()
            .zip(&self.length)
            .map(|(&t, &l)| (l - reference(t)).abs())
            .fold(0.0, f64::max)
    }
}

/// Integrates `L' = (R'(t-L) - R'(t+L)) / (R'(t-L) + R'(t+L))` from `L(0) = l0`
/// with classical RK4, starting at `t_max / 4096` steps and halving the
/// step until two successive solutions agree to `1e-10` in sup-norm.
pub fn recover_length_from_transform(
    transform: &dyn TransformFn,
    l0: f64,
    t_max: f64,
) -> Result<SampledLength> {
    if !(l0 > 0.0) || !(t_max > 0.0) {
        return Err(Error::Precondition("l0 and t_max must be positive".into()));
    }
    let gap = transform.value(l0)? - transform.value(-l0)?;
    if (gap - 2.0).abs() > 1e-8 {
        return Err(Error::Precondition(format!(
            "R(L0) - R(-L0) = {gap}, expected 2"
        )));
    }

    let rhs = |t: f64, l: f64| -> Result<f64> {
        let back = transform.derivative(t - l)?;
        let front = transform.derivative(t + l)?;
        let denom = back + front;
        if denom.abs() < 1e-14 {
            return Err(Error::Singularity { what: "t", value: t });
        }
        Ok((back - front) / denom)
    };

    let integrate = |steps: usize| -> Result<Vec<f64>> {
        let h = t_max / steps as f64;
        let mut out = Vec::with_capacity(steps + 1);
        let mut l = l0;
        out.push(l);
        for i in 0..steps {
            let t = i as f64 * h;
            let k1 = rhs(t, l)?;
            let k2 = rhs(t + 0.5 * h, l + 0.5 * h * k1)?;
            let k3 = rhs(t + 0.5 * h, l + 0.5 * h * k2)?;
            let k4 = rhs(t + h, l + h * k3)?;
            l += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            out.push(l);
        }
        Ok(out)
    };

    const MAX_STEPS: usize = 1 << 22;
    let mut steps = 4096;
    let mut coarse = integrate(steps)?;
    loop {
        let fine = integrate(2 * steps)?;
        let diff = coarse
            .iter()
            .enumerate()
            .map(|(i, c)| (c - fine[2 * i]).abs())
            .fold(0.0, f64::max);
        steps *= 2;
        if diff <= 1e-10 || steps >= MAX_STEPS {
            let h = t_max / steps as f64;
            return Ok(SampledLength {
                t: (0..=steps).map(|i| i as f64 * h).collect(),
                length: fine,
                steps,
            });
        }
        coarse = fine;
    }
}

/// Serialized form of the built-in motion families.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MotionSpec {
    Linear {
        #[serde(rename = "L0", alias = "l0")]
        l0: f64,
        v: f64,
    },
    Exponential {
        k: f64,
    },
    SinhInverse {
        #[serde(rename = "A", alias = "a")]
        a: f64,
        k: f64,
        xi0: f64,
    },
}

/// `{"motion": {...}, "t_max": number}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MotionConfig {
    pub motion: MotionSpec,
    pub t_max: f64,
}

impl MotionSpec {
    pub fn build(&self, t_max: f64) -> BoundaryMotion {
        match *self {
            MotionSpec::Linear { l0, v } => BoundaryMotion::linear(l0, v, t_max),
            MotionSpec::Exponential { k } => BoundaryMotion::exponential(k, t_max),
            MotionSpec::SinhInverse { a, k, xi0 } => BoundaryMotion::sinh_inverse(a, k, xi0, t_max),
        }
    }
}

impl MotionConfig {
    pub fn build(&self) -> BoundaryMotion {
        self.motion.build(self.t_max)
    }
}
