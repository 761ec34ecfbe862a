//! Eigenmode expansion `u = sum C_n (e^{-i n pi R(t-x)} - e^{-i n pi R(t+x)})`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::boundary::{BoundaryMotion, ScalarFn};
use crate::error::{Error, Result};
use crate::quadrature::{cumulative, panel_nodes};
use crate::roots::sampled_max;
use crate::spline::CubicSpline;
use crate::transform::{Transform, TransformFn};

/// Absolute tolerance of the coefficient integrals.
pub const QUAD_TOL: f64 = 1e-13;
/// Mode count of reference solutions.
pub const REFERENCE_MODES: usize = 300;
const MAX_LEVEL: usize = 16;
const EPS_IC_SAMPLES: usize = 4096;

/// Displacement `f`, its derivative, velocity `g` and `G(x) = int_0^x g`, all
/// on `[0, L0]`. Odd extensions to `[-L0, 0]` are taken where needed.
#[derive(Clone)]
pub struct InitialCondition {
    name: String,
    l0: f64,
    f: ScalarFn,
    df: ScalarFn,
    g: ScalarFn,
    big_g: ScalarFn,
}

impl fmt::Debug for InitialCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "InitialCondition({}, L0 = {})", self.name, self.l0)
    }
}

impl InitialCondition {
    /// `f = 2 sin(4 pi x / L0)`, `g = -(x / L0) L'(0) f'(x)`.
    pub fn sine(l0: f64, ldot0: f64) -> Self {
        let w = 4.0 * PI / l0;
        let f = move |x: f64| 2.0 * (w * x).sin();
        let df = move |x: f64| 2.0 * w * (w * x).cos();
        // G = -(L'/L0) int_0^x y f'(y) dy = -(L'/L0) (x f - F), F = int_0^x f.
        let big_f = move |x: f64| 2.0 / w * (1.0 - (w * x).cos());
        Self {
            name: "sine".into(),
            l0,
            f: Arc::new(f),
            df: Arc::new(df),
            g: Arc::new(move |x| -(x / l0) * ldot0 * df(x)),
            big_g: Arc::new(move |x| -(ldot0 / l0) * (x * f(x) - big_f(x))),
        }
    }

    /// `f = 2 exp(-((x - L0/2) / (L0/16))^2 / 2)`, `g = 0`.
    pub fn gaussian(l0: f64) -> Self {
        let c = 0.5 * l0;
        let s = l0 / 16.0;
        let f = move |x: f64| 2.0 * (-0.5 * ((x - c) / s).powi(2)).exp();
        Self {
            name: "gaussian".into(),
            l0,
            f: Arc::new(f),
            df: Arc::new(move |x| -f(x) * (x - c) / (s * s)),
            g: Arc::new(|_| 0.0),
            big_g: Arc::new(|_| 0.0),
        }
    }

    pub fn zero(l0: f64) -> Self {
        let z: ScalarFn = Arc::new(|_| 0.0);
        Self {
            name: "zero".into(),
            l0,
            f: z.clone(),
            df: z.clone(),
            g: z.clone(),
            big_g: z,
        }
    }

    /// Named preset for a motion: `sine`, `gaussian` or `zero`.
    pub fn preset(name: &str, motion: &BoundaryMotion) -> Result<Self> {
        let l0 = motion.initial_length();
        match name {
            "sine" => Ok(Self::sine(l0, motion.speed_at(0.0))),
            "gaussian" => Ok(Self::gaussian(l0)),
            "zero" => Ok(Self::zero(l0)),
            other => Err(Error::Config(format!("unknown initial condition preset '{other}'"))),
        }
    }

    /// From callbacks. `G` is tabulated by quadrature when not supplied.
    pub fn from_fns(
        name: &str,
        l0: f64,
        f: ScalarFn,
        df: ScalarFn,
        g: ScalarFn,
        big_g: Option<ScalarFn>,
    ) -> Result<Self> {
        let big_g = match big_g {
            Some(gg) => gg,
            None => {
                let g2 = g.clone();
                let (xs, ys) = cumulative(move |x| g2(x), 0.0, l0, 2048);
                let s = CubicSpline::not_a_knot(&xs, &ys)?;
                Arc::new(move |x| s.eval(x))
            }
        };
        Ok(Self {
            name: name.into(),
            l0,
            f,
            df,
            g,
            big_g,
        })
    }

    /// From samples of `f` and `g` on `[0, L0]`; `f'` comes from the spline.
    pub fn from_samples(name: &str, x: &[f64], f: &[f64], g: &[f64]) -> Result<Self> {
        if x.len() < 4 || x[0].abs() > 1e-12 {
            return Err(Error::Precondition(
                "initial condition samples must start at x = 0 and hold at least 4 points".into(),
            ));
        }
        let l0 = x[x.len() - 1];
        let fs = Arc::new(CubicSpline::not_a_knot(x, f)?);
        let gs = Arc::new(CubicSpline::not_a_knot(x, g)?);
        let (fs1, fs2, gs1) = (fs.clone(), fs, gs.clone());
        Self::from_fns(
            name,
            l0,
            Arc::new(move |x| fs1.eval(x)),
            Arc::new(move |x| fs2.derivative(x)),
            Arc::new(move |x| gs1.eval(x)),
            None,
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn l0(&self) -> f64 {
        self.l0
    }

    pub fn f(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn df(&self, x: f64) -> f64 {
        (self.df)(x)
    }

    pub fn g(&self, x: f64) -> f64 {
        (self.g)(x)
    }

    pub fn big_g(&self, x: f64) -> f64 {
        (self.big_g)(x)
    }

    /// Odd extension of `f` to `[-L0, L0]`.
    pub fn f_odd(&self, xi: f64) -> f64 {
        if xi < 0.0 {
            -self.f(-xi)
        } else {
            self.f(xi)
        }
    }

    /// `f' + g` with `f` and `g` extended oddly.
    pub fn integrand(&self, xi: f64) -> f64 {
        if xi < 0.0 {
            self.df(-xi) - self.g(-xi)
        } else {
            self.df(xi) + self.g(xi)
        }
    }

    /// `w(xi) = (-f(xi) - G(xi)) / 2` on `[-L0, L0]`, with `G` even.
    pub fn w_seed(&self, xi: f64) -> f64 {
        -0.5 * (self.f_odd(xi) + self.big_g(xi.abs()))
    }

    /// `w'(xi) = -(f' + g)(xi) / 2`.
    pub fn w_seed_derivative(&self, xi: f64) -> f64 {
        -0.5 * self.integrand(xi)
    }

    /// `[f(0), g(0), f(L0), g(L0) + L'(0) f'(L0)]`; all vanish for a
    /// compatible condition.
    pub fn compatibility(&self, ldot0: f64) -> [f64; 4] {
        let l0 = self.l0;
        [self.f(0.0), self.g(0.0), self.f(l0), self.g(l0) + ldot0 * self.df(l0)]
    }

    pub fn check_compatible(&self, ldot0: f64, tol: f64) -> Result<()> {
        let c = self.compatibility(ldot0);
        if let Some(v) = c.iter().find(|v| v.abs() > tol) {
            return Err(Error::Precondition(format!(
                "initial condition '{}' violates the compatibility conditions (residual {v})",
                self.name
            )));
        }
        Ok(())
    }
}

/// Quadrature nodes with `(weight_k, weight_g, x, f' + g, R)` for one panel count.
struct NodeLevel {
    nodes: Vec<[f64; 5]>,
}

fn node_level(ic: &InitialCondition, r: &Transform, panels: usize) -> Result<NodeLevel> {
    let l0 = ic.l0();
    let h = 2.0 * l0 / panels as f64;
    let mut nodes = Vec::with_capacity(15 * panels);
    for p in 0..panels {
        let a = -l0 + p as f64 * h;
        let b = if p + 1 == panels { l0 } else { a + h };
        for (x, wk, wg) in panel_nodes(a, b) {
            nodes.push([wk, wg, x, ic.integrand(x), r.value(x)?]);
        }
    }
    Ok(NodeLevel { nodes })
}

/// Kronrod error estimate from `|K - G|` and `int |h|` on one panel.
fn panel_error(diff: f64, abs_int: f64) -> f64 {
    if abs_int > 0.0 && diff > 0.0 {
        abs_int * (200.0 * diff / abs_int).powf(1.5).min(1.0)
    } else {
        diff
    }
}

/// Coefficients `C_n`, `n = ±1..±n_max`, with the transform they refer to.
#[derive(Clone, Debug)]
pub struct ModeExpansion {
    n_max: usize,
    pos: Vec<Complex64>,
    neg: Vec<Complex64>,
    transform: Transform,
    l0: f64,
    /// Set when some integral missed the tolerance at maximum refinement.
    pub warning: Option<String>,
}

/// `C_n = -i / (4 pi n) int_{-L0}^{L0} (f' + g) e^{i pi n R} dx` by composite
/// Gauss–Kronrod panels. The panel count starts proportional to `n` and
/// doubles until the summed error estimate drops below [`QUAD_TOL`].
pub fn compute_coefficients(
    ic: &InitialCondition,
    r: &Transform,
    n_max: usize,
) -> Result<ModeExpansion> {
    let l0 = ic.l0();
    let levels: Vec<OnceLock<std::result::Result<NodeLevel, Error>>> =
        (0..MAX_LEVEL).map(|_| OnceLock::new()).collect();
    let level = |j: usize| -> Result<&NodeLevel> {
        levels[j]
            .get_or_init(|| node_level(ic, r, 1 << j))
            .as_ref()
            .map_err(|e| e.clone())
    };

    let results: Vec<Result<(Complex64, Complex64, bool)>> = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let nf = n as f64;
            let start = (8 + 2 * n).next_power_of_two().trailing_zeros() as usize;
            let mut j = start.min(MAX_LEVEL - 1);
            loop {
                let lv = level(j)?;
                // Sums of (f'+g) cos and (f'+g) sin for the Kronrod and Gauss rules.
                let (mut kc, mut ks) = (0.0, 0.0);
                let (mut err, mut abs_total) = (0.0, 0.0);
                for panel in lv.nodes.chunks_exact(15) {
                    let (mut pkc, mut pks, mut pgc, mut pgs) = (0.0, 0.0, 0.0, 0.0);
                    let mut pabs = 0.0;
                    for &[wk, wg, _, h, rv] in panel {
                        let (s, c) = (PI * nf * rv).sin_cos();
                        pkc += wk * h * c;
                        pks += wk * h * s;
                        pgc += wg * h * c;
                        pgs += wg * h * s;
                        pabs += (wk * h).abs();
                    }
                    err += panel_error((pkc - pgc).hypot(pks - pgs), pabs);
                    abs_total += pabs;
                    kc += pkc;
                    ks += pks;
                }
                // Below the rounding level of the sum itself nothing is gained.
                let converged = err <= QUAD_TOL.max(50.0 * f64::EPSILON * abs_total);
                if converged || j + 1 >= MAX_LEVEL {
                    let scale = 1.0 / (4.0 * PI * nf);
                    // -i (kc + i ks) / (4 pi n) and its counterpart for -n.
                    let cp = Complex64::new(ks * scale, -kc * scale);
                    let cn = Complex64::new(ks * scale, kc * scale);
                    return Ok((cp, cn, converged));
                }
                j += 1;
            }
        })
        .collect();

    let mut pos = Vec::with_capacity(n_max);
    let mut neg = Vec::with_capacity(n_max);
    let mut missed = Vec::new();
    for (i, res) in results.into_iter().enumerate() {
        let (cp, cn, ok) = res?;
        pos.push(cp);
        neg.push(cn);
        if !ok {
            missed.push(i + 1);
        }
    }
    let warning = (!missed.is_empty()).then(|| {
        format!(
            "coefficient quadrature missed tolerance {QUAD_TOL:e} for {} mode(s), first n = {}",
            missed.len(),
            missed[0]
        )
    });
    Ok(ModeExpansion {
        n_max,
        pos,
        neg,
        transform: r.clone(),
        l0,
        warning,
    })
}

impl ModeExpansion {
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn l0(&self) -> f64 {
        self.l0
    }

    pub fn transform(&self) -> &Transform {
        &self.transform
    }

    /// `C_n` for `n != 0`, `|n| <= n_max`.
    pub fn coefficient(&self, n: i64) -> Complex64 {
        let k = n.unsigned_abs() as usize;
        assert!(k >= 1 && k <= self.n_max, "mode index {n} out of range");
        if n > 0 {
            self.pos[k - 1]
        } else {
            self.neg[k - 1]
        }
    }

    /// Same coefficients truncated at `n_max`.
    pub fn truncated(&self, n_max: usize) -> ModeExpansion {
        let n = n_max.min(self.n_max);
        ModeExpansion {
            n_max: n,
            pos: self.pos[..n].to_vec(),
            neg: self.neg[..n].to_vec(),
            transform: self.transform.clone(),
            l0: self.l0,
            warning: self.warning.clone(),
        }
    }

    /// `max |C_{-n} - conj(C_n)|`.
    pub fn conjugate_asymmetry(&self) -> f64 {
        self.pos
            .iter()
            .zip(&self.neg)
            .map(|(p, n)| (n - p.conj()).norm())
            .fold(0.0, f64::max)
    }

    /// `sum_n C_n e^{-i pi n s}` at phase variable `s = R(xi)`.
    fn series_at(&self, s: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 1..=self.n_max {
            let (sn, cs) = (PI * k as f64 * s).sin_cos();
            let e = Complex64::new(cs, -sn);
            acc += self.pos[k - 1] * e + self.neg[k - 1] * e.conj();
        }
        acc
    }

    /// `sum_n C_n (-i pi n) e^{-i pi n s}`.
    fn series_derivative_at(&self, s: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 1..=self.n_max {
            let kf = PI * k as f64;
            let (sn, cs) = (kf * s).sin_cos();
            let e = Complex64::new(cs, -sn);
            let m = Complex64::new(0.0, -kf);
            acc += self.pos[k - 1] * m * e - self.neg[k - 1] * m * e.conj();
        }
        acc
    }

    /// `w(xi) = sum_n C_n e^{-i pi n R(xi)}` (real part).
    pub fn w(&self, xi: f64) -> Result<f64> {
        Ok(self.series_at(self.transform.value(xi)?).re)
    }

    /// `w'(xi)`.
    pub fn w_derivative(&self, xi: f64) -> Result<f64> {
        let s = self.transform.value(xi)?;
        Ok((self.series_derivative_at(s) * self.transform.derivative(xi)?).re)
    }

    /// `u(x, t)` and the imaginary residue of the sum.
    pub fn eval_complex(&self, x: f64, t: f64) -> Result<Complex64> {
        let a = self.transform.value(t - x)?;
        let b = self.transform.value(t + x)?;
        Ok(self.series_at(a) - self.series_at(b))
    }

    /// `u(x, t)`.
    pub fn eval_u(&self, x: f64, t: f64) -> Result<f64> {
        let z = self.eval_complex(x, t)?;
        debug_assert!(z.im.abs() <= 1e-10 * (1.0 + z.re.abs()), "imaginary residue {}", z.im);
        Ok(z.re)
    }
}

/// `max - min` over `[-L0, L0]` of `sum_n C_n e^{-i pi n R} + (f + G) / 2`,
/// the uniform bound on the wave error caused by truncating the series.
pub fn epsilon_ic(exp: &ModeExpansion, ic: &InitialCondition) -> Result<f64> {
    let l0 = ic.l0();
    // Evaluate once to surface domain errors before sampling.
    exp.w(-l0)?;
    exp.w(l0)?;
    let wt = |xi: f64| exp.w(xi).unwrap_or(f64::NAN) + 0.5 * (ic.f_odd(xi) + ic.big_g(xi.abs()));
    let (_, hi) = sampled_max(wt, -l0, l0, EPS_IC_SAMPLES);
    let (_, neg_lo) = sampled_max(|x| -wt(x), -l0, l0, EPS_IC_SAMPLES);
    Ok(hi + neg_lo)
}

/// Band-limited initial condition generated by the modes of `exp`:
/// `f(x) = w(-x) - w(x)`, `g(x) = w'(-x) - w'(x)`, `G(x) = 2 w(0) - w(x) - w(-x)`.
pub fn idealized_initial_condition(exp: &ModeExpansion) -> InitialCondition {
    let e = Arc::new(exp.clone());
    let w = {
        let e = e.clone();
        move |xi: f64| e.w(xi).unwrap_or(f64::NAN)
    };
    let dw = {
        let e = e.clone();
        move |xi: f64| e.w_derivative(xi).unwrap_or(f64::NAN)
    };
    let w0 = w(0.0);
    let (w1, w2, w3) = (w.clone(), w.clone(), w);
    let (d1, d2) = (dw.clone(), dw);
    InitialCondition {
        name: format!("idealized({})", exp.n_max()),
        l0: exp.l0(),
        f: Arc::new(move |x| w1(-x) - w1(x)),
        df: Arc::new(move |x| -d1(-x) - d1(x)),
        g: Arc::new(move |x| d2(-x) - d2(x)),
        big_g: Arc::new(move |x| 2.0 * w0 - w2(x) - w3(-x)),
    }
}

/// A modal solution `u(x, t)`.
#[derive(Clone, Debug)]
pub struct ModalSolution {
    pub expansion: ModeExpansion,
}

impl ModalSolution {
    pub fn new(ic: &InitialCondition, r: &Transform, n_max: usize) -> Result<Self> {
        Ok(Self {
            expansion: compute_coefficients(ic, r, n_max)?,
        })
    }

    pub fn eval(&self, x: f64, t: f64) -> Result<f64> {
        self.expansion.eval_u(x, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::BoundaryMotion;

    fn sinh() -> (BoundaryMotion, Transform) {
        let m = BoundaryMotion::sinh_inverse(1.0, 1.0, 1.0, 5.0);
        let r = Transform::exact_for(&m).unwrap();
        (m, r)
    }

    #[test]
    fn presets_are_compatible() {
        let (m, _) = sinh();
        let l0 = m.initial_length();
        let ld = m.speed_at(0.0);
        InitialCondition::sine(l0, ld).check_compatible(ld, 1e-10).unwrap();
        InitialCondition::gaussian(l0).check_compatible(ld, 1e-10).unwrap();
        let lin = BoundaryMotion::linear(0.5, 0.3, 5.0);
        InitialCondition::sine(0.5, 0.3).check_compatible(0.3, 1e-10).unwrap();
        assert!(InitialCondition::sine(0.5, 0.0).check_compatible(lin.speed_at(0.0), 1e-10).is_err());
    }

    #[test]
    fn sine_antiderivative_matches_quadrature() {
        let ic = InitialCondition::sine(0.7, 0.3);
        let (xs, gs) = cumulative(|x| ic.g(x), 0.0, 0.7, 200);
        for (x, gq) in xs.iter().zip(&gs) {
            assert!((ic.big_g(*x) - gq).abs() < 1e-13);
        }
        let w_left = ic.w_seed(-0.7);
        assert!((w_left - (ic.f(0.7) - ic.big_g(0.7)) / 2.0).abs() < 1e-15);
        assert!((w_left + ic.big_g(0.7) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_condition_gives_zero() {
        let (m, r) = sinh();
        let ic = InitialCondition::zero(m.initial_length());
        let e = compute_coefficients(&ic, &r, 10).unwrap();
        for n in 1..=10 {
            assert_eq!(e.coefficient(n).norm(), 0.0);
        }
        assert_eq!(epsilon_ic(&e, &ic).unwrap(), 0.0);
    }

    #[test]
    fn standing_wave_oracle() {
        let m = BoundaryMotion::constant(1.0, 3.0);
        let r = Transform::exact_for(&m).unwrap();
        let ic = InitialCondition::from_fns(
            "standing",
            1.0,
            Arc::new(|x| 2.0 * (PI * x).sin()),
            Arc::new(|x| 2.0 * PI * (PI * x).cos()),
            Arc::new(|_| 0.0),
            Some(Arc::new(|_| 0.0)),
        )
        .unwrap();
        let e = compute_coefficients(&ic, &r, 6).unwrap();
        for n in 2..=6 {
            assert!(e.coefficient(n).norm() < 1e-14, "n={n}");
        }
        for i in 0..=20 {
            for j in 0..=20 {
                let x = i as f64 / 20.0;
                let t = 3.0 * j as f64 / 20.0;
                let u = e.eval_u(x, t).unwrap();
                assert!((u - 2.0 * (PI * x).sin() * (PI * t).cos()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn structural_properties() {
        let (m, r) = sinh();
        let ic = InitialCondition::gaussian(m.initial_length());
        let e = compute_coefficients(&ic, &r, 40).unwrap();
        assert!(e.warning.is_none());
        assert!(e.conjugate_asymmetry() < 1e-12);
        for t in [0.0, 1.3, 4.9] {
            assert!(e.eval_u(0.0, t).unwrap().abs() <= 1e-14);
            let l = m.length_at(t);
            assert!(e.eval_u(l, t).unwrap().abs() < 1e-12);
            let z = e.eval_complex(0.3 * l, t).unwrap();
            assert!(z.im.abs() < 1e-10);
        }
    }

    #[test]
    fn empty_expansion_bound_is_two_for_gaussian() {
        let (m, r) = sinh();
        let ic = InitialCondition::gaussian(m.initial_length());
        let e = compute_coefficients(&ic, &r, 0).unwrap();
        let eps = epsilon_ic(&e, &ic).unwrap();
        let l0 = m.initial_length();
        let brute = (0..=200_000)
            .map(|i| 0.5 * ic.f_odd(-l0 + 2.0 * l0 * i as f64 / 200_000.0))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        assert!((eps - (brute.1 - brute.0)).abs() < 1e-9);
        assert!((eps - 2.0).abs() < 1e-12);
    }

    #[test]
    fn idealized_condition_is_a_projection() {
        let (m, r) = sinh();
        let ic = InitialCondition::sine(m.initial_length(), m.speed_at(0.0));
        let e = compute_coefficients(&ic, &r, 60).unwrap();
        let ideal = idealized_initial_condition(&e);
        ideal.check_compatible(m.speed_at(0.0), 1e-10).unwrap();
        let e2 = compute_coefficients(&ideal, &r, 60).unwrap();
        let diff = (1..=60i64)
            .map(|n| (e.coefficient(n) - e2.coefficient(n)).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-12, "diff {diff}");
        assert!(epsilon_ic(&e2, &ideal).unwrap() < 1e-13);
        let l0 = m.initial_length();
        for i in 0..=50 {
            let x = l0 * i as f64 / 50.0;
            assert!((e.eval_u(x, 0.0).unwrap() - ideal.f(x)).abs() < 1e-14);
        }
    }
}
