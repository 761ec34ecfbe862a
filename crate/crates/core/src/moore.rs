//! Moore's perturbation series for the linear and exponential families.

use std::sync::Arc;

use astro_float::{BigFloat, Consts, RoundingMode, Sign};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::boundary::{BoundaryMotion, MotionKind};
use crate::error::{Error, Result};
use crate::transform::{time_grid, TransformFn, RMS_GRID};

/// Default upper end of the truncation scan.
pub const DEFAULT_SCAN: usize = 40;

/// Working precision, in bits, of the extended-precision residual scan.
const PRECISE_BITS: usize = 192;
const RM: RoundingMode = RoundingMode::ToEven;

/// Real number stored as a sign and the logarithm of its magnitude.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignedLog {
    /// `-1`, `0` or `1`.
    pub sign: f64,
    pub ln_abs: f64,
}

impl SignedLog {
    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self { sign: 0.0, ln_abs: f64::NEG_INFINITY }
        } else {
            Self { sign: x.signum(), ln_abs: x.abs().ln() }
        }
    }

    /// Value as a double; overflows to infinity for very large magnitudes.
    pub fn value(&self) -> f64 {
        if self.sign == 0.0 {
            0.0
        } else {
            self.sign * self.ln_abs.exp()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MooreFamily {
    Linear { l0: f64, v: f64 },
    Exponential { k: f64 },
}

/// Coefficient tables for `n_terms + 1` terms (`l = 0..=n_terms`).
#[derive(Clone, Debug)]
pub struct MooreSeries {
    family: MooreFamily,
    c: Vec<SignedLog>,
    c_tilde: Vec<SignedLog>,
}

/// `c_l = -sum_{i=1}^{l} c_{l-i} / (2i + 1)`, `c_0 = 1`.
pub fn linear_coefficients(n: usize) -> Vec<f64> {
    let mut c = Vec::with_capacity(n + 1);
    c.push(1.0);
    for l in 1..=n {
        let s: f64 = (1..=l).map(|i| c[l - i] / (2 * i + 1) as f64).sum();
        c.push(-s);
    }
    c
}

/// Exponential-family tables `(c~_l, c_l)` for `l = 0..=n`, computed in
/// extended precision and returned in sign/log form.
pub fn exponential_coefficients(n: usize) -> (Vec<SignedLog>, Vec<SignedLog>) {
    let (ct, c) = exponential_coefficients_precise(n, PRECISE_BITS + 64);
    let mut cc = consts();
    let to_log = |x: &BigFloat, cc: &mut Consts| signed_log(x, cc);
    let ct_log = ct.iter().map(|x| to_log(x, &mut cc)).collect();
    let c_log = c.iter().map(|x| to_log(x, &mut cc)).collect();
    (ct_log, c_log)
}

/// `c~_0 = 1`,
/// `c~_l = sum_{i=1}^{l} ((2l-2i-1)/(2l-1))^{2l-1} (-1)^{i+1} / (2i+1)! c~_{l-i}`,
/// and `c_l = (-1)^{l+1} (2l-1)^{2l-1} c~_l`.
fn exponential_coefficients_precise(n: usize, p: usize) -> (Vec<BigFloat>, Vec<BigFloat>) {
    let mut fact = vec![BigFloat::from_u64(1, p)];
    for j in 1..(2 * n + 2) {
        let f = fact[j - 1].mul(&BigFloat::from_u64(j as u64, p), p, RM);
        fact.push(f);
    }
    let mut ct = vec![BigFloat::from_u64(1, p)];
    for l in 1..=n {
        let denom = BigFloat::from_u64((2 * l - 1) as u64, p);
        let mut s = BigFloat::from_u64(0, p);
        for i in 1..=l {
            let num = BigFloat::from_i64(2 * l as i64 - 2 * i as i64 - 1, p);
            let pw = num.div(&denom, p, RM).powi(2 * l - 1, p, RM);
            let mut term = pw.div(&fact[2 * i + 1], p, RM).mul(&ct[l - i], p, RM);
            if i % 2 == 0 {
                term = term.neg();
            }
            s = s.add(&term, p, RM);
        }
        ct.push(s);
    }
    let mut c = vec![BigFloat::from_u64(1, p)];
    for l in 1..=n {
        let scale = BigFloat::from_u64((2 * l - 1) as u64, p).powi(2 * l - 1, p, RM);
        let mut v = scale.mul(&ct[l], p, RM);
        if l % 2 == 0 {
            v = v.neg();
        }
        c.push(v);
    }
    (ct, c)
}

fn consts() -> Consts {
    Consts::new().expect("constant cache allocation")
}

/// Nearest double to `x`, from the top mantissa word.
pub(crate) fn big_to_f64(x: &BigFloat) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x.is_inf_pos() {
        return f64::INFINITY;
    }
    if x.is_inf_neg() {
        return f64::NEG_INFINITY;
    }
    if x.is_zero() {
        return 0.0;
    }
    let Some((words, _, sign, exponent, _)) = x.as_raw_parts() else {
        return f64::NAN;
    };
    // Value is 0.m * 2^e with the most significant word last.
    let top = words[words.len() - 1] as f64;
    let next = if words.len() > 1 { words[words.len() - 2] as f64 } else { 0.0 };
    let frac = (top + next * 2f64.powi(-64)) * 2f64.powi(-64);
    let e = exponent as i32;
    let mag = if e.abs() < 1000 {
        frac * 2f64.powi(e)
    } else {
        let half = e / 2;
        frac * 2f64.powi(half) * 2f64.powi(e - half)
    };
    if sign == Sign::Neg {
        -mag
    } else {
        mag
    }
}

fn signed_log(x: &BigFloat, cc: &mut Consts) -> SignedLog {
    if x.is_zero() {
        return SignedLog { sign: 0.0, ln_abs: f64::NEG_INFINITY };
    }
    let sign = if x.is_negative() { -1.0 } else { 1.0 };
    let ln_abs = big_to_f64(&x.abs().ln(PRECISE_BITS, RM, cc));
    SignedLog { sign, ln_abs }
}

impl MooreSeries {
    pub fn linear(l0: f64, v: f64, n_terms: usize) -> Result<Self> {
        if !(l0 > 0.0) || !(v.abs() < 1.0) {
            return Err(Error::Precondition(format!(
                "linear family needs L0 > 0 and |v| < 1, got L0 = {l0}, v = {v}"
            )));
        }
        let c = linear_coefficients(n_terms).into_iter().map(SignedLog::from_f64).collect();
        Ok(Self {
            family: MooreFamily::Linear { l0, v },
            c,
            c_tilde: Vec::new(),
        })
    }

    pub fn exponential(k: f64, n_terms: usize) -> Result<Self> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::Precondition(format!("exponential family needs k > 0, got {k}")));
        }
        let (c_tilde, c) = exponential_coefficients(n_terms);
        Ok(Self {
            family: MooreFamily::Exponential { k },
            c,
            c_tilde,
        })
    }

    /// Series for a motion of a supported family.
    pub fn for_motion(motion: &BoundaryMotion, n_terms: usize) -> Result<Self> {
        match *motion.kind() {
            MotionKind::Linear { l0, v } => Self::linear(l0, v, n_terms),
            MotionKind::Exponential { k } => Self::exponential(k, n_terms),
            _ => Err(Error::Unsupported(
                "Moore series are available for linear and exponential motions only".into(),
            )),
        }
    }

    pub fn family(&self) -> MooreFamily {
        self.family
    }

    /// Highest available term index.
    pub fn n_terms(&self) -> usize {
        self.c.len() - 1
    }

    pub fn coefficients(&self) -> &[SignedLog] {
        &self.c
    }

    /// `c~_l` for the exponential family; empty for the linear family.
    pub fn scaled_coefficients(&self) -> &[SignedLog] {
        &self.c_tilde
    }

    /// The motion that this series approximates, on `[0, t_max]`.
    pub fn motion(&self, t_max: f64) -> BoundaryMotion {
        match self.family {
            MooreFamily::Linear { l0, v } => BoundaryMotion::linear(l0, v, t_max),
            MooreFamily::Exponential { k } => BoundaryMotion::exponential(k, t_max),
        }
    }

    fn check_xi(&self, xi: f64) -> Result<()> {
        if let MooreFamily::Linear { l0, v } = self.family {
            let arg = 1.0 + v * xi / l0;
            if !(arg > 0.0) {
                let pole = -l0 / v;
                let (lo, hi) = if v > 0.0 { (pole, f64::INFINITY) } else { (f64::NEG_INFINITY, pole) };
                return Err(Error::domain("xi", xi, lo, hi));
            }
        }
        Ok(())
    }

    /// Term `alpha_l(xi)` in sign/log form.
    pub fn term_log(&self, l: usize, xi: f64) -> Result<SignedLog> {
        self.check_xi(xi)?;
        let c = self.c[l];
        if c.sign == 0.0 {
            return Ok(SignedLog::from_f64(0.0));
        }
        match self.family {
            MooreFamily::Linear { l0, v } => {
                // ln(1 + v xi / L0) v^{2l-1} = [ln(1 + v xi / L0) / v] v^{2l}
                let base = if v.abs() < 1e-12 {
                    xi / l0
                } else {
                    (v * xi / l0).ln_1p() / v
                };
                if l > 0 && v == 0.0 {
                    return Ok(SignedLog::from_f64(0.0));
                }
                let b = SignedLog::from_f64(base);
                if b.sign == 0.0 {
                    return Ok(b);
                }
                let ln_v = if l == 0 { 0.0 } else { 2.0 * l as f64 * v.abs().ln() };
                Ok(SignedLog {
                    sign: c.sign * b.sign,
                    ln_abs: c.ln_abs + b.ln_abs + ln_v,
                })
            }
            MooreFamily::Exponential { k } => {
                let m = 1.0 - 2.0 * l as f64;
                let em1 = (m * k * xi).exp_m1();
                let f = SignedLog::from_f64(em1 / m);
                if f.sign == 0.0 {
                    return Ok(f);
                }
                Ok(SignedLog {
                    sign: c.sign * f.sign,
                    ln_abs: c.ln_abs + (2.0 * l as f64 - 1.0) * k.ln() + f.ln_abs,
                })
            }
        }
    }

    pub fn term(&self, l: usize, xi: f64) -> Result<f64> {
        Ok(self.term_log(l, xi)?.value())
    }

    /// `d alpha_l / d xi`.
    pub fn term_derivative(&self, l: usize, xi: f64) -> Result<f64> {
        self.check_xi(xi)?;
        let c = self.c[l];
        if c.sign == 0.0 {
            return Ok(0.0);
        }
        match self.family {
            MooreFamily::Linear { l0, v } => {
                let vp = if l == 0 { 1.0 } else { v.powi(2 * l as i32) };
                Ok(c.value() * vp / (l0 + v * xi))
            }
            MooreFamily::Exponential { k } => {
                let m = 1.0 - 2.0 * l as f64;
                let ln_abs = c.ln_abs + 2.0 * l as f64 * k.ln() + m * k * xi;
                Ok(c.sign * ln_abs.exp())
            }
        }
    }

    fn check_n(&self, n: usize) -> Result<()> {
        if n > self.n_terms() {
            return Err(Error::Precondition(format!(
                "truncation order {n} exceeds the {} computed terms",
                self.n_terms()
            )));
        }
        Ok(())
    }

    /// `R_n(xi) = sum_{l=0}^{n} alpha_l(xi)` and the magnitudes `|alpha_l(xi)|`.
    pub fn truncated(&self, n: usize, xi: f64) -> Result<(f64, Vec<f64>)> {
        self.check_n(n)?;
        let mut sum = 0.0;
        let mut mags = Vec::with_capacity(n + 1);
        for l in 0..=n {
            let a = self.term(l, xi)?;
            sum += a;
            mags.push(a.abs());
        }
        Ok((sum, mags))
    }

    pub fn truncated_value(&self, n: usize, xi: f64) -> Result<f64> {
        self.check_n(n)?;
        (0..=n).map(|l| self.term(l, xi)).sum()
    }

    pub fn truncated_derivative(&self, n: usize, xi: f64) -> Result<f64> {
        self.check_n(n)?;
        (0..=n).map(|l| self.term_derivative(l, xi)).sum()
    }

    /// `ln|alpha_l(xi)|` for `l = 0..=n_terms`.
    pub fn term_log_magnitudes(&self, xi: f64) -> Result<Vec<f64>> {
        (0..=self.n_terms()).map(|l| Ok(self.term_log(l, xi)?.ln_abs)).collect()
    }

    /// Linear family only: `|2 atanh(v) sum_{l<=n} c_l v^{2l-1} - 2|`, the
    /// time-independent boundary residual of `R_n`.
    pub fn linear_deviation(&self, n: usize) -> Result<f64> {
        self.check_n(n)?;
        let MooreFamily::Linear { v, .. } = self.family else {
            return Err(Error::Unsupported("linear deviation needs the linear family".into()));
        };
        // 2 atanh(v) / v * sum c_l v^{2l}
        let ratio = if v.abs() < 1e-12 { 2.0 } else { 2.0 * v.atanh() / v };
        let v2 = v * v;
        let mut acc = 0.0;
        let mut pw = 1.0;
        for l in 0..=n {
            acc += self.c[l].value() * pw;
            pw *= v2;
        }
        Ok((ratio * acc - 2.0).abs())
    }

    /// Residual rms of `R_n` for `n = 0..=n_scan` over `[0, t_max]`.
    ///
    /// The exponential family is evaluated in extended precision: its best
    /// truncations sit far below double-precision rounding.
    pub fn residual_scan(&self, t_max: f64, n_scan: usize) -> Result<Vec<f64>> {
        self.check_n(n_scan)?;
        match self.family {
            MooreFamily::Linear { .. } => {
                let motion = self.motion(t_max);
                (0..=n_scan)
                    .map(|n| {
                        let mt = MooreTransform::new(Arc::new(self.clone()), n)?;
                        crate::transform::residual_bc_r_rms(&mt, &motion)
                    })
                    .collect()
            }
            MooreFamily::Exponential { k } => Ok(precise_exponential_scan(k, t_max, n_scan)),
        }
    }

    /// `n` in `0..=n_scan` minimizing the rms residual over `[0, t_max]`;
    /// ties go to the smaller `n`.
    pub fn optimal_truncation(&self, t_max: f64, n_scan: usize) -> Result<Truncation> {
        let residuals = self.residual_scan(t_max, n_scan)?;
        let mut best = 0;
        for (n, r) in residuals.iter().enumerate() {
            if *r < residuals[best] {
                best = n;
            }
        }
        Ok(Truncation {
            n_opt: best,
            residual: residuals[best],
            residuals,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Truncation {
    pub n_opt: usize,
    pub residual: f64,
    /// rms residual for every scanned `n`.
    pub residuals: Vec<f64>,
}

/// Index of the smallest magnitude in `log_mags`.
pub fn term_minimum(log_mags: &[f64]) -> usize {
    let mut best = 0;
    for (i, m) in log_mags.iter().enumerate() {
        if *m < log_mags[best] {
            best = i;
        }
    }
    best
}

/// First `l` from which the magnitudes increase three times in a row
/// (`|a_{l+1}| > |a_l|`, `|a_{l+2}| > |a_{l+1}|`, `|a_{l+3}| > |a_{l+2}|`).
pub fn divergence_onset(log_mags: &[f64]) -> Option<usize> {
    let inc: Vec<bool> = log_mags.windows(2).map(|w| w[1] > w[0]).collect();
    inc.windows(3).position(|w| w.iter().all(|&b| b))
}

fn precise_exponential_scan(k: f64, t_max: f64, n_scan: usize) -> Vec<f64> {
    let p = PRECISE_BITS;
    let (_, c) = exponential_coefficients_precise(n_scan, p + 64);
    let kb = BigFloat::from_f64(k, p);
    // w_l = c_l k^{2l-1} / (1 - 2l)
    let mut weights = Vec::with_capacity(n_scan + 1);
    for (l, cl) in c.iter().enumerate() {
        let kp = if l == 0 {
            BigFloat::from_u64(1, p).div(&kb, p, RM)
        } else {
            kb.powi(2 * l - 1, p, RM)
        };
        let m = BigFloat::from_i64(1 - 2 * l as i64, p);
        weights.push(cl.mul(&kp, p, RM).div(&m, p, RM));
    }
    let two = BigFloat::from_u64(2, p);
    let minus_two_k = kb.mul(&two, p, RM).neg();

    let times: Vec<f64> = time_grid(t_max, RMS_GRID).collect();
    let per_t: Vec<Vec<f64>> = times
        .par_iter()
        .map_init(consts, |cc, &t| {
            let tb = BigFloat::from_f64(t, p);
            let len = kb.mul(&tb, p, RM).neg().exp(p, RM, cc);
            // alpha_l(xi) = w_l (e^{k xi} q^l - 1), q = e^{-2 k xi}
            let mut pow = [BigFloat::from_u64(0, p), BigFloat::from_u64(0, p)];
            let mut q = [BigFloat::from_u64(0, p), BigFloat::from_u64(0, p)];
            for (j, xi) in [tb.add(&len, p, RM), tb.sub(&len, p, RM)].iter().enumerate() {
                pow[j] = kb.mul(xi, p, RM).exp(p, RM, cc);
                q[j] = minus_two_k.mul(xi, p, RM).exp(p, RM, cc);
            }
            let mut acc = BigFloat::from_u64(0, p);
            let mut out = Vec::with_capacity(n_scan + 1);
            for w in &weights {
                let d = pow[0].sub(&pow[1], p, RM);
                acc = acc.add(&w.mul(&d, p, RM), p, RM);
                let r = big_to_f64(&acc.sub(&two, p, RM));
                out.push(r * r);
                for j in 0..2 {
                    pow[j] = pow[j].mul(&q[j], p, RM);
                }
            }
            out
        })
        .collect();
    (0..=n_scan)
        .map(|n| (per_t.iter().map(|v| v[n]).sum::<f64>() / times.len() as f64).sqrt())
        .collect()
}

/// Least-squares fit of `ln|c_l|` over a range of `l`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrowthFit {
    /// Coefficient of `2 l ln l` with `2 l` and a constant also in the model,
    /// so that `|c_l| ~ (a l)^{2l}` gives a slope of one.
    pub slope: f64,
    /// `ln a`, the coefficient of `2 l`.
    pub ln_a: f64,
    pub intercept: f64,
    /// Slope of the plain regression on `2 l ln l` with intercept only.
    pub naive_slope: f64,
}

pub fn growth_fit(coeffs: &[SignedLog], lo: usize, hi: usize) -> Result<GrowthFit> {
    if lo < 2 || hi >= coeffs.len() || hi < lo + 3 {
        return Err(Error::Precondition(format!(
            "growth fit needs 2 <= lo < hi - 2 < {}",
            coeffs.len()
        )));
    }
    let ls: Vec<f64> = (lo..=hi).map(|l| l as f64).collect();
    let y = DVector::from_iterator(ls.len(), (lo..=hi).map(|l| coeffs[l].ln_abs));
    let full = DMatrix::from_fn(ls.len(), 3, |r, c| {
        let l = ls[r];
        match c {
            0 => 2.0 * l * l.ln(),
            1 => 2.0 * l,
            _ => 1.0,
        }
    });
    let naive = DMatrix::from_fn(ls.len(), 2, |r, c| if c == 0 { 2.0 * ls[r] * ls[r].ln() } else { 1.0 });
    let solve = |a: DMatrix<f64>| -> Result<DVector<f64>> {
        a.svd(true, true)
            .solve(&y, 1e-14)
            .map_err(|e| Error::Precondition(format!("growth fit failed: {e}")))
    };
    let b = solve(full)?;
    let nb = solve(naive)?;
    Ok(GrowthFit {
        slope: b[0],
        ln_a: b[1],
        intercept: b[2],
        naive_slope: nb[0],
    })
}

/// `R_n` as an evaluable transform.
#[derive(Clone, Debug)]
pub struct MooreTransform {
    series: Arc<MooreSeries>,
    n: usize,
}

impl MooreTransform {
    pub fn new(series: Arc<MooreSeries>, n: usize) -> Result<Self> {
        series.check_n(n)?;
        Ok(Self { series, n })
    }

    pub fn series(&self) -> &MooreSeries {
        &self.series
    }

    pub fn order(&self) -> usize {
        self.n
    }
}

impl TransformFn for MooreTransform {
    fn value(&self, xi: f64) -> Result<f64> {
        self.series.truncated_value(self.n, xi)
    }

    fn derivative(&self, xi: f64) -> Result<f64> {
        self.series.truncated_derivative(self.n, xi)
    }

    fn domain(&self) -> (f64, f64) {
        match self.series.family {
            MooreFamily::Linear { l0, v } if v > 0.0 => (-l0 / v, f64::INFINITY),
            MooreFamily::Linear { l0, v } if v < 0.0 => (f64::NEG_INFINITY, -l0 / v),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }
}
