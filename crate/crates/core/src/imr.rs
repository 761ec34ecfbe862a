//! Interpolation-based reconstruction of `R` beyond the seed interval.
//!
//! A time grid is marched forward and every grid time `t` transports the
//! value at `t - L(t)` to `t + L(t)` (adding a fixed increment). Values are
//! held as one cubic spline per region, a region being the image of the
//! previous one under this transport.

use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryMotion;
use crate::error::{Error, Result};
use crate::roots::brent;
use crate::seed::{SeedDegree, SeedFunction, SeedPolynomial};
use crate::spline::CubicSpline;
use crate::transform::TransformFn;

pub const DEFAULT_RHO: f64 = 1000.0;
const ROOT_TOL: f64 = 1e-13;
const DEDUPE_TOL: f64 = 1e-12;

/// Reflection times `t_hat_i` and their images `xi_hat_i = t_hat_i + L(t_hat_i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionBoundaries {
    pub t_hat: Vec<f64>,
    pub xi_hat: Vec<f64>,
    /// `t_max + L(t_max)`, the right end of the last region.
    pub end: f64,
}

/// Solves `t_hat_{i+1} - L(t_hat_{i+1}) = xi_hat_i` from `t_hat_0 = 0` for
/// every boundary time inside `[0, t_max]`.
pub fn find_region_boundaries(motion: &BoundaryMotion) -> Result<RegionBoundaries> {
    let t_max = motion.t_max();
    let mut t_hat = vec![0.0];
    let mut xi_hat = vec![motion.length_at(0.0)];
    loop {
        let target = *xi_hat.last().unwrap();
        let lo = *t_hat.last().unwrap();
        let g = |t: f64| t - motion.length_at(t) - target;
        if g(t_max) < 0.0 {
            break;
        }
        let t = brent(g, lo, t_max, ROOT_TOL)?;
        t_hat.push(t);
        xi_hat.push(t + motion.length_at(t));
    }
    Ok(RegionBoundaries {
        t_hat,
        xi_hat,
        end: t_max + motion.length_at(t_max),
    })
}

/// How samples are split into splines.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnotPolicy {
    /// Reflection times are grid points and every region has its own spline.
    #[default]
    Regions,
    /// No reflection times in the grid and a single spline beyond the seed.
    Global,
}

#[derive(Clone, Debug)]
pub struct TimeGrid {
    pub times: Vec<f64>,
    /// `true` where the time is a reflection time `t_hat`.
    pub boundary: Vec<bool>,
    pub rho: f64,
}

impl TimeGrid {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Grid with steps `L(t + L(t) / (2 rho)) / rho`, snapped onto the
/// reflection times (for [`KnotPolicy::Regions`]) and onto `t_max`.
pub fn build_time_grid(motion: &BoundaryMotion, rho: f64, policy: KnotPolicy) -> Result<TimeGrid> {
    if !(rho >= 4.0) || !rho.is_finite() {
        return Err(Error::Precondition(format!("resolution must be at least 4, got {rho}")));
    }
    let t_max = motion.t_max();
    let mut targets: Vec<(f64, bool)> = Vec::new();
    if policy == KnotPolicy::Regions {
        let rb = find_region_boundaries(motion)?;
        targets.extend(rb.t_hat[1..].iter().map(|&t| (t, true)));
    }
    match targets.last() {
        Some(&(t, _)) if (t - t_max).abs() <= DEDUPE_TOL * (1.0 + t_max) => {}
        _ => targets.push((t_max, false)),
    }

    let len = |t: f64| motion.length_at(t.min(t_max));
    let mut times = vec![0.0];
    let mut boundary = vec![true];
    let mut t = 0.0;
    for (b, flag) in targets {
        if b - t <= DEDUPE_TOL * (1.0 + b) {
            *boundary.last_mut().unwrap() |= flag;
            continue;
        }
        loop {
            let step = len(t + len(t) / (2.0 * rho)) / rho;
            let rem = b - t;
            if rem - step <= 1e-9 * step {
                break;
            }
            let mut h = if rem < 1.5 * step { 0.5 * rem } else { step };
            while h >= len(t) + len(t + h) {
                h *= 0.5;
            }
            t += h;
            times.push(t);
            boundary.push(false);
        }
        t = b;
        times.push(b);
        boundary.push(flag);
    }
    Ok(TimeGrid { times, boundary, rho })
}

/// A function known on `[-L0, L0]` through `seed` and beyond through
/// splines whose knot ranges start at `starts`.
#[derive(Clone, Debug)]
pub struct PiecewiseFunction<S> {
    seed: S,
    l0: f64,
    starts: Vec<f64>,
    splines: Vec<CubicSpline>,
    end: f64,
    increment: f64,
    grid_points: usize,
    table: PieceTable,
}

/// Seed and region splines flattened into one list of cubic pieces, with a
/// uniform bucket index so that a lookup costs the same everywhere.
#[derive(Clone, Debug)]
struct PieceTable {
    left: Vec<f64>,
    coeffs: Vec<[f64; 4]>,
    x0: f64,
    inv_width: f64,
    bucket: Vec<u32>,
    end: f64,
    end_value: f64,
}

impl PieceTable {
    fn new(pieces: Vec<(f64, [f64; 4])>, end: f64, end_value: f64) -> Self {
        let (left, coeffs): (Vec<f64>, Vec<[f64; 4]>) = pieces.into_iter().unzip();
        let x0 = left[0];
        let nb = 2 * left.len();
        let inv_width = nb as f64 / (end - x0);
        let mut bucket = Vec::with_capacity(nb);
        let mut j = 0usize;
        for b in 0..nb {
            let xb = x0 + b as f64 / inv_width;
            while j + 1 < left.len() && left[j + 1] <= xb {
                j += 1;
            }
            bucket.push(j as u32);
        }
        Self {
            left,
            coeffs,
            x0,
            inv_width,
            bucket,
            end,
            end_value,
        }
    }

    #[inline]
    fn locate(&self, xi: f64) -> usize {
        let b = ((xi - self.x0) * self.inv_width).max(0.0) as usize;
        let mut j = self.bucket[b.min(self.bucket.len() - 1)] as usize;
        while j + 1 < self.left.len() && self.left[j + 1] <= xi {
            j += 1;
        }
        j
    }

    #[inline]
    fn value(&self, xi: f64) -> f64 {
        if xi == self.end {
            return self.end_value;
        }
        let j = self.locate(xi);
        let d = xi - self.left[j];
        let [c0, c1, c2, c3] = self.coeffs[j];
        c0 + d * (c1 + d * (c2 + d * c3))
    }

    #[inline]
    fn derivative(&self, xi: f64) -> f64 {
        let j = self.locate(xi);
        let d = xi - self.left[j];
        let [_, c1, c2, c3] = self.coeffs[j];
        c1 + d * (2.0 * c2 + 3.0 * d * c3)
    }
}

/// `R` reconstructed by the IMR.
pub type PiecewiseTransform = PiecewiseFunction<SeedPolynomial>;

impl<S: SeedFunction> PiecewiseFunction<S> {
    fn assemble(
        seed: S,
        l0: f64,
        starts: Vec<f64>,
        splines: Vec<CubicSpline>,
        increment: f64,
        grid_points: usize,
    ) -> Self {
        let mut pieces = seed.cubic_pieces();
        for sp in &splines {
            pieces.extend(sp.knots().iter().copied().zip(sp.coefficients().iter().copied()));
        }
        let (end, table) = match splines.last() {
            Some(last) => (last.end(), PieceTable::new(pieces, last.end(), last.eval(last.end()))),
            None => (l0, PieceTable::new(pieces, l0, seed.value_at(l0))),
        };
        Self {
            seed,
            l0,
            starts,
            splines,
            end,
            increment,
            grid_points,
            table,
        }
    }

    pub fn seed(&self) -> &S {
        &self.seed
    }

    /// Left ends of the spline pieces (the region knots for
    /// [`KnotPolicy::Regions`]).
    pub fn region_knots(&self) -> &[f64] {
        &self.starts
    }

    pub fn splines(&self) -> &[CubicSpline] {
        &self.splines
    }

    pub fn increment(&self) -> f64 {
        self.increment
    }

    pub fn grid_points(&self) -> usize {
        self.grid_points
    }

    pub fn domain_end(&self) -> f64 {
        self.end
    }

    fn tol(&self) -> f64 {
        1e-10 * (1.0 + self.end.abs())
    }

    fn check(&self, xi: f64) -> Result<()> {
        let tol = self.tol();
        if !(xi >= -self.l0 - tol && xi <= self.end + tol) {
            return Err(Error::domain("xi", xi, -self.l0, self.end));
        }
        Ok(())
    }

    #[inline]
    fn piece(&self, xi: f64) -> Option<&CubicSpline> {
        if xi <= self.l0 {
            return None;
        }
        let j = self.starts.partition_point(|&s| s <= xi).saturating_sub(1);
        Some(&self.splines[j])
    }

    /// Value without the domain check.
    #[inline]
    pub fn value_at(&self, xi: f64) -> f64 {
        self.table.value(xi)
    }

    #[inline]
    pub fn derivative_at(&self, xi: f64) -> f64 {
        self.table.derivative(xi)
    }

    /// Value from the seed or the containing region spline, bypassing the
    /// flattened table.
    pub fn value_by_region(&self, xi: f64) -> f64 {
        match self.piece(xi) {
            None => self.seed.value_at(xi),
            Some(s) => s.eval(xi),
        }
    }

    pub fn eval(&self, xi: f64) -> Result<f64> {
        self.check(xi)?;
        Ok(self.value_at(xi))
    }

    pub fn eval_derivative(&self, xi: f64) -> Result<f64> {
        self.check(xi)?;
        Ok(self.derivative_at(xi))
    }

    /// Values just left and right of every interior knot.
    pub fn knot_jumps(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let left_of_first = self.seed.value_at(self.l0);
        out.push((self.splines[0].eval(self.l0) - left_of_first).abs());
        for j in 1..self.splines.len() {
            let x = self.starts[j];
            out.push((self.splines[j].eval(x) - self.splines[j - 1].eval(x)).abs());
        }
        out
    }
}

impl<S: SeedFunction + std::fmt::Debug> TransformFn for PiecewiseFunction<S> {
    fn value(&self, xi: f64) -> Result<f64> {
        self.eval(xi)
    }

    fn derivative(&self, xi: f64) -> Result<f64> {
        self.eval_derivative(xi)
    }

    fn domain(&self) -> (f64, f64) {
        (-self.l0, self.end)
    }
}

/// Marches `grid`, setting `F(t + L) = F(t - L) + increment` with `F` the
/// seed on `[-L0, L0]` and the already finished splines beyond it.
pub fn extend<S: SeedFunction>(
    seed: S,
    motion: &BoundaryMotion,
    grid: &TimeGrid,
    increment: f64,
    policy: KnotPolicy,
) -> Result<PiecewiseFunction<S>> {
    let l0 = seed.half_width();
    if (l0 - motion.initial_length()).abs() > 1e-12 * (1.0 + l0) {
        return Err(Error::Precondition(format!(
            "seed half-width {l0} differs from L(0) = {}",
            motion.initial_length()
        )));
    }
    match policy {
        KnotPolicy::Regions => extend_regions(seed, l0, motion, grid, increment),
        KnotPolicy::Global => extend_global(seed, l0, motion, grid, increment),
    }
}

fn extend_regions<S: SeedFunction>(
    seed: S,
    l0: f64,
    motion: &BoundaryMotion,
    grid: &TimeGrid,
    increment: f64,
) -> Result<PiecewiseFunction<S>> {
    let n = grid.times.len();
    let tol = 1e-10 * (1.0 + grid.times[n - 1]);
    let mut starts: Vec<f64> = Vec::new();
    let mut splines: Vec<CubicSpline> = Vec::new();
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();

    for (i, &t) in grid.times.iter().enumerate() {
        let l = motion.length_at(t);
        let pre = t - l;
        let base = if pre <= l0 + tol {
            seed.value_at(pre.clamp(-l0, l0))
        } else {
            let r = starts.partition_point(|&s| s <= pre).saturating_sub(1);
            let pick = |r: usize| r < splines.len() && pre <= splines[r].end() + tol;
            let r = if pick(r) {
                r
            } else if r >= 1 && pick(r - 1) {
                r - 1
            } else {
                let covered = splines.last().map_or(l0, |s| s.end());
                return Err(Error::Extrapolation { preimage: pre, covered });
            };
            splines[r].eval(pre)
        };
        xs.push(t + l);
        ys.push(base + increment);
        let closes = (i > 0 && grid.boundary[i]) || i + 1 == n;
        if closes && xs.len() >= 2 {
            starts.push(xs[0]);
            splines.push(CubicSpline::not_a_knot(&xs, &ys)?);
            let (x_last, y_last) = (xs[xs.len() - 1], ys[ys.len() - 1]);
            xs.clear();
            ys.clear();
            xs.push(x_last);
            ys.push(y_last);
        }
    }
    Ok(PiecewiseFunction::assemble(seed, l0, starts, splines, increment, n))
}

fn extend_global<S: SeedFunction>(
    seed: S,
    l0: f64,
    motion: &BoundaryMotion,
    grid: &TimeGrid,
    increment: f64,
) -> Result<PiecewiseFunction<S>> {
    let n = grid.times.len();
    let tol = 1e-10 * (1.0 + grid.times[n - 1]);
    let mut xs: Vec<f64> = Vec::with_capacity(n);
    let mut ys: Vec<f64> = Vec::with_capacity(n);
    let mut current: Option<CubicSpline> = None;
    for &t in &grid.times {
        let l = motion.length_at(t);
        let pre = t - l;
        let base = if pre <= l0 + tol {
            seed.value_at(pre.clamp(-l0, l0))
        } else {
            let stale = current.as_ref().is_none_or(|s| pre > s.end() + tol);
            if stale {
                if xs.last().is_none_or(|&x| pre > x + tol) {
                    return Err(Error::Extrapolation {
                        preimage: pre,
                        covered: xs.last().copied().unwrap_or(l0),
                    });
                }
                current = Some(CubicSpline::not_a_knot(&xs, &ys)?);
            }
            current.as_ref().unwrap().eval(pre)
        };
        xs.push(t + l);
        ys.push(base + increment);
    }
    let spline = CubicSpline::not_a_knot(&xs, &ys)?;
    Ok(PiecewiseFunction::assemble(seed, l0, vec![xs[0]], vec![spline], increment, n))
}

/// Parameters of an IMR reconstruction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImrOptions {
    pub rho: f64,
    pub seed_degree: SeedDegree,
    pub policy: KnotPolicy,
}

impl Default for ImrOptions {
    fn default() -> Self {
        Self {
            rho: DEFAULT_RHO,
            seed_degree: SeedDegree::Cubic,
            policy: KnotPolicy::Regions,
        }
    }
}

/// Seed, grid and extension in one call.
pub fn build_transform(motion: &BoundaryMotion, opts: &ImrOptions) -> Result<PiecewiseTransform> {
    let seed = SeedPolynomial::for_motion(motion, opts.seed_degree)?;
    let grid = build_time_grid(motion, opts.rho, opts.policy)?;
    extend(seed, motion, &grid, 2.0, opts.policy)
}
