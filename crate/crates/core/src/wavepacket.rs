//! Single-particle mode distributions on a uniform momentum grid and their
//! plane-wave transforms to position space.
//!
//! Units: hbar = 1. All integrals are left-point Riemann sums over every grid
//! node, `sum_k x_k * dp`.

use std::f64::consts::PI;
use std::fmt;
use std::marker::PhantomData;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Minimum number of nodes in any grid.
pub const MIN_GRID_POINTS: usize = 8;

/// Normalization tolerance for every constructed distribution.
pub const NORM_TOL: f64 = 1e-10;

/// Boundary density above which a position transform is flagged as truncated.
pub const BOUNDARY_DENSITY_TOL: f64 = 1e-8;

/// Parseval drift above which a position transform is flagged as truncated.
pub const PARSEVAL_TOL: f64 = 1e-6;

/// Half-width of the support a Gaussian must fit in, in units of sigma.
pub const GAUSSIAN_SUPPORT_SIGMAS: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Momentum;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Position;

/// Uniform grid `x_k = min + k * step`, `k = 0..n`.
///
/// The axis marker keeps momentum and position grids from being mixed up.
#[derive(Debug, PartialEq)]
pub struct Grid<A> {
    min: f64,
    max: f64,
    n: usize,
    _axis: PhantomData<A>,
}

impl<A> Clone for Grid<A> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<A> Copy for Grid<A> {}

pub type MomentumGrid = Grid<Momentum>;
pub type PositionGrid = Grid<Position>;

impl<A> Grid<A> {
    pub fn new(min: f64, max: f64, n: usize) -> Result<Self> {
        if n < MIN_GRID_POINTS {
            return Err(Error::DegenerateGrid(format!(
                "{n} points, at least {MIN_GRID_POINTS} required"
            )));
        }
        if !(min.is_finite() && max.is_finite()) || max <= min {
            return Err(Error::DegenerateGrid(format!(
                "bounds [{min}, {max}] must be finite and increasing"
            )));
        }
        Ok(Grid { min, max, n, _axis: PhantomData })
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.n - 1) as f64
    }

    /// Node `k`, counted from whichever end is nearer so that a grid
    /// symmetric about zero has exactly mirrored nodes.
    pub fn point(&self, k: usize) -> f64 {
        let last = self.n - 1;
        match (2 * k).cmp(&last) {
            std::cmp::Ordering::Less => self.min + k as f64 * self.step(),
            std::cmp::Ordering::Equal => 0.5 * (self.min + self.max),
            std::cmp::Ordering::Greater => self.max - (last - k) as f64 * self.step(),
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |k| self.point(k))
    }

    /// Index of the node nearest to `x`, if `x` lies within half a step of the grid.
    pub fn nearest_index(&self, x: f64) -> Option<usize> {
        let t = (x - self.min) / self.step();
        let k = t.round();
        if k < 0.0 || k > (self.n - 1) as f64 || (t - k).abs() > 0.5 + 1e-12 {
            return None;
        }
        Some(k as usize)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.min && x <= self.max
    }
}

impl<A> fmt::Display for Grid<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}] x {}", self.min, self.max, self.n)
    }
}

/// Plane-wave mode function `(2 pi)^(-1/2) exp(i p r)`.
#[inline]
pub fn plane_wave(p: f64, r: f64) -> C64 {
    C64::cis(p * r) / (2.0 * PI).sqrt()
}

/// Complex amplitude `f(p_k)` on a momentum grid, normalized under the grid quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeDistribution {
    grid: MomentumGrid,
    amp: Vec<C64>,
}

impl ModeDistribution {
    /// Builds a distribution from raw amplitudes and rescales it to unit norm.
    pub fn from_amplitudes(grid: MomentumGrid, amp: Vec<C64>) -> Result<Self> {
        if amp.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "{} amplitudes for a {}-point grid",
                amp.len(),
                grid.len()
            )));
        }
        if amp.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidInput("non-finite amplitude".into()));
        }
        let norm_sq = norm_sq(&amp, grid.step());
        if norm_sq <= f64::MIN_POSITIVE {
            return Err(Error::InvalidInput("amplitudes have zero norm".into()));
        }
        let scale = norm_sq.sqrt().recip();
        let amp = amp.into_iter().map(|a| a * scale).collect();
        Ok(ModeDistribution { grid, amp })
    }

    pub fn from_fn(grid: MomentumGrid, f: impl Fn(f64) -> C64) -> Result<Self> {
        let amp = grid.points().map(f).collect();
        Self::from_amplitudes(grid, amp)
    }

    /// Normalized `sum_i c_i * d_i` over distributions sharing one grid.
    pub fn superpose(terms: &[(C64, &ModeDistribution)]) -> Result<Self> {
        let (_, first) = terms
            .first()
            .ok_or_else(|| Error::InvalidInput("empty superposition".into()))?;
        let grid = first.grid;
        let mut amp = vec![C64::new(0.0, 0.0); grid.len()];
        for (c, d) in terms {
            if d.grid != grid {
                return Err(Error::GridMismatch);
            }
            for (acc, a) in amp.iter_mut().zip(&d.amp) {
                *acc += c * a;
            }
        }
        Self::from_amplitudes(grid, amp)
    }

    pub fn grid(&self) -> &MomentumGrid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amp
    }

    pub fn norm_sq(&self) -> f64 {
        norm_sq(&self.amp, self.grid.step())
    }

    /// `|f(p_k)|^2` at every node.
    pub fn density(&self) -> Vec<f64> {
        self.amp.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Spatial amplitude `psi_f(R) = sum_k psi_{p_k}(R) f(p_k) dp`.
    pub fn position_amplitude(&self, r: f64) -> C64 {
        let dp = self.grid.step();
        mirror_sum(self.amp.len(), |k| plane_wave(self.grid.point(k), r) * self.amp[k]) * dp
    }

    /// `<other|self> = sum_k other*(p_k) self(p_k) dp`.
    pub fn overlap(&self, other: &ModeDistribution) -> Result<C64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let dp = self.grid.step();
        Ok(mirror_sum(self.amp.len(), |k| other.amp[k].conj() * self.amp[k]) * dp)
    }

    /// `|<other|self>|`.
    pub fn fidelity(&self, other: &ModeDistribution) -> Result<f64> {
        self.overlap(other).map(|c| c.norm())
    }

    pub fn to_position(&self, out: &PositionGrid) -> SpatialAmplitude {
        let amp: Vec<C64> = out.points().map(|r| self.position_amplitude(r)).collect();
        SpatialAmplitude::new(*out, amp, self.norm_sq())
    }

    pub(crate) fn from_parts(grid: MomentumGrid, amp: Vec<C64>) -> Self {
        ModeDistribution { grid, amp }
    }
}

pub(crate) fn norm_sq(amp: &[C64], step: f64) -> f64 {
    mirror_sum(amp.len(), |k| amp[k].norm_sqr()) * step
}

/// `sum_k term(k)` taken as `(t_0 + t_{n-1}) + (t_1 + t_{n-2}) + ...`. The
/// result is bit-identical for a sequence and its reversal, which keeps
/// mirror-image states exactly symmetric.
pub(crate) fn mirror_sum<T>(n: usize, term: impl Fn(usize) -> T) -> T
where
    T: Copy + Default + std::ops::Add<Output = T>,
{
    let mut acc = T::default();
    for k in 0..n / 2 {
        acc = acc + (term(k) + term(n - 1 - k));
    }
    if n % 2 == 1 {
        acc = acc + term(n / 2);
    }
    acc
}

/// Gaussian wavepacket `exp(-(p - p0)^2 / (4 sigma^2)) exp(-i p x0)`,
/// renormalized on the grid. Its momentum density has standard deviation
/// `sigma`; the position density is centered at `x0` with width `1 / (2 sigma)`.
pub fn make_gaussian(grid: MomentumGrid, p0: f64, sigma: f64, x0: f64) -> Result<ModeDistribution> {
    check_gaussian_support(&grid, p0, sigma)?;
    if !x0.is_finite() {
        return Err(Error::InvalidInput(format!("x0 = {x0}")));
    }
    ModeDistribution::from_fn(grid, |p| gaussian_term(p, p0, sigma, x0))
}

/// Two copies of one Gaussian envelope displaced to `x0` and `x1` in position,
/// combined with relative coefficient `weight`. With `p0 = 0` and `weight = -1`
/// the spatial amplitude has an exact node at `(x0 + x1) / 2`.
pub fn make_gaussian_pair(
    grid: MomentumGrid,
    p0: f64,
    sigma: f64,
    x0: f64,
    x1: f64,
    weight: f64,
) -> Result<ModeDistribution> {
    check_gaussian_support(&grid, p0, sigma)?;
    if !(x0.is_finite() && x1.is_finite() && weight.is_finite()) {
        return Err(Error::InvalidInput("non-finite gaussian pair parameter".into()));
    }
    ModeDistribution::from_fn(grid, |p| {
        gaussian_term(p, p0, sigma, x0) + weight * gaussian_term(p, p0, sigma, x1)
    })
}

fn gaussian_term(p: f64, p0: f64, sigma: f64, x0: f64) -> C64 {
    let d = p - p0;
    C64::cis(-p * x0) * (-d * d / (4.0 * sigma * sigma)).exp()
}

fn check_gaussian_support(grid: &MomentumGrid, p0: f64, sigma: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma.is_finite() && p0.is_finite()) {
        return Err(Error::InvalidInput(format!("gaussian p0 = {p0}, sigma = {sigma}")));
    }
    let lo = p0 - GAUSSIAN_SUPPORT_SIGMAS * sigma;
    let hi = p0 + GAUSSIAN_SUPPORT_SIGMAS * sigma;
    if lo < grid.min() || hi > grid.max() {
        return Err(Error::Truncation(format!(
            "5-sigma support [{lo}, {hi}] exceeds grid {grid}"
        )));
    }
    Ok(())
}

/// Position-space amplitude `psi(r_j)` on a position grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialAmplitude {
    grid: PositionGrid,
    amp: Vec<C64>,
    truncated: bool,
}

impl SpatialAmplitude {
    /// `source_norm_sq` is the momentum-space norm the Parseval sum is checked against.
    pub(crate) fn new(grid: PositionGrid, amp: Vec<C64>, source_norm_sq: f64) -> Self {
        let dr = grid.step();
        let total: f64 = amp.iter().map(|a| a.norm_sqr()).sum::<f64>() * dr;
        let edge = amp[0].norm_sqr().max(amp[amp.len() - 1].norm_sqr());
        let truncated =
            edge >= BOUNDARY_DENSITY_TOL || (total - source_norm_sq).abs() > PARSEVAL_TOL;
        SpatialAmplitude { grid, amp, truncated }
    }

    pub fn grid(&self) -> &PositionGrid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amp
    }

    /// Boundary density or Parseval drift exceeded tolerance.
    pub fn truncation_warning(&self) -> bool {
        self.truncated
    }

    pub fn density(&self) -> Vec<f64> {
        self.amp.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `sum_j |psi(r_j)|^2 dr`.
    pub fn norm_sq(&self) -> f64 {
        self.amp.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.step()
    }
}
