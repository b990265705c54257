//! Shared fixtures and independent oracles for the integration tests.
//!
//! The oracles evaluate the physics straight from the two-particle amplitude
//! table and closed-form Gaussian integrals; they share no code path with the
//! library routines they check.

#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use symverify::{
    make_gaussian, make_gaussian_pair, ModeDistribution, MomentumGrid, PositionGrid, Statistics,
    TwoParticleState,
};

pub fn mgrid() -> MomentumGrid {
    MomentumGrid::new(-10.0, 10.0, 256).unwrap()
}

pub fn array() -> PositionGrid {
    PositionGrid::new(-4.0, 4.0, 161).unwrap()
}

pub fn region() -> PositionGrid {
    PositionGrid::new(-3.0, 3.0, 61).unwrap()
}

pub const FIXTURE_R: f64 = 0.5;

/// Gaussians at p0 = -2 and +2, sigma 1, both centered at x0 = 0.
pub fn fixture(stats: Statistics) -> TwoParticleState {
    let f = make_gaussian(mgrid(), -2.0, 1.0, 0.0).unwrap();
    let g = make_gaussian(mgrid(), 2.0, 1.0, 0.0).unwrap();
    TwoParticleState::new(f, g, stats).unwrap()
}

/// `g` has an exact spatial node at R = 0 and `psi_f(0)` is real positive.
pub fn nodal_fixture(stats: Statistics) -> TwoParticleState {
    let f = make_gaussian(mgrid(), 2.0, 1.0, 0.0).unwrap();
    let g = make_gaussian_pair(mgrid(), 0.0, 1.0, -1.5, 1.5, -1.0).unwrap();
    TwoParticleState::new(f, g, stats).unwrap()
}

pub fn disjoint_array() -> PositionGrid {
    PositionGrid::new(-8.0, 8.0, 321).unwrap()
}

/// Spatially separated packets at x0 = -4 and +4.
pub fn disjoint_fixture(stats: Statistics) -> TwoParticleState {
    let f = make_gaussian(mgrid(), 0.0, 1.0, -4.0).unwrap();
    let g = make_gaussian(mgrid(), 0.0, 1.0, 4.0).unwrap();
    TwoParticleState::new(f, g, stats).unwrap()
}

pub fn kernel(p: f64, r: f64) -> C64 {
    C64::new(0.0, p * r).exp() * (2.0 * PI).powf(-0.5)
}

pub fn psi(f: &ModeDistribution, r: f64) -> C64 {
    let dp = f.grid().step();
    let mut acc = C64::new(0.0, 0.0);
    for (k, a) in f.amplitudes().iter().enumerate() {
        acc += kernel(f.grid().min() + k as f64 * dp, r) * a * dp;
    }
    acc
}

/// Symmetrized two-particle amplitude table `F(p_k, q_l) = f(p_k) g(q_l) + s f(q_l) g(p_k)`.
pub struct TensorOracle {
    pub table: Vec<Vec<C64>>,
    pub ps: Vec<f64>,
    pub dp: f64,
}

impl TensorOracle {
    pub fn new(f: &ModeDistribution, g: &ModeDistribution, s: f64) -> Self {
        let n = f.amplitudes().len();
        let dp = f.grid().step();
        let ps: Vec<f64> = (0..n).map(|k| f.grid().min() + k as f64 * dp).collect();
        let (fa, ga) = (f.amplitudes(), g.amplitudes());
        let table = (0..n)
            .map(|k| (0..n).map(|l| fa[k] * ga[l] + s * fa[l] * ga[k]).collect())
            .collect();
        TensorOracle { table, ps, dp }
    }

    /// `<2_fg|2_fg>`: half the squared norm of the symmetrized table.
    pub fn norm_sq(&self) -> f64 {
        0.5 * self.table.iter().flatten().map(|x| x.norm_sqr()).sum::<f64>() * self.dp * self.dp
    }

    /// Unnormalized survivor amplitude: the field-operator kernel at `r`
    /// contracted with the first index.
    pub fn contract(&self, r: f64) -> Vec<C64> {
        let n = self.ps.len();
        (0..n)
            .map(|l| (0..n).map(|k| kernel(self.ps[k], r) * self.table[k][l]).sum::<C64>() * self.dp)
            .collect()
    }
}

pub fn l2(v: &[C64], dp: f64) -> f64 {
    (v.iter().map(|x| x.norm_sqr()).sum::<f64>() * dp).sqrt()
}

/// Continuum transform of the normalized Gaussian
/// `(2 pi s^2)^(-1/4) exp(-(p - p0)^2 / (4 s^2)) exp(-i p x0)`.
pub fn gaussian_psi(p0: f64, sigma: f64, x0: f64, r: f64) -> C64 {
    let c = (2.0 * PI * sigma * sigma).powf(-0.25);
    let env = 2.0 * sigma * PI.sqrt() * (-(sigma * sigma) * (r - x0).powi(2)).exp();
    C64::new(0.0, p0 * (r - x0)).exp() * (c * env / (2.0 * PI).sqrt())
}

/// Random normalized distribution with complex Gaussian-ish amplitudes.
pub fn random_mode(grid: MomentumGrid, rng: &mut ChaCha8Rng) -> ModeDistribution {
    let center = rng.random_range(grid.min() * 0.5..grid.max() * 0.5);
    let width = rng.random_range(0.5..2.0);
    let x0 = rng.random_range(-1.5..1.5);
    ModeDistribution::from_fn(grid, |p| {
        let env = (-(p - center).powi(2) / (4.0 * width * width)).exp();
        C64::new(0.0, -p * x0).exp() * env * (1.0 + 0.3 * (p * 1.7).sin())
    })
    .unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent linear-scan inverse-CDF draw.
pub fn draw(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap()
}

/// Pearson statistic with pooling to >= 5 expected and its upper-tail
/// p-value, computed with statrs' chi-squared distribution.
pub fn chi2_p(counts: &[u64], probs: &[f64]) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let n: u64 = counts.iter().sum();
    let mass: f64 = probs.iter().sum();
    let mut cells = vec![];
    let (mut o, mut e) = (0.0, 0.0);
    for (c, p) in counts.iter().zip(probs) {
        o += *c as f64;
        e += n as f64 * p / mass;
        if e >= 5.0 {
            cells.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    if let Some(last) = cells.last_mut() {
        last.0 += o;
        last.1 += e;
    }
    let stat: f64 = cells.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = cells.len() as f64 - 1.0;
    1.0 - ChiSquared::new(dof).unwrap().cdf(stat)
}
