//! Two-particle (anti)symmetrized states and destructive one-particle detection.
//!
//! The field operator `psi(R) = sum_p psi_p(R) a_p` applied to
//! `|2_fg> = sum_{p,q} f(p) g(q) a+_p a+_q |0>` leaves
//! `psi_f(R) |1_g> + s psi_g(R) |1_f>`, with `s = +1` for bosons and `-1` for
//! fermions. For distinguishable particles the detector only removes its own
//! species and the survivor keeps its initial mode distribution.

use std::fmt;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::patterns::{DetectionPattern, PatternKind, PatternMeta};
use crate::wavepacket::{self, ModeDistribution, PositionGrid};

/// Threshold on `N^2(R)` below which the surviving state is undefined.
pub const NODAL_EPS: f64 = 1e-24;

/// Threshold on the two-particle norm^2 below which a state is null.
pub const NULL_STATE_EPS: f64 = 1e-12;

/// Allowed drift between the analytic `N` and the grid norm of the collapsed state.
pub const RENORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flipped(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+1",
            Sign::Minus => "-1",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Statistics {
    Boson,
    Fermion,
    Distinguishable,
}

impl Statistics {
    /// Exchange sign; `None` for distinguishable particles.
    pub fn sign(self) -> Option<Sign> {
        match self {
            Statistics::Boson => Some(Sign::Plus),
            Statistics::Fermion => Some(Sign::Minus),
            Statistics::Distinguishable => None,
        }
    }

    pub fn from_sign(sign: Sign) -> Statistics {
        match sign {
            Sign::Plus => Statistics::Boson,
            Sign::Minus => Statistics::Fermion,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Statistics::Boson => "boson",
            Statistics::Fermion => "fermion",
            Statistics::Distinguishable => "distinguishable",
        }
    }
}

impl std::str::FromStr for Statistics {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "boson" | "bosons" | "+" | "+1" => Ok(Statistics::Boson),
            "fermion" | "fermions" | "-" | "-1" => Ok(Statistics::Fermion),
            "distinguishable" | "none" => Ok(Statistics::Distinguishable),
            other => Err(Error::InvalidInput(format!("unknown statistics `{other}`"))),
        }
    }
}

/// Particle species for the distinguishable case: `A` carries `f`, `B` carries `g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Species {
    A,
    B,
}

impl std::str::FromStr for Species {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "a" => Ok(Species::A),
            "b" => Ok(Species::B),
            other => Err(Error::InvalidInput(format!("unknown species `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoParticleState {
    f: ModeDistribution,
    g: ModeDistribution,
    stats: Statistics,
}

impl TwoParticleState {
    pub fn new(f: ModeDistribution, g: ModeDistribution, stats: Statistics) -> Result<Self> {
        if f.grid() != g.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(TwoParticleState { f, g, stats })
    }

    pub fn f(&self) -> &ModeDistribution {
        &self.f
    }

    pub fn g(&self) -> &ModeDistribution {
        &self.g
    }

    pub fn stats(&self) -> Statistics {
        self.stats
    }

    /// Same modes, different statistics.
    pub fn with_stats(&self, stats: Statistics) -> Self {
        TwoParticleState { stats, ..self.clone() }
    }

    /// State with `f` and `g` exchanged.
    pub fn swapped(&self) -> Self {
        TwoParticleState { f: self.g.clone(), g: self.f.clone(), stats: self.stats }
    }

    /// `<1_g|1_f>`.
    pub fn overlap_gf(&self) -> C64 {
        // grids were checked at construction
        self.f.overlap(&self.g).expect("shared grid")
    }

    /// `1 + s |<f|g>|^2`, or 1 for distinguishable particles.
    pub fn norm_sq(&self) -> f64 {
        match self.stats.sign() {
            Some(s) => 1.0 + s.value() * self.overlap_gf().norm_sqr(),
            None => 1.0,
        }
    }

    pub fn is_null(&self) -> bool {
        self.norm_sq() < NULL_STATE_EPS
    }

    /// Squared norm `N^2(R)` of the unnormalized collapsed state. For
    /// distinguishable particles this is `|psi_f(R)|^2 + |psi_g(R)|^2`, the
    /// rate of a detector that fires on either species.
    pub fn detection_weight(&self, r: f64) -> f64 {
        let a_f = self.f.position_amplitude(r);
        let a_g = self.g.position_amplitude(r);
        self.weight_from_amplitudes(a_f, a_g, self.overlap_gf())
    }

    fn weight_from_amplitudes(&self, a_f: C64, a_g: C64, ovl: C64) -> f64 {
        let direct = a_f.norm_sqr() + a_g.norm_sqr();
        match self.stats.sign() {
            Some(s) => direct + s.value() * 2.0 * (a_f.conj() * a_g * ovl).re,
            None => direct,
        }
    }
}

/// `two_particle_norm_sq` as a free function.
pub fn two_particle_norm_sq(state: &TwoParticleState) -> f64 {
    state.norm_sq()
}

/// Result of one destructive detection at `R`.
///
/// The survivor is `h = alpha_f g + s alpha_g f`, so `alpha_f` multiplies the
/// `g` component and `alpha_g` the `f` component.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapseOutcome {
    pub r: f64,
    pub alpha_f: C64,
    pub alpha_g: C64,
    pub norm_n: f64,
    pub h: ModeDistribution,
    pub sign_used: Sign,
    pub f: ModeDistribution,
    pub g: ModeDistribution,
    /// `<1_g|1_f>`, zero for distinguishable outcomes.
    pub overlap_gf: C64,
}

impl CollapseOutcome {
    /// `|alpha_f|^2 + |alpha_g|^2 + s 2 Re(alpha_f* alpha_g <1_g|1_f>)`, which is 1.
    pub fn coefficient_closure(&self) -> f64 {
        self.alpha_f.norm_sqr()
            + self.alpha_g.norm_sqr()
            + self.sign_used.value() * 2.0 * (self.alpha_f.conj() * self.alpha_g * self.overlap_gf).re
    }
}

pub fn collapse(state: &TwoParticleState, r: f64) -> Result<CollapseOutcome> {
    let sign = state.stats.sign().ok_or_else(|| {
        Error::InvalidInput("collapse needs boson or fermion statistics; use collapse_distinguishable".into())
    })?;
    let norm_sq = state.norm_sq();
    if norm_sq < NULL_STATE_EPS {
        return Err(Error::NullState { norm_sq });
    }
    let s = sign.value();
    let a_f = state.f.position_amplitude(r);
    let a_g = state.g.position_amplitude(r);
    let ovl = state.overlap_gf();
    let n_sq = state.weight_from_amplitudes(a_f, a_g, ovl);
    if !(n_sq >= NODAL_EPS) {
        return Err(Error::NodalPointUndefined { r });
    }
    let n = n_sq.sqrt();
    let alpha_f = a_f / n;
    let alpha_g = a_g / n;

    let amp: Vec<C64> = state
        .f
        .amplitudes()
        .iter()
        .zip(state.g.amplitudes())
        .map(|(fp, gp)| alpha_f * gp + s * alpha_g * fp)
        .collect();
    let grid = *state.f.grid();
    let raw_norm_sq = wavepacket::norm_sq(&amp, grid.step());
    if (raw_norm_sq - 1.0).abs() > RENORM_TOL {
        return Err(Error::Consistency(format!(
            "collapsed state norm^2 {raw_norm_sq} differs from 1 at R = {r}"
        )));
    }
    let scale = raw_norm_sq.sqrt().recip();
    let h = ModeDistribution::from_parts(grid, amp.into_iter().map(|a| a * scale).collect());

    Ok(CollapseOutcome {
        r,
        alpha_f,
        alpha_g,
        norm_n: n,
        h,
        sign_used: sign,
        f: state.f.clone(),
        g: state.g.clone(),
        overlap_gf: ovl,
    })
}

/// Detection of one species of a distinguishable pair. The survivor keeps its
/// initial distribution.
pub fn collapse_distinguishable(
    state: &TwoParticleState,
    r: f64,
    detected: Species,
) -> Result<CollapseOutcome> {
    if state.stats != Statistics::Distinguishable {
        return Err(Error::InvalidInput(
            "collapse_distinguishable needs distinguishable statistics".into(),
        ));
    }
    let (amp, h, alpha_f, alpha_g) = match detected {
        Species::A => (
            state.f.position_amplitude(r),
            state.g.clone(),
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
        ),
        Species::B => (
            state.g.position_amplitude(r),
            state.f.clone(),
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
        ),
    };
    if !(amp.norm_sqr() >= NODAL_EPS) {
        return Err(Error::NodalPointUndefined { r });
    }
    Ok(CollapseOutcome {
        r,
        alpha_f,
        alpha_g,
        norm_n: amp.norm(),
        h,
        sign_used: Sign::Plus,
        f: state.f.clone(),
        g: state.g.clone(),
        overlap_gf: C64::new(0.0, 0.0),
    })
}

/// Density of the first detection position over `region`, proportional to
/// `N^2(R)`. Distinguishable pairs use `|psi_f(R)|^2 + |psi_g(R)|^2`.
pub fn detection_density(state: &TwoParticleState, region: &PositionGrid) -> Result<DetectionPattern> {
    if state.is_null() {
        return Err(Error::NullState { norm_sq: state.norm_sq() });
    }
    let psi_f = state.f.to_position(region);
    let psi_g = state.g.to_position(region);
    let ovl = state.overlap_gf();
    let weights: Vec<f64> = psi_f
        .amplitudes()
        .iter()
        .zip(psi_g.amplitudes())
        .map(|(a_f, a_g)| {
            let w = state.weight_from_amplitudes(*a_f, *a_g, ovl);
            if w < NODAL_EPS { 0.0 } else { w }
        })
        .collect();
    let meta = PatternMeta {
        sign: state.stats.sign(),
        truncated: psi_f.truncation_warning() || psi_g.truncation_warning(),
        source: format!("first-detection density, {} statistics", state.stats.name()),
        ..PatternMeta::default()
    };
    DetectionPattern::from_weights(*region, weights, PatternKind::FirstDetection, meta)
}

/// Density of the first detection for one species of a distinguishable pair.
pub fn detection_density_for(
    state: &TwoParticleState,
    region: &PositionGrid,
    detected: Species,
) -> Result<DetectionPattern> {
    let psi = match detected {
        Species::A => state.f.to_position(region),
        Species::B => state.g.to_position(region),
    };
    let meta = PatternMeta {
        truncated: psi.truncation_warning(),
        source: format!("first-detection density, species {detected:?}"),
        ..PatternMeta::default()
    };
    DetectionPattern::from_weights(*region, psi.density(), PatternKind::FirstDetection, meta)
}
