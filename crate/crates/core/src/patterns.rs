//! Detector-array patterns of the surviving particle under the two hypotheses.
//!
//! Pure hypothesis: `|alpha_f psi_g(r) + s alpha_g psi_f(r)|^2`.
//! Mixture hypothesis: `|psi_f(R)|^2 rho_g(r) + |psi_g(R)|^2 rho_f(r)`, the
//! distinguishable-pair pattern averaged over which particle was detected.
//! Every pattern is a unit-integral density over the array.

use std::fmt;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{collapse, CollapseOutcome, Sign, Statistics, TwoParticleState, NODAL_EPS};
use crate::wavepacket::{ModeDistribution, PositionGrid, SpatialAmplitude};

/// Normalization tolerance for every produced pattern.
pub const PATTERN_NORM_TOL: f64 = 1e-9;

/// Default log-likelihood gap (nats) needed to call the exchange sign.
pub const DEFAULT_SIGN_THRESHOLD: f64 = 3.0;

/// Minimum number of counts for likelihood-based inference.
pub const MIN_COUNTS: u64 = 100;

/// Below this total variation the two sign models are treated as identical.
pub const DEGENERACY_TV: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PatternKind {
    PureModel,
    MixtureModel,
    Empirical,
    FirstDetection,
}

impl fmt::Display for PatternKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PatternKind::PureModel => "PureModel",
            PatternKind::MixtureModel => "MixtureModel",
            PatternKind::Empirical => "Empirical",
            PatternKind::FirstDetection => "FirstDetection",
        })
    }
}

impl std::str::FromStr for PatternKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "PureModel" => Ok(PatternKind::PureModel),
            "MixtureModel" => Ok(PatternKind::MixtureModel),
            "Empirical" => Ok(PatternKind::Empirical),
            "FirstDetection" => Ok(PatternKind::FirstDetection),
            other => Err(Error::Format(format!("unknown pattern kind `{other}`"))),
        }
    }
}

/// Provenance carried along with a pattern.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PatternMeta {
    /// First detection point, when the pattern is conditioned on one.
    pub r_detect: Option<f64>,
    pub sign: Option<Sign>,
    /// Number of events behind an empirical pattern.
    pub samples: Option<u64>,
    pub truncated: bool,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionPattern {
    grid: PositionGrid,
    density: Vec<f64>,
    kind: PatternKind,
    meta: PatternMeta,
    counts: Option<Vec<u64>>,
}

impl DetectionPattern {
    /// Normalizes nonnegative weights to a unit-integral density.
    pub fn from_weights(
        grid: PositionGrid,
        weights: Vec<f64>,
        kind: PatternKind,
        meta: PatternMeta,
    ) -> Result<Self> {
        if weights.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "{} weights for a {}-point grid",
                weights.len(),
                grid.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidInput("pattern weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum::<f64>() * grid.step();
        if total <= 0.0 {
            return Err(Error::EmptySupport);
        }
        let density = weights.into_iter().map(|w| w / total).collect();
        Ok(DetectionPattern { grid, density, kind, meta, counts: None })
    }

    /// Histogram of detector clicks; density is `count / (total * dr)`.
    pub fn from_counts(grid: PositionGrid, counts: Vec<u64>, mut meta: PatternMeta) -> Result<Self> {
        if counts.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "{} counts for a {}-point grid",
                counts.len(),
                grid.len()
            )));
        }
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::EmptySupport);
        }
        let scale = 1.0 / (total as f64 * grid.step());
        let density = counts.iter().map(|&c| c as f64 * scale).collect();
        meta.samples = Some(total);
        Ok(DetectionPattern {
            grid,
            density,
            kind: PatternKind::Empirical,
            meta,
            counts: Some(counts),
        })
    }

    pub fn grid(&self) -> &PositionGrid {
        &self.grid
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn kind(&self) -> PatternKind {
        self.kind
    }

    pub fn meta(&self) -> &PatternMeta {
        &self.meta
    }

    pub fn counts(&self) -> Option<&[u64]> {
        self.counts.as_deref()
    }

    pub fn total_counts(&self) -> u64 {
        self.counts.as_ref().map_or(0, |c| c.iter().sum())
    }

    /// `sum_j density_j dr`.
    pub fn integral(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.grid.step()
    }

    /// Probability mass per node, `density_j dr`.
    pub fn probabilities(&self) -> Vec<f64> {
        let dr = self.grid.step();
        self.density.iter().map(|d| d * dr).collect()
    }

    /// Convex combination `sum_i w_i p_i` of patterns on one grid; weights are
    /// normalized to sum to one.
    pub fn mix(parts: &[(f64, &DetectionPattern)], kind: PatternKind, meta: PatternMeta) -> Result<Self> {
        let (_, first) = parts
            .first()
            .ok_or_else(|| Error::InvalidInput("empty pattern mixture".into()))?;
        let grid = first.grid;
        let mut acc = vec![0.0; grid.len()];
        for (w, p) in parts {
            if p.grid != grid {
                return Err(Error::GridMismatch);
            }
            for (a, d) in acc.iter_mut().zip(&p.density) {
                *a += w * d;
            }
        }
        Self::from_weights(grid, acc, kind, meta)
    }
}

/// Spatial amplitudes of `f` and `g` on a detector array, shared by the two
/// hypotheses.
#[derive(Debug, Clone)]
pub struct ArrayAmplitudes {
    psi_f: SpatialAmplitude,
    psi_g: SpatialAmplitude,
}

impl ArrayAmplitudes {
    pub fn new(f: &ModeDistribution, g: &ModeDistribution, array: &PositionGrid) -> Self {
        ArrayAmplitudes { psi_f: f.to_position(array), psi_g: g.to_position(array) }
    }

    pub fn grid(&self) -> &PositionGrid {
        self.psi_f.grid()
    }

    pub fn psi_f(&self) -> &SpatialAmplitude {
        &self.psi_f
    }

    pub fn psi_g(&self) -> &SpatialAmplitude {
        &self.psi_g
    }

    pub fn truncated(&self) -> bool {
        self.psi_f.truncation_warning() || self.psi_g.truncation_warning()
    }

    /// Pure-state pattern for survivor `alpha_f g + s alpha_g f`.
    pub fn pure(&self, alpha_f: C64, alpha_g: C64, sign: Sign, r_detect: f64) -> Result<DetectionPattern> {
        let s = sign.value();
        let weights = self
            .psi_f
            .amplitudes()
            .iter()
            .zip(self.psi_g.amplitudes())
            .map(|(pf, pg)| {
                let direct = alpha_f.norm_sqr() * pg.norm_sqr() + alpha_g.norm_sqr() * pf.norm_sqr();
                let cross = 2.0 * (alpha_f.conj() * pg.conj() * alpha_g * pf).re;
                (direct + s * cross).max(0.0)
            })
            .collect();
        let meta = PatternMeta {
            r_detect: Some(r_detect),
            sign: Some(sign),
            truncated: self.truncated(),
            source: "pure superposition".into(),
            ..PatternMeta::default()
        };
        DetectionPattern::from_weights(*self.grid(), weights, PatternKind::PureModel, meta)
    }

    /// Mixture pattern with the detection weights `|psi_f(R)|^2`, `|psi_g(R)|^2`.
    pub fn mixture(&self, weight_f: f64, weight_g: f64, r_detect: f64) -> Result<DetectionPattern> {
        if !(weight_f + weight_g >= NODAL_EPS) {
            return Err(Error::NodalPointUndefined { r: r_detect });
        }
        let dr = self.grid().step();
        let rho_f = self.psi_f.density();
        let rho_g = self.psi_g.density();
        let z_f = rho_f.iter().sum::<f64>() * dr;
        let z_g = rho_g.iter().sum::<f64>() * dr;
        // detecting f leaves g, and vice versa
        let c_g = branch_coefficient(weight_f, z_g)?;
        let c_f = branch_coefficient(weight_g, z_f)?;
        let weights = rho_f.iter().zip(&rho_g).map(|(rf, rg)| c_g * rg + c_f * rf).collect();
        let meta = PatternMeta {
            r_detect: Some(r_detect),
            truncated: self.truncated(),
            source: "incoherent mixture".into(),
            ..PatternMeta::default()
        };
        DetectionPattern::from_weights(*self.grid(), weights, PatternKind::MixtureModel, meta)
    }
}

fn branch_coefficient(weight: f64, mass: f64) -> Result<f64> {
    if weight == 0.0 {
        Ok(0.0)
    } else if mass > 0.0 {
        Ok(weight / mass)
    } else {
        Err(Error::EmptySupport)
    }
}

/// Detector-array pattern of the survivor in the pure superposition state.
pub fn pure_pattern(outcome: &CollapseOutcome, array: &PositionGrid) -> Result<DetectionPattern> {
    ArrayAmplitudes::new(&outcome.f, &outcome.g, array).pure(
        outcome.alpha_f,
        outcome.alpha_g,
        outcome.sign_used,
        outcome.r,
    )
}

/// Detector-array pattern of the survivor when `f` and `g` are not
/// (anti)symmetrized.
pub fn mixture_pattern(
    f: &ModeDistribution,
    g: &ModeDistribution,
    r: f64,
    array: &PositionGrid,
) -> Result<DetectionPattern> {
    if f.grid() != g.grid() {
        return Err(Error::GridMismatch);
    }
    let w_f = f.position_amplitude(r).norm_sqr();
    let w_g = g.position_amplitude(r).norm_sqr();
    ArrayAmplitudes::new(f, g, array).mixture(w_f, w_g, r)
}

/// Total variation distance `1/2 sum_j |a_j - b_j| dr`.
pub fn pattern_distance(a: &DetectionPattern, b: &DetectionPattern) -> Result<f64> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch);
    }
    let dr = a.grid.step();
    Ok(0.5 * a.density.iter().zip(&b.density).map(|(x, y)| (x - y).abs()).sum::<f64>() * dr)
}

/// `sum_j c_j ln(p_j)` with `p_j = density_j dr`; zero-probability nodes are
/// floored at `1e-300`.
pub fn log_likelihood(counts: &[u64], model: &DetectionPattern) -> f64 {
    let dr = model.grid.step();
    counts
        .iter()
        .zip(&model.density)
        .filter(|(c, _)| **c > 0)
        .map(|(&c, d)| c as f64 * (d * dr).max(1e-300).ln())
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignVerdict {
    Plus,
    Minus,
    Inconclusive,
}

impl SignVerdict {
    pub fn sign(self) -> Option<Sign> {
        match self {
            SignVerdict::Plus => Some(Sign::Plus),
            SignVerdict::Minus => Some(Sign::Minus),
            SignVerdict::Inconclusive => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignInference {
    pub verdict: SignVerdict,
    /// `ln L(+) - ln L(-)`.
    pub gap: f64,
    pub ll_plus: f64,
    pub ll_minus: f64,
}

/// Chooses the exchange sign whose pure-state model explains the counts
/// better by more than `threshold` nats.
pub fn infer_sign(
    empirical: &DetectionPattern,
    f: &ModeDistribution,
    g: &ModeDistribution,
    r: f64,
    threshold: f64,
) -> Result<SignInference> {
    let models = ArrayAmplitudes::new(f, g, empirical.grid());
    let sign_model = |stats| -> Result<DetectionPattern> {
        let state = TwoParticleState::new(f.clone(), g.clone(), stats)?;
        let out = collapse(&state, r)?;
        models.pure(out.alpha_f, out.alpha_g, out.sign_used, r)
    };
    let plus = sign_model(Statistics::Boson)?;
    let minus = sign_model(Statistics::Fermion)?;
    infer_sign_from_models(empirical, &plus, &minus, threshold)
}

/// Sign inference against precomputed `+` and `-` models (e.g. marginalized
/// over the first detection position).
pub fn infer_sign_from_models(
    empirical: &DetectionPattern,
    plus: &DetectionPattern,
    minus: &DetectionPattern,
    threshold: f64,
) -> Result<SignInference> {
    let counts = empirical
        .counts()
        .ok_or_else(|| Error::InvalidInput("sign inference needs an empirical pattern".into()))?;
    let total: u64 = counts.iter().sum();
    if total < MIN_COUNTS {
        return Err(Error::InvalidInput(format!(
            "sign inference needs at least {MIN_COUNTS} counts, got {total}"
        )));
    }
    if plus.grid != empirical.grid || minus.grid != empirical.grid {
        return Err(Error::GridMismatch);
    }
    let tv = pattern_distance(plus, minus)?;
    if tv < DEGENERACY_TV {
        return Err(Error::ModelDegenerate { tv });
    }
    let ll_plus = log_likelihood(counts, plus);
    let ll_minus = log_likelihood(counts, minus);
    let gap = ll_plus - ll_minus;
    let verdict = if gap > threshold {
        SignVerdict::Plus
    } else if gap < -threshold {
        SignVerdict::Minus
    } else {
        SignVerdict::Inconclusive
    };
    Ok(SignInference { verdict, gap, ll_plus, ll_minus })
}
