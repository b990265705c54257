//! Monte Carlo simulation of the two-stage verification run.
//!
//! Stage one draws the first (destructive) detection position `R`; stage two
//! draws the surviving particle's click on the detector array. Under the
//! symmetrized truth the survivor is the pure collapsed state; otherwise it is
//! one of the two initial modes, chosen with the distinguishable-pair weights.
//! Every trial owns an RNG substream keyed by `(seed, trial)`, so results do
//! not depend on how trials are spread over workers.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::{
    collapse, detection_density, CollapseOutcome, Sign, Statistics, TwoParticleState, NODAL_EPS,
};
use crate::patterns::{
    infer_sign_from_models, log_likelihood, pattern_distance, ArrayAmplitudes, DetectionPattern,
    PatternKind, PatternMeta, DEFAULT_SIGN_THRESHOLD, DEGENERACY_TV, MIN_COUNTS,
};
use crate::stats::{chi_square_gof, ChiSquare};
use crate::wavepacket::{make_gaussian, MomentumGrid, PositionGrid};

/// Redraws allowed per requested trial before a run is abandoned.
pub const REDRAW_CAP_FACTOR: u64 = 100;

/// Default significance level of the dual chi-square decision.
pub const DEFAULT_ALPHA: f64 = 1e-3;

/// Which generative model produces the synthetic data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truth {
    Symmetrized,
    NotSymmetrized,
}

impl fmt::Display for Truth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Truth::Symmetrized => "symmetrized",
            Truth::NotSymmetrized => "not_symmetrized",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Conditioning {
    /// Detector held at one position.
    FixedR(f64),
    /// `R` drawn from the first-detection density over the region.
    MarginalizeR,
}

impl fmt::Display for Conditioning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Conditioning::FixedR(r) => write!(f, "fixed R = {r}"),
            Conditioning::MarginalizeR => f.write_str("marginalize R"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionRule {
    pub alpha: f64,
    pub sign_threshold: f64,
    pub min_counts: u64,
}

impl Default for DecisionRule {
    fn default() -> Self {
        DecisionRule {
            alpha: DEFAULT_ALPHA,
            sign_threshold: DEFAULT_SIGN_THRESHOLD,
            min_counts: MIN_COUNTS,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub state: TwoParticleState,
    /// Positions available to the first detector.
    pub region: PositionGrid,
    pub array: PositionGrid,
    pub trials: u64,
    pub seed: u64,
    pub truth: Truth,
    pub conditioning: Conditioning,
    /// Worker threads; 0 uses the rayon default.
    pub workers: usize,
    pub rule: DecisionRule,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidInput("trials must be at least 1".into()));
        }
        if let Conditioning::FixedR(r) = self.conditioning {
            if !self.region.contains(r) {
                return Err(Error::InvalidInput(format!(
                    "fixed R = {r} outside first-detector region {}",
                    self.region
                )));
            }
        }
        if self.truth == Truth::Symmetrized && self.state.stats().sign().is_none() {
            return Err(Error::InvalidInput(
                "symmetrized truth needs boson or fermion statistics".into(),
            ));
        }
        if !(self.rule.alpha > 0.0 && self.rule.alpha < 1.0) {
            return Err(Error::InvalidInput(format!("alpha = {}", self.rule.alpha)));
        }
        Ok(())
    }
}

/// Which initial mode the surviving particle carries (mixture truth only).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    F,
    G,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::F => "f",
            Branch::G => "g",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRecord {
    pub trial: u64,
    /// First detection position.
    pub r_first: f64,
    /// Array detection position.
    pub r_array: f64,
    pub array_index: usize,
    /// Surviving mode; populated only under the mixture truth.
    pub branch: Option<Branch>,
    pub redraws: u32,
}

#[derive(Debug, Clone)]
pub struct TrialRun {
    pub events: Vec<EventRecord>,
    pub empirical: DetectionPattern,
    pub redraws: u64,
}

impl TrialRun {
    pub fn redraw_fraction(&self) -> f64 {
        self.redraws as f64 / (self.redraws + self.events.len() as u64) as f64
    }
}

/// Independent RNG substream for one trial.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Inverse-CDF sampler over the nodes of a discrete distribution.
#[derive(Debug, Clone)]
pub struct DiscreteSampler {
    cdf: Vec<f64>,
    last_positive: usize,
}

impl DiscreteSampler {
    pub fn new(weights: &[f64]) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidInput("sampler weights must be finite and nonnegative".into()));
        }
        let cdf: Vec<f64> = weights
            .iter()
            .scan(0.0, |acc, w| {
                *acc += w;
                Some(*acc)
            })
            .collect();
        let last_positive = weights.iter().rposition(|w| *w > 0.0).ok_or(Error::EmptySupport)?;
        Ok(DiscreteSampler { cdf, last_positive })
    }

    pub fn from_pattern(pattern: &DetectionPattern) -> Result<Self> {
        Self::new(pattern.density())
    }

    /// Index of the first cell whose cumulative weight exceeds `u * total`;
    /// zero-weight cells are never returned.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cdf.last().expect("nonempty");
        let u = rng.random::<f64>() * total;
        self.cdf.partition_point(|&c| c <= u).min(self.last_positive)
    }
}

/// Reusable sampler of first-detection positions over a region.
#[derive(Debug, Clone)]
pub struct FirstDetectionSampler {
    region: PositionGrid,
    density: DetectionPattern,
    sampler: DiscreteSampler,
}

impl FirstDetectionSampler {
    pub fn new(state: &TwoParticleState, region: &PositionGrid) -> Result<Self> {
        let density = detection_density(state, region)?;
        let sampler = DiscreteSampler::from_pattern(&density)?;
        Ok(FirstDetectionSampler { region: *region, density, sampler })
    }

    pub fn density(&self) -> &DetectionPattern {
        &self.density
    }

    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.sampler.sample(rng)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.region.point(self.sampler.sample(rng))
    }
}

/// Draws a first-detection position from the density proportional to `N^2(R)`.
pub fn sample_first_detection<R: Rng + ?Sized>(
    state: &TwoParticleState,
    region: &PositionGrid,
    rng: &mut R,
) -> Result<f64> {
    Ok(FirstDetectionSampler::new(state, region)?.sample(rng))
}

/// Pure and mixture models of the array pattern at each candidate `R`,
/// together with the first-detection weights of both hypotheses.
#[derive(Debug, Clone)]
pub struct HypothesisModels {
    amplitudes: ArrayAmplitudes,
    /// Candidate first-detection positions.
    positions: Vec<f64>,
    /// `N^2(R)` for the state's own statistics.
    symmetric_weights: Vec<f64>,
    /// `|psi_f(R)|^2 + |psi_g(R)|^2`.
    mixture_weights: Vec<f64>,
    /// Survivor-g and survivor-f branch weights at each position.
    branch_weights: Vec<(f64, f64)>,
    pure: Vec<Option<DetectionPattern>>,
    mixture: Vec<Option<DetectionPattern>>,
    sign: Option<Sign>,
    conditioning: Conditioning,
}

impl HypothesisModels {
    pub fn build(
        state: &TwoParticleState,
        region: &PositionGrid,
        array: &PositionGrid,
        conditioning: Conditioning,
    ) -> Result<Self> {
        let positions: Vec<f64> = match conditioning {
            Conditioning::FixedR(r) => vec![r],
            Conditioning::MarginalizeR => region.points().collect(),
        };
        let amplitudes = ArrayAmplitudes::new(state.f(), state.g(), array);
        let sign = state.stats().sign();
        let mut symmetric_weights = Vec::with_capacity(positions.len());
        let mut mixture_weights = Vec::with_capacity(positions.len());
        let mut branch_weights = Vec::with_capacity(positions.len());
        let mut pure = Vec::with_capacity(positions.len());
        let mut mixture = Vec::with_capacity(positions.len());
        for &r in &positions {
            let w_f = state.f().position_amplitude(r).norm_sqr();
            let w_g = state.g().position_amplitude(r).norm_sqr();
            branch_weights.push((w_f, w_g));
            let w_mix = w_f + w_g;
            if w_mix >= NODAL_EPS {
                mixture_weights.push(w_mix);
                mixture.push(Some(amplitudes.mixture(w_f, w_g, r)?));
            } else {
                mixture_weights.push(0.0);
                mixture.push(None);
            }
            match sign {
                Some(_) if !state.is_null() => match collapse(state, r) {
                    Ok(out) => {
                        symmetric_weights.push(out.norm_n * out.norm_n);
                        pure.push(Some(amplitudes.pure(out.alpha_f, out.alpha_g, out.sign_used, r)?));
                    }
                    Err(Error::NodalPointUndefined { .. }) => {
                        symmetric_weights.push(0.0);
                        pure.push(None);
                    }
                    Err(e) => return Err(e),
                },
                _ => {
                    symmetric_weights.push(0.0);
                    pure.push(None);
                }
            }
        }
        Ok(HypothesisModels {
            amplitudes,
            positions,
            symmetric_weights,
            mixture_weights,
            branch_weights,
            pure,
            mixture,
            sign,
            conditioning,
        })
    }

    pub fn conditioning(&self) -> Conditioning {
        self.conditioning
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn amplitudes(&self) -> &ArrayAmplitudes {
        &self.amplitudes
    }

    /// Pure-state model averaged over the first-detection density.
    pub fn pure_model(&self) -> Result<DetectionPattern> {
        let sign = self.sign.ok_or_else(|| {
            Error::InvalidInput("pure hypothesis needs boson or fermion statistics".into())
        })?;
        let mut meta = self.meta("pure superposition");
        meta.sign = Some(sign);
        average(&self.symmetric_weights, &self.pure, PatternKind::PureModel, meta)
    }

    pub fn mixture_model(&self) -> Result<DetectionPattern> {
        average(
            &self.mixture_weights,
            &self.mixture,
            PatternKind::MixtureModel,
            self.meta("incoherent mixture"),
        )
    }

    fn meta(&self, source: &str) -> PatternMeta {
        PatternMeta {
            r_detect: (self.positions.len() == 1).then(|| self.positions[0]),
            truncated: self.amplitudes.truncated(),
            source: source.into(),
            ..PatternMeta::default()
        }
    }
}

fn average(
    weights: &[f64],
    patterns: &[Option<DetectionPattern>],
    kind: PatternKind,
    meta: PatternMeta,
) -> Result<DetectionPattern> {
    let parts: Vec<(f64, &DetectionPattern)> = weights
        .iter()
        .zip(patterns)
        .filter_map(|(w, p)| p.as_ref().map(|p| (*w, p)))
        .filter(|(w, _)| *w > 0.0)
        .collect();
    if parts.is_empty() {
        return Err(match meta.r_detect {
            Some(r) => Error::NodalPointUndefined { r },
            None => Error::EmptySupport,
        });
    }
    DetectionPattern::mix(&parts, kind, meta)
}

/// One sampler per candidate `R` plus the sampler choosing `R` itself.
struct TrialPlan {
    positions: Vec<f64>,
    first: DiscreteSampler,
    stage: StagePlan,
    array: PositionGrid,
}

enum StagePlan {
    Pure(Vec<Option<DiscreteSampler>>),
    Mixture {
        branch_weights: Vec<(f64, f64)>,
        rho_f: Option<DiscreteSampler>,
        rho_g: Option<DiscreteSampler>,
    },
}

impl TrialPlan {
    fn new(config: &ExperimentConfig, models: &HypothesisModels) -> Result<Self> {
        let (first_weights, stage) = match config.truth {
            Truth::Symmetrized => {
                let samplers = models
                    .pure
                    .iter()
                    .map(|p| p.as_ref().map(DiscreteSampler::from_pattern).transpose())
                    .collect::<Result<Vec<_>>>()?;
                (&models.symmetric_weights, StagePlan::Pure(samplers))
            }
            Truth::NotSymmetrized => {
                let rho = |psi: &crate::wavepacket::SpatialAmplitude| DiscreteSampler::new(&psi.density()).ok();
                (
                    &models.mixture_weights,
                    StagePlan::Mixture {
                        branch_weights: models.branch_weights.clone(),
                        rho_f: rho(models.amplitudes.psi_f()),
                        rho_g: rho(models.amplitudes.psi_g()),
                    },
                )
            }
        };
        // a fixed detector cannot be moved off a node by redrawing
        if let Conditioning::FixedR(r) = config.conditioning {
            if first_weights[0] <= 0.0 {
                return Err(Error::NodalPointUndefined { r });
            }
        }
        let first = DiscreteSampler::new(first_weights)?;
        Ok(TrialPlan { positions: models.positions.clone(), first, stage, array: config.array })
    }

    /// Draw for one trial: `(R index, array index, branch)`, or `None` when the
    /// drawn configuration is nodal and must be redrawn.
    fn draw(&self, rng: &mut ChaCha8Rng) -> Option<(usize, usize, Option<Branch>)> {
        let i = self.first.sample(rng);
        match &self.stage {
            StagePlan::Pure(samplers) => {
                let s = samplers[i].as_ref()?;
                Some((i, s.sample(rng), None))
            }
            StagePlan::Mixture { branch_weights, rho_f, rho_g } => {
                let (w_f, w_g) = branch_weights[i];
                let total = w_f + w_g;
                if !(total >= NODAL_EPS) {
                    return None;
                }
                // detecting f (weight |psi_f(R)|^2) leaves g
                let branch = if rng.random::<f64>() * total < w_f { Branch::G } else { Branch::F };
                let sampler = match branch {
                    Branch::F => rho_f.as_ref()?,
                    Branch::G => rho_g.as_ref()?,
                };
                Some((i, sampler.sample(rng), Some(branch)))
            }
        }
    }
}

/// One trial on its own substream, redrawing nodal configurations.
fn draw_event(plan: &TrialPlan, seed: u64, t: u64, trials: u64) -> Result<EventRecord> {
    let cap = REDRAW_CAP_FACTOR.saturating_mul(trials);
    let mut rng = trial_rng(seed, t);
    let mut redraws = 0u64;
    loop {
        if let Some((i, j, branch)) = plan.draw(&mut rng) {
            return Ok(EventRecord {
                trial: t,
                r_first: plan.positions[i],
                r_array: plan.array.point(j),
                array_index: j,
                branch,
                redraws: redraws as u32,
            });
        }
        redraws += 1;
        if redraws > cap {
            return Err(Error::RedrawCapExceeded { redraws, trials });
        }
    }
}

pub fn run_trials(config: &ExperimentConfig) -> Result<TrialRun> {
    config.validate()?;
    let models = HypothesisModels::build(&config.state, &config.region, &config.array, config.conditioning)?;
    run_trials_with(config, &models)
}

/// [`run_trials`] against prebuilt models.
pub fn run_trials_with(config: &ExperimentConfig, models: &HypothesisModels) -> Result<TrialRun> {
    config.validate()?;
    let plan = TrialPlan::new(config, models)?;
    let cap = REDRAW_CAP_FACTOR.saturating_mul(config.trials);

    let one = |t: u64| draw_event(&plan, config.seed, t, config.trials);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::InvalidInput(format!("worker pool: {e}")))?;
    let events: Vec<EventRecord> =
        pool.install(|| (0..config.trials).into_par_iter().map(one).collect::<Result<Vec<_>>>())?;

    let redraws: u64 = events.iter().map(|e| e.redraws as u64).sum();
    if redraws > cap {
        return Err(Error::RedrawCapExceeded { redraws, trials: config.trials });
    }
    let mut counts = vec![0u64; config.array.len()];
    for e in &events {
        counts[e.array_index] += 1;
    }
    let meta = PatternMeta {
        r_detect: match config.conditioning {
            Conditioning::FixedR(r) => Some(r),
            Conditioning::MarginalizeR => None,
        },
        sign: config.state.stats().sign(),
        source: format!("simulated, truth = {}", config.truth),
        ..PatternMeta::default()
    };
    let empirical = DetectionPattern::from_counts(config.array, counts, meta)?;
    Ok(TrialRun { events, empirical, redraws })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Symmetrized,
    NotSymmetrized,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Symmetrized => "Symmetrized",
            Verdict::NotSymmetrized => "NotSymmetrized",
            Verdict::Inconclusive => "Inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminationReport {
    pub counts: u64,
    pub tv_distance_to_pure: f64,
    pub tv_distance_to_mixture: f64,
    /// `ln L(pure) - ln L(mixture)`.
    pub log_likelihood_ratio: f64,
    pub chi2_pure: ChiSquare,
    pub chi2_mixture: ChiSquare,
    pub p_value_chi2_pure: f64,
    pub p_value_chi2_mixture: f64,
    pub alpha: f64,
    pub verdict: Verdict,
    pub inferred_sign: Option<Sign>,
    /// `ln L(+) - ln L(-)` when sign inference ran.
    pub sign_gap: Option<f64>,
    pub model_degenerate: bool,
    pub insufficient_counts: bool,
    /// Total variation between the two hypotheses themselves.
    pub model_separation: f64,
}

impl DiscriminationReport {
    /// `key = value` lines.
    pub fn to_key_values(&self) -> Vec<(String, String)> {
        let opt = |v: Option<String>| v.unwrap_or_else(|| "none".into());
        vec![
            ("verdict".into(), self.verdict.to_string()),
            ("inferred_sign".into(), opt(self.inferred_sign.map(|s| s.to_string()))),
            ("counts".into(), self.counts.to_string()),
            ("alpha".into(), fmt_f64(self.alpha)),
            ("p_value_chi2_pure".into(), fmt_f64(self.p_value_chi2_pure)),
            ("p_value_chi2_mixture".into(), fmt_f64(self.p_value_chi2_mixture)),
            ("chi2_pure".into(), fmt_f64(self.chi2_pure.statistic)),
            ("chi2_pure_dof".into(), self.chi2_pure.dof.to_string()),
            ("chi2_mixture".into(), fmt_f64(self.chi2_mixture.statistic)),
            ("chi2_mixture_dof".into(), self.chi2_mixture.dof.to_string()),
            ("log_likelihood_ratio".into(), fmt_f64(self.log_likelihood_ratio)),
            ("tv_distance_to_pure".into(), fmt_f64(self.tv_distance_to_pure)),
            ("tv_distance_to_mixture".into(), fmt_f64(self.tv_distance_to_mixture)),
            ("model_separation".into(), fmt_f64(self.model_separation)),
            ("sign_log_likelihood_gap".into(), opt(self.sign_gap.map(fmt_f64))),
            ("model_degenerate".into(), self.model_degenerate.to_string()),
            ("insufficient_counts".into(), self.insufficient_counts.to_string()),
        ]
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Tests the empirical pattern against the pure and mixture hypotheses built
/// from `state` under `conditioning`.
pub fn discriminate(
    empirical: &DetectionPattern,
    state: &TwoParticleState,
    region: &PositionGrid,
    conditioning: Conditioning,
    rule: &DecisionRule,
) -> Result<DiscriminationReport> {
    let models = HypothesisModels::build(state, region, empirical.grid(), conditioning)?;
    discriminate_with(empirical, state, region, &models, rule)
}

/// [`discriminate`] against prebuilt models.
pub fn discriminate_with(
    empirical: &DetectionPattern,
    state: &TwoParticleState,
    region: &PositionGrid,
    models: &HypothesisModels,
    rule: &DecisionRule,
) -> Result<DiscriminationReport> {
    let counts = empirical
        .counts()
        .ok_or_else(|| Error::InvalidInput("discrimination needs an empirical pattern".into()))?;
    let total = empirical.total_counts();
    let pure = models.pure_model()?;
    let mixture = models.mixture_model()?;

    let chi2_pure = chi_square_gof(counts, &pure.probabilities())?;
    let chi2_mixture = chi_square_gof(counts, &mixture.probabilities())?;
    let model_separation = pattern_distance(&pure, &mixture)?;
    let model_degenerate = model_separation < DEGENERACY_TV;
    let insufficient_counts = total < rule.min_counts;

    let verdict = if model_degenerate || insufficient_counts {
        Verdict::Inconclusive
    } else {
        let pure_fits = chi2_pure.p_value > rule.alpha;
        let mixture_fits = chi2_mixture.p_value > rule.alpha;
        match (pure_fits, mixture_fits) {
            (true, false) => Verdict::Symmetrized,
            (false, true) => Verdict::NotSymmetrized,
            _ => Verdict::Inconclusive,
        }
    };

    let (inferred_sign, sign_gap) = if verdict == Verdict::Symmetrized {
        sign_models(state, region, empirical.grid(), models)
            .and_then(|(plus, minus)| infer_sign_from_models(empirical, &plus, &minus, rule.sign_threshold))
            .map(|inf| (inf.verdict.sign(), Some(inf.gap)))
            .unwrap_or((None, None))
    } else {
        (None, None)
    };

    Ok(DiscriminationReport {
        counts: total,
        tv_distance_to_pure: pattern_distance(empirical, &pure)?,
        tv_distance_to_mixture: pattern_distance(empirical, &mixture)?,
        log_likelihood_ratio: log_likelihood(counts, &pure) - log_likelihood(counts, &mixture),
        p_value_chi2_pure: chi2_pure.p_value,
        p_value_chi2_mixture: chi2_mixture.p_value,
        chi2_pure,
        chi2_mixture,
        alpha: rule.alpha,
        verdict,
        inferred_sign,
        sign_gap,
        model_degenerate,
        insufficient_counts,
        model_separation,
    })
}

/// Pure models for both exchange signs on the same conditioning.
fn sign_models(
    state: &TwoParticleState,
    region: &PositionGrid,
    array: &PositionGrid,
    models: &HypothesisModels,
) -> Result<(DetectionPattern, DetectionPattern)> {
    let own = state.stats().sign().ok_or_else(|| Error::InvalidInput("no exchange sign".into()))?;
    let other_state = state.with_stats(Statistics::from_sign(own.flipped()));
    let other = HypothesisModels::build(&other_state, region, array, models.conditioning)?.pure_model()?;
    let own_model = models.pure_model()?;
    Ok(match own {
        Sign::Plus => (own_model, other),
        Sign::Minus => (other, own_model),
    })
}

/// Minimum peak separation, in units of sigma.
pub const DEFAULT_MIN_SEPARATION: f64 = 8.0;

/// Peaks lower than this fraction of the tallest are ignored.
const PEAK_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioParams {
    pub p_f: f64,
    pub p_g: f64,
    pub sigma: f64,
    pub r: f64,
    pub stats: Statistics,
    pub x0_f: f64,
    pub x0_g: f64,
    pub min_separation: f64,
}

impl ScenarioParams {
    pub fn new(p_f: f64, p_g: f64, sigma: f64, r: f64, stats: Statistics) -> Self {
        ScenarioParams {
            p_f,
            p_g,
            sigma,
            r,
            stats,
            x0_f: 0.0,
            x0_g: 0.0,
            min_separation: DEFAULT_MIN_SEPARATION,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub location: f64,
    pub height: f64,
    /// Probability mass of `|h|^2` on this peak's side of the midpoint.
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct ScenarioReport {
    pub outcome: CollapseOutcome,
    /// Local maxima of `|h(p)|^2`, ascending in momentum.
    pub peaks: Vec<Peak>,
    /// Mass near `p_f` over mass near `p_g`.
    pub measured_ratio: f64,
    /// `|alpha_g|^2 / |alpha_f|^2`.
    pub expected_ratio: f64,
    pub mass_f: f64,
    pub mass_g: f64,
}

/// Collapses a pair of far-separated momentum wavepackets and reports the
/// two-peak momentum distribution of the survivor.
pub fn scenario_superposition(grid: MomentumGrid, params: &ScenarioParams) -> Result<ScenarioReport> {
    let ScenarioParams { p_f, p_g, sigma, r, stats, x0_f, x0_g, min_separation } = *params;
    if !(sigma > 0.0) {
        return Err(Error::InvalidInput(format!("sigma = {sigma}")));
    }
    let separation = (p_f - p_g).abs();
    let required = min_separation * sigma;
    if separation < required {
        return Err(Error::SeparationTooSmall { separation, required });
    }
    if stats.sign().is_none() {
        return Err(Error::InvalidInput("superposition needs boson or fermion statistics".into()));
    }
    let f = make_gaussian(grid, p_f, sigma, x0_f)?;
    let g = make_gaussian(grid, p_g, sigma, x0_g)?;
    // both particles must be able to reach the detector
    let eps = NODAL_EPS.sqrt();
    if f.position_amplitude(r).norm() <= eps || g.position_amplitude(r).norm() <= eps {
        return Err(Error::NodalPointUndefined { r });
    }
    let state = TwoParticleState::new(f, g, stats)?;
    let outcome = collapse(&state, r)?;

    let rho = outcome.h.density();
    let dp = grid.step();
    let top = rho.iter().cloned().fold(0.0, f64::max);
    let mid = 0.5 * (p_f + p_g);
    let tie = 1e-12 * (grid.max() - grid.min());
    // each side is summed outward from the midpoint so mirror-image
    // configurations give identical masses
    let (mut lo_mass, mut hi_mass) = (0.0, 0.0);
    let (mut lo, mut hi) = (vec![], vec![]);
    for (k, p) in grid.points().enumerate() {
        if (p - mid).abs() <= tie {
            lo_mass += 0.5 * rho[k] * dp;
            hi_mass += 0.5 * rho[k] * dp;
        } else if p < mid {
            lo.push(k);
        } else {
            hi.push(k);
        }
    }
    lo_mass = lo.iter().rev().fold(lo_mass, |m, &k| m + rho[k] * dp);
    hi_mass = hi.iter().fold(hi_mass, |m, &k| m + rho[k] * dp);
    let peaks: Vec<Peak> = (0..rho.len())
        .filter(|&k| {
            let left = if k == 0 { f64::NEG_INFINITY } else { rho[k - 1] };
            let right = if k + 1 == rho.len() { f64::NEG_INFINITY } else { rho[k + 1] };
            rho[k] > left && rho[k] >= right && rho[k] >= PEAK_FLOOR * top
        })
        .map(|k| {
            let location = grid.point(k);
            let weight = if location < mid { lo_mass } else { hi_mass };
            Peak { location, height: rho[k], weight }
        })
        .collect();

    let (mass_f, mass_g) = if p_f < p_g { (lo_mass, hi_mass) } else { (hi_mass, lo_mass) };
    let expected_ratio = outcome.alpha_g.norm_sqr() / outcome.alpha_f.norm_sqr();
    Ok(ScenarioReport {
        measured_ratio: mass_f / mass_g,
        expected_ratio,
        outcome,
        peaks,
        mass_f,
        mass_g,
    })
}
