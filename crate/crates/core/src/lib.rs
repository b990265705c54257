//! Simulation of exchange-symmetry verification for two-particle states.
//!
//! One particle of a pair in modes `f`, `g` is destructively detected at `R`;
//! for an (anti)symmetrized pair the survivor is left in the coherent
//! superposition `h = alpha_f g +/- alpha_g f`, while a distinguishable pair
//! leaves `f` or `g` unchanged. The detector-array pattern of the survivor
//! separates the two cases.
//!
//! - [`wavepacket`]: momentum-grid mode distributions and plane-wave transforms
//! - [`fock`]: two-particle states and the collapse
//! - [`patterns`]: array patterns under both hypotheses, distances, sign inference
//! - [`experiment`]: Monte Carlo runs and the discrimination test
//! - [`cli`]: config-driven command line front end

// `!(x > y)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod experiment;
pub mod fock;
pub mod io;
pub mod patterns;
pub mod stats;
pub mod wavepacket;

pub use error::{Error, Result};
pub use experiment::{
    discriminate, run_trials, sample_first_detection, scenario_superposition, Conditioning,
    DecisionRule, DiscriminationReport, EventRecord, ExperimentConfig, ScenarioParams, Truth,
    Verdict,
};
pub use fock::{
    collapse, collapse_distinguishable, detection_density, two_particle_norm_sq, CollapseOutcome,
    Sign, Species, Statistics, TwoParticleState,
};
pub use patterns::{
    infer_sign, mixture_pattern, pattern_distance, pure_pattern, DetectionPattern, PatternKind,
    SignInference, SignVerdict,
};
pub use wavepacket::{
    make_gaussian, make_gaussian_pair, ModeDistribution, MomentumGrid, PositionGrid,
    SpatialAmplitude,
};
