//! Flat `key = value` run configuration with dotted section prefixes.
//!
//! ```text
//! grid.p_min = -10
//! grid.p_max = 10
//! grid.n = 256
//! state.stats = boson
//! state.f.p0 = -2.0
//! state.f.sigma = 1.0
//! state.g.p0 = 2.0
//! state.g.sigma = 1.0
//! detection.R = 0.5
//! ```

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::Error;
use crate::experiment::{
    fmt_f64, Conditioning, DecisionRule, ExperimentConfig, ScenarioParams, Truth,
    DEFAULT_ALPHA, DEFAULT_MIN_SEPARATION,
};
use crate::fock::{Species, Statistics, TwoParticleState};
use crate::io::{mode_distribution_from_csv, parse_key_values};
use crate::patterns::DEFAULT_SIGN_THRESHOLD;
use crate::wavepacket::{
    make_gaussian, make_gaussian_pair, Grid, ModeDistribution, MomentumGrid, PositionGrid,
};

const MODE_KEYS: &[&str] = &["kind", "p0", "sigma", "x0", "x1", "pair_weight", "file"];

const KEYS: &[&str] = &[
    "grid.p_min",
    "grid.p_max",
    "grid.n",
    "state.stats",
    "detection.R",
    "detection.species",
    "array.r_min",
    "array.r_max",
    "array.m",
    "region.r_min",
    "region.r_max",
    "region.m",
    "experiment.trials",
    "experiment.seed",
    "experiment.truth",
    "experiment.conditioning",
    "experiment.workers",
    "experiment.alpha",
    "experiment.sign_threshold",
    "scenario.p_f",
    "scenario.p_g",
    "scenario.sigma",
    "scenario.R",
    "scenario.x0_f",
    "scenario.x0_g",
    "scenario.min_separation",
];

#[derive(Debug)]
pub struct Config {
    values: BTreeMap<String, String>,
    base_dir: PathBuf,
    /// Every parameter read so far, defaults included.
    resolved: RefCell<BTreeMap<String, String>>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("cannot read config {}: {e}", path.display())))?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base_dir)
    }

    pub fn parse(text: &str, base_dir: PathBuf) -> Result<Self, Error> {
        let values = parse_key_values(text)?;
        for key in values.keys() {
            let known = KEYS.contains(&key.as_str())
                || ["state.f.", "state.g."].iter().any(|prefix| {
                    key.strip_prefix(prefix).is_some_and(|rest| MODE_KEYS.contains(&rest))
                });
            if !known {
                return Err(Error::InvalidInput(format!("unknown config key `{key}`")));
            }
        }
        Ok(Config { values, base_dir, resolved: RefCell::default() })
    }

    pub fn set(&mut self, key: &str, value: String) {
        self.values.insert(key.to_string(), value);
    }

    pub fn resolved(&self) -> BTreeMap<String, String> {
        self.resolved.borrow().clone()
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn record(&self, key: &str, value: String) {
        self.resolved.borrow_mut().insert(key.to_string(), value);
    }

    fn parse_value<T: FromStr>(&self, key: &str, raw: &str) -> Result<T, Error> {
        raw.parse::<T>()
            .map_err(|_| Error::InvalidInput(format!("config `{key}`: cannot parse `{raw}`")))
    }

    pub fn f64(&self, key: &str, default: Option<f64>) -> Result<f64, Error> {
        let v = match (self.raw(key), default) {
            (Some(raw), _) => self.parse_value::<f64>(key, raw)?,
            (None, Some(d)) => d,
            (None, None) => return Err(missing(key)),
        };
        if !v.is_finite() {
            return Err(Error::InvalidInput(format!("config `{key}` must be finite")));
        }
        self.record(key, fmt_f64(v));
        Ok(v)
    }

    pub fn u64(&self, key: &str, default: Option<u64>) -> Result<u64, Error> {
        let v = match (self.raw(key), default) {
            (Some(raw), _) => self.parse_value::<u64>(key, raw)?,
            (None, Some(d)) => d,
            (None, None) => return Err(missing(key)),
        };
        self.record(key, v.to_string());
        Ok(v)
    }

    pub fn text(&self, key: &str, default: Option<&str>) -> Result<String, Error> {
        let v = match (self.raw(key), default) {
            (Some(raw), _) => raw.to_string(),
            (None, Some(d)) => d.to_string(),
            (None, None) => return Err(missing(key)),
        };
        self.record(key, v.clone());
        Ok(v)
    }

    fn grid<A>(&self, prefix: &str, keys: [&str; 3], default: (f64, f64, u64)) -> Result<Grid<A>, Error> {
        let lo = self.f64(&format!("{prefix}.{}", keys[0]), Some(default.0))?;
        let hi = self.f64(&format!("{prefix}.{}", keys[1]), Some(default.1))?;
        let n = self.u64(&format!("{prefix}.{}", keys[2]), Some(default.2))?;
        Grid::new(lo, hi, n as usize)
    }

    pub fn momentum_grid(&self) -> Result<MomentumGrid, Error> {
        self.grid("grid", ["p_min", "p_max", "n"], (-10.0, 10.0, 256))
    }

    pub fn array(&self) -> Result<PositionGrid, Error> {
        self.grid("array", ["r_min", "r_max", "m"], (-4.0, 4.0, 161))
    }

    pub fn region(&self) -> Result<PositionGrid, Error> {
        self.grid("region", ["r_min", "r_max", "m"], (-3.0, 3.0, 61))
    }

    pub fn stats(&self) -> Result<Statistics, Error> {
        self.text("state.stats", None)?.parse()
    }

    fn mode(&self, which: &str, grid: MomentumGrid) -> Result<ModeDistribution, Error> {
        let key = |k: &str| format!("state.{which}.{k}");
        let kind = self.text(&key("kind"), Some("gaussian"))?;
        match kind.as_str() {
            "gaussian" => make_gaussian(
                grid,
                self.f64(&key("p0"), None)?,
                self.f64(&key("sigma"), None)?,
                self.f64(&key("x0"), Some(0.0))?,
            ),
            "gaussian_pair" => make_gaussian_pair(
                grid,
                self.f64(&key("p0"), None)?,
                self.f64(&key("sigma"), None)?,
                self.f64(&key("x0"), None)?,
                self.f64(&key("x1"), None)?,
                self.f64(&key("pair_weight"), Some(-1.0))?,
            ),
            "file" => {
                let path = self.base_dir.join(self.text(&key("file"), None)?);
                let text = std::fs::read_to_string(&path).map_err(|e| {
                    Error::InvalidInput(format!("cannot read {}: {e}", path.display()))
                })?;
                mode_distribution_from_csv(&text)
            }
            other => Err(Error::InvalidInput(format!("config `{}`: unknown kind `{other}`", key("kind")))),
        }
    }

    /// Both modes; tabulated files define their own grid and must agree.
    pub fn state(&self) -> Result<TwoParticleState, Error> {
        let grid = self.momentum_grid()?;
        let f = self.mode("f", grid)?;
        let g = self.mode("g", grid)?;
        TwoParticleState::new(f, g, self.stats()?)
    }

    pub fn detection_r(&self) -> Result<f64, Error> {
        self.f64("detection.R", None)
    }

    pub fn species(&self) -> Result<Species, Error> {
        self.text("detection.species", Some("a"))?.parse()
    }

    pub fn experiment(&self, seed_override: Option<u64>) -> Result<ExperimentConfig, Error> {
        let state = self.state()?;
        let seed = match seed_override {
            Some(s) => {
                self.record("experiment.seed", s.to_string());
                s
            }
            None => self.u64("experiment.seed", None)?,
        };
        let truth = match self.text("experiment.truth", Some("symmetrized"))?.as_str() {
            "symmetrized" => Truth::Symmetrized,
            "not_symmetrized" => Truth::NotSymmetrized,
            other => return Err(Error::InvalidInput(format!("experiment.truth `{other}`"))),
        };
        let conditioning = match self.text("experiment.conditioning", Some("fixed"))?.as_str() {
            "fixed" => Conditioning::FixedR(self.detection_r()?),
            "marginalize" => Conditioning::MarginalizeR,
            other => return Err(Error::InvalidInput(format!("experiment.conditioning `{other}`"))),
        };
        let config = ExperimentConfig {
            state,
            region: self.region()?,
            array: self.array()?,
            trials: self.u64("experiment.trials", None)?,
            seed,
            truth,
            conditioning,
            workers: self.u64("experiment.workers", Some(0))? as usize,
            rule: DecisionRule {
                alpha: self.f64("experiment.alpha", Some(DEFAULT_ALPHA))?,
                sign_threshold: self.f64("experiment.sign_threshold", Some(DEFAULT_SIGN_THRESHOLD))?,
                ..DecisionRule::default()
            },
        };
        config.validate()?;
        Ok(config)
    }

    pub fn scenario(&self) -> Result<(MomentumGrid, ScenarioParams), Error> {
        let grid = self.momentum_grid()?;
        let params = ScenarioParams {
            p_f: self.f64("scenario.p_f", None)?,
            p_g: self.f64("scenario.p_g", None)?,
            sigma: self.f64("scenario.sigma", None)?,
            r: self.f64("scenario.R", None)?,
            stats: self.stats()?,
            x0_f: self.f64("scenario.x0_f", Some(0.0))?,
            x0_g: self.f64("scenario.x0_g", Some(0.0))?,
            min_separation: self.f64("scenario.min_separation", Some(DEFAULT_MIN_SEPARATION))?,
        };
        Ok((grid, params))
    }
}

fn missing(key: &str) -> Error {
    Error::InvalidInput(format!("config key `{key}` is required"))
}
