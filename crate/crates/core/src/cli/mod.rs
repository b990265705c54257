//! Command line front end.
//!
//! Exit codes: 0 success, 1 I/O or internal failure, 2 configuration error,
//! 3 nodal point or null state, 4 redraw cap exceeded. Outputs are assembled
//! in memory and only written once the whole command has succeeded; the
//! manifest is written last.

pub mod config;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::experiment::{
    discriminate_with, fmt_f64, run_trials_with, scenario_superposition, Conditioning,
    HypothesisModels,
};
use crate::fock::{collapse, collapse_distinguishable, Statistics};
use crate::io::{events_to_csv, key_values_to_text, mode_distribution_to_csv, pattern_to_csv};
use crate::patterns::{mixture_pattern, pattern_distance, pure_pattern};
use config::Config;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NODAL: i32 = 3;
pub const EXIT_REDRAW_CAP: i32 = 4;

const ASSUMPTIONS: &[&str] = &[
    "first-detection density proportional to N^2(R) (|psi_f|^2 + |psi_g|^2 for the mixture)",
    "point-like detectors at grid nodes",
    "ideal postselection of one-detection events, detector efficiency 1.0",
    "collapsed survivor treated as a pure state",
];

#[derive(Debug, Parser)]
#[command(name = "symverify", version, about = "Exchange-symmetry verification by one-particle detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Collapse the pair at detection.R and write the survivor's mode distribution.
    Collapse(Common),
    /// Write the pure and mixture array patterns at detection.R and their distance.
    Pattern(Common),
    /// Simulate the two-stage run and discriminate the hypotheses.
    Experiment(Common),
    /// Build a two-peak momentum superposition from far-separated wavepackets.
    ScenarioSuperposition(Common),
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Overrides experiment.seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    quiet: bool,
}

/// Files produced by a command, plus text for standard output.
struct Outputs {
    files: Vec<(&'static str, String)>,
    echo: String,
    seed: Option<u64>,
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let (name, common) = match &cli.command {
        Command::Collapse(c) => ("collapse", c),
        Command::Pattern(c) => ("pattern", c),
        Command::Experiment(c) => ("experiment", c),
        Command::ScenarioSuperposition(c) => ("scenario-superposition", c),
    };
    let started = unix_now();
    let result = Config::load(&common.config).and_then(|config| {
        let out = match &cli.command {
            Command::Collapse(_) => cmd_collapse(&config),
            Command::Pattern(_) => cmd_pattern(&config),
            Command::Experiment(c) => cmd_experiment(&config, c.seed),
            Command::ScenarioSuperposition(_) => cmd_scenario(&config),
        }?;
        Ok((config, out))
    });
    let (config, out) = match result {
        Ok(v) => v,
        Err(e) => {
            eprintln!("symverify {name}: {e}");
            return exit_code(&e);
        }
    };
    match write_outputs(&common.out_dir, name, &config, &out, started) {
        Ok(()) => {
            if !common.quiet {
                print!("{}", out.echo);
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("symverify {name}: {e}");
            EXIT_FAILURE
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NodalPointUndefined { .. } | Error::NullState { .. } => EXIT_NODAL,
        Error::RedrawCapExceeded { .. } => EXIT_REDRAW_CAP,
        Error::Io(_) | Error::Consistency(_) => EXIT_FAILURE,
        _ => EXIT_CONFIG,
    }
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn c64(z: num_complex::Complex64) -> String {
    format!("{} {}", fmt_f64(z.re), fmt_f64(z.im))
}

fn cmd_collapse(config: &Config) -> Result<Outputs, Error> {
    let state = config.state()?;
    let r = config.detection_r()?;
    let outcome = match state.stats() {
        Statistics::Distinguishable => collapse_distinguishable(&state, r, config.species()?)?,
        _ => collapse(&state, r)?,
    };
    let kv = vec![
        ("R", fmt_f64(outcome.r)),
        ("stats", state.stats().name().to_string()),
        ("sign", outcome.sign_used.to_string()),
        ("alpha_f", c64(outcome.alpha_f)),
        ("alpha_g", c64(outcome.alpha_g)),
        ("N", fmt_f64(outcome.norm_n)),
        ("overlap_gf", c64(outcome.overlap_gf)),
        ("two_particle_norm_sq", fmt_f64(state.norm_sq())),
    ];
    let text = key_values_to_text(&kv);
    Ok(Outputs {
        files: vec![("h.csv", mode_distribution_to_csv(&outcome.h)?), ("outcome.txt", text.clone())],
        echo: text,
        seed: None,
    })
}

fn cmd_pattern(config: &Config) -> Result<Outputs, Error> {
    let state = config.state()?;
    let r = config.detection_r()?;
    let array = config.array()?;
    let outcome = match state.stats() {
        Statistics::Distinguishable => collapse_distinguishable(&state, r, config.species()?)?,
        _ => collapse(&state, r)?,
    };
    let pure = pure_pattern(&outcome, &array)?;
    let mixture = mixture_pattern(state.f(), state.g(), r, &array)?;
    let distance = pattern_distance(&pure, &mixture)?;
    let text = key_values_to_text(&[
        ("tv_distance", fmt_f64(distance)),
        ("R", fmt_f64(r)),
        ("stats", state.stats().name().to_string()),
        ("truncated", (pure.meta().truncated || mixture.meta().truncated).to_string()),
    ]);
    Ok(Outputs {
        files: vec![
            ("pure.csv", pattern_to_csv(&pure)?),
            ("mixture.csv", pattern_to_csv(&mixture)?),
            ("distance.txt", text.clone()),
        ],
        echo: text,
        seed: None,
    })
}

fn cmd_experiment(config: &Config, seed: Option<u64>) -> Result<Outputs, Error> {
    let exp = config.experiment(seed)?;
    let models = HypothesisModels::build(&exp.state, &exp.region, &exp.array, exp.conditioning)?;
    let run = run_trials_with(&exp, &models)?;
    let report = discriminate_with(&run.empirical, &exp.state, &exp.region, &models, &exp.rule)?;

    let mut kv = report.to_key_values();
    kv.extend([
        ("truth".to_string(), exp.truth.to_string()),
        (
            "conditioning".to_string(),
            match exp.conditioning {
                Conditioning::FixedR(r) => format!("fixed {}", fmt_f64(r)),
                Conditioning::MarginalizeR => "marginalize".to_string(),
            },
        ),
        ("trials".to_string(), exp.trials.to_string()),
        ("seed".to_string(), exp.seed.to_string()),
        ("redraws".to_string(), run.redraws.to_string()),
        ("redraw_fraction".to_string(), fmt_f64(run.redraw_fraction())),
    ]);
    let text = key_values_to_text(&kv);
    Ok(Outputs {
        files: vec![
            ("events.csv", events_to_csv(&run.events)?),
            ("empirical.csv", pattern_to_csv(&run.empirical)?),
            ("report.txt", text.clone()),
        ],
        echo: text,
        seed: Some(exp.seed),
    })
}

fn cmd_scenario(config: &Config) -> Result<Outputs, Error> {
    let (grid, params) = config.scenario()?;
    let rep = scenario_superposition(grid, &params)?;
    let mut kv = vec![
        ("R".to_string(), fmt_f64(params.r)),
        ("sign".to_string(), rep.outcome.sign_used.to_string()),
        ("alpha_f".to_string(), c64(rep.outcome.alpha_f)),
        ("alpha_g".to_string(), c64(rep.outcome.alpha_g)),
        ("N".to_string(), fmt_f64(rep.outcome.norm_n)),
        ("peak_count".to_string(), rep.peaks.len().to_string()),
    ];
    for (i, p) in rep.peaks.iter().enumerate() {
        kv.push((format!("peak{i}.location"), fmt_f64(p.location)));
        kv.push((format!("peak{i}.weight"), fmt_f64(p.weight)));
    }
    kv.extend([
        ("mass_f".to_string(), fmt_f64(rep.mass_f)),
        ("mass_g".to_string(), fmt_f64(rep.mass_g)),
        ("measured_ratio".to_string(), fmt_f64(rep.measured_ratio)),
        ("expected_ratio".to_string(), fmt_f64(rep.expected_ratio)),
    ]);
    let text = key_values_to_text(&kv);
    Ok(Outputs {
        files: vec![("h.csv", mode_distribution_to_csv(&rep.outcome.h)?), ("scenario.txt", text.clone())],
        echo: text,
        seed: None,
    })
}

fn write_outputs(dir: &Path, command: &str, config: &Config, out: &Outputs, started: u64) -> Result<(), Error> {
    std::fs::create_dir_all(dir)?;
    let mut written: Vec<PathBuf> = Vec::new();
    let result = (|| {
        for (name, body) in &out.files {
            let path = dir.join(name);
            std::fs::write(&path, body)?;
            written.push(path);
        }
        let manifest = manifest(command, config, out, started);
        let path = dir.join("manifest.txt");
        std::fs::write(&path, manifest)?;
        written.push(path);
        Ok(())
    })();
    if result.is_err() {
        for path in &written {
            let _ = std::fs::remove_file(path);
        }
    }
    result
}

fn manifest(command: &str, config: &Config, out: &Outputs, started: u64) -> String {
    let mut kv: Vec<(String, String)> = vec![
        ("tool".into(), format!("symverify {}", env!("CARGO_PKG_VERSION"))),
        ("command".into(), command.into()),
        ("seed".into(), out.seed.map(|s| s.to_string()).unwrap_or_else(|| "none".into())),
        ("started_unix".into(), started.to_string()),
        ("finished_unix".into(), unix_now().to_string()),
    ];
    let files: Vec<&str> = out.files.iter().map(|(n, _)| *n).chain(["manifest.txt"]).collect();
    kv.push(("outputs".into(), files.join(", ")));
    for (i, a) in ASSUMPTIONS.iter().enumerate() {
        kv.push((format!("assumption.{i}"), a.to_string()));
    }
    for (k, v) in config.resolved() {
        kv.push((format!("config.{k}"), v));
    }
    key_values_to_text(&kv)
}
