//! Text formats: mode-distribution CSV (`p,re,im`), pattern CSV
//! (`# meta:` line then `r,density`), event CSV (`trial,R,r,branch`) and
//! `key = value` reports. Floats are written with 17 significant digits.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::experiment::{fmt_f64, EventRecord};
use crate::fock::Sign;
use crate::patterns::{DetectionPattern, PatternKind, PatternMeta};
use crate::wavepacket::{ModeDistribution, PositionGrid};

/// Relative tolerance on the spacing of a tabulated grid.
pub const SPACING_TOL: f64 = 1e-9;

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

fn check_header(r: &mut csv::Reader<&[u8]>, expected: &[&str]) -> Result<()> {
    let header = r.headers().map_err(csv_err)?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::Format(format!(
            "expected header `{}`, found `{}`",
            expected.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    Ok(())
}

fn parse_f64(field: &str, what: &str, line: usize) -> Result<f64> {
    field
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::Format(format!("row {line}: bad {what} `{field}`")))
}

pub fn mode_distribution_to_csv(f: &ModeDistribution) -> Result<String> {
    let mut w = writer();
    w.write_record(["p", "re", "im"]).map_err(csv_err)?;
    for (p, a) in f.grid().points().zip(f.amplitudes()) {
        w.write_record([fmt_f64(p), fmt_f64(a.re), fmt_f64(a.im)]).map_err(csv_err)?;
    }
    finish(w)
}

/// Loads a tabulated distribution. The `p` column must be uniformly spaced;
/// amplitudes are renormalized on the grid.
pub fn mode_distribution_from_csv(text: &str) -> Result<ModeDistribution> {
    let mut r = reader(text);
    check_header(&mut r, &["p", "re", "im"])?;
    let mut ps = Vec::new();
    let mut amp = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != 3 {
            return Err(Error::Format(format!("row {}: expected 3 fields", i + 1)));
        }
        ps.push(parse_f64(&rec[0], "p", i + 1)?);
        amp.push(C64::new(parse_f64(&rec[1], "re", i + 1)?, parse_f64(&rec[2], "im", i + 1)?));
    }
    let grid = uniform_grid::<crate::wavepacket::Momentum>(&ps)?;
    ModeDistribution::from_amplitudes(grid, amp)
}

fn uniform_grid<A>(xs: &[f64]) -> Result<crate::wavepacket::Grid<A>> {
    let (Some(&first), Some(&last)) = (xs.first(), xs.last()) else {
        return Err(Error::Format("no rows".into()));
    };
    let grid = crate::wavepacket::Grid::<A>::new(first, last, xs.len())?;
    let step = grid.step();
    for (k, w) in xs.windows(2).enumerate() {
        if ((w[1] - w[0]) - step).abs() > SPACING_TOL * step {
            return Err(Error::Format(format!(
                "non-uniform spacing between rows {} and {}",
                k + 1,
                k + 2
            )));
        }
    }
    Ok(grid)
}

fn meta_line(p: &DetectionPattern) -> String {
    let m = p.meta();
    let opt_f = |x: Option<f64>| x.map(fmt_f64).unwrap_or_else(|| "none".into());
    format!(
        "# meta: kind={} R={} sign={} counts={} truncated={}\n",
        p.kind(),
        opt_f(m.r_detect),
        m.sign.map(|s| s.to_string()).unwrap_or_else(|| "none".into()),
        m.samples.map(|n| n.to_string()).unwrap_or_else(|| "none".into()),
        m.truncated
    )
}

pub fn pattern_to_csv(p: &DetectionPattern) -> Result<String> {
    let mut w = writer();
    w.write_record(["r", "density"]).map_err(csv_err)?;
    for (r, d) in p.grid().points().zip(p.density()) {
        w.write_record([fmt_f64(r), fmt_f64(*d)]).map_err(csv_err)?;
    }
    Ok(meta_line(p) + &finish(w)?)
}

/// Reads a pattern CSV. Empirical patterns carry their sample count in the
/// meta line, from which the per-node counts are recovered.
pub fn pattern_from_csv(text: &str) -> Result<DetectionPattern> {
    let meta_text = text
        .lines()
        .find_map(|l| l.trim().strip_prefix("# meta:"))
        .ok_or_else(|| Error::Format("missing `# meta:` line".into()))?;
    let fields: BTreeMap<&str, &str> =
        meta_text.split_whitespace().filter_map(|kv| kv.split_once('=')).collect();
    let get = |k: &str| fields.get(k).copied().ok_or_else(|| Error::Format(format!("meta lacks `{k}`")));
    let kind: PatternKind = get("kind")?.parse()?;
    let opt_f = |v: &str| -> Result<Option<f64>> {
        if v == "none" {
            Ok(None)
        } else {
            parse_f64(v, "meta value", 0).map(Some)
        }
    };
    let sign = match get("sign")? {
        "+1" => Some(Sign::Plus),
        "-1" => Some(Sign::Minus),
        "none" => None,
        other => return Err(Error::Format(format!("meta sign `{other}`"))),
    };
    let samples = match get("counts")? {
        "none" => None,
        v => Some(v.parse::<u64>().map_err(|_| Error::Format(format!("meta counts `{v}`")))?),
    };
    let meta = PatternMeta {
        r_detect: opt_f(get("R")?)?,
        sign,
        samples,
        truncated: get("truncated")? == "true",
        source: "file".into(),
    };

    let mut r = reader(text);
    check_header(&mut r, &["r", "density"])?;
    let mut rs = Vec::new();
    let mut density = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != 2 {
            return Err(Error::Format(format!("row {}: expected 2 fields", i + 1)));
        }
        rs.push(parse_f64(&rec[0], "r", i + 1)?);
        density.push(parse_f64(&rec[1], "density", i + 1)?);
    }
    let grid: PositionGrid = uniform_grid(&rs)?;
    match (kind, samples) {
        (PatternKind::Empirical, Some(n)) => {
            let scale = n as f64 * grid.step();
            let counts = density.iter().map(|d| (d * scale).round() as u64).collect();
            DetectionPattern::from_counts(grid, counts, meta)
        }
        _ => DetectionPattern::from_weights(grid, density, kind, meta),
    }
}

pub fn events_to_csv(events: &[EventRecord]) -> Result<String> {
    let mut w = writer();
    w.write_record(["trial", "R", "r", "branch"]).map_err(csv_err)?;
    for e in events {
        let branch = e.branch.map(|b| b.to_string()).unwrap_or_default();
        w.write_record([e.trial.to_string(), fmt_f64(e.r_first), fmt_f64(e.r_array), branch])
            .map_err(csv_err)?;
    }
    finish(w)
}

pub fn key_values_to_text<K: AsRef<str>, V: AsRef<str>>(pairs: &[(K, V)]) -> String {
    pairs.iter().map(|(k, v)| format!("{} = {}\n", k.as_ref(), v.as_ref())).collect()
}

/// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
/// Later duplicates are an error.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("line {}: expected `key = value`", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || k.contains(char::is_whitespace) {
            return Err(Error::Format(format!("line {}: bad key `{k}`", i + 1)));
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(Error::Format(format!("line {}: duplicate key `{k}`", i + 1)));
        }
    }
    Ok(out)
}
