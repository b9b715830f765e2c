//! Experiment plumbing shared by the command-line tool and the acceptance
//! suite: worker pools, per-trial seeding with ordered merging, TOML
//! configuration files, and report files.
//!
//! Output schema (version 1): every run writes `<stem>.json` (or
//! `<stem>.toml`) holding a [`RunReport`], optionally `<stem>.csv` with one
//! row per trial, and `<stem>.timing.json` with the wall time. The timing
//! file is the only output that changes between identical runs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prf::trial_seed;

pub const SCHEMA_VERSION: u32 = 1;

/// Runs `f` on a dedicated pool of `threads` workers (0 means one per core).
pub fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {threads} worker threads: {e}")))?;
    Ok(pool.install(f))
}

/// Runs `f(i, seed_i)` for every trial `i` in parallel and returns the
/// results in trial order. `seed_i` is derived from `seed` and `i` only, so
/// the output does not depend on scheduling or thread count.
pub fn run_trials<T, F>(trials: u64, seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, u64) -> Result<T> + Sync,
{
    (0..trials).into_par_iter().map(|i| f(i, trial_seed(seed, i))).collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Json,
    Toml,
}

/// Summary of one run. Wall time is kept out of the serialized report.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub command: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub summary: serde_json::Value,
    /// Hard-invariant violations and failed checks. Empty means success.
    pub failures: Vec<String>,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl RunReport {
    pub fn new(command: &str, seed: u64, config: &impl Serialize) -> Result<Self> {
        Ok(RunReport {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            seed,
            config: to_json(config)?,
            summary: serde_json::Value::Null,
            failures: Vec::new(),
            wall_time: Duration::ZERO,
        })
    }

    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn to_json(value: &impl Serialize) -> Result<serde_json::Value> {
    serde_json::to_value(value).map_err(|e| Error::Io(format!("cannot serialize report: {e}")))
}

/// Serializes per-trial rows as CSV with a header line.
pub fn csv_bytes<R: Serialize>(rows: &[R]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io(format!("csv: {e}")))?;
    }
    w.into_inner().map_err(|e| Error::Io(format!("csv: {e}")))
}

/// Serializes a report as pretty JSON or TOML. Null values are dropped for
/// TOML, which has no null.
pub fn report_bytes(report: &RunReport, format: ReportFormat) -> Result<Vec<u8>> {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).map_err(|e| Error::Io(format!("json: {e}")))?;
            s.push('\n');
            Ok(s.into_bytes())
        }
        ReportFormat::Toml => {
            let value = strip_nulls(to_json(report)?);
            toml::to_string(&value)
                .map(String::into_bytes)
                .map_err(|e| Error::Io(format!("toml: {e}")))
        }
    }
}

fn strip_nulls(v: serde_json::Value) -> serde_json::Value {
    use serde_json::Value;
    match v {
        Value::Object(map) => {
            Value::Object(map.into_iter().filter(|(_, x)| !x.is_null()).map(|(k, x)| (k, strip_nulls(x))).collect())
        }
        Value::Array(xs) => Value::Array(xs.into_iter().filter(|x| !x.is_null()).map(strip_nulls).collect()),
        other => other,
    }
}

/// Writes `<stem>.json|toml`, `<stem>.csv` when `rows` is nonempty, and
/// `<stem>.timing.json`. Returns the paths written.
pub fn write_outputs<R: Serialize>(
    out_dir: &Path,
    stem: &str,
    report: &RunReport,
    rows: &[R],
    format: ReportFormat,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::Io(format!("{}: {e}", out_dir.display())))?;
    let mut written = Vec::new();
    let ext = match format {
        ReportFormat::Json => "json",
        ReportFormat::Toml => "toml",
    };
    let path = out_dir.join(format!("{stem}.{ext}"));
    write_file(&path, &report_bytes(report, format)?)?;
    written.push(path);
    if !rows.is_empty() {
        let path = out_dir.join(format!("{stem}.csv"));
        write_file(&path, &csv_bytes(rows)?)?;
        written.push(path);
    }
    let timing = serde_json::json!({ "command": report.command, "wall_time_s": report.wall_time.as_secs_f64() });
    let path = out_dir.join(format!("{stem}.timing.json"));
    write_file(&path, format!("{timing}\n").as_bytes())?;
    written.push(path);
    Ok(written)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// A TOML configuration file. Top-level keys mirror the global flags and
/// each table mirrors one subcommand's flags, e.g.
///
/// ```toml
/// seed = 7
/// threads = 4
///
/// [estimate]
/// graph = "tri.el"
/// trials = 5
/// ```
#[derive(Clone, Debug, Default, Deserialize)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub quick: Option<bool>,
    pub format: Option<ReportFormat>,
    #[serde(flatten)]
    pub sections: BTreeMap<String, toml::Value>,
}

impl ConfigFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("config file: {e}")))
    }

    /// The value of `key` in table `section`, if present.
    pub fn get<T: DeserializeOwned>(&self, section: &str, key: &str) -> Result<Option<T>> {
        let Some(table) = self.sections.get(section) else {
            return Ok(None);
        };
        let Some(value) = table.get(key) else {
            return Ok(None);
        };
        value
            .clone()
            .try_into()
            .map(Some)
            .map_err(|e| Error::Config(format!("config key {section}.{key}: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trials_are_ordered_and_thread_independent() {
        let run = |threads| in_pool(threads, || run_trials(200, 9, |i, s| Ok((i, s))).unwrap()).unwrap();
        let one = run(1);
        assert_eq!(one, run(4));
        assert!(one.iter().enumerate().all(|(i, &(j, _))| i as u64 == j));
    }

    #[test]
    fn config_sections() {
        let cfg = ConfigFile::parse("seed = 3\n[estimate]\ntrials = 5\nmode = \"iid\"\n").unwrap();
        assert_eq!(cfg.seed, Some(3));
        assert_eq!(cfg.get::<u64>("estimate", "trials").unwrap(), Some(5));
        assert_eq!(cfg.get::<String>("estimate", "mode").unwrap().as_deref(), Some("iid"));
        assert_eq!(cfg.get::<u64>("peel", "trials").unwrap(), None);
        assert!(cfg.get::<u64>("estimate", "mode").is_err());
        assert!(ConfigFile::parse("seed = \"x\"").is_err());
    }

    #[test]
    fn toml_report_drops_nulls() {
        let mut r = RunReport::new("x", 1, &serde_json::json!({"a": 1, "b": null})).unwrap();
        r.summary = serde_json::json!({"mean": 2.5});
        let text = String::from_utf8(report_bytes(&r, ReportFormat::Toml).unwrap()).unwrap();
        assert!(text.contains("mean = 2.5"));
        assert!(!text.contains("b ="));
        let json = String::from_utf8(report_bytes(&r, ReportFormat::Json).unwrap()).unwrap();
        assert!(!json.contains("wall_time"));
    }

    #[test]
    fn csv_has_header() {
        #[derive(Serialize)]
        struct Row {
            trial: u64,
            estimate: f64,
        }
        let bytes = csv_bytes(&[Row { trial: 0, estimate: 1.5 }]).unwrap();
        assert_eq!(String::from_utf8(bytes).unwrap(), "trial,estimate\n0,1.5\n");
    }
}
