//! Result files: CSV tables plus one JSON metadata record per run.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde_json::{Map, Value};

use crate::config::RunConfig;

/// Bumped whenever a CSV column or metadata key changes meaning.
pub const SCHEMA_VERSION: u32 = 1;

/// Overrides the configured output directory (a `--out` flag still wins).
pub const OUT_DIR_ENV: &str = "CARL_OUT_DIR";

pub fn num(x: f64) -> String {
    format!("{x:.15e}")
}

pub struct Run {
    pub dir: PathBuf,
    command: &'static str,
    started: Instant,
    files: Vec<String>,
    extra: Map<String, Value>,
}

impl Run {
    pub fn start(command: &'static str, dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            command,
            started: Instant::now(),
            files: Vec::new(),
            extra: Map::new(),
        })
    }

    /// Writes `rows` under `header`. Each row must have as many fields as the header.
    pub fn table<I>(&mut self, name: &str, header: &str, rows: I) -> Result<()>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let path = self.dir.join(name);
        let mut w = BufWriter::new(File::create(&path).with_context(|| format!("cannot create {}", path.display()))?);
        writeln!(w, "{header}")?;
        for row in rows {
            writeln!(w, "{}", row.join(","))?;
        }
        w.flush()?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// A file produced by a writer from the core crate.
    pub fn with_file<F>(&mut self, name: &str, write: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    {
        let path = self.dir.join(name);
        let mut w = BufWriter::new(File::create(&path).with_context(|| format!("cannot create {}", path.display()))?);
        write(&mut w)?;
        w.flush()?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Extra scalar recorded in the metadata under `key`.
    pub fn note(&mut self, key: &str, value: impl Into<Value>) {
        self.extra.insert(key.to_string(), value.into());
    }

    /// Writes `<command>.json` next to the tables.
    pub fn finish(self, cfg: &RunConfig) -> Result<PathBuf> {
        let mut meta = Map::new();
        meta.insert("schema_version".into(), SCHEMA_VERSION.into());
        meta.insert("command".into(), self.command.into());
        meta.insert("carl_version".into(), env!("CARGO_PKG_VERSION").into());
        meta.insert("carl_core_version".into(), carl_core::VERSION.into());
        meta.insert("timestamp".into(), chrono::Utc::now().to_rfc3339().into());
        meta.insert("wall_time_s".into(), self.started.elapsed().as_secs_f64().into());
        meta.insert("seed".into(), cfg.seed.into());
        meta.insert("tolerance.steady_newton".into(), carl_core::steady::NEWTON_TOL.into());
        meta.insert("tolerance.continued_fraction".into(), carl_core::steady::CF_TOL.into());
        meta.insert("tolerance.fp_tail".into(), cfg.fp.tail_tolerance.into());
        flatten("config", &serde_json::to_value(cfg)?, &mut meta);
        meta.extend(self.extra);
        meta.insert("files".into(), self.files.into());
        let path = self.dir.join(format!("{}.json", self.command));
        let text = serde_json::to_string_pretty(&Value::Object(meta))?;
        fs::write(&path, text + "\n").with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }
}

/// Nested objects become dotted keys; arrays and scalars are kept as values.
fn flatten(prefix: &str, value: &Value, out: &mut Map<String, Value>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(&format!("{prefix}.{k}"), v, out);
            }
        }
        other => {
            out.insert(prefix.to_string(), other.clone());
        }
    }
}
