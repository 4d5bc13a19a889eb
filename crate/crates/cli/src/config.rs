//! Resolution of the walk configuration from a config file, `--set`
//! overrides, dedicated flags and the `LAB_SEED` environment variable.

use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::Args;
use interlab::WalkConfig;
use serde::Deserialize;
use serde_json::{Map, Value};

/// Flags shared by every subcommand.
#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Flat JSON file with WalkConfig keys (d, N, m, delta, zeta, C1, seed, workers).
    #[arg(long, global = true)]
    pub config: Option<std::path::PathBuf>,
    /// Override a config key, e.g. --set delta=2.7 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub set: Vec<String>,
    #[arg(long, global = true)]
    pub d: Option<usize>,
    #[arg(long = "N", global = true)]
    pub n: Option<u64>,
    #[arg(long, global = true)]
    pub m: Option<u64>,
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    #[arg(long, global = true)]
    pub zeta: Option<f64>,
    #[arg(long = "C1", global = true)]
    pub c1: Option<f64>,
    /// Master seed; falls back to LAB_SEED, then 0.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// csv or json; the default depends on the subcommand.
    #[arg(long, global = true)]
    pub format: Option<Format>,
    /// Write data here (atomically) instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<std::path::PathBuf>,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// The keys a config file may contain, all optional.
#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct Partial {
    d: Option<usize>,
    #[serde(rename = "N")]
    n: Option<u64>,
    m: Option<u64>,
    delta: Option<f64>,
    zeta: Option<f64>,
    #[serde(rename = "C1")]
    c1: Option<f64>,
    seed: Option<u64>,
    workers: Option<usize>,
}

fn read_file(path: &Path) -> Result<Map<String, Value>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    match serde_json::from_str(&text)
        .with_context(|| format!("config {} is not valid JSON", path.display()))?
    {
        Value::Object(map) => Ok(map),
        _ => bail!("config {} must be a flat JSON object", path.display()),
    }
}

fn parse_override(s: &str) -> Result<(String, Value)> {
    let (k, v) = s
        .split_once('=')
        .with_context(|| format!("--set expects KEY=VALUE, got {s:?}"))?;
    let value = serde_json::from_str(v.trim()).unwrap_or_else(|_| Value::String(v.trim().into()));
    Ok((k.trim().to_string(), value))
}

impl Common {
    /// File values, then `--set`, then flags; seed falls back to `LAB_SEED`.
    pub fn walk_config(&self) -> Result<WalkConfig> {
        let mut map = match &self.config {
            Some(p) => read_file(p)?,
            None => Map::new(),
        };
        for s in &self.set {
            let (k, v) = parse_override(s)?;
            map.insert(k, v);
        }
        let p: Partial = serde_json::from_value(Value::Object(map))
            .map_err(|e| anyhow::anyhow!("invalid configuration: {e}"))?;
        let d = self.d.or(p.d).unwrap_or(3);
        let n = self.n.or(p.n).unwrap_or(16);
        let m = self.m.or(p.m).unwrap_or(4);
        let mut cfg = WalkConfig::new(d, n, m);
        if let Some(v) = self.delta.or(p.delta) {
            cfg.delta = v;
        }
        if let Some(v) = self.zeta.or(p.zeta) {
            cfg.zeta = v;
        }
        if let Some(v) = self.c1.or(p.c1) {
            cfg.c1 = v;
        }
        if let Some(v) = self.workers.or(p.workers) {
            cfg.workers = v;
        }
        cfg.seed = match self.seed.or(p.seed) {
            Some(s) => s,
            None => match std::env::var("LAB_SEED") {
                Ok(s) => s
                    .trim()
                    .parse()
                    .with_context(|| format!("LAB_SEED={s:?} is not an unsigned integer"))?,
                Err(_) => 0,
            },
        };
        Ok(cfg)
    }

    /// Like [`walk_config`](Self::walk_config), then validated.
    pub fn validated(&self) -> Result<WalkConfig> {
        let cfg = self.walk_config()?;
        cfg.validate()?;
        Ok(cfg)
    }
}
