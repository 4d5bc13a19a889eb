//! `interlab`: command-line driver for the stopped-walk experiments.
//!
//! Data goes to standard output or `--output`; a one-line summary goes to
//! standard error. Exit codes: 0 success, 1 usage or input error, 2 a
//! verification outside its tolerance.

mod config;
mod output;

use std::collections::BTreeMap;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;

use interlab::brownian::ExitLaw;
use interlab::experiments;
use interlab::interlace::{pattern_law, MixtureSpec};
use interlab::lattice::{point_at_index, project};
use interlab::lerw::lerw_ensemble;
use interlab::potential::{capacity_exact, capacity_mc};
use interlab::rng::{stream, Domain};
use interlab::stats::Estimate;
use interlab::{LatticePoint, PatternSet, TorusPoint, WalkConfig};

use config::{Common, Format};
use output::p6;

#[derive(Parser, Debug)]
#[command(
    name = "interlab",
    version,
    about = "Stopped random walks on the torus and random interlacements"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run stopped walks and report T, S and pattern hits per run.
    Simulate {
        /// Pattern to track: preset name or list such as "0,0,0;1,0,0".
        #[arg(long = "K")]
        k: Option<String>,
        /// Translation: "far" (default) or coordinates "a,b,c".
        #[arg(long)]
        x: Option<String>,
        #[arg(long, default_value_t = 100)]
        runs: u64,
    },
    /// Capacity of a pattern, exact or by Monte Carlo with --r.
    Capacity {
        #[arg(long = "K", default_value = "origin")]
        k: String,
        /// Ball radius for the Monte Carlo estimator.
        #[arg(long)]
        r: Option<f64>,
        /// Walks per boundary point for the Monte Carlo estimator.
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// Laplace transform and mean of the Brownian cube exit time.
    Sigma1 {
        #[arg(long)]
        lambda: f64,
        /// Also estimate the transform from this many sampled exit times.
        #[arg(long)]
        samples: Option<u64>,
    },
    /// Exact local law of the mixed interlacement on a pattern.
    Marginals {
        #[arg(long = "K", default_value = "pair")]
        k: String,
    },
    /// Compare the simulated avoidance probability with its limit.
    Verify {
        #[arg(long = "K", default_value = "origin")]
        k: String,
        #[arg(long)]
        x: Option<String>,
        #[arg(long, default_value_t = 20_000)]
        runs: u64,
        /// One row per admissible diagonal translation instead of a single x.
        #[arg(long)]
        x_sweep: bool,
    },
    /// Kolmogorov–Smirnov test of n·S/N^d against 2dA·σ₁.
    Ks {
        #[arg(long, default_value_t = 2000)]
        runs: u64,
    },
    /// Site histogram of the projected walk at time t.
    Mixing {
        /// Time; defaults to the stretch length n.
        #[arg(long)]
        t: Option<u64>,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
    },
    /// Stretch displacement and exit-scale statistics.
    Stretches {
        #[arg(long, default_value_t = 2000)]
        runs: u64,
    },
    /// Store trajectories in the torus-hashed store and profile it.
    Hashbench {
        #[arg(long, default_value_t = 100)]
        runs: u64,
    },
    /// Loop-erased walks to the box boundary.
    Lerw {
        #[arg(long, default_value_t = 200)]
        runs: u64,
        /// Use the dense per-site table instead of the hashed store.
        #[arg(long)]
        dense: bool,
    },
}

struct Outcome {
    data: Vec<u8>,
    summary: String,
    code: u8,
}

impl Outcome {
    fn ok(data: Vec<u8>, summary: String) -> Self {
        Outcome {
            data,
            summary,
            code: 0,
        }
    }
}

fn parse_translation(x: Option<&str>, cfg: &WalkConfig) -> Result<TorusPoint> {
    match x.map(str::trim) {
        None | Some("far") => Ok(TorusPoint::far_corner(cfg.d, cfg.torus_side)),
        Some(s) => {
            let c = s
                .split(',')
                .map(|v| v.trim().parse::<i64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .with_context(|| format!("--x expects \"far\" or integers \"a,b,c\", got {s:?}"))?;
            if c.len() != cfg.d {
                bail!("--x has {} coordinates but d = {}", c.len(), cfg.d);
            }
            Ok(project(&LatticePoint::new(c), cfg.torus_side))
        }
    }
}

#[derive(Serialize)]
struct SimulateRow {
    run: u64,
    exit_time: u64,
    stretches: u64,
    hit: bool,
    hit_mask: u32,
    visited: u64,
    exit_point: String,
}

fn simulate(c: &Common, k: Option<&str>, x: Option<&str>, runs: u64) -> Result<Outcome> {
    let cfg = c.validated()?;
    let pattern = k.map(|k| PatternSet::parse(k, cfg.d)).transpose()?;
    let x = parse_translation(x, &cfg)?;
    let res = experiments::simulate(&cfg, pattern.as_ref().map(|k| (k, &x)), runs)?;
    let rows: Vec<SimulateRow> = res
        .iter()
        .enumerate()
        .map(|(i, r)| SimulateRow {
            run: i as u64,
            exit_time: r.exit_time,
            stretches: r.stretches,
            hit: r.hit_pattern,
            hit_mask: r.hit_mask,
            visited: r.visited_count,
            exit_point: r.exit_point.to_string(),
        })
        .collect();
    let mean_t = res.iter().map(|r| r.exit_time as f64).sum::<f64>() / runs.max(1) as f64;
    Ok(Outcome::ok(
        output::rows(c.format.unwrap_or(Format::Csv), &rows)?,
        format!(
            "simulate: {runs} runs, mean T = {mean_t:.1}, L = {}",
            cfg.half_side()
        ),
    ))
}

#[derive(Serialize)]
struct CapacityRow {
    d: usize,
    #[serde(rename = "K_id")]
    k_id: String,
    method: String,
    value: f64,
    std_error: f64,
    r: Option<f64>,
    condition: Option<f64>,
    seed: Option<u64>,
}

fn capacity(c: &Common, k: &str, r: Option<f64>, samples: usize) -> Result<Outcome> {
    let cfg = c.walk_config()?;
    let pattern = PatternSet::parse(k, cfg.d)?;
    let res = match r {
        Some(r) => capacity_mc(&pattern, r, samples, cfg.seed)?,
        None => capacity_exact(&pattern)?,
    };
    let row = CapacityRow {
        d: cfg.d,
        k_id: pattern.id(),
        method: serde_json::to_value(res.method)?
            .as_str()
            .unwrap_or_default()
            .to_string(),
        value: res.value,
        std_error: res.std_error,
        r: res.r_used,
        condition: res.condition,
        seed: r.map(|_| cfg.seed),
    };
    let summary = format!("capacity: Cap = {:.6} ({})", row.value, row.method);
    let data = match c.format.unwrap_or(Format::Json) {
        Format::Json => output::json(&row)?,
        Format::Csv => output::rows(Format::Csv, &[row])?,
    };
    Ok(Outcome::ok(data, summary))
}

#[derive(Serialize)]
struct Sigma1Row {
    d: usize,
    lambda: f64,
    laplace: f64,
    mean: f64,
    mc_laplace: Option<f64>,
    mc_std_error: Option<f64>,
    samples: Option<u64>,
}

fn sigma1(c: &Common, lambda: f64, samples: Option<u64>) -> Result<Outcome> {
    let cfg = c.walk_config()?;
    let law = ExitLaw::new(cfg.d);
    let laplace = law.laplace(lambda, 1e-11)?;
    let mc = samples
        .map(|n| {
            if n == 0 {
                bail!("--samples must be positive");
            }
            let mut rng = stream(cfg.seed, Domain::Sigma1, 0);
            let ys: Vec<f64> = (0..n)
                .map(|_| (-lambda * law.sample(&mut rng)).exp())
                .collect();
            Ok(Estimate::from_values(&ys, cfg.seed))
        })
        .transpose()?;
    let row = Sigma1Row {
        d: cfg.d,
        lambda,
        laplace: p6(laplace),
        mean: law.mean(),
        mc_laplace: mc.as_ref().map(|e| p6(e.mean)),
        mc_std_error: mc.as_ref().map(|e| e.std_error),
        samples,
    };
    let summary = format!(
        "sigma1: E[exp(-{lambda}σ₁)] = {:.6} (d = {})",
        row.laplace, cfg.d
    );
    let data = match c.format.unwrap_or(Format::Json) {
        Format::Json => output::json(&row)?,
        Format::Csv => output::rows(Format::Csv, &[row])?,
    };
    Ok(Outcome::ok(data, summary))
}

#[derive(Serialize)]
struct MarginalRow {
    #[serde(rename = "B")]
    b: u64,
    points: String,
    probability: f64,
}

fn marginals(c: &Common, k: &str) -> Result<Outcome> {
    let cfg = c.walk_config()?;
    let pattern = PatternSet::parse(k, cfg.d)?;
    let spec = MixtureSpec::from_config(&cfg)?;
    let law = pattern_law(&pattern, &spec)?;
    let total: f64 = law.iter().sum();
    let data = match c.format.unwrap_or(Format::Json) {
        Format::Json => {
            let map: BTreeMap<String, f64> = law
                .iter()
                .enumerate()
                .map(|(b, &p)| (b.to_string(), p6(p)))
                .collect();
            output::json(&map)?
        }
        Format::Csv => {
            let rows: Vec<MarginalRow> = law
                .iter()
                .enumerate()
                .map(|(b, &p)| MarginalRow {
                    b: b as u64,
                    points: pattern.subset(b as u64).map(|s| s.id()).unwrap_or_default(),
                    probability: p6(p),
                })
                .collect();
            output::rows(Format::Csv, &rows)?
        }
    };
    Ok(Outcome::ok(
        data,
        format!(
            "marginals: {} cells, A = {}, total = {total:.10}",
            law.len(),
            spec.a
        ),
    ))
}

#[derive(Serialize)]
struct VerifyRow {
    experiment: &'static str,
    d: usize,
    #[serde(rename = "N")]
    n: u64,
    m: u64,
    #[serde(rename = "A")]
    a: f64,
    delta: f64,
    zeta: f64,
    #[serde(rename = "C1")]
    c1: f64,
    #[serde(rename = "K_id")]
    k_id: String,
    x: String,
    runs: u64,
    lhs: f64,
    stderr: f64,
    rhs: f64,
    gap: f64,
    z: f64,
    seed: u64,
}

fn verify(c: &Common, k: &str, x: Option<&str>, runs: u64, sweep: bool) -> Result<Outcome> {
    let cfg = c.validated()?;
    let pattern = PatternSet::parse(k, cfg.d)?;
    let xs = if sweep {
        experiments::translation_sweep(&cfg, &pattern)
    } else {
        vec![parse_translation(x, &cfg)?]
    };
    if xs.is_empty() {
        bail!("no diagonal translation satisfies the separation hypothesis");
    }
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for x in &xs {
        let r = experiments::verify_theorem(&cfg, &pattern, x, runs)?;
        worst = worst.max(r.gap.abs());
        rows.push(VerifyRow {
            experiment: "verify",
            d: cfg.d,
            n: cfg.torus_side,
            m: cfg.multiplier,
            a: cfg.scaling(),
            delta: cfg.delta,
            zeta: cfg.zeta,
            c1: cfg.c1,
            k_id: pattern.id(),
            x: x.to_string(),
            runs,
            lhs: p6(r.lhs.mean),
            stderr: p6(r.lhs.std_error),
            rhs: p6(r.rhs),
            gap: p6(r.gap),
            z: p6(r.z),
            seed: cfg.seed,
        });
    }
    let within = worst <= experiments::BIAS_TOL;
    let first = &rows[0];
    let summary = format!(
        "verify: lhs = {:.6} ± {:.6}, rhs = {:.6}, max |gap| = {worst:.6} ({} tolerance {})",
        first.lhs,
        first.stderr,
        first.rhs,
        if within { "within" } else { "OUTSIDE" },
        experiments::BIAS_TOL
    );
    Ok(Outcome {
        data: output::rows(c.format.unwrap_or(Format::Csv), &rows)?,
        summary,
        code: if within { 0 } else { 2 },
    })
}

#[derive(Serialize)]
struct KsRow {
    d: usize,
    #[serde(rename = "N")]
    n: u64,
    m: u64,
    runs: u64,
    #[serde(rename = "D")]
    d_stat: f64,
    seed: u64,
}

fn ks(c: &Common, runs: u64) -> Result<Outcome> {
    let cfg = c.validated()?;
    let rep = experiments::ks_exit_time(&cfg, runs)?;
    let row = KsRow {
        d: cfg.d,
        n: cfg.torus_side,
        m: cfg.multiplier,
        runs,
        d_stat: p6(rep.d_stat),
        seed: cfg.seed,
    };
    let summary = format!("ks: D = {:.6} over {runs} runs", row.d_stat);
    Ok(Outcome::ok(
        output::rows(c.format.unwrap_or(Format::Csv), &[row])?,
        summary,
    ))
}

#[derive(Serialize)]
struct MixingRow {
    index: usize,
    x: String,
    count: u64,
    scaled: f64,
}

fn mixing(c: &Common, t: Option<u64>, samples: u64) -> Result<Outcome> {
    let cfg = c.validated()?;
    let t = t.unwrap_or_else(|| cfg.stretch_len());
    let rep = experiments::mixing_check(&cfg, t, samples)?;
    let summary = format!(
        "mixing: t = {t}, max N^d·p = {:.4}, min N^d·p = {:.4}",
        rep.max_scaled, rep.min_scaled
    );
    let data = match c.format.unwrap_or(Format::Csv) {
        Format::Json => output::json(&rep)?,
        Format::Csv => {
            let scale = cfg.torus_volume() as f64 / samples as f64;
            let rows: Vec<MixingRow> = rep
                .histogram
                .iter()
                .enumerate()
                .map(|(i, &n)| MixingRow {
                    index: i,
                    x: point_at_index(i as u64, cfg.d, cfg.torus_side).to_string(),
                    count: n,
                    scaled: p6(n as f64 * scale),
                })
                .collect();
            output::rows(Format::Csv, &rows)?
        }
    };
    Ok(Outcome::ok(data, summary))
}

fn stretches(c: &Common, runs: u64) -> Result<Outcome> {
    let cfg = c.validated()?;
    let rep = experiments::bad_stretch_stats(&cfg, runs)?;
    let summary = format!(
        "stretches: n = {}, mean S = {:.3}, runs with Sn/N^d > log N: {:.4}",
        rep.n, rep.mean_s, rep.frac_above_log
    );
    Ok(Outcome::ok(
        output::rows(c.format.unwrap_or(Format::Csv), &[rep])?,
        summary,
    ))
}

fn hashbench(c: &Common, runs: u64) -> Result<Outcome> {
    let cfg = c.validated()?;
    let rep = experiments::hash_bench(&cfg, runs)?;
    let summary = format!(
        "hashbench: mean load factor {:.4}, dense/bucket ratio {:.2}, max chain {}",
        rep.mean_load_factor, rep.memory_ratio, rep.max_chain
    );
    let data = match c.format.unwrap_or(Format::Csv) {
        Format::Json => output::json(&rep)?,
        Format::Csv => output::rows(Format::Csv, &rep.rows)?,
    };
    Ok(Outcome::ok(data, summary))
}

#[derive(Serialize)]
struct LerwRow {
    d: usize,
    #[serde(rename = "L")]
    l: u64,
    seed: u64,
    gen_len: u64,
    lerw_len: u64,
    visited: u64,
    store_probes: u64,
}

fn lerw(c: &Common, runs: u64, dense: bool) -> Result<Outcome> {
    let cfg = c.validated()?;
    let l = cfg.half_side();
    let metrics = lerw_ensemble(&cfg, runs, !dense)?;
    let rows: Vec<LerwRow> = metrics
        .iter()
        .map(|m| LerwRow {
            d: cfg.d,
            l,
            seed: cfg.seed,
            gen_len: m.generator_length,
            lerw_len: m.erased_length,
            visited: m.visited,
            store_probes: m.store_probes,
        })
        .collect();
    let mean = metrics
        .iter()
        .map(|m| m.generator_length as f64)
        .sum::<f64>()
        / runs.max(1) as f64;
    Ok(Outcome::ok(
        output::rows(c.format.unwrap_or(Format::Csv), &rows)?,
        format!(
            "lerw: {runs} runs, L = {l}, mean generator length / L² = {:.3}",
            mean / (l * l) as f64
        ),
    ))
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    let c = &cli.common;
    match &cli.command {
        Command::Simulate { k, x, runs } => simulate(c, k.as_deref(), x.as_deref(), *runs),
        Command::Capacity { k, r, samples } => capacity(c, k, *r, *samples),
        Command::Sigma1 { lambda, samples } => sigma1(c, *lambda, *samples),
        Command::Marginals { k } => marginals(c, k),
        Command::Verify {
            k,
            x,
            runs,
            x_sweep,
        } => verify(c, k, x.as_deref(), *runs, *x_sweep),
        Command::Ks { runs } => ks(c, *runs),
        Command::Mixing { t, samples } => mixing(c, *t, *samples),
        Command::Stretches { runs } => stretches(c, *runs),
        Command::Hashbench { runs } => hashbench(c, *runs),
        Command::Lerw { runs, dense } => lerw(c, *runs, *dense),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(&cli).and_then(|o| {
        output::emit(cli.common.output.as_deref(), &o.data)?;
        Ok(o)
    }) {
        Ok(o) => {
            eprintln!("{}", o.summary);
            ExitCode::from(o.code)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
