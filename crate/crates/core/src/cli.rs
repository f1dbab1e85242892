//! Command-line front end: ingestion, decomposition and report files.
//!
//! Every command writes into the `--output` directory. Each file opens with
//! a metadata header (command, crate version, seed, SHA-256 of the input),
//! so identical inputs and flags reproduce byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bootstrap::bootstrap_group_stats;
use crate::combinatorics::{binomial, unrank_subset, Group, LineupIndex};
use crate::error::Error;
use crate::ingest::{
    generate_synthetic_season, parse_play_csv, write_play_csv, PlantedEffect, RosterSelection,
    SuccessFunction, SyntheticConfig,
};
use crate::johnson::{JohnsonSpace, SpectralDecomposition};
use crate::ridge::{coefficient_table, cross_validate_lambda, fit_ridge, DesignMatrix};
use crate::spectral::{
    mass_distribution, null_mass, permutation_null_mass, rank_groups, GroupContribution, RankBy,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Success function and its per-order components.
    Decompose,
    /// Ranked group contribution tables and SCLP/PMperLP scatter data.
    Contributions,
    /// Bootstrap stability report.
    Stability,
    /// Squared-norm mass by effect space, with null and permutation rows.
    Mass,
    /// Ridge regression on group indicators.
    Ridge,
    /// Write a synthetic season as a play CSV.
    Synth,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Decompose => "decompose",
            Command::Contributions => "contributions",
            Command::Stability => "stability",
            Command::Mass => "mass",
            Command::Ridge => "ridge",
            Command::Synth => "synth",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, Parser)]
#[command(
    name = "lineup-spectral",
    version,
    about = "Spectral analysis of lineup plus-minus"
)]
pub struct RunConfig {
    #[arg(value_enum)]
    pub command: Command,
    /// Play CSV (not used by `synth`).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output directory; created if missing.
    #[arg(long)]
    pub output: PathBuf,
    /// Roster size: the n most-used players are kept.
    #[arg(long, default_value_t = 15)]
    pub n: usize,
    /// Lineup size.
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Group order for `contributions` (default: all) and `stability` (required).
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long = "min-poss", default_value_t = 0)]
    pub min_possessions: u64,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "lambda-grid", value_delimiter = ',')]
    pub lambda_grid: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// `synth`: number of plays.
    #[arg(long, default_value_t = 16000)]
    pub plays: usize,
    /// `synth`: planted effect as 1-based players and net points per
    /// possession, e.g. `3;7=0.6`. Repeatable.
    #[arg(long = "plant")]
    pub plant: Vec<String>,
    /// `synth`: usage weight decay between consecutive players.
    #[arg(long = "usage-decay", default_value_t = 0.88)]
    pub usage_decay: f64,
    /// `ridge`: use only lineups that played instead of all C(n, k).
    #[arg(long = "observed-only")]
    pub observed_only: bool,
}

/// Failure classes, each mapped to its own exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Parse(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Io(_) => 5,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::MissingColumn(_)
            | Error::MalformedRows(_)
            | Error::Csv(_)
            | Error::UnknownPlayer(_) => CliError::Parse(e.to_string()),
            Error::Numerical(_) | Error::ZeroFunction => CliError::Numerical(e.to_string()),
            Error::Io(io) => CliError::Io(io),
            other => CliError::Config(other.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// `%.6g`-style rendering; NaN becomes `NA`.
pub fn fmt_sig6(x: f64) -> String {
    if x.is_nan() {
        return "NA".into();
    }
    if x == 0.0 {
        return "0".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent");
    let trim = |s: String| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if !(-4..6).contains(&exp) {
        let m = trim(mantissa.to_string());
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (5 - exp).max(0) as usize;
        trim(format!("{x:.decimals$}"))
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".into(), fmt_sig6)
}

/// Run metadata echoed at the top of every output file.
struct Metadata {
    fields: Vec<(String, String)>,
}

impl Metadata {
    fn csv_line(&self) -> String {
        let parts: Vec<String> = self
            .fields
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        format!("# {}\n", parts.join(" "))
    }

    fn json(&self) -> Value {
        Value::Object(
            self.fields
                .iter()
                .map(|(k, v)| (k.clone(), Value::String(v.clone())))
                .collect(),
        )
    }

    fn push(&mut self, key: &str, value: impl ToString) {
        self.fields.push((key.to_string(), value.to_string()));
    }
}

struct Output<'a> {
    dir: &'a Path,
    meta: Metadata,
    written: Vec<PathBuf>,
}

impl Output<'_> {
    fn csv(&mut self, name: &str, header: &[&str], rows: Vec<Vec<String>>) -> CliResult<()> {
        let mut body = self.meta.csv_line();
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).map_err(Error::from)?;
        for r in rows {
            w.write_record(&r).map_err(Error::from)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
        body.push_str(&String::from_utf8(bytes).expect("csv output is utf-8"));
        self.write(name, body.as_bytes())
    }

    fn json(&mut self, name: &str, data: Value) -> CliResult<()> {
        let doc = json!({ "metadata": self.meta.json(), "data": data });
        let mut text =
            serde_json::to_string_pretty(&doc).map_err(|e| CliError::Numerical(e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes)?;
        self.written.push(path);
        Ok(())
    }
}

fn require<T: Copy>(value: Option<T>, flag: &str, command: Command) -> CliResult<T> {
    value.ok_or_else(|| CliError::Config(format!("`{}` requires --{flag}", command.name())))
}

struct Season {
    selection: RosterSelection,
    success: SuccessFunction,
    space: JohnsonSpace,
}

fn load_season(cfg: &RunConfig, bytes: &[u8]) -> CliResult<Season> {
    let plays = parse_play_csv(bytes, cfg.k)?;
    let (success, selection) = SuccessFunction::from_plays(&plays, cfg.n, cfg.k)?;
    let space = JohnsonSpace::new(success.n, success.k)?;
    Ok(Season {
        selection,
        success,
        space,
    })
}

/// Executes one command and returns the files written.
pub fn run(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let input = match (cfg.command, &cfg.input) {
        (Command::Synth, _) => None,
        (_, Some(path)) => Some(fs::read(path)?),
        (c, None) => return Err(CliError::Config(format!("`{}` requires --input", c.name()))),
    };
    fs::create_dir_all(&cfg.output)?;

    let mut meta = Metadata { fields: Vec::new() };
    meta.push("command", cfg.command.name());
    meta.push("version", VERSION);
    meta.push(
        "seed",
        cfg.seed
            .map_or_else(|| "none".to_string(), |s| s.to_string()),
    );
    let digest = input.as_ref().map_or_else(
        || "none".to_string(),
        |b| format!("{:x}", Sha256::digest(b)),
    );
    meta.push("input_sha256", digest);
    meta.push("n", cfg.n);
    meta.push("k", cfg.k);

    let mut out = Output {
        dir: &cfg.output,
        meta,
        written: Vec::new(),
    };
    match cfg.command {
        Command::Synth => synth(cfg, &mut out)?,
        command => {
            let season = load_season(cfg, input.as_deref().unwrap_or_default())?;
            out.meta.push("roster_size", season.success.n);
            out.meta
                .push("dropped_plays", season.selection.dropped_plays);
            out.meta
                .push("skipped_stints", season.success.skipped_stints);
            match command {
                Command::Decompose => decompose(cfg, &season, &mut out)?,
                Command::Contributions => contributions(cfg, &season, &mut out)?,
                Command::Stability => stability(cfg, &season, &mut out)?,
                Command::Mass => mass(cfg, &season, &mut out)?,
                Command::Ridge => ridge(cfg, &season, &mut out)?,
                Command::Synth => unreachable!(),
            }
        }
    }
    Ok(out.written)
}

fn lineup_label(sf: &SuccessFunction, idx: usize) -> CliResult<String> {
    Ok(sf.group_label(&unrank_subset(LineupIndex(idx), sf.n, sf.k)?))
}

fn decompose(cfg: &RunConfig, season: &Season, out: &mut Output) -> CliResult<()> {
    let sf = &season.success;
    let d = season.space.decompose(&sf.values)?;
    let labels = (0..sf.values.len())
        .map(|i| lineup_label(sf, i))
        .collect::<CliResult<Vec<_>>>()?;
    match cfg.format {
        Format::Csv => {
            let rows = labels
                .iter()
                .enumerate()
                .map(|(i, l)| {
                    vec![
                        l.clone(),
                        fmt_sig6(sf.values[i]),
                        sf.lineup_possessions[i].to_string(),
                    ]
                })
                .collect();
            out.csv(
                "success_function.csv",
                &["lineup", "pm", "possessions"],
                rows,
            )?;

            let mut header = vec!["lineup".to_string(), "f".to_string()];
            header.extend((0..=sf.k).map(|j| format!("f{j}")));
            let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
            let rows = labels
                .iter()
                .enumerate()
                .map(|(i, l)| {
                    let mut row = vec![l.clone(), fmt_sig6(sf.values[i])];
                    row.extend(d.components().iter().map(|c| fmt_sig6(c[i])));
                    row
                })
                .collect();
            out.csv("components.csv", &header_refs, rows)
        }
        Format::Json => {
            let lineups: Vec<Value> = labels
                .iter()
                .enumerate()
                .map(|(i, l)| {
                    json!({
                        "lineup": l,
                        "pm": sf.values[i],
                        "possessions": sf.lineup_possessions[i],
                        "components": d.components().iter().map(|c| c[i]).collect::<Vec<_>>(),
                    })
                })
                .collect();
            out.json(
                "decompose.json",
                json!({
                    "roster": sf.roster,
                    "eigenvalues": season.space.eigenvalues(),
                    "dims": season.space.dims(),
                    "lineups": lineups,
                }),
            )
        }
    }
}

fn orders(cfg: &RunConfig) -> CliResult<Vec<usize>> {
    match cfg.order {
        Some(o) if o == 0 || o > cfg.k => Err(CliError::Config(format!(
            "--order must be in 1..={}",
            cfg.k
        ))),
        Some(o) => Ok(vec![o]),
        None => Ok((1..=cfg.k).collect()),
    }
}

fn contribution_json(sf: &SuccessFunction, rank: usize, r: &GroupContribution) -> Value {
    json!({
        "rank": rank,
        "group": sf.group_label(&r.group),
        "order": r.order,
        "spectral": r.spectral_value,
        "sclp": r.sclp,
        "pm": r.plus_minus,
        "possessions": r.possessions,
        "pm_per_log_poss": r.pm_per_log_poss(),
    })
}

fn contributions(cfg: &RunConfig, season: &Season, out: &mut Output) -> CliResult<()> {
    let sf = &season.success;
    let d = season.space.decompose(&sf.values)?;
    let mut tables = Vec::new();
    for order in orders(cfg)? {
        let rows = rank_groups(
            &d,
            &sf.lineup_possessions,
            order,
            cfg.min_possessions,
            RankBy::Sclp,
        )?;
        tables.push((order, rows));
    }
    match cfg.format {
        Format::Csv => {
            let header = [
                "rank",
                "group",
                "order",
                "spectral",
                "sclp",
                "pm",
                "possessions",
                "pm_per_log_poss",
            ];
            let mut scatter = Vec::new();
            for (order, rows) in &tables {
                let body = rows
                    .iter()
                    .enumerate()
                    .map(|(i, r)| {
                        vec![
                            (i + 1).to_string(),
                            sf.group_label(&r.group),
                            r.order.to_string(),
                            fmt_sig6(r.spectral_value),
                            fmt_opt(r.sclp),
                            fmt_sig6(r.plus_minus),
                            r.possessions.to_string(),
                            fmt_opt(r.pm_per_log_poss()),
                        ]
                    })
                    .collect();
                out.csv(&format!("contributions_order{order}.csv"), &header, body)?;
                scatter.extend(rows.iter().map(|r| {
                    vec![
                        sf.group_label(&r.group),
                        r.order.to_string(),
                        fmt_opt(r.sclp),
                        fmt_opt(r.pm_per_log_poss()),
                    ]
                }));
            }
            out.csv(
                "scatter.csv",
                &["group", "order", "sclp", "pm_per_log_poss"],
                scatter,
            )
        }
        Format::Json => {
            let data: Vec<Value> = tables
                .iter()
                .map(|(order, rows)| {
                    json!({
                        "order": order,
                        "rows": rows.iter().enumerate().map(|(i, r)| contribution_json(sf, i + 1, r)).collect::<Vec<_>>(),
                    })
                })
                .collect();
            out.json("contributions.json", Value::Array(data))
        }
    }
}

fn stability(cfg: &RunConfig, season: &Season, out: &mut Output) -> CliResult<()> {
    let trials = require(cfg.trials, "trials", cfg.command)?;
    let seed = require(cfg.seed, "seed", cfg.command)?;
    let order = require(cfg.order, "order", cfg.command)?;
    if order == 0 || order > cfg.k {
        return Err(CliError::Config(format!(
            "--order must be in 1..={}",
            cfg.k
        )));
    }
    let sf = &season.success;
    let groups: Vec<Group> = (0..binomial(sf.n, order))
        .map(|i| unrank_subset(LineupIndex(i), sf.n, order))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .filter(|g| {
            sf.group_possessions(g)
                .map(|p| p >= cfg.min_possessions.max(1))
                .unwrap_or(false)
        })
        .collect();
    let reports = bootstrap_group_stats(
        &season.selection.plays,
        &sf.roster,
        sf.k,
        &groups,
        trials,
        seed,
    )?;
    match cfg.format {
        Format::Csv => {
            let rows = reports
                .iter()
                .map(|r| {
                    vec![
                        sf.group_label(&r.group),
                        fmt_sig6(r.pm_mean),
                        fmt_sig6(r.pm_sd),
                        fmt_sig6(r.poss_mean),
                        fmt_sig6(r.poss_sd),
                        fmt_sig6(r.frac_pm_negative),
                        fmt_sig6(r.frac_sclp_negative),
                        fmt_opt(r.pearson_r),
                    ]
                })
                .collect();
            out.csv(
                "stability.csv",
                &[
                    "group",
                    "pm_mean",
                    "pm_sd",
                    "poss_mean",
                    "poss_sd",
                    "frac_pm_negative",
                    "frac_sclp_negative",
                    "pearson_r",
                ],
                rows,
            )?;
            let mut long = Vec::new();
            for r in &reports {
                let label = sf.group_label(&r.group);
                for (t, (s, p)) in r
                    .sclp_values
                    .iter()
                    .zip(&r.pm_per_log_poss_values)
                    .enumerate()
                {
                    long.push(vec![
                        label.clone(),
                        t.to_string(),
                        fmt_sig6(*s),
                        fmt_sig6(*p),
                    ]);
                }
            }
            out.csv(
                "stability_trials.csv",
                &["group", "trial", "sclp", "pm_per_log_poss"],
                long,
            )
        }
        Format::Json => {
            let finite = |x: f64| if x.is_finite() { Some(x) } else { None };
            let data: Vec<Value> = reports
                .iter()
                .map(|r| {
                    json!({
                        "group": sf.group_label(&r.group),
                        "actual_pm": r.actual_pm,
                        "actual_poss": r.actual_poss,
                        "pm_mean": finite(r.pm_mean),
                        "pm_sd": finite(r.pm_sd),
                        "poss_mean": finite(r.poss_mean),
                        "poss_sd": finite(r.poss_sd),
                        "frac_pm_negative": finite(r.frac_pm_negative),
                        "frac_sclp_negative": finite(r.frac_sclp_negative),
                        "pearson_r": r.pearson_r,
                        "flagged": r.flagged,
                        "sclp_values": r.sclp_values.iter().map(|&x| finite(x)).collect::<Vec<_>>(),
                        "pm_per_log_poss_values": r.pm_per_log_poss_values.iter().map(|&x| finite(x)).collect::<Vec<_>>(),
                    })
                })
                .collect();
            out.json("stability.json", Value::Array(data))
        }
    }
}

fn mass(cfg: &RunConfig, season: &Season, out: &mut Output) -> CliResult<()> {
    let trials = require(cfg.trials, "trials", cfg.command)?;
    let seed = require(cfg.seed, "seed", cfg.command)?;
    let d: SpectralDecomposition = season.space.decompose(&season.success.values)?;
    let observed = mass_distribution(&d)?;
    let null = null_mass(&season.space);
    let permuted = permutation_null_mass(&season.space, &season.success.values, trials, seed)?;
    let rows = [
        ("observed", &observed),
        ("null", &null),
        ("permutation_null", &permuted),
    ];
    match cfg.format {
        Format::Csv => {
            let mut header = vec!["row".to_string()];
            header.extend((0..=season.space.k()).map(|j| format!("V{j}")));
            let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
            let body = rows
                .iter()
                .map(|(name, m)| {
                    let mut r = vec![name.to_string()];
                    r.extend(m.fractions.iter().map(|&x| fmt_sig6(x)));
                    r
                })
                .collect();
            out.csv("mass.csv", &header_refs, body)
        }
        Format::Json => {
            let data: serde_json::Map<String, Value> = rows
                .iter()
                .map(|(name, m)| (name.to_string(), json!(m.fractions)))
                .collect();
            out.json("mass.json", Value::Object(data))
        }
    }
}

fn ridge(cfg: &RunConfig, season: &Season, out: &mut Output) -> CliResult<()> {
    let seed = require(cfg.seed, "seed", cfg.command)?;
    let grid = if cfg.lambda_grid.is_empty() {
        vec![0.1, 1.0, 10.0, 100.0, 1000.0]
    } else {
        cfg.lambda_grid.clone()
    };
    let sf = &season.success;
    let rows: Vec<usize> = if cfg.observed_only {
        (0..sf.values.len())
            .filter(|&i| sf.lineup_possessions[i] > 0)
            .collect()
    } else {
        (0..sf.values.len()).collect()
    };
    let x = DesignMatrix::for_lineups(sf.n, sf.k, &rows)?;
    let y: Vec<f64> = rows.iter().map(|&i| sf.values[i]).collect();
    let cv = cross_validate_lambda(&x, &y, &grid, cfg.folds, seed)?;
    let fit = fit_ridge(&x, &y, cv.best_lambda)?;
    let table = coefficient_table(&x, &fit);
    out.meta.push("lambda", fmt_sig6(cv.best_lambda));
    out.meta.push("rows", x.num_rows());
    match cfg.format {
        Format::Csv => {
            let mut body = vec![vec![
                "intercept".to_string(),
                "0".to_string(),
                fmt_sig6(fit.intercept),
            ]];
            body.extend(
                table
                    .iter()
                    .map(|(g, order, b)| vec![sf.group_label(g), order.to_string(), fmt_sig6(*b)]),
            );
            out.csv("ridge.csv", &["group", "order", "coefficient"], body)?;
            let cv_rows = cv
                .cv_errors
                .iter()
                .map(|(l, e)| vec![fmt_sig6(*l), fmt_sig6(*e)])
                .collect();
            out.csv("ridge_cv.csv", &["lambda", "cv_error"], cv_rows)
        }
        Format::Json => out.json(
            "ridge.json",
            json!({
                "lambda": cv.best_lambda,
                "intercept": fit.intercept,
                "cv_errors": cv.cv_errors,
                "coefficients": table.iter().map(|(g, order, b)| json!({
                    "group": sf.group_label(g), "order": order, "coefficient": b,
                })).collect::<Vec<_>>(),
            }),
        ),
    }
}

/// Parses `3;7=0.6` into 0-based members and an effect.
pub fn parse_plant(spec: &str) -> CliResult<PlantedEffect> {
    let bad = || CliError::Config(format!("bad --plant `{spec}`, expected e.g. `3;7=0.6`"));
    let (players, effect) = spec.split_once('=').ok_or_else(bad)?;
    let effect: f64 = effect.trim().parse().map_err(|_| bad())?;
    let members = players
        .split(';')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .ok()
                .filter(|&x| x >= 1)
                .map(|x| x - 1)
                .ok_or_else(bad)
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(PlantedEffect { members, effect })
}

fn synth(cfg: &RunConfig, out: &mut Output) -> CliResult<()> {
    let seed = require(cfg.seed, "seed", cfg.command)?;
    let mut config = SyntheticConfig::new(cfg.n, cfg.k, cfg.plays, seed);
    config.usage_decay = cfg.usage_decay;
    config.planted = cfg
        .plant
        .iter()
        .map(|p| parse_plant(p))
        .collect::<CliResult<_>>()?;
    let plays = generate_synthetic_season(&config)?;
    match cfg.format {
        Format::Csv => {
            let mut body = Vec::new();
            write_play_csv(&plays, &mut body)?;
            let mut text = out.meta.csv_line();
            text.push_str(&String::from_utf8(body).expect("csv output is utf-8"));
            out.write("plays.csv", text.as_bytes())
        }
        Format::Json => {
            let planted: Vec<Value> = config
                .planted
                .iter()
                .map(|p| json!({ "members": p.members.iter().map(|m| SyntheticConfig::player_name(*m)).collect::<Vec<_>>(), "effect": p.effect }))
                .collect();
            out.json("plays.json", json!({ "planted": planted, "plays": plays }))
        }
    }
}
