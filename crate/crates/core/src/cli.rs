//! Command-line front end.
//!
//! Every command reads an optional JSON config (unknown keys rejected),
//! applies `--seed` / `--trials` overrides, writes its outputs plus a
//! `manifest.json` into `--out`, and maps failures to exit codes: 1 for
//! configuration or runtime errors, 2 for failed validation.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::analytics::{geometric_pmf, negbin_pmf, DensityPair};
use crate::geometry::Disk;
use crate::graph::{build_graph, Enhancement, GainFunction, LinkBudget, NetworkModel};
use crate::montecarlo::{
    estimate_baseline_exact, estimate_sectorized_exact, estimate_windowed, neutralization_sweep, tv_distance,
    write_sweep_table, EstimateReport, ExperimentConfig, Pmf, SweepPoint,
};
use crate::point_process::{with_typical_node, write_node_table, Realization, RngStream};
use crate::validation::{run_selected, CriterionOutcome, ValidationConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Run(String),
    #[error("validation failed: {0}")]
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Run(_) => 1,
            CliError::Validation(_) => 2,
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        match e {
            crate::Error::InvalidParameter(_) => CliError::Config(e.to_string()),
            other => CliError::Run(other.to_string()),
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Run(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "isgraph", version, about = "Secrecy graph simulation and validation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON config; omitted keys take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub trials: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Empirical vs analytic out-degree PMF.
    DegreeDist(CommonArgs),
    /// Mean out-degree versus neutralization radius with both bounds.
    Fig4(CommonArgs),
    /// One realization as node and edge tables.
    GraphSample(CommonArgs),
    /// Acceptance suite; exit 2 if any criterion fails.
    Validate {
        #[command(flatten)]
        common: CommonArgs,
        /// Criterion group (thm3.1, thm3.2, thm3.3, reduction, oracle, inout, determinism) or id (c1..c9).
        #[arg(long)]
        select: Vec<String>,
    },
    /// Re-runs the command recorded in a manifest.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        /// Output directory; defaults to the recorded one.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreeMode {
    #[default]
    None,
    Sectorized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    #[default]
    Exact,
    Windowed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DegreeDistConfig {
    pub mode: DegreeMode,
    pub lambda_l: f64,
    pub lambda_e: f64,
    pub sectors: u32,
    pub estimator: EstimatorKind,
    pub trials: u64,
    pub seed: u64,
    pub confidence: f64,
    pub max_degree_tracked: usize,
}

impl Default for DegreeDistConfig {
    fn default() -> Self {
        DegreeDistConfig {
            mode: DegreeMode::None,
            lambda_l: 1.0,
            lambda_e: 1.0,
            sectors: 1,
            estimator: EstimatorKind::Exact,
            trials: 100_000,
            seed: 1,
            confidence: 0.95,
            max_degree_tracked: 64,
        }
    }
}

pub const FIG4_LAMBDA_E: [f64; 3] = [0.1, 0.5, 1.0];

pub fn fig4_default_rhos() -> Vec<f64> {
    (0..=12).map(|i| i as f64 / 10.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fig4Config {
    pub lambda_l: f64,
    /// `None` selects the built-in grid.
    pub lambda_e: Option<Vec<f64>>,
    pub rho: Option<Vec<f64>>,
    pub trials: u64,
    pub seed: u64,
    pub confidence: f64,
}

impl Default for Fig4Config {
    fn default() -> Self {
        Fig4Config { lambda_l: 1.0, lambda_e: None, rho: None, trials: 100_000, seed: 1, confidence: 0.95 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphSampleConfig {
    pub window_radius: f64,
    pub lambda_l: f64,
    pub lambda_e: f64,
    pub enhancement: Enhancement<f64>,
    pub budget: LinkBudget<f64>,
    pub gain: GainFunction<f64>,
    /// Adds a legitimate node at the origin.
    pub typical_node: bool,
    pub seed: u64,
}

impl Default for GraphSampleConfig {
    fn default() -> Self {
        GraphSampleConfig {
            window_radius: 5.0,
            lambda_l: 1.0,
            lambda_e: 0.2,
            enhancement: Enhancement::None,
            budget: LinkBudget::default(),
            gain: GainFunction::default(),
            typical_node: true,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<String>,
    /// Config with command-line overrides applied.
    pub config: serde_json::Value,
    pub seed: u64,
    pub output_dir: String,
    pub outputs: Vec<String>,
    pub timestamp_unix: u64,
    pub version: String,
}

/// Parses a JSON document, reporting the source and line on failure.
pub fn parse_config<T: DeserializeOwned>(text: &str, source: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Config(format!("{source}: {e}")))
}

fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            parse_config(&text, &p.display().to_string())
        }
    }
}

struct Output {
    dir: PathBuf,
    files: Vec<String>,
}

impl Output {
    fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        Ok(Output { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| io_err(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("serializable output");
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    fn finish<C: Serialize>(mut self, command: &str, config_path: Option<&Path>, config: &C, seed: u64) -> Result<(), CliError> {
        let manifest = RunManifest {
            command: command.to_string(),
            config_path: config_path.map(|p| p.display().to_string()),
            config: serde_json::to_value(config).expect("serializable config"),
            seed,
            output_dir: self.dir.display().to_string(),
            outputs: self.files.clone(),
            timestamp_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            version: env!("CARGO_PKG_VERSION").to_string(),
        };
        self.write_json("manifest.json", &manifest)
    }
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> csv::Result<()>) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(|e| CliError::Run(e.to_string()))?;
    Ok(buf)
}

#[derive(Serialize)]
struct PmfRow {
    n: usize,
    empirical: f64,
    analytic: f64,
    abs_diff: f64,
}

#[derive(Serialize)]
struct DegreeDistReport<'a> {
    config: &'a DegreeDistConfig,
    analytic_mean: f64,
    tv_distance: f64,
    estimate: &'a EstimateReport,
}

pub fn cmd_degree_dist(cfg: &DegreeDistConfig, out: &Path, config_path: Option<&Path>) -> Result<(), CliError> {
    let d = DensityPair::new(cfg.lambda_l, cfg.lambda_e)?;
    let sectors = match cfg.mode {
        DegreeMode::None if cfg.sectors != 1 => {
            return Err(CliError::Config("sectors must be 1 (or omitted) when mode is none".into()))
        }
        DegreeMode::None => 1,
        DegreeMode::Sectorized => cfg.sectors,
    };
    if sectors == 0 {
        return Err(CliError::Config("sectors must be >= 1".into()));
    }
    let exp = ExperimentConfig {
        confidence: cfg.confidence,
        max_degree_tracked: cfg.max_degree_tracked,
        ..ExperimentConfig::new(cfg.trials, cfg.seed)
    };
    let report = match (cfg.estimator, cfg.mode) {
        (EstimatorKind::Exact, DegreeMode::None) => estimate_baseline_exact(&d, &exp)?,
        (EstimatorKind::Exact, DegreeMode::Sectorized) => estimate_sectorized_exact(&d, sectors, &exp)?,
        (EstimatorKind::Windowed, mode) => {
            let enh = match mode {
                DegreeMode::None => Enhancement::None,
                DegreeMode::Sectorized => Enhancement::sectorized(sectors),
            };
            estimate_windowed(&NetworkModel::new(cfg.lambda_l, cfg.lambda_e, enh)?, &exp)?
        }
    };
    let analytic = Pmf::from_fn(cfg.max_degree_tracked, |n| match cfg.mode {
        DegreeMode::None => geometric_pmf(&d, n),
        DegreeMode::Sectorized => negbin_pmf(&d, sectors, n),
    });
    let empirical = report.empirical_pmf();
    let rows: Vec<PmfRow> = empirical
        .mass
        .iter()
        .zip(&analytic.mass)
        .enumerate()
        .map(|(n, (&e, &a))| PmfRow { n, empirical: e, analytic: a, abs_diff: (e - a).abs() })
        .collect();
    let tv = tv_distance(&empirical, &analytic)?;
    let mut o = Output::new(out)?;
    o.write(
        "pmf.csv",
        &csv_bytes(|buf| {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(buf);
            for r in &rows {
                w.serialize(r)?;
            }
            w.flush()?;
            Ok(())
        })?,
    )?;
    let analytic_mean = sectors as f64 * cfg.lambda_l / cfg.lambda_e;
    o.write_json("report.json", &DegreeDistReport { config: cfg, analytic_mean, tv_distance: tv, estimate: &report })?;
    println!("degree-dist: mean {:.5} (analytic {analytic_mean:.5}), TV {tv:.5}, {} trials", report.mean, report.trials);
    o.finish("degree-dist", config_path, cfg, cfg.seed)
}

#[derive(Serialize)]
struct Fig4Report<'a> {
    config: &'a Fig4Config,
    /// Grid axes that fell back to the built-in defaults.
    defaulted_axes: Vec<&'static str>,
    points: &'a [SweepPoint],
}

/// Fills absent grid axes; returns the names of the defaulted ones.
pub fn resolve_fig4(cfg: &Fig4Config) -> (Fig4Config, Vec<&'static str>) {
    let mut resolved = cfg.clone();
    let mut defaulted = Vec::new();
    if resolved.lambda_e.is_none() {
        resolved.lambda_e = Some(FIG4_LAMBDA_E.to_vec());
        defaulted.push("lambda_e");
    }
    if resolved.rho.is_none() {
        resolved.rho = Some(fig4_default_rhos());
        defaulted.push("rho");
    }
    (resolved, defaulted)
}

pub fn cmd_fig4(input: &Fig4Config, out: &Path, config_path: Option<&Path>) -> Result<(), CliError> {
    let (cfg, defaulted) = resolve_fig4(input);
    let (les, rhos) = (cfg.lambda_e.as_deref().unwrap_or_default(), cfg.rho.as_deref().unwrap_or_default());
    if les.is_empty() || rhos.is_empty() {
        return Err(CliError::Config("lambda_e and rho grids must be non-empty".into()));
    }
    let exp = ExperimentConfig { confidence: cfg.confidence, ..ExperimentConfig::new(cfg.trials, cfg.seed) };
    let points = neutralization_sweep(cfg.lambda_l, les, rhos, &exp)?;
    let mut o = Output::new(out)?;
    o.write("fig4.csv", &csv_bytes(|buf| write_sweep_table(&points, buf))?)?;
    o.write_json("fig4.json", &Fig4Report { config: &cfg, defaulted_axes: defaulted, points: &points })?;
    println!("fig4: {} grid points, {} trials each", points.len(), cfg.trials);
    // The unresolved config keeps the defaulted-axes flag reproducible.
    o.finish("fig4", config_path, input, cfg.seed)
}

pub fn cmd_graph_sample(cfg: &GraphSampleConfig, out: &Path, config_path: Option<&Path>) -> Result<(), CliError> {
    let model = NetworkModel { lambda_l: cfg.lambda_l, lambda_e: cfg.lambda_e, enhancement: cfg.enhancement.clone(), budget: cfg.budget, gain: cfg.gain }
        .validated()?;
    let mut rng = RngStream::new(cfg.seed, 0).rng();
    let mut real = Realization::sample(cfg.lambda_l, cfg.lambda_e, Disk::centered(cfg.window_radius)?, &mut rng)?;
    if cfg.typical_node {
        real = with_typical_node(real);
    }
    let model = model.realize_offsets(real.legit.len(), &mut rng);
    let graph = build_graph(&model, &real)?;
    let mut o = Output::new(out)?;
    o.write("nodes.csv", &csv_bytes(|buf| write_node_table(&real, buf))?)?;
    o.write("edges.csv", &csv_bytes(|buf| graph.write_edge_table(buf))?)?;
    println!("graph-sample: {} legitimate, {} eavesdroppers, {} edges", real.legit.len(), real.eves.len(), graph.edges.len());
    o.finish("graph-sample", config_path, cfg, cfg.seed)
}

pub fn cmd_validate(cfg: &ValidationConfig, out: &Path, config_path: Option<&Path>) -> Result<Vec<CriterionOutcome>, CliError> {
    let outcomes = run_selected(cfg)?;
    for o in &outcomes {
        print!("{o}");
    }
    let failed: Vec<String> = outcomes.iter().filter(|o| !o.passed).map(|o| format!("C{}", o.id)).collect();
    println!("{} of {} criteria passed", outcomes.len() - failed.len(), outcomes.len());
    let mut o = Output::new(out)?;
    o.write_json("validation.json", &outcomes)?;
    o.finish("validate", config_path, cfg, cfg.seed)?;
    if failed.is_empty() {
        Ok(outcomes)
    } else {
        Err(CliError::Validation(failed.join(", ")))
    }
}

fn from_manifest<T: DeserializeOwned>(config: serde_json::Value) -> Result<T, CliError> {
    serde_json::from_value(config).map_err(|e| CliError::Config(format!("manifest config: {e}")))
}

fn dispatch(command: &str, config: serde_json::Value, out: &Path, config_path: Option<&Path>) -> Result<(), CliError> {
    match command {
        "degree-dist" => cmd_degree_dist(&from_manifest(config)?, out, config_path),
        "fig4" => cmd_fig4(&from_manifest(config)?, out, config_path),
        "graph-sample" => cmd_graph_sample(&from_manifest(config)?, out, config_path),
        "validate" => cmd_validate(&from_manifest(config)?, out, config_path).map(|_| ()),
        other => Err(CliError::Config(format!("unknown command {other:?} in manifest"))),
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::DegreeDist(a) => {
            let mut cfg: DegreeDistConfig = load_config(a.config.as_deref())?;
            cfg.seed = a.seed.unwrap_or(cfg.seed);
            cfg.trials = a.trials.unwrap_or(cfg.trials);
            cmd_degree_dist(&cfg, &a.out, a.config.as_deref())
        }
        Command::Fig4(a) => {
            let mut cfg: Fig4Config = load_config(a.config.as_deref())?;
            cfg.seed = a.seed.unwrap_or(cfg.seed);
            cfg.trials = a.trials.unwrap_or(cfg.trials);
            cmd_fig4(&cfg, &a.out, a.config.as_deref())
        }
        Command::GraphSample(a) => {
            let mut cfg: GraphSampleConfig = load_config(a.config.as_deref())?;
            if a.trials.is_some() {
                return Err(CliError::Config("graph-sample draws a single realization; --trials does not apply".into()));
            }
            cfg.seed = a.seed.unwrap_or(cfg.seed);
            cmd_graph_sample(&cfg, &a.out, a.config.as_deref())
        }
        Command::Validate { common: a, select } => {
            let mut cfg: ValidationConfig = load_config(a.config.as_deref())?;
            cfg.seed = a.seed.unwrap_or(cfg.seed);
            if let Some(t) = a.trials {
                cfg.scale = cfg.scale.with_trials(t);
            }
            cfg.select.extend(select);
            cmd_validate(&cfg, &a.out, a.config.as_deref()).map(|_| ())
        }
        Command::Replay { manifest, out } => {
            let text = fs::read_to_string(&manifest).map_err(|e| CliError::Config(format!("{}: {e}", manifest.display())))?;
            let m: RunManifest = parse_config(&text, &manifest.display().to_string())?;
            let out = out.unwrap_or_else(|| PathBuf::from(&m.output_dir));
            dispatch(&m.command, m.config, &out, m.config_path.as_deref().map(Path::new))
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
