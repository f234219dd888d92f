//! The method-comparison study: Gumbel deviations per (method, alpha) cell.
//!
//! Each cell runs `reps` replications in a worker pool. Replication `r` of a
//! cell uses substream replication `r` under the cell seed
//! `mix_seed(seed, alpha.to_bits())`, so results do not depend on the number
//! of threads. The CSV holds only deterministic columns; wall-clock runtimes
//! go to the JSON file.
//!
//! Config file (JSON), every field optional except `methods`:
//!
//! ```json
//! {
//!   "methods": [{"method": 0}, {"method": 3, "j_max": 70, "k_max": 1000}],
//!   "alphas": [0.1, 0.5, 1.0, 1.5, 1.9],
//!   "scale": 0.5, "b": 2.0, "p": 0.1, "reps": 2000, "seed": 0,
//!   "output": "results", "margins": "gumbel", "threads": 8,
//!   "use_cache": true, "lambda_samples": 100000, "dump_samples": false
//! }
//! ```
//!
//! Method entries accept `k_max`, `adaptive`, `shifts` (method 1),
//! `half_width` (methods 2 and 4), `j_max` (method 3), `lambda_p` and
//! `shape_window` (method 4). Missing entries take
//! [`MethodConfig::default_for`].

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gauss::{GaussError, Grid, VariogramModel};
use crate::methods::{
    shape_window_for, Generator, Margins, MethodConfig, MethodError, MethodSpec, LAMBDA_SEED,
};
use crate::rng::{mix_seed, StreamKey};
use crate::shape::{estimate_lambda_p, LambdaCache, LambdaEstimate, ShapeError};
use crate::stats::{dev_summary, max_stability_check, DevSummary, StatsError, TwoSampleTest};

/// Columns of the study CSV.
pub const CSV_HEADER: [&str; 9] = [
    "method", "alpha", "scale", "b", "p", "dev_a", "dev_0", "dev_b", "DEV",
];

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Method(#[from] MethodError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error("malformed sample file {path}: {message}")]
    Samples { path: PathBuf, message: String },
}

impl StudyError {
    /// True for errors caused by the file system rather than the input.
    pub fn is_io(&self) -> bool {
        matches!(self, StudyError::Io { .. })
            || matches!(self, StudyError::Shape(ShapeError::Cache(_)))
    }
}

fn config_error(field: &str, message: impl Into<String>) -> StudyError {
    StudyError::Config {
        field: field.into(),
        message: message.into(),
    }
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> StudyError + '_ {
    move |source| StudyError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Per-method overrides of [`MethodConfig::default_for`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSettings {
    pub method: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adaptive: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shifts: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_max: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape_window: Option<f64>,
}

impl MethodSettings {
    pub fn new(method: u8) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }

    pub fn resolve(&self, model: &VariogramModel, grid: &Grid) -> Result<MethodConfig, StudyError> {
        let mut cfg = MethodConfig::default_for(self.method, model, grid)
            .map_err(|e| config_error("methods.method", e.to_string()))?;
        if let Some(k) = self.k_max {
            if k == 0 {
                return Err(config_error("methods.k_max", "must be at least 1"));
            }
            cfg.k_max = k;
        }
        if let Some(a) = self.adaptive {
            cfg.adaptive = a;
        }
        match &mut cfg.spec {
            MethodSpec::Canonical => {}
            MethodSpec::Shifted { shifts } => {
                if let Some(s) = &self.shifts {
                    *shifts = s.clone();
                }
            }
            MethodSpec::Translated { half_width } => {
                if let Some(v) = self.half_width {
                    *half_width = v;
                }
            }
            MethodSpec::Lattice { j_max } => {
                if let Some(j) = self.j_max {
                    *j_max = j;
                }
            }
            MethodSpec::Shapes {
                half_width,
                lambda_p,
                shape_window,
            } => {
                if let Some(v) = self.half_width {
                    *half_width = v;
                }
                *lambda_p = self.lambda_p.or(*lambda_p);
                *shape_window = self.shape_window.or(*shape_window);
            }
        }
        Ok(cfg)
    }
}

fn default_alphas() -> Vec<f64> {
    vec![0.1, 0.5, 1.0, 1.5, 1.9]
}
fn default_scale() -> f64 {
    0.5
}
fn default_b() -> f64 {
    2.0
}
fn default_p() -> f64 {
    0.1
}
fn default_reps() -> u64 {
    2000
}
fn default_true() -> bool {
    true
}
fn default_lambda_samples() -> u64 {
    crate::methods::LAMBDA_SAMPLES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub methods: Vec<MethodSettings>,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default = "default_scale")]
    pub scale: f64,
    #[serde(default = "default_b")]
    pub b: f64,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_reps")]
    pub reps: u64,
    #[serde(default)]
    pub seed: u64,
    /// Output directory; nothing is written when absent.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Scale of dumped samples. Deviations are always computed on the
    /// Gumbel scale.
    #[serde(default)]
    pub margins: Margins,
    /// Worker threads; all cores when absent.
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default = "default_true")]
    pub use_cache: bool,
    /// λ⁽ᵖ⁾ cache file; `<output>/lambda_cache.json` when absent.
    #[serde(default)]
    pub cache_path: Option<PathBuf>,
    #[serde(default = "default_lambda_samples")]
    pub lambda_samples: u64,
    /// Write the marginal samples at `-b, 0, b` of every cell.
    #[serde(default)]
    pub dump_samples: bool,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            methods: (0..5).map(MethodSettings::new).collect(),
            alphas: default_alphas(),
            scale: default_scale(),
            b: default_b(),
            p: default_p(),
            reps: default_reps(),
            seed: 0,
            output: None,
            margins: Margins::Gumbel,
            threads: None,
            use_cache: true,
            cache_path: None,
            lambda_samples: default_lambda_samples(),
            dump_samples: false,
        }
    }
}

impl StudyConfig {
    pub fn from_json(text: &str) -> Result<Self, StudyError> {
        serde_json::from_str(text).map_err(|e| config_error("config", e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, StudyError> {
        Self::from_json(&fs::read_to_string(path).map_err(io_error(path))?)
    }

    pub fn grid(&self) -> Result<Grid, StudyError> {
        Grid::new(self.b, self.p).map_err(|e: GaussError| config_error("b", e.to_string()))
    }

    pub fn validate(&self) -> Result<(), StudyError> {
        if self.methods.is_empty() {
            return Err(config_error("methods", "at least one method is required"));
        }
        if self.alphas.is_empty() {
            return Err(config_error("alphas", "at least one alpha is required"));
        }
        for &a in &self.alphas {
            VariogramModel::new(a, 1.0)
                .map_err(|_| config_error("alphas", format!("{a} is outside (0, 2]")))?;
        }
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return Err(config_error("scale", "must be positive"));
        }
        if self.reps < 1 {
            return Err(config_error("reps", "must be at least 1"));
        }
        if self.lambda_samples < 1000 {
            return Err(config_error("lambda_samples", "must be at least 1000"));
        }
        if self.threads == Some(0) {
            return Err(config_error("threads", "must be at least 1"));
        }
        let grid = self.grid()?;
        let model = VariogramModel::new(self.alphas[0], self.scale).map_err(MethodError::from)?;
        for m in &self.methods {
            m.resolve(&model, &grid)?;
        }
        Ok(())
    }

    fn cache_file(&self) -> Option<PathBuf> {
        self.cache_path
            .clone()
            .or_else(|| self.output.as_ref().map(|o| o.join("lambda_cache.json")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRow {
    pub method: u8,
    pub alpha: f64,
    pub scale: f64,
    pub b: f64,
    pub p: f64,
    pub n_reps: u64,
    pub dev: DevSummary,
    pub mean_runtime_s: f64,
    pub mean_paths: f64,
    pub max_paths: u64,
    pub seed: u64,
    pub cell_seed: u64,
    pub lambda_p: Option<f64>,
    pub config: MethodConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyResult {
    pub rows: Vec<StudyRow>,
}

impl StudyResult {
    pub fn to_csv(&self) -> String {
        let mut out = CSV_HEADER.join(",");
        out.push('\n');
        for r in &self.rows {
            let d = &r.dev;
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.method, r.alpha, r.scale, r.b, r.p, d.dev_a, d.dev_0, d.dev_b, d.dev
            ));
        }
        out
    }
}

/// Marginal samples of one cell at `-b`, `0`, `b`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CellSamples {
    pub at_a: Vec<f64>,
    pub at_0: Vec<f64>,
    pub at_b: Vec<f64>,
}

impl CellSamples {
    pub fn to_csv(&self, margins: Margins) -> String {
        let f = |x: f64| match margins {
            Margins::Gumbel => x,
            Margins::Frechet => x.exp(),
        };
        let mut out = String::from("z_a,z_0,z_b\n");
        for i in 0..self.at_0.len() {
            out.push_str(&format!(
                "{},{},{}\n",
                f(self.at_a[i]),
                f(self.at_0[i]),
                f(self.at_b[i])
            ));
        }
        out
    }
}

/// Seed of the cell for `alpha`.
pub fn cell_seed(seed: u64, alpha: f64) -> u64 {
    mix_seed(seed, alpha.to_bits())
}

/// Fills in `λ⁽ᵖ⁾` and the shape window of a method-4 config, consulting
/// `cache` first. Returns the value in use; `None` for other methods.
pub fn resolve_lambda(
    cfg: &mut MethodConfig,
    model: &VariogramModel,
    grid: &Grid,
    n: u64,
    cache: Option<&mut LambdaCache>,
) -> Result<Option<f64>, StudyError> {
    let MethodSpec::Shapes {
        half_width,
        lambda_p,
        shape_window,
    } = &mut cfg.spec
    else {
        return Ok(None);
    };
    if let Some(l) = lambda_p {
        return Ok(Some(*l));
    }
    let w = shape_window_for(model, grid, *half_width, *shape_window)?;
    let (p, w) = (
        grid.step(),
        Grid::new(w, grid.step())
            .map_err(MethodError::from)?
            .half_width(),
    );
    let cached = cache
        .as_deref()
        .and_then(|c| c.get(model, p, w))
        .filter(|e| e.n_samples == n);
    let est: LambdaEstimate = match cached {
        Some(e) => e,
        None => {
            let mut rng = StreamKey::new(LAMBDA_SEED, 4, StreamKey::PILOT).stream();
            let e = estimate_lambda_p(model, p, w, n, &mut rng)?;
            if let Some(c) = cache {
                c.insert(model, e);
            }
            e
        }
    };
    *lambda_p = Some(est.lambda_p);
    *shape_window = Some(w);
    Ok(Some(est.lambda_p))
}

/// Runs every (method, alpha) cell; writes `study.csv`, `study.json` and,
/// if requested, sample files into the output directory.
pub fn run_study(config: &StudyConfig) -> Result<(StudyResult, Vec<CellSamples>), StudyError> {
    config.validate()?;
    let grid = config.grid()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads.unwrap_or(0))
        .build()
        .map_err(|e| config_error("threads", e.to_string()))?;

    if let Some(out) = &config.output {
        fs::create_dir_all(out).map_err(io_error(out))?;
    }
    let cache_file = config.cache_file().filter(|_| config.use_cache);
    let mut cache = match &cache_file {
        Some(path) => Some(LambdaCache::load(path)?),
        None => None,
    };

    let (ia, i0, ib) = (0, grid.center(), grid.len() - 1);
    let mut rows = Vec::new();
    let mut samples = Vec::new();
    for settings in &config.methods {
        for &alpha in &config.alphas {
            let model = VariogramModel::new(alpha, config.scale).map_err(MethodError::from)?;
            let mut cfg = settings.resolve(&model, &grid)?;
            let lambda_p = resolve_lambda(
                &mut cfg,
                &model,
                &grid,
                config.lambda_samples,
                cache.as_mut(),
            )?;
            let seed = cell_seed(config.seed, alpha);
            let generator = Generator::new(model, grid, cfg.clone(), seed)?;
            let reps: Vec<(f64, f64, f64, f64, u64)> = pool.install(|| {
                (0..config.reps)
                    .into_par_iter()
                    .map(|r| {
                        let start = Instant::now();
                        let z = generator.realize(r)?;
                        let secs = start.elapsed().as_secs_f64();
                        Ok((z.values[ia], z.values[i0], z.values[ib], secs, z.paths_used))
                    })
                    .collect::<Result<_, MethodError>>()
            })?;
            let cell = CellSamples {
                at_a: reps.iter().map(|r| r.0).collect(),
                at_0: reps.iter().map(|r| r.1).collect(),
                at_b: reps.iter().map(|r| r.2).collect(),
            };
            let n = reps.len() as f64;
            rows.push(StudyRow {
                method: settings.method,
                alpha,
                scale: config.scale,
                b: grid.half_width(),
                p: grid.step(),
                n_reps: config.reps,
                dev: dev_summary(&cell.at_a, &cell.at_0, &cell.at_b)?,
                mean_runtime_s: reps.iter().map(|r| r.3).sum::<f64>() / n,
                mean_paths: reps.iter().map(|r| r.4 as f64).sum::<f64>() / n,
                max_paths: reps.iter().map(|r| r.4).max().unwrap_or(0),
                seed: config.seed,
                cell_seed: seed,
                lambda_p,
                config: cfg,
            });
            samples.push(cell);
        }
    }
    let result = StudyResult { rows };

    if let (Some(path), Some(cache)) = (&cache_file, &cache) {
        cache.save(path)?;
    }
    if let Some(out) = &config.output {
        write_file(&out.join("study.csv"), &result.to_csv())?;
        let json = serde_json::to_string_pretty(&result).expect("serializable result");
        write_file(&out.join("study.json"), &json)?;
        if config.dump_samples {
            for (row, cell) in result.rows.iter().zip(&samples) {
                let name = format!("samples_m{}_a{}.csv", row.method, row.alpha);
                write_file(&out.join(name), &cell.to_csv(config.margins))?;
            }
        }
    }
    Ok((result, samples))
}

fn write_file(path: &Path, text: &str) -> Result<(), StudyError> {
    let mut f = fs::File::create(path).map_err(io_error(path))?;
    f.write_all(text.as_bytes()).map_err(io_error(path))
}

/// Statistics of a stored sample file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub n_reps: usize,
    pub dev: DevSummary,
    /// Blocks of 5 against raw values at 0, on the largest usable prefix.
    pub max_stability: Option<TwoSampleTest>,
    /// `z_a` of the first half against `z_b` of the second half.
    pub stationarity: Option<TwoSampleTest>,
}

/// Reads a `z_a,z_0,z_b` sample file (Gumbel scale) and runs the checks.
pub fn check_samples(path: &Path) -> Result<CheckReport, StudyError> {
    let malformed = |message: String| StudyError::Samples {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(source) => StudyError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => malformed(format!("{other:?}")),
    })?;
    let mut cols = CellSamples::default();
    for record in reader.records() {
        let record = record.map_err(|e| malformed(e.to_string()))?;
        if record.len() != 3 {
            return Err(malformed(format!(
                "expected 3 columns, got {}",
                record.len()
            )));
        }
        let parse = |i: usize| -> Result<f64, StudyError> {
            record[i]
                .trim()
                .parse()
                .map_err(|e| malformed(format!("{e}: {:?}", &record[i])))
        };
        cols.at_a.push(parse(0)?);
        cols.at_0.push(parse(1)?);
        cols.at_b.push(parse(2)?);
    }
    let dev = dev_summary(&cols.at_a, &cols.at_0, &cols.at_b)?;
    let n = cols.at_0.len();
    let usable = n / 6 * 6;
    let max_stability = if usable > 0 {
        Some(max_stability_check(&cols.at_0[..usable], 5)?)
    } else {
        None
    };
    let stationarity = if n >= 2 {
        let half = n / 2;
        Some(TwoSampleTest::new(&cols.at_a[..half], &cols.at_b[half..])?)
    } else {
        None
    };
    Ok(CheckReport {
        n_reps: n,
        dev,
        max_stability,
        stationarity,
    })
}
