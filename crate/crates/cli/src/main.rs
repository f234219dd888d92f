//! `brsim`: simulate Brown-Resnick processes, evaluate error bounds and run
//! the method-comparison study.
//!
//! Exit codes: 0 on success, 2 for config or domain errors, 3 for I/O errors.

use std::fmt::Display;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use brsim_core::bounds::{default_levels, BoundMethod, BoundParams, ErrorBudget};
use brsim_core::methods::LAMBDA_SEED;
use brsim_core::study::{check_samples, resolve_lambda};
use brsim_core::{
    estimate_lambda_p, method_error_bound, run_study, Generator, Grid, LambdaCache, Margins,
    MethodSettings, MethodSpec, StreamKey, StudyConfig, StudyError, VariogramModel,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "brsim",
    version,
    about = "Brown-Resnick process simulation on 1-D grids"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one realization and write `t,z` rows as CSV.
    Simulate(SimulateArgs),
    /// Run the method-comparison study.
    Study(StudyArgs),
    /// Evaluate the approximation-error bound of a method.
    Bounds(BoundsArgs),
    /// Estimate the intensity constant λ⁽ᵖ⁾.
    Lambda(LambdaArgs),
    /// Run the statistical checks on a stored sample file.
    Check(CheckArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MarginsArg {
    Gumbel,
    Frechet,
}

impl From<MarginsArg> for Margins {
    fn from(m: MarginsArg) -> Self {
        match m {
            MarginsArg::Gumbel => Margins::Gumbel,
            MarginsArg::Frechet => Margins::Frechet,
        }
    }
}

#[derive(Args, Clone)]
struct MethodArgs {
    /// Shift set of method 1, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    shifts: Option<Vec<f64>>,
    /// Half-width v of the translations (method 2) or sites (method 4).
    #[arg(long)]
    v: Option<f64>,
    /// Number of blocks on each side (method 3).
    #[arg(long)]
    j_max: Option<i64>,
    /// Intensity constant λ⁽ᵖ⁾ (method 4); estimated when absent.
    #[arg(long)]
    lambda: Option<f64>,
    /// Shape window w (method 4).
    #[arg(long)]
    window: Option<f64>,
}

impl MethodArgs {
    fn settings(&self, method: u8) -> MethodSettings {
        MethodSettings {
            shifts: self.shifts.clone(),
            half_width: self.v,
            j_max: self.j_max,
            lambda_p: self.lambda,
            shape_window: self.window,
            ..MethodSettings::new(method)
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 0)]
    method: u8,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    scale: f64,
    /// Half-width of the grid.
    #[arg(long, default_value_t = 2.0)]
    b: f64,
    /// Grid step p.
    #[arg(long, default_value_t = 0.1)]
    step: f64,
    /// Fixed path budget; without it the method's adaptive default is used.
    #[arg(long)]
    k: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Replication index under the seed.
    #[arg(long, default_value_t = 0)]
    rep: u64,
    #[arg(long, value_enum, default_value = "gumbel")]
    margins: MarginsArg,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// λ⁽ᵖ⁾ cache file (method 4).
    #[arg(long)]
    cache: Option<PathBuf>,
    #[arg(long)]
    no_cache: bool,
    #[command(flatten)]
    method_args: MethodArgs,
}

#[derive(Args)]
struct StudyArgs {
    /// JSON config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Methods to run, comma separated.
    #[arg(long, value_delimiter = ',')]
    method: Option<Vec<u8>>,
    /// Alpha values, comma separated.
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    #[arg(long)]
    scale: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    /// Fixed path budget for every method.
    #[arg(long)]
    k: Option<u64>,
    #[arg(long)]
    reps: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    margins: Option<MarginsArg>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    no_cache: bool,
    #[arg(long)]
    dump_samples: bool,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long, default_value_t = 0)]
    method: u8,
    /// Picks the default j_max (method 3) or v and λ⁽ᵖ⁾ (method 4).
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    scale: f64,
    #[arg(long, default_value_t = 2.0)]
    b: f64,
    #[arg(long, default_value_t = 0.1)]
    step: f64,
    #[arg(long, default_value_t = 10_000)]
    k: u64,
    /// Level c(k); defaults to the method's schedule.
    #[arg(long, allow_hyphen_values = true)]
    c: Option<f64>,
    /// Level x(k); defaults to the method's schedule.
    #[arg(long, allow_hyphen_values = true)]
    x: Option<f64>,
    /// Use the sharp variants of the lattice and shape bounds.
    #[arg(long)]
    sharp: bool,
    /// Print only the JSON object.
    #[arg(long)]
    json: bool,
    /// λ⁽ᵖ⁾ cache file (method 4).
    #[arg(long)]
    cache: Option<PathBuf>,
    #[arg(long)]
    no_cache: bool,
    #[command(flatten)]
    method_args: MethodArgs,
}

#[derive(Args)]
struct LambdaArgs {
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    scale: f64,
    #[arg(long, default_value_t = 0.1)]
    step: f64,
    /// Argmax window w; defaults to the method-4 rule for --b.
    #[arg(long)]
    window: Option<f64>,
    #[arg(long, default_value_t = 2.0)]
    b: f64,
    #[arg(long, default_value_t = 100_000)]
    n: u64,
    /// Seed; the fixed seed used by method 4 when absent.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    cache: Option<PathBuf>,
    #[arg(long)]
    no_cache: bool,
}

#[derive(Args)]
struct CheckArgs {
    /// Sample CSV with columns z_a,z_0,z_b on the Gumbel scale.
    #[arg(long)]
    samples: PathBuf,
}

/// An error with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(e: impl Display) -> Self {
        Self {
            code: 2,
            message: e.to_string(),
        }
    }

    fn io(path: &Path, e: impl Display) -> Self {
        Self {
            code: 3,
            message: format!("{}: {e}", path.display()),
        }
    }
}

impl From<StudyError> for Failure {
    fn from(e: StudyError) -> Self {
        Self {
            code: if e.is_io() { 3 } else { 2 },
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Study(a) => study(a),
        Command::Bounds(a) => bounds(a),
        Command::Lambda(a) => lambda(a),
        Command::Check(a) => check(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::io(path, e)),
        None => emit(text),
    }
}

/// Writes to stdout; a reader that closed the pipe early is not an error.
fn emit(text: &str) -> Result<(), Failure> {
    let mut out = io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(Failure {
            code: 3,
            message: format!("stdout: {e}"),
        }),
        _ => Ok(()),
    }
}

fn load_cache(path: Option<&Path>, disabled: bool) -> Result<Option<LambdaCache>, Failure> {
    match path {
        Some(p) if !disabled => LambdaCache::load(p)
            .map(Some)
            .map_err(|e| Failure::io(p, e)),
        _ => Ok(None),
    }
}

fn save_cache(path: Option<&Path>, cache: Option<&LambdaCache>) -> Result<(), Failure> {
    if let (Some(p), Some(c)) = (path, cache) {
        c.save(p).map_err(|e| Failure::io(p, e))?;
    }
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<(), Failure> {
    let model = VariogramModel::new(a.alpha, a.scale).map_err(Failure::config)?;
    let grid = Grid::new(a.b, a.step).map_err(Failure::config)?;
    let mut settings = a.method_args.settings(a.method);
    if let Some(k) = a.k {
        settings.k_max = Some(k);
        settings.adaptive = Some(false);
    }
    let mut cfg = settings.resolve(&model, &grid)?;
    cfg.margins = a.margins.into();
    let mut cache = load_cache(a.cache.as_deref(), a.no_cache)?;
    resolve_lambda(
        &mut cfg,
        &model,
        &grid,
        brsim_core::methods::LAMBDA_SAMPLES,
        cache.as_mut(),
    )?;
    save_cache(a.cache.as_deref(), cache.as_ref())?;
    let z = Generator::new(model, grid, cfg, a.seed)
        .and_then(|g| g.realize(a.rep))
        .map_err(Failure::config)?;
    let mut text = String::from("t,z\n");
    for (i, v) in z.values.iter().enumerate() {
        text.push_str(&format!("{},{}\n", grid.point(i), v));
    }
    write_output(a.out.as_deref(), &text)
}

fn study(a: StudyArgs) -> Result<(), Failure> {
    let mut cfg = match &a.config {
        Some(path) => StudyConfig::load(path)?,
        None => StudyConfig::default(),
    };
    if let Some(m) = a.method {
        cfg.methods = m.into_iter().map(MethodSettings::new).collect();
    }
    if let Some(k) = a.k {
        for m in &mut cfg.methods {
            m.k_max = Some(k);
            m.adaptive = Some(false);
        }
    }
    if let Some(v) = a.alpha {
        cfg.alphas = v;
    }
    if let Some(v) = a.scale {
        cfg.scale = v;
    }
    if let Some(v) = a.b {
        cfg.b = v;
    }
    if let Some(v) = a.step {
        cfg.p = v;
    }
    if let Some(v) = a.reps {
        cfg.reps = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.out {
        cfg.output = Some(v);
    }
    if let Some(v) = a.margins {
        cfg.margins = v.into();
    }
    if let Some(v) = a.threads {
        cfg.threads = Some(v);
    }
    if a.no_cache {
        cfg.use_cache = false;
    }
    if a.dump_samples {
        cfg.dump_samples = true;
    }
    if cfg.output.is_none() {
        return Err(Failure::config(
            "config error in `output`: an output directory is required",
        ));
    }
    let (result, _) = run_study(&cfg)?;
    emit(&result.to_csv())
}

fn bounds(a: BoundsArgs) -> Result<(), Failure> {
    let model = VariogramModel::new(a.alpha, a.scale).map_err(Failure::config)?;
    let grid = Grid::new(a.b, a.step).map_err(Failure::config)?;
    let mut cfg = a.method_args.settings(a.method).resolve(&model, &grid)?;
    let mut cache = load_cache(a.cache.as_deref(), a.no_cache)?;
    let lambda_p = resolve_lambda(
        &mut cfg,
        &model,
        &grid,
        brsim_core::methods::LAMBDA_SAMPLES,
        cache.as_mut(),
    )?;
    save_cache(a.cache.as_deref(), cache.as_ref())?;
    let method = match cfg.spec {
        MethodSpec::Canonical => BoundMethod::Canonical,
        MethodSpec::Shifted { shifts } => BoundMethod::Shifted { shifts },
        MethodSpec::Translated { half_width } => BoundMethod::Translated { half_width },
        MethodSpec::Lattice { j_max } => BoundMethod::Lattice { j_max },
        MethodSpec::Shapes { half_width, .. } => BoundMethod::Shapes {
            half_width,
            lambda_p: lambda_p.expect("resolved for method 4"),
        },
    };
    let (c, x) = default_levels(a.method, a.k);
    let params = BoundParams {
        method,
        b: a.b,
        p: a.step,
        k: a.k,
        c: a.c.unwrap_or(c),
        x: a.x.unwrap_or(x),
        sharp: a.sharp,
    };
    let budget = method_error_bound(&params).map_err(Failure::config)?;
    let json = serde_json::to_string_pretty(&budget).expect("serializable budget");
    if a.json {
        emit(&format!("{json}\n"))
    } else {
        emit(&format!("{}{json}\n", table(&budget)))
    }
}

fn table(b: &ErrorBudget) -> String {
    let rows = [
        ("conditional", b.conditional),
        ("low_event", b.low_event),
        ("high_event", b.high_event),
        ("total", b.total),
        ("total_clamped", b.total_clamped),
    ];
    let mut out = format!(
        "method {}  b = {}  p = {}  k = {}  c = {:.6}  x = {:.6}{}\n",
        b.params.method.id(),
        b.params.b,
        b.params.p,
        b.params.k,
        b.params.c,
        b.params.x,
        if b.params.sharp { "  (sharp)" } else { "" }
    );
    for (name, v) in rows {
        out.push_str(&format!("{name:<14} {v:>14.6e}\n"));
    }
    out
}

fn lambda(a: LambdaArgs) -> Result<(), Failure> {
    let model = VariogramModel::new(a.alpha, a.scale).map_err(Failure::config)?;
    let window = match a.window {
        Some(w) => w,
        None => {
            let grid = Grid::new(a.b, a.step).map_err(Failure::config)?;
            let v = a.b + brsim_core::methods::default_reach(&model);
            brsim_core::methods::shape_window_for(&model, &grid, v, None)
                .map_err(Failure::config)?
        }
    };
    let mut cache = if a.seed.is_none() {
        load_cache(a.cache.as_deref(), a.no_cache)?
    } else {
        None
    };
    let hit = cache
        .as_ref()
        .and_then(|c| c.get(&model, a.step, window))
        .filter(|e| e.n_samples == a.n);
    let est = match hit {
        Some(e) => e,
        None => {
            let key = StreamKey::new(a.seed.unwrap_or(LAMBDA_SEED), 4, StreamKey::PILOT);
            let e = estimate_lambda_p(&model, a.step, window, a.n, &mut key.stream())
                .map_err(Failure::config)?;
            if let Some(c) = cache.as_mut() {
                c.insert(&model, e);
            }
            e
        }
    };
    save_cache(a.cache.as_deref(), cache.as_ref())?;
    emit(&format!(
        "{}\n",
        serde_json::to_string_pretty(&est).expect("serializable estimate")
    ))
}

fn check(a: CheckArgs) -> Result<(), Failure> {
    let report = check_samples(&a.samples)?;
    emit(&format!(
        "{}\n",
        serde_json::to_string_pretty(&report).expect("serializable report")
    ))
}
