//! Lattice shape functions and the intensity constant `λ⁽ᵖ⁾`.
//!
//! With `W(0) = 0`, the shape law `Q⁽ᵖ⁾` is the law of the drifted path
//! `ξ = W - σ²/2` on `pℤ` conditioned on its smallest maximizer `T⁽ᵖ⁾` being
//! the origin. Sampling is plain rejection: draw `ξ` on the window
//! `(pℤ) ∩ [-w, w]` and keep it iff its smallest argmax is 0. The accepted
//! path is the shape itself, since then `M⁽ᵖ⁾ = ξ(0) = 0`.
//!
//! # The intensity constant
//!
//! The points `(T⁽ᵖ⁾ᵢ, Xᵢ + M⁽ᵖ⁾ᵢ)` of the canonical representation form a
//! Poisson process whose intensity at lattice site `s` is
//! `λ⁽ᵖ⁾·p·δₛ × e^{-u} du`. Evaluating the pushforward intensity at the
//! origin,
//!
//! ```text
//! ∫ e^{-x} P(T = 0, x + M ∈ du) dx = E[e^{M} 1{T = 0}] · e^{-u} du,
//! ```
//!
//! so `λ⁽ᵖ⁾·p = E[e^{M⁽ᵖ⁾} 1{T⁽ᵖ⁾ = 0}]`. The estimator averages
//! `e^{M} 1{T = 0}` over unconditioned paths. Because the paths are pinned,
//! `M = 0` whenever `T = 0` and the estimate coincides with the empirical
//! acceptance rate divided by `p`.
//!
//! The argmax is only searched on `[-w, w]`; `w` has to be wide enough for
//! the drift to dominate. [`default_window`] picks one.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gauss::{build_covariance, CovarianceFactor, GaussError, Grid, VariogramModel};
use crate::rng::{RandomStream, StreamKey};

/// Consecutive rejections after which sampling gives up.
pub const REJECTION_BUDGET: u64 = 1_000_000;

#[derive(Debug, Error)]
pub enum ShapeError {
    #[error(transparent)]
    Gauss(#[from] GaussError),
    #[error("shape window {window} must be at least 4 and a multiple of the step {step}")]
    InvalidWindow { window: f64, step: f64 },
    #[error("rejection budget of {0} consecutive attempts exceeded")]
    RejectionBudgetExceeded(u64),
    #[error("no sample had its maximum at the origin ({0} samples)")]
    ZeroAcceptance(u64),
    #[error("at least 1000 samples are needed, got {0}")]
    TooFewSamples(u64),
    #[error("lambda cache: {0}")]
    Cache(String),
}

/// A lattice function `F` with `F(0) = 0` and `F ≤ 0`, maximal at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeFunction {
    window: Grid,
    values: Vec<f64>,
}

impl ShapeFunction {
    pub fn window(&self) -> &Grid {
        &self.window
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `F(k·p)`; `-∞` outside the window.
    #[inline]
    pub fn at_offset(&self, offset: i64) -> f64 {
        match self.window.index_of_offset(offset) {
            Some(i) => self.values[i],
            None => f64::NEG_INFINITY,
        }
    }
}

/// Rejection sampler for `Q⁽ᵖ⁾` with a factor shared across threads.
#[derive(Debug, Clone)]
pub struct ShapeSampler {
    factor: Arc<CovarianceFactor>,
}

impl ShapeSampler {
    pub fn new(model: &VariogramModel, step: f64, window: f64) -> Result<Self, ShapeError> {
        let grid = shape_window_grid(step, window)?;
        Ok(Self {
            factor: Arc::new(build_covariance(model, &grid)?),
        })
    }

    pub fn window(&self) -> &Grid {
        self.factor.grid()
    }

    /// One attempt: `Some(shape)` iff the smallest argmax of the draw is 0.
    pub fn attempt(&self, rng: &mut RandomStream) -> Option<ShapeFunction> {
        let accept = self.factor.argmax_at_origin();
        self.factor
            .sample_filtered(rng, accept)
            .map(|path| ShapeFunction {
                window: *self.factor.grid(),
                values: path.into_values(),
            })
    }

    /// Draws until acceptance; returns the shape and the number of attempts.
    pub fn sample(&self, rng: &mut RandomStream) -> Result<(ShapeFunction, u64), ShapeError> {
        for attempt in 1..=REJECTION_BUDGET {
            if let Some(shape) = self.attempt(rng) {
                return Ok((shape, attempt));
            }
        }
        Err(ShapeError::RejectionBudgetExceeded(REJECTION_BUDGET))
    }
}

fn shape_window_grid(step: f64, window: f64) -> Result<Grid, ShapeError> {
    let invalid = || ShapeError::InvalidWindow { window, step };
    if !(window >= 4.0) {
        return Err(invalid());
    }
    Grid::new(window, step).map_err(|_| invalid())
}

/// Draws one shape from `Q⁽ᵖ⁾` on the window `(pℤ) ∩ [-w, w]`.
pub fn sample_shape(
    model: &VariogramModel,
    step: f64,
    window: f64,
    rng: &mut RandomStream,
) -> Result<ShapeFunction, ShapeError> {
    ShapeSampler::new(model, step, window)?
        .sample(rng)
        .map(|(s, _)| s)
}

/// Default argmax window: `b + 20·max(1, (2s)^{1/(2-α)})`, rounded up to the
/// lattice. The factor is capped at 5 since it diverges as `α → 2`.
pub fn default_window(model: &VariogramModel, half_width: f64, step: f64) -> f64 {
    let spread = if model.alpha() < 2.0 {
        (2.0 * model.scale()).powf(1.0 / (2.0 - model.alpha()))
    } else {
        f64::INFINITY
    };
    let w = half_width + 20.0 * spread.clamp(1.0, 5.0);
    (w / step - 1e-9).ceil() * step
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaEstimate {
    /// `λ⁽ᵖ⁾`, per unit length.
    pub lambda_p: f64,
    pub standard_error: f64,
    /// Fraction of paths whose smallest maximizer is the origin.
    pub acceptance_rate: f64,
    pub n_samples: u64,
    pub step: f64,
    pub window: f64,
}

/// Monte-Carlo estimate of `λ⁽ᵖ⁾ = E[e^{M⁽ᵖ⁾} 1{T⁽ᵖ⁾ = 0}] / p`.
pub fn estimate_lambda_p(
    model: &VariogramModel,
    step: f64,
    window: f64,
    n_samples: u64,
    rng: &mut RandomStream,
) -> Result<LambdaEstimate, ShapeError> {
    if n_samples < 1000 {
        return Err(ShapeError::TooFewSamples(n_samples));
    }
    let sampler = ShapeSampler::new(model, step, window)?;
    let centre = sampler.window().center();
    let (mut hits, mut sum, mut sum_sq) = (0u64, 0.0, 0.0);
    for _ in 0..n_samples {
        if let Some(shape) = sampler.attempt(rng) {
            let weight = shape.values()[centre].exp();
            hits += 1;
            sum += weight;
            sum_sq += weight * weight;
        }
    }
    if hits == 0 {
        return Err(ShapeError::ZeroAcceptance(n_samples));
    }
    let n = n_samples as f64;
    let mean = sum / n;
    let var = ((sum_sq / n - mean * mean) * n / (n - 1.0)).max(0.0);
    let acceptance_rate = hits as f64 / n;
    // every weight is at least 1, so `λ·p` must not round below the rate
    let mut lambda_p = mean / step;
    while lambda_p * step < acceptance_rate {
        lambda_p = lambda_p.next_up();
    }
    Ok(LambdaEstimate {
        lambda_p,
        standard_error: (var / n).sqrt() / step,
        acceptance_rate,
        n_samples,
        step,
        window: sampler.window().half_width(),
    })
}

/// Supplies iid shapes to the mixed moving-maxima generator.
pub trait ShapeSource {
    fn window(&self) -> &Grid;
    /// Draws the shape addressed by `key`.
    fn next_shape(&mut self, key: StreamKey) -> Result<ShapeFunction, ShapeError>;
}

/// Shapes by rejection, one substream per shape.
#[derive(Debug, Clone)]
pub struct RejectionShapes {
    sampler: ShapeSampler,
    attempts: u64,
}

impl RejectionShapes {
    pub fn new(sampler: ShapeSampler) -> Self {
        Self {
            sampler,
            attempts: 0,
        }
    }

    /// Total attempts so far, accepted ones included.
    pub fn attempts(&self) -> u64 {
        self.attempts
    }
}

impl ShapeSource for RejectionShapes {
    fn window(&self) -> &Grid {
        self.sampler.window()
    }

    fn next_shape(&mut self, key: StreamKey) -> Result<ShapeFunction, ShapeError> {
        let (shape, attempts) = self.sampler.sample(&mut key.stream())?;
        self.attempts += attempts;
        Ok(shape)
    }
}

/// Wraps a source and keeps a copy of every shape handed out.
#[derive(Debug, Clone)]
pub struct RecordingShapes<S> {
    inner: S,
    pub shapes: Vec<ShapeFunction>,
}

impl<S: ShapeSource> RecordingShapes<S> {
    pub fn new(inner: S) -> Self {
        Self {
            inner,
            shapes: Vec::new(),
        }
    }
}

impl<S: ShapeSource> ShapeSource for RecordingShapes<S> {
    fn window(&self) -> &Grid {
        self.inner.window()
    }

    fn next_shape(&mut self, key: StreamKey) -> Result<ShapeFunction, ShapeError> {
        let shape = self.inner.next_shape(key)?;
        self.shapes.push(shape.clone());
        Ok(shape)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CacheEntry {
    alpha: f64,
    scale: f64,
    step: f64,
    window: f64,
    estimate: LambdaEstimate,
}

/// JSON sidecar of `λ⁽ᵖ⁾` estimates keyed by `(alpha, scale, p, w)`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct LambdaCache {
    entries: Vec<CacheEntry>,
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

impl LambdaCache {
    /// Loads a cache file; a missing file is an empty cache.
    pub fn load(path: &Path) -> Result<Self, ShapeError> {
        match fs::read_to_string(path) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| ShapeError::Cache(e.to_string())),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Self::default()),
            Err(e) => Err(ShapeError::Cache(e.to_string())),
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), ShapeError> {
        let text =
            serde_json::to_string_pretty(self).map_err(|e| ShapeError::Cache(e.to_string()))?;
        fs::write(path, text).map_err(|e| ShapeError::Cache(e.to_string()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, model: &VariogramModel, step: f64, window: f64) -> Option<LambdaEstimate> {
        self.entries
            .iter()
            .find(|e| {
                same(e.alpha, model.alpha())
                    && same(e.scale, model.scale())
                    && same(e.step, step)
                    && same(e.window, window)
            })
            .map(|e| e.estimate)
    }

    pub fn insert(&mut self, model: &VariogramModel, estimate: LambdaEstimate) {
        let (step, window) = (estimate.step, estimate.window);
        self.entries.retain(|e| {
            !(same(e.alpha, model.alpha())
                && same(e.scale, model.scale())
                && same(e.step, step)
                && same(e.window, window))
        });
        self.entries.push(CacheEntry {
            alpha: model.alpha(),
            scale: model.scale(),
            step,
            window,
            estimate,
        });
    }
}
