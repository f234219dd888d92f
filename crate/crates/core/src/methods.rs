//! The five Brown-Resnick generators.
//!
//! | id | representation | points | paths |
//! |----|----------------|--------|-------|
//! | 0 | `max_i X_i + ξ_i(t)` | one stream, rate 1 | on the grid |
//! | 1 | `max_j max_i X_i⁽ʲ⁾ + ξ_i⁽ʲ⁾(t - h_j)` | `n` streams, rate `1/n` | grid widened by `max |h_j|` |
//! | 2 | `max_i X_i + ξ_i(t - H_i)` | one stream, rate 1, lattice marks in `[-v, v]` | grid widened by `v` |
//! | 3 | `max_j max_i X_i⁽ʲ⁾ + ξ_i⁽ʲ⁾(t - pj)` over paths with argmax at 0 | one stream per block, rate 1 | grid widened by `p·j_max` |
//! | 4 | `max_i U_i + F_i(t - S_i)` | rate `λ⁽ᵖ⁾(2v + p)`, sites in `[-v, v]` | shapes from `Q⁽ᵖ⁾` |
//!
//! Random numbers follow the key layout of [`StreamKey`]: the points of block
//! `j` come from `(seed, method, rep, j, POINTS)`, path `i` of block `j` from
//! `(seed, method, rep, j, i)`. Methods 0 and 2 use block 0, method 1 uses
//! block `j` for shift `j` (0-based), method 4 draws sites from the point
//! stream right after each point.
//!
//! Stopping. Methods 3 and 4 stop exactly: once a point falls below the
//! current minimum `C` of the field, no later path of that stream can reach
//! the field because accepted paths and shapes are at most 0. Methods 0 to 2
//! have unbounded paths; there the stream stops at the first point with
//! `X + q_hi < C`, where `q_hi` is the `1 - 1e-4` quantile of the path maximum
//! over its window, taken from 10⁴ pilot paths.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gauss::{build_covariance, CovarianceFactor, GaussError, Grid, VariogramModel};
use crate::ppp::{GumbelPointStream, Mark, MarkSpace, PppError};
use crate::rng::StreamKey;
use crate::shape::{
    default_window, estimate_lambda_p, RejectionShapes, ShapeError, ShapeSampler, ShapeSource,
};

/// Pilot paths behind `q_hi`.
pub const PILOT_PATHS: usize = 10_000;
/// Quantile level of `q_hi`.
pub const PILOT_LEVEL: f64 = 1.0 - 1e-4;
/// Seed of the λ⁽ᵖ⁾ estimate when none is supplied, so that the estimate
/// depends only on the model and the lattice.
pub const LAMBDA_SEED: u64 = 0x1a4b_da00;
/// Default number of samples for the λ⁽ᵖ⁾ estimate.
pub const LAMBDA_SAMPLES: u64 = 100_000;

#[derive(Debug, Error)]
pub enum MethodError {
    #[error(transparent)]
    Gauss(#[from] GaussError),
    #[error(transparent)]
    Ppp(#[from] PppError),
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("invalid window: {0}")]
    InvalidWindow(String),
    #[error("shift {0} is not a multiple of the grid step")]
    InvalidShift(f64),
    #[error("invalid method config: {0}")]
    InvalidConfig(String),
}

/// Output scale of a realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Margins {
    #[default]
    Gumbel,
    /// `exp` of the Gumbel-scale values.
    Frechet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// The path budget ran out.
    FixedK,
    /// The stopping rule fired.
    Adaptive,
}

/// Representation used by a generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MethodSpec {
    Canonical,
    /// Shifts `h_j`, multiples of the grid step.
    Shifted {
        shifts: Vec<f64>,
    },
    /// Translations uniform on the lattice sites of `[-v, v]`.
    Translated {
        half_width: f64,
    },
    /// Blocks `-j_max..=j_max`.
    Lattice {
        j_max: i64,
    },
    /// Sites in `[-v, v]`; `lambda_p` is estimated when absent and the shape
    /// window defaults to the larger of [`default_window`] and `b + v`.
    Shapes {
        half_width: f64,
        lambda_p: Option<f64>,
        shape_window: Option<f64>,
    },
}

impl MethodSpec {
    pub fn id(&self) -> u8 {
        match self {
            MethodSpec::Canonical => 0,
            MethodSpec::Shifted { .. } => 1,
            MethodSpec::Translated { .. } => 2,
            MethodSpec::Lattice { .. } => 3,
            MethodSpec::Shapes { .. } => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodConfig {
    pub spec: MethodSpec,
    /// Path budget; per stream for methods 1 and 3.
    pub k_max: u64,
    pub adaptive: bool,
    #[serde(default)]
    pub margins: Margins,
}

impl MethodConfig {
    pub fn new(spec: MethodSpec, k_max: u64, adaptive: bool) -> Self {
        Self {
            spec,
            k_max,
            adaptive,
            margins: Margins::Gumbel,
        }
    }

    /// Pilot-tuned defaults for the model and the grid.
    pub fn default_for(
        method: u8,
        model: &VariogramModel,
        grid: &Grid,
    ) -> Result<Self, MethodError> {
        let (b, p) = (grid.half_width(), grid.step());
        let reach = default_reach(model);
        let snap = |x: f64| (x / p).round() * p;
        let (spec, k_max) = match method {
            0 => (MethodSpec::Canonical, 5_000),
            1 => (
                MethodSpec::Shifted {
                    shifts: vec![-snap(b / 2.0), snap(b / 2.0)],
                },
                5_000,
            ),
            2 => (
                MethodSpec::Translated {
                    half_width: 2.0 * b,
                },
                20_000,
            ),
            3 => (
                MethodSpec::Lattice {
                    j_max: ((b + reach) / p - 1e-9).ceil() as i64,
                },
                1_000,
            ),
            4 => (
                MethodSpec::Shapes {
                    half_width: b + reach,
                    lambda_p: None,
                    shape_window: None,
                },
                100_000,
            ),
            m => return Err(MethodError::InvalidConfig(format!("unknown method {m}"))),
        };
        Ok(Self::new(spec, k_max, true))
    }
}

/// Distance beyond `b` covered by the lattice blocks of method 3 and the
/// sites of method 4. Pilot-tuned at scale 0.5: for small alpha the drift
/// decays so slowly that far blocks and sites still reach the grid.
pub fn default_reach(model: &VariogramModel) -> f64 {
    (15.0 / model.alpha()).clamp(8.0, 60.0)
}

/// One approximate realization on the grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldRealization {
    pub grid: Grid,
    pub values: Vec<f64>,
    /// Paths simulated, rejected ones included.
    pub paths_used: u64,
    pub stop_reason: StopReason,
    pub margins: Margins,
}

impl FieldRealization {
    /// Value at grid point `t`.
    pub fn at(&self, t: f64) -> Option<f64> {
        self.grid.index_of(t).map(|i| self.values[i])
    }
}

/// Running pointwise maximum of shifted paths on a grid.
#[derive(Debug, Clone)]
pub struct FieldAccumulator {
    grid: Grid,
    values: Vec<f64>,
    minimum: f64,
}

impl FieldAccumulator {
    pub fn new(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![f64::NEG_INFINITY; grid.len()],
            minimum: f64::NEG_INFINITY,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Minimum over the grid; `-∞` until every point has been reached.
    pub fn minimum(&self) -> f64 {
        self.minimum
    }

    /// Folds in `x + f(t - shift·p)` where `f` lives on `window`.
    pub fn add_shifted(&mut self, x: f64, path: &[f64], window: &Grid, shift: i64) {
        self.add_with(x, shift, |k| match window.index_of_offset(k) {
            Some(i) => path[i],
            None => f64::NEG_INFINITY,
        });
    }

    /// Folds in `x + f(k - shift)` for lattice offsets `k` of the grid.
    pub fn add_with<F: Fn(i64) -> f64>(&mut self, x: f64, shift: i64, f: F) {
        let mut minimum = f64::INFINITY;
        for (g, z) in self.values.iter_mut().enumerate() {
            let v = x + f(self.grid.offset(g) - shift);
            if v > *z {
                *z = v;
            }
            minimum = minimum.min(*z);
        }
        self.minimum = minimum;
    }
}

#[derive(Debug, Clone)]
enum Prepared {
    Canonical {
        factor: Arc<CovarianceFactor>,
        q_hi: f64,
    },
    Shifted {
        factor: Arc<CovarianceFactor>,
        q_hi: f64,
        shifts: Vec<i64>,
    },
    Translated {
        factor: Arc<CovarianceFactor>,
        q_hi: f64,
        sites: MarkSpace,
    },
    Lattice {
        factor: Arc<CovarianceFactor>,
        j_max: i64,
    },
    Shapes {
        sampler: ShapeSampler,
        sites: MarkSpace,
        lambda_p: f64,
    },
}

/// A generator prepared for one (model, grid, config, seed).
///
/// Preparation factorizes the covariance, runs the pilot for `q_hi` and, for
/// method 4, estimates `λ⁽ᵖ⁾` when it is not supplied.
#[derive(Debug, Clone)]
pub struct Generator {
    model: VariogramModel,
    grid: Grid,
    config: MethodConfig,
    seed: u64,
    prepared: Prepared,
}

fn lattice_offset(x: f64, p: f64) -> Option<i64> {
    let r = x / p;
    ((r - r.round()).abs() <= 1e-9 * r.abs().max(1.0)).then(|| r.round() as i64)
}

impl Generator {
    pub fn new(
        model: VariogramModel,
        grid: Grid,
        config: MethodConfig,
        seed: u64,
    ) -> Result<Self, MethodError> {
        Self::build(model, grid, config, seed, true)
    }

    /// Same generator with `σ²/2` left out of every path. The result is not
    /// stationary; only useful as a negative control. Methods 0 to 3 only.
    pub fn without_drift(
        model: VariogramModel,
        grid: Grid,
        config: MethodConfig,
        seed: u64,
    ) -> Result<Self, MethodError> {
        if config.spec.id() == 4 {
            return Err(MethodError::InvalidConfig(
                "method 4 has no drift to remove".into(),
            ));
        }
        Self::build(model, grid, config, seed, false)
    }

    fn build(
        model: VariogramModel,
        grid: Grid,
        config: MethodConfig,
        seed: u64,
        drift: bool,
    ) -> Result<Self, MethodError> {
        if config.k_max < 1 {
            return Err(MethodError::InvalidConfig(
                "k_max must be at least 1".into(),
            ));
        }
        let p = grid.step();
        let n_b = grid.half_count() as i64;
        let id = config.spec.id();
        let factor_on = |half: i64| -> Result<Arc<CovarianceFactor>, MethodError> {
            let window = Grid::from_half_count(half as usize, p)?;
            let f = build_covariance(&model, &window)?;
            Ok(Arc::new(if drift { f } else { f.without_drift() }))
        };
        let pilot = |factor: &CovarianceFactor| {
            pilot_quantile(factor, StreamKey::new(seed, id, StreamKey::PILOT))
        };
        let prepared = match &config.spec {
            MethodSpec::Canonical => {
                let factor = factor_on(n_b)?;
                let q_hi = pilot(&factor);
                Prepared::Canonical { factor, q_hi }
            }
            MethodSpec::Shifted { shifts } => {
                if shifts.is_empty() {
                    return Err(MethodError::InvalidConfig(
                        "method 1 needs at least one shift".into(),
                    ));
                }
                let offsets = shifts
                    .iter()
                    .map(|&h| lattice_offset(h, p).ok_or(MethodError::InvalidShift(h)))
                    .collect::<Result<Vec<_>, _>>()?;
                let reach = offsets.iter().map(|h| h.abs()).max().unwrap_or(0);
                let factor = factor_on(n_b + reach)?;
                let q_hi = pilot(&factor);
                Prepared::Shifted {
                    factor,
                    q_hi,
                    shifts: offsets,
                }
            }
            MethodSpec::Translated { half_width } => {
                if !(*half_width > 0.0) || !half_width.is_finite() {
                    return Err(MethodError::InvalidWindow(format!(
                        "translation half-width must be positive, got {half_width}"
                    )));
                }
                let sites = MarkSpace::lattice_in(p, -half_width, *half_width)?;
                let reach = match sites {
                    MarkSpace::Lattice { first, .. } => first.abs(),
                    MarkSpace::Interval { .. } => unreachable!(),
                };
                let factor = factor_on(n_b + reach)?;
                let q_hi = pilot(&factor);
                Prepared::Translated {
                    factor,
                    q_hi,
                    sites,
                }
            }
            MethodSpec::Lattice { j_max } => {
                if *j_max < n_b {
                    return Err(MethodError::InvalidLattice(format!(
                        "j_max = {j_max} must be at least b/p = {n_b}"
                    )));
                }
                Prepared::Lattice {
                    factor: factor_on(n_b + j_max)?,
                    j_max: *j_max,
                }
            }
            MethodSpec::Shapes {
                half_width,
                lambda_p,
                shape_window,
            } => {
                let b = grid.half_width();
                if !(*half_width >= b - 1e-9 * b) {
                    return Err(MethodError::InvalidWindow(format!(
                        "site half-width v = {half_width} must be at least b = {b}"
                    )));
                }
                let sites = MarkSpace::lattice_in(p, -half_width, *half_width)?;
                let v = match sites {
                    MarkSpace::Lattice { first, .. } => -first as f64 * p,
                    MarkSpace::Interval { .. } => unreachable!(),
                };
                let w = shape_window_for(&model, &grid, v, *shape_window)?;
                let sampler = ShapeSampler::new(&model, p, w)?;
                let lambda_p = match lambda_p {
                    Some(l) if *l > 0.0 && l.is_finite() => *l,
                    Some(l) => {
                        return Err(MethodError::InvalidConfig(format!(
                            "lambda_p must be positive, got {l}"
                        )))
                    }
                    None => {
                        let mut rng = StreamKey::new(LAMBDA_SEED, 4, StreamKey::PILOT).stream();
                        estimate_lambda_p(
                            &model,
                            p,
                            sampler.window().half_width(),
                            LAMBDA_SAMPLES,
                            &mut rng,
                        )?
                        .lambda_p
                    }
                };
                Prepared::Shapes {
                    sampler,
                    sites,
                    lambda_p,
                }
            }
        };
        Ok(Self {
            model,
            grid,
            config,
            seed,
            prepared,
        })
    }

    pub fn model(&self) -> &VariogramModel {
        &self.model
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn config(&self) -> &MethodConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `q_hi` of the adaptive rule; `None` for methods 3 and 4.
    pub fn pilot_quantile(&self) -> Option<f64> {
        match &self.prepared {
            Prepared::Canonical { q_hi, .. }
            | Prepared::Shifted { q_hi, .. }
            | Prepared::Translated { q_hi, .. } => Some(*q_hi),
            _ => None,
        }
    }

    /// `λ⁽ᵖ⁾` in use; method 4 only.
    pub fn lambda_p(&self) -> Option<f64> {
        match &self.prepared {
            Prepared::Shapes { lambda_p, .. } => Some(*lambda_p),
            _ => None,
        }
    }

    /// Window of the paths (methods 0 to 3) or shapes (method 4).
    pub fn path_window(&self) -> Grid {
        match &self.prepared {
            Prepared::Canonical { factor, .. }
            | Prepared::Shifted { factor, .. }
            | Prepared::Translated { factor, .. }
            | Prepared::Lattice { factor, .. } => *factor.grid(),
            Prepared::Shapes { sampler, .. } => *sampler.window(),
        }
    }

    /// The default shape source of method 4.
    pub fn shape_source(&self) -> Option<RejectionShapes> {
        match &self.prepared {
            Prepared::Shapes { sampler, .. } => Some(RejectionShapes::new(sampler.clone())),
            _ => None,
        }
    }

    fn key(&self, replication: u64) -> StreamKey {
        StreamKey::new(self.seed, self.config.spec.id(), replication)
    }

    /// Realization number `replication`.
    pub fn realize(&self, replication: u64) -> Result<FieldRealization, MethodError> {
        match self.shape_source() {
            Some(mut shapes) => self.realize_with_shapes(replication, &mut shapes),
            None => self.realize_inner(replication, None),
        }
    }

    /// Like [`realize`](Self::realize) but method 4 takes its shapes from
    /// `shapes`. Other methods ignore it.
    pub fn realize_with_shapes(
        &self,
        replication: u64,
        shapes: &mut dyn ShapeSource,
    ) -> Result<FieldRealization, MethodError> {
        self.realize_inner(replication, Some(shapes))
    }

    fn realize_inner(
        &self,
        replication: u64,
        shapes: Option<&mut dyn ShapeSource>,
    ) -> Result<FieldRealization, MethodError> {
        let key = self.key(replication);
        let (values, paths_used, stop_reason) = match &self.prepared {
            Prepared::Canonical { factor, q_hi } => self.run_shifted(key, factor, *q_hi, &[0], 1.0),
            Prepared::Shifted {
                factor,
                q_hi,
                shifts,
            } => self.run_shifted(key, factor, *q_hi, shifts, 1.0 / shifts.len() as f64),
            Prepared::Translated {
                factor,
                q_hi,
                sites,
            } => self.run_translated(key, factor, *q_hi, sites),
            Prepared::Lattice { factor, j_max } => self.run_lattice(key, factor, *j_max),
            Prepared::Shapes {
                sites, lambda_p, ..
            } => {
                let shapes = shapes.expect("method 4 always has a shape source");
                self.run_shapes(key, sites, *lambda_p, shapes)?
            }
        };
        let values = match self.config.margins {
            Margins::Gumbel => values,
            Margins::Frechet => values.into_iter().map(f64::exp).collect(),
        };
        Ok(FieldRealization {
            grid: self.grid,
            values,
            paths_used,
            stop_reason,
            margins: self.config.margins,
        })
    }

    /// Methods 0 and 1: one stream per shift, visited round-robin.
    fn run_shifted(
        &self,
        key: StreamKey,
        factor: &CovarianceFactor,
        q_hi: f64,
        shifts: &[i64],
        rate: f64,
    ) -> (Vec<f64>, u64, StopReason) {
        let mut acc = FieldAccumulator::new(self.grid);
        let mut streams: Vec<_> = (0..shifts.len())
            .map(|j| {
                let k = key.with_block(j as i64);
                (
                    GumbelPointStream::new(rate).expect("positive rate"),
                    k.points().stream(),
                    k,
                )
            })
            .collect();
        let mut active = vec![true; shifts.len()];
        let mut paths = 0;
        for i in 0..self.config.k_max {
            for (j, (points, rng, k)) in streams.iter_mut().enumerate() {
                if !active[j] {
                    continue;
                }
                let x = points.next_point(rng);
                if self.config.adaptive && x + q_hi < acc.minimum() {
                    active[j] = false;
                    continue;
                }
                let path = factor.sample(&mut k.with_path(i).stream());
                acc.add_shifted(x, path.values(), factor.grid(), shifts[j]);
                paths += 1;
            }
            if !active.iter().any(|&a| a) {
                return (acc.into_values(), paths, StopReason::Adaptive);
            }
        }
        (acc.into_values(), paths, StopReason::FixedK)
    }

    /// Method 2.
    fn run_translated(
        &self,
        key: StreamKey,
        factor: &CovarianceFactor,
        q_hi: f64,
        sites: &MarkSpace,
    ) -> (Vec<f64>, u64, StopReason) {
        let mut acc = FieldAccumulator::new(self.grid);
        let mut points = GumbelPointStream::new(1.0).expect("positive rate");
        let mut rng = key.points().stream();
        for i in 0..self.config.k_max {
            let marked = points
                .next_marked_point(sites, &mut rng)
                .expect("validated sites");
            if self.config.adaptive && marked.value + q_hi < acc.minimum() {
                return (acc.into_values(), i, StopReason::Adaptive);
            }
            let Mark::Site(h) = marked.mark else {
                unreachable!()
            };
            let path = factor.sample(&mut key.with_path(i).stream());
            acc.add_shifted(marked.value, path.values(), factor.grid(), h);
        }
        (acc.into_values(), self.config.k_max, StopReason::FixedK)
    }

    /// Method 3: blocks `-j_max..=j_max`, round-robin, paths filtered on
    /// their argmax.
    fn run_lattice(
        &self,
        key: StreamKey,
        factor: &CovarianceFactor,
        j_max: i64,
    ) -> (Vec<f64>, u64, StopReason) {
        let mut acc = FieldAccumulator::new(self.grid);
        let mut blocks: Vec<_> = (-j_max..=j_max)
            .map(|j| {
                let k = key.with_block(j);
                (
                    j,
                    GumbelPointStream::new(1.0).expect("positive rate"),
                    k.points().stream(),
                    k,
                    true,
                )
            })
            .collect();
        let accept = factor.argmax_at_origin();
        let mut paths = 0;
        let mut any_active = true;
        for i in 0..self.config.k_max {
            if !any_active {
                return (acc.into_values(), paths, StopReason::Adaptive);
            }
            any_active = false;
            for (j, points, rng, k, active) in blocks.iter_mut() {
                if !*active {
                    continue;
                }
                let x = points.next_point(rng);
                if self.config.adaptive && x < acc.minimum() {
                    *active = false;
                    continue;
                }
                any_active = true;
                paths += 1;
                if let Some(path) = factor.sample_filtered(&mut k.with_path(i).stream(), &accept) {
                    acc.add_shifted(x, path.values(), factor.grid(), *j);
                }
            }
        }
        let reason = if any_active {
            StopReason::FixedK
        } else {
            StopReason::Adaptive
        };
        (acc.into_values(), paths, reason)
    }

    /// Method 4.
    fn run_shapes(
        &self,
        key: StreamKey,
        sites: &MarkSpace,
        lambda_p: f64,
        shapes: &mut dyn ShapeSource,
    ) -> Result<(Vec<f64>, u64, StopReason), MethodError> {
        let mut acc = FieldAccumulator::new(self.grid);
        let mut points = GumbelPointStream::new(lambda_p * sites.measure())?;
        let mut rng = key.points().stream();
        for i in 0..self.config.k_max {
            let marked = points.next_marked_point(sites, &mut rng)?;
            if self.config.adaptive && marked.value < acc.minimum() {
                return Ok((acc.into_values(), i, StopReason::Adaptive));
            }
            let Mark::Site(s) = marked.mark else {
                unreachable!()
            };
            let shape = shapes.next_shape(key.with_path(i))?;
            acc.add_with(marked.value, s, |k| shape.at_offset(k));
        }
        Ok((acc.into_values(), self.config.k_max, StopReason::FixedK))
    }
}

/// Shape window of method 4 for site half-width `v`: `requested` if it
/// covers `b + v`, else the larger of [`default_window`] and `b + v`.
pub fn shape_window_for(
    model: &VariogramModel,
    grid: &Grid,
    v: f64,
    requested: Option<f64>,
) -> Result<f64, MethodError> {
    let (b, p) = (grid.half_width(), grid.step());
    let needed = b + v;
    match requested {
        Some(w) if w < needed - 1e-9 * needed => Err(MethodError::InvalidWindow(format!(
            "shape window {w} must cover b + v = {needed}"
        ))),
        Some(w) => Ok(w),
        None => Ok(default_window(model, b, p).max((needed / p - 1e-9).ceil() * p)),
    }
}

/// Nearest-rank `1 - 1e-4` quantile of the path maximum over the window.
fn pilot_quantile(factor: &CovarianceFactor, key: StreamKey) -> f64 {
    let mut maxima: Vec<f64> = (0..PILOT_PATHS as u64)
        .map(|i| {
            let path = factor.sample(&mut key.with_path(i).stream());
            path.values()
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    maxima.sort_by(f64::total_cmp);
    let rank = (PILOT_LEVEL * PILOT_PATHS as f64).ceil() as usize;
    maxima[rank.clamp(1, PILOT_PATHS) - 1]
}

fn check_method(config: &MethodConfig, id: u8) -> Result<(), MethodError> {
    if config.spec.id() == id {
        Ok(())
    } else {
        Err(MethodError::InvalidConfig(format!(
            "expected a method-{id} config, got method {}",
            config.spec.id()
        )))
    }
}

/// Canonical representation.
pub fn method0(
    model: &VariogramModel,
    grid: &Grid,
    config: &MethodConfig,
    seed: u64,
    replication: u64,
) -> Result<FieldRealization, MethodError> {
    check_method(config, 0)?;
    Generator::new(*model, *grid, config.clone(), seed)?.realize(replication)
}

/// Shifted streams of rate `1/n`.
pub fn method1(
    model: &VariogramModel,
    grid: &Grid,
    config: &MethodConfig,
    seed: u64,
    replication: u64,
) -> Result<FieldRealization, MethodError> {
    check_method(config, 1)?;
    Generator::new(*model, *grid, config.clone(), seed)?.realize(replication)
}

/// Random translations.
pub fn method2(
    model: &VariogramModel,
    grid: &Grid,
    config: &MethodConfig,
    seed: u64,
    replication: u64,
) -> Result<FieldRealization, MethodError> {
    check_method(config, 2)?;
    Generator::new(*model, *grid, config.clone(), seed)?.realize(replication)
}

/// Lattice blocks with argmax filtering.
pub fn method3(
    model: &VariogramModel,
    grid: &Grid,
    config: &MethodConfig,
    seed: u64,
    replication: u64,
) -> Result<FieldRealization, MethodError> {
    check_method(config, 3)?;
    Generator::new(*model, *grid, config.clone(), seed)?.realize(replication)
}

/// Mixed moving maxima with shapes from `shapes`.
pub fn method4(
    model: &VariogramModel,
    grid: &Grid,
    config: &MethodConfig,
    seed: u64,
    replication: u64,
    shapes: &mut dyn ShapeSource,
) -> Result<FieldRealization, MethodError> {
    check_method(config, 4)?;
    Generator::new(*model, *grid, config.clone(), seed)?.realize_with_shapes(replication, shapes)
}
