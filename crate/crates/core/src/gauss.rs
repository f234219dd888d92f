//! Pinned, intrinsically stationary Gaussian paths on finite lattices.
//!
//! A path is `ξ(t) = W(t) - σ²(t)/2` with `W(0) = 0`, fractional variogram
//! `γ(h) = s·|h|^α` and `σ²(t) = 2γ(t)`. The covariance of `W` over the
//! nonzero grid points is
//!
//! ```text
//! C(tᵢ, tⱼ) = γ(tᵢ) + γ(tⱼ) - γ(tᵢ - tⱼ)
//! ```
//!
//! which is factorized once by dense Cholesky. The origin row is left out and
//! reinserted as an exact zero.
//!
//! Factor rows are ordered centre-out (`p, -p, 2p, -2p, …`). Row `r` of the
//! path only needs the first `r + 1` normals, so a consumer that rejects a
//! path as soon as some value near the origin violates a condition can stop
//! after a few rows. A rejected attempt consumes a prefix of the normals a
//! full path would have used.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::RandomStream;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaussError {
    #[error("invalid variogram: alpha must lie in (0, 2] and scale must be positive (alpha={alpha}, scale={scale})")]
    InvalidModel { alpha: f64, scale: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("covariance is not positive definite even with diagonal jitter {jitter:e}")]
    NonPositiveDefinite { jitter: f64 },
}

/// Fractional variogram `γ(h) = scale·|h|^alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariogramModel {
    alpha: f64,
    scale: f64,
}

impl VariogramModel {
    pub fn new(alpha: f64, scale: f64) -> Result<Self, GaussError> {
        if !(alpha > 0.0 && alpha <= 2.0) || !(scale > 0.0) || !scale.is_finite() {
            return Err(GaussError::InvalidModel { alpha, scale });
        }
        Ok(Self { alpha, scale })
    }

    /// Standard Brownian motion: `γ(h) = |h|/2`, so `σ²(t) = |t|`.
    pub fn brownian() -> Self {
        Self {
            alpha: 1.0,
            scale: 0.5,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    #[inline]
    pub fn gamma(&self, h: f64) -> f64 {
        if h == 0.0 {
            0.0
        } else {
            self.scale * h.abs().powf(self.alpha)
        }
    }

    #[inline]
    pub fn sigma2(&self, t: f64) -> f64 {
        2.0 * self.gamma(t)
    }
}

/// The lattice `(p·ℤ) ∩ [-b, b]`, stored as step `p` and `n = b/p`.
///
/// Points are `k·p` for `k = -n..=n`; index `i` holds `k = i - n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    step: f64,
    half_count: usize,
}

impl Grid {
    /// Grid on `[-half_width, half_width]`; `half_width` must be a positive
    /// integer multiple of `step` (up to 1e-9 relative).
    pub fn new(half_width: f64, step: f64) -> Result<Self, GaussError> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(GaussError::InvalidGrid(format!(
                "step must be positive, got {step}"
            )));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(GaussError::InvalidGrid(format!(
                "half width must be positive, got {half_width}"
            )));
        }
        let ratio = half_width / step;
        let n = ratio.round();
        if (ratio - n).abs() > 1e-9 * ratio.max(1.0) || n < 1.0 {
            return Err(GaussError::InvalidGrid(format!(
                "half width {half_width} is not a multiple of step {step}"
            )));
        }
        Self::from_half_count(n as usize, step)
    }

    pub fn from_half_count(half_count: usize, step: f64) -> Result<Self, GaussError> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(GaussError::InvalidGrid(format!(
                "step must be positive, got {step}"
            )));
        }
        if half_count == 0 {
            return Err(GaussError::InvalidGrid(
                "grid needs at least one point on each side".into(),
            ));
        }
        Ok(Self { step, half_count })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn half_count(&self) -> usize {
        self.half_count
    }

    pub fn half_width(&self) -> f64 {
        self.half_count as f64 * self.step
    }

    pub fn len(&self) -> usize {
        2 * self.half_count + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of the origin.
    pub fn center(&self) -> usize {
        self.half_count
    }

    /// Lattice offset `k` of index `i`, so that the point is `k·p`.
    #[inline]
    pub fn offset(&self, index: usize) -> i64 {
        index as i64 - self.half_count as i64
    }

    #[inline]
    pub fn point(&self, index: usize) -> f64 {
        self.offset(index) as f64 * self.step
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Index of lattice offset `k`, if it lies on the grid.
    #[inline]
    pub fn index_of_offset(&self, offset: i64) -> Option<usize> {
        let i = offset + self.half_count as i64;
        (0..self.len() as i64).contains(&i).then_some(i as usize)
    }

    /// Index of the grid point equal to `t` (within 1e-9 of a step).
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let k = (t / self.step).round();
        if (t / self.step - k).abs() > 1e-9 {
            return None;
        }
        self.index_of_offset(k as i64)
    }
}

/// Cholesky factor of the pinned covariance over the nonzero grid points.
#[derive(Debug, Clone)]
pub struct CovarianceFactor {
    grid: Grid,
    /// Factor row -> grid index, centre-out.
    order: Vec<usize>,
    /// Lower-triangular rows, packed: row `r` starts at `r(r+1)/2`.
    lower: Vec<f64>,
    /// `σ²(t)/2` per grid index.
    drift: Vec<f64>,
    jitter: f64,
}

const JITTER_LADDER: [f64; 4] = [0.0, 1e-12, 1e-10, 1e-8];

/// Factorizes the pinned covariance of `model` over `grid`.
pub fn build_covariance(
    model: &VariogramModel,
    grid: &Grid,
) -> Result<CovarianceFactor, GaussError> {
    let order = centre_out_order(grid);
    let offsets: Vec<i64> = order.iter().map(|&i| grid.offset(i)).collect();
    let m = order.len();
    let p = grid.step();
    let cov = DMatrix::from_fn(m, m, |r, c| {
        let (kr, kc) = (offsets[r], offsets[c]);
        model.gamma(kr as f64 * p) + model.gamma(kc as f64 * p) - model.gamma((kr - kc) as f64 * p)
    });
    let mut last_jitter = 0.0;
    for &jitter in &JITTER_LADDER {
        last_jitter = jitter;
        let mut attempt = cov.clone();
        for i in 0..m {
            attempt[(i, i)] += jitter;
        }
        if let Some(chol) = attempt.cholesky() {
            let l = chol.l();
            let mut lower = Vec::with_capacity(m * (m + 1) / 2);
            for r in 0..m {
                for c in 0..=r {
                    lower.push(l[(r, c)]);
                }
            }
            let drift = (0..grid.len())
                .map(|i| 0.5 * model.sigma2(grid.point(i)))
                .collect();
            return Ok(CovarianceFactor {
                grid: *grid,
                order,
                lower,
                drift,
                jitter,
            });
        }
    }
    Err(GaussError::NonPositiveDefinite {
        jitter: last_jitter,
    })
}

fn centre_out_order(grid: &Grid) -> Vec<usize> {
    let c = grid.center();
    let mut order = Vec::with_capacity(grid.len() - 1);
    for k in 1..=grid.half_count() {
        order.push(c + k);
        order.push(c - k);
    }
    order
}

/// Values of `ξ = W - σ²/2` on every point of a grid, indexed like the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftedPath {
    values: Vec<f64>,
}

impl DriftedPath {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

impl CovarianceFactor {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Diagonal jitter that was needed, zero for a plain factorization.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Drift `σ²(t)/2` at grid index `i`.
    pub fn drift(&self, index: usize) -> f64 {
        self.drift[index]
    }

    /// The same factor with the drift removed, so paths are plain `W`.
    /// Only useful as a negative control.
    pub fn without_drift(mut self) -> Self {
        self.drift.iter_mut().for_each(|d| *d = 0.0);
        self
    }

    /// `L·Lᵀ` over the nonzero grid points, in grid order (origin removed).
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let m = self.order.len();
        let mut by_grid = vec![0usize; m];
        // grid index (without origin) -> factor row
        for (row, &gi) in self.order.iter().enumerate() {
            let slot = if gi > self.grid.center() { gi - 1 } else { gi };
            by_grid[slot] = row;
        }
        DMatrix::from_fn(m, m, |a, b| {
            let (ra, rb) = (by_grid[a], by_grid[b]);
            let n = ra.min(rb) + 1;
            let la = &self.lower[ra * (ra + 1) / 2..];
            let lb = &self.lower[rb * (rb + 1) / 2..];
            (0..n).map(|c| la[c] * lb[c]).sum()
        })
    }

    #[inline]
    fn row_value(&self, row: usize, normals: &[f64]) -> f64 {
        let start = row * (row + 1) / 2;
        let coeffs = &self.lower[start..start + row + 1];
        coeffs.iter().zip(normals).map(|(l, z)| l * z).sum()
    }

    /// Draws one drifted path.
    pub fn sample(&self, rng: &mut RandomStream) -> DriftedPath {
        self.sample_filtered(rng, |_, _| true)
            .expect("unconditional sampling never rejects")
    }

    /// Draws a path row by row in centre-out order, giving up as soon as
    /// `accept(grid_index, value)` returns false. Returns `None` on rejection.
    pub fn sample_filtered<F>(&self, rng: &mut RandomStream, mut accept: F) -> Option<DriftedPath>
    where
        F: FnMut(usize, f64) -> bool,
    {
        let m = self.order.len();
        let mut normals = Vec::with_capacity(m);
        let mut values = vec![0.0; self.grid.len()];
        for (row, &gi) in self.order.iter().enumerate() {
            normals.push(rng.standard_normal());
            let v = self.row_value(row, &normals) - self.drift[gi];
            if !accept(gi, v) {
                return None;
            }
            values[gi] = v;
        }
        Some(DriftedPath { values })
    }

    /// Accept rule for "the smallest maximizer of the path is the origin":
    /// strictly below zero left of it, at most zero right of it.
    pub fn argmax_at_origin(&self) -> impl Fn(usize, f64) -> bool + '_ {
        let c = self.grid.center();
        move |gi, v| if gi < c { v < 0.0 } else { v <= 0.0 }
    }
}

/// Draws `ξ(t) = W(t) - σ²(t)/2` on every grid point of `factor`.
pub fn sample_drifted_path(factor: &CovarianceFactor, rng: &mut RandomStream) -> DriftedPath {
    factor.sample(rng)
}

/// Index of the smallest maximizer of `values` ("inf argsup" on a grid).
pub fn smallest_argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
