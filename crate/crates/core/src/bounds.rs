//! Closed-form approximation-error bounds for the five generators.
//!
//! The printed formulas mix `C`/`c(k)`, `x`/`x(k)` and `o`/`v`. Throughout,
//! `C` is read as `c(k)`, `x` as `x(k)` and `o` as `v`, which are the only
//! readings consistent with the stated preconditions. Two further readings:
//!
//! - lattice method, third term of the conditional bound: the printed
//!   `pj_max - o` is read as `pj_max - b`, the value used in its derivation;
//! - translated method, lower-level event: both `b - h_1` and `b - t_o` in
//!   the square roots are replaced by `t_o = b - min I`.
//!
//! Factors of the product bounds that stand for probabilities are cut to
//! `[0, 1]`, so no component turns negative where the printed expression
//! leaves that range. Components can still overflow to `+inf` where a bound
//! is vacuous.
//!
//! Everything else is transcribed as printed, including constants that look
//! inconsistent between the loose and sharp variants. Factorials are
//! evaluated in log space.

use std::f64::consts::PI;

use serde::Serialize;
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("loose block bound needs a1 > 4 + h (a1 = {a1}, h = {h})")]
    LooseThreshold { a1: f64, h: f64 },
    #[error("sharp block bound needs a1 > 16 + h (a1 = {a1}, h = {h})")]
    SharpThreshold { a1: f64, h: f64 },
    #[error("AsymmetricShifts: the shift set must be symmetric about 0")]
    AsymmetricShifts,
}

fn domain(msg: impl Into<String>) -> BoundError {
    BoundError::Domain(msg.into())
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// `1 - Φ(x)` without cancellation.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

fn is_multiple(a: f64, h: f64) -> bool {
    let r = a / h;
    (r - r.round()).abs() <= 1e-9 * r.abs().max(1.0)
}

/// `z^k e^{-(k-1) y} / (k-1)!` in log space, `z > 0`.
fn poisson_tail_prefactor(z: f64, k: u64, y: f64) -> f64 {
    let k = k as f64;
    (k * z.ln() - (k - 1.0) * y - ln_gamma(k)).exp()
}

/// A lower bound on a probability, cut to `[0, 1]`. The printed product
/// bounds multiply such factors, and a factor below 0 would flip the sign.
fn prob(lower: f64) -> f64 {
    lower.clamp(0.0, 1.0)
}

/// `1 - exp(-e^{-u})`.
fn gumbel_sf(u: f64) -> f64 {
    -(-(-u).exp()).exp_m1()
}

/// Bound on `P(∃i: X_i < x, sup_{[t_u, t_o]} X_i + W_i > C)` for standard
/// Brownian paths and points of intensity `λ e^{-x} dx`.
pub fn excursion_bound(
    lambda: f64,
    t_u: f64,
    t_o: f64,
    big_c: f64,
    x: f64,
) -> Result<f64, BoundError> {
    if !(big_c > x) {
        return Err(domain(format!("need C > x, got C = {big_c}, x = {x}")));
    }
    if !(t_u <= 0.0 && t_o >= 0.0) {
        return Err(domain(format!("need t_u <= 0 <= t_o, got [{t_u}, {t_o}]")));
    }
    if !(lambda > 0.0) {
        return Err(domain("need lambda > 0"));
    }
    let term = |t: f64| {
        let t = t.abs();
        if t == 0.0 {
            return 0.0;
        }
        lambda * (-big_c).exp() * 2.0 * t / (big_c - x)
            * (t / 2.0).exp()
            * normal_sf((big_c - x - t) / t.sqrt())
    };
    Ok(term(t_u) + term(t_o))
}

/// Bound on a late-block path overtaking the origin value, for blocks starting
/// at `a_1, a_1 + h, …` and windows of length `L`.
pub fn block_bound(a1: f64, h: f64, l: f64, big_c: f64, sharp: bool) -> Result<f64, BoundError> {
    if !(h > 0.0) {
        return Err(domain("need h > 0"));
    }
    if !(l > 0.0) || !is_multiple(l, h) {
        return Err(domain(format!(
            "need L > 0 and L a multiple of h, got L = {l}"
        )));
    }
    if !is_multiple(a1, h) {
        return Err(domain(format!("need a1 a multiple of h, got a1 = {a1}")));
    }
    let d = a1 - h;
    let sd = d.sqrt();
    if sharp {
        if !(a1 > 16.0 + h) {
            return Err(BoundError::SharpThreshold { a1, h });
        }
        Ok(2.0 * (-big_c).exp() / h
            * ((-sd).exp()
                + 25.0 * l / 9.0
                    * (2.0 * l / PI).sqrt()
                    * (-(sd - sd.ln()).powi(2) / (2.0 * l)).exp()
                + 8.0 / (2.0 * PI).sqrt()
                    * (1.0 + 2.0 / (sd - 4.0))
                    * (-(sd - 4.0).powi(2) / 8.0).exp()))
    } else {
        if !(a1 > 4.0 + h) {
            return Err(BoundError::LooseThreshold { a1, h });
        }
        let s25 = d.max(25.0).sqrt();
        let inner = 0.3 * sd + 0.2 * s25 - (s25 / 2.0).ln();
        Ok(8.0 * (-big_c).exp() / h
            * ((-sd / 2.0).exp()
                + 25.0 * l / 9.0 * (2.0 * l / PI).sqrt() * (-inner * inner / (2.0 * l)).exp()
                + 1.0 / (2.0 * PI).sqrt()
                    * (1.0 + 1.0 / (sd - 2.0))
                    * (-(sd - 2.0).powi(2) / 8.0).exp()))
    }
}

/// Method-specific parameters of a bound evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundMethod {
    Canonical,
    /// Shift set `h_1 < … < h_n`, symmetric about 0.
    Shifted {
        shifts: Vec<f64>,
    },
    /// Translations uniform on `[-v, v]`.
    Translated {
        half_width: f64,
    },
    /// Blocks `-j_max..=j_max` on the lattice `pℤ`.
    Lattice {
        j_max: i64,
    },
    /// Sites in `[-v, v] ∩ pℤ` with intensity constant `λ⁽ᵖ⁾`.
    Shapes {
        half_width: f64,
        lambda_p: f64,
    },
}

impl BoundMethod {
    pub fn id(&self) -> u8 {
        match self {
            BoundMethod::Canonical => 0,
            BoundMethod::Shifted { .. } => 1,
            BoundMethod::Translated { .. } => 2,
            BoundMethod::Lattice { .. } => 3,
            BoundMethod::Shapes { .. } => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundParams {
    pub method: BoundMethod,
    /// Half-width of the simulation interval.
    pub b: f64,
    /// Grid step; used by methods 3 and 4.
    pub p: f64,
    pub k: u64,
    /// Level `c(k)` of the minimum of the approximation.
    pub c: f64,
    /// Level `x(k)` of the k-th point; methods 3 and 4 use `c(k)` instead.
    pub x: f64,
    pub sharp: bool,
}

impl BoundParams {
    /// Parameters with the default level schedule for `k`.
    pub fn with_schedule(method: BoundMethod, b: f64, p: f64, k: u64, sharp: bool) -> Self {
        let (c, x) = default_levels(method.id(), k);
        Self {
            method,
            b,
            p,
            k,
            c,
            x,
            sharp,
        }
    }
}

/// Level schedule `(c(k), x(k))` under which every bound of the method
/// vanishes as `k → ∞`.
pub fn default_levels(method: u8, k: u64) -> (f64, f64) {
    let lk = (k as f64).ln();
    match method {
        3 => (-lk / 2.0, -lk / 2.0),
        4 => (-lk / 4.0, -lk / 4.0),
        _ => (-(lk / 2.0).ln().ln(), -lk / 2.0),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorBudget {
    /// Error probability given the two good events.
    pub conditional: f64,
    /// Bound on `P(C_k <= c(k))`.
    pub low_event: f64,
    /// Bound on `P(X_k > x(k))` or its analogue.
    pub high_event: f64,
    pub total: f64,
    pub total_clamped: f64,
    pub params: BoundParams,
}

/// Evaluates all three components of the bound for the configured method.
pub fn method_error_bound(params: &BoundParams) -> Result<ErrorBudget, BoundError> {
    let &BoundParams {
        b,
        p,
        k,
        c,
        x,
        sharp,
        ..
    } = params;
    if !(b > 0.0) {
        return Err(domain("need b > 0"));
    }
    if k < 1 {
        return Err(domain("need k >= 1"));
    }
    let (conditional, low_event, high_event) = match &params.method {
        BoundMethod::Canonical => {
            check_levels(c, x)?;
            canonical(b, k, c, x)
        }
        BoundMethod::Shifted { shifts } => {
            check_levels(c, x)?;
            shifted(b, k, c, x, shifts)?
        }
        BoundMethod::Translated { half_width } => {
            check_levels(c, x)?;
            if !(*half_width > 0.0) {
                return Err(domain("need v > 0"));
            }
            translated(b, k, c, x, b + half_width)
        }
        BoundMethod::Lattice { j_max } => {
            check_lattice(p, c)?;
            lattice(b, p, k, c, *j_max, sharp)?
        }
        BoundMethod::Shapes {
            half_width,
            lambda_p,
        } => {
            check_lattice(p, c)?;
            shapes(b, p, k, c, *half_width, *lambda_p, sharp)?
        }
    };
    let total = conditional + low_event + high_event;
    Ok(ErrorBudget {
        conditional,
        low_event,
        high_event,
        total,
        total_clamped: total.clamp(0.0, 1.0),
        params: params.clone(),
    })
}

fn check_levels(c: f64, x: f64) -> Result<(), BoundError> {
    if x < c && c < 0.0 {
        Ok(())
    } else {
        Err(domain(format!(
            "need x(k) < c(k) < 0, got x = {x}, c = {c}"
        )))
    }
}

fn check_lattice(p: f64, c: f64) -> Result<(), BoundError> {
    if !(p > 0.0) {
        return Err(domain("need p > 0"));
    }
    if !(c < 0.0) {
        return Err(domain(format!("need c(k) < 0, got {c}")));
    }
    Ok(())
}

/// Conditional part shared by methods 0 to 2, with reach `d`.
fn reach_conditional(d: f64, c: f64, x: f64) -> f64 {
    4.0 * (-c).exp() * d / (c - x) * (d / 2.0).exp() * normal_sf((c - x - d) / d.sqrt())
}

fn canonical(b: f64, k: u64, c: f64, x: f64) -> (f64, f64, f64) {
    let conditional = reach_conditional(b, c, x);
    let low = 1.0
        - (1.0 - (-(-c / 2.0).exp()).exp())
            * (2.0 * normal_cdf(-c / (2.0 * b.sqrt())) - 1.0).powi(2);
    let high = poisson_tail_prefactor(1.0, k, x) * gumbel_sf(x);
    (conditional, low, high)
}

fn reach_low_event(d: f64, c: f64) -> f64 {
    let inner = normal_cdf(-(c + d) / (2.0 * d.sqrt()))
        + (-c / 2.0).exp() * normal_sf(-(c - d) / (2.0 * d.sqrt()));
    1.0 - (1.0 - (-(-c / 2.0).exp()).exp()) * prob(inner).powi(2)
}

fn shifted(b: f64, k: u64, c: f64, x: f64, shifts: &[f64]) -> Result<(f64, f64, f64), BoundError> {
    if shifts.is_empty() {
        return Err(domain("need at least one shift"));
    }
    if shifts.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(domain("shifts must be strictly increasing"));
    }
    let n = shifts.len();
    let tol = 1e-12 * shifts.iter().fold(1.0f64, |m, h| m.max(h.abs()));
    if (0..n).any(|i| (shifts[i] + shifts[n - 1 - i]).abs() > tol) {
        return Err(BoundError::AsymmetricShifts);
    }
    let d = b - shifts[0];
    let nf = n as f64;
    let high = nf * poisson_tail_prefactor(nf, k, x) * gumbel_sf(nf * x);
    Ok((reach_conditional(d, c, x), reach_low_event(d, c), high))
}

fn translated(_b: f64, k: u64, c: f64, x: f64, t_o: f64) -> (f64, f64, f64) {
    let high = poisson_tail_prefactor(1.0, k, x) * gumbel_sf(x);
    (reach_conditional(t_o, c, x), reach_low_event(t_o, c), high)
}

/// `4/(1 - e^{-p/2}) · (1 - Φ(u_1) - e^{-c/2}(1 - Φ(u_2)))²` with the
/// arguments `-c/√(8b) ∓ √(b/2)`.
fn shape_infimum_term(b: f64, p: f64, c: f64) -> f64 {
    let u = -c / (8.0 * b).sqrt();
    let s = (b / 2.0).sqrt();
    let a = normal_sf(u - s) - (-c / 2.0).exp() * normal_sf(u + s);
    4.0 / (1.0 - (-p / 2.0).exp()) * a * a
}

fn lattice(
    b: f64,
    p: f64,
    k: u64,
    c: f64,
    j_max: i64,
    sharp: bool,
) -> Result<(f64, f64, f64), BoundError> {
    let reach = p * j_max as f64;
    let margin = if sharp { 16.0 } else { 4.0 };
    if !(reach > b + margin) {
        return Err(domain(format!(
            "need p*j_max > b + {margin}, got p*j_max = {reach}, b = {b}"
        )));
    }
    let d = reach - b;
    let sd = d.sqrt();
    let conditional = if sharp {
        4.0 * (-c).exp() / p
            * ((-sd).exp()
                + 100.0 / 9.0
                    * (b.powi(3) / PI).sqrt()
                    * (-(sd - sd.ln()).powi(2) / (4.0 * b)).exp()
                + 8.0 / (2.0 * PI).sqrt()
                    * (1.0 + 2.0 / (sd - 4.0))
                    * (-(sd - 4.0).powi(2) / 8.0).exp())
    } else {
        let s25 = d.max(25.0).sqrt();
        let inner = 0.3 * sd + 0.2 * s25 - (s25 / 2.0).ln();
        16.0 * (-c).exp() / p
            * ((-sd / 2.0).exp()
                + 100.0 / 9.0 * (b.powi(3) / PI).sqrt() * (-inner * inner / (4.0 * b)).exp()
                + 1.0 / (2.0 * PI).sqrt()
                    * (1.0 + 1.0 / (sd - 2.0))
                    * (-(sd - 2.0).powi(2) / 8.0).exp())
    };
    let q = 1.0 - (-p / 2.0).exp();
    let low = 1.0
        - (1.0 - (-(2.0 * b / p + 1.0) / 4.0 * (-c / 2.0).exp() * q * q).exp())
            * prob(1.0 - shape_infimum_term(b, p, c));
    let high = (2 * j_max + 1) as f64 * poisson_tail_prefactor(1.0, k, c) * gumbel_sf(c);
    Ok((conditional, low, high))
}

fn shapes(
    b: f64,
    p: f64,
    k: u64,
    c: f64,
    v: f64,
    lambda: f64,
    sharp: bool,
) -> Result<(f64, f64, f64), BoundError> {
    if !(lambda > 0.0) {
        return Err(domain("need lambda_p > 0"));
    }
    let margin = if sharp { 16.0 } else { 4.0 };
    if !(v > b + margin) {
        return Err(domain(format!(
            "need v > b + {margin}, got v = {v}, b = {b}"
        )));
    }
    if !is_multiple(v, p) {
        return Err(domain(format!("need v a multiple of p, got v = {v}")));
    }
    let d = v - b;
    let sd = d.sqrt();
    let q = 1.0 - (-p / 2.0).exp();
    let conditional = if sharp {
        16.0 * (-c).exp() / (q * q)
            * lambda
            * ((-sd).exp()
                + 8.0 / (2.0 * PI).sqrt()
                    * (1.0 + 1.0 / (sd - 4.0))
                    * (-(sd - 4.0).powi(2) / 8.0).exp()
                + 100.0 * b.powi(3).sqrt() / (9.0 * PI.sqrt())
                    * (-(sd - sd.ln()).powi(2) / (4.0 * b)).exp())
    } else {
        let s25 = d.max(25.0).sqrt();
        let inner = 0.3 * sd + 0.2 * s25 - (s25 / 2.0).ln();
        64.0 * (-c).exp() / (q * q)
            * lambda
            * ((-sd / 2.0).exp()
                + 1.0 / (2.0 * PI).sqrt()
                    * (1.0 + 1.0 / (sd - 2.0))
                    * (-(sd - 2.0).powi(2) / 8.0).exp()
                + 100.0 * b.powi(3).sqrt() / (9.0 * PI.sqrt()) * (-inner * inner / (4.0 * b)).exp())
    };
    let outside = poisson_tail_prefactor(2.0 * d * lambda, k, c / 2.0) * gumbel_sf(d * lambda * c);
    let low = 1.0
        - (1.0 - (-lambda * (2.0 * b + p) * (-c / 2.0).exp()).exp())
            * prob(1.0 - outside)
            * prob(1.0 - shape_infimum_term(b, p, c));
    let rate = (2.0 * v + p) * lambda;
    let high = poisson_tail_prefactor(rate, k, c) * gumbel_sf(rate * c);
    Ok((conditional, low, high))
}
