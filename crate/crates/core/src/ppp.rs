//! Poisson point processes with intensity `λ·e^{-x} dx`.
//!
//! Points are produced in decreasing order as `X_k = log(1 / S_k)`, where
//! `S_k` is the running sum of iid exponential(λ) waiting times. Streams are
//! lazy and unbounded: each call consumes one exponential draw, plus one
//! uniform for the mark when marks are requested.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::RandomStream;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PppError {
    #[error("intensity must be positive and finite, got {0}")]
    InvalidIntensity(f64),
    #[error("mark space is empty")]
    EmptyMarkSpace,
}

/// Lazily generated, strictly decreasing Gumbel-intensity points.
#[derive(Debug, Clone)]
pub struct GumbelPointStream {
    rate: f64,
    sum: f64,
    last: f64,
    emitted: u64,
}

impl GumbelPointStream {
    pub fn new(rate: f64) -> Result<Self, PppError> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(PppError::InvalidIntensity(rate));
        }
        Ok(Self {
            rate,
            sum: 0.0,
            last: f64::INFINITY,
            emitted: 0,
        })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn emitted(&self) -> u64 {
        self.emitted
    }

    /// Last emitted point, or `+∞` before the first.
    pub fn last(&self) -> f64 {
        self.last
    }

    /// Advances the stream by an explicit waiting time `y > 0`.
    pub fn advance_by(&mut self, waiting_time: f64) -> f64 {
        self.sum += waiting_time;
        // `log` can round two distinct sums to the same value; step down one ulp then
        let x = -self.sum.ln();
        self.last = if x < self.last {
            x
        } else {
            self.last.next_down()
        };
        self.emitted += 1;
        self.last
    }

    pub fn next_point(&mut self, rng: &mut RandomStream) -> f64 {
        let y = rng.exponential(self.rate);
        self.advance_by(y)
    }

    pub fn next_marked_point(
        &mut self,
        marks: &MarkSpace,
        rng: &mut RandomStream,
    ) -> Result<MarkedPoint, PppError> {
        marks.validate()?;
        let value = self.next_point(rng);
        let mark = marks.draw(rng);
        Ok(MarkedPoint { value, mark })
    }
}

/// Where marks live: a bounded interval, or a finite lattice site set
/// `{(first + i)·step : i < count}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MarkSpace {
    Interval { lo: f64, hi: f64 },
    Lattice { step: f64, first: i64, count: usize },
}

/// A mark drawn from a [`MarkSpace`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mark {
    Location(f64),
    /// Lattice site as an integer offset; the location is `offset·step`.
    Site(i64),
}

impl Mark {
    pub fn location(&self, marks: &MarkSpace) -> f64 {
        match (*self, marks) {
            (Mark::Location(x), _) => x,
            (Mark::Site(k), MarkSpace::Lattice { step, .. }) => k as f64 * step,
            (Mark::Site(k), MarkSpace::Interval { .. }) => k as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkedPoint {
    pub value: f64,
    pub mark: Mark,
}

impl MarkSpace {
    pub fn interval(lo: f64, hi: f64) -> Result<Self, PppError> {
        let space = MarkSpace::Interval { lo, hi };
        space.validate()?;
        Ok(space)
    }

    /// Lattice sites `(step·ℤ) ∩ [lo, hi]`.
    pub fn lattice_in(step: f64, lo: f64, hi: f64) -> Result<Self, PppError> {
        if !(step > 0.0) {
            return Err(PppError::EmptyMarkSpace);
        }
        let first = (lo / step - 1e-9).ceil() as i64;
        let last = (hi / step + 1e-9).floor() as i64;
        if last < first {
            return Err(PppError::EmptyMarkSpace);
        }
        Ok(MarkSpace::Lattice {
            step,
            first,
            count: (last - first + 1) as usize,
        })
    }

    pub fn validate(&self) -> Result<(), PppError> {
        match *self {
            MarkSpace::Interval { lo, hi } if hi > lo && lo.is_finite() && hi.is_finite() => Ok(()),
            MarkSpace::Lattice { step, count, .. } if count > 0 && step > 0.0 => Ok(()),
            _ => Err(PppError::EmptyMarkSpace),
        }
    }

    /// Lebesgue length of an interval, or `count·step` for a lattice.
    pub fn measure(&self) -> f64 {
        match *self {
            MarkSpace::Interval { lo, hi } => hi - lo,
            MarkSpace::Lattice { step, count, .. } => count as f64 * step,
        }
    }

    fn draw(&self, rng: &mut RandomStream) -> Mark {
        match *self {
            MarkSpace::Interval { lo, hi } => Mark::Location(lo + (hi - lo) * rng.uniform_open()),
            MarkSpace::Lattice { first, count, .. } => Mark::Site(first + rng.index(count) as i64),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forced_draws() {
        let mut s = GumbelPointStream::new(1.0).unwrap();
        assert_eq!(s.advance_by(1.0), 0.0);
        let x2 = s.advance_by(1.0);
        assert!((x2 - (0.5f64).ln()).abs() < 1e-15);
        assert!((x2 + std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn tiny_waiting_time_still_decreases() {
        let mut s = GumbelPointStream::new(1.0).unwrap();
        let a = s.advance_by(1e6);
        let b = s.advance_by(1e-300);
        assert!(b < a);
    }

    #[test]
    fn rejects_bad_rate() {
        assert!(GumbelPointStream::new(0.0).is_err());
        assert!(GumbelPointStream::new(f64::NAN).is_err());
    }

    #[test]
    fn empty_mark_spaces() {
        assert_eq!(MarkSpace::interval(1.0, 1.0), Err(PppError::EmptyMarkSpace));
        assert_eq!(
            MarkSpace::lattice_in(1.0, 0.2, 0.8),
            Err(PppError::EmptyMarkSpace)
        );
        let mut s = GumbelPointStream::new(1.0).unwrap();
        let bad = MarkSpace::Lattice {
            step: 1.0,
            first: 0,
            count: 0,
        };
        let mut rng = RandomStream::from_seed(0);
        assert_eq!(
            s.next_marked_point(&bad, &mut rng),
            Err(PppError::EmptyMarkSpace)
        );
    }

    #[test]
    fn lattice_sites() {
        let m = MarkSpace::lattice_in(0.1, -0.4, 0.4).unwrap();
        assert_eq!(
            m,
            MarkSpace::Lattice {
                step: 0.1,
                first: -4,
                count: 9
            }
        );
        let m = MarkSpace::lattice_in(0.1, -0.05, 0.05).unwrap();
        assert_eq!(
            m,
            MarkSpace::Lattice {
                step: 0.1,
                first: 0,
                count: 1
            }
        );
    }

    #[test]
    fn interval_marks_stay_inside() {
        let marks = MarkSpace::interval(-2.0, 2.0).unwrap();
        let mut s = GumbelPointStream::new(1.0).unwrap();
        let mut rng = RandomStream::from_seed(5);
        for _ in 0..10_000 {
            let p = s.next_marked_point(&marks, &mut rng).unwrap();
            let h = p.mark.location(&marks);
            assert!((-2.0..=2.0).contains(&h));
        }
    }
}
