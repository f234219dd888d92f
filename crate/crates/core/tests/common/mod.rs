//! Helpers shared by the integration tests: a parallel sampler and a
//! straight-line transcription of every bound, written without the library's
//! helpers so it can serve as a second implementation.

#![allow(dead_code)]

use brsim_core::bounds::{default_levels, BoundMethod, BoundParams};
use brsim_core::{method_error_bound, FieldRealization, Generator};
use rayon::prelude::*;

pub fn realize_range(gen: &Generator, reps: std::ops::Range<u64>) -> Vec<FieldRealization> {
    reps.into_par_iter()
        .map(|r| gen.realize(r).expect("realization"))
        .collect()
}

pub fn column(fields: &[FieldRealization], t: f64) -> Vec<f64> {
    fields
        .iter()
        .map(|f| f.at(t).expect("grid point"))
        .collect()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    if a == b {
        return true;
    }
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

pub mod oracle {
    use std::f64::consts::PI;

    pub fn phi(x: f64) -> f64 {
        0.5 * libm::erfc(-x / 2f64.sqrt())
    }

    fn ln_fact(n: u64) -> f64 {
        (2..=n).map(|i| (i as f64).ln()).sum()
    }

    /// `z^k exp(-(k-1) y) / (k-1)!`
    fn tail(z: f64, k: u64, y: f64) -> f64 {
        (k as f64 * z.ln() - (k as f64 - 1.0) * y - ln_fact(k - 1)).exp()
    }

    pub fn excursion(lam: f64, tu: f64, to: f64, cc: f64, x: f64) -> f64 {
        let mut s = 0.0;
        for t in [tu.abs(), to.abs()] {
            if t > 0.0 {
                s += lam
                    * (-cc).exp()
                    * (2.0 * t / (cc - x))
                    * (t / 2.0).exp()
                    * (1.0 - phi((cc - x - t) / t.sqrt()));
            }
        }
        s
    }

    pub fn block(a1: f64, h: f64, l: f64, cc: f64, sharp: bool) -> f64 {
        let r = (a1 - h).sqrt();
        if sharp {
            2.0 * (-cc).exp() / h
                * ((-r).exp()
                    + 25.0 * l / 9.0
                        * (2.0 * l / PI).sqrt()
                        * (-(r - r.ln()).powi(2) / (2.0 * l)).exp()
                    + 8.0 / (2.0 * PI).sqrt()
                        * (1.0 + 2.0 / (r - 4.0))
                        * (-(r - 4.0).powi(2) / 8.0).exp())
        } else {
            let r25 = (a1 - h).max(25.0).sqrt();
            let g = 0.3 * r + 0.2 * r25 - (r25 / 2.0).ln();
            8.0 * (-cc).exp() / h
                * ((-r / 2.0).exp()
                    + 25.0 * l / 9.0 * (2.0 * l / PI).sqrt() * (-g * g / (2.0 * l)).exp()
                    + 1.0 / (2.0 * PI).sqrt()
                        * (1.0 + 1.0 / (r - 2.0))
                        * (-(r - 2.0).powi(2) / 8.0).exp())
        }
    }

    /// Components for methods 0 to 2 with reach `d` (`b`, `b - h_1`, `t_o`)
    /// and `n` streams.
    pub fn reach_method(d: f64, n: f64, k: u64, c: f64, x: f64, first_low: bool) -> [f64; 3] {
        let cond =
            4.0 * (-c).exp() * d / (c - x) * (d / 2.0).exp() * (1.0 - phi((c - x - d) / d.sqrt()));
        let gum = 1.0 - (-(-c / 2.0).exp()).exp();
        let low = if first_low {
            1.0 - gum * (2.0 * phi(-c / (2.0 * d.sqrt())) - 1.0).powi(2)
        } else {
            let s = phi(-(c + d) / (2.0 * d.sqrt()))
                + (-c / 2.0).exp() * (1.0 - phi(-(c - d) / (2.0 * d.sqrt())));
            let s = s.min(1.0);
            1.0 - gum * s * s
        };
        let high = n * tail(n, k, x) * (1.0 - (-(-n * x).exp()).exp());
        [cond, low, high]
    }

    fn infimum(b: f64, p: f64, c: f64) -> f64 {
        let a = 1.0
            - phi(-c / (8.0 * b).sqrt() - (b / 2.0).sqrt())
            - (-c / 2.0).exp() * (1.0 - phi(-c / (8.0 * b).sqrt() + (b / 2.0).sqrt()));
        (1.0 - 4.0 / (1.0 - (-p / 2.0).exp()) * a * a).max(0.0)
    }

    pub fn lattice(b: f64, p: f64, k: u64, c: f64, j_max: i64, sharp: bool) -> [f64; 3] {
        let d = p * j_max as f64 - b;
        let r = d.sqrt();
        let cond = if sharp {
            4.0 * (-c).exp() / p
                * ((-r).exp()
                    + 100.0 / 9.0
                        * (b * b * b / PI).sqrt()
                        * (-(r - r.ln()).powi(2) / (4.0 * b)).exp()
                    + 8.0 / (2.0 * PI).sqrt()
                        * (1.0 + 2.0 / (r - 4.0))
                        * (-(r - 4.0).powi(2) / 8.0).exp())
        } else {
            let r25 = d.max(25.0).sqrt();
            let g = 0.3 * r + 0.2 * r25 - (r25 / 2.0).ln();
            16.0 * (-c).exp() / p
                * ((-r / 2.0).exp()
                    + 100.0 / 9.0 * (b * b * b / PI).sqrt() * (-g * g / (4.0 * b)).exp()
                    + 1.0 / (2.0 * PI).sqrt()
                        * (1.0 + 1.0 / (r - 2.0))
                        * (-(r - 2.0).powi(2) / 8.0).exp())
        };
        let e = 1.0 - (-p / 2.0).exp();
        let low = 1.0
            - (1.0 - (-(2.0 * b / p + 1.0) / 4.0 * (-c / 2.0).exp() * e * e).exp())
                * infimum(b, p, c);
        let high = (2 * j_max + 1) as f64 * tail(1.0, k, c) * (1.0 - (-(-c).exp()).exp());
        [cond, low, high]
    }

    pub fn shapes(b: f64, p: f64, k: u64, c: f64, v: f64, lam: f64, sharp: bool) -> [f64; 3] {
        let d = v - b;
        let r = d.sqrt();
        let e = 1.0 - (-p / 2.0).exp();
        let cond = if sharp {
            16.0 * (-c).exp() / (e * e)
                * lam
                * ((-r).exp()
                    + 8.0 / (2.0 * PI).sqrt()
                        * (1.0 + 1.0 / (r - 4.0))
                        * (-(r - 4.0).powi(2) / 8.0).exp()
                    + 100.0 * (b * b * b).sqrt() / (9.0 * PI.sqrt())
                        * (-(r - r.ln()).powi(2) / (4.0 * b)).exp())
        } else {
            let r25 = d.max(25.0).sqrt();
            let g = 0.3 * r + 0.2 * r25 - (r25 / 2.0).ln();
            64.0 * (-c).exp() / (e * e)
                * lam
                * ((-r / 2.0).exp()
                    + 1.0 / (2.0 * PI).sqrt()
                        * (1.0 + 1.0 / (r - 2.0))
                        * (-(r - 2.0).powi(2) / 8.0).exp()
                    + 100.0 * (b * b * b).sqrt() / (9.0 * PI.sqrt()) * (-g * g / (4.0 * b)).exp())
        };
        let far = tail(2.0 * d * lam, k, c / 2.0) * (1.0 - (-(-d * lam * c).exp()).exp());
        let low = 1.0
            - (1.0 - (-lam * (2.0 * b + p) * (-c / 2.0).exp()).exp())
                * (1.0 - far).max(0.0)
                * infimum(b, p, c);
        let rate = (2.0 * v + p) * lam;
        let high = tail(rate, k, c) * (1.0 - (-(-rate * c).exp()).exp());
        [cond, low, high]
    }
}

/// Library vs oracle on a spread of parameter points. Returns the worst
/// relative disagreement and the number of values compared.
pub fn bound_disagreement() -> (f64, usize) {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let mut cmp = |a: f64, b: f64| {
        assert!(a.is_finite() && b.is_finite(), "{a} vs {b}");
        if a != b {
            worst = worst.max((a - b).abs() / a.abs().max(b.abs()));
        }
        count += 1;
    };
    for (lam, tu, to, cc, x) in [
        (1.0, -1.0, 1.0, 2.0, 0.0),
        (0.5, 0.0, 1.0, 2.0, 0.0),
        (2.0, -3.0, 0.5, 1.0, -4.0),
    ] {
        cmp(
            brsim_core::excursion_bound(lam, tu, to, cc, x).unwrap(),
            oracle::excursion(lam, tu, to, cc, x),
        );
    }
    for a1 in [8.0, 16.0, 18.0, 32.0, 64.0] {
        for sharp in [false, true] {
            if sharp && a1 <= 17.0 {
                continue;
            }
            cmp(
                brsim_core::block_bound(a1, 1.0, 4.0, 0.0, sharp).unwrap(),
                oracle::block(a1, 1.0, 4.0, 0.0, sharp),
            );
            cmp(
                brsim_core::block_bound(a1, 0.5, 2.5, -1.0, sharp).unwrap(),
                oracle::block(a1, 0.5, 2.5, -1.0, sharp),
            );
        }
    }
    let mut check = |params: BoundParams, expect: [f64; 3]| {
        let got = method_error_bound(&params).unwrap();
        cmp(got.conditional, expect[0]);
        cmp(got.low_event, expect[1]);
        cmp(got.high_event, expect[2]);
        cmp(got.total, expect[0] + expect[1] + expect[2]);
    };
    for k in [10u64, 200, 10_000] {
        for b in [1.0, 2.0] {
            let (c, x) = match k {
                10 => (-0.5, -2.0),
                200 => (-1.0, -3.0),
                _ => default_levels(0, k),
            };
            let p = |method| BoundParams {
                method,
                b,
                p: 0.1,
                k,
                c,
                x,
                sharp: false,
            };
            check(
                p(BoundMethod::Canonical),
                oracle::reach_method(b, 1.0, k, c, x, true),
            );
            check(
                p(BoundMethod::Shifted {
                    shifts: vec![-0.5, 0.0, 0.5],
                }),
                oracle::reach_method(b + 0.5, 3.0, k, c, x, false),
            );
            check(
                p(BoundMethod::Translated { half_width: 1.5 }),
                oracle::reach_method(b + 1.5, 1.0, k, c, x, false),
            );
            for sharp in [false, true] {
                let c3 = default_levels(3, k).0;
                let lat = BoundParams {
                    method: BoundMethod::Lattice { j_max: 250 },
                    b,
                    p: 0.1,
                    k,
                    c: c3,
                    x: c3,
                    sharp,
                };
                check(lat, oracle::lattice(b, 0.1, k, c3, 250, sharp));
                let c4 = default_levels(4, k).0;
                let sh = BoundParams {
                    method: BoundMethod::Shapes {
                        half_width: b + 20.0,
                        lambda_p: 0.8,
                    },
                    b,
                    p: 0.5,
                    k,
                    c: c4,
                    x: c4,
                    sharp,
                };
                check(sh, oracle::shapes(b, 0.5, k, c4, b + 20.0, 0.8, sharp));
            }
        }
    }
    (worst, count)
}
