//! Exchange (cutting-plane) method for `min_x max_{c ∈ C} g(x, c)` with an
//! infinite inner set `C`.
//!
//! The outer problem is solved against a finite active set of inner
//! certificates; an oracle then looks for the worst inner certificate at the
//! new outer point and adds it to the active set.

use serde::{Deserialize, Serialize};

use super::multistart::Certificate;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExchangeConfig {
    pub max_rounds: usize,
    /// Relative gap between oracle value and active-set value at which to stop.
    pub tol: f64,
}

impl Default for ExchangeConfig {
    fn default() -> Self {
        ExchangeConfig {
            max_rounds: 50,
            tol: 1e-7,
        }
    }
}

pub trait ExchangeProblem {
    /// An inner certificate (one element of the inner set).
    type Cut: Clone;

    fn initial_point(&self) -> Vec<f64>;

    /// Worst inner certificate found at `point`, with the inner value there.
    /// `active` holds the certificates collected so far (useful as warm starts).
    fn oracle(&self, point: &[f64], active: &[Self::Cut]) -> Result<(Self::Cut, f64)>;

    /// Minimizes the max over `active`; returns the point and the active-set value.
    fn solve_master(&self, active: &[Self::Cut]) -> Result<(Vec<f64>, f64)>;
}

#[derive(Debug, Clone)]
pub struct ExchangeOutcome<C> {
    /// Best outer point; `value` is its oracle value (an upper bound).
    pub certificate: Certificate,
    /// Largest active-set value seen (a lower bound when the master is exact).
    pub lower: f64,
    pub rounds: usize,
    pub active: Vec<C>,
}

impl<C> ExchangeOutcome<C> {
    pub fn relative_gap(&self) -> f64 {
        let v = self.certificate.value;
        if v == 0.0 {
            0.0
        } else {
            ((v - self.lower) / v.abs()).max(0.0)
        }
    }
}

pub fn exchange_minimize<P: ExchangeProblem>(
    problem: &P,
    initial_active: Vec<P::Cut>,
    config: &ExchangeConfig,
) -> Result<ExchangeOutcome<P::Cut>> {
    let mut active = initial_active;
    let mut point = problem.initial_point();
    let (cut, mut best_value) = problem.oracle(&point, &active)?;
    active.push(cut);
    let mut best_point = point.clone();
    let mut lower = f64::NEG_INFINITY;
    let mut rounds = 0;
    let mut converged = false;

    while rounds < config.max_rounds {
        rounds += 1;
        let (next, active_value) = problem.solve_master(&active)?;
        lower = lower.max(active_value);
        point = next;
        let (cut, value) = problem.oracle(&point, &active)?;
        if value < best_value {
            best_value = value;
            best_point = point.clone();
        }
        active.push(cut);
        if value - active_value <= config.tol * value.abs().max(f64::MIN_POSITIVE)
            || best_value - lower <= config.tol * best_value.abs()
        {
            converged = true;
            break;
        }
    }

    Ok(ExchangeOutcome {
        certificate: Certificate {
            point: best_point,
            value: best_value,
            restarts_used: rounds,
            converged,
            best_restart: 0,
            aborted: Vec::new(),
        },
        lower,
        rounds,
        active,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// min over t ∈ [1, 2] of max over a finite family of functions of t.
    struct Pointwise {
        funcs: Vec<fn(f64) -> f64>,
    }

    fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let c = b - phi * (b - a);
            let d = a + phi * (b - a);
            if f(c) <= f(d) {
                b = d;
            } else {
                a = c;
            }
        }
        0.5 * (a + b)
    }

    impl ExchangeProblem for Pointwise {
        type Cut = usize;
        fn initial_point(&self) -> Vec<f64> {
            vec![1.0]
        }
        fn oracle(&self, x: &[f64], _active: &[usize]) -> Result<(usize, f64)> {
            let mut best = (0, f64::NEG_INFINITY);
            for (i, f) in self.funcs.iter().enumerate() {
                let v = f(x[0]);
                if v > best.1 {
                    best = (i, v);
                }
            }
            Ok(best)
        }
        fn solve_master(&self, active: &[usize]) -> Result<(Vec<f64>, f64)> {
            let g = |t: f64| {
                active
                    .iter()
                    .map(|&i| self.funcs[i](t))
                    .fold(f64::MIN, f64::max)
            };
            let t = golden_min(g, 1.0, 2.0);
            Ok((vec![t], g(t)))
        }
    }

    #[test]
    fn min_of_max_t_and_two_over_t() {
        // Independent oracle: dense grid over [1, 2].
        let grid_min = (0..=200_000)
            .map(|i| 1.0 + i as f64 / 200_000.0)
            .map(|t: f64| t.max(2.0 / t))
            .fold(f64::INFINITY, f64::min);
        let p = Pointwise {
            funcs: vec![|t| t, |t| 2.0 / t],
        };
        let out = exchange_minimize(&p, vec![], &ExchangeConfig::default()).unwrap();
        assert!((out.certificate.value - grid_min).abs() < 1e-5);
        assert!((out.certificate.value - 2f64.sqrt()).abs() < 1e-8);
        assert!((out.certificate.point[0] - 2f64.sqrt()).abs() < 1e-6);
        assert!(out.certificate.converged);
        assert!(out.lower <= out.certificate.value + 1e-12);
    }

    #[test]
    fn singleton_inner_set_is_plain_minimization() {
        let p = Pointwise {
            funcs: vec![|t| (t - 1.5).powi(2) + 0.25],
        };
        let out = exchange_minimize(&p, vec![], &ExchangeConfig::default()).unwrap();
        assert!((out.certificate.value - 0.25).abs() < 1e-12);
        assert_eq!(out.rounds, 1);
    }

    #[test]
    fn complete_active_set_terminates_in_one_round() {
        let p = Pointwise {
            funcs: vec![|t| t, |t| 2.0 / t],
        };
        let out = exchange_minimize(&p, vec![0, 1], &ExchangeConfig::default()).unwrap();
        assert_eq!(out.rounds, 1);
        assert!((out.certificate.value - 2f64.sqrt()).abs() < 1e-8);
    }
}
