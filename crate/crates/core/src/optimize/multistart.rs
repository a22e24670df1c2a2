//! Seeded multistart ascent for maximizing a function over a feasible set
//! given by a projector.
//!
//! Each restart runs a projected (sub)gradient ascent with backtracking. When
//! the problem supplies a linear maximization step (a conditional-gradient
//! move to the maximizer of the linearization) it is tried alongside the
//! gradient step and the better of the two is kept. At points where neither
//! improves, a compass search probes the coordinate directions before the
//! restart is declared stationary.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FD_STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultistartConfig {
    pub restarts: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for MultistartConfig {
    fn default() -> Self {
        MultistartConfig {
            restarts: 32,
            max_iters: 500,
            tol: 1e-9,
            seed: 0,
        }
    }
}

/// Best point found by a search, with the value it attains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub point: Vec<f64>,
    pub value: f64,
    pub restarts_used: usize,
    pub converged: bool,
    /// Index of the restart that produced `point` (warm starts come first).
    pub best_restart: usize,
    /// Restarts abandoned because the objective was not finite.
    pub aborted: Vec<usize>,
}

pub trait AscentProblem: Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Maps any point onto the feasible set; must be idempotent there.
    fn project(&self, x: &mut [f64]);

    fn gradient(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }

    /// Maximizer of `⟨grad, y⟩` over the feasible set, if cheaply available.
    fn linear_step(&self, _x: &[f64], _grad: &[f64]) -> Option<Vec<f64>> {
        None
    }

    /// Deterministic starting points used before random ones.
    fn structured_starts(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                e
            })
            .collect()
    }

    fn random_start(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..self.dim())
            .map(|_| StandardNormal.sample(rng))
            .collect()
    }
}

/// SplitMix64 finalizer, used to derive independent stream seeds.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_seed(seed, stream))
}

/// Central finite-difference gradient with step [`FD_STEP`].
pub fn fd_gradient<F: Fn(&[f64]) -> f64>(f: F, x: &[f64]) -> Vec<f64> {
    let mut y = x.to_vec();
    let mut g = vec![0.0; x.len()];
    for i in 0..x.len() {
        let xi = x[i];
        y[i] = xi + FD_STEP;
        let up = f(&y);
        y[i] = xi - FD_STEP;
        let down = f(&y);
        y[i] = xi;
        let d = (up - down) / (2.0 * FD_STEP);
        g[i] = if d.is_finite() { d } else { 0.0 };
    }
    g
}

struct LocalRun {
    point: Vec<f64>,
    value: f64,
    converged: bool,
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn evaluate<P: AscentProblem + ?Sized>(problem: &P, mut y: Vec<f64>) -> (Vec<f64>, f64) {
    problem.project(&mut y);
    let v = problem.value(&y);
    (y, v)
}

fn compass_search<P: AscentProblem + ?Sized>(
    problem: &P,
    x: &[f64],
    f: f64,
    scale: f64,
) -> Option<(Vec<f64>, f64)> {
    let mut h = 1e-2 * scale;
    while h > 1e-10 * scale {
        for i in 0..x.len() {
            for sign in [1.0, -1.0] {
                let mut y = x.to_vec();
                y[i] += sign * h;
                let (y, fy) = evaluate(problem, y);
                if fy.is_finite() && fy > f {
                    return Some((y, fy));
                }
            }
        }
        h *= 0.25;
    }
    None
}

fn ascend<P: AscentProblem + ?Sized>(
    problem: &P,
    start: Vec<f64>,
    config: &MultistartConfig,
) -> Option<LocalRun> {
    let (mut x, mut f) = evaluate(problem, start);
    if !f.is_finite() {
        return None;
    }
    let mut step = 0.5;
    let mut converged = false;
    for _ in 0..config.max_iters {
        let scale = norm2(&x).max(1e-12);
        let grad = problem
            .gradient(&x)
            .unwrap_or_else(|| fd_gradient(|y| problem.value(y), &x));
        let mut best: Option<(Vec<f64>, f64)> = None;

        if let Some(y) = problem.linear_step(&x, &grad) {
            let (y, fy) = evaluate(problem, y);
            if fy.is_finite() && fy > f {
                best = Some((y, fy));
            }
        }

        let gnorm = norm2(&grad);
        if gnorm > 0.0 && gnorm.is_finite() {
            let mut t = step;
            while t > 1e-12 {
                let y: Vec<f64> = x
                    .iter()
                    .zip(&grad)
                    .map(|(xi, gi)| xi + t * scale * gi / gnorm)
                    .collect();
                let (y, fy) = evaluate(problem, y);
                if fy.is_finite() && fy > f {
                    if best.as_ref().is_none_or(|b| fy > b.1) {
                        best = Some((y, fy));
                    }
                    step = (2.0 * t).min(4.0);
                    break;
                }
                t *= 0.5;
            }
            if t <= 1e-12 {
                step = 0.5;
            }
        }

        if best.is_none() {
            best = compass_search(problem, &x, f, scale);
        }
        let Some((y, fy)) = best else {
            converged = true;
            break;
        };
        let gain = (fy - f) / f.abs().max(1e-300);
        x = y;
        f = fy;
        if gain < config.tol {
            converged = true;
            break;
        }
    }
    Some(LocalRun {
        point: x,
        value: f,
        converged,
    })
}

/// Maximizes `problem` from every warm start plus `config.restarts` further
/// starts (structured ones first, then seeded random ones).
///
/// The returned value is a lower bound on the supremum. Restarts run in
/// parallel; the winner is the largest value, ties going to the lowest index,
/// so the result does not depend on scheduling.
pub fn multistart_maximize<P: AscentProblem + ?Sized>(
    problem: &P,
    warm_starts: &[Vec<f64>],
    config: &MultistartConfig,
) -> Result<Certificate> {
    let dim = problem.dim();
    let mut starts: Vec<Vec<f64>> = Vec::with_capacity(warm_starts.len() + config.restarts);
    for w in warm_starts {
        if w.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: w.len(),
            });
        }
        starts.push(w.clone());
    }
    let structured = problem.structured_starts();
    for i in 0..config.restarts {
        match structured.get(i) {
            Some(s) => starts.push(s.clone()),
            None => {
                let mut rng = rng_for(config.seed, i as u64);
                starts.push(problem.random_start(&mut rng));
            }
        }
    }
    if starts.is_empty() {
        return Err(Error::Empty("no restarts requested"));
    }

    let runs: Vec<Option<LocalRun>> = starts
        .into_par_iter()
        .map(|s| ascend(problem, s, config))
        .collect();

    let mut aborted = Vec::new();
    let mut best: Option<(usize, LocalRun)> = None;
    let total = runs.len();
    for (i, run) in runs.into_iter().enumerate() {
        match run {
            None => aborted.push(i),
            Some(r) => {
                if best.as_ref().is_none_or(|(_, b)| r.value > b.value) {
                    best = Some((i, r));
                }
            }
        }
    }
    let (best_restart, run) =
        best.ok_or_else(|| Error::Numeric("objective not finite at any start".into()))?;
    Ok(Certificate {
        point: run.point,
        value: run.value,
        restarts_used: total,
        converged: run.converged,
        best_restart,
        aborted,
    })
}

type Objective<'a> = Box<dyn Fn(&[f64]) -> f64 + Sync + 'a>;
type Projector<'a> = Box<dyn Fn(&mut [f64]) + Sync + 'a>;
type Gradient<'a> = Box<dyn Fn(&[f64]) -> Vec<f64> + Sync + 'a>;

/// Closure-backed [`AscentProblem`].
pub struct FnProblem<'a> {
    dim: usize,
    objective: Objective<'a>,
    projector: Projector<'a>,
    gradient: Option<Gradient<'a>>,
}

impl<'a> FnProblem<'a> {
    pub fn new(
        dim: usize,
        objective: impl Fn(&[f64]) -> f64 + Sync + 'a,
        projector: impl Fn(&mut [f64]) + Sync + 'a,
    ) -> Self {
        FnProblem {
            dim,
            objective: Box::new(objective),
            projector: Box::new(projector),
            gradient: None,
        }
    }

    pub fn with_gradient(mut self, gradient: impl Fn(&[f64]) -> Vec<f64> + Sync + 'a) -> Self {
        self.gradient = Some(Box::new(gradient));
        self
    }
}

impl AscentProblem for FnProblem<'_> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        (self.objective)(x)
    }
    fn project(&self, x: &mut [f64]) {
        (self.projector)(x)
    }
    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.gradient.as_ref().map(|g| g(x))
    }
}
