//! Discrete Pietsch-type domination: a constant `C` and a probability measure
//! `μ` on a finite grid with `S(u) ≤ C (Σ_i μ_i R_i(u)^p)^{1/p}` on a set of
//! test vectors.
//!
//! Writing `ν = C^p μ` turns the search for the smallest `C` into the linear
//! program `minimize Σ_i ν_i subject to Σ_i ν_i R_i(u_t)^p ≥ S(u_t)^p, ν ≥ 0`.
//! Each row is divided by its right-hand side, and the program is solved
//! through its dual so that the tableau has one row per grid point.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_finite_exponent, Error, Result};
use crate::opnorms::LinearOperator;
use crate::optimize::{lp_solve, rng_for, LpProblem, LpStatus};
use crate::seqnorms::{check_space, psi_apply, DiscreteMeasure, FunctionalFamily};
use crate::spaces::{dot, lp_value, Functional, Space, Vector};

/// Floor for the denominators of relative violations.
pub const VIOLATION_FLOOR: f64 = 1e-12;

/// Unit functionals: the dual-ball vertices when they are few, then
/// directions spread over the dual sphere. A one-dimensional space yields
/// exactly `{+1, −1}` (scaled by its weight).
pub fn build_dual_grid(space: &Space, count: usize, seed: u64) -> Result<Vec<Functional>> {
    if count == 0 {
        return Err(Error::Empty("grid size must be at least 1"));
    }
    if space.dim() == 1 {
        let w = space.weights()[0];
        return Ok(vec![Functional(vec![w]), Functional(vec![-w])]);
    }
    let mut grid: Vec<Functional> = space
        .dual_extreme_points()
        .unwrap_or_default()
        .into_iter()
        .take(count)
        .collect();
    let mut rng = rng_for(seed, 0x6D);
    let remaining = count - grid.len();
    if space.dim() == 2 {
        // φ and −φ dominate the same way, so a half turn suffices.
        let phase: f64 = rng.random_range(0.0..1.0);
        for k in 0..remaining {
            let a = std::f64::consts::PI * (k as f64 + phase) / remaining as f64;
            let mut f = vec![a.cos(), a.sin()];
            space.project_dual_sphere(&mut f);
            grid.push(Functional(f));
        }
    } else {
        for _ in 0..remaining {
            grid.push(space.sample_dual_sphere(&mut rng));
        }
    }
    Ok(grid)
}

/// Functional families of aggregate `ℓ_r` norm 1: single atoms, scaled
/// (rotated, in dimension two) coordinate bases and random families of up to
/// `2·dim` atoms.
pub fn build_family_grid(
    space: &Space,
    r: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<FunctionalFamily>> {
    if count == 0 {
        return Err(Error::Empty("grid size must be at least 1"));
    }
    let d = space.dim();
    let mut out = Vec::with_capacity(count);
    let singles = build_dual_grid(space, (count / 4).max(1), seed)?;
    for f in singles.into_iter().take(count) {
        out.push(FunctionalFamily::new(space.clone(), vec![f], r)?);
    }

    let bases = if d >= 2 { count / 4 } else { 0 };
    let mut rng = rng_for(seed, 0x6E);
    let phase: f64 = rng.random_range(0.0..1.0);
    for k in 0..bases.min(count - out.len()) {
        let atoms: Vec<Functional> = (0..d)
            .map(|i| {
                let mut f = vec![0.0; d];
                f[i] = 1.0;
                if d == 2 {
                    let a = std::f64::consts::FRAC_PI_2 * (k as f64 + phase) / bases as f64;
                    let (c, s) = (a.cos(), a.sin());
                    f = if i == 0 { vec![c, s] } else { vec![-s, c] };
                } else if k > 0 {
                    f = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                }
                space.project_dual_sphere(&mut f);
                Functional(f)
            })
            .collect();
        out.push(FunctionalFamily::new(space.clone(), atoms, r)?.normalized());
    }

    while out.len() < count {
        let k = rng.random_range(1..=2 * d);
        let atoms: Vec<Functional> = (0..k)
            .map(|_| Functional((0..d).map(|_| rng.sample(StandardNormal)).collect()))
            .collect();
        out.push(FunctionalFamily::new(space.clone(), atoms, r)?.normalized());
    }
    Ok(out)
}

/// Which domination inequality a witness certifies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DominationKind {
    /// `max_fam ‖Ψ_fam(T u)‖_s ≤ C (∫ |φ(u)|^p dμ(φ))^{1/p}`, `μ` on the dual ball.
    Weak {
        s: f64,
        p: f64,
        r: f64,
        families: Vec<FunctionalFamily>,
    },
    /// `‖T u‖ ≤ C (∫ ‖(x*_k(u))_k‖_s^p dμ(x*))^{1/p}`, `μ` on families.
    Aniso { p: f64, s: f64, r: f64 },
}

/// Grid points carrying the measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DominationMeasure {
    Functionals {
        measure: DiscreteMeasure,
    },
    Families {
        atoms: Vec<FunctionalFamily>,
        weights: Vec<f64>,
    },
}

impl DominationMeasure {
    pub fn weights(&self) -> &[f64] {
        match self {
            DominationMeasure::Functionals { measure } => &measure.weights,
            DominationMeasure::Families { weights, .. } => weights,
        }
    }

    pub fn support_size(&self) -> usize {
        self.weights().iter().filter(|w| **w > 0.0).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationWitness {
    pub c: f64,
    pub kind: DominationKind,
    pub measure: DominationMeasure,
    /// Largest relative violation over the training vectors.
    pub train_residual: f64,
    /// Largest relative violation over fresh vectors never used in the LP.
    pub holdout_residual: f64,
    pub train_vectors: usize,
    pub constraints: usize,
    pub refinement_rounds: usize,
    pub pivots: usize,
}

/// Holdout and refinement settings for the domination solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominationOptions {
    pub seed: u64,
    pub holdout: usize,
    /// Rounds that add the worst-violated fresh vectors to the training set.
    pub refine_rounds: usize,
    pub refine_candidates: usize,
    pub refine_add: usize,
    /// Relative violation below which a candidate is not added.
    pub refine_tol: f64,
}

impl Default for DominationOptions {
    fn default() -> Self {
        DominationOptions {
            seed: 0,
            holdout: 256,
            refine_rounds: 8,
            refine_candidates: 256,
            refine_add: 16,
            refine_tol: 1e-5,
        }
    }
}

impl DominationOptions {
    pub fn without_refinement(mut self) -> Self {
        self.refine_rounds = 0;
        self
    }
}

/// `S` values (one per family for the weak form) and `R` values per grid point.
trait Sides {
    fn s_values(&self, u: &[f64]) -> Vec<f64>;
    fn r_values(&self, u: &[f64]) -> Vec<f64>;
    fn p(&self) -> f64;
}

struct WeakSides<'a> {
    t: &'a LinearOperator,
    s: f64,
    p: f64,
    families: &'a [FunctionalFamily],
    grid: &'a [Functional],
}

impl Sides for WeakSides<'_> {
    fn s_values(&self, u: &[f64]) -> Vec<f64> {
        let image = Vector(self.t.apply_slice(u));
        self.families
            .iter()
            .map(|fam| psi_apply(fam, &image, self.s).map_or(0.0, |(_, n)| n))
            .collect()
    }
    fn r_values(&self, u: &[f64]) -> Vec<f64> {
        self.grid.iter().map(|f| dot(&f.0, u).abs()).collect()
    }
    fn p(&self) -> f64 {
        self.p
    }
}

struct AnisoSides<'a> {
    t: &'a LinearOperator,
    s: f64,
    p: f64,
    grid: &'a [FunctionalFamily],
}

impl Sides for AnisoSides<'_> {
    fn s_values(&self, u: &[f64]) -> Vec<f64> {
        vec![self.t.codomain().norm_of(&self.t.apply_slice(u))]
    }
    fn r_values(&self, u: &[f64]) -> Vec<f64> {
        self.grid
            .iter()
            .map(|fam| lp_value(fam.atoms().iter().map(|f| dot(&f.0, u)), self.s))
            .collect()
    }
    fn p(&self) -> f64 {
        self.p
    }
}

/// Largest relative violation of `S ≤ C (Σ μ_i R_i^p)^{1/p}` over `vectors`.
fn max_violation(sides: &dyn Sides, c: f64, mu: &[f64], vectors: &[Vec<f64>]) -> f64 {
    vectors
        .iter()
        .map(|u| violation(sides, c, mu, u))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn violation(sides: &dyn Sides, c: f64, mu: &[f64], u: &[f64]) -> f64 {
    let p = sides.p();
    let rhs = c * mu
        .iter()
        .zip(sides.r_values(u))
        .map(|(m, r)| m * r.powf(p))
        .sum::<f64>()
        .powf(1.0 / p);
    sides
        .s_values(u)
        .into_iter()
        .map(|s| (s - rhs) / s.max(VIOLATION_FLOOR))
        .fold(f64::NEG_INFINITY, f64::max)
}

struct LpOutcome {
    c: f64,
    mu: Vec<f64>,
    constraints: usize,
    pivots: usize,
}

fn solve(sides: &dyn Sides, grid_len: usize, vectors: &[Vec<f64>]) -> Result<LpOutcome> {
    let p = sides.p();
    let mut constraints = Vec::new();
    for u in vectors {
        let r: Vec<f64> = sides.r_values(u).iter().map(|v| v.powf(p)).collect();
        for s in sides.s_values(u) {
            let b = s.powf(p);
            if b <= 0.0 {
                continue;
            }
            if r.iter().all(|v| *v <= 0.0) {
                return Err(Error::Infeasible(
                    "a test vector with positive left side is invisible to the grid".into(),
                ));
            }
            constraints.push(r.iter().map(|v| v / b).collect::<Vec<f64>>());
        }
    }
    if constraints.is_empty() {
        let mut mu = vec![0.0; grid_len];
        mu[0] = 1.0;
        return Ok(LpOutcome {
            c: 0.0,
            mu,
            constraints: 0,
            pivots: 0,
        });
    }
    // Solved through its dual, `maximize Σ_t y_t subject to Σ_t y_t A_ti ≤ 1`,
    // which has one row per grid point; `ν` is read off the row multipliers.
    let n = constraints.len();
    let dual_rows: Vec<Vec<f64>> = (0..grid_len)
        .map(|i| constraints.iter().map(|row| -row[i]).collect())
        .collect();
    let sol = lp_solve(&LpProblem {
        costs: vec![-1.0; n],
        bounds: vec![-1.0; grid_len],
        constraints: dual_rows,
    })?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Unbounded => return Err(Error::Infeasible("domination LP is infeasible".into())),
        LpStatus::Infeasible => {
            return Err(Error::Numeric("domination dual LP is infeasible".into()))
        }
    }
    let nu = sol.duals;
    let total: f64 = nu.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::Numeric("domination LP returned no mass".into()));
    }
    let mu = nu.iter().map(|v| v / total).collect();
    Ok(LpOutcome {
        c: total.powf(1.0 / p),
        mu,
        constraints: n,
        pivots: sol.pivots,
    })
}

fn fresh_vectors(space: &Space, count: usize, seed: u64, stream: u64) -> Vec<Vec<f64>> {
    let mut rng = rng_for(seed, stream);
    (0..count)
        .map(|_| space.sample_sphere(&mut rng).0)
        .collect()
}

struct Solved {
    lp: LpOutcome,
    train: Vec<Vec<f64>>,
    rounds: usize,
    train_residual: f64,
    holdout_residual: f64,
}

fn solve_refined(
    sides: &dyn Sides,
    space: &Space,
    grid_len: usize,
    tests: &[Vector],
    options: &DominationOptions,
) -> Result<Solved> {
    if tests.is_empty() {
        return Err(Error::Empty("no test vectors"));
    }
    if grid_len == 0 {
        return Err(Error::Empty("empty grid"));
    }
    let mut train: Vec<Vec<f64>> = Vec::with_capacity(tests.len());
    for u in tests {
        space.check_dim(u.0.len())?;
        train.push(u.0.clone());
    }
    let mut lp = solve(sides, grid_len, &train)?;
    let mut rounds = 0;
    for round in 0..options.refine_rounds {
        let candidates = fresh_vectors(
            space,
            options.refine_candidates,
            options.seed,
            0x400 + round as u64,
        );
        let mut scored: Vec<(f64, Vec<f64>)> = candidates
            .into_iter()
            .map(|u| (violation(sides, lp.c, &lp.mu, &u), u))
            .filter(|(v, _)| *v > options.refine_tol)
            .collect();
        if scored.is_empty() {
            break;
        }
        scored.sort_by(|a, b| b.0.total_cmp(&a.0));
        train.extend(scored.into_iter().take(options.refine_add).map(|(_, u)| u));
        lp = solve(sides, grid_len, &train)?;
        rounds += 1;
    }
    let train_residual = max_violation(sides, lp.c, &lp.mu, &train);
    let holdout = fresh_vectors(space, options.holdout, options.seed, 0x3FF);
    let holdout_residual = if holdout.is_empty() {
        f64::NEG_INFINITY
    } else {
        max_violation(sides, lp.c, &lp.mu, &holdout)
    };
    Ok(Solved {
        lp,
        train,
        rounds,
        train_residual,
        holdout_residual,
    })
}

/// Smallest `C` with `max_fam ‖Ψ_fam(T u)‖_s ≤ C (Σ_i μ_i |φ_i(u)|^p)^{1/p}`
/// on the test vectors, for a probability measure `μ` on `dual_grid`.
#[allow(clippy::too_many_arguments)]
pub fn domination_lp_weak(
    t: &LinearOperator,
    s: f64,
    p: f64,
    r: f64,
    dual_grid: &[Functional],
    families: &[FunctionalFamily],
    tests: &[Vector],
    options: &DominationOptions,
) -> Result<DominationWitness> {
    check_finite_exponent("s", s)?;
    check_finite_exponent("p", p)?;
    check_finite_exponent("r", r)?;
    if r > s {
        return Err(crate::seqnorms::regime_error(s, r));
    }
    if families.is_empty() {
        return Err(Error::Empty("no functional families"));
    }
    let families: Vec<FunctionalFamily> = families
        .iter()
        .map(|f| {
            check_space(t.codomain(), f.space())?;
            if !f.is_feasible() {
                return Err(Error::Infeasible(format!(
                    "family has aggregate norm {} > 1",
                    f.aggregate_norm()
                )));
            }
            f.with_r(r)
        })
        .collect::<Result<_>>()?;
    for f in dual_grid {
        t.domain().check_dim(f.0.len())?;
        if t.domain().dual_norm_of(&f.0) > 1.0 + 1e-12 {
            return Err(Error::Infeasible(
                "grid functional outside the dual ball".into(),
            ));
        }
    }
    let sides = WeakSides {
        t,
        s,
        p,
        families: &families,
        grid: dual_grid,
    };
    let solved = solve_refined(&sides, t.domain(), dual_grid.len(), tests, options)?;
    let measure = DiscreteMeasure::new(t.domain(), dual_grid.to_vec(), solved.lp.mu.clone())?;
    Ok(DominationWitness {
        c: solved.lp.c,
        kind: DominationKind::Weak { s, p, r, families },
        measure: DominationMeasure::Functionals { measure },
        train_residual: solved.train_residual,
        holdout_residual: solved.holdout_residual,
        train_vectors: solved.train.len(),
        constraints: solved.lp.constraints,
        refinement_rounds: solved.rounds,
        pivots: solved.lp.pivots,
    })
}

/// Smallest `C` with `‖T u‖ ≤ C (Σ_i μ_i ‖(x*_k(u))_k‖_s^p)^{1/p}` on the test
/// vectors, for a probability measure `μ` on `family_grid`.
pub fn domination_lp_aniso(
    t: &LinearOperator,
    p: f64,
    s: f64,
    r: f64,
    family_grid: &[FunctionalFamily],
    tests: &[Vector],
    options: &DominationOptions,
) -> Result<DominationWitness> {
    check_finite_exponent("p", p)?;
    check_finite_exponent("s", s)?;
    check_finite_exponent("r", r)?;
    if r > s {
        return Err(crate::seqnorms::regime_error(s, r));
    }
    let grid: Vec<FunctionalFamily> = family_grid
        .iter()
        .map(|f| {
            check_space(t.domain(), f.space())?;
            let f = f.with_r(r)?;
            if !f.is_feasible() {
                return Err(Error::Infeasible(format!(
                    "grid family has aggregate norm {} > 1",
                    f.aggregate_norm()
                )));
            }
            Ok(f)
        })
        .collect::<Result<_>>()?;
    let sides = AnisoSides {
        t,
        s,
        p,
        grid: &grid,
    };
    let solved = solve_refined(&sides, t.domain(), grid.len(), tests, options)?;
    Ok(DominationWitness {
        c: solved.lp.c,
        kind: DominationKind::Aniso { p, s, r },
        measure: DominationMeasure::Families {
            atoms: grid,
            weights: solved.lp.mu,
        },
        train_residual: solved.train_residual,
        holdout_residual: solved.holdout_residual,
        train_vectors: solved.train.len(),
        constraints: solved.lp.constraints,
        refinement_rounds: solved.rounds,
        pivots: solved.lp.pivots,
    })
}

/// Largest relative violation of the witness's inequality over `fresh`.
pub fn verify_domination(
    witness: &DominationWitness,
    t: &LinearOperator,
    fresh: &[Vector],
) -> Result<f64> {
    for u in fresh {
        t.domain().check_dim(u.0.len())?;
    }
    let vectors: Vec<Vec<f64>> = fresh.iter().map(|u| u.0.clone()).collect();
    let v = match (&witness.kind, &witness.measure) {
        (
            DominationKind::Weak { s, p, families, .. },
            DominationMeasure::Functionals { measure },
        ) => {
            let sides = WeakSides {
                t,
                s: *s,
                p: *p,
                families,
                grid: &measure.atoms,
            };
            max_violation(&sides, witness.c, &measure.weights, &vectors)
        }
        (DominationKind::Aniso { p, s, .. }, DominationMeasure::Families { atoms, weights }) => {
            let sides = AnisoSides {
                t,
                s: *s,
                p: *p,
                grid: atoms,
            };
            max_violation(&sides, witness.c, weights, &vectors)
        }
        _ => {
            return Err(Error::Infeasible(
                "witness measure does not match its kind".into(),
            ))
        }
    };
    Ok(if vectors.is_empty() { 0.0 } else { v })
}

/// Canonical basis, `random` seeded unit vectors and any `extra` vectors.
pub fn standard_tests(space: &Space, random: usize, seed: u64, extra: &[Vec<f64>]) -> Vec<Vector> {
    let d = space.dim();
    let mut out: Vec<Vector> = (0..d)
        .map(|i| {
            let mut e = vec![0.0; d];
            e[i] = 1.0;
            Vector(e)
        })
        .collect();
    let mut rng = rng_for(seed, 0x7E);
    out.extend((0..random).map(|_| space.sample_sphere(&mut rng)));
    out.extend(
        extra
            .iter()
            .filter(|u| u.len() == d && u.iter().any(|c| *c != 0.0))
            .map(|u| Vector(u.clone())),
    );
    out
}
