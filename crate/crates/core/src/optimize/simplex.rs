//! Dense two-phase primal simplex with Bland's rule for
//! `minimize c·x subject to A·x ≥ b, x ≥ 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PIVOT_TOL: f64 = 1e-9;
const REDUCED_COST_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    pub costs: Vec<f64>,
    /// Row-major constraint matrix, `m` rows of length `n`.
    pub constraints: Vec<Vec<f64>>,
    pub bounds: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// Multipliers of the `≥` rows at the optimum (empty otherwise).
    pub duals: Vec<f64>,
    pub pivots: usize,
}

impl LpProblem {
    fn validate(&self) -> Result<(usize, usize)> {
        let n = self.costs.len();
        let m = self.bounds.len();
        if n == 0 || m == 0 {
            return Err(Error::Empty("LP needs at least one variable and one row"));
        }
        if self.constraints.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: self.constraints.len(),
            });
        }
        for row in &self.constraints {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
        }
        let finite = self.costs.iter().chain(&self.bounds).all(|v| v.is_finite())
            && self.constraints.iter().flatten().all(|v| v.is_finite());
        if !finite {
            return Err(Error::Numeric("non-finite LP data".into()));
        }
        Ok((m, n))
    }
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    reduced: Vec<f64>,
    pivots: usize,
}

enum Phase {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn price(&mut self, costs: &[f64]) {
        let mut d = costs.to_vec();
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            let cb = costs[b];
            if cb != 0.0 {
                for (dj, aij) in d.iter_mut().zip(row) {
                    *dj -= cb * aij;
                }
            }
        }
        self.reduced = d;
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let inv = 1.0 / self.rows[r][c];
        self.rows[r].iter_mut().for_each(|v| *v *= inv);
        self.rhs[r] *= inv;
        self.rows[r][c] = 1.0;
        let prow = self.rows[r].clone();
        let prhs = self.rhs[r];
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][c];
            if f != 0.0 {
                for (v, p) in self.rows[i].iter_mut().zip(&prow) {
                    *v -= f * p;
                }
                self.rows[i][c] = 0.0;
                self.rhs[i] -= f * prhs;
                if self.rhs[i] < 0.0 && self.rhs[i] > -1e-12 {
                    self.rhs[i] = 0.0;
                }
            }
        }
        let f = self.reduced[c];
        if f != 0.0 {
            for (v, p) in self.reduced.iter_mut().zip(&prow) {
                *v -= f * p;
            }
            self.reduced[c] = 0.0;
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Bland's rule: lowest-index improving column, then lowest-index basic
    /// variable among tied ratios.
    fn run(&mut self, allowed: &[bool]) -> Result<Phase> {
        loop {
            if self.pivots > MAX_PIVOTS {
                return Err(Error::Numeric("simplex pivot limit reached".into()));
            }
            let Some(c) = (0..self.reduced.len())
                .find(|&j| allowed[j] && self.reduced[j] < -REDUCED_COST_TOL)
            else {
                return Ok(Phase::Optimal);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][c];
                if a > PIVOT_TOL {
                    let ratio = self.rhs[i] / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((j, best)) => {
                            let tie = (ratio - best).abs() <= 1e-12 * (1.0 + best.abs());
                            if ratio < best && !tie || tie && self.basis[i] < self.basis[j] {
                                Some((i, ratio))
                            } else {
                                Some((j, best))
                            }
                        }
                    };
                }
            }
            match leave {
                None => return Ok(Phase::Unbounded),
                Some((r, _)) => self.pivot(r, c),
            }
        }
    }
}

pub fn lp_solve(problem: &LpProblem) -> Result<LpSolution> {
    let (m, n) = problem.validate()?;
    // Columns: x (n), slack/surplus (m), artificials (one per row with b > 0).
    let needs_art: Vec<bool> = problem.bounds.iter().map(|&b| b > 0.0).collect();
    let n_art = needs_art.iter().filter(|&&a| a).count();
    let width = n + m + n_art;

    let mut rows = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut art = n + m;
    for i in 0..m {
        let mut row = vec![0.0; width];
        if needs_art[i] {
            row[..n].copy_from_slice(&problem.constraints[i]);
            row[n + i] = -1.0;
            row[art] = 1.0;
            basis.push(art);
            art += 1;
            rhs.push(problem.bounds[i]);
        } else {
            for (dst, src) in row[..n].iter_mut().zip(&problem.constraints[i]) {
                *dst = -src;
            }
            row[n + i] = 1.0;
            basis.push(n + i);
            rhs.push(-problem.bounds[i]);
        }
        rows.push(row);
    }
    let mut t = Tableau {
        rows,
        rhs,
        basis,
        reduced: Vec::new(),
        pivots: 0,
    };

    let scale = problem.bounds.iter().fold(1.0_f64, |a, b| a.max(b.abs()));
    if n_art > 0 {
        let mut phase1 = vec![0.0; width];
        phase1[n + m..].iter_mut().for_each(|c| *c = 1.0);
        t.price(&phase1);
        let all = vec![true; width];
        t.run(&all)?;
        let infeasibility: f64 = t
            .basis
            .iter()
            .zip(&t.rhs)
            .filter(|(b, _)| **b >= n + m)
            .map(|(_, v)| v)
            .sum();
        if infeasibility > 1e-9 * scale {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: Vec::new(),
                objective: f64::NAN,
                duals: Vec::new(),
                pivots: t.pivots,
            });
        }
        // Drive remaining (zero-level) artificials out of the basis.
        for r in 0..m {
            if t.basis[r] >= n + m {
                if let Some(c) = (0..n + m).find(|&j| t.rows[r][j].abs() > PIVOT_TOL) {
                    t.pivot(r, c);
                }
            }
        }
    }

    let mut costs = vec![0.0; width];
    costs[..n].copy_from_slice(&problem.costs);
    t.price(&costs);
    let mut allowed = vec![true; width];
    allowed[n + m..].iter_mut().for_each(|a| *a = false);
    let phase = t.run(&allowed)?;
    if let Phase::Unbounded = phase {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            x: Vec::new(),
            objective: f64::NEG_INFINITY,
            duals: Vec::new(),
            pivots: t.pivots,
        });
    }

    let mut x = vec![0.0; n];
    for (&b, &v) in t.basis.iter().zip(&t.rhs) {
        if b < n {
            x[b] = v.max(0.0);
        }
    }
    let objective = problem.costs.iter().zip(&x).map(|(c, x)| c * x).sum();
    let duals = (0..m).map(|i| t.reduced[n + i].max(0.0)).collect();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        objective,
        duals,
        pivots: t.pivots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::Rng;

    fn lp(c: &[f64], a: &[&[f64]], b: &[f64]) -> LpProblem {
        LpProblem {
            costs: c.to_vec(),
            constraints: a.iter().map(|r| r.to_vec()).collect(),
            bounds: b.to_vec(),
        }
    }

    #[test]
    fn single_bound() {
        let s = lp_solve(&lp(&[1.0], &[&[1.0]], &[2.0])).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 2.0).abs() < 1e-12);
        assert!((s.duals[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn covering_row() {
        let s = lp_solve(&lp(&[1.0, 1.0], &[&[1.0, 1.0]], &[1.0])).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let s = lp_solve(&lp(&[1.0], &[&[-1.0]], &[1.0])).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
        let s = lp_solve(&lp(&[-1.0], &[&[1.0]], &[1.0])).unwrap();
        assert_eq!(s.status, LpStatus::Unbounded);
    }

    #[test]
    fn rejects_malformed() {
        assert!(lp_solve(&lp(&[1.0, 2.0], &[&[1.0]], &[1.0])).is_err());
        assert!(lp_solve(&lp(&[1.0], &[&[1.0], &[2.0]], &[1.0])).is_err());
        assert!(lp_solve(&lp(&[f64::NAN], &[&[1.0]], &[1.0])).is_err());
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's classic cycling instance, rewritten as min c·x, A·x ≥ b.
        let c = [-0.75, 150.0, -0.02, 6.0];
        let a: [&[f64]; 3] = [
            &[-0.25, 60.0, 0.04, -9.0],
            &[-0.5, 90.0, 0.02, -3.0],
            &[0.0, 0.0, -1.0, 0.0],
        ];
        let s = lp_solve(&lp(&c, &a, &[0.0, 0.0, -1.0])).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - (-0.05)).abs() < 1e-9, "{}", s.objective);
    }

    /// Brute force: every vertex of {x ≥ 0, A x ≥ b} is the solution of some
    /// choice of n active constraints among the m + n.
    fn vertex_enumeration(p: &LpProblem) -> Option<f64> {
        let n = p.costs.len();
        let m = p.bounds.len();
        let mut rows: Vec<(Vec<f64>, f64)> = p
            .constraints
            .iter()
            .cloned()
            .zip(p.bounds.iter().copied())
            .collect();
        for i in 0..n {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            rows.push((e, 0.0));
        }
        let total = m + n;
        let mut best: Option<f64> = None;
        for mask in 0u32..(1 << total) {
            if mask.count_ones() as usize != n {
                continue;
            }
            let chosen: Vec<usize> = (0..total).filter(|i| mask >> i & 1 == 1).collect();
            let a = DMatrix::from_fn(n, n, |i, j| rows[chosen[i]].0[j]);
            let b = DVector::from_fn(n, |i, _| rows[chosen[i]].1);
            let Some(x) = a.lu().solve(&b) else { continue };
            let feasible = x.iter().all(|v| *v >= -1e-9)
                && rows.iter().all(|(r, bi)| {
                    r.iter().zip(x.iter()).map(|(a, x)| a * x).sum::<f64>() >= bi - 1e-9
                });
            if feasible {
                let obj: f64 = p.costs.iter().zip(x.iter()).map(|(c, x)| c * x).sum();
                best = Some(best.map_or(obj, |b: f64| b.min(obj)));
            }
        }
        best
    }

    #[test]
    fn matches_vertex_enumeration_on_random_problems() {
        let mut rng = crate::optimize::rng_for(42, 0);
        let mut checked = 0;
        for _ in 0..200 {
            let c: Vec<f64> = (0..5).map(|_| rng.random_range(0.1..2.0)).collect();
            let a: Vec<Vec<f64>> = (0..5)
                .map(|_| (0..5).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let b: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
            let p = LpProblem {
                costs: c,
                constraints: a,
                bounds: b,
            };
            let s = lp_solve(&p).unwrap();
            match vertex_enumeration(&p) {
                Some(best) => {
                    assert_eq!(s.status, LpStatus::Optimal);
                    assert!(
                        (s.objective - best).abs() < 1e-8,
                        "{} vs {best}",
                        s.objective
                    );
                    for (row, bi) in p.constraints.iter().zip(&p.bounds) {
                        let lhs: f64 = row.iter().zip(&s.x).map(|(a, x)| a * x).sum();
                        assert!(lhs >= bi - 1e-8);
                    }
                    // Strong duality.
                    let dual: f64 = s.duals.iter().zip(&p.bounds).map(|(y, b)| y * b).sum();
                    assert!((dual - s.objective).abs() < 1e-8);
                    checked += 1;
                }
                None => assert_eq!(s.status, LpStatus::Infeasible),
            }
        }
        assert!(checked > 50);
    }
}
