use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::weak::weak_norm;
use super::{
    check_space, next_pow2, BoundKind, EstimateMeta, EstimatorConfig, FunctionalFamily,
    NormEstimate, SequenceFamily, Witness,
};
use crate::error::{check_finite_exponent, Error, Result};
use crate::optimize::{multistart_maximize, AscentProblem};
use crate::spaces::{classify_params, conjugate, dot, lp_value, norming, Regime, Space};

/// `(Σ_j (Σ_k |x*_k(x_j)|^s)^{q/s})^{1/q}`, evaluated without any feasibility check.
pub fn aniso_objective(
    seq: &SequenceFamily,
    fam: &FunctionalFamily,
    s: f64,
    q: f64,
) -> Result<f64> {
    check_space(seq.space(), fam.space())?;
    check_finite_exponent("s", s)?;
    check_finite_exponent("q", q)?;
    Ok(objective(&seq.rows(), &fam.flat(), seq.space().dim(), s, q))
}

pub(crate) fn objective(rows: &[Vec<f64>], atoms: &[f64], d: usize, s: f64, q: f64) -> f64 {
    lp_value(
        rows.iter()
            .map(|x| lp_value(atoms.chunks(d).map(|f| dot(f, x)), s)),
        q,
    )
}

pub(crate) fn regime_error(s: f64, r: f64) -> Error {
    Error::Regime {
        regime: Regime::DegenerateZero,
        reason: format!("s < r (s = {s}, r = {r}): the space reduces to zero"),
    }
}

/// Checks `(s, q, r)` and reports whether the anisotropic norm is a weak norm.
pub(crate) fn check_aniso_params(s: f64, q: f64, r: f64) -> Result<Regime> {
    check_finite_exponent("s", s)?;
    check_finite_exponent("q", q)?;
    check_finite_exponent("r", r)?;
    match classify_params(s, q, r, 1.0).class {
        Regime::DegenerateZero => Err(regime_error(s, r)),
        c => Ok(c),
    }
}

/// Supremum of [`aniso_objective`] over families with `‖(‖x*_k‖)_k‖_r ≤ 1`.
///
/// Atom counts `K = 1, 2, 4, …` up to `config.max_atoms` are searched, each
/// warm-started from the previous best (padded with zero atoms) and from the
/// weak `q` norm witness as a single atom, so the value never drops below
/// the weak `q` norm and never decreases with `K`.
pub fn aniso_norm(
    seq: &SequenceFamily,
    s: f64,
    q: f64,
    r: f64,
    config: &EstimatorConfig,
) -> Result<NormEstimate> {
    aniso_norm_with_starts(seq, s, q, r, config, &[])
}

pub fn aniso_norm_with_starts(
    seq: &SequenceFamily,
    s: f64,
    q: f64,
    r: f64,
    config: &EstimatorConfig,
    warm: &[FunctionalFamily],
) -> Result<NormEstimate> {
    let regime = check_aniso_params(s, q, r)?;
    let space = seq.space();
    for fam in warm {
        check_space(space, fam.space())?;
    }
    let weak = weak_norm(seq, q, config)?;
    let Witness::Functional { functional } = &weak.witness else {
        unreachable!("weak norm witnesses are functionals")
    };
    let weak_atom = functional.0.clone();

    if regime == Regime::WeakEquivalent {
        let family = FunctionalFamily::new(space.clone(), vec![functional.clone()], r)?;
        let mut meta = weak.meta.clone();
        meta.atoms = Some(1);
        return Ok(NormEstimate {
            value: weak.value,
            bound: weak.bound,
            witness: Witness::Family { family },
            meta,
        });
    }

    let d = space.dim();
    let rows = seq.rows();
    let k_max = config.max_atoms.max(1);
    let k_min = k_max.min(next_pow2(seq.len()));

    let mut best: Vec<f64> = weak_atom.clone();
    let mut best_value = objective(&rows, &best, d, s, q);
    let mut k = 1;
    let mut restarts_used = 0;
    let converged;
    loop {
        let problem = AnisoProblem {
            space,
            rows: &rows,
            k,
            s,
            q,
            r,
        };
        let mut starts = vec![pad(&weak_atom, k * d), pad(&best, k * d)];
        for fam in warm {
            if fam.len() <= k {
                starts.push(pad(&fam.flat(), k * d));
            }
        }
        let cert = multistart_maximize(&problem, &starts, &config.multistart(0xA0 + k as u64))?;
        restarts_used += cert.restarts_used;
        let gain = (cert.value - best_value) / best_value.abs().max(1e-300);
        if cert.value > best_value {
            best_value = cert.value;
            best = cert.point;
        }
        if k >= k_max {
            converged = gain < config.tol;
            break;
        }
        if k >= k_min && gain < config.tol {
            converged = true;
            break;
        }
        k = (2 * k).min(k_max);
    }

    let family = trimmed_family(space, &best, r)?;
    let mut meta = EstimateMeta::search(converged, restarts_used);
    meta.atoms = Some(family.len());
    Ok(NormEstimate {
        value: best_value,
        bound: BoundKind::Lower,
        witness: Witness::Family { family },
        meta,
    })
}

fn pad(x: &[f64], len: usize) -> Vec<f64> {
    let mut y = x.to_vec();
    y.resize(len, 0.0);
    y
}

/// Drops zero atoms (keeping at least one) and normalizes to aggregate 1.
pub(crate) fn trimmed_family(space: &Space, flat: &[f64], r: f64) -> Result<FunctionalFamily> {
    let d = space.dim();
    let mut atoms: Vec<f64> = flat
        .chunks(d)
        .filter(|f| f.iter().any(|c| *c != 0.0))
        .flatten()
        .copied()
        .collect();
    if atoms.is_empty() {
        atoms = flat[..d].to_vec();
    }
    Ok(FunctionalFamily::from_flat(space.clone(), &atoms, r)?.normalized())
}

/// Ratio of the anisotropic objective to the ℓ_r aggregate of dual norms,
/// over `K` atoms stored consecutively.
pub(crate) struct AnisoProblem<'a> {
    pub space: &'a Space,
    pub rows: &'a [Vec<f64>],
    pub k: usize,
    pub s: f64,
    pub q: f64,
    pub r: f64,
}

impl AnisoProblem<'_> {
    fn aggregate(&self, x: &[f64]) -> f64 {
        lp_value(
            x.chunks(self.space.dim())
                .map(|f| self.space.dual_norm_of(f)),
            self.r,
        )
    }

    /// Objective value and its gradient with respect to the atoms.
    fn numerator_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let d = self.space.dim();
        let mut g = vec![0.0; x.len()];
        let a: Vec<Vec<f64>> = self
            .rows
            .iter()
            .map(|row| x.chunks(d).map(|f| dot(f, row)).collect())
            .collect();
        let n: Vec<f64> = a
            .iter()
            .map(|aj| lp_value(aj.iter().copied(), self.s))
            .collect();
        let total = lp_value(n.iter().copied(), self.q);
        if total == 0.0 {
            return (0.0, g);
        }
        for ((row, aj), nj) in self.rows.iter().zip(&a).zip(&n) {
            if *nj == 0.0 {
                continue;
            }
            let outer = (nj / total).powf(self.q - 1.0);
            for (k, ajk) in aj.iter().enumerate() {
                if *ajk == 0.0 {
                    continue;
                }
                let c = outer * (ajk.abs() / nj).powf(self.s - 1.0) * ajk.signum();
                for (gi, xi) in g[k * d..(k + 1) * d].iter_mut().zip(row) {
                    *gi += c * xi;
                }
            }
        }
        (total, g)
    }
}

impl AscentProblem for AnisoProblem<'_> {
    fn dim(&self) -> usize {
        self.k * self.space.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let agg = self.aggregate(x);
        if agg == 0.0 {
            return 0.0;
        }
        objective(self.rows, x, self.space.dim(), self.s, self.q) / agg
    }

    fn project(&self, x: &mut [f64]) {
        let agg = self.aggregate(x);
        if agg > 0.0 && agg.is_finite() {
            x.iter_mut().for_each(|c| *c /= agg);
        } else {
            x.iter_mut().for_each(|c| *c = 0.0);
            self.space.project_dual_sphere(&mut x[..self.space.dim()]);
        }
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let d = self.space.dim();
        let agg = self.aggregate(x);
        if agg == 0.0 {
            return Some(vec![0.0; x.len()]);
        }
        let (num, mut g) = self.numerator_gradient(x);
        for (k, f) in x.chunks(d).enumerate() {
            let dk = self.space.dual_norm_of(f);
            if dk == 0.0 {
                g[k * d..(k + 1) * d].iter_mut().for_each(|c| *c /= agg);
                continue;
            }
            let w = (dk / agg).powf(self.r - 1.0);
            let nv = self.space.norming_vector_of(f);
            for (gi, vi) in g[k * d..(k + 1) * d].iter_mut().zip(&nv) {
                *gi = *gi / agg - num * w * vi / (agg * agg);
            }
        }
        Some(g)
    }

    /// Maximizer of the objective's linearization over the aggregate ball:
    /// atom `k` becomes `c_k` times the norming functional of its gradient
    /// block, with `c` the ℓ_r-norming weights of the block norms.
    fn linear_step(&self, x: &[f64], _grad: &[f64]) -> Option<Vec<f64>> {
        let d = self.space.dim();
        let (_, g) = self.numerator_gradient(x);
        let gamma: Vec<f64> = g.chunks(d).map(|gk| self.space.norm_of(gk)).collect();
        let c = norming(&gamma, &vec![1.0; self.k], conjugate(self.r));
        if c.iter().all(|ci| *ci == 0.0) {
            return None;
        }
        let mut y = vec![0.0; x.len()];
        for (k, gk) in g.chunks(d).enumerate() {
            if c[k] != 0.0 {
                let f = self.space.norming_functional_of(gk);
                for (yi, fi) in y[k * d..(k + 1) * d].iter_mut().zip(&f) {
                    *yi = c[k] * fi;
                }
            }
        }
        Some(y)
    }

    /// Norming functionals of the items, then dual basis directions, as atoms.
    fn structured_starts(&self) -> Vec<Vec<f64>> {
        let d = self.space.dim();
        let mut starts = Vec::new();
        let norming: Vec<Vec<f64>> = self
            .rows
            .iter()
            .map(|x| self.space.norming_functional_of(x))
            .filter(|f| f.iter().any(|c| *c != 0.0))
            .collect();
        if !norming.is_empty() {
            let mut x = vec![0.0; self.dim()];
            for (k, f) in norming.iter().take(self.k).enumerate() {
                x[k * d..(k + 1) * d].copy_from_slice(f);
            }
            starts.push(x);
        }
        let mut x = vec![0.0; self.dim()];
        for k in 0..self.k.min(d) {
            x[k * d + k] = self.space.weights()[k];
        }
        starts.push(x);
        starts
    }

    fn random_start(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..self.dim())
            .map(|_| StandardNormal.sample(rng))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimize::{fd_gradient, rng_for};
    use crate::spaces::{NormKind, Vector};
    use rand::Rng;

    fn seq(space: Space, rows: &[&[f64]]) -> SequenceFamily {
        SequenceFamily::from_rows(space, rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn scalar() -> Space {
        Space::lp(1, 2.0).unwrap()
    }

    #[test]
    fn objective_examples() {
        let sp = Space::lp(2, 2.0).unwrap();
        let x = seq(sp.clone(), &[&[3.0, 4.0]]);
        let f = FunctionalFamily::from_flat(sp.clone(), &[0.6, 0.8], 2.0).unwrap();
        assert!((aniso_objective(&x, &f, 2.0, 1.0).unwrap() - 5.0).abs() < 1e-14);
        let zero = FunctionalFamily::from_flat(sp, &[0.0; 4], 2.0).unwrap();
        assert_eq!(aniso_objective(&x, &zero, 2.0, 1.0).unwrap(), 0.0);
        let y = seq(scalar(), &[&[2.0], &[1.0]]);
        let one = FunctionalFamily::from_flat(scalar(), &[1.0], 2.0).unwrap();
        assert_eq!(aniso_objective(&y, &one, 2.0, 1.0).unwrap(), 3.0);
    }

    /// Brute force over up to three scalar atom magnitudes on the unit ℓ_2 sphere.
    fn scalar_grid_oracle(xs: &[f64], s: f64, q: f64) -> f64 {
        let n = 60;
        let mut best: f64 = 0.0;
        for i in 0..=n {
            for j in 0..=n {
                let th = std::f64::consts::FRAC_PI_2 * i as f64 / n as f64;
                let ph = std::f64::consts::FRAC_PI_2 * j as f64 / n as f64;
                let a = [th.cos() * ph.cos(), th.cos() * ph.sin(), th.sin()];
                let v = lp_value(xs.iter().map(|x| lp_value(a.iter().map(|ak| ak * x), s)), q);
                best = best.max(v);
            }
        }
        best
    }

    #[test]
    fn scalar_sequence_collapses_to_strong_norm() {
        let x = seq(scalar(), &[&[2.0], &[1.0]]);
        let e = aniso_norm(&x, 2.0, 1.0, 2.0, &EstimatorConfig::default()).unwrap();
        let oracle = scalar_grid_oracle(&[2.0, 1.0], 2.0, 1.0);
        assert!((oracle - 3.0).abs() < 1e-12);
        assert!((e.value - 3.0).abs() < 1e-12);
        assert_eq!(e.bound, BoundKind::Lower);
    }

    #[test]
    fn basis_of_l2_2() {
        // Oracle: grid over pairs of atoms (cos a, sin a)·c_k with c on the
        // unit circle, k = 1, 2.
        let n = 400;
        let mut grid_best: f64 = 0.0;
        let rows = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        for i in 0..n {
            for j in 0..n {
                for l in 0..=20 {
                    let a = std::f64::consts::TAU * i as f64 / n as f64;
                    let b = std::f64::consts::TAU * j as f64 / n as f64;
                    let t = std::f64::consts::FRAC_PI_2 * l as f64 / 20.0;
                    let atoms = [
                        t.cos() * a.cos(),
                        t.cos() * a.sin(),
                        t.sin() * b.cos(),
                        t.sin() * b.sin(),
                    ];
                    grid_best = grid_best.max(objective(&rows, &atoms, 2, 2.0, 1.0));
                }
            }
        }
        assert!((grid_best - 2f64.sqrt()).abs() < 1e-3);
        let x = seq(Space::lp(2, 2.0).unwrap(), &[&[1.0, 0.0], &[0.0, 1.0]]);
        let e = aniso_norm(&x, 2.0, 1.0, 2.0, &EstimatorConfig::default()).unwrap();
        assert!((e.value - 2f64.sqrt()).abs() < 1e-9, "{}", e.value);
        assert!(e.meta.converged);
    }

    #[test]
    fn single_vector_gives_its_norm() {
        let x = seq(Space::lp(2, 2.0).unwrap(), &[&[3.0, 4.0]]);
        for (s, q, r) in [(2.0, 1.0, 2.0), (3.0, 2.0, 1.0), (4.0, 1.5, 3.0)] {
            let e = aniso_norm(&x, s, q, r, &EstimatorConfig::default()).unwrap();
            assert!((e.value - 5.0).abs() < 1e-9, "{s} {q} {r}: {}", e.value);
        }
    }

    #[test]
    fn degenerate_and_weak_regimes() {
        let x = seq(Space::lp(2, 2.0).unwrap(), &[&[1.0, 0.0], &[0.0, 1.0]]);
        let cfg = EstimatorConfig::default();
        assert!(matches!(
            aniso_norm(&x, 2.0, 1.0, 3.0, &cfg),
            Err(Error::Regime { .. })
        ));
        let e = aniso_norm(&x, 2.0, 3.0, 1.0, &cfg).unwrap();
        let w = weak_norm(&x, 3.0, &cfg).unwrap();
        assert_eq!(e.value, w.value);
        assert!(aniso_norm(&x, 0.5, 1.0, 1.0, &cfg).is_err());
    }

    #[test]
    fn isolated_vector_among_zeros() {
        let sp = Space::lp(3, 1.5).unwrap();
        let v = [0.4, -0.9, 0.2];
        let n = sp.norm(&Vector(v.to_vec())).unwrap();
        for pos in 0..3 {
            let mut rows = vec![vec![0.0; 3]; 3];
            rows[pos] = v.to_vec();
            let x = SequenceFamily::from_rows(sp.clone(), rows).unwrap();
            let e = aniso_norm(&x, 3.0, 2.0, 2.0, &EstimatorConfig::default()).unwrap();
            assert!((e.value - n).abs() < 1e-9, "{} vs {n}", e.value);
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = rng_for(11, 0);
        for kind in [NormKind::Lp(1.5), NormKind::Lp(2.0), NormKind::Lp(3.0)] {
            let sp = Space::new(2, kind).unwrap();
            let rows: Vec<Vec<f64>> = (0..3)
                .map(|_| (0..2).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let prob = AnisoProblem {
                space: &sp,
                rows: &rows,
                k: 3,
                s: 3.0,
                q: 1.5,
                r: 2.0,
            };
            for _ in 0..100 {
                let x: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
                let g = prob.gradient(&x).unwrap();
                let h = fd_gradient(|y| prob.value(y), &x);
                let scale = g.iter().map(|v| v.abs()).fold(1e-3, f64::max);
                for (a, b) in g.iter().zip(&h) {
                    assert!((a - b).abs() <= 1e-4 * scale, "{a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn linear_step_is_feasible_and_improving() {
        let mut rng = rng_for(12, 0);
        let sp = Space::lp(3, 3.0).unwrap();
        let rows: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let prob = AnisoProblem {
            space: &sp,
            rows: &rows,
            k: 4,
            s: 2.5,
            q: 1.0,
            r: 1.5,
        };
        for _ in 0..50 {
            let mut x: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
            prob.project(&mut x);
            let y = prob.linear_step(&x, &[]).unwrap();
            assert!((prob.aggregate(&y) - 1.0).abs() < 1e-12);
            assert!(prob.value(&y) >= prob.value(&x) * (1.0 - 1e-12));
        }
    }
}
