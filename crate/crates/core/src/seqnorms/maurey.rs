use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use super::weak::weak_norm;
use super::{
    measure_value, next_pow2, BoundKind, DiscreteMeasure, EstimateMeta, EstimatorConfig,
    NormEstimate, SequenceFamily, Witness,
};
use crate::error::{check_finite_exponent, Error, Result};
use crate::optimize::{multistart_maximize, AscentProblem};
use crate::spaces::{dot, Functional, Space};

const WEIGHT_STEPS: usize = 20;

/// `‖((Σ_k v_k |x*_k(x_j)|^s)^{1/s})_j‖_q` for the measure `Σ_k v_k δ_{x*_k}`.
pub fn maurey_value(seq: &SequenceFamily, mu: &DiscreteMeasure, s: f64, q: f64) -> Result<f64> {
    check_finite_exponent("s", s)?;
    check_finite_exponent("q", q)?;
    for f in &mu.atoms {
        seq.space().check_dim(f.0.len())?;
    }
    let atoms: Vec<Vec<f64>> = mu.atoms.iter().map(|f| f.0.clone()).collect();
    Ok(measure_value(&seq.rows(), &atoms, &mu.weights, s, q))
}

/// Supremum of [`maurey_value`] over discrete probability measures on the
/// dual unit sphere, searched with `K = 1, 2, 4, …` atoms.
pub fn maurey_norm(
    seq: &SequenceFamily,
    s: f64,
    q: f64,
    config: &EstimatorConfig,
) -> Result<NormEstimate> {
    check_finite_exponent("s", s)?;
    check_finite_exponent("q", q)?;
    if q >= s {
        return Err(Error::InvalidParameter {
            name: "q",
            value: q,
            reason: "the measure form needs q < s",
        });
    }
    let space = seq.space();
    let rows = seq.rows();
    let weak = weak_norm(seq, q, config)?;
    let Witness::Functional { functional } = &weak.witness else {
        unreachable!("weak norm witnesses are functionals")
    };
    let point = functional.0.clone();

    let k_max = config.max_atoms.max(1);
    let k_min = k_max.min(next_pow2(seq.len()));
    let mut best_atoms = vec![point.clone()];
    let mut best_weights = vec![1.0];
    let mut best_value = measure_value(&rows, &best_atoms, &best_weights, s, q);
    let mut k = 1;
    let mut restarts_used = 0;
    let converged;
    loop {
        let problem = MaureyProblem {
            space,
            rows: &rows,
            k,
            s,
            q,
        };
        let starts = vec![
            problem.encode(std::slice::from_ref(&point), &[1.0]),
            problem.encode(&best_atoms, &best_weights),
        ];
        let cert = multistart_maximize(&problem, &starts, &config.multistart(0xB0 + k as u64))?;
        restarts_used += cert.restarts_used;
        let gain = (cert.value - best_value) / best_value.abs().max(1e-300);
        if cert.value > best_value {
            let (atoms, weights) = problem.decode(&cert.point);
            best_atoms = atoms;
            best_weights = weights;
            best_value = cert.value;
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

    let keep: Vec<usize> = (0..best_weights.len())
        .filter(|&i| best_weights[i] > 0.0)
        .collect();
    let total: f64 = keep.iter().map(|&i| best_weights[i]).sum();
    let measure = DiscreteMeasure::new(
        space,
        keep.iter()
            .map(|&i| Functional(best_atoms[i].clone()))
            .collect(),
        keep.iter().map(|&i| best_weights[i] / total).collect(),
    )?;
    let mut meta = EstimateMeta::search(converged, restarts_used);
    meta.atoms = Some(measure.atoms.len());
    Ok(NormEstimate {
        value: best_value,
        bound: BoundKind::Lower,
        witness: Witness::Measure { measure },
        meta,
    })
}

/// Euclidean projection onto the probability simplex.
pub(crate) fn project_simplex(v: &mut [f64]) {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, ui) in u.iter().enumerate() {
        cum += ui;
        let t = (cum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter_mut().for_each(|x| *x = (*x - theta).max(0.0));
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        v.iter_mut().for_each(|x| *x /= total);
    } else {
        let n = v.len() as f64;
        v.iter_mut().for_each(|x| *x = 1.0 / n);
    }
}

/// Variables: `K` atoms (normalized to the dual sphere) followed by `K`
/// simplex weights.
struct MaureyProblem<'a> {
    space: &'a Space,
    rows: &'a [Vec<f64>],
    k: usize,
    s: f64,
    q: f64,
}

impl MaureyProblem<'_> {
    fn encode(&self, atoms: &[Vec<f64>], weights: &[f64]) -> Vec<f64> {
        let d = self.space.dim();
        let mut x = vec![0.0; self.k * (d + 1)];
        for k in 0..self.k {
            let src = &atoms[k.min(atoms.len() - 1)];
            x[k * d..(k + 1) * d].copy_from_slice(src);
            x[self.k * d + k] = weights.get(k).copied().unwrap_or(0.0);
        }
        x
    }

    fn decode(&self, x: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
        let d = self.space.dim();
        let atoms = x[..self.k * d]
            .chunks(d)
            .map(|f| {
                let mut f = f.to_vec();
                self.space.project_dual_sphere(&mut f);
                f
            })
            .collect();
        (atoms, x[self.k * d..].to_vec())
    }

    /// Value with atoms normalized and weights clipped and renormalized.
    fn evaluate(&self, atoms: &[Vec<f64>], weights: &[f64]) -> f64 {
        let w: Vec<f64> = weights.iter().map(|v| v.max(0.0)).collect();
        let total: f64 = w.iter().sum();
        if total <= 0.0 {
            return 0.0;
        }
        let w: Vec<f64> = w.iter().map(|v| v / total).collect();
        super::measure_value(self.rows, atoms, &w, self.s, self.q)
    }

    /// Gradient of the value with respect to each atom, weights fixed.
    fn atom_gradients(&self, atoms: &[Vec<f64>], weights: &[f64]) -> Vec<Vec<f64>> {
        let d = self.space.dim();
        let a: Vec<Vec<f64>> = self
            .rows
            .iter()
            .map(|x| atoms.iter().map(|f| dot(f, x)).collect())
            .collect();
        let b: Vec<f64> = a
            .iter()
            .map(|aj| {
                aj.iter()
                    .zip(weights)
                    .map(|(v, w)| w * v.abs().powf(self.s))
                    .sum()
            })
            .collect();
        let vq: f64 = b.iter().map(|bj: &f64| bj.powf(self.q / self.s)).sum();
        let mut g = vec![vec![0.0; d]; atoms.len()];
        if vq == 0.0 {
            return g;
        }
        let value = vq.powf(1.0 / self.q);
        for ((x, aj), bj) in self.rows.iter().zip(&a).zip(&b) {
            if *bj == 0.0 {
                continue;
            }
            let outer = value.powf(1.0 - self.q) * bj.powf(self.q / self.s - 1.0);
            for (k, ajk) in aj.iter().enumerate() {
                if *ajk == 0.0 || weights[k] == 0.0 {
                    continue;
                }
                let c = outer * weights[k] * ajk.abs().powf(self.s - 1.0) * ajk.signum();
                for (gi, xi) in g[k].iter_mut().zip(x) {
                    *gi += c * xi;
                }
            }
        }
        g
    }

    /// Gradient of the value with respect to the weights, atoms fixed.
    fn weight_gradient(&self, atoms: &[Vec<f64>], weights: &[f64]) -> Vec<f64> {
        let c: Vec<Vec<f64>> = atoms
            .iter()
            .map(|f| {
                self.rows
                    .iter()
                    .map(|x| dot(f, x).abs().powf(self.s))
                    .collect()
            })
            .collect();
        let b: Vec<f64> = (0..self.rows.len())
            .map(|j| c.iter().zip(weights).map(|(ci, w)| w * ci[j]).sum())
            .collect();
        let vq: f64 = b.iter().map(|bj: &f64| bj.powf(self.q / self.s)).sum();
        if vq == 0.0 {
            return vec![0.0; weights.len()];
        }
        let value = vq.powf(1.0 / self.q);
        c.iter()
            .map(|ci| {
                ci.iter()
                    .zip(&b)
                    .filter(|(_, bj)| **bj > 0.0)
                    .map(|(cij, bj)| cij * bj.powf(self.q / self.s - 1.0))
                    .sum::<f64>()
                    * value.powf(1.0 - self.q)
                    / self.s
            })
            .collect()
    }
}

impl AscentProblem for MaureyProblem<'_> {
    fn dim(&self) -> usize {
        self.k * (self.space.dim() + 1)
    }

    fn value(&self, x: &[f64]) -> f64 {
        let (atoms, weights) = self.decode(x);
        self.evaluate(&atoms, &weights)
    }

    fn project(&self, x: &mut [f64]) {
        let d = self.space.dim();
        let (atoms, weights) = x.split_at_mut(self.k * d);
        for f in atoms.chunks_mut(d) {
            self.space.project_dual_sphere(f);
        }
        project_simplex(weights);
    }

    /// Block step: every atom moves to the norming functional of its
    /// gradient, then the weights take projected gradient steps.
    fn linear_step(&self, x: &[f64], _grad: &[f64]) -> Option<Vec<f64>> {
        let (mut atoms, mut weights) = self.decode(x);
        let grads = self.atom_gradients(&atoms, &weights);
        for (f, g) in atoms.iter_mut().zip(&grads) {
            let y = self.space.norming_functional_of(g);
            if y.iter().any(|c| *c != 0.0) {
                *f = y;
            }
        }
        let mut value = self.evaluate(&atoms, &weights);
        let mut eta = 1.0;
        for _ in 0..WEIGHT_STEPS {
            let g = self.weight_gradient(&atoms, &weights);
            let scale = g.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            if scale == 0.0 {
                break;
            }
            let mut moved = false;
            while eta > 1e-12 {
                let mut w: Vec<f64> = weights
                    .iter()
                    .zip(&g)
                    .map(|(wi, gi)| wi + eta * gi / scale)
                    .collect();
                project_simplex(&mut w);
                let v = self.evaluate(&atoms, &w);
                if v > value {
                    weights = w;
                    value = v;
                    eta = (2.0 * eta).min(1.0);
                    moved = true;
                    break;
                }
                eta *= 0.5;
            }
            if !moved {
                break;
            }
        }
        Some(self.encode(&atoms, &weights))
    }

    fn structured_starts(&self) -> Vec<Vec<f64>> {
        let d = self.space.dim();
        let uniform = vec![1.0 / self.k as f64; self.k];
        let norming: Vec<Vec<f64>> = self
            .rows
            .iter()
            .map(|x| self.space.norming_functional_of(x))
            .filter(|f| f.iter().any(|c| *c != 0.0))
            .collect();
        let mut starts = Vec::new();
        if !norming.is_empty() {
            starts.push(self.encode(&norming, &uniform));
        }
        let basis: Vec<Vec<f64>> = (0..self.k)
            .map(|k| {
                let mut e = vec![0.0; d];
                e[k % d] = self.space.weights()[k % d];
                e
            })
            .collect();
        starts.push(self.encode(&basis, &uniform));
        starts
    }

    fn random_start(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let d = self.space.dim();
        let mut x: Vec<f64> = (0..self.k * d)
            .map(|_| StandardNormal.sample(rng))
            .collect();
        x.extend((0..self.k).map(|_| -> f64 { Exp1.sample(rng) }));
        x
    }
}
