use nalgebra::DMatrix;

use super::{BoundKind, EstimateMeta, EstimatorConfig, NormEstimate, SequenceFamily, Witness};
use crate::error::{check_exponent, Result};
use crate::optimize::{multistart_maximize, AscentProblem};
use crate::spaces::{dot, lp_value, sign_vectors, Functional, NormKind, Space};

/// `sup_{‖x*‖ ≤ 1} (Σ_j |x*(x_j)|^p)^{1/p}`.
pub fn weak_norm(seq: &SequenceFamily, p: f64, config: &EstimatorConfig) -> Result<NormEstimate> {
    weak_norm_with_starts(seq, p, config, &[])
}

/// As [`weak_norm`], with extra starting functionals for the search.
pub fn weak_norm_with_starts(
    seq: &SequenceFamily,
    p: f64,
    config: &EstimatorConfig,
    warm: &[Functional],
) -> Result<NormEstimate> {
    check_exponent("p", p)?;
    let space = seq.space();
    for f in warm {
        space.check_dim(f.0.len())?;
    }
    let rows = seq.rows();
    if config.exact_modes {
        if let Some(e) = exact_weak(space, &rows, p, config.enumeration_cap) {
            return Ok(e);
        }
    }

    let problem = WeakProblem {
        space,
        rows: &rows,
        p,
    };
    let mut starts: Vec<Vec<f64>> = Vec::new();
    for x in &rows {
        let f = space.norming_functional_of(x);
        if f.iter().any(|c| *c != 0.0) {
            starts.push(f);
        }
    }
    starts.extend(warm.iter().map(|f| f.0.clone()));
    let cert = multistart_maximize(&problem, &starts, &config.multistart(0x57))?;
    let mut f = cert.point.clone();
    space.project_dual_sphere(&mut f);
    Ok(NormEstimate {
        value: cert.value,
        bound: BoundKind::Lower,
        witness: Witness::Functional {
            functional: Functional(f),
        },
        meta: EstimateMeta::search(cert.converged, cert.restarts_used),
    })
}

pub(crate) fn pairing_values(rows: &[Vec<f64>], f: &[f64]) -> Vec<f64> {
    rows.iter().map(|x| dot(f, x)).collect()
}

fn exact(value: f64, f: Vec<f64>, mode: &str) -> NormEstimate {
    NormEstimate {
        value,
        bound: BoundKind::Exact,
        witness: Witness::Functional {
            functional: Functional(f),
        },
        meta: EstimateMeta::exact(mode),
    }
}

pub(crate) fn exact_weak(
    space: &Space,
    rows: &[Vec<f64>],
    p: f64,
    cap: usize,
) -> Option<NormEstimate> {
    if p.is_infinite() {
        let mut best = (0, f64::NEG_INFINITY);
        for (j, x) in rows.iter().enumerate() {
            let n = space.norm_of(x);
            if n > best.1 {
                best = (j, n);
            }
        }
        let mut f = space.norming_functional_of(&rows[best.0]);
        space.project_dual_sphere(&mut f);
        return Some(exact(best.1, f, "largest-norm"));
    }

    if let Some(points) = space.dual_extreme_points_capped(cap) {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, f) in points.iter().enumerate() {
            let v = lp_value(pairing_values(rows, &f.0), p);
            if v > best.1 {
                best = (i, v);
            }
        }
        return Some(exact(
            best.1,
            points[best.0].0.clone(),
            "dual-vertex-enumeration",
        ));
    }

    if p == 1.0 && rows.len() <= cap {
        // sup Σ_j |x*(x_j)| = max over signs of ‖Σ_j ε_j x_j‖; fix ε_0 = 1.
        let m = rows.len();
        let d = space.dim();
        let mut best = (vec![0.0; d], f64::NEG_INFINITY);
        for signs in sign_vectors(m - 1) {
            let mut sum = rows[0].clone();
            for (x, e) in rows[1..].iter().zip(&signs) {
                for (si, xi) in sum.iter_mut().zip(x) {
                    *si += e * xi;
                }
            }
            let n = space.norm_of(&sum);
            if n > best.1 {
                best = (sum, n);
            }
        }
        let mut f = space.norming_functional_of(&best.0);
        space.project_dual_sphere(&mut f);
        return Some(exact(best.1, f, "sign-enumeration"));
    }

    if space.kind() == NormKind::Lp(2.0) && p == 2.0 {
        // With f = w∘g and ‖g‖_2 = 1, Σ_j ⟨f, x_j⟩² = ‖M g‖² for the rows w∘x_j.
        let d = space.dim();
        let w = space.weights();
        let m = DMatrix::from_fn(rows.len(), d, |j, i| w[i] * rows[j][i]);
        let gram = m.transpose() * &m;
        let eig = gram.symmetric_eigen();
        let (mut k, mut top) = (0, f64::NEG_INFINITY);
        for (i, &l) in eig.eigenvalues.iter().enumerate() {
            if l > top {
                top = l;
                k = i;
            }
        }
        let mut f: Vec<f64> = (0..d).map(|i| w[i] * eig.eigenvectors[(i, k)]).collect();
        space.project_dual_sphere(&mut f);
        let value = lp_value(pairing_values(rows, &f), 2.0);
        return Some(exact(value, f, "spectral"));
    }
    None
}

/// Maximizes `‖(x*(x_j))_j‖_p / ‖x*‖_*`; feasible points are the dual sphere.
pub(crate) struct WeakProblem<'a> {
    pub space: &'a Space,
    pub rows: &'a [Vec<f64>],
    pub p: f64,
}

impl WeakProblem<'_> {
    /// Gradient of the numerator `N(x*) = ‖(x*(x_j))_j‖_p`.
    fn numerator_gradient(&self, f: &[f64]) -> (f64, Vec<f64>) {
        let a = pairing_values(self.rows, f);
        let n = lp_value(a.iter().copied(), self.p);
        let mut g = vec![0.0; f.len()];
        if n == 0.0 {
            return (n, g);
        }
        if self.p.is_infinite() {
            let mut best = 0;
            for (j, aj) in a.iter().enumerate() {
                if aj.abs() > a[best].abs() {
                    best = j;
                }
            }
            let sg = a[best].signum();
            for (gi, xi) in g.iter_mut().zip(&self.rows[best]) {
                *gi = sg * xi;
            }
            return (n, g);
        }
        for (aj, x) in a.iter().zip(self.rows) {
            if *aj == 0.0 {
                continue;
            }
            let c = if self.p == 1.0 {
                aj.signum()
            } else {
                (aj.abs() / n).powf(self.p - 1.0) * aj.signum()
            };
            for (gi, xi) in g.iter_mut().zip(x) {
                *gi += c * xi;
            }
        }
        (n, g)
    }
}

impl AscentProblem for WeakProblem<'_> {
    fn dim(&self) -> usize {
        self.space.dim()
    }

    fn value(&self, f: &[f64]) -> f64 {
        let d = self.space.dual_norm_of(f);
        if d == 0.0 {
            return 0.0;
        }
        lp_value(pairing_values(self.rows, f), self.p) / d
    }

    fn project(&self, f: &mut [f64]) {
        self.space.project_dual_sphere(f);
    }

    fn gradient(&self, f: &[f64]) -> Option<Vec<f64>> {
        let d = self.space.dual_norm_of(f);
        if d == 0.0 {
            return Some(vec![0.0; f.len()]);
        }
        let (n, gn) = self.numerator_gradient(f);
        let gd = self.space.norming_vector_of(f);
        Some(
            gn.iter()
                .zip(&gd)
                .map(|(a, b)| a / d - n * b / (d * d))
                .collect(),
        )
    }

    /// Moves to the dual-ball maximizer of the numerator's linearization.
    fn linear_step(&self, f: &[f64], _grad: &[f64]) -> Option<Vec<f64>> {
        let (_, g) = self.numerator_gradient(f);
        let y = self.space.norming_functional_of(&g);
        y.iter().any(|c| *c != 0.0).then_some(y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimize::fd_gradient;
    use crate::optimize::rng_for;
    use crate::spaces::Vector;
    use rand::Rng;

    fn seq(space: Space, rows: &[&[f64]]) -> SequenceFamily {
        SequenceFamily::from_rows(space, rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn basis_in_l2() {
        let s = seq(Space::lp(2, 2.0).unwrap(), &[&[1.0, 0.0], &[0.0, 1.0]]);
        let e = weak_norm(&s, 2.0, &EstimatorConfig::default()).unwrap();
        assert!((e.value - 1.0).abs() < 1e-12);
        let e = weak_norm(&s, 2.0, &EstimatorConfig::default().without_exact_modes()).unwrap();
        assert!((e.value - 1.0).abs() < 1e-9);
        assert_eq!(e.bound, BoundKind::Lower);
    }

    #[test]
    fn basis_in_l1_is_exact() {
        let s = seq(Space::lp(2, 1.0).unwrap(), &[&[1.0, 0.0], &[0.0, 1.0]]);
        let e = weak_norm(&s, 1.0, &EstimatorConfig::default()).unwrap();
        assert_eq!(e.value, 2.0);
        assert!(e.is_exact());
    }

    #[test]
    fn single_vector_gives_its_norm() {
        let cfg = EstimatorConfig::default();
        for p in [1.0, 1.5, 2.0, 3.0, f64::INFINITY] {
            let sp = Space::new(3, NormKind::from_exponent(p).unwrap()).unwrap();
            let s = seq(sp.clone(), &[&[0.3, -1.2, 0.7]]);
            let n = sp.norm(&Vector(vec![0.3, -1.2, 0.7])).unwrap();
            for q in [1.0, 2.0, 4.0] {
                let e = weak_norm(&s, q, &cfg).unwrap();
                assert!(
                    (e.value - n).abs() < 1e-9 * n,
                    "p={p} q={q}: {} vs {n}",
                    e.value
                );
            }
        }
    }

    #[test]
    fn exact_modes_agree_with_each_other() {
        // ℓ_1 space with p = 1: vertex enumeration and sign enumeration.
        let mut rng = rng_for(3, 0);
        for _ in 0..20 {
            let rows: Vec<Vec<f64>> = (0..2)
                .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let sp = Space::lp(3, 1.0).unwrap();
            let a = exact_weak(&sp, &rows, 1.0, 20).unwrap();
            let b = exact_weak(&sp, &rows, 1.0, 2).unwrap();
            assert_eq!(
                a.meta.exact_mode.as_deref(),
                Some("dual-vertex-enumeration")
            );
            assert_eq!(b.meta.exact_mode.as_deref(), Some("sign-enumeration"));
            assert!((a.value - b.value).abs() < 1e-12);
        }
    }

    #[test]
    fn spectral_mode_matches_search() {
        let mut rng = rng_for(4, 0);
        let sp = Space::weighted(3, NormKind::Lp(2.0), vec![1.0, 2.0, 0.5]).unwrap();
        for _ in 0..10 {
            let rows: Vec<Vec<f64>> = (0..3)
                .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let s = SequenceFamily::from_rows(sp.clone(), rows).unwrap();
            let a = weak_norm(&s, 2.0, &EstimatorConfig::default()).unwrap();
            let b = weak_norm(&s, 2.0, &EstimatorConfig::default().without_exact_modes()).unwrap();
            assert_eq!(a.meta.exact_mode.as_deref(), Some("spectral"));
            assert!(b.value <= a.value * (1.0 + 1e-12));
            assert!((a.value - b.value).abs() < 1e-8 * a.value);
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = rng_for(5, 0);
        for p_space in [1.5, 2.0, 3.0] {
            let sp = Space::lp(3, p_space).unwrap();
            let rows: Vec<Vec<f64>> = (0..3)
                .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            for p in [1.5, 2.0, 3.0] {
                let prob = WeakProblem {
                    space: &sp,
                    rows: &rows,
                    p,
                };
                for _ in 0..100 {
                    let f: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
                    let g = prob.gradient(&f).unwrap();
                    let h = fd_gradient(|y| prob.value(y), &f);
                    let scale = g.iter().map(|v| v.abs()).fold(1e-3, f64::max);
                    for (a, b) in g.iter().zip(&h) {
                        assert!((a - b).abs() <= 1e-4 * scale, "{a} vs {b}");
                    }
                }
            }
        }
    }
}
