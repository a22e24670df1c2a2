use serde::{Deserialize, Serialize};

use super::aniso::aniso_norm;
use super::weak::{weak_norm, weak_norm_with_starts};
use super::{
    mixed_conjugate, BoundKind, EstimateMeta, EstimatorConfig, Factorization, NormEstimate,
    SequenceFamily, Witness,
};
use crate::error::{check_finite_exponent, Error, Result};
use crate::optimize::{exchange_minimize, ExchangeProblem};
use crate::spaces::{dot, lp_value, Functional, Space, Vector};

const MASTER_ITERS: usize = 20_000;

fn check_mixed_params(s: f64, q: f64) -> Result<()> {
    check_finite_exponent("s", s)?;
    check_finite_exponent("q", q)?;
    if q > s {
        return Err(Error::InvalidParameter {
            name: "q",
            value: q,
            reason: "the mixed norm needs q <= s",
        });
    }
    Ok(())
}

/// Infimum of `‖τ‖_t · ‖(x_j / τ_j)_j‖_{w,s}` over factorizations
/// `x_j = τ_j y_j`, with `1/t = 1/q − 1/s`.
///
/// For `q < s` the infimum is computed by an exchange method: the inner
/// supremum of the weak norm is replaced by a maximum over a growing set of
/// functionals, for which the optimal `τ` has a closed form in terms of a
/// probability vector `λ` on the set, found by maximizing the concave
/// function `Σ_j b_j^{q/s}`, `b_j = Σ_i λ_i |φ_i(x_j)|^s`. The weak norm
/// oracle at that `τ` contributes the next functional. For `q = s` the
/// constant factorization is optimal.
pub fn mixed_upper(
    seq: &SequenceFamily,
    s: f64,
    q: f64,
    config: &EstimatorConfig,
) -> Result<NormEstimate> {
    check_mixed_params(s, q)?;
    let space = seq.space();
    let t = mixed_conjugate(s, q);
    let rows = seq.rows();
    let active: Vec<usize> = (0..rows.len())
        .filter(|&j| rows[j].iter().any(|c| *c != 0.0))
        .collect();

    if active.is_empty() {
        return Ok(NormEstimate {
            value: 0.0,
            bound: BoundKind::Exact,
            witness: Witness::Factorization {
                factorization: Factorization {
                    tau: vec![0.0; rows.len()],
                    y: seq.clone(),
                    tau_exponent: t,
                },
            },
            meta: EstimateMeta::exact("zero-sequence"),
        });
    }

    let nonzero: Vec<Vec<f64>> = active.iter().map(|&j| rows[j].clone()).collect();
    let inner_cfg = EstimatorConfig {
        seed: crate::optimize::mix_seed(config.seed, 0x3E),
        ..*config
    };

    if q == s {
        let tau = vec![1.0; nonzero.len()];
        let sub = SequenceFamily::from_rows(space.clone(), nonzero)?;
        let w = weak_norm(&sub, s, &inner_cfg)?;
        let mut meta = w.meta.clone();
        meta.rounds = Some(0);
        return Ok(NormEstimate {
            value: w.value,
            bound: upper_kind(w.bound),
            witness: Witness::Factorization {
                factorization: expand(seq, &active, &tau, t)?,
            },
            meta,
        });
    }

    let problem = MixedExchange {
        space,
        rows: &nonzero,
        s,
        q,
        t,
        config: inner_cfg,
    };
    let initial: Vec<Vec<f64>> = nonzero
        .iter()
        .map(|x| {
            let mut f = space.norming_functional_of(x);
            space.project_dual_sphere(&mut f);
            f
        })
        .collect();
    let out = exchange_minimize(&problem, initial, &config.exchange)?;
    let tau = out.certificate.point.clone();
    let mut meta = EstimateMeta::search(out.certificate.converged, 0);
    meta.rounds = Some(out.rounds);
    meta.atoms = Some(out.active.len());
    meta.opposite_bound = Some(out.lower);
    Ok(NormEstimate {
        value: out.certificate.value,
        bound: BoundKind::Upper,
        witness: Witness::Factorization {
            factorization: expand(seq, &active, &tau, t)?,
        },
        meta,
    })
}

fn upper_kind(inner: BoundKind) -> BoundKind {
    match inner {
        BoundKind::Exact => BoundKind::Exact,
        _ => BoundKind::Upper,
    }
}

/// Spreads `τ` over the nonzero items back to the full sequence.
fn expand(seq: &SequenceFamily, active: &[usize], tau: &[f64], t: f64) -> Result<Factorization> {
    let mut full_tau = vec![0.0; seq.len()];
    let mut y = vec![Vector::zeros(seq.space().dim()); seq.len()];
    for (&j, &tj) in active.iter().zip(tau) {
        full_tau[j] = tj;
        y[j] = seq.items()[j].scaled(1.0 / tj);
    }
    Ok(Factorization {
        tau: full_tau,
        y: SequenceFamily::new(seq.space().clone(), y)?,
        tau_exponent: t,
    })
}

struct MixedExchange<'a> {
    space: &'a Space,
    rows: &'a [Vec<f64>],
    s: f64,
    q: f64,
    t: f64,
    config: EstimatorConfig,
}

impl MixedExchange<'_> {
    /// `τ_j ∝ b_j^{1/(t+s)}` normalized to `‖τ‖_t = 1`.
    fn tau_from_b(&self, b: &[f64]) -> Vec<f64> {
        let top = b.iter().fold(0.0_f64, |m, v| m.max(*v));
        let floor = 1e-12 * top.max(f64::MIN_POSITIVE);
        let mut tau: Vec<f64> = b
            .iter()
            .map(|bj| bj.max(floor).powf(1.0 / (self.t + self.s)))
            .collect();
        let n = lp_value(tau.iter().copied(), self.t);
        tau.iter_mut().for_each(|v| *v /= n);
        tau
    }
}

/// `H(λ) = Σ_j b_j^{q/s}` and its gradient, for `b = Cᵀλ`.
fn master_value(c: &[Vec<f64>], lambda: &[f64], e: f64) -> (f64, Vec<f64>, Vec<f64>) {
    let m = c[0].len();
    let mut b = vec![0.0; m];
    for (ci, li) in c.iter().zip(lambda) {
        for (bj, cij) in b.iter_mut().zip(ci) {
            *bj += li * cij;
        }
    }
    let h: f64 = b.iter().map(|bj| bj.powf(e)).sum();
    let db: Vec<f64> = b
        .iter()
        .map(|bj| if *bj > 0.0 { e * bj.powf(e - 1.0) } else { 0.0 })
        .collect();
    let g = c
        .iter()
        .map(|ci| ci.iter().zip(&db).map(|(a, d)| a * d).sum())
        .collect();
    (h, g, b)
}

/// Maximizes the concave `H` over the simplex by exponentiated gradient with
/// backtracking, stopping on the Frank–Wolfe duality gap.
pub(crate) fn maximize_on_simplex(c: &[Vec<f64>], e: f64, tol: f64) -> (Vec<f64>, f64, Vec<f64>) {
    let n = c.len();
    let mut lambda = vec![1.0 / n as f64; n];
    let (mut h, mut g, mut b) = master_value(c, &lambda, e);
    let mut eta = 1.0;
    for _ in 0..MASTER_ITERS {
        let gmax = g.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
        let avg: f64 = g.iter().zip(&lambda).map(|(a, l)| a * l).sum();
        if gmax - avg <= tol * h.max(f64::MIN_POSITIVE) || !gmax.is_finite() {
            break;
        }
        let scale = g
            .iter()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        let mut accepted = false;
        while eta > 1e-16 {
            let mut next: Vec<f64> = lambda
                .iter()
                .zip(&g)
                .map(|(l, gi)| l * (eta * (gi - gmax) / scale).exp())
                .collect();
            let total: f64 = next.iter().sum();
            next.iter_mut().for_each(|v| *v /= total);
            let (hn, gn, bn) = master_value(c, &next, e);
            if hn > h {
                lambda = next;
                h = hn;
                g = gn;
                b = bn;
                eta = (eta * 1.5).min(1e6);
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (lambda, h, b)
}

impl ExchangeProblem for MixedExchange<'_> {
    type Cut = Vec<f64>;

    fn initial_point(&self) -> Vec<f64> {
        let norms: Vec<f64> = self.rows.iter().map(|x| self.space.norm_of(x)).collect();
        let mut tau: Vec<f64> = norms.iter().map(|n| n.powf(self.q / self.t)).collect();
        let n = lp_value(tau.iter().copied(), self.t);
        tau.iter_mut().for_each(|v| *v /= n);
        tau
    }

    fn oracle(&self, tau: &[f64], active: &[Vec<f64>]) -> Result<(Vec<f64>, f64)> {
        let y: Vec<Vec<f64>> = self
            .rows
            .iter()
            .zip(tau)
            .map(|(x, tj)| x.iter().map(|c| c / tj).collect())
            .collect();
        let seq = SequenceFamily::from_rows(self.space.clone(), y)?;
        let warm: Vec<Functional> = active.iter().cloned().map(Functional).collect();
        let w = weak_norm_with_starts(&seq, self.s, &self.config, &warm)?;
        let Witness::Functional { functional } = w.witness else {
            unreachable!("weak norm witnesses are functionals")
        };
        Ok((
            functional.0,
            lp_value(tau.iter().copied(), self.t) * w.value,
        ))
    }

    fn solve_master(&self, active: &[Vec<f64>]) -> Result<(Vec<f64>, f64)> {
        let c: Vec<Vec<f64>> = active
            .iter()
            .map(|f| {
                self.rows
                    .iter()
                    .map(|x| dot(f, x).abs().powf(self.s))
                    .collect()
            })
            .collect();
        let (_, h, b) = maximize_on_simplex(&c, self.q / self.s, 1e-12);
        Ok((self.tau_from_b(&b), h.powf(1.0 / self.q)))
    }
}

/// Two-sided estimate of the mixed `(s; q)` norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedBracket {
    pub lower: NormEstimate,
    pub upper: NormEstimate,
    /// `(upper − lower) / upper`, zero when both vanish.
    pub relative_gap: f64,
}

/// Lower bound from the anisotropic `(s, q, s)` norm, upper bound from
/// [`mixed_upper`]. For `q = s` the lower bound is the weak `s` norm.
pub fn mixed_norm(
    seq: &SequenceFamily,
    s: f64,
    q: f64,
    config: &EstimatorConfig,
) -> Result<MixedBracket> {
    check_mixed_params(s, q)?;
    let lower = if q == s {
        weak_norm(seq, s, config)?
    } else {
        aniso_norm(seq, s, q, s, config)?
    };
    let upper = mixed_upper(seq, s, q, config)?;
    let relative_gap = if upper.value == 0.0 {
        0.0
    } else {
        (upper.value - lower.value) / upper.value
    };
    Ok(MixedBracket {
        lower,
        upper,
        relative_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimize::rng_for;
    use rand::Rng;

    fn seq(space: Space, rows: &[&[f64]]) -> SequenceFamily {
        SequenceFamily::from_rows(space, rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn check_factorization(seq: &SequenceFamily, e: &NormEstimate) {
        let Witness::Factorization { factorization: f } = &e.witness else {
            panic!("expected a factorization");
        };
        for ((x, t), y) in seq.items().iter().zip(&f.tau).zip(f.y.items()) {
            for (xi, yi) in x.0.iter().zip(&y.0) {
                assert!((xi - t * yi).abs() <= 1e-12 * (1.0 + xi.abs()));
            }
            if *t == 0.0 {
                assert!(x.is_zero());
            }
        }
    }

    #[test]
    fn single_vector_gives_its_norm() {
        let x = seq(Space::lp(2, 2.0).unwrap(), &[&[3.0, 4.0]]);
        for (s, q) in [(2.0, 1.0), (3.0, 2.0), (2.0, 2.0)] {
            let e = mixed_upper(&x, s, q, &EstimatorConfig::default()).unwrap();
            assert!((e.value - 5.0).abs() < 1e-9, "{s} {q}: {}", e.value);
            check_factorization(&x, &e);
        }
    }

    #[test]
    fn equal_exponents_give_the_weak_norm() {
        let x = seq(Space::lp(2, 2.0).unwrap(), &[&[1.0, 0.0], &[0.0, 1.0]]);
        let e = mixed_upper(&x, 2.0, 2.0, &EstimatorConfig::default()).unwrap();
        assert!((e.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_sequence() {
        let x = seq(Space::lp(2, 2.0).unwrap(), &[&[0.0, 0.0], &[0.0, 0.0]]);
        let e = mixed_upper(&x, 2.0, 1.0, &EstimatorConfig::default()).unwrap();
        assert_eq!(e.value, 0.0);
        check_factorization(&x, &e);
    }

    #[test]
    fn scalar_sequence_brackets_close() {
        let x = seq(Space::lp(1, 2.0).unwrap(), &[&[2.0], &[1.0]]);
        let b = mixed_norm(&x, 2.0, 1.0, &EstimatorConfig::default()).unwrap();
        assert!((b.lower.value - 3.0).abs() < 1e-9);
        assert!((b.upper.value - 3.0).abs() < 1e-6, "{}", b.upper.value);
    }

    #[test]
    fn zero_items_keep_zero_tau() {
        let x = seq(
            Space::lp(2, 2.0).unwrap(),
            &[&[1.0, 0.5], &[0.0, 0.0], &[-0.3, 1.0]],
        );
        let e = mixed_upper(&x, 3.0, 2.0, &EstimatorConfig::default()).unwrap();
        check_factorization(&x, &e);
        let Witness::Factorization { factorization: f } = &e.witness else {
            unreachable!()
        };
        assert_eq!(f.tau[1], 0.0);
    }

    #[test]
    fn random_instance_gap_is_small() {
        let mut rng = rng_for(21, 0);
        let sp = Space::lp(2, 2.0).unwrap();
        for _ in 0..3 {
            let rows: Vec<Vec<f64>> = (0..3)
                .map(|_| (0..2).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let x = SequenceFamily::from_rows(sp.clone(), rows).unwrap();
            let b = mixed_norm(&x, 3.0, 2.0, &EstimatorConfig::default()).unwrap();
            assert!(b.lower.value <= b.upper.value * (1.0 + 1e-9));
            assert!(b.relative_gap <= 1e-2, "gap {}", b.relative_gap);
        }
    }

    #[test]
    fn simplex_master_matches_grid() {
        // Two atoms: maximize Σ_j (λ c_1j + (1−λ) c_2j)^{1/2} over λ ∈ [0, 1].
        let c = vec![vec![1.0, 0.1, 0.5], vec![0.2, 0.9, 0.4]];
        let (lambda, h, _) = maximize_on_simplex(&c, 0.5, 1e-14);
        let grid = (0..=100_000)
            .map(|i| {
                let l = i as f64 / 100_000.0;
                (0..3)
                    .map(|j| (l * c[0][j] + (1.0 - l) * c[1][j]).sqrt())
                    .sum::<f64>()
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((h - grid).abs() < 1e-9);
        assert!((lambda.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
