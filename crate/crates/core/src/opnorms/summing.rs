use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{LinearOperator, OpNormEstimate};
use crate::error::{check_exponent, check_finite_exponent, Error, Result};
use crate::optimize::{fd_gradient, multistart_maximize, AscentProblem};
use crate::seqnorms::{
    aniso_norm_with_starts, aniso_objective, exact_weak, weak_norm, BoundKind, EstimatorConfig,
    FunctionalFamily, SequenceFamily, Witness,
};
use crate::spaces::{classify_params, lp_value, Regime, Space};

/// A starting point for the weakly anisotropic search: domain vectors paired
/// with a functional family on the codomain.
#[derive(Debug, Clone, PartialEq)]
pub struct WarmPair {
    pub vectors: Vec<Vec<f64>>,
    pub functionals: FunctionalFamily,
}

fn zero_class(reason: String) -> Error {
    Error::Regime {
        regime: Regime::DegenerateZero,
        reason,
    }
}

fn light(config: &EstimatorConfig) -> EstimatorConfig {
    EstimatorConfig {
        restarts: config.restarts.min(2),
        max_iters: config.max_iters.min(100),
        ..*config
    }
}

fn rows_of(x: &[f64], d: usize) -> Vec<Vec<f64>> {
    x.chunks(d).map(<[f64]>::to_vec).collect()
}

fn flatten_padded(rows: &[Vec<f64>], m: usize, d: usize) -> Vec<f64> {
    let mut x: Vec<f64> = rows.iter().flatten().copied().collect();
    x.resize(m * d, 0.0);
    x
}

fn normalize(x: &mut [f64]) {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n > 0.0 && n.is_finite() {
        x.iter_mut().for_each(|v| *v /= n);
    } else {
        x.iter_mut().for_each(|v| *v = 0.0);
        x[0] = 1.0;
    }
}

fn strong(space: &Space, rows: &[Vec<f64>], q: f64) -> f64 {
    lp_value(rows.iter().map(|y| space.norm_of(y)), q)
}

fn images(t: &LinearOperator, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    rows.iter().map(|u| t.apply_slice(u)).collect()
}

/// Weak `p` norm of `rows`, exact when an enumeration applies.
fn weak_value(
    space: &Space,
    rows: &[Vec<f64>],
    p: f64,
    config: &EstimatorConfig,
) -> Result<(f64, bool)> {
    if config.exact_modes {
        if let Some(e) = exact_weak(space, rows, p, config.enumeration_cap) {
            return Ok((e.value, true));
        }
    }
    let seq = SequenceFamily::from_rows(space.clone(), rows.to_vec())?;
    let e = weak_norm(&seq, p, config)?;
    Ok((e.value, e.is_exact()))
}

/// Deterministic starting families of `m` domain vectors: the coordinate
/// basis, the right singular directions of `t` and an equiangular frame in
/// the first two coordinates.
fn family_starts(t: &LinearOperator, m: usize) -> Vec<Vec<f64>> {
    let d = t.domain().dim();
    let mut out = Vec::new();
    let basis: Vec<Vec<f64>> = (0..d.min(m))
        .map(|i| {
            let mut e = vec![0.0; d];
            e[i] = 1.0;
            e
        })
        .collect();
    out.push(flatten_padded(&basis, m, d));

    let svd = t.weighted_matrix().svd(false, true);
    if let Some(vt) = svd.v_t {
        let w = t.domain().weights();
        let dirs: Vec<Vec<f64>> = (0..vt.nrows().min(m))
            .map(|k| {
                (0..d)
                    .map(|j| svd.singular_values[k] * vt[(k, j)] / w[j])
                    .collect()
            })
            .collect();
        for x in [
            flatten_padded(&dirs, m, d),
            flatten_padded(&dirs[..1], m, d),
        ] {
            if x.iter().any(|v| *v != 0.0) {
                out.push(x);
            }
        }
    }

    if d >= 2 && m >= 2 {
        let frame: Vec<Vec<f64>> = (0..m)
            .map(|j| {
                let a = std::f64::consts::PI * j as f64 / m as f64;
                let mut u = vec![0.0; d];
                u[0] = a.cos();
                u[1] = a.sin();
                u
            })
            .collect();
        out.push(flatten_padded(&frame, m, d));
    }
    out.iter_mut().for_each(|x| normalize(x));
    out
}

fn trivial_estimate(t: &LinearOperator, m: usize, n: usize) -> Result<OpNormEstimate> {
    let d = t.domain().dim();
    let x = family_starts(t, m.max(1)).swap_remove(0);
    Ok(OpNormEstimate {
        value: 0.0,
        bound: BoundKind::Exact,
        witness_vectors: SequenceFamily::from_rows(t.domain().clone(), rows_of(&x, d))?,
        witness_functionals: None,
        m,
        n,
        converged: true,
        denominator_exact: true,
    })
}

type Envelope<'a> = &'a (dyn Fn(&[Vec<f64>]) -> Vec<f64> + Sync);

/// Ratio objective over unconstrained `m × d` families, normalized to unit
/// Frobenius norm since the ratio is scale invariant.
struct RatioProblem<'a, F: Fn(&[Vec<f64>]) -> f64 + Sync> {
    dim: usize,
    d: usize,
    ratio: F,
    envelope: Option<Envelope<'a>>,
}

impl<F: Fn(&[Vec<f64>]) -> f64 + Sync> AscentProblem for RatioProblem<'_, F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.ratio)(&rows_of(x, self.d))
    }

    fn project(&self, x: &mut [f64]) {
        normalize(x);
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.envelope.map(|g| g(&rows_of(x, self.d)))
    }

    fn structured_starts(&self) -> Vec<Vec<f64>> {
        Vec::new()
    }

    fn random_start(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..self.dim).map(|_| StandardNormal.sample(rng)).collect()
    }
}

/// `π_{q,p}(T)`: supremum of `‖(T u_j)‖_q / ‖(u_j)‖_{w,p}` over families of
/// `m` domain vectors.
pub fn pi_qp(
    t: &LinearOperator,
    q: f64,
    p: f64,
    m: usize,
    config: &EstimatorConfig,
) -> Result<OpNormEstimate> {
    pi_qp_with_starts(t, q, p, m, config, &[])
}

/// As [`pi_qp`], with extra starting families (each a list of domain
/// vectors). Families longer than `m` enlarge the searched size.
pub fn pi_qp_with_starts(
    t: &LinearOperator,
    q: f64,
    p: f64,
    m: usize,
    config: &EstimatorConfig,
    warm: &[Vec<Vec<f64>>],
) -> Result<OpNormEstimate> {
    check_exponent("q", q)?;
    check_exponent("p", p)?;
    if p > q {
        return Err(zero_class(format!(
            "p > q (p = {p}, q = {q}): the summing class reduces to zero"
        )));
    }
    if m == 0 {
        return Err(Error::Empty("family size m must be at least 1"));
    }
    let dom = t.domain();
    let d = dom.dim();
    for u in warm {
        for row in u {
            dom.check_dim(row.len())?;
        }
    }
    let m = warm.iter().map(Vec::len).fold(m, usize::max);
    if t.is_zero() {
        return trivial_estimate(t, m, 0);
    }

    let search = light(config);
    let ratio = |rows: &[Vec<f64>]| -> f64 {
        let num = strong(t.codomain(), &images(t, rows), q);
        match weak_value(dom, rows, p, &search) {
            Ok((den, _)) if den > 1e-300 => num / den,
            _ => 0.0,
        }
    };
    let problem = RatioProblem {
        dim: m * d,
        d,
        ratio,
        envelope: None,
    };
    let mut starts: Vec<Vec<f64>> = warm.iter().map(|u| flatten_padded(u, m, d)).collect();
    starts.extend(family_starts(t, m));
    let cert = multistart_maximize(&problem, &starts, &config.multistart(0x9A))?;

    let rows = rows_of(&cert.point, d);
    let num = strong(t.codomain(), &images(t, &rows), q);
    let (den, den_exact) = weak_value(dom, &rows, p, config)?;
    let value = if den > 1e-300 { num / den } else { 0.0 };
    Ok(OpNormEstimate {
        value,
        bound: BoundKind::Lower,
        witness_vectors: SequenceFamily::from_rows(dom.clone(), rows)?,
        witness_functionals: None,
        m,
        n: 0,
        converged: cert.converged,
        denominator_exact: den_exact,
    })
}

fn check_weakly_params(s: f64, q: f64, r: f64, p: f64) -> Result<()> {
    check_finite_exponent("s", s)?;
    check_finite_exponent("q", q)?;
    check_finite_exponent("r", r)?;
    check_finite_exponent("p", p)?;
    let class = classify_params(s, q, r, p);
    if class.class == Regime::DegenerateZero {
        return Err(zero_class(format!(
            "s < r (s = {s}, r = {r}): the space reduces to zero"
        )));
    }
    if class.weak_operators_zero {
        return Err(zero_class(format!(
            "q < p (q = {q}, p = {p}): the operator class reduces to zero"
        )));
    }
    Ok(())
}

/// Weakly anisotropic `(s, q, r; p)` norm: supremum of
/// `aniso_objective((T u_j), (x*_k), s, q) / (‖(x*_k)‖_r · ‖(u_j)‖_{w,p})`
/// over `m` domain vectors and `n` codomain functionals.
#[allow(clippy::too_many_arguments)]
pub fn weakly_aniso_norm(
    t: &LinearOperator,
    s: f64,
    q: f64,
    r: f64,
    p: f64,
    m: usize,
    n: usize,
    config: &EstimatorConfig,
) -> Result<OpNormEstimate> {
    weakly_aniso_norm_with_starts(t, s, q, r, p, m, n, config, &[])
}

/// As [`weakly_aniso_norm`], with starting pairs.
///
/// The search alternates two exact sub-problems: for fixed vectors the best
/// family is an anisotropic sequence norm of the images, and for a fixed
/// family the best vectors give `π_{q,p}(Ψ_{x*} ∘ T)`. Every chain starts
/// from a warm pair or from the `π_{q,p}(T)` witness and stops once a round
/// gains less than `1e-6` relatively.
#[allow(clippy::too_many_arguments)]
pub fn weakly_aniso_norm_with_starts(
    t: &LinearOperator,
    s: f64,
    q: f64,
    r: f64,
    p: f64,
    m: usize,
    n: usize,
    config: &EstimatorConfig,
    warm: &[WarmPair],
) -> Result<OpNormEstimate> {
    check_weakly_params(s, q, r, p)?;
    if m == 0 || n == 0 {
        return Err(Error::Empty("family sizes m and n must be at least 1"));
    }
    let dom = t.domain();
    for w in warm {
        crate::seqnorms::check_space(t.codomain(), w.functionals.space())?;
        for row in &w.vectors {
            dom.check_dim(row.len())?;
        }
        if w.vectors.is_empty() {
            return Err(Error::Empty("warm pair has no vectors"));
        }
    }
    let m = warm.iter().map(|w| w.vectors.len()).fold(m, usize::max);
    if t.is_zero() {
        return trivial_estimate(t, m, n);
    }

    let mut chains: Vec<(Vec<Vec<f64>>, Option<FunctionalFamily>)> = warm
        .iter()
        .map(|w| (w.vectors.clone(), Some(w.functionals.with_r(r)).transpose()))
        .map(|(u, f)| f.map(|f| (u, f)))
        .collect::<Result<_>>()?;
    let start = pi_qp(t, q, p, m, config)?;
    chains.push((start.witness_vectors.rows(), None));

    let mut best: Option<Chain> = None;
    for (u, f) in chains {
        let c = run_chain(t, s, q, r, p, m, n, config, u, f)?;
        if best.as_ref().is_none_or(|b| c.value > b.value) {
            best = Some(c);
        }
    }
    let best = best.expect("at least one chain");
    Ok(OpNormEstimate {
        value: best.value,
        bound: BoundKind::Lower,
        witness_vectors: SequenceFamily::from_rows(dom.clone(), best.vectors)?,
        witness_functionals: Some(best.family),
        m,
        n,
        converged: best.converged,
        denominator_exact: best.denominator_exact,
    })
}

struct Chain {
    value: f64,
    vectors: Vec<Vec<f64>>,
    family: FunctionalFamily,
    converged: bool,
    denominator_exact: bool,
}

const CHAIN_ROUNDS: usize = 6;

/// Value of the defining ratio at `(vectors, family)`.
fn pair_ratio(
    t: &LinearOperator,
    vectors: &[Vec<f64>],
    family: &FunctionalFamily,
    s: f64,
    q: f64,
    p: f64,
    config: &EstimatorConfig,
) -> Result<(f64, bool)> {
    let (den, exact) = weak_value(t.domain(), vectors, p, config)?;
    let agg = family.aggregate_norm();
    if den <= 1e-300 || agg <= 1e-300 {
        return Ok((0.0, exact));
    }
    let seq = SequenceFamily::from_rows(t.codomain().clone(), images(t, vectors))?;
    Ok((aniso_objective(&seq, family, s, q)? / (agg * den), exact))
}

#[allow(clippy::too_many_arguments)]
fn run_chain(
    t: &LinearOperator,
    s: f64,
    q: f64,
    r: f64,
    p: f64,
    m: usize,
    n: usize,
    config: &EstimatorConfig,
    mut vectors: Vec<Vec<f64>>,
    family: Option<FunctionalFamily>,
) -> Result<Chain> {
    let mut best: Option<Chain> = None;
    let mut consider =
        |vectors: &[Vec<f64>], family: &FunctionalFamily, converged: bool| -> Result<f64> {
            let (value, exact) = pair_ratio(t, vectors, family, s, q, p, config)?;
            if best.as_ref().is_none_or(|b| value > b.value) {
                best = Some(Chain {
                    value,
                    vectors: vectors.to_vec(),
                    family: family.clone(),
                    converged,
                    denominator_exact: exact,
                });
            }
            Ok(best.as_ref().map_or(value, |b| b.value))
        };

    let mut family = family;
    if let Some(f) = &family {
        consider(&vectors, f, false)?;
    }
    let mut previous = f64::NEG_INFINITY;
    let mut converged = false;
    for _ in 0..CHAIN_ROUNDS {
        let seq = SequenceFamily::from_rows(t.codomain().clone(), images(t, &vectors))?;
        let warm: Vec<FunctionalFamily> = family.iter().cloned().collect();
        let atoms = EstimatorConfig {
            max_atoms: warm.iter().map(FunctionalFamily::len).fold(n, usize::max),
            ..*config
        };
        let a = aniso_norm_with_starts(&seq, s, q, r, &atoms, &warm)?;
        let Witness::Family { family: f } = a.witness else {
            unreachable!("anisotropic estimates carry a family")
        };
        consider(&vectors, &f, a.meta.converged)?;

        let psi = t.psi_compose(&f, s)?;
        let u = pi_qp_with_starts(&psi, q, p, m, config, std::slice::from_ref(&vectors))?;
        vectors = u.witness_vectors.rows();
        let value = consider(&vectors, &f, u.converged && a.meta.converged)?;
        family = Some(f);
        if value <= previous * (1.0 + 1e-6) {
            converged = true;
            break;
        }
        previous = value;
    }
    let mut chain = best.expect("chain evaluated at least once");
    chain.converged &= converged;
    Ok(chain)
}

/// Anisotropic `(p; s, q, r)` summing norm: supremum of
/// `‖(T u_j)‖_p / ‖(u_j)‖_{A(s,q,r)}` over families of `m` domain vectors.
///
/// The denominator is itself a search estimate, so the ratio can overshoot;
/// `denominator_exact` is false whenever that may have happened.
pub fn aniso_summing_norm(
    t: &LinearOperator,
    p: f64,
    s: f64,
    q: f64,
    r: f64,
    m: usize,
    config: &EstimatorConfig,
) -> Result<OpNormEstimate> {
    aniso_summing_norm_with_starts(t, p, s, q, r, m, config, &[])
}

#[allow(clippy::too_many_arguments)]
pub fn aniso_summing_norm_with_starts(
    t: &LinearOperator,
    p: f64,
    s: f64,
    q: f64,
    r: f64,
    m: usize,
    config: &EstimatorConfig,
    warm: &[Vec<Vec<f64>>],
) -> Result<OpNormEstimate> {
    check_finite_exponent("p", p)?;
    check_finite_exponent("s", s)?;
    check_finite_exponent("q", q)?;
    check_finite_exponent("r", r)?;
    let class = classify_params(s, q, r, p);
    if class.class == Regime::DegenerateZero {
        return Err(zero_class(format!(
            "s < r (s = {s}, r = {r}): the space reduces to zero"
        )));
    }
    if class.summing_operators_zero {
        return Err(zero_class(format!(
            "p < q (p = {p}, q = {q}): the operator class reduces to zero"
        )));
    }
    if m == 0 {
        return Err(Error::Empty("family size m must be at least 1"));
    }
    let dom = t.domain();
    let d = dom.dim();
    for u in warm {
        for row in u {
            dom.check_dim(row.len())?;
        }
    }
    let m = warm.iter().map(Vec::len).fold(m, usize::max);
    if t.is_zero() {
        return trivial_estimate(t, m, 0);
    }

    let search = light(config);
    let denominator = |rows: &[Vec<f64>]| -> Option<(f64, FunctionalFamily)> {
        let seq = SequenceFamily::from_rows(dom.clone(), rows.to_vec()).ok()?;
        let e = aniso_norm_with_starts(&seq, s, q, r, &search, &[]).ok()?;
        let Witness::Family { family } = e.witness else {
            return None;
        };
        (e.value > 1e-300).then_some((e.value, family))
    };
    let numerator = |rows: &[Vec<f64>]| strong(t.codomain(), &images(t, rows), p);
    let ratio = |rows: &[Vec<f64>]| -> f64 {
        denominator(rows).map_or(0.0, |(den, _)| numerator(rows) / den)
    };
    // With the maximizing family held fixed the denominator is a smooth
    // function of the vectors whose gradient matches the envelope's.
    let envelope = |rows: &[Vec<f64>]| -> Vec<f64> {
        let x = flatten_padded(rows, rows.len(), d);
        let Some((_, family)) = denominator(rows) else {
            return vec![0.0; x.len()];
        };
        let flat = family.flat();
        fd_gradient(
            |y| {
                let rows = rows_of(y, d);
                let den = crate::seqnorms::aniso_objective_rows(&rows, &flat, d, s, q);
                if den > 1e-300 {
                    numerator(&rows) / den
                } else {
                    0.0
                }
            },
            &x,
        )
    };
    let problem = RatioProblem {
        dim: m * d,
        d,
        ratio,
        envelope: Some(&envelope),
    };
    let mut starts: Vec<Vec<f64>> = warm.iter().map(|u| flatten_padded(u, m, d)).collect();
    starts.extend(family_starts(t, m));
    let ms = EstimatorConfig {
        restarts: config.restarts.min(8),
        max_iters: config.max_iters.min(100),
        ..*config
    };
    let cert = multistart_maximize(&problem, &starts, &ms.multistart(0xC1))?;

    let rows = rows_of(&cert.point, d);
    let seq = SequenceFamily::from_rows(dom.clone(), rows.clone())?;
    let light_family: Vec<FunctionalFamily> =
        denominator(&rows).map(|(_, f)| f).into_iter().collect();
    let den = aniso_norm_with_starts(&seq, s, q, r, config, &light_family)?;
    let Witness::Family { family } = den.witness.clone() else {
        unreachable!("anisotropic estimates carry a family")
    };
    let value = if den.value > 1e-300 {
        numerator(&rows) / den.value
    } else {
        0.0
    };
    Ok(OpNormEstimate {
        value,
        bound: BoundKind::Lower,
        witness_vectors: seq,
        n: family.len(),
        witness_functionals: Some(family),
        m,
        converged: cert.converged && den.meta.converged,
        denominator_exact: den.is_exact(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{Functional, NormKind};

    fn l(dim: usize, p: f64) -> Space {
        Space::lp(dim, p).unwrap()
    }

    fn op(dom: Space, cod: Space, m: &[&[f64]]) -> LinearOperator {
        LinearOperator::new(dom, cod, m.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn cfg() -> EstimatorConfig {
        EstimatorConfig::default().with_restarts(8)
    }

    #[test]
    fn pi_qp_scalar_identity() {
        let t = LinearOperator::identity(l(1, 2.0));
        for p in [1.0, 2.0, 3.0] {
            let e = pi_qp(&t, p, p, 3, &cfg()).unwrap();
            assert!((e.value - 1.0).abs() < 1e-9, "p = {p}: {}", e.value);
        }
    }

    #[test]
    fn pi_2_of_identity_is_hilbert_schmidt() {
        for n in 1..=3 {
            let t = LinearOperator::identity(l(n, 2.0));
            let e = pi_qp(&t, 2.0, 2.0, n + 2, &cfg()).unwrap();
            assert!((e.value - (n as f64).sqrt()).abs() < 1e-6, "{}", e.value);
            assert!(e.denominator_exact);
        }
        // Hilbert–Schmidt norm of a diagonal operator.
        let t = op(l(2, 2.0), l(2, 2.0), &[&[3.0, 0.0], &[0.0, 4.0]]);
        let e = pi_qp(&t, 2.0, 2.0, 4, &cfg()).unwrap();
        assert!((e.value - 5.0).abs() < 1e-5, "{}", e.value);
    }

    #[test]
    fn pi_qp_of_rank_one() {
        // T = u* ⊗ x with u* = (1, -2) on ℓ_1^2 and x = (3, 4) in ℓ_2^2.
        let t = op(l(2, 1.0), l(2, 2.0), &[&[3.0, -6.0], &[4.0, -8.0]]);
        let e = pi_qp(&t, 1.0, 1.0, 3, &cfg()).unwrap();
        assert!((e.value - 5.0 * 2.0).abs() < 1e-6, "{}", e.value);
    }

    #[test]
    fn pi_qp_rejects_p_above_q() {
        let t = LinearOperator::identity(l(2, 2.0));
        assert!(matches!(
            pi_qp(&t, 1.0, 2.0, 2, &cfg()),
            Err(Error::Regime { .. })
        ));
        assert!(pi_qp(&t, 2.0, 1.0, 0, &cfg()).is_err());
    }

    #[test]
    fn zero_operator_everywhere() {
        let t = LinearOperator::zero(l(2, 2.0), l(2, 1.0));
        assert_eq!(pi_qp(&t, 2.0, 1.0, 3, &cfg()).unwrap().value, 0.0);
        assert_eq!(
            weakly_aniso_norm(&t, 2.0, 1.0, 2.0, 1.0, 2, 2, &cfg())
                .unwrap()
                .value,
            0.0
        );
        assert_eq!(
            aniso_summing_norm(&t, 1.0, 2.0, 1.0, 2.0, 2, &cfg())
                .unwrap()
                .value,
            0.0
        );
    }

    #[test]
    fn weakly_aniso_scalar_identity() {
        let t = LinearOperator::identity(l(1, 2.0));
        let e = weakly_aniso_norm(&t, 2.0, 1.0, 2.0, 1.0, 2, 2, &cfg()).unwrap();
        assert!((e.value - 1.0).abs() < 1e-8, "{}", e.value);
    }

    #[test]
    fn weakly_aniso_rank_one() {
        // u* = (2, 1) on ℓ_2^2 and x = (1, -1) in ℓ_∞^2: ‖x‖ ‖u*‖ = √5.
        let cod = Space::new(2, NormKind::Inf).unwrap();
        let t = op(l(2, 2.0), cod, &[&[2.0, 1.0], &[-2.0, -1.0]]);
        let e = weakly_aniso_norm(&t, 2.0, 1.0, 2.0, 1.0, 2, 2, &cfg()).unwrap();
        assert!((e.value - 5f64.sqrt()).abs() < 1e-6, "{}", e.value);
    }

    #[test]
    fn weakly_aniso_regimes() {
        let t = LinearOperator::identity(l(2, 2.0));
        let c = cfg();
        assert!(matches!(
            weakly_aniso_norm(&t, 2.0, 1.0, 3.0, 1.0, 2, 2, &c),
            Err(Error::Regime { .. })
        ));
        assert!(matches!(
            weakly_aniso_norm(&t, 3.0, 1.0, 2.0, 2.0, 2, 2, &c),
            Err(Error::Regime { .. })
        ));
    }

    #[test]
    fn weakly_aniso_value_reproduces_from_witnesses() {
        let t = op(l(2, 2.0), l(2, 2.0), &[&[1.0, 0.3], &[-0.2, 0.5]]);
        let e = weakly_aniso_norm(&t, 2.0, 1.0, 2.0, 1.0, 3, 3, &cfg()).unwrap();
        let fam = e.witness_functionals.as_ref().unwrap();
        let images = t.map_family(&e.witness_vectors).unwrap();
        let num = aniso_objective(&images, fam, 2.0, 1.0).unwrap();
        let den = weak_norm(&e.witness_vectors, 1.0, &cfg()).unwrap().value;
        let ratio = num / (fam.aggregate_norm() * den);
        assert!((ratio - e.value).abs() <= 1e-10 * e.value);
        // A single vector and a single functional already give ‖T‖.
        let norm = super::super::operator_norm(&t, &cfg()).unwrap().value;
        assert!(e.value >= norm * (1.0 - 1e-7));
    }

    #[test]
    fn weakly_aniso_dominated_by_pi_qp_with_its_vectors() {
        let t = op(l(2, 2.0), l(2, 2.0), &[&[1.0, 0.3], &[-0.2, 0.5]]);
        let c = cfg();
        let e = weakly_aniso_norm(&t, 2.0, 1.0, 2.0, 1.0, 3, 3, &c).unwrap();
        let pi = pi_qp_with_starts(&t, 1.0, 1.0, 3, &c, &[e.witness_vectors.rows()]).unwrap();
        assert!(e.value <= pi.value * (1.0 + 1e-9));
    }

    #[test]
    fn aniso_summing_scalar_identity() {
        let t = LinearOperator::identity(l(1, 2.0));
        let e = aniso_summing_norm(&t, 1.0, 2.0, 1.0, 2.0, 2, &cfg()).unwrap();
        assert!((e.value - 1.0).abs() < 1e-6, "{}", e.value);
    }

    #[test]
    fn aniso_summing_identity_l2() {
        let t = LinearOperator::identity(l(2, 2.0));
        let e = aniso_summing_norm(&t, 1.0, 2.0, 1.0, 2.0, 2, &cfg()).unwrap();
        assert!(e.value >= 2f64.sqrt() - 1e-6, "{}", e.value);
        assert!(e.value <= 2f64.sqrt() + 1e-3, "{}", e.value);
    }

    #[test]
    fn aniso_summing_regimes() {
        let t = LinearOperator::identity(l(2, 2.0));
        assert!(matches!(
            aniso_summing_norm(&t, 1.0, 2.0, 2.0, 2.0, 2, &cfg()),
            Err(Error::Regime { .. })
        ));
        assert!(matches!(
            aniso_summing_norm(&t, 1.0, 2.0, 1.0, 3.0, 2, &cfg()),
            Err(Error::Regime { .. })
        ));
    }

    #[test]
    fn warm_pairs_are_respected() {
        let t = op(l(2, 2.0), l(2, 2.0), &[&[1.0, 0.0], &[0.0, 0.5]]);
        let fam = FunctionalFamily::new(
            l(2, 2.0),
            vec![Functional(vec![0.6, 0.0]), Functional(vec![0.0, 0.8])],
            2.0,
        )
        .unwrap();
        let warm = WarmPair {
            vectors: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            functionals: fam.clone(),
        };
        let (seed_value, _) = pair_ratio(&t, &warm.vectors, &fam, 2.0, 1.0, 1.0, &cfg()).unwrap();
        let e =
            weakly_aniso_norm_with_starts(&t, 2.0, 1.0, 2.0, 1.0, 2, 2, &cfg(), &[warm]).unwrap();
        assert!(e.value >= seed_value - 1e-12);
    }
}
