//! Finite-dimensional real normed spaces: weighted ℓ_p norms, their duals,
//! the Euclidean duality pairing and the extreme points of the unit balls.
//!
//! A weighted space with weights `w` carries the norm `‖(w_i v_i)_i‖_p`, so the
//! dual norm of a functional `f` is `‖(f_i / w_i)_i‖_{p*}` with `1/p + 1/p* = 1`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_exponent, Error, Result};

/// Default cap on the dimension for which ball vertices are enumerated.
pub const DEFAULT_ENUMERATION_CAP: usize = 20;

/// Which ℓ_p norm a space carries. `p = ∞` is its own case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NormKind {
    Lp(f64),
    Inf,
}

impl NormKind {
    pub fn from_exponent(p: f64) -> Result<Self> {
        check_exponent("p", p)?;
        Ok(if p.is_infinite() {
            NormKind::Inf
        } else {
            NormKind::Lp(p)
        })
    }

    pub fn exponent(self) -> f64 {
        match self {
            NormKind::Lp(p) => p,
            NormKind::Inf => f64::INFINITY,
        }
    }

    pub fn dual(self) -> NormKind {
        match self {
            NormKind::Inf => NormKind::Lp(1.0),
            NormKind::Lp(1.0) => NormKind::Inf,
            NormKind::Lp(p) => NormKind::Lp(conjugate(p)),
        }
    }
}

/// Conjugate exponent `p*` with `1/p + 1/p* = 1` (1 ↔ ∞).
pub fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

/// `(Σ |v_i|^p)^{1/p}`, or `max |v_i|` for `p = ∞`. Scaled to avoid overflow.
pub fn lp_value<I>(values: I, p: f64) -> f64
where
    I: IntoIterator<Item = f64>,
    I::IntoIter: Clone,
{
    let iter = values.into_iter();
    let max = iter.clone().fold(0.0_f64, |m, v| m.max(v.abs()));
    if p.is_infinite() || max == 0.0 || !max.is_finite() {
        return max;
    }
    if p == 1.0 {
        return iter.map(f64::abs).sum();
    }
    let sum: f64 = iter.map(|v| (v.abs() / max).powf(p)).sum();
    max * sum.powf(1.0 / p)
}

/// Returns `y` maximizing `⟨y, x⟩` subject to `‖(y_i / a_i)‖_{p*} ≤ 1`, i.e. the
/// norming element of `x` for the norm `‖(a_i x_i)‖_p`. Zero input gives zero.
/// Ties at `p = ∞` resolve to the lowest index.
pub(crate) fn norming(x: &[f64], scale: &[f64], p: f64) -> Vec<f64> {
    let u: Vec<f64> = x.iter().zip(scale).map(|(xi, ai)| xi * ai).collect();
    let nu = lp_value(u.iter().copied(), p);
    let mut y = vec![0.0; x.len()];
    if nu == 0.0 {
        return y;
    }
    if p.is_infinite() {
        let mut best = 0;
        for (i, ui) in u.iter().enumerate() {
            if ui.abs() > u[best].abs() {
                best = i;
            }
        }
        y[best] = u[best].signum() * scale[best];
        return y;
    }
    if p == 1.0 {
        for i in 0..x.len() {
            if u[i] != 0.0 {
                y[i] = u[i].signum() * scale[i];
            }
        }
        return y;
    }
    for i in 0..x.len() {
        let g = (u[i].abs() / nu).powf(p - 1.0);
        y[i] = u[i].signum() * g * scale[i];
    }
    y
}

/// An element of a space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vector(pub Vec<f64>);

/// An element of the dual space, acting through the Euclidean pairing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Functional(pub Vec<f64>);

impl Vector {
    pub fn coords(&self) -> &[f64] {
        &self.0
    }
    pub fn zeros(dim: usize) -> Self {
        Vector(vec![0.0; dim])
    }
    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0.0)
    }
    pub fn scaled(&self, factor: f64) -> Self {
        Vector(self.0.iter().map(|c| c * factor).collect())
    }
}

impl Functional {
    pub fn coords(&self) -> &[f64] {
        &self.0
    }
    pub fn zeros(dim: usize) -> Self {
        Functional(vec![0.0; dim])
    }
    pub fn scaled(&self, factor: f64) -> Self {
        Functional(self.0.iter().map(|c| c * factor).collect())
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Vector(v)
    }
}

impl From<Vec<f64>> for Functional {
    fn from(v: Vec<f64>) -> Self {
        Functional(v)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean pairing `f(v)`.
pub fn pair(f: &Functional, v: &Vector) -> Result<f64> {
    if f.0.len() != v.0.len() {
        return Err(Error::DimensionMismatch {
            expected: f.0.len(),
            got: v.0.len(),
        });
    }
    Ok(dot(&f.0, &v.0))
}

/// ℝ^dim with a (weighted) ℓ_p norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Space {
    dim: usize,
    kind: NormKind,
    weights: Vec<f64>,
}

impl Space {
    pub fn new(dim: usize, kind: NormKind) -> Result<Self> {
        Self::weighted(dim, kind, vec![1.0; dim])
    }

    pub fn lp(dim: usize, p: f64) -> Result<Self> {
        Self::new(dim, NormKind::from_exponent(p)?)
    }

    pub fn weighted(dim: usize, kind: NormKind, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Empty("space dimension must be at least 1"));
        }
        if weights.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: weights.len(),
            });
        }
        if let NormKind::Lp(p) = kind {
            check_exponent("p", p)?;
            if p.is_infinite() {
                return Err(Error::InvalidParameter {
                    name: "p",
                    value: p,
                    reason: "use NormKind::Inf for p = inf",
                });
            }
        }
        if let Some(&w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidParameter {
                name: "weight",
                value: w,
                reason: "weights must be finite and strictly positive",
            });
        }
        Ok(Space { dim, kind, weights })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn kind(&self) -> NormKind {
        self.kind
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn exponent(&self) -> f64 {
        self.kind.exponent()
    }
    pub fn is_unweighted(&self) -> bool {
        self.weights.iter().all(|&w| w == 1.0)
    }

    fn inverse_weights(&self) -> Vec<f64> {
        self.weights.iter().map(|w| 1.0 / w).collect()
    }

    pub fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: len,
            });
        }
        Ok(())
    }

    pub fn norm(&self, v: &Vector) -> Result<f64> {
        self.check_dim(v.0.len())?;
        Ok(self.norm_of(&v.0))
    }

    pub fn dual_norm(&self, f: &Functional) -> Result<f64> {
        self.check_dim(f.0.len())?;
        Ok(self.dual_norm_of(&f.0))
    }

    /// Norm of raw coordinates; the caller guarantees the length.
    pub fn norm_of(&self, v: &[f64]) -> f64 {
        let w = &self.weights;
        lp_value(v.iter().zip(w).map(|(x, w)| x * w), self.exponent())
    }

    pub fn dual_norm_of(&self, f: &[f64]) -> f64 {
        let w = &self.weights;
        lp_value(
            f.iter().zip(w).map(|(x, w)| x / w),
            self.kind.dual().exponent(),
        )
    }

    /// Functional of dual norm 1 attaining `f(v) = ‖v‖` (zero for `v = 0`).
    pub fn norming_functional_of(&self, v: &[f64]) -> Vec<f64> {
        norming(v, &self.weights, self.exponent())
    }

    /// Vector of norm 1 attaining `f(v) = ‖f‖_*` (zero for `f = 0`).
    pub fn norming_vector_of(&self, f: &[f64]) -> Vec<f64> {
        norming(f, &self.inverse_weights(), self.kind.dual().exponent())
    }

    pub fn norming_functional(&self, v: &Vector) -> Result<Functional> {
        self.check_dim(v.0.len())?;
        Ok(Functional(self.norming_functional_of(&v.0)))
    }

    /// Rescales `f` onto the dual unit sphere; zero is mapped to the first
    /// dual basis direction.
    pub fn project_dual_sphere(&self, f: &mut [f64]) {
        let n = self.dual_norm_of(f);
        if n > 0.0 && n.is_finite() {
            f.iter_mut().for_each(|c| *c /= n);
        } else {
            f.iter_mut().for_each(|c| *c = 0.0);
            f[0] = self.weights[0];
        }
    }

    pub fn project_sphere(&self, v: &mut [f64]) {
        let n = self.norm_of(v);
        if n > 0.0 && n.is_finite() {
            v.iter_mut().for_each(|c| *c /= n);
        } else {
            v.iter_mut().for_each(|c| *c = 0.0);
            v[0] = 1.0 / self.weights[0];
        }
    }

    /// A random point on the dual unit sphere (Gaussian direction, rescaled).
    pub fn sample_dual_sphere<R: Rng + ?Sized>(&self, rng: &mut R) -> Functional {
        let mut f: Vec<f64> = (0..self.dim).map(|_| rng.sample(StandardNormal)).collect();
        self.project_dual_sphere(&mut f);
        Functional(f)
    }

    pub fn sample_sphere<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector {
        let mut v: Vec<f64> = (0..self.dim).map(|_| rng.sample(StandardNormal)).collect();
        self.project_sphere(&mut v);
        Vector(v)
    }

    /// Vertices of the dual unit ball, when it is a polytope of manageable size.
    ///
    /// ℓ_1 spaces have a cube as dual ball (2^n sign vectors), ℓ_∞ spaces a
    /// cross-polytope (±e_i). In dimension one every ℓ_p ball is a segment.
    pub fn dual_extreme_points(&self) -> Option<Vec<Functional>> {
        self.dual_extreme_points_capped(DEFAULT_ENUMERATION_CAP)
    }

    pub fn dual_extreme_points_capped(&self, cap: usize) -> Option<Vec<Functional>> {
        let w = &self.weights;
        if self.dim == 1 {
            return Some(vec![Functional(vec![w[0]]), Functional(vec![-w[0]])]);
        }
        match self.kind {
            NormKind::Inf => Some(cross_polytope(w)),
            NormKind::Lp(p) if p == 1.0 && self.dim <= cap => Some(
                sign_vectors(self.dim)
                    .into_iter()
                    .map(|s| Functional(s.iter().zip(w).map(|(s, w)| s * w).collect()))
                    .collect(),
            ),
            _ => None,
        }
    }

    /// Vertices of the primal unit ball (ℓ_1: ±e_i/w_i, ℓ_∞: sign vectors / w).
    pub fn extreme_points_capped(&self, cap: usize) -> Option<Vec<Vector>> {
        let inv = self.inverse_weights();
        if self.dim == 1 {
            return Some(vec![Vector(vec![inv[0]]), Vector(vec![-inv[0]])]);
        }
        match self.kind {
            NormKind::Lp(1.0) => Some(
                cross_polytope(&inv)
                    .into_iter()
                    .map(|f| Vector(f.0))
                    .collect(),
            ),
            NormKind::Inf if self.dim <= cap => Some(
                sign_vectors(self.dim)
                    .into_iter()
                    .map(|s| Vector(s.iter().zip(&inv).map(|(s, w)| s * w).collect()))
                    .collect(),
            ),
            _ => None,
        }
    }
}

fn cross_polytope(scale: &[f64]) -> Vec<Functional> {
    let n = scale.len();
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        for sign in [1.0, -1.0] {
            let mut f = vec![0.0; n];
            f[i] = sign * scale[i];
            out.push(Functional(f));
        }
    }
    out
}

/// All 2^n vectors in {−1, 1}^n, in binary-counting order.
pub(crate) fn sign_vectors(n: usize) -> Vec<Vec<f64>> {
    (0..1usize << n)
        .map(|mask| {
            (0..n)
                .map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 })
                .collect()
        })
        .collect()
}

/// Classification of a parameter tuple for the anisotropic sequence space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `q < s` and `r ≤ s`.
    Proper,
    /// `s ≤ q` and `r ≤ s`: the space coincides with weakly q-summable sequences.
    WeakEquivalent,
    /// `s < r`: the space is `{0}`.
    DegenerateZero,
    /// Some exponent is below 1 or not a number.
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamRegime {
    pub s: f64,
    pub q: f64,
    pub r: f64,
    pub p: f64,
    pub class: Regime,
    /// `q < p`: the weakly anisotropic operator class is `{0}`.
    pub weak_operators_zero: bool,
    /// `p < q`: the anisotropic summing operator class is `{0}`.
    pub summing_operators_zero: bool,
}

impl ParamRegime {
    pub fn is_proper(&self) -> bool {
        self.class == Regime::Proper
    }
}

pub fn classify_params(s: f64, q: f64, r: f64, p: f64) -> ParamRegime {
    let valid = [s, q, r, p].iter().all(|x| !x.is_nan() && *x >= 1.0);
    let class = if !valid {
        Regime::Rejected
    } else if s < r {
        Regime::DegenerateZero
    } else if q < s {
        Regime::Proper
    } else {
        Regime::WeakEquivalent
    };
    ParamRegime {
        s,
        q,
        r,
        p,
        class,
        weak_operators_zero: valid && q < p,
        summing_operators_zero: valid && p < q,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn v(c: &[f64]) -> Vector {
        Vector(c.to_vec())
    }
    fn f(c: &[f64]) -> Functional {
        Functional(c.to_vec())
    }

    #[test]
    fn norm_examples() {
        assert_eq!(
            Space::lp(2, 2.0).unwrap().norm(&v(&[3.0, 4.0])).unwrap(),
            5.0
        );
        assert_eq!(
            Space::lp(2, 1.0).unwrap().norm(&v(&[1.0, -1.0])).unwrap(),
            2.0
        );
        let inf = Space::new(3, NormKind::Inf).unwrap();
        assert_eq!(inf.norm(&v(&[0.0, 0.0, 0.0])).unwrap(), 0.0);
        assert!(matches!(
            inf.norm(&v(&[1.0])),
            Err(Error::DimensionMismatch {
                expected: 3,
                got: 1
            })
        ));
    }

    #[test]
    fn dual_norm_examples() {
        assert_eq!(
            Space::lp(2, 1.0)
                .unwrap()
                .dual_norm(&f(&[1.0, -1.0]))
                .unwrap(),
            1.0
        );
        assert_eq!(
            Space::lp(2, 2.0)
                .unwrap()
                .dual_norm(&f(&[3.0, 4.0]))
                .unwrap(),
            5.0
        );
        let inf = Space::new(2, NormKind::Inf).unwrap();
        assert_eq!(inf.dual_norm(&f(&[1.0, 1.0])).unwrap(), 2.0);
    }

    #[test]
    fn pairing_examples() {
        assert_eq!(pair(&f(&[1.0, 0.0]), &v(&[3.0, 4.0])).unwrap(), 3.0);
        assert_eq!(pair(&f(&[0.0, 0.0]), &v(&[7.5, -2.0])).unwrap(), 0.0);
        assert_eq!(pair(&f(&[1.0, 1.0]), &v(&[1.0, -1.0])).unwrap(), 0.0);
        assert!(pair(&f(&[1.0]), &v(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn extreme_point_examples() {
        let inf = Space::new(2, NormKind::Inf).unwrap();
        let pts = inf.dual_extreme_points().unwrap();
        let expected = [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]];
        assert_eq!(pts.len(), 4);
        for e in expected {
            assert!(pts.contains(&f(&e)));
        }
        let one = Space::lp(1, 1.0).unwrap().dual_extreme_points().unwrap();
        assert_eq!(one, vec![f(&[1.0]), f(&[-1.0])]);
        assert!(Space::lp(2, 2.0).unwrap().dual_extreme_points().is_none());
        assert_eq!(
            Space::lp(4, 1.0)
                .unwrap()
                .dual_extreme_points()
                .unwrap()
                .len(),
            16
        );
        assert!(Space::lp(21, 1.0).unwrap().dual_extreme_points().is_none());
    }

    #[test]
    fn extreme_points_have_unit_dual_norm() {
        let spaces = [
            Space::lp(3, 1.0).unwrap(),
            Space::new(3, NormKind::Inf).unwrap(),
            Space::weighted(3, NormKind::Lp(1.0), vec![0.5, 2.0, 3.0]).unwrap(),
            Space::weighted(2, NormKind::Inf, vec![0.25, 4.0]).unwrap(),
        ];
        for s in &spaces {
            for e in s.dual_extreme_points().unwrap() {
                assert_eq!(s.dual_norm(&e).unwrap(), 1.0);
            }
            for e in s.extreme_points_capped(20).unwrap() {
                assert!((s.norm(&e).unwrap() - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn classify_examples() {
        assert_eq!(
            classify_params(2.0, 1.0, 3.0, 1.0).class,
            Regime::DegenerateZero
        );
        assert_eq!(
            classify_params(2.0, 3.0, 1.0, 1.0).class,
            Regime::WeakEquivalent
        );
        assert_eq!(classify_params(3.0, 2.0, 2.0, 1.0).class, Regime::Proper);
        assert_eq!(classify_params(0.5, 2.0, 2.0, 1.0).class, Regime::Rejected);
        let c = classify_params(3.0, 1.0, 2.0, 2.0);
        assert!(c.weak_operators_zero && !c.summing_operators_zero);
        let c = classify_params(3.0, 2.0, 2.0, 1.0);
        assert!(!c.weak_operators_zero && c.summing_operators_zero);
    }

    #[test]
    fn rejects_bad_spaces() {
        assert!(Space::lp(0, 2.0).is_err());
        assert!(Space::lp(2, 0.5).is_err());
        assert!(Space::weighted(2, NormKind::Lp(2.0), vec![1.0, 0.0]).is_err());
        assert!(Space::weighted(2, NormKind::Lp(2.0), vec![1.0]).is_err());
        assert_eq!(Space::lp(2, f64::INFINITY).unwrap().kind(), NormKind::Inf);
    }

    #[test]
    fn norming_functionals_attain_the_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spaces = [
            Space::lp(3, 1.0).unwrap(),
            Space::lp(3, 1.5).unwrap(),
            Space::lp(3, 2.0).unwrap(),
            Space::lp(3, 3.0).unwrap(),
            Space::new(3, NormKind::Inf).unwrap(),
            Space::weighted(3, NormKind::Lp(3.0), vec![0.5, 1.0, 2.0]).unwrap(),
            Space::weighted(3, NormKind::Inf, vec![0.5, 1.0, 2.0]).unwrap(),
        ];
        for s in &spaces {
            for _ in 0..50 {
                let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
                let g = s.norming_functional_of(&x);
                assert!((s.dual_norm_of(&g) - 1.0).abs() < 1e-12);
                assert!((dot(&g, &x) - s.norm_of(&x)).abs() < 1e-12);
                let u = s.norming_vector_of(&x);
                assert!((s.norm_of(&u) - 1.0).abs() < 1e-12);
                assert!((dot(&u, &x) - s.dual_norm_of(&x)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn generalized_cauchy_schwarz() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let kinds = [
            NormKind::Lp(1.0),
            NormKind::Lp(1.5),
            NormKind::Lp(2.0),
            NormKind::Lp(3.0),
            NormKind::Inf,
        ];
        for kind in kinds {
            let dim = 4;
            let w: Vec<f64> = (0..dim).map(|_| rng.random_range(0.2..3.0)).collect();
            for s in [
                Space::new(dim, kind).unwrap(),
                Space::weighted(dim, kind, w).unwrap(),
            ] {
                for _ in 0..10_000 {
                    let a: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
                    let b: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
                    let lhs = dot(&a, &b).abs();
                    let rhs = s.dual_norm_of(&a) * s.norm_of(&b);
                    assert!(lhs <= rhs * (1.0 + 1e-12), "{kind:?}: {lhs} > {rhs}");
                }
            }
        }
    }

    #[test]
    fn lp_value_limits() {
        assert_eq!(lp_value([3.0, -4.0], f64::INFINITY), 4.0);
        assert_eq!(lp_value([1e200, 1e200], 2.0), 1e200 * 2f64.sqrt());
        assert_eq!(lp_value(Vec::<f64>::new(), 2.0), 0.0);
        assert_eq!(conjugate(2.0), 2.0);
        assert_eq!(conjugate(1.0), f64::INFINITY);
        assert_eq!(conjugate(f64::INFINITY), 1.0);
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        fn kind() -> impl Strategy<Value = NormKind> {
            prop_oneof![
                Just(NormKind::Lp(1.0)),
                Just(NormKind::Lp(1.5)),
                Just(NormKind::Lp(2.0)),
                Just(NormKind::Lp(3.0)),
                Just(NormKind::Inf),
            ]
        }

        proptest! {
            #[test]
            fn norm_is_definite_and_homogeneous(
                kind in kind(),
                x in proptest::collection::vec(-10.0f64..10.0, 3),
                lambda in -5.0f64..5.0,
            ) {
                let s = Space::new(3, kind).unwrap();
                let n = s.norm_of(&x);
                prop_assert_eq!(n == 0.0, x.iter().all(|c| *c == 0.0));
                let scaled: Vec<f64> = x.iter().map(|c| c * lambda).collect();
                prop_assert!((s.norm_of(&scaled) - lambda.abs() * n).abs() <= 1e-12 * (1.0 + n));
            }

            #[test]
            fn classification_partitions_the_quadrant(
                s in 1.0f64..5.0, q in 1.0f64..5.0, r in 1.0f64..5.0, p in 1.0f64..5.0,
            ) {
                let c = classify_params(s, q, r, p).class;
                let expected = if s < r {
                    Regime::DegenerateZero
                } else if q < s {
                    Regime::Proper
                } else {
                    Regime::WeakEquivalent
                };
                prop_assert_eq!(c, expected);
            }
        }
    }
}
