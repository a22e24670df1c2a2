//! Linear operators between finite-dimensional ℓ_p spaces and estimators for
//! their summing norms.
//!
//! Every summing norm here is a supremum of a ratio over finite families, so
//! each estimator reports a lower bound together with the families at which
//! the ratio is attained.

mod summing;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use summing::{
    aniso_summing_norm, aniso_summing_norm_with_starts, pi_qp, pi_qp_with_starts,
    weakly_aniso_norm, weakly_aniso_norm_with_starts, WarmPair,
};

use crate::error::{Error, Result};
use crate::optimize::{multistart_maximize, AscentProblem};
use crate::seqnorms::{
    BoundKind, EstimateMeta, EstimatorConfig, FunctionalFamily, NormEstimate, SequenceFamily,
    Witness,
};
use crate::spaces::{dot, Functional, NormKind, Space, Vector};

/// A matrix acting from `domain` into `codomain`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearOperator {
    domain: Space,
    codomain: Space,
    matrix: Vec<Vec<f64>>,
}

impl LinearOperator {
    /// `matrix` has one row per codomain coordinate.
    pub fn new(domain: Space, codomain: Space, matrix: Vec<Vec<f64>>) -> Result<Self> {
        codomain.check_dim(matrix.len())?;
        for row in &matrix {
            domain.check_dim(row.len())?;
            if row.iter().any(|a| !a.is_finite()) {
                return Err(Error::Numeric("non-finite operator entry".into()));
            }
        }
        Ok(LinearOperator {
            domain,
            codomain,
            matrix,
        })
    }

    pub fn identity(space: Space) -> Self {
        let n = space.dim();
        let matrix = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        LinearOperator {
            domain: space.clone(),
            codomain: space,
            matrix,
        }
    }

    pub fn zero(domain: Space, codomain: Space) -> Self {
        let matrix = vec![vec![0.0; domain.dim()]; codomain.dim()];
        LinearOperator {
            domain,
            codomain,
            matrix,
        }
    }

    pub fn domain(&self) -> &Space {
        &self.domain
    }

    pub fn codomain(&self) -> &Space {
        &self.codomain
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    pub fn is_zero(&self) -> bool {
        self.matrix.iter().flatten().all(|a| *a == 0.0)
    }

    pub fn apply(&self, u: &Vector) -> Result<Vector> {
        self.domain.check_dim(u.0.len())?;
        Ok(Vector(self.apply_slice(&u.0)))
    }

    pub(crate) fn apply_slice(&self, u: &[f64]) -> Vec<f64> {
        self.matrix.iter().map(|row| dot(row, u)).collect()
    }

    /// `x* ↦ x* ∘ T`, a functional on the domain.
    pub fn adjoint_apply(&self, f: &Functional) -> Result<Functional> {
        self.codomain.check_dim(f.0.len())?;
        Ok(Functional(self.adjoint_slice(&f.0)))
    }

    pub(crate) fn adjoint_slice(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.domain.dim()];
        for (row, fi) in self.matrix.iter().zip(f) {
            for (o, a) in out.iter_mut().zip(row) {
                *o += fi * a;
            }
        }
        out
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &LinearOperator) -> Result<LinearOperator> {
        if inner.codomain != self.domain {
            return Err(Error::DimensionMismatch {
                expected: self.domain.dim(),
                got: inner.codomain.dim(),
            });
        }
        let matrix = self
            .matrix
            .iter()
            .map(|row| {
                (0..inner.domain.dim())
                    .map(|j| row.iter().zip(&inner.matrix).map(|(a, b)| a * b[j]).sum())
                    .collect()
            })
            .collect();
        LinearOperator::new(inner.domain.clone(), self.codomain.clone(), matrix)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        LinearOperator {
            domain: self.domain.clone(),
            codomain: self.codomain.clone(),
            matrix: self
                .matrix
                .iter()
                .map(|row| row.iter().map(|a| a * factor).collect())
                .collect(),
        }
    }

    /// `u ↦ (x*_k(T u))_k` as an operator into `ℓ_s^K`.
    pub fn psi_compose(&self, fam: &FunctionalFamily, s: f64) -> Result<LinearOperator> {
        crate::seqnorms::check_space(&self.codomain, fam.space())?;
        let codomain = Space::lp(fam.len(), s)?;
        let matrix = fam
            .atoms()
            .iter()
            .map(|f| self.adjoint_slice(&f.0))
            .collect();
        LinearOperator::new(self.domain.clone(), codomain, matrix)
    }

    /// Images of the rows of `seq` as a family in the codomain.
    pub fn map_family(&self, seq: &SequenceFamily) -> Result<SequenceFamily> {
        crate::seqnorms::check_space(&self.domain, seq.space())?;
        SequenceFamily::from_rows(
            self.codomain.clone(),
            seq.items().iter().map(|u| self.apply_slice(&u.0)).collect(),
        )
    }

    /// Pulls each atom back through the operator: `(x*_k ∘ T)_k`.
    pub fn pull_back(&self, fam: &FunctionalFamily) -> Result<FunctionalFamily> {
        crate::seqnorms::check_space(&self.codomain, fam.space())?;
        FunctionalFamily::new(
            self.domain.clone(),
            fam.atoms()
                .iter()
                .map(|f| Functional(self.adjoint_slice(&f.0)))
                .collect(),
            fam.r(),
        )
    }

    fn weighted_matrix(&self) -> DMatrix<f64> {
        let wc = self.codomain.weights();
        let wd = self.domain.weights();
        DMatrix::from_fn(self.codomain.dim(), self.domain.dim(), |i, j| {
            wc[i] * self.matrix[i][j] / wd[j]
        })
    }
}

/// Result of a summing-norm search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpNormEstimate {
    pub value: f64,
    pub bound: BoundKind,
    pub witness_vectors: SequenceFamily,
    pub witness_functionals: Option<FunctionalFamily>,
    /// Number of domain vectors in the searched families.
    pub m: usize,
    /// Number of functionals in the searched families (0 when unused).
    pub n: usize,
    pub converged: bool,
    /// False when a denominator was itself only a search estimate, in which
    /// case the ratio may exceed the true norm.
    pub denominator_exact: bool,
}

/// `sup_{‖u‖ ≤ 1} ‖T u‖`.
pub fn operator_norm(t: &LinearOperator, config: &EstimatorConfig) -> Result<NormEstimate> {
    let exact = |value: f64, u: Vec<f64>, mode: &str| {
        let f = t.codomain.norming_functional_of(&t.apply_slice(&u));
        NormEstimate {
            value,
            bound: BoundKind::Exact,
            witness: Witness::Functional {
                functional: Functional(f),
            },
            meta: EstimateMeta::exact(mode),
        }
    };
    if t.is_zero() {
        let mut u = vec![0.0; t.domain.dim()];
        t.domain.project_sphere(&mut u);
        return Ok(exact(0.0, u, "zero-operator"));
    }
    if config.exact_modes {
        if let Some(points) = t.domain.extreme_points_capped(config.enumeration_cap) {
            let mut best = (Vec::new(), f64::NEG_INFINITY);
            for v in points {
                let n = t.codomain.norm_of(&t.apply_slice(&v.0));
                if n > best.1 {
                    best = (v.0, n);
                }
            }
            return Ok(exact(best.1, best.0, "vertex-enumeration"));
        }
        if t.domain.kind() == NormKind::Lp(2.0) && t.codomain.kind() == NormKind::Lp(2.0) {
            let svd = t.weighted_matrix().svd(false, true);
            let (k, &top) = svd
                .singular_values
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .expect("nonempty matrix");
            let vt = svd.v_t.expect("requested right singular vectors");
            let wd = t.domain.weights();
            let u = (0..t.domain.dim()).map(|j| vt[(k, j)] / wd[j]).collect();
            return Ok(exact(top, u, "singular-value"));
        }
    }

    let problem = OperatorProblem { t };
    let starts: Vec<Vec<f64>> = t
        .matrix
        .iter()
        .map(|row| t.domain.norming_vector_of(row))
        .filter(|u| u.iter().any(|c| *c != 0.0))
        .collect();
    let cert = multistart_maximize(&problem, &starts, &config.multistart(0x0B))?;
    let f = t
        .codomain
        .norming_functional_of(&t.apply_slice(&cert.point));
    Ok(NormEstimate {
        value: cert.value,
        bound: BoundKind::Lower,
        witness: Witness::Functional {
            functional: Functional(f),
        },
        meta: EstimateMeta::search(cert.converged, cert.restarts_used),
    })
}

struct OperatorProblem<'a> {
    t: &'a LinearOperator,
}

impl AscentProblem for OperatorProblem<'_> {
    fn dim(&self) -> usize {
        self.t.domain.dim()
    }

    fn value(&self, u: &[f64]) -> f64 {
        self.t.codomain.norm_of(&self.t.apply_slice(u))
    }

    fn project(&self, u: &mut [f64]) {
        self.t.domain.project_sphere(u);
    }

    fn gradient(&self, u: &[f64]) -> Option<Vec<f64>> {
        let f = self
            .t
            .codomain
            .norming_functional_of(&self.t.apply_slice(u));
        Some(self.t.adjoint_slice(&f))
    }

    fn linear_step(&self, _u: &[f64], grad: &[f64]) -> Option<Vec<f64>> {
        Some(self.t.domain.norming_vector_of(grad))
    }
}

/// Both sides of the composition characterization for one family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiCheck {
    /// `π_{q,p}(Ψ_{x*} ∘ T)` estimate.
    pub piqp_value: f64,
    /// Weakly anisotropic norm estimate of `T`, seeded with the same family.
    pub wa_value: f64,
    pub piqp: OpNormEstimate,
    pub wa: OpNormEstimate,
}

/// Estimates `π_{q,p}(Ψ_{x*} ∘ T)` for the given family and the weakly
/// anisotropic `(s, q, r; p)` norm of `T`, with `r` taken from the family.
///
/// The second search is seeded with the family and the first search's
/// vectors, so `piqp_value ≤ wa_value` up to rounding.
pub fn psi_compose_check(
    t: &LinearOperator,
    fam: &FunctionalFamily,
    s: f64,
    q: f64,
    p: f64,
    m: usize,
    config: &EstimatorConfig,
) -> Result<PsiCheck> {
    if !fam.is_feasible() {
        return Err(Error::Infeasible(format!(
            "family has aggregate norm {} > 1",
            fam.aggregate_norm()
        )));
    }
    let composed = t.psi_compose(fam, s)?;
    let piqp = pi_qp(&composed, q, p, m, config)?;
    let n = fam.len().max(t.codomain.dim() + 2);
    let warm = WarmPair {
        vectors: piqp.witness_vectors.rows(),
        functionals: fam.clone(),
    };
    let wa = weakly_aniso_norm_with_starts(t, s, q, fam.r(), p, m, n, config, &[warm])?;
    Ok(PsiCheck {
        piqp_value: piqp.value,
        wa_value: wa.value,
        piqp,
        wa,
    })
}

/// Zero-padding isometry `ℓ_p^n → ℓ_p^{n+extra}` on the first coordinates.
pub fn padding_isometry(space: &Space, extra: usize) -> Result<LinearOperator> {
    let n = space.dim();
    let mut weights = space.weights().to_vec();
    weights.resize(n + extra, 1.0);
    let target = Space::weighted(n + extra, space.kind(), weights)?;
    let matrix = (0..n + extra)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    LinearOperator::new(space.clone(), target, matrix)
}

/// Exponents `(s, q, r; p)` of a weakly anisotropic norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakParams {
    pub s: f64,
    pub q: f64,
    pub r: f64,
    pub p: f64,
}

/// Extends every atom by zeros to the dimension of `target`.
pub fn pad_family(fam: &FunctionalFamily, target: &Space) -> Result<FunctionalFamily> {
    if target.dim() < fam.space().dim() {
        return Err(Error::DimensionMismatch {
            expected: fam.space().dim(),
            got: target.dim(),
        });
    }
    let atoms = fam
        .atoms()
        .iter()
        .map(|a| {
            let mut c = a.0.clone();
            c.resize(target.dim(), 0.0);
            Functional(c)
        })
        .collect();
    FunctionalFamily::new(target.clone(), atoms, fam.r())
}

/// Keeps the first `target.dim()` coordinates of every atom.
pub fn restrict_family(fam: &FunctionalFamily, target: &Space) -> Result<FunctionalFamily> {
    if target.dim() > fam.space().dim() {
        return Err(Error::DimensionMismatch {
            expected: fam.space().dim(),
            got: target.dim(),
        });
    }
    let atoms = fam
        .atoms()
        .iter()
        .map(|a| Functional(a.0[..target.dim()].to_vec()))
        .collect();
    FunctionalFamily::new(target.clone(), atoms, fam.r())
}

fn family_of(e: &OpNormEstimate) -> Result<FunctionalFamily> {
    e.witness_functionals
        .clone()
        .ok_or_else(|| Error::Numeric("estimate carries no functional family".into()))
}

/// Certificate-level ideal inequality for `S ∘ T ∘ R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdealCheck {
    pub composite: f64,
    pub inner: f64,
    pub norm_outer: f64,
    pub norm_inner: f64,
    /// `composite / (‖S‖ · inner · ‖R‖) − 1`; at most rounding when the
    /// operator norms are exact.
    pub excess: f64,
    pub exact_norms: bool,
    pub converged: bool,
}

/// Estimates the weakly anisotropic norm of `S ∘ T ∘ R`, then that of `T`
/// seeded with the mapped witness `(R u_j, x*_k ∘ S)`, whose ratio for `T`
/// is at least the composite ratio over `‖S‖ ‖R‖`.
#[allow(clippy::too_many_arguments)]
pub fn ideal_check(
    s_op: &LinearOperator,
    t: &LinearOperator,
    r_op: &LinearOperator,
    params: WeakParams,
    m: usize,
    n: usize,
    config: &EstimatorConfig,
) -> Result<IdealCheck> {
    let WeakParams { s, q, r, p } = params;
    let composite = s_op.compose(t)?.compose(r_op)?;
    let outer = weakly_aniso_norm(&composite, s, q, r, p, m, n, config)?;
    let seeded = WarmPair {
        vectors: r_op.map_family(&outer.witness_vectors)?.rows(),
        functionals: s_op.pull_back(&family_of(&outer)?)?,
    };
    let inner = weakly_aniso_norm_with_starts(t, s, q, r, p, m, n, config, &[seeded])?;
    let ns = operator_norm(s_op, config)?;
    let nr = operator_norm(r_op, config)?;
    let bound = ns.value * inner.value * nr.value;
    let excess = if outer.value == 0.0 {
        -1.0
    } else {
        outer.value / bound - 1.0
    };
    Ok(IdealCheck {
        composite: outer.value,
        inner: inner.value,
        norm_outer: ns.value,
        norm_inner: nr.value,
        excess,
        exact_norms: ns.is_exact() && nr.is_exact(),
        converged: outer.converged && inner.converged,
    })
}

/// Agreement of the weakly anisotropic norms of `T` and `v ∘ T` for the
/// zero-padding isometry `v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectivityCheck {
    pub original: f64,
    pub padded: f64,
    pub relative_gap: f64,
    pub rounds: usize,
    pub converged: bool,
}

/// Alternates searches for `T` and `v ∘ T`, each seeded with the other's
/// witness (padded with zeros, or restricted to the original coordinates),
/// until consecutive values agree to `1e-6` or `max_rounds` is reached.
pub fn injectivity_check(
    t: &LinearOperator,
    params: WeakParams,
    m: usize,
    n: usize,
    config: &EstimatorConfig,
    max_rounds: usize,
) -> Result<InjectivityCheck> {
    let WeakParams { s, q, r, p } = params;
    let v = padding_isometry(t.codomain(), 1)?;
    let vt = v.compose(t)?;
    let mut a = weakly_aniso_norm(t, s, q, r, p, m, n, config)?;
    let mut last = None;
    for round in 1..=max_rounds.max(1) {
        let up = WarmPair {
            vectors: a.witness_vectors.rows(),
            functionals: pad_family(&family_of(&a)?, vt.codomain())?,
        };
        let b = weakly_aniso_norm_with_starts(&vt, s, q, r, p, m, n, config, &[up])?;
        let scale = a.value.abs().max(b.value.abs());
        let gap = if scale == 0.0 {
            0.0
        } else {
            (a.value - b.value).abs() / scale
        };
        let check = InjectivityCheck {
            original: a.value,
            padded: b.value,
            relative_gap: gap,
            rounds: round,
            converged: a.converged && b.converged,
        };
        if gap <= 1e-6 || round == max_rounds.max(1) {
            return Ok(check);
        }
        let down = WarmPair {
            vectors: b.witness_vectors.rows(),
            functionals: restrict_family(&family_of(&b)?, t.codomain())?,
        };
        a = weakly_aniso_norm_with_starts(t, s, q, r, p, m, n, config, &[down])?;
        last = Some(check);
    }
    last.ok_or_else(|| Error::Numeric("no injectivity round ran".into()))
}
