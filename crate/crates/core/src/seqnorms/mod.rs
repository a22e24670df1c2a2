//! Norms of finite vector sequences: strong and weak ℓ_p norms, the
//! anisotropic `(s, q, r)` norm, the mixed `(s; q)` norm and its measure form.
//!
//! Suprema computed by search carry lower-bound semantics, infima computed by
//! search carry upper-bound semantics. Only closed formulas and complete
//! enumerations are reported as exact.

mod aniso;
mod maurey;
mod mixed;
mod weak;

use serde::{Deserialize, Serialize};

pub use aniso::{aniso_norm, aniso_norm_with_starts, aniso_objective};
pub(crate) use aniso::{objective as aniso_objective_rows, regime_error};
pub use maurey::{maurey_norm, maurey_value};
pub use mixed::{mixed_norm, mixed_upper, MixedBracket};
pub(crate) use weak::exact_weak;
pub use weak::{weak_norm, weak_norm_with_starts};

use crate::error::{check_exponent, Error, Result};
use crate::optimize::{ExchangeConfig, MultistartConfig};
use crate::spaces::{dot, lp_value, Functional, Space, Vector};

/// A finite, nonempty list of vectors of one space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceFamily {
    space: Space,
    items: Vec<Vector>,
}

impl SequenceFamily {
    pub fn new(space: Space, items: Vec<Vector>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::Empty("sequence has no items"));
        }
        for v in &items {
            space.check_dim(v.0.len())?;
            if v.0.iter().any(|c| !c.is_finite()) {
                return Err(Error::Numeric("non-finite sequence entry".into()));
            }
        }
        Ok(SequenceFamily { space, items })
    }

    pub fn from_rows(space: Space, rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(space, rows.into_iter().map(Vector).collect())
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn items(&self) -> &[Vector] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.items.iter().map(|v| v.0.clone()).collect()
    }

    pub fn norms(&self) -> Vec<f64> {
        self.items
            .iter()
            .map(|v| self.space.norm_of(&v.0))
            .collect()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        SequenceFamily {
            space: self.space.clone(),
            items: self.items.iter().map(|v| v.scaled(factor)).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.items.iter().all(Vector::is_zero)
    }
}

/// A finite family of functionals measured by the ℓ_r norm of their dual norms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalFamily {
    space: Space,
    atoms: Vec<Functional>,
    r: f64,
}

impl FunctionalFamily {
    pub fn new(space: Space, atoms: Vec<Functional>, r: f64) -> Result<Self> {
        check_exponent("r", r)?;
        if atoms.is_empty() {
            return Err(Error::Empty("functional family has no atoms"));
        }
        for f in &atoms {
            space.check_dim(f.0.len())?;
            if f.0.iter().any(|c| !c.is_finite()) {
                return Err(Error::Numeric("non-finite functional entry".into()));
            }
        }
        Ok(FunctionalFamily { space, atoms, r })
    }

    /// Splits `flat` into consecutive atoms of length `space.dim()`.
    pub fn from_flat(space: Space, flat: &[f64], r: f64) -> Result<Self> {
        let d = space.dim();
        if flat.is_empty() || !flat.len().is_multiple_of(d) {
            return Err(Error::DimensionMismatch {
                expected: d * (flat.len() / d).max(1),
                got: flat.len(),
            });
        }
        let atoms = flat.chunks(d).map(|c| Functional(c.to_vec())).collect();
        Self::new(space, atoms, r)
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn atoms(&self) -> &[Functional] {
        &self.atoms
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn flat(&self) -> Vec<f64> {
        self.atoms
            .iter()
            .flat_map(|f| f.0.iter().copied())
            .collect()
    }

    /// `(Σ_k ‖x*_k‖^r)^{1/r}`.
    pub fn aggregate_norm(&self) -> f64 {
        lp_value(
            self.atoms.iter().map(|f| self.space.dual_norm_of(&f.0)),
            self.r,
        )
    }

    pub fn is_feasible(&self) -> bool {
        self.aggregate_norm() <= 1.0 + 1e-12
    }

    /// Rescaled to aggregate norm 1 (unchanged if zero).
    pub fn normalized(&self) -> Self {
        let a = self.aggregate_norm();
        if a > 0.0 {
            self.scaled(1.0 / a)
        } else {
            self.clone()
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        FunctionalFamily {
            space: self.space.clone(),
            atoms: self.atoms.iter().map(|f| f.scaled(factor)).collect(),
            r: self.r,
        }
    }

    pub fn with_r(&self, r: f64) -> Result<Self> {
        Self::new(self.space.clone(), self.atoms.clone(), r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundKind {
    Lower,
    Upper,
    Exact,
}

/// `x_j = τ_j y_j` for every item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factorization {
    pub tau: Vec<f64>,
    pub y: SequenceFamily,
    /// Exponent of the norm applied to `τ`.
    pub tau_exponent: f64,
}

/// Probability weights on finitely many functionals of the dual unit ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    pub atoms: Vec<Functional>,
    pub weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(space: &Space, atoms: Vec<Functional>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Empty("measure has no atoms"));
        }
        if atoms.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: atoms.len(),
                got: weights.len(),
            });
        }
        for f in &atoms {
            space.check_dim(f.0.len())?;
            if space.dual_norm_of(&f.0) > 1.0 + 1e-12 {
                return Err(Error::Infeasible(
                    "measure atom outside the dual unit ball".into(),
                ));
            }
        }
        if weights.iter().any(|w| w.is_nan() || *w < 0.0) {
            return Err(Error::Infeasible("negative measure weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Infeasible(format!(
                "measure weights sum to {total}, not 1"
            )));
        }
        Ok(DiscreteMeasure { atoms, weights })
    }

    pub fn point_mass(space: &Space, atom: Functional) -> Result<Self> {
        Self::new(space, vec![atom], vec![1.0])
    }

    /// Number of atoms with positive weight.
    pub fn support_size(&self) -> usize {
        self.weights.iter().filter(|w| **w > 0.0).count()
    }
}

/// What an estimate was computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Witness {
    /// Direct formula; nothing to certify.
    Closed,
    Functional {
        functional: Functional,
    },
    Family {
        family: FunctionalFamily,
    },
    Factorization {
        factorization: Factorization,
    },
    Measure {
        measure: DiscreteMeasure,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateMeta {
    pub converged: bool,
    pub restarts_used: usize,
    /// Name of the exact mode used, if any.
    pub exact_mode: Option<String>,
    /// Atom count of the best family or measure.
    pub atoms: Option<usize>,
    /// Exchange rounds (mixed norm).
    pub rounds: Option<usize>,
    /// A bound from the other side, when the estimator produces one.
    pub opposite_bound: Option<f64>,
}

impl EstimateMeta {
    pub(crate) fn exact(mode: &str) -> Self {
        EstimateMeta {
            converged: true,
            restarts_used: 0,
            exact_mode: Some(mode.to_string()),
            atoms: None,
            rounds: None,
            opposite_bound: None,
        }
    }

    pub(crate) fn search(converged: bool, restarts_used: usize) -> Self {
        EstimateMeta {
            converged,
            restarts_used,
            exact_mode: None,
            atoms: None,
            rounds: None,
            opposite_bound: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub bound: BoundKind,
    pub witness: Witness,
    pub meta: EstimateMeta,
}

impl NormEstimate {
    pub fn is_exact(&self) -> bool {
        self.bound == BoundKind::Exact
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub restarts: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
    /// Largest atom count tried by the family searches.
    pub max_atoms: usize,
    /// Use enumeration or closed forms when the geometry allows it.
    pub exact_modes: bool,
    pub enumeration_cap: usize,
    pub exchange: ExchangeConfig,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            restarts: 32,
            max_iters: 500,
            tol: 1e-9,
            seed: 0,
            max_atoms: 16,
            exact_modes: true,
            enumeration_cap: crate::spaces::DEFAULT_ENUMERATION_CAP,
            exchange: ExchangeConfig::default(),
        }
    }
}

impl EstimatorConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn without_exact_modes(mut self) -> Self {
        self.exact_modes = false;
        self
    }

    pub(crate) fn multistart(&self, stream: u64) -> MultistartConfig {
        MultistartConfig {
            restarts: self.restarts,
            max_iters: self.max_iters,
            tol: self.tol,
            seed: crate::optimize::mix_seed(self.seed, stream),
        }
    }
}

/// `(Σ_j ‖x_j‖^q)^{1/q}`; `q = ∞` gives the largest norm.
pub fn strong_norm(seq: &SequenceFamily, q: f64) -> Result<NormEstimate> {
    check_exponent("q", q)?;
    Ok(NormEstimate {
        value: lp_value(seq.norms(), q),
        bound: BoundKind::Exact,
        witness: Witness::Closed,
        meta: EstimateMeta::exact("closed-form"),
    })
}

/// `(Σ_j (Σ_k v_k |x*_k(x_j)|^s)^{q/s})^{1/q}` from raw rows.
pub(crate) fn measure_value(
    rows: &[Vec<f64>],
    atoms: &[Vec<f64>],
    weights: &[f64],
    s: f64,
    q: f64,
) -> f64 {
    let inner: Vec<f64> = rows
        .iter()
        .map(|x| {
            let b: f64 = atoms
                .iter()
                .zip(weights)
                .map(|(f, v)| v * dot(f, x).abs().powf(s))
                .sum();
            b.powf(1.0 / s)
        })
        .collect();
    lp_value(inner, q)
}

/// Applies `v ↦ (x*_k(v))_k` and measures the image in ℓ_s.
pub fn psi_apply(fam: &FunctionalFamily, v: &Vector, s: f64) -> Result<(Vec<f64>, f64)> {
    check_exponent("s", s)?;
    if fam.r() > s {
        return Err(Error::InvalidParameter {
            name: "r",
            value: fam.r(),
            reason: "the family's exponent must not exceed s",
        });
    }
    fam.space().check_dim(v.0.len())?;
    let image: Vec<f64> = fam.atoms().iter().map(|f| dot(&f.0, &v.0)).collect();
    let s_norm = lp_value(image.iter().copied(), s);
    Ok((image, s_norm))
}

/// Both sides of `(Σ_j Σ_k |x*_k(x_j)|^s)^{1/s} ≤ ‖(x*_k)‖_r · ‖(x_j)‖_{w,s}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderSides {
    pub lhs: f64,
    pub rhs: f64,
}

pub fn holder_mixed_bound(
    seq: &SequenceFamily,
    fam: &FunctionalFamily,
    s: f64,
    config: &EstimatorConfig,
) -> Result<HolderSides> {
    check_space(seq.space(), fam.space())?;
    check_exponent("s", s)?;
    let lhs = lp_value(
        seq.items()
            .iter()
            .flat_map(|x| fam.atoms().iter().map(move |f| dot(&f.0, &x.0))),
        s,
    );
    let rhs = fam.aggregate_norm() * weak_norm(seq, s, config)?.value;
    Ok(HolderSides { lhs, rhs })
}

pub(crate) fn check_space(a: &Space, b: &Space) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    if a != b {
        return Err(Error::InvalidParameter {
            name: "space",
            value: f64::NAN,
            reason: "sequence and family live on different spaces",
        });
    }
    Ok(())
}

/// `q s / (s − q)`, the exponent with `1/t = 1/q − 1/s` (∞ when `q = s`).
pub fn mixed_conjugate(s: f64, q: f64) -> f64 {
    if q >= s {
        f64::INFINITY
    } else if s.is_infinite() {
        q
    } else {
        q * s / (s - q)
    }
}

/// Smallest power of two that is at least `n`.
pub(crate) fn next_pow2(n: usize) -> usize {
    n.max(1).next_power_of_two()
}
