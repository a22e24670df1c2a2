//! Property harness: runs each registered claim on seeded random instances
//! and reports measured gaps against a tolerance.
//!
//! Every check reduces to records whose `gap` is nonnegative when the claim
//! is violated by that amount; a check passes when every gap is at most its
//! tolerance. A failing record produced by a search that did not converge
//! makes the check inconclusive instead of failed.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::opnorms::{
    aniso_summing_norm, ideal_check, injectivity_check, psi_compose_check, weakly_aniso_norm,
    LinearOperator, OpNormEstimate, WeakParams,
};
use crate::optimize::{mix_seed, rng_for};
use crate::pietsch::{
    build_dual_grid, build_family_grid, domination_lp_aniso, domination_lp_weak, standard_tests,
    DominationOptions,
};
use crate::seqnorms::{
    aniso_norm, aniso_norm_with_starts, mixed_upper, strong_norm, weak_norm, EstimatorConfig,
    FunctionalFamily, NormEstimate, SequenceFamily, Witness,
};
use crate::spaces::{Functional, NormKind, Space};

/// Registered check: id, claim, default tolerance and instance count.
struct Entry {
    id: &'static str,
    claim: &'static str,
    tolerance: f64,
    instances: usize,
    note: Option<&'static str>,
}

const CATALOGUE: &[Entry] = &[
    Entry {
        id: "chain",
        claim: "weak q norm <= anisotropic (s,q,r) norm <= strong q norm",
        tolerance: 1e-9,
        instances: 12,
        note: None,
    },
    Entry {
        id: "equality",
        claim: "mixed (s;q) norm equals the anisotropic (s,q,s) norm",
        tolerance: 1e-2,
        instances: 6,
        note: Some("gap is relative: mixed upper bound against anisotropic lower bound"),
    },
    Entry {
        id: "dr-growth",
        claim:
            "strong/anisotropic ratio at the unit basis of l_2^n is sqrt(n) and strictly increasing",
        tolerance: 1e-6,
        instances: 4,
        note: Some("finite-dimensional direction only: unbounded growth of the ratio with n"),
    },
    Entry {
        id: "qs-collapse",
        claim: "mixed (s;s) norm equals the weak s norm",
        tolerance: 1e-6,
        instances: 8,
        note: Some("gap is |mixed - weak| / (1 + weak)"),
    },
    Entry {
        id: "monotone",
        claim: "anisotropic norms shrink as (s,q) grow and r shrinks",
        tolerance: 1e-9,
        instances: 6,
        note: Some("the smaller-index search is seeded with the larger-index family"),
    },
    Entry {
        id: "ideal",
        claim: "w(S T R) <= |S| w(T) |R| for the weakly anisotropic norm",
        tolerance: 1e-6,
        instances: 4,
        note: Some("the search for T is seeded with the mapped composite witness"),
    },
    Entry {
        id: "injective",
        claim: "the weakly anisotropic norm is unchanged by a zero-padding isometry",
        tolerance: 1e-6,
        instances: 4,
        note: Some("finite-dimensional direction only: padding by one coordinate"),
    },
    Entry {
        id: "psi",
        claim: "pi_{q,p}(Psi T) <= weakly anisotropic (s,q,r;p) norm of T for feasible families",
        tolerance: 1e-6,
        instances: 4,
        note: None,
    },
    Entry {
        id: "lp-vs-search-weak",
        claim: "minimal weak domination constant equals the weakly anisotropic norm",
        tolerance: 5e-2,
        instances: 2,
        note: Some("one measure per witness family; residuals reported alongside"),
    },
    Entry {
        id: "lp-vs-search-aniso",
        claim: "minimal anisotropic domination constant equals the anisotropic summing norm",
        tolerance: 5e-2,
        instances: 2,
        note: Some("residuals reported alongside"),
    },
    Entry {
        id: "monotone-exponent",
        claim: "minimal anisotropic domination constant does not grow with p",
        tolerance: 1e-6,
        instances: 3,
        note: Some("gap is 1 - C(1)/C(2) on a shared grid"),
    },
    Entry {
        id: "scalar-collapse",
        claim: "on scalar sequences the anisotropic norm is the l_q norm",
        tolerance: 1e-8,
        instances: 12,
        note: None,
    },
    Entry {
        id: "unit-basis",
        claim: "a single vector in slot j has anisotropic norm equal to its own norm",
        tolerance: 1e-9,
        instances: 8,
        note: None,
    },
];

fn entry(id: &str) -> Result<&'static Entry> {
    CATALOGUE
        .iter()
        .find(|e| e.id == id)
        .ok_or_else(|| Error::UnknownCheck(id.to_string()))
}

/// Ids of every registered check, in report order.
pub fn check_ids() -> Vec<&'static str> {
    CATALOGUE.iter().map(|e| e.id).collect()
}

/// One check to run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSpec {
    pub id: String,
    pub seed: u64,
    pub tolerance: f64,
    pub instances: usize,
    pub restarts: usize,
    pub tol: f64,
    pub grid: usize,
    pub tests: usize,
}

impl CheckSpec {
    /// Catalogue defaults for `id` with the given seed.
    pub fn new(id: &str, seed: u64) -> Result<Self> {
        let e = entry(id)?;
        Ok(CheckSpec {
            id: e.id.to_string(),
            seed,
            tolerance: e.tolerance,
            instances: e.instances,
            restarts: 32,
            tol: 1e-9,
            grid: 64,
            tests: 64,
        })
    }

    fn estimator(&self, instance: usize) -> EstimatorConfig {
        let mut cfg = EstimatorConfig::default()
            .with_restarts(self.restarts)
            .with_seed(mix_seed(self.seed, 1 + instance as u64));
        cfg.tol = self.tol;
        cfg
    }

    /// Configuration for the operator searches, which cap restarts at 8.
    fn op_estimator(&self, instance: usize) -> EstimatorConfig {
        let mut cfg = self.estimator(instance);
        cfg.restarts = cfg.restarts.min(8);
        cfg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub label: String,
    pub values: BTreeMap<String, f64>,
    pub gap: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub id: String,
    pub claim: String,
    pub status: CheckStatus,
    pub tolerance: f64,
    pub seed: u64,
    pub instances: usize,
    pub max_gap: f64,
    pub records: Vec<CheckRecord>,
    pub note: Option<String>,
}

fn status_of(records: &[CheckRecord], tolerance: f64) -> CheckStatus {
    let failing: Vec<&CheckRecord> = records
        .iter()
        .filter(|r| r.gap.is_nan() || r.gap > tolerance)
        .collect();
    if failing.is_empty() {
        CheckStatus::Pass
    } else if failing.iter().any(|r| !r.converged) {
        CheckStatus::Inconclusive
    } else {
        CheckStatus::Fail
    }
}

/// Runs one check on its generated instances.
pub fn run_check(spec: &CheckSpec) -> Result<CheckReport> {
    let e = entry(&spec.id)?;
    let mut rng = rng_for(spec.seed, 0);
    let records = match e.id {
        "chain" => chain(spec, &mut rng)?,
        "equality" => equality(spec, &mut rng)?,
        "dr-growth" => dr_growth(spec)?,
        "qs-collapse" => qs_collapse(spec, &mut rng)?,
        "monotone" => monotone(spec, &mut rng)?,
        "ideal" => ideal(spec, &mut rng)?,
        "injective" => injective(spec, &mut rng)?,
        "psi" => psi(spec, &mut rng)?,
        "lp-vs-search-weak" => lp_vs_search_weak(spec, &mut rng)?,
        "lp-vs-search-aniso" => lp_vs_search_aniso(spec, &mut rng)?,
        "monotone-exponent" => monotone_exponent(spec, &mut rng)?,
        "scalar-collapse" => scalar_collapse(spec, &mut rng)?,
        "unit-basis" => unit_basis(spec, &mut rng)?,
        other => return Err(Error::UnknownCheck(other.to_string())),
    };
    Ok(report(spec, e, records, None))
}

fn report(
    spec: &CheckSpec,
    e: &Entry,
    records: Vec<CheckRecord>,
    error: Option<String>,
) -> CheckReport {
    let max_gap = records.iter().fold(0.0_f64, |m, r| m.max(r.gap));
    let status = if error.is_some() {
        CheckStatus::Fail
    } else {
        status_of(&records, spec.tolerance)
    };
    let note = match (error, e.note) {
        (Some(err), _) => Some(format!("error: {err}")),
        (None, n) => n.map(str::to_string),
    };
    CheckReport {
        id: e.id.to_string(),
        claim: e.claim.to_string(),
        status,
        tolerance: spec.tolerance,
        seed: spec.seed,
        instances: spec.instances,
        max_gap,
        records,
        note,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    pub restarts: usize,
    pub tol: f64,
    pub grid: usize,
    pub tests: usize,
    /// Check ids to run; empty runs the whole catalogue.
    pub checks: Vec<String>,
    /// Replaces every catalogue tolerance when set.
    pub tolerance: Option<f64>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 0,
            restarts: 32,
            tol: 1e-9,
            grid: 64,
            tests: 64,
            checks: Vec::new(),
            tolerance: None,
        }
    }
}

impl SuiteConfig {
    /// Hex SHA-256 of the configuration's JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Specs for the selected checks, in catalogue order.
    pub fn specs(&self) -> Result<Vec<CheckSpec>> {
        for id in &self.checks {
            entry(id)?;
        }
        CATALOGUE
            .iter()
            .filter(|e| self.checks.is_empty() || self.checks.iter().any(|c| c == e.id))
            .map(|e| {
                let mut spec = CheckSpec::new(e.id, check_seed(self.seed, e.id))?;
                spec.restarts = self.restarts;
                spec.tol = self.tol;
                spec.grid = self.grid;
                spec.tests = self.tests;
                if let Some(t) = self.tolerance {
                    spec.tolerance = t;
                }
                Ok(spec)
            })
            .collect()
    }
}

/// Per-check seed derived from the master seed and the check id.
pub fn check_seed(master: u64, id: &str) -> u64 {
    let digest = Sha256::digest(id.as_bytes());
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    mix_seed(master, u64::from_le_bytes(head))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SuiteCounts {
    pub pass: usize,
    pub fail: usize,
    pub inconclusive: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub version: u32,
    pub seed: u64,
    pub config_hash: String,
    pub config: SuiteConfig,
    pub checks: Vec<CheckReport>,
    pub counts: SuiteCounts,
}

impl SuiteReport {
    pub fn all_pass(&self) -> bool {
        self.counts.fail == 0 && self.counts.inconclusive == 0
    }
}

/// Runs the selected checks in parallel; an estimator error inside a check
/// is recorded as a failure of that check.
pub fn run_suite(config: &SuiteConfig) -> Result<SuiteReport> {
    let specs = config.specs()?;
    let checks: Vec<CheckReport> = specs
        .par_iter()
        .map(|spec| {
            run_check(spec).unwrap_or_else(|err| {
                let e = entry(&spec.id).expect("validated id");
                report(spec, e, Vec::new(), Some(err.to_string()))
            })
        })
        .collect();
    let mut counts = SuiteCounts::default();
    for c in &checks {
        match c.status {
            CheckStatus::Pass => counts.pass += 1,
            CheckStatus::Fail => counts.fail += 1,
            CheckStatus::Inconclusive => counts.inconclusive += 1,
        }
    }
    Ok(SuiteReport {
        version: 1,
        seed: config.seed,
        config_hash: config.hash(),
        config: config.clone(),
        checks,
        counts,
    })
}

const KINDS: [NormKind; 5] = [
    NormKind::Lp(1.0),
    NormKind::Lp(1.5),
    NormKind::Lp(2.0),
    NormKind::Lp(3.0),
    NormKind::Inf,
];

const ANISO_PARAMS: [(f64, f64, f64); 4] = [
    (2.0, 1.0, 2.0),
    (3.0, 2.0, 2.0),
    (3.0, 1.5, 3.0),
    (4.0, 2.0, 1.0),
];

const WEAK_PARAMS: [WeakParams; 3] = [
    WeakParams {
        s: 2.0,
        q: 1.0,
        r: 2.0,
        p: 1.0,
    },
    WeakParams {
        s: 3.0,
        q: 2.0,
        r: 2.0,
        p: 1.0,
    },
    WeakParams {
        s: 3.0,
        q: 1.5,
        r: 3.0,
        p: 1.5,
    },
];

fn entries(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| (0..cols).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect()
}

fn random_space(rng: &mut ChaCha8Rng, max_dim: usize) -> Space {
    let d = rng.random_range(1..=max_dim);
    Space::new(d, KINDS[rng.random_range(0..KINDS.len())]).expect("valid space")
}

fn random_sequence(rng: &mut ChaCha8Rng) -> SequenceFamily {
    let space = random_space(rng, 4);
    let m = rng.random_range(1..=4);
    let d = space.dim();
    SequenceFamily::from_rows(space, entries(rng, m, d)).expect("valid sequence")
}

fn random_operator(rng: &mut ChaCha8Rng, dom: Space, cod: Space) -> Result<LinearOperator> {
    let m = entries(rng, cod.dim(), dom.dim());
    LinearOperator::new(dom, cod, m)
}

/// Two-dimensional Euclidean domain into ℓ_1, ℓ_2 or ℓ_∞.
fn domination_operator(rng: &mut ChaCha8Rng, i: usize) -> Result<LinearOperator> {
    let dom = Space::lp(2, 2.0)?;
    let cod = Space::new(
        2,
        [NormKind::Lp(1.0), NormKind::Lp(2.0), NormKind::Inf][i % 3],
    )?;
    random_operator(rng, dom, cod)
}

fn rel(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn record(label: String, values: &[(&str, f64)], gap: f64, converged: bool) -> CheckRecord {
    CheckRecord {
        label,
        values: values.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        gap,
        converged,
    }
}

fn conv(e: &NormEstimate) -> bool {
    e.meta.converged
}

fn functionals(e: &OpNormEstimate) -> Result<FunctionalFamily> {
    e.witness_functionals
        .clone()
        .ok_or_else(|| Error::Numeric("estimate carries no functional family".into()))
}

fn chain(spec: &CheckSpec, rng: &mut ChaCha8Rng) -> Result<Vec<CheckRecord>> {
    (0..spec.instances)
        .map(|i| {
            let seq = random_sequence(rng);
            let (s, q, r) = ANISO_PARAMS[i % ANISO_PARAMS.len()];
            let cfg = spec.estimator(i);
            let w = weak_norm(&seq, q, &cfg)?;
            let a = aniso_norm(&seq, s, q, r, &cfg)?;
            let st = strong_norm(&seq, q)?.value;
            let high = if st == 0.0 { 0.0 } else { a.value / st - 1.0 };
            let gap = (w.value - a.value).max(high).max(0.0);
            Ok(record(
                format!(
                    "dim {} m {} (s,q,r)=({s},{q},{r})",
                    seq.space().dim(),
                    seq.len()
                ),
                &[("weak", w.value), ("aniso", a.value), ("strong", st)],
                gap,
                conv(&w) && conv(&a),
            ))
        })
        .collect()
}

fn equality(spec: &CheckSpec, rng: &mut ChaCha8Rng) -> Result<Vec<CheckRecord>> {
    let params = [(2.0, 1.0), (3.0, 2.0), (3.0, 1.5)];
    (0..spec.instances)
        .map(|i| {
            let seq = random_sequence(rng);
            let (s, q) = params[i % params.len()];
            let cfg = spec.estimator(i);
            let up = mixed_upper(&seq, s, q, &cfg)?;
            let low = aniso_norm(&seq, s, q, s, &cfg)?;
            Ok(record(
                format!("dim {} m {} (s,q)=({s},{q})", seq.space().dim(), seq.len()),
                &[("mixed_upper", up.value), ("aniso", low.value)],
                rel(up.value, low.value),
                conv(&up) && conv(&low),
            ))
        })
        .collect()
}

fn dr_growth(spec: &CheckSpec) -> Result<Vec<CheckRecord>> {
    let mut out = Vec::new();
    let mut prev: Option<(usize, f64)> = None;
    for (i, n) in [1usize, 2, 4, 8]
        .into_iter()
        .take(spec.instances.max(1))
        .enumerate()
    {
        let space = Space::lp(n, 2.0)?;
        let rows = (0..n)
            .map(|j| (0..n).map(|k| if j == k { 1.0 } else { 0.0 }).collect())
            .collect();
        let seq = SequenceFamily::from_rows(space, rows)?;
        let mut cfg = spec.estimator(i);
        cfg.max_atoms = cfg.max_atoms.max(n);
        let a = aniso_norm(&seq, 2.0, 1.0, 2.0, &cfg)?;
        let st = strong_norm(&seq, 1.0)?.value;
        let ratio = st / a.value;
        let expected = (n as f64).sqrt();
        out.push(record(
            format!("n {n}"),
            &[("aniso", a.value), ("strong", st), ("ratio", ratio)],
            (ratio - expected).abs() / expected,
            conv(&a),
        ));
        if let Some((pn, pr)) = prev {
            let step = expected - (pn as f64).sqrt();
            out.push(record(
                format!("increase n {pn} -> {n}"),
                &[("previous_ratio", pr), ("ratio", ratio)],
                (1.0 - (ratio - pr) / step).max(0.0),
                conv(&a),
            ));
        }
        prev = Some((n, ratio));
    }
    Ok(out)
}

fn qs_collapse(spec: &CheckSpec, rng: &mut ChaCha8Rng) -> Result<Vec<CheckRecord>> {
    (0..spec.instances)
        .map(|i| {
            let seq = random_sequence(rng);
            let s = [1.5, 2.0, 3.0][i % 3];
            let cfg = spec.estimator(i);
            let up = mixed_upper(&seq, s, s, &cfg)?;
            let w = weak_norm(&seq, s, &cfg)?;
            Ok(record(
                format!("dim {} m {} s {s}", seq.space().dim(), seq.len()),
                &[("mixed_upper", up.value), ("weak", w.value)],
                (up.value - w.value).abs() / (1.0 + w.value),
                conv(&up) && conv(&w),
            ))
        })
        .collect()
}

fn monotone(spec: &CheckSpec, rng: &mut ChaCha8Rng) -> Result<Vec<CheckRecord>> {
    // (smaller indices, larger indices) with r2 <= r1 <= s1 <= s2, q1 <= q2 < s2, q1 < s1.
    let pairs = [
        ((2.0, 1.0, 2.0), (3.0, 2.0, 1.0)),
        ((3.0, 1.5, 2.0), (4.0, 2.0, 1.5)),
        ((2.0, 1.0, 1.0), (2.0, 1.5, 1.0)),
    ];
    (0..spec.instances)
        .map(|i| {
            let seq = random_sequence(rng);
            let ((s1, q1, r1), (s2, q2, r2)) = pairs[i % pairs.len()];
            let cfg = spec.estimator(i);
            let big = aniso_norm(&seq, s2, q2, r2, &cfg)?;
            let warm = match &big.witness {
                Witness::Family { family } => vec![family.with_r(r1)?],
                _ => Vec::new(),
            };
            let small = aniso_norm_with_starts(&seq, s1, q1, r1, &cfg, &warm)?;
            let gap = if big.value == 0.0 {
                0.0
            } else {
                (1.0 - small.value / big.value).max(0.0)
            };
            Ok(record(
                format!(
                    "dim {} m {} ({s1},{q1},{r1}) vs ({s2},{q2},{r2})",
                    seq.space().dim(),
                    seq.len()
                ),
                &[
                    ("smaller_indices", small.value),
                    ("larger_indices", big.value),
                ],
                gap,
                conv(&small) && conv(&big),
            ))
        })
        .collect()
}

fn ideal(spec: &CheckSpec, rng: &mut ChaCha8Rng) -> Result<Vec<CheckRecord>> {
    let vertex = |rng: &mut ChaCha8Rng| {
        let d = rng.random_range(1..=3);
        let kind = [NormKind::Lp(1.0), NormKind::Inf][rng.random_range(0..2)];
        Space::new(d, kind).expect("valid space")
    };
    (0..spec.instances)
        .map(|i| {
            let u0 = vertex(rng);
            let u = random_space(rng, 3);
            let x = vertex(rng);
            let x1 = random_space(rng, 3);
            let rop = random_operator(rng, u0, u.clone())?;
            let top = random_operator(rng, u, x.clone())?;
            let sop = random_operator(rng, x, x1)?;
            let params = WEAK_PARAMS[i % WEAK_PARAMS.len()];
            let c = ideal_check(&sop, &top, &rop, params, 3, 3, &spec.op_estimator(i))?;
            Ok(record(
                format!(
                    "(s,q,r;p)=({},{},{};{})",
                    params.s, params.q, params.r, params.p
                ),
                &[
                    ("composite", c.composite),
                    ("inner", c.inner),
                    ("norm_outer", c.norm_outer),
                    ("norm_inner", c.norm_inner),
                ],
                c.excess.max(0.0),
                c.converged && c.exact_norms,
            ))
        })
        .collect()
}

fn injective(spec: &CheckSpec, rng: &mut ChaCha8Rng) -> Result<Vec<CheckRecord>> {
    (0..spec.instances)
        .map(|i| {
            let dom = random_space(rng, 3);
            let cod = random_space(rng, 3);
            let t = random_operator(rng, dom, cod)?;
            let params = WEAK_PARAMS[i % WEAK_PARAMS.len()];
            let c = injectivity_check(&t, params, 3, 3, &spec.op_estimator(i), 6)?;
            Ok(record(
                format!(
                    "{}x{} (s,q,r;p)=({},{},{};{})",
                    t.codomain().dim(),
                    t.domain().dim(),
                    params.s,
                    params.q,
                    params.r,
                    params.p
                ),
                &[
                    ("original", c.original),
                    ("padded", c.padded),
                    ("rounds", c.rounds as f64),
                ],
                c.relative_gap,
                c.converged,
            ))
        })
        .collect()
}

fn psi(spec: &CheckSpec, rng: &mut ChaCha8Rng) -> Result<Vec<CheckRecord>> {
    (0..spec.instances)
        .map(|i| {
            let dom = random_space(rng, 3);
            let cod = random_space(rng, 3);
            let t = random_operator(rng, dom, cod.clone())?;
            let params = WEAK_PARAMS[i % WEAK_PARAMS.len()];
            let k = rng.random_range(1..=3);
            let atoms = entries(rng, k, cod.dim())
                .into_iter()
                .map(Functional)
                .collect();
            let fam = FunctionalFamily::new(cod, atoms, params.r)?.normalized();
            let c = psi_compose_check(
                &t,
                &fam,
                params.s,
                params.q,
                params.p,
                3,
                &spec.op_estimator(i),
            )?;
            let gap = if c.wa_value == 0.0 {
                c.piqp_value
            } else {
                (c.piqp_value / c.wa_value - 1.0).max(0.0)
            };
            Ok(record(
                format!(
                    "K {k} (s,q,r;p)=({},{},{};{})",
                    params.s, params.q, params.r, params.p
                ),
                &[
                    ("pi_qp_of_composite", c.piqp_value),
                    ("weakly_aniso", c.wa_value),
                ],
                gap,
                c.piqp.converged && c.wa.converged,
            ))
        })
        .collect()
}

fn lp_vs_search_weak(spec: &CheckSpec, rng: &mut ChaCha8Rng) -> Result<Vec<CheckRecord>> {
    let opts = DominationOptions::default();
    (0..spec.instances)
        .map(|i| {
            let t = domination_operator(rng, i)?;
            let seed = mix_seed(spec.seed, 1 + i as u64);
            let w = weakly_aniso_norm(&t, 2.0, 1.0, 2.0, 1.0, 4, 4, &spec.estimator(i))?;
            let grid = build_dual_grid(t.domain(), spec.grid, seed)?;
            let tests = standard_tests(t.domain(), spec.tests, seed, &w.witness_vectors.rows());
            let d =
                domination_lp_weak(&t, 2.0, 1.0, 2.0, &grid, &[functionals(&w)?], &tests, &opts)?;
            Ok(record(
                format!("l2^2 -> {:?} (s,q,r;p)=(2,1,2;1)", t.codomain().kind()),
                &[
                    ("constant", d.c),
                    ("search", w.value),
                    ("train_residual", d.train_residual),
                    ("holdout_residual", d.holdout_residual),
                ],
                rel(d.c, w.value),
                w.converged,
            ))
        })
        .collect()
}

fn lp_vs_search_aniso(spec: &CheckSpec, rng: &mut ChaCha8Rng) -> Result<Vec<CheckRecord>> {
    let opts = DominationOptions::default();
    (0..spec.instances)
        .map(|i| {
            let t = domination_operator(rng, i)?;
            let seed = mix_seed(spec.seed, 1 + i as u64);
            let a = aniso_summing_norm(&t, 1.0, 2.0, 1.0, 2.0, 4, &spec.estimator(i))?;
            let mut fams = build_family_grid(t.domain(), 2.0, spec.grid, seed)?;
            fams.push(functionals(&a)?);
            let tests = standard_tests(t.domain(), spec.tests, seed, &a.witness_vectors.rows());
            let d = domination_lp_aniso(&t, 1.0, 2.0, 2.0, &fams, &tests, &opts)?;
            Ok(record(
                format!("l2^2 -> {:?} (p;s,q,r)=(1;2,1,2)", t.codomain().kind()),
                &[
                    ("constant", d.c),
                    ("search", a.value),
                    ("train_residual", d.train_residual),
                    ("holdout_residual", d.holdout_residual),
                ],
                rel(d.c, a.value),
                a.converged,
            ))
        })
        .collect()
}

fn monotone_exponent(spec: &CheckSpec, rng: &mut ChaCha8Rng) -> Result<Vec<CheckRecord>> {
    let opts = DominationOptions::default().without_refinement();
    (0..spec.instances)
        .map(|i| {
            let t = domination_operator(rng, i)?;
            let seed = mix_seed(spec.seed, 1 + i as u64);
            let fams = build_family_grid(t.domain(), 2.0, spec.grid, seed)?;
            let tests = standard_tests(t.domain(), spec.tests, seed, &[]);
            let c1 = domination_lp_aniso(&t, 1.0, 2.0, 2.0, &fams, &tests, &opts)?.c;
            let c2 = domination_lp_aniso(&t, 2.0, 2.0, 2.0, &fams, &tests, &opts)?.c;
            let gap = if c2 == 0.0 {
                0.0
            } else {
                (1.0 - c1 / c2).max(0.0)
            };
            Ok(record(
                format!("l2^2 -> {:?}", t.codomain().kind()),
                &[("constant_p1", c1), ("constant_p2", c2)],
                gap,
                true,
            ))
        })
        .collect()
}

fn scalar_collapse(spec: &CheckSpec, rng: &mut ChaCha8Rng) -> Result<Vec<CheckRecord>> {
    (0..spec.instances)
        .map(|i| {
            let m = rng.random_range(1..=4);
            let space = Space::new(1, KINDS[rng.random_range(0..KINDS.len())])?;
            let seq = SequenceFamily::from_rows(space, entries(rng, m, 1))?;
            let (s, q, r) = ANISO_PARAMS[i % ANISO_PARAMS.len()];
            let a = aniso_norm(&seq, s, q, r, &spec.estimator(i))?;
            let st = strong_norm(&seq, q)?.value;
            Ok(record(
                format!("m {m} (s,q,r)=({s},{q},{r})"),
                &[("aniso", a.value), ("strong", st)],
                (a.value - st).abs(),
                conv(&a),
            ))
        })
        .collect()
}

fn unit_basis(spec: &CheckSpec, rng: &mut ChaCha8Rng) -> Result<Vec<CheckRecord>> {
    (0..spec.instances)
        .map(|i| {
            // Even instances place a scalar 1, odd ones a random vector.
            let space = if i % 2 == 0 {
                Space::lp(1, 2.0)?
            } else {
                random_space(rng, 4)
            };
            let m = rng.random_range(1..=4);
            let j = rng.random_range(0..m);
            let u = if i % 2 == 0 {
                vec![1.0]
            } else {
                entries(rng, 1, space.dim()).remove(0)
            };
            let mut rows = vec![vec![0.0; space.dim()]; m];
            rows[j] = u.clone();
            let expected = space.norm_of(&u);
            let seq = SequenceFamily::from_rows(space, rows)?;
            let (s, q, r) = ANISO_PARAMS[i % ANISO_PARAMS.len()];
            let a = aniso_norm(&seq, s, q, r, &spec.estimator(i))?;
            Ok(record(
                format!(
                    "dim {} slot {j} of {m} (s,q,r)=({s},{q},{r})",
                    seq.space().dim()
                ),
                &[("aniso", a.value), ("norm", expected)],
                (a.value - expected).abs() / expected.max(f64::MIN_POSITIVE),
                conv(&a),
            ))
        })
        .collect()
}
