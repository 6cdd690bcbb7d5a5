//! Experiment orchestration: condition audits, Exel-formula sweeps,
//! perturbation stability probes and trace-lattice audits, with
//! deterministic JSON and CSV output.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::appendix4d::{four_torus_table, rieffel_type_4d, BumpProfile, KChoice};
use crate::ncrep::{build_rep, clock_shift_tuple, log_branch, perturb, UnitaryTuple, C64, DEFAULT_DIM_CAP};
use crate::projections::{default_epsilon, e_i, r_theta, rieffel_table, CoefficientTable, RieffelFunctions, Truncation};
use crate::scalar::rational;
use crate::schurflow::{
    check_conditions, check_strong, lattice_decompose, lattice_decompose_in, CheckOptions, ConditionReport,
    Generator, StrongReport, StrongVariant,
};
use crate::skewmat::{pfaffian_minor, AnySkew, IndexSet, SkewMatrix};
use crate::superinc::{build_theta, independence_certificate, validate_u64, Certificate, SuperIncreasingSeq, DEMO_ALPHA};
use crate::{Error, Result};

/// Where Θ comes from.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ThetaSource {
    /// A skew-matrix JSON file.
    File { path: PathBuf },
    /// The same JSON inline.
    Matrix { matrix: Value },
    /// Upper entries, row by row, as numerators over `denominator`.
    Grid { denominator: i64, upper: Vec<i64> },
    /// The α-power matrix of a super-increasing sequence (powers of two when
    /// `terms` is absent).
    Superinc { n: usize, terms: Option<Vec<u64>> },
}

impl Default for ThetaSource {
    fn default() -> Self {
        Self::Grid { denominator: 8, upper: vec![3] }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Margin for the (0,1) and non-integer checks in float mode.
    pub check: f64,
    /// Evaluation point for α-mode matrices.
    pub alpha: f64,
    /// Allowed trace drift under perturbation.
    pub trace: f64,
    /// Allowed Exel-formula residual.
    pub exel: f64,
    /// Lattice-membership residual.
    pub lattice: f64,
    /// Largest ‖e² − e‖ of a source element still counted as gapped. With
    /// spectrum in [0, 1] this is 1/4 − gap², so 0.24 asks for a gap of 0.1
    /// around 1/2; at exactly 1/4 the rank can flip unnoticed.
    pub idem_limit: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { check: 1e-9, alpha: DEMO_ALPHA, trace: 1e-6, exel: 1e-6, lattice: 1e-8, idem_limit: 0.24 }
    }
}

/// A rational rotation θ = p/q realized by clock and shift matrices.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RationalCell {
    pub p: i64,
    pub q: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub theta: ThetaSource,
    /// Representation size per generator.
    pub q: usize,
    /// Perturbation sizes, ascending.
    pub deltas: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Ramp width of the Rieffel functions; min(θ, 1−θ)/2 when absent.
    pub eps: Option<f64>,
    pub exel_cells: Vec<RationalCell>,
    /// Extra values for the trace audit, e.g. non-member controls.
    pub audit_values: Vec<f64>,
    /// Coefficient bound of lattice decompositions.
    pub bound: i64,
    pub bisection_steps: usize,
    pub dim_cap: usize,
    pub tol: Tolerances,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            theta: ThetaSource::default(),
            q: 8,
            deltas: vec![0.0, 1e-3, 1e-2, 3e-2, 1e-1, 0.3, 1.0, 2.0],
            seeds: (0..10).collect(),
            eps: None,
            exel_cells: vec![RationalCell { p: 3, q: 8 }, RationalCell { p: 6, q: 16 }, RationalCell { p: 2, q: 5 }],
            audit_values: Vec::new(),
            bound: 5,
            bisection_steps: 8,
            dim_cap: DEFAULT_DIM_CAP,
            tol: Tolerances::default(),
        }
    }
}

/// Version tag of every emitted record layout.
pub const SCHEMA_VERSION: &str = "1";

impl ExperimentConfig {
    /// Reads TOML or JSON, chosen by extension.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let cfg: Self = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => serde_json::from_str(&text)?,
            _ => toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.tol;
        let tols = [t.check, t.trace, t.exel, t.lattice, t.idem_limit];
        if tols.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if !(t.alpha > 0.0 && t.alpha < 1.0) {
            return Err(Error::Config(format!("alpha {} is outside (0, 1)", t.alpha)));
        }
        if self.deltas.iter().any(|&d| !(d >= 0.0)) || self.deltas.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("deltas must be non-negative and strictly ascending".into()));
        }
        if self.q == 0 || self.bound < 1 {
            return Err(Error::Config("q and bound must be positive".into()));
        }
        if self.exel_cells.iter().any(|c| c.q == 0 || c.q > self.dim_cap) {
            return Err(Error::Config("exel cell q must lie in 1..=dim_cap".into()));
        }
        Ok(())
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))[..16].to_string()
    }

    pub fn load_theta(&self) -> Result<AnySkew> {
        match &self.theta {
            ThetaSource::File { path } => AnySkew::from_json(&serde_json::from_str(&fs::read_to_string(path)?)?),
            ThetaSource::Matrix { matrix } => AnySkew::from_json(matrix),
            ThetaSource::Grid { denominator, upper } => {
                let n = grid_size(upper.len())?;
                let mut it = upper.iter();
                let m = SkewMatrix::from_upper(n, |_, _| rational(*it.next().unwrap(), *denominator));
                Ok(AnySkew::Rational(m))
            }
            ThetaSource::Superinc { n, terms } => Ok(AnySkew::Alpha(build_theta(&self.sequence(*n, terms)?, *n)?)),
        }
    }

    fn sequence(&self, n: usize, terms: &Option<Vec<u64>>) -> Result<SuperIncreasingSeq> {
        match terms {
            Some(t) => validate_u64(t),
            None => Ok(SuperIncreasingSeq::pow2_for(n)),
        }
    }

    fn rational_theta(&self) -> Result<SkewMatrix<BigRational>> {
        match self.load_theta()? {
            AnySkew::Rational(m) => Ok(m),
            _ => Err(Error::Config("this experiment needs a rational theta".into())),
        }
    }

    fn meta(&self) -> Meta {
        Meta { schema: SCHEMA_VERSION, config_hash: self.hash(), tol: self.tol.clone() }
    }
}

fn grid_size(len: usize) -> Result<usize> {
    (2..=16)
        .find(|n| n * (n - 1) / 2 == len)
        .ok_or_else(|| Error::Config(format!("{len} upper entries do not fill a skew matrix")))
}

/// Provenance attached to every report.
#[derive(Clone, Debug, Serialize)]
pub struct Meta {
    pub schema: &'static str,
    pub config_hash: String,
    pub tol: Tolerances,
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditReport {
    pub meta: Meta,
    pub n: usize,
    pub mode: &'static str,
    /// Conditions on the full matrix; absent for odd n.
    pub full: Option<ConditionReport>,
    pub strong: StrongReport,
    pub all_minors: StrongReport,
    pub certificate: Option<Certificate>,
    pub verdict: bool,
}

fn audit_with<T: crate::schurflow::RatioProbe>(m: &SkewMatrix<T>, opts: &CheckOptions) -> Result<(Option<ConditionReport>, StrongReport, StrongReport)> {
    let full = if m.n().is_multiple_of(2) { Some(check_conditions(m, opts)?) } else { None };
    Ok((full, check_strong(m, StrongVariant::Strong, opts)?, check_strong(m, StrongVariant::AllMinors, opts)?))
}

/// Clock and shift on ℂ^q for a single pair, the q^n representation otherwise.
/// Both carry the same normalized traces.
pub fn exact_rep(theta: &SkewMatrix<BigRational>, q: usize, dim_cap: usize) -> Result<UnitaryTuple> {
    if theta.n() != 2 {
        return build_rep(theta, q, dim_cap);
    }
    let scaled = theta.theta(1, 2) * BigRational::from_integer(q.into());
    let p = scaled
        .is_integer()
        .then(|| scaled.to_integer().to_i64())
        .flatten()
        .ok_or_else(|| Error::NotRational(format!("theta_12 = {} with q = {q}", theta.theta(1, 2))))?;
    if q > dim_cap {
        return Err(Error::DimCapExceeded { dim: q, cap: dim_cap });
    }
    Ok(clock_shift_tuple(p, q))
}

/// Runs the existence conditions on Θ and on every even minor, plus the
/// independence certificate for super-increasing sources.
pub fn run_condition_audit(cfg: &ExperimentConfig) -> Result<AuditReport> {
    let theta = cfg.load_theta()?;
    let opts = CheckOptions { tol: cfg.tol.check, alpha: cfg.tol.alpha };
    let (mode, (full, strong, all_minors)) = match &theta {
        AnySkew::Rational(m) => ("rational", audit_with(m, &opts)?),
        AnySkew::Float(m) => ("float", audit_with(m, &opts)?),
        AnySkew::Alpha(m) => ("alpha", audit_with(m, &opts)?),
    };
    let certificate = match &cfg.theta {
        ThetaSource::Superinc { n, terms } => Some(independence_certificate(cfg.sequence(*n, terms)?.terms(), *n)?),
        _ => None,
    };
    let verdict = full.as_ref().is_none_or(|f| f.verdict) && all_minors.verdict;
    Ok(AuditReport { meta: cfg.meta(), n: theta.n(), mode, full, strong, all_minors, certificate, verdict })
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    GapTooSmall,
    BranchCut,
    Failed,
}

fn status_of(e: &Error) -> RowStatus {
    match e {
        Error::GapTooSmall(_) => RowStatus::GapTooSmall,
        Error::SpectrumAtBranchCut(_) => RowStatus::BranchCut,
        _ => RowStatus::Failed,
    }
}

/// One cell of the Exel-formula sweep.
#[derive(Clone, Debug, Serialize)]
pub struct ExelRow {
    pub schema: &'static str,
    pub config_hash: String,
    pub p: i64,
    pub q: usize,
    pub theta: f64,
    pub delta: f64,
    pub seed: u64,
    pub trace: Option<f64>,
    pub log_trace: Option<f64>,
    pub residual: Option<f64>,
    pub gap: Option<f64>,
    pub source_idem_err: Option<f64>,
    pub status: RowStatus,
    pub detail: String,
}

/// (1/2πi)τ(log_θ(vuv*u*)).
pub fn exel_log_side(u: &crate::ncrep::Operator, v: &crate::ncrep::Operator, theta: f64) -> Result<f64> {
    let w = v.mul(u).mul(&v.adjoint()).mul(&u.adjoint());
    let l = log_branch(&w, theta)?;
    Ok((l.normalized_trace() / C64::new(0.0, std::f64::consts::TAU)).re)
}

/// Trace of R_θ and the log side for a pair, with the gap of e_θ.
pub fn exel_cell(u: &crate::ncrep::Operator, v: &crate::ncrep::Operator, theta: f64, eps: Option<f64>) -> Result<(f64, f64, f64, f64)> {
    let r = r_theta(u, v, theta, eps)?;
    let log = exel_log_side(u, v, theta)?;
    Ok((r.class_trace, log, r.report.gap, r.report.source_idem_err))
}

/// |τ(R_θ) − (1/2πi)τ(log_θ(vuv*u*))| across cells, perturbation sizes and
/// seeds; rows outside the gap regime are flagged, not fatal.
pub fn run_exel_sweep(cfg: &ExperimentConfig) -> Result<Vec<ExelRow>> {
    cfg.validate()?;
    let hash = cfg.hash();
    let jobs: Vec<(RationalCell, f64, u64)> = cfg
        .exel_cells
        .iter()
        .flat_map(|c| cfg.deltas.iter().flat_map(move |&d| cfg.seeds.iter().map(move |&s| (*c, d, s))))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(cell, delta, seed)| {
            let theta = (cell.p as f64 / cell.q as f64).rem_euclid(1.0);
            let mut row = ExelRow {
                schema: SCHEMA_VERSION,
                config_hash: hash.clone(),
                p: cell.p,
                q: cell.q,
                theta,
                delta,
                seed,
                trace: None,
                log_trace: None,
                residual: None,
                gap: None,
                source_idem_err: None,
                status: RowStatus::Ok,
                detail: String::new(),
            };
            let result = perturb(&clock_shift_tuple(cell.p, cell.q), delta, seed)
                .and_then(|t| exel_cell(t.u(1), t.u(2), theta, cfg.eps));
            match result {
                Ok((tr, log, gap, idem)) => {
                    row.trace = Some(tr);
                    row.log_trace = Some(log);
                    row.residual = Some((tr - log).abs());
                    row.gap = Some(gap);
                    row.source_idem_err = Some(idem);
                    if idem >= cfg.tol.idem_limit {
                        row.status = RowStatus::GapTooSmall;
                        row.detail = "source element outside the gap regime".into();
                    } else if (tr - log).abs() > cfg.tol.exel {
                        row.status = RowStatus::Failed;
                        row.detail = "residual above tolerance".into();
                    }
                }
                Err(e) => {
                    row.status = status_of(&e);
                    row.detail = e.to_string();
                }
            }
            row
        })
        .collect();
    Ok(rows)
}

/// A projection construction attached to an index set.
#[derive(Clone, Debug)]
pub struct IndexConstruction {
    pub index_set: IndexSet,
    pub table: CoefficientTable,
    /// Trace predicted for the exact construction.
    pub target: f64,
}

/// Tables for every pair with θ_jk ∉ ℤ and, for n = 4, the four-torus
/// projection. Pair tables are sampled on the q-point grid, which makes e_I
/// equal e_θ on the exact representation.
pub fn constructions(t: &UnitaryTuple, eps: Option<f64>) -> Result<(Vec<IndexConstruction>, Vec<(IndexSet, String)>)> {
    let mut out = Vec::new();
    let mut skipped = Vec::new();
    for j in 1..=t.n {
        for k in j + 1..=t.n {
            let pair = IndexSet::pair(j, k)?;
            let th = t.phase(j, k).rem_euclid(1.0);
            if th == 0.0 {
                skipped.push((pair, "integer phase".to_string()));
                continue;
            }
            let funcs = RieffelFunctions::new(th, eps.unwrap_or_else(|| default_epsilon(th)))?;
            let table = rieffel_table(pair.clone(), &funcs, Truncation::Grid(t.q))?;
            out.push(IndexConstruction { index_set: pair, table, target: th });
        }
    }
    if t.n == 4 {
        let full = IndexSet::leading(4)?;
        let th = t.phase(1, 2);
        let attempt = BumpProfile::with_default_eps(th).and_then(|profile| {
            let p = rieffel_type_4d(t, &profile, KChoice::Auto, None)?;
            let table = four_torus_table(t, &p.e1(), (t.q - 1) / 2)?;
            Ok(IndexConstruction { index_set: full.clone(), table, target: p.target })
        });
        match attempt {
            Ok(c) => out.push(c),
            Err(e) => skipped.push((full, e.to_string())),
        }
    }
    Ok((out, skipped))
}

/// Measurement of one R_I on one perturbed tuple.
#[derive(Clone, Debug, Serialize)]
pub struct IndexRecord {
    pub index_set: IndexSet,
    pub gap: Option<f64>,
    pub source_idem_err: Option<f64>,
    pub trace: Option<f64>,
    pub exact_trace: f64,
    pub target: f64,
    pub deviation: Option<f64>,
    pub status: RowStatus,
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilityRecord {
    pub delta: f64,
    pub seed: u64,
    pub relation_defect: f64,
    pub entries: Vec<IndexRecord>,
    /// Exel residual of the generator pair, n = 2 only.
    pub exel_residual: Option<f64>,
    /// Every R_I computed with ‖e_I² − e_I‖ under the limit.
    pub gapped: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DeltaStar {
    /// Largest δ found with every cell gapped.
    pub estimate: f64,
    /// Smallest δ found with a failing cell, if any.
    pub failing: Option<f64>,
    pub bisection_steps: usize,
    pub empirical: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilityReport {
    pub meta: Meta,
    pub q: usize,
    pub dim: usize,
    pub skipped: Vec<(IndexSet, String)>,
    pub records: Vec<StabilityRecord>,
    pub delta_star: DeltaStar,
    /// Largest |τ(R_I) − exact| over records with δ ≤ δ*/2.
    pub max_deviation_below_half: f64,
    pub rigid: bool,
}

fn measure(
    exact: &UnitaryTuple,
    cons: &[IndexConstruction],
    exact_traces: &[f64],
    delta: f64,
    seed: u64,
    cfg: &ExperimentConfig,
) -> Result<StabilityRecord> {
    let t = perturb(exact, delta, seed)?;
    let relation_defect = t.relation_defect()?;
    let entries: Vec<IndexRecord> = cons
        .iter()
        .zip(exact_traces)
        .map(|(c, &exact_trace)| {
            let r = e_i(&t, &c.index_set, &c.table).and_then(|e| crate::ncrep::spectral_projection(&e, 0.5));
            match r {
                Ok(rep) => IndexRecord {
                    index_set: c.index_set.clone(),
                    gap: Some(rep.gap),
                    source_idem_err: Some(rep.source_idem_err),
                    trace: Some(rep.trace),
                    exact_trace,
                    target: c.target,
                    deviation: Some((rep.trace - exact_trace).abs()),
                    status: if rep.source_idem_err < cfg.tol.idem_limit { RowStatus::Ok } else { RowStatus::GapTooSmall },
                },
                Err(e) => IndexRecord {
                    index_set: c.index_set.clone(),
                    gap: None,
                    source_idem_err: None,
                    trace: None,
                    exact_trace,
                    target: c.target,
                    deviation: None,
                    status: status_of(&e),
                },
            }
        })
        .collect();
    let exel_residual = if t.n == 2 {
        let th = t.phase(1, 2).rem_euclid(1.0);
        exel_cell(t.u(1), t.u(2), th, cfg.eps).ok().map(|(a, b, _, _)| (a - b).abs())
    } else {
        None
    };
    let gapped = entries.iter().all(|e| e.status == RowStatus::Ok);
    Ok(StabilityRecord { delta, seed, relation_defect, entries, exel_residual, gapped })
}

/// Perturbs the exact representation over the δ grid and seeds, tracks gaps
/// and R_I traces, and brackets the empirical δ* by bisection.
pub fn run_stability_probe(cfg: &ExperimentConfig) -> Result<StabilityReport> {
    cfg.validate()?;
    let theta = cfg.rational_theta()?;
    let exact = exact_rep(&theta, cfg.q, cfg.dim_cap)?;
    let (cons, skipped) = constructions(&exact, cfg.eps)?;
    let exact_traces: Vec<f64> = cons
        .iter()
        .map(|c| Ok(crate::ncrep::spectral_projection(&e_i(&exact, &c.index_set, &c.table)?, 0.5)?.trace))
        .collect::<Result<_>>()?;
    let cell = |delta: f64| -> Result<Vec<StabilityRecord>> {
        cfg.seeds.par_iter().map(|&s| measure(&exact, &cons, &exact_traces, delta, s, cfg)).collect()
    };
    let mut records = Vec::new();
    let mut passing = 0.0;
    let mut failing = None;
    for &d in &cfg.deltas {
        let recs = cell(d)?;
        let ok = recs.iter().all(|r| r.gapped);
        records.extend(recs);
        if ok && failing.is_none() {
            passing = d;
        } else if !ok && failing.is_none() {
            failing = Some(d);
        }
    }
    if let Some(mut hi) = failing {
        let mut lo = passing;
        for _ in 0..cfg.bisection_steps {
            let mid = 0.5 * (lo + hi);
            let recs = cell(mid)?;
            if recs.iter().all(|r| r.gapped) {
                lo = mid;
            } else {
                hi = mid;
            }
            records.extend(recs);
        }
        passing = lo;
        failing = Some(hi);
    }
    let half = passing / 2.0;
    let max_dev = records
        .iter()
        .filter(|r| r.delta <= half)
        .flat_map(|r| r.entries.iter().map(|e| e.deviation.unwrap_or(f64::INFINITY)))
        .fold(0.0, f64::max);
    records.sort_by(|a, b| a.delta.total_cmp(&b.delta).then(a.seed.cmp(&b.seed)));
    Ok(StabilityReport {
        meta: cfg.meta(),
        q: cfg.q,
        dim: exact.dim(),
        skipped,
        records,
        delta_star: DeltaStar { estimate: passing, failing, bisection_steps: cfg.bisection_steps, empirical: true },
        max_deviation_below_half: max_dev,
        rigid: max_dev <= cfg.tol.trace,
    })
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    Member,
    /// Several decompositions of least norm exist.
    Ambiguous,
    NotFound,
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceAuditRow {
    pub label: String,
    pub value: f64,
    /// Generators of the restricted basis, after the constant 1.
    pub basis: Vec<String>,
    pub k0: Option<i64>,
    pub coeffs: Vec<(String, i64)>,
    pub residual: Option<f64>,
    /// Membership in ℤ + Σ_I pf(M_I)ℤ over all minors.
    pub full_lattice: Membership,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceAuditReport {
    pub meta: Meta,
    pub bound: i64,
    pub rows: Vec<TraceAuditRow>,
    pub verdict: bool,
}

/// {1, pf of the leading segments of I, pf(M_I)}.
pub fn restricted_basis(theta: &SkewMatrix<f64>, i: &IndexSet) -> Result<Vec<Generator>> {
    let mut sets = i.leading_segments();
    sets.push(i.clone());
    sets.iter().map(|j| Ok(Generator::new(format!("pf{j}"), pfaffian_minor(theta, j)?))).collect()
}

fn full_membership(x: f64, theta: &SkewMatrix<f64>, bound: i64, tol: f64) -> Membership {
    match lattice_decompose(x, theta, bound, tol) {
        Ok(_) => Membership::Member,
        Err(Error::AmbiguousDecomposition { .. }) => Membership::Ambiguous,
        Err(_) => Membership::NotFound,
    }
}

fn audit_row(label: String, x: f64, theta: &SkewMatrix<f64>, i: Option<&IndexSet>, cfg: &ExperimentConfig) -> Result<TraceAuditRow> {
    let full_lattice = full_membership(x, theta, cfg.bound, cfg.tol.lattice);
    let (basis, decomposition) = match i {
        Some(i) => {
            let gens = restricted_basis(theta, i)?;
            let labels = gens.iter().map(|g| g.label.clone()).collect();
            (labels, lattice_decompose_in(x, &gens, cfg.bound, cfg.tol.lattice))
        }
        None => (Vec::new(), lattice_decompose(x, theta, cfg.bound, cfg.tol.lattice)),
    };
    let (k0, coeffs, residual) = match decomposition {
        Ok(d) => (Some(d.k0), d.coeffs, Some(d.residual)),
        Err(_) => (None, Vec::new(), None),
    };
    let pass = k0.is_some() || !matches!(full_lattice, Membership::NotFound);
    Ok(TraceAuditRow { label, value: x, basis, k0, coeffs, residual, full_lattice, pass })
}

/// Exact-construction traces (when Θ is rational and its representation
/// fits) together with the configured extra values, each decomposed in the
/// trace lattice.
pub fn run_trace_audit(cfg: &ExperimentConfig) -> Result<TraceAuditReport> {
    cfg.validate()?;
    let theta_any = cfg.load_theta()?;
    let theta = theta_any.to_float(Some(cfg.tol.alpha))?;
    let mut rows = Vec::new();
    if let AnySkew::Rational(exact_theta) = &theta_any {
        let t = exact_rep(exact_theta, cfg.q, cfg.dim_cap)?;
        for j in 1..=t.n {
            for k in j + 1..=t.n {
                let th = t.phase(j, k).rem_euclid(1.0);
                if th == 0.0 {
                    continue;
                }
                let r = r_theta(t.u(j), t.u(k), th, cfg.eps)?;
                let pair = IndexSet::pair(j, k)?;
                rows.push(audit_row(format!("R{pair}"), r.class_trace, &theta, Some(&pair), cfg)?);
            }
        }
        if t.n == 4 {
            let profile = BumpProfile::with_default_eps(t.phase(1, 2))?;
            let p = rieffel_type_4d(&t, &profile, KChoice::Auto, None)?;
            let full = IndexSet::leading(4)?;
            rows.push(audit_row(format!("R{full}"), p.trace, &theta, Some(&full), cfg)?);
        }
    }
    for (n, &x) in cfg.audit_values.iter().enumerate() {
        let mut row = audit_row(format!("value{n}"), x, &theta, None, cfg)?;
        row.pass = row.k0.is_some();
        rows.push(row);
    }
    let verdict = rows.iter().all(|r| r.pass);
    Ok(TraceAuditReport { meta: cfg.meta(), bound: cfg.bound, rows, verdict })
}

/// Rejects reports lacking the provenance fields, then writes pretty JSON.
pub fn write_json(path: &Path, report: &impl Serialize) -> Result<()> {
    let v = serde_json::to_value(report)?;
    let has_meta = v.get("meta").is_some_and(|m| m.get("config_hash").is_some() && m.get("schema").is_some());
    if !has_meta {
        return Err(Error::Config("report lacks meta.schema or meta.config_hash".into()));
    }
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, serde_json::to_string_pretty(&v)? + "\n")?;
    Ok(())
}

pub fn write_csv<R: Serialize>(path: &Path, rows: &[R]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Config(e.to_string()))?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::Config(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Flat CSV view of stability records, one line per (δ, seed, I).
#[derive(Clone, Debug, Serialize)]
pub struct StabilityCsvRow {
    pub schema: &'static str,
    pub config_hash: String,
    pub delta: f64,
    pub seed: u64,
    pub index_set: String,
    pub relation_defect: f64,
    pub gap: Option<f64>,
    pub source_idem_err: Option<f64>,
    pub trace: Option<f64>,
    pub exact_trace: f64,
    pub deviation: Option<f64>,
    pub status: RowStatus,
}

impl StabilityReport {
    pub fn csv_rows(&self) -> Vec<StabilityCsvRow> {
        self.records
            .iter()
            .flat_map(|r| {
                r.entries.iter().map(move |e| StabilityCsvRow {
                    schema: SCHEMA_VERSION,
                    config_hash: self.meta.config_hash.clone(),
                    delta: r.delta,
                    seed: r.seed,
                    index_set: e.index_set.to_string(),
                    relation_defect: r.relation_defect,
                    gap: e.gap,
                    source_idem_err: e.source_idem_err,
                    trace: e.trace,
                    exact_trace: e.exact_trace,
                    deviation: e.deviation,
                    status: e.status.clone(),
                })
            })
            .collect()
    }
}

/// Fractional part of a rational as a float in [0, 1).
pub fn frac(r: &BigRational) -> f64 {
    let f = r - r.floor();
    debug_assert!(!f.is_negative());
    if f.is_zero() {
        0.0
    } else {
        f.to_f64().unwrap_or(f64::NAN)
    }
}

/// Index sets grouped by size, for reporting.
pub fn by_size(sets: &[IndexSet]) -> BTreeMap<usize, Vec<IndexSet>> {
    let mut m: BTreeMap<usize, Vec<IndexSet>> = BTreeMap::new();
    for s in sets {
        m.entry(s.len()).or_default().push(s.clone());
    }
    m
}
