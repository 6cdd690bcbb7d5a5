//! Finite-dimensional representations of rational noncommutative tori and
//! the matrix toolkit on top of them: functional calculus of unitaries,
//! spectral projections, branch logarithms and random perturbations.

pub mod eigen;
pub mod operator;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use serde_json::{json, Value};

pub use eigen::{eig_hermitian, eig_normal, op_norm, self_adjoint_defect, unitary_defect};
pub use operator::{cis, Operator, Sparse};
pub use num_complex::Complex64 as C64;

use crate::scalar::rational_to_f64;
use crate::skewmat::SkewMatrix;
use crate::{Error, Result};

pub const DEFAULT_DIM_CAP: usize = 4096;

/// n unitaries on a common space with their target phase matrix.
#[derive(Clone, Debug)]
pub struct UnitaryTuple {
    pub n: usize,
    pub q: usize,
    pub theta: SkewMatrix<BigRational>,
    pub gens: Vec<Operator>,
    pub seed: Option<u64>,
    pub delta: f64,
}

impl UnitaryTuple {
    pub fn dim(&self) -> usize {
        self.gens[0].nrows()
    }

    /// Generator U_j, 1-based.
    pub fn u(&self, j: usize) -> &Operator {
        &self.gens[j - 1]
    }

    /// θ_jk as a float, 1-based.
    pub fn phase(&self, j: usize, k: usize) -> f64 {
        rational_to_f64(self.theta.theta(j, k))
    }

    /// max over j < k of ‖U_kU_j − e^{2πiθ_jk}U_jU_k‖.
    pub fn relation_defect(&self) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for j in 1..=self.n {
            for k in j + 1..=self.n {
                worst = worst.max(relation_residual(self.u(k), self.u(j), self.phase(j, k))?);
            }
        }
        Ok(worst)
    }

    /// max over j of ‖U_jU_j* − 1‖.
    pub fn unitarity_defect(&self) -> Result<f64> {
        self.gens.iter().map(unitary_defect).try_fold(0.0f64, |m, d| Ok(m.max(d?)))
    }

    /// `{n, q, dim, theta, seed, delta, generators}`; each generator lists
    /// its nonzero entries as [row, col, re, im].
    pub fn to_json(&self) -> Value {
        let gens: Vec<Value> = self
            .gens
            .iter()
            .map(|g| {
                let entries: Vec<Value> = match g {
                    Operator::Sparse(s) => s.entries().map(|(i, j, v)| json!([i, j, v.re, v.im])).collect(),
                    Operator::Dense(d) => (0..d.nrows())
                        .flat_map(|i| (0..d.ncols()).map(move |j| (i, j)))
                        .map(|(i, j)| json!([i, j, d[(i, j)].re, d[(i, j)].im]))
                        .collect(),
                };
                json!({ "storage": if g.is_sparse() { "sparse" } else { "dense" }, "entries": entries })
            })
            .collect();
        json!({
            "n": self.n,
            "q": self.q,
            "dim": self.dim(),
            "theta": self.theta.to_json(),
            "seed": self.seed,
            "delta": self.delta,
            "generators": gens,
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let field = |k: &str| v[k].as_u64().ok_or_else(|| Error::Config(format!("missing {k}")));
        let (n, q, dim) = (field("n")? as usize, field("q")? as usize, field("dim")? as usize);
        let theta = SkewMatrix::from_json(&v["theta"])?;
        let gens = v["generators"]
            .as_array()
            .ok_or_else(|| Error::Config("missing generators".into()))?
            .iter()
            .map(|g| {
                let mut rows = vec![Vec::new(); dim];
                for e in g["entries"].as_array().into_iter().flatten() {
                    let a = e.as_array().filter(|a| a.len() == 4).ok_or_else(|| Error::Config(format!("bad entry {e}")))?;
                    let (i, j) = (a[0].as_u64().unwrap_or(0) as usize, a[1].as_u64().unwrap_or(0) as usize);
                    if i >= dim || j >= dim {
                        return Err(Error::Config(format!("entry {e} outside dimension {dim}")));
                    }
                    rows[i].push((j, C64::new(a[2].as_f64().unwrap_or(0.0), a[3].as_f64().unwrap_or(0.0))));
                }
                let s = Sparse::from_rows(dim, rows);
                Ok(if g["storage"] == "dense" { Operator::Dense(s.to_dense()) } else { Operator::Sparse(s) })
            })
            .collect::<Result<Vec<_>>>()?;
        if gens.len() != n {
            return Err(Error::Config(format!("{} generators for n = {n}", gens.len())));
        }
        Ok(Self { n, q, theta, gens, seed: v["seed"].as_u64(), delta: v["delta"].as_f64().unwrap_or(0.0) })
    }
}

/// ‖BA − e^{2πiθ}AB‖.
pub fn relation_residual(b: &Operator, a: &Operator, theta: f64) -> Result<f64> {
    op_norm(&b.mul(a).add_scaled(&a.mul(b), -cis(theta)))
}

/// q-th roots of unity ω^m, m = 0..q, from one table so that powers are exact
/// up to rounding of the table itself.
fn roots(q: usize) -> Vec<C64> {
    (0..q).map(|m| cis(m as f64 / q as f64)).collect()
}

/// Integer p with θ = p/q, reduced mod q.
fn grid_numerator(theta: &BigRational, q: usize) -> Option<usize> {
    let scaled = theta * BigRational::from_integer(BigInt::from(q));
    if !scaled.is_integer() {
        return None;
    }
    let p = scaled.to_integer() % BigInt::from(q);
    let p = if p < BigInt::zero() { p + BigInt::from(q) } else { p };
    p.to_usize()
}

/// (U_j f)(x) = e^{2πi Σ_{k<j} θ_kj x_k} f(x − e_j) on functions over (ℤ_q)^n.
pub fn build_rep(theta: &SkewMatrix<BigRational>, q: usize, dim_cap: usize) -> Result<UnitaryTuple> {
    let n = theta.n();
    if q == 0 {
        return Err(Error::Config("q must be positive".into()));
    }
    let mut p = vec![vec![0usize; n]; n];
    for j in 0..n {
        for k in j + 1..n {
            let t = theta.get(j, k);
            p[j][k] = grid_numerator(t, q)
                .ok_or_else(|| Error::NotRational(format!("theta_{}{} = {t} with q = {q}", j + 1, k + 1)))?;
        }
    }
    let dim = q.checked_pow(n as u32).filter(|&d| d <= dim_cap).ok_or(Error::DimCapExceeded {
        dim: q.checked_pow(n as u32).unwrap_or(usize::MAX),
        cap: dim_cap,
    })?;
    let w = roots(q);
    let stride: Vec<usize> = (0..n).map(|k| q.pow(k as u32)).collect();
    let gens = (0..n)
        .map(|j| {
            let rows = (0..dim)
                .map(|x| {
                    let digit = |k: usize| (x / stride[k]) % q;
                    let xj = digit(j);
                    let col = x - xj * stride[j] + ((xj + q - 1) % q) * stride[j];
                    let ph = (0..j).map(|k| p[k][j] * digit(k)).sum::<usize>() % q;
                    vec![(col, w[ph])]
                })
                .collect();
            Operator::Sparse(Sparse::from_rows(dim, rows))
        })
        .collect();
    let tuple = UnitaryTuple { n, q, theta: theta.clone(), gens, seed: None, delta: 0.0 };
    let defect = tuple.relation_defect()?;
    if defect > 1e-12 {
        return Err(Error::Config(format!("representation relations fail with defect {defect:e}")));
    }
    Ok(tuple)
}

/// The q-dimensional pair u = diag(ω^k), v = S^{−p} with S e_k = e_{k+1};
/// it satisfies vu = e^{2πip/q} uv.
pub fn clock_shift(p: i64, q: usize) -> (Operator, Operator) {
    let w = roots(q);
    let u = Sparse::diagonal(&w);
    let shift = p.rem_euclid(q as i64) as usize;
    // (S^{-p})e_k = e_{k-p}: row r holds column r + p
    let v = Sparse::from_rows(q, (0..q).map(|r| vec![((r + shift) % q, C64::new(1.0, 0.0))]).collect());
    (Operator::Sparse(u), Operator::Sparse(v))
}

/// The pair (clock_shift) packaged as a 2-generator tuple of dimension q.
pub fn clock_shift_tuple(p: i64, q: usize) -> UnitaryTuple {
    let (u, v) = clock_shift(p, q);
    let theta = SkewMatrix::from_upper(2, |_, _| BigRational::new(BigInt::from(p), BigInt::from(q as i64)));
    UnitaryTuple { n: 2, q, theta, gens: vec![u, v], seed: None, delta: 0.0 }
}

/// (1/dim) Σ diag.
pub fn normalized_trace(a: &Operator) -> C64 {
    a.normalized_trace()
}

/// Largest order probed by the finite-order shortcut.
const MAX_ORDER: usize = 256;

/// Powers u⁰, …, u^{m−1} of a monomial unitary with u^m = 1, if m ≤ 256.
fn finite_order_powers(u: &Sparse) -> Option<Vec<Sparse>> {
    if !u.is_monomial() {
        return None;
    }
    let mut powers = vec![Sparse::identity(u.nrows())];
    for _ in 0..MAX_ORDER {
        let next = powers.last().unwrap().mul(u);
        let is_one = (0..next.nrows()).all(|i| matches!(next.row(i), [(c, v)] if *c == i && (v - C64::new(1.0, 0.0)).norm() < 1e-12));
        if is_one {
            return Some(powers);
        }
        powers.push(next);
    }
    None
}

/// f(u) for a unitary u: exact trigonometric interpolation when u is a
/// monomial matrix of finite order, otherwise through the normal
/// eigendecomposition.
pub fn unitary_calculus(u: &Operator, f: impl Fn(C64) -> C64) -> Result<Operator> {
    let defect = unitary_defect(u)?;
    if defect > 1e-10 {
        return Err(Error::NotUnitary(defect));
    }
    if let Some(powers) = u.as_sparse().and_then(finite_order_powers) {
        let m = powers.len();
        let w = roots(m);
        let samples: Vec<C64> = w.iter().map(|&z| f(z)).collect();
        let mut acc = Sparse::zeros(u.nrows(), u.ncols());
        for (j, pw) in powers.iter().enumerate() {
            let cj: C64 = samples.iter().enumerate().map(|(k, s)| s * w[(k * (m - j)) % m]).sum::<C64>() / m as f64;
            if cj.norm() > 1e-15 {
                acc = acc.add_scaled(pw, cj);
            }
        }
        return Ok(Operator::Sparse(acc));
    }
    Ok(eig_normal(u)?.apply(f))
}

/// Lifts a function of t ∈ [0, 1) to the unit circle, z = e^{2πit}.
pub fn on_circle(f: impl Fn(f64) -> f64) -> impl Fn(C64) -> C64 {
    move |z: C64| {
        let t = (z.arg() / std::f64::consts::TAU).rem_euclid(1.0);
        C64::new(f(t), 0.0)
    }
}

/// A spectral projection together with its quality measures.
#[derive(Clone, Debug)]
pub struct ProjectionReport {
    pub projection: Operator,
    /// ‖P² − P‖.
    pub idem_err: f64,
    /// ‖P − P*‖.
    pub sa_err: f64,
    /// min |λ − cut| over the spectrum of the source element.
    pub gap: f64,
    /// max |λ² − λ| over the spectrum of the source, i.e. ‖A² − A‖.
    pub source_idem_err: f64,
    /// ‖A − A*‖ of the source before symmetrization.
    pub source_sa_err: f64,
    pub rank: usize,
    pub dim: usize,
    /// rank / dim.
    pub trace: f64,
}

/// Serializable summary of a ProjectionReport.
#[derive(Clone, Debug, Serialize)]
pub struct ProjectionSummary {
    pub idem_err: f64,
    pub sa_err: f64,
    pub gap: f64,
    pub source_idem_err: f64,
    pub rank: usize,
    pub dim: usize,
    pub trace: f64,
}

impl ProjectionReport {
    pub fn summary(&self) -> ProjectionSummary {
        ProjectionSummary {
            idem_err: self.idem_err,
            sa_err: self.sa_err,
            gap: self.gap,
            source_idem_err: self.source_idem_err,
            rank: self.rank,
            dim: self.dim,
            trace: self.trace,
        }
    }
}

/// Smallest distance to the cut that still licenses χ_{(cut,∞)}.
pub const MIN_GAP: f64 = 1e-8;

/// χ_{(cut,∞)}(A) for self-adjoint A.
pub fn spectral_projection(a: &Operator, cut: f64) -> Result<ProjectionReport> {
    let source_sa_err = self_adjoint_defect(a)?;
    let eig = eig_hermitian(a)?;
    let values = eig.values();
    let gap = values.iter().map(|l| (l - cut).abs()).fold(f64::INFINITY, f64::min);
    if gap < MIN_GAP {
        return Err(Error::GapTooSmall(gap));
    }
    let source_idem_err = values.iter().map(|l| (l * l - l).abs()).fold(0.0, f64::max);
    let rank = values.iter().filter(|&&l| l > cut).count();
    let p = eig.apply(|l| if l > cut { C64::new(1.0, 0.0) } else { C64::default() });
    let idem_err = op_norm(&p.mul(&p).sub(&p))?;
    let sa_err = self_adjoint_defect(&p)?;
    let dim = a.nrows();
    Ok(ProjectionReport {
        projection: p,
        idem_err,
        sa_err,
        gap,
        source_idem_err,
        source_sa_err,
        rank,
        dim,
        trace: rank as f64 / dim as f64,
    })
}

/// log_θ(u): the skew-Hermitian L with e^L = u whose eigenvalue arguments lie
/// in (2πθ − π, 2πθ + π).
pub fn log_branch(u: &Operator, theta: f64) -> Result<Operator> {
    let defect = unitary_defect(u)?;
    if defect > 1e-10 {
        return Err(Error::NotUnitary(defect));
    }
    let eig = eig_normal(u)?;
    let center = std::f64::consts::TAU * theta;
    let rot = cis(-theta);
    let mut cut_dist = f64::INFINITY;
    for z in eig.values() {
        cut_dist = cut_dist.min(std::f64::consts::PI - (z * rot).arg().abs());
    }
    if cut_dist < MIN_GAP {
        return Err(Error::SpectrumAtBranchCut(cut_dist));
    }
    Ok(eig.apply(|z| C64::new(z.norm().ln(), center + (z * rot).arg())))
}

/// e^{itH} for Hermitian H.
pub fn exp_i_hermitian(h: &Operator, t: f64) -> Result<Operator> {
    Ok(eig_hermitian(h)?.apply(|l| C64::from_polar(1.0, t * l)))
}

/// e^L for skew-Hermitian L, via e^{i(−iL)}.
pub fn exp_skew(l: &Operator) -> Result<Operator> {
    exp_i_hermitian(&l.scale(C64::new(0.0, -1.0)), 1.0)
}

/// Dense random Hermitian matrix with spectral norm 1.
pub fn random_hermitian(dim: usize, rng: &mut ChaCha8Rng) -> Result<Operator> {
    let mut g = faer::Mat::<C64>::zeros(dim, dim);
    for j in 0..dim {
        for i in 0..dim {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            g[(i, j)] = C64::new(re, im);
        }
    }
    let h = Operator::Dense(g).hermitian_part();
    let norm = op_norm(&h)?;
    Ok(h.scale(C64::new(1.0 / norm, 0.0)))
}

/// U_j' = exp(iδH_j)U_j with independent seeded random Hermitian H_j, ‖H_j‖ = 1.
pub fn perturb(t: &UnitaryTuple, delta: f64, seed: u64) -> Result<UnitaryTuple> {
    if delta < 0.0 {
        return Err(Error::Config(format!("delta must be non-negative, got {delta}")));
    }
    let mut out = t.clone();
    out.seed = Some(seed);
    out.delta = delta;
    if delta == 0.0 {
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for g in out.gens.iter_mut() {
        let h = random_hermitian(g.nrows(), &mut rng)?;
        *g = exp_i_hermitian(&h, delta)?.mul(g);
    }
    Ok(out)
}
