//! Bott and Rieffel function families, the elements e(u,v) and e_θ(u,v),
//! their spectral projections, Fourier coefficient tables and the truncated
//! elements e_I with projections R_I.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::Serialize;
use serde_json::{json, Value};

use crate::ncrep::{cis, on_circle, spectral_projection, unitary_calculus, Operator, ProjectionReport, Sparse, UnitaryTuple};
use crate::skewmat::IndexSet;
use crate::{Error, Result};

/// f₁(e^{2πit}) = |1 − 2t| on [0, 1].
pub fn bott_f1(t: f64) -> f64 {
    let t = t.rem_euclid(1.0);
    if t <= 0.5 {
        1.0 - 2.0 * t
    } else {
        -1.0 + 2.0 * t
    }
}

fn bott_root(t: f64) -> f64 {
    let f = bott_f1(t);
    (f - f * f).max(0.0).sqrt()
}

/// g₁ = (f₁ − f₁²)^{1/2} on [0, 1/2], zero after.
pub fn bott_g1(t: f64) -> f64 {
    if t.rem_euclid(1.0) <= 0.5 {
        bott_root(t)
    } else {
        0.0
    }
}

/// h₁ = (f₁ − f₁²)^{1/2} on (1/2, 1], zero before.
pub fn bott_h1(t: f64) -> f64 {
    if t.rem_euclid(1.0) <= 0.5 {
        0.0
    } else {
        bott_root(t)
    }
}

/// The piecewise-linear f₂ and the bump g₂ = (f₂(1 − f₂))^{1/2} on [θ, θ+ε].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RieffelFunctions {
    pub theta: f64,
    pub eps: f64,
}

/// ε = min(θ, 1 − θ)/2.
pub fn default_epsilon(theta: f64) -> f64 {
    theta.min(1.0 - theta) / 2.0
}

impl RieffelFunctions {
    pub fn new(theta: f64, eps: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < 1.0 && eps > 0.0 && eps <= theta && theta + eps <= 1.0 + 1e-15) {
            return Err(Error::BadEpsilon { theta, eps });
        }
        Ok(Self { theta, eps })
    }

    pub fn f(&self, t: f64) -> f64 {
        let (th, e) = (self.theta, self.eps);
        let t = t.rem_euclid(1.0);
        if t <= e {
            t / e
        } else if t <= th {
            1.0
        } else if t <= th + e {
            (th + e - t) / e
        } else {
            0.0
        }
    }

    pub fn g(&self, t: f64) -> f64 {
        let t = t.rem_euclid(1.0);
        if t >= self.theta && t <= self.theta + self.eps {
            let f = self.f(t);
            (f * (1.0 - f)).max(0.0).sqrt()
        } else {
            0.0
        }
    }

    /// Largest pointwise residuals on an m-point grid of
    /// g(t)g(t−θ) = 0, g(t)[f(t) + f(t−θ)] = g(t) and f = f² + g(t)² + g(t+θ)²,
    /// the identities that make e_θ a projection when vu = e^{2πiθ}uv.
    pub fn identity_residuals(&self, m: usize) -> [f64; 3] {
        let th = self.theta;
        let mut r = [0.0f64; 3];
        for i in 0..m {
            let t = i as f64 / m as f64;
            let (f, g) = (self.f(t), self.g(t));
            r[0] = r[0].max((g * self.g(t - th)).abs());
            r[1] = r[1].max((g * (f + self.f(t - th)) - g).abs());
            r[2] = r[2].max((f - f * f - g * g - self.g(t + th).powi(2)).abs());
        }
        r
    }
}

/// Bott's 2×2 block element
/// [[f₁(v), g₁(v) + h₁(v)u*], [g₁(v) + u h₁(v), 1 − f₁(v)]] on ℂ^{2·dim}.
pub fn bott_element(u: &Operator, v: &Operator) -> Result<Operator> {
    check_pair(u, v)?;
    let n = u.nrows();
    let f = unitary_calculus(v, on_circle(bott_f1))?;
    let g = unitary_calculus(v, on_circle(bott_g1))?;
    let h = unitary_calculus(v, on_circle(bott_h1))?;
    let top_right = g.add(&h.mul(&u.adjoint()));
    let bottom_left = g.add(&u.mul(&h));
    let bottom_right = Operator::identity(n).sub(&f);
    Ok(block2(&f, &top_right, &bottom_left, &bottom_right))
}

fn check_pair(u: &Operator, v: &Operator) -> Result<()> {
    if u.nrows() != v.nrows() || u.nrows() != u.ncols() || v.nrows() != v.ncols() {
        return Err(Error::DimensionMismatch(format!("{}x{} and {}x{}", u.nrows(), u.ncols(), v.nrows(), v.ncols())));
    }
    Ok(())
}

/// [[a, b], [c, d]] as one operator.
pub fn block2(a: &Operator, b: &Operator, c: &Operator, d: &Operator) -> Operator {
    let n = a.nrows();
    let parts = [(a, 0, 0), (b, 0, n), (c, n, 0), (d, n, n)];
    if parts.iter().all(|p| p.0.is_sparse()) {
        let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); 2 * n];
        for (op, r0, c0) in parts {
            for (i, j, v) in op.as_sparse().unwrap().entries() {
                rows[r0 + i].push((c0 + j, v));
            }
        }
        return Operator::Sparse(Sparse::from_rows(2 * n, rows));
    }
    let mut m = faer::Mat::<C64>::zeros(2 * n, 2 * n);
    for (op, r0, c0) in parts {
        let d = op.to_dense();
        for j in 0..n {
            for i in 0..n {
                m[(r0 + i, c0 + j)] = d[(i, j)];
            }
        }
    }
    Operator::Dense(m)
}

/// e_θ(u, v) = g₂(u)v* + f₂(u) + v g₂(u).
pub fn rieffel_element(u: &Operator, v: &Operator, funcs: &RieffelFunctions) -> Result<Operator> {
    check_pair(u, v)?;
    let f = unitary_calculus(u, on_circle(|t| funcs.f(t)))?;
    let g = unitary_calculus(u, on_circle(|t| funcs.g(t)))?;
    Ok(g.mul(&v.adjoint()).add(&f).add(&v.mul(&g)))
}

/// R_θ(u, v): the spectral projection of e_θ(u, v), or of the Bott element
/// when θ = 0, with its class trace (rank/dim, minus 1 for the Bott case).
#[derive(Clone, Debug)]
pub struct RTheta {
    pub report: ProjectionReport,
    pub class_trace: f64,
}

pub fn r_theta(u: &Operator, v: &Operator, theta: f64, eps: Option<f64>) -> Result<RTheta> {
    if theta == 0.0 {
        let report = spectral_projection(&bott_element(u, v)?, 0.5)?;
        let class_trace = report.rank as f64 / u.nrows() as f64 - 1.0;
        return Ok(RTheta { report, class_trace });
    }
    let funcs = RieffelFunctions::new(theta, eps.unwrap_or_else(|| default_epsilon(theta)))?;
    let report = spectral_projection(&rieffel_element(u, v, &funcs)?, 0.5)?;
    let class_trace = report.trace;
    Ok(RTheta { report, class_trace })
}

/// Grid size for Fourier coefficients.
pub const FFT_GRID: usize = 1 << 14;
/// Truncation budget ‖e_I − e_θ‖ < 1/8.
pub const TRUNCATION_BUDGET: f64 = 0.125;

/// Fourier coefficients ĥ(k) = ∫₀¹ h(t)e^{−2πikt}dt on the 2¹⁴-point grid,
/// indexed so that entry k mod M holds ĥ(k).
pub fn fourier_coefficients(h: impl Fn(f64) -> f64) -> Vec<C64> {
    let m = FFT_GRID;
    let mut buf: Vec<C64> = (0..m).map(|i| C64::new(h(i as f64 / m as f64), 0.0)).collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    buf.iter_mut().for_each(|z| *z /= m as f64);
    buf
}

fn coeff_at(c: &[C64], k: i64) -> C64 {
    c[k.rem_euclid(c.len() as i64) as usize]
}

/// sup over the grid of |h − Σ_{|k|≤N} ĥ(k)e^{2πikt}|.
fn truncation_sup_error(samples: &[f64], coeffs: &[C64], n: usize) -> f64 {
    let m = coeffs.len();
    let mut buf: Vec<C64> = (0..m)
        .map(|i| {
            let k = if i <= m / 2 { i as i64 } else { i as i64 - m as i64 };
            if k.unsigned_abs() as usize <= n {
                coeffs[i]
            } else {
                C64::default()
            }
        })
        .collect();
    FftPlanner::new().plan_fft_inverse(m).process(&mut buf);
    samples.iter().zip(&buf).map(|(s, z)| (z - s).norm()).fold(0.0, f64::max)
}

/// How the truncation radius is chosen.
#[derive(Clone, Copy, Debug, Serialize)]
pub enum Truncation {
    Fixed(usize),
    /// Smallest N ≤ max meeting the budget.
    Adaptive { max: usize },
    /// Coefficients sampled on the q-point grid, N = ⌊q/2⌋; exact on
    /// representations where the generators satisfy u^q = 1.
    Grid(usize),
}

/// Coefficients a_k of Σ a_k U_{i₁}^{k₁}⋯U_{i_l}^{k_l} in ascending generator
/// order, closed under the formal adjoint.
#[derive(Clone, Debug)]
pub struct CoefficientTable {
    pub index_set: IndexSet,
    pub n_trunc: usize,
    /// θ_{i_a i_b} for a < b, used by the adjoint phase.
    pub phases: Vec<Vec<f64>>,
    pub entries: BTreeMap<Vec<i64>, C64>,
    /// Measured sup-norm error of the truncated defining functions.
    pub reconstruction_error: Option<f64>,
    /// Largest discarded coefficient modulus.
    pub tail_max: Option<f64>,
}

impl CoefficientTable {
    /// The phase in (u^k)* = φ(k)·u^{−k}: Π_{a<b} e^{2πiθ_{i_a i_b}k_a k_b}.
    pub fn adjoint_phase(&self, k: &[i64]) -> C64 {
        let mut t = 0.0;
        for a in 0..k.len() {
            for b in a + 1..k.len() {
                t += self.phases[a][b] * (k[a] * k[b]) as f64;
            }
        }
        cis(t)
    }

    /// a_k ← (a_k + conj(a_{−k})·φ(k))/2, making the table its own adjoint.
    pub fn symmetrize(&mut self) {
        let keys: Vec<Vec<i64>> = self.entries.keys().cloned().collect();
        let mut keys_all = keys.clone();
        for k in &keys {
            let neg: Vec<i64> = k.iter().map(|x| -x).collect();
            if !self.entries.contains_key(&neg) {
                keys_all.push(neg);
            }
        }
        let old = self.entries.clone();
        self.entries = keys_all
            .into_iter()
            .map(|k| {
                let neg: Vec<i64> = k.iter().map(|x| -x).collect();
                let a = old.get(&k).copied().unwrap_or_default();
                let b = old.get(&neg).copied().unwrap_or_default();
                let v = (a + b.conj() * self.adjoint_phase(&k)) * 0.5;
                (k, v)
            })
            .collect();
    }

    /// Largest |a_k − conj(a_{−k})φ(k)|; zero for a self-adjoint table.
    pub fn adjoint_asymmetry(&self) -> f64 {
        self.entries
            .iter()
            .map(|(k, &a)| {
                let neg: Vec<i64> = k.iter().map(|x| -x).collect();
                let b = self.entries.get(&neg).copied().unwrap_or_default();
                (a - b.conj() * self.adjoint_phase(k)).norm()
            })
            .fold(0.0, f64::max)
    }

    pub fn max_degree(&self) -> usize {
        self.entries.keys().flatten().map(|k| k.unsigned_abs() as usize).max().unwrap_or(0)
    }

    /// `{I, N, phases, entries: [[k-vector, re, im], …]}`.
    pub fn to_json(&self) -> Value {
        let entries: Vec<Value> = self.entries.iter().map(|(k, v)| json!([k, v.re, v.im])).collect();
        json!({
            "I": self.index_set,
            "N": self.n_trunc,
            "ordering": "ascending generator index",
            "phases": self.phases,
            "reconstruction_error": self.reconstruction_error,
            "tail_max": self.tail_max,
            "entries": entries,
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let index_set: IndexSet = serde_json::from_value(v["I"].clone())?;
        let n_trunc = v["N"].as_u64().ok_or_else(|| Error::Config("missing N".into()))? as usize;
        let phases: Vec<Vec<f64>> = serde_json::from_value(v["phases"].clone())?;
        let mut entries = BTreeMap::new();
        for e in v["entries"].as_array().into_iter().flatten() {
            let (k, re, im): (Vec<i64>, f64, f64) = serde_json::from_value(e.clone())?;
            entries.insert(k, C64::new(re, im));
        }
        Ok(Self {
            index_set,
            n_trunc,
            phases,
            entries,
            reconstruction_error: v["reconstruction_error"].as_f64(),
            tail_max: v["tail_max"].as_f64(),
        })
    }
}

/// Table of e_θ(U_j, U_k) = g(U_j)U_k* + f(U_j) + U_k g(U_j):
/// a_{k,0} = f̂(k), a_{k,1} = ĝ(k)e^{2πiθk}, a_{k,−1} = ĝ(k).
pub fn rieffel_table(pair: IndexSet, funcs: &RieffelFunctions, trunc: Truncation) -> Result<CoefficientTable> {
    if pair.len() != 2 {
        return Err(Error::InvalidIndexSet(format!("{pair} is not a pair")));
    }
    if let Truncation::Grid(q) = trunc {
        return grid_rieffel_table(pair, funcs, q);
    }
    let fh = fourier_coefficients(|t| funcs.f(t));
    let gh = fourier_coefficients(|t| funcs.g(t));
    let m = FFT_GRID;
    let fs: Vec<f64> = (0..m).map(|i| funcs.f(i as f64 / m as f64)).collect();
    let gs: Vec<f64> = (0..m).map(|i| funcs.g(i as f64 / m as f64)).collect();
    let error_at = |n: usize| truncation_sup_error(&fs, &fh, n) + 2.0 * truncation_sup_error(&gs, &gh, n);
    let (n, err) = match trunc {
        Truncation::Fixed(n) => {
            let e = error_at(n);
            if e >= TRUNCATION_BUDGET {
                return Err(Error::TruncationInsufficient { n, tail: e, budget: TRUNCATION_BUDGET });
            }
            (n, e)
        }
        Truncation::Adaptive { max } => {
            let mut found = None;
            for n in 1..=max {
                let e = error_at(n);
                if e < TRUNCATION_BUDGET {
                    found = Some((n, e));
                    break;
                }
            }
            found.ok_or_else(|| Error::TruncationInsufficient { n: max, tail: error_at(max), budget: TRUNCATION_BUDGET })?
        }
        Truncation::Grid(_) => unreachable!(),
    };
    let tail_max = (n + 1..m / 2)
        .flat_map(|k| {
            let k = k as i64;
            [coeff_at(&fh, k), coeff_at(&fh, -k), coeff_at(&gh, k), coeff_at(&gh, -k)]
        })
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    Ok(assemble_rieffel_table(pair, funcs.theta, n, |k| coeff_at(&fh, k), |k| coeff_at(&gh, k), Some(err), Some(tail_max)))
}

/// Grid coefficients c(k) = (1/q)Σ_j h(j/q)e^{−2πijk/q} for |k| ≤ ⌊q/2⌋, the
/// Nyquist term split evenly between ±q/2.
fn grid_coefficients(h: impl Fn(f64) -> f64, q: usize) -> impl Fn(i64) -> C64 {
    let mut buf: Vec<C64> = (0..q).map(|j| C64::new(h(j as f64 / q as f64), 0.0)).collect();
    FftPlanner::new().plan_fft_forward(q).process(&mut buf);
    move |k: i64| {
        let c = buf[k.rem_euclid(q as i64) as usize] / q as f64;
        if q.is_multiple_of(2) && k.unsigned_abs() as usize == q / 2 {
            c * 0.5
        } else {
            c
        }
    }
}

fn grid_rieffel_table(pair: IndexSet, funcs: &RieffelFunctions, q: usize) -> Result<CoefficientTable> {
    if q < 2 {
        return Err(Error::Config(format!("grid size {q} too small")));
    }
    let fc = grid_coefficients(|t| funcs.f(t), q);
    let gc = grid_coefficients(|t| funcs.g(t), q);
    Ok(assemble_rieffel_table(pair, funcs.theta, q / 2, fc, gc, Some(0.0), None))
}

fn assemble_rieffel_table(
    pair: IndexSet,
    theta: f64,
    n: usize,
    fh: impl Fn(i64) -> C64,
    gh: impl Fn(i64) -> C64,
    reconstruction_error: Option<f64>,
    tail_max: Option<f64>,
) -> CoefficientTable {
    let mut entries = BTreeMap::new();
    let ni = n as i64;
    for k in -ni..=ni {
        entries.insert(vec![k, 0], fh(k));
        entries.insert(vec![k, -1], gh(k));
        entries.insert(vec![k, 1], gh(k) * cis(theta * k as f64));
    }
    let mut table = CoefficientTable {
        index_set: pair,
        n_trunc: n,
        phases: vec![vec![0.0, theta], vec![-theta, 0.0]],
        entries,
        reconstruction_error,
        tail_max,
    };
    table.symmetrize();
    table
}

/// Σ_k a_k U^{k} evaluated by nesting over the leading exponent, so that each
/// distinct prefix costs one product.
fn evaluate_monomials(gens: &[&Operator], entries: &BTreeMap<Vec<i64>, C64>) -> Operator {
    let dim = gens[0].nrows();
    let l = gens.len();
    // powers per generator over the exponent range in use
    let powers: Vec<BTreeMap<i64, Operator>> = (0..l)
        .map(|a| {
            let mut ks: Vec<i64> = entries.keys().map(|k| k[a]).collect();
            ks.sort_unstable();
            ks.dedup();
            ks.into_iter().map(|k| (k, gens[a].pow_unitary(k))).collect()
        })
        .collect();
    fn nest(
        depth: usize,
        items: &[(&Vec<i64>, C64)],
        powers: &[BTreeMap<i64, Operator>],
        dim: usize,
    ) -> Operator {
        if depth == powers.len() {
            let s: C64 = items.iter().map(|x| x.1).sum();
            return Operator::identity(dim).scale(s);
        }
        let mut acc = Operator::zeros(dim);
        let mut start = 0;
        while start < items.len() {
            let k = items[start].0[depth];
            let mut end = start;
            while end < items.len() && items[end].0[depth] == k {
                end += 1;
            }
            let inner = nest(depth + 1, &items[start..end], powers, dim);
            acc = acc.add(&powers[depth][&k].mul(&inner));
            start = end;
        }
        acc
    }
    let items: Vec<(&Vec<i64>, C64)> = entries.iter().filter(|e| *e.1 != C64::default()).map(|(k, v)| (k, *v)).collect();
    nest(0, &items, &powers, dim)
}

/// e_I = (S + S*)/2 with S = Σ a_k U_{i₁}^{k₁}⋯U_{i_l}^{k_l}.
pub fn e_i(t: &UnitaryTuple, i: &IndexSet, table: &CoefficientTable) -> Result<Operator> {
    if &table.index_set != i {
        return Err(Error::TableMismatch { table: table.index_set.to_string(), requested: i.to_string() });
    }
    i.check(t.n)?;
    if table.n_trunc >= t.q {
        return Err(Error::DegreeExceedsQ { n: table.n_trunc, q: t.q });
    }
    let gens: Vec<&Operator> = i.indices().iter().map(|&j| t.u(j)).collect();
    let s = evaluate_monomials(&gens, &table.entries);
    Ok(s.hermitian_part())
}

/// R_I = χ_{(1/2,∞)}(e_I).
pub fn r_i(t: &UnitaryTuple, i: &IndexSet, table: &CoefficientTable) -> Result<ProjectionReport> {
    spectral_projection(&e_i(t, i, table)?, 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bott_values() {
        assert_eq!(bott_f1(0.0), 1.0);
        assert_eq!(bott_f1(0.5), 0.0);
        assert_eq!(bott_g1(0.75), 0.0);
        let (g, h, f) = (bott_g1(0.25), bott_h1(0.25), bott_f1(0.25));
        assert!((g * g + h * h - (f - f * f)).abs() < 1e-15);
        assert!((g * g + h * h - 0.25).abs() < 1e-15);
    }

    #[test]
    fn rieffel_values() {
        let r = RieffelFunctions::new(0.375, 0.125).unwrap();
        assert_eq!(r.f(0.1875), 1.0);
        assert_eq!(r.g(0.7), 0.0);
        assert!(RieffelFunctions::new(0.5, 0.6).is_err());
        assert!(r.identity_residuals(10_000).iter().all(|&x| x < 1e-12));
    }

    #[test]
    fn symmetrize_is_idempotent() {
        let r = RieffelFunctions::new(0.375, 0.375).unwrap();
        let t = rieffel_table(IndexSet::pair(1, 2).unwrap(), &r, Truncation::Adaptive { max: 63 }).unwrap();
        assert!(t.adjoint_asymmetry() < 1e-15);
    }
}
