//! The four-torus construction: a smooth bump φ, the corner projection e of
//! trace θ₁₂ built from its periodizations, the corner unitaries ψ(𝔳₃) and
//! ψ(𝔳₄), and the projection e₁ = ψ(e′) of trace pf(Θ) + kθ₁₂.
//!
//! Operators are products of plain monomials, so with U = 𝔲₂* and W = 𝔲₁ the
//! relation reads W h(U) W* = h(U e^{2πiθ₁₂}) and every function of U below
//! is written in the variable t of U = e^{2πit}:
//!
//! e = C(U)W* + G(U) + W C(U),  C(t) = Σ_n √(φ(t+n)φ(t+n−θ₁₂)),
//! ψ(𝔳_j) = Σ_a 𝔲_j D_a(U) 𝔲₁^a,
//! D_a(t) = Σ_n e^{2πi(θ_1j/θ₁₂)(t+n)} √φ(t+n+θ_2j) √φ(t+n+aθ₁₂),
//!
//! for j = 3, 4 and a ∈ [⌊θ_2j/θ₁₂⌋ − 2, ⌊θ_2j/θ₁₂⌋ + 2].

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use rayon::prelude::*;
use serde::Serialize;

use crate::ncrep::{cis, eig_hermitian, op_norm, spectral_projection, unitary_calculus, Operator, ProjectionReport, Sparse, UnitaryTuple};
use crate::projections::{e_i, CoefficientTable};
use crate::scalar::rational_to_f64;
use crate::skewmat::{pfaffian, IndexSet};
use crate::{Error, Result};

/// φ with sin² ramps: sin²(πt/2ε) on [0, ε], 1 on [ε, θ], cos²(π(t−θ)/2ε) on
/// [θ, θ+ε]; √φ is the matching sine ramp, so both are smooth.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BumpProfile {
    pub theta: f64,
    pub eps: f64,
}

impl BumpProfile {
    pub fn new(theta: f64, eps: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < 1.0 && eps > 0.0 && eps <= theta && theta + eps <= 1.0 + 1e-15) {
            return Err(Error::BadEpsilon { theta, eps });
        }
        Ok(Self { theta, eps })
    }

    /// ε = min(θ, 1 − θ)/2.
    pub fn with_default_eps(theta: f64) -> Result<Self> {
        Self::new(theta, theta.min(1.0 - theta) / 2.0)
    }

    /// Right end of the support [0, θ+ε].
    pub fn support(&self) -> f64 {
        self.theta + self.eps
    }

    pub fn sqrt_phi(&self, t: f64) -> f64 {
        let (th, e) = (self.theta, self.eps);
        if t <= 0.0 || t >= th + e {
            0.0
        } else if t < e {
            (PI * t / (2.0 * e)).sin()
        } else if t <= th {
            1.0
        } else {
            (PI * (t - th) / (2.0 * e)).cos()
        }
    }

    pub fn phi(&self, t: f64) -> f64 {
        self.sqrt_phi(t).powi(2)
    }

    /// G(t) = Σ_n φ(t+n).
    pub fn g(&self, t: f64) -> f64 {
        periodize(t, &[0.0], self.support(), |y| C64::new(self.phi(y), 0.0)).re
    }

    /// G±(t) = Σ_n √(φ(t+n+θ/2)φ(t+n−θ/2)).
    pub fn g_pm(&self, t: f64) -> f64 {
        let h = self.theta / 2.0;
        periodize(t, &[h, -h], self.support(), |y| C64::new(self.sqrt_phi(y + h) * self.sqrt_phi(y - h), 0.0)).re
    }

    /// C(t) = G±(t − θ/2), the off-diagonal function of e in monomial order.
    pub fn c(&self, t: f64) -> f64 {
        self.g_pm(t - self.theta / 2.0)
    }

    /// max over an m-point grid of |Σ_n φ(y + θn) − 1|.
    pub fn partition_residual(&self, m: usize) -> f64 {
        let th = self.theta;
        let reach = (self.support() / th).ceil() as i64 + 1;
        (0..m)
            .map(|i| {
                let y = th * i as f64 / m as f64;
                let s: f64 = (-reach..=reach).map(|n| self.phi(y + th * n as f64)).sum();
                (s - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Largest residuals of the projection identities of (G, C) on an
    /// m-point grid: C(t)C(t−θ) = 0, C(t)[G(t) + G(t−θ)] = C(t),
    /// G = G² + C(t)² + C(t+θ)².
    pub fn identity_residuals(&self, m: usize) -> [f64; 3] {
        let th = self.theta;
        let mut r = [0.0f64; 3];
        for i in 0..m {
            let t = i as f64 / m as f64;
            let (g, c) = (self.g(t), self.c(t));
            r[0] = r[0].max((c * self.c(t - th)).abs());
            r[1] = r[1].max((c * (g + self.g(t - th)) - c).abs());
            r[2] = r[2].max((g - g * g - c * c - self.c(t + th).powi(2)).abs());
        }
        r
    }
}

/// Σ_n h(t+n) over the integers n for which every argument t+n+s, s in
/// `shifts`, lies in [0, len]; h vanishes for all other n.
fn periodize(t: f64, shifts: &[f64], len: f64, h: impl Fn(f64) -> C64) -> C64 {
    let lo = shifts.iter().map(|s| -s).fold(f64::NEG_INFINITY, f64::max);
    let hi = shifts.iter().map(|s| len - s).fold(f64::INFINITY, f64::min);
    if lo > hi {
        return C64::default();
    }
    let (n0, n1) = ((lo - t).ceil() as i64, (hi - t).floor() as i64);
    (n0..=n1).map(|n| h(t + n as f64)).sum()
}

/// f(U) for a complex-valued f of the angle variable t, U = e^{2πit}.
fn calculus(u: &Operator, f: impl Fn(f64) -> C64) -> Result<Operator> {
    unitary_calculus(u, move |z: C64| f((z.arg() / std::f64::consts::TAU).rem_euclid(1.0)))
}

/// The corner projection and its ingredients.
#[derive(Clone, Debug)]
pub struct CornerData {
    pub profile: BumpProfile,
    pub element: Operator,
    pub report: ProjectionReport,
    /// Mean of G over the q-th roots of unity.
    pub grid_mean: f64,
}

fn check_profile(t: &UnitaryTuple, profile: &BumpProfile) -> Result<f64> {
    if t.n < 2 {
        return Err(Error::Config(format!("need at least two generators, got {}", t.n)));
    }
    let th = t.phase(1, 2);
    if (th - profile.theta).abs() > 1e-12 {
        return Err(Error::Config(format!("profile is for theta_12 = {}, tuple has {th}", profile.theta)));
    }
    Ok(th)
}

/// e = C(U)W* + G(U) + W C(U) with U = 𝔲₂*, W = 𝔲₁.
pub fn corner_projection(t: &UnitaryTuple, profile: &BumpProfile) -> Result<CornerData> {
    check_profile(t, profile)?;
    let u = t.u(2).adjoint();
    let w = t.u(1);
    let g = calculus(&u, |x| C64::new(profile.g(x), 0.0))?;
    let c = calculus(&u, |x| C64::new(profile.c(x), 0.0))?;
    let element = c.mul(&w.adjoint()).add(&g).add(&w.mul(&c));
    let report = spectral_projection(&element, 0.5)?;
    let q = t.q.max(1);
    let grid_mean = (0..q).map(|k| profile.g(k as f64 / q as f64)).sum::<f64>() / q as f64;
    Ok(CornerData { profile: *profile, element, report, grid_mean })
}

/// ψ(𝔳_j) for j ∈ {3, 4}: Σ_a 𝔲_j D_a(𝔲₂*) 𝔲₁^a.
pub fn psi_generator(t: &UnitaryTuple, profile: &BumpProfile, j: usize) -> Result<Operator> {
    let th = check_profile(t, profile)?;
    if j < 3 || j > t.n {
        return Err(Error::IndexOutOfRange { index: j, n: t.n });
    }
    let (t1j, t2j) = (t.phase(1, j), t.phase(2, j));
    let u = t.u(2).adjoint();
    let (w, uj) = (t.u(1), t.u(j));
    let r = (t2j / th).floor() as i64;
    let len = profile.support();
    let terms: Vec<Operator> = ((r - 2)..=(r + 2))
        .into_par_iter()
        .map(|a| -> Result<Option<Operator>> {
            let shifts = [t2j, a as f64 * th];
            let lo = shifts.iter().map(|s| -s).fold(f64::NEG_INFINITY, f64::max);
            let hi = shifts.iter().map(|s| len - s).fold(f64::INFINITY, f64::min);
            if hi - lo <= 0.0 {
                return Ok(None);
            }
            let d = calculus(&u, |x| {
                periodize(x, &shifts, len, |y| {
                    cis(t1j / th * y) * (profile.sqrt_phi(y + t2j) * profile.sqrt_phi(y + a as f64 * th))
                })
            })?;
            Ok(Some(uj.mul(&d).mul(&w.pow_unitary(a))))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    Ok(terms.iter().fold(Operator::zeros(t.dim()), |acc, x| acc.add(x)))
}

pub fn psi_v3(t: &UnitaryTuple, profile: &BumpProfile) -> Result<Operator> {
    psi_generator(t, profile, 3)
}

pub fn psi_v4(t: &UnitaryTuple, profile: &BumpProfile) -> Result<Operator> {
    psi_generator(t, profile, 4)
}

/// Residuals showing that P is a unitary of the corner eAe.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CornerUnitarity {
    /// ‖P*P − e‖.
    pub left: f64,
    /// ‖PP* − e‖.
    pub right: f64,
    /// ‖ePe − P‖.
    pub membership: f64,
}

pub fn corner_unitarity(p: &Operator, e: &Operator) -> Result<CornerUnitarity> {
    Ok(CornerUnitarity {
        left: op_norm(&p.adjoint().mul(p).sub(e))?,
        right: op_norm(&p.mul(&p.adjoint()).sub(e))?,
        membership: op_norm(&e.mul(p).mul(e).sub(p))?,
    })
}

/// How the integer shift k in θ′ = pf(Θ)/θ₁₂ + k is chosen.
#[derive(Clone, Copy, Debug, Serialize)]
pub enum KChoice {
    /// k = −⌊pf(Θ)/θ₁₂⌋.
    Auto,
    Fixed(i64),
}

/// e₁ together with everything needed to inspect it. The element lives on
/// the range of e, with `corner_basis` the isometry onto it.
#[derive(Clone, Debug)]
pub struct FourTorusProjection {
    pub corner: CornerData,
    pub psi3: Operator,
    pub psi4: Operator,
    pub corner_basis: Sparse,
    /// e′ compressed to the range of e.
    pub element: Operator,
    /// Spectral projection of the compressed element.
    pub report: ProjectionReport,
    pub k: i64,
    /// pf(Θ)/θ₁₂ + k, the trace of e′ relative to the corner.
    pub theta_prime: f64,
    pub pfaffian: f64,
    /// rank(e₁)/dim.
    pub trace: f64,
    /// pf(Θ) + kθ₁₂.
    pub target: f64,
    /// Bump for the θ′ family, distinct from the corner bump.
    pub inner_profile: BumpProfile,
}

impl FourTorusProjection {
    /// ‖e₁² − e₁‖.
    pub fn idem_err(&self) -> f64 {
        self.report.idem_err
    }

    /// Embeds an operator on the corner back into the full space.
    pub fn embed(&self, x: &Operator) -> Operator {
        let w = Operator::Sparse(self.corner_basis.clone());
        w.mul(x).mul(&w.adjoint())
    }

    /// e₁ as an operator on the full space.
    pub fn e1(&self) -> Operator {
        self.embed(&self.report.projection)
    }

    pub fn summary(&self) -> FourTorusSummary {
        FourTorusSummary {
            dim: self.corner_basis.nrows(),
            corner_rank: self.corner_basis.ncols(),
            corner_trace: self.corner.report.trace,
            corner_idem_err: self.corner.report.idem_err,
            k: self.k,
            theta_prime: self.theta_prime,
            pfaffian: self.pfaffian,
            rank: self.report.rank,
            trace: self.trace,
            target: self.target,
            idem_err: self.report.idem_err,
            gap: self.report.gap,
            inner_profile: self.inner_profile,
            inner_family: "fresh bump at theta_prime",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FourTorusSummary {
    pub dim: usize,
    pub corner_rank: usize,
    pub corner_trace: f64,
    pub corner_idem_err: f64,
    pub k: i64,
    pub theta_prime: f64,
    pub pfaffian: f64,
    pub rank: usize,
    pub trace: f64,
    pub target: f64,
    pub idem_err: f64,
    pub gap: f64,
    pub inner_profile: BumpProfile,
    pub inner_family: &'static str,
}

/// Orthonormal basis of the range of a projection, as a dim × rank isometry.
fn range_basis(p: &Operator) -> Result<Sparse> {
    let eig = eig_hermitian(p)?;
    let dim = p.nrows();
    let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); dim];
    let mut col = 0;
    for b in &eig.blocks {
        for (j, &l) in b.values.iter().enumerate() {
            if l > 0.5 {
                for (i, &r) in b.idx.iter().enumerate() {
                    let v = b.vectors[(i, j)];
                    if v.norm() > 1e-15 {
                        rows[r].push((col, v));
                    }
                }
                col += 1;
            }
        }
    }
    Ok(Sparse::from_rows(col, rows))
}

/// W* X W for the isometry W.
fn compress(w: &Sparse, x: &Operator) -> Operator {
    let w = Operator::Sparse(w.clone());
    Operator::Dense(w.adjoint().mul(x).mul(&w).to_dense())
}

/// e₁ = ψ(e′): the Rieffel projection e′ = C′(U′)W′* + G′(U′) + W′C′(U′) of
/// trace θ′ in C*(𝔳₃, 𝔳₄), with U′ = ψ(𝔳₄)* and W′ = ψ(𝔳₃) taken on the
/// range of e, where both are unitary.
pub fn rieffel_type_4d(
    t: &UnitaryTuple,
    profile: &BumpProfile,
    k: KChoice,
    inner_eps: Option<f64>,
) -> Result<FourTorusProjection> {
    if t.n != 4 {
        return Err(Error::Config(format!("the four-torus construction needs n = 4, got {}", t.n)));
    }
    let th = check_profile(t, profile)?;
    let pf_exact = pfaffian(&t.theta)?;
    let theta12 = t.theta.theta(1, 2).clone();
    let ratio: BigRational = &pf_exact / &theta12;
    if ratio.is_integer() {
        return Err(Error::IntegerRatio(rational_to_f64(&ratio)));
    }
    let k = match k {
        KChoice::Auto => -ratio.floor().to_integer().to_i64().ok_or_else(|| Error::Config("ratio out of range".into()))?,
        KChoice::Fixed(k) => k,
    };
    let tp_exact = &ratio + BigRational::from_integer(k.into());
    let theta_prime = rational_to_f64(&tp_exact);
    if !(tp_exact.is_positive() && theta_prime < 1.0) {
        return Err(Error::Config(format!("theta' = {theta_prime} is outside (0, 1) for k = {k}")));
    }
    let inner_profile = match inner_eps {
        Some(e) => BumpProfile::new(theta_prime, e)?,
        None => BumpProfile::with_default_eps(theta_prime)?,
    };
    let corner = corner_projection(t, profile)?;
    let psi3 = psi_v3(t, profile)?;
    let psi4 = psi_v4(t, profile)?;
    let corner_basis = range_basis(&corner.report.projection)?;
    let u = compress(&corner_basis, &psi4.adjoint());
    let w = compress(&corner_basis, &psi3);
    let g = calculus(&u, |x| C64::new(inner_profile.g(x), 0.0))?;
    let c = calculus(&u, |x| C64::new(inner_profile.c(x), 0.0))?;
    let element = c.mul(&w.adjoint()).add(&g).add(&w.mul(&c));
    let report = spectral_projection(&element, 0.5)?;
    let pf = rational_to_f64(&pf_exact);
    let trace = report.rank as f64 / t.dim() as f64;
    Ok(FourTorusProjection {
        corner,
        psi3,
        psi4,
        corner_basis,
        element,
        report,
        k,
        theta_prime,
        pfaffian: pf,
        trace,
        target: pf + k as f64 * th,
        inner_profile,
    })
}

/// ‖ψ(𝔳₄)ψ(𝔳₃) − e^{2πiθ′₃₄}ψ(𝔳₃)ψ(𝔳₄)‖ with θ′₃₄ = pf(Θ)/θ₁₂.
pub fn psi_commutation_residual(p: &FourTorusProjection) -> Result<f64> {
    let lhs = p.psi4.mul(&p.psi3);
    let rhs = p.psi3.mul(&p.psi4).scale(cis(p.pfaffian / p.corner.profile.theta));
    op_norm(&lhs.sub(&rhs))
}

/// Coefficients a_k = tr((𝔲₁^{k₁}𝔲₂^{k₂}𝔲₃^{k₃}𝔲₄^{k₄})* x)/dim for |k_i| ≤ N,
/// with the measured ‖e_I − x‖ as reconstruction error. Needs 2N+1 ≤ q for
/// distinct monomials.
pub fn four_torus_table(t: &UnitaryTuple, x: &Operator, n_trunc: usize) -> Result<CoefficientTable> {
    if t.n != 4 {
        return Err(Error::Config(format!("four-torus table needs n = 4, got {}", t.n)));
    }
    if 2 * n_trunc + 1 > t.q {
        return Err(Error::DegreeExceedsQ { n: n_trunc, q: t.q });
    }
    let index_set = IndexSet::leading(4)?;
    let ni = n_trunc as i64;
    let powers: Vec<BTreeMap<i64, Operator>> =
        (1..=4).map(|j| (-ni..=ni).map(|k| (k, t.u(j).pow_unitary(k))).collect()).collect();
    let dim = t.dim() as f64;
    let xd = x.to_dense();
    let mut entries = BTreeMap::new();
    for k1 in -ni..=ni {
        let m1 = &powers[0][&k1];
        for k2 in -ni..=ni {
            let m2 = m1.mul(&powers[1][&k2]);
            for k3 in -ni..=ni {
                let m3 = m2.mul(&powers[2][&k3]);
                for k4 in -ni..=ni {
                    let m = m3.mul(&powers[3][&k4]);
                    let a = frobenius_inner(&m, &xd) / dim;
                    if a.norm() > 1e-15 {
                        entries.insert(vec![k1, k2, k3, k4], a);
                    }
                }
            }
        }
    }
    let phases = (0..4).map(|a| (0..4).map(|b| t.phase(a + 1, b + 1)).collect()).collect();
    let mut table = CoefficientTable {
        index_set,
        n_trunc,
        phases,
        entries,
        reconstruction_error: None,
        tail_max: None,
    };
    table.symmetrize();
    let rebuilt = e_i(t, &table.index_set.clone(), &table)?;
    table.reconstruction_error = Some(op_norm(&rebuilt.sub(x))?);
    Ok(table)
}

/// tr(M* X) = Σ conj(M_ij) X_ij.
fn frobenius_inner(m: &Operator, x: &faer::Mat<C64>) -> C64 {
    match m {
        Operator::Sparse(s) => s.entries().map(|(i, j, v)| v.conj() * x[(i, j)]).sum(),
        Operator::Dense(d) => {
            let mut acc = C64::default();
            for j in 0..d.ncols() {
                for i in 0..d.nrows() {
                    acc += d[(i, j)].conj() * x[(i, j)];
                }
            }
            acc
        }
    }
}
