//! Independent oracles and generators shared by the integration tests.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nctorus::skewmat::SkewMatrix;

pub fn q(p: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(d))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Skew matrix from an integer upper triangle (row by row) over a common
/// denominator.
pub fn skew_q(n: usize, upper: &[i64], den: i64) -> SkewMatrix<BigRational> {
    let mut it = upper.iter();
    SkewMatrix::from_upper(n, |_, _| q(*it.next().expect("enough entries"), den))
}

pub fn skew_f(n: usize, upper: &[f64]) -> SkewMatrix<f64> {
    let mut it = upper.iter();
    SkewMatrix::from_upper(n, |_, _| *it.next().expect("enough entries"))
}

pub fn random_ints(r: &mut ChaCha8Rng, len: usize, lo: i64, hi: i64) -> Vec<i64> {
    (0..len).map(|_| r.random_range(lo..=hi)).collect()
}

/// Random rational skew matrix with small numerators over a random denominator.
pub fn random_skew_q(r: &mut ChaCha8Rng, n: usize) -> SkewMatrix<BigRational> {
    let den = r.random_range(1..=9);
    let ups = random_ints(r, n * (n - 1) / 2, -9, 9);
    skew_q(n, &ups, den)
}

pub fn dense(m: &SkewMatrix<BigRational>) -> Vec<Vec<BigRational>> {
    let n = m.n();
    (0..n).map(|j| (0..n).map(|k| m.get(j, k).clone()).collect()).collect()
}

/// Pfaffian as the signed sum over perfect matchings, expanding on the first
/// remaining index.
pub fn matching_pfaffian(a: &[Vec<BigRational>]) -> BigRational {
    fn go(a: &[Vec<BigRational>], rest: &[usize]) -> BigRational {
        if rest.is_empty() {
            return BigRational::one();
        }
        let i = rest[0];
        let mut acc = BigRational::zero();
        for (pos, &j) in rest.iter().enumerate().skip(1) {
            let remaining: Vec<usize> = rest.iter().copied().filter(|&x| x != i && x != j).collect();
            let term = &a[i][j] * go(a, &remaining);
            if pos % 2 == 1 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        acc
    }
    if a.len() % 2 == 1 {
        return BigRational::zero();
    }
    go(a, &(0..a.len()).collect::<Vec<_>>())
}

/// Determinant over ℚ by cofactor-free elimination on cleared denominators.
pub fn det_q(a: &[Vec<BigRational>]) -> BigRational {
    let n = a.len();
    let mut m: Vec<Vec<BigRational>> = a.to_vec();
    let mut det = BigRational::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&r| !m[r][c].is_zero()) else {
            return BigRational::zero();
        };
        if p != c {
            m.swap(p, c);
            det = -det;
        }
        let piv = m[c][c].clone();
        det *= &piv;
        for r in c + 1..n {
            let f = &m[r][c] / &piv;
            for k in c..n {
                let d = &f * &m[c][k];
                m[r][k] -= d;
            }
        }
    }
    det
}

pub fn mat_mul(a: &[Vec<BigRational>], b: &[Vec<BigRational>]) -> Vec<Vec<BigRational>> {
    let n = a.len();
    let m = b[0].len();
    (0..n)
        .map(|i| (0..m).map(|j| (0..b.len()).fold(BigRational::zero(), |s, k| s + &a[i][k] * &b[k][j])).collect())
        .collect()
}

pub fn transpose(a: &[Vec<BigRational>]) -> Vec<Vec<BigRational>> {
    (0..a[0].len()).map(|j| a.iter().map(|row| row[j].clone()).collect()).collect()
}

/// Θ₂₂ − Θ₂₁Θ₁₁⁻¹Θ₁₂ with Θ₁₁⁻¹ = (1/θ₁₂)(0 −1; 1 0) written out.
pub fn schur_oracle(a: &[Vec<BigRational>]) -> Vec<Vec<BigRational>> {
    let n = a.len();
    let t = a[0][1].clone();
    let inv = [[BigRational::zero(), -(BigRational::one() / &t)], [BigRational::one() / &t, BigRational::zero()]];
    (2..n)
        .map(|j| {
            (2..n)
                .map(|k| {
                    let mut s = a[j][k].clone();
                    for x in 0..2 {
                        for y in 0..2 {
                            s -= &a[j][x] * &inv[x][y] * &a[y][k];
                        }
                    }
                    s
                })
                .collect()
        })
        .collect()
}

pub fn to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap()
}
