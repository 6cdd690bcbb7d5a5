//! Eigendecompositions split along the connected components of the
//! sparsity pattern, and operator norms.

use faer::{Mat, Side};
use num_complex::Complex64 as C64;

use super::operator::{frobenius, Operator, Sparse};
use crate::{Error, Result};

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }

    /// Groups in order of their smallest member, each sorted ascending.
    fn groups(mut self, n: usize) -> Vec<Vec<usize>> {
        let mut slot = vec![usize::MAX; n];
        let mut out: Vec<Vec<usize>> = Vec::new();
        for i in 0..n {
            let r = self.find(i);
            if slot[r] == usize::MAX {
                slot[r] = out.len();
                out.push(Vec::new());
            }
            out[slot[r]].push(i);
        }
        out
    }
}

/// Index classes of a square operator that it never couples.
pub fn components(a: &Operator) -> Vec<Vec<usize>> {
    let n = a.nrows();
    match a {
        Operator::Dense(_) => vec![(0..n).collect()],
        Operator::Sparse(s) => {
            let mut uf = UnionFind::new(n);
            for (i, j, _) in s.entries() {
                uf.union(i, j);
            }
            uf.groups(n)
        }
    }
}

/// Row/column classes of a possibly rectangular operator: pairs (rows, cols).
fn bipartite_components(s: &Sparse) -> Vec<(Vec<usize>, Vec<usize>)> {
    let (r, c) = (s.nrows(), s.ncols());
    let mut uf = UnionFind::new(r + c);
    for (i, j, _) in s.entries() {
        uf.union(i, r + j);
    }
    uf.groups(r + c)
        .into_iter()
        .map(|g| {
            let rows = g.iter().copied().filter(|&x| x < r).collect();
            let cols = g.iter().copied().filter(|&x| x >= r).map(|x| x - r).collect();
            (rows, cols)
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct EigBlock<V> {
    pub idx: Vec<usize>,
    pub values: Vec<V>,
    pub vectors: Mat<C64>,
}

/// Eigendecomposition assembled from independent blocks.
#[derive(Clone, Debug)]
pub struct BlockEigen<V> {
    pub n: usize,
    pub blocks: Vec<EigBlock<V>>,
}

pub type HermitianEigen = BlockEigen<f64>;
pub type NormalEigen = BlockEigen<C64>;

impl<V: Copy> BlockEigen<V> {
    pub fn values(&self) -> Vec<V> {
        self.blocks.iter().flat_map(|b| b.values.iter().copied()).collect()
    }

    /// Σ_blocks V f(Λ) V*, sparse across blocks.
    pub fn apply(&self, f: impl Fn(V) -> C64) -> Operator {
        if self.blocks.len() == 1 && self.blocks[0].idx.len() == self.n {
            let b = &self.blocks[0];
            return Operator::Dense(reassemble(&b.vectors, &b.values.iter().map(|&v| f(v)).collect::<Vec<_>>()));
        }
        let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); self.n];
        for b in &self.blocks {
            let fv: Vec<C64> = b.values.iter().map(|&v| f(v)).collect();
            if fv.iter().all(|z| *z == C64::default()) {
                continue;
            }
            let m = reassemble(&b.vectors, &fv);
            for (i, &r) in b.idx.iter().enumerate() {
                rows[r].extend(b.idx.iter().enumerate().map(|(j, &cidx)| (cidx, m[(i, j)])));
            }
        }
        Operator::Sparse(Sparse::from_rows(self.n, rows))
    }
}

fn reassemble(v: &Mat<C64>, f: &[C64]) -> Mat<C64> {
    let scaled = Mat::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * f[j]);
    &scaled * v.adjoint()
}

fn dense_hermitian_eig(a: &Mat<C64>) -> Result<(Vec<f64>, Mat<C64>)> {
    let e = a.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let s = e.S().column_vector();
    let values = (0..a.nrows()).map(|i| s[i].re).collect();
    Ok((values, e.U().to_owned()))
}

/// Hermitian eigendecomposition; the input is symmetrized first.
pub fn eig_hermitian(a: &Operator) -> Result<HermitianEigen> {
    let n = a.nrows();
    let blocks = components(a)
        .into_iter()
        .map(|idx| {
            let raw = a.block(&idx, &idx);
            let h = Mat::from_fn(idx.len(), idx.len(), |i, j| (raw[(i, j)] + raw[(j, i)].conj()) * 0.5);
            let (values, vectors) = dense_hermitian_eig(&h)?;
            Ok(EigBlock { idx, values, vectors })
        })
        .collect::<Result<_>>()?;
    Ok(BlockEigen { n, blocks })
}

/// cos β·(B+B*)/2 + sin β·(B−B*)/2i.
fn hermitian_pair(b: &Mat<C64>, beta: f64) -> Mat<C64> {
    let (cb, sb) = (beta.cos(), beta.sin());
    Mat::from_fn(b.nrows(), b.ncols(), |i, j| {
        let (x, y) = (b[(i, j)], b[(j, i)].conj());
        (x + y) * (0.5 * cb) + (x - y) * C64::new(0.0, -0.5 * sb)
    })
}

const ANGLE_FIRST: f64 = 0.618_033_988_749_895;
const ANGLE_SECOND: f64 = 2.236_067_977_499_79;
/// Relative spacing below which projected eigenvalues are re-split.
const CLUSTER_GAP: f64 = 1e-6;

fn normal_block(b: &Mat<C64>) -> Result<(Vec<C64>, Mat<C64>)> {
    let k = b.nrows();
    let scale = frobenius(b).max(1e-300) / (k as f64).sqrt();
    let (lam, mut v) = dense_hermitian_eig(&hermitian_pair(b, ANGLE_FIRST))?;
    let mut start = 0;
    while start < k {
        let mut end = start + 1;
        while end < k && lam[end] - lam[end - 1] < CLUSTER_GAP * scale.max(1.0) {
            end += 1;
        }
        if end - start > 1 {
            let vc = Mat::from_fn(k, end - start, |i, j| v[(i, start + j)]);
            let sub = vc.adjoint() * b * &vc;
            let (_, w) = dense_hermitian_eig(&hermitian_pair(&sub, ANGLE_SECOND))?;
            let rot = &vc * &w;
            for j in 0..end - start {
                for i in 0..k {
                    v[(i, start + j)] = rot[(i, j)];
                }
            }
        }
        start = end;
    }
    let bv = b * &v;
    let values: Vec<C64> = (0..k).map(|j| (0..k).map(|i| v[(i, j)].conj() * bv[(i, j)]).sum()).collect();
    let resid = frobenius(&Mat::from_fn(k, k, |i, j| bv[(i, j)] - v[(i, j)] * values[j]));
    if resid > 1e-8 * frobenius(b).max(1.0) {
        return Err(Error::Eigen(format!("normal eigendecomposition residual {resid:e}")));
    }
    Ok((values, v))
}

/// Eigendecomposition of a normal operator through Hermitian pairs.
pub fn eig_normal(a: &Operator) -> Result<NormalEigen> {
    let n = a.nrows();
    let blocks = components(a)
        .into_iter()
        .map(|idx| {
            let (values, vectors) = normal_block(&a.block(&idx, &idx))?;
            Ok(EigBlock { idx, values, vectors })
        })
        .collect::<Result<_>>()?;
    Ok(BlockEigen { n, blocks })
}

/// Largest block size handed to a dense SVD; larger blocks use power iteration.
const SVD_LIMIT: usize = 2048;

fn largest_singular_dense(m: &Mat<C64>) -> Result<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(0.0);
    }
    let s = m.singular_values().map_err(|e| Error::Eigen(format!("{e:?}")))?;
    Ok(s.first().copied().unwrap_or(0.0))
}

/// Power iteration on X*X; a lower estimate of ‖X‖ that converges quickly for
/// the residual operators measured here.
fn power_norm(apply: impl Fn(&[C64]) -> Vec<C64>, apply_adj: impl Fn(&[C64]) -> Vec<C64>, n: usize) -> f64 {
    let mut x: Vec<C64> = (0..n).map(|i| C64::new(1.0 + (i as f64 * 0.618).sin() * 0.3, (i as f64 * 0.37).cos() * 0.1)).collect();
    let mut est = 0.0;
    for _ in 0..300 {
        let nx = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nx == 0.0 {
            return 0.0;
        }
        x.iter_mut().for_each(|z| *z /= nx);
        let y = apply_adj(&apply(&x));
        let new = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().sqrt();
        let done = (new - est).abs() <= 1e-13 * new.max(1e-300);
        est = new;
        x = y;
        if done {
            break;
        }
    }
    est
}

/// Spectral norm ‖X‖, computed blockwise over the coupling components.
pub fn op_norm(x: &Operator) -> Result<f64> {
    match x {
        Operator::Dense(m) => {
            if m.nrows().max(m.ncols()) <= SVD_LIMIT {
                largest_singular_dense(m)
            } else {
                let adj = m.adjoint().to_owned();
                let mv = |a: &Mat<C64>, v: &[C64]| -> Vec<C64> {
                    (0..a.nrows()).map(|i| (0..a.ncols()).map(|j| a[(i, j)] * v[j]).sum()).collect()
                };
                Ok(power_norm(|v| mv(m, v), |v| mv(&adj, v), m.ncols()))
            }
        }
        Operator::Sparse(s) => {
            if s.nnz() == 0 {
                return Ok(0.0);
            }
            let mut best: f64 = 0.0;
            for (rows, cols) in bipartite_components(s) {
                if rows.is_empty() || cols.is_empty() {
                    continue;
                }
                let b = x.block(&rows, &cols);
                let v = if rows.len().max(cols.len()) <= SVD_LIMIT {
                    largest_singular_dense(&b)?
                } else {
                    let sb = Sparse::from_dense(&b, 0.0);
                    let sa = sb.adjoint();
                    power_norm(|v| sb.matvec(v), |v| sa.matvec(v), cols.len())
                };
                best = best.max(v);
            }
            Ok(best)
        }
    }
}

/// ‖A − A*‖.
pub fn self_adjoint_defect(a: &Operator) -> Result<f64> {
    op_norm(&a.sub(&a.adjoint()))
}

/// ‖UU* − 1‖ for a square operator.
pub fn unitary_defect(u: &Operator) -> Result<f64> {
    op_norm(&u.mul(&u.adjoint()).sub(&Operator::identity(u.nrows())))
}
