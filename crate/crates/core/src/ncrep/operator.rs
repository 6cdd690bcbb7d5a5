//! Complex operators stored sparse (row lists) or dense (faer), with the
//! arithmetic the constructions need. Mixed operands fall back to dense.

use faer::Mat;
use num_complex::Complex64 as C64;

/// Row-list sparse matrix; each row holds (column, value) sorted by column.
#[derive(Clone, Debug, PartialEq)]
pub struct Sparse {
    nrows: usize,
    ncols: usize,
    rows: Vec<Vec<(usize, C64)>>,
}

impl Sparse {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, rows: vec![Vec::new(); nrows] }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![C64::new(1.0, 0.0); n])
    }

    pub fn diagonal(d: &[C64]) -> Self {
        let rows = d.iter().enumerate().map(|(i, &v)| if v == C64::default() { vec![] } else { vec![(i, v)] }).collect();
        Self { nrows: d.len(), ncols: d.len(), rows }
    }

    /// Builds from per-row entry lists; duplicate columns are summed.
    pub fn from_rows(ncols: usize, rows: Vec<Vec<(usize, C64)>>) -> Self {
        let rows = rows
            .into_iter()
            .map(|mut r| {
                r.sort_by_key(|e| e.0);
                let mut out: Vec<(usize, C64)> = Vec::with_capacity(r.len());
                for (c, v) in r {
                    match out.last_mut() {
                        Some(last) if last.0 == c => last.1 += v,
                        _ => out.push((c, v)),
                    }
                }
                out.retain(|e| e.1 != C64::default());
                out
            })
            .collect::<Vec<_>>();
        Self { nrows: rows.len(), ncols, rows }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn row(&self, i: usize) -> &[(usize, C64)] {
        &self.rows[i]
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.rows[i].iter().find(|e| e.0 == j).map_or(C64::default(), |e| e.1)
    }

    /// Whether every row and column holds exactly one entry.
    pub fn is_monomial(&self) -> bool {
        if self.nrows != self.ncols || self.rows.iter().any(|r| r.len() != 1) {
            return false;
        }
        let mut seen = vec![false; self.ncols];
        self.rows.iter().all(|r| !std::mem::replace(&mut seen[r[0].0], true))
    }

    pub fn mul(&self, other: &Sparse) -> Sparse {
        assert_eq!(self.ncols, other.nrows, "sparse product shape mismatch");
        let mut acc = vec![C64::default(); other.ncols];
        let mut mark = vec![usize::MAX; other.ncols];
        let mut touched = Vec::new();
        let rows = (0..self.nrows)
            .map(|i| {
                touched.clear();
                for &(k, a) in &self.rows[i] {
                    for &(j, b) in &other.rows[k] {
                        if mark[j] != i {
                            mark[j] = i;
                            acc[j] = C64::default();
                            touched.push(j);
                        }
                        acc[j] += a * b;
                    }
                }
                touched.sort_unstable();
                touched.iter().map(|&j| (j, acc[j])).filter(|e| e.1 != C64::default()).collect()
            })
            .collect();
        Sparse { nrows: self.nrows, ncols: other.ncols, rows }
    }

    /// self + s·other.
    pub fn add_scaled(&self, other: &Sparse, s: C64) -> Sparse {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols), "sparse sum shape mismatch");
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| {
                let mut out = Vec::with_capacity(a.len() + b.len());
                let (mut i, mut j) = (0, 0);
                while i < a.len() || j < b.len() {
                    let take_a = j == b.len() || (i < a.len() && a[i].0 < b[j].0);
                    let take_b = i == a.len() || (j < b.len() && b[j].0 < a[i].0);
                    if take_a {
                        out.push(a[i]);
                        i += 1;
                    } else if take_b {
                        out.push((b[j].0, s * b[j].1));
                        j += 1;
                    } else {
                        let v = a[i].1 + s * b[j].1;
                        if v != C64::default() {
                            out.push((a[i].0, v));
                        }
                        i += 1;
                        j += 1;
                    }
                }
                out
            })
            .collect();
        Sparse { nrows: self.nrows, ncols: self.ncols, rows }
    }

    pub fn scale(&self, s: C64) -> Sparse {
        let rows = self.rows.iter().map(|r| r.iter().map(|&(c, v)| (c, s * v)).collect()).collect();
        Sparse { nrows: self.nrows, ncols: self.ncols, rows }
    }

    pub fn adjoint(&self) -> Sparse {
        let mut rows = vec![Vec::new(); self.ncols];
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, v) in r {
                rows[j].push((i, v.conj()));
            }
        }
        Sparse { nrows: self.ncols, ncols: self.nrows, rows }
    }

    pub fn trace(&self) -> C64 {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).sum()
    }

    /// Drops entries with modulus at most `tol`.
    pub fn prune(&self, tol: f64) -> Sparse {
        let rows = self.rows.iter().map(|r| r.iter().copied().filter(|e| e.1.norm() > tol).collect()).collect();
        Sparse { nrows: self.nrows, ncols: self.ncols, rows }
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        self.rows.iter().map(|r| r.iter().map(|&(j, v)| v * x[j]).sum()).collect()
    }

    pub fn to_dense(&self) -> Mat<C64> {
        let mut m = Mat::zeros(self.nrows, self.ncols);
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, v) in r {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn from_dense(m: &Mat<C64>, tol: f64) -> Sparse {
        let rows = (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| (j, m[(i, j)])).filter(|e| e.1.norm() > tol).collect())
            .collect();
        Sparse { nrows: m.nrows(), ncols: m.ncols(), rows }
    }

    /// Sparse times dense.
    pub fn mul_dense(&self, b: &Mat<C64>) -> Mat<C64> {
        let mut out = Mat::zeros(self.nrows, b.ncols());
        for (i, r) in self.rows.iter().enumerate() {
            for &(k, a) in r {
                for j in 0..b.ncols() {
                    out[(i, j)] += a * b[(k, j)];
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.rows.iter().flatten().map(|e| e.1.norm()).fold(0.0, f64::max)
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        self.rows.iter().enumerate().flat_map(|(i, r)| r.iter().map(move |&(j, v)| (i, j, v)))
    }
}

/// A linear map on ℂ^dim held either sparse or dense.
#[derive(Clone, Debug)]
pub enum Operator {
    Sparse(Sparse),
    Dense(Mat<C64>),
}

/// Density above which sparse results are converted to dense storage.
const DENSE_FILL: f64 = 0.3;

impl Operator {
    pub fn identity(n: usize) -> Self {
        Self::Sparse(Sparse::identity(n))
    }

    pub fn zeros(n: usize) -> Self {
        Self::Sparse(Sparse::zeros(n, n))
    }

    pub fn nrows(&self) -> usize {
        match self {
            Self::Sparse(s) => s.nrows(),
            Self::Dense(d) => d.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            Self::Sparse(s) => s.ncols(),
            Self::Dense(d) => d.ncols(),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, Self::Sparse(_))
    }

    pub fn to_dense(&self) -> Mat<C64> {
        match self {
            Self::Sparse(s) => s.to_dense(),
            Self::Dense(d) => d.clone(),
        }
    }

    /// Switches sparse storage to dense when the fill is high.
    fn settle(self) -> Self {
        match self {
            Self::Sparse(s) if (s.nnz() as f64) > DENSE_FILL * (s.nrows() * s.ncols()) as f64 && s.nrows() > 8 => {
                Self::Dense(s.to_dense())
            }
            other => other,
        }
    }

    pub fn mul(&self, other: &Operator) -> Operator {
        match (self, other) {
            (Self::Sparse(a), Self::Sparse(b)) => Self::Sparse(a.mul(b)).settle(),
            (Self::Sparse(a), Self::Dense(b)) => Self::Dense(a.mul_dense(b)),
            (Self::Dense(a), Self::Sparse(b)) => {
                // (B* A*)* keeps the sparse factor on the left
                let t = b.adjoint().mul_dense(&a.adjoint().to_owned());
                Self::Dense(t.adjoint().to_owned())
            }
            (Self::Dense(a), Self::Dense(b)) => Self::Dense(a * b),
        }
    }

    /// self + s·other.
    pub fn add_scaled(&self, other: &Operator, s: C64) -> Operator {
        match (self, other) {
            (Self::Sparse(a), Self::Sparse(b)) => Self::Sparse(a.add_scaled(b, s)).settle(),
            _ => {
                let mut d = self.to_dense();
                match other {
                    Self::Sparse(b) => {
                        for (i, j, v) in b.entries() {
                            d[(i, j)] += s * v;
                        }
                    }
                    Self::Dense(b) => {
                        for j in 0..d.ncols() {
                            for i in 0..d.nrows() {
                                d[(i, j)] += s * b[(i, j)];
                            }
                        }
                    }
                }
                Self::Dense(d)
            }
        }
    }

    pub fn add(&self, other: &Operator) -> Operator {
        self.add_scaled(other, C64::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &Operator) -> Operator {
        self.add_scaled(other, C64::new(-1.0, 0.0))
    }

    pub fn scale(&self, s: C64) -> Operator {
        match self {
            Self::Sparse(a) => Self::Sparse(a.scale(s)),
            Self::Dense(a) => Self::Dense(Mat::from_fn(a.nrows(), a.ncols(), |i, j| s * a[(i, j)])),
        }
    }

    pub fn adjoint(&self) -> Operator {
        match self {
            Self::Sparse(a) => Self::Sparse(a.adjoint()),
            Self::Dense(a) => Self::Dense(a.adjoint().to_owned()),
        }
    }

    /// (A + A*)/2.
    pub fn hermitian_part(&self) -> Operator {
        self.add(&self.adjoint()).scale(C64::new(0.5, 0.0))
    }

    pub fn trace(&self) -> C64 {
        match self {
            Self::Sparse(a) => a.trace(),
            Self::Dense(a) => (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)]).sum(),
        }
    }

    /// Normalized trace (1/dim)·Tr.
    pub fn normalized_trace(&self) -> C64 {
        self.trace() / self.nrows() as f64
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        match self {
            Self::Sparse(a) => a.get(i, j),
            Self::Dense(a) => a[(i, j)],
        }
    }

    pub fn max_abs(&self) -> f64 {
        match self {
            Self::Sparse(a) => a.max_abs(),
            Self::Dense(a) => {
                let mut m: f64 = 0.0;
                for j in 0..a.ncols() {
                    for i in 0..a.nrows() {
                        m = m.max(a[(i, j)].norm());
                    }
                }
                m
            }
        }
    }

    /// Integer power by repeated squaring; negative powers use the adjoint
    /// (valid for unitaries).
    pub fn pow_unitary(&self, k: i64) -> Operator {
        let base = if k < 0 { self.adjoint() } else { self.clone() };
        let mut e = k.unsigned_abs();
        let mut acc = Operator::identity(self.nrows());
        let mut b = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&b);
            }
            e >>= 1;
            if e > 0 {
                b = b.mul(&b);
            }
        }
        acc
    }

    /// Operator restricted to the given rows and columns, as a dense block.
    pub fn block(&self, rows: &[usize], cols: &[usize]) -> Mat<C64> {
        match self {
            Self::Dense(a) => Mat::from_fn(rows.len(), cols.len(), |i, j| a[(rows[i], cols[j])]),
            Self::Sparse(a) => {
                let mut pos = vec![usize::MAX; a.ncols()];
                for (k, &c) in cols.iter().enumerate() {
                    pos[c] = k;
                }
                let mut m = Mat::zeros(rows.len(), cols.len());
                for (i, &r) in rows.iter().enumerate() {
                    for &(c, v) in a.row(r) {
                        if pos[c] != usize::MAX {
                            m[(i, pos[c])] = v;
                        }
                    }
                }
                m
            }
        }
    }

    pub fn as_sparse(&self) -> Option<&Sparse> {
        match self {
            Self::Sparse(s) => Some(s),
            Self::Dense(_) => None,
        }
    }
}

impl From<Sparse> for Operator {
    fn from(s: Sparse) -> Self {
        Self::Sparse(s)
    }
}

impl From<Mat<C64>> for Operator {
    fn from(m: Mat<C64>) -> Self {
        Self::Dense(m)
    }
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// e^{2πi t}.
pub fn cis(t: f64) -> C64 {
    let a = std::f64::consts::TAU * t;
    C64::new(a.cos(), a.sin())
}

/// Frobenius norm of a dense block.
pub fn frobenius(m: &Mat<C64>) -> f64 {
    let mut s = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            s += m[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}
