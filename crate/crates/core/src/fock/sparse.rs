//! Compressed sparse row matrices over `Complex64`.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<C64>,
}

impl Csr {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Csr { rows, cols, indptr: vec![0; rows + 1], indices: Vec::new(), data: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Csr {
            rows: n,
            cols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            data: vec![C64::new(1.0, 0.0); n],
        }
    }

    /// Duplicates are summed; exact zeros are dropped. The result does not
    /// depend on triplet order.
    pub fn from_triplets(rows: usize, cols: usize, mut t: Vec<(usize, usize, C64)>) -> Self {
        t.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0; rows + 1];
        let mut indices = Vec::with_capacity(t.len());
        let mut data: Vec<C64> = Vec::with_capacity(t.len());
        let mut k = 0;
        while k < t.len() {
            let (r, c, mut v) = t[k];
            assert!(r < rows && c < cols, "triplet ({r}, {c}) out of bounds");
            k += 1;
            while k < t.len() && t[k].0 == r && t[k].1 == c {
                v += t[k].2;
                k += 1;
            }
            if v != C64::new(0.0, 0.0) {
                indices.push(c);
                data.push(v);
                indptr[r + 1] += 1;
            }
        }
        for r in 0..rows {
            indptr[r + 1] += indptr[r];
        }
        Csr { rows, cols, indptr, indices, data }
    }

    pub fn from_dense(m: &DMatrix<C64>) -> Self {
        let mut t = Vec::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let v = m[(r, c)];
                if v != C64::new(0.0, 0.0) {
                    t.push((r, c, v));
                }
            }
        }
        Csr::from_triplets(m.nrows(), m.ncols(), t)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    /// `(column, value)` pairs of row `r`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let (a, b) = (self.indptr[r], self.indptr[r + 1]);
        self.indices[a..b].iter().copied().zip(self.data[a..b].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.rows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let (a, b) = (self.indptr[r], self.indptr[r + 1]);
        match self.indices[a..b].binary_search(&c) {
            Ok(k) => self.data[a + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn is_diagonal(&self) -> bool {
        self.triplets().all(|(r, c, _)| r == c)
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols)).map(|k| self.get(k, k)).collect()
    }

    pub fn matvec_into(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(y.len(), self.rows);
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.data[k] * x[self.indices[k]];
            }
            *out = acc;
        }
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.rows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn scale(&self, s: C64) -> Csr {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= s;
        }
        if s == C64::new(0.0, 0.0) {
            return Csr::zeros(self.rows, self.cols);
        }
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Csr {
        let t = self.triplets().map(|(r, c, v)| (c, r, v.conj())).collect();
        Csr::from_triplets(self.cols, self.rows, t)
    }

    /// `self + s·other`.
    pub fn add_scaled(&self, other: &Csr, s: C64) -> Csr {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut indptr = vec![0; self.rows + 1];
        let mut indices = Vec::with_capacity(self.nnz() + other.nnz());
        let mut data = Vec::with_capacity(self.nnz() + other.nnz());
        for r in 0..self.rows {
            let (mut i, ie) = (self.indptr[r], self.indptr[r + 1]);
            let (mut j, je) = (other.indptr[r], other.indptr[r + 1]);
            while i < ie || j < je {
                let (c, v) = if j >= je || (i < ie && self.indices[i] < other.indices[j]) {
                    i += 1;
                    (self.indices[i - 1], self.data[i - 1])
                } else if i >= ie || other.indices[j] < self.indices[i] {
                    j += 1;
                    (other.indices[j - 1], s * other.data[j - 1])
                } else {
                    i += 1;
                    j += 1;
                    (self.indices[i - 1], self.data[i - 1] + s * other.data[j - 1])
                };
                if v != C64::new(0.0, 0.0) {
                    indices.push(c);
                    data.push(v);
                }
            }
            indptr[r + 1] = indices.len();
        }
        Csr { rows: self.rows, cols: self.cols, indptr, indices, data }
    }

    /// Sparse product `self · other` with a dense row accumulator.
    pub fn mul(&self, other: &Csr) -> Csr {
        assert_eq!(self.cols, other.rows);
        let mut acc = vec![C64::new(0.0, 0.0); other.cols];
        let mut mark = vec![usize::MAX; other.cols];
        let mut touched = Vec::new();
        let mut indptr = vec![0; self.rows + 1];
        let mut indices = Vec::new();
        let mut data = Vec::new();
        for r in 0..self.rows {
            touched.clear();
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    if mark[c] != r {
                        mark[c] = r;
                        acc[c] = C64::new(0.0, 0.0);
                        touched.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                if acc[c] != C64::new(0.0, 0.0) {
                    indices.push(c);
                    data.push(acc[c]);
                }
            }
            indptr[r + 1] = indices.len();
        }
        Csr { rows: self.rows, cols: other.cols, indptr, indices, data }
    }

    /// Kronecker product; `self` indexes the slower (outer) factor.
    pub fn kron(&self, other: &Csr) -> Csr {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut indptr = vec![0; rows + 1];
        let mut indices = Vec::with_capacity(self.nnz() * other.nnz());
        let mut data = Vec::with_capacity(self.nnz() * other.nnz());
        for ra in 0..self.rows {
            for rb in 0..other.rows {
                for (ca, a) in self.row(ra) {
                    for (cb, b) in other.row(rb) {
                        indices.push(ca * other.cols + cb);
                        data.push(a * b);
                    }
                }
                indptr[ra * other.rows + rb + 1] = indices.len();
            }
        }
        Csr { rows, cols, indptr, indices, data }
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.rows, self.cols);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    /// Drops entries with magnitude at most `tol`.
    pub fn prune(&self, tol: f64) -> Csr {
        let t = self.triplets().filter(|(_, _, v)| v.norm() > tol).collect();
        Csr::from_triplets(self.rows, self.cols, t)
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `max |A − A†|`.
    pub fn hermitian_defect(&self) -> f64 {
        self.add_scaled(&self.adjoint(), C64::new(-1.0, 0.0)).max_abs()
    }

    /// Upper bound on the spectral radius (largest absolute row sum).
    pub fn norm_bound(&self) -> f64 {
        (0..self.rows).map(|r| self.row(r).map(|(_, v)| v.norm()).sum::<f64>()).fold(0.0, f64::max)
    }
}
