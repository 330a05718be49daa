use rayon::prelude::*;

use crate::error::{Error, Result};

/// Row count above which matrix-vector products run on the rayon pool.
const PAR_ROWS: usize = 16_384;
const ROW_CHUNK: usize = 4_096;

/// Compressed-row real matrix. Column indices are strictly increasing in
/// every row and no explicit zeros are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut row_ptr = Vec::with_capacity(diag.len() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for (i, &v) in diag.iter().enumerate() {
            if v != 0.0 {
                col_idx.push(i);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            nrows: diag.len(),
            ncols: diag.len(),
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets; duplicates are
    /// summed and resulting zeros dropped.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
    ) -> Result<Self> {
        if let Some(&(r, c, _)) = triplets.iter().find(|&&(r, c, _)| r >= nrows || c >= ncols) {
            return Err(Error::DimensionMismatch(format!(
                "entry ({r}, {c}) outside {nrows}x{ncols}"
            )));
        }
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        let mut rows = Vec::with_capacity(triplets.len());
        let mut it = triplets.into_iter().peekable();
        while let Some((r, c, mut v)) = it.next() {
            while let Some(&(r2, c2, v2)) = it.peek() {
                if r2 == r && c2 == c {
                    v += v2;
                    it.next();
                } else {
                    break;
                }
            }
            if v != 0.0 {
                rows.push(r);
                col_idx.push(c);
                values.push(v);
            }
        }
        for &r in &rows {
            row_ptr[r + 1] += 1;
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Wraps raw CSR arrays after validating them. Explicit zeros are removed.
    pub fn from_csr(
        nrows: usize,
        ncols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_ptr.len() != nrows + 1 || row_ptr[0] != 0 || col_idx.len() != values.len() {
            return Err(Error::DimensionMismatch("inconsistent CSR arrays".into()));
        }
        if *row_ptr.last().unwrap() != col_idx.len() {
            return Err(Error::DimensionMismatch(
                "row_ptr does not cover all entries".into(),
            ));
        }
        for i in 0..nrows {
            if row_ptr[i + 1] < row_ptr[i] {
                return Err(Error::DimensionMismatch("row_ptr is not monotone".into()));
            }
            let cols = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            if cols.windows(2).any(|w| w[1] <= w[0]) || cols.iter().any(|&c| c >= ncols) {
                return Err(Error::DimensionMismatch(format!(
                    "row {i}: column indices must be increasing and < {ncols}"
                )));
            }
        }
        let mut m = Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        };
        if m.values.iter().any(|&v| v == 0.0) {
            m.drop_zeros();
        }
        Ok(m)
    }

    fn drop_zeros(&mut self) {
        let mut w = 0;
        let mut new_ptr = Vec::with_capacity(self.nrows + 1);
        new_ptr.push(0);
        for i in 0..self.nrows {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.values[p] != 0.0 {
                    self.col_idx[w] = self.col_idx[p];
                    self.values[w] = self.values[p];
                    w += 1;
                }
            }
            new_ptr.push(w);
        }
        self.col_idx.truncate(w);
        self.values.truncate(w);
        self.row_ptr = new_ptr;
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map(|p| vals[p]).unwrap_or(0.0)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols))
            .map(|i| self.get(i, i))
            .collect()
    }

    /// Storage footprint of the CSR arrays in bytes.
    pub fn memory_bytes(&self) -> usize {
        self.row_ptr.len() * std::mem::size_of::<usize>()
            + self.col_idx.len() * std::mem::size_of::<usize>()
            + self.values.len() * std::mem::size_of::<f64>()
    }

    #[inline]
    fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for p in self.row_ptr[i]..self.row_ptr[i + 1] {
            s += self.values[p] * x[self.col_idx[p]];
        }
        s
    }

    /// `y = A·x`. Each output row is computed by exactly one worker, so the
    /// result does not depend on the thread count.
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols, "matvec input length");
        assert_eq!(y.len(), self.nrows, "matvec output length");
        if self.nrows >= PAR_ROWS {
            y.par_chunks_mut(ROW_CHUNK)
                .enumerate()
                .for_each(|(c, chunk)| {
                    let base = c * ROW_CHUNK;
                    for (o, yi) in chunk.iter_mut().enumerate() {
                        *yi = self.row_dot(base + o, x);
                    }
                });
        } else {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = self.row_dot(i, x);
            }
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `r = b − A·x`.
    pub fn residual_into(&self, b: &[f64], x: &[f64], r: &mut [f64]) {
        assert_eq!(b.len(), self.nrows);
        if self.nrows >= PAR_ROWS {
            r.par_chunks_mut(ROW_CHUNK)
                .enumerate()
                .for_each(|(c, chunk)| {
                    let base = c * ROW_CHUNK;
                    for (o, ri) in chunk.iter_mut().enumerate() {
                        *ri = b[base + o] - self.row_dot(base + o, x);
                    }
                });
        } else {
            for (i, ri) in r.iter_mut().enumerate() {
                *ri = b[i] - self.row_dot(i, x);
            }
        }
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.nrows {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let c = self.col_idx[p];
                let dst = next[c];
                col_idx[dst] = i;
                values[dst] = self.values[p];
                next[c] += 1;
            }
        }
        SparseMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Sparse product `self · other` (row-wise Gustavson with a dense
    /// accumulator). Rows are formed in parallel and stitched in order.
    pub fn matmul(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.ncols != other.nrows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let ncols = other.ncols;
        const CHUNK: usize = 2048;
        let chunks: Vec<(Vec<usize>, Vec<usize>, Vec<f64>)> = (0..self.nrows.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| {
                let lo = c * CHUNK;
                let hi = (lo + CHUNK).min(self.nrows);
                let mut acc = vec![0.0f64; ncols];
                let mut mark = vec![usize::MAX; ncols];
                let mut touched: Vec<usize> = Vec::new();
                let mut lens = Vec::with_capacity(hi - lo);
                let mut cols = Vec::new();
                let mut vals = Vec::new();
                for i in lo..hi {
                    touched.clear();
                    for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                        let a = self.values[p];
                        let k = self.col_idx[p];
                        for q in other.row_ptr[k]..other.row_ptr[k + 1] {
                            let j = other.col_idx[q];
                            if mark[j] != i {
                                mark[j] = i;
                                acc[j] = 0.0;
                                touched.push(j);
                            }
                            acc[j] += a * other.values[q];
                        }
                    }
                    touched.sort_unstable();
                    let before = cols.len();
                    for &j in &touched {
                        if acc[j] != 0.0 {
                            cols.push(j);
                            vals.push(acc[j]);
                        }
                    }
                    lens.push(cols.len() - before);
                }
                (lens, cols, vals)
            })
            .collect();
        let mut row_ptr = Vec::with_capacity(self.nrows + 1);
        row_ptr.push(0);
        let total: usize = chunks.iter().map(|c| c.1.len()).sum();
        let mut col_idx = Vec::with_capacity(total);
        let mut values = Vec::with_capacity(total);
        for (lens, cols, vals) in chunks {
            for l in lens {
                row_ptr.push(row_ptr.last().unwrap() + l);
            }
            col_idx.extend(cols);
            values.extend(vals);
        }
        Ok(SparseMatrix {
            nrows: self.nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Scales row `i` by `d[i]` (left multiplication by a diagonal).
    pub fn scale_rows(&self, d: &[f64]) -> SparseMatrix {
        let mut out = self.clone();
        for i in 0..self.nrows {
            for p in out.row_ptr[i]..out.row_ptr[i + 1] {
                out.values[p] *= d[i];
            }
        }
        if out.values.iter().any(|&v| v == 0.0) {
            out.drop_zeros();
        }
        out
    }

    /// Keeps only rows and columns selected by `map` (old index → new index).
    pub fn restrict(&self, map: &[Option<usize>], n: usize) -> SparseMatrix {
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut rows: Vec<(usize, usize)> = map
            .iter()
            .enumerate()
            .filter_map(|(old, new)| new.map(|nw| (nw, old)))
            .collect();
        rows.sort_unstable();
        for (_, old) in rows {
            for p in self.row_ptr[old]..self.row_ptr[old + 1] {
                if let Some(nc) = map[self.col_idx[p]] {
                    col_idx.push(nc);
                    values.push(self.values[p]);
                }
            }
            row_ptr.push(col_idx.len());
        }
        SparseMatrix {
            nrows: n,
            ncols: n,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Largest `|a_ij − a_ji|` relative to the largest `|a_ij|`.
    pub fn symmetry_defect(&self) -> f64 {
        let t = self.transpose();
        let mut worst = 0.0f64;
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..self.nrows {
            let (ca, va) = self.row(i);
            let (cb, vb) = t.row(i);
            let (mut p, mut q) = (0, 0);
            while p < ca.len() || q < cb.len() {
                let (a, b) = match (ca.get(p), cb.get(q)) {
                    (Some(&x), Some(&y)) if x == y => {
                        p += 1;
                        q += 1;
                        (va[p - 1], vb[q - 1])
                    }
                    (Some(&x), Some(&y)) if x < y => {
                        p += 1;
                        (va[p - 1], 0.0)
                    }
                    (Some(_), None) => {
                        p += 1;
                        (va[p - 1], 0.0)
                    }
                    _ => {
                        q += 1;
                        (0.0, vb[q - 1])
                    }
                };
                worst = worst.max((a - b).abs());
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        self.nrows == self.ncols && self.symmetry_defect() <= rel_tol
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.nrows * self.ncols];
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                d[i * self.ncols + c] = v;
            }
        }
        d
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&c, &v)| (i, c, v))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SparseMatrix {
        SparseMatrix::from_triplets(
            3,
            4,
            vec![
                (0, 1, 2.0),
                (2, 3, -1.0),
                (0, 1, 1.0),
                (1, 0, 4.0),
                (2, 0, 0.0),
                (1, 2, 5.0),
                (1, 2, -5.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn triplets_sum_and_drop_zeros() {
        let m = sample();
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.get(1, 2), 0.0);
        assert_eq!(m.row_ptr(), &[0, 1, 2, 3]);
    }

    #[test]
    fn transpose_and_matmul_match_dense() {
        let a = sample();
        let b = SparseMatrix::from_triplets(
            4,
            2,
            vec![(0, 0, 1.0), (1, 1, 2.0), (3, 0, 3.0), (3, 1, -1.0)],
        )
        .unwrap();
        let c = a.matmul(&b).unwrap();
        let (da, db) = (a.to_dense(), b.to_dense());
        for i in 0..3 {
            for j in 0..2 {
                let expect: f64 = (0..4).map(|k| da[i * 4 + k] * db[k * 2 + j]).sum();
                assert_eq!(c.get(i, j), expect);
            }
        }
        let t = a.transpose();
        for (i, j, v) in a.triplets() {
            assert_eq!(t.get(j, i), v);
        }
        assert_eq!(t.transpose(), a);
    }

    #[test]
    fn from_csr_validates() {
        assert!(SparseMatrix::from_csr(2, 2, vec![0, 2, 2], vec![1, 0], vec![1.0, 1.0]).is_err());
        let m = SparseMatrix::from_csr(2, 2, vec![0, 2, 3], vec![0, 1, 1], vec![1.0, 0.0, 2.0])
            .unwrap();
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn symmetry_defect() {
        let s =
            SparseMatrix::from_triplets(2, 2, vec![(0, 1, 1.0), (1, 0, 1.0), (0, 0, 2.0)]).unwrap();
        assert_eq!(s.symmetry_defect(), 0.0);
        let n = SparseMatrix::from_triplets(2, 2, vec![(0, 1, 1.0), (0, 0, 2.0)]).unwrap();
        assert!(!n.is_symmetric(1e-13));
    }

    #[test]
    fn parallel_matvec_matches_serial() {
        let n = 40_000;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0 + (i % 7) as f64));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let a = SparseMatrix::from_triplets(n, n, t).unwrap();
        let x: Vec<f64> = (0..n).map(|i| ((i * 37) % 101) as f64 * 0.01).collect();
        let y = a.mul_vec(&x);
        for i in (0..n).step_by(997) {
            let (cols, vals) = a.row(i);
            let s: f64 = cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum();
            assert_eq!(y[i], s);
        }
    }
}
