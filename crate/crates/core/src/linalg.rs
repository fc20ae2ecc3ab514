//! Sparse assembly storage and a banded LU solver.
//!
//! System matrices are assembled as triplets, compressed to CSR, and copied
//! into band storage for factorization. The coordinate-sorted dof numbering
//! keeps the bandwidth small.

use crate::error::{Error, Result};

/// Destination of element contributions `(i, j, v)`; repeated entries add.
pub trait TripletSink {
    fn push(&mut self, i: usize, j: usize, v: f64);
}

impl TripletSink for CooMatrix {
    #[inline]
    fn push(&mut self, i: usize, j: usize, v: f64) {
        CooMatrix::push(self, i, j, v)
    }
}

impl TripletSink for BandedMatrix {
    #[inline]
    fn push(&mut self, i: usize, j: usize, v: f64) {
        self.add(i, j, v)
    }
}

/// Triplet accumulator; duplicates are summed on compression.
#[derive(Debug, Clone, Default)]
pub struct CooMatrix {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl CooMatrix {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::with_capacity(cap),
        }
    }

    #[inline]
    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.nrows && j < self.ncols);
        self.entries.push((i, j, v));
    }

    pub fn to_csr(self) -> CsrMatrix {
        let nnz = self.entries.len();
        let mut start = vec![0usize; self.nrows + 1];
        for &(i, _, _) in &self.entries {
            start[i + 1] += 1;
        }
        for i in 0..self.nrows {
            start[i + 1] += start[i];
        }
        // Bucket by row, then sort and merge each short row.
        let mut bucket = vec![(0usize, 0.0f64); nnz];
        let mut next = start.clone();
        for (i, j, v) in self.entries {
            bucket[next[i]] = (j, v);
            next[i] += 1;
        }
        let mut row_ptr = vec![0usize; self.nrows + 1];
        let mut col_idx = Vec::with_capacity(nnz);
        let mut values: Vec<f64> = Vec::with_capacity(nnz);
        for i in 0..self.nrows {
            let row = &mut bucket[start[i]..start[i + 1]];
            row.sort_unstable_by_key(|e| e.0);
            let first = col_idx.len();
            for &(j, v) in row.iter() {
                if col_idx.len() > first && *col_idx.last().unwrap() == j {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr[i + 1] = col_idx.len();
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr,
            col_idx,
            values,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "mul_vec dimension mismatch");
        (0..self.nrows)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn transpose_mul_vec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.nrows, "transpose_mul_vec dimension mismatch");
        let mut out = vec![0.0; self.ncols];
        for (i, j, v) in self.triplets() {
            out[j] += v * y[i];
        }
        out
    }

    /// `yᵀ A x`.
    pub fn bilinear(&self, y: &[f64], x: &[f64]) -> f64 {
        let ax = self.mul_vec(x);
        dot(y, &ax)
    }

    pub fn scaled(&self, s: f64) -> CsrMatrix {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// Largest `|A_ij − A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        self.triplets()
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Lower and upper bandwidths of the stored pattern.
    pub fn bandwidths(&self) -> (usize, usize) {
        self.triplets().fold((0, 0), |(kl, ku), (i, j, _)| {
            if i > j {
                (kl.max(i - j), ku)
            } else {
                (kl, ku.max(j - i))
            }
        })
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, j, v) in self.triplets() {
            d[i][j] += v;
        }
        d
    }

    pub fn to_banded(&self) -> BandedMatrix {
        assert_eq!(self.nrows, self.ncols, "band storage needs a square matrix");
        let (kl, ku) = self.bandwidths();
        let mut b = BandedMatrix::zeros(self.nrows, kl, ku);
        for (i, j, v) in self.triplets() {
            b.add(i, j, v);
        }
        b
    }

    /// `Σ s_k A_k` over matrices with equal shapes.
    pub fn linear_combination(terms: &[(f64, &CsrMatrix)]) -> CsrMatrix {
        let (nrows, ncols) = (terms[0].1.nrows, terms[0].1.ncols);
        let cap = terms.iter().map(|(_, m)| m.nnz()).sum();
        let mut coo = CooMatrix::with_capacity(nrows, ncols, cap);
        for (s, m) in terms {
            assert_eq!((m.nrows, m.ncols), (nrows, ncols));
            for (i, j, v) in m.triplets() {
                coo.push(i, j, s * v);
            }
        }
        coo.to_csr()
    }
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Square matrix with `kl` sub- and `ku` super-diagonals.
///
/// Row `i` stores columns `i − kl ..= i + ku + kl`; the extra `kl` columns
/// hold fill-in from row interchanges during factorization.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, 0, 0);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.ku + self.kl);
        i * self.width + (j + self.kl - i)
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && j + self.kl >= i && j <= i + self.ku
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.idx(i, j)]
        } else {
            0.0
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "({i}, {j}) outside the band");
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "({i}, {j}) outside the band");
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.data[self.idx(i, j)] * x[j]).sum()
            })
            .collect()
    }

    /// `yᵀ A x`.
    pub fn bilinear(&self, y: &[f64], x: &[f64]) -> f64 {
        dot(y, &self.mul_vec(x))
    }

    /// Entries inside the declared band, zeros included.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            (lo..=hi).map(move |j| (i, j, self.data[self.idx(i, j)]))
        })
    }

    /// `self += s · other`; `other` must fit inside this band.
    pub fn add_scaled(&mut self, s: f64, other: &BandedMatrix) {
        assert_eq!(self.n, other.n, "add_scaled dimension mismatch");
        for (i, j, v) in other.triplets() {
            if v != 0.0 {
                self.add(i, j, s * v);
            }
        }
    }

    /// Largest `|A_ij − A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        self.triplets()
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    /// Sparse copy holding the nonzero entries.
    pub fn to_csr(&self) -> CsrMatrix {
        let mut coo = CooMatrix::with_capacity(self.n, self.n, self.n * (self.kl + self.ku + 1));
        for (i, j, v) in self.triplets() {
            if v != 0.0 {
                coo.push(i, j, v);
            }
        }
        coo.to_csr()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// LU factorization with partial pivoting inside the band.
    pub fn factor(self) -> Result<BandedLu> {
        BandedLu::new(self)
    }
}

/// Factors `P A = L U` of a banded matrix.
#[derive(Debug, Clone)]
pub struct BandedLu {
    lu: BandedMatrix,
    pivots: Vec<usize>,
    growth: f64,
}

impl BandedLu {
    pub fn new(mut a: BandedMatrix) -> Result<Self> {
        let n = a.n;
        let (kl, ku, w) = (a.kl, a.ku, a.width);
        let scale = a.max_abs();
        let tiny = scale * 1e-14 * f64::EPSILON.sqrt();
        let mut pivots = Vec::with_capacity(n);
        let mut u_max: f64 = 0.0;
        // Entry (i, j) sits at i·w + (j + kl − i); row k from column k starts at k·w + kl.
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let span = (k + kl + ku).min(n - 1) - k + 1;
            let mut p = k;
            let mut best = a.data[k * w + kl].abs();
            for r in k + 1..=last_row {
                let v = a.data[r * w + kl + k - r].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if !(best > tiny) {
                return Err(Error::Singular { pivot: k });
            }
            pivots.push(p);
            let kk = k * w + kl;
            if p != k {
                let pk = p * w + kl + k - p;
                for t in 0..span {
                    a.data.swap(kk + t, pk + t);
                }
            }
            let (head, tail) = a.data.split_at_mut((k + 1) * w);
            let pivot_row = &head[kk..kk + span];
            let pivot = pivot_row[0];
            for r in k + 1..=last_row {
                let rk = r * w + kl + k - r - (k + 1) * w;
                let l = tail[rk] / pivot;
                tail[rk] = l;
                if l == 0.0 {
                    continue;
                }
                let row = &mut tail[rk + 1..rk + span];
                for (x, u) in row.iter_mut().zip(&pivot_row[1..]) {
                    *x -= l * u;
                }
            }
            u_max = pivot_row.iter().fold(u_max, |m, v| m.max(v.abs()));
        }
        let growth = if scale > 0.0 { u_max / scale } else { 1.0 };
        Ok(Self {
            lu: a,
            pivots,
            growth,
        })
    }

    pub fn dim(&self) -> usize {
        self.lu.n
    }

    /// `max |U_ij| / max |A_ij|`.
    pub fn growth(&self) -> f64 {
        self.growth
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let a = &self.lu;
        let n = a.n;
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: b.len(),
            });
        }
        let mut x = b.to_vec();
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            if xk != 0.0 {
                for r in k + 1..=(k + a.kl).min(n - 1) {
                    x[r] -= a.data[a.idx(r, k)] * xk;
                }
            }
        }
        for i in (0..n).rev() {
            let last = (i + a.kl + a.ku).min(n - 1);
            let mut s = x[i];
            for j in i + 1..=last {
                s -= a.data[a.idx(i, j)] * x[j];
            }
            x[i] = s / a.data[a.idx(i, i)];
        }
        Ok(x)
    }
}

/// Factor and solve in one call.
pub fn banded_solve(a: BandedMatrix, b: &[f64]) -> Result<Vec<f64>> {
    a.factor()?.solve(b)
}

/// Solve a sparse square system through band storage.
pub fn solve_csr(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    banded_solve(a.to_banded(), b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_banded(n: usize, kl: usize, ku: usize, seed: u64) -> BandedMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = BandedMatrix::zeros(n, kl, ku);
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                m.set(i, j, rng.gen_range(-1.0..1.0));
            }
        }
        m
    }

    fn dense(m: &BandedMatrix) -> DMatrix<f64> {
        DMatrix::from_fn(m.dim(), m.dim(), |i, j| m.get(i, j))
    }

    #[test]
    fn identity_solve() {
        let b = vec![1.0, -2.0, 3.5];
        assert_eq!(banded_solve(BandedMatrix::identity(3), &b).unwrap(), b);
    }

    #[test]
    fn random_5x5_matches_dense() {
        let m = random_banded(5, 1, 2, 7);
        let b = vec![0.3, -1.0, 2.0, 0.5, 1.5];
        let x = banded_solve(m.clone(), &b).unwrap();
        let oracle = dense(&m).lu().solve(&DVector::from_vec(b)).unwrap();
        for i in 0..5 {
            assert_abs_diff_eq!(x[i], oracle[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_row_is_singular() {
        let mut m = random_banded(5, 1, 1, 3);
        for j in 1..=3 {
            m.set(2, j, 0.0);
        }
        let err = banded_solve(m, &[1.0; 5]).unwrap_err();
        assert!(matches!(err, Error::Singular { .. }));
    }

    #[test]
    fn pivoting_is_needed_and_handled() {
        let mut m = BandedMatrix::zeros(2, 1, 1);
        m.set(0, 1, 1.0);
        m.set(1, 0, 1.0);
        m.set(1, 1, 1.0);
        let x = banded_solve(m, &[2.0, 5.0]).unwrap();
        assert_abs_diff_eq!(x[0], 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(x[1], 2.0, epsilon = 1e-15);
    }

    #[test]
    fn coo_sums_duplicates_and_reports_band() {
        let mut c = CooMatrix::new(4, 4);
        c.push(0, 0, 1.0);
        c.push(0, 0, 2.0);
        c.push(3, 1, -1.0);
        c.push(1, 2, 4.0);
        let m = c.to_csr();
        assert_eq!(m.get(0, 0), 3.0);
        assert_eq!(m.bandwidths(), (2, 1));
        assert_eq!(m.mul_vec(&[1.0, 1.0, 1.0, 1.0]), vec![3.0, 4.0, 0.0, -1.0]);
        assert_eq!(m.transpose_mul_vec(&[1.0, 1.0, 1.0, 1.0]), vec![3.0, -1.0, 4.0, 0.0]);
    }

    proptest! {
        #[test]
        fn banded_lu_matches_dense(n in 1usize..40, kl in 0usize..4, ku in 0usize..4, seed in 0u64..1000) {
            let mut m = random_banded(n, kl, ku, seed);
            for i in 0..n {
                m.add(i, i, 4.0);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let x = banded_solve(m.clone(), &b).unwrap();
            let r = m.mul_vec(&x);
            let res = r.iter().zip(&b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            prop_assert!(res <= 1e-10 * norm_inf(&b).max(1e-300));
            let oracle = dense(&m).lu().solve(&DVector::from_vec(b)).unwrap();
            for i in 0..n {
                prop_assert!((x[i] - oracle[i]).abs() < 1e-10);
            }
        }
    }
}
