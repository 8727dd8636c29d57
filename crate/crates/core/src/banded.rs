//! Symmetric band matrices, their Cholesky factorization, and row-banded
//! rectangular matrices such as B-spline collocation matrices.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Symmetric matrix stored by its lower band.
///
/// Entry `(i, j)` with `i >= j` and `i - j <= bandwidth` lives at
/// `data[i * (bandwidth + 1) + (i - j)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymBandMatrix {
    n: usize,
    bandwidth: usize,
    data: Vec<f64>,
}

impl SymBandMatrix {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        Self {
            n,
            bandwidth,
            data: vec![0.0; n * (bandwidth + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> Option<usize> {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let off = hi - lo;
        if hi >= self.n || off > self.bandwidth {
            None
        } else {
            Some(hi * (self.bandwidth + 1) + off)
        }
    }

    /// Entry `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.idx(i, j).map_or(0.0, |k| self.data[k])
    }

    /// Adds `v` to entries `(i, j)` and `(j, i)` (a single stored value).
    ///
    /// Panics if `(i, j)` lies outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j).expect("entry outside band");
        self.data[k] += v;
    }

    /// `self + scale * other`; both must have the same dimension.
    pub fn add_scaled(&self, other: &SymBandMatrix, scale: f64) -> Result<SymBandMatrix> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        let bw = self.bandwidth.max(other.bandwidth);
        let mut out = SymBandMatrix::zeros(self.n, bw);
        for i in 0..self.n {
            for j in i.saturating_sub(bw)..=i {
                let k = out.idx(i, j).unwrap();
                out.data[k] = self.get(i, j) + scale * other.get(i, j);
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let diag = self.data[i * (self.bandwidth + 1)];
            y[i] += diag * x[i];
            for j in i.saturating_sub(self.bandwidth)..i {
                let a = self.get(i, j);
                y[i] += a * x[j];
                y[j] += a * x[i];
            }
        }
        y
    }

    /// Quadratic form `xᵀ A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Dense row-major copy, for tests and diagnostics.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// Largest `|i - j|` with a nonzero entry.
    pub fn effective_bandwidth(&self) -> usize {
        let mut bw = 0;
        for i in 0..self.n {
            for j in i.saturating_sub(self.bandwidth)..i {
                if self.get(i, j) != 0.0 {
                    bw = bw.max(i - j);
                }
            }
        }
        bw
    }

    /// Banded Cholesky factorization `A = L Lᵀ`.
    ///
    /// A pivot that is not positive, or falls below `1e-13` times the
    /// corresponding diagonal entry, is reported as [`Error::IllPosed`].
    pub fn cholesky(&self) -> Result<BandCholesky> {
        let n = self.n;
        let bw = self.bandwidth;
        let w = bw + 1;
        let mut l = self.data.clone();
        for i in 0..n {
            let jlo = i.saturating_sub(bw);
            for j in jlo..=i {
                let mut sum = l[i * w + (i - j)];
                let klo = jlo.max(j.saturating_sub(bw));
                for k in klo..j {
                    sum -= l[i * w + (i - k)] * l[j * w + (j - k)];
                }
                if i == j {
                    let a_ii = self.data[i * w];
                    if !sum.is_finite() || sum <= 1e-13 * a_ii.abs() || sum <= 0.0 {
                        return Err(Error::IllPosed);
                    }
                    l[i * w] = libm::sqrt(sum);
                } else {
                    l[i * w + (i - j)] = sum / l[j * w];
                }
            }
        }
        Ok(BandCholesky { n, bandwidth: bw, l })
    }
}

/// Lower-triangular band Cholesky factor, same storage layout as
/// [`SymBandMatrix`].
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    bandwidth: usize,
    l: Vec<f64>,
}

impl BandCholesky {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.l[i * (self.bandwidth + 1) + (i - j)]
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let bw = self.bandwidth;
        for i in 0..self.n {
            let mut s = b[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.at(i, k) * b[k];
            }
            b[i] = s / self.at(i, i);
        }
        for i in (0..self.n).rev() {
            let mut s = b[i];
            for k in (i + 1)..(i + bw + 1).min(self.n) {
                s -= self.at(k, i) * b[k];
            }
            b[i] = s / self.at(i, i);
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Entries of `A⁻¹` inside the band of `A`, by the Takahashi recursion
    /// on `Lᵀ Z = L⁻¹`. Runs in `O(n · bandwidth²)`.
    pub fn band_of_inverse(&self) -> SymBandMatrix {
        let n = self.n;
        let bw = self.bandwidth;
        let mut z = SymBandMatrix::zeros(n, bw);
        for i in (0..n).rev() {
            let lii = self.at(i, i);
            let kmax = (i + bw).min(n - 1);
            for j in (i..=kmax).rev() {
                let mut s = if i == j { 1.0 / lii } else { 0.0 };
                for k in (i + 1)..=kmax {
                    s -= self.at(k, i) * z.get(k, j);
                }
                let v = s / lii;
                let idx = z.idx(i, j).unwrap();
                z.data[idx] = v;
            }
        }
        z
    }
}

/// Rectangular matrix whose row `i` has nonzeros only in the contiguous
/// column block `first[i] .. first[i] + width`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedRows {
    ncols: usize,
    width: usize,
    first: Vec<usize>,
    values: Vec<f64>,
}

impl BandedRows {
    pub fn new(ncols: usize, width: usize) -> Self {
        Self {
            ncols,
            width,
            first: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn push_row(&mut self, first: usize, vals: &[f64]) {
        assert_eq!(vals.len(), self.width);
        assert!(first + self.width <= self.ncols);
        self.first.push(first);
        self.values.extend_from_slice(vals);
    }

    pub fn nrows(&self) -> usize {
        self.first.len()
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// First column and the stored values of row `i`.
    pub fn row(&self, i: usize) -> (usize, &[f64]) {
        (
            self.first[i],
            &self.values[i * self.width..(i + 1) * self.width],
        )
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (f, v) = self.row(i);
        if j >= f && j < f + self.width {
            v[j - f]
        } else {
            0.0
        }
    }

    pub fn mul_vec(&self, coef: &[f64]) -> Vec<f64> {
        assert_eq!(coef.len(), self.ncols);
        (0..self.nrows())
            .map(|i| {
                let (f, v) = self.row(i);
                v.iter().zip(&coef[f..f + self.width]).map(|(a, b)| a * b).sum()
            })
            .collect()
    }

    /// `Bᵀ diag(w) v`.
    pub fn tmul_weighted(&self, w: &[f64], v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ncols];
        for i in 0..self.nrows() {
            let (f, row) = self.row(i);
            let s = w[i] * v[i];
            for (a, b) in row.iter().enumerate() {
                out[f + a] += b * s;
            }
        }
        out
    }

    /// `Bᵀ diag(w) B` as a symmetric band matrix.
    pub fn gram_weighted(&self, w: &[f64]) -> SymBandMatrix {
        let bw = self.width.saturating_sub(1);
        let mut g = SymBandMatrix::zeros(self.ncols, bw);
        for i in 0..self.nrows() {
            let (f, row) = self.row(i);
            for a in 0..self.width {
                let wa = w[i] * row[a];
                if wa == 0.0 {
                    continue;
                }
                for b in 0..=a {
                    g.add(f + a, f + b, wa * row[b]);
                }
            }
        }
        g
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.nrows())
            .map(|i| (0..self.ncols).map(|j| self.get(i, j)).collect())
            .collect()
    }
}
