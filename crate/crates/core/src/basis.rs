//! Clamped B-spline bases of order `2m` on `[0, 1]` with knots at the design
//! points, and the exact Gram matrices of their derivatives.

use alloc::vec;
use alloc::vec::Vec;

use crate::banded::{BandedRows, SymBandMatrix};
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre_on;

/// Design points `t` (strictly increasing, inside `[0, 1]`) and responses.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignData {
    t: Vec<f64>,
    y: Vec<f64>,
}

impl DesignData {
    pub fn new(t: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if t.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: t.len(),
                got: y.len(),
            });
        }
        check_design(&t)?;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDesign("responses must be finite"));
        }
        Ok(Self { t, y })
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Same design, new responses.
    pub fn with_y(&self, y: Vec<f64>) -> Result<Self> {
        Self::new(self.t.clone(), y)
    }
}

fn check_design(t: &[f64]) -> Result<()> {
    if t.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidDesign("design points must be finite"));
    }
    if t.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
        return Err(Error::InvalidDesign("design points must lie in [0, 1]"));
    }
    if t.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidDesign(
            "design points must be strictly increasing (duplicates are rejected)",
        ));
    }
    Ok(())
}

/// B-spline basis of order `2m` and its penalty matrix.
///
/// The breakpoints are the design points together with the domain ends 0
/// and 1; the end knots are replicated `2m` times. `omega[i][j]` is
/// `∫₀¹ B_i⁽ᵐ⁾ B_j⁽ᵐ⁾` and `l2_gram[i][j]` is `∫₀¹ B_i B_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSystem {
    m: usize,
    breaks: Vec<f64>,
    knots: Vec<f64>,
    n_basis: usize,
    omega: SymBandMatrix,
    l2_gram: SymBandMatrix,
    /// For each span and Gauss node, `√w · B_a⁽ᵐ⁾(x)` for the `2m` basis
    /// functions alive on the span.
    penalty_table: Vec<f64>,
}

/// Basis for penalty order `m` with one interior knot per design point.
pub fn build_basis(t: &[f64], m: usize) -> Result<BasisSystem> {
    build_basis_with_max_knots(t, m, None)
}

/// Like [`build_basis`], but keeps at most `max_knots` design points as
/// knots (evenly spaced by rank, always including the first and last).
pub fn build_basis_with_max_knots(
    t: &[f64],
    m: usize,
    max_knots: Option<usize>,
) -> Result<BasisSystem> {
    if m == 0 {
        return Err(Error::InvalidParameter("penalty order m must be at least 1"));
    }
    check_design(t)?;
    if t.len() < m.max(1) {
        return Err(Error::InsufficientData {
            needed: m.max(1),
            got: t.len(),
        });
    }
    let selected: Vec<f64> = match max_knots {
        Some(k) if k < t.len() => {
            let k = k.max(2);
            let n = t.len();
            let mut v: Vec<f64> = (0..k)
                .map(|i| t[libm::round((i as f64) * (n - 1) as f64 / (k - 1) as f64) as usize])
                .collect();
            v.dedup();
            v
        }
        _ => t.to_vec(),
    };
    let mut breaks = Vec::with_capacity(selected.len() + 2);
    if selected[0] > 0.0 {
        breaks.push(0.0);
    }
    breaks.extend_from_slice(&selected);
    if *breaks.last().unwrap() < 1.0 {
        breaks.push(1.0);
    }
    BasisSystem::from_breaks(breaks, m)
}

impl BasisSystem {
    fn from_breaks(breaks: Vec<f64>, m: usize) -> Result<Self> {
        let k = 2 * m;
        let nb = breaks.len();
        let mut knots = Vec::with_capacity(nb + 2 * k - 2);
        knots.extend(core::iter::repeat_n(breaks[0], k));
        knots.extend_from_slice(&breaks[1..nb - 1]);
        knots.extend(core::iter::repeat_n(breaks[nb - 1], k));
        let n_basis = nb + k - 2;
        let mut sys = Self {
            m,
            breaks,
            knots,
            n_basis,
            omega: SymBandMatrix::zeros(n_basis, k - 1),
            l2_gram: SymBandMatrix::zeros(n_basis, k - 1),
            penalty_table: Vec::new(),
        };
        sys.omega = sys.gram(m);
        sys.l2_gram = sys.gram(0);
        sys.penalty_table = sys.derivative_table(m);
        Ok(sys)
    }

    /// Penalty order `m`.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Spline order `2m` (degree `2m - 1`).
    pub fn order(&self) -> usize {
        2 * self.m
    }

    pub fn degree(&self) -> usize {
        2 * self.m - 1
    }

    pub fn n_basis(&self) -> usize {
        self.n_basis
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Distinct breakpoints, including the domain ends.
    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn omega(&self) -> &SymBandMatrix {
        &self.omega
    }

    pub fn l2_gram(&self) -> &SymBandMatrix {
        &self.l2_gram
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.breaks[0], self.breaks[self.breaks.len() - 1])
    }

    /// Index `s` of the knot span `[breaks[s], breaks[s+1])` containing `x`;
    /// the right end belongs to the last span.
    pub fn span(&self, x: f64) -> Result<usize> {
        let (lo, hi) = self.domain();
        if !(x >= lo && x <= hi) {
            return Err(Error::OutOfRange { x, lo, hi });
        }
        let nspans = self.breaks.len() - 1;
        let s = self.breaks.partition_point(|&b| b <= x);
        Ok(s.saturating_sub(1).min(nspans - 1))
    }

    /// Values of derivatives `0..=nd` of the `2m` basis functions that are
    /// nonzero on the span of `x`. Returns the index of the first one and a
    /// row-major `(nd + 1) × 2m` table.
    pub fn basis_derivatives(&self, x: f64, nd: usize) -> Result<(usize, Vec<f64>)> {
        let p = self.degree();
        if nd > p {
            return Err(Error::DerivativeOrder { order: nd, max: p });
        }
        let s = self.span(x)?;
        Ok((s, ders_basis_funs(&self.knots, s + p, x, p, nd)))
    }

    /// Collocation matrix: row `i` holds `B_j(x_i)`.
    pub fn design_matrix(&self, x: &[f64]) -> Result<BandedRows> {
        self.derivative_matrix(x, 0)
    }

    /// Row `i` holds the `j`-th derivatives `B_l⁽ʲ⁾(x_i)`.
    pub fn derivative_matrix(&self, x: &[f64], j: usize) -> Result<BandedRows> {
        let k = self.order();
        let mut rows = BandedRows::new(self.n_basis, k);
        for &xi in x {
            let (first, table) = self.basis_derivatives(xi, j)?;
            rows.push_row(first, &table[j * k..(j + 1) * k]);
        }
        Ok(rows)
    }

    /// `j`-th derivative of the spline with coefficients `coef` at `x`.
    pub fn eval(&self, coef: &[f64], x: f64, j: usize) -> Result<f64> {
        if coef.len() != self.n_basis {
            return Err(Error::DimensionMismatch {
                expected: self.n_basis,
                got: coef.len(),
            });
        }
        let k = self.order();
        let (first, table) = self.basis_derivatives(x, j)?;
        Ok(table[j * k..(j + 1) * k]
            .iter()
            .zip(&coef[first..first + k])
            .map(|(a, b)| a * b)
            .sum())
    }

    /// Gram matrix of the `j`-th derivatives, `∫₀¹ B_a⁽ʲ⁾ B_b⁽ʲ⁾`, by
    /// Gauss-Legendre on each knot span (exact: the integrand is a
    /// polynomial of degree `2(2m - 1 - j)` there).
    pub fn gram(&self, j: usize) -> SymBandMatrix {
        let k = self.order();
        let nodes = (k - j).max(1);
        let mut g = SymBandMatrix::zeros(self.n_basis, k - 1);
        for s in 0..self.breaks.len() - 1 {
            let (a, b) = (self.breaks[s], self.breaks[s + 1]);
            let (xs, ws) = gauss_legendre_on(nodes, a, b);
            for (x, w) in xs.iter().zip(&ws) {
                let table = ders_basis_funs(&self.knots, s + k - 1, *x, k - 1, j);
                let d = &table[j * k..(j + 1) * k];
                for p in 0..k {
                    for q in 0..=p {
                        g.add(s + p, s + q, w * d[p] * d[q]);
                    }
                }
            }
        }
        g
    }

    /// Scaled `j`-th derivative values at the Gauss nodes of every span, laid
    /// out as in `penalty_table`.
    fn derivative_table(&self, j: usize) -> Vec<f64> {
        let k = self.order();
        let nodes = k - j;
        let mut out = Vec::with_capacity((self.breaks.len() - 1) * nodes * k);
        for s in 0..self.breaks.len() - 1 {
            let (xs, ws) = gauss_legendre_on(nodes, self.breaks[s], self.breaks[s + 1]);
            for (x, w) in xs.iter().zip(&ws) {
                let table = ders_basis_funs(&self.knots, s + k - 1, *x, k - 1, j);
                let sw = libm::sqrt(*w);
                out.extend(table[j * k..(j + 1) * k].iter().map(|v| sw * v));
            }
        }
        out
    }

    /// `∫₀¹ {f⁽ʲ⁾}²` for the spline with coefficients `coef`.
    ///
    /// Equals `cᵀ gram(j) c`, but integrates the derivative values directly,
    /// which avoids the cancellation in the quadratic form when `f⁽ʲ⁾` is
    /// small compared with the entries of the Gram matrix.
    pub fn roughness(&self, coef: &[f64], j: usize) -> Result<f64> {
        if coef.len() != self.n_basis {
            return Err(Error::DimensionMismatch {
                expected: self.n_basis,
                got: coef.len(),
            });
        }
        if j >= self.order() {
            return Err(Error::DerivativeOrder {
                order: j,
                max: self.order() - 1,
            });
        }
        let k = self.order();
        let computed;
        let table = if j == self.m {
            &self.penalty_table
        } else {
            computed = self.derivative_table(j);
            &computed
        };
        let nodes = k - j;
        let total = table
            .chunks_exact(k)
            .enumerate()
            .map(|(row, vals)| {
                let s = row / nodes;
                let v: f64 = vals.iter().zip(&coef[s..s + k]).map(|(d, c)| d * c).sum();
                v * v
            })
            .sum();
        Ok(total)
    }

    /// Coefficients of the spline interpolating `f` at the Greville abscissae.
    /// Exact for polynomials of degree below `2m`.
    pub fn interpolate<F: Fn(f64) -> f64>(&self, f: F) -> Result<Vec<f64>> {
        let k = self.order();
        let p = k - 1;
        let greville: Vec<f64> = (0..self.n_basis)
            .map(|i| self.knots[i + 1..i + 1 + p].iter().sum::<f64>() / p as f64)
            .collect();
        let b = self.design_matrix(&greville)?;
        let rhs: Vec<f64> = greville.iter().map(|&x| f(x)).collect();
        solve_banded_square(&b, &rhs)
    }
}

/// Gaussian elimination with partial pivoting on a square row-banded system.
fn solve_banded_square(b: &BandedRows, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = b.ncols();
    let mut a = b.to_dense();
    let mut x = rhs.to_vec();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[piv][col].abs() < 1e-300 {
            return Err(Error::IllPosed);
        }
        a.swap(col, piv);
        x.swap(col, piv);
        for r in (col + 1)..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                x[r] -= f * x[col];
            }
        }
    }
    for r in (0..n).rev() {
        let mut s = x[r];
        for c in (r + 1)..n {
            s -= a[r][c] * x[c];
        }
        x[r] = s / a[r][r];
    }
    Ok(x)
}

/// Nonzero B-splines of degree `p` and their derivatives up to `nd` at `x`
/// in knot span `span` (`knots[span] <= x < knots[span + 1]`), after
/// Piegl & Tiller's A2.3. Returns a row-major `(nd + 1) × (p + 1)` table.
fn ders_basis_funs(knots: &[f64], span: usize, x: f64, p: usize, nd: usize) -> Vec<f64> {
    let w = p + 1;
    let mut ndu = vec![0.0; w * w];
    let mut left = vec![0.0; w];
    let mut right = vec![0.0; w];
    ndu[0] = 1.0;
    for j in 1..=p {
        left[j] = x - knots[span + 1 - j];
        right[j] = knots[span + j] - x;
        let mut saved = 0.0;
        for r in 0..j {
            ndu[j * w + r] = right[r + 1] + left[j - r];
            let temp = ndu[r * w + (j - 1)] / ndu[j * w + r];
            ndu[r * w + j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j * w + j] = saved;
    }
    let mut ders = vec![0.0; (nd + 1) * w];
    for j in 0..=p {
        ders[j] = ndu[j * w + p];
    }
    let mut a = [vec![0.0; w], vec![0.0; w]];
    for r in 0..=p {
        let (mut s1, mut s2) = (0usize, 1usize);
        a[0][0] = 1.0;
        for k in 1..=nd {
            let mut d = 0.0;
            let rk = r as isize - k as isize;
            let pk = p - k;
            if r >= k {
                let rk = rk as usize;
                a[s2][0] = a[s1][0] / ndu[(pk + 1) * w + rk];
                d = a[s2][0] * ndu[rk * w + pk];
            }
            let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
            let j2 = if r as isize - 1 <= pk as isize { k - 1 } else { p - r };
            for j in j1..=j2 {
                let idx = (rk + j as isize) as usize;
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[(pk + 1) * w + idx];
                d += a[s2][j] * ndu[idx * w + pk];
            }
            if r <= pk {
                a[s2][k] = -a[s1][k - 1] / ndu[(pk + 1) * w + r];
                d += a[s2][k] * ndu[r * w + pk];
            }
            ders[k * w + r] = d;
            core::mem::swap(&mut s1, &mut s2);
        }
    }
    let mut fac = p as f64;
    for k in 1..=nd {
        for j in 0..=p {
            ders[k * w + j] *= fac;
        }
        fac *= (p - k) as f64;
    }
    ders
}
