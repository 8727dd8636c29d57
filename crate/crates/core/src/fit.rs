//! Penalized M-estimation by iteratively reweighted banded least squares.
//!
//! The criterion is
//!
//! ```text
//! (1/n) Σ ρ((y_i - f(t_i)) / σ) + λ ∫₀¹ {f⁽ᵐ⁾}²
//! ```
//!
//! over the B-spline space of [`BasisSystem`]. Each IRLS step minimizes the
//! quadratic majorizer built from the weights `w_i = ψ(r_i/σ)/(r_i/σ)`,
//! i.e. solves
//!
//! ```text
//! (Bᵀ W B / n + 2σ²λ Ω) c = Bᵀ W y / n + (δσ/n) Bᵀ 1
//! ```
//!
//! where `δ` is the constant part of `ψ` (nonzero only for the check loss).
//! Iterations start from the least-squares spline of the same criterion,
//! `(BᵀB/n + σ²λΩ) c = Bᵀy/n`.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::banded::{BandCholesky, BandedRows, SymBandMatrix};
use crate::basis::{build_basis_with_max_knots, BasisSystem, DesignData};
use crate::error::{Error, Result};
use crate::loss::LossSpec;
use crate::scale::{rice_scale, tau_scale, ScaleMethod};

/// How the residual scale `σ` is obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScaleMode {
    /// A given positive value (1 for least squares and LAD).
    Fixed(f64),
    /// Rice-type pseudo-residual scale of the responses, computed once.
    Rice,
    /// Two stages: a fit with the Rice scale, then the τ-scale of its
    /// residuals, then the final fit with that scale.
    TauRefit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iter: usize,
    /// Relative ℓ∞ change of the coefficients that counts as converged.
    pub tol: f64,
    pub scale_mode: ScaleMode,
    /// Penalty order.
    pub m: usize,
    /// Keep at most this many design points as knots.
    pub max_knots: Option<usize>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol: 1e-8,
            scale_mode: ScaleMode::Fixed(1.0),
            m: 2,
            max_knots: None,
        }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be at least 1"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter("tol must be positive"));
        }
        if let ScaleMode::Fixed(s) = self.scale_mode {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::InvalidScale(s));
            }
        }
        Ok(())
    }
}

/// Result of [`fit_spline`].
#[derive(Debug, Clone)]
pub struct SplineFit {
    pub basis: Arc<BasisSystem>,
    pub loss: LossSpec,
    pub coef: Vec<f64>,
    pub lambda: f64,
    pub sigma: f64,
    pub scale_method: ScaleMethod,
    /// `y_i - f̂(t_i)`.
    pub residuals: Vec<f64>,
    /// IRLS weights at the final iterate divided by `ψ'(0)`, in `(0, 1]`.
    pub weights: Vec<f64>,
    /// Unnormalized weights `ψ(r_i/σ)/(r_i/σ)`.
    pub raw_weights: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Trace of the pseudo-influence matrix.
    pub edf: f64,
    /// Criterion value at the warm start and after every IRLS step.
    pub objective_path: Vec<f64>,
}

impl SplineFit {
    pub fn n(&self) -> usize {
        self.residuals.len()
    }

    /// Values of the `j`-th derivative of the fitted spline at `x`.
    pub fn predict(&self, x: &[f64], j: usize) -> Result<Vec<f64>> {
        predict(self, x, j)
    }

    pub fn objective(&self) -> f64 {
        *self.objective_path.last().unwrap()
    }
}

/// Data, basis and collocation matrix, shared by every fit on one design.
#[derive(Debug, Clone)]
pub struct SplineProblem {
    data: DesignData,
    basis: Arc<BasisSystem>,
    design: BandedRows,
}

impl SplineProblem {
    pub fn new(data: DesignData, m: usize) -> Result<Self> {
        Self::with_max_knots(data, m, None)
    }

    pub fn with_max_knots(data: DesignData, m: usize, max_knots: Option<usize>) -> Result<Self> {
        let basis = build_basis_with_max_knots(data.t(), m, max_knots)?;
        Self::with_basis(data, Arc::new(basis))
    }

    pub fn with_basis(data: DesignData, basis: Arc<BasisSystem>) -> Result<Self> {
        let design = basis.design_matrix(data.t())?;
        Ok(Self {
            data,
            basis,
            design,
        })
    }

    pub fn data(&self) -> &DesignData {
        &self.data
    }

    pub fn basis(&self) -> &Arc<BasisSystem> {
        &self.basis
    }

    /// Collocation matrix at the design points.
    pub fn design(&self) -> &BandedRows {
        &self.design
    }

    pub fn n(&self) -> usize {
        self.data.len()
    }

    fn check_coef(&self, coef: &[f64]) -> Result<()> {
        if coef.len() != self.basis.n_basis() {
            return Err(Error::DimensionMismatch {
                expected: self.basis.n_basis(),
                got: coef.len(),
            });
        }
        Ok(())
    }

    pub fn residuals(&self, coef: &[f64]) -> Vec<f64> {
        self.design
            .mul_vec(coef)
            .iter()
            .zip(self.data.y())
            .map(|(f, y)| y - f)
            .collect()
    }

    /// Value of the penalized criterion at `coef`.
    pub fn objective(&self, spec: &LossSpec, lambda: f64, sigma: f64, coef: &[f64]) -> Result<f64> {
        self.check_coef(coef)?;
        if !(lambda > 0.0) || !(sigma > 0.0) {
            return Err(Error::InvalidParameter("lambda and sigma must be positive"));
        }
        let r = self.residuals(coef);
        let data_term = r.iter().map(|v| spec.rho(v / sigma)).sum::<f64>() / self.n() as f64;
        Ok(data_term + lambda * self.basis.roughness(coef, self.basis.m())?)
    }

    /// Gradient of the criterion in coefficient space,
    /// `-(1/(nσ)) Bᵀ ψ(r/σ) + 2λ Ω c`.
    pub fn gradient(&self, spec: &LossSpec, lambda: f64, sigma: f64, coef: &[f64]) -> Result<Vec<f64>> {
        self.check_coef(coef)?;
        let n = self.n() as f64;
        let r = self.residuals(coef);
        let psi: Vec<f64> = r.iter().map(|v| spec.psi(v / sigma)).collect();
        let ones = vec![1.0; r.len()];
        let data = self.design.tmul_weighted(&ones, &psi);
        let pen = self.basis.omega().mul_vec(coef);
        Ok(data
            .iter()
            .zip(&pen)
            .map(|(d, p)| -d / (n * sigma) + 2.0 * lambda * p)
            .collect())
    }

    /// Least-squares smoothing spline: solves `(BᵀB/n + λΩ) c = Bᵀy/n`.
    pub fn ls_coefficients(&self, lambda: f64) -> Result<Vec<f64>> {
        let n = self.n() as f64;
        let ones = vec![1.0 / n; self.n()];
        let a = self
            .design
            .gram_weighted(&ones)
            .add_scaled(self.basis.omega(), lambda)?;
        let rhs = self.design.tmul_weighted(&ones, self.data.y());
        Ok(a.cholesky()?.solve(&rhs))
    }

    /// `Bᵀ W B / n + 2σ²λ Ω`.
    pub fn weighted_system(&self, raw_weights: &[f64], lambda: f64, sigma: f64) -> Result<SymBandMatrix> {
        let n = self.n() as f64;
        let w: Vec<f64> = raw_weights.iter().map(|v| v / n).collect();
        self.design
            .gram_weighted(&w)
            .add_scaled(self.basis.omega(), 2.0 * sigma * sigma * lambda)
    }

    /// Trace of `B A⁻¹ Bᵀ W / n` given the factor of `A`.
    fn influence_trace(&self, chol: &BandCholesky, raw_weights: &[f64]) -> f64 {
        let z = chol.band_of_inverse();
        let n = self.n() as f64;
        let mut tr = 0.0;
        for i in 0..self.n() {
            let (f, row) = self.design.row(i);
            let mut q = 0.0;
            for a in 0..row.len() {
                if row[a] == 0.0 {
                    continue;
                }
                q += row[a] * row[a] * z.get(f + a, f + a);
                for b in 0..a {
                    q += 2.0 * row[a] * row[b] * z.get(f + a, f + b);
                }
            }
            tr += raw_weights[i] * q / n;
        }
        tr
    }

    /// Fits the M-type smoothing spline at `lambda`.
    pub fn fit(&self, spec: &LossSpec, lambda: f64, options: &FitOptions) -> Result<SplineFit> {
        spec.validate()?;
        options.validate()?;
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParameter("lambda must be positive and finite"));
        }
        match options.scale_mode {
            ScaleMode::Fixed(s) => self.irls(spec, lambda, s, ScaleMethod::Fixed, options),
            ScaleMode::Rice => {
                let s = rice_scale(self.data.y())?.value;
                self.irls(spec, lambda, s, ScaleMethod::RicePseudo, options)
            }
            ScaleMode::TauRefit => {
                let s = rice_scale(self.data.y())?.value;
                let first = self.irls(spec, lambda, s, ScaleMethod::RicePseudo, options)?;
                let tau = tau_scale(&first.residuals)?.value;
                self.irls(spec, lambda, tau, ScaleMethod::TauResidual, options)
            }
        }
    }

    fn irls(
        &self,
        spec: &LossSpec,
        lambda: f64,
        sigma: f64,
        scale_method: ScaleMethod,
        options: &FitOptions,
    ) -> Result<SplineFit> {
        let n = self.n() as f64;
        let drift = spec.drift();
        let drift_rhs = if drift != 0.0 {
            let ones = vec![1.0; self.n()];
            let s = self.design.tmul_weighted(&ones, &ones);
            Some(s.into_iter().map(|v| v * drift * sigma / n).collect::<Vec<f64>>())
        } else {
            None
        };

        let mut coef = self.ls_coefficients(sigma * sigma * lambda)?;
        let mut path = vec![self.objective(spec, lambda, sigma, &coef)?];
        let mut converged = false;
        let mut iterations = 0;
        while iterations < options.max_iter {
            iterations += 1;
            let r = self.residuals(&coef);
            let w: Vec<f64> = r.iter().map(|v| spec.weight(v / sigma)).collect();
            let a = self.weighted_system(&w, lambda, sigma)?;
            let wn: Vec<f64> = w.iter().map(|v| v / n).collect();
            let mut rhs = self.design.tmul_weighted(&wn, self.data.y());
            if let Some(d) = &drift_rhs {
                rhs.iter_mut().zip(d).for_each(|(a, b)| *a += b);
            }
            let next = a.cholesky()?.solve(&rhs);
            let delta = next
                .iter()
                .zip(&coef)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let size = next.iter().map(|v| v.abs()).fold(0.0, f64::max);
            coef = next;
            path.push(self.objective(spec, lambda, sigma, &coef)?);
            if !coef.iter().all(|v| v.is_finite()) {
                return Err(Error::IllPosed);
            }
            if delta <= options.tol * size.max(f64::MIN_POSITIVE) {
                converged = true;
                break;
            }
        }

        let residuals = self.residuals(&coef);
        let raw_weights: Vec<f64> = residuals.iter().map(|v| spec.weight(v / sigma)).collect();
        let cap = spec.psi_prime_zero();
        let weights = raw_weights.iter().map(|v| v / cap).collect();
        let chol = self.weighted_system(&raw_weights, lambda, sigma)?.cholesky()?;
        let edf = self.influence_trace(&chol, &raw_weights);
        Ok(SplineFit {
            basis: self.basis.clone(),
            loss: *spec,
            coef,
            lambda,
            sigma,
            scale_method,
            residuals,
            weights,
            raw_weights,
            iterations,
            converged,
            edf,
            objective_path: path,
        })
    }
}

/// Penalized criterion for coefficients `coef` on `data` (penalty order `m`).
pub fn objective(
    problem: &SplineProblem,
    spec: &LossSpec,
    lambda: f64,
    sigma: f64,
    coef: &[f64],
) -> Result<f64> {
    problem.objective(spec, lambda, sigma, coef)
}

/// Builds the basis for `data` and fits at `lambda`.
pub fn fit_spline(
    data: &DesignData,
    spec: &LossSpec,
    lambda: f64,
    options: &FitOptions,
) -> Result<SplineFit> {
    SplineProblem::with_max_knots(data.clone(), options.m, options.max_knots)?.fit(spec, lambda, options)
}

/// `j`-th derivative of a fitted spline at `x`.
pub fn predict(fit: &SplineFit, x: &[f64], j: usize) -> Result<Vec<f64>> {
    Ok(fit.basis.derivative_matrix(x, j)?.mul_vec(&fit.coef))
}

/// `‖f‖₂² + λ‖f⁽ᵐ⁾‖₂²` for the spline with coefficients `coef`.
pub fn sobolev_norm_sq(basis: &BasisSystem, coef: &[f64], lambda: f64) -> Result<f64> {
    if coef.len() != basis.n_basis() {
        return Err(Error::DimensionMismatch {
            expected: basis.n_basis(),
            got: coef.len(),
        });
    }
    Ok(basis.roughness(coef, 0)? + lambda * basis.roughness(coef, basis.m())?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Vec<f64> {
        (1..=n).map(|i| i as f64 / n as f64).collect()
    }

    fn wiggly(n: usize) -> DesignData {
        let t = grid(n);
        let y = t
            .iter()
            .enumerate()
            .map(|(i, x)| libm::sin(6.0 * x) + 0.3 * libm::cos(37.0 * i as f64))
            .collect();
        DesignData::new(t, y).unwrap()
    }

    #[test]
    fn zero_data_zero_objective() {
        let t = grid(10);
        let p = SplineProblem::new(DesignData::new(t, vec![0.0; 10]).unwrap(), 2).unwrap();
        let c = vec![0.0; p.basis().n_basis()];
        assert_eq!(p.objective(&LossSpec::huber(), 0.1, 1.0, &c).unwrap(), 0.0);
        assert!(matches!(
            p.objective(&LossSpec::huber(), 0.1, 1.0, &[0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn huber_equals_ls_inside_core() {
        let p = SplineProblem::new(wiggly(20), 2).unwrap();
        let c = p.ls_coefficients(1e-3).unwrap();
        let r = p.residuals(&c);
        let big = r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let sigma = big / 1.3;
        let h = p.objective(&LossSpec::huber(), 1e-3, sigma, &c).unwrap();
        let l = p.objective(&LossSpec::LeastSquares, 1e-3, sigma, &c).unwrap();
        assert!((h - l).abs() < 1e-14 * l.abs());
    }

    #[test]
    fn ls_fit_equals_direct_solve() {
        let p = SplineProblem::new(wiggly(25), 2).unwrap();
        let direct = p.ls_coefficients(1e-4).unwrap();
        let fit = p.fit(&LossSpec::LeastSquares, 1e-4, &FitOptions::default()).unwrap();
        assert!(fit.converged);
        for (a, b) in fit.coef.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(fit.weights.iter().all(|w| *w == 1.0));
    }

    #[test]
    fn exact_line_is_fixed_point() {
        let t = grid(15);
        let y: Vec<f64> = t.iter().map(|x| 2.0 - 3.0 * x).collect();
        let data = DesignData::new(t.clone(), y.clone()).unwrap();
        for lambda in [1e-6, 1e-2, 1.0] {
            let fit = fit_spline(&data, &LossSpec::huber(), lambda, &FitOptions::default()).unwrap();
            let f = fit.predict(&t, 0).unwrap();
            for (a, b) in f.iter().zip(&y) {
                assert!((a - b).abs() < 1e-8, "lambda={lambda} {a} {b}");
            }
            let d = fit.predict(&[0.1, 0.5, 0.93], 1).unwrap();
            assert!(d.iter().all(|v| (v + 3.0).abs() < 1e-8));
        }
    }

    #[test]
    fn rejects_bad_options() {
        let data = wiggly(12);
        let o = FitOptions { max_iter: 0, ..FitOptions::default() };
        assert!(fit_spline(&data, &LossSpec::huber(), 0.1, &o).is_err());
        assert!(fit_spline(&data, &LossSpec::huber(), 0.0, &FitOptions::default()).is_err());
        let o = FitOptions { scale_mode: ScaleMode::Fixed(0.0), ..FitOptions::default() };
        assert!(matches!(fit_spline(&data, &LossSpec::huber(), 0.1, &o), Err(Error::InvalidScale(_))));
        let flat = DesignData::new(grid(12), vec![1.0; 12]).unwrap();
        let o = FitOptions { scale_mode: ScaleMode::Rice, ..FitOptions::default() };
        assert_eq!(fit_spline(&flat, &LossSpec::huber(), 0.1, &o).unwrap_err(), Error::DegenerateScale);
    }

    #[test]
    fn non_convergence_is_reported_not_raised() {
        let o = FitOptions { max_iter: 1, tol: 1e-15, ..FitOptions::default() };
        let fit = fit_spline(&wiggly(30), &LossSpec::SmoothedAbs { eps: 1e-4 }, 1e-3, &o).unwrap();
        assert!(!fit.converged);
        assert_eq!(fit.iterations, 1);
    }

    #[test]
    fn unit_constant_sobolev_norm() {
        let b = build_basis_with_max_knots(&grid(9), 2, None).unwrap();
        let ones = vec![1.0; b.n_basis()];
        for lambda in [0.0, 0.3, 1.0] {
            let v = sobolev_norm_sq(&b, &ones, lambda).unwrap();
            assert!((v - 1.0).abs() < 1e-10, "{v}");
        }
        let zeros = vec![0.0; b.n_basis()];
        assert_eq!(sobolev_norm_sq(&b, &zeros, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn tau_refit_uses_tau_scale() {
        let o = FitOptions { scale_mode: ScaleMode::TauRefit, ..FitOptions::default() };
        let fit = fit_spline(&wiggly(40), &LossSpec::huber(), 1e-4, &o).unwrap();
        assert_eq!(fit.scale_method, ScaleMethod::TauResidual);
        assert!(fit.sigma > 0.0);
    }
}
