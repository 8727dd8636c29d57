//! Regression functions used by the simulation and rate studies.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::AppError;

/// Known regression curves on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case")]
pub enum TestFunction {
    /// `cos(2πt)`.
    F1,
    /// `1 / (1 + exp(-20(t - 0.5)))`.
    F2,
    /// `sin(2πt) + exp(-3(t - 0.5)²)`.
    F3,
    /// `(1 - 2t)^(m-1)`, which lies in the null space of the order-`m`
    /// penalty.
    PolyNull { m: usize },
    /// `Σ coefficients[k] · t^k`.
    Custom { coefficients: Vec<f64> },
}

impl TestFunction {
    pub fn name(&self) -> String {
        match self {
            TestFunction::F1 => "f1".into(),
            TestFunction::F2 => "f2".into(),
            TestFunction::F3 => "f3".into(),
            TestFunction::PolyNull { m } => format!("poly_null(m={m})"),
            TestFunction::Custom { .. } => "custom".into(),
        }
    }

    /// Parses the short identifiers `f1`, `f2`, `f3`.
    pub fn from_id(id: &str) -> Result<Self, AppError> {
        match id {
            "f1" => Ok(TestFunction::F1),
            "f2" => Ok(TestFunction::F2),
            "f3" => Ok(TestFunction::F3),
            other => Err(AppError::Usage(format!("unknown function id '{other}'"))),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.derivative(t, 0).expect("order 0 is always available")
    }

    /// `j`-th derivative at `t`. The sigmoid and the Gaussian bump are
    /// available up to order 3, the others to any order.
    pub fn derivative(&self, t: f64, j: usize) -> Result<f64, AppError> {
        match self {
            TestFunction::F1 => Ok(trig(t, j, true)),
            TestFunction::F2 => sigmoid_derivative(t, j),
            TestFunction::F3 => Ok(trig(t, j, false) + bump_derivative(t, j)?),
            TestFunction::PolyNull { m } => {
                let p = m.saturating_sub(1);
                // d^j/dt^j (1 - 2t)^p = p!/(p-j)! · (-2)^j · (1 - 2t)^(p-j)
                if j > p {
                    return Ok(0.0);
                }
                let falling: f64 = ((p - j + 1)..=p).map(|v| v as f64).product();
                Ok(falling * (-2f64).powi(j as i32) * (1.0 - 2.0 * t).powi((p - j) as i32))
            }
            TestFunction::Custom { coefficients } => Ok(coefficients
                .iter()
                .enumerate()
                .skip(j)
                .map(|(k, c)| {
                    let falling: f64 = ((k - j + 1)..=k).map(|v| v as f64).product();
                    c * falling * t.powi((k - j) as i32)
                })
                .sum()),
        }
    }
}

/// Derivatives of `cos(2πt)` (or `sin(2πt)`) via the phase shift rule.
fn trig(t: f64, j: usize, cosine: bool) -> f64 {
    let w = 2.0 * PI;
    let phase = w * t + j as f64 * PI / 2.0;
    w.powi(j as i32) * if cosine { phase.cos() } else { phase.sin() }
}

fn sigmoid_derivative(t: f64, j: usize) -> Result<f64, AppError> {
    let a = 20.0;
    let s = 1.0 / (1.0 + (-a * (t - 0.5)).exp());
    let d1 = a * s * (1.0 - s);
    let d2 = a * d1 * (1.0 - 2.0 * s);
    match j {
        0 => Ok(s),
        1 => Ok(d1),
        2 => Ok(d2),
        3 => Ok(a * (d2 * (1.0 - 2.0 * s) - 2.0 * d1 * d1)),
        _ => Err(AppError::Usage(format!("f2 derivatives are available up to order 3, not {j}"))),
    }
}

fn bump_derivative(t: f64, j: usize) -> Result<f64, AppError> {
    let u = t - 0.5;
    let g = (-3.0 * u * u).exp();
    match j {
        0 => Ok(g),
        1 => Ok(-6.0 * u * g),
        2 => Ok((36.0 * u * u - 6.0) * g),
        3 => Ok((-216.0 * u * u * u + 108.0 * u) * g),
        _ => Err(AppError::Usage(format!("f3 derivatives are available up to order 3, not {j}"))),
    }
}
