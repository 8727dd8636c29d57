//! Error laws of the simulation study.

use rand::Rng;
use rand_distr::{Distribution, Open01, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorDist {
    /// Standard normal.
    Gaussian,
    /// Student t with 3 degrees of freedom.
    T3,
    /// `0.85·N(0, 1) + 0.15·N(0, 9²)`.
    MixtureGaussian,
    /// Standard normal divided by an independent uniform on `(0, 1)`.
    Slash,
}

/// Weight of the wide component of [`ErrorDist::MixtureGaussian`].
pub const MIXTURE_WIDE_WEIGHT: f64 = 0.15;
/// Standard deviation of the wide component.
pub const MIXTURE_WIDE_SD: f64 = 9.0;

impl ErrorDist {
    pub fn label(&self) -> &'static str {
        match self {
            ErrorDist::Gaussian => "Gaussian",
            ErrorDist::T3 => "T3",
            ErrorDist::MixtureGaussian => "MixtureGaussian",
            ErrorDist::Slash => "Slash",
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ErrorDist::Gaussian => StandardNormal.sample(rng),
            ErrorDist::T3 => StudentT::new(3.0).expect("valid dof").sample(rng),
            ErrorDist::MixtureGaussian => {
                let wide = rng.random::<f64>() < MIXTURE_WIDE_WEIGHT;
                let z: f64 = StandardNormal.sample(rng);
                if wide {
                    MIXTURE_WIDE_SD * z
                } else {
                    z
                }
            }
            ErrorDist::Slash => {
                let z: f64 = StandardNormal.sample(rng);
                let u: f64 = Open01.sample(rng);
                z / u
            }
        }
    }
}

/// `n` i.i.d. draws from `dist`.
pub fn gen_errors<R: Rng + ?Sized>(dist: ErrorDist, n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| dist.sample(rng)).collect()
}

