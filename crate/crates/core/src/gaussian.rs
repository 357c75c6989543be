//! Gaussian models: marginalization, the three-variable Markov condition,
//! the W₂ counter-example pair and the sine-perturbed unit Gaussian.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{asymmetry, jacobi_eigen, symmetrize};
use crate::model::validate_subset;

/// Symmetry tolerance and negative-eigenvalue floor for covariances.
pub const PSD_TOL: f64 = 1e-10;
/// Residual below which the Markov condition counts as satisfied.
pub const MARKOV_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianDistribution {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianDistribution {
    /// Validates shape, symmetry (within `1e-10`, then symmetrized) and PSD-ness.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let n = mean.len();
        if n == 0 {
            return Err(Error::InvalidModel("Gaussian of dimension 0".into()));
        }
        if cov.nrows() != n || cov.ncols() != n {
            return Err(Error::DimensionMismatch(n, cov.nrows().max(cov.ncols())));
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("non-finite Gaussian parameter".into()));
        }
        let asym = asymmetry(&cov);
        if asym > PSD_TOL {
            return Err(Error::NotSymmetric(asym));
        }
        let cov = symmetrize(&cov);
        let (eigs, _) = jacobi_eigen(&cov);
        let min = eigs.min();
        if min < -PSD_TOL {
            return Err(Error::IndefiniteMatrix(min));
        }
        Ok(Self { mean, cov })
    }

    pub fn from_rows(mean: &[f64], cov: &[Vec<f64>]) -> Result<Self> {
        let n = mean.len();
        if cov.len() != n || cov.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch(n, cov.len()));
        }
        let flat: Vec<f64> = cov.iter().flatten().copied().collect();
        Self::new(
            DVector::from_column_slice(mean),
            DMatrix::from_row_slice(n, n, &flat),
        )
    }

    pub fn zero_mean(cov: DMatrix<f64>) -> Result<Self> {
        Self::new(DVector::zeros(cov.nrows()), cov)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn marginal(&self, subset: &[usize]) -> Result<Self> {
        validate_subset(subset, self.dim())?;
        let k = subset.len();
        let mean = DVector::from_iterator(k, subset.iter().map(|&i| self.mean[i]));
        let cov = DMatrix::from_fn(k, k, |r, c| self.cov[(subset[r], subset[c])]);
        Ok(Self { mean, cov })
    }

    /// Same mean and covariance up to a simultaneous coordinate permutation.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.dim() {
            return Err(Error::DimensionMismatch(self.dim(), perm.len()));
        }
        self.marginal(perm)
    }
}

pub fn gaussian_marginal(
    g: &GaussianDistribution,
    subset: &[usize],
) -> Result<GaussianDistribution> {
    g.marginal(subset)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkovCheck {
    /// `|C₃₂C₂₁ − C₃₁C₂₂|` (one-based entries).
    pub residual: f64,
    pub valid: bool,
}

/// Whether a 3-d Gaussian is Markov along X → Y → Z.
pub fn gaussian_markov_check(g: &GaussianDistribution) -> Result<MarkovCheck> {
    if g.dim() != 3 {
        return Err(Error::WrongDimension {
            expected: 3,
            found: g.dim(),
        });
    }
    let c = &g.cov;
    let residual = (c[(2, 1)] * c[(1, 0)] - c[(2, 0)] * c[(1, 1)]).abs();
    Ok(MarkovCheck {
        residual,
        valid: residual <= MARKOV_TOL,
    })
}

fn check_open_unit(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::ParameterOutOfRange {
            name,
            value: v,
            domain: "(0, 1)",
        })
    }
}

/// `P = N(0, C₁)` and `Q = N(0, C₂)` with
/// `C₁ = [[1,x,0],[x,1,0],[0,0,1]]`, `C₂ = [[1,x,xy],[x,1,y],[xy,y,1]]`.
pub fn counterexample_pair(x: f64, y: f64) -> Result<(GaussianDistribution, GaussianDistribution)> {
    check_open_unit("x", x)?;
    check_open_unit("y", y)?;
    let c1 = DMatrix::from_row_slice(3, 3, &[1.0, x, 0.0, x, 1.0, 0.0, 0.0, 0.0, 1.0]);
    let c2 = DMatrix::from_row_slice(3, 3, &[1.0, x, x * y, x, 1.0, y, x * y, y, 1.0]);
    Ok((
        GaussianDistribution::zero_mean(c1)?,
        GaussianDistribution::zero_mean(c2)?,
    ))
}

/// `Q = N(0, 1)` and `P(x) = (1 + ε sin x) Q(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbedGaussian1D {
    eps: f64,
}

impl PerturbedGaussian1D {
    /// `0 ≤ ε < 1`; `ε = 0` gives `P = Q`.
    pub fn new(eps: f64) -> Result<Self> {
        if (0.0..1.0).contains(&eps) {
            Ok(Self { eps })
        } else {
            Err(Error::ParameterOutOfRange {
                name: "eps",
                value: eps,
                domain: "[0, 1)",
            })
        }
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// `(p(x), q(x))`.
    pub fn density(&self, x: f64) -> (f64, f64) {
        let q = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        ((1.0 + self.eps * x.sin()) * q, q)
    }
}

pub fn perturbed_density(pg: &PerturbedGaussian1D, x: f64) -> (f64, f64) {
    pg.density(x)
}
