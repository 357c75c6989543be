use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gaussian::{GaussianDistribution, PSD_TOL};
use crate::linalg::{asymmetry, jacobi_eigen, symmetrize};

/// Principal square root of a symmetric PSD matrix.
///
/// Eigenvalues in `[-1e-10, 0)` are clamped to zero; anything more negative
/// is rejected.
pub fn spd_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(m.nrows(), m.ncols()));
    }
    let asym = asymmetry(m);
    if asym > PSD_TOL {
        return Err(Error::NotSymmetric(asym));
    }
    let (vals, vecs) = jacobi_eigen(m);
    let min = vals.min();
    if min < -PSD_TOL {
        return Err(Error::IndefiniteMatrix(min));
    }
    let roots = vals.map(|l| l.max(0.0).sqrt());
    let s = &vecs * DMatrix::from_diagonal(&roots) * vecs.transpose();
    Ok(symmetrize(&s))
}

/// Closed-form `W₂` between two Gaussians.
///
/// The Bures term `tr C₁ + tr C₂ − 2 tr (C₂^½ C₁ C₂^½)^½` is evaluated as
/// `‖C₁^½ − C₂^½ U‖²_F`, with `U` the orthogonal polar factor of `C₂^½ C₁^½`.
/// Both forms are equal, but the second has no cancellation, so nearly
/// equal covariances give distances near zero instead of `√ε`-sized noise.
pub fn wasserstein2_gaussian(p: &GaussianDistribution, q: &GaussianDistribution) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch(p.dim(), q.dim()));
    }
    let dm = (p.mean() - q.mean()).norm_squared();
    let a = spd_sqrt(p.cov())?;
    let b = spd_sqrt(q.cov())?;
    let svd = (b.transpose() * &a).svd(true, true);
    let (w, vt) = (svd.u.expect("requested U"), svd.v_t.expect("requested Vᵀ"));
    let bures = (&a - &b * (w * vt)).norm_squared();
    Ok((dm + bures).sqrt())
}
