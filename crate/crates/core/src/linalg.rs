//! Small dense complex linear-algebra helpers shared by the link model.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Inverses beyond this 2-norm condition number are rejected.
pub const MAX_CONDITION: f64 = 1e12;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn real_diag(values: &[f64]) -> CMat {
    CMat::from_diagonal(&CVec::from_iterator(
        values.len(),
        values.iter().map(|&v| c(v, 0.0)),
    ))
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// ‖MᴴM − I‖_F, the orthonormality defect of the columns of `m`.
pub fn orthonormality_defect(m: &CMat) -> f64 {
    let gram = m.adjoint() * m;
    frobenius(&(gram - CMat::identity(m.ncols(), m.ncols())))
}

/// 2-norm condition number from the singular values.
pub fn condition_number(m: &CMat) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Inverse of a square matrix, refused when the SVD condition number exceeds
/// [`MAX_CONDITION`]. The inverse itself comes from LU, which is more
/// accurate than the SVD factors on nearly diagonal inputs.
pub fn guarded_inverse(m: &CMat) -> Result<CMat> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "cannot invert a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    let cond = condition_number(m);
    if !cond.is_finite() || cond > MAX_CONDITION {
        return Err(Error::NumericalSingularity { cond });
    }
    m.clone()
        .lu()
        .try_inverse()
        .ok_or(Error::NumericalSingularity { cond: f64::INFINITY })
}

/// log₂ det of a Hermitian positive-definite matrix via Cholesky.
pub fn log2_det_hpd(m: &CMat) -> Result<f64> {
    let n = m.nrows();
    let chol = m
        .clone()
        .cholesky()
        .ok_or(Error::NumericalSingularity { cond: f64::INFINITY })?;
    let l = chol.l_dirty();
    let mut acc = 0.0;
    for i in 0..n {
        acc += l[(i, i)].re.log2();
    }
    Ok(2.0 * acc)
}

/// log₂ |det| of a general square matrix via LU.
pub fn log2_abs_det(m: &CMat) -> f64 {
    let lu = m.clone().lu();
    let u = lu.u();
    (0..u.nrows()).map(|i| u[(i, i)].norm().log2()).sum()
}

/// Hermitian part (M + Mᴴ)/2, used to scrub round-off asymmetry.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * c(0.5, 0.0)
}

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
