//! Constant-modulus analog × unconstrained digital factorization.
//!
//! Used twice: the precoder factors `F_opt ≈ F_A F_D` and the combiner
//! factors `U ≈ W̃_A W_Dᴴ`. The analog factor lives on the set of matrices
//! whose entries all have magnitude `1/√rows`; the digital factor is free.
//!
//! The solver alternates a least-squares digital update with a phase
//! projection of the analog factor. When the plain projection
//! `exp(j·arg(T·Dᴴ))` would increase the residual, the step falls back to a
//! majorized projection `exp(j·arg(T·Dᴴ + A(λI − D·Dᴴ)))`, λ = λ_max(D·Dᴴ),
//! which never increases it. The residual sequence is therefore monotone.

use crate::error::{Error, Result};
use crate::linalg::{c, frobenius, orthonormality_defect, CMat};

pub const DEFAULT_MAX_ITERS: usize = 200;
pub const DEFAULT_TOL: f64 = 1e-9;

/// Below this σ_min/σ_max the phase-projected start is replaced by DFT columns.
const INIT_RANK_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct HybridFactorization {
    pub analog: CMat,
    pub digital: CMat,
    /// `‖target − analog·digital‖_F` after the final power normalization.
    pub residual: f64,
    pub iterations: usize,
    /// Residual after each alternating iteration, before normalization.
    pub residual_history: Vec<f64>,
}

impl HybridFactorization {
    pub fn product(&self) -> CMat {
        &self.analog * &self.digital
    }
}

pub fn factor(target: &CMat, n_rf: usize, max_iters: usize, tol: f64) -> Result<HybridFactorization> {
    let (rows, cols) = target.shape();
    if cols == 0 || rows < cols {
        return Err(Error::Dimension(format!(
            "target must be tall with at least one column, got {rows}x{cols}"
        )));
    }
    if n_rf < cols {
        return Err(Error::Dimension(format!(
            "n_rf={n_rf} is smaller than the {cols} target columns"
        )));
    }
    if n_rf > rows {
        return Err(Error::Dimension(format!(
            "n_rf={n_rf} exceeds the {rows} analog rows"
        )));
    }
    let defect = orthonormality_defect(target);
    if defect > 1e-8 {
        return Err(Error::Precondition(format!(
            "target columns are not orthonormal (‖TᴴT − I‖_F = {defect:e})"
        )));
    }

    let modulus = 1.0 / (rows as f64).sqrt();
    let mut analog = initial_analog(target, n_rf, modulus);
    let mut digital = least_squares(&analog, target)?;
    let mut residual = frobenius(&(target - &analog * &digital));
    let mut history = vec![residual];
    let mut iterations = 0;

    while iterations < max_iters {
        iterations += 1;
        let plain = phase_project(&(target * digital.adjoint()), modulus);
        let plain_digital = least_squares(&plain, target)?;
        let plain_residual = frobenius(&(target - &plain * &plain_digital));

        let (next_analog, next_digital, next_residual) = if plain_residual <= residual {
            (plain, plain_digital, plain_residual)
        } else {
            let gram = &digital * digital.adjoint();
            let lambda = gram
                .clone()
                .symmetric_eigenvalues()
                .iter()
                .cloned()
                .fold(0.0, f64::max);
            let shifted = CMat::identity(n_rf, n_rf) * c(lambda, 0.0) - gram;
            let mm = phase_project(&(target * digital.adjoint() + &analog * shifted), modulus);
            let mm_digital = least_squares(&mm, target)?;
            let mm_residual = frobenius(&(target - &mm * &mm_digital));
            if mm_residual <= residual {
                (mm, mm_digital, mm_residual)
            } else {
                // round-off only: keep the current iterate
                (analog.clone(), digital.clone(), residual)
            }
        };

        let improvement = residual - next_residual;
        analog = next_analog;
        digital = next_digital;
        residual = next_residual;
        history.push(residual);
        if improvement < tol {
            break;
        }
    }

    let power = frobenius(&(&analog * &digital));
    if power > 0.0 {
        digital *= c((cols as f64).sqrt() / power, 0.0);
    }
    let residual = frobenius(&(target - &analog * &digital));
    Ok(HybridFactorization {
        analog,
        digital,
        residual,
        iterations,
        residual_history: history,
    })
}

pub fn factor_default(target: &CMat, n_rf: usize) -> Result<HybridFactorization> {
    factor(target, n_rf, DEFAULT_MAX_ITERS, DEFAULT_TOL)
}

fn phase_project(m: &CMat, modulus: f64) -> CMat {
    m.map(|z| {
        let phase = if z.norm() > 0.0 { z.arg() } else { 0.0 };
        num_complex::Complex64::from_polar(modulus, phase)
    })
}

/// Phases of the target (padded with DFT columns), unless that start is
/// rank deficient, in which case plain DFT columns.
fn initial_analog(target: &CMat, n_rf: usize, modulus: f64) -> CMat {
    let (rows, cols) = target.shape();
    let dft = |i: usize, k: usize| {
        num_complex::Complex64::from_polar(
            modulus,
            -2.0 * std::f64::consts::PI * (i * k) as f64 / rows as f64,
        )
    };
    let mut start = CMat::from_fn(rows, n_rf, |i, k| dft(i, k));
    let projected = phase_project(target, modulus);
    for k in 0..cols {
        start.set_column(k, &projected.column(k));
    }
    let sv = start.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if max > 0.0 && min / max > INIT_RANK_TOL {
        start
    } else {
        CMat::from_fn(rows, n_rf, |i, k| dft(i, k))
    }
}

/// `argmin_D ‖T − A·D‖_F` via the SVD pseudo-inverse of `A`.
fn least_squares(analog: &CMat, target: &CMat) -> Result<CMat> {
    let svd = analog.clone().svd(true, true);
    svd.solve(target, 1e-12)
        .map_err(|e| Error::Domain(format!("least-squares digital update failed: {e}")))
}
