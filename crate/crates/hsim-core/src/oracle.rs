//! Exact reference evolution `ψ(t) = e^{iHt} ψ` and error metrics.
//!
//! Two independent routes are provided so that no derived expectation in
//! the test suite ever rests on a single implementation: an
//! eigendecomposition route and a scaled-and-squared Taylor route with a
//! rigorous remainder bound. They are cross-checked against each other.

use thiserror::Error;

use crate::dense::{vec_norm, CMatrix};
use crate::matrix::{
    hermitian_eigendecompose, jacobi_eigen, HermitianMatrix, MatrixError, StateVector,
    DEFAULT_EIG_TOL,
};
use crate::Complex;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// Which oracle route produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMethod {
    Eigen,
    Series,
}

/// Evolved state together with an a-posteriori accuracy estimate.
#[derive(Debug, Clone)]
pub struct EvolutionResult {
    pub state: StateVector,
    pub method: OracleMethod,
    /// Upper estimate of `‖computed − exact‖` for a unit input.
    pub residual_estimate: f64,
}

/// `e^{iHt} ψ` via eigendecomposition: `V·diag(e^{iλt})·Vᴴ ψ`.
pub fn exact_evolve(
    h: &HermitianMatrix,
    psi: &StateVector,
    t: f64,
) -> Result<EvolutionResult, OracleError> {
    if h.dim() != psi.dim() {
        return Err(OracleError::DimensionMismatch {
            expected: h.dim(),
            got: psi.dim(),
        });
    }
    let eig = hermitian_eigendecompose(h, DEFAULT_EIG_TOL)?;
    let v = &eig.eigenvectors;
    let coeffs = v.adjoint_matvec(psi.amplitudes());
    let rotated: Vec<Complex> = coeffs
        .iter()
        .zip(&eig.eigenvalues)
        .map(|(c, &l)| c * Complex::from_polar(1.0, l * t))
        .collect();
    let out = v.matvec(&rotated);

    // First-order residual: ‖HV − VΛ‖_F · |t| bounds the phase error.
    let hm = h.to_cmatrix();
    let hv = hm.mul(v);
    let mut vl = v.clone();
    for col in 0..h.dim() {
        for row in 0..h.dim() {
            vl[(row, col)] *= eig.eigenvalues[col];
        }
    }
    let residual_estimate = hv.sub(&vl).frobenius_norm() * t.abs();

    Ok(EvolutionResult {
        state: StateVector::new(out),
        method: OracleMethod::Eigen,
        residual_estimate,
    })
}

/// `e^{iHt}` materialized via the eigendecomposition route.
pub fn exact_exponential(h: &HermitianMatrix, t: f64) -> Result<CMatrix, OracleError> {
    let eig = hermitian_eigendecompose(h, DEFAULT_EIG_TOL)?;
    let n = h.dim();
    let v = &eig.eigenvectors;
    let mut out = CMatrix::zeros(n, n);
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        let phase = Complex::from_polar(1.0, l * t);
        for r in 0..n {
            let vr = v[(r, k)] * phase;
            for c in 0..n {
                out[(r, c)] += vr * v[(c, k)].conj();
            }
        }
    }
    Ok(out)
}

/// `e^{iHt}` via scaled-and-squared Taylor summation, with a rigorous
/// remainder bound returned alongside.
pub fn exact_exponential_series(h: &HermitianMatrix, t: f64) -> (CMatrix, f64) {
    let n = h.dim();
    let x = h.to_cmatrix().scale(Complex::new(0.0, t));
    let norm_f = x.frobenius_norm();
    let squarings = if norm_f > 0.5 {
        (norm_f / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scale = 2.0f64.powi(squarings as i32);
    let y = x.scale(Complex::new(1.0 / scale, 0.0));
    let theta = norm_f / scale; // ≤ 1/2, and ‖Y‖ ≤ ‖Y‖_F = theta

    let mut sum = CMatrix::identity(n);
    let mut term = CMatrix::identity(n);
    let mut k = 0usize;
    let mut tail = f64::INFINITY;
    while tail > 1e-18 && k < 80 {
        k += 1;
        term = term.mul(&y).scale(Complex::new(1.0 / k as f64, 0.0));
        sum = sum.add(&term);
        // Σ_{j>k} θ^j/j! ≤ 2·θ^{k+1}/(k+1)! for θ ≤ 1/2.
        tail = 2.0 * crate::special::pow_over_factorial(theta, k + 1);
    }
    let mut residual = tail;
    let mut result = sum;
    for _ in 0..squarings {
        result = result.mul(&result);
        // ‖(T+E)² − T²‖ ≤ 2‖T‖‖E‖ + ‖E‖², with ‖T‖ ≈ 1 for unitary T.
        residual = 2.0 * residual + residual * residual;
    }
    (result, residual)
}

/// `e^{iHt} ψ` via the Taylor route.
pub fn exact_evolve_series(
    h: &HermitianMatrix,
    psi: &StateVector,
    t: f64,
) -> Result<EvolutionResult, OracleError> {
    if h.dim() != psi.dim() {
        return Err(OracleError::DimensionMismatch {
            expected: h.dim(),
            got: psi.dim(),
        });
    }
    let (exp, residual_estimate) = exact_exponential_series(h, t);
    let out = exp.matvec(psi.amplitudes());
    Ok(EvolutionResult {
        state: StateVector::new(out),
        method: OracleMethod::Series,
        residual_estimate,
    })
}

/// Plain Euclidean distance `‖a − b‖₂` — deliberately *not* quotiented by
/// a global phase; the simulation bounds control this literal norm.
pub fn state_error(a: &StateVector, b: &StateVector) -> Result<f64, OracleError> {
    if a.dim() != b.dim() {
        return Err(OracleError::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let diff: Vec<Complex> = a
        .amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(x, y)| x - y)
        .collect();
    Ok(vec_norm(&diff))
}

/// Spectral and Frobenius norms of `X − Y`. The spectral norm comes from
/// an eigensolve of `(X−Y)ᴴ(X−Y)`.
pub fn operator_error(x: &CMatrix, y: &CMatrix) -> Result<(f64, f64), OracleError> {
    if (x.rows(), x.cols()) != (y.rows(), y.cols()) {
        return Err(OracleError::DimensionMismatch {
            expected: x.rows(),
            got: y.rows(),
        });
    }
    let d = x.sub(y);
    let frobenius = d.frobenius_norm();
    let gram = d.adjoint().mul(&d);
    let eig = jacobi_eigen(&gram, DEFAULT_EIG_TOL)?;
    let lmax = eig.eigenvalues.last().copied().unwrap_or(0.0).max(0.0);
    Ok((lmax.sqrt(), frobenius))
}

/// Spectral norm of a dense matrix.
pub fn spectral_norm(m: &CMatrix) -> Result<f64, OracleError> {
    let z = CMatrix::zeros(m.rows(), m.cols());
    Ok(operator_error(m, &z)?.0)
}
