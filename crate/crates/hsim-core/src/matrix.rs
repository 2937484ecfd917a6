//! Hermitian matrices, state vectors, norms, and the Jacobi eigensolver.
//!
//! `HermitianMatrix` stores either a dense row-major grid or per-row sorted
//! association lists (the row-computable access pattern every sampler in
//! this crate leans on). Construction validates Hermiticity; repair by
//! symmetrization only happens when explicitly requested, so data bugs
//! surface instead of being averaged away.

use std::sync::OnceLock;

use thiserror::Error;

use crate::dense::{vec_norm, CMatrix};
use crate::Complex;

/// Relative tolerance for the Hermiticity check at construction.
pub const HERMITICITY_TOL: f64 = 1e-12;

/// Default convergence tolerance for the Jacobi eigensolver.
pub const DEFAULT_EIG_TOL: f64 = 1e-13;

const MAX_JACOBI_SWEEPS: usize = 50;

#[derive(Debug, Error)]
pub enum MatrixError {
    #[error("matrix is not Hermitian (max symmetry violation {0:.3e})")]
    NotHermitian(f64),
    #[error("non-finite entry at ({0}, {1})")]
    NonFinite(usize, usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("sparse row {0} is invalid: {1}")]
    InvalidSparseRow(usize, &'static str),
    #[error("Jacobi eigensolver did not converge within {0} sweeps")]
    NonConvergence(usize),
    #[error("state vector is not normalized (norm {0})")]
    NotNormalized(f64),
}

/// Dense or sparse-row storage for a Hermitian operator.
#[derive(Debug, Clone, PartialEq)]
pub enum Storage {
    Dense(CMatrix),
    /// Per-row sorted `(column, value)` lists; no duplicates, no stored zeros.
    Sparse(Vec<Vec<(usize, Complex)>>),
}

/// Complex Hermitian operator with validated symmetry and cached norms.
#[derive(Debug)]
pub struct HermitianMatrix {
    dim: usize,
    storage: Storage,
    row_sparsity: usize,
    norms: OnceLock<NormBundle>,
}

impl Clone for HermitianMatrix {
    fn clone(&self) -> Self {
        Self {
            dim: self.dim,
            storage: self.storage.clone(),
            row_sparsity: self.row_sparsity,
            norms: OnceLock::new(),
        }
    }
}

impl PartialEq for HermitianMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.storage == other.storage
    }
}

/// The norm family used by the simulation bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormBundle {
    /// Spectral norm `‖H‖` (largest |eigenvalue|).
    pub spectral: f64,
    /// Frobenius norm `‖H‖_F`.
    pub frobenius: f64,
    /// Maximum absolute row-sum norm `‖H‖₁`.
    pub induced1: f64,
    /// Trace (real for Hermitian input).
    pub trace: f64,
    /// Largest entry magnitude `‖H‖_max`.
    pub max_abs: f64,
}

impl HermitianMatrix {
    /// Builds from a dense grid, rejecting non-Hermitian input.
    pub fn from_dense(grid: CMatrix) -> Result<Self, MatrixError> {
        Self::from_dense_inner(grid, false)
    }

    /// Builds from a dense grid, repairing symmetry via `(H + Hᴴ)/2`.
    pub fn from_dense_symmetrized(grid: CMatrix) -> Result<Self, MatrixError> {
        Self::from_dense_inner(grid, true)
    }

    fn from_dense_inner(mut grid: CMatrix, symmetrize: bool) -> Result<Self, MatrixError> {
        assert!(grid.is_square(), "Hermitian matrix must be square");
        let n = grid.rows();
        let mut scale: f64 = 0.0;
        for r in 0..n {
            for c in 0..n {
                let z = grid[(r, c)];
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(MatrixError::NonFinite(r, c));
                }
                scale = scale.max(z.norm());
            }
        }
        if symmetrize {
            for r in 0..n {
                for c in r..n {
                    let avg = (grid[(r, c)] + grid[(c, r)].conj()) * Complex::new(0.5, 0.0);
                    grid[(r, c)] = avg;
                    grid[(c, r)] = avg.conj();
                }
            }
        } else {
            let mut worst: f64 = 0.0;
            for r in 0..n {
                for c in r..n {
                    worst = worst.max((grid[(r, c)] - grid[(c, r)].conj()).norm());
                }
            }
            if worst > HERMITICITY_TOL * scale.max(f64::MIN_POSITIVE) {
                return Err(MatrixError::NotHermitian(worst / scale.max(1e-300)));
            }
            // Pin the diagonal to be exactly real so eigensolves and traces
            // never see a stray imaginary residue.
            for r in 0..n {
                grid[(r, r)] = Complex::new(grid[(r, r)].re, 0.0);
            }
        }
        let row_sparsity = (0..n)
            .map(|r| grid.row(r).iter().filter(|z| **z != Complex::ZERO).count())
            .max()
            .unwrap_or(0);
        Ok(Self {
            dim: n,
            storage: Storage::Dense(grid),
            row_sparsity,
            norms: OnceLock::new(),
        })
    }

    /// Builds from per-row `(column, value)` lists.
    ///
    /// Rows must be sorted by column with no duplicates and no explicit
    /// zeros; entries must pair up Hermitianly across the diagonal.
    pub fn from_sparse_rows(
        dim: usize,
        rows: Vec<Vec<(usize, Complex)>>,
    ) -> Result<Self, MatrixError> {
        assert_eq!(rows.len(), dim, "row count must equal dim");
        let mut scale: f64 = 0.0;
        for (r, row) in rows.iter().enumerate() {
            let mut prev: Option<usize> = None;
            for &(c, v) in row {
                if c >= dim {
                    return Err(MatrixError::InvalidSparseRow(r, "column out of range"));
                }
                if prev.is_some_and(|p| p >= c) {
                    return Err(MatrixError::InvalidSparseRow(
                        r,
                        "columns not strictly ascending",
                    ));
                }
                prev = Some(c);
                if !v.re.is_finite() || !v.im.is_finite() {
                    return Err(MatrixError::NonFinite(r, c));
                }
                if v == Complex::ZERO {
                    return Err(MatrixError::InvalidSparseRow(r, "stored exact zero"));
                }
                scale = scale.max(v.norm());
            }
        }
        let lookup = |r: usize, c: usize| -> Complex {
            match rows[r].binary_search_by_key(&c, |&(col, _)| col) {
                Ok(i) => rows[r][i].1,
                Err(_) => Complex::ZERO,
            }
        };
        let tol = HERMITICITY_TOL * scale.max(f64::MIN_POSITIVE);
        let mut worst: f64 = 0.0;
        for (r, row) in rows.iter().enumerate() {
            for &(c, v) in row {
                worst = worst.max((v - lookup(c, r).conj()).norm());
            }
        }
        if worst > tol {
            return Err(MatrixError::NotHermitian(worst / scale.max(1e-300)));
        }
        let row_sparsity = rows.iter().map(Vec::len).max().unwrap_or(0);
        Ok(Self {
            dim,
            storage: Storage::Sparse(rows),
            row_sparsity,
            norms: OnceLock::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Max nonzero count over all rows.
    pub fn row_sparsity(&self) -> usize {
        self.row_sparsity
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse(_))
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn get(&self, r: usize, c: usize) -> Complex {
        match &self.storage {
            Storage::Dense(m) => m[(r, c)],
            Storage::Sparse(rows) => match rows[r].binary_search_by_key(&c, |&(col, _)| col) {
                Ok(i) => rows[r][i].1,
                Err(_) => Complex::ZERO,
            },
        }
    }

    /// Diagonal entry as a real number.
    pub fn diag(&self, j: usize) -> f64 {
        self.get(j, j).re
    }

    /// Stored entries of row `r` as `(column, value)` pairs.
    pub fn row_entries(&self, r: usize) -> Box<dyn Iterator<Item = (usize, Complex)> + '_> {
        match &self.storage {
            Storage::Dense(m) => Box::new(
                m.row(r)
                    .iter()
                    .enumerate()
                    .filter(|(_, z)| **z != Complex::ZERO)
                    .map(|(c, z)| (c, *z)),
            ),
            Storage::Sparse(rows) => Box::new(rows[r].iter().copied()),
        }
    }

    /// Squared Euclidean norm of row `j`.
    pub fn row_norm_sq(&self, j: usize) -> f64 {
        self.row_entries(j).map(|(_, v)| v.norm_sqr()).sum()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|j| self.diag(j)).sum()
    }

    pub fn to_cmatrix(&self) -> CMatrix {
        match &self.storage {
            Storage::Dense(m) => m.clone(),
            Storage::Sparse(rows) => {
                let mut m = CMatrix::zeros(self.dim, self.dim);
                for (r, row) in rows.iter().enumerate() {
                    for &(c, v) in row {
                        m[(r, c)] = v;
                    }
                }
                m
            }
        }
    }

    /// Norm bundle, computed on first use (spectral norm via eigensolve).
    pub fn norms(&self) -> Result<&NormBundle, MatrixError> {
        if let Some(nb) = self.norms.get() {
            return Ok(nb);
        }
        let eig = hermitian_eigendecompose(self, DEFAULT_EIG_TOL)?;
        let spectral = eig
            .eigenvalues
            .iter()
            .fold(0.0f64, |acc, l| acc.max(l.abs()));
        let mut frob_sq = 0.0;
        let mut induced1: f64 = 0.0;
        let mut max_abs: f64 = 0.0;
        for r in 0..self.dim {
            let mut row_sum = 0.0;
            for (_, v) in self.row_entries(r) {
                let a = v.norm();
                frob_sq += a * a;
                row_sum += a;
                max_abs = max_abs.max(a);
            }
            induced1 = induced1.max(row_sum);
        }
        let nb = NormBundle {
            spectral,
            frobenius: frob_sq.sqrt(),
            induced1,
            trace: self.trace(),
            max_abs,
        };
        Ok(self.norms.get_or_init(|| nb))
    }
}

/// Complex amplitude vector with sparsity metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    dim: usize,
    amplitudes: Vec<Complex>,
    nnz: usize,
}

impl StateVector {
    pub fn new(amplitudes: Vec<Complex>) -> Self {
        let nnz = amplitudes.iter().filter(|z| **z != Complex::ZERO).count();
        Self {
            dim: amplitudes.len(),
            amplitudes,
            nnz,
        }
    }

    /// Like [`StateVector::new`] but requires `‖ψ‖₂ = 1` within `1e-12`.
    pub fn normalized(amplitudes: Vec<Complex>) -> Result<Self, MatrixError> {
        let n = vec_norm(&amplitudes);
        if (n - 1.0).abs() > 1e-12 {
            return Err(MatrixError::NotNormalized(n));
        }
        Ok(Self::new(amplitudes))
    }

    /// Basis state `e_k`.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut amps = vec![Complex::ZERO; dim];
        amps[k] = Complex::ONE;
        Self::new(amps)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.nnz
    }

    pub fn amplitudes(&self) -> &[Complex] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        vec_norm(&self.amplitudes)
    }

    /// Rescales to unit norm. No-op direction is undefined for the zero
    /// vector, which is returned unchanged.
    pub fn normalize(mut self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            for a in &mut self.amplitudes {
                *a /= n;
            }
        }
        self
    }
}

/// `H·x` (exact). Sparse storage runs in `O(s·q + N)` by walking the rows
/// that match nonzero input amplitudes and mirroring them as columns.
pub fn matvec(h: &HermitianMatrix, x: &StateVector) -> Result<StateVector, MatrixError> {
    if h.dim() != x.dim() {
        return Err(MatrixError::DimensionMismatch {
            expected: h.dim(),
            got: x.dim(),
        });
    }
    let amps = x.amplitudes();
    let mut out = vec![Complex::ZERO; h.dim()];
    match &h.storage {
        Storage::Dense(m) => {
            for (r, o) in out.iter_mut().enumerate() {
                *o = m.row(r).iter().zip(amps).map(|(a, b)| a * b).sum();
            }
        }
        Storage::Sparse(rows) => {
            // Column k of H is the conjugate of row k.
            for (k, xk) in amps.iter().enumerate() {
                if *xk == Complex::ZERO {
                    continue;
                }
                for &(j, v) in &rows[k] {
                    out[j] += v.conj() * xk;
                }
            }
        }
    }
    Ok(StateVector::new(out))
}

/// Norm bundle straight from storage (spectral via eigensolve).
pub fn norms(h: &HermitianMatrix) -> Result<NormBundle, MatrixError> {
    h.norms().copied()
}

/// Eigendecomposition result: ascending eigenvalues and a unitary whose
/// columns are the matching eigenvectors.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

/// Cyclic Jacobi diagonalization of a Hermitian matrix.
///
/// Sweeps annihilate off-diagonal entries with complex plane rotations
/// until the off-diagonal Frobenius mass drops below `tol·‖H‖_F`.
pub fn hermitian_eigendecompose(
    h: &HermitianMatrix,
    tol: f64,
) -> Result<EigenDecomposition, MatrixError> {
    jacobi_eigen(&h.to_cmatrix(), tol)
}

/// Jacobi engine on a raw dense Hermitian grid. The caller is responsible
/// for Hermiticity; the routine only reads the upper triangle's conjugate
/// structure implicitly through the update formulas.
pub fn jacobi_eigen(a: &CMatrix, tol: f64) -> Result<EigenDecomposition, MatrixError> {
    assert!(a.is_square(), "eigendecomposition needs a square matrix");
    let n = a.rows();
    let mut m = a.clone();
    let mut v = CMatrix::identity(n);
    let norm_f = a.frobenius_norm();
    if n <= 1 || norm_f == 0.0 {
        let eigenvalues = (0..n).map(|i| m[(i, i)].re).collect();
        return Ok(EigenDecomposition {
            eigenvalues,
            eigenvectors: v,
        });
    }
    let target = tol * norm_f;

    for _sweep in 0..MAX_JACOBI_SWEEPS {
        let mut off_sq = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off_sq += 2.0 * m[(p, q)].norm_sqr();
            }
        }
        if off_sq.sqrt() <= target {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));
            let eigenvalues: Vec<f64> = order.iter().map(|&i| m[(i, i)].re).collect();
            let eigenvectors =
                CMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
            return Ok(EigenDecomposition {
                eigenvalues,
                eigenvectors,
            });
        }

        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                let r = apq.norm();
                if r == 0.0 {
                    continue;
                }
                let phase = apq / r;
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let s_ph = phase * s; // e^{iφ}·s
                let s_ph_c = s_ph.conj();

                for j in 0..n {
                    if j == p || j == q {
                        continue;
                    }
                    let ajp = m[(j, p)];
                    let ajq = m[(j, q)];
                    let njp = ajp * c - ajq * s_ph_c;
                    let njq = ajp * s_ph + ajq * c;
                    m[(j, p)] = njp;
                    m[(p, j)] = njp.conj();
                    m[(j, q)] = njq;
                    m[(q, j)] = njq.conj();
                }
                let npp = app * c * c + aqq * s * s - 2.0 * c * s * r;
                let nqq = app * s * s + aqq * c * c + 2.0 * c * s * r;
                m[(p, p)] = Complex::new(npp, 0.0);
                m[(q, q)] = Complex::new(nqq, 0.0);
                m[(p, q)] = Complex::ZERO;
                m[(q, p)] = Complex::ZERO;

                for j in 0..n {
                    let vjp = v[(j, p)];
                    let vjq = v[(j, q)];
                    v[(j, p)] = vjp * c - vjq * s_ph_c;
                    v[(j, q)] = vjp * s_ph + vjq * c;
                }
            }
        }
    }
    Err(MatrixError::NonConvergence(MAX_JACOBI_SWEEPS))
}

/// Moore–Penrose pseudoinverse of a Hermitian matrix via eigendecomposition.
///
/// Eigenvalues with `|λ| ≤ rtol·|λ|_max` are dropped, which keeps the
/// inverse PSD whenever the input is.
pub fn hermitian_pseudoinverse(a: &CMatrix, rtol: f64) -> Result<CMatrix, MatrixError> {
    let eig = jacobi_eigen(a, DEFAULT_EIG_TOL)?;
    let lmax = eig
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, l| acc.max(l.abs()));
    let cutoff = rtol * lmax;
    let n = a.rows();
    let v = &eig.eigenvectors;
    let mut out = CMatrix::zeros(n, n);
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        if l.abs() <= cutoff {
            continue;
        }
        let inv = 1.0 / l;
        for r in 0..n {
            let vr = v[(r, k)] * inv;
            for c in 0..n {
                out[(r, c)] += vr * v[(c, k)].conj();
            }
        }
    }
    Ok(out)
}
