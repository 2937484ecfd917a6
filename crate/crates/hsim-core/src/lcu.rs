//! Dense emulation of walk-based simulation: state-preparation vectors,
//! the walk operator `U = iS(2TTᴴ − I)`, Bessel-weighted series `V_k`, and
//! a segmented evolution loop.
//!
//! Everything here is materialized as explicit vectors and matrices on the
//! enlarged `4N²`-dimensional walk space, which caps the usable dimension
//! at `N ≤ 16`. This module is a verification emulator for the operator
//! algebra, not a circuit compiler: the "compressed action" on a state is
//! computed by embedding through the isometry `T` and reading back the
//! flag-0 block.
//!
//! One genuine corner of the construction: the square-root convention
//! cannot represent negative real *diagonal* entries (no complex `u` has
//! `u·u* < 0`), so [`lcu_evolve`] first adds `c·I` to make the diagonal
//! nonnegative and undoes the global phase `e^{±ict}` at the end.

use thiserror::Error;

use crate::dense::{vec_norm, CMatrix};
use crate::matrix::{
    hermitian_eigendecompose, HermitianMatrix, MatrixError, StateVector, DEFAULT_EIG_TOL,
};
use crate::special::pow_over_factorial;
use crate::Complex;

/// Walk-space dimension is `4N²`; beyond `N = 16` the dense emulation
/// stops being a desk-scale object.
pub const MAX_WALK_DIM: usize = 16;

#[derive(Debug, Error)]
pub enum LcuError {
    #[error("matrix has zero max row-sum norm")]
    ZeroMatrix,
    #[error("dimension {0} exceeds the dense walk limit {MAX_WALK_DIM}")]
    DimensionTooLarge(usize),
    #[error("input state has norm {0}, expected 1")]
    StateNotNormalized(f64),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// `√(H*_jk)` under the convention `√(H_jk)·(√(H*_jk))* = H_jk`:
/// for `H_jk = r·e^{iφ}` not a negative real, `√r·e^{−iφ/2}`; for negative
/// reals, `sign(j−k)·i·√r`. The diagonal negative-real case has no valid
/// choice (`sign(0) = 0`) and is flagged by the caller.
fn sqrt_conj_entry(value: Complex, j: usize, k: usize) -> (Complex, bool) {
    if value == Complex::ZERO {
        return (Complex::ZERO, false);
    }
    let r = value.norm();
    if value.im == 0.0 && value.re < 0.0 {
        let s = match j.cmp(&k) {
            std::cmp::Ordering::Greater => 1.0,
            std::cmp::Ordering::Less => -1.0,
            std::cmp::Ordering::Equal => {
                // Undefined by the sign rule; fall back to +i√r and flag.
                return (Complex::new(0.0, r.sqrt()), true);
            }
        };
        (Complex::new(0.0, s * r.sqrt()), false)
    } else {
        let phi = value.arg();
        (Complex::from_polar(r.sqrt(), -phi / 2.0), false)
    }
}

/// Row-preparation state over `|k⟩⊗{|0⟩,|1⟩}` (index layout `2k + flag`).
#[derive(Debug, Clone)]
pub struct PrepState {
    pub row_index: usize,
    /// Length `2N`; component `2k` is `√(H*_jk)/√‖H‖₁`, component `2k+1`
    /// the padding amplitude `√((‖H‖₁−σ_j)/N)/√‖H‖₁`.
    pub vector: Vec<Complex>,
    /// True when a negative real diagonal entry forced the undefined
    /// square-root branch.
    pub flagged_negative_diagonal: bool,
}

/// Maximum absolute row-sum norm, computed directly from storage.
fn induced1(h: &HermitianMatrix) -> f64 {
    (0..h.dim())
        .map(|r| h.row_entries(r).map(|(_, v)| v.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Builds the row-`j` preparation state.
pub fn prep_state(h: &HermitianMatrix, j: usize) -> Result<PrepState, LcuError> {
    let n = h.dim();
    let h1 = induced1(h);
    if h1 <= 0.0 {
        return Err(LcuError::ZeroMatrix);
    }
    let sigma_j: f64 = h.row_entries(j).map(|(_, v)| v.norm()).sum();
    let pad = ((h1 - sigma_j).max(0.0) / n as f64).sqrt() / h1.sqrt();
    let mut vector = vec![Complex::ZERO; 2 * n];
    let mut flagged = false;
    for (k, slot) in vector.iter_mut().step_by(2).enumerate() {
        let (amp, flag) = sqrt_conj_entry(h.get(j, k), j, k);
        flagged |= flag;
        *slot = amp / h1.sqrt();
    }
    for slot in vector.iter_mut().skip(1).step_by(2) {
        *slot = Complex::new(pad, 0.0);
    }
    Ok(PrepState {
        row_index: j,
        vector,
        flagged_negative_diagonal: flagged,
    })
}

/// The dense walk operator `U = iS(2TTᴴ − I)` on the `4N²` space, with
/// the isometry `T` and the register-pair swap kept alongside.
#[derive(Debug, Clone)]
pub struct WalkOperator {
    pub matrix_dim: usize,
    pub h1_norm: f64,
    pub u: CMatrix,
    /// Isometry `4N² × 2N`: column `2j+b` is `|j⟩|b⟩⊗|φ_jb⟩`.
    pub t_iso: CMatrix,
    /// True when any preparation state hit the flagged diagonal branch.
    pub flagged_negative_diagonal: bool,
}

fn swap_index(full: usize, pair_dim: usize) -> usize {
    let (x, y) = (full / pair_dim, full % pair_dim);
    y * pair_dim + x
}

impl WalkOperator {
    /// Applies the swap `S` to a walk-space vector.
    pub fn apply_swap(&self, x: &[Complex]) -> Vec<Complex> {
        let pair_dim = 2 * self.matrix_dim;
        (0..x.len())
            .map(|i| x[swap_index(i, pair_dim)])
            .collect()
    }

    /// `(I⊗⟨0|)TᴴST(I⊗|0⟩)`, which should reproduce `H/‖H‖₁` entrywise.
    pub fn compression(&self) -> CMatrix {
        let n = self.matrix_dim;
        let pair_dim = 2 * n;
        CMatrix::from_fn(n, n, |j, k| {
            let mut acc = Complex::ZERO;
            for r in 0..self.t_iso.rows() {
                let tj = self.t_iso[(r, 2 * j)];
                if tj == Complex::ZERO {
                    continue;
                }
                acc += tj.conj() * self.t_iso[(swap_index(r, pair_dim), 2 * k)];
            }
            acc
        })
    }
}

/// Assembles the dense walk operator for `H` (requires `N ≤ 16`).
pub fn build_walk(h: &HermitianMatrix) -> Result<WalkOperator, LcuError> {
    let n = h.dim();
    if n > MAX_WALK_DIM {
        return Err(LcuError::DimensionTooLarge(n));
    }
    let h1 = induced1(h);
    if h1 <= 0.0 {
        return Err(LcuError::ZeroMatrix);
    }
    let pair_dim = 2 * n;
    let full_dim = pair_dim * pair_dim;
    let mut t_iso = CMatrix::zeros(full_dim, pair_dim);
    let mut flagged = false;
    for j in 0..n {
        let prep = prep_state(h, j)?;
        flagged |= prep.flagged_negative_diagonal;
        let a0 = 2 * j; // |j⟩|0⟩
        for (c, amp) in prep.vector.iter().enumerate() {
            t_iso[(a0 * pair_dim + c, a0)] = *amp;
        }
        let a1 = 2 * j + 1; // |j⟩|1⟩ ⊗ |0⟩|1⟩
        t_iso[(a1 * pair_dim + 1, a1)] = Complex::ONE;
    }

    // U = iS(2TTᴴ − I).
    let mut w = t_iso.mul(&t_iso.adjoint()).scale(Complex::new(2.0, 0.0));
    for i in 0..full_dim {
        w[(i, i)] -= Complex::ONE;
    }
    let i_unit = Complex::new(0.0, 1.0);
    let u = CMatrix::from_fn(full_dim, full_dim, |r, c| {
        w[(swap_index(r, pair_dim), c)] * i_unit
    });
    Ok(WalkOperator {
        matrix_dim: n,
        h1_norm: h1,
        u,
        t_iso,
        flagged_negative_diagonal: flagged,
    })
}

/// Per-eigenpair verification data for the walk spectrum relation
/// `μ± = ±e^{±i·arcsin(λ/‖H‖₁)}`.
#[derive(Debug, Clone)]
pub struct EigenPairCheck {
    pub lambda: f64,
    pub mu_plus: Complex,
    pub mu_minus: Complex,
    pub residual_plus: f64,
    pub residual_minus: f64,
}

#[derive(Debug, Clone)]
pub struct WalkEigenCheck {
    pub max_residual: f64,
    pub pairs: Vec<EigenPairCheck>,
}

/// The predicted walk eigenvalues `μ± = ±e^{±i·arcsin(λ/‖H‖₁)}`.
pub fn walk_mu(lambda: f64, h1_norm: f64) -> (Complex, Complex) {
    let theta = (lambda / h1_norm).clamp(-1.0, 1.0).asin();
    (
        Complex::from_polar(1.0, theta),
        -Complex::from_polar(1.0, -theta),
    )
}

/// Checks that `(T + iμ±·ST)|λ⟩|0⟩` are eigenvectors of `U` with the
/// predicted eigenvalues, returning relative residuals per pair.
pub fn walk_eigen_check(h: &HermitianMatrix) -> Result<WalkEigenCheck, LcuError> {
    let walk = build_walk(h)?;
    let eig = hermitian_eigendecompose(h, DEFAULT_EIG_TOL)?;
    let n = h.dim();
    let mut pairs = Vec::with_capacity(n);
    let mut max_residual = 0.0f64;
    for (idx, &lambda) in eig.eigenvalues.iter().enumerate() {
        let (mu_plus, mu_minus) = walk_mu(lambda, walk.h1_norm);

        // Embed |λ⟩|0⟩ into the pair space, then into the walk space.
        let mut x = vec![Complex::ZERO; 2 * n];
        for r in 0..n {
            x[2 * r] = eig.eigenvectors[(r, idx)];
        }
        let tx = walk.t_iso.matvec(&x);
        let stx = walk.apply_swap(&tx);

        let mut residuals = [0.0f64; 2];
        for (slot, mu) in residuals.iter_mut().zip([mu_plus, mu_minus]) {
            let w: Vec<Complex> = tx
                .iter()
                .zip(&stx)
                .map(|(a, b)| a + Complex::new(0.0, 1.0) * mu * b)
                .collect();
            let norm = vec_norm(&w).max(f64::MIN_POSITIVE);
            let uw = walk.u.matvec(&w);
            let res: f64 = uw
                .iter()
                .zip(&w)
                .map(|(a, b)| (a - mu * b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            *slot = res / norm;
        }
        max_residual = max_residual.max(residuals[0]).max(residuals[1]);
        pairs.push(EigenPairCheck {
            lambda,
            mu_plus,
            mu_minus,
            residual_plus: residuals[0],
            residual_minus: residuals[1],
        });
    }
    Ok(WalkEigenCheck {
        max_residual,
        pairs,
    })
}

/// Bessel function of the first kind by the alternating power series
/// `J_m(z) = Σ_r (−1)^r (z/2)^{2r+|m|}/(r!(r+|m|)!)`, with
/// `J_{−m}(z) = (−1)^m J_m(z)` and `J_m(−z) = (−1)^m J_m(z)`.
pub fn bessel_j(m: i32, z: f64) -> f64 {
    let am = m.unsigned_abs() as usize;
    let za = z.abs();
    if za == 0.0 {
        return if am == 0 { 1.0 } else { 0.0 };
    }
    let half = za / 2.0;
    let mut term = pow_over_factorial(half, am); // (z/2)^|m| / |m|!
    let mut sum = term;
    let h2 = half * half;
    for r in 1..400 {
        term *= -h2 / (r as f64 * (r + am) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-30) {
            break;
        }
    }
    let mut sign = 1.0;
    if m < 0 && am % 2 == 1 {
        sign = -sign;
    }
    if z < 0.0 && am % 2 == 1 {
        sign = -sign;
    }
    sign * sum
}

/// Normalized Bessel weights `α_m = J_m(z)/Σ_{j=−k}^{k} J_j(z)`.
///
/// `α_0` is defined as one minus the sum of the others, which pins
/// `Σ α_m = 1` by construction.
#[derive(Debug, Clone)]
pub struct LcuSeries {
    pub z: f64,
    pub k: usize,
    /// Index `m + k` holds `α_m`, `m ∈ [−k, k]`.
    pub alphas: Vec<f64>,
}

impl LcuSeries {
    pub fn new(z: f64, k: usize) -> Self {
        let c: f64 = (-(k as i32)..=k as i32).map(|m| bessel_j(m, z)).sum();
        let mut alphas: Vec<f64> = (-(k as i32)..=k as i32)
            .map(|m| bessel_j(m, z) / c)
            .collect();
        let others: f64 = alphas
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != k)
            .map(|(_, a)| a)
            .sum();
        alphas[k] = 1.0 - others;
        Self { z, k, alphas }
    }

    pub fn alpha(&self, m: i32) -> f64 {
        self.alphas[(m + self.k as i32) as usize]
    }

    pub fn sum_abs(&self) -> f64 {
        self.alphas.iter().map(|a| a.abs()).sum()
    }

    /// Scalar symbol `Σ α_m μ^m` for a unimodular `μ`.
    pub fn eigenvalue_at(&self, mu: Complex) -> Complex {
        let mut acc = Complex::new(self.alpha(0), 0.0);
        let mut pos = Complex::ONE;
        let mut neg = Complex::ONE;
        let inv = mu.conj(); // μ⁻¹ for |μ| = 1
        for m in 1..=self.k as i32 {
            pos *= mu;
            neg *= inv;
            acc += pos * self.alpha(m) + neg * self.alpha(-m);
        }
        acc
    }
}

/// Smallest `k ≥ max(1, ⌈|z|⌉)` with
/// `(‖H‖/‖H‖₁)·|z/2|^{k+1}/k! ≤ ε`, found by upward scan.
pub fn truncation_order(z: f64, norm_ratio: f64, eps: f64) -> usize {
    let start = (z.abs().ceil() as usize).max(1);
    let half = z.abs() / 2.0;
    let mut k = start;
    while truncation_series_bound(half, k, norm_ratio) > eps && k < 1000 {
        k += 1;
    }
    k
}

/// The scanned bound `norm_ratio · half^{k+1}/k!`.
pub fn truncation_series_bound(half: f64, k: usize, norm_ratio: f64) -> f64 {
    norm_ratio * half * pow_over_factorial(half, k)
}

/// One segment of the evolution: its phase `z` and truncation order `k`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SegmentInfo {
    pub z: f64,
    pub k: usize,
    pub sum_abs_alpha: f64,
}

/// Output of [`lcu_evolve`] with per-segment diagnostics.
#[derive(Debug, Clone)]
pub struct LcuEvolution {
    pub state: StateVector,
    pub segments: Vec<SegmentInfo>,
    /// Diagonal shift `c` applied internally (`H + cI` walked, phase
    /// `e^{∓ict}` restored).
    pub diagonal_shift: f64,
}

/// Evolution sign: the emulator targets `e^{−iHt}` by default, matching
/// the walk chapter's convention; `Plus` targets `e^{+iHt}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvolutionSign {
    Minus,
    Plus,
}

fn add_diagonal(h: &HermitianMatrix, c: f64) -> HermitianMatrix {
    let mut g = h.to_cmatrix();
    for i in 0..h.dim() {
        g[(i, i)] += c;
    }
    HermitianMatrix::from_dense(g).expect("diagonal shift preserves Hermiticity")
}

/// Applies `V_k` to a walk-space vector by accumulating `α_m U^m y`.
fn apply_series(walk: &WalkOperator, series: &LcuSeries, y: &[Complex]) -> Vec<Complex> {
    let mut acc: Vec<Complex> = y.iter().map(|a| a * series.alpha(0)).collect();
    let mut pos = y.to_vec();
    let mut neg = y.to_vec();
    let u_adj = walk.u.adjoint();
    for m in 1..=series.k as i32 {
        pos = walk.u.matvec(&pos);
        neg = u_adj.matvec(&neg);
        let (ap, an) = (series.alpha(m), series.alpha(-m));
        for i in 0..acc.len() {
            acc[i] += pos[i] * ap + neg[i] * an;
        }
    }
    acc
}

/// Segmented walk evolution targeting `e^{−iHt}ψ` (or `e^{+iHt}ψ`).
///
/// Splits the total phase `z_total = ∓t‖H‖₁` into fixed `|z| = 1/2`
/// segments plus a remainder; per segment the truncation order comes from
/// [`truncation_order`] at a per-segment error budget, and the compressed
/// action of `V_k` is applied through the isometry.
pub fn lcu_evolve(
    h: &HermitianMatrix,
    psi: &StateVector,
    t: f64,
    eps: f64,
    sign: EvolutionSign,
) -> Result<LcuEvolution, LcuError> {
    let n = h.dim();
    if n > MAX_WALK_DIM {
        return Err(LcuError::DimensionTooLarge(n));
    }
    let pnorm = psi.norm();
    if (pnorm - 1.0).abs() > 1e-10 {
        return Err(LcuError::StateNotNormalized(pnorm));
    }

    // The square-root convention breaks on negative real diagonals; walk
    // H + cI instead and restore the global phase at the end.
    let min_diag = (0..n).map(|i| h.diag(i)).fold(f64::INFINITY, f64::min);
    let shift = if min_diag < 0.0 { -min_diag } else { 0.0 };
    let walked = add_diagonal(h, shift);

    let sign_factor = match sign {
        EvolutionSign::Minus => -1.0,
        EvolutionSign::Plus => 1.0,
    };
    let h1 = induced1(&walked);
    if h1 <= 0.0 || t == 0.0 {
        // Zero operator after the shift means H = −shift·I exactly.
        let phase = Complex::from_polar(1.0, -sign_factor * shift * t);
        let amps = psi.amplitudes().iter().map(|a| a * phase).collect();
        return Ok(LcuEvolution {
            state: StateVector::new(amps),
            segments: Vec::new(),
            diagonal_shift: shift,
        });
    }

    let nb = walked.norms()?;
    let ratio = (nb.spectral / h1).min(1.0);
    let z_total = sign_factor * t * h1;
    let full_segments = (z_total.abs() / 0.5).floor() as usize;
    let remainder = z_total - z_total.signum() * 0.5 * full_segments as f64;
    let mut zs = vec![z_total.signum() * 0.5; full_segments];
    if remainder.abs() > 1e-15 {
        zs.push(remainder);
    }
    let eps_seg = eps / (2.0 * zs.len().max(1) as f64);

    let walk = build_walk(&walked)?;
    let mut segments = Vec::with_capacity(zs.len());
    let mut phi: Vec<Complex> = psi.amplitudes().to_vec();
    let mut cached: Option<(f64, LcuSeries)> = None;
    for &z in &zs {
        let series = match &cached {
            Some((cz, s)) if *cz == z => s.clone(),
            _ => {
                let k = truncation_order(z, ratio, eps_seg);
                let s = LcuSeries::new(z, k);
                cached = Some((z, s.clone()));
                s
            }
        };
        segments.push(SegmentInfo {
            z,
            k: series.k,
            sum_abs_alpha: series.sum_abs(),
        });

        // Embed |φ⟩|0⟩, push through T, apply V_k, read the flag-0 block.
        let mut x = vec![Complex::ZERO; 2 * n];
        for j in 0..n {
            x[2 * j] = phi[j];
        }
        let y = walk.t_iso.matvec(&x);
        let y2 = apply_series(&walk, &series, &y);
        let back = walk.t_iso.adjoint_matvec(&y2);
        for j in 0..n {
            phi[j] = back[2 * j];
        }
    }

    // Undo the diagonal shift: e^{sign·iHt} = e^{−sign·ict}·e^{sign·i(H+cI)t}.
    let phase = Complex::from_polar(1.0, -sign_factor * shift * t);
    for a in &mut phi {
        *a *= phase;
    }
    Ok(LcuEvolution {
        state: StateVector::new(phi),
        segments,
        diagonal_shift: shift,
    })
}

/// Materializes the compressed `N×N` action of `V_k` (test/diagnostic
/// use): columns are the read-back images of basis states.
pub fn compressed_series_operator(h: &HermitianMatrix, z: f64, k: usize) -> Result<CMatrix, LcuError> {
    let n = h.dim();
    let walk = build_walk(h)?;
    let series = LcuSeries::new(z, k);
    let mut out = CMatrix::zeros(n, n);
    for col in 0..n {
        let mut x = vec![Complex::ZERO; 2 * n];
        x[2 * col] = Complex::ONE;
        let y = walk.t_iso.matvec(&x);
        let y2 = apply_series(&walk, &series, &y);
        let back = walk.t_iso.adjoint_matvec(&y2);
        for r in 0..n {
            out[(r, col)] = back[2 * r];
        }
    }
    Ok(out)
}
