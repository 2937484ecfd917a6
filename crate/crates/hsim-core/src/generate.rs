//! Seeded test-instance generators: random Hermitian operators (dense,
//! sparse, low-rank PSD, harmonic diagonal) and state vectors.

use crate::dense::CMatrix;
use crate::matrix::{HermitianMatrix, StateVector};
use crate::sampling::SeededRng;
use crate::Complex;

fn gaussian_complex(rng: &mut SeededRng) -> Complex {
    Complex::new(rng.normal(), rng.normal())
}

/// Dense random Hermitian matrix with Gaussian entries.
pub fn hermitian_dense(dim: usize, rng: &mut SeededRng) -> HermitianMatrix {
    let mut g = CMatrix::zeros(dim, dim);
    for r in 0..dim {
        g[(r, r)] = Complex::new(rng.normal(), 0.0);
        for c in (r + 1)..dim {
            let z = gaussian_complex(rng);
            g[(r, c)] = z;
            g[(c, r)] = z.conj();
        }
    }
    HermitianMatrix::from_dense(g).expect("construction is Hermitian by mirroring")
}

/// Random PSD matrix `G·Gᴴ` with `G: dim×rank`, optionally rescaled to a
/// target trace. `rank` bounds the number of nonzero eigenvalues exactly.
pub fn psd_lowrank(
    dim: usize,
    rank: usize,
    target_trace: Option<f64>,
    rng: &mut SeededRng,
) -> HermitianMatrix {
    assert!(rank >= 1 && rank <= dim, "rank must be in 1..=dim");
    let g = CMatrix::from_fn(dim, rank, |_, _| gaussian_complex(rng));
    let mut h = CMatrix::zeros(dim, dim);
    for r in 0..dim {
        for c in r..dim {
            let v: Complex = (0..rank).map(|k| g[(r, k)] * g[(c, k)].conj()).sum();
            if r == c {
                h[(r, r)] = Complex::new(v.re, 0.0);
            } else {
                h[(r, c)] = v;
                h[(c, r)] = v.conj();
            }
        }
    }
    if let Some(target) = target_trace {
        let tr: f64 = (0..dim).map(|r| h[(r, r)].re).sum();
        assert!(tr > 0.0, "cannot rescale a zero-trace PSD matrix");
        let s = Complex::new(target / tr, 0.0);
        h = h.scale(s);
    }
    HermitianMatrix::from_dense(h).expect("construction is Hermitian by mirroring")
}

/// Random Hermitian matrix with at most `sparsity` nonzeros per row,
/// stored in sparse-row form. Diagonal entries are always present.
pub fn sparse_hermitian(dim: usize, sparsity: usize, rng: &mut SeededRng) -> HermitianMatrix {
    assert!(sparsity >= 1, "sparsity must be at least 1");
    let mut rows: Vec<Vec<(usize, Complex)>> = (0..dim)
        .map(|r| vec![(r, Complex::new(rng.normal(), 0.0))])
        .collect();
    if sparsity > 1 {
        let target_pairs = dim * (sparsity - 1) / 2;
        let mut attempts = 0;
        let mut placed = 0;
        while placed < target_pairs && attempts < 50 * target_pairs.max(1) {
            attempts += 1;
            let r = rng.index(dim);
            let c = rng.index(dim);
            if r == c
                || rows[r].len() >= sparsity
                || rows[c].len() >= sparsity
                || rows[r].iter().any(|&(cc, _)| cc == c)
            {
                continue;
            }
            let z = gaussian_complex(rng);
            rows[r].push((c, z));
            rows[c].push((r, z.conj()));
            placed += 1;
        }
    }
    for row in &mut rows {
        row.sort_by_key(|&(c, _)| c);
    }
    HermitianMatrix::from_sparse_rows(dim, rows).expect("construction is Hermitian by mirroring")
}

/// Diagonal matrix `H_ii = 1/i` for `i ∈ 1..=dim` — full-rank, dense in
/// eigenvalue count, yet trivially row-searchable.
pub fn diag_harmonic(dim: usize) -> HermitianMatrix {
    let rows = (0..dim)
        .map(|i| vec![(i, Complex::new(1.0 / (i + 1) as f64, 0.0))])
        .collect();
    HermitianMatrix::from_sparse_rows(dim, rows).expect("diagonal is Hermitian")
}

/// Random unit state with Gaussian amplitudes on all coordinates.
pub fn state_dense(dim: usize, rng: &mut SeededRng) -> StateVector {
    let amps: Vec<Complex> = (0..dim).map(|_| gaussian_complex(rng)).collect();
    StateVector::new(amps).normalize()
}

/// Random unit state with exactly `q` nonzero amplitudes.
pub fn state_sparse(dim: usize, q: usize, rng: &mut SeededRng) -> StateVector {
    assert!(q >= 1 && q <= dim, "q must be in 1..=dim");
    let mut idx: Vec<usize> = (0..dim).collect();
    // Partial Fisher-Yates: the first q slots become the support.
    for i in 0..q {
        let j = i + rng.index(dim - i);
        idx.swap(i, j);
    }
    let mut amps = vec![Complex::ZERO; dim];
    for &k in &idx[..q] {
        let mut z = gaussian_complex(rng);
        while z == Complex::ZERO {
            z = gaussian_complex(rng);
        }
        amps[k] = z;
    }
    StateVector::new(amps).normalize()
}
