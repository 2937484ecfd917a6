//! Randomized approximate matrix multiplication.
//!
//! `AB` is estimated by sampling `c` outer products `A^{i} B_{i}` i.i.d.
//! with replacement and rescaling by `1/√(c·p_i)`, which makes `CR` an
//! entrywise unbiased estimator of `AB`. Row/column-norm probabilities
//! minimize the expected squared Frobenius error.

use thiserror::Error;

use crate::dense::CMatrix;
use crate::sampling::SeededRng;
use crate::Complex;

#[derive(Debug, Error)]
pub enum RandmmError {
    #[error("inner dimensions do not match: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("all sampling probabilities would be zero")]
    ZeroProduct,
    #[error("invalid sampling distribution: {0}")]
    InvalidDistribution(&'static str),
    #[error("parameter {0} out of range (0, 1]")]
    ParamOutOfRange(&'static str),
}

/// The sampled sketch `C` (scaled columns of `A`) and `R` (scaled rows of
/// `B`), with the provenance needed to audit the draw.
#[derive(Debug, Clone)]
pub struct SketchPair {
    pub c: CMatrix,
    pub r: CMatrix,
    pub chosen_indices: Vec<usize>,
    pub probabilities_used: Vec<f64>,
}

impl SketchPair {
    /// The estimator `CR ≈ AB`.
    pub fn product(&self) -> CMatrix {
        self.c.mul(&self.r)
    }
}

fn column_norms(a: &CMatrix) -> Vec<f64> {
    (0..a.cols())
        .map(|k| {
            (0..a.rows())
                .map(|r| a[(r, k)].norm_sqr())
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

fn row_norms(b: &CMatrix) -> Vec<f64> {
    (0..b.rows())
        .map(|k| {
            b.row(k)
                .iter()
                .map(|z| z.norm_sqr())
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

/// Variance-minimizing probabilities `p_k ∝ ‖A^k‖₂·‖B_k‖₂`.
pub fn optimal_probabilities(a: &CMatrix, b: &CMatrix) -> Result<Vec<f64>, RandmmError> {
    if a.cols() != b.rows() {
        return Err(RandmmError::DimensionMismatch(a.cols(), b.rows()));
    }
    let ca = column_norms(a);
    let rb = row_norms(b);
    let raw: Vec<f64> = ca.iter().zip(&rb).map(|(x, y)| x * y).collect();
    let total: f64 = raw.iter().sum();
    if total <= 0.0 {
        return Err(RandmmError::ZeroProduct);
    }
    Ok(raw.into_iter().map(|w| w / total).collect())
}

/// Draws `c` outer-product samples and assembles the sketch.
///
/// Requires `p` to be a distribution over the inner dimension with
/// `p_k > 0` wherever `A^k B_k ≠ 0` (a zero probability on a contributing
/// term would make the estimator's variance infinite).
pub fn sketch_multiply(
    a: &CMatrix,
    b: &CMatrix,
    c: usize,
    p: &[f64],
    rng: &mut SeededRng,
) -> Result<SketchPair, RandmmError> {
    if a.cols() != b.rows() {
        return Err(RandmmError::DimensionMismatch(a.cols(), b.rows()));
    }
    let n = a.cols();
    if p.len() != n {
        return Err(RandmmError::InvalidDistribution("wrong length"));
    }
    if p.iter().any(|&x| !x.is_finite() || x < 0.0) {
        return Err(RandmmError::InvalidDistribution(
            "negative or non-finite entry",
        ));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(RandmmError::InvalidDistribution("does not sum to 1"));
    }
    let ca = column_norms(a);
    let rb = row_norms(b);
    for k in 0..n {
        if p[k] == 0.0 && ca[k] * rb[k] > 0.0 {
            return Err(RandmmError::InvalidDistribution(
                "zero probability on a nonzero outer product",
            ));
        }
    }
    if c == 0 {
        return Err(RandmmError::InvalidDistribution("sample count is zero"));
    }

    let mut cm = CMatrix::zeros(a.rows(), c);
    let mut rm = CMatrix::zeros(c, b.cols());
    let mut chosen = Vec::with_capacity(c);
    let mut used = Vec::with_capacity(c);
    for t in 0..c {
        let mut q = rng.uniform();
        let mut idx = n - 1;
        for (k, &pk) in p.iter().enumerate() {
            if q < pk {
                idx = k;
                break;
            }
            q -= pk;
        }
        let scale = Complex::new(1.0 / (c as f64 * p[idx]).sqrt(), 0.0);
        for r in 0..a.rows() {
            cm[(r, t)] = a[(r, idx)] * scale;
        }
        for col in 0..b.cols() {
            rm[(t, col)] = b[(idx, col)] * scale;
        }
        chosen.push(idx);
        used.push(p[idx]);
    }
    Ok(SketchPair {
        c: cm,
        r: rm,
        chosen_indices: chosen,
        probabilities_used: used,
    })
}

/// Closed-form `E[‖AB − CR‖_F²] = Σ_k ‖A^k‖²‖B_k‖²/(c·p_k) − ‖AB‖_F²/c`.
///
/// Terms with `p_k = 0` and a nonzero outer product make the expectation
/// infinite, which is reported as `f64::INFINITY`.
pub fn expected_frobenius_error(a: &CMatrix, b: &CMatrix, c: usize, p: &[f64]) -> f64 {
    let ca = column_norms(a);
    let rb = row_norms(b);
    let mut sum = 0.0;
    for k in 0..ca.len() {
        let w = ca[k] * ca[k] * rb[k] * rb[k];
        if w == 0.0 {
            continue;
        }
        if p[k] == 0.0 {
            return f64::INFINITY;
        }
        sum += w / p[k];
    }
    let ab_frob_sq = a.mul(b).frobenius_norm().powi(2);
    (sum - ab_frob_sq) / c as f64
}

/// Markov-bound sample count `⌈β/(δ²ε²)⌉`: with probability ≥ 1−δ,
/// `‖AB − CR‖_F ≤ ε‖A‖_F‖B‖_F` when probabilities are β-nearly optimal.
pub fn sample_count_for(eps: f64, beta: f64, delta: f64) -> Result<usize, RandmmError> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(RandmmError::ParamOutOfRange("eps"));
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(RandmmError::ParamOutOfRange("beta"));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(RandmmError::ParamOutOfRange("delta"));
    }
    Ok((beta / (delta * delta * eps * eps)).ceil() as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c64(re: f64) -> Complex {
        Complex::new(re, 0.0)
    }

    fn real_matrix(rows: usize, cols: usize, rng: &mut SeededRng) -> CMatrix {
        CMatrix::from_fn(rows, cols, |_, _| c64(rng.uniform() * 2.0 - 1.0))
    }

    /// Exact expectation/variance by enumerating all n^c index tuples.
    /// Independent of the sampling path: it never draws randomness.
    struct Enumerated {
        mean: CMatrix,
        var: Vec<f64>,
        e_frob_sq: f64,
    }

    fn enumerate_sketches(a: &CMatrix, b: &CMatrix, c: usize, p: &[f64]) -> Enumerated {
        let n = a.cols();
        let ab = a.mul(b);
        let (m, q) = (a.rows(), b.cols());
        let mut mean = CMatrix::zeros(m, q);
        let mut second = vec![0.0f64; m * q];
        let mut e_frob_sq = 0.0;
        let mut tuple = vec![0usize; c];
        loop {
            let prob: f64 = tuple.iter().map(|&i| p[i]).product();
            if prob > 0.0 {
                let mut cr = CMatrix::zeros(m, q);
                for &i in &tuple {
                    for r in 0..m {
                        for s in 0..q {
                            cr[(r, s)] += a[(r, i)] * b[(i, s)] / c64(c as f64 * p[i]);
                        }
                    }
                }
                let pc = c64(prob);
                for r in 0..m {
                    for s in 0..q {
                        mean[(r, s)] += cr[(r, s)] * pc;
                        second[r * q + s] += prob * cr[(r, s)].re * cr[(r, s)].re;
                    }
                }
                e_frob_sq += prob * ab.sub(&cr).frobenius_norm().powi(2);
            }
            // Next tuple in mixed radix.
            let mut pos = 0;
            loop {
                if pos == c {
                    let var = (0..m * q)
                        .map(|i| second[i] - mean[(i / q, i % q)].re.powi(2))
                        .collect();
                    return Enumerated {
                        mean,
                        var,
                        e_frob_sq,
                    };
                }
                tuple[pos] += 1;
                if tuple[pos] < n {
                    break;
                }
                tuple[pos] = 0;
                pos += 1;
            }
        }
    }

    #[test]
    fn optimal_probabilities_examples() {
        let i2 = CMatrix::identity(2);
        let p = optimal_probabilities(&i2, &i2).unwrap();
        assert_eq!(p, vec![0.5, 0.5]);

        // Column norms (1, 2) against row norms (1, 1).
        let a = CMatrix::from_rows(vec![vec![c64(1.0), c64(0.0)], vec![c64(0.0), c64(2.0)]]);
        let p = optimal_probabilities(&a, &i2).unwrap();
        assert!((p[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((p[1] - 2.0 / 3.0).abs() < 1e-15);

        let mut rng = SeededRng::new(1, 0);
        let a = real_matrix(4, 4, &mut rng);
        let b = real_matrix(4, 4, &mut rng);
        let p = optimal_probabilities(&a, &b).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn zero_product_rejected() {
        let z = CMatrix::zeros(2, 2);
        assert!(matches!(
            optimal_probabilities(&z, &z),
            Err(RandmmError::ZeroProduct)
        ));
    }

    #[test]
    fn single_column_is_exact() {
        let mut rng = SeededRng::new(2, 0);
        let a = real_matrix(2, 1, &mut rng);
        let b = real_matrix(1, 3, &mut rng);
        let ab = a.mul(&b);
        for c in [1usize, 4, 9] {
            let sk = sketch_multiply(&a, &b, c, &[1.0], &mut rng).unwrap();
            let cr = sk.product();
            for r in 0..2 {
                for s in 0..3 {
                    assert!((cr[(r, s)] - ab[(r, s)]).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn unbiased_on_identity() {
        let i2 = CMatrix::identity(2);
        let p = [0.5, 0.5];
        let mut rng = SeededRng::new(3, 0);
        let trials = 100_000;
        let mut samples = Vec::with_capacity(trials);
        for _ in 0..trials {
            let sk = sketch_multiply(&i2, &i2, 1, &p, &mut rng).unwrap();
            samples.push(sk.product()[(0, 0)].re);
        }
        let mean: f64 = samples.iter().sum::<f64>() / trials as f64;
        let var: f64 =
            samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        let sem = (var / trials as f64).sqrt();
        assert!(
            (mean - 1.0).abs() <= 3.0 * sem,
            "mean {mean}, sem {sem:.2e}"
        );
    }

    #[test]
    fn enumeration_matches_lemma_formulas() {
        let mut rng = SeededRng::new(4, 0);
        let a = real_matrix(3, 3, &mut rng);
        let b = real_matrix(3, 3, &mut rng);
        let c = 2usize;
        let uniform = [1.0 / 3.0; 3];
        let en = enumerate_sketches(&a, &b, c, &uniform);
        let ab = a.mul(&b);
        // E[(CR)_ij] = (AB)_ij.
        for r in 0..3 {
            for s in 0..3 {
                assert!((en.mean[(r, s)] - ab[(r, s)]).norm() < 1e-10);
            }
        }
        // Var[(CR)_ij] = (1/c)Σ_k A_ik²B_kj²/p_k − (1/c)(AB)_ij².
        for r in 0..3 {
            for s in 0..3 {
                let sum: f64 = (0..3)
                    .map(|k| a[(r, k)].re.powi(2) * b[(k, s)].re.powi(2) / uniform[k])
                    .sum();
                let want = sum / c as f64 - ab[(r, s)].re.powi(2) / c as f64;
                assert!((en.var[r * 3 + s] - want).abs() < 1e-10);
            }
        }
        // E‖AB−CR‖_F² matches the closed form.
        let formula = expected_frobenius_error(&a, &b, c, &uniform);
        assert!((en.e_frob_sq - formula).abs() < 1e-10);
    }

    #[test]
    fn optimal_probability_error_closed_form() {
        let mut rng = SeededRng::new(5, 0);
        let a = real_matrix(3, 3, &mut rng);
        let b = real_matrix(3, 3, &mut rng);
        let p = optimal_probabilities(&a, &b).unwrap();
        let c = 2usize;
        let lhs = expected_frobenius_error(&a, &b, c, &p);
        let ca = super::column_norms(&a);
        let rb = super::row_norms(&b);
        let s: f64 = ca.iter().zip(&rb).map(|(x, y)| x * y).sum();
        let rhs = (s * s - a.mul(&b).frobenius_norm().powi(2)) / c as f64;
        assert!((lhs - rhs).abs() < 1e-10 * rhs.abs().max(1.0));
        // And the enumeration oracle agrees at the optimum too.
        let en = enumerate_sketches(&a, &b, c, &p);
        assert!((en.e_frob_sq - lhs).abs() < 1e-10 * lhs.abs().max(1.0));
    }

    #[test]
    fn single_term_error_is_zero() {
        let mut rng = SeededRng::new(6, 0);
        let a = real_matrix(2, 1, &mut rng);
        let b = real_matrix(1, 3, &mut rng);
        let e = expected_frobenius_error(&a, &b, 5, &[1.0]);
        assert!(e.abs() < 1e-12);
    }

    #[test]
    fn optimal_beats_random_distributions() {
        let mut rng = SeededRng::new(7, 0);
        let a = real_matrix(4, 4, &mut rng);
        let b = real_matrix(4, 4, &mut rng);
        let p_opt = optimal_probabilities(&a, &b).unwrap();
        let best = expected_frobenius_error(&a, &b, 3, &p_opt);
        for _ in 0..50 {
            let raw: Vec<f64> = (0..4).map(|_| rng.uniform() + 1e-3).collect();
            let total: f64 = raw.iter().sum();
            let p: Vec<f64> = raw.into_iter().map(|w| w / total).collect();
            let e = expected_frobenius_error(&a, &b, 3, &p);
            assert!(best <= e + 1e-12, "optimal {best} beaten by {e}");
        }
    }

    #[test]
    fn sample_count_examples() {
        assert_eq!(sample_count_for(1.0, 1.0, 1.0).unwrap(), 1);
        assert_eq!(sample_count_for(0.1, 1.0, 0.5).unwrap(), 400);
        assert_eq!(sample_count_for(0.1, 0.5, 0.1).unwrap(), 5000);
        assert!(sample_count_for(0.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn rejects_zero_probability_on_nonzero_term() {
        let i2 = CMatrix::identity(2);
        let mut rng = SeededRng::new(8, 0);
        assert!(matches!(
            sketch_multiply(&i2, &i2, 2, &[1.0, 0.0], &mut rng),
            Err(RandmmError::InvalidDistribution(_))
        ));
    }
}
