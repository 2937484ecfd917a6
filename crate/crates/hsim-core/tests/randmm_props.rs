//! Statistical properties of the sketch estimator across many instances:
//! entrywise unbiasedness over large trial counts and exact-expectation
//! equivalence against the tuple-enumeration oracle up to n = 4, c = 3.

use hsim_core::dense::CMatrix;
use hsim_core::randmm::{expected_frobenius_error, optimal_probabilities, sketch_multiply};
use hsim_core::sampling::SeededRng;
use hsim_core::Complex;

fn real_matrix(rows: usize, cols: usize, rng: &mut SeededRng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        Complex::new(rng.uniform() * 2.0 - 1.0, 0.0)
    })
}

#[test]
fn sketch_mean_unbiased_over_ten_pairs() {
    let trials = 100_000usize;
    for pair in 0..10 {
        let mut rng = SeededRng::new(4000 + pair, 0);
        let n = 2 + (pair as usize % 3);
        let a = real_matrix(2, n, &mut rng);
        let b = real_matrix(n, 2, &mut rng);
        let ab = a.mul(&b);
        let p = optimal_probabilities(&a, &b).unwrap();
        let mut sums = [Complex::ZERO; 4];
        let mut sq_dev = [0.0f64; 4];
        for _ in 0..trials {
            let cr = sketch_multiply(&a, &b, 1, &p, &mut rng).unwrap().product();
            for r in 0..2 {
                for c in 0..2 {
                    let z = cr[(r, c)];
                    sums[r * 2 + c] += z;
                    sq_dev[r * 2 + c] += (z - ab[(r, c)]).norm_sqr();
                }
            }
        }
        for idx in 0..4 {
            let mean = sums[idx] / trials as f64;
            let se = (sq_dev[idx] / trials as f64 / trials as f64).sqrt();
            let dev = (mean - ab[(idx / 2, idx % 2)]).norm();
            assert!(
                dev <= 4.0 * se.max(1e-12),
                "pair {pair}, entry {idx}: deviation {dev:.3e} vs 4·SE {:.3e}",
                4.0 * se
            );
        }
    }
}

/// All `n^c` index tuples, their probabilities, and the resulting exact
/// first and second moments. Never draws randomness.
fn enumerate_moments(a: &CMatrix, b: &CMatrix, c: usize, p: &[f64]) -> (CMatrix, Vec<f64>, f64) {
    let n = a.cols();
    let ab = a.mul(b);
    let (m, q) = (a.rows(), b.cols());
    let mut mean = CMatrix::zeros(m, q);
    let mut second = vec![0.0f64; m * q];
    let mut e_frob_sq = 0.0;
    let mut tuple = vec![0usize; c];
    'outer: loop {
        let prob: f64 = tuple.iter().map(|&i| p[i]).product();
        if prob > 0.0 {
            let mut cr = CMatrix::zeros(m, q);
            for &i in &tuple {
                for r in 0..m {
                    for s in 0..q {
                        cr[(r, s)] += a[(r, i)] * b[(i, s)] / Complex::new(c as f64 * p[i], 0.0);
                    }
                }
            }
            for r in 0..m {
                for s in 0..q {
                    mean[(r, s)] += cr[(r, s)] * Complex::new(prob, 0.0);
                    second[r * q + s] += prob * cr[(r, s)].re * cr[(r, s)].re;
                }
            }
            e_frob_sq += prob * ab.sub(&cr).frobenius_norm().powi(2);
        }
        let mut pos = 0;
        loop {
            if pos == c {
                break 'outer;
            }
            tuple[pos] += 1;
            if tuple[pos] < n {
                break;
            }
            tuple[pos] = 0;
            pos += 1;
        }
    }
    let var = (0..m * q)
        .map(|i| second[i] - mean[(i / q, i % q)].re.powi(2))
        .collect();
    (mean, var, e_frob_sq)
}

#[test]
fn enumeration_matches_formulas_up_to_n4_c3() {
    let mut rng = SeededRng::new(4100, 0);
    for n in 2..=4usize {
        for c in 1..=3usize {
            let a = real_matrix(n, n, &mut rng);
            let b = real_matrix(n, n, &mut rng);
            let ab = a.mul(&b);
            for p in [vec![1.0 / n as f64; n], optimal_probabilities(&a, &b).unwrap()] {
                let (mean, var, e_frob) = enumerate_moments(&a, &b, c, &p);
                for r in 0..n {
                    for s in 0..n {
                        assert!(
                            (mean[(r, s)] - ab[(r, s)]).norm() <= 1e-10,
                            "n={n}, c={c}: mean entry ({r},{s})"
                        );
                        let want: f64 = (0..n)
                            .map(|k| a[(r, k)].re.powi(2) * b[(k, s)].re.powi(2) / p[k])
                            .sum::<f64>()
                            / c as f64
                            - ab[(r, s)].re.powi(2) / c as f64;
                        assert!(
                            (var[r * n + s] - want).abs() <= 1e-10,
                            "n={n}, c={c}: variance entry ({r},{s})"
                        );
                    }
                }
                let formula = expected_frobenius_error(&a, &b, c, &p);
                assert!(
                    (e_frob - formula).abs() <= 1e-10,
                    "n={n}, c={c}: E‖AB−CR‖² {e_frob} vs {formula}"
                );
            }
        }
    }
}
