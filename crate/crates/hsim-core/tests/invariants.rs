//! Property tests for the structural invariants: Hermiticity through
//! constructors and file round-trips, tree sum consistency under update
//! storms, SELECT edge behavior, and the norm-chain inequalities.

use proptest::prelude::*;

use hsim_core::dense::CMatrix;
use hsim_core::io::{matrix_from_json, matrix_to_json, state_from_json, state_to_json};
use hsim_core::matrix::{norms, HermitianMatrix, StateVector};
use hsim_core::sampling::{select_stream, SampleQueryTree, SeededRng};
use hsim_core::Complex;

fn finite_f64() -> impl Strategy<Value = f64> {
    (-1e3f64..1e3).prop_map(|x| if x == 0.0 { 0.0 } else { x })
}

fn complex_strategy() -> impl Strategy<Value = Complex> {
    (finite_f64(), finite_f64()).prop_map(|(re, im)| Complex::new(re, im))
}

fn hermitian_strategy(max_dim: usize) -> impl Strategy<Value = HermitianMatrix> {
    (1..=max_dim)
        .prop_flat_map(|n| {
            let uppers = proptest::collection::vec(complex_strategy(), n * (n + 1) / 2);
            (Just(n), uppers)
        })
        .prop_map(|(n, uppers)| {
            let mut g = CMatrix::zeros(n, n);
            let mut it = uppers.into_iter();
            for r in 0..n {
                for c in r..n {
                    let z = it.next().unwrap();
                    if r == c {
                        g[(r, r)] = Complex::new(z.re, 0.0);
                    } else {
                        g[(r, c)] = z;
                        g[(c, r)] = z.conj();
                    }
                }
            }
            HermitianMatrix::from_dense(g).unwrap()
        })
}

proptest! {
    #[test]
    fn dense_json_round_trip_exact(h in hermitian_strategy(8)) {
        let text = matrix_to_json(&h);
        let back = matrix_from_json(&text).unwrap();
        prop_assert_eq!(&h, &back);
        // Hermiticity after the round trip, entry by entry.
        for r in 0..h.dim() {
            for c in 0..h.dim() {
                prop_assert_eq!(back.get(r, c), back.get(c, r).conj());
            }
        }
    }

    #[test]
    fn state_json_round_trip_exact(amps in proptest::collection::vec(complex_strategy(), 1..24)) {
        let psi = StateVector::new(amps);
        let back = state_from_json(&state_to_json(&psi)).unwrap();
        prop_assert_eq!(psi, back);
    }

    #[test]
    fn tree_sums_survive_update_storms(
        initial in proptest::collection::vec(complex_strategy(), 1..64),
        updates in proptest::collection::vec((0usize..64, complex_strategy()), 0..200),
    ) {
        let mut tree = SampleQueryTree::build(&initial);
        for (idx, value) in updates {
            tree.update(idx % initial.len(), value);
        }
        prop_assert!(tree.validate_sums(0.0));
    }

    #[test]
    fn select_returns_positive_weight_index(weights in proptest::collection::vec(0.0f64..10.0, 1..40), seed in any::<u64>()) {
        let mut rng = SeededRng::new(seed, 0);
        match select_stream(weights.iter().copied(), &mut rng) {
            Ok((i, w)) => {
                prop_assert!(weights[i] > 0.0);
                prop_assert_eq!(w, weights[i]);
            }
            Err(_) => prop_assert!(weights.iter().all(|&w| w == 0.0)),
        }
    }

    #[test]
    fn norm_chain_inequalities(h in hermitian_strategy(10)) {
        let nb = norms(&h).unwrap();
        let n = h.dim() as f64;
        let s = h.row_sparsity().max(1) as f64;
        let slack = 1e-12 * nb.frobenius.max(1.0);
        prop_assert!(nb.spectral <= nb.frobenius + slack);
        prop_assert!(nb.frobenius <= n.sqrt() * nb.spectral + slack);
        prop_assert!(nb.induced1 <= s.sqrt() * nb.spectral + slack);
    }
}
