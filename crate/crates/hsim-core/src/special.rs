//! Log-space factorial and series-coefficient helpers.
//!
//! Truncation orders can reach a few hundred, where `t^k` and `k!` overflow
//! `f64` separately even though their ratio is tame. Every coefficient here
//! is therefore assembled as `exp(k·ln t − lnΓ(k+1))` with the complex phase
//! tracked separately.

use std::sync::OnceLock;

use crate::Complex;

const TABLE_LEN: usize = 4096;

fn ln_factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(TABLE_LEN);
        t.push(0.0);
        let mut acc = 0.0f64;
        for n in 1..TABLE_LEN {
            acc += (n as f64).ln();
            t.push(acc);
        }
        t
    })
}

/// `ln(n!)`.
pub(crate) fn ln_factorial(n: usize) -> f64 {
    let table = ln_factorial_table();
    assert!(n < table.len(), "factorial table exhausted (n = {n})");
    table[n]
}

/// `x^m / m!` evaluated in log space; `x ≥ 0`.
pub(crate) fn pow_over_factorial(x: f64, m: usize) -> f64 {
    debug_assert!(x >= 0.0);
    if m == 0 {
        return 1.0;
    }
    if x == 0.0 {
        return 0.0;
    }
    (m as f64 * x.ln() - ln_factorial(m)).exp()
}

/// `(i·t)^m / m!` for real `t ≥ 0`.
pub(crate) fn it_pow_over_factorial(t: f64, m: usize) -> Complex {
    const PHASES: [Complex; 4] = [
        Complex::new(1.0, 0.0),
        Complex::new(0.0, 1.0),
        Complex::new(-1.0, 0.0),
        Complex::new(0.0, -1.0),
    ];
    PHASES[m % 4] * pow_over_factorial(t, m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_factorials() {
        assert_eq!(ln_factorial(0), 0.0);
        assert!((ln_factorial(5) - 120.0f64.ln()).abs() < 1e-12);
        assert!((pow_over_factorial(2.0, 3) - 8.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn huge_ratio_stays_finite() {
        // 500^300/300! overflows separately but the ratio is finite.
        let v = pow_over_factorial(500.0, 300);
        assert!(v.is_finite() && v > 0.0);
    }

    #[test]
    fn it_phase_cycles() {
        let t = 0.7;
        assert!((it_pow_over_factorial(t, 1) - Complex::new(0.0, 0.7)).norm() < 1e-15);
        let m2 = it_pow_over_factorial(t, 2);
        assert!((m2 - Complex::new(-0.245, 0.0)).norm() < 1e-12);
    }
}
