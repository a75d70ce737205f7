//! Deterministic reductions.
//!
//! All integrals and norms in the crate go through the pairwise scheme so
//! reports are bitwise reproducible across worker counts: the summation tree
//! depends only on the slice length, never on thread scheduling.

use num_complex::Complex64;

/// Pairwise sum with a fixed recursion tree.
pub fn pairwise_sum_c(v: &[Complex64]) -> Complex64 {
    if v.len() <= 8 {
        let mut acc = Complex64::new(0.0, 0.0);
        for x in v {
            acc += x;
        }
        return acc;
    }
    let mid = v.len() / 2;
    pairwise_sum_c(&v[..mid]) + pairwise_sum_c(&v[mid..])
}

/// Pairwise sum of reals with a fixed recursion tree.
pub fn pairwise_sum_f(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        let mut acc = 0.0;
        for x in v {
            acc += x;
        }
        return acc;
    }
    let mid = v.len() / 2;
    pairwise_sum_f(&v[..mid]) + pairwise_sum_f(&v[mid..])
}

/// Pairwise sum of `f(i)` over `0..n` without materializing the vector
/// would break determinism guarantees if `f` were impure; we materialize.
pub fn pairwise_map_sum_c<F: Fn(usize) -> Complex64>(n: usize, f: F) -> Complex64 {
    let v: Vec<Complex64> = (0..n).map(f).collect();
    pairwise_sum_c(&v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_naive_on_smooth_data() {
        let v: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.1).sin()).collect();
        let naive: f64 = v.iter().sum();
        assert!((pairwise_sum_f(&v) - naive).abs() < 1e-10);
    }
}
