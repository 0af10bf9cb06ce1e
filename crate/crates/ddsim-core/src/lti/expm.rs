//! Dense matrix exponential via Padé approximation with scaling and squaring.
//!
//! Only small matrices pass through here (ZOH discretization blocks, a dozen
//! states at most), so the classic diagonal Padé(6) with scaling to
//! `||A/2^s||_inf <= 1/2` is accurate to roundoff and plenty fast.

use nalgebra::DMatrix;
use num_traits::Float;

/// Computes `exp(A)` for a square matrix.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm requires a square matrix");
    if n == 0 {
        return a.clone();
    }

    // Infinity norm (max absolute row sum) decides the scaling power.
    let norm = (0..n)
        .map(|i| (0..n).map(|j| a[(i, j)].abs()).sum::<f64>())
        .fold(0.0_f64, f64::max);
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a / 2.0_f64.powi(s as i32);

    // Diagonal Padé(6): N(A) = sum c_k A^k, D(A) = sum (-1)^k c_k A^k.
    const Q: usize = 6;
    let mut c = 1.0_f64;
    let eye = DMatrix::<f64>::identity(n, n);
    let mut term = eye.clone();
    let mut num = eye.clone();
    let mut den = eye;
    for k in 1..=Q {
        c *= (Q - k + 1) as f64 / ((2 * Q - k + 1) as f64 * k as f64);
        term = &term * &scaled;
        num += &term * c;
        if k % 2 == 0 {
            den += &term * c;
        } else {
            den -= &term * c;
        }
    }
    let mut e = den
        .lu()
        .solve(&num)
        .expect("Padé denominator is nonsingular for ||A|| <= 1/2");

    for _ in 0..s {
        e = &e * &e;
    }
    e
}
