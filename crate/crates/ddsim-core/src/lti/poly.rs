//! Real polynomial arithmetic on coefficient slices in descending powers of
//! `s`, plus root finding via the companion matrix.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Complex, DMatrix};
use num_traits::Float;

pub type Complex64 = Complex<f64>;

/// Drops leading (highest-power) zero coefficients; keeps at least one entry.
pub fn trim(coeffs: &[f64]) -> Vec<f64> {
    let first = coeffs
        .iter()
        .position(|&c| c != 0.0)
        .unwrap_or(coeffs.len() - 1);
    coeffs[first.min(coeffs.len() - 1)..].to_vec()
}

/// Polynomial degree after trimming.
pub fn degree(coeffs: &[f64]) -> usize {
    trim(coeffs).len() - 1
}

/// Horner evaluation at a complex point.
pub fn eval(coeffs: &[f64], s: Complex64) -> Complex64 {
    coeffs
        .iter()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
}

pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Sum of two polynomials (aligned at the constant term).
pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    let mut out = vec![0.0; n];
    for (i, &ai) in a.iter().rev().enumerate() {
        out[n - 1 - i] += ai;
    }
    for (i, &bi) in b.iter().rev().enumerate() {
        out[n - 1 - i] += bi;
    }
    out
}

pub fn scale(a: &[f64], k: f64) -> Vec<f64> {
    a.iter().map(|&c| k * c).collect()
}

/// Roots of the polynomial as eigenvalues of its companion matrix.
/// Returns an empty vector for constants.
///
/// Roots at the origin are peeled off exactly, and the variable is rescaled
/// by the geometric-mean root magnitude before forming the companion matrix.
/// Composed filters here have roots spread over many decades (grid dynamics
/// near 1e-1 rad/s, pool bands near 1e-5), and the raw companion matrix of
/// such polynomials returns eigenvalues with sign-of-real-part errors.
pub fn roots(coeffs: &[f64]) -> Vec<Complex64> {
    let c = trim(coeffs);
    if c.len() == 1 {
        return Vec::new();
    }
    let origin = c.iter().rev().take_while(|&&v| v == 0.0).count();
    let mut out = vec![Complex64::new(0.0, 0.0); origin];
    let c = &c[..c.len() - origin];
    let n = c.len() - 1;
    if n == 0 {
        return out;
    }
    let rho = Float::powf(Float::abs(c[n] / c[0]), 1.0 / n as f64);
    let rho = if rho.is_finite() && rho > 0.0 { rho } else { 1.0 };
    // p(rho * z) has coefficients c[k] * rho^(n-k); normalize by the lead.
    let mut scaled = Vec::with_capacity(n + 1);
    let mut pw = 1.0;
    for k in (0..=n).rev() {
        scaled.push(c[k] * pw);
        pw *= rho;
    }
    scaled.reverse();
    let lead = scaled[0];
    let mut comp = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        comp[(i, i - 1)] = 1.0;
    }
    for j in 0..n {
        comp[(0, j)] = -scaled[j + 1] / lead;
    }
    out.extend(comp.complex_eigenvalues().iter().map(|z| z * rho));
    out
}

/// Rebuilds a real-coefficient polynomial `gain * prod (s - r_i)` from roots
/// that come in (approximate) conjugate pairs. Imaginary residue from
/// numerical pairing is discarded.
pub fn from_roots(roots: &[Complex64], gain: f64) -> Vec<f64> {
    let mut acc = vec![Complex64::new(gain, 0.0)];
    for &r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); acc.len() + 1];
        for (i, &a) in acc.iter().enumerate() {
            next[i] += a;
            next[i + 1] -= a * r;
        }
        acc = next;
    }
    acc.iter().map(|c| c.re).collect()
}

/// Reflects any right-half-plane root across the imaginary axis
/// (`a + bj -> -a + bj`), preserving the magnitude of the polynomial on the
/// axis. Roots sitting numerically on the axis are nudged strictly left.
pub fn reflect_to_left_half_plane(roots: &mut [Complex64]) -> bool {
    let mut changed = false;
    for r in roots.iter_mut() {
        let margin = 1e-9 * (1.0 + r.norm());
        if r.re > -margin {
            r.re = -r.re.abs().max(margin);
            changed = true;
        }
    }
    changed
}

/// True when every root has a strictly negative real part.
pub fn all_left_half_plane(roots: &[Complex64]) -> bool {
    roots.iter().all(|r| r.re < 0.0)
}
