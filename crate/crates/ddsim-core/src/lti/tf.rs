//! Rational transfer functions in the Laplace variable `s`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lti::poly::{self, Complex64};

/// A real rational transfer function `num(s) / den(s)`, coefficients in
/// descending powers of `s`; any overall gain is carried by the coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunction {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

/// Interconnection kinds for [`TransferFunction::connect`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connection {
    /// `a * b`
    Series,
    /// `a + b`
    Parallel,
    /// `a / (1 + a*b)` — `b` in the (negative) feedback path.
    Feedback,
}

impl TransferFunction {
    /// Builds a transfer function; leading zeros are trimmed and the
    /// denominator must not vanish identically.
    pub fn new(num: &[f64], den: &[f64]) -> Result<Self> {
        let num = poly::trim(num);
        let den = poly::trim(den);
        if den.iter().all(|&c| c == 0.0) {
            return Err(Error::ZeroDenominator);
        }
        Ok(Self { num, den })
    }

    /// The unity system `1/1`.
    pub fn unity() -> Self {
        Self {
            num: vec![1.0],
            den: vec![1.0],
        }
    }

    /// A static gain `k`.
    pub fn constant(k: f64) -> Self {
        Self {
            num: vec![k],
            den: vec![1.0],
        }
    }

    pub fn num_degree(&self) -> usize {
        poly::degree(&self.num)
    }

    pub fn den_degree(&self) -> usize {
        poly::degree(&self.den)
    }

    /// Proper means simulatable in time domain: deg(num) <= deg(den).
    pub fn is_proper(&self) -> bool {
        self.num_degree() <= self.den_degree() || self.num.iter().all(|&c| c == 0.0)
    }

    /// Evaluates `num(s)/den(s)`. Errors when the point is (numerically) a
    /// pole, naming the offending frequency.
    pub fn eval(&self, s: Complex64) -> Result<Complex64> {
        let d = poly::eval(&self.den, s);
        let n = poly::eval(&self.num, s);
        let q = n / d;
        if d.norm() == 0.0 || !q.re.is_finite() || !q.im.is_finite() {
            return Err(Error::PoleOnGrid { re: s.re, im: s.im });
        }
        Ok(q)
    }

    /// Frequency response at `omega` rad/s, i.e. the value at `s = j omega`.
    pub fn freq(&self, omega: f64) -> Result<Complex64> {
        self.eval(Complex64::new(0.0, omega))
    }

    /// Response on a frequency grid.
    pub fn freq_response(&self, omega: &[f64]) -> Result<Vec<Complex64>> {
        omega.iter().map(|&w| self.freq(w)).collect()
    }

    /// DC gain `num(0)/den(0)`.
    pub fn dc_gain(&self) -> Result<f64> {
        Ok(self.eval(Complex64::new(0.0, 0.0))?.re)
    }

    /// Multiplies the transfer function by a static gain.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            num: poly::scale(&self.num, k),
            den: self.den.clone(),
        }
    }

    /// Series interconnection `self * other`.
    pub fn series(&self, other: &Self) -> Self {
        Self {
            num: poly::trim(&poly::mul(&self.num, &other.num)),
            den: poly::trim(&poly::mul(&self.den, &other.den)),
        }
    }

    /// Parallel interconnection `self + other`.
    pub fn parallel(&self, other: &Self) -> Self {
        let num = poly::add(
            &poly::mul(&self.num, &other.den),
            &poly::mul(&other.num, &self.den),
        );
        Self {
            num: poly::trim(&num),
            den: poly::trim(&poly::mul(&self.den, &other.den)),
        }
    }

    /// Closed loop `self / (1 + self * other)` with `other` in the feedback
    /// path. Common factors between the branches are not cancelled here; use
    /// [`TransferFunction::cancelled`] when a minimal form is wanted.
    pub fn feedback(&self, other: &Self) -> Self {
        let num = poly::mul(&self.num, &other.den);
        let den = poly::add(
            &poly::mul(&self.den, &other.den),
            &poly::mul(&self.num, &other.num),
        );
        Self {
            num: poly::trim(&num),
            den: poly::trim(&den),
        }
    }

    /// Dispatch over [`Connection`].
    pub fn connect(kind: Connection, a: &Self, b: &Self) -> Self {
        match kind {
            Connection::Series => a.series(b),
            Connection::Parallel => a.parallel(b),
            Connection::Feedback => a.feedback(b),
        }
    }

    /// Poles (roots of the denominator).
    pub fn poles(&self) -> Vec<Complex64> {
        poly::roots(&self.den)
    }

    /// Zeros (roots of the numerator).
    pub fn zeros(&self) -> Vec<Complex64> {
        poly::roots(&self.num)
    }

    /// True when every pole is strictly in the open left half-plane.
    pub fn is_stable(&self) -> bool {
        poly::all_left_half_plane(&self.poles())
    }

    /// Minimal-realization pass: cancels pole/zero pairs closer than
    /// `tol * (1 + |root|)` and rebuilds real coefficients from the survivors.
    pub fn cancelled(&self, tol: f64) -> Self {
        let zeros = self.zeros();
        let mut poles = self.poles();
        let lead_n = self.num[0];
        let lead_d = self.den[0];
        let mut kept_zeros = Vec::with_capacity(zeros.len());
        for z in zeros {
            match poles
                .iter()
                .position(|p| (p - z).norm() <= tol * (1.0 + z.norm()))
            {
                Some(i) => {
                    poles.swap_remove(i);
                }
                None => kept_zeros.push(z),
            }
        }
        Self {
            num: poly::from_roots(&kept_zeros, lead_n),
            den: poly::from_roots(&poles, lead_d),
        }
    }

    /// Reciprocal `den/num`; errors if the numerator vanishes identically.
    pub fn inverted(&self) -> Result<Self> {
        Self::new(&self.den, &self.num)
    }
}
