//! State-space realizations of SISO transfer functions.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lti::poly::Complex64;
use crate::lti::TransferFunction;

/// A real state-space system `x' = Ax + Bu, y = Cx + Du`. Built as SISO from
/// transfer functions here, but the fields are general matrices: the
/// mean-field linearization reuses the same type with `d = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
}

impl StateSpace {
    /// Builds a state-space system, checking dimensional consistency.
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch {
                context: "state matrix A (square)",
                expected: n,
                got: a.ncols(),
            });
        }
        if b.nrows() != n {
            return Err(Error::DimensionMismatch {
                context: "input matrix B rows",
                expected: n,
                got: b.nrows(),
            });
        }
        if c.ncols() != n {
            return Err(Error::DimensionMismatch {
                context: "output matrix C columns",
                expected: n,
                got: c.ncols(),
            });
        }
        if d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(Error::DimensionMismatch {
                context: "feedthrough matrix D",
                expected: c.nrows() * b.ncols(),
                got: d.nrows() * d.ncols(),
            });
        }
        Ok(Self { a, b, c, d })
    }

    /// Controllable canonical realization of a proper transfer function.
    /// Degree-zero systems come out with an empty state (pure feedthrough).
    pub fn from_tf(tf: &TransferFunction) -> Result<Self> {
        if !tf.is_proper() {
            return Err(Error::Improper {
                num_deg: tf.num_degree(),
                den_deg: tf.den_degree(),
            });
        }
        let n = tf.den_degree();
        // Normalize the denominator to monic and pad the numerator to the
        // same length, so den = s^n + a_{n-1} s^{n-1} + ... + a_0 and
        // num = b_n s^n + ... + b_0.
        let lead = tf.den[0];
        let a_desc: Vec<f64> = tf.den.iter().map(|&c| c / lead).collect();
        let mut b_desc = vec![0.0; n + 1];
        let offset = n + 1 - tf.num.len();
        for (i, &c) in tf.num.iter().enumerate() {
            b_desc[offset + i] = c / lead;
        }
        let d_gain = b_desc[0];

        let mut a = DMatrix::<f64>::zeros(n, n);
        let mut b = DMatrix::<f64>::zeros(n, 1);
        let mut c = DMatrix::<f64>::zeros(1, n);
        if n > 0 {
            for i in 0..n - 1 {
                a[(i, i + 1)] = 1.0;
            }
            for k in 0..n {
                // Ascending power k corresponds to descending index n - k.
                let a_k = a_desc[n - k];
                a[(n - 1, k)] = -a_k;
                c[(0, k)] = b_desc[n - k] - d_gain * a_k;
            }
            b[(n - 1, 0)] = 1.0;
        }
        let d = DMatrix::from_element(1, 1, d_gain);
        Self::new(a, b, c, d)
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    /// Frequency response `C (s I - A)^{-1} B + D` at `s = j omega` via a
    /// complex LU solve (SISO: returns the scalar entry).
    pub fn freq(&self, omega: f64) -> Result<Complex64> {
        let n = self.order();
        if n == 0 {
            return Ok(Complex64::new(self.d[(0, 0)], 0.0));
        }
        let mut m = DMatrix::<Complex<f64>>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = Complex::new(-self.a[(i, j)], 0.0);
            }
            m[(i, i)] += Complex::new(0.0, omega);
        }
        let rhs = DVector::<Complex<f64>>::from_iterator(n, (0..n).map(|i| Complex::new(self.b[(i, 0)], 0.0)));
        let x = m
            .lu()
            .solve(&rhs)
            .ok_or(Error::PoleOnGrid { re: 0.0, im: omega })?;
        let mut y = Complex64::new(self.d[(0, 0)], 0.0);
        for i in 0..n {
            y += Complex::new(self.c[(0, i)], 0.0) * x[i];
        }
        Ok(y)
    }

    /// DC gain `C (-A)^{-1} B + D`.
    pub fn dc_gain(&self) -> Result<f64> {
        Ok(self.freq(0.0)?.re)
    }
}

/// Free-function form of [`StateSpace::from_tf`].
pub fn to_state_space(tf: &TransferFunction) -> Result<StateSpace> {
    StateSpace::from_tf(tf)
}
