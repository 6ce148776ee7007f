//! Truncated complex power series.
//!
//! A [`Series`] holds the first `len` Taylor coefficients of a function of
//! the local time offset `τ = t - t₀`, constant term first. Arithmetic
//! truncates to the shorter operand, so evaluating a vector field on series
//! of length `k + 1` yields the first `k + 1` coefficients of its
//! composition with the solution. That is the whole trick behind
//! [`taylor_expand`](crate::engine::taylor_expand).

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::SeriesError;

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    coeffs: Vec<Complex64>,
}

impl Series {
    pub fn from_coeffs(coeffs: Vec<Complex64>) -> Self {
        assert!(
            !coeffs.is_empty(),
            "a series needs at least a constant term"
        );
        Series { coeffs }
    }

    /// The constant `c` truncated to `len` terms.
    pub fn constant(c: Complex64, len: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); len.max(1)];
        coeffs[0] = c;
        Series { coeffs }
    }

    /// The independent variable `t = t₀ + τ` expanded at `t₀`.
    pub fn variable(t0: Complex64, len: usize) -> Self {
        let mut s = Series::constant(t0, len);
        if len > 1 {
            s.coeffs[1] = Complex64::new(1.0, 0.0);
        }
        s
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs[k]
    }

    pub fn value(&self) -> Complex64 {
        self.coeffs[0]
    }

    pub(crate) fn push(&mut self, c: Complex64) {
        self.coeffs.push(c);
    }

    pub fn scale(&self, a: Complex64) -> Series {
        Series {
            coeffs: self.coeffs.iter().map(|c| c * a).collect(),
        }
    }

    pub fn scale_re(&self, a: f64) -> Series {
        Series {
            coeffs: self.coeffs.iter().map(|c| c * a).collect(),
        }
    }

    /// Horner evaluation at offset `tau` from the expansion point.
    pub fn eval(&self, tau: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * tau + c)
    }

    /// Quotient `self / rhs`. The divisor must have a nonzero constant term.
    pub fn try_div(&self, rhs: &Series) -> Result<Series, SeriesError> {
        let b0 = rhs.coeffs[0];
        if b0 == Complex64::new(0.0, 0.0) || !b0.is_finite() {
            return Err(SeriesError::SingularDivision);
        }
        let n = self.len().min(rhs.len());
        let mut q: Vec<Complex64> = Vec::with_capacity(n);
        for k in 0..n {
            let mut acc = self.coeffs[k];
            for j in 1..=k {
                acc -= rhs.coeffs[j] * q[k - j];
            }
            q.push(acc / b0);
        }
        Ok(Series { coeffs: q })
    }

    pub fn try_recip(&self) -> Result<Series, SeriesError> {
        Series::constant(Complex64::new(1.0, 0.0), self.len()).try_div(self)
    }

    /// Principal-branch square root; the constant term must be nonzero.
    pub fn try_sqrt(&self) -> Result<Series, SeriesError> {
        let a0 = self.coeffs[0];
        if a0 == Complex64::new(0.0, 0.0) {
            return Err(SeriesError::SingularSqrt);
        }
        let n = self.len();
        let s0 = a0.sqrt();
        let mut s: Vec<Complex64> = Vec::with_capacity(n);
        s.push(s0);
        for k in 1..n {
            let mut acc = self.coeffs[k];
            for j in 1..k {
                acc -= s[j] * s[k - j];
            }
            s.push(acc / (2.0 * s0));
        }
        Ok(Series { coeffs: s })
    }

    pub fn exp(&self) -> Series {
        let n = self.len();
        let mut e: Vec<Complex64> = Vec::with_capacity(n);
        e.push(self.coeffs[0].exp());
        // e' = a' e  =>  k e_k = sum_{j=1}^{k} j a_j e_{k-j}
        for k in 1..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 1..=k {
                acc += self.coeffs[j] * e[k - j] * j as f64;
            }
            e.push(acc / k as f64);
        }
        Series { coeffs: e }
    }

    pub fn cosh(&self) -> Series {
        let ep = self.exp();
        let em = (-self).exp();
        (&ep + &em).scale_re(0.5)
    }
}

impl Add for &Series {
    type Output = Series;

    fn add(self, rhs: &Series) -> Series {
        let n = self.len().min(rhs.len());
        Series {
            coeffs: (0..n).map(|k| self.coeffs[k] + rhs.coeffs[k]).collect(),
        }
    }
}

impl Sub for &Series {
    type Output = Series;

    fn sub(self, rhs: &Series) -> Series {
        let n = self.len().min(rhs.len());
        Series {
            coeffs: (0..n).map(|k| self.coeffs[k] - rhs.coeffs[k]).collect(),
        }
    }
}

impl Mul for &Series {
    type Output = Series;

    fn mul(self, rhs: &Series) -> Series {
        let n = self.len().min(rhs.len());
        let coeffs = (0..n)
            .map(|k| {
                (0..=k).fold(Complex64::new(0.0, 0.0), |acc, j| {
                    acc + self.coeffs[j] * rhs.coeffs[k - j]
                })
            })
            .collect();
        Series { coeffs }
    }
}

impl Neg for &Series {
    type Output = Series;

    fn neg(self) -> Series {
        Series {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}
