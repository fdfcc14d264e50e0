use serde::{Deserialize, Serialize};

use super::{ComplexMatrix, LinalgError, C64};

/// Polynomial with complex coefficients in ascending degree order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    coeffs: Vec<C64>,
}

impl Polynomial {
    /// Builds a polynomial from ascending coefficients, trimming exact zero
    /// leading terms. A zero polynomial is rejected.
    pub fn new(mut coeffs: Vec<C64>) -> Result<Self, LinalgError> {
        if coeffs.iter().any(|z| !z.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        while coeffs.last().is_some_and(|z| *z == C64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            return Err(LinalgError::ZeroPolynomial);
        }
        Ok(Self { coeffs })
    }

    pub fn from_real(coeffs: &[f64]) -> Result<Self, LinalgError> {
        Self::new(coeffs.iter().map(|&c| C64::new(c, 0.0)).collect())
    }

    /// `lead * prod (x - r)` expanded.
    pub fn from_roots(roots: &[C64], lead: C64) -> Self {
        let mut coeffs = vec![lead];
        for &r in roots {
            let mut next = vec![C64::new(0.0, 0.0); coeffs.len() + 1];
            for (k, &c) in coeffs.iter().enumerate() {
                next[k + 1] += c;
                next[k] -= r * c;
            }
            coeffs = next;
        }
        Self { coeffs }
    }

    /// Coefficients of `(gamma - x)^n`.
    pub fn shifted_power(gamma: C64, n: usize) -> Self {
        let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
        Self::from_roots(&vec![gamma; n], C64::new(sign, 0.0))
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> C64 {
        *self.coeffs.last().unwrap()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn eval(&self, x: C64) -> C64 {
        self.coeffs
            .iter()
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, &c| acc * x + c)
    }

    /// Value together with a running bound on the rounding error of Horner's
    /// rule, `sum |c_k| |x|^k`.
    pub(crate) fn eval_with_magnitude(&self, x: C64) -> (C64, f64) {
        let r = x.norm();
        let mut value = C64::new(0.0, 0.0);
        let mut mag = 0.0;
        for &c in self.coeffs.iter().rev() {
            value = value * x + c;
            mag = mag * r + c.norm();
        }
        (value, mag)
    }

    pub fn derivative(&self) -> Option<Self> {
        if self.degree() == 0 {
            return None;
        }
        let coeffs: Vec<C64> = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| c * k as f64)
            .collect();
        Self::new(coeffs).ok()
    }
}

/// Coefficients of `det(m - x I)` in ascending degree, via the
/// Faddeev–LeVerrier recursion. The leading coefficient is exactly `(-1)^n`.
pub fn char_poly(m: &ComplexMatrix) -> Result<Polynomial, LinalgError> {
    if !m.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let n = m.dim();
    // c[k] is the coefficient of x^k in det(x I - m).
    let mut c = vec![C64::new(0.0, 0.0); n + 1];
    c[n] = C64::new(1.0, 0.0);
    let mut aux = ComplexMatrix::zeros(n);
    for k in 1..=n {
        // aux_k = m * aux_{k-1} + c[n-k+1] I
        let mut next = m.matmul(&aux)?;
        for i in 0..n {
            next[(i, i)] += c[n - k + 1];
        }
        let am = m.matmul(&next)?;
        c[n - k] = -am.trace() / k as f64;
        aux = next;
    }
    if n % 2 == 1 {
        for z in &mut c {
            *z = -*z;
        }
    }
    Ok(Polynomial { coeffs: c })
}
