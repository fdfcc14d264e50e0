use serde::{Deserialize, Serialize};

use super::EpError;
use crate::capacitance::{dilute_unchecked, leading_unchecked};
use crate::linalg::{char_poly, ComplexMatrix, Polynomial, C64};
use crate::model::GainLossProfile;

/// Which matrix the coefficient matching is carried out on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// First-order matrix `C_1` of `C = I + epsilon C_1 + o(epsilon)`;
    /// unknowns are first-order coefficients and `a_{1,1} = 0`.
    Leading,
    /// Dilute matrix at a finite `epsilon`; `a_1 = 1`.
    Full,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Leading => "leading",
            Mode::Full => "full",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "leading" => Ok(Mode::Leading),
            "full" => Ok(Mode::Full),
            other => Err(format!("unknown mode `{other}` (expected `leading` or `full`)")),
        }
    }
}

/// Coefficient-matching problem for an exceptional point of order `N`.
///
/// The `N - 1` real unknowns are laid out as `b_1..b_n` followed by
/// `a_2..a_m`, where `n = N / 2` and `m = n` for even `N`, `m = n + 1` for odd
/// `N` (the centre resonator carries no gain/loss). The remaining parameters
/// follow from PT symmetry, and the common eigenvalue is the mean of the
/// `a_i` (trace identity).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpProblem {
    order: usize,
    mode: Mode,
    epsilon: f64,
}

impl EpProblem {
    pub fn leading(order: usize) -> Result<Self, EpError> {
        Self::new(order, Mode::Leading, 0.0)
    }

    pub fn full(order: usize, epsilon: f64) -> Result<Self, EpError> {
        Self::new(order, Mode::Full, epsilon)
    }

    pub fn new(order: usize, mode: Mode, epsilon: f64) -> Result<Self, EpError> {
        if order < 2 {
            return Err(EpError::InvalidOrder(order));
        }
        let epsilon = match mode {
            Mode::Leading => 0.0,
            Mode::Full => {
                if !(0.0..1.0).contains(&epsilon) {
                    return Err(EpError::InvalidEpsilon(epsilon));
                }
                epsilon
            }
        };
        Ok(Self { order, mode, epsilon })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn unknown_count(&self) -> usize {
        self.order - 1
    }

    /// Number of leading unknowns that are gain/loss amplitudes.
    pub fn gain_loss_count(&self) -> usize {
        self.order / 2
    }

    fn base_a(&self) -> f64 {
        match self.mode {
            Mode::Leading => 0.0,
            Mode::Full => 1.0,
        }
    }

    /// Full `(a, b)` arrays from the unknown vector.
    pub fn expand(&self, unknowns: &[f64]) -> Result<(Vec<f64>, Vec<f64>), EpError> {
        if unknowns.len() != self.unknown_count() {
            return Err(EpError::UnknownLength {
                expected: self.unknown_count(),
                found: unknowns.len(),
            });
        }
        if unknowns.iter().any(|x| !x.is_finite()) {
            return Err(EpError::NonFiniteUnknowns);
        }
        let big_n = self.order;
        let n = self.gain_loss_count();
        let mut a = vec![self.base_a(); big_n];
        let mut b = vec![0.0; big_n];
        for i in 0..n {
            b[i] = unknowns[i];
            b[big_n - 1 - i] = -unknowns[i];
        }
        for (k, &ak) in unknowns[n..].iter().enumerate() {
            let i = k + 1;
            a[i] = ak;
            a[big_n - 1 - i] = ak;
        }
        Ok((a, b))
    }

    /// Inverse of [`EpProblem::expand`]; reads the independent half only.
    pub fn compress(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let n = self.gain_loss_count();
        let m = self.order - n;
        let mut u = Vec::with_capacity(self.unknown_count());
        u.extend_from_slice(&b[..n]);
        u.extend_from_slice(&a[1..m]);
        u
    }

    pub fn gamma(&self, a: &[f64]) -> f64 {
        a.iter().sum::<f64>() / self.order as f64
    }

    pub fn matrix(&self, a: &[f64], b: &[f64]) -> Result<ComplexMatrix, EpError> {
        let m = match self.mode {
            Mode::Leading => {
                let diag: Vec<C64> = a.iter().zip(b).map(|(&x, &y)| C64::new(x, y)).collect();
                leading_unchecked(&diag)?
            }
            Mode::Full => {
                let p = GainLossProfile::unchecked(a.to_vec(), b.to_vec())?;
                dilute_unchecked(&p, self.epsilon)?
            }
        };
        Ok(m)
    }

    /// Matrix and trace-rule eigenvalue for an unknown vector.
    pub fn assemble(&self, unknowns: &[f64]) -> Result<(ComplexMatrix, f64), EpError> {
        let (a, b) = self.expand(unknowns)?;
        let gamma = self.gamma(&a);
        Ok((self.matrix(&a, &b)?, gamma))
    }

    /// Rank tolerance used to certify the kernel dimension.
    pub fn kernel_tolerance(&self) -> f64 {
        match self.mode {
            Mode::Leading => 1e-8,
            Mode::Full => 1e-6,
        }
    }
}

/// Residual of the coefficient matching, with consistency diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    /// `Re(p_k - q_k)` for `k = 0..N-2`, with `p = det(M - xI)` and
    /// `q = (gamma - x)^N`.
    pub values: Vec<f64>,
    /// Largest `|Im(p_k - q_k)|` over all coefficients.
    pub imag_defect: f64,
    /// `|p_{N-1} - q_{N-1}|`, zero by the trace rule.
    pub trace_defect: f64,
    /// Imaginary and trace defects below `1e-10 (1 + max |p_k|)`.
    pub consistent: bool,
}

impl Residual {
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// `det(M - xI) - (gamma - x)^N`, coefficient by coefficient.
pub fn coefficient_mismatch(matrix: &ComplexMatrix, gamma: f64) -> Result<(Vec<C64>, f64), EpError> {
    let p = char_poly(matrix)?;
    let q = Polynomial::shifted_power(C64::new(gamma, 0.0), matrix.dim());
    let scale = p.max_abs_coeff();
    let diff = p.coeffs().iter().zip(q.coeffs()).map(|(x, y)| x - y).collect();
    Ok((diff, scale))
}

pub fn residual(problem: &EpProblem, unknowns: &[f64]) -> Result<Residual, EpError> {
    let (m, gamma) = problem.assemble(unknowns)?;
    let (diff, scale) = coefficient_mismatch(&m, gamma)?;
    let n = problem.order();
    let values = diff[..n - 1].iter().map(|z| z.re).collect();
    let imag_defect = diff.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let trace_defect = diff[n - 1].norm();
    let bound = 1e-10 * (1.0 + scale);
    Ok(Residual {
        values,
        imag_defect,
        trace_defect,
        consistent: imag_defect <= bound && trace_defect <= bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_round_trips() {
        for order in 2..9 {
            let p = EpProblem::leading(order).unwrap();
            let u: Vec<f64> = (0..p.unknown_count()).map(|k| 0.3 * k as f64 - 0.7).collect();
            let (a, b) = p.expand(&u).unwrap();
            assert_eq!(a[0], 0.0);
            assert_eq!(p.compress(&a, &b), u);
            if order % 2 == 1 {
                assert_eq!(b[order / 2], 0.0);
            }
        }
    }

    #[test]
    fn rejects_degenerate_orders_and_bad_unknowns() {
        assert!(matches!(EpProblem::leading(1), Err(EpError::InvalidOrder(1))));
        assert!(matches!(EpProblem::full(3, 1.2), Err(EpError::InvalidEpsilon(_))));
        let p = EpProblem::leading(3).unwrap();
        assert!(matches!(residual(&p, &[1.0]), Err(EpError::UnknownLength { .. })));
        assert!(matches!(residual(&p, &[1.0, f64::NAN]), Err(EpError::NonFiniteUnknowns)));
    }

    #[test]
    fn second_order_leading_residual_vanishes_at_unit_gain() {
        // det([[i, -1], [-1, -i]] - x I) = x^2 + 1 - 1 = x^2 with gamma = 0
        let p = EpProblem::leading(2).unwrap();
        let r = residual(&p, &[1.0]).unwrap();
        assert_eq!(r.values, vec![0.0]);
        assert!(r.consistent);
    }

    #[test]
    fn uniform_array_is_trivial_full_solution_without_coupling() {
        let p = EpProblem::full(4, 0.0).unwrap();
        let r = residual(&p, &[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(r.norm(), 0.0);
        let p3 = EpProblem::full(3, 0.0).unwrap();
        assert_eq!(residual(&p3, &[0.0, 1.0]).unwrap().norm(), 0.0);
    }

    #[test]
    fn trimer_residual_near_rounded_values() {
        // reference from an independent numpy evaluation of det(M - xI) - (gamma - x)^3
        let p = EpProblem::leading(3).unwrap();
        let r = residual(&p, &[1.53, 0.483]).unwrap();
        assert!((r.norm() - 0.014332827102618467).abs() < 1e-12, "{}", r.norm());
        assert!(r.consistent);
        let exact = residual(&p, &[1.5257301701322068, 0.4832780319391284]).unwrap();
        assert!(exact.norm() < 1e-12);
    }
}
