//! Weighted dilute capacitance matrices.
//!
//! For resonators spaced `~1/epsilon` apart the capacitance coefficients are
//! `Cap_B` on the diagonal and `-epsilon Cap_B^2 / (4 pi |z_i - z_j|)` off it,
//! up to `O(epsilon^2)`, which is dropped. Row `i` is weighted by the
//! material parameter `a_i + i b_i`.

use std::f64::consts::PI;

use crate::linalg::{ComplexMatrix, LinalgError, C64};
use crate::model::{symmetry_violations, validate_profile, ArrayGeometry, GainLossProfile, ModelError, Violation};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CapacitanceError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("epsilon = {0} outside [0, 1)")]
    InvalidEpsilon(f64),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

fn check_epsilon(epsilon: f64) -> Result<(), CapacitanceError> {
    if (0.0..1.0).contains(&epsilon) {
        Ok(())
    } else {
        Err(CapacitanceError::InvalidEpsilon(epsilon))
    }
}

fn weight(p: &GainLossProfile, i: usize) -> C64 {
    C64::new(p.a[i], p.b[i])
}

/// Equally spaced collinear array: `(i,i) = a_i + i b_i`,
/// `(i,j) = -(a_i + i b_i) epsilon / |i - j|`.
pub fn build_dilute(p: &GainLossProfile, epsilon: f64) -> Result<ComplexMatrix, CapacitanceError> {
    check_epsilon(epsilon)?;
    let v = validate_profile(p);
    if !v.is_empty() {
        return Err(ModelError::InvalidProfile(v).into());
    }
    Ok(dilute_unchecked(p, epsilon)?)
}

/// Same assembly as [`build_dilute`] without profile validation. Used where
/// the profile is PT-symmetric by construction.
pub(crate) fn dilute_unchecked(p: &GainLossProfile, epsilon: f64) -> Result<ComplexMatrix, LinalgError> {
    ComplexMatrix::from_fn(p.n, |i, j| {
        let w = weight(p, i);
        if i == j {
            w
        } else {
            -w * (epsilon / i.abs_diff(j) as f64)
        }
    })
}

/// Dilute matrix for arbitrary resonator centres, normalized by `Cap_B` so
/// that the equispaced collinear case reproduces [`build_dilute`].
///
/// The profile is already expressed in units of `delta * a_scale`, so both
/// constants only enter through validation.
pub fn build_dilute_general(
    p: &GainLossProfile,
    g: &ArrayGeometry,
    delta: f64,
    a_scale: f64,
) -> Result<ComplexMatrix, CapacitanceError> {
    g.validate()?;
    if g.n != p.n {
        return Err(ModelError::InvalidGeometry(format!("geometry has {} resonators, profile {}", g.n, p.n)).into());
    }
    if !(delta > 0.0) || a_scale == 0.0 {
        return Err(ModelError::InvalidConstants(format!("delta = {delta}, a_scale = {a_scale}")).into());
    }
    let v = validate_profile(p);
    if !v.is_empty() {
        return Err(ModelError::InvalidProfile(v).into());
    }
    let coupling = g.epsilon * g.cap_b / (4.0 * PI);
    Ok(ComplexMatrix::from_fn(p.n, |i, j| {
        let w = weight(p, i);
        if i == j {
            w
        } else {
            -w * (coupling / g.distance(i, j))
        }
    })?)
}

/// First-order matrix of the expansion `C = I + epsilon C_1 + o(epsilon)`:
/// diagonal `first_order`, off-diagonal `-1/|i - j|`.
pub fn build_leading_order(first_order: &[C64]) -> Result<ComplexMatrix, CapacitanceError> {
    let n = first_order.len();
    if n == 0 {
        return Err(LinalgError::EmptyMatrix.into());
    }
    let p = GainLossProfile::unchecked(
        first_order.iter().map(|z| z.re).collect(),
        first_order.iter().map(|z| z.im).collect(),
    )?;
    let v: Vec<Violation> = symmetry_violations(&p);
    if !v.is_empty() {
        return Err(ModelError::InvalidProfile(v).into());
    }
    leading_unchecked(first_order).map_err(Into::into)
}

pub(crate) fn leading_unchecked(first_order: &[C64]) -> Result<ComplexMatrix, LinalgError> {
    ComplexMatrix::from_fn(first_order.len(), |i, j| {
        if i == j {
            first_order[i]
        } else {
            C64::new(-1.0 / i.abs_diff(j) as f64, 0.0)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn pair_matches_closed_form() {
        let (b, eps) = (0.3, 0.1);
        let p = GainLossProfile::new(vec![1.0, 1.0], vec![b, -b]).unwrap();
        let m = build_dilute(&p, eps).unwrap();
        let z = c(1.0, b);
        let expected = ComplexMatrix::from_rows(&[vec![z, -z * eps], vec![-z.conj() * eps, z.conj()]]).unwrap();
        assert!(m.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn decoupled_limit_is_diagonal() {
        let p = GainLossProfile::new(vec![1.0, 1.2, 1.0], vec![0.4, 0.0, -0.4]).unwrap();
        let m = build_dilute(&p, 0.0).unwrap();
        let expected = ComplexMatrix::from_diagonal(&[c(1.0, 0.4), c(1.2, 0.0), c(1.0, -0.4)]).unwrap();
        assert_eq!(m, expected);
    }

    #[test]
    fn quadrimer_matches_transcribed_matrix() {
        let (b, cc, d, eps) = (0.187, 1.0654, 0.056, 0.1);
        let p = GainLossProfile::new(vec![1.0, cc, cc, 1.0], vec![b, d, -d, -b]).unwrap();
        let m = build_dilute(&p, eps).unwrap();
        let (z1, z2) = (c(1.0, b), c(cc, d));
        let (w1, w2) = (z1.conj(), z2.conj());
        let expected = ComplexMatrix::from_rows(&[
            vec![z1, -z1 * eps, -z1 * eps / 2.0, -z1 * eps / 3.0],
            vec![-z2 * eps, z2, -z2 * eps, -z2 * eps / 2.0],
            vec![-w2 * eps / 2.0, -w2 * eps, w2, -w2 * eps],
            vec![-w1 * eps / 3.0, -w1 * eps / 2.0, -w1 * eps, w1],
        ])
        .unwrap();
        assert!(m.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let bad = GainLossProfile::unchecked(vec![1.0, 1.0], vec![0.1, 0.1]).unwrap();
        assert!(matches!(
            build_dilute(&bad, 0.1),
            Err(CapacitanceError::Model(ModelError::InvalidProfile(_)))
        ));
        let good = GainLossProfile::uniform(2);
        assert!(matches!(build_dilute(&good, 1.5), Err(CapacitanceError::InvalidEpsilon(_))));
        assert!(build_leading_order(&[c(0.0, 1.0), c(0.0, 1.0)]).is_err());
    }

    #[test]
    fn general_geometry_reduces_to_equispaced() {
        let p = GainLossProfile::new(vec![1.0, 0.8, 0.8, 1.0], vec![0.2, -0.1, 0.1, -0.2]).unwrap();
        let g = ArrayGeometry::equispaced(4, 0.1);
        let general = build_dilute_general(&p, &g, 1.0 / 5000.0, 1.0).unwrap();
        let dilute = build_dilute(&p, 0.1).unwrap();
        assert!(general.max_abs_diff(&dilute) < 1e-14);
    }

    #[test]
    fn general_geometry_coupling_decays_with_distance() {
        let eps = 0.1;
        let p = GainLossProfile::uniform(2);
        let g = ArrayGeometry::new(vec![[0.0, 0.0, 0.0], [0.0, 2.0, 0.0]], eps, 4.0 * PI).unwrap();
        let m = build_dilute_general(&p, &g, 1e-3, 1.0).unwrap();
        assert!((m[(0, 1)].norm() - eps / 2.0).abs() < 1e-15);
        let g0 = ArrayGeometry::new(g.positions.clone(), 0.0, 4.0 * PI).unwrap();
        let m0 = build_dilute_general(&p, &g0, 1e-3, 1.0).unwrap();
        assert_eq!(m0, ComplexMatrix::identity(2));
    }

    #[test]
    fn leading_order_pair() {
        let m = build_leading_order(&[c(0.0, 1.0), c(0.0, -1.0)]).unwrap();
        let expected = ComplexMatrix::from_rows(&[vec![c(0.0, 1.0), c(-1.0, 0.0)], vec![c(-1.0, 0.0), c(0.0, -1.0)]])
            .unwrap();
        assert_eq!(m, expected);
    }

    #[test]
    fn leading_order_trimer_after_trace_shift() {
        let (b1, c1) = (1.5257, 0.4833);
        let diag = [c(-c1 / 3.0, b1), c(2.0 * c1 / 3.0, 0.0), c(-c1 / 3.0, -b1)];
        let m = build_leading_order(&diag).unwrap();
        let expected = ComplexMatrix::from_rows(&[
            vec![diag[0], c(-1.0, 0.0), c(-0.5, 0.0)],
            vec![c(-1.0, 0.0), diag[1], c(-1.0, 0.0)],
            vec![c(-0.5, 0.0), c(-1.0, 0.0), diag[2]],
        ])
        .unwrap();
        assert_eq!(m, expected);
    }
}
