//! Eigenvalue splitting under small perturbations.
//!
//! At an order-`N` exceptional point a perturbation of size `s` moves the
//! eigenvalues by `~ s^(1/N)`; at a simple eigenvalue by `~ s`. The exponent
//! is read off a log-log least-squares fit.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg::{eigenvalues, ComplexMatrix, LinalgError, C64};
use crate::spectra::{linear_fit, sig12};

/// Shifts below this are root-finder noise and are dropped from the fit.
pub const SHIFT_FLOOR: f64 = 1e-12;

/// Shifts must also exceed the unperturbed matrix's own shift (the accuracy
/// to which its eigenvalues are resolved) by this factor to enter the fit.
pub const NOISE_MARGIN: f64 = 10.0;

/// Perturbation size at which [`site_ranking`] evaluates splitting constants.
pub const RANKING_SIZE: f64 = 1e-6;

const MIN_FIT_POINTS: usize = 4;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SensingError {
    #[error("site {site} out of range for a {n}x{n} matrix")]
    SiteOutOfRange { site: usize, n: usize },
    #[error("perturbation direction has dimension {found}, matrix {expected}")]
    DirectionShape { expected: usize, found: usize },
    #[error("perturbation direction is zero")]
    ZeroDirection,
    #[error("perturbation sizes must be positive, finite and strictly decreasing")]
    InvalidSizes,
    #[error("perturbation sizes span {0:.2} decades, need at least 3")]
    NarrowSizes(f64),
    #[error("only {usable} usable points above the {floor:.3e} shift floor, need {MIN_FIT_POINTS}")]
    InsufficientData { usable: usize, floor: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PerturbationKind {
    /// Adds `s` to diagonal entry `(i, i)`, 0-based.
    DiagonalSite(usize),
    /// Adds `s E` with `E` normalized to unit Frobenius norm.
    FullMatrix(ComplexMatrix),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    kind: PerturbationKind,
    sizes: Vec<f64>,
}

/// `points` log-spaced sizes from `s_max` down to `s_min`.
pub fn log_grid(s_min: f64, s_max: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![s_max];
    }
    let (lo, hi) = (s_min.log10(), s_max.log10());
    (0..points)
        .map(|k| 10f64.powf(hi - (hi - lo) * k as f64 / (points - 1) as f64))
        .collect()
}

impl PerturbationSpec {
    pub fn new(kind: PerturbationKind, sizes: Vec<f64>) -> Result<Self, SensingError> {
        if sizes.is_empty()
            || sizes.iter().any(|s| !(s.is_finite() && *s > 0.0))
            || sizes.windows(2).any(|w| w[0] <= w[1])
        {
            return Err(SensingError::InvalidSizes);
        }
        let decades = (sizes[0] / sizes[sizes.len() - 1]).log10();
        // tolerate rounding in grids built from exact powers of ten
        if decades < 3.0 - 1e-9 {
            return Err(SensingError::NarrowSizes(decades));
        }
        let kind = match kind {
            PerturbationKind::FullMatrix(e) => {
                let norm = e.frobenius_norm();
                if norm == 0.0 {
                    return Err(SensingError::ZeroDirection);
                }
                PerturbationKind::FullMatrix(e.scaled(C64::new(1.0 / norm, 0.0)))
            }
            k => k,
        };
        Ok(Self { kind, sizes })
    }

    pub fn diagonal_site(site: usize, sizes: Vec<f64>) -> Result<Self, SensingError> {
        Self::new(PerturbationKind::DiagonalSite(site), sizes)
    }

    pub fn kind(&self) -> &PerturbationKind {
        &self.kind
    }

    pub fn sizes(&self) -> &[f64] {
        &self.sizes
    }

    fn check_against(&self, m: &ComplexMatrix) -> Result<(), SensingError> {
        let n = m.dim();
        match &self.kind {
            PerturbationKind::DiagonalSite(i) if *i >= n => Err(SensingError::SiteOutOfRange { site: *i, n }),
            PerturbationKind::FullMatrix(e) if e.dim() != n => Err(SensingError::DirectionShape {
                expected: n,
                found: e.dim(),
            }),
            _ => Ok(()),
        }
    }

    fn apply(&self, m: &ComplexMatrix, s: f64) -> Result<ComplexMatrix, SensingError> {
        Ok(match &self.kind {
            PerturbationKind::DiagonalSite(i) => {
                let mut p = m.clone();
                p[(*i, *i)] += s;
                p
            }
            PerturbationKind::FullMatrix(e) => m.add(&e.scaled(C64::new(s, 0.0)))?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplittingFit {
    pub sizes: Vec<f64>,
    /// Largest distance of a perturbed eigenvalue from the reference
    /// spectrum, one entry per size.
    pub max_shift: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Sizes whose shift cleared the noise floor and entered the fit.
    pub used: Vec<bool>,
}

/// Measures eigenvalue splitting against a reference spectrum:
/// `max_shift(s) = max_i min_j |lambda_i(s) - reference_j|`.
pub fn split(m: &ComplexMatrix, reference: &[C64], spec: &PerturbationSpec) -> Result<SplittingFit, SensingError> {
    spec.check_against(m)?;
    let shift = |p: &ComplexMatrix| -> Result<f64, SensingError> {
        Ok(eigenvalues(p)?
            .eigenvalues
            .iter()
            .map(|l| reference.iter().map(|r| (l - r).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max))
    };
    let floor = SHIFT_FLOOR.max(NOISE_MARGIN * shift(m)?);
    let max_shift = spec
        .sizes
        .par_iter()
        .map(|&s| shift(&spec.apply(m, s)?))
        .collect::<Result<Vec<f64>, SensingError>>()?;
    let used: Vec<bool> = max_shift.iter().map(|d| *d >= floor).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = spec
        .sizes
        .iter()
        .zip(&max_shift)
        .zip(&used)
        .filter(|(_, u)| **u)
        .map(|((s, d), _)| (s.ln(), d.ln()))
        .unzip();
    if xs.len() < MIN_FIT_POINTS {
        return Err(SensingError::InsufficientData {
            usable: xs.len(),
            floor,
        });
    }
    let (slope, intercept, r_squared) = linear_fit(&xs, &ys);
    Ok(SplittingFit {
        sizes: spec.sizes.clone(),
        max_shift,
        slope,
        intercept,
        r_squared,
        used,
    })
}

/// Splitting away from an exceptional point with eigenvalue `gamma`.
pub fn split_at_ep(m: &ComplexMatrix, gamma: f64, spec: &PerturbationSpec) -> Result<SplittingFit, SensingError> {
    split(m, &[C64::new(gamma, 0.0)], spec)
}

/// Splitting measured against the matrix's own unperturbed eigenvalues; the
/// baseline for matrices without a degeneracy.
pub fn split_regular(m: &ComplexMatrix, spec: &PerturbationSpec) -> Result<SplittingFit, SensingError> {
    let reference = eigenvalues(m)?.eigenvalues;
    split(m, &reference, spec)
}

impl SplittingFit {
    /// `s,max_shift` rows followed by a JSON summary line.
    pub fn to_csv(&self, order: usize) -> String {
        let mut out = String::from("s,max_shift\n");
        for (s, d) in self.sizes.iter().zip(&self.max_shift) {
            let _ = writeln!(out, "{},{}", sig12(*s), sig12(*d));
        }
        let summary = serde_json::json!({
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "order": order,
        });
        let _ = writeln!(out, "{summary}");
        out
    }
}

/// Splitting constants `C_i = max_shift / s^(1/N)` for a unit perturbation of
/// each diagonal site at `s = 1e-6`, sorted by decreasing `C_i` (ties by
/// site). Sites are 0-based.
pub fn site_ranking(m: &ComplexMatrix, gamma: f64, order: usize) -> Result<Vec<(usize, f64)>, SensingError> {
    let n = m.dim();
    let reference = [C64::new(gamma, 0.0)];
    let mut out = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut p = m.clone();
            p[(i, i)] += RANKING_SIZE;
            let spec = eigenvalues(&p)?;
            let shift = spec
                .eigenvalues
                .iter()
                .map(|l| (l - reference[0]).norm())
                .fold(0.0, f64::max);
            Ok((i, shift / RANKING_SIZE.powf(1.0 / order as f64)))
        })
        .collect::<Result<Vec<_>, SensingError>>()?;
    out.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair_ep() -> ComplexMatrix {
        let one = C64::new(1.0, 0.0);
        ComplexMatrix::from_rows(&[vec![C64::new(0.0, 1.0), -one], vec![-one, C64::new(0.0, -1.0)]]).unwrap()
    }

    #[test]
    fn grid_is_decreasing_and_spans_range() {
        let g = log_grid(1e-8, 1e-2, 25);
        assert_eq!(g.len(), 25);
        assert!((g[0] - 1e-2).abs() < 1e-17 && (g[24] - 1e-8).abs() < 1e-22);
        assert!(g.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn spec_validation() {
        assert!(PerturbationSpec::diagonal_site(0, vec![1e-2, 1e-3]).is_err());
        assert!(PerturbationSpec::diagonal_site(0, vec![1e-2, 1e-6, 1e-3]).is_err());
        assert!(PerturbationSpec::diagonal_site(0, log_grid(1e-5, 1e-2, 4)).is_ok());
        let zero = ComplexMatrix::zeros(2);
        assert_eq!(
            PerturbationSpec::new(PerturbationKind::FullMatrix(zero), log_grid(1e-8, 1e-2, 5)),
            Err(SensingError::ZeroDirection)
        );
    }

    #[test]
    fn full_direction_is_normalized() {
        let e = ComplexMatrix::identity(2).scaled(C64::new(3.0, 0.0));
        let spec = PerturbationSpec::new(PerturbationKind::FullMatrix(e), log_grid(1e-8, 1e-2, 5)).unwrap();
        match spec.kind() {
            PerturbationKind::FullMatrix(e) => assert!((e.frobenius_norm() - 1.0).abs() < 1e-15),
            _ => unreachable!(),
        }
    }

    #[test]
    fn site_out_of_range() {
        let m = ComplexMatrix::identity(2);
        let spec = PerturbationSpec::diagonal_site(2, log_grid(1e-8, 1e-2, 5)).unwrap();
        assert_eq!(
            split_at_ep(&m, 1.0, &spec),
            Err(SensingError::SiteOutOfRange { site: 2, n: 2 })
        );
    }

    #[test]
    fn second_order_point_splits_as_square_root() {
        // [[i, -1], [-1, -i]] is a 2x2 Jordan block at 0
        let m = pair_ep();
        let spec = PerturbationSpec::diagonal_site(1, log_grid(1e-8, 1e-2, 13)).unwrap();
        let fit = split_at_ep(&m, 0.0, &spec).unwrap();
        assert!((fit.slope - 0.5).abs() < 0.03, "{}", fit.slope);
        assert!(fit.r_squared > 0.99);
    }

    #[test]
    fn below_floor_is_insufficient() {
        let m = ComplexMatrix::from_diagonal(&[C64::new(1.0, 0.0), C64::new(2.0, 0.0), C64::new(3.0, 0.0)]).unwrap();
        let spec = PerturbationSpec::diagonal_site(0, log_grid(1e-20, 1e-14, 7)).unwrap();
        assert!(matches!(
            split_regular(&m, &spec),
            Err(SensingError::InsufficientData { .. })
        ));
    }

    #[test]
    fn csv_has_summary_line() {
        let spec = PerturbationSpec::diagonal_site(0, log_grid(1e-8, 1e-2, 7)).unwrap();
        let csv = split_at_ep(&pair_ep(), 0.0, &spec).unwrap().to_csv(2);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "s,max_shift");
        assert_eq!(lines.len(), 9);
        let v: serde_json::Value = serde_json::from_str(lines[8]).unwrap();
        assert_eq!(v["order"], 2);
    }
}
