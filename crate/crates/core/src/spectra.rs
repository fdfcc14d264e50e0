//! Eigenvalue trajectories under gain/loss scaling and the map from
//! capacitance eigenvalues to resonant frequencies.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacitance::{build_dilute, build_leading_order, CapacitanceError};
use crate::linalg::{eigenvalues, ComplexMatrix, LinalgError, C64};
use crate::model::{scale_gain_loss, GainLossProfile, ModelError, PhysicalConstants};

/// Default number of sweep points over `[0, 2]`.
pub const DEFAULT_STEPS: usize = 401;

/// `|tau - 1|` window of the coalescence-exponent fit.
pub const EXPONENT_WINDOW: (f64, f64) = (0.01, 0.1);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpectraError {
    #[error("no tau values given")]
    EmptySweep,
    #[error("tau values must be finite and sorted ascending")]
    UnsortedTaus,
    #[error("need at least 2 points on each side of tau = 1 with 0.01 <= |tau - 1| <= 0.1 (found {below} below, {above} above)")]
    InsufficientBracket { below: usize, above: usize },
    #[error(transparent)]
    Capacitance(#[from] CapacitanceError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Eigenvalue paths over a sweep of the gain/loss scale `tau`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub taus: Vec<f64>,
    /// One row per `tau`; column `k` follows a single continuous path.
    /// Numerically coalesced eigenvalues are reported at their common
    /// polished value.
    pub eigenvalues: Vec<Vec<C64>>,
    /// Geometric mean of the pairwise eigenvalue distances at each `tau`,
    /// `|discriminant|^(1/(N(N-1)))`; zero once eigenvalues coalesce.
    pub coalescence_gap: Vec<f64>,
    /// Largest pairwise eigenvalue distance at each `tau`.
    pub spread: Vec<f64>,
    /// Whether the root finder converged at each `tau`.
    pub converged: Vec<bool>,
}

/// `n` equally spaced values from `lo` to `hi` inclusive.
pub fn tau_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

fn check_taus(taus: &[f64]) -> Result<(), SpectraError> {
    if taus.is_empty() {
        return Err(SpectraError::EmptySweep);
    }
    if taus.iter().any(|t| !t.is_finite()) || taus.windows(2).any(|w| w[0] > w[1]) {
        return Err(SpectraError::UnsortedTaus);
    }
    Ok(())
}

/// Sweep of the dilute matrix with gain/loss scaled by each `tau`.
pub fn sweep(profile: &GainLossProfile, epsilon: f64, taus: &[f64]) -> Result<Trajectory, SpectraError> {
    check_taus(taus)?;
    // validate once at tau = 1 so per-step failures can only be numerical
    build_dilute(profile, epsilon)?;
    run(taus, |tau| Ok(build_dilute(&scale_gain_loss(profile, tau), epsilon)?))
}

/// Sweep of the first-order matrix; `profile` holds first-order
/// coefficients.
pub fn sweep_leading(profile: &GainLossProfile, taus: &[f64]) -> Result<Trajectory, SpectraError> {
    check_taus(taus)?;
    let diag = |p: &GainLossProfile| -> Vec<C64> { p.a.iter().zip(&p.b).map(|(&a, &b)| C64::new(a, b)).collect() };
    build_leading_order(&diag(profile))?;
    run(taus, |tau| Ok(build_leading_order(&diag(&scale_gain_loss(profile, tau)))?))
}

fn run<F>(taus: &[f64], build: F) -> Result<Trajectory, SpectraError>
where
    F: Fn(f64) -> Result<ComplexMatrix, SpectraError> + Sync,
{
    let spectra = taus
        .par_iter()
        .map(|&t| Ok(eigenvalues(&build(t)?)?))
        .collect::<Result<Vec<_>, SpectraError>>()?;
    let mut rows: Vec<Vec<C64>> = Vec::with_capacity(spectra.len());
    for s in &spectra {
        let current = s.resolved();
        let row = match rows.last() {
            Some(prev) => match_to(prev, &current),
            None => current,
        };
        rows.push(row);
    }
    Ok(Trajectory {
        taus: taus.to_vec(),
        coalescence_gap: rows.iter().map(|r| coalescence_gap(r)).collect(),
        spread: spectra.iter().map(|s| s.cluster_diameter()).collect(),
        eigenvalues: rows,
        converged: spectra.iter().map(|s| s.converged).collect(),
    })
}

/// Geometric mean of all pairwise distances. Unlike the largest distance it
/// carries no `|tau - 1|^(2/N)` correction near an order-`N` point, since the
/// discriminant is analytic in `tau`.
pub fn coalescence_gap(eigs: &[C64]) -> f64 {
    let mut log_sum = 0.0;
    let mut pairs = 0usize;
    for (i, a) in eigs.iter().enumerate() {
        for b in &eigs[i + 1..] {
            let d = (a - b).norm();
            if d == 0.0 {
                return 0.0;
            }
            log_sum += d.ln();
            pairs += 1;
        }
    }
    if pairs == 0 {
        0.0
    } else {
        (log_sum / pairs as f64).exp()
    }
}

/// Reorders `next` so that entry `k` continues path `k` of `prev`, by
/// repeatedly committing the closest remaining pair.
fn match_to(prev: &[C64], next: &[C64]) -> Vec<C64> {
    let n = prev.len();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for (i, p) in prev.iter().enumerate() {
        for (j, q) in next.iter().enumerate() {
            pairs.push(((p - q).norm(), i, j));
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut out: Vec<Option<C64>> = vec![None; n];
    let mut used = vec![false; n];
    for (_, i, j) in pairs {
        if out[i].is_none() && !used[j] {
            out[i] = Some(next[j]);
            used[j] = true;
        }
    }
    out.into_iter().map(|z| z.expect("pairing is a bijection")).collect()
}

impl Trajectory {
    pub fn order(&self) -> usize {
        self.eigenvalues.first().map_or(0, Vec::len)
    }

    /// CSV with header `tau,re_1,im_1,...,re_N,im_N,gap`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tau");
        for k in 1..=self.order() {
            let _ = write!(out, ",re_{k},im_{k}");
        }
        out.push_str(",gap\n");
        for (t, (row, gap)) in self.taus.iter().zip(self.eigenvalues.iter().zip(&self.coalescence_gap)) {
            out.push_str(&sig12(*t));
            for z in row {
                let _ = write!(out, ",{},{}", sig12(z.re), sig12(z.im));
            }
            let _ = writeln!(out, ",{}", sig12(*gap));
        }
        out
    }

    /// Gap at the sweep point closest to `tau`.
    pub fn gap_at(&self, tau: f64) -> Option<f64> {
        self.taus
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| (*a - tau).abs().total_cmp(&(*b - tau).abs()))
            .map(|(k, _)| self.coalescence_gap[k])
    }
}

/// Formats with 12 significant digits.
pub fn sig12(v: f64) -> String {
    format!("{v:.11e}")
}

/// Least-squares slope of `log gap` against `log |tau - 1|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    /// Theoretical exponent `1/N`.
    pub expected: f64,
    pub points: usize,
}

/// Fits the coalescence exponent on `0.01 <= |tau - 1| <= 0.1`; requires two
/// usable points on each side of `tau = 1`.
pub fn coalescence_exponent(traj: &Trajectory, order: usize) -> Result<ExponentFit, SpectraError> {
    let (lo, hi) = EXPONENT_WINDOW;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let (mut below, mut above) = (0, 0);
    for (&t, &g) in traj.taus.iter().zip(&traj.coalescence_gap) {
        let d = (t - 1.0).abs();
        // small slack so grid points landing on the window edge are kept
        if d < lo * (1.0 - 1e-9) || d > hi * (1.0 + 1e-9) || !(g > 0.0) {
            continue;
        }
        if t < 1.0 {
            below += 1;
        } else {
            above += 1;
        }
        xs.push(d.ln());
        ys.push(g.ln());
    }
    if below < 2 || above < 2 {
        return Err(SpectraError::InsufficientBracket { below, above });
    }
    let (slope, intercept, _) = linear_fit(&xs, &ys);
    Ok(ExponentFit {
        slope,
        intercept,
        expected: 1.0 / order as f64,
        points: xs.len(),
    })
}

/// Ordinary least squares `y = slope x + intercept`; returns
/// `(slope, intercept, r^2)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, intercept, r2)
}

/// Leading-order resonant frequencies `omega_i = sqrt(4 pi a delta gamma_i / |D|)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyMap {
    pub gammas: Vec<C64>,
    pub omegas: Vec<C64>,
    pub constants: PhysicalConstants,
    /// `gamma_i = 0`: no subwavelength resonance at leading order.
    pub non_resonant: Vec<bool>,
}

/// Principal square root, so `Re(omega) >= 0`. The `O(delta)` correction is
/// not modelled.
pub fn to_frequencies(gammas: &[C64], c: &PhysicalConstants) -> Result<FrequencyMap, SpectraError> {
    c.validate()?;
    let k = 4.0 * PI * c.a_scale * c.delta / c.volume;
    let omegas = gammas
        .iter()
        .map(|g| {
            if g.im == 0.0 && g.re >= 0.0 {
                // keep real inputs exactly real
                C64::new((k * g.re).sqrt(), 0.0)
            } else {
                (g * k).sqrt()
            }
        })
        .collect();
    Ok(FrequencyMap {
        gammas: gammas.to_vec(),
        omegas,
        constants: *c,
        non_resonant: gammas.iter().map(|g| *g == C64::new(0.0, 0.0)).collect(),
    })
}

impl FrequencyMap {
    /// CSV with header `re_gamma,im_gamma,re_omega,im_omega,resonant`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("re_gamma,im_gamma,re_omega,im_omega,resonant\n");
        for ((g, w), flag) in self.gammas.iter().zip(&self.omegas).zip(&self.non_resonant) {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                sig12(g.re),
                sig12(g.im),
                sig12(w.re),
                sig12(w.im),
                !flag
            );
        }
        out
    }
}
