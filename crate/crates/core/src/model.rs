//! Resonator-array descriptions: gain/loss profiles, geometry and physical
//! constants.
//!
//! Resonator `i` carries the material parameter `a_i + i b_i` (in units of
//! `delta * a_scale`). PT symmetry pairs resonator `i` with `n + 1 - i`:
//! real parts mirror, imaginary parts flip sign, and an odd array's centre
//! resonator has no gain or loss.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Tolerance for symmetry and normalization checks.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("profile arrays have lengths {a} and {b}, expected {n}")]
    LengthMismatch { n: usize, a: usize, b: usize },
    #[error("invalid profile: {}", join(.0))]
    InvalidProfile(Vec<Violation>),
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid constants: {0}")]
    InvalidConstants(String),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

/// A broken invariant of a [`GainLossProfile`]. Indices are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    Empty,
    LengthMismatch { n: usize, a: usize, b: usize },
    NonFinite { index: usize },
    NotNormalized { a1: f64 },
    RealPartAsymmetry { i: usize, j: usize },
    GainLossNotAntisymmetric { i: usize, j: usize },
    CentreGainLoss { index: usize, value: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Empty => write!(f, "profile has no resonators"),
            Violation::LengthMismatch { n, a, b } => {
                write!(f, "n = {n} but a has {a} entries and b has {b}")
            }
            Violation::NonFinite { index } => write!(f, "non-finite parameter at resonator {index}"),
            Violation::NotNormalized { a1 } => write!(f, "a_1 = {a1}, expected 1"),
            Violation::RealPartAsymmetry { i, j } => {
                write!(f, "real-part symmetry violation at ({i},{j})")
            }
            Violation::GainLossNotAntisymmetric { i, j } => {
                write!(f, "antisymmetry violation at ({i},{j})")
            }
            Violation::CentreGainLoss { index, value } => {
                write!(f, "centre gain/loss nonzero (b_{index} = {value})")
            }
        }
    }
}

/// Material parameters `(a_i, b_i)` for every resonator of the array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainLossProfile {
    pub n: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl GainLossProfile {
    /// A validated profile, normalized so that `a_1 = 1`.
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self, ModelError> {
        let p = Self::unchecked(a, b)?;
        let v = validate_profile(&p);
        if v.is_empty() {
            Ok(p)
        } else {
            Err(ModelError::InvalidProfile(v))
        }
    }

    /// First-order coefficients `(a_{i,1}, b_{i,1})` of a profile expanded
    /// around the uniform array. PT symmetry is enforced; `a_{1,1}` must be 0.
    pub fn first_order(a: Vec<f64>, b: Vec<f64>) -> Result<Self, ModelError> {
        let p = Self::unchecked(a, b)?;
        let mut v = symmetry_violations(&p);
        if p.a.first().is_some_and(|&a1| a1.abs() > SYMMETRY_TOLERANCE) {
            v.push(Violation::NotNormalized { a1: p.a[0] });
        }
        if v.is_empty() {
            Ok(p)
        } else {
            Err(ModelError::InvalidProfile(v))
        }
    }

    /// Only checks that the arrays agree in length.
    pub fn unchecked(a: Vec<f64>, b: Vec<f64>) -> Result<Self, ModelError> {
        if a.len() != b.len() {
            return Err(ModelError::LengthMismatch {
                n: a.len(),
                a: a.len(),
                b: b.len(),
            });
        }
        Ok(Self { n: a.len(), a, b })
    }

    /// All-real uniform profile `a_i = 1, b_i = 0`.
    pub fn uniform(n: usize) -> Self {
        Self {
            n,
            a: vec![1.0; n],
            b: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn sum_a(&self) -> f64 {
        self.a.iter().sum()
    }
}

/// Every broken invariant of `p`, including the `a_1 = 1` normalization.
pub fn validate_profile(p: &GainLossProfile) -> Vec<Violation> {
    let mut v = symmetry_violations(p);
    if let Some(&a1) = p.a.first() {
        if a1.is_finite() && (a1 - 1.0).abs() > SYMMETRY_TOLERANCE {
            v.push(Violation::NotNormalized { a1 });
        }
    }
    v
}

/// PT-symmetry checks only (no normalization).
pub fn symmetry_violations(p: &GainLossProfile) -> Vec<Violation> {
    let mut v = Vec::new();
    if p.n == 0 {
        v.push(Violation::Empty);
        return v;
    }
    if p.a.len() != p.n || p.b.len() != p.n {
        v.push(Violation::LengthMismatch {
            n: p.n,
            a: p.a.len(),
            b: p.b.len(),
        });
        return v;
    }
    for i in 0..p.n {
        if !p.a[i].is_finite() || !p.b[i].is_finite() {
            v.push(Violation::NonFinite { index: i + 1 });
        }
    }
    if !v.is_empty() {
        return v;
    }
    let n = p.n;
    for i in 0..n / 2 {
        let j = n - 1 - i;
        if (p.a[i] - p.a[j]).abs() > SYMMETRY_TOLERANCE {
            v.push(Violation::RealPartAsymmetry { i: i + 1, j: j + 1 });
        }
        if (p.b[i] + p.b[j]).abs() > SYMMETRY_TOLERANCE {
            v.push(Violation::GainLossNotAntisymmetric { i: i + 1, j: j + 1 });
        }
    }
    if n % 2 == 1 {
        let c = n / 2;
        if p.b[c].abs() > SYMMETRY_TOLERANCE {
            v.push(Violation::CentreGainLoss {
                index: c + 1,
                value: p.b[c],
            });
        }
    }
    v
}

/// Rescales the gain/loss amplitudes by `tau`; real parts are untouched.
pub fn scale_gain_loss(p: &GainLossProfile, tau: f64) -> GainLossProfile {
    GainLossProfile {
        n: p.n,
        a: p.a.clone(),
        b: p.b.iter().map(|b| tau * b).collect(),
    }
}

/// Resonator centres in units of the dilute length `1/epsilon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub n: usize,
    pub positions: Vec<[f64; 3]>,
    pub epsilon: f64,
    #[serde(default = "default_cap_b")]
    pub cap_b: f64,
}

fn default_cap_b() -> f64 {
    4.0 * PI
}

impl ArrayGeometry {
    pub fn new(positions: Vec<[f64; 3]>, epsilon: f64, cap_b: f64) -> Result<Self, ModelError> {
        let g = Self {
            n: positions.len(),
            positions,
            epsilon,
            cap_b,
        };
        g.validate()?;
        Ok(g)
    }

    /// Equally spaced on the x-axis, centred at the origin.
    pub fn equispaced(n: usize, epsilon: f64) -> Self {
        let mid = (n as f64 + 1.0) / 2.0;
        Self {
            n,
            positions: (1..=n).map(|i| [i as f64 - mid, 0.0, 0.0]).collect(),
            epsilon,
            cap_b: default_cap_b(),
        }
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (p, q) = (self.positions[i], self.positions[j]);
        ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.n == 0 || self.positions.len() != self.n {
            return Err(ModelError::InvalidGeometry(format!(
                "n = {} with {} positions",
                self.n,
                self.positions.len()
            )));
        }
        if !(self.epsilon >= 0.0 && self.epsilon < 1.0) {
            return Err(ModelError::InvalidGeometry(format!(
                "epsilon = {} outside [0, 1)",
                self.epsilon
            )));
        }
        if !(self.cap_b > 0.0 && self.cap_b.is_finite()) {
            return Err(ModelError::InvalidGeometry(format!("cap_b = {}", self.cap_b)));
        }
        if self.positions.iter().flatten().any(|x| !x.is_finite()) {
            return Err(ModelError::InvalidGeometry("non-finite position".into()));
        }
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.distance(i, j) == 0.0 {
                    return Err(ModelError::InvalidGeometry(format!(
                        "resonators {} and {} coincide",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub delta: f64,
    pub a_scale: f64,
    #[serde(default = "unit_sphere_volume")]
    pub volume: f64,
}

fn unit_sphere_volume() -> f64 {
    4.0 * PI / 3.0
}

impl Default for PhysicalConstants {
    /// Unit spheres with `delta = 1/5000` and `a = 1`.
    fn default() -> Self {
        Self {
            delta: 1.0 / 5000.0,
            a_scale: 1.0,
            volume: unit_sphere_volume(),
        }
    }
}

impl PhysicalConstants {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(ModelError::InvalidConstants(format!("delta = {} must be positive", self.delta)));
        }
        if self.a_scale == 0.0 || !self.a_scale.is_finite() {
            return Err(ModelError::InvalidConstants("a_scale must be nonzero".into()));
        }
        if !(self.volume > 0.0 && self.volume.is_finite()) {
            return Err(ModelError::InvalidConstants(format!("volume = {} must be positive", self.volume)));
        }
        Ok(())
    }

    /// Non-fatal remarks, e.g. a contrast too large for the asymptotics.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.delta > 0.1 {
            w.push(format!(
                "delta = {} is not small; the leading-order frequency map may be inaccurate",
                self.delta
            ));
        }
        w
    }
}
