use super::{newton_solve, merge_families, EpError, EpProblem, EpSolution, SolverConfig};

/// Real root of `c^3 + (27/4) c - 27/8 = 0`, the first-order centre
/// parameter of the third-order point, by bisection on `[0, 1]`.
pub fn trimer_first_order_c() -> f64 {
    let f = |c: f64| c * c * c + 6.75 * c - 3.375;
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while hi - lo > 1e-15 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Closed-form or tabulated first-order seeds, in unknown-layout order.
///
/// * order 2: `[1]`
/// * order 3: `[(b_1, c_1)]` with `c_1` from [`trimer_first_order_c`] and
///   `b_1 = sqrt(9/4 + c_1^2 / 3)`
/// * order 4: the four known families as `(b_1, d_1, c_1)` to three
///   significant figures
pub fn analytic_seed(order: usize) -> Result<Vec<Vec<f64>>, EpError> {
    match order {
        2 => Ok(vec![vec![1.0]]),
        3 => {
            let c1 = trimer_first_order_c();
            let b1 = (2.25 + c1 * c1 / 3.0).sqrt();
            Ok(vec![vec![b1, c1]])
        }
        4 => Ok(QUADRIMER_FAMILIES.iter().map(|t| t.to_vec()).collect()),
        _ => Err(EpError::UnsupportedOrder(order)),
    }
}

/// `(b_1, d_1, c_1)` for the four fourth-order families: same-sign with the
/// edge dominant, same-sign with the inner pair dominant, opposite-sign edge
/// dominant, opposite-sign inner dominant.
pub const QUADRIMER_FAMILIES: [[f64; 3]; 4] = [
    [1.87, 0.56, 0.654],
    [0.0456, 2.00, -0.863],
    [1.70, -1.13, 1.07],
    [0.734, -1.93, -1.15],
];

/// Qualitative shape of a gain/loss distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileClass {
    /// One sign on each half, magnitudes growing strictly toward the edges.
    MonotoneGrowth,
    /// Strictly alternating signs along the array.
    Alternating,
    Other,
}

/// Classifies the independent half `b_1..b_n` of a PT-symmetric profile.
pub fn classify_gain_loss(half: &[f64]) -> ProfileClass {
    if half.is_empty() || half.contains(&0.0) {
        return ProfileClass::Other;
    }
    let same_sign = half.iter().all(|b| b.signum() == half[0].signum());
    let shrinking = half.windows(2).all(|w| w[0].abs() > w[1].abs());
    if same_sign && shrinking {
        return ProfileClass::MonotoneGrowth;
    }
    if half.windows(2).all(|w| w[0] * w[1] < 0.0) {
        return ProfileClass::Alternating;
    }
    ProfileClass::Other
}

fn interpolate(ends: (f64, f64), count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![ends.0];
    }
    (0..count)
        .map(|i| {
            let t = i as f64 / (count - 1) as f64;
            ends.0 + t * (ends.1 - ends.0)
        })
        .collect()
}

/// Stretches a fourth-order seed `(b_1, d_1, c_1)` over a larger array.
///
/// Gain/loss magnitudes are interpolated linearly from the edge value `b_1`
/// to the inner value `d_1`; if the two have opposite signs the stretched
/// profile alternates. Real parts go linearly from `0` at the edge to `c_1`
/// at the centre. Everything is multiplied by `scale`.
pub fn extend_seed(seed4: &[f64; 3], order: usize, scale: f64) -> Result<Vec<f64>, EpError> {
    let problem = EpProblem::leading(order)?;
    let [b_edge, b_inner, c_inner] = *seed4;
    let n = problem.gain_loss_count();
    let m = order - n;
    let alternating = b_edge * b_inner < 0.0;
    let mags = interpolate((b_edge.abs(), b_inner.abs()), n);
    let sign0 = if b_edge < 0.0 { -1.0 } else { 1.0 };
    let b: Vec<f64> = mags
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let s = if alternating && i % 2 == 1 { -sign0 } else { sign0 };
            s * v * scale
        })
        .collect();
    let a = interpolate((0.0, c_inner), m);
    let mut u = b;
    u.extend(a[1..].iter().map(|v| v * scale));
    Ok(u)
}

/// Default ladder of seed amplitudes tried by [`extend_family`].
pub const EXTENSION_SCALES: [f64; 7] = [1.0, 1.25, 1.5, 1.75, 2.0, 2.5, 3.0];

/// Newton runs from stretched copies of a fourth-order family at each of the
/// given scales; accepted solutions are merged into families.
pub fn extend_family(
    seed4: &[f64; 3],
    order: usize,
    scales: &[f64],
    cfg: &SolverConfig,
) -> Result<Vec<EpSolution>, EpError> {
    let problem = EpProblem::leading(order)?;
    let mut found = Vec::new();
    for &s in scales {
        let start = extend_seed(seed4, order, s)?;
        if let Ok(sol) = newton_solve(&problem, &start, cfg) {
            if sol.is_accepted() {
                found.push(sol);
            }
        }
    }
    Ok(merge_families(found, cfg.dedupe_distance))
}
