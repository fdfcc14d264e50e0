use super::{ComplexMatrix, LinalgError, C64};

pub const DEFAULT_RANK_TOLERANCE: f64 = 1e-8;

/// `n - rank(m - shift I)`, with the rank counted by Gaussian elimination
/// under complete pivoting. A pivot counts as zero once it drops below
/// `rel_tol` times the first (largest) pivot.
pub fn kernel_dimension(m: &ComplexMatrix, shift: C64, rel_tol: f64) -> Result<usize, LinalgError> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(LinalgError::InvalidTolerance(rel_tol));
    }
    let n = m.dim();
    let a = m.shifted(shift);
    Ok(n - numerical_rank(&a, rel_tol))
}

fn numerical_rank(m: &ComplexMatrix, rel_tol: f64) -> usize {
    let n = m.dim();
    let mut a: Vec<C64> = m.entries().to_vec();
    let mut first_pivot = None;
    for step in 0..n {
        let mut best = (0.0, step, step);
        for i in step..n {
            for j in step..n {
                let v = a[i * n + j].norm();
                if v > best.0 {
                    best = (v, i, j);
                }
            }
        }
        let (mag, pi, pj) = best;
        let reference = *first_pivot.get_or_insert(mag);
        if mag == 0.0 || mag < rel_tol * reference {
            return step;
        }
        if pi != step {
            for j in 0..n {
                a.swap(step * n + j, pi * n + j);
            }
        }
        if pj != step {
            for i in 0..n {
                a.swap(i * n + step, i * n + pj);
            }
        }
        let pivot = a[step * n + step];
        for i in step + 1..n {
            let factor = a[i * n + step] / pivot;
            if factor.norm() == 0.0 {
                continue;
            }
            for j in step..n {
                let v = a[step * n + j];
                a[i * n + j] -= factor * v;
            }
        }
    }
    n
}

/// Solves the dense real system `a x = rhs` (`a` row-major, `n x n`) by
/// Gaussian elimination with partial pivoting.
pub fn solve_real(a: &[f64], rhs: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let n = rhs.len();
    if a.len() != n * n {
        return Err(LinalgError::ShapeMismatch {
            expected: n * n,
            found: a.len(),
        });
    }
    let mut a = a.to_vec();
    let mut x = rhs.to_vec();
    let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return Err(LinalgError::Singular);
    }
    for col in 0..n {
        let p = (col..n)
            .max_by(|&r, &s| a[r * n + col].abs().total_cmp(&a[s * n + col].abs()))
            .unwrap();
        if a[p * n + col].abs() <= 1e-14 * scale {
            return Err(LinalgError::Singular);
        }
        if p != col {
            for j in 0..n {
                a.swap(col * n + j, p * n + j);
            }
            x.swap(col, p);
        }
        let pivot = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / pivot;
            if f == 0.0 {
                continue;
            }
            for j in col..n {
                a[r * n + j] -= f * a[col * n + j];
            }
            x[r] -= f * x[col];
        }
    }
    for col in (0..n).rev() {
        let mut s = x[col];
        for j in col + 1..n {
            s -= a[col * n + j] * x[j];
        }
        x[col] = s / a[col * n + col];
    }
    Ok(x)
}
