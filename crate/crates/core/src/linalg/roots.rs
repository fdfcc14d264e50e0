use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::{char_poly, ComplexMatrix, LinalgError, Polynomial, C64};

/// Iteration cap for the simultaneous root iteration.
pub const MAX_ROOT_ITERATIONS: usize = 500;

const SETTLE_SWEEPS: usize = 5;

/// Groups of roots are merged into one multiple root when their spread is
/// within this factor of the rounding-noise radius for that multiplicity.
pub const CLUSTER_SAFETY: f64 = 4.0;

/// A group of numerically coalesced roots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootCluster {
    /// Multiple-root estimate: the mean of the members, polished as a simple
    /// root of the `(multiplicity - 1)`-th derivative.
    pub center: C64,
    pub multiplicity: usize,
    /// Largest distance of a member from the member mean.
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<C64>,
    pub converged: bool,
    pub iterations: usize,
    pub clusters: Vec<RootCluster>,
}

impl Spectrum {
    /// Diameter of the set of cluster centres. Zero when every root sits in a
    /// single cluster.
    pub fn cluster_diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, a) in self.clusters.iter().enumerate() {
            for b in &self.clusters[i + 1..] {
                d = d.max((a.center - b.center).norm());
            }
        }
        d
    }

    /// Largest pairwise distance between raw roots.
    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, a) in self.eigenvalues.iter().enumerate() {
            for b in &self.eigenvalues[i + 1..] {
                d = d.max((a - b).norm());
            }
        }
        d
    }

    pub fn sum(&self) -> C64 {
        self.eigenvalues.iter().sum()
    }

    /// Eigenvalues with every numerically coalesced group replaced by its
    /// polished centre, repeated `multiplicity` times.
    pub fn resolved(&self) -> Vec<C64> {
        let mut out: Vec<C64> = self
            .clusters
            .iter()
            .flat_map(|c| std::iter::repeat_n(c.center, c.multiplicity))
            .collect();
        out.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        out
    }
}

/// All roots of `p` by Aberth–Ehrlich simultaneous iteration.
pub fn poly_roots(p: &Polynomial) -> Result<Spectrum, LinalgError> {
    if p.degree() == 0 {
        return Err(LinalgError::ConstantPolynomial);
    }
    let coeffs = p.coeffs();
    // exact zero roots
    let zeros = coeffs.iter().take_while(|z| **z == C64::new(0.0, 0.0)).count();
    let reduced = Polynomial::new(coeffs[zeros..].to_vec())?;
    let (mut roots, converged, iterations) = aberth(&reduced);
    roots.extend(std::iter::repeat_n(C64::new(0.0, 0.0), zeros));
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let clusters = find_clusters(p, &roots);
    Ok(Spectrum {
        eigenvalues: roots,
        converged,
        iterations,
        clusters,
    })
}

/// Eigenvalues as roots of the characteristic polynomial.
pub fn eigenvalues(m: &ComplexMatrix) -> Result<Spectrum, LinalgError> {
    poly_roots(&char_poly(m)?)
}

fn aberth(p: &Polynomial) -> (Vec<C64>, bool, usize) {
    let n = p.degree();
    let c = p.coeffs();
    if n == 0 {
        return (Vec::new(), true, 0);
    }
    if n == 1 {
        return (vec![-c[0] / c[1]], true, 0);
    }
    let dp = p.derivative().expect("degree >= 2");
    let mut z = initial_guesses(p);
    let mut done = vec![false; n];
    // sweeps spent inside the rounding-noise region; a few extra corrections
    // there let coalesced roots settle symmetrically about their centre
    let mut settled = vec![0usize; n];
    let stop = 4.0 * (n as f64 + 1.0) * f64::EPSILON;

    for iter in 1..=MAX_ROOT_ITERATIONS {
        for k in 0..n {
            if done[k] {
                continue;
            }
            let (v, mag) = p.eval_with_magnitude(z[k]);
            if v.norm() == 0.0 {
                done[k] = true;
                continue;
            }
            if v.norm() <= stop * mag {
                settled[k] += 1;
                if settled[k] > SETTLE_SWEEPS {
                    done[k] = true;
                    continue;
                }
            }
            let d = dp.eval(z[k]);
            let mut repulsion = C64::new(0.0, 0.0);
            for j in 0..n {
                if j != k {
                    let diff = z[k] - z[j];
                    if diff.norm() > 0.0 {
                        repulsion += diff.inv();
                    }
                }
            }
            let step = if d.norm() == 0.0 {
                // stationary point: nudge off it
                C64::from_polar(1e-8 * (1.0 + z[k].norm()), 0.7 + k as f64)
            } else {
                let w = v / d;
                let denom = C64::new(1.0, 0.0) - w * repulsion;
                if denom.norm() == 0.0 {
                    w
                } else {
                    w / denom
                }
            };
            z[k] -= step;
            if step.norm() <= f64::EPSILON * z[k].norm() {
                done[k] = true;
            }
        }
        if done.iter().all(|&d| d) {
            return (z, true, iter);
        }
    }
    (z, false, MAX_ROOT_ITERATIONS)
}

fn initial_guesses(p: &Polynomial) -> Vec<C64> {
    let n = p.degree();
    let c = p.coeffs();
    let lead = c[n];
    let center = -c[n - 1] / (lead * n as f64);
    let radius = (p.eval(center) / lead).norm().powf(1.0 / n as f64);
    // upper bound on root moduli around the centre (Fujiwara-style, on the
    // unshifted coefficients) keeps the circle sensible when p(center) ~ 0
    let bound = (0..n)
        .map(|k| (c[k] / lead).norm().powf(1.0 / (n - k) as f64))
        .fold(0.0, f64::max);
    let radius = if radius.is_finite() && radius > 0.0 {
        radius
    } else {
        1e-3 * (1.0 + bound)
    };
    (0..n)
        .map(|k| center + C64::from_polar(radius, TAU * k as f64 / n as f64 + 0.4))
        .collect()
}

fn find_clusters(p: &Polynomial, roots: &[C64]) -> Vec<RootCluster> {
    // agglomerative: merge the closest pair of groups while the merged group
    // is still no wider than rounding noise allows for a root of its size
    let mut groups: Vec<Vec<usize>> = (0..roots.len()).map(|i| vec![i]).collect();
    loop {
        let mut candidates = Vec::new();
        for a in 0..groups.len() {
            for b in a + 1..groups.len() {
                let d = groups[a]
                    .iter()
                    .flat_map(|&i| groups[b].iter().map(move |&j| (roots[i] - roots[j]).norm()))
                    .fold(f64::INFINITY, f64::min);
                candidates.push((d, a, b));
            }
        }
        candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
        let merge = candidates.into_iter().find(|&(_, a, b)| {
            let members: Vec<usize> = groups[a].iter().chain(&groups[b]).copied().collect();
            unresolvable(p, roots, &members)
        });
        match merge {
            Some((_, a, b)) => {
                let moved = groups.remove(b);
                groups[a].extend(moved);
                groups[a].sort_unstable();
            }
            None => break,
        }
    }
    groups
        .into_iter()
        .map(|members| {
            let k = members.len();
            let mean = members.iter().map(|&i| roots[i]).sum::<C64>() / k as f64;
            let radius = members
                .iter()
                .map(|&i| (roots[i] - mean).norm())
                .fold(0.0, f64::max);
            let center = if k > 1 {
                polish_multiple_root(p, mean, k, radius)
            } else {
                mean
            };
            RootCluster {
                center,
                multiplicity: k,
                radius,
            }
        })
        .collect()
}

/// Whether the given roots are indistinguishable from one root of
/// multiplicity `k = members.len()`: their spread is within
/// `CLUSTER_SAFETY` times the radius at which `|t_k| r^k`, with `t_k` the
/// `k`-th Taylor coefficient at their mean, drops to the stopping threshold
/// of the root iteration.
fn unresolvable(p: &Polynomial, roots: &[C64], members: &[usize]) -> bool {
    let k = members.len();
    let mean = members.iter().map(|&i| roots[i]).sum::<C64>() / k as f64;
    let radius = members.iter().map(|&i| (roots[i] - mean).norm()).fold(0.0, f64::max);
    if radius == 0.0 {
        return true;
    }
    let (_, mag) = p.eval_with_magnitude(mean);
    let stop = 4.0 * (p.degree() as f64 + 1.0) * f64::EPSILON * mag;
    let tk = taylor_coefficients(p, mean)[k].norm();
    radius <= CLUSTER_SAFETY * (stop / tk).powf(1.0 / k as f64)
}

/// Coefficients of `p(center + h)` in powers of `h`, by repeated synthetic
/// division.
fn taylor_coefficients(p: &Polynomial, center: C64) -> Vec<C64> {
    let mut c = p.coeffs().to_vec();
    let n = c.len();
    for k in 0..n {
        for j in (k..n - 1).rev() {
            let carry = c[j + 1] * center;
            c[j] += carry;
        }
    }
    c
}

/// A k-fold root is a simple root of the (k-1)-th derivative; Newton on that
/// derivative recovers it far more accurately than the scattered members.
fn polish_multiple_root(p: &Polynomial, start: C64, k: usize, radius: f64) -> C64 {
    let mut q = p.clone();
    for _ in 0..k - 1 {
        match q.derivative() {
            Some(d) => q = d,
            None => return start,
        }
    }
    let Some(dq) = q.derivative() else {
        return start;
    };
    let reach = 10.0 * radius + 1e-12 * (1.0 + start.norm());
    let mut z = start;
    let mut best = (q.eval(z).norm(), z);
    for _ in 0..30 {
        let d = dq.eval(z);
        if d.norm() == 0.0 {
            break;
        }
        let step = q.eval(z) / d;
        z -= step;
        if (z - start).norm() > reach {
            break;
        }
        let r = q.eval(z).norm();
        if r < best.0 {
            best = (r, z);
        }
        if step.norm() <= f64::EPSILON * (1.0 + z.norm()) {
            break;
        }
    }
    best.1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn taylor_shift_of_square() {
        let p = Polynomial::from_real(&[1.0, -2.0, 1.0]).unwrap();
        let t = taylor_coefficients(&p, C64::new(1.0, 0.0));
        assert_eq!(t, vec![C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
    }

    #[test]
    fn close_but_distinct_roots_stay_separate() {
        let roots = [C64::new(0.5, 0.0), C64::new(0.5 + 1e-4, 0.0), C64::new(2.0, 0.0)];
        let s = poly_roots(&Polynomial::from_roots(&roots, C64::new(1.0, 0.0))).unwrap();
        assert_eq!(s.clusters.len(), 3);
        assert!((s.sum() - roots.iter().sum::<C64>()).norm() < 1e-12);
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn contains(roots: &[C64], target: C64, tol: f64) -> bool {
        roots.iter().any(|r| (r - target).norm() < tol)
    }

    #[test]
    fn difference_of_squares() {
        let s = poly_roots(&Polynomial::from_real(&[-1.0, 0.0, 1.0]).unwrap()).unwrap();
        assert!(s.converged);
        assert!(contains(&s.eigenvalues, c(1.0, 0.0), 1e-14));
        assert!(contains(&s.eigenvalues, c(-1.0, 0.0), 1e-14));
    }

    #[test]
    fn cube_roots_of_unity() {
        let s = poly_roots(&Polynomial::from_real(&[-1.0, 0.0, 0.0, 1.0]).unwrap()).unwrap();
        assert_eq!(s.eigenvalues.len(), 3);
        for k in 0..3 {
            let w = C64::from_polar(1.0, TAU * k as f64 / 3.0);
            assert!(contains(&s.eigenvalues, w, 1e-13));
        }
        for r in &s.eigenvalues {
            assert!((r.norm() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn triple_root_is_reported_as_one_cluster() {
        let gamma = 1.0161;
        let p = Polynomial::from_roots(&[c(gamma, 0.0); 3], c(1.0, 0.0));
        let s = poly_roots(&p).unwrap();
        assert!(s.converged);
        assert_eq!(s.clusters.len(), 1);
        let cl = &s.clusters[0];
        assert_eq!(cl.multiplicity, 3);
        assert!((cl.center - c(gamma, 0.0)).norm() < 1e-4);
        // rounding in the expanded coefficients is ~u * max|coeff|; a triple
        // root spreads by its cube root
        let residual = 4.0 * f64::EPSILON * p.max_abs_coeff();
        let bound = 10.0 * residual.powf(1.0 / 3.0);
        assert!(cl.radius <= bound, "radius {} bound {}", cl.radius, bound);
        assert_eq!(s.cluster_diameter(), 0.0);
    }

    #[test]
    fn residuals_are_small() {
        let p = Polynomial::new(vec![c(2.0, -1.0), c(0.5, 0.0), c(-3.0, 2.0), c(0.0, 1.0), c(1.0, 0.0)]).unwrap();
        let s = poly_roots(&p).unwrap();
        for r in &s.eigenvalues {
            assert!(p.eval(*r).norm() <= 1e-10 * p.max_abs_coeff());
        }
    }

    #[test]
    fn zero_roots_are_exact() {
        // x^2 (x - 2)
        let s = poly_roots(&Polynomial::from_real(&[0.0, 0.0, -2.0, 1.0]).unwrap()).unwrap();
        assert_eq!(s.eigenvalues.iter().filter(|z| z.norm() == 0.0).count(), 2);
        assert!(contains(&s.eigenvalues, c(2.0, 0.0), 1e-14));
    }

    #[test]
    fn constant_polynomial_has_no_roots() {
        assert!(matches!(
            poly_roots(&Polynomial::from_real(&[3.0]).unwrap()),
            Err(LinalgError::ConstantPolynomial)
        ));
    }

    #[test]
    fn diagonal_and_jordan_eigenvalues() {
        let d = ComplexMatrix::from_diagonal(&[c(1.0, 1.0), c(2.0, 0.0), c(1.0, -1.0)]).unwrap();
        let s = eigenvalues(&d).unwrap();
        for z in [c(1.0, 1.0), c(2.0, 0.0), c(1.0, -1.0)] {
            assert!(contains(&s.eigenvalues, z, 1e-12));
        }
        let j = ComplexMatrix::from_rows(&[vec![c(1.0, 0.0), c(1.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]])
            .unwrap();
        let s = eigenvalues(&j).unwrap();
        assert!(s.eigenvalues.iter().all(|z| (z - c(1.0, 0.0)).norm() < 1e-7));
        assert_eq!(s.clusters.len(), 1);
        assert_eq!(s.clusters[0].multiplicity, 2);
    }
}
