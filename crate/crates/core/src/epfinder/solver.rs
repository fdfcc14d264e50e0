use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{residual, EpError, EpProblem, Mode};
use crate::linalg::{kernel_dimension, solve_real, ComplexMatrix, C64};
use crate::model::GainLossProfile;

/// Residual norm below which a solution is accepted as an exceptional point.
pub const ACCEPT_RESIDUAL: f64 = 1e-10;

/// |b| below this counts as zero when fixing the overall gain/loss sign.
const SIGN_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iterations: usize,
    pub step_tolerance: f64,
    pub residual_tolerance: f64,
    /// Step-length reduction factor of the backtracking line search.
    pub backtrack: f64,
    /// Smallest damped step length tried before giving up.
    pub min_step: f64,
    pub starts: usize,
    /// Half-width of the uniform box the multi-start samples from.
    pub seed_box: f64,
    pub rng_seed: u64,
    pub dedupe_distance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            step_tolerance: 1e-14,
            residual_tolerance: 1e-12,
            backtrack: 0.5,
            min_step: 1e-6,
            starts: 500,
            seed_box: 3.0,
            rng_seed: 0,
            dedupe_distance: 1e-6,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), EpError> {
        let positive = [
            self.step_tolerance,
            self.residual_tolerance,
            self.min_step,
            self.seed_box,
            self.dedupe_distance,
        ];
        if self.max_iterations == 0
            || self.starts == 0
            || positive.iter().any(|v| !(*v > 0.0 && v.is_finite()))
            || !(self.backtrack > 0.0 && self.backtrack < 1.0)
        {
            return Err(EpError::InvalidConfig(format!("{self:?}")));
        }
        Ok(())
    }
}

/// A converged exceptional point.
///
/// In leading mode `a`, `b` hold first-order coefficients (`a_1 = 0`) and
/// `gamma` is the first-order eigenvalue; in full mode they are the material
/// parameters at `epsilon` (`a_1 = 1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpSolution {
    pub order: usize,
    pub mode: Mode,
    pub epsilon: f64,
    pub gamma: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub residual_norm: f64,
    pub kernel_dim: usize,
    pub family_id: usize,
}

impl EpSolution {
    pub fn problem(&self) -> Result<EpProblem, EpError> {
        EpProblem::new(self.order, self.mode, self.epsilon)
    }

    pub fn profile(&self) -> GainLossProfile {
        GainLossProfile {
            n: self.order,
            a: self.a.clone(),
            b: self.b.clone(),
        }
    }

    pub fn unknowns(&self) -> Vec<f64> {
        self.problem()
            .map(|p| p.compress(&self.a, &self.b))
            .unwrap_or_default()
    }

    pub fn matrix(&self) -> Result<ComplexMatrix, EpError> {
        self.problem()?.matrix(&self.a, &self.b)
    }

    pub fn is_accepted(&self) -> bool {
        self.residual_norm <= ACCEPT_RESIDUAL && self.kernel_dim == 1
    }

    /// Leading-mode gain/loss half `b_1..b_n`.
    pub fn gain_loss_half(&self) -> &[f64] {
        &self.b[..self.order / 2]
    }
}

/// Failed Newton run.
#[derive(Debug, Clone, PartialEq)]
pub struct NonConvergence {
    pub last_iterate: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub reason: &'static str,
}

fn residual_norm(problem: &EpProblem, x: &[f64]) -> Result<(Vec<f64>, f64), EpError> {
    let r = residual(problem, x)?;
    let norm = r.norm();
    Ok((r.values, norm))
}

fn jacobian(problem: &EpProblem, x: &[f64], r0: &[f64]) -> Result<Vec<f64>, EpError> {
    let n = x.len();
    let mut jac = vec![0.0; n * n];
    let mut xp = x.to_vec();
    for j in 0..n {
        let h = 1e-7 * (1.0 + x[j].abs());
        xp[j] = x[j] + h;
        let step = xp[j] - x[j];
        let r = residual(problem, &xp)?.values;
        for i in 0..n {
            jac[i * n + j] = (r[i] - r0[i]) / step;
        }
        xp[j] = x[j];
    }
    Ok(jac)
}

fn fail(x: Vec<f64>, norm: f64, iterations: usize, reason: &'static str) -> EpError {
    EpError::NonConvergence(Box::new(NonConvergence {
        last_iterate: x,
        residual_norm: norm,
        iterations,
        reason,
    }))
}

/// Damped Newton iteration with a forward-difference Jacobian.
///
/// Once the residual drops below `residual_tolerance` up to three undamped
/// steps are taken while they keep improving it.
pub fn newton_solve(problem: &EpProblem, start: &[f64], cfg: &SolverConfig) -> Result<EpSolution, EpError> {
    if start.len() != problem.unknown_count() {
        return Err(EpError::UnknownLength {
            expected: problem.unknown_count(),
            found: start.len(),
        });
    }
    let mut x = start.to_vec();
    let (mut r, mut norm) = residual_norm(problem, &x)?;
    let mut iterations = 0;
    loop {
        if norm < cfg.residual_tolerance {
            polish(problem, &mut x, &mut r, &mut norm);
            return finish(problem, x, norm);
        }
        if iterations >= cfg.max_iterations {
            return Err(fail(x, norm, iterations, "iteration cap reached"));
        }
        iterations += 1;
        let jac = jacobian(problem, &x, &r)?;
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let Ok(dx) = solve_real(&jac, &rhs) else {
            return Err(fail(x, norm, iterations, "singular Jacobian"));
        };
        let mut t = 1.0;
        let accepted = loop {
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + t * d).collect();
            if let Ok((rt, nt)) = residual_norm(problem, &trial) {
                if nt.is_finite() && nt < norm {
                    break Some((trial, rt, nt));
                }
            }
            t *= cfg.backtrack;
            if t < cfg.min_step {
                break None;
            }
        };
        let Some((trial, rt, nt)) = accepted else {
            return Err(fail(x, norm, iterations, "line search exhausted"));
        };
        let step = t * dx.iter().map(|d| d * d).sum::<f64>().sqrt();
        let scale = 1.0 + x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x = trial;
        r = rt;
        norm = nt;
        if step <= cfg.step_tolerance * scale && norm >= cfg.residual_tolerance {
            return Err(fail(x, norm, iterations, "stagnated"));
        }
    }
}

fn polish(problem: &EpProblem, x: &mut Vec<f64>, r: &mut Vec<f64>, norm: &mut f64) {
    for _ in 0..3 {
        if *norm == 0.0 {
            return;
        }
        let Ok(jac) = jacobian(problem, x, r) else { return };
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let Ok(dx) = solve_real(&jac, &rhs) else { return };
        let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + d).collect();
        match residual_norm(problem, &trial) {
            Ok((rt, nt)) if nt < *norm => {
                *x = trial;
                *r = rt;
                *norm = nt;
            }
            _ => return,
        }
    }
}

/// Flips the overall gain/loss sign so the first nonzero `b` is positive.
pub fn canonicalize(problem: &EpProblem, unknowns: &mut [f64]) {
    let n = problem.gain_loss_count();
    if let Some(first) = unknowns[..n].iter().find(|b| b.abs() > SIGN_THRESHOLD) {
        if *first < 0.0 {
            for b in &mut unknowns[..n] {
                *b = -*b;
            }
        }
    }
}

fn finish(problem: &EpProblem, mut x: Vec<f64>, norm: f64) -> Result<EpSolution, EpError> {
    canonicalize(problem, &mut x);
    let (a, b) = problem.expand(&x)?;
    let gamma = problem.gamma(&a);
    let m = problem.matrix(&a, &b)?;
    let kernel_dim = kernel_dimension(&m, C64::new(gamma, 0.0), problem.kernel_tolerance())?;
    Ok(EpSolution {
        order: problem.order(),
        mode: problem.mode(),
        epsilon: problem.epsilon(),
        gamma,
        a,
        b,
        residual_norm: norm,
        kernel_dim,
        family_id: 0,
    })
}

/// Uniform random starts in the seed box, drawn sequentially from one seeded
/// stream. Full-mode starts are sampled in first-order coordinates and
/// mapped through `b = epsilon b_1`, `a = 1 + epsilon a_1`.
pub fn multistart_points(problem: &EpProblem, cfg: &SolverConfig) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let k = problem.unknown_count();
    let n = problem.gain_loss_count();
    (0..cfg.starts)
        .map(|_| {
            let u: Vec<f64> = (0..k).map(|_| rng.gen_range(-cfg.seed_box..=cfg.seed_box)).collect();
            match problem.mode() {
                Mode::Leading => u,
                Mode::Full => {
                    let e = problem.epsilon();
                    u.iter()
                        .enumerate()
                        .map(|(i, v)| if i < n { e * v } else { 1.0 + e * v })
                        .collect()
                }
            }
        })
        .collect()
}

/// Multi-start Newton followed by a deterministic merge of the accepted
/// solutions into families.
pub fn enumerate_families(problem: &EpProblem, cfg: &SolverConfig) -> Result<Vec<EpSolution>, EpError> {
    cfg.validate()?;
    let starts = multistart_points(problem, cfg);
    let found: Vec<EpSolution> = starts
        .par_iter()
        .filter_map(|s| newton_solve(problem, s, cfg).ok())
        .filter(EpSolution::is_accepted)
        .collect();
    Ok(merge_families(found, cfg.dedupe_distance))
}

fn family_key(sol: &EpSolution) -> Vec<f64> {
    let u = sol.unknowns();
    let n = sol.order / 2;
    let mut key = u[n..].to_vec();
    key.extend_from_slice(&u[..n]);
    key
}

fn cmp_keys(x: &[f64], y: &[f64]) -> std::cmp::Ordering {
    x.iter()
        .zip(y)
        .map(|(a, b)| a.total_cmp(b))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

fn distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
}

/// Merges solutions closer than `dedupe_distance` (keeping the smallest
/// residual) and numbers the families in lexicographic order of
/// `(a-unknowns, b-unknowns)`. The result does not depend on input order.
pub fn merge_families(mut found: Vec<EpSolution>, dedupe_distance: f64) -> Vec<EpSolution> {
    found.sort_by(|x, y| {
        cmp_keys(&family_key(x), &family_key(y)).then(x.residual_norm.total_cmp(&y.residual_norm))
    });
    let mut reps: Vec<(Vec<f64>, EpSolution)> = Vec::new();
    for sol in found {
        let key = family_key(&sol);
        match reps.iter_mut().find(|(k, _)| distance(k, &key) < dedupe_distance) {
            Some((k, rep)) => {
                if sol.residual_norm < rep.residual_norm {
                    *k = key;
                    *rep = sol;
                }
            }
            None => reps.push((key, sol)),
        }
    }
    reps.sort_by(|(x, _), (y, _)| cmp_keys(x, y));
    reps.into_iter()
        .enumerate()
        .map(|(id, (_, mut sol))| {
            sol.family_id = id;
            sol
        })
        .collect()
}

/// Refines a leading-mode solution to a finite-`epsilon` solution, seeding
/// at `b = epsilon b_1`, `a = 1 + epsilon a_1`.
pub fn refine_full(leading: &EpSolution, epsilon: f64, cfg: &SolverConfig) -> Result<EpSolution, EpError> {
    if leading.mode != Mode::Leading {
        return Err(EpError::WrongMode(leading.mode));
    }
    let problem = EpProblem::full(leading.order, epsilon)?;
    let seed = first_order_seed(leading, epsilon);
    let mut sol = newton_solve(&problem, &seed, cfg)?;
    sol.family_id = leading.family_id;
    Ok(sol)
}

fn first_order_seed(leading: &EpSolution, epsilon: f64) -> Vec<f64> {
    let n = leading.order / 2;
    leading
        .unknowns()
        .iter()
        .enumerate()
        .map(|(i, v)| if i < n { epsilon * v } else { 1.0 + epsilon * v })
        .collect()
}

/// [`refine_full`] with a fallback continuation in `epsilon`: when the direct
/// refinement fails, `epsilon` is approached in `2, 4, ..., 64` equal steps,
/// each seeded from the previous finite-`epsilon` solution.
pub fn refine_full_continued(
    leading: &EpSolution,
    epsilon: f64,
    cfg: &SolverConfig,
) -> Result<EpSolution, EpError> {
    let direct = refine_full(leading, epsilon, cfg);
    if direct.is_ok() {
        return direct;
    }
    let mut last_err = direct.unwrap_err();
    let mut steps = 2;
    while steps <= 64 {
        match continuation(leading, epsilon, steps, cfg) {
            Ok(sol) => return Ok(sol),
            Err(e) => last_err = e,
        }
        steps *= 2;
    }
    Err(last_err)
}

fn continuation(leading: &EpSolution, epsilon: f64, steps: usize, cfg: &SolverConfig) -> Result<EpSolution, EpError> {
    let mut current = refine_full(leading, epsilon / steps as f64, cfg)?;
    for k in 2..=steps {
        let e = epsilon * k as f64 / steps as f64;
        let problem = EpProblem::full(leading.order, e)?;
        // rescale the previous deviation from the uniform array to the new epsilon
        let prev = current.unknowns();
        let ratio = e / current.epsilon;
        let n = leading.order / 2;
        let seed: Vec<f64> = prev
            .iter()
            .enumerate()
            .map(|(i, v)| if i < n { v * ratio } else { 1.0 + (v - 1.0) * ratio })
            .collect();
        current = newton_solve(&problem, &seed, cfg)?;
    }
    current.family_id = leading.family_id;
    Ok(current)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_order_from_half() {
        let p = EpProblem::leading(2).unwrap();
        let sol = newton_solve(&p, &[0.5], &SolverConfig::default()).unwrap();
        assert!((sol.b[0] - 1.0).abs() < 1e-12);
        assert_eq!(sol.kernel_dim, 1);
        assert!(sol.is_accepted());
    }

    #[test]
    fn negative_start_is_canonicalized() {
        let p = EpProblem::leading(2).unwrap();
        let sol = newton_solve(&p, &[-0.7], &SolverConfig::default()).unwrap();
        assert!(sol.b[0] > 0.0);
        assert_eq!(sol.b[1], -sol.b[0]);
    }

    #[test]
    fn wrong_start_length() {
        let p = EpProblem::leading(4).unwrap();
        assert!(matches!(
            newton_solve(&p, &[1.0], &SolverConfig::default()),
            Err(EpError::UnknownLength { .. })
        ));
    }

    #[test]
    fn singular_start_reports_nonconvergence() {
        // b_1 = 0 is a stationary point of the N = 2 residual
        let p = EpProblem::leading(2).unwrap();
        match newton_solve(&p, &[0.0], &SolverConfig::default()) {
            Err(EpError::NonConvergence(nc)) => {
                assert_eq!(nc.last_iterate, vec![0.0]);
                assert!((nc.residual_norm - 1.0).abs() < 1e-12);
            }
            other => panic!("expected nonconvergence, got {other:?}"),
        }
    }

    #[test]
    fn refine_requires_leading_input() {
        let p = EpProblem::full(2, 0.1).unwrap();
        let sol = newton_solve(&p, &[0.1], &SolverConfig::default()).unwrap();
        assert!(matches!(
            refine_full(&sol, 0.1, &SolverConfig::default()),
            Err(EpError::WrongMode(Mode::Full))
        ));
    }

    #[test]
    fn refine_at_zero_epsilon_is_the_uniform_array() {
        let cfg = SolverConfig::default();
        let lead = newton_solve(&EpProblem::leading(3).unwrap(), &[1.5, 0.5], &cfg).unwrap();
        let full = refine_full(&lead, 0.0, &cfg).unwrap();
        assert_eq!(full.a, vec![1.0; 3]);
        assert_eq!(full.b, vec![0.0; 3]);
        assert_eq!(full.residual_norm, 0.0);
    }

    #[test]
    fn merge_is_order_independent() {
        let cfg = SolverConfig {
            starts: 40,
            ..SolverConfig::default()
        };
        let p = EpProblem::leading(3).unwrap();
        let sols: Vec<EpSolution> = multistart_points(&p, &cfg)
            .iter()
            .filter_map(|s| newton_solve(&p, s, &cfg).ok())
            .filter(EpSolution::is_accepted)
            .collect();
        let mut reversed = sols.clone();
        reversed.reverse();
        assert_eq!(merge_families(sols, 1e-6), merge_families(reversed, 1e-6));
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let bad = SolverConfig {
            starts: 0,
            ..SolverConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
