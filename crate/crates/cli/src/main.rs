use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ptep_core::epfinder::{
    enumerate_families, refine_full_continued, verify_solution, EpProblem, EpSolution, Mode, SolverConfig,
};
use ptep_core::linalg::C64;
use ptep_core::model::PhysicalConstants;
use ptep_core::sensing::{log_grid, split_at_ep, PerturbationSpec, SensingError};
use ptep_core::spectra::{coalescence_exponent, sweep, sweep_leading, tau_grid, to_frequencies, Trajectory};

#[derive(Debug, Parser)]
#[command(name = "ptep", version, about = "Exceptional points of PT-symmetric resonator arrays")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed of the multi-start sampler.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Enumerate exceptional-point families and write them as JSON.
    FindEp(FindEp),
    /// Sweep the gain/loss amplitude of a stored EP and write the trajectory CSV.
    Sweep(Sweep),
    /// Map the capacitance eigenvalues of a stored EP to resonant frequencies.
    Frequencies(Frequencies),
    /// Perturb one site of a stored EP and fit the eigenvalue splitting.
    Sense(Sense),
    /// Re-check every invariant of the solutions in an EP file.
    Verify(Verify),
}

#[derive(Debug, Args)]
struct FindEp {
    #[arg(long)]
    order: usize,
    #[arg(long, default_value = "leading")]
    mode: Mode,
    /// Dilution parameter; required in full mode.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 500)]
    starts: usize,
    /// Half-width of the multi-start sampling box.
    #[arg(long, default_value_t = 3.0)]
    seed_box: f64,
}

#[derive(Debug, Args)]
struct Source {
    /// JSON file written by `find-ep`.
    #[arg(long)]
    ep_file: PathBuf,
    #[arg(long, default_value_t = 0)]
    family: usize,
}

#[derive(Debug, Args)]
struct Sweep {
    #[command(flatten)]
    source: Source,
    #[arg(long, default_value_t = 0.0)]
    tau_min: f64,
    #[arg(long, default_value_t = 2.0)]
    tau_max: f64,
    #[arg(long, default_value_t = 401)]
    steps: usize,
}

#[derive(Debug, Args)]
struct Frequencies {
    #[command(flatten)]
    source: Source,
    /// Gain/loss amplitude at which the spectrum is taken.
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    /// Dilution parameter used to form `I + epsilon C_1` for leading-mode solutions.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    a_scale: Option<f64>,
    #[arg(long)]
    volume: Option<f64>,
}

#[derive(Debug, Args)]
struct Sense {
    #[command(flatten)]
    source: Source,
    /// Perturbed resonator, counted from 1.
    #[arg(long)]
    site: usize,
    #[arg(long, default_value_t = 1e-8)]
    s_min: f64,
    #[arg(long, default_value_t = 1e-3)]
    s_max: f64,
    #[arg(long, default_value_t = 25)]
    points: usize,
}

#[derive(Debug, Args)]
struct Verify {
    #[arg(long)]
    ep_file: PathBuf,
}

/// Failure classes of the exit-code contract.
#[derive(Debug)]
enum Failure {
    /// Invalid flags or unreadable input: exit 1.
    Usage(String),
    /// Valid request without a result: exit 2.
    NoResult(String),
}

impl Failure {
    fn usage(e: impl fmt::Display) -> Self {
        Failure::Usage(e.to_string())
    }

    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::NoResult(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::NoResult(m) => f.write_str(m),
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}

fn run(cli: Cli) -> Outcome {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.global.threads)
        .build_global()
        .map_err(Failure::usage)?;
    let g = &cli.global;
    match &cli.command {
        Command::FindEp(c) => find_ep(g, c),
        Command::Sweep(c) => run_sweep(g, c),
        Command::Frequencies(c) => frequencies(g, c),
        Command::Sense(c) => sense(g, c),
        Command::Verify(c) => verify(c),
    }
}

/// Writes the payload to `--out` (reporting the summary on stdout) or, without
/// `--out`, the payload to stdout and the summary to stderr.
fn emit(g: &Global, payload: &str, summary: &str) -> Outcome {
    match &g.out {
        Some(path) => {
            fs::write(path, payload).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?;
            if !summary.is_empty() {
                println!("{summary}");
            }
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(payload.as_bytes()).map_err(Failure::usage)?;
            if !summary.is_empty() {
                eprintln!("{summary}");
            }
        }
    }
    Ok(())
}

fn find_ep(g: &Global, c: &FindEp) -> Outcome {
    let cfg = SolverConfig {
        starts: c.starts,
        seed_box: c.seed_box,
        rng_seed: g.seed,
        ..SolverConfig::default()
    };
    cfg.validate().map_err(Failure::usage)?;
    let leading = EpProblem::leading(c.order).map_err(Failure::usage)?;
    let epsilon = match (c.mode, c.epsilon) {
        (Mode::Full, None) => return Err(Failure::usage("full mode requires --epsilon")),
        (Mode::Full, Some(e)) => Some(EpProblem::full(c.order, e).map_err(Failure::usage)?.epsilon()),
        (Mode::Leading, Some(_)) => return Err(Failure::usage("--epsilon only applies to full mode")),
        (Mode::Leading, None) => None,
    };

    let families = enumerate_families(&leading, &cfg).map_err(Failure::usage)?;
    let solutions = match epsilon {
        None => families,
        Some(eps) => families
            .iter()
            .filter_map(|f| match refine_full_continued(f, eps, &cfg) {
                Ok(s) if s.is_accepted() => Some(s),
                Ok(s) => {
                    eprintln!("family {}: refinement residual {:.3e} not accepted", f.family_id, s.residual_norm);
                    None
                }
                Err(e) => {
                    eprintln!("family {}: {e}", f.family_id);
                    None
                }
            })
            .collect(),
    };
    if solutions.is_empty() {
        return Err(Failure::NoResult(format!("no exceptional point of order {} found", c.order)));
    }
    let mut json = serde_json::to_string_pretty(&solutions).map_err(Failure::usage)?;
    json.push('\n');
    emit(g, &json, &format!("families found: {}", solutions.len()))
}

fn load(path: &Path) -> Result<Vec<EpSolution>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("cannot parse {}: {e}", path.display())))
}

fn select(source: &Source) -> Result<EpSolution, Failure> {
    let all = load(&source.ep_file)?;
    all.into_iter()
        .find(|s| s.family_id == source.family)
        .ok_or_else(|| Failure::NoResult(format!("family {} not in {}", source.family, source.ep_file.display())))
}

fn trajectory(sol: &EpSolution, taus: &[f64]) -> Result<Trajectory, Failure> {
    let profile = sol.profile();
    match sol.mode {
        Mode::Leading => sweep_leading(&profile, taus),
        Mode::Full => sweep(&profile, sol.epsilon, taus),
    }
    .map_err(Failure::usage)
}

fn run_sweep(g: &Global, c: &Sweep) -> Outcome {
    if c.steps == 0 || !(c.tau_min <= c.tau_max) || c.tau_min < 0.0 || !c.tau_max.is_finite() {
        return Err(Failure::usage("need 0 ≤ tau-min ≤ tau-max and steps ≥ 1"));
    }
    let sol = select(&c.source)?;
    let taus = if c.steps == 1 || c.tau_min == c.tau_max {
        vec![c.tau_min]
    } else {
        tau_grid(c.tau_min, c.tau_max, c.steps)
    };
    let traj = trajectory(&sol, &taus)?;
    let mut summary = match traj.taus.iter().position(|t| *t == 1.0) {
        Some(k) => format!("gap at tau=1: {:.6e}", traj.coalescence_gap[k]),
        None => String::from("gap at tau=1: not sampled"),
    };
    if let Ok(fit) = coalescence_exponent(&traj, sol.order) {
        summary.push_str(&format!("\ncoalescence exponent: {:.4} (expected {:.4})", fit.slope, fit.expected));
    }
    emit(g, &traj.to_csv(), &summary)
}

fn frequencies(g: &Global, c: &Frequencies) -> Outcome {
    if !(c.tau >= 0.0 && c.tau.is_finite()) {
        return Err(Failure::usage("tau must be a finite non-negative number"));
    }
    let defaults = PhysicalConstants::default();
    let constants = PhysicalConstants {
        delta: c.delta.unwrap_or(defaults.delta),
        a_scale: c.a_scale.unwrap_or(defaults.a_scale),
        volume: c.volume.unwrap_or(defaults.volume),
    };
    constants.validate().map_err(Failure::usage)?;
    let sol = select(&c.source)?;
    let epsilon = match (sol.mode, c.epsilon) {
        (Mode::Leading, None) => return Err(Failure::usage("leading-mode solutions need --epsilon")),
        (Mode::Leading, Some(e)) if !(0.0..1.0).contains(&e) => {
            return Err(Failure::usage(format!("epsilon = {e} outside [0, 1)")))
        }
        (Mode::Leading, Some(e)) => e,
        (Mode::Full, Some(_)) => return Err(Failure::usage("--epsilon is fixed by a full-mode solution")),
        (Mode::Full, None) => sol.epsilon,
    };
    let row = &trajectory(&sol, &[c.tau])?.eigenvalues[0];
    let gammas: Vec<C64> = match sol.mode {
        Mode::Leading => row.iter().map(|z| 1.0 + epsilon * z).collect(),
        Mode::Full => row.clone(),
    };
    let map = to_frequencies(&gammas, &constants).map_err(Failure::usage)?;
    for w in constants.warnings() {
        eprintln!("warning: {w}");
    }
    let omega = map.omegas.iter().map(|w| format!("{:.6e}{:+.6e}i", w.re, w.im)).collect::<Vec<_>>();
    emit(g, &map.to_csv(), &format!("omega: {}", omega.join(", ")))
}

fn sense(g: &Global, c: &Sense) -> Outcome {
    if !(c.s_min > 0.0 && c.s_min < c.s_max && c.s_max.is_finite()) || c.points < 2 {
        return Err(Failure::usage("need 0 < s-min < s-max and points ≥ 2"));
    }
    let sol = select(&c.source)?;
    if c.site == 0 || c.site > sol.order {
        return Err(Failure::usage(format!("site must lie in 1..={} (got {})", sol.order, c.site)));
    }
    let spec = PerturbationSpec::diagonal_site(c.site - 1, log_grid(c.s_min, c.s_max, c.points))
        .map_err(Failure::usage)?;
    let m = sol.matrix().map_err(Failure::usage)?;
    let fit = split_at_ep(&m, sol.gamma, &spec).map_err(|e| match e {
        SensingError::InsufficientData { .. } => Failure::NoResult(e.to_string()),
        other => Failure::usage(other),
    })?;
    let summary = format!(
        "slope: {:.4} (expected {:.4}), r^2 = {:.6}",
        fit.slope,
        1.0 / sol.order as f64,
        fit.r_squared
    );
    emit(g, &fit.to_csv(sol.order), &summary)
}

fn verify(c: &Verify) -> Outcome {
    let sols = load(&c.ep_file)?;
    if sols.is_empty() {
        return Err(Failure::NoResult(format!("{} holds no solutions", c.ep_file.display())));
    }
    let reports: Vec<_> = sols.iter().map(verify_solution).collect();
    for r in &reports {
        print!("{r}");
    }
    let failed = reports.iter().filter(|r| !r.passed()).count();
    if failed > 0 {
        return Err(Failure::NoResult(format!("{failed} of {} solutions failed verification", reports.len())));
    }
    println!("all {} solutions verified", reports.len());
    Ok(())
}
