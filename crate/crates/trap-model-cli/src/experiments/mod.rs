//! The experiment registry: each experiment validates its configuration,
//! runs deterministically for a `(config, master_seed)` pair, and produces
//! a `RunReport` plus data/plot files.

mod aging;
mod coarse;
mod fd;
mod limit;
mod potential;
mod walks;

use std::path::PathBuf;
use std::time::Instant;

use trap_model::lattice::Site;
use trap_model::rng::Stream;
use trap_model::traps::TrapSets;

use crate::config::{Experiment, ExperimentConfig};
use crate::report::RunReport;

pub struct RunContext {
    pub pool: rayon::ThreadPool,
    pub out_dir: PathBuf,
}

#[derive(Debug)]
pub enum RunError {
    Usage(String),
    Failed(trap_model::Error),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Usage(msg) => write!(f, "usage error: {msg}"),
            RunError::Failed(e) => match e {
                trap_model::Error::Capacity { sites, limit } => write!(
                    f,
                    "capacity error: {sites} sites exceed the exact-solve limit {limit}; \
                     reduce the radius or switch the experiment to its Monte Carlo method"
                ),
                other => write!(f, "{other}"),
            },
        }
    }
}

impl From<trap_model::Error> for RunError {
    fn from(e: trap_model::Error) -> Self {
        RunError::Failed(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Usage(format!("io: {e}"))
    }
}

pub fn run(
    experiment: Experiment,
    cfg: &ExperimentConfig,
    ctx: &RunContext,
) -> Result<RunReport, RunError> {
    cfg.validate(experiment).map_err(RunError::Usage)?;
    let start = Instant::now();
    let mut report = match experiment {
        Experiment::EnvTail => walks::env_tail(cfg, ctx)?,
        Experiment::WalkBasics => walks::walk_basics(cfg, ctx)?,
        Experiment::ClockMarginal => limit::clock_marginal(cfg, ctx)?,
        Experiment::FkCharfn => limit::fk_charfn(cfg, ctx)?,
        Experiment::FkSelfsim => limit::fk_selfsim(cfg, ctx)?,
        Experiment::Aging => aging::aging(cfg, ctx)?,
        Experiment::CoarseLemma21 => coarse::coarse_lemma21(cfg, ctx)?,
        Experiment::CoarseLemma24 => coarse::coarse_lemma24(cfg, ctx)?,
        Experiment::Displacement => coarse::displacement(cfg, ctx)?,
        Experiment::GreenFree => potential::green_free_experiment(cfg, ctx)?,
        Experiment::GreenBall => potential::green_ball_experiment(cfg, ctx)?,
        Experiment::HittingBounds => potential::hitting_bounds(cfg, ctx)?,
        Experiment::FdLimit => fd::fd_limit(cfg, ctx)?,
        Experiment::CtrwCompare => limit::ctrw_compare(cfg, ctx)?,
    };
    report.wall_clock_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Draw `count` distinct safe-interior sites, uniformly from the interior
/// ball, by rejection. Deterministic for a fixed stream.
pub(crate) fn sample_interior_sites<const D: usize>(
    sets: &TrapSets<D>,
    count: usize,
    stream: &mut Stream,
) -> Result<Vec<Site<D>>, trap_model::Error> {
    let radius = sets.env().region_radius() - sets.scales().rho - 2.0;
    if radius < 1.0 {
        return Err(trap_model::Error::Precondition(
            "region too small for interior sampling".into(),
        ));
    }
    let mut out = Vec::with_capacity(count);
    let mut guard = 0usize;
    while out.len() < count {
        guard += 1;
        if guard > count * 10_000 {
            return Err(trap_model::Error::Precondition(
                "safe-interior sampling rejected too often".into(),
            ));
        }
        let mut x = [0i64; D];
        for c in x.iter_mut() {
            *c = ((stream.next_f64() * 2.0 - 1.0) * radius).round() as i64;
        }
        if (trap_model::lattice::norm2(&x) as f64).sqrt() > radius {
            continue;
        }
        if sets.in_safe_interior(&x)? && !out.contains(&x) {
            out.push(x);
        }
    }
    Ok(out)
}

/// Mean and 4-standard-error band check helper for Monte Carlo rows.
pub(crate) fn mc_mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
