//! The embedded simple random walk, its clock process, the trap-model
//! trajectory obtained by time change, the annealed CTRW comparison walk,
//! the rescaled triple, and the aging estimator.
//!
//! The dynamics are simulated in discrete time: the walk `Y` steps uniformly
//! to one of the `2d` neighbors and the clock accumulates `e_k tau_{Y(k)}`
//! with fresh mean-one exponential marks, which is equal in law to the
//! continuous-time jump process and bit-for-bit reproducible.

use serde::Serialize;

use crate::env::Environment;
use crate::error::{Error, Result};
use crate::fd::{c_d_alpha, f_scale};
use crate::lattice::Site;
use crate::rng::Stream;
use crate::stats::StatsSummary;

/// One uniform nearest-neighbor step in place.
#[inline]
pub fn random_step<const D: usize>(pos: &mut Site<D>, stream: &mut Stream) {
    let dir = stream.next_below(2 * D as u64) as usize;
    let axis = dir >> 1;
    let sign = if dir & 1 == 0 { 1 } else { -1 };
    pos[axis] += sign;
}

/// When to stop the walk.
#[derive(Debug, Clone, Copy)]
pub enum StopRule {
    /// Run exactly this many steps.
    Steps(usize),
    /// Run until the walk first leaves the environment's region.
    ExitRegion,
    /// Run until the clock strictly exceeds this time.
    ClockBudget(f64),
}

/// Mark distribution for the clock increments. `Unit` is a testing hook
/// (`S(k) = sum tau` exactly); the model uses `Exponential`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarkMode {
    Exponential,
    Unit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TrajectoryKind {
    /// Quenched trap walk: waits are `e_k tau_{Y(k)}`.
    TrapWalk,
    /// Annealed comparison walk: waits are fresh heavy-tailed draws, and the
    /// recorded marks are the waits themselves.
    Ctrw,
}

/// A simulated trajectory: sites `Y(0..=K)`, marks `e_0..e_{K-1}`, and the
/// clock `S(0..=K)` with `S(k+1) - S(k) = e_k tau_{Y(k)}`.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord<const D: usize> {
    pub sites: Vec<Site<D>>,
    pub marks: Vec<f64>,
    pub clock: Vec<f64>,
    /// First index at which the walk is outside the region, when the stop
    /// rule watches for it.
    pub exit_step: Option<usize>,
    /// Step budget ran out before the stop condition fired.
    pub truncated: bool,
    pub kind: TrajectoryKind,
}

impl<const D: usize> TrajectoryRecord<D> {
    pub fn steps(&self) -> usize {
        self.marks.len()
    }

    pub fn total_clock(&self) -> f64 {
        *self.clock.last().unwrap()
    }
}

/// Simulate the trap walk from the origin with exponential marks.
pub fn run_walk<const D: usize>(
    env: &Environment<D>,
    max_steps: usize,
    stop: StopRule,
    stream: &mut Stream,
) -> Result<TrajectoryRecord<D>> {
    run_walk_with_marks(env, max_steps, stop, MarkMode::Exponential, stream)
}

/// As [`run_walk`] with an explicit mark mode.
pub fn run_walk_with_marks<const D: usize>(
    env: &Environment<D>,
    max_steps: usize,
    stop: StopRule,
    marks: MarkMode,
    stream: &mut Stream,
) -> Result<TrajectoryRecord<D>> {
    if max_steps == 0 {
        return Err(Error::Parameter("max_steps must be >= 1".into()));
    }
    let mut record = TrajectoryRecord {
        sites: vec![[0i64; D]],
        marks: Vec::new(),
        clock: vec![0.0],
        exit_step: None,
        truncated: false,
        kind: TrajectoryKind::TrapWalk,
    };
    let mut pos = [0i64; D];
    let mut time = 0.0f64;
    loop {
        match stop {
            StopRule::Steps(k) => {
                if record.marks.len() == k {
                    break;
                }
            }
            StopRule::ExitRegion => {
                if !env.contains(&pos) {
                    record.exit_step = Some(record.marks.len());
                    break;
                }
            }
            StopRule::ClockBudget(budget) => {
                if time > budget {
                    break;
                }
            }
        }
        if record.marks.len() == max_steps {
            record.truncated = true;
            break;
        }
        let tau = env.tau_at(&pos)?;
        let e = match marks {
            MarkMode::Exponential => stream.next_exp(),
            MarkMode::Unit => 1.0,
        };
        time += e * tau;
        random_step(&mut pos, stream);
        record.marks.push(e);
        record.clock.push(time);
        record.sites.push(pos);
    }
    Ok(record)
}

/// The annealed comparison walk: the same embedded walk, waits drawn fresh
/// from the exact heavy tail at every step (no quenched field).
pub fn ctrw_trajectory<const D: usize>(
    alpha: f64,
    steps: usize,
    stream: &mut Stream,
) -> Result<TrajectoryRecord<D>> {
    if steps == 0 {
        return Err(Error::Parameter("steps must be >= 1".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Parameter(format!("alpha must lie in (0,1), got {alpha}")));
    }
    let mut record = TrajectoryRecord {
        sites: vec![[0i64; D]],
        marks: Vec::with_capacity(steps),
        clock: vec![0.0],
        exit_step: None,
        truncated: false,
        kind: TrajectoryKind::Ctrw,
    };
    let mut pos = [0i64; D];
    let mut time = 0.0f64;
    for _ in 0..steps {
        let wait = stream.next_open01().powf(-1.0 / alpha);
        time += wait;
        random_step(&mut pos, stream);
        record.marks.push(wait);
        record.clock.push(time);
        record.sites.push(pos);
    }
    Ok(record)
}

/// Position of the annealed comparison walk at real time `t`, without
/// materializing the trajectory: steps until the waiting-time sum passes
/// `t` and returns the site occupied at that moment.
pub fn ctrw_position_at_time<const D: usize>(
    alpha: f64,
    t: f64,
    stream: &mut Stream,
) -> Result<Site<D>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Parameter(format!("alpha must lie in (0,1), got {alpha}")));
    }
    let mut pos = [0i64; D];
    let mut clock = 0.0f64;
    loop {
        let wait = stream.next_open01().powf(-1.0 / alpha);
        if clock + wait > t {
            return Ok(pos);
        }
        clock += wait;
        random_step(&mut pos, stream);
    }
}

/// The time-changed position `X(t) = Y(k)` for the unique `k` with
/// `S(k) <= t < S(k+1)` (left-closed), found by binary search.
pub fn position_at<const D: usize>(traj: &TrajectoryRecord<D>, t: f64) -> Result<Site<D>> {
    let horizon = traj.total_clock();
    if t >= horizon {
        return Err(Error::HorizonExceeded {
            requested: t,
            available: horizon,
        });
    }
    if t < 0.0 {
        return Err(Error::Parameter(format!("time must be >= 0, got {t}")));
    }
    // Largest k with S(k) <= t.
    let k = match traj
        .clock
        .binary_search_by(|s| s.partial_cmp(&t).unwrap())
    {
        Ok(exact) => exact,
        Err(insertion) => insertion - 1,
    };
    Ok(traj.sites[k])
}

/// The rescaled triple on a uniform grid over `[0, T]`.
#[derive(Debug, Clone)]
pub struct RescaledTriple<const D: usize> {
    pub grid: Vec<f64>,
    pub s_n: Vec<f64>,
    pub y_n: Vec<[f64; D]>,
    pub x_n: Vec<[f64; D]>,
    pub n_scale: f64,
    pub f_n: f64,
    pub c_d_alpha: f64,
}

/// Rescale a trajectory at time scale `N`:
/// `S_N(t) = S(floor(t f^2)) / N`, `Y_N(t) = sqrt(d) Y(floor(t f^2)) / f`,
/// and `X_N(t) = Y_N(S_N^{-1}(t))` where `S_N^{-1}(t) = inf{u : S_N(u) >= t}`
/// is the generalized inverse of the clock staircase at step resolution.
/// With this convention the time-change identity holds exactly at every
/// grid point and `X_N(0) = 0`; it agrees with `sqrt(d) X(tN) / f(N)` up to
/// a single embedded step, an `O(1/f(N))` difference.
pub fn rescale<const D: usize>(
    traj: &TrajectoryRecord<D>,
    n_scale: f64,
    alpha: f64,
    horizon: f64,
    grid_points: usize,
) -> Result<RescaledTriple<D>> {
    if grid_points < 2 {
        return Err(Error::Parameter("need at least 2 grid points".into()));
    }
    let f = f_scale(n_scale, D, alpha)?;
    let sqrt_d = (D as f64).sqrt();
    let steps_needed = (horizon * f * f).floor() as usize;
    if traj.steps() < steps_needed {
        return Err(Error::HorizonExceeded {
            requested: steps_needed as f64,
            available: traj.steps() as f64,
        });
    }
    if traj.total_clock() <= horizon * n_scale {
        return Err(Error::HorizonExceeded {
            requested: horizon * n_scale,
            available: traj.total_clock(),
        });
    }
    let grid: Vec<f64> = (0..grid_points)
        .map(|i| horizon * i as f64 / (grid_points - 1) as f64)
        .collect();
    let mut s_n = Vec::with_capacity(grid_points);
    let mut y_n = Vec::with_capacity(grid_points);
    let mut x_n = Vec::with_capacity(grid_points);
    for &t in &grid {
        let k = (t * f * f).floor() as usize;
        s_n.push(traj.clock[k] / n_scale);
        y_n.push(scale_site(&traj.sites[k], sqrt_d / f));
        // Generalized inverse of the full clock staircase:
        // k* = min{j : S(j) >= t N}; then X_N(t) = sqrt(d) Y(k*) / f.
        let target = t * n_scale;
        let k_star = traj.clock.partition_point(|&s| s < target);
        x_n.push(scale_site(&traj.sites[k_star], sqrt_d / f));
    }
    Ok(RescaledTriple {
        grid,
        s_n,
        y_n,
        x_n,
        n_scale,
        f_n: f,
        c_d_alpha: c_d_alpha(D, alpha)?,
    })
}

fn scale_site<const D: usize>(site: &Site<D>, factor: f64) -> [f64; D] {
    let mut out = [0.0; D];
    for i in 0..D {
        out[i] = site[i] as f64 * factor;
    }
    out
}

impl<const D: usize> RescaledTriple<D> {
    /// Evaluate `Y_N(S_N^{-1}(t))` using only grid data: the smallest grid
    /// point `u` with `S_N(u) >= t` (when the inverse lands within the grid).
    pub fn composition_on_grid(&self, t: f64) -> Option<[f64; D]> {
        let idx = self.s_n.iter().position(|&s| s >= t)?;
        Some(self.y_n[idx])
    }
}

/// Aging mode: quenched holds one environment fixed across replicas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AgingMode {
    Quenched,
    EnvironmentAveraged,
}

/// Outcome of one aging replica.
#[derive(Debug, Clone, Copy)]
pub struct AgingObservation {
    /// Same site at `t_w` and `(1+theta) t_w`.
    pub same_site: bool,
    /// Never moved during the whole window.
    pub no_move: bool,
}

/// Run one replica of the aging experiment: walk until the clock passes
/// `(1+theta) t_w`, observing the position at both window ends and whether
/// any jump occurred inside the window. O(1) memory.
pub fn aging_single_replica<const D: usize>(
    env: &Environment<D>,
    t_w: f64,
    theta: f64,
    max_steps: usize,
    stream: &mut Stream,
) -> Result<AgingObservation> {
    let t2 = (1.0 + theta) * t_w;
    let mut pos = [0i64; D];
    let mut time = 0.0f64;
    let mut pos_at_tw: Option<Site<D>> = None;
    let mut jumps_in_window = 0usize;
    for _ in 0..max_steps {
        let tau = env.tau_at(&pos)?;
        let hold = stream.next_exp() * tau;
        let t_jump = time + hold;
        if pos_at_tw.is_none() && t_jump > t_w {
            pos_at_tw = Some(pos);
        }
        if t_jump > t2 {
            let start = pos_at_tw.expect("t_w < t2");
            return Ok(AgingObservation {
                same_site: pos == start,
                no_move: jumps_in_window == 0,
            });
        }
        if pos_at_tw.is_some() {
            jumps_in_window += 1;
        }
        time = t_jump;
        random_step(&mut pos, stream);
    }
    Err(Error::Parameter(format!(
        "aging replica exhausted {max_steps} steps before clock {t2}"
    )))
}

/// Estimate the aging probability `P[X((1+theta) t_w) = X(t_w) | tau]` over
/// independent walk replicas (quenched: one fixed environment; averaged:
/// a fresh environment per replica). Also returns the stricter no-move
/// fraction as a secondary diagnostic.
pub struct AgingEstimate {
    pub same_site: StatsSummary,
    pub no_move: StatsSummary,
    pub mode: AgingMode,
}

pub fn aging_probability_estimate<const D: usize>(
    env: &Environment<D>,
    t_w: f64,
    theta: f64,
    replicas: usize,
    master_seed: u64,
    mode: AgingMode,
) -> Result<AgingEstimate> {
    if t_w <= 0.0 || theta < 0.0 {
        return Err(Error::Precondition(format!(
            "need t_w > 0 and theta >= 0, got t_w = {t_w}, theta = {theta}"
        )));
    }
    if replicas == 0 {
        return Err(Error::EmptyInput("aging replicas"));
    }
    let mut same = 0usize;
    let mut still = 0usize;
    for rep in 0..replicas {
        let obs = match mode {
            AgingMode::Quenched => {
                let mut stream = Stream::new(master_seed, "aging-walk", rep as u64);
                aging_single_replica(env, t_w, theta, 100_000_000, &mut stream)?
            }
            AgingMode::EnvironmentAveraged => {
                let mut stream = Stream::new(master_seed, "aging-walk", rep as u64);
                let fresh = env.clone_with_seed(master_seed ^ (rep as u64).wrapping_mul(0x9E37));
                aging_single_replica(&fresh, t_w, theta, 100_000_000, &mut stream)?
            }
        };
        if obs.same_site {
            same += 1;
        }
        if obs.no_move {
            still += 1;
        }
    }
    Ok(AgingEstimate {
        same_site: StatsSummary::from_proportion(same, replicas, 0.95, "aging-same-site")?,
        no_move: StatsSummary::from_proportion(still, replicas, 0.95, "aging-no-move")?,
        mode,
    })
}
