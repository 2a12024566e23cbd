//! Coarse-graining of a trajectory into parts between exits of
//! `rho(n)`-balls, with per-part scores recording the time spent in the
//! first deep trap each part hits.
//!
//! A part starting at `Y(j_i)` gets a finite score only when the part is
//! clean: it starts away from the region boundary, starts and ends in the
//! safe set, hits at most one deep trap, leaves that trap's `nu`-ball before
//! the part ends without re-entering a deep trap, and the trap is neither
//! too close to the part boundary nor a bad (paired) trap. Otherwise the
//! score is zero (no deep trap hit at all) or infinite (something went
//! wrong); the index of the first infinite score marks where the
//! approximation of the clock by score sums breaks down.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{dist2, Site};
use crate::rng::Stream;
use crate::scales::ScaleSet;
use crate::stats::{bootstrap_ci, StatsSummary};
use crate::traps::TrapSets;
use crate::walk::{TrajectoryKind, TrajectoryRecord};

/// Score of one part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Score {
    Finite(f64),
    Infinite,
}

impl Score {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Score::Infinite)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Score::Finite(v) if *v == 0.0)
    }
}

#[derive(Debug, Clone)]
pub struct PartRecord<const D: usize> {
    pub index: usize,
    /// `j_i`: step at which the part starts.
    pub j_start: usize,
    /// `j_{i+1}`: step at which the part ends.
    pub j_end: usize,
    /// First step at or after `j_start` in a deep trap (may exceed `j_end`).
    pub lambda1: Option<usize>,
    /// First step at or after `lambda1` outside the trap's `nu`-ball.
    pub lambda2: Option<usize>,
    /// First disqualifying revisit: another deep trap after `lambda1`, or
    /// any deep trap after `lambda2`. `None` means never.
    pub lambda3: Option<usize>,
    /// The hit trap `y_i`.
    pub trap: Option<Site<D>>,
    pub score: Score,
    /// `Y(j_{i+1}) - Y(j_i)`.
    pub displacement: Site<D>,
}

#[derive(Debug, Clone)]
pub struct CoarseGrainReport<const D: usize> {
    /// `j_0 = 0 < j_1 < ...`: all complete stopping times found.
    pub stopping_times: Vec<usize>,
    pub parts: Vec<PartRecord<D>>,
    /// Index of the first infinite score, if any.
    pub first_bad: Option<usize>,
    /// The trajectory ended inside an incomplete part (excluded from parts).
    pub final_part_truncated: bool,
    /// Level and tail exponent of the classification, fixing the score
    /// normalization `2^{n/alpha}`.
    pub scale_level: u32,
    pub scale_alpha: f64,
}

/// Coarse-grain a simulated trap-walk trajectory.
pub fn coarse_grain<const D: usize>(
    traj: &TrajectoryRecord<D>,
    sets: &TrapSets<D>,
) -> Result<CoarseGrainReport<D>> {
    if traj.kind != TrajectoryKind::TrapWalk {
        return Err(Error::Precondition(
            "coarse graining applies to quenched trap walks".into(),
        ));
    }
    coarse_grain_scripted(&traj.sites, &traj.marks, sets)
}

/// Coarse-grain an externally supplied `(sites, marks)` sequence: the
/// testing hook that makes the case analysis checkable on hand-built paths.
pub fn coarse_grain_scripted<const D: usize>(
    sites: &[Site<D>],
    marks: &[f64],
    sets: &TrapSets<D>,
) -> Result<CoarseGrainReport<D>> {
    if sites.len() != marks.len() + 1 {
        return Err(Error::Parameter(format!(
            "need one more site than marks, got {} sites and {} marks",
            sites.len(),
            marks.len()
        )));
    }
    let sc = sets.scales();
    let rho2 = sc.rho * sc.rho;
    let nu2 = sc.nu * sc.nu;

    // Stopping times j_i.
    let mut stopping = vec![0usize];
    loop {
        let anchor = sites[*stopping.last().unwrap()];
        let from = stopping.last().unwrap() + 1;
        match sites[from..]
            .iter()
            .position(|p| (dist2(p, &anchor) as f64) > rho2)
        {
            Some(off) => stopping.push(from + off),
            None => break,
        }
    }
    if stopping.len() < 2 {
        return Err(Error::Precondition(
            "trajectory too short to contain one complete part".into(),
        ));
    }

    // All steps that sit in a deep trap, in order.
    let mut deep_steps: Vec<usize> = Vec::new();
    for (k, site) in sites.iter().enumerate() {
        if sets.in_region(site) && sets.is_deep(site)? {
            deep_steps.push(k);
        }
    }

    let mut parts = Vec::with_capacity(stopping.len() - 1);
    let mut first_bad = None;
    for i in 0..stopping.len() - 1 {
        let j_start = stopping[i];
        let j_end = stopping[i + 1];
        let start_site = sites[j_start];
        let end_site = sites[j_end];

        // First deep hit at or after j_start.
        let d_idx = deep_steps.partition_point(|&k| k < j_start);
        let lambda1 = deep_steps.get(d_idx).copied();
        let trap = lambda1.map(|k| sites[k]);

        // Start/end conditions: away from the region boundary, both
        // endpoints safe.
        let clean_frame = sets.boundary_distance(&start_site) > sc.rho
            && sets.in_safe(&start_site)?
            && sets.in_safe(&end_site)?;

        let (lambda2, lambda3, score) = match lambda1 {
            None => (None, None, zero_or_inf(clean_frame)),
            Some(l1) if l1 >= j_end => {
                // No deep trap during this part.
                (None, None, zero_or_inf(clean_frame))
            }
            Some(l1) => {
                let y = sites[l1];
                // Exit of the trap's nu-ball.
                let lambda2 = sites[l1..]
                    .iter()
                    .position(|p| (dist2(p, &y) as f64) > nu2)
                    .map(|off| l1 + off);
                // First disqualifying deep visit.
                let other_trap = deep_steps[deep_steps.partition_point(|&k| k < l1)..]
                    .iter()
                    .copied()
                    .find(|&k| sites[k] != y);
                let revisit = lambda2.and_then(|l2| {
                    let from = deep_steps.partition_point(|&k| k < l2);
                    deep_steps.get(from).copied()
                });
                let lambda3 = match (other_trap, revisit) {
                    (Some(a), Some(b)) => Some(a.min(b)),
                    (Some(a), None) => Some(a),
                    (None, Some(b)) => Some(b),
                    (None, None) => None,
                };

                let order_ok = match lambda2 {
                    Some(l2) => l1 < l2 && l2 < j_end && lambda3.is_none_or(|l3| j_end <= l3),
                    None => false,
                };
                let trap_placed = {
                    let trap_dist = (dist2(&y, &start_site) as f64).sqrt();
                    sc.rho - trap_dist > sc.nu && !sets.is_bad(&y)?
                };
                if clean_frame && order_ok && trap_placed {
                    let l2 = lambda2.unwrap();
                    let mut acc = 0.0;
                    let tau_y = sets.env().tau_at(&y)?;
                    for k in l1..=l2.min(marks.len().saturating_sub(1)) {
                        if sites[k] == y {
                            acc += marks[k] * tau_y;
                        }
                    }
                    (lambda2, lambda3, Score::Finite(acc))
                } else {
                    (lambda2, lambda3, Score::Infinite)
                }
            }
        };

        if score.is_infinite() && first_bad.is_none() {
            first_bad = Some(i);
        }
        let mut displacement = [0i64; D];
        for a in 0..D {
            displacement[a] = end_site[a] - start_site[a];
        }
        parts.push(PartRecord {
            index: i,
            j_start,
            j_end,
            lambda1,
            lambda2,
            lambda3,
            trap,
            score,
            displacement,
        });
    }

    Ok(CoarseGrainReport {
        final_part_truncated: *stopping.last().unwrap() < sites.len() - 1,
        stopping_times: stopping,
        parts,
        first_bad,
        scale_level: sc.n,
        scale_alpha: sc.alpha,
    })
}

fn zero_or_inf(clean_frame: bool) -> Score {
    if clean_frame {
        Score::Finite(0.0)
    } else {
        Score::Infinite
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DiscrepancyReport {
    /// `|S(j_k) - sum_{j<k} s_j| / 2^{n/alpha}` for `k = 1..=k_evaluated`.
    pub per_k: Vec<f64>,
    pub max_normalized: f64,
    pub k_evaluated: usize,
    /// Evaluation stopped early at the first infinite score.
    pub first_bad: Option<usize>,
}

/// Compare the clock at stopping times with the running score sum,
/// normalized by `2^{n/alpha}`. Scores after the first infinite one cannot
/// enter the sum; the report then truncates and flags it (callers treating
/// the comparison as a deviation test should count a truncated replica as
/// an exceedance, since the true discrepancy is infinite there).
pub fn score_sum_discrepancy<const D: usize>(
    report: &CoarseGrainReport<D>,
    traj: &TrajectoryRecord<D>,
    k_max: usize,
) -> Result<DiscrepancyReport> {
    if report.stopping_times.last().copied().unwrap_or(0) >= traj.clock.len() {
        return Err(Error::Parameter(
            "report does not belong to this trajectory".into(),
        ));
    }
    let norm = (report.scale_level as f64 / report.scale_alpha).exp2();
    let available = report.parts.len();
    let usable = match report.first_bad {
        Some(j) => j,
        None => available,
    };
    let k_evaluated = k_max.min(usable);
    let mut per_k = Vec::with_capacity(k_evaluated);
    let mut score_sum = 0.0f64;
    let mut max_norm = 0.0f64;
    for k in 1..=k_evaluated {
        match report.parts[k - 1].score {
            Score::Finite(s) => score_sum += s,
            Score::Infinite => unreachable!("truncated at first_bad"),
        }
        let j_k = report.stopping_times[k];
        let d = (traj.clock[j_k] - score_sum).abs() / norm;
        per_k.push(d);
        max_norm = max_norm.max(d);
    }
    Ok(DiscrepancyReport {
        per_k,
        max_normalized: max_norm,
        k_evaluated,
        first_bad: report.first_bad,
    })
}

impl<const D: usize> CoarseGrainReport<D> {
    /// Sum of the finite scores of the first `k` parts.
    pub fn score_prefix_sum(&self, k: usize) -> Option<f64> {
        let mut acc = 0.0;
        for part in self.parts.iter().take(k) {
            match part.score {
                Score::Finite(s) => acc += s,
                Score::Infinite => return None,
            }
        }
        Some(acc)
    }
}

/// Empirical law of a single part started at `x`: score and displacement.
#[derive(Debug, Clone)]
pub struct ScoreSample<const D: usize> {
    pub replicas: usize,
    pub zero_count: usize,
    pub infinite_count: usize,
    /// Finite nonzero scores.
    pub positive_scores: Vec<f64>,
    pub displacements: Vec<Site<D>>,
}

impl<const D: usize> ScoreSample<D> {
    pub fn p_zero(&self) -> f64 {
        self.zero_count as f64 / self.replicas as f64
    }

    pub fn p_nonzero(&self) -> f64 {
        1.0 - self.p_zero()
    }

    pub fn p_infinite(&self) -> f64 {
        self.infinite_count as f64 / self.replicas as f64
    }

    /// `mean(e^{-lambda s / 2^{n/alpha}})` over finite scores (zeros included).
    pub fn laplace_conditional(&self, lambda: f64, level: u32, alpha: f64) -> f64 {
        let norm = (level as f64 / alpha).exp2();
        let finite = self.replicas - self.infinite_count;
        if finite == 0 {
            return f64::NAN;
        }
        let sum: f64 = self
            .positive_scores
            .iter()
            .map(|s| (-lambda * s / norm).exp())
            .sum::<f64>()
            + self.zero_count as f64;
        sum / finite as f64
    }
}

/// Simulate `replicas` independent single parts started at `x` (which must
/// lie in the safe interior) and record the empirical law of the pair
/// (score, displacement).
pub fn sample_score_at<const D: usize>(
    sets: &TrapSets<D>,
    x: &Site<D>,
    replicas: usize,
    stream: &mut Stream,
) -> Result<ScoreSample<D>> {
    if !sets.in_safe_interior(x)? {
        return Err(Error::Precondition(format!(
            "part origin {x:?} is not in the safe interior"
        )));
    }
    let sc = sets.scales();
    let rho2 = sc.rho * sc.rho;
    let nu2 = sc.nu * sc.nu;
    let mut out = ScoreSample {
        replicas,
        zero_count: 0,
        infinite_count: 0,
        positive_scores: Vec::new(),
        displacements: Vec::with_capacity(replicas),
    };
    for rep in 0..replicas {
        let mut rng = stream.derive(rep as u64);
        let mut pos = *x;
        let mut k = 0usize;
        let mut trap: Option<Site<D>> = None;
        let mut tau_y = 0.0f64;
        let mut lambda1 = usize::MAX;
        let mut lambda2: Option<usize> = None;
        let mut disqualified = false;
        let mut acc = 0.0f64;
        loop {
            // Position Y(k): classify, accumulate, then step with mark e_k.
            let in_deep = sets.is_deep(&pos)?;
            match trap {
                None => {
                    if in_deep {
                        trap = Some(pos);
                        tau_y = sets.env().tau_at(&pos)?;
                        lambda1 = k;
                    }
                }
                Some(y) => {
                    if lambda2.is_none() && (dist2(&pos, &y) as f64) > nu2 {
                        lambda2 = Some(k);
                    }
                    if in_deep && (pos != y || lambda2.is_some()) {
                        // second trap, or re-entry after leaving the nu-ball
                        disqualified = true;
                    }
                }
            }
            if let Some(y) = trap {
                if pos == y && lambda2.is_none() && k >= lambda1 {
                    // mark e_k is consumed at this site
                    acc += rng.next_exp() * tau_y;
                    crate::walk::random_step(&mut pos, &mut rng);
                    k += 1;
                } else {
                    rng.next_exp();
                    crate::walk::random_step(&mut pos, &mut rng);
                    k += 1;
                }
            } else {
                rng.next_exp();
                crate::walk::random_step(&mut pos, &mut rng);
                k += 1;
            }
            if (dist2(&pos, x) as f64) > rho2 {
                break;
            }
        }
        let j_end_site = pos;
        let end_safe = sets.in_safe(&j_end_site)?;
        let score = match trap {
            None => {
                if end_safe {
                    Score::Finite(0.0)
                } else {
                    Score::Infinite
                }
            }
            Some(y) => {
                // lambda2 might occur exactly at the exit step.
                if lambda2.is_none() && (dist2(&j_end_site, &y) as f64) > nu2 {
                    lambda2 = Some(k);
                }
                let order_ok = lambda2.is_some_and(|l2| lambda1 < l2 && l2 < k);
                let trap_dist = (dist2(&y, x) as f64).sqrt();
                let placed = sc.rho - trap_dist > sc.nu && !sets.is_bad(&y)?;
                if end_safe && order_ok && placed && !disqualified {
                    Score::Finite(acc)
                } else {
                    Score::Infinite
                }
            }
        };
        match score {
            Score::Infinite => out.infinite_count += 1,
            Score::Finite(v) if v == 0.0 => out.zero_count += 1,
            Score::Finite(v) => out.positive_scores.push(v),
        }
        let mut disp = [0i64; D];
        for a in 0..D {
            disp[a] = j_end_site[a] - x[a];
        }
        out.displacements.push(disp);
    }
    Ok(out)
}

/// `h^2 (1 - mean e^{-xi . r / r(n)})` with a bootstrap interval; the limit
/// is `-|xi|^2 / (2d)`, independent of the start site.
pub fn displacement_laplace_check<const D: usize>(
    displacements: &[Site<D>],
    xi: &[f64; D],
    sc: &ScaleSet,
    stream: &mut Stream,
) -> Result<StatsSummary> {
    if displacements.is_empty() {
        return Err(Error::EmptyInput("displacement sample"));
    }
    let transformed: Vec<f64> = displacements
        .iter()
        .map(|r| {
            let dot: f64 = r.iter().zip(xi.iter()).map(|(a, b)| *a as f64 * b).sum();
            (-dot / sc.r).exp()
        })
        .collect();
    let h2 = sc.h * sc.h;
    let mut summary = bootstrap_ci(
        &transformed,
        |xs| h2 * (1.0 - crate::stats::mean(xs)),
        0.95,
        300,
        stream,
    )?;
    summary.method = "displacement-laplace".to_string();
    Ok(summary)
}
