//! Environment-tail and embedded-walk sanity experiments.

use trap_model::env::{Environment, TailSpec};
use trap_model::export::write_table_csv;
use trap_model::lattice::norm2;
use trap_model::scales::scales;
use trap_model::walk::{random_step, run_walk_with_marks, MarkMode, StopRule};

use super::{mc_mean_se, RunContext, RunError};
use crate::config::{Experiment, ExperimentConfig};
use crate::report::{RunReport, StatRow};
use crate::svg::Chart;

/// Empirical survival of the trap depths over `replicas` distinct sites at
/// thresholds {2, 10, 100}, against the exact tail.
pub fn env_tail(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<RunReport, RunError> {
    let mut report = RunReport::new(Experiment::EnvTail, cfg);
    let sc = scales(cfg.n, 3, cfg.alpha).map_err(RunError::Failed)?;
    let env: Environment<3> = Environment::new(
        TailSpec::pareto(cfg.alpha)?,
        cfg.master_seed,
        &sc,
        cfg.multiplier,
    )?;
    let thresholds = [2.0, 10.0, 100.0];
    let mut counts = [0usize; 3];
    let mut scanned = 0usize;
    let side = ((cfg.replicas as f64).cbrt().ceil() as i64 / 2 + 1).max(2);
    'outer: for a in -side..side {
        for b in -side..side {
            for c in -side..side {
                let site = [a, b, c];
                if !env.contains(&site) {
                    continue;
                }
                let tau = env.tau_at(&site)?;
                for (i, &u) in thresholds.iter().enumerate() {
                    if tau >= u {
                        counts[i] += 1;
                    }
                }
                scanned += 1;
                if scanned == cfg.replicas {
                    break 'outer;
                }
            }
        }
    }
    if scanned < cfg.replicas {
        return Err(RunError::Usage(format!(
            "region too small: scanned {scanned} of {} requested sites (raise n)",
            cfg.replicas
        )));
    }
    let mut rows = Vec::new();
    for (i, &u) in thresholds.iter().enumerate() {
        let p = u.powf(-cfg.alpha);
        let se = (p * (1.0 - p) / scanned as f64).sqrt();
        let p_hat = counts[i] as f64 / scanned as f64;
        rows.push(vec![u, p_hat, p, se]);
        report.push(
            StatRow::check(format!("survival at u = {u}"), p_hat, p, 4.0 * se)
                .with_samples(scanned),
        );
    }
    write_table_csv(
        &mut std::fs::File::create(ctx.out_dir.join("env-tail.csv"))?,
        &["u", "empirical", "exact", "std_error"],
        &rows,
    )?;
    report.artifacts.push("env-tail.csv".into());

    // survival curve on a log-log grid for the plot
    let mut curve_emp = Vec::new();
    let mut curve_exact = Vec::new();
    for k in 0..30 {
        let u = 1.5f64.powi(k);
        let c = {
            let mut c = 0usize;
            let mut seen = 0usize;
            'scan: for a in -side..side {
                for b in -side..side {
                    for cc in -side..side {
                        let site = [a, b, cc];
                        if !env.contains(&site) {
                            continue;
                        }
                        if env.depth_at_least(&site, u)? {
                            c += 1;
                        }
                        seen += 1;
                        if seen == scanned {
                            break 'scan;
                        }
                    }
                }
            }
            c
        };
        if c > 10 {
            curve_emp.push((u, c as f64 / scanned as f64));
            curve_exact.push((u, u.powf(-cfg.alpha)));
        }
    }
    Chart::new("trap-depth survival", "u", "P[tau >= u]")
        .loglog()
        .line("exact tail", curve_exact)
        .scatter("empirical", curve_emp)
        .write(&ctx.out_dir.join("env-tail.svg"))?;
    report.artifacts.push("env-tail.svg".into());
    Ok(report)
}

/// Mean-square displacement, coordinate symmetry, and ball exit times of
/// the embedded walk.
pub fn walk_basics(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<RunReport, RunError> {
    let mut report = RunReport::new(Experiment::WalkBasics, cfg);
    let sc = scales(20, 3, cfg.alpha).map_err(RunError::Failed)?;
    let env: Environment<3> = Environment::constant(1.0, cfg.master_seed, &sc, 2.0)?;

    // E|Y(100)|^2 = 100 within 3 SE.
    let steps = 100usize;
    let d2: Vec<f64> = crate::par::run_replicas(
        &ctx.pool,
        cfg.master_seed,
        "walk-basics-msd",
        cfg.replicas,
        |_, mut stream| {
            let traj = run_walk_with_marks(
                &env,
                steps + 1,
                StopRule::Steps(steps),
                MarkMode::Unit,
                &mut stream,
            )
            .expect("constant env walk");
            norm2(traj.sites.last().unwrap()) as f64
        },
    );
    let (mean, se) = mc_mean_se(&d2);
    report.push(
        StatRow::check("mean |Y(100)|^2", mean, steps as f64, 3.0 * se).with_samples(d2.len()),
    );

    // Coordinate symmetry at 64 steps: each coordinate mean within 4 SE of 0.
    let coords: Vec<[f64; 3]> = crate::par::run_replicas(
        &ctx.pool,
        cfg.master_seed,
        "walk-basics-sym",
        cfg.replicas,
        |_, mut stream| {
            let traj = run_walk_with_marks(
                &env,
                65,
                StopRule::Steps(64),
                MarkMode::Unit,
                &mut stream,
            )
            .expect("constant env walk");
            let last = traj.sites.last().unwrap();
            [last[0] as f64, last[1] as f64, last[2] as f64]
        },
    );
    let se_sym = (64.0 / 3.0 / coords.len() as f64).sqrt();
    for axis in 0..3 {
        let mean = coords.iter().map(|c| c[axis]).sum::<f64>() / coords.len() as f64;
        report.push(
            StatRow::check(format!("coordinate {axis} mean at k = 64"), mean, 0.0, 4.0 * se_sym)
                .with_samples(coords.len()),
        );
    }

    // Exit time of D(rho): mean / rho^2 within 10% of 1 at rho = 30.
    let rho = 30.0f64;
    let rho2 = rho * rho;
    let exit_replicas = (cfg.replicas / 20).max(2_000);
    let exits: Vec<f64> = crate::par::run_replicas(
        &ctx.pool,
        cfg.master_seed,
        "walk-basics-exit",
        exit_replicas,
        |_, mut stream| {
            let mut pos = [0i64; 3];
            let mut k = 0usize;
            loop {
                random_step(&mut pos, &mut stream);
                k += 1;
                if (norm2(&pos) as f64) > rho2 {
                    return k as f64;
                }
            }
        },
    );
    let (exit_mean, exit_se) = mc_mean_se(&exits);
    report.push(
        StatRow::check("mean exit step / rho^2 (rho = 30)", exit_mean / rho2, 1.0, 0.10)
            .with_samples(exits.len())
            .with_note(format!("std error {:.4}", exit_se / rho2)),
    );

    write_table_csv(
        &mut std::fs::File::create(ctx.out_dir.join("walk-basics.csv"))?,
        &["statistic", "estimate", "target"],
        &[
            vec![0.0, mean, steps as f64],
            vec![1.0, exit_mean / rho2, 1.0],
        ],
    )?;
    report.artifacts.push("walk-basics.csv".into());
    Ok(report)
}
