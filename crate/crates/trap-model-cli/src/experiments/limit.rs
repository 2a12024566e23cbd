//! Limit-object experiments: clock marginal, subordinator Laplace and FK
//! characteristic function, self-similarity, and the annealed comparison.

use trap_model::env::{Environment, TailSpec};
use trap_model::export::write_table_csv;
use trap_model::fd::{ctrw_spatial_scale, f_scale};
use trap_model::fk::{fk_charfn_target, fk_fixed_time};
use trap_model::rng::Stream;
use trap_model::scales::scales;
use trap_model::stats::{ks_statistic, Reference};
use trap_model::subordinator::one_sided_stable;
use trap_model::walk::{ctrw_position_at_time, run_walk, StopRule};

use super::{mc_mean_se, RunContext, RunError};
use crate::config::{Experiment, ExperimentConfig};
use crate::par::run_replicas;
use crate::report::{ResolvedConstants, RunReport, StatRow};
use crate::svg::Chart;

/// One-sample comparison of the rescaled clock `S_N(1)` with an ensemble of
/// subordinator values `V_alpha(1)`, in one fixed environment.
pub fn clock_marginal(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<RunReport, RunError> {
    let mut report = RunReport::new(Experiment::ClockMarginal, cfg);
    let f = f_scale(cfg.n_scale, cfg.d, cfg.alpha)?;
    if cfg.d != 3 {
        return Err(RunError::Usage("clock-marginal runs at d = 3".into()));
    }
    report.constants.c_d_alpha = Some(trap_model::fd::c_d_alpha(cfg.d, cfg.alpha)?);
    report.constants.green_constant = Some(trap_model::fd::green_constant(3)?);

    let steps = (f * f).floor() as usize;
    // Region comfortably larger than the sqrt(steps) range of the walk.
    let level = ((cfg.alpha * (steps as f64).log2()).ceil() as u32 + 10).max(cfg.n);
    let sc = scales(level, 3, cfg.alpha).map_err(RunError::Failed)?;
    let env: Environment<3> =
        Environment::new(TailSpec::pareto(cfg.alpha)?, cfg.master_seed, &sc, cfg.multiplier)?;

    let sample: Vec<f64> = run_replicas(
        &ctx.pool,
        cfg.master_seed,
        "clock-marginal-walk",
        cfg.replicas,
        |_, mut stream| {
            let traj = run_walk(&env, steps + 1, StopRule::Steps(steps), &mut stream)
                .expect("region sized for the step budget");
            traj.total_clock() / cfg.n_scale
        },
    );
    let reference: Vec<f64> = run_replicas(
        &ctx.pool,
        cfg.master_seed,
        "clock-marginal-reference",
        cfg.replicas,
        |_, mut stream| one_sided_stable(cfg.alpha, &mut stream),
    );
    let ks = ks_statistic(&sample, Reference::Samples(&reference))?;
    report.push(
        StatRow::check_upper("KS(S_N(1), V_alpha(1))", ks, 0.08)
            .with_samples(cfg.replicas)
            .with_note(format!("f(N)^2 = {steps} steps")),
    );

    write_table_csv(
        &mut std::fs::File::create(ctx.out_dir.join("clock-marginal-sample.csv"))?,
        &["s_n_1", "v_alpha_1"],
        &sample
            .iter()
            .zip(reference.iter())
            .map(|(a, b)| vec![*a, *b])
            .collect::<Vec<_>>(),
    )?;
    report.artifacts.push("clock-marginal-sample.csv".into());

    // One replica's raw trajectory at a readable stride.
    let mut stream = Stream::new(cfg.master_seed, "clock-marginal-walk", 0);
    let traj = run_walk(&env, steps + 1, StopRule::Steps(steps), &mut stream)
        .expect("region sized for the step budget");
    trap_model::export::write_trajectory_csv(
        &mut std::fs::File::create(ctx.out_dir.join("clock-marginal-trajectory.csv"))?,
        &traj,
        8,
    )?;
    report.artifacts.push("clock-marginal-trajectory.csv".into());
    Chart::new("rescaled clock vs subordinator", "value", "CDF")
        .ecdf("S_N(1)", &sample)
        .ecdf("V_alpha(1)", &reference)
        .write(&ctx.out_dir.join("clock-marginal-ecdf.svg"))?;
    report.artifacts.push("clock-marginal-ecdf.svg".into());
    Ok(report)
}

/// Subordinator Laplace transform across an `(alpha, lambda)` grid, and the
/// FK fixed-time characteristic function against the Mittag-Leffler target.
pub fn fk_charfn(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<RunReport, RunError> {
    let mut report = RunReport::new(Experiment::FkCharfn, cfg);
    let mut laplace_rows = Vec::new();
    for (ai, &alpha) in [0.3, 0.5, 0.8].iter().enumerate() {
        for &lambda in &cfg.lambdas {
            let values: Vec<f64> = run_replicas(
                &ctx.pool,
                cfg.master_seed.wrapping_add(ai as u64),
                "subordinator-laplace",
                cfg.replicas,
                |_, mut stream| (-lambda * one_sided_stable(alpha, &mut stream)).exp(),
            );
            let (mean, se) = mc_mean_se(&values);
            let target = (-lambda.powf(alpha)).exp();
            laplace_rows.push(vec![alpha, lambda, mean, target, se]);
            report.push(
                StatRow::check(
                    format!("E e^(-{lambda} V_{alpha}(1))"),
                    mean,
                    target,
                    4.0 * se,
                )
                .with_samples(values.len()),
            );
        }
    }
    write_table_csv(
        &mut std::fs::File::create(ctx.out_dir.join("subordinator-laplace.csv"))?,
        &["alpha", "lambda", "estimate", "target", "std_error"],
        &laplace_rows,
    )?;
    report.artifacts.push("subordinator-laplace.csv".into());

    // FK characteristic function at t = 1 for the configured frequencies.
    let mut cf_rows = Vec::new();
    for &xi_norm in &cfg.xi_norms {
        let xi2 = xi_norm * xi_norm;
        let values: Vec<f64> = run_replicas(
            &ctx.pool,
            cfg.master_seed,
            "fk-charfn",
            cfg.replicas,
            |_, mut stream| {
                let z: [f64; 3] = fk_fixed_time(cfg.alpha, 1.0, &mut stream);
                (xi_norm * z[0]).cos()
            },
        );
        let (mean, se) = mc_mean_se(&values);
        let target = fk_charfn_target(cfg.alpha, 1.0, xi2)?;
        cf_rows.push(vec![xi2, mean, target, se]);
        report.push(
            StatRow::check(format!("E cos(xi . Z(1)), |xi|^2 = {xi2:.3}"), mean, target, 4.0 * se)
                .with_samples(values.len()),
        );
    }
    write_table_csv(
        &mut std::fs::File::create(ctx.out_dir.join("fk-charfn.csv"))?,
        &["xi_norm2", "estimate", "target", "std_error"],
        &cf_rows,
    )?;
    report.artifacts.push("fk-charfn.csv".into());

    // Target curve with the MC points overlaid.
    let curve: Vec<(f64, f64)> = (0..=60)
        .map(|i| {
            let xi2 = 6.0 * i as f64 / 60.0;
            (xi2, fk_charfn_target(cfg.alpha, 1.0, xi2).unwrap())
        })
        .collect();
    Chart::new("FK fixed-time characteristic function", "|xi|^2", "E cos(xi . Z(1))")
        .line("Mittag-Leffler target", curve)
        .scatter(
            "Monte Carlo",
            cf_rows.iter().map(|r| (r[0], r[1])).collect(),
        )
        .write(&ctx.out_dir.join("fk-charfn.svg"))?;
    report.artifacts.push("fk-charfn.svg".into());

    // Special-function table and one sampled path of each limit object.
    let ml_rows: Vec<Vec<f64>> = (0..=200)
        .map(|i| {
            let x = 20.0 * i as f64 / 200.0;
            vec![
                x,
                trap_model::special::mittag_leffler(cfg.alpha, -x).unwrap(),
                trap_model::special::aging_function(cfg.alpha, x).unwrap(),
            ]
        })
        .collect();
    write_table_csv(
        &mut std::fs::File::create(ctx.out_dir.join("special-functions.csv"))?,
        &["x", "mittag_leffler_neg_x", "aging_at_theta_x"],
        &ml_rows,
    )?;
    report.artifacts.push("special-functions.csv".into());

    let mut path_stream = trap_model::rng::Stream::new(cfg.master_seed, "fk-path-export", 0);
    let s_grid: Vec<f64> = (0..=512).map(|i| i as f64 / 256.0).collect();
    let path: trap_model::fk::FKPath<3> =
        trap_model::fk::sample_fk_path(cfg.alpha, &s_grid, &mut path_stream)?;
    trap_model::export::write_fk_path_csv(
        &mut std::fs::File::create(ctx.out_dir.join("fk-path.csv"))?,
        &path,
    )?;
    trap_model::export::write_subordinator_csv(
        &mut std::fs::File::create(ctx.out_dir.join("subordinator-path.csv"))?,
        &path.subordinator,
    )?;
    report.artifacts.push("fk-path.csv".into());
    report.artifacts.push("subordinator-path.csv".into());
    Chart::new("one fractional-kinetics path", "s", "Z_1(s)")
        .line(
            "first coordinate",
            path.s_grid
                .iter()
                .zip(path.values.iter())
                .map(|(s, z)| (*s, z[0]))
                .collect(),
        )
        .write(&ctx.out_dir.join("fk-path.svg"))?;
    report.artifacts.push("fk-path.svg".into());
    Ok(report)
}

/// Two-sample comparison of `lambda^{-alpha/2} Z(lambda)` with `Z(1)`.
pub fn fk_selfsim(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<RunReport, RunError> {
    let mut report = RunReport::new(Experiment::FkSelfsim, cfg);
    for &lambda in &cfg.lambdas {
        let scaled: Vec<f64> = run_replicas(
            &ctx.pool,
            cfg.master_seed,
            "fk-selfsim-scaled",
            cfg.replicas,
            |_, mut stream| {
                lambda.powf(-cfg.alpha / 2.0) * fk_fixed_time::<3>(cfg.alpha, lambda, &mut stream)[0]
            },
        );
        let base: Vec<f64> = run_replicas(
            &ctx.pool,
            cfg.master_seed,
            "fk-selfsim-base",
            cfg.replicas,
            |_, mut stream| fk_fixed_time::<3>(cfg.alpha, 1.0, &mut stream)[0],
        );
        let ks = ks_statistic(&scaled, Reference::Samples(&base))?;
        report.push(
            StatRow::check_upper(format!("KS self-similarity, lambda = {lambda}"), ks, 0.02)
                .with_samples(cfg.replicas),
        );
        if lambda == cfg.lambdas[0] {
            Chart::new("FK self-similarity", "value", "CDF")
                .ecdf(format!("lambda^(-a/2) Z({lambda})"), &scaled)
                .ecdf("Z(1)", &base)
                .write(&ctx.out_dir.join("fk-selfsim-ecdf.svg"))?;
            report.artifacts.push("fk-selfsim-ecdf.svg".into());
            trap_model::export::write_table_csv(
                &mut std::fs::File::create(ctx.out_dir.join("fk-selfsim-samples.csv"))?,
                &["scaled", "base"],
                &scaled
                    .iter()
                    .zip(base.iter())
                    .map(|(a, b)| vec![*a, *b])
                    .collect::<Vec<_>>(),
            )?;
            report.artifacts.push("fk-selfsim-samples.csv".into());
        }
    }
    Ok(report)
}

/// Rescaled annealed walk at time `N` against the FK fixed-time law.
pub fn ctrw_compare(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<RunReport, RunError> {
    let mut report = RunReport::new(Experiment::CtrwCompare, cfg);
    let f = ctrw_spatial_scale(cfg.n_scale, cfg.alpha)?;
    report.constants = ResolvedConstants {
        c_d_alpha: Some(trap_model::fd::c_d_alpha(3, cfg.alpha)?),
        ..Default::default()
    };
    let sqrt_d = 3f64.sqrt();
    let ctrw: Vec<f64> = run_replicas(
        &ctx.pool,
        cfg.master_seed,
        "ctrw-position",
        cfg.replicas,
        |_, mut stream| {
            let pos = ctrw_position_at_time::<3>(cfg.alpha, cfg.n_scale, &mut stream)
                .expect("valid alpha");
            sqrt_d * pos[0] as f64 / f
        },
    );
    let fk: Vec<f64> = run_replicas(
        &ctx.pool,
        cfg.master_seed,
        "ctrw-fk-reference",
        cfg.replicas,
        |_, mut stream| fk_fixed_time::<3>(cfg.alpha, 1.0, &mut stream)[0],
    );
    let ks = ks_statistic(&ctrw, Reference::Samples(&fk))?;
    report.push(
        StatRow::check_upper("KS(rescaled CTRW, Z(1)) first coordinate", ks, 0.05)
            .with_samples(cfg.replicas)
            .with_note(format!("spatial scale f = {f:.4}")),
    );
    // marginal waiting-time check at u = 10
    let tail: Vec<f64> = run_replicas(
        &ctx.pool,
        cfg.master_seed,
        "ctrw-wait-tail",
        cfg.replicas,
        |_, mut stream| {
            let w = stream.next_open01().powf(-1.0 / cfg.alpha);
            if w >= 10.0 {
                1.0
            } else {
                0.0
            }
        },
    );
    let (p_hat, se) = mc_mean_se(&tail);
    report.push(
        StatRow::check(
            "waiting-time survival at u = 10",
            p_hat,
            10f64.powf(-cfg.alpha),
            4.0 * se,
        )
        .with_samples(tail.len()),
    );
    Chart::new("rescaled CTRW vs FK fixed-time law", "value", "CDF")
        .ecdf("CTRW", &ctrw)
        .ecdf("Z(1)", &fk)
        .write(&ctx.out_dir.join("ctrw-compare-ecdf.svg"))?;
    report.artifacts.push("ctrw-compare-ecdf.svg".into());
    write_table_csv(
        &mut std::fs::File::create(ctx.out_dir.join("ctrw-compare.csv"))?,
        &["ctrw_rescaled", "fk_reference"],
        &ctrw
            .iter()
            .zip(fk.iter())
            .map(|(a, b)| vec![*a, *b])
            .collect::<Vec<_>>(),
    )?;
    report.artifacts.push("ctrw-compare.csv".into());
    Ok(report)
}
