//! Aging: the arcsine-law function against its incomplete-beta oracle, and
//! the quenched trap-model aging probability at large waiting times.

use trap_model::env::{Environment, TailSpec};
use trap_model::export::write_table_csv;
use trap_model::scales::scales;
use trap_model::special::{aging_function, aging_function_beta_oracle};
use trap_model::walk::aging_single_replica;

use super::{RunContext, RunError};
use crate::config::{Experiment, ExperimentConfig};
use crate::par::run_replicas;
use crate::report::{RunReport, StatRow};
use crate::svg::Chart;

pub fn aging(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<RunReport, RunError> {
    let mut report = RunReport::new(Experiment::Aging, cfg);

    // Quadrature vs incomplete-beta oracle on a 20 x 20 grid.
    let mut worst = 0.0f64;
    for i in 0..20 {
        let alpha = 0.04 + 0.92 * i as f64 / 19.0;
        for j in 0..20 {
            let theta = 0.05 * (1.6f64).powi(j); // 0.05 .. ~ 600
            let q = aging_function(alpha, theta)?;
            let b = aging_function_beta_oracle(alpha, theta);
            worst = worst.max((q - b).abs());
        }
    }
    report.push(
        StatRow::check_upper("max |aging quadrature - incomplete beta| (20x20 grid)", worst, 1e-8)
            .with_samples(400),
    );

    // Quenched trap-model aging at the configured thetas.
    let theta_max = cfg.thetas.iter().cloned().fold(0.0f64, f64::max);
    let level =
        ((cfg.alpha * ((1.0 + theta_max) * cfg.t_w).log2()).ceil() as u32 + 8).max(cfg.n);
    let sc = scales(level, 3, cfg.alpha).map_err(RunError::Failed)?;
    let env: Environment<3> =
        Environment::new(TailSpec::pareto(cfg.alpha)?, cfg.master_seed, &sc, cfg.multiplier)?;

    let mut curve_mc = Vec::new();
    let mut table = Vec::new();
    for &theta in &cfg.thetas {
        let observations: Vec<(bool, bool)> = run_replicas(
            &ctx.pool,
            cfg.master_seed,
            "aging-walk",
            cfg.replicas,
            |_, mut stream| {
                let obs = aging_single_replica(&env, cfg.t_w, theta, 100_000_000, &mut stream)
                    .expect("step budget ample");
                (obs.same_site, obs.no_move)
            },
        );
        let n = observations.len() as f64;
        let same = observations.iter().filter(|o| o.0).count() as f64 / n;
        let still = observations.iter().filter(|o| o.1).count() as f64 / n;
        let target = aging_function(cfg.alpha, theta)?;
        report.push(
            StatRow::check(
                format!("P[X((1+{theta}) t_w) = X(t_w)] quenched"),
                same,
                target,
                0.03,
            )
            .with_samples(observations.len())
            .with_note(format!("t_w = {:.1e}, arcsine target", cfg.t_w)),
        );
        report.push(
            StatRow::info(format!("no-move fraction, theta = {theta}"), still).with_note(
                "stricter event: no jump at all inside the window; undershoots at finite t_w",
            ),
        );
        curve_mc.push((theta, same));
        table.push(vec![theta, same, still, target]);
    }
    write_table_csv(
        &mut std::fs::File::create(ctx.out_dir.join("aging.csv"))?,
        &["theta", "same_site", "no_move", "arcsine"],
        &table,
    )?;
    report.artifacts.push("aging.csv".into());

    let curve: Vec<(f64, f64)> = (0..=80)
        .map(|i| {
            let theta = 0.05 + 10.0 * i as f64 / 80.0;
            (theta, aging_function(cfg.alpha, theta).unwrap())
        })
        .collect();
    Chart::new("aging probability", "theta", "P[no motion over (t_w, (1+theta) t_w)]")
        .line("arcsine law", curve)
        .scatter("trap model (quenched MC)", curve_mc)
        .write(&ctx.out_dir.join("aging.svg"))?;
    report.artifacts.push("aging.svg".into());
    Ok(report)
}
