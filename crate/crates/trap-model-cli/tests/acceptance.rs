//! Acceptance suite: one test per verification criterion, each printing a
//! pass/fail line with the measured statistic against its pinned tolerance.
//!
//! Two criteria probe regimes the desk-scale simulation provably cannot
//! reach at their pinned parameters (the narrow-window scaling identity and
//! the clock/score-sum deviation bound at level n = 14); they are asserted
//! as stated and are expected to fail, printing the measured values and the
//! reason. Every other criterion must pass.

use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use trap_model_cli::config::{Experiment, ExperimentConfig};
use trap_model_cli::experiments::{run, RunContext};
use trap_model_cli::par::build_pool;
use trap_model_cli::report::RunReport;

fn out_dir(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"))
        .join("acceptance")
        .join(name);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run_experiment(
    name: &str,
    experiment: Experiment,
    tweak: impl FnOnce(&mut ExperimentConfig),
) -> RunReport {
    let mut cfg = ExperimentConfig::defaults_for(experiment);
    tweak(&mut cfg);
    cfg.threads = 2;
    let ctx = RunContext {
        pool: build_pool(cfg.threads),
        out_dir: out_dir(name),
    };
    let report = run(experiment, &cfg, &ctx).expect("experiment runs");
    report.write_json(&ctx.out_dir).unwrap();
    report
}

fn row<'r>(report: &'r RunReport, needle: &str) -> &'r trap_model_cli::report::StatRow {
    report
        .rows
        .iter()
        .find(|r| r.name.contains(needle))
        .unwrap_or_else(|| panic!("no row matching '{needle}'"))
}

fn verdict(criterion: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {criterion}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "{criterion}: {detail}");
}

#[test]
fn criterion_01_subordinator_laplace() {
    use trap_model::rng::Stream;
    use trap_model::subordinator::one_sided_stable;
    let start = Instant::now();
    let mut worst = f64::NEG_INFINITY;
    let mut detail = String::new();
    for (ai, alpha) in [0.3f64, 0.5, 0.8].into_iter().enumerate() {
        for (li, lambda) in [0.5f64, 1.0, 2.0].into_iter().enumerate() {
            let n = 100_000;
            let mut stream = Stream::new(4242 + ai as u64, "acc-laplace", li as u64);
            let mut acc = 0.0;
            let mut acc2 = 0.0;
            for _ in 0..n {
                let e = (-lambda * one_sided_stable(alpha, &mut stream)).exp();
                acc += e;
                acc2 += e * e;
            }
            let mean = acc / n as f64;
            let se = ((acc2 / n as f64 - mean * mean) / n as f64).sqrt();
            let target = (-lambda.powf(alpha)).exp();
            let sigmas = (mean - target).abs() / se;
            if sigmas > worst {
                worst = sigmas;
                detail = format!(
                    "worst deviation {sigmas:.2} SE at alpha = {alpha}, lambda = {lambda}"
                );
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        "1 subordinator-laplace",
        worst <= 4.0 && elapsed <= 10.0,
        &format!("{detail}; {elapsed:.1}s of 10s budget"),
    );
}

#[test]
fn criterion_02_fk_fixed_time_law() {
    let start = Instant::now();
    let report = run_experiment("fk-charfn", Experiment::FkCharfn, |_| {});
    let elapsed = start.elapsed().as_secs_f64();
    let cf_rows: Vec<_> = report
        .rows
        .iter()
        .filter(|r| r.name.starts_with("E cos"))
        .collect();
    assert_eq!(cf_rows.len(), 3);
    let all_pass = cf_rows.iter().all(|r| r.pass);
    let xi2 = row(&report, "|xi|^2 = 2.000");
    let anchored = (xi2.target.unwrap() - 0.42758).abs() < 1e-4;
    verdict(
        "2 fk-fixed-time-law",
        all_pass && anchored && elapsed <= 60.0,
        &format!(
            "|xi|^2 = 2 estimate {:.5} vs Mittag-Leffler {:.5}; {elapsed:.1}s of 60s budget",
            xi2.estimate,
            xi2.target.unwrap()
        ),
    );
}

#[test]
fn criterion_03_fk_self_similarity() {
    let report = run_experiment("fk-selfsim", Experiment::FkSelfsim, |_| {});
    let ks = row(&report, "KS self-similarity");
    verdict(
        "3 fk-self-similarity",
        ks.pass,
        &format!("two-sample KS {:.4} vs bound 0.02", ks.estimate),
    );
}

#[test]
fn criterion_04_aging() {
    let start = Instant::now();
    let report = run_experiment("aging", Experiment::Aging, |cfg| {
        cfg.t_w = 1e6; // >= 1e5 as required
        cfg.replicas = 10_000;
    });
    let elapsed = start.elapsed().as_secs_f64();
    let grid = row(&report, "incomplete beta");
    let t1 = row(&report, "(1+1) t_w");
    let t3 = row(&report, "(1+3) t_w");
    verdict(
        "4 aging",
        grid.pass && t1.pass && t3.pass && elapsed <= 600.0,
        &format!(
            "grid defect {:.1e}; theta = 1: {:.4} (target 1/2), theta = 3: {:.4} (target 1/3); {elapsed:.0}s of 600s budget",
            grid.estimate, t1.estimate, t3.estimate
        ),
    );
}

#[test]
fn criterion_05_green_constant() {
    let start = Instant::now();
    let bracket = trap_model::green::green_free(3, 1e-4).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let contains = bracket.contains(1.5163860);
    let width_ok = 2.0 * bracket.error <= 2e-4;
    verdict(
        "5 green-constant",
        contains && width_ok && elapsed <= 5.0,
        &format!(
            "bracket {:.7} +- {:.1e} contains 1.5163860; {elapsed:.2}s of 5s budget",
            bracket.value, bracket.error
        ),
    );
}

#[test]
fn criterion_06_ball_green_decay() {
    let report = run_experiment("green-ball", Experiment::GreenBall, |_| {});
    let slope = row(&report, "log-log decay slope");
    verdict(
        "6 ball-green-decay",
        slope.pass,
        &format!("slope {:.3} in [-1.3, -0.7]", slope.estimate),
    );
}

#[test]
fn criterion_07_hitting_sandwich() {
    let report = run_experiment("hitting-bounds", Experiment::HittingBounds, |_| {});
    let sandwich = row(&report, "sandwich bounds");
    let refined = row(&report, "refined upper");
    let ratio = row(&report, "ratio identity");
    verdict(
        "7 hitting-sandwich",
        sandwich.pass && refined.pass && ratio.pass,
        &format!(
            "sandwich {} / refined {} / ratio defect {:.1e} vs 1e-12",
            sandwich.pass, refined.pass, ratio.estimate
        ),
    );
}

#[test]
fn criterion_08_fd_limit_identity() {
    // Asserted at the pinned narrow window (eps, M) = (1e-4, 1e4) as
    // stated. The window truncation alone leaves a residual of
    // K_d [M^{-a} + K' (l/t)(a/(1-a)) eps^{1-a}] t^a / c_2^2 between 0.02
    // and 0.32 over this grid, so the 2% bound is unreachable here; the
    // identity (and the constants behind it) verify to <= 0.6% at
    // alpha-adapted windows, reported alongside.
    let report = run_experiment("fd-limit", Experiment::FdLimit, |_| {});
    let pinned: Vec<_> = report
        .rows
        .iter()
        .filter(|r| r.name.contains("at (eps, M) = (1e-4, 1e4)"))
        .collect();
    assert_eq!(pinned.len(), 6);
    let adapted: Vec<_> = report
        .rows
        .iter()
        .filter(|r| r.name.contains("adapted window"))
        .collect();
    let adapted_ok = adapted.iter().all(|r| r.pass);
    let worst = pinned
        .iter()
        .map(|r| r.estimate)
        .fold(f64::NEG_INFINITY, f64::max);
    verdict(
        "8 fd-limit-identity",
        pinned.iter().all(|r| r.pass) && adapted_ok,
        &format!(
            "max deviation {worst:.3} vs 0.02 at the pinned window \
             (adapted-window deviations all pass: {adapted_ok}); \
             the pinned window's truncation residual alone exceeds the tolerance"
        ),
    );
}

#[test]
fn criterion_09_deep_trap_hit_mass() {
    let start = Instant::now();
    let report = run_experiment("coarse-lemma21", Experiment::CoarseLemma21, |_| {});
    let elapsed = start.elapsed().as_secs_f64();
    let median = row(&report, "median h^2 P[s != 0]");
    verdict(
        "9 deep-trap-hit-mass",
        median.pass && elapsed <= 1200.0,
        &format!(
            "median ratio {:.4} in [0.75, 1.25] at n = 14; {elapsed:.0}s of 1200s budget",
            median.estimate
        ),
    );
}

#[test]
fn criterion_10_displacement_transform() {
    let report = run_experiment("displacement", Experiment::Displacement, |_| {});
    let lap = row(&report, "h^2 (1 - E e^(-xi.r/r))");
    verdict(
        "10 displacement-transform",
        lap.pass,
        &format!("{:.4} within 0.05 of -1/6", lap.estimate),
    );
}

#[test]
fn criterion_11_score_sum_clock_approximation() {
    // Asserted at the stated (n = 14, delta = 0.1) with the best tuning
    // found by the (eps, M, m, T) scan (recorded in the config defaults).
    // The two requirements - shallow-trap mass ~ T sqrt(eps) below delta
    // and deep-trap multiplicity eps^{-1/2} below h^2 = 2.94 - cannot hold
    // together at this level, so the bound is expected to fail; the trend
    // across n shows the fraction decreasing as the lemma predicts.
    let report = run_experiment("coarse-lemma24", Experiment::CoarseLemma24, |_| {});
    let fraction = row(&report, "P[discrepancy >= 0.1]");
    verdict(
        "11 score-sum-clock-approximation",
        fraction.pass,
        &format!(
            "exceedance fraction {:.3} vs bound 0.1 at n = 14 ({})",
            fraction.estimate, fraction.note
        ),
    );
}

#[test]
fn criterion_12_clock_marginal() {
    let report = run_experiment("clock-marginal", Experiment::ClockMarginal, |_| {});
    let ks = row(&report, "KS(S_N(1), V_alpha(1))");
    verdict(
        "12 clock-marginal",
        ks.pass,
        &format!("one-sample KS {:.4} vs bound 0.08 at N = 1e6", ks.estimate),
    );
}

#[test]
fn criterion_13_ctrw_comparison() {
    let report = run_experiment("ctrw-compare", Experiment::CtrwCompare, |_| {});
    let ks = row(&report, "KS(rescaled CTRW");
    verdict(
        "13 ctrw-comparison",
        ks.pass,
        &format!("two-sample KS {:.4} vs bound 0.05 at N = 1e6", ks.estimate),
    );
}

/// Reduced-size configs for the determinism reruns of the heavier
/// experiments; thread-count independence is a structural property of the
/// replica scheduling, not of the sample size.
fn determinism_config(experiment: Experiment) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::defaults_for(experiment);
    match experiment {
        Experiment::EnvTail => cfg.replicas = 20_000,
        Experiment::WalkBasics => cfg.replicas = 4_000,
        Experiment::ClockMarginal => cfg.replicas = 400,
        Experiment::FkCharfn => cfg.replicas = 5_000,
        Experiment::FkSelfsim => cfg.replicas = 4_000,
        Experiment::Aging => {
            cfg.replicas = 300;
            cfg.t_w = 1e4;
        }
        Experiment::CoarseLemma21 => {
            cfg.n = 10;
            cfg.n_trend = vec![];
            cfg.sample_sites = 12;
            cfg.parts_per_site = 60;
        }
        Experiment::CoarseLemma24 => {
            cfg.n = 10;
            cfg.n_trend = vec![];
            cfg.replicas = 60;
        }
        Experiment::Displacement => {
            cfg.n = 10;
            cfg.sample_sites = 10;
            cfg.parts_per_site = 80;
        }
        Experiment::GreenBall => cfg.radii = vec![8.0, 12.0],
        Experiment::HittingBounds => cfg.radii = vec![20.0],
        Experiment::GreenFree | Experiment::FdLimit | Experiment::CtrwCompare => {
            cfg.replicas = cfg.replicas.min(2_000);
        }
    }
    cfg
}

#[test]
fn cli_exit_codes_and_usage_errors() {
    let binary = env!("CARGO_BIN_EXE_trap-model");
    // Unknown experiment: usage error, exit 2.
    let out = Command::new(binary)
        .args(["run", "no-such-experiment"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown experiment"));

    // Violated precondition is named: aging with t_w <= 0.
    let cfg_path = out_dir("cli").join("bad-aging.json");
    let mut cfg = ExperimentConfig::defaults_for(Experiment::Aging);
    cfg.t_w = -5.0;
    std::fs::write(&cfg_path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let out = Command::new(binary)
        .args([
            "run",
            "aging",
            "--config",
            cfg_path.to_str().unwrap(),
            "--out",
            out_dir("cli/bad").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("t_w"));

    // `list` enumerates all experiments with schemas.
    let out = Command::new(binary).arg("list").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for e in trap_model_cli::config::ALL_EXPERIMENTS {
        assert!(text.contains(e.name()), "list is missing {e}");
    }
}

#[test]
fn criterion_14_thread_count_determinism() {
    let binary = env!("CARGO_BIN_EXE_trap-model");
    let mut all_ok = true;
    let mut checked_files = 0usize;
    for experiment in trap_model_cli::config::ALL_EXPERIMENTS {
        let cfg = determinism_config(experiment);
        let cfg_path = out_dir("determinism").join(format!("{}.json", experiment.name()));
        std::fs::write(&cfg_path, serde_json::to_string(&cfg).unwrap()).unwrap();
        let mut outputs = Vec::new();
        for threads in [1usize, 4] {
            let dir = out_dir(&format!("determinism/{}-t{}", experiment.name(), threads));
            let status = Command::new(binary)
                .args([
                    "run",
                    experiment.name(),
                    "--config",
                    cfg_path.to_str().unwrap(),
                    "--threads",
                    &threads.to_string(),
                    "--out",
                    dir.to_str().unwrap(),
                ])
                .output()
                .expect("binary runs");
            // 0 = tolerances met, 1 = statistical failure; both are valid
            // outcomes for the determinism comparison. 2 would be a bug.
            let code = status.status.code().unwrap_or(-1);
            assert!(
                code == 0 || code == 1,
                "{experiment}: unexpected exit code {code}: {}",
                String::from_utf8_lossy(&status.stderr)
            );
            outputs.push(dir);
        }
        // Compare every CSV byte for byte.
        let mut names: Vec<String> = std::fs::read_dir(&outputs[0])
            .unwrap()
            .filter_map(|e| {
                let name = e.unwrap().file_name().into_string().unwrap();
                name.ends_with(".csv").then_some(name)
            })
            .collect();
        names.sort();
        assert!(
            !names.is_empty(),
            "{experiment}: no CSV artifacts to compare"
        );
        for name in names {
            let a = std::fs::read(outputs[0].join(&name)).unwrap();
            let b = std::fs::read(outputs[1].join(&name)).unwrap();
            if a != b {
                println!("  determinism breach: {experiment}/{name}");
                all_ok = false;
            }
            checked_files += 1;
        }
    }
    verdict(
        "14 thread-count-determinism",
        all_ok,
        &format!("{checked_files} CSV files bitwise identical across thread counts 1 and 4"),
    );
}
