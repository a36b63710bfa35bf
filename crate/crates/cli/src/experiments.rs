//! One function per experiment. Each writes its CSVs and figures into the staging area.

use std::collections::BTreeMap;

use pulseqfm::diffgeo::{loss_gradient, rank_report, CONVERGED_GRAD_NORM};
use pulseqfm::metrics::{expressibility, fcc, fidelity_distortion_sweep, SamplingConfig, DEFAULT_BINS};
use pulseqfm::model::{ansatz_by_name, Ansatz, Mode};
use pulseqfm::spectral::{
    coefficient_variance_sweep, extract_coefficients, mean_std, sigma2_grid, VarianceSweepConfig,
};
use pulseqfm::train::{
    converge_theta, initial_model, run_comparison, seeded_target, AdamOptions, ConvergeOptions, TrainConfig,
};

use crate::config::{Experiment, RunConfig};
use crate::error::CliError;
use crate::output::{fmt_f, Staging};
use crate::svg::{bar_chart, line_chart, palette, ramp, BarSeries, LineSeries};

const DEFAULT_SAMPLES: usize = 4000;

pub fn run(cfg: &RunConfig, out: &mut Staging) -> Result<(), CliError> {
    match cfg.experiment {
        Experiment::Train => train(cfg, out),
        Experiment::Coeffs => coeffs(cfg, out),
        Experiment::VarianceSweep => variance_sweep(cfg, out),
        Experiment::Fcc => fcc_sweep(cfg, out),
        Experiment::Expressibility => expressibility_sweep(cfg, out),
        Experiment::FidelitySweep => fidelity(cfg, out),
        Experiment::Rank => rank(cfg, out),
        Experiment::Report => {
            for f in [train, coeffs, variance_sweep, fcc_sweep, expressibility_sweep, fidelity, rank] {
                f(cfg, out)?;
            }
            Ok(())
        }
    }
}

fn progress(stage: &str, msg: &str) {
    eprintln!("[{stage}] {msg}");
}

fn ansatze(cfg: &RunConfig) -> Result<Vec<Ansatz>, CliError> {
    cfg.ansatze
        .iter()
        .map(|a| ansatz_by_name(a, cfg.n_qubits).map_err(|e| CliError::Config(e.to_string())))
        .collect()
}

fn train_config(cfg: &RunConfig, ansatz: &str, mode: Mode) -> TrainConfig {
    TrainConfig {
        ansatz: ansatz.to_string(),
        n_qubits: cfg.n_qubits,
        n_blocks: cfg.n_blocks,
        mode,
        seeds: cfg.seed_list(),
        steps: cfg.steps,
        adam: AdamOptions {
            learning_rate: cfg.lr,
            ..AdamOptions::default()
        },
        master_seed: cfg.master_seed,
        freeze_extensions: false,
    }
}

fn grid(cfg: &RunConfig) -> Vec<f64> {
    sigma2_grid(cfg.sigma2_max, cfg.sigma2_steps)
}

fn sampling(cfg: &RunConfig, sigma2: f64) -> SamplingConfig {
    SamplingConfig {
        n_blocks: cfg.n_blocks,
        n_samples: cfg.samples_or(DEFAULT_SAMPLES),
        sigma2,
        master_seed: cfg.master_seed,
    }
}

fn mode_dash(mode: Mode) -> Option<String> {
    match mode {
        Mode::Gate => None,
        Mode::Decomposed => Some("6 3".into()),
        Mode::Pulse => Some("2 2".into()),
    }
}

fn train(cfg: &RunConfig, out: &mut Staging) -> Result<(), CliError> {
    let stage = "train";
    let modes = cfg.mode.modes();
    progress(stage, &format!("{} ansätze × {} modes × {} seeds", cfg.ansatze.len(), modes.len(), cfg.seeds));
    let base = train_config(cfg, &cfg.ansatze[0], Mode::Gate);
    let cmp = run_comparison(&cfg.ansatze, &modes, &base).map_err(|e| CliError::numerical(stage, e))?;

    let mut history = Vec::new();
    for rec in &cmp.records {
        for run in &rec.runs {
            for (step, mse) in run.mse.iter().enumerate() {
                history.push(vec![
                    rec.ansatz.clone(),
                    rec.mode.to_string(),
                    run.seed.to_string(),
                    step.to_string(),
                    fmt_f(*mse),
                ]);
            }
        }
    }
    out.write_csv("train_history.csv", &["ansatz", "mode", "seed", "step", "mse"], history)?;
    out.write_csv(
        "train_summary.csv",
        &[
            "ansatz",
            "mode",
            "pulse_param_count",
            "final_mse_mean",
            "final_mse_std",
            "final_mse_median",
            "rank_theta",
            "rank_ext",
        ],
        cmp.rows.iter().map(|r| {
            vec![
                r.ansatz.clone(),
                r.mode.to_string(),
                r.pulse_param_count.to_string(),
                fmt_f(r.final_mse_mean),
                fmt_f(r.final_mse_std),
                fmt_f(r.final_mse_median),
                r.rank_theta.to_string(),
                r.rank_ext.to_string(),
            ]
        }),
    )?;

    let mut groups: Vec<String> = Vec::new();
    for r in &cmp.rows {
        if !groups.contains(&r.ansatz) {
            groups.push(r.ansatz.clone());
        }
    }
    let series: Vec<BarSeries> = modes
        .iter()
        .enumerate()
        .map(|(i, &mode)| {
            let pick = |g: &String, f: &dyn Fn(&pulseqfm::train::ComparisonRow) -> f64| {
                cmp.rows
                    .iter()
                    .find(|r| &r.ansatz == g && r.mode == mode)
                    .map_or(f64::NAN, f)
            };
            BarSeries {
                name: mode.to_string(),
                colour: palette(i),
                values: groups.iter().map(|g| pick(g, &|r| r.final_mse_mean)).collect(),
                errors: Some(groups.iter().map(|g| pick(g, &|r| r.final_mse_std)).collect()),
            }
        })
        .collect();
    out.write_text(
        "final_mse.svg",
        &bar_chart("Final training MSE by ansatz and mode", "final MSE", &groups, &series, false),
    )?;

    let curves: Vec<LineSeries> = cmp
        .records
        .iter()
        .map(|rec| {
            let n = rec.runs[0].mse.len();
            let mean: Vec<f64> = (0..n)
                .map(|s| rec.runs.iter().map(|r| r.mse[s]).sum::<f64>() / rec.runs.len() as f64)
                .collect();
            let idx = groups.iter().position(|g| g == &rec.ansatz).unwrap_or(0);
            LineSeries {
                name: format!("{} {}", rec.ansatz, rec.mode),
                colour: palette(idx),
                xs: (0..n).map(|s| s as f64).collect(),
                ys: mean,
                errors: None,
                dash: mode_dash(rec.mode),
            }
        })
        .collect();
    out.write_text(
        "training_curves.svg",
        &line_chart(
            "Mean training MSE (inset: first 100 steps)",
            "step",
            "MSE",
            &curves,
            true,
            Some(100f64.min(cfg.steps as f64)),
        ),
    )
}

fn coeffs(cfg: &RunConfig, out: &mut Staging) -> Result<(), CliError> {
    let stage = "coeffs";
    progress(stage, "extracting coefficients at seeded initial points");
    let mut rows = Vec::new();
    let mut targets = Vec::new();
    for a in &cfg.ansatze {
        for mode in cfg.mode.modes() {
            let tc = train_config(cfg, a, mode);
            for seed in cfg.seed_list() {
                let m = initial_model(&tc, seed).map_err(|e| CliError::numerical(stage, e))?;
                let c = extract_coefficients(&m).map_err(|e| CliError::numerical(stage, e))?;
                for (w, z) in c.frequencies().iter().zip(c.coefficients()) {
                    rows.push(vec![
                        a.clone(),
                        mode.to_string(),
                        seed.to_string(),
                        w.to_string(),
                        fmt_f(z.re),
                        fmt_f(z.im),
                    ]);
                }
            }
        }
        let tc = train_config(cfg, a, Mode::Gate);
        for seed in cfg.seed_list() {
            let t = seeded_target(&tc, seed).map_err(|e| CliError::numerical(stage, e))?;
            let c = &t.coefficients;
            for (w, z) in c.frequencies().iter().zip(c.coefficients()) {
                targets.push(vec![a.clone(), seed.to_string(), w.to_string(), fmt_f(z.re), fmt_f(z.im)]);
            }
        }
    }
    out.write_csv("coefficients.csv", &["ansatz", "mode", "seed", "omega", "re", "im"], rows)?;
    out.write_csv("targets.csv", &["ansatz", "seed", "omega", "re", "im"], targets)
}

fn variance_sweep(cfg: &RunConfig, out: &mut Staging) -> Result<(), CliError> {
    let stage = "variance-sweep";
    let sweep = VarianceSweepConfig {
        n_blocks: cfg.n_blocks,
        sigma2_grid: grid(cfg),
        n_param_samples: cfg.samples_or(DEFAULT_SAMPLES),
        seeds: cfg.seed_list(),
        tau: cfg.tau,
        master_seed: cfg.master_seed,
    };
    let mut var_rows = Vec::new();
    let mut act_rows = Vec::new();
    let mut results = Vec::new();
    for a in ansatze(cfg)? {
        progress(stage, a.name());
        let r = coefficient_variance_sweep(&a, &sweep).map_err(|e| CliError::numerical(stage, e))?;
        for (si, seed) in r.seeds.iter().enumerate() {
            for (gi, s2) in r.sigma2.iter().enumerate() {
                for (w, v) in r.frequencies.iter().zip(&r.variances[si][gi]) {
                    var_rows.push(vec![r.ansatz.clone(), seed.to_string(), fmt_f(*s2), w.to_string(), fmt_f(*v)]);
                }
            }
        }
        for (gi, s2) in r.sigma2.iter().enumerate() {
            act_rows.push(vec![
                r.ansatz.clone(),
                fmt_f(*s2),
                fmt_f(r.active_mean[gi]),
                fmt_f(r.active_std[gi]),
            ]);
        }
        results.push(r);
    }
    out.write_csv("variance.csv", &["ansatz", "seed", "sigma2", "omega", "var"], var_rows)?;
    out.write_csv(
        "activation.csv",
        &["ansatz", "sigma2", "active_count_mean", "active_count_std"],
        act_rows,
    )?;

    let groups: Vec<String> = results.iter().map(|r| r.ansatz.clone()).collect();
    let n = sweep.sigma2_grid.len();
    let series: Vec<BarSeries> = sweep
        .sigma2_grid
        .iter()
        .enumerate()
        .map(|(gi, s2)| BarSeries {
            name: format!("σ² = {s2:.4}"),
            colour: ramp(if n > 1 { gi as f64 / (n - 1) as f64 } else { 0.0 }),
            values: results.iter().map(|r| r.active_mean[gi]).collect(),
            errors: Some(results.iter().map(|r| r.active_std[gi]).collect()),
        })
        .collect();
    out.write_text(
        "activation.svg",
        &bar_chart(
            &format!("Active frequencies (variance > {:e})", cfg.tau),
            "active frequency count",
            &groups,
            &series,
            false,
        ),
    )
}

fn per_ansatz_lines(rows: &BTreeMap<String, Vec<(f64, f64)>>, order: &[String]) -> Vec<LineSeries> {
    order
        .iter()
        .enumerate()
        .filter_map(|(i, a)| {
            rows.get(a).map(|pts| LineSeries {
                name: a.clone(),
                colour: palette(i),
                xs: pts.iter().map(|p| p.0).collect(),
                ys: pts.iter().map(|p| p.1).collect(),
                errors: None,
                dash: None,
            })
        })
        .collect()
}

fn fcc_sweep(cfg: &RunConfig, out: &mut Staging) -> Result<(), CliError> {
    let stage = "fcc";
    let mut rows = Vec::new();
    let mut lines = BTreeMap::new();
    for a in ansatze(cfg)? {
        progress(stage, a.name());
        let mut pts = Vec::new();
        for s2 in grid(cfg) {
            let r = fcc(&a, &sampling(cfg, s2)).map_err(|e| CliError::numerical(stage, e))?;
            rows.push(vec![a.name().to_string(), fmt_f(s2), fmt_f(r.fcc)]);
            pts.push((s2, r.fcc));
        }
        lines.insert(a.name().to_string(), pts);
    }
    out.write_csv("fcc.csv", &["ansatz", "sigma2", "fcc"], rows)?;
    out.write_text(
        "fcc.svg",
        &line_chart(
            "Fourier coefficient correlation vs pulse distortion",
            "σ²",
            "FCC",
            &per_ansatz_lines(&lines, &cfg.ansatze),
            false,
            None,
        ),
    )
}

fn expressibility_sweep(cfg: &RunConfig, out: &mut Staging) -> Result<(), CliError> {
    let stage = "expressibility";
    let mut rows = Vec::new();
    let mut lines = BTreeMap::new();
    for a in ansatze(cfg)? {
        progress(stage, a.name());
        let mut pts = Vec::new();
        for s2 in grid(cfg) {
            let r = expressibility(&a, &sampling(cfg, s2), DEFAULT_BINS)
                .map_err(|e| CliError::numerical(stage, e))?;
            rows.push(vec![a.name().to_string(), fmt_f(s2), fmt_f(r.dkl)]);
            pts.push((s2, r.dkl));
        }
        lines.insert(a.name().to_string(), pts);
    }
    out.write_csv("expressibility.csv", &["ansatz", "sigma2", "dkl"], rows)?;
    out.write_text(
        "expressibility.svg",
        &line_chart(
            "Expressibility (KL divergence to Haar) vs pulse distortion",
            "σ²",
            "D_KL",
            &per_ansatz_lines(&lines, &cfg.ansatze),
            false,
            None,
        ),
    )
}

fn fidelity(cfg: &RunConfig, out: &mut Staging) -> Result<(), CliError> {
    let stage = "fidelity-sweep";
    let mut rows = Vec::new();
    let mut series = Vec::new();
    for (i, a) in ansatze(cfg)?.iter().enumerate() {
        progress(stage, a.name());
        let res = fidelity_distortion_sweep(a, &grid(cfg), &sampling(cfg, 0.0))
            .map_err(|e| CliError::numerical(stage, e))?;
        for r in &res {
            rows.push(vec![
                a.name().to_string(),
                fmt_f(r.sigma2),
                fmt_f(r.fidelity_mean),
                fmt_f(r.fidelity_std),
                fmt_f(r.trace_mean),
                fmt_f(r.trace_std),
            ]);
        }
        let xs: Vec<f64> = res.iter().map(|r| r.sigma2).collect();
        series.push(LineSeries {
            name: format!("{} fidelity", a.name()),
            colour: palette(i),
            xs: xs.clone(),
            ys: res.iter().map(|r| r.fidelity_mean).collect(),
            errors: None,
            dash: None,
        });
        series.push(LineSeries {
            name: format!("{} trace dist.", a.name()),
            colour: palette(i),
            xs,
            ys: res.iter().map(|r| r.trace_mean).collect(),
            errors: None,
            dash: Some("4 3".into()),
        });
    }
    out.write_csv(
        "fidelity.csv",
        &["ansatz", "sigma2", "fidelity_mean", "fidelity_std", "trace_mean", "trace_std"],
        rows,
    )?;
    out.write_text(
        "fidelity.svg",
        &line_chart(
            "Gate vs distorted pulse states",
            "σ²",
            "fidelity / trace distance",
            &series,
            false,
            None,
        ),
    )
}

fn rank(cfg: &RunConfig, out: &mut Staging) -> Result<(), CliError> {
    let stage = "rank";
    let mut rank_rows = Vec::new();
    let mut escape_rows = Vec::new();
    let opts = ConvergeOptions {
        adam: AdamOptions {
            learning_rate: cfg.lr,
            ..AdamOptions::default()
        },
        ..ConvergeOptions::default()
    };
    for a in ansatze(cfg)? {
        progress(stage, a.name());
        let tc = train_config(cfg, a.name(), Mode::Gate);
        let mut gains = Vec::new();
        for seed in cfg.seed_list() {
            let m = initial_model(&tc, seed).map_err(|e| CliError::numerical(stage, e))?;
            let r = rank_report(&m).map_err(|e| CliError::numerical(stage, e))?;
            gains.push(r.rank_gain as f64);
            rank_rows.push(vec![
                a.name().to_string(),
                seed.to_string(),
                r.rank_theta.to_string(),
                r.rank_ext.to_string(),
                r.rank_gain.to_string(),
            ]);
        }
        progress(stage, &format!("{} mean rank gain {:.2}", a.name(), mean_std(&gains).0));
        if !a.has_composite_gates() {
            continue;
        }
        for seed in cfg.seed_list() {
            let mut m = initial_model(&tc, seed).map_err(|e| CliError::numerical(stage, e))?;
            let target = seeded_target(&tc, seed).map_err(|e| CliError::numerical(stage, e))?;
            converge_theta(&mut m, &target.coefficients, &opts).map_err(|e| CliError::numerical(stage, e))?;
            let (gt, gl, res) = loss_gradient(&m.with_mode(Mode::Pulse), &target.coefficients)
                .map_err(|e| CliError::numerical(stage, e))?;
            let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let gt = norm(&gt);
            escape_rows.push(vec![
                a.name().to_string(),
                seed.to_string(),
                fmt_f(gt),
                fmt_f(norm(&gl)),
                fmt_f(res),
                (gt < CONVERGED_GRAD_NORM).to_string(),
            ]);
        }
    }
    out.write_csv(
        "rank.csv",
        &["ansatz", "seed", "rank_theta", "rank_ext", "rank_gain"],
        rank_rows,
    )?;
    out.write_csv(
        "escape.csv",
        &["ansatz", "seed", "grad_theta_norm", "grad_lambda_norm", "residual_norm", "converged"],
        escape_rows,
    )
}
