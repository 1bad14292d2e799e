use anyhow::Result;
use pauli_tomo::design::{
    conjecture_report, optimize_angle_risk, optimize_planar, split_budget, two_step_risk, two_step_tomography,
};
use pauli_tomo::risk::{analytic_report, mc_loss, PlanarRegime, RiskMode, RiskReport};
use pauli_tomo::{angle_distance, extract_params, simulate_channel_estimate, ParamEstimate};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::table::{Cell, Report, Table};

const ESTIMATE_COLUMNS: [&str; 13] = [
    "lambda1_hat",
    "lambda2_hat",
    "lambda3_hat",
    "phi_z_hat",
    "phi_y_hat",
    "phi_x_hat",
    "cp_valid",
    "lambda1_err",
    "lambda2_err",
    "lambda3_err",
    "phi_z_err",
    "phi_y_err",
    "phi_x_err",
];

/// Estimates followed by their errors against the canonical true
/// parameters: signed for contractions, angular distance for angles.
fn estimate_cells(est: &ParamEstimate<f64>, truth: &ParamEstimate<f64>) -> Vec<Cell> {
    let (phi, phi_true) = (est.phi_hat.to_array(), truth.phi_hat.to_array());
    let mut cells: Vec<Cell> = est.lambda_hat.0.iter().map(|&v| v.into()).collect();
    cells.extend(phi.iter().map(|&v| Cell::F(v)));
    cells.push(est.cp_valid.into());
    cells.extend((0..3).map(|k| Cell::F(est.lambda_hat.0[k] - truth.lambda_hat.0[k])));
    cells.extend((0..3).map(|k| Cell::F(angle_distance(phi[k], phi_true[k]))));
    cells
}

fn angle_columns(prefix: &str) -> [String; 3] {
    ["z", "y", "x"].map(|a| format!("{prefix}_{a}"))
}

pub fn simulate(cfg: &RunConfig) -> Result<Report> {
    let params = cfg.params()?;
    let design = cfg.design()?;
    let a = params.matrix()?;
    let truth = extract_params(&a)?;
    let (theta, meas) = design.frames();
    let runs = cfg.trials.max(1);
    let results: Vec<_> = (0..runs)
        .into_par_iter()
        .map(|trial| -> Result<_> {
            let (counts, a_hat) = simulate_channel_estimate(&a, &theta, &meas, design.shots, cfg.seed, trial)?;
            Ok((trial, counts, a_hat, extract_params(&a_hat)?))
        })
        .collect::<Result<_>>()?;

    let mut header = vec!["trial".to_string()];
    for name in ["n", "a_hat"] {
        for i in 1..=3 {
            for j in 1..=3 {
                header.push(format!("{name}_{i}{j}"));
            }
        }
    }
    header.extend(ESTIMATE_COLUMNS.map(String::from));
    let mut table = Table::new(header);
    for (trial, counts, a_hat, est) in results {
        let mut row = vec![Cell::U(trial)];
        row.extend(counts.n.iter().flatten().map(|&n| Cell::U(n)));
        row.extend((0..9).map(|k| Cell::F(a_hat.0[(k / 3, k % 3)])));
        row.extend(estimate_cells(&est, &truth));
        table.push(row);
    }
    Ok(Report { command: "simulate", rows: table, surface: None })
}

fn risk_table() -> Table {
    Table::new([
        "mode", "trials", "shots", "f", "f_std_err", "g", "g_std_err", "h", "h_std_err", "f_bound", "g_bound",
    ])
}

fn risk_row(r: &RiskReport, shots: u64) -> Vec<Cell> {
    let (mode, trials) = match r.mode {
        RiskMode::Analytic => ("analytic", 0),
        RiskMode::MonteCarlo { trials } => ("monte-carlo", trials),
    };
    vec![
        mode.into(),
        trials.into(),
        shots.into(),
        r.f.into(),
        r.f_std_err.into(),
        r.g.into(),
        r.g_std_err.into(),
        r.h.into(),
        r.h_std_err.into(),
        r.f_bound.into(),
        r.g_bound.into(),
    ]
}

pub fn risk(cfg: &RunConfig) -> Result<Report> {
    let params = cfg.params()?;
    let design = cfg.design()?;
    let mut table = risk_table();
    table.push(risk_row(&analytic_report(&params, &design)?, design.shots));
    if cfg.trials > 0 {
        table.push(risk_row(&mc_loss(&params, &design, cfg.trials, cfg.seed)?, design.shots));
    }
    Ok(Report { command: "risk", rows: table, surface: None })
}

pub fn optimize(cfg: &RunConfig) -> Result<Report> {
    if cfg.planar {
        return optimize_planar_design(cfg);
    }
    let lambda = cfg.contraction()?;
    let shots = cfg.design.shots;
    let report = conjecture_report(&lambda, shots, &cfg.optimizer)?;
    let opt = &report.optimum;

    let mut header: Vec<String> = vec!["lambda1".into(), "lambda2".into(), "lambda3".into(), "shots".into()];
    header.extend(angle_columns("tau"));
    header.extend(angle_columns("vartheta"));
    header.extend(
        [
            "h_min",
            "h_zero_design",
            "h_conjecture_a",
            "h_conjecture_b",
            "gap_a",
            "gap_b",
            "relative_gap_a",
            "relative_gap_b",
            "symmetry_residual",
            "iterations",
            "evaluations",
        ]
        .map(String::from),
    );
    let mut table = Table::new(header);
    let mut row: Vec<Cell> = lambda.0.iter().map(|&v| v.into()).collect();
    row.push(shots.into());
    row.extend(opt.tau.to_array().map(Cell::F));
    row.extend(opt.vartheta.to_array().map(Cell::F));
    row.extend(
        [
            opt.h_min,
            report.h_zero_design,
            report.h_candidate_a,
            report.h_candidate_b,
            report.gap_a,
            report.gap_b,
            report.relative_gap_a,
            report.relative_gap_b,
            report.symmetry_residual,
        ]
        .map(Cell::F),
    );
    row.push((opt.iterations as u64).into());
    row.push((opt.evaluations as u64).into());
    table.push(row);

    let surface = if cfg.emit_surface {
        let points = optimize_angle_risk(&lambda, shots, &cfg.optimizer, true)?.surface.unwrap_or_default();
        let mut header: Vec<String> = angle_columns("tau").into();
        header.extend(angle_columns("vartheta"));
        header.push("h".into());
        let mut s = Table::new(header);
        for p in points {
            let mut row: Vec<Cell> = p.tau.to_array().map(Cell::F).into();
            row.extend(p.vartheta.to_array().map(Cell::F));
            row.push(p.h.into());
            s.push(row);
        }
        Some(s)
    } else {
        None
    };
    Ok(Report { command: "optimize", rows: table, surface })
}

fn optimize_planar_design(cfg: &RunConfig) -> Result<Report> {
    let (l1, l2) = cfg.planar_pair()?;
    let shots = cfg.design.shots;
    let search = optimize_planar(l1, l2, shots, &cfg.optimizer, cfg.emit_surface)?;
    let cf = search.closed_form;
    let mut table = Table::new([
        "lambda1",
        "lambda2",
        "shots",
        "tau",
        "vartheta",
        "h_min",
        "closed_form_tau",
        "closed_form_mirror",
        "closed_form_value",
        "regime",
    ]);
    let regime = match cf.regime {
        PlanarRegime::Diagonal => "diagonal",
        PlanarRegime::Split => "split",
    };
    table.push(vec![
        l1.into(),
        l2.into(),
        shots.into(),
        search.tau.into(),
        search.vartheta.into(),
        search.h_min.into(),
        cf.tau.into(),
        cf.mirror.into(),
        cf.value.into(),
        regime.into(),
    ]);
    let surface = search.surface.map(|points| {
        let mut s = Table::new(["tau", "vartheta", "h"]);
        for p in points {
            s.push(p.map(Cell::F).into());
        }
        s
    });
    Ok(Report { command: "optimize", rows: table, surface })
}

pub fn two_step(cfg: &RunConfig) -> Result<Report> {
    let params = cfg.params()?;
    let budget = cfg.two_step.budget;
    let ts = cfg.two_step_config();
    let (n1, n2) = split_budget(budget, ts.split)?;
    if cfg.trials > 0 {
        let mut table = risk_table();
        let report = two_step_risk(&params, budget, &ts, cfg.trials, cfg.seed)?;
        table.push(risk_row(&report, n2));
        return Ok(Report { command: "two-step", rows: table, surface: None });
    }
    let truth = extract_params(&params.matrix()?)?;
    let run = two_step_tomography(&params, budget, &ts, cfg.seed, 0)?;
    let mut header: Vec<String> = ["budget", "split", "stage1_shots", "stage2_shots"].map(String::from).into();
    header.extend(angle_columns("stage2_angles"));
    header.extend(ESTIMATE_COLUMNS.map(String::from));
    let mut table = Table::new(header);
    let mut row = vec![budget.into(), ts.split.into(), n1.into(), n2.into()];
    row.extend(run.stage2_design.meas_angles.to_array().map(Cell::F));
    row.extend(estimate_cells(&run.estimate, &truth));
    table.push(row);
    Ok(Report { command: "two-step", rows: table, surface: None })
}

/// Runs every acceptance check. Returns the table and whether all passed.
pub fn reproduce() -> (Report, bool) {
    let verdicts = pauli_tomo_acceptance::run_all();
    let mut table = Table::new(["id", "name", "status", "detail"]);
    for v in &verdicts {
        eprintln!("{v}");
        table.push(vec![
            u64::from(v.id).into(),
            v.name.into(),
            (if v.passed { "PASS" } else { "FAIL" }).into(),
            v.detail.as_str().into(),
        ]);
    }
    let passed = verdicts.iter().filter(|v| v.passed).count();
    eprintln!("{passed}/{} criteria passed", verdicts.len());
    (Report { command: "reproduce", rows: table, surface: None }, passed == verdicts.len())
}
