//! Subcommand bodies. Each returns the paths it wrote.

use std::path::PathBuf;

use serde::Serialize;
use serde_json::Value;

use super::config::RunConfig;
use super::io::{csv_bytes, format_f64, read_data_csv, read_json, read_labels_csv, to_json, write_atomic};
use crate::em::{fit, EmConfig};
use crate::error::{Error, Result};
use crate::metrics::evaluate;
use crate::model::{ComponentFamily, DataMatrix, FitResult, MixtureParams, PenaltyConfig};
use crate::selection::{modified_bic_with, select_g, BicRecord, SelectGConfig, SelectionReport};
use crate::simulate::{generate, SimDesign};

#[derive(Serialize)]
struct ParamsOut<'a> {
    family: ComponentFamily,
    weights: &'a [f64],
    locations: Vec<Vec<f64>>,
    scales: Vec<Vec<f64>>,
    dof: &'a [f64],
}

impl<'a> From<&'a MixtureParams> for ParamsOut<'a> {
    fn from(p: &'a MixtureParams) -> Self {
        let rows = |a: &ndarray::Array2<f64>| a.rows().into_iter().map(|r| r.to_vec()).collect();
        Self {
            family: p.family,
            weights: &p.weights,
            locations: rows(&p.locations),
            scales: rows(&p.scales),
            dof: &p.dof,
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    design: &'a SimDesign,
    seed: u64,
    n_samples: usize,
    n_vars: usize,
    column_names: &'a [String],
    informative_indices: &'a [usize],
    separations: &'a [Vec<f64>],
    generating_params: ParamsOut<'a>,
}

#[derive(Serialize)]
struct FitOut<'a> {
    g: usize,
    penalty: PenaltyConfig,
    seed: u64,
    n_samples: usize,
    n_vars: usize,
    column_names: &'a [String],
    converged: bool,
    n_iterations: usize,
    penalized_loglik: f64,
    bic: &'a BicRecord,
    assignments: &'a [usize],
    informative_mask: &'a [bool],
    selected_variables: Vec<usize>,
    params: ParamsOut<'a>,
    loglik_trace: &'a [f64],
}

#[derive(Serialize)]
struct ReportOut<'a> {
    seed: u64,
    n_samples: usize,
    n_vars: usize,
    column_names: &'a [String],
    #[serde(flatten)]
    report: &'a SelectionReport,
}

fn load_data(cfg: &RunConfig) -> Result<DataMatrix> {
    let table = read_data_csv(&cfg.data)?;
    if cfg.standardize {
        DataMatrix::standardize(table.values, table.column_names)
    } else {
        DataMatrix::new(table.values, table.column_names)
    }
}

fn prepare_out_dir(cfg: &RunConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))
}

fn out(cfg: &RunConfig, name: &str, bytes: &[u8], written: &mut Vec<PathBuf>) -> Result<()> {
    let path = cfg.out_dir.join(name);
    write_atomic(&path, bytes)?;
    written.push(path);
    Ok(())
}

/// Writes `data.csv`, `labels.csv` and `manifest.json`.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let design = cfg.sim_design()?;
    let sim = generate(&design)?;
    prepare_out_dir(cfg)?;
    let mut written = Vec::new();
    let names = sim.data.column_names();
    let ids: Vec<String> = (1..=design.n).map(|j| format!("s{j}")).collect();

    let mut header = vec!["sample_id".to_owned()];
    header.extend(names.iter().cloned());
    let rows = ids.iter().enumerate().map(|(j, id)| {
        let mut row = vec![id.clone()];
        row.extend(sim.data.row(j).iter().map(|&v| format_f64(v)));
        row
    });
    out(cfg, "data.csv", &csv_bytes(&header, rows)?, &mut written)?;

    let rows = ids.iter().zip(&sim.true_labels).map(|(id, l)| vec![id.clone(), l.to_string()]);
    out(cfg, "labels.csv", &csv_bytes(&["sample_id".into(), "label".into()], rows)?, &mut written)?;

    let manifest = Manifest {
        design: &design,
        seed: cfg.seed,
        n_samples: design.n,
        n_vars: design.p(),
        column_names: names,
        informative_indices: &sim.informative_indices,
        separations: &sim.separations,
        generating_params: (&sim.generating_params).into(),
    };
    out(cfg, "manifest.json", &to_json(&manifest)?, &mut written)?;
    Ok(written)
}

fn fit_json(cfg: &RunConfig, data: &DataMatrix, g: usize, f: &FitResult) -> Result<Vec<u8>> {
    let bic = modified_bic_with(f, g, data.n_vars(), cfg.bic);
    to_json(&FitOut {
        g,
        penalty: f.penalty,
        seed: cfg.seed,
        n_samples: data.n_samples(),
        n_vars: data.n_vars(),
        column_names: data.column_names(),
        converged: f.converged,
        n_iterations: f.n_iterations,
        penalized_loglik: f.penalized_loglik,
        bic: &bic,
        assignments: &f.assignments,
        informative_mask: &f.informative_mask,
        selected_variables: f.selected_variables(),
        params: (&f.params).into(),
        loglik_trace: &f.loglik_trace,
    })
}

/// Writes `fit.json`. A fit that hit the iteration cap is still written, then
/// reported as a numerical error.
pub fn cmd_fit(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let em: EmConfig = cfg.em_config()?;
    let penalty = cfg.penalty()?;
    let data = load_data(cfg)?;
    let result = fit(&data, cfg.fit_g, &penalty, &em)?;
    prepare_out_dir(cfg)?;
    let mut written = Vec::new();
    out(cfg, "fit.json", &fit_json(cfg, &data, cfg.fit_g, &result)?, &mut written)?;
    if !result.converged {
        return Err(Error::Numerical(format!(
            "EM did not converge within {} iterations; partial fit written",
            cfg.max_iterations
        )));
    }
    Ok(written)
}

/// Writes `report.json`, `ranked.csv`, `bic.csv` and `heatmap.csv`.
pub fn cmd_select(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let em = cfg.em_config()?;
    let data = load_data(cfg)?;
    let mut sel = SelectGConfig::new(cfg.g_candidates.clone(), cfg.grid(data.n_samples()));
    sel.replicates = cfg.replicates;
    sel.threshold = cfg.threshold;
    sel.use_bootstrap = cfg.bootstrap;
    sel.bic = cfg.bic;
    let report = select_g(&data, &sel, &em)?;
    prepare_out_dir(cfg)?;
    let mut written = Vec::new();
    let names = data.column_names();

    let body = ReportOut {
        seed: cfg.seed,
        n_samples: data.n_samples(),
        n_vars: data.n_vars(),
        column_names: names,
        report: &report,
    };
    out(cfg, "report.json", &to_json(&body)?, &mut written)?;

    let rows = report.ranked_variables.iter().enumerate().map(|(k, &d)| {
        vec![(k + 1).to_string(), names[d].clone(), format_f64(report.selection_probabilities[d])]
    });
    let header = ["rank", "column_name", "selection_probability"].map(String::from);
    out(cfg, "ranked.csv", &csv_bytes(&header, rows)?, &mut written)?;

    let header = ["g", "lambda_mu", "lambda_sigma", "m_selected", "effective_params", "bic", "penalized_loglik", "converged"]
        .map(String::from);
    let rows = report.bic_table.iter().map(|r| {
        vec![
            r.g.to_string(),
            format_f64(r.lambda.lambda_mu),
            format_f64(r.lambda.lambda_sigma),
            r.m_selected.to_string(),
            format_f64(r.effective_params),
            format_f64(r.bic),
            format_f64(r.penalized_loglik),
            r.converged.to_string(),
        ]
    });
    out(cfg, "bic.csv", &csv_bytes(&header, rows)?, &mut written)?;

    // top-ranked variables, samples grouped by cluster
    let top: Vec<usize> = report.ranked_variables.iter().copied().take(cfg.heatmap_top).collect();
    let mut order: Vec<usize> = (0..data.n_samples()).collect();
    order.sort_by_key(|&j| (report.assignments[j], j));
    let mut header = vec!["sample_index".to_owned(), "cluster".to_owned()];
    header.extend(top.iter().map(|&d| names[d].clone()));
    let rows = order.iter().map(|&j| {
        let mut row = vec![j.to_string(), report.assignments[j].to_string()];
        row.extend(top.iter().map(|&d| format_f64(data.values()[[j, d]])));
        row
    });
    out(cfg, "heatmap.csv", &csv_bytes(&header, rows)?, &mut written)?;
    Ok(written)
}

fn usize_array(v: &Value, key: &str, file: &std::path::Path) -> Result<Vec<usize>> {
    let bad = || Error::Parse {
        file: file.display().to_string(),
        line: 0,
        column: 0,
        message: format!("missing or malformed integer array {key:?}"),
    };
    v.get(key)
        .and_then(Value::as_array)
        .ok_or_else(bad)?
        .iter()
        .map(|x| x.as_u64().map(|x| x as usize).ok_or_else(bad))
        .collect()
}

/// Writes `eval.json` comparing a fit or selection report with the truth.
pub fn cmd_evaluate(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let truth = read_labels_csv(&cfg.labels)?;
    let manifest = read_json(&cfg.manifest)?;
    let result = read_json(&cfg.result)?;
    let informative = usize_array(&manifest, "informative_indices", &cfg.manifest)?;
    let p = manifest
        .get("n_vars")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::Validation(format!("{} has no n_vars", cfg.manifest.display())))? as usize;
    let estimated = usize_array(&result, "assignments", &cfg.result)?;
    let selected_key = if result.get("stable_set").is_some() { "stable_set" } else { "selected_variables" };
    let selected = usize_array(&result, selected_key, &cfg.result)?;
    let eval = evaluate(&truth, &estimated, &selected, &informative, p)?;
    prepare_out_dir(cfg)?;
    let mut written = Vec::new();
    out(cfg, "eval.json", &to_json(&eval)?, &mut written)?;
    Ok(written)
}
