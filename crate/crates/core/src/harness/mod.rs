//! Experiment configs, Monte Carlo sweeps and CSV reports.
//!
//! Every runner is deterministic in the seed: replicate `r` draws from its own
//! stream and results are folded in replicate order, so the CSV does not depend
//! on the thread count. Timing goes to the manifest only.

mod bound;
mod clt;
mod config;
mod demos;
mod figure1;
mod io;
mod table;

pub use bound::{bound_table, default_bound_suite, efficiency_report, run_bound_check, EfficiencyReport};
pub use clt::{moments, run_clt_check, run_wpe_sweep};
pub use config::{BoundCase, ExperimentConfig, ExperimentKind};
pub use demos::{run_sdot_demo, run_wpe_fit};
pub use figure1::{l_statistic_moments, run_figure1, uniform_scale_reference, FIGURE1_ESTIMATORS, FIGURE1_N_GRID};
pub use io::{read_matrix_csv, read_sample_csv};
pub use table::{format_theta, ResultRow, ResultTable, RowContext, CSV_SCHEMA};

use crate::error::Result;
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Written next to the outputs of every run.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub experiment: String,
    pub seed: u64,
    pub version: String,
    pub csv_schema: u32,
    pub threads: usize,
    pub wall_time_seconds: f64,
    pub rows: usize,
    pub outputs: Vec<PathBuf>,
    pub config: ExperimentConfig,
}

/// Runs `config`, writes its outputs and `manifest.json` into `out_dir`.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<Manifest> {
    config.validate()?;
    fs::create_dir_all(out_dir)?;
    let start = Instant::now();
    let name = config.experiment.name();
    let csv_path = out_dir.join(config.output.clone().unwrap_or_else(|| PathBuf::from(format!("{name}.csv"))));
    let mut outputs = vec![csv_path.clone()];

    let table = match config.experiment {
        ExperimentKind::Figure1 => run_figure1(config)?,
        ExperimentKind::Bound => bound_table(&run_bound_check(config)?, config.seed),
        ExperimentKind::WpeSweep => run_wpe_sweep(config)?,
        ExperimentKind::Clt => run_clt_check(config)?,
        ExperimentKind::SdotDemo => {
            let (table, solve) = run_sdot_demo(config)?;
            let json = out_dir.join("sdot.json");
            fs::write(&json, serde_json::to_string_pretty(&solve)?)?;
            outputs.push(json);
            table
        }
        ExperimentKind::Wpe => {
            let (fit, gradients) = run_wpe_fit(config)?;
            let json = out_dir.join("fit.json");
            fs::write(&json, serde_json::to_string_pretty(&fit)?)?;
            let grad_path = out_dir.join("gradients.csv");
            let mut w = csv::Writer::from_path(&grad_path)?;
            for g in &gradients {
                w.write_record(g.iter().map(|v| format!("{v:e}")))?;
            }
            w.flush()?;
            outputs.push(json);
            outputs.push(grad_path);
            wpe_fit_table(config, &fit, gradients.len())
        }
    };
    table.save(&csv_path)?;

    let manifest = Manifest {
        experiment: name.to_string(),
        seed: config.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        csv_schema: CSV_SCHEMA,
        threads: rayon::current_num_threads(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        rows: table.rows.len(),
        outputs,
        config: config.clone(),
    };
    fs::write(out_dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    log::info!("{name}: {} rows in {:.2}s", manifest.rows, manifest.wall_time_seconds);
    Ok(manifest)
}

fn wpe_fit_table(config: &ExperimentConfig, fit: &crate::wpe::WpeFit, n: usize) -> ResultTable {
    let ctx = RowContext {
        experiment: "wpe".into(),
        family: config.family.clone().unwrap_or_default(),
        estimator: "wpe".into(),
        theta: fit.theta_hat.clone(),
        n,
        reps: 1,
        eps: None,
        seed: config.seed,
    };
    let mut table = ResultTable::default();
    for (j, t) in fit.theta_hat.iter().enumerate() {
        table.push(ctx.row(&format!("theta_hat[{j}]"), *t, None, None));
    }
    table.push(ctx.row("objective", fit.objective, None, None));
    table.push(ctx.row("first_order_residual", fit.first_order_residual, None, Some(0.0)));
    table.push(ctx.row("iterations", fit.iterations as f64, None, None));
    table
}
