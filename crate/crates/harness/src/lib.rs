//! Experiment driver for the averaged Parareal solver on the rotating
//! shallow water equations: window sweeps, the averaging-error oracle and
//! optimal-window prediction, written out as CSV tables with SVG plots.

pub mod experiments;
pub mod output;
pub mod params;
pub mod setup;

use std::path::PathBuf;

use anyhow::Result;

use experiments::{ExperimentName, Table};
use output::{ConstantsFile, PlotSpec};
use params::RunParams;

/// Files written by [`run_experiment`].
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub table: Table,
    pub csv: PathBuf,
    pub svg: PathBuf,
    pub constants: Option<PathBuf>,
}

pub fn plot_spec(name: ExperimentName) -> PlotSpec {
    let (title, x, y, log_x, log_y) = match name {
        ExperimentName::IterationsVsWindow => ("Parareal iterations", "window", "iterations", true, false),
        ExperimentName::CoarseErrorVsWindow => ("Coarse error", "window", "coarse_error", true, true),
        ExperimentName::IterativeErrorVsWindow => ("Error after three iterations", "window", "error", true, true),
        ExperimentName::OptimalWindowPrediction => ("Optimal window", "epsilon", "window_full", true, true),
        ExperimentName::AveragingOracle => ("Averaging error", "window", "error", true, true),
    };
    PlotSpec {
        title: title.into(),
        x: x.into(),
        y: y.into(),
        series: if name == ExperimentName::OptimalWindowPrediction { "dt_coarse" } else { "epsilon" }.into(),
        log_x,
        log_y,
    }
}

/// Runs one experiment and writes `<name>.csv` and `<name>.svg` (plus
/// `fit_constants.toml` for the prediction) into `params.out_dir`.
pub fn run_experiment(name: ExperimentName, params: &RunParams) -> Result<Artifacts> {
    params.validate()?;
    output::ensure_dir(&params.out_dir)?;
    let mut constants = None;
    let table = match name {
        ExperimentName::IterationsVsWindow => experiments::iterations_vs_window(params)?,
        ExperimentName::CoarseErrorVsWindow => experiments::coarse_error_vs_window(params)?,
        ExperimentName::IterativeErrorVsWindow => experiments::iterative_error_vs_window(params)?,
        ExperimentName::AveragingOracle => experiments::averaging_oracle(params)?,
        ExperimentName::OptimalWindowPrediction => {
            let report = experiments::optimal_window_prediction(params)?;
            let path = params.out_dir.join("fit_constants.toml");
            ConstantsFile::from_fit(&report.fit, params.dt_coarse).save(&path)?;
            constants = Some(path);
            report.table
        }
    };
    let csv = params.out_dir.join(format!("{name}.csv"));
    let svg = params.out_dir.join(format!("{name}.svg"));
    output::save_csv(&table, params, &csv)?;
    output::emit_plot(&csv, &plot_spec(name), &svg)?;
    log::info!("{name}: wrote {} and {}", csv.display(), svg.display());
    Ok(Artifacts {
        table,
        csv,
        svg,
        constants,
    })
}
