//! The experiment pipelines. Each sweep cell is independent; cells run on a
//! rayon pool of `workers` threads and are reported in sweep order.

use std::fmt;

use anyhow::{Context, Result};
use apint::parareal::{iterate_with, start_run, Schedule};
use apint::resonance::enumerate_triads;
use apint::window_opt::{fit_constants, predict, Fit, Measurement, StiffnessModel};
use apint::{
    coarse_error_norm, coarse_propagate, fine_propagate, run_apint, CoarseConfig, CoarsePropagator, Error,
    FinePropagator, ModelConfig, RunStatus,
};
use clap::ValueEnum;
use rayon::prelude::*;

use crate::params::RunParams;
use crate::setup;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum ExperimentName {
    IterationsVsWindow,
    CoarseErrorVsWindow,
    IterativeErrorVsWindow,
    OptimalWindowPrediction,
    AveragingOracle,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 5] = [
        ExperimentName::IterationsVsWindow,
        ExperimentName::CoarseErrorVsWindow,
        ExperimentName::IterativeErrorVsWindow,
        ExperimentName::OptimalWindowPrediction,
        ExperimentName::AveragingOracle,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentName::IterationsVsWindow => "iterations_vs_window",
            ExperimentName::CoarseErrorVsWindow => "coarse_error_vs_window",
            ExperimentName::IterativeErrorVsWindow => "iterative_error_vs_window",
            ExperimentName::OptimalWindowPrediction => "optimal_window_prediction",
            ExperimentName::AveragingOracle => "averaging_oracle",
        }
    }
}

impl fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome label written to the `status` column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Blowup,
    NoConverge,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Blowup => "blowup",
            Status::NoConverge => "no_converge",
        }
    }
}

/// A CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(usize),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v)
    }
}

impl From<Status> for Cell {
    fn from(s: Status) -> Self {
        Cell::Text(s.as_str().to_string())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // `Display` for f64 is the shortest string that round-trips
            Cell::Float(v) => write!(f, "{v}"),
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Text(s) => f.write_str(s),
            Cell::Empty => Ok(()),
        }
    }
}

/// Rows of one experiment, ready for CSV output.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: ExperimentName,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }
}

fn is_blowup(e: &Error) -> bool {
    match e {
        Error::Instability { .. } => true,
        Error::SlabFailure { source, .. } => is_blowup(source),
        _ => false,
    }
}

/// Splits numerical blow-up (a reportable outcome) from genuine errors.
fn classify<T>(r: apint::Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(e) if is_blowup(&e) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .context("building worker pool")
}

/// Evaluates `f` on every `(ε, window)` pair, in order.
fn sweep<T: Send, F>(params: &RunParams, windows: &[f64], f: F) -> Result<Vec<(f64, f64, T)>>
where
    F: Fn(f64, f64) -> Result<T> + Sync,
{
    let cells: Vec<(f64, f64)> = params
        .epsilon
        .iter()
        .flat_map(|&e| windows.iter().map(move |&w| (e, w)))
        .collect();
    pool(params.workers)?.install(|| {
        cells
            .par_iter()
            .map(|&(e, w)| f(e, w).map(|v| (e, w, v)))
            .collect()
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationOutcome {
    pub iterations: Option<usize>,
    pub final_error: Option<f64>,
    pub status: Status,
}

/// Parareal iterations to reach `tol` at one `(ε, T₀)`.
pub fn iterations_cell(params: &RunParams, epsilon: f64, window: f64) -> Result<IterationOutcome> {
    let model = setup::model(params, epsilon)?;
    let u0 = setup::make_initial_condition(&model, params.width)?;
    let cfg = setup::parareal(params, &model, window)?;
    Ok(match classify(run_apint(&u0, &cfg, &model))? {
        None => IterationOutcome {
            iterations: None,
            final_error: None,
            status: Status::Blowup,
        },
        Some(run) => IterationOutcome {
            iterations: run.converged_at,
            final_error: run.errors.last().copied(),
            status: match run.status() {
                RunStatus::Converged(_) => Status::Ok,
                RunStatus::NotConverged => Status::NoConverge,
            },
        },
    })
}

/// `max_n ‖x(T_n) − y(T_n)‖` of the serial coarse solution; `None` on blow-up.
pub fn coarse_error_cell(params: &RunParams, epsilon: f64, window: f64) -> Result<Option<f64>> {
    let model = setup::model(params, epsilon)?;
    let u0 = setup::make_initial_condition(&model, params.width)?;
    let coarse = setup::coarse(params, &model, window)?;
    let fine = setup::fine(params)?;
    classify(coarse_error_norm(&model, &fine, &coarse, &u0, params.t_end))
}

/// Relative Parareal error after exactly `iterations` corrections.
pub fn iterative_error_cell(params: &RunParams, epsilon: f64, window: f64, iterations: usize) -> Result<Option<f64>> {
    let model = setup::model(params, epsilon)?;
    let u0 = setup::make_initial_condition(&model, params.width)?;
    let cfg = setup::parareal(params, &model, window)?;
    let fine = FinePropagator::new(&model, *cfg.fine());
    let coarse = CoarsePropagator::new(&model, cfg.coarse().clone());
    let schedule = Schedule {
        tol: 0.0,
        ..cfg.schedule()
    };
    let run = (|| {
        let mut run = start_run(&fine, &coarse, &u0, &schedule)?;
        for _ in 0..iterations {
            run = iterate_with(run, &fine, &coarse, &schedule)?;
        }
        Ok(run)
    })();
    Ok(classify(run)?.map(|r| *r.errors.last().expect("nonempty")))
}

/// Averaging error over one coarse slab: the averaged equation integrated
/// with substeps of the fine step size, against the fine solution. A zero
/// window gives the unaveraged right-hand side.
pub fn averaging_error(params: &RunParams, epsilon: f64, window: f64) -> Result<Option<f64>> {
    let model = setup::model(params, epsilon)?;
    let u0 = setup::make_initial_condition(&model, params.width)?;
    let fine = setup::fine(params)?;
    let substeps = fine.steps_for(params.dt_coarse)?;
    let coarse = CoarseConfig::new(
        params.dt_coarse,
        substeps,
        setup::averaging(params, &model, window)?,
        params.kernel.kernel(),
    )?;
    let x = classify(fine_propagate(&model, &u0, params.dt_coarse, &fine))?;
    let y = classify(coarse_propagate(&model, &u0, params.dt_coarse, &coarse))?;
    Ok(x.zip(y).map(|(x, y)| x.distance(&y)))
}

/// Substeps of the reference solution in [`local_stepping_error`].
pub const REFERENCE_SUBSTEPS: usize = 256;

/// Time-stepping error of one coarse step of size `dt` from the initial
/// data: a single midpoint step of the averaged equation against the same
/// averaged equation integrated with [`REFERENCE_SUBSTEPS`] substeps.
pub fn local_stepping_error(params: &RunParams, epsilon: f64, window: f64, dt: f64) -> Result<Option<f64>> {
    let model = setup::model(params, epsilon)?;
    let u0 = setup::make_initial_condition(&model, params.width)?;
    let avg = setup::averaging(params, &model, window)?;
    let kernel = params.kernel.kernel();
    let one = CoarseConfig::new(dt, 1, avg, kernel.clone())?;
    let many = CoarseConfig::new(dt, REFERENCE_SUBSTEPS, avg, kernel)?;
    let y = classify(coarse_propagate(&model, &u0, dt, &one))?;
    let reference = classify(coarse_propagate(&model, &u0, dt, &many))?;
    Ok(y.zip(reference).map(|(y, r)| y.distance(&r)))
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn window_columns(params: &RunParams, epsilon: f64, window: f64) -> Vec<Cell> {
    vec![epsilon.into(), window.into(), (window / params.dt_coarse).into()]
}

pub fn iterations_vs_window(params: &RunParams) -> Result<Table> {
    let cells = sweep(params, &params.sweep_windows(), |e, w| iterations_cell(params, e, w))?;
    let rows = cells
        .into_iter()
        .map(|(e, w, o)| {
            let mut row = window_columns(params, e, w);
            row.extend([o.iterations.into(), o.final_error.into(), o.status.into()]);
            row
        })
        .collect();
    Ok(Table {
        name: ExperimentName::IterationsVsWindow,
        columns: vec!["epsilon", "window", "window_over_dt", "iterations", "final_error", "status"],
        rows,
    })
}

pub fn coarse_error_vs_window(params: &RunParams) -> Result<Table> {
    let cells = sweep(params, &params.sweep_windows(), |e, w| coarse_error_cell(params, e, w))?;
    let rows = cells
        .into_iter()
        .map(|(e, w, v)| {
            let mut row = window_columns(params, e, w);
            let status = if v.is_some() { Status::Ok } else { Status::Blowup };
            row.extend([v.into(), status.into()]);
            row
        })
        .collect();
    Ok(Table {
        name: ExperimentName::CoarseErrorVsWindow,
        columns: vec!["epsilon", "window", "window_over_dt", "coarse_error", "status"],
        rows,
    })
}

/// Iterations used by the iterative-error experiment.
pub const FIXED_ITERATIONS: usize = 3;

pub fn iterative_error_vs_window(params: &RunParams) -> Result<Table> {
    let cells = sweep(params, &params.sweep_windows(), |e, w| {
        iterative_error_cell(params, e, w, FIXED_ITERATIONS)
    })?;
    let rows = cells
        .into_iter()
        .map(|(e, w, v)| {
            let mut row = window_columns(params, e, w);
            let status = if v.is_some() { Status::Ok } else { Status::Blowup };
            row.extend([FIXED_ITERATIONS.into(), v.into(), status.into()]);
            row
        })
        .collect();
    Ok(Table {
        name: ExperimentName::IterativeErrorVsWindow,
        columns: vec!["epsilon", "window", "window_over_dt", "iterations", "error", "status"],
        rows,
    })
}

pub fn averaging_oracle(params: &RunParams) -> Result<Table> {
    let cells = sweep(params, &params.oracle_windows(), |e, w| averaging_error(params, e, w))?;
    let mut rows = Vec::with_capacity(cells.len());
    let mut prev: Option<(f64, f64, f64)> = None;
    for (e, w, v) in cells {
        let slope = match (prev, v) {
            (Some((pe, pw, perr)), Some(err)) if pe == e && pw > 0.0 && w > 0.0 => {
                log_log_slope(&[(pw, perr), (w, err)])
            }
            _ => None,
        };
        prev = v.map(|err| (e, w, err));
        let status = if v.is_some() { Status::Ok } else { Status::Blowup };
        rows.push(vec![e.into(), w.into(), v.into(), slope.into(), status.into()]);
    }
    Ok(Table {
        name: ExperimentName::AveragingOracle,
        columns: vec!["epsilon", "window", "error", "slope", "status"],
        rows,
    })
}

/// Window with the smallest finite value, and that value.
pub fn argmin(points: &[(f64, Option<f64>)]) -> Option<(f64, f64)> {
    points
        .iter()
        .filter_map(|&(w, v)| v.map(|v| (w, v)))
        .fold(None, |best: Option<(f64, f64)>, (w, v)| match best {
            Some((_, bv)) if bv <= v => best,
            _ => Some((w, v)),
        })
}

/// Measured optima, fitted constants and the three predictions.
#[derive(Debug, Clone)]
pub struct PredictionReport {
    pub measurements: Vec<Measurement<f64>>,
    pub fit: Fit<f64>,
    pub table: Table,
}

pub fn optimal_window_prediction(params: &RunParams) -> Result<PredictionReport> {
    let windows = params.sweep_windows();
    let cells = sweep(params, &windows, |e, w| coarse_error_cell(params, e, w))?;
    let mut measurements = Vec::new();
    for &e in &params.epsilon {
        let pts: Vec<(f64, Option<f64>)> = cells.iter().filter(|c| c.0 == e).map(|c| (c.1, c.2)).collect();
        if let Some((w, err)) = argmin(&pts) {
            measurements.push(Measurement {
                epsilon: e,
                dt_coarse: params.dt_coarse,
                eta_opt: w,
                min_error: err,
            });
        }
    }
    let cfg = ModelConfig::new(1.0, params.froude, params.nx)?;
    let triads = enumerate_triads(&cfg, cfg.dealias_limit())?;
    let stiffness = StiffnessModel::from_table(&triads, params.kernel.kernel())?;
    let fit = fit_constants(&measurements, &stiffness)?;

    let mut rows = Vec::new();
    for &e in &params.epsilon {
        let measured = measurements.iter().find(|m| m.epsilon == e);
        let p = predict(e, params.dt_coarse, &fit.constants, &stiffness, params.scaling_exponent)?;
        let status = if measured.is_some() { Status::Ok } else { Status::Blowup };
        rows.push(vec![
            e.into(),
            params.dt_coarse.into(),
            measured.map(|m| m.eta_opt).into(),
            measured.map(|m| m.min_error).into(),
            p.eta_full.into(),
            p.eta_simple.into(),
            p.eta_scaling.into(),
            status.into(),
        ]);
    }
    Ok(PredictionReport {
        measurements,
        fit,
        table: Table {
            name: ExperimentName::OptimalWindowPrediction,
            columns: vec![
                "epsilon",
                "dt_coarse",
                "measured_window",
                "measured_error",
                "window_full",
                "window_simple",
                "window_scaling",
                "status",
            ],
            rows,
        },
    })
}
