//! Building models, initial data and propagator configurations from
//! [`RunParams`].

use anyhow::Result;
use apint::{
    AveragingConfig, CoarseConfig, Config, FineConfig, Model, ModelConfig, OscillatorySystem, PararealConfig,
    RsweModel, State,
};
use log::warn;
use num_complex::Complex;

use crate::params::RunParams;

/// Spectral tail allowed at the dealiasing cutoff before the initial data is
/// considered under-resolved.
pub const TAIL_TOLERANCE: f64 = 1e-8;

pub fn model(params: &RunParams, epsilon: f64) -> Result<Model> {
    let cfg: Config = ModelConfig::new(epsilon, params.froude, params.nx)?;
    Ok(RsweModel::new(cfg)?)
}

/// Largest coefficient magnitude of the Gaussian height field at
/// `|k| = N/3` before truncation.
pub fn spectral_tail(model: &Model, width: f64) -> f64 {
    let coeffs = model.from_physical(&gaussian_profile(model, width));
    let cut = model.config().dealias_limit();
    [cut, -cut]
        .iter()
        .map(|&k| coeffs[model.config().index_of(k)].norm())
        .fold(0.0, f64::max)
}

fn gaussian_profile(model: &Model, width: f64) -> Vec<f64> {
    let center = model.config().domain_length() / 2.0;
    (0..model.n_modes())
        .map(|j| {
            let d = (model.grid_point(j) - center) / width;
            (-d * d).exp()
        })
        .collect()
}

/// Stationary flow with height `h(x) = exp(−((x − L/2)/width)²)`, truncated
/// to the dealiased band.
pub fn make_initial_condition(model: &Model, width: f64) -> Result<State> {
    if !(width > 0.0) || !width.is_finite() {
        anyhow::bail!("initial width must be positive, got {width}");
    }
    let tail = spectral_tail(model, width);
    if tail > TAIL_TOLERANCE {
        warn!("gaussian of width {width} is under-resolved: coefficient {tail:e} at the dealiasing cutoff");
    }
    let n = model.n_modes();
    let zero = vec![Complex::new(0.0, 0.0); n];
    let h = model.from_physical(&gaussian_profile(model, width));
    let mut state = State::from_components([zero.clone(), zero, h], 0.0)?;
    model.dealias_state(&mut state);
    state.symmetrize();
    Ok(state)
}

/// Largest phase rate `max|Ω|/ε` that the averaged nonlinearity contains.
pub fn max_phase_rate(model: &Model) -> f64 {
    let cfg = model.config();
    let top = cfg.dealias_limit();
    3.0 * cfg.omega(top, 1) / model.epsilon()
}

pub fn averaging(params: &RunParams, model: &Model, window: f64) -> Result<AveragingConfig<f64>> {
    if window == 0.0 {
        return Ok(AveragingConfig::pointwise());
    }
    Ok(match params.quad_points {
        Some(n) => AveragingConfig::new(window, n)?,
        None => AveragingConfig::resolving(window, max_phase_rate(model))?,
    })
}

pub fn coarse(params: &RunParams, model: &Model, window: f64) -> Result<CoarseConfig<f64>> {
    Ok(CoarseConfig::new(
        params.dt_coarse,
        params.substeps,
        averaging(params, model, window)?,
        params.kernel.kernel(),
    )?)
}

pub fn fine(params: &RunParams) -> Result<FineConfig<f64>> {
    Ok(FineConfig::new(params.dt_fine)?)
}

pub fn parareal(params: &RunParams, model: &Model, window: f64) -> Result<PararealConfig<f64>> {
    Ok(PararealConfig::new(
        params.n_slabs(),
        params.t_end,
        params.tol,
        params.iteration_cap(),
        coarse(params, model, window)?,
        fine(params)?,
    )?)
}
