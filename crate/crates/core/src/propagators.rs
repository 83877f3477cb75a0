//! Fine and coarse evolution operators.
//!
//! The fine operator is Strang splitting of the full stiff equation: exact
//! linear half steps around an explicit midpoint step of `u_t = −N(u, u)`.
//!
//! The coarse operator integrates the averaged equation
//!
//! ```text
//!     ū_t = −Σ_m w_m e^{(t+s_m)L/ε} N(e^{−(t+s_m)L/ε} ū)
//! ```
//!
//! in the variables `ū = e^{tL/ε} u` with explicit midpoint, then maps back.
//! The averaging window `T₀` is given in the same (slow) time units as the
//! time step. Analyses that work with a dimensionless window use
//! `η = T₀/ΔT`.

use log::warn;

use crate::error::{Error, Result};
use crate::kernel::{averaged_nonlinear_with, AveragingConfig, AveragingQuadrature, Kernel};
use crate::scalar::Real;
use crate::spectral::SpectralState;
use crate::system::OscillatorySystem;

/// Growth factor over the initial norm that counts as blow-up.
pub const BLOWUP_FACTOR: f64 = 1e6;

/// Fine time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FineConfig<T> {
    dt_fine: T,
}

impl<T: Real> FineConfig<T> {
    pub fn new(dt_fine: T) -> Result<Self> {
        if !(dt_fine > T::zero()) || !dt_fine.is_finite() {
            return Err(Error::InvalidConfig(format!("dt_fine must be positive, got {dt_fine}")));
        }
        Ok(Self { dt_fine })
    }

    pub fn dt_fine(&self) -> T {
        self.dt_fine
    }

    /// `max|ω|·δt/ε`, the advisory stability number of the explicit substep.
    pub fn stability_number<S: OscillatorySystem<T>>(&self, system: &S) -> T {
        system.max_frequency() * self.dt_fine / system.epsilon()
    }

    /// Logs a warning if the stability number exceeds 2. The linear part is
    /// exact, so this is advisory only.
    pub fn check_stability<S: OscillatorySystem<T>>(&self, system: &S) -> bool {
        let s = self.stability_number(system);
        let ok = s <= T::lit(2.0);
        if !ok {
            warn!("fine step stability number max|w| dt/eps = {s} exceeds 2");
        }
        ok
    }

    /// Number of fine steps covering `duration`.
    pub fn steps_for(&self, duration: T) -> Result<usize> {
        steps_for(duration, self.dt_fine, "dt_fine")
    }
}

/// Coarse step, substeps per slab and the averaging set-up.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarseConfig<T> {
    dt_coarse: T,
    substeps: usize,
    averaging: AveragingConfig<T>,
    kernel: Kernel<T>,
    quad: AveragingQuadrature<T>,
}

impl<T: Real> CoarseConfig<T> {
    pub fn new(dt_coarse: T, substeps: usize, averaging: AveragingConfig<T>, kernel: Kernel<T>) -> Result<Self> {
        if !(dt_coarse > T::zero()) || !dt_coarse.is_finite() {
            return Err(Error::InvalidConfig(format!("dt_coarse must be positive, got {dt_coarse}")));
        }
        if substeps == 0 {
            return Err(Error::InvalidConfig("substeps must be >= 1".into()));
        }
        let quad = AveragingQuadrature::new(&averaging, &kernel);
        Ok(Self {
            dt_coarse,
            substeps,
            averaging,
            kernel,
            quad,
        })
    }

    pub fn dt_coarse(&self) -> T {
        self.dt_coarse
    }

    pub fn substeps(&self) -> usize {
        self.substeps
    }

    pub fn averaging(&self) -> &AveragingConfig<T> {
        &self.averaging
    }

    pub fn kernel(&self) -> &Kernel<T> {
        &self.kernel
    }

    pub fn quadrature(&self) -> &AveragingQuadrature<T> {
        &self.quad
    }

    /// `η = T₀/ΔT`.
    pub fn eta(&self) -> T {
        self.averaging.window() / self.dt_coarse
    }

    /// Advisory check for the coarse step: the largest phase rate the kernel
    /// leaves unfiltered, times the substep, should stay below 2. For a
    /// pointwise average the full `max|ω|/ε` applies.
    pub fn check_stability<S: OscillatorySystem<T>>(&self, system: &S) -> bool {
        let h = self.dt_coarse / T::from_usize_lossy(self.substeps);
        let stiff = system.max_frequency() / system.epsilon();
        let effective = if self.averaging.is_pointwise() {
            stiff
        } else {
            stiff.min(T::TAU() / self.averaging.window())
        };
        let s = effective * h;
        let ok = s <= T::lit(2.0);
        if !ok {
            warn!("coarse step effective stability number {s} exceeds 2");
        }
        ok
    }
}

fn steps_for<T: Real>(duration: T, dt: T, what: &str) -> Result<usize> {
    if !(duration >= T::zero()) || !duration.is_finite() {
        return Err(Error::InvalidConfig(format!("duration must be non-negative, got {duration}")));
    }
    let ratio = duration / dt;
    let n = ratio.round();
    let tol = T::lit(1e-12).max(T::roundoff_tol());
    if (ratio - n).abs() > tol * n.max(T::one()) {
        return Err(Error::InvalidConfig(format!(
            "duration {duration} is not a multiple of {what} = {dt}"
        )));
    }
    Ok(n.to_usize().unwrap_or(0))
}

struct BlowupGuard<T> {
    limit: T,
}

impl<T: Real> BlowupGuard<T> {
    fn new(initial: &SpectralState<T>) -> Self {
        Self {
            limit: T::lit(BLOWUP_FACTOR) * initial.norm(),
        }
    }

    fn check(&self, state: &SpectralState<T>) -> Result<()> {
        let exceeded = self.limit > T::zero() && state.max_abs() > self.limit;
        if exceeded || !state.is_finite() {
            return Err(Error::Instability {
                time: state.time.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(())
    }
}

/// One explicit midpoint step of `u_t = −f(u)`.
fn midpoint<T: Real, F>(u: &SpectralState<T>, h: T, f: F) -> SpectralState<T>
where
    F: Fn(&SpectralState<T>, T) -> SpectralState<T>,
{
    let half = T::lit(0.5);
    let k1 = f(u, T::zero());
    let mid = u.plus_scaled(-half * h, &k1);
    let k2 = f(&mid, half * h);
    u.plus_scaled(-h, &k2)
}

/// One Strang step of length `dt`. Does not check for blow-up.
pub fn fine_step<T: Real, S: OscillatorySystem<T>>(system: &S, state: &SpectralState<T>, dt: T) -> SpectralState<T> {
    let half = T::lit(0.5) * dt / system.epsilon();
    let mut u = state.clone();
    system.linear_exponential(&mut u, -half);
    let mut u = midpoint(&u, dt, |v, _| system.nonlinear(v));
    system.linear_exponential(&mut u, -half);
    u.time = state.time + dt;
    u
}

/// Fine evolution over `duration`, a multiple of the fine step.
pub fn fine_propagate<T: Real, S: OscillatorySystem<T>>(
    system: &S,
    state: &SpectralState<T>,
    duration: T,
    fine: &FineConfig<T>,
) -> Result<SpectralState<T>> {
    let steps = fine.steps_for(duration)?;
    let guard = BlowupGuard::new(state);
    let t0 = state.time;
    let mut u = state.clone();
    for i in 0..steps {
        u = fine_step(system, &u, fine.dt_fine);
        u.time = t0 + T::from_usize_lossy(i + 1) * fine.dt_fine;
        guard.check(&u)?;
    }
    u.time = t0 + duration;
    Ok(u)
}

/// Coarse evolution over `duration` via the averaged equation.
pub fn coarse_propagate<T: Real, S: OscillatorySystem<T>>(
    system: &S,
    state: &SpectralState<T>,
    duration: T,
    coarse: &CoarseConfig<T>,
) -> Result<SpectralState<T>> {
    if !(duration > T::zero()) || !duration.is_finite() {
        return Err(Error::InvalidConfig(format!("coarse duration must be positive, got {duration}")));
    }
    let inv_eps = T::one() / system.epsilon();
    let t0 = state.time;
    let h = duration / T::from_usize_lossy(coarse.substeps);
    let guard = BlowupGuard::new(state);

    let mut bar = state.clone();
    system.linear_exponential(&mut bar, t0 * inv_eps);
    for i in 0..coarse.substeps {
        let t = t0 + T::from_usize_lossy(i) * h;
        bar = midpoint(&bar, h, |v, offset| averaged_nonlinear_with(system, v, t + offset, &coarse.quad));
        bar.time = t + h;
        guard.check(&bar)?;
    }
    let t1 = t0 + duration;
    system.linear_exponential(&mut bar, -t1 * inv_eps);
    bar.time = t1;
    Ok(bar)
}

/// A slab-to-slab evolution operator.
pub trait Propagator<T: Real>: Send + Sync {
    fn propagate(&self, state: &SpectralState<T>, duration: T) -> Result<SpectralState<T>>;
}

/// [`fine_propagate`] bound to a system.
#[derive(Debug, Clone, Copy)]
pub struct FinePropagator<'a, T, S> {
    pub system: &'a S,
    pub config: FineConfig<T>,
}

impl<'a, T: Real, S: OscillatorySystem<T>> FinePropagator<'a, T, S> {
    pub fn new(system: &'a S, config: FineConfig<T>) -> Self {
        Self { system, config }
    }
}

impl<T: Real, S: OscillatorySystem<T>> Propagator<T> for FinePropagator<'_, T, S> {
    fn propagate(&self, state: &SpectralState<T>, duration: T) -> Result<SpectralState<T>> {
        fine_propagate(self.system, state, duration, &self.config)
    }
}

/// [`coarse_propagate`] bound to a system.
#[derive(Debug, Clone)]
pub struct CoarsePropagator<'a, T, S> {
    pub system: &'a S,
    pub config: CoarseConfig<T>,
}

impl<'a, T: Real, S: OscillatorySystem<T>> CoarsePropagator<'a, T, S> {
    pub fn new(system: &'a S, config: CoarseConfig<T>) -> Self {
        Self { system, config }
    }
}

impl<T: Real, S: OscillatorySystem<T>> Propagator<T> for CoarsePropagator<'_, T, S> {
    fn propagate(&self, state: &SpectralState<T>, duration: T) -> Result<SpectralState<T>> {
        coarse_propagate(self.system, state, duration, &self.config)
    }
}

impl<T: Real, P: Propagator<T> + ?Sized> Propagator<T> for &P {
    fn propagate(&self, state: &SpectralState<T>, duration: T) -> Result<SpectralState<T>> {
        (**self).propagate(state, duration)
    }
}

/// Slab-boundary states `u(nΔT)`, `n = 0..=n_slabs`, from serial application
/// of `prop`.
pub fn serial_trajectory<T: Real, P: Propagator<T> + ?Sized>(
    prop: &P,
    initial: &SpectralState<T>,
    dt_slab: T,
    n_slabs: usize,
) -> Result<Vec<SpectralState<T>>> {
    let t0 = initial.time;
    let mut out = Vec::with_capacity(n_slabs + 1);
    out.push(initial.clone());
    for n in 1..=n_slabs {
        let mut next = prop.propagate(&out[n - 1], dt_slab)?;
        next.time = t0 + T::from_usize_lossy(n) * dt_slab;
        out.push(next);
    }
    Ok(out)
}

/// Largest L² distance at slab boundaries between two trajectories.
pub fn max_boundary_distance<T: Real>(a: &[SpectralState<T>], b: &[SpectralState<T>]) -> T {
    a.iter().zip(b).map(|(x, y)| x.distance(y)).fold(T::zero(), T::max)
}

/// `max_n ‖x(nΔT) − y_ΔT(nΔT)‖₂` over `horizon = n_slabs·ΔT`, comparing
/// the serial coarse solution against the fine reference.
pub fn coarse_error_norm<T: Real, S: OscillatorySystem<T>>(
    system: &S,
    fine: &FineConfig<T>,
    coarse: &CoarseConfig<T>,
    initial: &SpectralState<T>,
    horizon: T,
) -> Result<T> {
    let n_slabs = steps_for(horizon, coarse.dt_coarse, "dt_coarse")?;
    let reference = serial_trajectory(&FinePropagator::new(system, *fine), initial, coarse.dt_coarse, n_slabs)?;
    let approx = serial_trajectory(&CoarsePropagator::new(system, coarse.clone()), initial, coarse.dt_coarse, n_slabs)?;
    Ok(max_boundary_distance(&reference, &approx))
}
