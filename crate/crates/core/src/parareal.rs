//! Parareal iteration with an arbitrary coarse propagator.
//!
//! Given slab boundaries `T_n = nΔT`, iterate `k` is
//!
//! ```text
//!     U_n^k = G(U_{n−1}^k) + F(U_{n−1}^{k−1}) − G(U_{n−1}^{k−1})
//! ```
//!
//! where `F` is the fine and `G` the coarse propagator over one slab. The fine
//! solves of an iteration are independent and run on the rayon pool; the
//! correction sweep is serial. `G(U_{n−1}^{k−1})` is kept from the previous
//! sweep, so every iteration costs one coarse solve per slab.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::propagators::{serial_trajectory, CoarseConfig, CoarsePropagator, FineConfig, FinePropagator, Propagator};
use crate::scalar::Real;
use crate::spectral::SpectralState;
use crate::system::OscillatorySystem;

/// Slab layout, stopping rule and the two propagator configurations.
#[derive(Debug, Clone, PartialEq)]
pub struct PararealConfig<T> {
    n_slabs: usize,
    t_end: T,
    tol: T,
    max_iters: usize,
    coarse: CoarseConfig<T>,
    fine: FineConfig<T>,
}

impl<T: Real> PararealConfig<T> {
    /// `n_slabs · coarse.dt_coarse()` must equal `t_end`.
    pub fn new(
        n_slabs: usize,
        t_end: T,
        tol: T,
        max_iters: usize,
        coarse: CoarseConfig<T>,
        fine: FineConfig<T>,
    ) -> Result<Self> {
        if n_slabs < 2 {
            return Err(Error::InvalidConfig(format!("need at least 2 slabs, got {n_slabs}")));
        }
        if !(t_end > T::zero()) {
            return Err(Error::InvalidConfig(format!("t_end must be positive, got {t_end}")));
        }
        if !(tol > T::zero()) {
            return Err(Error::InvalidConfig(format!("tol must be positive, got {tol}")));
        }
        if max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be >= 1".into()));
        }
        let covered = T::from_usize_lossy(n_slabs) * coarse.dt_coarse();
        let tol_rel = T::lit(1e-12).max(T::roundoff_tol());
        if (covered - t_end).abs() > tol_rel * t_end {
            return Err(Error::InvalidConfig(format!(
                "{n_slabs} slabs of {} do not cover t_end = {t_end}",
                coarse.dt_coarse()
            )));
        }
        fine.steps_for(coarse.dt_coarse())?;
        Ok(Self {
            n_slabs,
            t_end,
            tol,
            max_iters,
            coarse,
            fine,
        })
    }

    /// Slab count derived from `t_end / coarse.dt_coarse()`.
    pub fn covering(t_end: T, tol: T, max_iters: usize, coarse: CoarseConfig<T>, fine: FineConfig<T>) -> Result<Self> {
        let n = (t_end / coarse.dt_coarse()).round().to_usize().unwrap_or(0);
        Self::new(n, t_end, tol, max_iters, coarse, fine)
    }

    pub fn n_slabs(&self) -> usize {
        self.n_slabs
    }

    pub fn t_end(&self) -> T {
        self.t_end
    }

    pub fn tol(&self) -> T {
        self.tol
    }

    pub fn max_iters(&self) -> usize {
        self.max_iters
    }

    pub fn coarse(&self) -> &CoarseConfig<T> {
        &self.coarse
    }

    pub fn fine(&self) -> &FineConfig<T> {
        &self.fine
    }

    pub fn dt_slab(&self) -> T {
        self.coarse.dt_coarse()
    }

    pub fn schedule(&self) -> Schedule<T> {
        Schedule {
            n_slabs: self.n_slabs,
            dt_slab: self.dt_slab(),
            tol: self.tol,
            max_iters: self.max_iters,
        }
    }
}

/// The propagator-independent part of a Parareal run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule<T> {
    pub n_slabs: usize,
    pub dt_slab: T,
    pub tol: T,
    pub max_iters: usize,
}

/// Record of a Parareal run.
#[derive(Debug, Clone, PartialEq)]
pub struct PararealRun<T> {
    /// `iterates[k][n]` is `U_n^k`.
    pub iterates: Vec<Vec<SpectralState<T>>>,
    /// `errors[k]`: largest relative L² error of iterate `k` at the slab
    /// boundaries, measured against `reference`.
    pub errors: Vec<T>,
    pub converged_at: Option<usize>,
    /// Serial fine solution at the slab boundaries.
    pub reference: Vec<SpectralState<T>>,
    /// `G(U_{n−1}^k)` for the latest iterate, index `n − 1`.
    coarse_cache: Vec<SpectralState<T>>,
}

/// How a run ended. Blow-up is an `Err`, never a status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Converged(usize),
    NotConverged,
}

impl<T: Real> PararealRun<T> {
    pub fn status(&self) -> RunStatus {
        match self.converged_at {
            Some(k) => RunStatus::Converged(k),
            None => RunStatus::NotConverged,
        }
    }

    /// Number of corrective iterations performed.
    pub fn iterations(&self) -> usize {
        self.iterates.len().saturating_sub(1)
    }

    pub fn latest(&self) -> &[SpectralState<T>] {
        self.iterates.last().expect("a run always holds the initial sweep")
    }
}

/// Largest relative distance `‖a_n − b_n‖/‖b_n‖`; boundaries where the
/// reference vanishes contribute their absolute distance.
pub fn relative_boundary_error<T: Real>(approx: &[SpectralState<T>], reference: &[SpectralState<T>]) -> T {
    approx
        .iter()
        .zip(reference)
        .map(|(a, r)| {
            let d = a.distance(r);
            let n = r.norm();
            if n > T::zero() {
                d / n
            } else {
                d
            }
        })
        .fold(T::zero(), T::max)
}

/// `U_n^0 = G(U_{n−1}^0)`, `U_0^0 = u0`.
pub fn coarse_sweep_with<T: Real, G: Propagator<T> + ?Sized>(
    coarse: &G,
    u0: &SpectralState<T>,
    schedule: &Schedule<T>,
) -> Result<Vec<SpectralState<T>>> {
    serial_trajectory(coarse, u0, schedule.dt_slab, schedule.n_slabs)
}

/// Starts a run: computes the fine reference and the initial coarse sweep.
pub fn start_run<T: Real, F, G>(fine: &F, coarse: &G, u0: &SpectralState<T>, schedule: &Schedule<T>) -> Result<PararealRun<T>>
where
    F: Propagator<T> + ?Sized,
    G: Propagator<T> + ?Sized,
{
    let reference = serial_trajectory(fine, u0, schedule.dt_slab, schedule.n_slabs)?;
    let sweep = coarse_sweep_with(coarse, u0, schedule)?;
    let coarse_cache = sweep[1..].to_vec();
    let err = relative_boundary_error(&sweep, &reference);
    Ok(PararealRun {
        iterates: vec![sweep],
        errors: vec![err],
        converged_at: (err <= schedule.tol).then_some(0),
        reference,
        coarse_cache,
    })
}

/// Appends one Parareal iterate.
pub fn iterate_with<T: Real, F, G>(
    mut run: PararealRun<T>,
    fine: &F,
    coarse: &G,
    schedule: &Schedule<T>,
) -> Result<PararealRun<T>>
where
    F: Propagator<T> + ?Sized,
    G: Propagator<T> + ?Sized,
{
    let dt = schedule.dt_slab;
    let prev = run.latest();
    let u0 = &prev[0];
    let t0 = u0.time;

    let jumps: Vec<SpectralState<T>> = prev[..schedule.n_slabs]
        .par_iter()
        .enumerate()
        .map(|(n, u)| {
            fine.propagate(u, dt).map_err(|e| Error::SlabFailure {
                slab: n,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;

    let mut next = Vec::with_capacity(schedule.n_slabs + 1);
    let mut cache = Vec::with_capacity(schedule.n_slabs);
    next.push(u0.clone());
    for n in 1..=schedule.n_slabs {
        let g_new = coarse.propagate(&next[n - 1], dt)?;
        let mut u = g_new.clone();
        u.axpy(T::one(), &jumps[n - 1]);
        u.axpy(-T::one(), &run.coarse_cache[n - 1]);
        u.time = t0 + T::from_usize_lossy(n) * dt;
        next.push(u);
        cache.push(g_new);
    }

    let err = relative_boundary_error(&next, &run.reference);
    let k = run.iterates.len();
    run.iterates.push(next);
    run.errors.push(err);
    run.coarse_cache = cache;
    if run.converged_at.is_none() && err <= schedule.tol {
        run.converged_at = Some(k);
    }
    Ok(run)
}

/// Iterates until the error drops to `tol` or `max_iters` corrections have
/// been made.
pub fn run_with<T: Real, F, G>(fine: &F, coarse: &G, u0: &SpectralState<T>, schedule: &Schedule<T>) -> Result<PararealRun<T>>
where
    F: Propagator<T> + ?Sized,
    G: Propagator<T> + ?Sized,
{
    let mut run = start_run(fine, coarse, u0, schedule)?;
    while run.converged_at.is_none() && run.iterations() < schedule.max_iters {
        run = iterate_with(run, fine, coarse, schedule)?;
    }
    Ok(run)
}

/// Initial coarse sweep with the averaged coarse propagator.
pub fn initial_coarse_sweep<T: Real, S: OscillatorySystem<T>>(
    u0: &SpectralState<T>,
    cfg: &PararealConfig<T>,
    system: &S,
) -> Result<Vec<SpectralState<T>>> {
    coarse_sweep_with(&CoarsePropagator::new(system, cfg.coarse.clone()), u0, &cfg.schedule())
}

/// One iteration with the fine and averaged coarse propagators.
pub fn parareal_iterate<T: Real, S: OscillatorySystem<T>>(
    run: PararealRun<T>,
    cfg: &PararealConfig<T>,
    system: &S,
) -> Result<PararealRun<T>> {
    iterate_with(
        run,
        &FinePropagator::new(system, cfg.fine),
        &CoarsePropagator::new(system, cfg.coarse.clone()),
        &cfg.schedule(),
    )
}

/// Full driver: fine reference, initial coarse sweep, then iterations.
pub fn run_apint<T: Real, S: OscillatorySystem<T>>(
    u0: &SpectralState<T>,
    cfg: &PararealConfig<T>,
    system: &S,
) -> Result<PararealRun<T>> {
    cfg.fine.check_stability(system);
    cfg.coarse.check_stability(system);
    run_with(
        &FinePropagator::new(system, cfg.fine),
        &CoarsePropagator::new(system, cfg.coarse.clone()),
        u0,
        &cfg.schedule(),
    )
}

/// `(k, errors[k])` for every recorded iterate.
pub fn error_vs_iteration<T: Real>(run: &PararealRun<T>) -> Vec<(usize, T)> {
    run.errors.iter().copied().enumerate().collect()
}

/// Successive ratios `errors[k+1]/errors[k]`, skipping zero denominators.
pub fn contraction_factors<T: Real>(run: &PararealRun<T>) -> Vec<T> {
    run.errors
        .windows(2)
        .filter(|w| w[0] > T::zero())
        .map(|w| w[1] / w[0])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Scalar-like toy propagators acting on the first coefficient.
    struct Scale(f64);

    impl Propagator<f64> for Scale {
        fn propagate(&self, s: &SpectralState<f64>, d: f64) -> Result<SpectralState<f64>> {
            let mut out = s.clone();
            out.scale((self.0 * d).exp());
            out.time = s.time + d;
            Ok(out)
        }
    }

    struct Failing;

    impl Propagator<f64> for Failing {
        fn propagate(&self, s: &SpectralState<f64>, _: f64) -> Result<SpectralState<f64>> {
            Err(Error::Instability { time: s.time })
        }
    }

    fn seed() -> SpectralState<f64> {
        let mut s = SpectralState::zeros(8);
        s.coeffs_mut()[1] = num_complex::Complex::new(1.0, 0.5);
        s
    }

    fn schedule(n: usize) -> Schedule<f64> {
        Schedule {
            n_slabs: n,
            dt_slab: 0.1,
            tol: 1e-14,
            max_iters: n,
        }
    }

    #[test]
    fn finite_termination() {
        let sch = schedule(6);
        let run = run_with(&Scale(-1.0), &Scale(-0.5), &seed(), &sch).unwrap();
        for (k, it) in run.iterates.iter().enumerate() {
            assert_eq!(it[0], seed());
            for n in 0..=k.min(sch.n_slabs) {
                assert!(it[n].distance(&run.reference[n]) < 1e-14);
            }
        }
        assert!(run.converged_at.unwrap() <= sch.n_slabs);
    }

    #[test]
    fn identical_propagators_converge_immediately() {
        let mut sch = schedule(4);
        sch.tol = 1e-12;
        let run = run_with(&Scale(-1.0), &Scale(-1.0), &seed(), &sch).unwrap();
        assert_eq!(run.converged_at, Some(0));
        assert_eq!(run.errors[0], 0.0);
    }

    #[test]
    fn huge_tolerance_stops_early() {
        let mut sch = schedule(4);
        sch.tol = 1e3;
        let run = run_with(&Scale(-1.0), &Scale(2.0), &seed(), &sch).unwrap();
        assert_eq!(run.status(), RunStatus::Converged(0));
    }

    #[test]
    fn non_convergence_is_not_an_error() {
        let mut sch = schedule(6);
        sch.max_iters = 1;
        let run = run_with(&Scale(-1.0), &Scale(3.0), &seed(), &sch).unwrap();
        assert_eq!(run.status(), RunStatus::NotConverged);
        assert_eq!(run.iterations(), 1);
    }

    #[test]
    fn fine_failure_names_the_slab() {
        let sch = schedule(3);
        let run = start_run(&Scale(-1.0), &Scale(-1.0), &seed(), &sch).unwrap();
        match iterate_with(run, &Failing, &Scale(-1.0), &sch) {
            Err(Error::SlabFailure { slab: 0, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn contraction_skips_zero() {
        let sch = schedule(3);
        let run = run_with(&Scale(-1.0), &Scale(-0.9), &seed(), &sch).unwrap();
        let pairs = error_vs_iteration(&run);
        assert_eq!(pairs.len(), run.errors.len());
        assert!(contraction_factors(&run).iter().all(|r| r.is_finite()));
    }
}
