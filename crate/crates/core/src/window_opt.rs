//! Optimal averaging-window prediction.
//!
//! Here `η` is the averaging window length `T₀` itself, in the same time units
//! as `ΔT`. The kernel integral inside `Λ(η)` is evaluated at the phase the
//! window actually spans, `λ_n η` with `λ_n = |Ω_n|/ε` (that is,
//! [`lambda_functional`](crate::kernel::lambda_functional) at `η/ΔT`). The
//! coarse-error model is
//!
//! ```text
//!     E(η) = c1 ΔT³ ε Λ(η) + (c2 + c3 ε) ε η
//! ```
//!
//! with three ways of picking `η`: minimizing `E` directly, the closed form
//! `η = sqrt(d1 ΔT/(c2 + c3 ε))`, and the heuristic `η = ΔT ε^{−s}`.

use crate::error::{Error, Result};
use crate::kernel::{Kernel, KernelTransform};
use crate::resonance::{mismatch_spectrum, TriadTable};
use crate::scalar::Real;

/// Default search interval for `η`, in multiples of `ΔT`.
pub const ETA_BRACKET: (f64, f64) = (0.05, 100.0);

const SCAN_POINTS: usize = 160;

/// Constants of the coarse-error model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConstants<T> {
    pub c1: T,
    pub c2: T,
    pub c3: T,
    pub d1: T,
}

impl<T: Real> FitConstants<T> {
    pub fn new(c1: T, c2: T, c3: T, d1: T) -> Result<Self> {
        let c = Self { c1, c2, c3, d1 };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("c1", self.c1), ("c2", self.c2), ("c3", self.c3), ("d1", self.d1)] {
            if !(v >= T::zero()) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        Ok(())
    }

    /// `c2 + c3 ε`.
    pub fn penalty(&self, epsilon: T) -> T {
        self.c2 + self.c3 * epsilon
    }
}

/// The mismatch frequencies `|Ω_n|` (at `ε = 1`) and the kernel transform
/// that together define `Λ`.
#[derive(Debug, Clone)]
pub struct StiffnessModel<T> {
    mismatches: Vec<T>,
    transform: KernelTransform<T>,
}

impl<T: Real> StiffnessModel<T> {
    pub fn new(mismatches: Vec<T>, transform: KernelTransform<T>) -> Result<Self> {
        if mismatches.is_empty() {
            return Err(Error::EmptyTriads);
        }
        if mismatches.iter().any(|m| !(*m >= T::zero()) || !m.is_finite()) {
            return Err(Error::InvalidConfig("mismatches must be finite and non-negative".into()));
        }
        Ok(Self { mismatches, transform })
    }

    pub fn from_table(table: &TriadTable<T>, kernel: Kernel<T>) -> Result<Self> {
        Self::new(mismatch_spectrum(table, T::one())?, KernelTransform::new(kernel))
    }

    pub fn mismatches(&self) -> &[T] {
        &self.mismatches
    }

    pub fn transform(&self) -> &KernelTransform<T> {
        &self.transform
    }

    /// `Λ(η) = max_n λ_n² |∫₀¹ ρ(s) e^{iλ_n η s} ds|` with `λ_n = |Ω_n|/ε`.
    pub fn lambda(&self, eta: T, epsilon: T) -> T {
        self.mismatches
            .iter()
            .map(|&m| {
                let l = m / epsilon;
                l * l * self.transform.magnitude(l * eta)
            })
            .fold(T::zero(), T::max)
    }

    /// Central-difference `dΛ/dη`.
    pub fn lambda_slope(&self, eta: T, epsilon: T) -> T {
        let h = eta * T::lit(1e-4);
        (self.lambda(eta + h, epsilon) - self.lambda(eta - h, epsilon)) / (h + h)
    }
}

fn check_positive<T: Real>(name: &str, v: T) -> Result<()> {
    if !(v > T::zero()) || !v.is_finite() {
        return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

/// `c1 ΔT³ ε Λ(η) + (c2 + c3 ε) ε η`.
pub fn objective<T: Real>(
    eta: T,
    epsilon: T,
    dt_coarse: T,
    consts: &FitConstants<T>,
    model: &StiffnessModel<T>,
) -> Result<T> {
    check_positive("eta", eta)?;
    check_positive("epsilon", epsilon)?;
    check_positive("dt_coarse", dt_coarse)?;
    Ok(objective_unchecked(eta, epsilon, dt_coarse, consts, model))
}

fn objective_unchecked<T: Real>(eta: T, epsilon: T, dt: T, c: &FitConstants<T>, model: &StiffnessModel<T>) -> T {
    let stiff = if c.c1 > T::zero() {
        c.c1 * dt * dt * dt * epsilon * model.lambda(eta, epsilon)
    } else {
        T::zero()
    };
    stiff + c.penalty(epsilon) * epsilon * eta
}

/// Which end of the search interval a minimum sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Lower,
    Upper,
}

/// Result of minimizing the full model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullOptimum<T> {
    pub eta: T,
    pub value: T,
    /// Set when the minimum is on the edge of the search interval.
    pub boundary: Option<Boundary>,
    /// `|dE/dη| η / E` at the returned point. `Λ` is a maximum over many
    /// smooth branches and has kinks, so this is a diagnostic only.
    pub stationarity: T,
}

/// Minimizes the full model over `bracket` (default [`ETA_BRACKET`] times
/// `ΔT`) with a logarithmic scan followed by golden-section refinement.
pub fn optimize_full<T: Real>(
    epsilon: T,
    dt_coarse: T,
    consts: &FitConstants<T>,
    model: &StiffnessModel<T>,
    bracket: Option<(T, T)>,
) -> Result<FullOptimum<T>> {
    check_positive("epsilon", epsilon)?;
    check_positive("dt_coarse", dt_coarse)?;
    consts.validate()?;
    let (lo, hi) = bracket.unwrap_or((T::lit(ETA_BRACKET.0) * dt_coarse, T::lit(ETA_BRACKET.1) * dt_coarse));
    check_positive("lower bracket", lo)?;
    if !(hi > lo) || !hi.is_finite() {
        return Err(Error::InvalidConfig(format!("empty bracket [{lo}, {hi}]")));
    }
    let f = |eta: T| objective_unchecked(eta, epsilon, dt_coarse, consts, model);
    let finish = |eta: T, boundary| FullOptimum {
        eta,
        value: f(eta),
        boundary,
        stationarity: stationarity(eta, &f),
    };
    if consts.c1 == T::zero() {
        return Ok(finish(lo, Some(Boundary::Lower)));
    }
    if consts.penalty(epsilon) == T::zero() {
        return Ok(finish(hi, Some(Boundary::Upper)));
    }

    let (llo, lhi) = (lo.ln(), hi.ln());
    let step = (lhi - llo) / T::from_usize_lossy(SCAN_POINTS - 1);
    let grid: Vec<T> = (0..SCAN_POINTS)
        .map(|i| (llo + step * T::from_usize_lossy(i)).exp())
        .collect();
    let values: Vec<T> = grid.iter().map(|&e| f(e)).collect();
    let best = values
        .iter()
        .enumerate()
        .fold(0, |b, (i, v)| if *v < values[b] { i } else { b });
    if best == 0 {
        return Ok(finish(lo, Some(Boundary::Lower)));
    }
    if best == SCAN_POINTS - 1 {
        return Ok(finish(hi, Some(Boundary::Upper)));
    }
    let eta = golden_section(|x| f(x.exp()), grid[best - 1].ln(), grid[best + 1].ln()).exp();
    let eta = if f(eta) <= values[best] { eta } else { grid[best] };
    Ok(finish(eta, None))
}

fn stationarity<T: Real, F: Fn(T) -> T>(eta: T, f: &F) -> T {
    let h = eta * T::lit(1e-4);
    let d = (f(eta + h) - f((eta - h).max(eta * T::lit(0.5)))) / (h + h);
    let v = f(eta);
    if v > T::zero() {
        (d * eta / v).abs()
    } else {
        d.abs()
    }
}

/// Golden-section search for a minimum of `f` on `[a, b]`.
fn golden_section<T: Real, F: Fn(T) -> T>(f: F, mut a: T, mut b: T) -> T {
    let r = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let tol = T::lit(1e-10).max(T::roundoff_tol());
    for _ in 0..200 {
        if (b - a).abs() <= tol * (T::one() + a.abs().max(b.abs())) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        c
    } else {
        d
    }
}

/// `sqrt(d1 ΔT/(c2 + c3 ε))`.
pub fn optimize_simple<T: Real>(epsilon: T, dt_coarse: T, consts: &FitConstants<T>) -> Result<T> {
    check_positive("epsilon", epsilon)?;
    check_positive("dt_coarse", dt_coarse)?;
    consts.validate()?;
    let denom = consts.penalty(epsilon);
    if !(denom > T::zero()) {
        return Err(Error::InvalidConfig("c2 + c3*epsilon must be positive".into()));
    }
    if !(consts.d1 > T::zero()) {
        return Err(Error::InvalidConfig("d1 must be positive".into()));
    }
    Ok((consts.d1 * dt_coarse / denom).sqrt())
}

/// `ΔT ε^{−s}` for `0 < s < 1`.
pub fn scaling_heuristic<T: Real>(epsilon: T, dt_coarse: T, s: T) -> Result<T> {
    check_positive("epsilon", epsilon)?;
    check_positive("dt_coarse", dt_coarse)?;
    if !(s > T::zero() && s < T::one()) {
        return Err(Error::InvalidConfig(format!("scaling exponent must lie in (0, 1), got {s}")));
    }
    Ok(dt_coarse * epsilon.powf(-s))
}

/// The three window predictions side by side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowPrediction<T> {
    pub eta_full: T,
    pub full_boundary: Option<Boundary>,
    pub eta_simple: Option<T>,
    pub eta_scaling: T,
}

pub fn predict<T: Real>(
    epsilon: T,
    dt_coarse: T,
    consts: &FitConstants<T>,
    model: &StiffnessModel<T>,
    s: T,
) -> Result<WindowPrediction<T>> {
    let full = optimize_full(epsilon, dt_coarse, consts, model, None)?;
    Ok(WindowPrediction {
        eta_full: full.eta,
        full_boundary: full.boundary,
        eta_simple: optimize_simple(epsilon, dt_coarse, consts).ok(),
        eta_scaling: scaling_heuristic(epsilon, dt_coarse, s)?,
    })
}

/// A measured optimum from a window sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement<T> {
    pub epsilon: T,
    pub dt_coarse: T,
    pub eta_opt: T,
    pub min_error: T,
}

/// Fitted constants and the root-mean-square error in `ln η` of the
/// full-model minimizers against the measured ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fit<T> {
    pub constants: FitConstants<T>,
    pub residual: T,
}

/// Fits the model constants to measured optima.
///
/// The minimizer of `E` depends only on `c2/c1` and `c3/c1`. These ratios come
/// from the stationarity condition `c2/c1 + (c3/c1) ε = −ΔT³ Λ'(η)`, solved
/// as a non-negative least-squares problem and then refined by Nelder–Mead
/// on the log-location misfit. The scale `c1` follows from the measured error
/// levels and `d1` from the closed-form relation.
pub fn fit_constants<T: Real>(measurements: &[Measurement<T>], model: &StiffnessModel<T>) -> Result<Fit<T>> {
    if measurements.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need at least 3 measurements, got {}",
            measurements.len()
        )));
    }
    for m in measurements {
        check_positive("epsilon", m.epsilon)?;
        check_positive("dt_coarse", m.dt_coarse)?;
        check_positive("eta_opt", m.eta_opt)?;
        check_positive("min_error", m.min_error)?;
    }
    let mut eps: Vec<f64> = measurements.iter().map(|m| to_f64(m.epsilon)).collect();
    eps.sort_by(f64::total_cmp);
    eps.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(b.abs()));
    if eps.len() < 2 {
        return Err(Error::InsufficientData("measurements must span at least two epsilon values".into()));
    }

    // stationarity rows: r2 + r3 ε_i = g_i
    let rows: Vec<(f64, f64)> = measurements
        .iter()
        .map(|m| {
            let dt = to_f64(m.dt_coarse);
            let g = -dt * dt * dt * to_f64(model.lambda_slope(m.eta_opt, m.epsilon));
            (to_f64(m.epsilon), g)
        })
        .collect();
    if rows.iter().all(|&(_, g)| !(g > 0.0)) {
        return Err(Error::DegenerateFit(
            "Λ is not decreasing at any measured optimum, so no penalty balances it".into(),
        ));
    }
    let (r2, r3) = nnls_line(&rows)?;

    let loss = |r2: f64, r3: f64| -> f64 {
        let c = FitConstants {
            c1: T::one(),
            c2: T::lit(r2.abs()),
            c3: T::lit(r3.abs()),
            d1: T::zero(),
        };
        let mut sum = 0.0;
        for m in measurements {
            match optimize_full(m.epsilon, m.dt_coarse, &c, model, None) {
                Ok(o) => {
                    let d = to_f64(o.eta).ln() - to_f64(m.eta_opt).ln();
                    sum += d * d;
                }
                Err(_) => return f64::INFINITY,
            }
        }
        sum
    };
    let start = [r2, r3];
    let start_loss = loss(r2, r3);
    let (polished, polished_loss) = nelder_mead(|p| loss(p[0], p[1]), start, 80);
    let (r2, r3, best_loss) = if polished_loss < start_loss {
        (polished[0].abs(), polished[1].abs(), polished_loss)
    } else {
        (r2, r3, start_loss)
    };
    if !(r2 + r3 > 0.0) {
        return Err(Error::DegenerateFit("fitted penalty vanishes".into()));
    }

    // scale from the error levels: min_error ≈ c1 · E(η_opt; 1, r2, r3)
    let unit = FitConstants {
        c1: T::one(),
        c2: T::lit(r2),
        c3: T::lit(r3),
        d1: T::zero(),
    };
    let mut log_scale = 0.0;
    let mut log_d1 = 0.0;
    for m in measurements {
        let e = to_f64(objective_unchecked(m.eta_opt, m.epsilon, m.dt_coarse, &unit, model));
        if !(e > 0.0) {
            return Err(Error::DegenerateFit("model error vanishes at a measured optimum".into()));
        }
        log_scale += to_f64(m.min_error).ln() - e.ln();
        let pen = r2 + r3 * to_f64(m.epsilon);
        log_d1 += 2.0 * to_f64(m.eta_opt).ln() - to_f64(m.dt_coarse).ln() + pen.ln();
    }
    let n = measurements.len() as f64;
    let c1 = (log_scale / n).exp();
    // d1 is quoted relative to the fitted (c2, c3), so it scales with c1 too
    let d1 = (log_d1 / n).exp() * c1;
    let constants = FitConstants::new(T::lit(c1), T::lit(c1 * r2), T::lit(c1 * r3), T::lit(d1))?;
    Ok(Fit {
        constants,
        residual: T::lit((best_loss / n).sqrt()),
    })
}

fn to_f64<T: Real>(v: T) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

/// Non-negative least squares for `a + b x_i ≈ y_i`.
fn nnls_line(rows: &[(f64, f64)]) -> Result<(f64, f64)> {
    let n = rows.len() as f64;
    let sx: f64 = rows.iter().map(|r| r.0).sum();
    let sy: f64 = rows.iter().map(|r| r.1).sum();
    let sxx: f64 = rows.iter().map(|r| r.0 * r.0).sum();
    let sxy: f64 = rows.iter().map(|r| r.0 * r.1).sum();
    let det = n * sxx - sx * sx;
    if !(det.abs() > 1e-14 * (n * sxx).max(f64::MIN_POSITIVE)) {
        return Err(Error::DegenerateFit("design matrix is singular".into()));
    }
    let a = (sxx * sy - sx * sxy) / det;
    let b = (n * sxy - sx * sy) / det;
    if a >= 0.0 && b >= 0.0 {
        return Ok((a, b));
    }
    let sse = |a: f64, b: f64| rows.iter().map(|r| (a + b * r.0 - r.1).powi(2)).sum::<f64>();
    let only_a = (sy / n).max(0.0);
    let only_b = (sxy / sxx).max(0.0);
    if sse(only_a, 0.0) <= sse(0.0, only_b) {
        Ok((only_a, 0.0))
    } else {
        Ok((0.0, only_b))
    }
}

/// Nelder–Mead in two dimensions; returns the best vertex and its value.
fn nelder_mead<F: Fn([f64; 2]) -> f64>(f: F, start: [f64; 2], max_iter: usize) -> ([f64; 2], f64) {
    let step = |x: f64| if x.abs() > 0.0 { 0.2 * x.abs() } else { 1e-3 };
    let mut simplex = [
        start,
        [start[0] + step(start[0]), start[1]],
        [start[0], start[1] + step(start[1].max(start[0] * 0.1))],
    ];
    let mut values = simplex.map(&f);
    let lerp = |a: [f64; 2], b: [f64; 2], t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
    for _ in 0..max_iter {
        let mut idx = [0, 1, 2];
        idx.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
        simplex = idx.map(|i| simplex[i]);
        values = idx.map(|i| values[i]);
        if (values[2] - values[0]).abs() <= 1e-14 * (1.0 + values[0].abs()) {
            break;
        }
        let centroid = lerp(simplex[0], simplex[1], 0.5);
        let reflected = lerp(simplex[2], centroid, 2.0);
        let fr = f(reflected);
        if fr < values[0] {
            let expanded = lerp(simplex[2], centroid, 3.0);
            let fe = f(expanded);
            if fe < fr {
                simplex[2] = expanded;
                values[2] = fe;
            } else {
                simplex[2] = reflected;
                values[2] = fr;
            }
        } else if fr < values[1] {
            simplex[2] = reflected;
            values[2] = fr;
        } else {
            let contracted = lerp(simplex[2], centroid, 0.5);
            let fc = f(contracted);
            if fc < values[2] {
                simplex[2] = contracted;
                values[2] = fc;
            } else {
                for i in 1..3 {
                    simplex[i] = lerp(simplex[0], simplex[i], 0.5);
                    values[i] = f(simplex[i]);
                }
            }
        }
    }
    let best = (0..3).min_by(|&i, &j| values[i].total_cmp(&values[j])).expect("three vertices");
    (simplex[best], values[best])
}
