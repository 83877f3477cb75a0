//! Averaging kernels, the kernel-weighted fast-wave average of the
//! nonlinearity, and the stiffness functional `Λ(η)`.
//!
//! A kernel `ρ` lives on `[0, 1]`, vanishes at both ends and has unit mass.
//! The fast-wave average of the nonlinearity over a window of length `T₀` is
//!
//! ```text
//!     N̄(ū) ≈ (1/M̄) Σ_m ρ(s_m/T₀) e^{s_m L/ε} N(e^{−s_m L/ε} ū)
//! ```
//!
//! with midpoint nodes `s_m = (m + ½) T₀ / M̄`. All kernels shipped here are
//! symmetric about `s = ½`, so their Fourier transform factors as
//! `∫ρ(s) e^{iys} ds = e^{iy/2} J(y)` with `J` real and even.

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::SpectralState;
use crate::system::OscillatorySystem;

/// Kernel families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelKind {
    /// `exp(−1/(s(1−s)))`, C∞ with compact support.
    Bump,
    /// Gaussian centered at `½`, shifted down so it vanishes at the ends.
    Gaussian,
    /// `(s(1−s))^p`.
    Polynomial,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Shape<T> {
    Bump,
    Gaussian { sigma: T, floor: T },
    Polynomial { power: i32 },
}

/// A normalized averaging kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel<T> {
    shape: Shape<T>,
    scale: T,
}

const NORMALIZATION_INTERVALS: usize = 1 << 14;

impl<T: Real> Kernel<T> {
    pub fn bump() -> Self {
        Self::normalized(Shape::Bump)
    }

    /// Gaussian with standard deviation `sigma` (in units of the window).
    pub fn gaussian(sigma: T) -> Result<Self> {
        if !(sigma > T::zero() && sigma < T::one()) {
            return Err(Error::InvalidConfig(format!("gaussian width must lie in (0, 1), got {sigma}")));
        }
        let half = T::lit(0.5);
        let floor = (-(half * half) / (T::lit(2.0) * sigma * sigma)).exp();
        Ok(Self::normalized(Shape::Gaussian { sigma, floor }))
    }

    pub fn polynomial(power: i32) -> Result<Self> {
        if power < 1 {
            return Err(Error::InvalidConfig(format!("polynomial power must be >= 1, got {power}")));
        }
        Ok(Self::normalized(Shape::Polynomial { power }))
    }

    /// Default member of each family: the bump, a Gaussian of width 0.1 and a
    /// quartic polynomial.
    pub fn of_kind(kind: KernelKind) -> Self {
        match kind {
            KernelKind::Bump => Self::bump(),
            KernelKind::Gaussian => Self::gaussian(T::lit(0.1)).expect("valid default width"),
            KernelKind::Polynomial => Self::polynomial(4).expect("valid default power"),
        }
    }

    pub fn kind(&self) -> KernelKind {
        match self.shape {
            Shape::Bump => KernelKind::Bump,
            Shape::Gaussian { .. } => KernelKind::Gaussian,
            Shape::Polynomial { .. } => KernelKind::Polynomial,
        }
    }

    fn normalized(shape: Shape<T>) -> Self {
        let raw = Self { shape, scale: T::one() };
        let mass = simpson(|s| raw.raw(s));
        Self {
            shape,
            scale: T::one() / mass,
        }
    }

    fn raw(&self, s: T) -> T {
        if s <= T::zero() || s >= T::one() {
            return T::zero();
        }
        match self.shape {
            Shape::Bump => (-T::one() / (s * (T::one() - s))).exp(),
            Shape::Gaussian { sigma, floor } => {
                let d = s - T::lit(0.5);
                ((-(d * d) / (T::lit(2.0) * sigma * sigma)).exp() - floor).max(T::zero())
            }
            Shape::Polynomial { power } => (s * (T::one() - s)).powi(power),
        }
    }

    /// `ρ(s)`; rejects `s` outside `[0, 1]`.
    pub fn eval(&self, s: T) -> Result<T> {
        if !(s >= T::zero() && s <= T::one()) {
            return Err(Error::KernelDomain(s.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(self.eval_unchecked(s))
    }

    /// `ρ(s)`, zero outside `(0, 1)`.
    pub fn eval_unchecked(&self, s: T) -> T {
        self.raw(s) * self.scale
    }

    /// `∫₀¹ ρ(s) e^{iys} ds` by the trapezoid rule on `n_nodes` intervals.
    pub fn transform_direct(&self, y: T, n_nodes: usize) -> Complex<T> {
        let h = T::one() / T::from_usize_lossy(n_nodes);
        let step = Complex::from_polar(T::one(), y * h);
        let mut phase = Complex::new(T::one(), T::zero());
        let mut sum = Complex::new(T::zero(), T::zero());
        for j in 0..n_nodes {
            if j % 256 == 0 {
                // re-anchor the recurrence to limit drift
                phase = Complex::from_polar(T::one(), y * h * T::from_usize_lossy(j));
            }
            sum = sum + phase * self.eval_unchecked(T::from_usize_lossy(j) * h);
            phase = phase * step;
        }
        sum * h
    }

    /// `|∫₀¹ ρ(s) e^{iys} ds|` with a node count that resolves the phase.
    pub fn transform_magnitude(&self, y: T) -> T {
        let n = 1024 + 2 * y.abs().ceil().to_usize().unwrap_or(0);
        self.transform_direct(y, n).norm()
    }

    /// One-sided derivatives `ρ^{(m)}(0⁺)` for `m = 0, 1, …`, as many as the
    /// large-argument expansion of the transform uses. Empty for the bump,
    /// whose derivatives all vanish at the ends.
    fn endpoint_derivatives(&self) -> Vec<T> {
        match self.shape {
            Shape::Bump => Vec::new(),
            Shape::Gaussian { sigma, .. } => {
                let d = T::lit(-0.5);
                let s2 = sigma * sigma;
                let g = (-(d * d) / (T::lit(2.0) * s2)).exp() * self.scale;
                vec![
                    T::zero(),
                    -(d / s2) * g,
                    (d * d / (s2 * s2) - T::one() / s2) * g,
                    (-(d * d * d) / (s2 * s2 * s2) + T::lit(3.0) * d / (s2 * s2)) * g,
                ]
            }
            Shape::Polynomial { power } => {
                // (s − s²)^p = Σ_j C(p, j) (−1)^j s^{p+j}
                let p = power as usize;
                let mut out = vec![T::zero(); 2 * p + 1];
                let mut binom = 1.0f64;
                for j in 0..=p {
                    let m = p + j;
                    let factorial: f64 = (1..=m).map(|i| i as f64).product();
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    out[m] = T::lit(sign * binom * factorial) * self.scale;
                    binom = binom * (p - j) as f64 / (j + 1) as f64;
                }
                out
            }
        }
    }

    /// Large-`|y|` expansion of `|∫₀¹ ρ(s) e^{iys} ds|` from the endpoint
    /// derivatives, using the symmetry `ρ^{(m)}(1) = (−1)^m ρ^{(m)}(0)`:
    ///
    /// ```text
    ///     I(y) ≈ Σ_m ρ^{(m)}(0) (e^{iy} − (−1)^m) / (iy)^{m+1}
    /// ```
    ///
    /// Exact for the polynomial family; relative error `O((y σ²)^{-3})` for the
    /// Gaussian; zero for the bump, whose transform decays faster than any
    /// power.
    pub fn transform_asymptotic(&self, y: T) -> T {
        let iy = Complex::new(T::zero(), y);
        let e = Complex::from_polar(T::one(), y);
        let mut denom = iy;
        let mut sum = Complex::new(T::zero(), T::zero());
        for (m, &d) in self.endpoint_derivatives().iter().enumerate() {
            let sign = if m % 2 == 0 { T::one() } else { -T::one() };
            if d != T::zero() {
                sum = sum + (e - sign) * d / denom;
            }
            denom = denom * iy;
        }
        sum.norm()
    }

    /// `∫₀¹ ρ(s) s ds`.
    pub fn first_moment(&self) -> T {
        simpson(|s| s * self.eval_unchecked(s))
    }
}

/// Composite Simpson rule on `[0, 1]` for integrands vanishing at both ends.
fn simpson<T: Real, F: Fn(T) -> T>(f: F) -> T {
    let n = NORMALIZATION_INTERVALS;
    let h = T::one() / T::from_usize_lossy(n);
    let mut sum = T::zero();
    for j in 1..n {
        let w = if j % 2 == 1 { T::lit(4.0) } else { T::lit(2.0) };
        sum = sum + w * f(T::from_usize_lossy(j) * h);
    }
    sum * h / T::lit(3.0)
}

/// Tabulated `J(y) = e^{−iy/2} ∫₀¹ ρ(s) e^{iys} ds` for fast evaluation of
/// `Λ(η)`. The table comes from one zero-padded FFT of the trapezoid
/// weights; arguments beyond the table fall back to direct quadrature.
#[derive(Debug, Clone)]
pub struct KernelTransform<T> {
    kernel: Kernel<T>,
    spacing: T,
    table: Vec<T>,
}

const TRANSFORM_NODES: usize = 1 << 14;
const TRANSFORM_PADDED: usize = 1 << 22;
// fraction of the padded spectrum kept; small enough that `y·h` stays below
// 0.4 and the trapezoid rule stays accurate for kernels with endpoint kinks
const TRANSFORM_KEEP: usize = 16;

impl<T: Real> KernelTransform<T> {
    pub fn new(kernel: Kernel<T>) -> Self {
        let n = TRANSFORM_NODES;
        let p = TRANSFORM_PADDED;
        let h = T::one() / T::from_usize_lossy(n);
        let mut buf = vec![Complex::new(T::zero(), T::zero()); p];
        for (j, b) in buf.iter_mut().take(n).enumerate() {
            *b = Complex::new(kernel.eval_unchecked(T::from_usize_lossy(j) * h) * h, T::zero());
        }
        FftPlanner::new().plan_fft_inverse(p).process(&mut buf);
        let spacing = T::TAU() * T::from_usize_lossy(n) / T::from_usize_lossy(p);
        let keep = p / TRANSFORM_KEEP;
        let half = T::lit(0.5);
        let table = buf
            .iter()
            .take(keep)
            .enumerate()
            .map(|(m, &v)| {
                let y = spacing * T::from_usize_lossy(m);
                (v * Complex::from_polar(T::one(), -y * half)).re
            })
            .collect();
        Self { kernel, spacing, table }
    }

    pub fn kernel(&self) -> &Kernel<T> {
        &self.kernel
    }

    /// Largest argument served from the table.
    pub fn table_limit(&self) -> T {
        self.spacing * T::from_usize_lossy(self.table.len() - 3)
    }

    /// `|∫₀¹ ρ(s) e^{iys} ds|`; beyond the table the endpoint expansion is
    /// used.
    pub fn magnitude(&self, y: T) -> T {
        let y = y.abs();
        if y >= self.table_limit() {
            return self.kernel.transform_asymptotic(y);
        }
        let x = y / self.spacing;
        let i = x.floor().to_usize().unwrap_or(0);
        let t = x - T::from_usize_lossy(i);
        let at = |m: isize| self.table[m.unsigned_abs()];
        let i = i as isize;
        let (f0, f1, f2, f3) = (at(i - 1), at(i), at(i + 1), at(i + 2));
        // cubic Lagrange on nodes -1, 0, 1, 2 (J is even, so index -1 mirrors 1)
        let one = T::one();
        let two = T::lit(2.0);
        let six = T::lit(6.0);
        let value = -f0 * t * (t - one) * (t - two) / six + f1 * (t + one) * (t - one) * (t - two) / two
            - f2 * (t + one) * t * (t - two) / two
            + f3 * (t + one) * t * (t - one) / six;
        value.abs()
    }
}

/// `Λ(η) = max_n λ_n² |∫₀¹ ρ(s) e^{iλ_n η ΔT s} ds|` over the supplied
/// mismatch spectrum.
pub fn lambda_functional<T: Real>(eta: T, dt_coarse: T, lambdas: &[T], transform: &KernelTransform<T>) -> Result<T> {
    if lambdas.is_empty() {
        return Err(Error::EmptyTriads);
    }
    if !(eta > T::zero()) || !(dt_coarse > T::zero()) {
        return Err(Error::InvalidConfig("eta and dt_coarse must be positive".into()));
    }
    let x = eta * dt_coarse;
    Ok(lambdas
        .iter()
        .map(|&l| l * l * transform.magnitude(l * x))
        .fold(T::zero(), T::max))
}

// extra nodes beyond the fastest phase: the alias then sits at least
// 2π·32 ≈ 200 radians away, where the bump transform is below 1e−7
const RESOLVING_MARGIN: usize = 32;

/// Averaging window and quadrature size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragingConfig<T> {
    window: T,
    n_quad: usize,
}

impl<T: Real> AveragingConfig<T> {
    pub fn new(window: T, n_quad: usize) -> Result<Self> {
        if !(window > T::zero()) || !window.is_finite() {
            return Err(Error::InvalidConfig(format!("averaging window must be positive, got {window}")));
        }
        if n_quad < 4 {
            return Err(Error::InvalidConfig(format!("need at least 4 quadrature nodes, got {n_quad}")));
        }
        Ok(Self { window, n_quad })
    }

    /// Window `T₀` with enough midpoint nodes that the fastest phase rate
    /// `max_rate` (radians per unit time, e.g. the largest `|Ω|/ε`) is not
    /// aliased back into the kernel's pass band.
    pub fn resolving(window: T, max_rate: T) -> Result<Self> {
        let cycles = (max_rate.abs() * window / T::TAU()).ceil().to_usize().unwrap_or(0);
        Self::new(window, (cycles + RESOLVING_MARGIN).max(16))
    }

    /// Zero-length window: a single node at `s = 0` with unit weight, i.e. no
    /// averaging at all.
    pub fn pointwise() -> Self {
        Self {
            window: T::zero(),
            n_quad: 1,
        }
    }

    pub fn window(&self) -> T {
        self.window
    }

    pub fn n_quad(&self) -> usize {
        self.n_quad
    }

    pub fn is_pointwise(&self) -> bool {
        self.window == T::zero()
    }
}

/// Quadrature nodes `s_m` and weights `ρ(s_m/T₀)/M̄`.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragingQuadrature<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> AveragingQuadrature<T> {
    pub fn new(avg: &AveragingConfig<T>, kernel: &Kernel<T>) -> Self {
        if avg.is_pointwise() {
            return Self {
                nodes: vec![T::zero()],
                weights: vec![T::one()],
            };
        }
        let m = T::from_usize_lossy(avg.n_quad());
        let half = T::lit(0.5);
        let (nodes, weights) = (0..avg.n_quad())
            .map(|i| {
                let frac = (T::from_usize_lossy(i) + half) / m;
                (frac * avg.window(), kernel.eval_unchecked(frac) / m)
            })
            .filter(|&(_, w)| w > T::zero())
            .unzip();
        Self { nodes, weights }
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }
}

/// Kernel-weighted average of the conjugated nonlinearity,
/// `Σ_m w_m e^{(t+s_m)L/ε} N(e^{−(t+s_m)L/ε} ū)`.
///
/// Terms are evaluated in parallel and summed in node order, so the result
/// does not depend on the thread count.
pub fn averaged_nonlinear_with<T: Real, S: OscillatorySystem<T>>(
    system: &S,
    state: &SpectralState<T>,
    t: T,
    quad: &AveragingQuadrature<T>,
) -> SpectralState<T> {
    let inv_eps = T::one() / system.epsilon();
    let terms: Vec<SpectralState<T>> = quad
        .nodes
        .par_iter()
        .zip(&quad.weights)
        .map(|(&s, &w)| {
            let phase = (t + s) * inv_eps;
            let mut u = state.clone();
            system.linear_exponential(&mut u, -phase);
            let mut n = system.nonlinear(&u);
            system.linear_exponential(&mut n, phase);
            n.scale(w);
            n
        })
        .collect();
    let mut out = SpectralState::zeros(state.n_modes());
    for term in &terms {
        out.axpy(T::one(), term);
    }
    out.time = state.time;
    out
}

pub fn averaged_nonlinear<T: Real, S: OscillatorySystem<T>>(
    system: &S,
    state: &SpectralState<T>,
    t: T,
    avg: &AveragingConfig<T>,
    kernel: &Kernel<T>,
) -> SpectralState<T> {
    averaged_nonlinear_with(system, state, t, &AveragingQuadrature::new(avg, kernel))
}
