//! Fourier pseudospectral discretization of the 1-D rotating shallow water
//! equations
//!
//! ```text
//!     u_t + (1/ε) L u + N(u, u) = 0,     u = (v1, v2, h)
//! ```
//!
//! with
//!
//! ```text
//!         | 0   -1   F^-1/2 ∂x |              | v1 (v1)_x |
//!     L = | 1    0   0         |,   N(u,u) = | v1 (v2)_x |
//!         | F^-1/2 ∂x  0   0   |              | (h v1)_x  |
//! ```
//!
//! on a periodic domain. `L` is skew-Hermitian, so every Fourier mode evolves
//! under the linear part by a unitary 3x3 matrix exponential, which is
//! computed here from a per-wavenumber eigendecomposition. The factor `1/ε`
//! never enters the symbol; callers fold it into the propagation time.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Parameters of the model problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig<T> {
    epsilon: T,
    froude: T,
    n_modes: usize,
    domain_length: T,
}

impl<T: Real> ModelConfig<T> {
    /// Builds a configuration on the default `2π`-periodic domain.
    pub fn new(epsilon: T, froude: T, n_modes: usize) -> Result<Self> {
        Self::with_domain_length(epsilon, froude, n_modes, T::TAU())
    }

    pub fn with_domain_length(epsilon: T, froude: T, n_modes: usize, domain_length: T) -> Result<Self> {
        if !(epsilon > T::zero() && epsilon <= T::one()) {
            return Err(Error::InvalidConfig(format!("epsilon must lie in (0, 1], got {epsilon}")));
        }
        if !(froude > T::zero()) || !froude.is_finite() {
            return Err(Error::InvalidConfig(format!("froude constant must be positive, got {froude}")));
        }
        if n_modes < 8 || !n_modes.is_power_of_two() {
            return Err(Error::InvalidConfig(format!(
                "n_modes must be a power of two >= 8, got {n_modes}"
            )));
        }
        if !(domain_length > T::zero()) || !domain_length.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "domain length must be positive, got {domain_length}"
            )));
        }
        Ok(Self {
            epsilon,
            froude,
            n_modes,
            domain_length,
        })
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn froude(&self) -> T {
        self.froude
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn domain_length(&self) -> T {
        self.domain_length
    }

    /// Same model at a different timescale separation.
    pub fn with_epsilon(&self, epsilon: T) -> Result<Self> {
        Self::with_domain_length(epsilon, self.froude, self.n_modes, self.domain_length)
    }

    /// Largest wavenumber kept by the 2/3 dealiasing rule.
    pub fn dealias_limit(&self) -> i64 {
        (self.n_modes / 3) as i64
    }

    /// Integer wavenumber stored at DFT index `j`.
    pub fn wavenumber(&self, j: usize) -> i64 {
        let n = self.n_modes;
        if j <= n / 2 {
            j as i64
        } else {
            j as i64 - n as i64
        }
    }

    /// DFT index of integer wavenumber `k`.
    pub fn index_of(&self, k: i64) -> usize {
        k.rem_euclid(self.n_modes as i64) as usize
    }

    /// Physical wavenumber `2πk / L`.
    pub fn physical_wavenumber(&self, k: i64) -> T {
        T::TAU() * T::lit(k as f64) / self.domain_length
    }

    /// Dispersion relation `ω_k^α = α sqrt(1 + κ²/F)`.
    pub fn omega(&self, k: i64, alpha: i8) -> T {
        let kappa = self.physical_wavenumber(k);
        T::lit(alpha as f64) * (T::one() + kappa * kappa / self.froude).sqrt()
    }
}

/// Fourier coefficients of `(v1, v2, h)` plus the simulation time.
///
/// Coefficients are stored component-major in standard DFT order, normalized
/// so that `u(x) = Σ_k c_k e^{iκx}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralState<T> {
    coeffs: Vec<Complex<T>>,
    n_modes: usize,
    pub time: T,
}

impl<T: Real> SpectralState<T> {
    pub fn zeros(n_modes: usize) -> Self {
        Self {
            coeffs: vec![Complex::new(T::zero(), T::zero()); 3 * n_modes],
            n_modes,
            time: T::zero(),
        }
    }

    pub fn from_components(components: [Vec<Complex<T>>; 3], time: T) -> Result<Self> {
        let n_modes = components[0].len();
        if components.iter().any(|c| c.len() != n_modes) {
            return Err(Error::InvalidConfig("components must have equal length".into()));
        }
        let coeffs = components.into_iter().flatten().collect();
        Ok(Self { coeffs, n_modes, time })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn component(&self, c: usize) -> &[Complex<T>] {
        &self.coeffs[c * self.n_modes..(c + 1) * self.n_modes]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex<T>] {
        let n = self.n_modes;
        &mut self.coeffs[c * n..(c + 1) * n]
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.coeffs
    }

    /// The three components of mode `j`.
    pub fn mode(&self, j: usize) -> [Complex<T>; 3] {
        let n = self.n_modes;
        [self.coeffs[j], self.coeffs[n + j], self.coeffs[2 * n + j]]
    }

    pub fn set_mode(&mut self, j: usize, v: [Complex<T>; 3]) {
        let n = self.n_modes;
        self.coeffs[j] = v[0];
        self.coeffs[n + j] = v[1];
        self.coeffs[2 * n + j] = v[2];
    }

    /// Discrete L² norm over all components (equals the RMS of the physical
    /// fields by Parseval).
    pub fn norm(&self) -> T {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |m, c| m.max(c.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// `‖self − other‖`.
    pub fn distance(&self, other: &Self) -> T {
        debug_assert_eq!(self.coeffs.len(), other.coeffs.len());
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<T>()
            .sqrt()
    }

    /// `self += a * x`
    pub fn axpy(&mut self, a: T, x: &Self) {
        for (s, v) in self.coeffs.iter_mut().zip(&x.coeffs) {
            *s = *s + v * a;
        }
    }

    /// `self + a * x` as a new state carrying `self.time`.
    pub fn plus_scaled(&self, a: T, x: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(a, x);
        out
    }

    pub fn scale(&mut self, a: T) {
        for s in &mut self.coeffs {
            *s = *s * a;
        }
    }

    /// Largest violation of `c(−k) = conj(c(k))` over all components.
    pub fn symmetry_defect(&self) -> T {
        let n = self.n_modes;
        let mut worst = T::zero();
        for c in 0..3 {
            let comp = self.component(c);
            for j in 0..n {
                let mirror = (n - j) % n;
                worst = worst.max((comp[j] - comp[mirror].conj()).norm());
            }
        }
        worst
    }

    /// Projects onto the conjugate-symmetric subspace.
    pub fn symmetrize(&mut self) {
        let n = self.n_modes;
        let half = T::lit(0.5);
        for c in 0..3 {
            let comp = self.component_mut(c);
            for j in 0..=n / 2 {
                let mirror = (n - j) % n;
                let avg = (comp[j] + comp[mirror].conj()) * half;
                comp[j] = avg;
                comp[mirror] = avg.conj();
            }
        }
    }
}

pub type Matrix3<T> = [[Complex<T>; 3]; 3];

/// Fourier symbol of `L` at integer wavenumber `k`.
pub fn build_symbol<T: Real>(config: &ModelConfig<T>, k: i64) -> Result<Matrix3<T>> {
    let max = (config.n_modes() / 2) as i64;
    if k.abs() > max {
        return Err(Error::WavenumberOutOfRange { k, max });
    }
    let zero = Complex::new(T::zero(), T::zero());
    let one = Complex::new(T::one(), T::zero());
    let coupling = Complex::new(T::zero(), config.physical_wavenumber(k) / config.froude().sqrt());
    Ok([[zero, -one, coupling], [one, zero, zero], [coupling, zero, zero]])
}

/// Eigen-data of one Fourier mode. Columns of `right` are the eigenvectors,
/// ordered by branch `α = −1, 0, +1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeEigen<T> {
    pub wavenumber: i64,
    pub omegas: [T; 3],
    pub right: Matrix3<T>,
    pub inverse: Matrix3<T>,
}

/// Per-wavenumber diagonalization of the symbol of `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition<T> {
    modes: Vec<ModeEigen<T>>,
}

pub const BRANCHES: [i8; 3] = [-1, 0, 1];

fn cross<T: Real>(a: &[Complex<T>; 3], b: &[Complex<T>; 3]) -> [Complex<T>; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn vec_norm<T: Real>(v: &[Complex<T>; 3]) -> T {
    v.iter().map(|c| c.norm_sqr()).sum::<T>().sqrt()
}

pub(crate) fn mat_vec<T: Real>(m: &Matrix3<T>, v: &[Complex<T>; 3]) -> [Complex<T>; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

fn mat_mul<T: Real>(a: &Matrix3<T>, b: &Matrix3<T>) -> Matrix3<T> {
    let zero = Complex::new(T::zero(), T::zero());
    let mut out = [[zero; 3]; 3];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, entry) in row.iter_mut().enumerate() {
            *entry = (0..3).map(|i| a[r][i] * b[i][c]).fold(zero, |s, x| s + x);
        }
    }
    out
}

fn invert3<T: Real>(m: &Matrix3<T>) -> Option<Matrix3<T>> {
    let cof = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
    let adj = [
        [cof(1, 2, 1, 2), -cof(0, 2, 1, 2), cof(0, 1, 1, 2)],
        [-cof(1, 2, 0, 2), cof(0, 2, 0, 2), -cof(0, 1, 0, 2)],
        [cof(1, 2, 0, 1), -cof(0, 2, 0, 1), cof(0, 1, 0, 1)],
    ];
    let det = m[0][0] * adj[0][0] + m[0][1] * adj[1][0] + m[0][2] * adj[2][0];
    if det.norm() == T::zero() || !det.norm().is_finite() {
        return None;
    }
    let inv_det = det.inv();
    Some(adj.map(|row| row.map(|x| x * inv_det)))
}

/// Unit null vector of `a`, which must have rank two.
fn null_vector<T: Real>(a: &Matrix3<T>) -> [Complex<T>; 3] {
    let candidates = [cross(&a[0], &a[1]), cross(&a[0], &a[2]), cross(&a[1], &a[2])];
    let best = candidates
        .iter()
        .max_by(|x, y| vec_norm(x).partial_cmp(&vec_norm(y)).unwrap_or(std::cmp::Ordering::Equal))
        .copied()
        .unwrap_or(candidates[0]);
    let n = vec_norm(&best);
    best.map(|c| c / n)
}

/// Rotates `v` so its largest-magnitude entry is real and positive. Ties are
/// broken towards the lowest index.
fn fix_phase<T: Real>(v: [Complex<T>; 3]) -> [Complex<T>; 3] {
    let max = v.iter().fold(T::zero(), |m, c| m.max(c.norm()));
    let tol = max * T::roundoff_tol();
    let pivot = v.iter().position(|c| c.norm() >= max - tol).unwrap_or(0);
    let phase = v[pivot].conj() / v[pivot].norm();
    v.map(|c| c * phase)
}

impl<T: Real> EigenDecomposition<T> {
    /// Diagonalizes the symbol at every stored wavenumber and checks the
    /// eigen-residual and the inverse.
    pub fn new(config: &ModelConfig<T>) -> Result<Self> {
        let n = config.n_modes();
        let tol = T::roundoff_tol();
        let mut modes = Vec::with_capacity(n);
        for j in 0..n {
            let k = config.wavenumber(j);
            let symbol = build_symbol(config, k)?;
            let omegas = BRANCHES.map(|alpha| config.omega(k, alpha));
            let zero = Complex::new(T::zero(), T::zero());
            let mut right = [[zero; 3]; 3];
            for (b, &omega) in omegas.iter().enumerate() {
                let mut shifted = symbol;
                for (d, row) in shifted.iter_mut().enumerate() {
                    row[d] = row[d] - Complex::new(T::zero(), omega);
                }
                let v = fix_phase(null_vector(&shifted));
                // residual check: L r = iω r
                let lv = mat_vec(&symbol, &v);
                let residual = lv
                    .iter()
                    .zip(&v)
                    .map(|(l, x)| (l - x * Complex::new(T::zero(), omega)).norm_sqr())
                    .sum::<T>()
                    .sqrt();
                if !(residual <= tol * (T::one() + omega.abs())) {
                    return Err(Error::Decomposition {
                        k,
                        residual: residual.to_f64().unwrap_or(f64::NAN),
                    });
                }
                for (r, row) in right.iter_mut().enumerate() {
                    row[b] = v[r];
                }
            }
            let inverse = invert3(&right).ok_or(Error::Decomposition {
                k,
                residual: f64::INFINITY,
            })?;
            let product = mat_mul(&right, &inverse);
            let mut defect = T::zero();
            for (r, row) in product.iter().enumerate() {
                for (c, x) in row.iter().enumerate() {
                    let target = if r == c { T::one() } else { T::zero() };
                    defect = defect.max((x - target).norm());
                }
            }
            if !(defect <= tol) {
                return Err(Error::Decomposition {
                    k,
                    residual: defect.to_f64().unwrap_or(f64::NAN),
                });
            }
            modes.push(ModeEigen {
                wavenumber: k,
                omegas,
                right,
                inverse,
            });
        }
        Ok(Self { modes })
    }

    pub fn modes(&self) -> &[ModeEigen<T>] {
        &self.modes
    }

    pub fn mode(&self, j: usize) -> &ModeEigen<T> {
        &self.modes[j]
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    /// Largest `|ω|` over all stored modes.
    pub fn max_frequency(&self) -> T {
        self.modes.iter().fold(T::zero(), |m, e| m.max(e.omegas[2].abs()))
    }

    /// Coefficients of `state` in the eigenbasis, `σ_k^α`, laid out like the
    /// state itself with the component index replaced by the branch index.
    pub fn to_eigenbasis(&self, state: &SpectralState<T>) -> SpectralState<T> {
        let mut out = state.clone();
        for (j, m) in self.modes.iter().enumerate() {
            out.set_mode(j, mat_vec(&m.inverse, &state.mode(j)));
        }
        out
    }

    pub fn from_eigenbasis(&self, sigma: &SpectralState<T>) -> SpectralState<T> {
        let mut out = sigma.clone();
        for (j, m) in self.modes.iter().enumerate() {
            out.set_mode(j, mat_vec(&m.right, &sigma.mode(j)));
        }
        out
    }

    /// Applies `e^{τL}` in place.
    pub fn propagate_in_place(&self, state: &mut SpectralState<T>, tau: T) {
        if tau == T::zero() {
            return;
        }
        for (j, m) in self.modes.iter().enumerate() {
            let u = state.mode(j);
            if u.iter().all(|c| c.re == T::zero() && c.im == T::zero()) {
                continue;
            }
            let mut sigma = mat_vec(&m.inverse, &u);
            for (s, &omega) in sigma.iter_mut().zip(&m.omegas) {
                *s = *s * Complex::from_polar(T::one(), omega * tau);
            }
            state.set_mode(j, mat_vec(&m.right, &sigma));
        }
    }

    /// `e^{τL}` applied to `state`; the time stamp is left untouched.
    pub fn apply_linear_exponential(&self, state: &SpectralState<T>, tau: T) -> SpectralState<T> {
        let mut out = state.clone();
        self.propagate_in_place(&mut out, tau);
        out
    }
}

/// Model bundle: configuration, eigendecomposition and FFT plans. Immutable
/// and shareable across threads.
#[derive(Clone)]
pub struct RsweModel<T: Real> {
    config: ModelConfig<T>,
    eig: EigenDecomposition<T>,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    /// `iκ` per DFT index, zero at the Nyquist index.
    derivative: Vec<Complex<T>>,
    keep: Vec<bool>,
}

impl<T: Real> std::fmt::Debug for RsweModel<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RsweModel").field("config", &self.config).finish_non_exhaustive()
    }
}

impl<T: Real> RsweModel<T> {
    pub fn new(config: ModelConfig<T>) -> Result<Self> {
        let eig = EigenDecomposition::new(&config)?;
        let n = config.n_modes();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let limit = config.dealias_limit();
        let derivative = (0..n)
            .map(|j| {
                let k = config.wavenumber(j);
                if j == n / 2 {
                    Complex::new(T::zero(), T::zero())
                } else {
                    Complex::new(T::zero(), config.physical_wavenumber(k))
                }
            })
            .collect();
        let keep = (0..n).map(|j| config.wavenumber(j).abs() <= limit).collect();
        Ok(Self {
            config,
            eig,
            forward,
            inverse,
            derivative,
            keep,
        })
    }

    pub fn config(&self) -> &ModelConfig<T> {
        &self.config
    }

    pub fn eig(&self) -> &EigenDecomposition<T> {
        &self.eig
    }

    pub fn n_modes(&self) -> usize {
        self.config.n_modes()
    }

    /// Grid point `x_j = jL/N`.
    pub fn grid_point(&self, j: usize) -> T {
        self.config.domain_length() * T::from_usize_lossy(j) / T::from_usize_lossy(self.n_modes())
    }

    /// Real physical field from Fourier coefficients.
    pub fn to_physical(&self, coeffs: &[Complex<T>]) -> Vec<T> {
        let mut buf = coeffs.to_vec();
        self.inverse.process(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }

    /// Fourier coefficients of a real physical field.
    pub fn from_physical(&self, values: &[T]) -> Vec<Complex<T>> {
        let n = T::from_usize_lossy(values.len());
        let mut buf: Vec<Complex<T>> = values.iter().map(|&v| Complex::new(v, T::zero())).collect();
        self.forward.process(&mut buf);
        buf.iter_mut().for_each(|c| *c = *c / n);
        buf
    }

    /// Zeroes every mode outside the 2/3-rule band.
    pub fn dealias(&self, coeffs: &mut [Complex<T>]) {
        for (c, &keep) in coeffs.iter_mut().zip(&self.keep) {
            if !keep {
                *c = Complex::new(T::zero(), T::zero());
            }
        }
    }

    pub fn dealias_state(&self, state: &mut SpectralState<T>) {
        for c in 0..3 {
            self.dealias(state.component_mut(c));
        }
    }

    fn band_limited(&self, coeffs: &[Complex<T>], differentiate: bool) -> Vec<T> {
        let mut buf: Vec<Complex<T>> = coeffs
            .iter()
            .zip(&self.keep)
            .zip(&self.derivative)
            .map(|((&c, &keep), &d)| match (keep, differentiate) {
                (false, _) => Complex::new(T::zero(), T::zero()),
                (true, true) => c * d,
                (true, false) => c,
            })
            .collect();
        self.inverse.process(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }

    /// Pseudospectral evaluation of `N(u, u)` with 2/3-rule dealiasing.
    pub fn eval_nonlinear(&self, state: &SpectralState<T>) -> SpectralState<T> {
        let v1 = self.band_limited(state.component(0), false);
        let v1_x = self.band_limited(state.component(0), true);
        let v2_x = self.band_limited(state.component(1), true);
        let h = self.band_limited(state.component(2), false);

        let products: [Vec<T>; 3] = [
            v1.iter().zip(&v1_x).map(|(a, b)| *a * *b).collect(),
            v1.iter().zip(&v2_x).map(|(a, b)| *a * *b).collect(),
            h.iter().zip(&v1).map(|(a, b)| *a * *b).collect(),
        ];
        let mut out = SpectralState::zeros(self.n_modes());
        out.time = state.time;
        for (c, product) in products.iter().enumerate() {
            let mut spec = self.from_physical(product);
            if c == 2 {
                for (s, d) in spec.iter_mut().zip(&self.derivative) {
                    *s = *s * d;
                }
            }
            self.dealias(&mut spec);
            out.component_mut(c).copy_from_slice(&spec);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cfg(f: f64, n: usize) -> ModelConfig<f64> {
        ModelConfig::new(1.0, f, n).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn config_validation() {
        assert!(ModelConfig::new(0.0, 1.0, 64).is_err());
        assert!(ModelConfig::new(1.5, 1.0, 64).is_err());
        assert!(ModelConfig::new(0.5, 0.0, 64).is_err());
        assert!(ModelConfig::new(0.5, 1.0, 48).is_err());
        assert!(ModelConfig::new(0.5, 1.0, 4).is_err());
        assert!(ModelConfig::new(1.0, 1.0, 8).is_ok());
    }

    #[test]
    fn symbol_at_zero_wavenumber() {
        let s = build_symbol(&cfg(3.0, 16), 0).unwrap();
        let expect = [[c(0., 0.), c(-1., 0.), c(0., 0.)], [c(1., 0.), c(0., 0.), c(0., 0.)], [c(0., 0.); 3]];
        assert_eq!(s, expect);
    }

    #[test]
    fn symbol_coupling_entries() {
        let s = build_symbol(&cfg(1.0, 16), 1).unwrap();
        assert_eq!(s[0][2], c(0., 1.));
        assert_eq!(s[2][0], c(0., 1.));
        let s = build_symbol(&cfg(4.0, 16), 2).unwrap();
        assert_abs_diff_eq!(s[0][2].im, 1.0, epsilon = 1e-15);
        assert_eq!(s[0][2].re, 0.0);
    }

    #[test]
    fn symbol_rejects_unresolved_wavenumber() {
        assert_eq!(
            build_symbol(&cfg(1.0, 16), 9),
            Err(Error::WavenumberOutOfRange { k: 9, max: 8 })
        );
        assert!(build_symbol(&cfg(1.0, 16), -8).is_ok());
    }

    #[test]
    fn symbol_is_skew_hermitian() {
        let config = cfg(2.5, 32);
        for k in -16..=16 {
            let s = build_symbol(&config, k).unwrap();
            for r in 0..3 {
                for col in 0..3 {
                    assert_eq!(s[r][col] + s[col][r].conj(), c(0., 0.));
                }
            }
        }
    }

    #[test]
    fn eigenvalues_follow_dispersion_relation() {
        let e = EigenDecomposition::new(&cfg(1.0, 16)).unwrap();
        let m0 = e.mode(0);
        assert_eq!(m0.omegas, [-1.0, 0.0, 1.0]);
        let m4 = e.mode(4);
        assert_abs_diff_eq!(m4.omegas[2], 17f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(m4.omegas[2], 4.1231056256, epsilon = 1e-9);
        for m in e.modes() {
            assert_eq!(m.omegas[0], -m.omegas[2]);
            assert_eq!(m.omegas[1], 0.0);
        }
    }

    #[test]
    fn eigenvectors_have_fixed_phase() {
        let e = EigenDecomposition::new(&cfg(1.0, 16)).unwrap();
        for m in e.modes() {
            for b in 0..3 {
                let col = [m.right[0][b], m.right[1][b], m.right[2][b]];
                let max = col.iter().fold(0.0f64, |a, x| a.max(x.norm()));
                let pivot = col.iter().find(|x| x.norm() >= max - 1e-12).unwrap();
                assert!(pivot.re > 0.0);
                assert!(pivot.im.abs() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_wavenumber_decomposes_without_special_case() {
        // k = 0 has a rotation block and a single zero eigenvalue.
        let e = EigenDecomposition::new(&cfg(1.0, 8)).unwrap();
        let m = e.mode(0);
        // slow eigenvector is pure height
        assert_abs_diff_eq!(m.right[2][1].re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn nonlinear_of_zero_is_zero() {
        let model = RsweModel::new(cfg(1.0, 16)).unwrap();
        let z = SpectralState::zeros(16);
        assert_eq!(model.eval_nonlinear(&z).norm(), 0.0);
    }

    #[test]
    fn nonlinear_of_constant_velocity_vanishes() {
        let model = RsweModel::new(cfg(1.0, 16)).unwrap();
        let mut s = SpectralState::zeros(16);
        s.component_mut(0)[0] = c(0.7, 0.0);
        assert!(model.eval_nonlinear(&s).norm() < 1e-15);
    }

    #[test]
    fn state_helpers() {
        let mut a = SpectralState::<f64>::zeros(8);
        a.component_mut(1)[2] = c(3.0, 4.0);
        assert_eq!(a.norm(), 5.0);
        assert_eq!(a.max_abs(), 5.0);
        let b = a.plus_scaled(-1.0, &a);
        assert_eq!(b.norm(), 0.0);
        assert!(a.symmetry_defect() > 0.0);
        a.symmetrize();
        assert!(a.symmetry_defect() < 1e-15);
        assert_eq!(a.component(1)[6], c(1.5, -2.0));
    }
}
