//! The abstract oscillatory-stiff system `u_t + (1/ε) L u + N(u, u) = 0`
//! that the propagators integrate.

use crate::scalar::Real;
use crate::spectral::{RsweModel, SpectralState};

/// A semi-discrete system with a skew-Hermitian linear part whose exponential
/// is available exactly, plus a quadratic nonlinearity.
pub trait OscillatorySystem<T: Real>: Send + Sync {
    fn epsilon(&self) -> T;

    fn n_modes(&self) -> usize;

    /// Applies `e^{τL}` in place (no `1/ε` factor).
    fn linear_exponential(&self, state: &mut SpectralState<T>, tau: T);

    /// Evaluates `N(u, u)`.
    fn nonlinear(&self, state: &SpectralState<T>) -> SpectralState<T>;

    /// Largest `|ω|` of the linear symbol.
    fn max_frequency(&self) -> T;
}

impl<T: Real> OscillatorySystem<T> for RsweModel<T> {
    fn epsilon(&self) -> T {
        self.config().epsilon()
    }

    fn n_modes(&self) -> usize {
        RsweModel::n_modes(self)
    }

    fn linear_exponential(&self, state: &mut SpectralState<T>, tau: T) {
        self.eig().propagate_in_place(state, tau);
    }

    fn nonlinear(&self, state: &SpectralState<T>) -> SpectralState<T> {
        self.eval_nonlinear(state)
    }

    fn max_frequency(&self) -> T {
        self.eig().max_frequency()
    }
}

/// Wraps a system and drops its nonlinearity.
#[derive(Debug, Clone, Copy)]
pub struct LinearPart<'a, S>(pub &'a S);

impl<T: Real, S: OscillatorySystem<T>> OscillatorySystem<T> for LinearPart<'_, S> {
    fn epsilon(&self) -> T {
        self.0.epsilon()
    }

    fn n_modes(&self) -> usize {
        self.0.n_modes()
    }

    fn linear_exponential(&self, state: &mut SpectralState<T>, tau: T) {
        self.0.linear_exponential(state, tau)
    }

    fn nonlinear(&self, state: &SpectralState<T>) -> SpectralState<T> {
        let mut z = SpectralState::zeros(state.n_modes());
        z.time = state.time;
        z
    }

    fn max_frequency(&self) -> T {
        self.0.max_frequency()
    }
}
