//! Weak-excitation response of a two-level atom to a single-photon mode.
//!
//! The excited-state amplitude obeys
//!
//! ```text
//! dc/dt = -(γ/2 + i 2π Δ)·c + sqrt(γ Λ)·ξ(t),    c(t_start) = 0
//! ```
//!
//! for a mode `ξ` normalized to `∫|ξ|² dt = 1`, and `|c|²` is the excitation
//! probability. By Cauchy-Schwarz `|c|² ≤ Λ`, with equality only for the
//! time-reversed decay mode: an exponential rising at `γ/2` in amplitude,
//! cut off sharply.
//!
//! Integration is classical RK4 with step equal to the grid spacing. The
//! half-step drive values come from a cubic through four neighboring samples,
//! choosing among the three stencils that cover the step the one with the
//! smallest third difference, so a discontinuity is never interpolated
//! across. A step touching a sample that is exactly zero is treated as lying
//! outside the pulse support and gets no drive, which places sharp edges on
//! the last nonzero sample.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::waveform::{TimeGrid, Unit, Waveform};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomParams {
    /// Excited-state decay rate, 1/s.
    pub gamma: f64,
    /// Spatial overlap of pulse and atomic dipole mode, 0..=1.
    pub lambda_overlap: f64,
    /// Laser minus atomic resonance, Hz.
    pub detuning_hz: f64,
}

impl Default for AtomParams {
    /// Rb D2 line, 26.2 ns lifetime.
    fn default() -> Self {
        Self {
            gamma: 1.0 / 26.2e-9,
            lambda_overlap: 1.0,
            detuning_hz: 0.0,
        }
    }
}

impl AtomParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(Error::invalid(format!(
                "atom.gamma must be positive, got {}",
                self.gamma
            )));
        }
        if !(0.0..=1.0).contains(&self.lambda_overlap) {
            return Err(Error::invalid(format!(
                "atom.lambda_overlap must lie in [0, 1], got {}",
                self.lambda_overlap
            )));
        }
        if !self.detuning_hz.is_finite() {
            return Err(Error::invalid("atom.detuning must be finite"));
        }
        Ok(())
    }

    pub fn lifetime(&self) -> f64 {
        1.0 / self.gamma
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExcitationResult {
    pub p_max: f64,
    pub t_at_max: f64,
    pub p_trace: Waveform,
    /// `∫|ξ|² dt` of the pulse before normalization.
    pub input_energy: f64,
}

/// Half-step value on step `n -> n + 1`, or `None` when the step lies on a
/// support edge.
fn midpoint(y: &[Complex64], n: usize) -> Option<Complex64> {
    let (a, b) = (y[n], y[n + 1]);
    if a == Complex64::new(0.0, 0.0) || b == Complex64::new(0.0, 0.0) {
        return None;
    }
    let linear = 0.5 * (a + b);
    let len = y.len();
    if len < 4 {
        return Some(linear);
    }
    // stencil start and cubic Lagrange weights at the half step
    const WEIGHTS: [(isize, [f64; 4]); 3] = [
        (-2, [1.0, -5.0, 15.0, 5.0]),
        (-1, [-1.0, 9.0, 9.0, -1.0]),
        (0, [5.0, 15.0, -5.0, 1.0]),
    ];
    let mut best: Option<(f64, Complex64)> = None;
    for (off, w) in WEIGHTS {
        let s = n as isize + off;
        if s < 0 || s as usize + 3 >= len {
            continue;
        }
        let p = &y[s as usize..s as usize + 4];
        let d3 = (p[3] - 3.0 * p[2] + 3.0 * p[1] - p[0]).norm();
        let v = (w[0] * p[0] + w[1] * p[1] + w[2] * p[2] + w[3] * p[3]) / 16.0;
        if best.is_none_or(|(d, _)| d3 < d) {
            best = Some((d3, v));
        }
    }
    match best {
        // a jump inside the step itself: no stencil is smooth
        Some((d3, _)) if d3 > 0.5 * (b - a).norm() => Some(linear),
        Some((_, v)) => Some(v),
        None => Some(linear),
    }
}

/// `∫|ξ|² dt` by Simpson's rule on each step, consistent with the drive
/// seen by the integrator.
fn mode_energy(y: &[Complex64], mids: &[Option<Complex64>], dt: f64) -> f64 {
    mids.iter()
        .enumerate()
        .filter_map(|(n, m)| m.map(|m| dt / 6.0 * (y[n].norm_sqr() + 4.0 * m.norm_sqr() + y[n + 1].norm_sqr())))
        .sum()
}

/// Excitation probability versus time for a pulse used as a photon mode.
pub fn excite(pulse_mode: &Waveform, a: &AtomParams) -> Result<ExcitationResult> {
    a.validate()?;
    let grid = *pulse_mode.grid();
    let y = pulse_mode.samples();
    if y.len() < 2 {
        return Err(Error::invalid("pulse needs at least 2 samples"));
    }
    let h = grid.dt();
    let mids: Vec<Option<Complex64>> = (0..y.len() - 1).map(|n| midpoint(y, n)).collect();
    let energy = mode_energy(y, &mids, h);
    if !(energy.is_finite() && energy > 0.0) {
        return Err(Error::invalid("pulse has zero energy and cannot be normalized"));
    }

    let coupling = (a.gamma * a.lambda_overlap / energy).sqrt();
    let decay = Complex64::new(0.5 * a.gamma, 2.0 * PI * a.detuning_hz);
    let rhs = |c: Complex64, xi: Complex64| -decay * c + coupling * xi;
    let zero = Complex64::new(0.0, 0.0);

    let mut c = zero;
    let mut p = Vec::with_capacity(y.len());
    p.push(0.0);
    for (n, mid) in mids.iter().enumerate() {
        let (x0, xm, x1) = match mid {
            Some(m) => (y[n], *m, y[n + 1]),
            None => (zero, zero, zero),
        };
        let k1 = rhs(c, x0);
        let k2 = rhs(c + 0.5 * h * k1, xm);
        let k3 = rhs(c + 0.5 * h * k2, xm);
        let k4 = rhs(c + h * k3, x1);
        c += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        p.push(c.norm_sqr());
    }

    let (i_max, p_max) =
        p.iter().copied().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |acc, (i, v)| if v > acc.1 { (i, v) } else { acc },
        );
    if !p_max.is_finite() || p_max > 1.0 + 1e-9 {
        return Err(Error::Numerical(format!("excitation probability {p_max} left [0, 1]")));
    }
    let p_trace = Waveform::from_real(grid, &p, Unit::Probability)?;
    Ok(ExcitationResult {
        p_max,
        t_at_max: grid.time(i_max),
        p_trace,
        input_energy: energy,
    })
}

/// Amplitude `exp((t - t_end)/τ)` up to and including `t_end`, zero after.
pub fn rising_exponential(grid: TimeGrid, tau: f64, t_end: f64) -> Result<Waveform> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::invalid(format!(
            "pulse time constant must be positive, got {tau}"
        )));
    }
    let eps = 1e-9 * grid.dt();
    Waveform::from_real_fn(grid, Unit::SqrtWatts, |t| {
        if t <= t_end + eps {
            ((t - t_end) / tau).exp()
        } else {
            0.0
        }
    })
}

/// Amplitude `exp(-(t - t_begin)/τ)` from `t_begin` on, zero before.
pub fn falling_exponential(grid: TimeGrid, tau: f64, t_begin: f64) -> Result<Waveform> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::invalid(format!(
            "pulse time constant must be positive, got {tau}"
        )));
    }
    let eps = 1e-9 * grid.dt();
    Waveform::from_real_fn(grid, Unit::SqrtWatts, |t| {
        if t >= t_begin - eps {
            (-(t - t_begin) / tau).exp()
        } else {
            0.0
        }
    })
}

/// Peak excitation for a rising and a falling exponential of amplitude time
/// constant `tau_pulse`, as `(p_rising, p_falling)`.
pub fn compare_shapes(tau_pulse: f64, a: &AtomParams) -> Result<(f64, f64)> {
    a.validate()?;
    if !(tau_pulse.is_finite() && tau_pulse > 0.0) {
        return Err(Error::invalid(format!(
            "pulse time constant must be positive, got {tau_pulse}"
        )));
    }
    let life = a.lifetime();
    let dt = tau_pulse.min(life) / 256.0;
    // 20 amplitude time constants of lead-in, then time for the atom to decay
    let lead = 20.0 * tau_pulse;
    let tail = 20.0 * (tau_pulse + life);
    let grid = TimeGrid::with_span(0.0, dt, lead + tail)?;
    let t_cut = grid.time(grid.nearest_index(lead));
    let rising = excite(&rising_exponential(grid, tau_pulse, t_cut)?, a)?;
    let falling = excite(&falling_exponential(grid, tau_pulse, 0.0)?, a)?;
    Ok((rising.p_max, falling.p_max))
}
