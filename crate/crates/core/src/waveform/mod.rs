//! Uniformly sampled complex signals and the transforms shared by every stage.

mod fit;
mod spectrum;
mod trace;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use fit::{fit_exponential, Direction, FitResult};
pub use spectrum::{analytic_signal, apply_transfer, from_spectrum, to_spectrum, Spectrum};
pub use trace::{read_trace, write_trace, TraceKind};

/// Uniform sampling instants `t_start + i * dt` for `i in 0..n_samples`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_start: f64,
    dt: f64,
    n_samples: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, dt: f64, n_samples: usize) -> Result<Self> {
        if !t_start.is_finite() {
            return Err(Error::invalid("grid t_start must be finite"));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid(format!("grid dt must be > 0, got {dt}")));
        }
        if n_samples < 2 {
            return Err(Error::invalid(format!(
                "grid needs at least 2 samples, got {n_samples}"
            )));
        }
        Ok(Self { t_start, dt, n_samples })
    }

    /// Grid starting at `t_start` that covers `span` with spacing `dt`.
    pub fn with_span(t_start: f64, dt: f64, span: f64) -> Result<Self> {
        let n = (span / dt).round() as usize + 1;
        Self::new(t_start, dt, n)
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.n_samples
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn span(&self) -> f64 {
        self.dt * (self.n_samples - 1) as f64
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.n_samples - 1)
    }

    #[inline]
    pub fn time(&self, i: usize) -> f64 {
        self.t_start + i as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_samples).map(move |i| self.time(i))
    }

    /// Frequency spacing of the DFT on this grid.
    pub fn df(&self) -> f64 {
        1.0 / (self.n_samples as f64 * self.dt)
    }

    pub fn nyquist(&self) -> f64 {
        0.5 / self.dt
    }

    /// Nearest sample index to `t`, clamped to the grid.
    pub fn nearest_index(&self, t: f64) -> usize {
        let x = ((t - self.t_start) / self.dt).round();
        x.clamp(0.0, (self.n_samples - 1) as f64) as usize
    }

    /// Indices of samples with `t_a <= t <= t_b` (tolerant to rounding of the bounds).
    pub fn indices_in(&self, t_a: f64, t_b: f64) -> std::ops::Range<usize> {
        let eps = 1e-9;
        let lo = ((t_a - self.t_start) / self.dt - eps).ceil().max(0.0) as usize;
        let hi = ((t_b - self.t_start) / self.dt + eps).floor();
        if hi < 0.0 {
            return 0..0;
        }
        let hi = (hi as usize + 1).min(self.n_samples);
        lo.min(hi)..hi
    }

    pub fn contains(&self, t: f64) -> bool {
        let eps = 1e-9 * self.dt;
        t >= self.t_start - eps && t <= self.t_end() + eps
    }
}

/// Physical unit carried by a waveform's samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    Volts,
    Amperes,
    /// Optical field envelope, normalized so that `|E|^2` is power.
    SqrtWatts,
    Watts,
    Probability,
    Dimensionless,
}

/// Complex samples on a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    grid: TimeGrid,
    samples: Vec<Complex64>,
    unit: Unit,
}

impl Waveform {
    pub fn new(grid: TimeGrid, samples: Vec<Complex64>, unit: Unit) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::invalid(format!(
                "waveform has {} samples but grid has {}",
                samples.len(),
                grid.len()
            )));
        }
        if let Some(i) = samples.iter().position(|z| !z.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite sample at index {i} (t = {:e} s)",
                grid.time(i)
            )));
        }
        Ok(Self { grid, samples, unit })
    }

    pub fn from_real(grid: TimeGrid, values: &[f64], unit: Unit) -> Result<Self> {
        Self::new(grid, values.iter().map(|&v| Complex64::new(v, 0.0)).collect(), unit)
    }

    /// Samples a function of absolute time on `grid`.
    pub fn from_fn(grid: TimeGrid, unit: Unit, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        Self::new(grid, grid.times().map(f).collect(), unit)
    }

    pub fn from_real_fn(grid: TimeGrid, unit: Unit, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_fn(grid, unit, |t| Complex64::new(f(t), 0.0))
    }

    pub fn zeros(grid: TimeGrid, unit: Unit) -> Self {
        Self {
            grid,
            samples: vec![Complex64::new(0.0, 0.0); grid.len()],
            unit,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn with_unit(mut self, unit: Unit) -> Self {
        self.unit = unit;
        self
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.samples.iter().map(|z| z.norm()).collect()
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.samples.iter().map(|z| z.re).collect()
    }

    /// True if every imaginary part is exactly zero.
    pub fn is_real(&self) -> bool {
        self.samples.iter().all(|z| z.im == 0.0)
    }

    /// Sum of `|x_i|^2` (no `dt` factor).
    pub fn norm_sqr(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Rectangle-rule `∫|x|^2 dt`.
    pub fn energy(&self) -> f64 {
        self.norm_sqr() * self.grid.dt
    }

    pub fn peak(&self) -> (usize, f64) {
        self.samples
            .iter()
            .map(|z| z.norm())
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, m)| if m > acc.1 { (i, m) } else { acc },
            )
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        self.map(|_, z| z * factor)
    }

    /// Applies `f(t, x)` sample by sample.
    pub fn map(&self, f: impl Fn(f64, Complex64) -> Complex64) -> Self {
        let samples = self
            .samples
            .iter()
            .enumerate()
            .map(|(i, &z)| f(self.grid.time(i), z))
            .collect();
        Self {
            grid: self.grid,
            samples,
            unit: self.unit,
        }
    }

    /// `a * self + b * other` on a shared grid.
    pub fn linear_combination(&self, a: Complex64, other: &Waveform, b: Complex64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::invalid("waveforms are on different grids"));
        }
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(&x, &y)| a * x + b * y)
            .collect();
        Ok(Self {
            grid: self.grid,
            samples,
            unit: self.unit,
        })
    }

    /// Multiplies by `exp(-i 2π f t)`, moving spectral content at `f` to zero offset.
    pub fn shift_frequency(&self, f: f64) -> Self {
        self.map(|t, z| z * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * f * t))
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        match self.samples.iter().position(|z| !z.is_finite()) {
            Some(i) => Err(Error::invalid(format!("non-finite sample at index {i}"))),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_bad_params() {
        assert!(TimeGrid::new(0.0, 0.0, 10).is_err());
        assert!(TimeGrid::new(0.0, -1.0, 10).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 1).is_err());
        assert!(TimeGrid::new(f64::NAN, 1.0, 4).is_err());
    }

    #[test]
    fn grid_span_and_indices() {
        let g = TimeGrid::new(0.0, 0.1e-9, 10_000).unwrap();
        assert!((g.span() - 999.9e-9).abs() < 1e-18);
        let r = g.indices_in(10e-9, 20e-9);
        assert_eq!(r, 100..201);
        assert_eq!(g.indices_in(-5.0, -1.0), 0..0);
        assert_eq!(g.nearest_index(1.0), 9_999);
    }

    #[test]
    fn waveform_rejects_nan_and_length_mismatch() {
        let g = TimeGrid::new(0.0, 1.0, 3).unwrap();
        let bad = vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(f64::NAN, 0.0),
            Complex64::new(0.0, 0.0),
        ];
        assert!(Waveform::new(g, bad, Unit::Volts).is_err());
        assert!(Waveform::new(g, vec![Complex64::new(0.0, 0.0); 2], Unit::Volts).is_err());
    }
}
