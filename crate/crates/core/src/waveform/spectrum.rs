//! Discrete Fourier transform between [`Waveform`] and [`Spectrum`].
//!
//! Convention: `X_k = N^{-1/2} Σ_n x_n exp(-i 2π k n / N)`, i.e. the forward
//! transform uses `exp(-i 2π f (t - t_start))` and both directions carry
//! `1/√N`, so `Σ|x|² = Σ|X|²`. Bins are stored in ascending frequency order
//! starting at `-floor(N/2) * df`.
//!
//! With this sign a causal delay `T` has response `exp(-i 2π f T)` and a
//! one-pole low-pass is `1 / (1 + i f / f_c)`.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{TimeGrid, Unit, Waveform};
use crate::error::{Error, Result};

/// Complex amplitudes on a uniform grid of frequency offsets from `carrier_hz`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub carrier_hz: f64,
    pub df: f64,
    pub f_offset_start: f64,
    /// Time origin and sample spacing of the transformed waveform, needed to invert.
    pub t_start: f64,
    pub dt: f64,
    pub unit: Unit,
    pub amplitudes: Vec<Complex64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn frequency(&self, bin: usize) -> f64 {
        self.f_offset_start + bin as f64 * self.df
    }

    pub fn frequencies(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |b| self.frequency(b))
    }

    /// `Σ|X_k|²`; equals [`Waveform::norm_sqr`] of the source.
    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn with_carrier(mut self, carrier_hz: f64) -> Self {
        self.carrier_hz = carrier_hz;
        self
    }

    /// Bin holding offset `f`, if it lies on the grid.
    pub fn bin_of(&self, f: f64) -> Option<usize> {
        let b = ((f - self.f_offset_start) / self.df).round();
        (b >= 0.0 && (b as usize) < self.len()).then_some(b as usize)
    }
}

fn fft_normalized(buf: &mut [Complex64], inverse: bool) {
    let n = buf.len();
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    fft.process(buf);
    let norm = 1.0 / (n as f64).sqrt();
    for z in buf.iter_mut() {
        *z *= norm;
    }
}

/// Signed bin number of raw FFT index `j`.
#[inline]
fn signed_bin(j: usize, n: usize) -> i64 {
    if j < n.div_ceil(2) {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

pub fn to_spectrum(w: &Waveform) -> Result<Spectrum> {
    w.check_finite()?;
    let n = w.len();
    let mut buf = w.samples().to_vec();
    fft_normalized(&mut buf, false);
    let half = n / 2;
    // raw index of the most negative bin is n - half
    buf.rotate_left(n - half);
    let df = w.grid().df();
    Ok(Spectrum {
        carrier_hz: 0.0,
        df,
        f_offset_start: -(half as f64) * df,
        t_start: w.grid().t_start(),
        dt: w.grid().dt(),
        unit: w.unit(),
        amplitudes: buf,
    })
}

pub fn from_spectrum(s: &Spectrum) -> Result<Waveform> {
    let n = s.len();
    if n < 2 {
        return Err(Error::invalid("spectrum needs at least 2 bins"));
    }
    if !(s.df.is_finite() && s.df > 0.0) {
        return Err(Error::invalid(format!("spectrum df must be > 0, got {}", s.df)));
    }
    if let Some(b) = s.amplitudes.iter().position(|z| !z.is_finite()) {
        return Err(Error::invalid(format!("non-finite spectral amplitude in bin {b}")));
    }
    if !((n as f64 * s.dt * s.df - 1.0).abs() <= 1e-9) {
        return Err(Error::invalid(format!(
            "spectrum df {} does not match sample spacing {} over {n} bins",
            s.df, s.dt
        )));
    }
    let half = n / 2;
    let expected_start = -(half as f64) * s.df;
    if (s.f_offset_start - expected_start).abs() > 1e-9 * s.df {
        return Err(Error::invalid(
            "spectrum bins are not centered on zero offset as produced by to_spectrum",
        ));
    }
    let mut buf = s.amplitudes.clone();
    buf.rotate_right(n - half);
    fft_normalized(&mut buf, true);
    let grid = TimeGrid::new(s.t_start, s.dt, n)?;
    Waveform::new(grid, buf, s.unit)
}

/// Filters `w` with the frequency response `h(f)`, `f` being the signed offset in Hz.
///
/// The transform is circular, so responses with long memory need the signal
/// to sit well inside the grid.
pub fn apply_transfer(w: &Waveform, h: impl Fn(f64) -> Complex64) -> Result<Waveform> {
    w.check_finite()?;
    let n = w.len();
    let df = w.grid().df();
    let mut buf = w.samples().to_vec();
    fft_normalized(&mut buf, false);
    for (j, z) in buf.iter_mut().enumerate() {
        let f = signed_bin(j, n) as f64 * df;
        let hf = h(f);
        if !hf.is_finite() {
            return Err(Error::invalid(format!(
                "transfer function is not finite at f = {f:e} Hz"
            )));
        }
        *z *= hf;
    }
    fft_normalized(&mut buf, true);
    Waveform::new(*w.grid(), buf, w.unit())
}

/// Analytic signal of the real part of `w`: negative frequencies removed,
/// positive ones doubled. Its magnitude is the envelope of a modulated carrier.
pub fn analytic_signal(w: &Waveform) -> Result<Waveform> {
    let real = w.map(|_, z| Complex64::new(z.re, 0.0));
    let n = w.len();
    apply_transfer(&real, |f| {
        let k = (f / w.grid().df()).round() as i64;
        let nyq = n.is_multiple_of(2) && k == -((n / 2) as i64);
        if k == 0 || nyq {
            Complex64::new(1.0, 0.0)
        } else if k > 0 {
            Complex64::new(2.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}
