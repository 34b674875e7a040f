//! Cascaded Fabry-Perot etalons used as a narrow optical band-pass.
//!
//! Each etalon has the causal amplitude response
//!
//! ```text
//! t(f) = (1 - R) / (1 - ρ·exp(-iδ)),   δ = 2π (f - detuning) / FSR,   ρ = R·sqrt(1 - loss)
//! ```
//!
//! with the common single-pass delay dropped, so the response is exactly
//! periodic in the free spectral range. Stages are independent and multiply.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::waveform::{apply_transfer, to_spectrum, Waveform};

/// Spectral energy fraction outside the usable band that triggers a warning.
pub const LEAKAGE_WARN_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtalonParams {
    /// Mirror intensity reflectivity.
    pub reflectivity: f64,
    pub fsr_hz: f64,
    /// Offset of the transmission peak from the selected frequency, Hz.
    pub detuning_hz: f64,
    /// Round-trip intensity loss.
    pub loss: f64,
    /// Temperature change that tunes the peak by one FSR, K.
    pub temp_per_fsr_k: f64,
    /// RMS temperature stability, K.
    pub temp_jitter_k: f64,
}

impl Default for EtalonParams {
    fn default() -> Self {
        Self {
            reflectivity: 0.95,
            fsr_hz: 17e9,
            detuning_hz: 0.0,
            loss: 0.0,
            temp_per_fsr_k: 7.4,
            temp_jitter_k: 5e-3,
        }
    }
}

impl EtalonParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.reflectivity > 0.0 && self.reflectivity < 1.0) {
            return Err(Error::invalid(format!(
                "etalon reflectivity must lie in (0, 1), got {}",
                self.reflectivity
            )));
        }
        if !(self.fsr_hz.is_finite() && self.fsr_hz > 0.0) {
            return Err(Error::invalid(format!(
                "etalon FSR must be positive, got {}",
                self.fsr_hz
            )));
        }
        if !self.detuning_hz.is_finite() {
            return Err(Error::invalid("etalon detuning must be finite"));
        }
        if !(self.loss >= 0.0 && self.loss < 1.0) {
            return Err(Error::invalid(format!(
                "etalon loss must lie in [0, 1), got {}",
                self.loss
            )));
        }
        if !(self.temp_per_fsr_k.is_finite() && self.temp_per_fsr_k > 0.0) {
            return Err(Error::invalid("etalon temp_per_fsr must be positive"));
        }
        if !(self.temp_jitter_k.is_finite() && self.temp_jitter_k >= 0.0) {
            return Err(Error::invalid("etalon temp_jitter must be non-negative"));
        }
        Ok(())
    }

    /// Round-trip amplitude factor `ρ`.
    pub fn round_trip(&self) -> f64 {
        self.reflectivity * (1.0 - self.loss).sqrt()
    }

    /// `π√ρ / (1 - ρ)`.
    pub fn finesse(&self) -> f64 {
        let rho = self.round_trip();
        PI * rho.sqrt() / (1.0 - rho)
    }

    /// Exact full width at half maximum of `|t|²`.
    pub fn fwhm_hz(&self) -> f64 {
        let rho = self.round_trip();
        let s = ((1.0 - rho) / (2.0 * rho.sqrt())).min(1.0);
        2.0 / PI * s.asin() * self.fsr_hz
    }

    /// Amplitude decay time of the stored field, `1 / (π·FWHM)`.
    pub fn ringdown_s(&self) -> f64 {
        1.0 / (PI * self.fwhm_hz())
    }

    /// `|t|²` on resonance; 1 when lossless.
    pub fn peak_transmission(&self) -> f64 {
        ((1.0 - self.reflectivity) / (1.0 - self.round_trip())).powi(2)
    }
}

/// Complex amplitude transmission of one etalon.
pub fn airy_transmission(f_offset: f64, e: &EtalonParams) -> Complex64 {
    // reduce first so that f and f + FSR give the same phase to rounding
    let cycles = ((f_offset - e.detuning_hz) / e.fsr_hz).rem_euclid(1.0);
    let round = Complex64::from_polar(e.round_trip(), -2.0 * PI * cycles);
    Complex64::new(1.0 - e.reflectivity, 0.0) / (Complex64::new(1.0, 0.0) - round)
}

/// Stages in beam order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtalonStack {
    stages: Vec<EtalonParams>,
}

impl Default for EtalonStack {
    fn default() -> Self {
        Self::uniform(EtalonParams::default(), 3).expect("default etalon is valid")
    }
}

impl EtalonStack {
    pub fn new(stages: Vec<EtalonParams>) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::invalid("etalon stack needs at least one stage"));
        }
        for s in &stages {
            s.validate()?;
        }
        Ok(Self { stages })
    }

    pub fn uniform(p: EtalonParams, n: usize) -> Result<Self> {
        Self::new(vec![p; n])
    }

    pub fn stages(&self) -> &[EtalonParams] {
        &self.stages
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    /// Copy with each stage detuned by an independent temperature draw of
    /// its own RMS jitter.
    pub fn jittered<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Self> {
        let mut stages = self.stages.clone();
        for s in &mut stages {
            let sigma = temperature_to_frequency(s.temp_jitter_k, s);
            let normal = Normal::new(0.0, sigma).map_err(|e| Error::invalid(e.to_string()))?;
            s.detuning_hz += normal.sample(rng);
        }
        Self::new(stages)
    }
}

/// Product of the stage responses.
pub fn stack_transmission(f_offset: f64, s: &EtalonStack) -> Complex64 {
    s.stages.iter().map(|e| airy_transmission(f_offset, e)).product()
}

/// Frequency shift of the peak for a temperature change.
pub fn temperature_to_frequency(dt_k: f64, e: &EtalonParams) -> f64 {
    dt_k * e.fsr_hz / e.temp_per_fsr_k
}

/// Power extinction `-10·log10 |t|²` at `f_offset`, dB.
pub fn extinction_db(f_offset: f64, s: &EtalonStack) -> f64 {
    -10.0 * stack_transmission(f_offset, s).norm_sqr().log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageDiagnostics {
    pub fwhm_hz: f64,
    pub finesse: f64,
    pub ringdown_s: f64,
    /// Power transmission at the probed offset, dB (negative).
    pub leak_db: f64,
}

/// Per-stage figures, with the leak evaluated at `probe_offset` (typically
/// the carrier as seen from the selected sideband).
pub fn diagnostics(s: &EtalonStack, probe_offset: f64) -> Vec<StageDiagnostics> {
    s.stages
        .iter()
        .map(|e| StageDiagnostics {
            fwhm_hz: e.fwhm_hz(),
            finesse: e.finesse(),
            ringdown_s: e.ringdown_s(),
            leak_db: 10.0 * airy_transmission(probe_offset, e).norm_sqr().log10(),
        })
        .collect()
}

/// Fraction of spectral energy farther than FSR/2 from the stack's mean
/// transmission peak.
pub fn spectral_leakage(w: &Waveform, s: &EtalonStack) -> Result<f64> {
    let n = s.len() as f64;
    let center = s.stages.iter().map(|e| e.detuning_hz).sum::<f64>() / n;
    let half = s.stages.iter().map(|e| e.fsr_hz).fold(f64::INFINITY, f64::min) / 2.0;
    let spec = to_spectrum(w)?;
    let total = spec.norm_sqr();
    if total == 0.0 {
        return Ok(0.0);
    }
    let outside: f64 = spec
        .frequencies()
        .zip(&spec.amplitudes)
        .filter(|(f, _)| (f - center).abs() > half)
        .map(|(_, a)| a.norm_sqr())
        .sum();
    Ok(outside / total)
}

/// Applies the stack to a waveform expressed relative to the selected
/// frequency. Warns when the input reaches past the neighboring orders.
pub fn filter_pulse(w: &Waveform, s: &EtalonStack) -> Result<Waveform> {
    let leak = spectral_leakage(w, s)?;
    if leak > LEAKAGE_WARN_FRACTION {
        log::warn!(
            "{:.2}% of the pulse energy lies beyond FSR/2 of the etalon peak",
            100.0 * leak
        );
    }
    apply_transfer(w, |f| stack_transmission(f, s))
}

/// Filters a field whose frame sits `f_select` below the passband center and
/// returns the transmitted light in the frame of `f_select`.
pub fn select_frequency(field: &Waveform, f_select: f64, s: &EtalonStack) -> Result<Waveform> {
    let out = apply_transfer(field, |f| stack_transmission(f - f_select, s))?;
    Ok(out.shift_frequency(f_select))
}
