//! RF carrier synthesis and envelope mixing.
//!
//! A DDS clocked at `f_clk` and tuned to `f_tune` emits the fundamental plus
//! images at `|k·f_clk ± f_tune|`, weighted by the zero-order-hold response
//! `|sinc(f / f_clk)|`. A band-pass filter selects one image, two frequency
//! doublers bring it to the carrier `f_S`, and a double-balanced mixer
//! multiplies the carrier with the envelope.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::waveform::{Unit, Waveform};

/// A spectral line with amplitude relative to the dominant line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tone {
    pub freq_hz: f64,
    pub amplitude: f64,
}

impl Tone {
    /// Level relative to a reference amplitude, dB.
    pub fn dbc(&self, reference: f64) -> f64 {
        20.0 * (self.amplitude / reference).log10()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DdsParams {
    pub f_clk_hz: f64,
    pub f_tune_hz: f64,
    /// Highest clock multiple `k` whose images are modeled.
    pub n_images: usize,
}

impl Default for DdsParams {
    fn default() -> Self {
        Self {
            f_clk_hz: 500e6,
            f_tune_hz: 125e6,
            n_images: 4,
        }
    }
}

impl DdsParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.f_clk_hz.is_finite() && self.f_clk_hz > 0.0) {
            return Err(Error::invalid(format!(
                "dds.f_clk must be positive, got {}",
                self.f_clk_hz
            )));
        }
        if !(self.f_tune_hz > 0.0 && self.f_tune_hz < self.f_clk_hz / 2.0) {
            return Err(Error::invalid(format!(
                "dds.f_tune = {} Hz must lie in (0, f_clk/2)",
                self.f_tune_hz
            )));
        }
        Ok(())
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Fundamental and image tones sorted by frequency, fundamental amplitude 1.
pub fn dds_tones(p: &DdsParams) -> Result<Vec<Tone>> {
    p.validate()?;
    let zoh = |f: f64| sinc(f / p.f_clk_hz).abs();
    let reference = zoh(p.f_tune_hz);
    let mut tones = vec![Tone {
        freq_hz: p.f_tune_hz,
        amplitude: 1.0,
    }];
    for k in 1..=p.n_images {
        let base = k as f64 * p.f_clk_hz;
        for f in [base - p.f_tune_hz, base + p.f_tune_hz] {
            tones.push(Tone {
                freq_hz: f,
                amplitude: zoh(f) / reference,
            });
        }
    }
    tones.sort_by(|a, b| a.freq_hz.total_cmp(&b.freq_hz));
    Ok(tones)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RejectionPoint {
    pub freq_hz: f64,
    pub suppression_db: f64,
}

/// Magnitude specification of the image-selecting band-pass filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandpassSpec {
    pub f_center_hz: f64,
    pub rejection: Vec<RejectionPoint>,
    pub passband_loss_db: f64,
}

impl Default for BandpassSpec {
    fn default() -> Self {
        let pt = |mhz: f64, db: f64| RejectionPoint {
            freq_hz: mhz * 1e6,
            suppression_db: db,
        };
        Self {
            f_center_hz: 375e6,
            rejection: vec![pt(125.0, 70.0), pt(500.0, 24.0), pt(625.0, 35.0)],
            passband_loss_db: 0.0,
        }
    }
}

impl BandpassSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.f_center_hz > 0.0) {
            return Err(Error::invalid("bandpass.f_center must be positive"));
        }
        for r in &self.rejection {
            if !(r.freq_hz > 0.0) || !(r.suppression_db >= 0.0) {
                return Err(Error::invalid(format!(
                    "bandpass rejection point ({} Hz, {} dB) must have positive frequency and suppression >= 0 dB",
                    r.freq_hz, r.suppression_db
                )));
            }
            if r.freq_hz == self.f_center_hz {
                return Err(Error::invalid(
                    "bandpass rejection point coincides with the center frequency",
                ));
            }
        }
        if !(self.passband_loss_db >= 0.0) {
            return Err(Error::invalid("bandpass.passband_loss must be >= 0 dB"));
        }
        Ok(())
    }

    /// Suppression relative to the passband, dB. Linear in log-frequency
    /// between the specified points, held constant beyond the outermost ones.
    pub fn suppression_db(&self, f: f64) -> f64 {
        let mut pts: Vec<(f64, f64)> = self
            .rejection
            .iter()
            .map(|r| (r.freq_hz, r.suppression_db))
            .chain(std::iter::once((self.f_center_hz, 0.0)))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let first = pts[0];
        let last = pts[pts.len() - 1];
        if f <= first.0 {
            return first.1;
        }
        if f >= last.0 {
            return last.1;
        }
        let k = pts.partition_point(|p| p.0 <= f);
        let (f0, s0) = pts[k - 1];
        let (f1, s1) = pts[k];
        let x = (f.ln() - f0.ln()) / (f1.ln() - f0.ln());
        s0 + x * (s1 - s0)
    }
}

pub fn apply_bandpass(tones: &[Tone], spec: &BandpassSpec) -> Vec<Tone> {
    tones
        .iter()
        .map(|t| Tone {
            freq_hz: t.freq_hz,
            amplitude: t.amplitude * 10f64.powf(-(spec.suppression_db(t.freq_hz) + spec.passband_loss_db) / 20.0),
        })
        .collect()
}

/// Frequency doubler stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Doubler {
    /// Worsening of every spur's dBc ratio per stage, dB.
    pub spur_degradation_db: f64,
    /// Feedthrough of the input fundamental, dBc; `None` for none.
    pub harmonic_floor_dbc: Option<f64>,
}

impl Default for Doubler {
    fn default() -> Self {
        Self {
            spur_degradation_db: 0.0,
            harmonic_floor_dbc: None,
        }
    }
}

fn dominant(tones: &[Tone]) -> Option<Tone> {
    tones.iter().copied().max_by(|a, b| a.amplitude.total_cmp(&b.amplitude))
}

/// One doubling: every tone maps to `2f`; the dominant output is renormalized
/// to amplitude 1 (the amplifier operating point).
pub fn frequency_double(tones: &[Tone], d: &Doubler) -> Vec<Tone> {
    let Some(main) = dominant(tones) else {
        return Vec::new();
    };
    let degrade = 10f64.powf(d.spur_degradation_db / 20.0);
    let mut out: Vec<Tone> = tones
        .iter()
        .map(|t| {
            let rel = t.amplitude / main.amplitude;
            Tone {
                freq_hz: 2.0 * t.freq_hz,
                amplitude: if t.freq_hz == main.freq_hz { 1.0 } else { rel * degrade },
            }
        })
        .collect();
    if let Some(floor) = d.harmonic_floor_dbc {
        out.push(Tone {
            freq_hz: main.freq_hz,
            amplitude: 10f64.powf(floor / 20.0),
        });
    }
    merge(out)
}

pub fn frequency_quadruple(tones: &[Tone], d: &Doubler) -> Vec<Tone> {
    frequency_double(&frequency_double(tones, d), d)
}

fn merge(mut tones: Vec<Tone>) -> Vec<Tone> {
    tones.sort_by(|a, b| a.freq_hz.total_cmp(&b.freq_hz));
    let mut out: Vec<Tone> = Vec::with_capacity(tones.len());
    for t in tones {
        match out.last_mut() {
            Some(last) if last.freq_hz == t.freq_hz => last.amplitude += t.amplitude,
            _ => out.push(t),
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixerParams {
    pub conversion_gain: f64,
    /// LO feedthrough relative to the full-scale output, dB (`-inf` for ideal).
    pub lo_leak_db: f64,
    /// IF (envelope) feedthrough, dB (`-inf` for ideal).
    pub if_leak_db: f64,
}

impl Default for MixerParams {
    fn default() -> Self {
        Self {
            conversion_gain: 1.0,
            lo_leak_db: -40.0,
            if_leak_db: -40.0,
        }
    }
}

impl MixerParams {
    pub fn ideal(conversion_gain: f64) -> Self {
        Self {
            conversion_gain,
            lo_leak_db: f64::NEG_INFINITY,
            if_leak_db: f64::NEG_INFINITY,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.conversion_gain.is_finite() && self.conversion_gain > 0.0) {
            return Err(Error::invalid("mixer.conversion_gain must be positive"));
        }
        for (name, v) in [("lo_leak_db", self.lo_leak_db), ("if_leak_db", self.if_leak_db)] {
            if !(v <= 0.0) {
                return Err(Error::invalid(format!("mixer.{name} must be <= 0 dB, got {v}")));
            }
        }
        Ok(())
    }
}

fn db_to_amplitude(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

/// Mixes a real envelope onto a single carrier at `f_s`.
pub fn mix_envelope(envelope: &Waveform, f_s: f64, m: &MixerParams) -> Result<Waveform> {
    mix_envelope_with_lo(
        envelope,
        &[Tone {
            freq_hz: f_s,
            amplitude: 1.0,
        }],
        m,
    )
}

/// Mixes onto a local oscillator made of several tones; the strongest tone is
/// the carrier. Tones above the grid's Nyquist frequency are dropped.
///
/// `out = g·e(t)·LO(t) + g·lo_leak·LO(t) + if_leak·e(t)`.
pub fn mix_envelope_with_lo(envelope: &Waveform, lo: &[Tone], m: &MixerParams) -> Result<Waveform> {
    m.validate()?;
    if !envelope.is_real() {
        return Err(Error::invalid("mixer IF envelope must be real-valued"));
    }
    let carrier = dominant(lo).ok_or_else(|| Error::invalid("local oscillator has no tones"))?;
    let grid = *envelope.grid();
    let samples_per_cycle = 1.0 / (carrier.freq_hz * grid.dt());
    if !(samples_per_cycle >= 4.0) {
        return Err(Error::invalid(format!(
            "grid dt = {:e} s gives {samples_per_cycle:.2} samples per carrier cycle at {:e} Hz, need >= 4",
            grid.dt(),
            carrier.freq_hz
        )));
    }
    let nyq = grid.nyquist();
    let lo: Vec<Tone> = lo
        .iter()
        .copied()
        .filter(|t| {
            let keep = t.freq_hz < nyq;
            if !keep {
                log::warn!(
                    "LO tone at {:e} Hz is above Nyquist ({nyq:e} Hz) and is dropped",
                    t.freq_hz
                );
            }
            keep
        })
        .collect();
    let g = m.conversion_gain;
    let lo_leak = db_to_amplitude(m.lo_leak_db);
    let if_leak = db_to_amplitude(m.if_leak_db);
    let out = envelope.map(|t, e| {
        let osc: f64 = lo
            .iter()
            .map(|tone| tone.amplitude / carrier.amplitude * (2.0 * PI * tone.freq_hz * t).cos())
            .sum();
        Complex64::new(g * e.re * osc + g * lo_leak * osc + if_leak * e.re, 0.0)
    });
    Ok(out.with_unit(Unit::Volts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::{analytic_signal, fit_exponential, Direction, TimeGrid};

    #[test]
    fn dds_image_frequencies_and_weights() {
        let tones = dds_tones(&DdsParams::default()).unwrap();
        let freqs: Vec<f64> = tones.iter().map(|t| t.freq_hz / 1e6).collect();
        assert_eq!(
            freqs,
            vec![125.0, 375.0, 625.0, 875.0, 1125.0, 1375.0, 1625.0, 1875.0, 2125.0]
        );
        // zero-order hold: sinc(0.75)/sinc(0.25) = 1/3
        let r = tones[1].amplitude;
        let expected = ((0.75 * PI).sin() / (0.75 * PI)) / ((0.25 * PI).sin() / (0.25 * PI));
        assert!((r - expected).abs() < 1e-15);
        assert!((r - 1.0 / 3.0).abs() < 1e-12);
        assert!(tones.windows(2).all(|w| w[1].amplitude < w[0].amplitude));
        assert!(dds_tones(&DdsParams {
            f_tune_hz: 300e6,
            ..Default::default()
        })
        .is_err());
    }

    #[test]
    fn bandpass_points() {
        let spec = BandpassSpec::default();
        let tones = [125e6, 375e6, 500e6, 625e6].map(|f| Tone {
            freq_hz: f,
            amplitude: 1.0,
        });
        let out = apply_bandpass(&tones, &spec);
        assert!((out[0].amplitude - 10f64.powf(-70.0 / 20.0)).abs() < 1e-18);
        assert_eq!(out[1].amplitude, 1.0);
        assert!((out[2].amplitude - 10f64.powf(-24.0 / 20.0)).abs() < 1e-15);
        assert!((out[3].amplitude - 10f64.powf(-35.0 / 20.0)).abs() < 1e-15);
        // log-frequency interpolation between 375 and 500 MHz
        let mid = (375e6f64 * 500e6).sqrt();
        assert!((spec.suppression_db(mid) - 12.0).abs() < 1e-9);
        assert_eq!(spec.suppression_db(50e6), 70.0);
        assert_eq!(spec.suppression_db(3e9), 35.0);
    }

    #[test]
    fn quadrupling() {
        let d = Doubler::default();
        let out = frequency_quadruple(
            &[Tone {
                freq_hz: 375e6,
                amplitude: 0.3,
            }],
            &d,
        );
        assert_eq!(
            out,
            vec![Tone {
                freq_hz: 1.5e9,
                amplitude: 1.0
            }]
        );
        let one = frequency_double(
            &[
                Tone {
                    freq_hz: 375e6,
                    amplitude: 1.0,
                },
                Tone {
                    freq_hz: 625e6,
                    amplitude: 0.01,
                },
            ],
            &d,
        );
        assert_eq!(one[1].freq_hz, 1.25e9);
        assert_eq!(frequency_double(&one, &d)[1].freq_hz, 2.5e9);
        for f in [1e6, 37.5e6, 411e6] {
            let q = frequency_quadruple(
                &[Tone {
                    freq_hz: f,
                    amplitude: 1.0,
                }],
                &d,
            );
            assert_eq!(q[0].freq_hz, 4.0 * f);
        }
        let worse = Doubler {
            spur_degradation_db: 6.0,
            harmonic_floor_dbc: Some(-30.0),
        };
        let out = frequency_double(
            &[
                Tone {
                    freq_hz: 375e6,
                    amplitude: 1.0,
                },
                Tone {
                    freq_hz: 625e6,
                    amplitude: 0.01,
                },
            ],
            &worse,
        );
        assert_eq!(out.len(), 3);
        assert!((out[2].dbc(1.0) - (-40.0 + 6.0)).abs() < 1e-9);
        assert!((out[0].dbc(1.0) + 30.0).abs() < 1e-9);
    }

    #[test]
    fn mixer_zero_and_constant() {
        let g = TimeGrid::new(0.0, 0.1e-9, 2000).unwrap();
        let zero = Waveform::zeros(g, Unit::Volts);
        let out = mix_envelope(&zero, 1.5e9, &MixerParams::ideal(1.0)).unwrap();
        assert!(out.samples().iter().all(|z| z.norm() == 0.0));

        let flat = Waveform::from_real(g, &vec![0.5; 2000], Unit::Volts).unwrap();
        let out = mix_envelope(&flat, 1.5e9, &MixerParams::ideal(2.0)).unwrap();
        for (i, z) in out.samples().iter().enumerate() {
            let expect = 1.0 * (2.0 * PI * 1.5e9 * g.time(i)).cos();
            assert!((z.re - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn mixer_rejects_coarse_grid_and_complex_input() {
        let g = TimeGrid::new(0.0, 0.2e-9, 100).unwrap();
        let flat = Waveform::from_real(g, &vec![1.0; 100], Unit::Volts).unwrap();
        assert!(mix_envelope(&flat, 1.5e9, &MixerParams::default()).is_err());
        let cplx = flat.scale(Complex64::new(0.0, 1.0));
        assert!(mix_envelope(&cplx, 0.5e9, &MixerParams::default()).is_err());
    }

    #[test]
    fn modulated_burst_keeps_time_constant() {
        let g = TimeGrid::new(0.0, 0.1e-9, 4000).unwrap();
        let (t_on, t_off, tau) = (100e-9, 180e-9, 17.4e-9);
        let env = Waveform::from_real_fn(g, Unit::Volts, |t| {
            if t >= t_on && t <= t_off {
                ((t - t_off) / tau).exp()
            } else {
                0.0
            }
        })
        .unwrap();
        let rf = mix_envelope(&env, 1.5e9, &MixerParams::ideal(1.0)).unwrap();
        let a = analytic_signal(&rf).unwrap();
        let f = fit_exponential(&a, (t_off - 40e-9, t_off - 3e-9), Direction::Rising).unwrap();
        assert!((f.tau - tau).abs() / tau < 0.02, "tau {}", f.tau);
    }
}
