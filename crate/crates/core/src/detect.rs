//! Square-law photodiode followed by an oscilloscope front end.
//!
//! Both are single-pole low-passes. An infinite bandwidth is a pass-through.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::waveform::{apply_transfer, Unit, Waveform};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorParams {
    pub bandwidth_hz: f64,
    pub scope_bandwidth_hz: f64,
    /// Output units per unit optical power.
    pub responsivity: f64,
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self {
            bandwidth_hz: 1e9,
            scope_bandwidth_hz: 2e9,
            responsivity: 1.0,
        }
    }
}

impl DetectorParams {
    /// Infinite bandwidths: output is exactly `responsivity·|E|²`.
    pub fn ideal() -> Self {
        Self {
            bandwidth_hz: f64::INFINITY,
            scope_bandwidth_hz: f64::INFINITY,
            responsivity: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("bandwidth", self.bandwidth_hz),
            ("scope_bandwidth", self.scope_bandwidth_hz),
        ] {
            if !(v > 0.0) {
                return Err(Error::invalid(format!("detector.{name} must be positive, got {v}")));
            }
        }
        if !(self.responsivity.is_finite() && self.responsivity > 0.0) {
            return Err(Error::invalid(format!(
                "detector.responsivity must be positive, got {}",
                self.responsivity
            )));
        }
        Ok(())
    }

    /// Combined response of diode and scope.
    pub fn transfer(&self, f: f64) -> Complex64 {
        let pole = |fc: f64| {
            if fc.is_infinite() {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(1.0, 0.0) / Complex64::new(1.0, f / fc)
            }
        };
        pole(self.bandwidth_hz) * pole(self.scope_bandwidth_hz)
    }
}

/// Detected power trace.
pub fn detect(field: &Waveform, d: &DetectorParams) -> Result<Waveform> {
    d.validate()?;
    let power = field.map(|_, z| Complex64::new(d.responsivity * z.norm_sqr(), 0.0));
    let out = if d.bandwidth_hz.is_infinite() && d.scope_bandwidth_hz.is_infinite() {
        power
    } else {
        let smoothed = apply_transfer(&power, |f| d.transfer(f))?;
        smoothed.map(|_, z| Complex64::new(z.re, 0.0))
    };
    Ok(out.with_unit(Unit::Watts))
}

/// Largest negative excursion relative to the peak, 0 if the trace stays
/// non-negative.
pub fn undershoot_fraction(w: &Waveform) -> f64 {
    let (_, peak) = w.peak();
    if peak == 0.0 {
        return 0.0;
    }
    let min = w.samples().iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    (-min).max(0.0) / peak
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::{fit_exponential, Direction, TimeGrid};

    fn rising(tau: f64, g: TimeGrid, t_off: f64) -> Waveform {
        Waveform::from_real_fn(g, Unit::SqrtWatts, |t| {
            if t < t_off {
                ((t - t_off) / (2.0 * tau)).exp()
            } else {
                0.0
            }
        })
        .unwrap()
    }

    #[test]
    fn power_constant_is_half_the_amplitude_constant() {
        let g = TimeGrid::new(0.0, 0.05e-9, 6000).unwrap();
        for tau in [10e-9, 17.4e-9, 27e-9, 54e-9] {
            // amplitude constant `2·tau`
            let field = Waveform::from_real_fn(g, Unit::SqrtWatts, |t| (t / (2.0 * tau)).exp()).unwrap();
            let amp = fit_exponential(&field, (20e-9, 280e-9), Direction::Rising).unwrap();
            let pow = fit_exponential(
                &detect(&field, &DetectorParams::ideal()).unwrap(),
                (20e-9, 280e-9),
                Direction::Rising,
            )
            .unwrap();
            assert!((pow.tau - amp.tau / 2.0).abs() / pow.tau < 0.005);
            assert!((pow.tau - tau).abs() / tau < 0.01);
        }
    }

    #[test]
    fn constant_field() {
        let g = TimeGrid::new(0.0, 0.1e-9, 256).unwrap();
        let field = Waveform::from_fn(g, Unit::SqrtWatts, |_| Complex64::new(0.6, -0.8) * 2.0).unwrap();
        let d = DetectorParams {
            responsivity: 0.5,
            ..Default::default()
        };
        let out = detect(&field, &d).unwrap();
        assert!(out.samples().iter().all(|z| (z.re - 2.0).abs() < 1e-12 && z.im == 0.0));
        assert_eq!(out.unit(), Unit::Watts);
    }

    #[test]
    fn global_phase_is_invisible() {
        let g = TimeGrid::new(0.0, 0.05e-9, 4000).unwrap();
        let w = rising(10e-9, g, 150e-9);
        let d = DetectorParams::default();
        let base = detect(&w, &d).unwrap();
        let quarter = detect(&w.scale(Complex64::new(0.0, 1.0)), &d).unwrap();
        assert_eq!(base, quarter);
        let turned = detect(&w.scale(Complex64::from_polar(1.0, 0.7)), &d).unwrap();
        for (a, b) in turned.samples().iter().zip(base.samples()) {
            assert!((a - b).norm() <= 1e-15 * base.peak().1);
        }
    }

    #[test]
    fn energy_scales_quadratically() {
        let g = TimeGrid::new(0.0, 0.05e-9, 4000).unwrap();
        let w = rising(10e-9, g, 150e-9);
        let d = DetectorParams::default();
        let e1 = detect(&w, &d).unwrap().norm_sqr().sqrt();
        let e3 = detect(&w.scale(Complex64::new(3.0, 0.0)), &d)
            .unwrap()
            .norm_sqr()
            .sqrt();
        assert!((e3 / e1 - 9.0).abs() < 1e-12);
    }

    #[test]
    fn finite_bandwidth_smooths_the_cutoff() {
        let g = TimeGrid::new(0.0, 0.05e-9, 4000).unwrap();
        let w = rising(10e-9, g, 150e-9);
        let fast = detect(&w, &DetectorParams::ideal()).unwrap();
        let slow = detect(&w, &DetectorParams::default()).unwrap();
        let i = g.nearest_index(150.1e-9);
        assert_eq!(fast.samples()[i].re, 0.0);
        assert!(slow.samples()[i].re > 0.3 * slow.peak().1);
        assert!(undershoot_fraction(&slow) <= 0.01);
        let rise = fit_exponential(&slow, (110e-9, 148e-9), Direction::Rising).unwrap();
        assert!((rise.tau - 10e-9).abs() / 10e-9 < 0.02);
    }

    #[test]
    fn rejects_bad_bandwidth() {
        let g = TimeGrid::new(0.0, 0.1e-9, 16).unwrap();
        let w = Waveform::zeros(g, Unit::SqrtWatts);
        for bw in [0.0, -1.0, f64::NAN] {
            let d = DetectorParams {
                bandwidth_hz: bw,
                ..Default::default()
            };
            assert!(detect(&w, &d).is_err());
        }
    }
}
