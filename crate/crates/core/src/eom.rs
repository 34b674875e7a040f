//! Electro-optic phase modulation and sideband decomposition.
//!
//! A drive voltage `V(t)` imprints the phase `π V(t) / V_π` on a unit cw
//! carrier. For a tone of amplitude `V_RF` the field splits into orders
//! `k·f_S` with amplitudes `J_k(π V_RF / V_π)` (Jacobi-Anger), so the first
//! sideband follows the drive only approximately linearly.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::waveform::{apply_transfer, Unit, Waveform};

/// Bessel functions of the first kind by Miller's backward recurrence,
/// normalized with `J_0 + 2 Σ J_2k = 1`.
pub mod bessel {
    /// `J_0(x) ..= J_nmax(x)`.
    pub fn bessel_j_all(nmax: usize, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; nmax + 1];
        if x == 0.0 {
            out[0] = 1.0;
            return out;
        }
        let ax = x.abs();
        // start well above both the order and the argument
        let top = nmax.max(ax as usize);
        let mut m = top + 20 + (40.0 * (top as f64 + 1.0)).sqrt() as usize;
        m += m % 2;
        let mut next = 0.0; // J_{k+1}
        let mut cur = 1e-300; // J_k
        let mut norm = 0.0;
        for k in (1..=m).rev() {
            let prev = 2.0 * k as f64 / ax * cur - next; // J_{k-1}
            next = cur;
            cur = prev;
            if k - 1 <= nmax {
                out[k - 1] = cur;
            }
            if (k - 1) % 2 == 0 && k - 1 > 0 {
                norm += 2.0 * cur;
            }
            if cur.abs() > 1e250 {
                cur *= 1e-250;
                next *= 1e-250;
                norm *= 1e-250;
                for v in out.iter_mut() {
                    *v *= 1e-250;
                }
            }
        }
        norm += cur;
        for v in out.iter_mut() {
            *v /= norm;
        }
        if x < 0.0 {
            for (k, v) in out.iter_mut().enumerate() {
                if k % 2 == 1 {
                    *v = -*v;
                }
            }
        }
        out
    }

    /// `J_n(x)` for any integer order.
    pub fn bessel_j(n: i32, x: f64) -> f64 {
        let k = n.unsigned_abs() as usize;
        let v = bessel_j_all(k, x)[k];
        if n < 0 && k % 2 == 1 {
            -v
        } else {
            v
        }
    }
}

pub use bessel::{bessel_j, bessel_j_all};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulatorParams {
    /// Half-wave voltage, V.
    pub v_pi: f64,
    pub bandwidth_hz: f64,
    /// Modulator volts per volt of electrical drive waveform.
    pub drive_scale: f64,
    /// Apply a one-pole roll-off at `bandwidth_hz` to the drive.
    pub rolloff: bool,
}

impl Default for ModulatorParams {
    fn default() -> Self {
        Self {
            v_pi: 1.7,
            bandwidth_hz: 20e9,
            drive_scale: 1.0,
            rolloff: false,
        }
    }
}

impl ModulatorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_pi.is_finite() && self.v_pi > 0.0) {
            return Err(Error::invalid(format!("eom.v_pi must be positive, got {}", self.v_pi)));
        }
        if !(self.bandwidth_hz > 0.0) {
            return Err(Error::invalid("eom.bandwidth must be positive"));
        }
        if !(self.drive_scale.is_finite() && self.drive_scale > 0.0) {
            return Err(Error::invalid("eom.drive_scale must be positive"));
        }
        Ok(())
    }
}

/// Carrier `k = 0` sits at offset zero; order `k` at `k·f_s_hz`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SidebandInfo {
    pub f_s_hz: f64,
}

/// Optical field envelope relative to the laser carrier.
#[derive(Debug, Clone, PartialEq)]
pub struct OpticalField {
    /// Optical carrier frequency, bookkeeping only.
    pub carrier_hz: f64,
    pub envelope: Waveform,
    pub sidebands: Option<SidebandInfo>,
}

/// Pure phase modulation of a unit-power carrier.
pub fn phase_modulate(drive: &Waveform, m: &ModulatorParams) -> Result<OpticalField> {
    m.validate()?;
    if !drive.is_real() {
        return Err(Error::invalid("modulator drive must be real-valued"));
    }
    let bound = 5.0 * m.v_pi;
    if let Some((i, z)) = drive
        .samples()
        .iter()
        .enumerate()
        .find(|(_, z)| (z.re * m.drive_scale).abs() >= bound)
    {
        return Err(Error::invalid(format!(
            "drive {:e} V at t = {:e} s exceeds 5·V_π",
            z.re * m.drive_scale,
            drive.grid().time(i)
        )));
    }
    let drive = if m.rolloff {
        let fc = m.bandwidth_hz;
        let lp = apply_transfer(drive, |f| Complex64::new(1.0, 0.0) / Complex64::new(1.0, f / fc))?;
        lp.map(|_, z| Complex64::new(z.re, 0.0))
    } else {
        drive.clone()
    };
    let k = PI * m.drive_scale / m.v_pi;
    let envelope = drive
        .map(|_, z| Complex64::from_polar(1.0, k * z.re))
        .with_unit(Unit::SqrtWatts);
    Ok(OpticalField {
        carrier_hz: 0.0,
        envelope,
        sidebands: None,
    })
}

/// First-sideband amplitude `J_1(π x)` with `x = V_RF / V_π`.
pub fn sideband_amplitude(v_rf_over_v_pi: f64) -> f64 {
    bessel_j(1, PI * v_rf_over_v_pi)
}

/// Relative deviation of the first sideband from its small-signal slope:
/// `1 - 2 J_1(πx) / (πx)`.
pub fn distortion_fraction(v_rf_over_v_pi: f64) -> f64 {
    let z = PI * v_rf_over_v_pi;
    if z.abs() < 1e-4 {
        // series: z²/8 - z⁴/192
        let z2 = z * z;
        return z2 / 8.0 - z2 * z2 / 192.0;
    }
    1.0 - 2.0 * bessel_j(1, z) / z
}

#[derive(Debug, Clone, PartialEq)]
pub struct SidebandOrder {
    pub order: i32,
    /// Slowly varying amplitude of this order in its own frame.
    pub envelope: Waveform,
}

/// Splits the field into orders `-n..=n` by band-limited demodulation at `k·f_s`.
///
/// Each order takes the spectral band `[k f_s - f_s/2, k f_s + f_s/2)` and is
/// shifted to zero offset, so `Σ_k order_k(t) exp(i 2π k f_s t)` reproduces
/// everything within `±(n + 1/2) f_s`.
pub fn decompose_sidebands(field: &OpticalField, f_s: f64, n_orders: i32) -> Result<Vec<SidebandOrder>> {
    if n_orders < 1 {
        return Err(Error::invalid(format!("n_orders must be >= 1, got {n_orders}")));
    }
    if !(f_s > 0.0) {
        return Err(Error::invalid("sideband spacing must be positive"));
    }
    let nyq = field.envelope.grid().nyquist();
    if f_s * n_orders as f64 >= nyq {
        return Err(Error::invalid(format!(
            "order {n_orders} at {:e} Hz is beyond the grid Nyquist frequency {nyq:e} Hz",
            f_s * n_orders as f64
        )));
    }
    (-n_orders..=n_orders)
        .map(|k| {
            let lo = (k as f64 - 0.5) * f_s;
            let hi = (k as f64 + 0.5) * f_s;
            let band = apply_transfer(&field.envelope, |f| {
                if f >= lo && f < hi {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })?;
            Ok(SidebandOrder {
                order: k,
                envelope: band.shift_frequency(k as f64 * f_s),
            })
        })
        .collect()
}

/// Inverse of [`decompose_sidebands`].
pub fn recombine_sidebands(orders: &[SidebandOrder], f_s: f64) -> Result<Waveform> {
    let first = orders
        .first()
        .ok_or_else(|| Error::invalid("no sideband orders given"))?;
    let mut acc = Waveform::zeros(*first.envelope.grid(), Unit::SqrtWatts);
    for o in orders {
        let shifted = o.envelope.shift_frequency(-(o.order as f64) * f_s);
        acc = acc.linear_combination(Complex64::new(1.0, 0.0), &shifted, Complex64::new(1.0, 0.0))?;
    }
    Ok(acc)
}
