//! Behavioral model of the exponential pulse shaper.
//!
//! A constant current `(V_in - V_drop) / R11` charges `C1`, so the base-emitter
//! voltage of the output transistor ramps linearly while the gate is active.
//! The Shockley law turns that ramp into an exponentially rising collector
//! current with time constant `R11·C1·V_T / (V_in - V_drop)`. When the gate
//! returns to its passive level the current is steered away from the load
//! (output drops to zero within one sample) and `C1` discharges slowly.
//!
//! The routing and reset transistors are not simulated at device level: the
//! output switch is ideal and the discharge is a single exponential.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::waveform::{TimeGrid, Unit, Waveform};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    /// Reverse saturation current, A.
    pub i0: f64,
    /// Thermal voltage kT/e, V.
    pub v_thermal: f64,
    /// Ramp capacitor, F.
    pub c1: f64,
    /// Current-source resistor, Ω.
    pub r11: f64,
    /// Analog control input, V.
    pub v_in: f64,
    /// Emitter junction drop of the current source, V.
    pub v_drop: f64,
    /// Collector current at which the output stage stops being linear, A.
    pub i_c_max: f64,
    pub v_out_max: f64,
    /// Discharge time constant of C1 after the gate releases, s.
    pub discharge_tau: f64,
    /// Load converting collector current to output voltage, Ω.
    pub load_ohms: f64,
}

impl Default for CircuitParams {
    /// 27 ns rise time with a 1 kΩ source resistor and 3.9 nF ramp capacitor.
    fn default() -> Self {
        let base = Self {
            i0: 1e-14,
            v_thermal: 0.026,
            c1: 3.9e-9,
            r11: 1000.0,
            v_in: 0.0,
            v_drop: 0.7,
            i_c_max: 0.040,
            v_out_max: 2.0,
            discharge_tau: 200e-9,
            load_ohms: 50.0,
        };
        base.with_tau(27e-9).expect("default circuit is valid")
    }
}

impl CircuitParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("i0", self.i0),
            ("v_thermal", self.v_thermal),
            ("c1", self.c1),
            ("r11", self.r11),
            ("v_in", self.v_in),
            ("v_drop", self.v_drop),
            ("i_c_max", self.i_c_max),
            ("v_out_max", self.v_out_max),
            ("discharge_tau", self.discharge_tau),
            ("load_ohms", self.load_ohms),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("circuit.{name} must be positive, got {v}")));
            }
        }
        if !(0.020..=0.035).contains(&self.v_thermal) {
            return Err(Error::invalid(format!(
                "circuit.v_thermal = {} V is outside the plausible 20..35 mV band",
                self.v_thermal
            )));
        }
        if self.v_in <= self.v_drop {
            return Err(Error::invalid(format!(
                "circuit.v_in = {} V must exceed v_drop = {} V (no charging current)",
                self.v_in, self.v_drop
            )));
        }
        Ok(())
    }

    /// Returns a copy with `v_in` chosen so that the rise time equals `tau`.
    pub fn with_tau(mut self, tau: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::invalid(format!("rise time must be positive, got {tau}")));
        }
        self.v_in = self.v_drop + self.r11 * self.c1 * self.v_thermal / tau;
        Ok(self)
    }

    /// Charging current from the current source, A.
    pub fn charge_current(&self) -> f64 {
        (self.v_in - self.v_drop) / self.r11
    }

    /// dV_BE/dt while the gate is active, V/s.
    pub fn ramp_slope(&self) -> f64 {
        self.charge_current() / self.c1
    }
}

/// NIM-style gate: active at `active_level` for `duration` starting at `t_on`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GatePulse {
    pub t_on: f64,
    pub duration: f64,
    pub active_level: f64,
    pub passive_level: f64,
}

impl GatePulse {
    pub fn new(t_on: f64, duration: f64) -> Result<Self> {
        let g = Self {
            t_on,
            duration,
            active_level: -1.0,
            passive_level: 0.0,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.t_on.is_finite() {
            return Err(Error::invalid("gate t_on must be finite"));
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::invalid(format!(
                "gate duration must be positive, got {}",
                self.duration
            )));
        }
        Ok(())
    }

    pub fn t_off(&self) -> f64 {
        self.t_on + self.duration
    }

    fn is_active(&self, t: f64, eps: f64) -> bool {
        t >= self.t_on - eps && t <= self.t_off() + eps
    }
}

/// Collector current `I0·(exp(V_BE/V_T) - 1)`, clamped at `i_c_max`.
pub fn shockley_current(v_be: f64, p: &CircuitParams) -> f64 {
    let i = p.i0 * (v_be / p.v_thermal).exp_m1();
    i.min(p.i_c_max)
}

/// Exponential time constant of the output, `R11·C1·V_T / (V_in - V_drop)`.
pub fn tau_from_control_voltage(p: &CircuitParams) -> Result<f64> {
    if p.v_in <= p.v_drop {
        return Err(Error::invalid(format!(
            "control voltage {} V does not exceed the junction drop {} V",
            p.v_in, p.v_drop
        )));
    }
    Ok(p.r11 * p.c1 * p.v_thermal / (p.v_in - p.v_drop))
}

/// Node voltages of the shaper sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitTrace {
    pub gate: Waveform,
    pub v_be: Waveform,
    pub v_out: Waveform,
}

/// Simulates a train of gates. Gates must lie on the grid and not overlap.
///
/// `V_BE` starts discharged. A gate that arrives before `C1` has fully
/// discharged starts its ramp from the residual voltage.
pub fn simulate_circuit(p: &CircuitParams, gates: &[GatePulse], grid: &TimeGrid) -> Result<CircuitTrace> {
    p.validate()?;
    let mut gates = gates.to_vec();
    gates.sort_by(|a, b| a.t_on.total_cmp(&b.t_on));
    for g in &gates {
        g.validate()?;
        if !grid.contains(g.t_on) || !grid.contains(g.t_off()) {
            return Err(Error::invalid(format!(
                "gate [{:e}, {:e}] s lies outside the grid [{:e}, {:e}] s",
                g.t_on,
                g.t_off(),
                grid.t_start(),
                grid.t_end()
            )));
        }
    }
    if let Some(w) = gates.windows(2).find(|w| w[1].t_on <= w[0].t_off()) {
        return Err(Error::invalid(format!(
            "gates starting at {:e} s and {:e} s overlap",
            w[0].t_on, w[1].t_on
        )));
    }

    let eps = 1e-9 * grid.dt();
    let slope = p.ramp_slope();
    let n = grid.len();
    let mut gate_v = vec![0.0; n];
    let mut v_be = vec![0.0; n];
    let mut v_out = vec![0.0; n];

    // V_BE at the most recent release and when it happened
    let mut released_at = f64::NEG_INFINITY;
    let mut released_v = 0.0;
    let mut next = 0usize;
    let mut active: Option<(GatePulse, f64)> = None;

    for i in 0..n {
        let t = grid.time(i);
        if let Some((g, _)) = active {
            if !g.is_active(t, eps) {
                released_v = v_be_during(&active, g.t_off(), slope);
                released_at = g.t_off();
                active = None;
            }
        }
        if active.is_none() && next < gates.len() && gates[next].is_active(t, eps) {
            let g = gates[next];
            let start = decayed(released_v, g.t_on - released_at, p.discharge_tau);
            active = Some((g, start));
            next += 1;
        }
        match active {
            Some((g, _)) => {
                let v = v_be_during(&active, t.max(g.t_on), slope);
                v_be[i] = v;
                gate_v[i] = g.active_level;
                let current = shockley_current(v, p);
                v_out[i] = (p.load_ohms * current).clamp(0.0, p.v_out_max);
            }
            None => {
                v_be[i] = decayed(released_v, t - released_at, p.discharge_tau);
                gate_v[i] = gates.first().map_or(0.0, |g| g.passive_level);
            }
        }
    }

    Ok(CircuitTrace {
        gate: Waveform::from_real(*grid, &gate_v, Unit::Volts)?,
        v_be: Waveform::from_real(*grid, &v_be, Unit::Volts)?,
        v_out: Waveform::from_real(*grid, &v_out, Unit::Volts)?,
    })
}

fn v_be_during(active: &Option<(GatePulse, f64)>, t: f64, slope: f64) -> f64 {
    match active {
        Some((g, start)) => start + slope * (t - g.t_on),
        None => 0.0,
    }
}

fn decayed(v: f64, elapsed: f64, tau: f64) -> f64 {
    if v == 0.0 || !elapsed.is_finite() {
        0.0
    } else {
        v * (-elapsed.max(0.0) / tau).exp()
    }
}

/// Output voltage for a single gate.
pub fn generate_envelope(p: &CircuitParams, g: &GatePulse, grid: &TimeGrid) -> Result<Waveform> {
    Ok(simulate_circuit(p, std::slice::from_ref(g), grid)?.v_out)
}
