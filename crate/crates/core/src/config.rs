//! TOML description of a complete chain run.
//!
//! Every key carries its unit in the name (`dt_ns`, `fsr_ghz`, ...). Missing
//! keys take the documented defaults and unknown keys are rejected.
//! [`ChainConfig::to_params`] converts to SI units and validates every
//! section before anything is simulated.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::atom::AtomParams;
use crate::detect::DetectorParams;
use crate::envelope::{CircuitParams, GatePulse};
use crate::eom::ModulatorParams;
use crate::error::{Error, Result};
use crate::etalon::{EtalonParams, EtalonStack};
use crate::rf::{BandpassSpec, DdsParams, Doubler, MixerParams, RejectionPoint};
use crate::waveform::TimeGrid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainConfig {
    pub seed: u64,
    pub grid: GridSection,
    pub circuit: CircuitSection,
    pub dds: DdsSection,
    pub bandpass: BandpassSection,
    pub doubler: DoublerSection,
    pub mixer: MixerSection,
    pub eom: EomSection,
    pub etalon: EtalonSection,
    pub detector: DetectorSection,
    pub atom: AtomSection,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            grid: Default::default(),
            circuit: Default::default(),
            dds: Default::default(),
            bandpass: Default::default(),
            doubler: Default::default(),
            mixer: Default::default(),
            eom: Default::default(),
            etalon: Default::default(),
            detector: Default::default(),
            atom: Default::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub t_start_ns: f64,
    pub dt_ns: f64,
    pub n_samples: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            t_start_ns: 0.0,
            dt_ns: 0.05,
            n_samples: 10000,
        }
    }
}

/// Either `tau_r_ns` or `v_in_volts` sets the control voltage; with neither
/// the rise time is 27 ns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CircuitSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_r_ns: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_in_volts: Option<f64>,
    pub i0_amps: f64,
    pub v_thermal_volts: f64,
    pub c1_nf: f64,
    pub r11_ohms: f64,
    pub v_drop_volts: f64,
    pub i_c_max_ma: f64,
    pub v_out_max_volts: f64,
    pub discharge_tau_ns: f64,
    pub load_ohms: f64,
    pub gate_on_ns: f64,
    pub gate_length_ns: f64,
}

pub const DEFAULT_TAU_R_NS: f64 = 27.0;

impl Default for CircuitSection {
    fn default() -> Self {
        let p = CircuitParams::default();
        Self {
            tau_r_ns: None,
            v_in_volts: None,
            i0_amps: p.i0,
            v_thermal_volts: p.v_thermal,
            c1_nf: p.c1 * 1e9,
            r11_ohms: p.r11,
            v_drop_volts: p.v_drop,
            i_c_max_ma: p.i_c_max * 1e3,
            v_out_max_volts: p.v_out_max,
            discharge_tau_ns: p.discharge_tau * 1e9,
            load_ohms: p.load_ohms,
            gate_on_ns: 200.0,
            gate_length_ns: 150.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DdsSection {
    pub f_clk_mhz: f64,
    pub f_tune_mhz: f64,
    pub n_images: usize,
}

impl Default for DdsSection {
    fn default() -> Self {
        let p = DdsParams::default();
        Self {
            f_clk_mhz: p.f_clk_hz * 1e-6,
            f_tune_mhz: p.f_tune_hz * 1e-6,
            n_images: p.n_images,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RejectionEntry {
    pub freq_mhz: f64,
    pub suppression_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BandpassSection {
    pub f_center_mhz: f64,
    pub passband_loss_db: f64,
    pub rejection: Vec<RejectionEntry>,
}

impl Default for BandpassSection {
    fn default() -> Self {
        let s = BandpassSpec::default();
        Self {
            f_center_mhz: s.f_center_hz * 1e-6,
            passband_loss_db: s.passband_loss_db,
            rejection: s
                .rejection
                .iter()
                .map(|r| RejectionEntry {
                    freq_mhz: r.freq_hz * 1e-6,
                    suppression_db: r.suppression_db,
                })
                .collect(),
        }
    }
}

/// Two cascaded doublers multiply the selected image by four.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct DoublerSection {
    pub spur_degradation_db: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub harmonic_floor_dbc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixerSection {
    pub conversion_gain: f64,
    pub lo_leak_db: f64,
    pub if_leak_db: f64,
    /// The circuit output is attenuated so that its peak reaches this level.
    pub if_peak_volts: f64,
}

impl Default for MixerSection {
    fn default() -> Self {
        let m = MixerParams::default();
        Self {
            conversion_gain: m.conversion_gain,
            lo_leak_db: m.lo_leak_db,
            if_leak_db: m.if_leak_db,
            if_peak_volts: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EomSection {
    pub v_pi_volts: f64,
    /// Modulator volts per volt at the mixer output.
    pub drive_scale: f64,
    pub bandwidth_ghz: f64,
    pub rolloff: bool,
    /// Orders `-n..=n` reported from the sideband decomposition.
    pub n_orders: i32,
}

impl Default for EomSection {
    fn default() -> Self {
        Self {
            v_pi_volts: 1.7,
            drive_scale: 0.17,
            bandwidth_ghz: 20.0,
            rolloff: false,
            n_orders: 3,
        }
    }
}

/// Optional replacement values for one stage, numbered from 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct EtalonOverride {
    pub stage: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reflectivity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fsr_ghz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detuning_mhz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temp_per_fsr_k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temp_jitter_mk: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EtalonSection {
    pub stages: usize,
    pub reflectivity: f64,
    pub fsr_ghz: f64,
    pub detuning_mhz: f64,
    pub loss: f64,
    pub temp_per_fsr_k: f64,
    pub temp_jitter_mk: f64,
    /// Sideband the stack is tuned to.
    pub sideband_order: i32,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub overrides: Vec<EtalonOverride>,
}

impl Default for EtalonSection {
    fn default() -> Self {
        let e = EtalonParams::default();
        Self {
            stages: 3,
            reflectivity: e.reflectivity,
            fsr_ghz: e.fsr_hz * 1e-9,
            detuning_mhz: e.detuning_hz * 1e-6,
            loss: e.loss,
            temp_per_fsr_k: e.temp_per_fsr_k,
            temp_jitter_mk: e.temp_jitter_k * 1e3,
            sideband_order: 1,
            overrides: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorSection {
    /// `inf` for an ideal detector.
    pub bandwidth_ghz: f64,
    pub scope_bandwidth_ghz: f64,
    pub responsivity: f64,
}

impl Default for DetectorSection {
    fn default() -> Self {
        let d = DetectorParams::default();
        Self {
            bandwidth_ghz: d.bandwidth_hz * 1e-9,
            scope_bandwidth_ghz: d.scope_bandwidth_hz * 1e-9,
            responsivity: d.responsivity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AtomSection {
    pub enabled: bool,
    pub lifetime_ns: f64,
    pub lambda_overlap: f64,
    pub detuning_mhz: f64,
}

impl Default for AtomSection {
    fn default() -> Self {
        Self {
            enabled: true,
            lifetime_ns: 26.2,
            lambda_overlap: 1.0,
            detuning_mhz: 0.0,
        }
    }
}

/// A configuration resolved to SI units and validated.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainParams {
    pub seed: u64,
    pub grid: TimeGrid,
    pub circuit: CircuitParams,
    /// `None` for a zero-length gate.
    pub gate: Option<GatePulse>,
    pub gate_on: f64,
    pub dds: DdsParams,
    pub bandpass: BandpassSpec,
    pub doubler: Doubler,
    pub mixer: MixerParams,
    pub if_peak_volts: f64,
    pub modulator: ModulatorParams,
    pub n_orders: i32,
    pub etalons: EtalonStack,
    pub sideband_order: i32,
    pub detector: DetectorParams,
    pub atom: Option<AtomParams>,
}

fn section<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::InvalidInput(msg) => Error::Config(format!("[{name}] {msg}")),
        other => other,
    })
}

impl ChainConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io_at(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Canonical text: fixed section and key order.
    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.to_params().map(|_| ())
    }

    pub fn to_params(&self) -> Result<ChainParams> {
        let g = &self.grid;
        let grid = section("grid", TimeGrid::new(g.t_start_ns * 1e-9, g.dt_ns * 1e-9, g.n_samples))?;

        let c = &self.circuit;
        let mut circuit = CircuitParams {
            i0: c.i0_amps,
            v_thermal: c.v_thermal_volts,
            c1: c.c1_nf * 1e-9,
            r11: c.r11_ohms,
            v_in: 0.0,
            v_drop: c.v_drop_volts,
            i_c_max: c.i_c_max_ma * 1e-3,
            v_out_max: c.v_out_max_volts,
            discharge_tau: c.discharge_tau_ns * 1e-9,
            load_ohms: c.load_ohms,
        };
        circuit = match (c.tau_r_ns, c.v_in_volts) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "[circuit] set either tau_r_ns or v_in_volts, not both".into(),
                ))
            }
            (None, Some(v)) => CircuitParams { v_in: v, ..circuit },
            (tau, None) => section("circuit", circuit.with_tau(tau.unwrap_or(DEFAULT_TAU_R_NS) * 1e-9))?,
        };
        section("circuit", circuit.validate())?;
        if !(c.gate_length_ns >= 0.0) {
            return Err(Error::Config(format!(
                "[circuit] gate_length_ns must be >= 0, got {}",
                c.gate_length_ns
            )));
        }
        let gate_on = c.gate_on_ns * 1e-9;
        let gate = if c.gate_length_ns == 0.0 {
            None
        } else {
            let g = section("circuit", GatePulse::new(gate_on, c.gate_length_ns * 1e-9))?;
            if !grid.contains(g.t_on) || !grid.contains(g.t_off()) {
                return Err(Error::Config(format!(
                    "[circuit] gate {}..{} ns does not fit in the grid",
                    c.gate_on_ns,
                    c.gate_on_ns + c.gate_length_ns
                )));
            }
            Some(g)
        };

        let dds = DdsParams {
            f_clk_hz: self.dds.f_clk_mhz * 1e6,
            f_tune_hz: self.dds.f_tune_mhz * 1e6,
            n_images: self.dds.n_images,
        };
        section("dds", dds.validate())?;

        let bandpass = BandpassSpec {
            f_center_hz: self.bandpass.f_center_mhz * 1e6,
            rejection: self
                .bandpass
                .rejection
                .iter()
                .map(|r| RejectionPoint {
                    freq_hz: r.freq_mhz * 1e6,
                    suppression_db: r.suppression_db,
                })
                .collect(),
            passband_loss_db: self.bandpass.passband_loss_db,
        };
        section("bandpass", bandpass.validate())?;

        let doubler = Doubler {
            spur_degradation_db: self.doubler.spur_degradation_db,
            harmonic_floor_dbc: self.doubler.harmonic_floor_dbc,
        };
        if !(doubler.spur_degradation_db.is_finite() && doubler.spur_degradation_db >= 0.0) {
            return Err(Error::Config("[doubler] spur_degradation_db must be >= 0".into()));
        }
        if let Some(f) = doubler.harmonic_floor_dbc {
            if !(f <= 0.0) {
                return Err(Error::Config("[doubler] harmonic_floor_dbc must be <= 0".into()));
            }
        }

        let m = &self.mixer;
        let mixer = MixerParams {
            conversion_gain: m.conversion_gain,
            lo_leak_db: m.lo_leak_db,
            if_leak_db: m.if_leak_db,
        };
        section("mixer", mixer.validate())?;
        if !(m.if_peak_volts.is_finite() && m.if_peak_volts > 0.0) {
            return Err(Error::Config("[mixer] if_peak_volts must be positive".into()));
        }

        let e = &self.eom;
        let modulator = ModulatorParams {
            v_pi: e.v_pi_volts,
            bandwidth_hz: e.bandwidth_ghz * 1e9,
            drive_scale: e.drive_scale,
            rolloff: e.rolloff,
        };
        section("eom", modulator.validate())?;
        if e.n_orders < 1 {
            return Err(Error::Config(format!(
                "[eom] n_orders must be >= 1, got {}",
                e.n_orders
            )));
        }

        let etalons = section("etalon", self.etalon.to_stack())?;
        if self.etalon.sideband_order == 0 {
            return Err(Error::Config("[etalon] sideband_order must be nonzero".into()));
        }

        let d = &self.detector;
        let detector = DetectorParams {
            bandwidth_hz: d.bandwidth_ghz * 1e9,
            scope_bandwidth_hz: d.scope_bandwidth_ghz * 1e9,
            responsivity: d.responsivity,
        };
        section("detector", detector.validate())?;

        let atom = section("atom", self.atom.params())?;

        Ok(ChainParams {
            seed: self.seed,
            grid,
            circuit,
            gate,
            gate_on,
            dds,
            bandpass,
            doubler,
            mixer,
            if_peak_volts: m.if_peak_volts,
            modulator,
            n_orders: e.n_orders,
            etalons,
            sideband_order: self.etalon.sideband_order,
            detector,
            atom: self.atom.enabled.then_some(atom),
        })
    }

    /// Dotted paths of every scalar that [`ChainConfig::set_parameter`] accepts.
    pub fn parameter_paths() -> Vec<String> {
        let mut out = Vec::new();
        collect_paths(&full_template(), String::new(), &mut out);
        out
    }

    /// Returns a copy with the scalar at `path` replaced.
    pub fn set_parameter(&self, path: &str, value: f64) -> Result<Self> {
        let valid = Self::parameter_paths();
        if !valid.iter().any(|p| p == path) {
            return Err(Error::Config(format!(
                "unknown parameter `{path}`; valid paths: {}",
                valid.join(", ")
            )));
        }
        let template = full_template();
        let keys: Vec<&str> = path.split('.').collect();
        let is_integer = lookup(&template, &keys).is_some_and(|v| v.is_integer());
        let is_bool = lookup(&template, &keys).is_some_and(|v| v.is_bool());
        let new_value = if is_integer {
            if value.fract() != 0.0 {
                return Err(Error::Config(format!("`{path}` takes a whole number, got {value}")));
            }
            toml::Value::Integer(value as i64)
        } else if is_bool {
            toml::Value::Boolean(value != 0.0)
        } else {
            toml::Value::Float(value)
        };

        let mut root = toml::Value::try_from(self).map_err(|e| Error::Config(e.to_string()))?;
        let (last, parents) = keys.split_last().expect("path is non-empty");
        let mut table = root.as_table_mut().expect("config is a table");
        for k in parents {
            table = table
                .entry(k.to_string())
                .or_insert_with(|| toml::Value::Table(Default::default()))
                .as_table_mut()
                .ok_or_else(|| Error::Config(format!("`{k}` is not a section")))?;
        }
        // the two ways of setting the control voltage exclude each other
        match *last {
            "tau_r_ns" => {
                table.remove("v_in_volts");
            }
            "v_in_volts" => {
                table.remove("tau_r_ns");
            }
            _ => {}
        }
        table.insert(last.to_string(), new_value);
        root.try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))
    }
}

/// Default config with every optional scalar present.
fn full_template() -> toml::Value {
    let mut full = ChainConfig::default();
    full.circuit.tau_r_ns = Some(DEFAULT_TAU_R_NS);
    full.circuit.v_in_volts = Some(0.0);
    full.doubler.harmonic_floor_dbc = Some(0.0);
    toml::Value::try_from(&full).expect("config serializes")
}

fn lookup<'a>(v: &'a toml::Value, keys: &[&str]) -> Option<&'a toml::Value> {
    keys.iter().try_fold(v, |v, k| v.get(k))
}

fn collect_paths(v: &toml::Value, prefix: String, out: &mut Vec<String>) {
    match v {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let p = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                collect_paths(v, p, out);
            }
        }
        toml::Value::Integer(_) | toml::Value::Float(_) | toml::Value::Boolean(_) => out.push(prefix),
        _ => {}
    }
}

impl AtomSection {
    /// The atom in SI units, regardless of `enabled`.
    pub fn params(&self) -> Result<AtomParams> {
        let a = AtomParams {
            gamma: 1.0 / (self.lifetime_ns * 1e-9),
            lambda_overlap: self.lambda_overlap,
            detuning_hz: self.detuning_mhz * 1e6,
        };
        a.validate()?;
        Ok(a)
    }
}

impl EtalonSection {
    pub fn base_params(&self) -> EtalonParams {
        EtalonParams {
            reflectivity: self.reflectivity,
            fsr_hz: self.fsr_ghz * 1e9,
            detuning_hz: self.detuning_mhz * 1e6,
            loss: self.loss,
            temp_per_fsr_k: self.temp_per_fsr_k,
            temp_jitter_k: self.temp_jitter_mk * 1e-3,
        }
    }

    pub fn to_stack(&self) -> Result<EtalonStack> {
        let mut stages = vec![self.base_params(); self.stages];
        for o in &self.overrides {
            if o.stage == 0 || o.stage > self.stages {
                return Err(Error::invalid(format!(
                    "override for stage {} but the stack has stages 1..={}",
                    o.stage, self.stages
                )));
            }
            let s = &mut stages[o.stage - 1];
            if let Some(v) = o.reflectivity {
                s.reflectivity = v;
            }
            if let Some(v) = o.fsr_ghz {
                s.fsr_hz = v * 1e9;
            }
            if let Some(v) = o.detuning_mhz {
                s.detuning_hz = v * 1e6;
            }
            if let Some(v) = o.loss {
                s.loss = v;
            }
            if let Some(v) = o.temp_per_fsr_k {
                s.temp_per_fsr_k = v;
            }
            if let Some(v) = o.temp_jitter_mk {
                s.temp_jitter_k = v * 1e-3;
            }
        }
        EtalonStack::new(stages)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_is_default() {
        let c = ChainConfig::from_toml_str("").unwrap();
        assert_eq!(c, ChainConfig::default());
        let p = c.to_params().unwrap();
        assert!((crate::envelope::tau_from_control_voltage(&p.circuit).unwrap() - 27e-9).abs() < 1e-18);
        assert_eq!(p.etalons.len(), 3);
        assert!(p.gate.is_some());
    }

    #[test]
    fn round_trip_is_canonical() {
        let text = r#"
            seed = 9
            [etalon]
            stages = 2
            reflectivity = 0.93
            [[etalon.overrides]]
            stage = 2
            detuning_mhz = 5.0
            [detector]
            bandwidth_ghz = inf
            [circuit]
            v_in_volts = 3.0
        "#;
        let c = ChainConfig::from_toml_str(text).unwrap();
        let out = c.to_toml_string().unwrap();
        let back = ChainConfig::from_toml_str(&out).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_toml_string().unwrap(), out);
        let stack = c.to_params().unwrap().etalons;
        assert_eq!(stack.stages()[1].detuning_hz, 5e6);
        assert_eq!(stack.stages()[0].detuning_hz, 0.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(
            ChainConfig::from_toml_str("[grid]\ndt = 1"),
            Err(Error::Config(_))
        ));
        assert!(ChainConfig::from_toml_str("[nonsense]\n").is_err());
        assert!(ChainConfig::from_toml_str("tau_r_ns = 3").is_err());
    }

    #[test]
    fn validation_names_the_section() {
        let mut c = ChainConfig::default();
        c.etalon.reflectivity = 1.2;
        let msg = c.validate().unwrap_err().to_string();
        assert!(msg.contains("[etalon]") && msg.contains("reflectivity"), "{msg}");

        let mut c = ChainConfig::default();
        c.circuit.tau_r_ns = Some(20.0);
        c.circuit.v_in_volts = Some(3.0);
        assert!(c.validate().is_err());

        let mut c = ChainConfig::default();
        c.circuit.gate_on_ns = 450.0;
        assert!(c.validate().is_err());

        let mut c = ChainConfig::default();
        c.etalon.overrides.push(EtalonOverride {
            stage: 4,
            ..Default::default()
        });
        assert!(c.validate().is_err());
    }

    #[test]
    fn zero_gate_is_allowed() {
        let mut c = ChainConfig::default();
        c.circuit.gate_length_ns = 0.0;
        assert!(c.to_params().unwrap().gate.is_none());
        c.circuit.gate_length_ns = -1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn parameter_paths_and_setting() {
        let paths = ChainConfig::parameter_paths();
        for p in [
            "seed",
            "grid.dt_ns",
            "circuit.tau_r_ns",
            "circuit.v_in_volts",
            "etalon.reflectivity",
            "eom.rolloff",
        ] {
            assert!(paths.iter().any(|q| q == p), "{p}");
        }
        let c = ChainConfig::default();
        let r = c.set_parameter("etalon.reflectivity", 0.9).unwrap();
        assert_eq!(r.etalon.reflectivity, 0.9);
        let s = c.set_parameter("etalon.stages", 1.0).unwrap();
        assert_eq!(s.etalon.stages, 1);
        assert!(c.set_parameter("etalon.stages", 1.5).is_err());
        let v = c.set_parameter("circuit.v_in_volts", 2.0).unwrap();
        assert_eq!(v.circuit.v_in_volts, Some(2.0));
        let t = v.set_parameter("circuit.tau_r_ns", 40.0).unwrap();
        assert_eq!((t.circuit.tau_r_ns, t.circuit.v_in_volts), (Some(40.0), None));
        let err = c.set_parameter("etalon.finesse", 3.0).unwrap_err().to_string();
        assert!(err.contains("etalon.reflectivity"), "{err}");
    }
}
