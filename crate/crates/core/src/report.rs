//! Run summary in JSON and plain text.
//!
//! Times are reported in ns and frequencies in MHz or GHz, as in the config.
//! The JSON form contains no timestamps or host data, so identical inputs
//! produce identical bytes.

use std::fmt::{self, Write as _};
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ChainConfig;
use crate::error::{Error, Result};
use crate::waveform::FitResult;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub tau_ns: f64,
    pub residual_norm: f64,
    pub window_ns: (f64, f64),
}

impl From<&FitResult> for FitSummary {
    fn from(f: &FitResult) -> Self {
        Self {
            tau_ns: f.tau * 1e9,
            residual_norm: f.residual_norm,
            window_ns: (f.window.0 * 1e9, f.window.1 * 1e9),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitSummary {
    pub tau_design_ns: f64,
    pub v_in_volts: f64,
    pub charge_current_ma: f64,
    pub v_out_peak_volts: f64,
    pub clamped: bool,
    pub rise: Option<FitSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToneSummary {
    pub freq_mhz: f64,
    pub dbc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfSummary {
    pub carrier_ghz: f64,
    pub lo_tones: Vec<ToneSummary>,
    /// Strongest LO spur relative to the carrier.
    pub worst_spur_dbc: Option<f64>,
    /// Gain applied to the circuit output to reach the IF level; the
    /// circuit's absolute scale is set by the unknown saturation current.
    pub if_gain_db: Option<f64>,
    pub envelope_rise: Option<FitSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderSummary {
    pub order: i32,
    pub peak_amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EomSummary {
    /// Peak carrier drive in units of V_π.
    pub x_peak: f64,
    /// Largest drive sample including spurs and feedthrough, V.
    pub drive_peak_volts: f64,
    pub sideband_amplitude: f64,
    pub distortion_percent: f64,
    pub orders: Vec<OrderSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub fwhm_mhz: f64,
    pub finesse: f64,
    pub ringdown_ns: f64,
    pub carrier_leak_db: f64,
    /// Including the drawn temperature offset.
    pub detuning_mhz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtalonSummary {
    pub selected_ghz: f64,
    pub stages: Vec<StageSummary>,
    pub cascade_extinction_db: f64,
    /// Field energy fraction beyond FSR/2 of the passband.
    pub out_of_band_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSummary {
    pub peak: f64,
    pub rise: Option<FitSummary>,
    pub fall: Option<FitSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectedSummary {
    pub pulse: PulseSummary,
    pub undershoot_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomSummary {
    pub p_max: f64,
    pub t_at_max_ns: f64,
    /// `p_max / Λ`; 1 for the ideal matched mode.
    pub efficiency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub seed: u64,
    pub version: String,
}

impl Provenance {
    pub fn of(cfg: &ChainConfig) -> Result<Self> {
        Ok(Self {
            config_sha256: sha256_hex(cfg.to_toml_string()?.as_bytes()),
            seed: cfg.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
        })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// Set when there was no pulse to analyze.
    pub degenerate: bool,
    pub warnings: Vec<String>,
    pub circuit: CircuitSummary,
    pub rf: RfSummary,
    pub eom: EomSummary,
    pub etalon: EtalonSummary,
    pub optical: PulseSummary,
    pub detected: DetectedSummary,
    pub atom: Option<AtomSummary>,
    pub provenance: Provenance,
}

impl RunReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Numerical(format!("report serialization: {e}")))
    }
}

fn fit_line(f: &mut fmt::Formatter<'_>, label: &str, fit: &Option<FitSummary>) -> fmt::Result {
    match fit {
        Some(s) => writeln!(
            f,
            "  {label:<16} tau = {:.3} ns  (window {:.1}..{:.1} ns, residual {:.2e})",
            s.tau_ns, s.window_ns.0, s.window_ns.1, s.residual_norm
        ),
        None => writeln!(f, "  {label:<16} n/a"),
    }
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.degenerate {
            writeln!(f, "DEGENERATE RUN: no pulse generated")?;
        }
        let c = &self.circuit;
        writeln!(f, "circuit")?;
        writeln!(f, "  design tau       {:.3} ns", c.tau_design_ns)?;
        writeln!(
            f,
            "  V_in             {:.4} V  (I = {:.3} mA)",
            c.v_in_volts, c.charge_current_ma
        )?;
        writeln!(
            f,
            "  V_out peak       {:.4} V{}",
            c.v_out_peak_volts,
            if c.clamped { "  (clamped)" } else { "" }
        )?;
        fit_line(f, "V_out rise", &c.rise)?;

        let r = &self.rf;
        writeln!(f, "rf")?;
        writeln!(f, "  carrier          {:.4} GHz", r.carrier_ghz)?;
        if let Some(s) = r.worst_spur_dbc {
            writeln!(f, "  worst LO spur    {s:.1} dBc")?;
        }
        if let Some(a) = r.if_gain_db {
            writeln!(f, "  IF gain          {a:.2} dB")?;
        }
        fit_line(f, "envelope rise", &r.envelope_rise)?;

        let e = &self.eom;
        writeln!(f, "eom")?;
        writeln!(
            f,
            "  carrier drive    {:.4} V_pi  (largest sample {:.4} V)",
            e.x_peak, e.drive_peak_volts
        )?;
        writeln!(
            f,
            "  first sideband   {:.5}  (distortion {:.3}%)",
            e.sideband_amplitude, e.distortion_percent
        )?;
        for o in &e.orders {
            writeln!(f, "  order {:>3}        {:.3e}", o.order, o.peak_amplitude)?;
        }

        let t = &self.etalon;
        writeln!(f, "etalon  (tuned to {:.4} GHz)", t.selected_ghz)?;
        for (i, s) in t.stages.iter().enumerate() {
            writeln!(
                f,
                "  stage {}          FWHM {:.1} MHz, finesse {:.2}, ringdown {:.3} ns, carrier {:.2} dB, detuning {:+.3} MHz",
                i + 1,
                s.fwhm_mhz,
                s.finesse,
                s.ringdown_ns,
                s.carrier_leak_db,
                s.detuning_mhz
            )?;
        }
        writeln!(f, "  extinction       {:.2} dB", t.cascade_extinction_db)?;
        writeln!(f, "  out of band      {:.2e}", t.out_of_band_fraction)?;

        writeln!(f, "optical")?;
        writeln!(f, "  peak amplitude   {:.4e}", self.optical.peak)?;
        fit_line(f, "rise", &self.optical.rise)?;
        fit_line(f, "fall", &self.optical.fall)?;

        let d = &self.detected;
        writeln!(f, "detected")?;
        writeln!(f, "  peak power       {:.4e}", d.pulse.peak)?;
        fit_line(f, "rise", &d.pulse.rise)?;
        fit_line(f, "fall", &d.pulse.fall)?;
        writeln!(f, "  undershoot       {:.3}%", 100.0 * d.undershoot_fraction)?;

        if let Some(a) = &self.atom {
            writeln!(f, "atom")?;
            writeln!(f, "  p_max            {:.6} at {:.2} ns", a.p_max, a.t_at_max_ns)?;
            writeln!(f, "  efficiency       {:.6}", a.efficiency)?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        let p = &self.provenance;
        writeln!(f, "provenance")?;
        writeln!(f, "  config sha256    {}", p.config_sha256)?;
        writeln!(f, "  seed             {}", p.seed)?;
        write!(f, "  version          {}", p.version)
    }
}

/// Writes `bytes` so that `path` is either absent or complete.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}
