//! End-to-end run: circuit, RF, modulator, etalons, detector and atom.

use std::path::Path;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::atom::excite;
use crate::config::{ChainConfig, ChainParams};
use crate::detect::{detect, undershoot_fraction};
use crate::envelope::{simulate_circuit, tau_from_control_voltage, CircuitTrace, GatePulse};
use crate::eom::{decompose_sidebands, distortion_fraction, phase_modulate, sideband_amplitude};
use crate::error::{Result, StageContext};
use crate::etalon::{diagnostics, extinction_db, select_frequency, spectral_leakage};
use crate::report::{
    write_atomic, AtomSummary, CircuitSummary, DetectedSummary, EomSummary, EtalonSummary, FitSummary, OrderSummary,
    Provenance, PulseSummary, RfSummary, RunReport, StageSummary, ToneSummary,
};
use crate::rf::{apply_bandpass, dds_tones, frequency_quadruple, mix_envelope_with_lo};
use crate::waveform::{analytic_signal, fit_exponential, write_trace, Direction, TimeGrid, TraceKind, Unit, Waveform};

/// Fits stop this far before the cutoff so that the edge itself is excluded.
const CIRCUIT_MARGIN: f64 = 0.5e-9;
const FILTERED_MARGIN: f64 = 3e-9;
const MIN_FIT_SAMPLES: usize = 16;

/// Signals at the tap points of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Traces {
    pub gate: Waveform,
    pub v_be: Waveform,
    pub v_out: Waveform,
    pub rf: Waveform,
    /// Transmitted field in the frame of the selected sideband.
    pub optical: Waveform,
    pub detected: Waveform,
    pub excitation: Option<Waveform>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainRun {
    pub report: RunReport,
    pub traces: Traces,
}

/// Rise window: second half of the gate, ending `margin` before the cutoff.
pub fn rise_window(gate: &GatePulse, grid: &TimeGrid, margin: f64) -> Option<(f64, f64)> {
    let w = (gate.t_on + 0.5 * gate.duration, gate.t_off() - margin);
    (grid.indices_in(w.0, w.1).len() >= MIN_FIT_SAMPLES).then_some(w)
}

/// Fall window: from where the trace has dropped to 80% of its peak near the
/// cutoff until it reaches 5%, at least [`MIN_FIT_SAMPLES`] long.
pub fn fall_window(w: &Waveform, gate: &GatePulse) -> Option<(f64, f64)> {
    let grid = w.grid();
    let y = w.magnitudes();
    let search = grid.indices_in(gate.t_on, gate.t_off() + 5e-9);
    let (i_peak, peak) = search
        .clone()
        .map(|i| (i, y[i]))
        .fold((search.start, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    if !(peak > 0.0) {
        return None;
    }
    let start = (i_peak..y.len()).find(|&i| y[i] <= 0.8 * peak)?;
    let end = (start..y.len()).find(|&i| y[i] <= 0.05 * peak).unwrap_or(y.len() - 1);
    let end = end.max(start + MIN_FIT_SAMPLES - 1);
    (end < y.len()).then(|| (grid.time(start), grid.time(end)))
}

fn try_fit(
    w: &Waveform,
    window: Option<(f64, f64)>,
    direction: Direction,
    label: &str,
    warnings: &mut Vec<String>,
) -> Option<FitSummary> {
    let Some(window) = window else {
        warnings.push(format!("{label}: no usable fit window"));
        return None;
    };
    match fit_exponential(w, window, direction) {
        Ok(f) => Some(FitSummary::from(&f)),
        Err(e) => {
            warnings.push(format!("{label}: {e}"));
            None
        }
    }
}

fn idle_circuit(grid: TimeGrid) -> CircuitTrace {
    CircuitTrace {
        gate: Waveform::zeros(grid, Unit::Volts),
        v_be: Waveform::zeros(grid, Unit::Volts),
        v_out: Waveform::zeros(grid, Unit::Volts),
    }
}

/// Runs the full chain. Deterministic in `(cfg, cfg.seed)`.
pub fn run_chain(cfg: &ChainConfig) -> Result<ChainRun> {
    let p: ChainParams = cfg.to_params()?;
    let provenance = Provenance::of(cfg)?;
    let grid = p.grid;
    let mut warnings = Vec::new();
    let degenerate = p.gate.is_none();
    if degenerate {
        warnings.push("zero-length gate: no pulse was generated".to_string());
    }

    // circuit
    let circuit = match &p.gate {
        Some(g) => simulate_circuit(&p.circuit, &[*g], &grid).stage("circuit")?,
        None => idle_circuit(grid),
    };
    let v_out_peak = circuit.v_out.peak().1;
    let clamped = v_out_peak >= p.circuit.v_out_max * (1.0 - 1e-12);
    if clamped {
        warnings.push(format!("circuit output clamped at {} V", p.circuit.v_out_max));
    }
    let circuit_rise = p.gate.as_ref().and_then(|g| {
        try_fit(
            &circuit.v_out,
            rise_window(g, &grid, CIRCUIT_MARGIN),
            Direction::Rising,
            "V_out rise",
            &mut warnings,
        )
    });
    let circuit_summary = CircuitSummary {
        tau_design_ns: tau_from_control_voltage(&p.circuit).stage("circuit")? * 1e9,
        v_in_volts: p.circuit.v_in,
        charge_current_ma: p.circuit.charge_current() * 1e3,
        v_out_peak_volts: v_out_peak,
        clamped,
        rise: circuit_rise,
    };

    // rf
    let (if_wave, if_gain_db) = if v_out_peak > 0.0 {
        let k = p.if_peak_volts / v_out_peak;
        (circuit.v_out.scale(Complex64::new(k, 0.0)), Some(20.0 * k.log10()))
    } else {
        (circuit.v_out.clone(), None)
    };
    let selected = apply_bandpass(&dds_tones(&p.dds).stage("dds")?, &p.bandpass);
    let lo = frequency_quadruple(&selected, &p.doubler);
    let carrier = lo
        .iter()
        .copied()
        .max_by(|a, b| a.amplitude.total_cmp(&b.amplitude))
        .expect("DDS always yields tones");
    let f_s = carrier.freq_hz;
    let rf = mix_envelope_with_lo(&if_wave, &lo, &p.mixer).stage("mixer")?;
    let rf_rise = match &p.gate {
        Some(g) => {
            let env = analytic_signal(&rf).stage("mixer")?;
            try_fit(
                &env,
                rise_window(g, &grid, FILTERED_MARGIN),
                Direction::Rising,
                "RF envelope rise",
                &mut warnings,
            )
        }
        None => None,
    };
    let rf_summary = RfSummary {
        carrier_ghz: f_s * 1e-9,
        lo_tones: lo
            .iter()
            .map(|t| ToneSummary {
                freq_mhz: t.freq_hz * 1e-6,
                dbc: t.dbc(carrier.amplitude),
            })
            .collect(),
        worst_spur_dbc: lo
            .iter()
            .filter(|t| t.freq_hz != f_s && t.amplitude > 0.0)
            .map(|t| t.dbc(carrier.amplitude))
            .max_by(f64::total_cmp),
        if_gain_db,
        envelope_rise: rf_rise,
    };

    // modulator
    let field = phase_modulate(&rf, &p.modulator).stage("eom")?;
    let x_peak = if v_out_peak > 0.0 {
        p.if_peak_volts * p.mixer.conversion_gain * p.modulator.drive_scale / p.modulator.v_pi
    } else {
        0.0
    };
    let orders = decompose_sidebands(&field, f_s, p.n_orders).stage("eom")?;
    let eom_summary = EomSummary {
        x_peak,
        drive_peak_volts: rf.peak().1 * p.modulator.drive_scale,
        sideband_amplitude: sideband_amplitude(x_peak),
        distortion_percent: 100.0 * distortion_fraction(x_peak),
        orders: orders
            .iter()
            .map(|o| OrderSummary {
                order: o.order,
                peak_amplitude: o.envelope.peak().1,
            })
            .collect(),
    };

    // etalons, with this run's temperature draw
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let stack = p.etalons.jittered(&mut rng).stage("etalon")?;
    let f_sel = p.sideband_order as f64 * f_s;
    if f_sel.abs() >= grid.nyquist() {
        return Err(crate::Error::Config(format!(
            "[etalon] sideband at {:.3} GHz is beyond the grid Nyquist frequency {:.3} GHz",
            f_sel * 1e-9,
            grid.nyquist() * 1e-9
        )));
    }
    let optical = select_frequency(&field.envelope, f_sel, &stack).stage("etalon")?;
    let out_of_band = spectral_leakage(&field.envelope.shift_frequency(f_sel), &stack).stage("etalon")?;
    if out_of_band > crate::etalon::LEAKAGE_WARN_FRACTION {
        warnings.push(format!(
            "{:.2}% of the field lies beyond FSR/2 of the etalon passband",
            100.0 * out_of_band
        ));
    }
    let etalon_summary = EtalonSummary {
        selected_ghz: f_sel * 1e-9,
        stages: diagnostics(&stack, -f_sel)
            .iter()
            .zip(stack.stages())
            .map(|(d, e)| StageSummary {
                fwhm_mhz: d.fwhm_hz * 1e-6,
                finesse: d.finesse,
                ringdown_ns: d.ringdown_s * 1e9,
                carrier_leak_db: d.leak_db,
                detuning_mhz: e.detuning_hz * 1e-6,
            })
            .collect(),
        cascade_extinction_db: extinction_db(-f_sel, &stack),
        out_of_band_fraction: out_of_band,
    };
    let optical_summary = pulse_summary(&optical, p.gate.as_ref(), &grid, "optical", &mut warnings);

    // detection
    let detected = detect(&optical, &p.detector).stage("detector")?;
    let undershoot = undershoot_fraction(&detected);
    if undershoot > 0.01 {
        warnings.push(format!("detector undershoot {:.2}% exceeds 1%", 100.0 * undershoot));
    }
    let detected_summary = DetectedSummary {
        pulse: pulse_summary(&detected, p.gate.as_ref(), &grid, "detected", &mut warnings),
        undershoot_fraction: undershoot,
    };

    // atom
    let (atom_summary, excitation) = match (&p.atom, degenerate) {
        (Some(a), false) => {
            let r = excite(&optical, a).stage("atom")?;
            let summary = AtomSummary {
                p_max: r.p_max,
                t_at_max_ns: r.t_at_max * 1e9,
                efficiency: if a.lambda_overlap > 0.0 {
                    r.p_max / a.lambda_overlap
                } else {
                    0.0
                },
            };
            (Some(summary), Some(r.p_trace))
        }
        _ => (None, None),
    };

    let report = RunReport {
        degenerate,
        warnings,
        circuit: circuit_summary,
        rf: rf_summary,
        eom: eom_summary,
        etalon: etalon_summary,
        optical: optical_summary,
        detected: detected_summary,
        atom: atom_summary,
        provenance,
    };
    Ok(ChainRun {
        report,
        traces: Traces {
            gate: circuit.gate,
            v_be: circuit.v_be,
            v_out: circuit.v_out,
            rf,
            optical,
            detected,
            excitation,
        },
    })
}

fn pulse_summary(
    w: &Waveform,
    gate: Option<&GatePulse>,
    grid: &TimeGrid,
    label: &str,
    warnings: &mut Vec<String>,
) -> PulseSummary {
    let peak = w.peak().1;
    let Some(g) = gate else {
        return PulseSummary {
            peak,
            rise: None,
            fall: None,
        };
    };
    let rise = try_fit(
        w,
        rise_window(g, grid, FILTERED_MARGIN),
        Direction::Rising,
        &format!("{label} rise"),
        warnings,
    );
    let fall = try_fit(
        w,
        fall_window(w, g),
        Direction::Falling,
        &format!("{label} fall"),
        warnings,
    );
    PulseSummary { peak, rise, fall }
}

/// Writes `report.json`, `report.txt` and one CSV per tap point into `dir`.
pub fn write_outputs(run: &ChainRun, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let t = &run.traces;
    let real = [
        ("gate.csv", &t.gate),
        ("v_be.csv", &t.v_be),
        ("v_out.csv", &t.v_out),
        ("rf.csv", &t.rf),
        ("detected.csv", &t.detected),
    ];
    for (name, w) in real {
        write_trace(&dir.join(name), w, TraceKind::Real)?;
    }
    write_trace(&dir.join("optical.csv"), &t.optical, TraceKind::Complex)?;
    if let Some(p) = &t.excitation {
        write_trace(&dir.join("excitation.csv"), p, TraceKind::Real)?;
    }
    let mut json = run.report.to_json()?;
    json.push('\n');
    write_atomic(&dir.join("report.json"), json.as_bytes())?;
    write_atomic(&dir.join("report.txt"), format!("{}\n", run.report).as_bytes())?;
    Ok(())
}

/// One independent run per value of the parameter at `path`, in input order.
pub fn sweep(cfg: &ChainConfig, path: &str, values: &[f64]) -> Result<Vec<ChainRun>> {
    let configs = values
        .iter()
        .map(|&v| {
            let c = cfg.set_parameter(path, v)?;
            c.validate()?;
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    configs.par_iter().map(run_chain).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_run_summary() {
        let run = run_chain(&ChainConfig::default()).unwrap();
        let r = &run.report;
        assert!(!r.degenerate, "{:?}", r.warnings);
        assert!((r.rf.carrier_ghz - 1.5).abs() < 1e-12);
        assert!((r.eom.x_peak - 0.1).abs() < 1e-12);
        // spurs and feedthrough add a few percent on top of the carrier drive
        let nominal = 0.1 * 1.7;
        assert!(r.eom.drive_peak_volts > nominal && r.eom.drive_peak_volts < 1.1 * nominal);
        assert!(r.etalon.cascade_extinction_db > 60.0);
        let rise = r.circuit.rise.as_ref().unwrap().tau_ns;
        assert!((rise - 27.0).abs() / 27.0 < 0.02, "{rise}");
        let env = r.rf.envelope_rise.as_ref().unwrap().tau_ns;
        assert!((env - 27.0).abs() / 27.0 < 0.03, "{env}");
        let det = r.detected.pulse.rise.as_ref().unwrap().tau_ns;
        assert!(det > 12.0 && det < 16.0, "{det}");
        let a = r.atom.as_ref().unwrap();
        assert!(a.p_max > 0.5 && a.p_max <= 1.0);
        assert_eq!(run.traces.optical.len(), 10000);
    }

    #[test]
    fn zero_gate_is_flagged() {
        let mut cfg = ChainConfig::default();
        cfg.circuit.gate_length_ns = 0.0;
        let run = run_chain(&cfg).unwrap();
        assert!(run.report.degenerate);
        assert!(run.report.atom.is_none());
        assert!(run.report.detected.pulse.rise.is_none());
        assert!(run.traces.v_out.samples().iter().all(|z| z.re == 0.0));
    }

    #[test]
    fn stage_errors_are_named() {
        let mut cfg = ChainConfig::default();
        cfg.grid.dt_ns = 0.2;
        cfg.grid.n_samples = 2500;
        let err = run_chain(&cfg).unwrap_err();
        assert!(err.to_string().contains("mixer"), "{err}");
    }

    #[test]
    fn sweep_keeps_order() {
        let mut cfg = ChainConfig::default();
        cfg.atom.enabled = false;
        let runs = sweep(&cfg, "etalon.stages", &[1.0, 2.0, 3.0]).unwrap();
        let ext: Vec<f64> = runs.iter().map(|r| r.report.etalon.cascade_extinction_db).collect();
        assert!(ext[0] < ext[1] && ext[1] < ext[2]);
        assert!((ext[0] - 20.6).abs() < 0.3, "{ext:?}");
        assert!(sweep(&cfg, "etalon.bogus", &[1.0]).is_err());
        assert!(sweep(&cfg, "etalon.reflectivity", &[1.5]).is_err());
    }
}
