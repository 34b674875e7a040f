use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use exprise_core::atom::excite;
use exprise_core::waveform::{read_trace, write_trace, TraceKind};
use exprise_core::{fit_exponential, run_chain, sweep, write_outputs, ChainConfig, Direction, Error, Unit};

#[derive(Parser)]
#[command(name = "exprise", version, about = "Simulate exponentially rising optical pulses")]
struct Cli {
    /// Log more detail (repeat for debug output).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full chain once and write traces plus a report.
    Simulate {
        config: PathBuf,
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
        /// Print the report as JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Run the chain once per value of one config parameter.
    Sweep {
        config: PathBuf,
        /// Dotted parameter path, e.g. `etalon.reflectivity`.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        values: Vec<f64>,
        /// Directory for per-point outputs and `sweep.json`.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Fit an exponential to a window of a CSV trace.
    Fit {
        trace: PathBuf,
        /// Window start and end in seconds, e.g. `2.3e-7,2.5e-7`.
        #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true)]
        window: Vec<f64>,
        #[arg(long, value_parser = parse_direction)]
        direction: Direction,
        #[arg(long)]
        json: bool,
    },
    /// Excitation probability of the configured atom.
    Excite {
        config: PathBuf,
        /// Optical field trace to use instead of the simulated pulse.
        #[arg(long)]
        pulse: Option<PathBuf>,
        /// Write the probability trace to this CSV file.
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
}

fn parse_direction(s: &str) -> Result<Direction, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn exit_code(e: &Error) -> u8 {
    if e.is_numerical() {
        2
    } else {
        1
    }
}

fn print_json(value: &impl serde::Serialize) -> Result<(), Error> {
    let s = serde_json::to_string_pretty(value).map_err(|e| Error::Numerical(format!("serialization: {e}")))?;
    println!("{s}");
    Ok(())
}

fn simulate(config: &Path, out: &Path, json: bool) -> Result<(), Error> {
    let cfg = ChainConfig::from_file(config)?;
    let run = run_chain(&cfg)?;
    write_outputs(&run, out)?;
    if json {
        println!("{}", run.report.to_json()?);
    } else {
        println!("{}", run.report);
    }
    log::info!("outputs written to {}", out.display());
    Ok(())
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.digits$}"))
}

fn run_sweep(config: &Path, param: &str, values: &[f64], out: Option<&Path>) -> Result<(), Error> {
    let cfg = ChainConfig::from_file(config)?;
    let runs = sweep(&cfg, param, values)?;
    println!(
        "{:>14} {:>12} {:>12} {:>14} {:>10}",
        param, "rise_ns", "fall_ns", "extinction_db", "p_max"
    );
    for (v, run) in values.iter().zip(&runs) {
        let r = &run.report;
        println!(
            "{:>14} {:>12} {:>12} {:>14.2} {:>10}",
            v,
            fmt_opt(r.detected.pulse.rise.as_ref().map(|f| f.tau_ns), 3),
            fmt_opt(r.detected.pulse.fall.as_ref().map(|f| f.tau_ns), 3),
            r.etalon.cascade_extinction_db,
            fmt_opt(r.atom.as_ref().map(|a| a.p_max), 5),
        );
        for w in &r.warnings {
            log::warn!("{param} = {v}: {w}");
        }
    }
    if let Some(dir) = out {
        for (i, run) in runs.iter().enumerate() {
            write_outputs(run, &dir.join(format!("point_{i:03}")))?;
        }
        let points: Vec<_> = values
            .iter()
            .zip(&runs)
            .map(|(v, r)| serde_json::json!({ "value": v, "report": r.report }))
            .collect();
        let summary = serde_json::json!({ "parameter": param, "points": points });
        let mut text = serde_json::to_string_pretty(&summary).map_err(|e| Error::Numerical(e.to_string()))?;
        text.push('\n');
        exprise_core::report::write_atomic(&dir.join("sweep.json"), text.as_bytes())?;
        log::info!("outputs written to {}", dir.display());
    }
    Ok(())
}

fn fit(trace: &Path, window: &[f64], direction: Direction, json: bool) -> Result<(), Error> {
    let &[a, b] = window else {
        return Err(Error::InvalidInput(format!(
            "--window takes two values `start,end`, got {}",
            window.len()
        )));
    };
    let w = read_trace(trace, Unit::Dimensionless)?;
    let f = fit_exponential(&w, (a, b), direction)?;
    if json {
        print_json(&f)?;
    } else {
        println!("tau        {:.6e} s  ({:.4} ns)", f.tau, f.tau * 1e9);
        println!("amplitude  {:.6e}", f.amplitude);
        println!("offset     {:.6e}", f.offset);
        println!("residual   {:.3e}", f.residual_norm);
        println!("window     {:.6e} .. {:.6e} s", f.window.0, f.window.1);
    }
    Ok(())
}

fn run_excite(config: &Path, pulse: Option<&Path>, out: Option<&Path>, json: bool) -> Result<(), Error> {
    let cfg = ChainConfig::from_file(config)?;
    let atom = cfg.atom.params().map_err(|e| Error::Config(format!("[atom] {e}")))?;
    let field = match pulse {
        Some(p) => read_trace(p, Unit::SqrtWatts)?,
        None => {
            let run = run_chain(&cfg)?;
            if run.report.degenerate {
                return Err(Error::InvalidInput("the configured chain produces no pulse".into()));
            }
            run.traces.optical
        }
    };
    let r = excite(&field, &atom)?;
    if let Some(path) = out {
        write_trace(path, &r.p_trace, TraceKind::Real)?;
    }
    let summary = serde_json::json!({
        "p_max": r.p_max,
        "t_at_max_ns": r.t_at_max * 1e9,
        "efficiency": r.p_max / atom.lambda_overlap,
        "input_energy": r.input_energy,
    });
    if json {
        print_json(&summary)?;
    } else {
        println!("p_max        {:.6}", r.p_max);
        println!("t_at_max     {:.3} ns", r.t_at_max * 1e9);
        println!("efficiency   {:.6}", r.p_max / atom.lambda_overlap);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage_error = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage_error { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match &cli.command {
        Command::Simulate { config, out, json } => simulate(config, out, *json),
        Command::Sweep {
            config,
            param,
            values,
            out,
        } => run_sweep(config, param, values, out.as_deref()),
        Command::Fit {
            trace,
            window,
            direction,
            json,
        } => fit(trace, window, *direction, *json),
        Command::Excite {
            config,
            pulse,
            out,
            json,
        } => run_excite(config, pulse.as_deref(), out.as_deref(), *json),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
