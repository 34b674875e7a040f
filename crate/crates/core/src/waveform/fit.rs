//! Least-squares fit of `A·exp(±(t - t_a)/τ) + B` to a waveform magnitude.
//!
//! The rate is first estimated from a weighted log-linear fit of lagged
//! differences `y(t + L) - y(t)`, which cancels the offset `B` exactly. `A`
//! and `B` then follow from linear least squares, and a damped Gauss-Newton
//! iteration refines all three parameters on the nonlinear model.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::Waveform;
use crate::error::{Error, Result};

const MIN_SAMPLES: usize = 16;
const MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Rising,
    Falling,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Rising => 1.0,
            Direction::Falling => -1.0,
        }
    }
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rising" => Ok(Direction::Rising),
            "falling" => Ok(Direction::Falling),
            other => Err(Error::invalid(format!(
                "direction must be `rising` or `falling`, got `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Time constant in seconds, always positive.
    pub tau: f64,
    /// `A`, the model's exponential term evaluated at the window start.
    pub amplitude: f64,
    pub offset: f64,
    /// RMS residual divided by the largest magnitude in the window.
    pub residual_norm: f64,
    pub window: (f64, f64),
    pub direction: Direction,
}

impl FitResult {
    pub fn model(&self, t: f64) -> f64 {
        let x = t - self.window.0;
        self.amplitude * (self.direction.sign() * x / self.tau).exp() + self.offset
    }
}

fn moving_average5(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(2);
            let hi = (i + 3).min(n);
            y[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

/// Monotone-trend check on the smoothed data, evaluated on block means so
/// that sample-level noise does not trip it.
fn check_trend(y: &[f64], direction: Direction) -> Result<()> {
    let smooth = moving_average5(y);
    let (lo, hi) = smooth
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !(hi > 0.0) || (hi - lo) <= 1e-9 * hi {
        return Err(Error::FitFailed(format!(
            "data in window is near-constant (range {:e}, max {:e})",
            hi - lo,
            hi
        )));
    }
    let m = smooth.len();
    let nb = MIN_SAMPLES.min(m);
    let means: Vec<f64> = (0..nb)
        .map(|b| {
            let s = b * m / nb;
            let e = (b + 1) * m / nb;
            smooth[s..e].iter().sum::<f64>() / (e - s) as f64
        })
        .collect();
    let sign = direction.sign();
    if let Some(b) = means.windows(2).position(|p| sign * (p[1] - p[0]) <= 0.0) {
        return Err(Error::FitFailed(format!(
            "data is not monotonically {} (smoothed block {} -> {}: {:e} -> {:e})",
            match direction {
                Direction::Rising => "rising",
                Direction::Falling => "falling",
            },
            b,
            b + 1,
            means[b],
            means[b + 1]
        )));
    }
    Ok(())
}

/// Linear least squares for `A, B` in `y ≈ A·exp(r x) + B`.
fn linear_amplitudes(x: &[f64], y: &[f64], r: f64) -> Option<(f64, f64)> {
    let (mut see, mut se, mut sey, mut sy) = (0.0, 0.0, 0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        let e = (r * xi).exp();
        see += e * e;
        se += e;
        sey += e * yi;
        sy += yi;
    }
    let n = x.len() as f64;
    let det = see * n - se * se;
    if det.abs() <= 1e-14 * see * n {
        return None;
    }
    Some(((sey * n - se * sy) / det, (see * sy - se * sey) / det))
}

fn cost(x: &[f64], y: &[f64], p: &Vector3<f64>) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let r = p[0] * (p[2] * xi).exp() + p[1] - yi;
            r * r
        })
        .sum()
}

/// Initial rate from a weighted log-linear fit to lagged differences.
fn initial_rate(x: &[f64], y: &[f64], sign: f64) -> Result<f64> {
    let m = y.len();
    let lag = (m / 4).max(1);
    let (mut sw, mut swx, mut swy, mut swxx, mut swxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut kept = 0usize;
    for i in 0..m - lag {
        let d = sign * (y[i + lag] - y[i]);
        if d > 0.0 {
            let w = d * d;
            let l = d.ln();
            sw += w;
            swx += w * x[i];
            swy += w * l;
            swxx += w * x[i] * x[i];
            swxy += w * x[i] * l;
            kept += 1;
        }
    }
    let det = sw * swxx - swx * swx;
    if kept < 3 || det <= 0.0 {
        return Err(Error::FitFailed(
            "too few usable differences for the initial rate estimate".into(),
        ));
    }
    let slope = (sw * swxy - swx * swy) / det;
    if !(slope * sign > 0.0) {
        return Err(Error::FitFailed(format!(
            "initial rate estimate has the wrong sign ({slope:e})"
        )));
    }
    Ok(slope)
}

pub fn fit_exponential(w: &Waveform, window: (f64, f64), direction: Direction) -> Result<FitResult> {
    let (t_a, t_b) = window;
    let grid = w.grid();
    if !(t_a < t_b) || !grid.contains(t_a) || !grid.contains(t_b) {
        return Err(Error::invalid(format!(
            "fit window [{t_a:e}, {t_b:e}] s is not inside the grid [{:e}, {:e}] s",
            grid.t_start(),
            grid.t_end()
        )));
    }
    let idx = grid.indices_in(t_a, t_b);
    if idx.len() < MIN_SAMPLES {
        return Err(Error::invalid(format!(
            "fit window holds {} samples, need at least {MIN_SAMPLES}",
            idx.len()
        )));
    }

    let y: Vec<f64> = w.samples()[idx.clone()].iter().map(|z| z.norm()).collect();
    check_trend(&y, direction)?;

    // normalized abscissa in [0, 1] keeps the normal equations well conditioned
    let width = grid.time(idx.end - 1) - t_a;
    let x: Vec<f64> = idx.clone().map(|i| (grid.time(i) - t_a) / width).collect();
    let y_scale = y.iter().cloned().fold(0.0, f64::max);
    let y: Vec<f64> = y.iter().map(|v| v / y_scale).collect();

    let sign = direction.sign();
    let r0 = initial_rate(&x, &y, sign)?;
    let (a0, b0) =
        linear_amplitudes(&x, &y, r0).ok_or_else(|| Error::FitFailed("degenerate linear amplitude system".into()))?;

    let mut p = Vector3::new(a0, b0, r0);
    let mut c = cost(&x, &y, &p);
    let mut lambda = 1e-6;
    for _ in 0..MAX_ITER {
        let mut jtj = Matrix3::<f64>::zeros();
        let mut jtr = Vector3::<f64>::zeros();
        for (&xi, &yi) in x.iter().zip(&y) {
            let e = (p[2] * xi).exp();
            let res = p[0] * e + p[1] - yi;
            let j = Vector3::new(e, 1.0, p[0] * xi * e);
            jtj += j * j.transpose();
            jtr += j * res;
        }
        let mut improved = false;
        for _ in 0..30 {
            let mut damped = jtj;
            for k in 0..3 {
                damped[(k, k)] *= 1.0 + lambda;
            }
            let Some(step) = damped.lu().solve(&(-jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let trial = p + step;
            let tc = cost(&x, &y, &trial);
            if tc.is_finite() && tc <= c {
                let small = step[2].abs() <= 1e-14 * trial[2].abs().max(1e-300);
                p = trial;
                let dc = c - tc;
                c = tc;
                lambda = (lambda * 0.1).max(1e-15);
                improved = !(small || dc <= 1e-30 * c.max(1e-300));
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }

    let rate = p[2] / width;
    if !(rate * sign > 0.0) || !rate.is_finite() {
        return Err(Error::FitFailed(format!(
            "fitted rate {rate:e} 1/s does not match the requested direction"
        )));
    }
    let residual_norm = (c / x.len() as f64).sqrt();
    Ok(FitResult {
        tau: sign / rate,
        amplitude: p[0] * y_scale,
        offset: p[1] * y_scale,
        residual_norm,
        window,
        direction,
    })
}
