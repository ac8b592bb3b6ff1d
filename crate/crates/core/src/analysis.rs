//! Fits, spectra and crossing detection used on engine output.

use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::TrajectoryRecord;
use num_complex::Complex64 as C64;

/// Minimum window accepted by [`fit_exponential_decay`].
pub const MIN_DECAY_POINTS: usize = 10;

/// Periodogram `|X_j|^2 / L` for `j = 0..=L/2`.
pub fn periodogram(x: &[f64]) -> Vec<f64> {
    let len = x.len();
    if len == 0 {
        return Vec::new();
    }
    let mut buf: Vec<C64> = x.iter().map(|&v| C64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    buf[..=len / 2].iter().map(|z| z.norm_sqr() / len as f64).collect()
}

/// Ordinary least squares `y = intercept + slope x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_error: f64,
    pub intercept_error: f64,
    pub r_squared: f64,
    pub residual_norm: f64,
    pub points: usize,
}

pub fn fit_linear(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() {
        return Err(Error::GridMismatch);
    }
    let n = xs.len();
    if n < 2 {
        return Err(Error::WindowTooShort { len: n, min: 2 });
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParams("fit abscissae are all equal".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r_squared = if n == 2 || syy == 0.0 { 1.0 } else { (1.0 - ssr / syy).clamp(0.0, 1.0) };
    let (slope_error, intercept_error) = if n > 2 {
        let s2 = ssr / (nf - 2.0);
        let se = (s2 / sxx).sqrt();
        (se, (s2 * (1.0 / nf + mx * mx / sxx)).sqrt())
    } else {
        (0.0, 0.0)
    };
    Ok(LinearFit { slope, intercept, slope_error, intercept_error, r_squared, residual_norm: ssr.sqrt(), points: n })
}

/// `log(O/l) = A - delta t` over a window of record indices.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    pub a: f64,
    pub delta: f64,
    pub delta_error: f64,
    /// Inclusive range of record indices used.
    pub window: (usize, usize),
    pub fit: LinearFit,
}

/// Fits the decay rate from `n = 1` up to the last index before the value
/// first drops below `max(3 sigma, 0)`. Times are `n tau`.
pub fn fit_exponential_decay(record: &TrajectoryRecord) -> Result<DecayFit> {
    let l = record.meta.params.l();
    let tau = record.meta.params.tau;
    let start = record.times.iter().position(|&n| n >= 1).ok_or(Error::WindowTooShort { len: 0, min: MIN_DECAY_POINTS })?;
    let mut end = start;
    for i in start..record.len() {
        let floor = record.errors.as_ref().map_or(0.0, |e| 3.0 * e[i]).max(0.0);
        if record.values[i] < floor || record.values[i] <= 0.0 {
            break;
        }
        end = i + 1;
    }
    let len = end - start;
    if len < MIN_DECAY_POINTS {
        return Err(Error::WindowTooShort { len, min: MIN_DECAY_POINTS });
    }
    let xs: Vec<f64> = record.times[start..end].iter().map(|&n| n as f64 * tau).collect();
    let ys: Vec<f64> = record.values[start..end].iter().map(|v| (v / l).ln()).collect();
    let fit = fit_linear(&xs, &ys)?;
    Ok(DecayFit { a: fit.intercept, delta: 0.0 - fit.slope, delta_error: fit.slope_error, window: (start, end - 1), fit })
}

/// `y = prefactor x^exponent`; `gamma = -exponent`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub prefactor: f64,
    pub exponent: f64,
    pub gamma: f64,
    pub exponent_error: f64,
    pub fit: LinearFit,
}

pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Result<PowerLawFit> {
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(Error::NonPositiveData);
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let fit = fit_linear(&lx, &ly)?;
    Ok(PowerLawFit {
        prefactor: fit.intercept.exp(),
        exponent: fit.slope,
        gamma: -fit.slope,
        exponent_error: fit.slope_error,
        fit,
    })
}

/// First-moment decay time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayTime {
    pub t_d: f64,
    /// Propagated one-sigma error when the record carries error bars.
    pub error: Option<f64>,
    pub n_cut: u64,
}

/// `t_d = tau sum n O_n / sum O_n` over `n = 1..=n_cut`, with `n_cut` the
/// first stroboscopic index where the order parameter is non-positive unless
/// overridden.
pub fn decay_time(record: &TrajectoryRecord, n_cut_override: Option<u64>) -> Result<DecayTime> {
    let n_cut = match n_cut_override {
        Some(n) => n,
        None => {
            let i = record.values.iter().position(|&v| v <= 0.0).ok_or(Error::NoCrossing)?;
            record.times[i]
        }
    };
    let mut a = 0.0;
    let mut b = 0.0;
    let mut used = Vec::new();
    for (i, (&n, &v)) in record.times.iter().zip(&record.values).enumerate() {
        if n >= 1 && n <= n_cut {
            a += v;
            b += n as f64 * v;
            used.push(i);
        }
    }
    if a == 0.0 {
        return Err(Error::InvalidParams("decay-time weights sum to zero".into()));
    }
    let ratio = b / a;
    let error = record.errors.as_ref().map(|e| {
        let var: f64 = used
            .iter()
            .map(|&i| ((record.times[i] as f64 - ratio) / a * e[i]).powi(2))
            .sum();
        record.meta.params.tau * var.sqrt()
    });
    Ok(DecayTime { t_d: record.meta.params.tau * ratio, error, n_cut })
}

/// First point where `y1 - y2` changes sign on the common grid `xs`, by
/// linear interpolation; `None` if the curves never cross.
pub fn crossing_point(xs: &[f64], y1: &[f64], y2: &[f64]) -> Result<Option<f64>> {
    if xs.len() != y1.len() || xs.len() != y2.len() {
        return Err(Error::GridMismatch);
    }
    let d: Vec<f64> = y1.iter().zip(y2).map(|(a, b)| a - b).collect();
    for j in 0..d.len() {
        if d[j] == 0.0 {
            return Ok(Some(xs[j]));
        }
        if j + 1 < d.len() && (d[j] < 0.0) != (d[j + 1] < 0.0) && d[j + 1] != 0.0 {
            let frac = d[j] / (d[j] - d[j + 1]);
            return Ok(Some(xs[j] + frac * (xs[j + 1] - xs[j])));
        }
    }
    Ok(None)
}

/// Crossing between each adjacent pair of labelled curves, e.g. successive
/// spin values. Returns `(label_a, label_b, crossing)`.
pub fn crossing_points(xs: &[f64], curves: &[(f64, Vec<f64>)]) -> Result<Vec<(f64, f64, Option<f64>)>> {
    curves
        .windows(2)
        .map(|w| Ok((w[0].0, w[1].0, crossing_point(xs, &w[0].1, &w[1].1)?)))
        .collect()
}
