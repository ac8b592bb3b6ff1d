//! Mean-field (Gross-Pitaevskii) dynamics of the `2l+1` mode amplitudes.
//!
//! Between kicks the amplitudes obey the linear flow `i d(beta)/dt = H1 beta`
//! with `H1 = -(J/l) diag(m^2) - h M`, where `M` is the tridiagonal hopping
//! matrix with entries `sqrt(l(l+1) - m(m+1))`. The kick multiplies by
//! `exp(-i lambda M)` with `lambda = phi/2 - (K/2l) sigma` and
//! `sigma = sum_m sqrt(..) Re(beta_m^* beta_{m+1})`. Since `sigma` is conserved
//! by the flow of `M`, this closed form is exact.

use faer::Mat;
use num_complex::Complex64 as C64;

use crate::analysis;
use crate::error::{Error, Result};
use crate::linalg::{self, SymEigen};
use crate::params::{order_parameter, ModelParams, RecordMeta, TrajectoryRecord};

/// Norm drift tolerated at period boundaries.
pub const NORM_TOLERANCE: f64 = 1e-8;

/// RK4 substeps per period unless a run asks otherwise.
pub const DEFAULT_STEPS_PER_PERIOD: usize = 1000;

/// Default amplitude `epsilon` of the perturbed start.
pub const DEFAULT_EPSILON: f64 = 0.1;

/// Minimum series length accepted by [`rabi_analysis`].
pub const MIN_RABI_SAMPLES: usize = 1 << 12;

/// Default initial separation for [`lyapunov`].
pub const DEFAULT_D0: f64 = 1e-10;

/// Mode amplitudes `beta_m`, index `k = m + l`.
#[derive(Clone, Debug, PartialEq)]
pub struct GpeState {
    pub beta: Vec<C64>,
}

impl GpeState {
    /// `beta_m = delta_{m,l}`.
    pub fn fully_up(params: &ModelParams) -> Self {
        let d = params.spin.modes();
        let mut beta = vec![C64::new(0.0, 0.0); d];
        beta[d - 1] = C64::new(1.0, 0.0);
        Self { beta }
    }

    /// `beta_m = eps delta_{m,0} + sqrt(1 - eps^2) delta_{m,l}`; integer `l` only.
    pub fn perturbed(params: &ModelParams, epsilon: f64) -> Result<Self> {
        if !params.spin.is_integer() {
            return Err(Error::InvalidParams("perturbed start needs integer l (no m = 0 level)".into()));
        }
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::InvalidParams(format!("epsilon must lie in [0, 1], got {epsilon}")));
        }
        let mut s = Self::fully_up(params);
        let d = s.beta.len();
        s.beta[d / 2] = C64::new(epsilon, 0.0);
        s.beta[d - 1] = C64::new((1.0 - epsilon * epsilon).sqrt(), 0.0);
        Ok(s)
    }

    pub fn norm_sqr(&self) -> f64 {
        linalg::norm_sqr(&self.beta)
    }

    /// `s^z = sum_m m |beta_m|^2`.
    pub fn sz(&self) -> f64 {
        let l = (self.beta.len() - 1) as f64 / 2.0;
        self.beta.iter().enumerate().map(|(k, b)| (k as f64 - l) * b.norm_sqr()).sum()
    }
}

/// How the free flow between kicks is integrated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FreeIntegrator {
    /// Classical fourth-order Runge-Kutta with a fixed number of substeps.
    Rk4 { steps_per_period: usize },
    /// `exp(-i H1 tau)` from the eigendecomposition of `H1`.
    Exact,
}

impl Default for FreeIntegrator {
    fn default() -> Self {
        FreeIntegrator::Rk4 { steps_per_period: DEFAULT_STEPS_PER_PERIOD }
    }
}

fn hopping_matrix(params: &ModelParams) -> Mat<f64> {
    let d = params.spin.modes();
    let spin = params.spin;
    Mat::from_fn(d, d, |i, j| {
        if j == i + 1 {
            spin.ladder(i)
        } else if i == j + 1 {
            spin.ladder(j)
        } else {
            0.0
        }
    })
}

fn free_matrix(params: &ModelParams) -> Mat<f64> {
    let l = params.l();
    let m = hopping_matrix(params);
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| {
        let diag = if i == j {
            let mm = params.spin.m_of(i);
            -params.j / l * mm * mm
        } else {
            0.0
        };
        diag - params.h * m[(i, j)]
    })
}

/// One-period mean-field map: kick, then free evolution over `tau`.
#[derive(Clone, Debug)]
pub struct GpeEngine {
    params: ModelParams,
    integrator: FreeIntegrator,
    hopping: SymEigen,
    ladder: Vec<f64>,
    diag: Vec<f64>,
    free_propagator: Option<Mat<C64>>,
}

impl GpeEngine {
    pub fn new(params: &ModelParams, integrator: FreeIntegrator) -> Result<Self> {
        params.validate()?;
        if let FreeIntegrator::Rk4 { steps_per_period: 0 } = integrator {
            return Err(Error::InvalidParams("RK4 needs at least one step per period".into()));
        }
        let d = params.spin.modes();
        let hopping = linalg::sym_eigen(hopping_matrix(params).as_ref())?;
        let free_propagator = match integrator {
            FreeIntegrator::Exact => {
                let eig = linalg::sym_eigen(free_matrix(params).as_ref())?;
                Some(eig.apply_function(|e| C64::from_polar(1.0, -e * params.tau)))
            }
            FreeIntegrator::Rk4 { .. } => None,
        };
        let l = params.l();
        Ok(Self {
            params: *params,
            integrator,
            hopping,
            ladder: (0..d - 1).map(|k| params.spin.ladder(k)).collect(),
            diag: (0..d)
                .map(|k| {
                    let m = params.spin.m_of(k);
                    -params.j / l * m * m
                })
                .collect(),
            free_propagator,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn integrator(&self) -> FreeIntegrator {
        self.integrator
    }

    /// `sigma = sum_k c_k Re(beta_k^* beta_{k+1})`.
    pub fn sigma(&self, s: &GpeState) -> f64 {
        self.ladder
            .iter()
            .enumerate()
            .map(|(k, c)| c * (s.beta[k].conj() * s.beta[k + 1]).re)
            .sum()
    }

    /// Closed-form kick `exp(-i lambda M)`.
    pub fn kick(&self, s: &GpeState) -> GpeState {
        let lambda = self.params.phi / 2.0 - self.params.k / (2.0 * self.params.l()) * self.sigma(s);
        let v = self.hopping.vectors.as_ref();
        let coeffs = linalg::real_transpose_times_complex(v, &s.beta);
        let rotated: Vec<C64> = coeffs
            .iter()
            .zip(&self.hopping.values)
            .map(|(c, w)| c * C64::from_polar(1.0, -lambda * w))
            .collect();
        GpeState { beta: linalg::real_times_complex(v, &rotated) }
    }

    /// `-i H1 beta`.
    fn rhs(&self, beta: &[C64]) -> Vec<C64> {
        let h = self.params.h;
        let d = beta.len();
        let mut out = Vec::with_capacity(d);
        for k in 0..d {
            let mut acc = self.diag[k] * beta[k];
            if k + 1 < d {
                acc -= h * self.ladder[k] * beta[k + 1];
            }
            if k > 0 {
                acc -= h * self.ladder[k - 1] * beta[k - 1];
            }
            out.push(C64::new(acc.im, -acc.re));
        }
        out
    }

    /// One RK4 step of the free flow.
    pub fn free_step(&self, s: &GpeState, dt: f64) -> GpeState {
        let axpy = |x: &[C64], k: &[C64], a: f64| -> Vec<C64> {
            x.iter().zip(k).map(|(x, k)| x + k * a).collect()
        };
        let b = &s.beta;
        let k1 = self.rhs(b);
        let k2 = self.rhs(&axpy(b, &k1, dt / 2.0));
        let k3 = self.rhs(&axpy(b, &k2, dt / 2.0));
        let k4 = self.rhs(&axpy(b, &k3, dt));
        let beta = (0..b.len())
            .map(|i| b[i] + (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (dt / 6.0))
            .collect();
        GpeState { beta }
    }

    /// Free evolution over one full period.
    pub fn free_period(&self, s: &GpeState) -> GpeState {
        match (&self.free_propagator, self.integrator) {
            (Some(u), _) => GpeState { beta: linalg::complex_matvec(u.as_ref(), &s.beta) },
            (None, FreeIntegrator::Rk4 { steps_per_period }) => {
                let dt = self.params.tau / steps_per_period as f64;
                let mut cur = s.clone();
                for _ in 0..steps_per_period {
                    cur = self.free_step(&cur, dt);
                }
                cur
            }
            (None, FreeIntegrator::Exact) => unreachable!("exact propagator is built in new"),
        }
    }

    pub fn step(&self, s: &GpeState) -> GpeState {
        self.free_period(&self.kick(s))
    }

    /// Stroboscopic `s^z(n tau)` for `n = 0..=n_max`.
    pub fn sz_series(&self, beta0: &GpeState, n_max: usize) -> Result<Vec<f64>> {
        self.check_dims(beta0)?;
        let mut s = beta0.clone();
        let mut out = Vec::with_capacity(n_max + 1);
        for n in 0..=n_max {
            let drift = (s.norm_sqr() - 1.0).abs();
            if drift > NORM_TOLERANCE {
                return Err(Error::NormDrift { period: n, drift });
            }
            out.push(s.sz());
            if n < n_max {
                s = self.step(&s);
            }
        }
        Ok(out)
    }

    /// Stroboscopic order parameter `(-1)^n s^z(n tau)`.
    pub fn trajectory(&self, beta0: &GpeState, n_max: usize) -> Result<TrajectoryRecord> {
        let sz = self.sz_series(beta0, n_max)?;
        let values = sz.iter().enumerate().map(|(n, s)| order_parameter(n as u64, *s, 1)).collect();
        let meta = RecordMeta { engine: "gpe".into(), params: self.params, seed: None };
        TrajectoryRecord::consecutive(values, None, meta)
    }

    fn check_dims(&self, s: &GpeState) -> Result<()> {
        if s.beta.len() != self.params.spin.modes() {
            return Err(Error::InvalidParams(format!(
                "state has {} amplitudes, expected {}",
                s.beta.len(),
                self.params.spin.modes()
            )));
        }
        Ok(())
    }
}

/// Doubles the RK4 substep count, starting at `start`, until two successive
/// resolutions agree on `s^z` to `tol` over `periods` periods. Returns the
/// coarser of the two converged counts.
pub fn converged_steps(
    params: &ModelParams,
    beta0: &GpeState,
    start: usize,
    periods: usize,
    tol: f64,
) -> Result<usize> {
    let mut steps = start.max(1);
    let run = |steps: usize| -> Result<Vec<f64>> {
        GpeEngine::new(params, FreeIntegrator::Rk4 { steps_per_period: steps })?.sz_series(beta0, periods)
    };
    let mut coarse = run(steps)?;
    for _ in 0..16 {
        let fine = run(2 * steps)?;
        let dev = coarse.iter().zip(&fine).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if dev < tol {
            return Ok(steps);
        }
        steps *= 2;
        coarse = fine;
    }
    Err(Error::InvalidParams(format!("RK4 did not converge below {tol:e} by {steps} steps")))
}

/// Rabi frequency and amplitude of a stroboscopic `s^z` series.
#[derive(Clone, Debug, PartialEq)]
pub struct RabiDiagnostics {
    /// `pi - omega_peak`, radians per period; `None` for a flat spectrum.
    pub omega_rabi: Option<f64>,
    pub omega_peak: Option<f64>,
    /// RMS deviation of `s^z` about its time mean.
    pub amplitude: f64,
    /// Periodogram over the bins `0..=L/2` of the analysed window.
    pub spectrum: Vec<f64>,
}

/// RMS deviation about the mean.
pub fn rms_deviation(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Periodogram peak analysis of the `s^z` series, truncated to the largest
/// power of two not exceeding its length.
pub fn rabi_analysis(sz: &[f64]) -> Result<RabiDiagnostics> {
    if sz.len() < MIN_RABI_SAMPLES {
        return Err(Error::SeriesTooShort { len: sz.len(), min: MIN_RABI_SAMPLES });
    }
    let len = 1usize << (usize::BITS - 1 - sz.len().leading_zeros());
    let window = &sz[..len];
    let mean = window.iter().sum::<f64>() / len as f64;
    let centered: Vec<f64> = window.iter().map(|v| v - mean).collect();
    let spectrum = analysis::periodogram(&centered);
    let amplitude = rms_deviation(window);

    let max = spectrum.iter().cloned().fold(0.0, f64::max);
    let min = spectrum[1..].iter().cloned().fold(f64::INFINITY, f64::min);
    if max - min <= 1e-12 * max.max(1.0) || max <= 1e-24 {
        return Ok(RabiDiagnostics { omega_rabi: None, omega_peak: None, amplitude, spectrum });
    }
    let last = spectrum.len() - 1;
    let j = (1..=last).max_by(|&a, &b| spectrum[a].total_cmp(&spectrum[b])).unwrap();
    // Neighbours beyond Nyquist mirror back onto the real-signal spectrum.
    let left = spectrum[j - 1];
    let right = if j == last { spectrum[j - 1] } else { spectrum[j + 1] };
    let offset = if j > 1 && left > 0.0 && right > 0.0 {
        let (a, b, c) = (left.ln(), spectrum[j].ln(), right.ln());
        let denom = a - 2.0 * b + c;
        if denom < 0.0 { (0.5 * (a - c) / denom).clamp(-0.5, 0.5) } else { 0.0 }
    } else {
        0.0
    };
    let omega_peak = (2.0 * std::f64::consts::PI * (j as f64 + offset) / len as f64)
        .min(std::f64::consts::PI);
    Ok(RabiDiagnostics {
        omega_rabi: Some(std::f64::consts::PI - omega_peak),
        omega_peak: Some(omega_peak),
        amplitude,
        spectrum,
    })
}

/// Largest Lyapunov exponent from the Benettin procedure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LyapunovResult {
    pub per_period: f64,
    pub per_time: f64,
    pub periods: usize,
}

/// Evolves `beta0` and a companion at distance `d0` for `periods` periods,
/// renormalizing the separation after every period.
pub fn lyapunov(engine: &GpeEngine, beta0: &GpeState, periods: usize, d0: f64) -> Result<LyapunovResult> {
    engine.check_dims(beta0)?;
    if periods == 0 || !(d0 > 0.0) {
        return Err(Error::InvalidParams("need periods >= 1 and d0 > 0".into()));
    }
    let d = beta0.beta.len();
    // Fixed direction over the real embedding: alternating real/imaginary weights.
    let dir: Vec<C64> = (0..d).map(|k| C64::new(1.0, if k % 2 == 0 { 0.5 } else { -0.5 })).collect();
    let dir_norm = linalg::norm_sqr(&dir).sqrt();
    let mut a = beta0.clone();
    let mut b = GpeState { beta: a.beta.iter().zip(&dir).map(|(x, u)| x + u * (d0 / dir_norm)).collect() };
    let mut total = 0.0;
    for n in 0..periods {
        a = engine.step(&a);
        b = engine.step(&b);
        let sep: Vec<C64> = b.beta.iter().zip(&a.beta).map(|(x, y)| x - y).collect();
        let dist = linalg::norm_sqr(&sep).sqrt();
        if !(1e-15..=1e-2).contains(&dist) {
            return Err(Error::Separation { period: n + 1, distance: dist });
        }
        total += (dist / d0).ln();
        let scale = d0 / dist;
        b = GpeState { beta: a.beta.iter().zip(&sep).map(|(x, s)| x + s * scale).collect() };
    }
    let per_period = total / periods as f64;
    Ok(LyapunovResult { per_period, per_time: per_period / engine.params.tau, periods })
}

/// `ln(N) / (2 lambda)`.
pub fn breakdown_time(lambda: f64, n_sites: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParams(format!("Lyapunov exponent must be positive, got {lambda}")));
    }
    if !(n_sites > 0.0) {
        return Err(Error::InvalidParams("N must be positive".into()));
    }
    Ok(n_sites.ln() / (2.0 * lambda))
}
