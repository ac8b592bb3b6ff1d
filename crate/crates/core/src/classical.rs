//! Classical angular momenta of length 1/2 under the same periodic kicks.
//!
//! Between kicks each momentum precesses as `dm/dt = g x m` with
//! `g = (-2h, 0, -4J m^z)`; the kick rotates `m_i` about `x` by
//! `phi - (K/N) sum_{j != i} m^x_j`.

use crate::error::{Error, Result};
use crate::params::{ModelParams, RecordMeta, TrajectoryRecord};

pub const DEFAULT_STEPS_PER_PERIOD: usize = 1000;

/// Tolerated drift of any `|m_j|` away from 1/2.
pub const NORM_TOLERANCE: f64 = 1e-8;

pub const MOMENTUM_LENGTH: f64 = 0.5;

pub type Momentum = [f64; 3];

#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalConfiguration {
    pub momenta: Vec<Momentum>,
}

fn velocity(params: &ModelParams, m: &Momentum) -> Momentum {
    let (gx, gz) = (-2.0 * params.h, -4.0 * params.j * m[2]);
    // g x m with g_y = 0.
    [-gz * m[1], gz * m[0] - gx * m[2], gx * m[1]]
}

impl ClassicalConfiguration {
    /// Every momentum along `+z`.
    pub fn fully_up(n_sites: usize) -> Self {
        Self { momenta: vec![[0.0, 0.0, MOMENTUM_LENGTH]; n_sites] }
    }

    pub fn free_step(&mut self, params: &ModelParams, dt: f64) {
        let add = |m: &Momentum, d: &Momentum, t: f64| [m[0] + t * d[0], m[1] + t * d[1], m[2] + t * d[2]];
        for m in &mut self.momenta {
            let k1 = velocity(params, m);
            let k2 = velocity(params, &add(m, &k1, dt / 2.0));
            let k3 = velocity(params, &add(m, &k2, dt / 2.0));
            let k4 = velocity(params, &add(m, &k3, dt));
            for c in 0..3 {
                m[c] += dt / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
            }
        }
    }

    pub fn kick(&mut self, params: &ModelParams) {
        let n = self.momenta.len() as f64;
        let total: f64 = self.momenta.iter().map(|m| m[0]).sum();
        for m in &mut self.momenta {
            let theta = params.phi - params.k / n * (total - m[0]);
            let (sin, cos) = theta.sin_cos();
            let (y, z) = (m[1], m[2]);
            m[1] = cos * y - sin * z;
            m[2] = sin * y + cos * z;
        }
    }

    pub fn period(&mut self, params: &ModelParams, steps: usize) {
        self.kick(params);
        let dt = params.tau / steps as f64;
        for _ in 0..steps {
            self.free_step(params, dt);
        }
    }

    /// `(1/N) sum_j m^z_j`.
    pub fn mean_z(&self) -> f64 {
        self.momenta.iter().map(|m| m[2]).sum::<f64>() / self.momenta.len() as f64
    }

    pub fn max_length_drift(&self) -> f64 {
        self.momenta
            .iter()
            .map(|m| ((m[0] * m[0] + m[1] * m[1] + m[2] * m[2]).sqrt() - MOMENTUM_LENGTH).abs())
            .fold(0.0, f64::max)
    }
}

/// `(-1)^n (1/N) sum_j m^z_j / (1/2)` from the fully polarized start, so
/// the series begins at 1.
pub fn classical_trajectory(params: &ModelParams, n_max: usize, steps: usize) -> Result<TrajectoryRecord> {
    params.validate()?;
    if steps == 0 {
        return Err(Error::InvalidParams("need at least one integration step per period".into()));
    }
    let mut cfg = ClassicalConfiguration::fully_up(params.n_sites);
    let mut values = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let drift = cfg.max_length_drift();
        if drift > NORM_TOLERANCE {
            return Err(Error::NormDrift { period: n, drift });
        }
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        values.push(sign * cfg.mean_z() / MOMENTUM_LENGTH);
        if n < n_max {
            cfg.period(params, steps);
        }
    }
    let meta = RecordMeta { engine: "classical".into(), params: *params, seed: None };
    TrajectoryRecord::consecutive(values, None, meta)
}
