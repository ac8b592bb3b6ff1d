//! Discrete truncated Wigner sampling of the grouped Pauli model.
//!
//! Each of the `N x 2l` Pauli spins is represented by a classical vector
//! `s` that starts at `(1, 1, 1)` or `(-1, -1, 1)` with equal probability and
//! follows `ds/dt = 2 B x s`. Between kicks spin `(i, m)` feels
//! `B = (-h, 0, -(J/2l) sum_{m'} s^z_{i,m'})`; the kick rotates it about
//! `x` by `phi - K/(4Nl) sum_{j != i} sum_{m'} s^x_{j,m'}`. The intra-site
//! sum runs over all `m'`, self term included; [`DtwaOptions::include_diagonal`]
//! can drop it.
//!
//! Spins that start at the same phase point on the same site stay equal, and
//! so do sites with the same number of `(1, 1, 1)` spins. [`GroupedConfiguration`]
//! evolves one representative per class; [`SpinConfiguration`] keeps every
//! spin and serves as a reference.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::params::{order_parameter, ModelParams, RecordMeta, TrajectoryRecord, TwiceSpin};

pub const DEFAULT_TRAJECTORIES: usize = 800;
pub const DEFAULT_STEPS_PER_PERIOD: usize = 1000;

/// Periods evolved between ensemble reductions.
const SEGMENT: usize = 256;

pub type Spin = [f64; 3];

const UP: Spin = [1.0, 1.0, 1.0];
const DOWN: Spin = [-1.0, -1.0, 1.0];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DtwaOptions {
    pub steps_per_period: usize,
    /// Keep the `m' = m` term in the intra-site field (default).
    pub include_diagonal: bool,
}

impl Default for DtwaOptions {
    fn default() -> Self {
        Self { steps_per_period: DEFAULT_STEPS_PER_PERIOD, include_diagonal: true }
    }
}

/// Independent stream for trajectory `index` of a run seeded with `seed`.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draws every spin from the two phase points, site by site.
pub fn sample_initial(n_sites: usize, spin: TwiceSpin, rng: &mut impl Rng) -> SpinConfiguration {
    let group = spin.twice() as usize;
    let spins = (0..n_sites)
        .map(|_| (0..group).map(|_| if rng.random::<bool>() { UP } else { DOWN }).collect())
        .collect();
    SpinConfiguration { spins }
}

fn precession(bz: f64, h: f64, s: &Spin) -> Spin {
    [-2.0 * bz * s[1], 2.0 * (bz * s[0] + h * s[2]), -2.0 * h * s[1]]
}

/// `(sin, cos)` that is exact when `theta` is a float multiple of `pi/2`,
/// so a bare `phi = pi` kick flips `s^z` without rounding residue.
fn quarter_exact_sin_cos(theta: f64) -> (f64, f64) {
    let q = theta / std::f64::consts::FRAC_PI_2;
    if q == q.round() && q.abs() < 1e15 && q.round() * std::f64::consts::FRAC_PI_2 == theta {
        return match (q.round() as i64).rem_euclid(4) {
            0 => (0.0, 1.0),
            1 => (1.0, 0.0),
            2 => (0.0, -1.0),
            _ => (-1.0, 0.0),
        };
    }
    theta.sin_cos()
}

fn rotate_x(s: &mut Spin, theta: f64) {
    let (sin, cos) = quarter_exact_sin_cos(theta);
    let (y, z) = (s[1], s[2]);
    s[1] = cos * y - sin * z;
    s[2] = sin * y + cos * z;
}

fn check_options(params: &ModelParams, opts: &DtwaOptions) -> Result<()> {
    params.validate()?;
    if opts.steps_per_period == 0 {
        return Err(Error::InvalidParams("need at least one integration step per period".into()));
    }
    Ok(())
}

/// Every spin of one sample, indexed `[site][m]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinConfiguration {
    pub spins: Vec<Vec<Spin>>,
}

impl SpinConfiguration {
    fn derivative(&self, params: &ModelParams, opts: &DtwaOptions) -> Vec<Vec<Spin>> {
        let scale = params.j / (2.0 * params.l());
        let own = if opts.include_diagonal { 0.0 } else { 1.0 };
        self.spins
            .iter()
            .map(|site| {
                let total: f64 = site.iter().map(|s| s[2]).sum();
                site.iter().map(|s| precession(-scale * (total - own * s[2]), params.h, s)).collect()
            })
            .collect()
    }

    fn offset(&self, k: &[Vec<Spin>], a: f64) -> Self {
        let spins = self
            .spins
            .iter()
            .zip(k)
            .map(|(site, ks)| {
                site.iter().zip(ks).map(|(s, d)| [s[0] + a * d[0], s[1] + a * d[1], s[2] + a * d[2]]).collect()
            })
            .collect();
        Self { spins }
    }

    pub fn free_step(&self, params: &ModelParams, opts: &DtwaOptions, dt: f64) -> Self {
        let k1 = self.derivative(params, opts);
        let k2 = self.offset(&k1, dt / 2.0).derivative(params, opts);
        let k3 = self.offset(&k2, dt / 2.0).derivative(params, opts);
        let k4 = self.offset(&k3, dt).derivative(params, opts);
        let mut out = self.clone();
        for (i, site) in out.spins.iter_mut().enumerate() {
            for (m, s) in site.iter_mut().enumerate() {
                for c in 0..3 {
                    s[c] += dt / 6.0 * (k1[i][m][c] + 2.0 * k2[i][m][c] + 2.0 * k3[i][m][c] + k4[i][m][c]);
                }
            }
        }
        out
    }

    pub fn kick(&self, params: &ModelParams) -> Self {
        let n = self.spins.len() as f64;
        let site_x: Vec<f64> = self.spins.iter().map(|site| site.iter().map(|s| s[0]).sum()).collect();
        let total: f64 = site_x.iter().sum();
        let c = params.k / (4.0 * n * params.l());
        let mut out = self.clone();
        for (site, x) in out.spins.iter_mut().zip(&site_x) {
            let theta = params.phi - c * (total - x);
            site.iter_mut().for_each(|s| rotate_x(s, theta));
        }
        out
    }

    pub fn period(&self, params: &ModelParams, opts: &DtwaOptions) -> Self {
        let dt = params.tau / opts.steps_per_period as f64;
        let mut cur = self.kick(params);
        for _ in 0..opts.steps_per_period {
            cur = cur.free_step(params, opts, dt);
        }
        cur
    }

    /// `(1/2) sum_{j,m} s^z_{j,m}`.
    pub fn sz(&self) -> f64 {
        0.5 * self.spins.iter().flatten().map(|s| s[2]).sum::<f64>()
    }

    /// Same sum restricted to a subset of sites.
    pub fn sz_of_sites(&self, sites: &[usize]) -> f64 {
        0.5 * sites.iter().flat_map(|&j| &self.spins[j]).map(|s| s[2]).sum::<f64>()
    }
}

/// Sites that share the number of spins started at `(1, 1, 1)`.
#[derive(Clone, Debug, PartialEq)]
struct SiteClass {
    up: usize,
    sites: usize,
    a: Spin,
    b: Spin,
}

/// Class-reduced sample, exact for phase-point initial states.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupedConfiguration {
    classes: Vec<SiteClass>,
    n_sites: usize,
    group: usize,
}

impl GroupedConfiguration {
    pub fn from_configuration(cfg: &SpinConfiguration) -> Result<Self> {
        let group = cfg.spins.first().map_or(0, Vec::len);
        let mut counts = vec![0usize; group + 1];
        for site in &cfg.spins {
            if site.len() != group || site.iter().any(|s| *s != UP && *s != DOWN) {
                return Err(Error::InvalidParams("grouping needs a phase-point configuration".into()));
            }
            counts[site.iter().filter(|s| **s == UP).count()] += 1;
        }
        let classes = counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(up, &sites)| SiteClass { up, sites, a: UP, b: DOWN })
            .collect();
        Ok(Self { classes, n_sites: cfg.spins.len(), group })
    }

    /// Number of distinct representatives carried.
    pub fn classes(&self) -> usize {
        self.classes.len()
    }

    fn free_step_class(c: &mut SiteClass, scale: f64, h: f64, own: f64, group: usize, dt: f64) {
        let (ka, kb) = (c.up as f64, (group - c.up) as f64);
        let deriv = |a: &Spin, b: &Spin| -> (Spin, Spin) {
            let za = -scale * ((ka - own) * a[2] + kb * b[2]);
            let zb = -scale * (ka * a[2] + (kb - own) * b[2]);
            (precession(za, h, a), precession(zb, h, b))
        };
        let add = |s: &Spin, d: &Spin, t: f64| [s[0] + t * d[0], s[1] + t * d[1], s[2] + t * d[2]];
        let (a, b) = (c.a, c.b);
        let (ka1, kb1) = deriv(&a, &b);
        let (ka2, kb2) = deriv(&add(&a, &ka1, dt / 2.0), &add(&b, &kb1, dt / 2.0));
        let (ka3, kb3) = deriv(&add(&a, &ka2, dt / 2.0), &add(&b, &kb2, dt / 2.0));
        let (ka4, kb4) = deriv(&add(&a, &ka3, dt), &add(&b, &kb3, dt));
        for i in 0..3 {
            c.a[i] += dt / 6.0 * (ka1[i] + 2.0 * ka2[i] + 2.0 * ka3[i] + ka4[i]);
            c.b[i] += dt / 6.0 * (kb1[i] + 2.0 * kb2[i] + 2.0 * kb3[i] + kb4[i]);
        }
    }

    pub fn kick(&mut self, params: &ModelParams) {
        let g = self.group as f64;
        let site_x: Vec<f64> =
            self.classes.iter().map(|c| c.up as f64 * c.a[0] + (g - c.up as f64) * c.b[0]).collect();
        let total: f64 = self.classes.iter().zip(&site_x).map(|(c, x)| c.sites as f64 * x).sum();
        let coef = params.k / (4.0 * self.n_sites as f64 * params.l());
        for (c, x) in self.classes.iter_mut().zip(&site_x) {
            let theta = params.phi - coef * (total - x);
            rotate_x(&mut c.a, theta);
            rotate_x(&mut c.b, theta);
        }
    }

    pub fn period(&mut self, params: &ModelParams, opts: &DtwaOptions) {
        self.kick(params);
        let dt = params.tau / opts.steps_per_period as f64;
        let scale = params.j / (2.0 * params.l());
        let own = if opts.include_diagonal { 0.0 } else { 1.0 };
        for c in &mut self.classes {
            for _ in 0..opts.steps_per_period {
                Self::free_step_class(c, scale, params.h, own, self.group, dt);
            }
        }
    }

    pub fn sz(&self) -> f64 {
        let g = self.group as f64;
        0.5 * self
            .classes
            .iter()
            .map(|c| c.sites as f64 * (c.up as f64 * c.a[2] + (g - c.up as f64) * c.b[2]))
            .sum::<f64>()
    }
}

/// Sum of a slice by recursive halving; the grouping depends only on length.
fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 8 {
        x.iter().sum()
    } else {
        let mid = x.len() / 2;
        pairwise_sum(&x[..mid]) + pairwise_sum(&x[mid..])
    }
}

/// Ensemble-averaged order parameter of `n_r` trajectories.
///
/// Values are `(-1)^n <S^z>/N`; errors are the sample standard deviation
/// over trajectories divided by `sqrt(n_r)`. The result depends only on
/// `seed`, never on the number of worker threads.
pub fn dtwa_order_parameter(
    params: &ModelParams,
    n_max: usize,
    n_r: usize,
    seed: u64,
    opts: &DtwaOptions,
) -> Result<TrajectoryRecord> {
    run_ensemble(params, n_max, n_r, seed, opts, false)
}

/// As [`dtwa_order_parameter`] but stops after the first period whose
/// ensemble mean is non-positive.
pub fn dtwa_until_zero(
    params: &ModelParams,
    n_max: usize,
    n_r: usize,
    seed: u64,
    opts: &DtwaOptions,
) -> Result<TrajectoryRecord> {
    run_ensemble(params, n_max, n_r, seed, opts, true)
}

fn run_ensemble(
    params: &ModelParams,
    n_max: usize,
    n_r: usize,
    seed: u64,
    opts: &DtwaOptions,
    stop_at_zero: bool,
) -> Result<TrajectoryRecord> {
    check_options(params, opts)?;
    if n_r < 2 {
        return Err(Error::InvalidParams(format!("need at least 2 trajectories, got {n_r}")));
    }
    let n_sites = params.n_sites;
    let mut ensemble: Vec<GroupedConfiguration> = (0..n_r)
        .into_par_iter()
        .map(|i| {
            let cfg = sample_initial(n_sites, params.spin, &mut trajectory_rng(seed, i as u64));
            GroupedConfiguration::from_configuration(&cfg).expect("sampled phase points")
        })
        .collect();

    let mut values = Vec::with_capacity(n_max + 1);
    let mut errors = Vec::with_capacity(n_max + 1);
    let mut n = 0usize;
    'outer: while n <= n_max {
        let len = SEGMENT.min(n_max + 1 - n);
        let start = n;
        let samples: Vec<Vec<f64>> = ensemble
            .par_iter_mut()
            .map(|cfg| {
                let mut out = Vec::with_capacity(len);
                for step in 0..len {
                    out.push(order_parameter((start + step) as u64, cfg.sz(), n_sites));
                    if start + step < n_max {
                        cfg.period(params, opts);
                    }
                }
                out
            })
            .collect();
        let nr = n_r as f64;
        for step in 0..len {
            let column: Vec<f64> = samples.iter().map(|s| s[step]).collect();
            let mean = pairwise_sum(&column) / nr;
            let dev: Vec<f64> = column.iter().map(|v| (v - mean).powi(2)).collect();
            let var = pairwise_sum(&dev) / (nr - 1.0);
            if !mean.is_finite() || !var.is_finite() {
                return Err(Error::InvalidParams(format!("non-finite ensemble average at period {}", start + step)));
            }
            values.push(mean);
            errors.push((var / nr).sqrt());
            n += 1;
            if stop_at_zero && mean <= 0.0 {
                break 'outer;
            }
        }
    }
    let meta = RecordMeta { engine: "dtwa".into(), params: *params, seed: Some(seed) };
    TrajectoryRecord::consecutive(values, Some(errors), meta)
}

/// Doubles the substep count from `start` until the ensemble means of two
/// successive resolutions agree within `tol` over `periods` periods.
pub fn converged_steps(
    params: &ModelParams,
    n_r: usize,
    seed: u64,
    opts: &DtwaOptions,
    start: usize,
    periods: usize,
    tol: f64,
) -> Result<usize> {
    let run = |steps: usize| {
        let o = DtwaOptions { steps_per_period: steps, ..*opts };
        dtwa_order_parameter(params, periods, n_r, seed, &o)
    };
    let mut steps = start.max(1);
    let mut coarse = run(steps)?;
    for _ in 0..16 {
        let fine = run(2 * steps)?;
        let dev = coarse.values.iter().zip(&fine.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if dev < tol {
            return Ok(steps);
        }
        steps *= 2;
        coarse = fine;
    }
    Err(Error::InvalidParams(format!("integration did not converge below {tol:e} by {steps} steps")))
}
