//! Brute-force Floquet evolution on the full tensor-product space.
//!
//! Used only to certify the symmetric-sector engine on tiny systems, so the
//! operators are assembled from single-site matrices here without touching
//! [`crate::fock`]. Local states are ordered from `m = l` down to `m = -l`
//! (for the Pauli model: up, then down), and site 0 is the least significant
//! digit of the product-state index.

use faer::Mat;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg;
use crate::params::{order_parameter, ModelParams, RecordMeta, TrajectoryRecord};

/// Largest full Hilbert-space dimension the oracle accepts.
pub const ORACLE_DIM_CAP: usize = 4096;

#[derive(Clone, Debug)]
pub struct FullState {
    pub amplitudes: Vec<C64>,
}

/// Dense one-period propagator on the product space.
#[derive(Clone, Debug)]
pub struct FullFloquet {
    params: ModelParams,
    unitary: Mat<C64>,
    sz: Vec<f64>,
    n_sites: usize,
    local_dim: usize,
}

fn checked_dim(local_dim: usize, sites: usize) -> Result<usize> {
    let mut dim: usize = 1;
    for _ in 0..sites {
        dim = dim.saturating_mul(local_dim);
        if dim > ORACLE_DIM_CAP {
            return Err(Error::DimensionTooLarge { dim: dim as u128, cap: ORACLE_DIM_CAP });
        }
    }
    Ok(dim)
}

/// Embeds a single-site operator acting on `site` into the product space.
fn embed(local: &Mat<f64>, site: usize, sites: usize, d: usize) -> Mat<f64> {
    let dim = d.pow(sites as u32);
    let stride = d.pow(site as u32);
    let mut out = Mat::<f64>::zeros(dim, dim);
    for col in 0..dim {
        let a = (col / stride) % d;
        let base = col - a * stride;
        for b in 0..d {
            let v = local[(b, a)];
            if v != 0.0 {
                out[(base + b * stride, col)] += v;
            }
        }
    }
    out
}

fn add_scaled(acc: &mut Mat<f64>, x: &Mat<f64>, c: f64) {
    for j in 0..acc.ncols() {
        for i in 0..acc.nrows() {
            acc[(i, j)] += c * x[(i, j)];
        }
    }
}

/// Spin-`l` matrices `(s^x, s^z)` in the `m = l, ..., -l` ordering.
fn spin_matrices(twice_l: u32) -> (Mat<f64>, Mat<f64>) {
    let d = twice_l as usize + 1;
    let l = f64::from(twice_l) / 2.0;
    let m_of = |a: usize| l - a as f64;
    let sz = Mat::from_fn(d, d, |i, j| if i == j { m_of(i) } else { 0.0 });
    let mut sx = Mat::<f64>::zeros(d, d);
    for a in 1..d {
        // s^+ |m> = sqrt(l(l+1) - m(m+1)) |m+1>; state a-1 has m+1.
        let m = m_of(a);
        let amp = (l * (l + 1.0) - m * (m + 1.0)).sqrt();
        sx[(a - 1, a)] = 0.5 * amp;
        sx[(a, a - 1)] = 0.5 * amp;
    }
    (sx, sz)
}

fn propagator(free: &Mat<f64>, kick: &Mat<f64>, tau: f64) -> Result<Mat<C64>> {
    let ef = linalg::sym_eigen(free.as_ref())?;
    let ek = linalg::sym_eigen(kick.as_ref())?;
    let uf = ef.apply_function(|e| C64::from_polar(1.0, -e * tau));
    let uk = ek.apply_function(|g| C64::from_polar(1.0, -g));
    Ok(&uf * &uk)
}

fn diagonal(m: &Mat<f64>) -> Vec<f64> {
    (0..m.nrows()).map(|i| m[(i, i)]).collect()
}

impl FullFloquet {
    /// Spins of magnitude `l` on every site:
    /// `H = sum_j [-(J/l)(s^z_j)^2 - 2h s^x_j]`, kick
    /// `phi S^x - K/(2Nl) (S^x)^2` with `S^x = sum_j s^x_j`.
    pub fn spin_model(params: &ModelParams) -> Result<Self> {
        params.validate()?;
        let n = params.n_sites;
        let d = params.spin.modes();
        let dim = checked_dim(d, n)?;
        let l = params.l();
        let (sx, sz) = spin_matrices(params.spin.twice());
        let sz2 = &sz * &sz;

        let mut free = Mat::<f64>::zeros(dim, dim);
        let mut total_sx = Mat::<f64>::zeros(dim, dim);
        let mut total_sz = Mat::<f64>::zeros(dim, dim);
        for site in 0..n {
            add_scaled(&mut free, &embed(&sz2, site, n, d), -params.j / l);
            let sxj = embed(&sx, site, n, d);
            add_scaled(&mut free, &sxj, -2.0 * params.h);
            add_scaled(&mut total_sx, &sxj, 1.0);
            add_scaled(&mut total_sz, &embed(&sz, site, n, d), 1.0);
        }
        let sx2 = &total_sx * &total_sx;
        let mut kick = Mat::<f64>::zeros(dim, dim);
        add_scaled(&mut kick, &total_sx, params.phi);
        add_scaled(&mut kick, &sx2, -params.k / (2.0 * n as f64 * l));

        Ok(Self {
            params: *params,
            unitary: propagator(&free, &kick, params.tau)?,
            sz: diagonal(&total_sz),
            n_sites: n,
            local_dim: d,
        })
    }

    /// Each site is a group of `2l` Pauli spins:
    /// `H = sum_i [-(J/4l) sum_{m,m'} s^z_im s^z_im' - h sum_m s^x_im]`, kick
    /// `phi/2 sum s^x - K/(16Nl) sum_{i != j} sum_{m,m'} s^x_im s^x_jm'`,
    /// with `S^z = (1/2) sum s^z`.
    pub fn pauli_model(params: &ModelParams) -> Result<Self> {
        params.validate()?;
        let n = params.n_sites;
        let group = params.spin.twice() as usize;
        let qubits = n * group;
        let dim = checked_dim(2, qubits)?;
        let l = params.l();
        let px = Mat::from_fn(2, 2, |i, j| if i != j { 1.0 } else { 0.0 });
        let pz = Mat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => 1.0,
            (1, 1) => -1.0,
            _ => 0.0,
        });

        let mut free = Mat::<f64>::zeros(dim, dim);
        let mut total_x = Mat::<f64>::zeros(dim, dim);
        let mut site_x_sq = Mat::<f64>::zeros(dim, dim);
        let mut total_z = Mat::<f64>::zeros(dim, dim);
        for site in 0..n {
            let mut zsum = Mat::<f64>::zeros(dim, dim);
            let mut xsum = Mat::<f64>::zeros(dim, dim);
            for m in 0..group {
                let q = site * group + m;
                add_scaled(&mut zsum, &embed(&pz, q, qubits, 2), 1.0);
                add_scaled(&mut xsum, &embed(&px, q, qubits, 2), 1.0);
            }
            add_scaled(&mut free, &(&zsum * &zsum), -params.j / (4.0 * l));
            add_scaled(&mut free, &xsum, -params.h);
            add_scaled(&mut site_x_sq, &(&xsum * &xsum), 1.0);
            add_scaled(&mut total_x, &xsum, 1.0);
            add_scaled(&mut total_z, &zsum, 0.5);
        }
        let coupling = &total_x * &total_x;
        let mut kick = Mat::<f64>::zeros(dim, dim);
        add_scaled(&mut kick, &total_x, 0.5 * params.phi);
        let c = -params.k / (16.0 * n as f64 * l);
        add_scaled(&mut kick, &coupling, c);
        add_scaled(&mut kick, &site_x_sq, -c);

        Ok(Self {
            params: *params,
            unitary: propagator(&free, &kick, params.tau)?,
            sz: diagonal(&total_z),
            n_sites: n,
            local_dim: 2,
        })
    }

    pub fn dim(&self) -> usize {
        self.sz.len()
    }

    pub fn unitary(&self) -> &Mat<C64> {
        &self.unitary
    }

    /// Product state with every local spin at its maximal projection.
    pub fn fully_up(&self) -> FullState {
        let mut amplitudes = vec![C64::new(0.0, 0.0); self.dim()];
        amplitudes[0] = C64::new(1.0, 0.0);
        FullState { amplitudes }
    }

    pub fn step(&self, state: &FullState) -> FullState {
        FullState { amplitudes: linalg::complex_matvec(self.unitary.as_ref(), &state.amplitudes) }
    }

    pub fn sz_expectation(&self, state: &FullState) -> f64 {
        state.amplitudes.iter().zip(&self.sz).map(|(a, s)| a.norm_sqr() * s).sum()
    }

    /// `||P_sym psi||^2`, where `P_sym` averages over all permutations of the
    /// sites. Equals 1 exactly for permutation-symmetric states.
    pub fn symmetric_weight(&self, state: &FullState) -> f64 {
        let sites = self.n_sites;
        let d = self.local_dim;
        let mut perms = Vec::new();
        permutations(&mut (0..sites).collect(), 0, &mut perms);
        let dim = self.dim();
        let mut sym = vec![C64::new(0.0, 0.0); dim];
        let mut digits = vec![0usize; sites];
        for (idx, amp) in state.amplitudes.iter().enumerate() {
            let mut r = idx;
            for dgt in digits.iter_mut() {
                *dgt = r % d;
                r /= d;
            }
            for p in &perms {
                let mut target = 0usize;
                for s in (0..sites).rev() {
                    target = target * d + digits[p[s]];
                }
                sym[target] += amp / perms.len() as f64;
            }
        }
        linalg::norm_sqr(&sym)
    }

    pub fn evolve(&self, n_max: usize) -> Result<TrajectoryRecord> {
        let mut state = self.fully_up();
        let mut values = Vec::with_capacity(n_max + 1);
        for n in 0..=n_max {
            let drift = (linalg::norm_sqr(&state.amplitudes) - 1.0).abs();
            if drift > 1e-10 {
                return Err(Error::NormDrift { period: n, drift });
            }
            values.push(order_parameter(n as u64, self.sz_expectation(&state), self.n_sites));
            if n < n_max {
                state = self.step(&state);
            }
        }
        let meta = RecordMeta { engine: "oracle".into(), params: self.params, seed: None };
        TrajectoryRecord::consecutive(values, None, meta)
    }
}

fn permutations(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == items.len() {
        out.push(items.clone());
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permutations(items, k + 1, out);
        items.swap(k, i);
    }
}

/// Full product-space evolution of the spin-`l` model from `|l, ..., l>`.
pub fn full_floquet_evolve(params: &ModelParams, n_max: usize) -> Result<TrajectoryRecord> {
    FullFloquet::spin_model(params)?.evolve(n_max)
}

/// Same for the grouped Pauli representation from all spins up.
pub fn full_floquet_evolve_pauli(params: &ModelParams, n_max: usize) -> Result<TrajectoryRecord> {
    FullFloquet::pauli_model(params)?.evolve(n_max)
}
