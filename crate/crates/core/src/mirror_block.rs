//! Floquet block in which every boson occupies a mirror-even orbital.
//!
//! `H_free` and `Sigma` are one-body operators that commute with the
//! single-site mirror `m -> -m`. They never move a boson between the even
//! orbitals `b_0`, `(b_m + b_{-m})/sqrt 2` and the odd orbitals
//! `(b_m - b_{-m})/sqrt 2`, so the number of bosons in odd orbitals is
//! conserved and the mirror-even sector splits into blocks. Level statistics of
//! the unsplit sector are a superposition; this module builds the block with
//! no odd bosons, which contains the fully polarized initial state.

use faer::Mat;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::floquet::{eigenphases, spacing_ratio, MIN_RATIO_DIM};
use crate::fock::fill;
use crate::linalg::sym_eigen;
use crate::params::{ModelParams, TwiceSpin};

/// Columns of the orthonormal map from even orbitals to the `2l+1` levels.
fn even_orbitals(spin: TwiceSpin) -> Mat<f64> {
    let levels = spin.modes();
    let count = levels.div_ceil(2);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Mat::from_fn(levels, count, |k, e| {
        // Orbital e pairs level e with its mirror image levels-1-e.
        let mirror = levels - 1 - e;
        if e == mirror {
            if k == e { 1.0 } else { 0.0 }
        } else if k == e || k == mirror {
            s
        } else {
            0.0
        }
    })
}

/// Single-particle `H_free` and `Sigma` restricted to the even orbitals.
fn single_particle(params: &ModelParams) -> (Mat<f64>, Mat<f64>) {
    let spin = params.spin;
    let levels = spin.modes();
    let mut sigma = Mat::<f64>::zeros(levels, levels);
    for k in 0..levels - 1 {
        sigma[(k, k + 1)] = spin.ladder(k);
        sigma[(k + 1, k)] = spin.ladder(k);
    }
    let l = spin.value();
    let free = Mat::from_fn(levels, levels, |i, j| {
        let diag = if i == j { -(params.j / l) * spin.m_of(i).powi(2) } else { 0.0 };
        diag - params.h * sigma[(i, j)]
    });
    let o = even_orbitals(spin);
    let project = |a: &Mat<f64>| o.transpose() * a * &o;
    (project(&free), project(&sigma))
}

/// Second quantization of a one-body matrix on the given occupation basis.
fn second_quantize(one_body: &Mat<f64>, states: &[Vec<u32>]) -> Mat<f64> {
    let index: std::collections::HashMap<&[u32], usize> =
        states.iter().enumerate().map(|(i, s)| (s.as_slice(), i)).collect();
    let n = states.len();
    let modes = one_body.nrows();
    let mut out = Mat::<f64>::zeros(n, n);
    let mut scratch = vec![0u32; modes];
    for (col, occ) in states.iter().enumerate() {
        for a in 0..modes {
            out[(col, col)] += one_body[(a, a)] * f64::from(occ[a]);
            for b in 0..modes {
                let v = one_body[(a, b)];
                if a == b || v == 0.0 || occ[b] == 0 {
                    continue;
                }
                scratch.copy_from_slice(occ);
                scratch[b] -= 1;
                scratch[a] += 1;
                let row = index[scratch.as_slice()];
                out[(row, col)] += v * (f64::from(occ[b]) * f64::from(occ[a] + 1)).sqrt();
            }
        }
    }
    out
}

/// Dense Floquet operator of the block with every boson in an even orbital.
pub fn even_orbital_floquet(params: &ModelParams) -> Result<Mat<C64>> {
    params.validate()?;
    let (free, sigma) = single_particle(params);
    let modes = free.nrows();
    let mut flat = Vec::new();
    fill(&mut vec![0u32; modes], 0, params.n_sites as u32, &mut flat);
    let states: Vec<Vec<u32>> = flat.chunks(modes).map(<[u32]>::to_vec).collect();
    let h = sym_eigen(second_quantize(&free, &states).as_ref())?;
    let s = sym_eigen(second_quantize(&sigma, &states).as_ref())?;
    let coeff = params.k / (8.0 * params.n_sites as f64 * params.l());
    let tau = params.tau;
    let phi = params.phi;
    let evolve = h.apply_function(|w| C64::from_polar(1.0, -w * tau));
    let kick = s.apply_function(|x| C64::from_polar(1.0, -(0.5 * phi * x - coeff * x * x)));
    Ok(evolve * kick)
}

/// Number of states in the even-orbital block.
pub fn even_orbital_dimension(spin: TwiceSpin, n_sites: usize) -> usize {
    let modes = spin.modes().div_ceil(2);
    // C(N + modes - 1, modes - 1)
    (1..modes).fold(1usize, |acc, k| acc * (n_sites + k) / k)
}

/// Level-spacing ratio of the even-orbital block.
pub fn even_orbital_ratio(params: &ModelParams) -> Result<f64> {
    let dim = even_orbital_dimension(params.spin, params.n_sites);
    if dim < MIN_RATIO_DIM {
        return Err(Error::SectorTooSmall { dim });
    }
    let u = even_orbital_floquet(params)?;
    Ok(spacing_ratio(&eigenphases(u.as_ref())?))
}
