//! Synthetic spectra with known level-spacing statistics, generated without
//! any code from the library.
#![allow(dead_code)]

use faer::Mat;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

/// Poisson ratio `<r> = 2 ln 2 - 1`.
pub const POISSON_R: f64 = 0.386_294_361;
/// Circular orthogonal ensemble ratio.
pub const COE_R: f64 = 0.5269;

/// Uncorrelated levels: cumulative sums of unit exponential gaps.
pub fn poisson_levels(rng: &mut impl Rng, count: usize) -> Vec<f64> {
    let mut x = 0.0;
    (0..count)
        .map(|_| {
            let g: f64 = Exp1.sample(rng);
            x += g;
            x
        })
        .collect()
}

/// Haar-random unitary from modified Gram-Schmidt on a complex Ginibre matrix.
pub fn haar_unitary(rng: &mut impl Rng, dim: usize) -> Mat<C64> {
    let mut cols: Vec<Vec<C64>> = (0..dim)
        .map(|_| {
            (0..dim)
                .map(|_| {
                    let re: f64 = StandardNormal.sample(rng);
                    let im: f64 = StandardNormal.sample(rng);
                    C64::new(re, im)
                })
                .collect()
        })
        .collect();
    for j in 0..dim {
        for k in 0..j {
            let (done, rest) = cols.split_at_mut(j);
            let q = &done[k];
            let proj: C64 = q.iter().zip(rest[0].iter()).map(|(a, b)| a.conj() * b).sum();
            for (v, a) in rest[0].iter_mut().zip(q) {
                *v -= proj * a;
            }
        }
        let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for v in &mut cols[j] {
            *v /= norm;
        }
    }
    Mat::from_fn(dim, dim, |i, j| cols[j][i])
}

/// COE member `W = U^T U` with `U` Haar-distributed.
pub fn coe_matrix(rng: &mut impl Rng, dim: usize) -> Mat<C64> {
    let u = haar_unitary(rng, dim);
    u.transpose() * &u
}
