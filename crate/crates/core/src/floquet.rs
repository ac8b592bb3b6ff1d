//! Exact one-period propagation in the permutation-symmetric sector.
//!
//! The Floquet operator is kept in factored form,
//! `U = V_H e^{-i E tau} W e^{-i g(sigma)} V_S^T` with `W = V_H^T V_S`, where
//! `V_H, E` diagonalize the free Hamiltonian and `V_S, sigma` the hopping
//! operator. The kick `g(sigma) = phi/2 sigma - K/(8 N l) sigma^2` is a scalar
//! function of the hopping operator and is therefore exact in its eigenbasis.
//! A dense matrix is only formed on request.

use faer::Mat;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{build_free_hamiltonian, build_hopping, EvenSector, FockBasis};
use crate::linalg::{self, SymEigen};
use crate::params::{order_parameter, ModelParams, RecordMeta, TrajectoryRecord};

/// State vectors are aborted on when their norm drifts further than this.
pub const NORM_ABORT: f64 = 1e-8;

/// Phases closer than this are treated as one level in the ratio statistic.
pub const DEGENERACY_GAP: f64 = 1e-12;

/// Smallest parity-even sector for which [`level_spacing_ratio`] is defined.
pub const MIN_RATIO_DIM: usize = 10;

#[derive(Clone, Debug)]
pub struct QuantumState {
    pub amplitudes: Vec<C64>,
}

impl QuantumState {
    /// `|l, ..., l>`, all bosons in the `m = l` level.
    pub fn fully_up(basis: &FockBasis) -> Self {
        let mut amplitudes = vec![C64::new(0.0, 0.0); basis.dim()];
        amplitudes[basis.fully_up_index()] = C64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn norm_sqr(&self) -> f64 {
        linalg::norm_sqr(&self.amplitudes)
    }

    /// `<psi| D |psi>` for a diagonal operator.
    pub fn diagonal_expectation(&self, diag: &[f64]) -> f64 {
        self.amplitudes.iter().zip(diag).map(|(a, d)| a.norm_sqr() * d).sum()
    }
}

#[derive(Clone, Debug)]
pub struct FloquetOperator {
    params: ModelParams,
    free: SymEigen,
    hopping: SymEigen,
    free_phases: Vec<C64>,
    kick_phases: Vec<C64>,
    overlap: Mat<f64>,
    sz: Vec<f64>,
}

impl FloquetOperator {
    pub fn build(basis: &FockBasis, params: &ModelParams) -> Result<Self> {
        params.validate()?;
        if basis.spin() != params.spin || basis.n_sites() != params.n_sites {
            return Err(Error::InvalidParams("basis does not match parameters".into()));
        }
        let free_op = build_free_hamiltonian(basis, params);
        let free = linalg::sym_eigen(free_op.matrix.as_ref())?;
        drop(free_op);
        let hop_op = build_hopping(basis);
        let hopping = linalg::sym_eigen(hop_op.matrix.as_ref())?;
        drop(hop_op);

        let tau = params.tau;
        let free_phases = free.values.iter().map(|&e| C64::from_polar(1.0, -e * tau)).collect();
        let kick_coeff = params.k / (8.0 * params.n_sites as f64 * params.l());
        let kick_phases = hopping
            .values
            .iter()
            .map(|&s| C64::from_polar(1.0, -(0.5 * params.phi * s - kick_coeff * s * s)))
            .collect();
        let overlap = free.vectors.transpose() * &hopping.vectors;

        let op = Self {
            params: *params,
            free,
            hopping,
            free_phases,
            kick_phases,
            overlap,
            sz: basis.sz_diagonal(),
        };
        op.probe_unitarity()?;
        Ok(op)
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.sz.len()
    }

    pub fn sz_diagonal(&self) -> &[f64] {
        &self.sz
    }

    /// One driving cycle, kick then free evolution, in occupation coordinates.
    pub fn apply(&self, psi: &[C64]) -> Vec<C64> {
        let mut a = linalg::real_transpose_times_complex(self.hopping.vectors.as_ref(), psi);
        for (x, p) in a.iter_mut().zip(&self.kick_phases) {
            *x *= p;
        }
        let mut b = linalg::real_times_complex(self.overlap.as_ref(), &a);
        for (x, p) in b.iter_mut().zip(&self.free_phases) {
            *x *= p;
        }
        linalg::real_times_complex(self.free.vectors.as_ref(), &b)
    }

    /// Dense unitary in occupation coordinates.
    pub fn dense(&self) -> Mat<C64> {
        let n = self.dim();
        let vk = self.hopping.vectors.as_ref();
        let w = self.overlap.as_ref();
        let w_cos = Mat::<f64>::from_fn(n, n, |i, k| w[(i, k)] * self.kick_phases[k].re);
        let w_sin = Mat::<f64>::from_fn(n, n, |i, k| w[(i, k)] * self.kick_phases[k].im);
        let c_re = &w_cos * vk.transpose();
        let c_im = &w_sin * vk.transpose();
        drop((w_cos, w_sin));
        let e = &self.free_phases;
        let d_re = Mat::<f64>::from_fn(n, n, |i, j| e[i].re * c_re[(i, j)] - e[i].im * c_im[(i, j)]);
        let d_im = Mat::<f64>::from_fn(n, n, |i, j| e[i].re * c_im[(i, j)] + e[i].im * c_re[(i, j)]);
        drop((c_re, c_im));
        let vf = self.free.vectors.as_ref();
        let u_re = vf * &d_re;
        let u_im = vf * &d_im;
        Mat::from_fn(n, n, |i, j| C64::new(u_re[(i, j)], u_im[(i, j)]))
    }

    /// Norm preservation on two fixed pseudo-random states; a cheap necessary
    /// condition for unitarity that avoids forming the dense matrix.
    fn probe_unitarity(&self) -> Result<()> {
        let n = self.dim();
        for seed in 1..=2u64 {
            let mut x: Vec<C64> = (0..n)
                .map(|i| {
                    let t = (i as f64 + 1.0) * 0.618_033_988_749_895 * seed as f64;
                    C64::new((t * 12.9898).sin(), (t * 78.233).cos())
                })
                .collect();
            let norm = linalg::norm_sqr(&x).sqrt();
            x.iter_mut().for_each(|z| *z /= norm);
            let drift = (linalg::norm_sqr(&self.apply(&x)) - 1.0).abs();
            if drift > 1e-10 {
                return Err(Error::NormDrift { period: 0, drift });
            }
        }
        Ok(())
    }
}

/// Stroboscopic order parameter `(-1)^n <S^z>/N` for `n = 0..=n_max`.
pub fn evolve_stroboscopic(
    u: &FloquetOperator,
    psi0: &QuantumState,
    n_max: usize,
) -> Result<TrajectoryRecord> {
    let mut values = Vec::with_capacity(n_max + 1);
    evolve_with(u, psi0, n_max, |_, v| {
        values.push(v);
        true
    })?;
    TrajectoryRecord::consecutive(values, None, meta(u))
}

/// First stroboscopic index with a non-positive order parameter, evolving
/// no further than `n_max` periods.
pub fn evolve_until_zero(
    u: &FloquetOperator,
    psi0: &QuantumState,
    n_max: usize,
) -> Result<Option<usize>> {
    let mut hit = None;
    evolve_with(u, psi0, n_max, |n, v| {
        if v <= 0.0 {
            hit = Some(n);
            false
        } else {
            true
        }
    })?;
    Ok(hit)
}

fn evolve_with(
    u: &FloquetOperator,
    psi0: &QuantumState,
    n_max: usize,
    mut visit: impl FnMut(usize, f64) -> bool,
) -> Result<()> {
    let n_sites = u.params.n_sites;
    let mut psi = psi0.amplitudes.clone();
    for n in 0..=n_max {
        let drift = (linalg::norm_sqr(&psi) - 1.0).abs();
        if drift > NORM_ABORT {
            return Err(Error::NormDrift { period: n, drift });
        }
        let sz: f64 = psi.iter().zip(&u.sz).map(|(a, d)| a.norm_sqr() * d).sum();
        if !visit(n, order_parameter(n as u64, sz, n_sites)) || n == n_max {
            break;
        }
        psi = u.apply(&psi);
    }
    Ok(())
}

fn meta(u: &FloquetOperator) -> RecordMeta {
    RecordMeta { engine: "ed".into(), params: u.params, seed: None }
}

/// Smallest index whose value is `<= 0`, or `None` if the series never
/// reaches zero.
pub fn first_zero(values: &[f64]) -> Option<usize> {
    values.iter().position(|&v| v <= 0.0)
}

/// Eigenphases `arg(z)` on `(-pi, pi]` of a unitary matrix, ascending.
pub fn eigenphases(u: faer::MatRef<'_, C64>) -> Result<Vec<f64>> {
    let mut phases: Vec<f64> = linalg::complex_eigenvalues(u)?.iter().map(|z| z.arg()).collect();
    phases.sort_by(f64::total_cmp);
    Ok(phases)
}

/// Mean of `min(g_a, g_{a+1}) / max(g_a, g_{a+1})` over consecutive gaps of
/// the sorted levels, without a wrap-around gap. Levels closer than
/// [`DEGENERACY_GAP`] are merged first.
pub fn spacing_ratio(levels: &[f64]) -> f64 {
    let mut sorted = levels.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut distinct: Vec<f64> = Vec::with_capacity(sorted.len());
    for x in sorted {
        match distinct.last() {
            Some(&prev) if x - prev < DEGENERACY_GAP => {}
            _ => distinct.push(x),
        }
    }
    let gaps: Vec<f64> = distinct.windows(2).map(|w| w[1] - w[0]).collect();
    let ratios: Vec<f64> = gaps
        .windows(2)
        .map(|g| g[0].min(g[1]) / g[0].max(g[1]))
        .collect();
    if ratios.is_empty() {
        return f64::NAN;
    }
    ratios.iter().sum::<f64>() / ratios.len() as f64
}

/// Largest entry of `U P - P U` for the mirror permutation `P`.
pub fn parity_commutator(u: faer::MatRef<'_, C64>, mirror: &[usize]) -> f64 {
    let n = mirror.len();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            worst = worst.max((u[(i, mirror[j])] - u[(mirror[i], j)]).norm());
        }
    }
    worst
}

/// Average level-spacing ratio of the Floquet spectrum restricted to the
/// mirror-even sector.
pub fn level_spacing_ratio(u: &FloquetOperator, basis: &FockBasis) -> Result<f64> {
    let dense = u.dense();
    let mirror = basis.mirror_permutation();
    let deviation = parity_commutator(dense.as_ref(), &mirror);
    if deviation > 1e-8 {
        return Err(Error::NotParitySymmetric { deviation });
    }
    let even = EvenSector::new(basis);
    if even.dim() < MIN_RATIO_DIM {
        return Err(Error::SectorTooSmall { dim: even.dim() });
    }
    let block = even.project(|i, j| dense[(i, j)]);
    drop(dense);
    Ok(spacing_ratio(&eigenphases(block.as_ref())?))
}

/// Ratio statistic of the full, unprojected Floquet spectrum.
pub fn full_spectrum_ratio(u: &FloquetOperator) -> Result<f64> {
    let dense = u.dense();
    Ok(spacing_ratio(&eigenphases(dense.as_ref())?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::build_sz;
    use crate::params::TwiceSpin;
    use std::f64::consts::PI;

    fn setup(n: usize, twice: u32, params: ModelParams) -> (FockBasis, FloquetOperator) {
        let spin = TwiceSpin::new(twice).unwrap();
        let p = params.with_spin(spin).with_sites(n);
        let basis = FockBasis::enumerate(n, spin).unwrap();
        let u = FloquetOperator::build(&basis, &p).unwrap();
        (basis, u)
    }

    #[test]
    fn dense_operator_is_unitary() {
        let (_, u) = setup(7, 2, ModelParams::default());
        assert!(linalg::unitarity_defect(u.dense().as_ref()) < 1e-10);
        let (_, u) = setup(4, 3, ModelParams { k: 2.3, h: 0.4, phi: 1.1, ..Default::default() });
        assert!(linalg::unitarity_defect(u.dense().as_ref()) < 1e-10);
    }

    #[test]
    fn dense_agrees_with_apply() {
        let (basis, u) = setup(5, 2, ModelParams::default());
        let psi = QuantumState::fully_up(&basis);
        let d = u.dense();
        let a = u.apply(&psi.amplitudes);
        let b = linalg::complex_matvec(d.as_ref(), &psi.amplitudes);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn pi_flip_inverts_magnetization() {
        let p = ModelParams { j: 0.8, ..ModelParams::default() }.trivial_flip();
        let (basis, u) = setup(6, 3, p);
        let sz = build_sz(&basis);
        // arbitrary normalized state
        let mut psi: Vec<C64> = (0..basis.dim()).map(|i| C64::new(1.0 + i as f64, 0.5 * i as f64)).collect();
        let norm = linalg::norm_sqr(&psi).sqrt();
        psi.iter_mut().for_each(|z| *z /= norm);
        let d = (0..basis.dim()).map(|i| sz.matrix[(i, i)]).collect::<Vec<_>>();
        let before = QuantumState { amplitudes: psi.clone() }.diagonal_expectation(&d);
        let after = QuantumState { amplitudes: u.apply(&psi) }.diagonal_expectation(&d);
        assert!((before + after).abs() < 1e-12, "{before} {after}");
    }

    #[test]
    fn kick_free_operator_is_free_evolution() {
        let p = ModelParams { phi: 0.0, k: 0.0, ..Default::default() };
        let (basis, u) = setup(4, 2, p);
        let h = build_free_hamiltonian(&basis, &u.params);
        let eig = linalg::sym_eigen(h.matrix.as_ref()).unwrap();
        let expected = eig.apply_function(|e| C64::from_polar(1.0, -e * p.tau));
        let got = u.dense();
        for i in 0..basis.dim() {
            for j in 0..basis.dim() {
                assert!((expected[(i, j)] - got[(i, j)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn trivial_flip_trajectory() {
        let (basis, u) = setup(9, 2, ModelParams::default().trivial_flip());
        let rec = evolve_stroboscopic(&u, &QuantumState::fully_up(&basis), 50).unwrap();
        assert!(rec.values.iter().all(|v| (v - 1.0).abs() < 1e-10));
        let rec0 = evolve_stroboscopic(&u, &QuantumState::fully_up(&basis), 0).unwrap();
        assert_eq!(rec0.values, vec![1.0]);
    }

    #[test]
    fn initial_value_is_l_for_every_size() {
        for (n, twice) in [(1, 1), (3, 2), (4, 3), (2, 5)] {
            let (basis, u) = setup(n, twice, ModelParams::default());
            let rec = evolve_stroboscopic(&u, &QuantumState::fully_up(&basis), 3).unwrap();
            assert!((rec.values[0] - f64::from(twice) / 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn magnetization_magnitude_conserved_without_field_and_coupling() {
        let p = ModelParams { h: 0.0, k: 0.0, phi: PI, ..Default::default() };
        let (basis, u) = setup(5, 3, p);
        let rec = evolve_stroboscopic(&u, &QuantumState::fully_up(&basis), 30).unwrap();
        for v in &rec.values {
            assert!((v.abs() - 1.5).abs() < 1e-10);
        }
    }

    #[test]
    fn norm_is_preserved_per_cycle() {
        let (basis, u) = setup(10, 2, ModelParams::default());
        let mut psi = QuantumState::fully_up(&basis).amplitudes;
        for _ in 0..100 {
            psi = u.apply(&psi);
            assert!((linalg::norm_sqr(&psi) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn first_zero_examples() {
        assert_eq!(first_zero(&[1.0, 0.5, -0.1, 0.3]), Some(2));
        assert_eq!(first_zero(&[1.0, 0.5, 0.1]), None);
        assert_eq!(first_zero(&[1.0, 0.0, -1.0]), Some(1));
    }

    #[test]
    fn spacing_ratio_of_picket_fence_is_one() {
        let levels: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        assert!((spacing_ratio(&levels) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_levels_are_merged() {
        let levels = [0.0, 1.0, 1.0, 3.0, 4.0];
        // distinct levels 0,1,3,4 -> gaps 1,2,1 -> ratios 0.5, 0.5
        assert!((spacing_ratio(&levels) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn small_even_sector_is_rejected() {
        let (basis, u) = setup(3, 2, ModelParams::default());
        assert!(matches!(level_spacing_ratio(&u, &basis), Err(Error::SectorTooSmall { .. })));
    }

    #[test]
    fn floquet_operator_commutes_with_mirror() {
        let (basis, u) = setup(12, 2, ModelParams { k: 2.5, ..Default::default() });
        let d = u.dense();
        let mirror = basis.mirror_permutation();
        assert!(parity_commutator(d.as_ref(), &mirror) < 1e-10);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn first_zero_is_scale_invariant(values in proptest::collection::vec(-1.0f64..1.0, 1..40), c in 0.01f64..100.0) {
                let scaled: Vec<f64> = values.iter().map(|v| v * c).collect();
                prop_assert_eq!(first_zero(&values), first_zero(&scaled));
            }
        }
    }
}
