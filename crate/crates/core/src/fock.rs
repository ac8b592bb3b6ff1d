//! Permutation-symmetric sector of `N` spins of magnitude `l`, written as
//! `N` bosons distributed over the `2l + 1` single-site levels.
//!
//! Basis vectors are occupation tuples `(n_{-l}, ..., n_l)` summing to `N`,
//! listed in ascending lexicographic order with the mode index running from
//! `m = -l` to `m = l`. The fully polarized state `(0, ..., 0, N)` is therefore
//! always basis vector 0.

use std::collections::HashMap;
use std::io::{self, Write};

use faer::Mat;

use crate::error::{Error, Result};
use crate::params::{ModelParams, TwiceSpin};

/// Largest sector dimension accepted by [`FockBasis::enumerate`].
pub const DEFAULT_DIMENSION_CAP: usize = 200_000;

/// `binomial(N + 2l, 2l)`.
pub fn sector_dimension(n_sites: usize, spin: TwiceSpin) -> u128 {
    let k = spin.twice() as u128;
    let n = n_sites as u128 + k;
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

#[derive(Clone, Debug)]
pub struct FockBasis {
    spin: TwiceSpin,
    n_sites: usize,
    occupations: Vec<u32>,
    index: HashMap<Vec<u32>, usize>,
}

impl FockBasis {
    pub fn enumerate(n_sites: usize, spin: TwiceSpin) -> Result<Self> {
        Self::enumerate_with_cap(n_sites, spin, DEFAULT_DIMENSION_CAP)
    }

    pub fn enumerate_with_cap(n_sites: usize, spin: TwiceSpin, cap: usize) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::InvalidParams("N must be at least 1".into()));
        }
        let dim = sector_dimension(n_sites, spin);
        if dim > cap as u128 {
            return Err(Error::DimensionTooLarge { dim, cap });
        }
        let modes = spin.modes();
        let mut occupations = Vec::with_capacity(dim as usize * modes);
        let mut current = vec![0u32; modes];
        fill(&mut current, 0, n_sites as u32, &mut occupations);
        let index = occupations
            .chunks(modes)
            .enumerate()
            .map(|(i, v)| (v.to_vec(), i))
            .collect();
        Ok(Self { spin, n_sites, occupations, index })
    }

    pub fn spin(&self) -> TwiceSpin {
        self.spin
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn modes(&self) -> usize {
        self.spin.modes()
    }

    pub fn dim(&self) -> usize {
        self.occupations.len() / self.modes()
    }

    pub fn state(&self, i: usize) -> &[u32] {
        let m = self.modes();
        &self.occupations[i * m..(i + 1) * m]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u32]> {
        self.occupations.chunks(self.modes())
    }

    pub fn index_of(&self, occupation: &[u32]) -> Option<usize> {
        self.index.get(occupation).copied()
    }

    /// Index of `(0, ..., 0, N)`, all spins at `m = l`.
    pub fn fully_up_index(&self) -> usize {
        let mut v = vec![0u32; self.modes()];
        *v.last_mut().unwrap() = self.n_sites as u32;
        self.index_of(&v).expect("fully polarized state is always present")
    }

    /// Diagonal of `S^z = sum_m m n_m`.
    pub fn sz_diagonal(&self) -> Vec<f64> {
        self.iter()
            .map(|occ| occ.iter().enumerate().map(|(k, &n)| self.spin.m_of(k) * f64::from(n)).sum())
            .collect()
    }

    /// Basis index of the mirror image `(n_l, ..., n_{-l})` of every state.
    pub fn mirror_permutation(&self) -> Vec<usize> {
        self.iter()
            .map(|occ| {
                let rev: Vec<u32> = occ.iter().rev().copied().collect();
                self.index_of(&rev).expect("mirror image stays in the sector")
            })
            .collect()
    }
}

pub(crate) fn fill(current: &mut [u32], pos: usize, remaining: u32, out: &mut Vec<u32>) {
    if pos == current.len() - 1 {
        current[pos] = remaining;
        out.extend_from_slice(current);
        return;
    }
    for n in 0..=remaining {
        current[pos] = n;
        fill(current, pos + 1, remaining - n, out);
    }
    current[pos] = 0;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorLabel {
    FreeHamiltonian,
    Hopping,
    Sz,
    Parity,
}

impl OperatorLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            OperatorLabel::FreeHamiltonian => "H_free",
            OperatorLabel::Hopping => "hopping",
            OperatorLabel::Sz => "S_z",
            OperatorLabel::Parity => "parity",
        }
    }
}

/// Dense real matrix over a [`FockBasis`]. All operators built here are real
/// symmetric in the occupation basis.
#[derive(Clone, Debug)]
pub struct SectorOperator {
    pub label: OperatorLabel,
    pub matrix: Mat<f64>,
}

impl SectorOperator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Largest entrywise deviation from symmetry.
    pub fn asymmetry(&self) -> f64 {
        let m = &self.matrix;
        let n = self.dim();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in 0..j {
                worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
        worst
    }

    /// Text dump: a `# label=<label> dim=<n>` header followed by `n`
    /// comma-separated rows, row-major, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let n = self.dim();
        writeln!(w, "# label={} dim={}", self.label.as_str(), n)?;
        for i in 0..n {
            let row: Vec<String> =
                (0..n).map(|j| crate::io::format_float(self.matrix[(i, j)])).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Nonzero matrix elements of `sum_m c_m (b_m^dag b_{m+1} + h.c.)` as
/// `(row, column, value)` with `row < column`.
fn hopping_elements(basis: &FockBasis) -> Vec<(usize, usize, f64)> {
    let spin = basis.spin();
    let mut out = Vec::new();
    let mut scratch = vec![0u32; basis.modes()];
    for (col, occ) in basis.iter().enumerate() {
        for k in 0..spin.twice() as usize {
            // b_k^dag b_{k+1}: move one boson from level k+1 down to k.
            if occ[k + 1] == 0 {
                continue;
            }
            scratch.copy_from_slice(occ);
            scratch[k + 1] -= 1;
            scratch[k] += 1;
            let row = basis.index_of(&scratch).expect("hop stays in the sector");
            let amp = spin.ladder(k) * (f64::from(occ[k + 1]) * f64::from(occ[k] + 1)).sqrt();
            out.push((row.min(col), row.max(col), amp));
        }
    }
    out
}

/// Hopping operator `Sigma = sum_m sqrt(l(l+1) - m(m+1)) (b_m^dag b_{m+1} + h.c.)`,
/// equal to `2 S^x` inside the sector.
pub fn build_hopping(basis: &FockBasis) -> SectorOperator {
    let n = basis.dim();
    let mut matrix = Mat::<f64>::zeros(n, n);
    for (i, j, v) in hopping_elements(basis) {
        matrix[(i, j)] += v;
        matrix[(j, i)] += v;
    }
    SectorOperator { label: OperatorLabel::Hopping, matrix }
}

/// `H_free = -(J/l) sum_m m^2 n_m - h Sigma`.
pub fn build_free_hamiltonian(basis: &FockBasis, params: &ModelParams) -> SectorOperator {
    let spin = basis.spin();
    let l = spin.value();
    let mut op = build_hopping(basis);
    let n = basis.dim();
    for j in 0..n {
        for i in 0..n {
            op.matrix[(i, j)] *= -params.h;
        }
    }
    for (i, occ) in basis.iter().enumerate() {
        let diag: f64 = occ
            .iter()
            .enumerate()
            .map(|(k, &nk)| spin.m_of(k).powi(2) * f64::from(nk))
            .sum();
        op.matrix[(i, i)] += -(params.j / l) * diag;
    }
    op.label = OperatorLabel::FreeHamiltonian;
    op
}

pub fn build_sz(basis: &FockBasis) -> SectorOperator {
    let d = basis.sz_diagonal();
    let n = d.len();
    SectorOperator {
        label: OperatorLabel::Sz,
        matrix: Mat::from_fn(n, n, |i, j| if i == j { d[i] } else { 0.0 }),
    }
}

/// Mirror operator `m -> -m` as a permutation matrix.
pub fn build_parity(basis: &FockBasis) -> SectorOperator {
    let perm = basis.mirror_permutation();
    let n = perm.len();
    let mut matrix = Mat::<f64>::zeros(n, n);
    for (col, &row) in perm.iter().enumerate() {
        matrix[(row, col)] = 1.0;
    }
    SectorOperator { label: OperatorLabel::Parity, matrix }
}

/// Orthonormal basis of the mirror-even subspace.
///
/// Each column is either a mirror-symmetric basis vector or the normalized
/// sum of a basis vector and its mirror image. Columns are ordered by the
/// smaller basis index of their orbit.
#[derive(Clone, Debug)]
pub struct EvenSector {
    columns: Vec<(usize, Option<usize>)>,
    full_dim: usize,
}

impl EvenSector {
    pub fn new(basis: &FockBasis) -> Self {
        let perm = basis.mirror_permutation();
        let columns = perm
            .iter()
            .enumerate()
            .filter_map(|(i, &p)| match i.cmp(&p) {
                std::cmp::Ordering::Equal => Some((i, None)),
                std::cmp::Ordering::Less => Some((i, Some(p))),
                std::cmp::Ordering::Greater => None,
            })
            .collect();
        Self { columns, full_dim: basis.dim() }
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn full_dim(&self) -> usize {
        self.full_dim
    }

    /// `Q^T A Q` for an operator `A` given entrywise by `entry(row, col)`.
    pub fn project<T>(&self, entry: impl Fn(usize, usize) -> T) -> Mat<T>
    where
        T: Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + faer::traits::ComplexField,
    {
        let half = std::f64::consts::FRAC_1_SQRT_2;
        let d = self.dim();
        Mat::from_fn(d, d, |a, b| {
            let (i, ip) = self.columns[a];
            let (j, jp) = self.columns[b];
            match (ip, jp) {
                (None, None) => entry(i, j),
                (None, Some(jp)) => (entry(i, j) + entry(i, jp)) * half,
                (Some(ip), None) => (entry(i, j) + entry(ip, j)) * half,
                (Some(ip), Some(jp)) => {
                    (entry(i, j) + entry(i, jp) + entry(ip, j) + entry(ip, jp)) * 0.5
                }
            }
        })
    }
}
