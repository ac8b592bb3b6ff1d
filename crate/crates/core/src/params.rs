//! Model parameters, the order parameter and the stroboscopic record type.
//!
//! Every engine follows the same kick convention: kicks fire at
//! `t = 0, tau, 2 tau, ...` and the stroboscopic sample with index `n` is the
//! state at `n tau`, immediately before the `n`-th kick. One driving cycle is
//! therefore "kick, then free evolution over `tau`", and sample 0 is the bare
//! initial state.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spin magnitude `l`, stored as the integer `2l` so half-integers are exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct TwiceSpin(u32);

impl TwiceSpin {
    pub fn new(twice_l: u32) -> Result<Self> {
        if twice_l == 0 {
            return Err(Error::InvalidParams("spin magnitude must satisfy 2l >= 1".into()));
        }
        Ok(Self(twice_l))
    }

    /// Parses a spin magnitude given as a real number (`1.5` -> `2l = 3`).
    pub fn from_spin(l: f64) -> Result<Self> {
        let twice = 2.0 * l;
        if !twice.is_finite() || (twice - twice.round()).abs() > 1e-12 || twice < 0.5 {
            return Err(Error::InvalidParams(format!("l = {l} is not a positive half-integer")));
        }
        Self::new(twice.round() as u32)
    }

    pub fn twice(self) -> u32 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 2.0
    }

    /// Number of single-site levels, `2l + 1`.
    pub fn modes(self) -> usize {
        self.0 as usize + 1
    }

    pub fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    /// Magnetic quantum number of mode `k` (`k = 0` is `m = -l`).
    pub fn m_of(self, k: usize) -> f64 {
        k as f64 - self.value()
    }

    /// Ladder coefficient `sqrt(l(l+1) - m(m+1))` connecting mode `k` to `k+1`.
    pub fn ladder(self, k: usize) -> f64 {
        let twice = self.0 as usize;
        debug_assert!(k < twice);
        (((twice - k) * (k + 1)) as f64).sqrt()
    }
}

impl TryFrom<u32> for TwiceSpin {
    type Error = Error;
    fn try_from(v: u32) -> Result<Self> {
        Self::new(v)
    }
}

impl From<TwiceSpin> for u32 {
    fn from(s: TwiceSpin) -> u32 {
        s.0
    }
}

impl fmt::Display for TwiceSpin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// Physical and driving parameters shared by every engine.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Coupling energy; sets the energy unit.
    pub j: f64,
    /// Transverse field.
    pub h: f64,
    /// Kick coupling strength.
    pub k: f64,
    /// Driving period.
    pub tau: f64,
    /// Kick rotation angle in radians.
    pub phi: f64,
    pub spin: TwiceSpin,
    pub n_sites: usize,
}

impl Default for ModelParams {
    /// `J = 1, h = 0.1, K = 0.3, tau = 0.6, phi = pi`, `l = 1`, `N = 20`.
    fn default() -> Self {
        Self { j: 1.0, h: 0.1, k: 0.3, tau: 0.6, phi: PI, spin: TwiceSpin(2), n_sites: 20 }
    }
}

impl ModelParams {
    pub fn with_spin(mut self, spin: TwiceSpin) -> Self {
        self.spin = spin;
        self
    }

    pub fn with_sites(mut self, n_sites: usize) -> Self {
        self.n_sites = n_sites;
        self
    }

    pub fn with_k(mut self, k: f64) -> Self {
        self.k = k;
        self
    }

    pub fn with_h(mut self, h: f64) -> Self {
        self.h = h;
        self
    }

    /// Kick-free, field-free drive with a perfect `pi` flip.
    pub fn trivial_flip(self) -> Self {
        Self { h: 0.0, k: 0.0, phi: PI, ..self }
    }

    pub fn l(&self) -> f64 {
        self.spin.value()
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.j, self.h, self.k, self.tau, self.phi].iter().all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidParams("non-finite parameter".into()));
        }
        if self.tau <= 0.0 {
            return Err(Error::InvalidParams(format!("tau must be positive, got {}", self.tau)));
        }
        if self.n_sites == 0 {
            return Err(Error::InvalidParams("N must be at least 1".into()));
        }
        Ok(())
    }
}

/// `(-1)^n <S^z> / N`.
pub fn order_parameter(n: u64, sz_expectation: f64, n_sites: usize) -> f64 {
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    sign * sz_expectation / n_sites as f64
}

/// Identifies the run that produced a record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordMeta {
    pub engine: String,
    pub params: ModelParams,
    pub seed: Option<u64>,
}

/// Stroboscopic series of the order parameter, optionally with one-sigma errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub times: Vec<u64>,
    pub values: Vec<f64>,
    pub errors: Option<Vec<f64>>,
    pub meta: RecordMeta,
}

impl TrajectoryRecord {
    pub fn new(
        times: Vec<u64>,
        values: Vec<f64>,
        errors: Option<Vec<f64>>,
        meta: RecordMeta,
    ) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::InvalidRecord("times and values differ in length".into()));
        }
        if let Some(e) = &errors {
            if e.len() != times.len() {
                return Err(Error::InvalidRecord("errors and times differ in length".into()));
            }
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidRecord("times must be strictly increasing".into()));
        }
        Ok(Self { times, values, errors, meta })
    }

    /// Record sampled at every period `0..values.len()`.
    pub fn consecutive(values: Vec<f64>, errors: Option<Vec<f64>>, meta: RecordMeta) -> Result<Self> {
        let times = (0..values.len() as u64).collect();
        Self::new(times, values, errors, meta)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Values divided by `l`, so a fully polarized start reads 1.
    pub fn normalized(&self) -> TrajectoryRecord {
        let l = self.meta.params.l();
        TrajectoryRecord {
            times: self.times.clone(),
            values: self.values.iter().map(|v| v / l).collect(),
            errors: self.errors.as_ref().map(|e| e.iter().map(|v| v / l).collect()),
            meta: self.meta.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn order_parameter_examples() {
        let n = 7;
        let l = 1.5;
        assert_eq!(order_parameter(0, n as f64 * l, n), l);
        assert_eq!(order_parameter(1, -(n as f64) * l, n), l);
        assert_eq!(order_parameter(3, 0.0, 13), 0.0);
    }

    #[test]
    fn twice_spin_parsing() {
        assert_eq!(TwiceSpin::from_spin(1.5).unwrap().twice(), 3);
        assert_eq!(TwiceSpin::from_spin(0.5).unwrap().modes(), 2);
        assert!(TwiceSpin::from_spin(0.7).is_err());
        assert!(TwiceSpin::new(0).is_err());
        assert_eq!(TwiceSpin::new(3).unwrap().to_string(), "3/2");
        assert_eq!(TwiceSpin::new(4).unwrap().to_string(), "2");
    }

    #[test]
    fn ladder_matches_textbook_formula() {
        for twice in 1..8u32 {
            let s = TwiceSpin::new(twice).unwrap();
            let l = s.value();
            for k in 0..twice as usize {
                let m = s.m_of(k);
                let expected = (l * (l + 1.0) - m * (m + 1.0)).sqrt();
                assert!((s.ladder(k) - expected).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn record_validation() {
        let meta = RecordMeta { engine: "t".into(), params: ModelParams::default(), seed: None };
        assert!(TrajectoryRecord::new(vec![0, 1], vec![1.0], None, meta.clone()).is_err());
        assert!(TrajectoryRecord::new(vec![1, 1], vec![1.0, 2.0], None, meta.clone()).is_err());
        assert!(TrajectoryRecord::new(vec![0, 1], vec![1.0, 2.0], Some(vec![0.0]), meta).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::default().validate().is_ok());
        assert!(ModelParams { tau: 0.0, ..Default::default() }.validate().is_err());
        assert!(ModelParams { n_sites: 0, ..Default::default() }.validate().is_err());
    }

    proptest! {
        #[test]
        fn sign_factor_has_period_two(n in 0u64..1000, s in -100.0f64..100.0, sites in 1usize..500) {
            prop_assert_eq!(order_parameter(n, s, sites), order_parameter(n + 2, s, sites));
        }

        #[test]
        fn bounded_by_l(n in 0u64..1000, frac in -1.0f64..1.0, sites in 1usize..500, twice in 1u32..12) {
            let l = f64::from(twice) / 2.0;
            let sz = frac * sites as f64 * l;
            prop_assert!(order_parameter(n, sz, sites).abs() <= l + 1e-12);
        }
    }
}
