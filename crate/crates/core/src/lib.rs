//! Simulation engines for a periodically kicked, all-to-all coupled spin
//! model and its classical limit.
//!
//! * [`fock`] and [`floquet`]: exact Floquet dynamics in the
//!   permutation-symmetric sector, level statistics.
//! * [`oracle`]: brute-force tensor-product evolution for tiny systems.
//! * [`gpe`]: the infinite-`N` mean-field (Gross-Pitaevskii) limit, Rabi and
//!   Lyapunov diagnostics.
//! * [`dtwa`]: discrete truncated Wigner Monte Carlo on the spin-1/2
//!   representation.
//! * [`classical`]: classical angular momenta, the `l -> infinity` limit.
//! * [`analysis`]: fits, periodograms, decay-time and crossing estimators.

pub mod analysis;
pub mod classical;
pub mod dtwa;
pub mod error;
pub mod floquet;
pub mod fock;
pub mod gpe;
pub mod io;
pub mod linalg;
pub mod mirror_block;
pub mod oracle;
pub mod params;

pub use error::{Error, Result};
pub use params::{order_parameter, ModelParams, RecordMeta, TrajectoryRecord, TwiceSpin};
