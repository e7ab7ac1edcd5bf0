//! Guessing-based decoding with abandonment for discrete memoryless channels.
//!
//! The decoder ranks every sequence of the codebook's composition class by
//! its empirical conditional entropy given the channel output, queries them
//! in that order for codebook membership, and gives up after a fixed guess
//! budget. This crate provides:
//!
//! - [`mot`]: exact type, joint-type and shell counting plus information measures,
//! - [`ranking`]: the rank functions `G` and `Ĝ` and the competitor probability `Ψ`,
//! - [`channel_info`]: capacity, dispersion and Gaussian tail helpers,
//! - [`exponents`]: random-coding, sphere-packing, abandonment and strong-converse exponents,
//! - [`asymptotics`]: first/second-order regions and finite-n rate schedules,
//! - [`simulator`]: Monte Carlo estimation of the ensemble error probability.
//!
//! All information quantities are in nats.

pub mod asymptotics;
pub mod bignum;
pub mod channel_info;
mod error;
pub mod exponents;
pub mod mot;
pub mod ranking;
pub mod simulator;

pub use asymptotics::{FirstOrderRegion, RateSchedule, SecondOrderRegion};
pub use channel_info::{CapacityResult, DispersionResult};
pub use error::{Error, Result};
pub use exponents::{ExponentPoint, SolverConfig};
pub use mot::{Channel, JointType, NType, Pmf, Sequence};
pub use ranking::{PsiValue, RankResult, RankScope};
pub use simulator::{EnsembleSpec, MCEstimate};
