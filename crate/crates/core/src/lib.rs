//! Nested lattice codes for Wyner-Ziv compression and compress-and-forward
//! relaying, with Monte Carlo simulators and closed-form rate oracles.
//!
//! The lattice arithmetic is generic over the scalar type ([`Scalar`] is
//! implemented for `f32` and `f64`); the `*64` aliases below are the
//! defaults used by the simulators and the command-line front end.

pub mod cli;
pub mod dither;
pub mod error;
pub mod exec;
pub mod lattice;
pub mod nested;
pub mod rates;
pub mod relay;
pub mod scalar;
pub mod wyner_ziv;

pub use dither::{derive_seed, gaussian_at, second_moment, stream_rng, DitherSource, MomentEstimate};
pub use error::{CodecError, LatticeError, RateError};
pub use lattice::{Lattice, LatticeKind};
pub use nested::{make_nested_pair, NestedPair};
pub use rates::{RateParams, RatePoint};
pub use relay::{simulate_cf, CfConfig, CfReport, PropagationMode};
pub use scalar::{CompensatedSum, Moments, Scalar};
pub use wyner_ziv::{side_info_correlation, wz_simulate, WzCodec, WzConfig, WzReport};

pub type Lattice64 = Lattice<f64>;
pub type Lattice32 = Lattice<f32>;
pub type NestedPair64 = NestedPair<f64>;
pub type NestedPair32 = NestedPair<f32>;
pub type WzCodec64 = WzCodec<f64>;
pub type WzCodec32 = WzCodec<f32>;
pub type CfCodebooks64 = relay::CfCodebooks<f64>;
pub type CfCodebooks32 = relay::CfCodebooks<f32>;
