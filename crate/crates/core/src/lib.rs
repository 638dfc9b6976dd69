//! Monte Carlo engine for block diagonalization (BD) and zero forcing (ZF)
//! precoding on the multi-antenna broadcast channel with finite-rate
//! channel feedback.
//!
//! The numeric core is generic over the floating point type through
//! [`Real`]; the `*64` aliases below fix it to `f64`, which is what the
//! simulation harness runs on.

pub mod channel;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod precoding;
pub mod rate;
pub mod rng;
pub mod scalar;
pub mod scalar_quant;
pub mod scaling;

pub use error::{Error, Result};
pub use scalar::Real;

pub type CMatrix64 = linalg::CMatrix<f64>;
pub type SubspacePoint64 = geometry::SubspacePoint<f64>;
pub type Codebook64 = geometry::Codebook<f64>;
pub type ChannelMatrix64 = channel::ChannelMatrix<f64>;
pub type ChannelFactorization64 = channel::ChannelFactorization<f64>;
pub type PrecoderSet64 = precoding::PrecoderSet<f64>;
pub type RateSample64 = rate::RateSample<f64>;
pub type ScalarCodec64 = scalar_quant::ScalarCodec;

pub type CMatrix32 = linalg::CMatrix<f32>;
pub type SubspacePoint32 = geometry::SubspacePoint<f32>;
pub type ChannelMatrix32 = channel::ChannelMatrix<f32>;
