//! Circularly pulse-shaped precoded OFDM (CPS-OFDM).
//!
//! * [`dsp`] - DFT, permutation, QAM and random-number primitives.
//! * [`precoder`] - the CPS precoder and its prototype representations.
//! * [`link`] - block transmission chain: modulation, PA, channel, reception, FDE.
//! * [`metrics`] - PSD, out-of-subband power, envelope moments, PAPR, BER, SE.
//! * [`optimizer`] - lifted VIP minimization with convex-iteration initialization.
//! * [`scenario`] - multiuser uplink cases and run artifacts.

pub mod dsp;
pub mod error;
pub mod link;
pub mod metrics;
pub mod optimizer;
pub mod precoder;
pub mod scenario;

pub use error::{Error, Result};
