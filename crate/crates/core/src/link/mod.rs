//! Block transmission chain: subcarrier mapping, OFDM modulation with guard interval,
//! PA nonlinearity, multipath channel with AWGN, guard removal and FDE.

mod channel;
mod fde;
mod pa;

pub use channel::{apply_block_fading, channel_apply, channel_frequency_response, ChannelModel, ChannelProfile};
pub use fde::{fde, Equalizer, FdeMode};
pub use pa::{pa_apply, rapp_am_am, PaKind, PaModel};

use crate::dsp::{fft_unitary, ifft_unitary, C64, ZERO};
use crate::error::{Error, Result};
use crate::precoder::{GuardInterval, WaveformConfig};

/// One transmitted block of `N + G` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSignal {
    pub samples: Vec<C64>,
    pub index: usize,
}

/// Maps precoded symbols onto subcarriers `eta .. eta + S`, applies the unitary
/// `N`-point IDFT and inserts the guard interval.
pub fn modulate(s: &[C64], cfg: &WaveformConfig, index: usize) -> Result<BlockSignal> {
    let x_n = ofdm_symbol(s, cfg, 1)?;
    Ok(BlockSignal { samples: add_guard(&x_n, cfg, 1), index })
}

/// The time-domain block without guard interval, oversampled `factor` times by
/// zero-padding the spectrum. Sample power is preserved (`factor = 1` gives `x_N`).
pub fn ofdm_symbol(s: &[C64], cfg: &WaveformConfig, factor: usize) -> Result<Vec<C64>> {
    let n = cfg.fft_size;
    if s.len() != cfg.subcarriers() {
        return Err(Error::InvalidArgument(format!("{} symbols for {} subcarriers", s.len(), cfg.subcarriers())));
    }
    if cfg.first_subcarrier + s.len() > n {
        return Err(Error::InvalidArgument("subcarriers exceed the FFT size".into()));
    }
    if factor == 0 {
        return Err(Error::InvalidArgument("oversampling factor must be positive".into()));
    }
    let len = n * factor;
    let mut buf = vec![ZERO; len];
    for (i, &v) in s.iter().enumerate() {
        let bin = cfg.first_subcarrier + i;
        // upper half of the N-point grid holds negative frequencies
        let pos = if factor > 1 && bin >= n.div_ceil(2) { len - (n - bin) } else { bin };
        buf[pos] = v;
    }
    ifft_unitary(&mut buf);
    if factor > 1 {
        let g = (factor as f64).sqrt();
        buf.iter_mut().for_each(|v| *v *= g);
    }
    Ok(buf)
}

/// Inserts the guard interval of `cfg` (scaled by the oversampling factor).
pub fn add_guard(x_n: &[C64], cfg: &WaveformConfig, factor: usize) -> Vec<C64> {
    let g = cfg.guard_len * factor;
    match cfg.guard {
        GuardInterval::Cp => {
            let mut out = Vec::with_capacity(x_n.len() + g);
            out.extend_from_slice(&x_n[x_n.len() - g..]);
            out.extend_from_slice(x_n);
            out
        }
        GuardInterval::Zp => {
            let mut out = x_n.to_vec();
            out.resize(x_n.len() + g, ZERO);
            out
        }
        GuardInterval::NoGi => x_n.to_vec(),
    }
}

/// Concatenates blocks in order.
pub fn serialize(blocks: &[BlockSignal]) -> Vec<C64> {
    blocks.iter().flat_map(|b| b.samples.iter().copied()).collect()
}

/// Removes the guard interval (CP discard or ZP overlap-add), applies the `N`-point
/// unitary DFT and extracts the occupied subcarriers.
pub fn receive_block(y: &[C64], cfg: &WaveformConfig) -> Result<Vec<C64>> {
    let n = cfg.fft_size;
    let g = cfg.guard_len;
    if y.len() != cfg.block_len() {
        return Err(Error::InvalidDimension(format!("received block length {} != {}", y.len(), cfg.block_len())));
    }
    let mut y_n = match cfg.guard {
        GuardInterval::Cp => y[g..].to_vec(),
        GuardInterval::Zp => {
            let mut v = y[..n].to_vec();
            for i in 0..g {
                v[i] += y[n + i];
            }
            v
        }
        GuardInterval::NoGi => y.to_vec(),
    };
    fft_unitary(&mut y_n);
    Ok(y_n[cfg.occupied_subcarriers()].to_vec())
}
