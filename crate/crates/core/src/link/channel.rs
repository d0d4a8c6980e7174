use std::path::Path;

use serde::Deserialize;

use crate::dsp::{complex_gaussian, C64, ZERO};
use crate::error::{Error, Result};
use crate::precoder::WaveformConfig;

/// Tap powers of a tapped-delay-line channel on the sample grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelProfile {
    /// Mean power per tap delay `0..=L`, summing to one.
    powers: Vec<f64>,
}

#[derive(Deserialize)]
struct ProfileFile {
    taps: Vec<[f64; 2]>,
}

impl ChannelProfile {
    /// Profile from `(delay in samples, linear power)` pairs; powers are normalized.
    pub fn from_delays(taps: &[(usize, f64)]) -> Result<Self> {
        let len = taps.iter().map(|t| t.0).max().ok_or_else(|| Error::InvalidConfig("empty channel profile".into()))? + 1;
        let mut powers = vec![0.0; len];
        for &(d, p) in taps {
            if !(p.is_finite() && p >= 0.0) {
                return Err(Error::InvalidConfig(format!("tap power {p} is not a nonnegative number")));
            }
            powers[d] += p;
        }
        let total: f64 = powers.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidConfig("channel profile has zero power".into()));
        }
        powers.iter_mut().for_each(|p| *p /= total);
        Ok(Self { powers })
    }

    /// Exponential power-delay profile with `order + 1` taps decaying `decay_db` per tap.
    pub fn exponential(order: usize, decay_db: f64) -> Self {
        let taps: Vec<(usize, f64)> = (0..=order).map(|l| (l, 10f64.powf(-decay_db * l as f64 / 10.0))).collect();
        Self::from_delays(&taps).expect("exponential profile is valid")
    }

    /// Single unit tap.
    pub fn flat() -> Self {
        Self { powers: vec![1.0] }
    }

    /// Reads a TOML file `taps = [[delay_ns, power_db], ...]` and rounds delays to the
    /// nearest sample at `sample_rate_hz`.
    pub fn from_file(path: &Path, sample_rate_hz: f64) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let f: ProfileFile = toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::from_ns_db(&f.taps, sample_rate_hz)
    }

    pub fn from_ns_db(taps: &[[f64; 2]], sample_rate_hz: f64) -> Result<Self> {
        let mut v = Vec::with_capacity(taps.len());
        for t in taps {
            if !(t[0].is_finite() && t[0] >= 0.0) {
                return Err(Error::InvalidConfig(format!("negative or invalid tap delay {}", t[0])));
            }
            v.push(((t[0] * 1e-9 * sample_rate_hz).round() as usize, 10f64.powf(t[1] / 10.0)));
        }
        Self::from_delays(&v)
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    /// Channel order `L`.
    pub fn order(&self) -> usize {
        self.powers.len() - 1
    }

    /// Draws independent Rayleigh taps with the profile's mean powers.
    pub fn draw<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Vec<C64> {
        self.powers.iter().map(|&p| if p > 0.0 { complex_gaussian(rng, p) } else { ZERO }).collect()
    }
}

/// FIR channel taps `h[0..=L]` and per-sample noise variance.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel {
    pub taps: Vec<C64>,
    pub noise_var: f64,
}

impl ChannelModel {
    pub fn new(taps: Vec<C64>, noise_var: f64) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::InvalidArgument("channel needs at least one tap".into()));
        }
        if !(noise_var.is_finite() && noise_var >= 0.0) {
            return Err(Error::InvalidArgument(format!("noise variance {noise_var}")));
        }
        Ok(Self { taps, noise_var })
    }

    pub fn order(&self) -> usize {
        self.taps.len() - 1
    }
}

/// Causal linear convolution truncated to the input length.
pub(crate) fn convolve_into(out: &mut [C64], x: &[C64], h: &[C64]) {
    for (n, &xn) in x.iter().enumerate() {
        if xn == ZERO {
            continue;
        }
        for (l, &hl) in h.iter().enumerate() {
            if let Some(o) = out.get_mut(n + l) {
                *o += hl * xn;
            } else {
                break;
            }
        }
    }
}

/// `y[n] = sum_l h[l] x[n - l] + z[n]` with `z ~ CN(0, N0)`.
pub fn channel_apply<R: rand::Rng + ?Sized>(stream: &[C64], ch: &ChannelModel, rng: &mut R) -> Vec<C64> {
    let mut y = vec![ZERO; stream.len()];
    convolve_into(&mut y, stream, &ch.taps);
    if ch.noise_var > 0.0 {
        y.iter_mut().for_each(|v| *v += complex_gaussian(rng, ch.noise_var));
    }
    y
}

/// Noise-free block-fading convolution: input block `b` passes through `taps[b]`; its
/// delay spread spills into the following block.
pub fn apply_block_fading(stream: &[C64], block_len: usize, taps: &[Vec<C64>]) -> Result<Vec<C64>> {
    if block_len == 0 || stream.len() != block_len * taps.len() {
        return Err(Error::InvalidDimension(format!(
            "stream length {} != {} blocks of {block_len}",
            stream.len(),
            taps.len()
        )));
    }
    let mut y = vec![ZERO; stream.len()];
    for (b, h) in taps.iter().enumerate() {
        let start = b * block_len;
        convolve_into(&mut y[start..], &stream[start..start + block_len], h);
    }
    Ok(y)
}

/// `H_i = sum_l h[l] exp(-j 2 pi (eta + i) l / N)` on the occupied subcarriers.
pub fn channel_frequency_response(taps: &[C64], cfg: &WaveformConfig) -> Vec<C64> {
    let n = cfg.fft_size;
    cfg.occupied_subcarriers()
        .map(|bin| {
            taps.iter()
                .enumerate()
                .map(|(l, &h)| h * C64::from_polar(1.0, -2.0 * std::f64::consts::PI * ((bin * l) % n) as f64 / n as f64))
                .sum()
        })
        .collect()
}
