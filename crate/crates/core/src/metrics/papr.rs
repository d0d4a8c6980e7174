use serde::{Deserialize, Serialize};

use crate::dsp::C64;
use crate::error::{Error, Result};
use crate::link::{add_guard, ofdm_symbol};
use crate::precoder::WaveformConfig;

/// One point of the complementary CDF `Pr{PAPR > threshold}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CcdfPoint {
    pub threshold_db: f64,
    pub probability: f64,
}

/// `max |x|^2 / mean |x|^2` of one block (linear).
pub fn papr(block: &[C64]) -> Result<f64> {
    if block.is_empty() {
        return Err(Error::InvalidArgument("empty block".into()));
    }
    let peak = block.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
    let mean = block.iter().map(|v| v.norm_sqr()).sum::<f64>() / block.len() as f64;
    if mean == 0.0 {
        return Err(Error::InvalidArgument("all-zero block".into()));
    }
    Ok(peak / mean)
}

/// Guard-extended block oversampled `factor` times by spectral zero padding.
pub fn oversampled_block(s: &[C64], cfg: &WaveformConfig, factor: usize) -> Result<Vec<C64>> {
    Ok(add_guard(&ofdm_symbol(s, cfg, factor)?, cfg, factor))
}

/// Per-block PAPR in dB.
pub fn papr_db_values(blocks: &[Vec<C64>]) -> Result<Vec<f64>> {
    if blocks.is_empty() {
        return Err(Error::InvalidArgument("no blocks".into()));
    }
    blocks.iter().map(|b| papr(b).map(|v| 10.0 * v.log10())).collect()
}

/// Empirical CCDF of per-block PAPR values (dB) at the given thresholds.
pub fn ccdf(papr_db: &[f64], thresholds_db: &[f64]) -> Result<Vec<CcdfPoint>> {
    if papr_db.is_empty() {
        return Err(Error::InvalidArgument("no PAPR samples".into()));
    }
    let mut sorted = papr_db.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    Ok(thresholds_db
        .iter()
        .map(|&t| {
            let below = sorted.partition_point(|v| *v <= t);
            CcdfPoint { threshold_db: t, probability: (sorted.len() - below) as f64 / n }
        })
        .collect())
}

/// Empirical CCDF of oversampled blocks.
pub fn papr_ccdf(blocks: &[Vec<C64>], thresholds_db: &[f64]) -> Result<Vec<CcdfPoint>> {
    ccdf(&papr_db_values(blocks)?, thresholds_db)
}

/// Smallest PAPR (dB) exceeded with probability at most `prob`.
pub fn papr_at_ccdf(papr_db: &[f64], prob: f64) -> Result<f64> {
    if papr_db.is_empty() || !(0.0..1.0).contains(&prob) {
        return Err(Error::InvalidArgument("need samples and a probability in [0, 1)".into()));
    }
    let mut sorted = papr_db.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len();
    let exceed = (prob * n as f64).floor() as usize;
    Ok(sorted[n - 1 - exceed.min(n - 1)])
}
