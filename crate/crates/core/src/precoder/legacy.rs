use serde::{Deserialize, Serialize};

use super::{GuardInterval, ShapingSet, WaveformConfig};
use crate::dsp::{C64, ZERO};
use crate::error::{Error, Result};

/// Legacy waveforms expressible as special cases of the CPS precoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum LegacyKind {
    Ofdma,
    ScFdma,
    /// Spectrally shaped SC-FDMA; `data_k` selects which of the two blocks carries data.
    SsScFdma { data_k: usize },
    ZtDftSOfdm,
}

/// Frequency-domain root-raised-cosine vector (roll-off 1) over `2 M` points,
/// scaled to energy `M`.
///
/// Point `i` sits at normalized frequency `f = (i - (2M - 1)/2) / M` and has amplitude
/// `cos(pi f / 2)`; points `i` and `i + M` are one symbol rate apart, so their squared
/// amplitudes sum to one.
pub fn rrc_shaping(m: usize) -> Vec<C64> {
    let len = 2 * m;
    let center = (len as f64 - 1.0) / 2.0;
    let raw: Vec<f64> = (0..len)
        .map(|i| {
            let f = (i as f64 - center) / m as f64;
            (std::f64::consts::FRAC_PI_2 * f).cos()
        })
        .collect();
    let energy: f64 = raw.iter().map(|v| v * v).sum();
    let scale = (m as f64 / energy).sqrt();
    raw.into_iter().map(|v| C64::new(v * scale, 0.0)).collect()
}

/// Parameterization of a legacy waveform on `s` subcarriers starting at `first`.
///
/// `guard_len` is the CP length for the CP-based kinds; for ZT DFT-S-OFDM it is the
/// nominal guard length that sets the number of tail zeros, and the block itself
/// carries no guard interval.
pub fn legacy_config(kind: LegacyKind, s: usize, fft_size: usize, first: usize, guard_len: usize) -> Result<(WaveformConfig, ShapingSet)> {
    if s == 0 {
        return Err(Error::InvalidArgument("S must be positive".into()));
    }
    match kind {
        LegacyKind::Ofdma => {
            let cfg = WaveformConfig::full(fft_size, s, 1, first, GuardInterval::Cp, guard_len)?;
            let mut p = vec![ZERO; s];
            p[0] = C64::new(1.0, 0.0);
            Ok((cfg, ShapingSet::from_shaping_vector(p, s, 1)?))
        }
        LegacyKind::ScFdma => {
            let cfg = WaveformConfig::full(fft_size, 1, s, first, GuardInterval::Cp, guard_len)?;
            Ok((cfg, ShapingSet::from_shaping_vector(vec![C64::new(1.0, 0.0); s], 1, s)?))
        }
        LegacyKind::SsScFdma { data_k } => {
            if s % 2 != 0 {
                return Err(Error::InvalidArgument(format!("SS-SC-FDMA needs an even S, got {s}")));
            }
            if data_k > 1 {
                return Err(Error::InvalidArgument("SS-SC-FDMA data block must be 0 or 1".into()));
            }
            let m = s / 2;
            let cfg = WaveformConfig::new(fft_size, 2, m, first, GuardInterval::Cp, guard_len, vec![data_k], (0..m).collect())?;
            Ok((cfg, ShapingSet::from_shaping_vector(rrc_shaping(m), 2, m)?))
        }
        LegacyKind::ZtDftSOfdm => {
            if fft_size == 0 {
                return Err(Error::InvalidArgument("FFT size must be positive".into()));
            }
            let tail = (s * guard_len).div_ceil(fft_size);
            let zeros = 1 + tail;
            if zeros >= s {
                return Err(Error::InvalidArgument(format!("S = {s} leaves no data after {zeros} zero symbols")));
            }
            let cfg = WaveformConfig::new(fft_size, 1, s, first, GuardInterval::NoGi, 0, vec![0], (1..s - tail).collect())?;
            Ok((cfg, ShapingSet::from_shaping_vector(vec![C64::new(1.0, 0.0); s], 1, s)?))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{dft_matrix, ComplexMat};
    use crate::precoder::{is_unitary, PrecodingMatrix};

    #[test]
    fn ofdma_is_identity() {
        let (cfg, shaping) = legacy_config(LegacyKind::Ofdma, 8, 64, 4, 4).unwrap();
        assert_eq!((cfg.k, cfg.m), (8, 1));
        let p = PrecodingMatrix::new(&shaping).unwrap();
        assert!((p.matrix() - ComplexMat::identity(8, 8)).norm() <= 1e-12);
    }

    #[test]
    fn sc_fdma_is_dft() {
        let (cfg, shaping) = legacy_config(LegacyKind::ScFdma, 8, 64, 4, 4).unwrap();
        assert_eq!((cfg.k, cfg.m), (1, 8));
        let p = PrecodingMatrix::new(&shaping).unwrap();
        assert!((p.matrix() - dft_matrix(8).unwrap()).norm() <= 1e-12);
        assert!(is_unitary(&shaping, 1e-12));
    }

    #[test]
    fn zero_tail_layout() {
        let (cfg, _) = legacy_config(LegacyKind::ZtDftSOfdm, 12, 64, 0, 4).unwrap();
        assert_eq!(cfg.zero_symbols(), 2);
        assert_eq!(cfg.data_m, (1..=10).collect::<Vec<_>>());
        assert_eq!(cfg.guard, GuardInterval::NoGi);
        assert_eq!(cfg.guard_len, 0);
    }

    #[test]
    fn rrc_is_nyquist_and_semi_unitary() {
        let m = 6;
        let p = rrc_shaping(m);
        let rho: f64 = p.iter().map(|v| v.norm_sqr()).sum();
        assert!((rho - m as f64).abs() < 1e-12);
        for i in 0..m {
            assert!((p[i].norm_sqr() + p[i + m].norm_sqr() - 1.0).abs() < 1e-12);
        }
        let (cfg, shaping) = legacy_config(LegacyKind::SsScFdma { data_k: 0 }, 12, 64, 0, 4).unwrap();
        let pbar = PrecodingMatrix::new(&shaping).unwrap().columns(&cfg.data_positions());
        assert!((pbar.adjoint() * &pbar - ComplexMat::identity(6, 6)).norm() < 1e-12);
        assert!(legacy_config(LegacyKind::SsScFdma { data_k: 0 }, 7, 64, 0, 4).is_err());
    }
}
