use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Guard interval inserted in front of (CP) or behind (ZP) each block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GuardInterval {
    Cp,
    Zp,
    #[serde(rename = "nogi")]
    NoGi,
}

/// Static parameters of one user's waveform.
///
/// `S = K * M` subcarriers starting at `first_subcarrier` out of an `fft_size`-point
/// OFDM grid. Data symbols occupy the positions `k M + m` with `k` in `data_k` and
/// `m` in `data_m`; all other inputs of the precoder are zero.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WaveformConfig {
    pub fft_size: usize,
    pub k: usize,
    pub m: usize,
    pub first_subcarrier: usize,
    pub guard: GuardInterval,
    pub guard_len: usize,
    pub data_k: Vec<usize>,
    pub data_m: Vec<usize>,
}

impl WaveformConfig {
    pub fn new(
        fft_size: usize,
        k: usize,
        m: usize,
        first_subcarrier: usize,
        guard: GuardInterval,
        guard_len: usize,
        data_k: Vec<usize>,
        data_m: Vec<usize>,
    ) -> Result<Self> {
        let cfg = Self { fft_size, k, m, first_subcarrier, guard, guard_len, data_k, data_m };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Full-allocation config: every `(k, m)` position carries data.
    pub fn full(fft_size: usize, k: usize, m: usize, first_subcarrier: usize, guard: GuardInterval, guard_len: usize) -> Result<Self> {
        Self::new(fft_size, k, m, first_subcarrier, guard, guard_len, (0..k).collect(), (0..m).collect())
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.m == 0 {
            return Err(Error::InvalidConfig("K and M must be positive".into()));
        }
        if self.fft_size == 0 {
            return Err(Error::InvalidConfig("FFT size must be positive".into()));
        }
        if self.first_subcarrier + self.subcarriers() > self.fft_size {
            return Err(Error::InvalidConfig(format!(
                "subcarriers {}..{} exceed FFT size {}",
                self.first_subcarrier,
                self.first_subcarrier + self.subcarriers(),
                self.fft_size
            )));
        }
        if self.guard == GuardInterval::NoGi && self.guard_len != 0 {
            return Err(Error::InvalidConfig("NoGI requires a zero guard length".into()));
        }
        if self.guard_len > self.fft_size {
            return Err(Error::InvalidConfig("guard longer than the FFT size".into()));
        }
        check_index_set(&self.data_k, self.k, "data_k")?;
        check_index_set(&self.data_m, self.m, "data_m")?;
        Ok(())
    }

    /// `S = K M`.
    pub fn subcarriers(&self) -> usize {
        self.k * self.m
    }

    /// Number of data symbols per block, `D = |K| |M|`.
    pub fn data_symbols(&self) -> usize {
        self.data_k.len() * self.data_m.len()
    }

    /// Number of zero inputs per block, `Z = S - D`.
    pub fn zero_symbols(&self) -> usize {
        self.subcarriers() - self.data_symbols()
    }

    /// Samples per transmitted block, `N' = N + G`.
    pub fn block_len(&self) -> usize {
        self.fft_size + self.guard_len
    }

    /// Cyclic prefix length seen by the spectral formulas (0 for ZP and NoGI).
    pub fn spectral_prefix_len(&self) -> usize {
        match self.guard {
            GuardInterval::Cp => self.guard_len,
            _ => 0,
        }
    }

    /// Sorted precoder input positions `k M + m` carrying data.
    pub fn data_positions(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .data_k
            .iter()
            .flat_map(|&k| self.data_m.iter().map(move |&m| k * self.m + m))
            .collect();
        v.sort_unstable();
        v
    }

    /// Occupied OFDM subcarrier indices `eta .. eta + S`.
    pub fn occupied_subcarriers(&self) -> std::ops::Range<usize> {
        self.first_subcarrier..self.first_subcarrier + self.subcarriers()
    }
}

fn check_index_set(set: &[usize], bound: usize, name: &str) -> Result<()> {
    if set.is_empty() {
        return Err(Error::InvalidConfig(format!("{name} must not be empty")));
    }
    let mut seen = vec![false; bound];
    for &i in set {
        if i >= bound {
            return Err(Error::InvalidConfig(format!("{name} index {i} out of range 0..{bound}")));
        }
        if seen[i] {
            return Err(Error::InvalidConfig(format!("{name} index {i} repeated")));
        }
        seen[i] = true;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_sizes() {
        let c = WaveformConfig::new(128, 2, 12, 26, GuardInterval::Cp, 9, vec![0, 1], (1..12).collect()).unwrap();
        assert_eq!(c.subcarriers(), 24);
        assert_eq!(c.data_symbols(), 22);
        assert_eq!(c.zero_symbols(), 2);
        assert_eq!(c.block_len(), 137);
        assert_eq!(c.spectral_prefix_len(), 9);
        assert_eq!(c.data_positions().len(), 22);
        assert!(!c.data_positions().contains(&0));
        assert!(!c.data_positions().contains(&12));
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(WaveformConfig::full(16, 2, 4, 10, GuardInterval::Cp, 2).is_err());
        assert!(WaveformConfig::full(16, 2, 4, 0, GuardInterval::NoGi, 2).is_err());
        assert!(WaveformConfig::new(16, 2, 4, 0, GuardInterval::Cp, 2, vec![], vec![0]).is_err());
        assert!(WaveformConfig::new(16, 2, 4, 0, GuardInterval::Cp, 2, vec![2], vec![0]).is_err());
        assert!(WaveformConfig::new(16, 2, 4, 0, GuardInterval::Cp, 2, vec![0, 0], vec![0]).is_err());
        let zp = WaveformConfig::full(16, 2, 4, 0, GuardInterval::Zp, 3).unwrap();
        assert_eq!(zp.spectral_prefix_len(), 0);
        assert_eq!(zp.block_len(), 19);
    }
}
