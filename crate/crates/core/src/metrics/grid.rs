use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Uniform frequency grid over `[-pi, pi)` with an out-of-subband mask.
///
/// Subcarrier `k` owns the interval `[2 pi (k - 1/2) / N, 2 pi (k + 1/2) / N)`
/// (indices modulo `N`). Quadrature weights integrate `dw / 2 pi` by the trapezoid
/// rule over the union of out-of-subband intervals; with an even number of samples
/// per subcarrier every interval boundary falls on a grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    fft_size: usize,
    samples_per_subcarrier: usize,
    omega: Vec<f64>,
    osb: Vec<bool>,
    weights: Vec<f64>,
}

impl FrequencyGrid {
    /// Grid whose out-of-subband region is the given set of subcarrier indices.
    pub fn new(fft_size: usize, samples_per_subcarrier: usize, osb_subcarriers: &[usize]) -> Result<Self> {
        if fft_size == 0 || samples_per_subcarrier == 0 {
            return Err(Error::InvalidArgument("grid needs positive FFT size and density".into()));
        }
        let mut in_osb = vec![false; fft_size];
        for &k in osb_subcarriers {
            if k >= fft_size {
                return Err(Error::InvalidArgument(format!("subcarrier {k} outside 0..{fft_size}")));
            }
            in_osb[k] = true;
        }
        let len = fft_size * samples_per_subcarrier;
        let step = 2.0 * PI / len as f64;
        let omega: Vec<f64> = (0..len).map(|g| -PI + g as f64 * step).collect();
        let owner = |w: f64| -> bool {
            let k = (w * fft_size as f64 / (2.0 * PI) + 0.5).floor() as i64;
            in_osb[k.rem_euclid(fft_size as i64) as usize]
        };
        let osb = omega.iter().map(|&w| owner(w)).collect();
        let weights = omega
            .iter()
            .map(|&w| {
                let left = owner(w - step / 4.0) as u8 as f64;
                let right = owner(w + step / 4.0) as u8 as f64;
                0.5 * (left + right) / len as f64
            })
            .collect();
        Ok(Self { fft_size, samples_per_subcarrier, omega, osb, weights })
    }

    /// Out-of-subband region = every subcarrier outside `lo..hi`.
    pub fn outside(fft_size: usize, samples_per_subcarrier: usize, lo: usize, hi: usize) -> Result<Self> {
        let osb: Vec<usize> = (0..fft_size).filter(|k| *k < lo || *k >= hi).collect();
        Self::new(fft_size, samples_per_subcarrier, &osb)
    }

    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    pub fn samples_per_subcarrier(&self) -> usize {
        self.samples_per_subcarrier
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn osb_mask(&self) -> &[bool] {
        &self.osb
    }

    /// Trapezoid weights of `dw / 2 pi` over the out-of-subband region (zero elsewhere).
    pub fn osb_weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight of every point for a full-period integral of `dw / 2 pi`.
    pub fn step_weight(&self) -> f64 {
        1.0 / self.omega.len() as f64
    }
}
