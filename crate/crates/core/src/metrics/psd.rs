use std::f64::consts::PI;

use nalgebra::SymmetricEigen;

use super::FrequencyGrid;
use crate::dsp::{fft_unitary, ComplexMat, ComplexVec, C64, ZERO};
use crate::error::{Error, Result};
use crate::link::{add_guard, ofdm_symbol};
use crate::precoder::{PrecodingMatrix, ShapingSet, WaveformConfig};

/// `sum_{n=-G'}^{N-1} exp(-j theta n)`.
fn dirichlet(theta: f64, n: usize, g: usize) -> C64 {
    let len = (n + g) as f64;
    let half = 0.5 * theta;
    let centre = C64::from_polar(1.0, -theta * (n as f64 - 1.0 - g as f64) / 2.0);
    let s = half.sin();
    if s.abs() < 1e-9 {
        // theta near a multiple of 2 pi: fall back to the explicit sum
        let mut acc = ZERO;
        for i in 0..n + g {
            acc += C64::from_polar(1.0, -theta * (i as f64 - g as f64));
        }
        return acc;
    }
    centre * ((len * half).sin() / s)
}

fn check_shaping(shaping: &ShapingSet, cfg: &WaveformConfig) -> Result<()> {
    if shaping.k() != cfg.k || shaping.m() != cfg.m {
        return Err(Error::InvalidConfig(format!(
            "shaping set is {}x{}, config expects K={} M={}",
            shaping.k(),
            shaping.m(),
            cfg.k,
            cfg.m
        )));
    }
    Ok(())
}

/// Rows `a_c(w)` such that column `c` of the synthesis matrix has DTFT `a_c(w)^T p`.
///
/// Returns a `D x S` matrix for the data columns at frequency `w`.
fn spectral_rows(cfg: &WaveformConfig, w: f64) -> ComplexMat {
    let (n, s, m) = (cfg.fft_size, cfg.subcarriers(), cfg.m);
    let g = cfg.spectral_prefix_len();
    let scale = 1.0 / ((n * m) as f64).sqrt();
    let dir: Vec<C64> = (0..s)
        .map(|i| dirichlet(w - 2.0 * PI * (cfg.first_subcarrier + i) as f64 / n as f64, n, g) * scale)
        .collect();
    let pos = cfg.data_positions();
    let mut rows = ComplexMat::zeros(pos.len(), s);
    for (r, &c) in pos.iter().enumerate() {
        let (kk, mm) = (c / m, c % m);
        for i in 0..s {
            let f = C64::from_polar(1.0, -2.0 * PI * ((i % m) * mm % m) as f64 / m as f64);
            rows[(r, i)] = dir[(i + kk * m) % s] * f;
        }
    }
    rows
}

/// `S_x(w) = p^H Psi(w) p` at every grid point.
pub fn psd_closed_form(shaping: &ShapingSet, cfg: &WaveformConfig, grid: &FrequencyGrid, es: f64) -> Result<Vec<f64>> {
    check_shaping(shaping, cfg)?;
    cfg.validate()?;
    let p = ComplexVec::from_column_slice(shaping.shaping_vector());
    let norm = es / cfg.block_len() as f64;
    Ok(grid
        .omega()
        .iter()
        .map(|&w| (spectral_rows(cfg, w) * &p).norm_squared() * norm)
        .collect())
}

/// The PSD kernel `Psi(w)` (`S x S` Hermitian).
pub fn psd_kernel(cfg: &WaveformConfig, w: f64, es: f64) -> ComplexMat {
    let a = spectral_rows(cfg, w);
    a.adjoint() * a * C64::new(es / cfg.block_len() as f64, 0.0)
}

/// Out-of-subband emission matrix `Omega = int_OSB Psi(w) dw / 2 pi`.
pub fn osbep_matrix(cfg: &WaveformConfig, grid: &FrequencyGrid, es: f64) -> Result<ComplexMat> {
    cfg.validate()?;
    if grid.fft_size() != cfg.fft_size {
        return Err(Error::InvalidConfig("grid and waveform FFT sizes differ".into()));
    }
    let pts: Vec<(f64, f64)> = grid
        .omega()
        .iter()
        .zip(grid.osb_weights())
        .filter(|(_, &wt)| wt > 0.0)
        .map(|(&w, &wt)| (w, wt))
        .collect();
    if pts.is_empty() {
        return Err(Error::InvalidArgument("out-of-subband mask is empty".into()));
    }
    let d = cfg.data_symbols();
    let s = cfg.subcarriers();
    let mut stacked = ComplexMat::zeros(pts.len() * d, s);
    for (j, &(w, wt)) in pts.iter().enumerate() {
        let rows = spectral_rows(cfg, w) * C64::new(wt.sqrt(), 0.0);
        stacked.view_mut((j * d, 0), (d, s)).copy_from(&rows);
    }
    let omega = stacked.adjoint() * stacked * C64::new(es / cfg.block_len() as f64, 0.0);
    let omega = (&omega + omega.adjoint()) * C64::new(0.5, 0.0);
    let min = SymmetricEigen::new(omega.clone()).eigenvalues.min();
    if !(min > 0.0) {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: min });
    }
    Ok(omega)
}

/// `gamma_x(p) = p^H Omega p`.
pub fn osbep(omega: &ComplexMat, p: &[C64]) -> f64 {
    let v = ComplexVec::from_column_slice(p);
    (v.adjoint() * omega * &v)[(0, 0)].re
}

/// Averaged periodogram with one non-overlapping, unwindowed segment of `seg_len`
/// samples per estimate, evaluated on the grid (requires `seg_len <= grid.len()`).
pub fn welch_psd(stream: &[C64], seg_len: usize, grid: &FrequencyGrid) -> Result<Vec<f64>> {
    let len = grid.len();
    if seg_len == 0 || seg_len > len || stream.len() < seg_len {
        return Err(Error::InvalidArgument(format!("segment length {seg_len} for grid of {len} points")));
    }
    let segs = stream.len() / seg_len;
    let mut acc = vec![0.0; len];
    let mut buf = vec![ZERO; len];
    for s in 0..segs {
        buf.iter_mut().for_each(|v| *v = ZERO);
        buf[..seg_len].copy_from_slice(&stream[s * seg_len..(s + 1) * seg_len]);
        fft_unitary(&mut buf);
        for (a, v) in acc.iter_mut().zip(&buf) {
            *a += v.norm_sqr();
        }
    }
    // unitary FFT bin b sits at w = 2 pi b / len; grid point g at w = -pi + 2 pi g / len
    let scale = len as f64 / (segs * seg_len) as f64;
    Ok((0..len).map(|g| acc[(g + len / 2) % len] * scale).collect())
}

/// PSD in dB relative to its maximum.
pub fn to_db_relative(psd: &[f64]) -> Vec<f64> {
    let max = psd.iter().cloned().fold(0.0, f64::max);
    psd.iter().map(|v| 10.0 * (v / max).log10()).collect()
}

/// `Phi = G [W_N^H]_I P`, the `N' x S` synthesis matrix.
#[derive(Debug, Clone)]
pub struct SynthesisMatrix {
    phi: ComplexMat,
}

impl SynthesisMatrix {
    pub fn new(shaping: &ShapingSet, cfg: &WaveformConfig) -> Result<Self> {
        check_shaping(shaping, cfg)?;
        let p = PrecodingMatrix::new(shaping)?;
        let s = cfg.subcarriers();
        let np = cfg.block_len();
        let mut phi = ComplexMat::zeros(np, s);
        for c in 0..s {
            let col: Vec<C64> = p.matrix().column(c).iter().copied().collect();
            let x = add_guard(&ofdm_symbol(&col, cfg, 1)?, cfg, 1);
            phi.column_mut(c).copy_from_slice(&x);
        }
        Ok(Self { phi })
    }

    pub fn matrix(&self) -> &ComplexMat {
        &self.phi
    }
}
