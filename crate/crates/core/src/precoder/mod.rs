//! Circularly pulse-shaped (CPS) precoder `P = W_S A`.
//!
//! Three equivalent implementations are provided: the direct matrix product, the
//! frequency-domain form built from `K` spectrally shaped `M`-point DFT precoders,
//! and the characteristic-matrix form built from Kronecker-structured DFTs.

mod config;
mod legacy;
mod shaping;

pub use config::{GuardInterval, WaveformConfig};
pub use legacy::{legacy_config, rrc_shaping, LegacyKind};
pub use shaping::{ShapingFile, ShapingSet};

pub(crate) use shaping::nep_domain;

use crate::dsp::{dft_matrix, fft_unitary, ifft_unitary, ComplexMat, ComplexVec, C64, ZERO};
use crate::error::{Error, Result};

/// Relative threshold below which a characteristic entry counts as zero.
pub const INVERTIBILITY_TOL: f64 = 1e-9;

/// GFDM matrix whose column `k M + m` is the prototype pulse circularly shifted by
/// `m K` samples and modulated by `exp(j 2 pi k s / K)`.
///
/// Columns carry a `1/sqrt(M)` factor so that `W_S A` coincides with the
/// frequency-domain precoder built from normalized `M`-point DFTs.
pub fn build_gfdm_matrix(a00: &[C64], k: usize, m: usize) -> Result<ComplexMat> {
    let s = k * m;
    if k == 0 || m == 0 || a00.len() != s {
        return Err(Error::InvalidDimension(format!("pulse length {} != K*M = {s}", a00.len())));
    }
    let norm = 1.0 / (m as f64).sqrt();
    let mut a = ComplexMat::zeros(s, s);
    for kk in 0..k {
        for mm in 0..m {
            let col = kk * m + mm;
            for row in 0..s {
                let src = (row + s - (mm * k) % s) % s;
                let phase = 2.0 * std::f64::consts::PI * ((kk * row) % k) as f64 / k as f64;
                a[(row, col)] = a00[src] * C64::from_polar(norm, phase);
            }
        }
    }
    Ok(a)
}

/// Explicit precoding matrix together with the GFDM matrix it was built from.
#[derive(Debug, Clone)]
pub struct PrecodingMatrix {
    p: ComplexMat,
    a: ComplexMat,
}

impl PrecodingMatrix {
    pub fn new(shaping: &ShapingSet) -> Result<Self> {
        let a = build_gfdm_matrix(shaping.pulse(), shaping.k(), shaping.m())?;
        let p = dft_matrix(shaping.subcarriers())? * &a;
        Ok(Self { p, a })
    }

    pub fn matrix(&self) -> &ComplexMat {
        &self.p
    }

    pub fn gfdm(&self) -> &ComplexMat {
        &self.a
    }

    /// Columns of `P` at the given input positions (the effective precoder).
    pub fn columns(&self, positions: &[usize]) -> ComplexMat {
        ComplexMat::from_fn(self.p.nrows(), positions.len(), |r, c| self.p[(r, positions[c])])
    }

    pub fn apply(&self, d: &[C64]) -> Result<Vec<C64>> {
        check_len(d, self.p.ncols())?;
        Ok((&self.p * ComplexVec::from_column_slice(d)).as_slice().to_vec())
    }
}

fn check_len(d: &[C64], s: usize) -> Result<()> {
    if d.len() != s {
        return Err(Error::InvalidDimension(format!("data length {} != S = {s}", d.len())));
    }
    Ok(())
}

/// `s = W_S A d` by explicit matrix multiplication.
pub fn precode_direct(d: &[C64], shaping: &ShapingSet) -> Result<Vec<C64>> {
    check_len(d, shaping.subcarriers())?;
    let a = build_gfdm_matrix(shaping.pulse(), shaping.k(), shaping.m())?;
    let mut s = (a * ComplexVec::from_column_slice(d)).as_slice().to_vec();
    fft_unitary(&mut s);
    Ok(s)
}

/// `s = sum_k C_{kM} diag(p) R W_M d_k`.
pub fn precode_frequency(d: &[C64], shaping: &ShapingSet) -> Result<Vec<C64>> {
    let (k, m) = (shaping.k(), shaping.m());
    let s_len = k * m;
    check_len(d, s_len)?;
    let p = shaping.shaping_vector();
    let mut s = vec![ZERO; s_len];
    let mut block = vec![ZERO; m];
    for kk in 0..k {
        block.copy_from_slice(&d[kk * m..(kk + 1) * m]);
        if block.iter().all(|v| *v == ZERO) {
            continue;
        }
        fft_unitary(&mut block);
        for i in 0..s_len {
            s[(i + kk * m) % s_len] += p[i] * block[i % m];
        }
    }
    Ok(s)
}

/// `s = sqrt(rho / M) (W_K kron I_M) diag(vec Gamma) (W_K^H kron W_M) d`.
///
/// The `sqrt(rho / M)` factor undoes the energy normalization built into `Gamma`,
/// so the result matches the other two implementations for any `rho`.
pub fn precode_characteristic(d: &[C64], shaping: &ShapingSet) -> Result<Vec<C64>> {
    let (k, m) = (shaping.k(), shaping.m());
    check_len(d, k * m)?;
    let gamma = shaping.characteristic();
    // work on the M x K matrix reshape(d, M, K), stored column-major
    let mut x = d.to_vec();
    for col in x.chunks_mut(m) {
        fft_unitary(col);
    }
    let mut row = vec![ZERO; k];
    for r in 0..m {
        for c in 0..k {
            row[c] = x[c * m + r];
        }
        ifft_unitary(&mut row);
        for c in 0..k {
            row[c] *= gamma[(r, c)];
        }
        fft_unitary(&mut row);
        for c in 0..k {
            x[c * m + r] = row[c];
        }
    }
    let scale = (shaping.rho() / m as f64).sqrt();
    x.iter_mut().for_each(|v| *v *= scale);
    Ok(x)
}

/// Noise enhancement penalty `sum_i 1 / |[(W_K^H kron I_M) p]_i|^2`.
pub fn nep(p: &[C64], k: usize, m: usize) -> Result<f64> {
    if k == 0 || m == 0 || p.len() != k * m {
        return Err(Error::InvalidDimension(format!("shaping vector length {} != K*M", p.len())));
    }
    let q = nep_domain(p, k, m);
    let max = q.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut zeta = 0.0;
    for (i, v) in q.iter().enumerate() {
        if v.norm() <= INVERTIBILITY_TOL * max || max == 0.0 {
            return Err(Error::SingularPrecoder { index: i });
        }
        zeta += 1.0 / v.norm_sqr();
    }
    Ok(zeta)
}

/// `P` is unitary when every characteristic entry has unit modulus and the energy
/// sits at its nominal value `rho = M`.
pub fn is_unitary(shaping: &ShapingSet, tol: f64) -> bool {
    let m = shaping.m() as f64;
    let moduli_ok = shaping.characteristic().iter().all(|g| (g.norm() - 1.0).abs() <= tol);
    moduli_ok && (shaping.rho() - m).abs() <= tol * m
}

/// `P` is invertible when no characteristic entry vanishes (relative to the largest).
pub fn is_invertible(shaping: &ShapingSet, tol: f64) -> bool {
    let g = shaping.characteristic();
    let max = g.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let min = g.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
    max > 0.0 && min > tol * max
}
