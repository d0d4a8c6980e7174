use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dsp::{fft_unitary, ifft_unitary, reshape, ComplexMat, C64};
use crate::error::{Error, Result};

/// The three equivalent descriptions of a circular prototype.
///
/// * `a00` - time-domain prototype pulse,
/// * `p = W_S a00` - prototype shaping vector,
/// * `gamma = sqrt(S / rho) reshape(p, M, K) W_K^H` - characteristic matrix,
///
/// with `rho = ||p||^2`. All three are kept so that each precoder implementation
/// can use the representation it needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapingSet {
    k: usize,
    m: usize,
    a00: Vec<C64>,
    p: Vec<C64>,
    gamma: ComplexMat,
    rho: f64,
}

impl ShapingSet {
    /// Builds the set from the prototype shaping vector `p` (length `K M`).
    pub fn from_shaping_vector(p: Vec<C64>, k: usize, m: usize) -> Result<Self> {
        if k == 0 || m == 0 || p.len() != k * m {
            return Err(Error::InvalidDimension(format!("shaping vector length {} != K*M = {}", p.len(), k * m)));
        }
        let rho: f64 = p.iter().map(|v| v.norm_sqr()).sum();
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::InvalidArgument("shaping vector must have finite positive energy".into()));
        }
        let mut a00 = p.clone();
        ifft_unitary(&mut a00);
        let gamma = characteristic_from_shaping(&p, k, m, rho)?;
        Ok(Self { k, m, a00, p, gamma, rho })
    }

    /// Builds the set from the time-domain prototype pulse `a00`.
    pub fn from_pulse(a00: Vec<C64>, k: usize, m: usize) -> Result<Self> {
        let mut p = a00;
        fft_unitary(&mut p);
        Self::from_shaping_vector(p, k, m)
    }

    /// Builds the set from a characteristic matrix (`M x K`) and the energy `rho`.
    pub fn from_characteristic(gamma: &ComplexMat, rho: f64) -> Result<Self> {
        let (m, k) = gamma.shape();
        if !(rho > 0.0) {
            return Err(Error::InvalidArgument("rho must be positive".into()));
        }
        // reshape(p, M, K) = sqrt(rho / S) Gamma W_K, i.e. a forward DFT along each row.
        let s = (k * m) as f64;
        let scale = (rho / s).sqrt();
        let mut pm = gamma.clone();
        for r in 0..m {
            let mut row: Vec<C64> = (0..k).map(|c| pm[(r, c)]).collect();
            fft_unitary(&mut row);
            for c in 0..k {
                pm[(r, c)] = row[c] * scale;
            }
        }
        Self::from_shaping_vector(pm.as_slice().to_vec(), k, m)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn subcarriers(&self) -> usize {
        self.k * self.m
    }

    pub fn pulse(&self) -> &[C64] {
        &self.a00
    }

    pub fn shaping_vector(&self) -> &[C64] {
        &self.p
    }

    pub fn characteristic(&self) -> &ComplexMat {
        &self.gamma
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Shaping scaled by a complex factor (energy scales by `|c|^2`).
    pub fn scaled(&self, c: C64) -> Result<Self> {
        Self::from_shaping_vector(self.p.iter().map(|v| v * c).collect(), self.k, self.m)
    }

    pub fn to_file_format(&self) -> ShapingFile {
        ShapingFile {
            k: self.k,
            m: self.m,
            rho: self.rho,
            p_real: self.p.iter().map(|v| v.re).collect(),
            p_imag: self.p.iter().map(|v| v.im).collect(),
        }
    }

    pub fn from_file_format(f: &ShapingFile) -> Result<Self> {
        if f.p_real.len() != f.p_imag.len() {
            return Err(Error::Parse("p_real and p_imag differ in length".into()));
        }
        let p: Vec<C64> = f.p_real.iter().zip(&f.p_imag).map(|(&re, &im)| C64::new(re, im)).collect();
        let set = Self::from_shaping_vector(p, f.k, f.m)?;
        if (set.rho - f.rho).abs() > 1e-9 * f.rho.abs().max(1.0) {
            return Err(Error::Parse(format!("stored rho {} does not match ||p||^2 = {}", f.rho, set.rho)));
        }
        // keep the stored value bit-exact
        Ok(Self { rho: f.rho, ..set })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_file_format()).map_err(|e| Error::Parse(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let f: ShapingFile = serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_file_format(&f)
    }
}

/// On-disk representation of a shaping vector (JSON).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapingFile {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub rho: f64,
    pub p_real: Vec<f64>,
    pub p_imag: Vec<f64>,
}

fn characteristic_from_shaping(p: &[C64], k: usize, m: usize, rho: f64) -> Result<ComplexMat> {
    let mut g = reshape(p, m, k)?;
    let scale = ((k * m) as f64 / rho).sqrt();
    for r in 0..m {
        // right-multiplying a row by W_K^H is an inverse DFT of that row
        let mut row: Vec<C64> = (0..k).map(|c| g[(r, c)]).collect();
        ifft_unitary(&mut row);
        for c in 0..k {
            g[(r, c)] = row[c] * scale;
        }
    }
    Ok(g)
}

/// `(W_K^H kron I_M) p`, the vector whose squared moduli enter the noise penalty.
pub(crate) fn nep_domain(p: &[C64], k: usize, m: usize) -> Vec<C64> {
    let mut out = p.to_vec();
    for r in 0..m {
        let mut row: Vec<C64> = (0..k).map(|c| p[c * m + r]).collect();
        ifft_unitary(&mut row);
        for c in 0..k {
            out[c * m + r] = row[c];
        }
    }
    out
}
