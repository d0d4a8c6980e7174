use std::f64::consts::PI;

use crate::dsp::{ComplexVec, C64};
use crate::error::{Error, Result};
use crate::precoder::{ShapingSet, WaveformConfig};

/// Envelope coefficient vectors `u_{c,n}`: sample `n` of the block carries
/// `sum_c (u_{c,n}^H p) d_c` over the data positions `c = k M + m`.
///
/// Indexed `[n][c]`; each vector has length `S`.
pub fn envelope_vectors(cfg: &WaveformConfig) -> Vec<Vec<ComplexVec>> {
    let (n, s, m) = (cfg.fft_size, cfg.subcarriers(), cfg.m);
    let pos = cfg.data_positions();
    let scale = 1.0 / ((n * m) as f64).sqrt();
    (0..n)
        .map(|t| {
            pos.iter()
                .map(|&c| {
                    let (kk, mm) = (c / m, c % m);
                    ComplexVec::from_fn(s, |i, _| {
                        // conj of exp(-j 2 pi i m / M) exp(j 2 pi <i + kM>_S t / N)
                        let ph = 2.0 * PI * (((i % m) * mm) % m) as f64 / m as f64
                            - 2.0 * PI * ((((i + kk * m) % s) * t) % n) as f64 / n as f64;
                        C64::from_polar(scale, ph)
                    })
                })
                .collect()
        })
        .collect()
}

/// Mean instantaneous power `D E_s rho / (N M)`.
pub fn mip(shaping: &ShapingSet, cfg: &WaveformConfig, es: f64) -> f64 {
    cfg.data_symbols() as f64 * es * shaping.rho() / (cfg.fft_size * cfg.m) as f64
}

/// Fourth moment of the block samples, averaged over `n`:
/// `(1/N) sum_n [sigma4 sum_c |a_c|^4 + 2 E_s^2 sum_{c != c'} |a_c|^2 |a_c'|^2]`.
pub fn fourth_moment(p: &[C64], cfg: &WaveformConfig, es: f64, sigma4: f64) -> Result<f64> {
    if p.len() != cfg.subcarriers() {
        return Err(Error::InvalidDimension(format!("shaping vector length {} != S", p.len())));
    }
    let pv = ComplexVec::from_column_slice(p);
    let mut f = 0.0;
    for row in envelope_vectors(cfg) {
        let pw: Vec<f64> = row.iter().map(|u| u.dotc(&pv).norm_sqr()).collect();
        let sum: f64 = pw.iter().sum();
        let quad: f64 = pw.iter().map(|v| v * v).sum();
        f += sigma4 * quad + 2.0 * es * es * (sum * sum - quad);
    }
    Ok(f / cfg.fft_size as f64)
}

/// Variance of instantaneous power `f(p) - mu^2`.
pub fn vip_closed_form(shaping: &ShapingSet, cfg: &WaveformConfig, es: f64, sigma4: f64) -> Result<f64> {
    if shaping.k() != cfg.k || shaping.m() != cfg.m {
        return Err(Error::InvalidConfig("shaping set does not match the waveform".into()));
    }
    let mu = mip(shaping, cfg, es);
    Ok(fourth_moment(shaping.shaping_vector(), cfg, es, sigma4)? - mu * mu)
}

/// Fraction of differing bits.
pub fn ber(detected: &[u8], sent: &[u8]) -> Result<f64> {
    if detected.len() != sent.len() {
        return Err(Error::InvalidArgument(format!("bit streams of length {} and {}", detected.len(), sent.len())));
    }
    if sent.is_empty() {
        return Ok(0.0);
    }
    let errors = detected.iter().zip(sent).filter(|(a, b)| a != b).count();
    Ok(errors as f64 / sent.len() as f64)
}

/// Framing and bandwidth inputs of the spectral-efficiency figure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeParams {
    pub bits_per_symbol: usize,
    pub data_symbols: usize,
    pub blocks_per_tti: usize,
    pub tti_s: f64,
    pub bandwidth_hz: f64,
    pub guard_hz: f64,
}

/// `N_bit D N_block (1 - BER) / (T (BW + guard))` in bit/s/Hz.
pub fn spectral_efficiency(ber: f64, p: &SeParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&ber) {
        return Err(Error::InvalidArgument(format!("BER {ber} outside [0, 1]")));
    }
    let denom = p.tti_s * (p.bandwidth_hz + p.guard_hz);
    if !(denom > 0.0) {
        return Err(Error::InvalidArgument("TTI and bandwidth must be positive".into()));
    }
    let chi = (p.bits_per_symbol * p.data_symbols * p.blocks_per_tti) as f64 * (1.0 - ber);
    Ok(chi / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{complex_gaussian, seeded, ifft_unitary};
    use crate::precoder::{GuardInterval, PrecodingMatrix};

    #[test]
    fn mip_example() {
        let cfg = WaveformConfig::new(1024, 4, 12, 0, GuardInterval::Cp, 72, (0..4).collect(), (0..12).collect()).unwrap();
        let shaping = ShapingSet::from_shaping_vector(vec![C64::new(1.0, 0.0); 48], 4, 12).unwrap();
        assert_eq!(shaping.rho(), 48.0);
        // rho = 48 = K M, so mu = D rho / (N M) = 48 * 48 / (1024 * 12)
        assert!((mip(&shaping, &cfg, 1.0) - 48.0 * 48.0 / (1024.0 * 12.0)).abs() < 1e-15);
        let s = ShapingSet::from_shaping_vector(vec![C64::new(1.0, 0.0); 12], 1, 12).unwrap();
        let cfg1 = WaveformConfig::full(1024, 1, 12, 0, GuardInterval::Cp, 72).unwrap();
        // rho = M = 12: 12 / 1024
        assert!((mip(&s, &cfg1, 1.0) - 12.0 / 1024.0).abs() < 1e-15);
        let s2 = s.scaled(C64::new(2f64.sqrt(), 0.0)).unwrap();
        assert!((mip(&s2, &cfg1, 1.0) - 2.0 * mip(&s, &cfg1, 1.0)).abs() < 1e-15);
    }

    #[test]
    fn envelope_vectors_reproduce_the_block() {
        let cfg = WaveformConfig::new(16, 2, 3, 5, GuardInterval::Cp, 2, vec![0, 1], vec![0, 2]).unwrap();
        let mut r = seeded(1);
        let p: Vec<C64> = (0..6).map(|_| complex_gaussian(&mut r, 1.0)).collect();
        let shaping = ShapingSet::from_shaping_vector(p.clone(), 2, 3).unwrap();
        let d: Vec<C64> = (0..6).map(|_| complex_gaussian(&mut r, 1.0)).collect();
        let mut dz = vec![C64::new(0.0, 0.0); 6];
        for c in cfg.data_positions() {
            dz[c] = d[c];
        }
        let s = PrecodingMatrix::new(&shaping).unwrap().apply(&dz).unwrap();
        let mut x = vec![C64::new(0.0, 0.0); 16];
        for i in 0..6 {
            x[i] = s[i]; // eta dropped: only magnitudes matter
        }
        ifft_unitary(&mut x);
        let pv = ComplexVec::from_column_slice(&p);
        let u = envelope_vectors(&cfg);
        for n in 0..16 {
            let y: C64 = cfg.data_positions().iter().enumerate().map(|(j, &c)| u[n][j].dotc(&pv) * d[c]).sum();
            assert!((y - x[n]).norm() < 1e-12);
        }
    }

    #[test]
    fn vip_is_homogeneous_of_degree_four() {
        let cfg = WaveformConfig::full(32, 2, 4, 3, GuardInterval::Cp, 4).unwrap();
        let mut r = seeded(2);
        let shaping = ShapingSet::from_shaping_vector((0..8).map(|_| complex_gaussian(&mut r, 1.0)).collect(), 2, 4).unwrap();
        let c = C64::new(0.7, 0.4);
        let a = vip_closed_form(&shaping, &cfg, 1.0, 1.32).unwrap();
        let b = vip_closed_form(&shaping.scaled(c).unwrap(), &cfg, 1.0, 1.32).unwrap();
        assert!((b - c.norm_sqr().powi(2) * a).abs() <= 1e-12 * b.abs());
    }

    #[test]
    fn ber_and_se() {
        let a = vec![0u8, 1, 1, 0];
        assert_eq!(ber(&a, &a).unwrap(), 0.0);
        let flipped: Vec<u8> = a.iter().map(|b| 1 - b).collect();
        assert_eq!(ber(&flipped, &a).unwrap(), 1.0);
        assert!(ber(&a[..3], &a).is_err());
        let p = SeParams { bits_per_symbol: 4, data_symbols: 48, blocks_per_tti: 14, tti_s: 1e-3, bandwidth_hz: 720e3, guard_hz: 60e3 };
        let se = spectral_efficiency(0.0, &p).unwrap();
        assert!((se - 4.0 * 48.0 * 14.0 / (1e-3 * 780e3)).abs() < 1e-12);
        assert!((se - 3.446).abs() < 1e-3);
        assert_eq!(spectral_efficiency(1.0, &p).unwrap(), 0.0);
    }
}
