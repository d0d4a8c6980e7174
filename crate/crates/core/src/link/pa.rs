use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dsp::C64;
use crate::error::{Error, Result};

/// Memoryless amplifier nonlinearity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PaKind {
    Identity,
    /// `y = sum_q c_q x |x|^(q-1)`, `q = 1, 2, ...`; saturation reference is unit power.
    Polynomial { coefficients: Vec<C64> },
    /// AM/AM `a / (1 + (a / A_sat)^(2s))^(1/(2s))`, no AM/PM.
    Rapp { smoothness: f64, saturation: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaModel {
    #[serde(flatten)]
    pub kind: PaKind,
    /// Output rotation in radians.
    #[serde(default)]
    pub phase_compensation: f64,
    /// Input back-off relative to the saturation reference, in dB.
    #[serde(default)]
    pub ibo_db: f64,
}

#[derive(Deserialize)]
struct CoefficientFile {
    coefficients: Vec<[f64; 2]>,
}

impl PaModel {
    pub fn identity() -> Self {
        Self { kind: PaKind::Identity, phase_compensation: 0.0, ibo_db: 0.0 }
    }

    pub fn rapp(smoothness: f64, saturation: f64, ibo_db: f64) -> Self {
        Self { kind: PaKind::Rapp { smoothness, saturation }, phase_compensation: 0.0, ibo_db }
    }

    /// Polynomial model read from a TOML file `coefficients = [[re, im], ...]`.
    pub fn polynomial_from_file(path: &Path, phase_compensation: f64, ibo_db: f64) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let f: CoefficientFile = toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        if f.coefficients.is_empty() {
            return Err(Error::InvalidConfig("empty PA coefficient list".into()));
        }
        let coefficients = f.coefficients.iter().map(|c| C64::new(c[0], c[1])).collect();
        Ok(Self { kind: PaKind::Polynomial { coefficients }, phase_compensation, ibo_db })
    }

    fn saturation_power(&self) -> f64 {
        match &self.kind {
            PaKind::Rapp { saturation, .. } => saturation * saturation,
            _ => 1.0,
        }
    }

    fn curve(&self, x: C64) -> C64 {
        match &self.kind {
            PaKind::Identity => x,
            PaKind::Polynomial { coefficients } => {
                let a = x.norm();
                let mut acc = C64::new(0.0, 0.0);
                let mut pow = 1.0;
                for c in coefficients {
                    acc += c * pow;
                    pow *= a;
                }
                x * acc
            }
            PaKind::Rapp { smoothness, saturation } => {
                let a = x.norm();
                if a == 0.0 {
                    return x;
                }
                x * (rapp_am_am(a, *smoothness, *saturation) / a)
            }
        }
    }
}

/// Rapp output amplitude for input amplitude `a`.
pub fn rapp_am_am(a: f64, smoothness: f64, saturation: f64) -> f64 {
    if saturation.is_infinite() {
        return a;
    }
    a / (1.0 + (a / saturation).powf(2.0 * smoothness)).powf(1.0 / (2.0 * smoothness))
}

/// Applies the amplifier to a sample stream.
///
/// The stream is scaled so its mean power sits `ibo_db` below the saturation
/// reference, passed through the nonlinearity, rotated, and scaled back by the
/// inverse input gain so a linear amplifier leaves the stream unchanged.
pub fn pa_apply(stream: &[C64], pa: &PaModel) -> Vec<C64> {
    if pa.kind == PaKind::Identity {
        return stream.to_vec();
    }
    let mean = stream.iter().map(|v| v.norm_sqr()).sum::<f64>() / stream.len().max(1) as f64;
    let target = pa.saturation_power() * 10f64.powf(-pa.ibo_db / 10.0);
    let gain = if mean > 0.0 && target.is_finite() { (target / mean).sqrt() } else { 1.0 };
    let rot = C64::from_polar(1.0 / gain, pa.phase_compensation);
    stream.iter().map(|&x| pa.curve(x * gain) * rot).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{complex_gaussian, seeded};

    fn stream(n: usize) -> Vec<C64> {
        let mut r = seeded(11);
        (0..n).map(|_| complex_gaussian(&mut r, 0.3)).collect()
    }

    #[test]
    fn identity_is_bit_exact() {
        let x = stream(64);
        assert_eq!(pa_apply(&x, &PaModel::identity()), x);
    }

    #[test]
    fn rapp_without_saturation_is_linear() {
        let x = stream(64);
        let y = pa_apply(&x, &PaModel::rapp(2.0, f64::INFINITY, 3.0));
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).norm() <= 1e-9);
        }
        for a in [1e-3, 0.5, 2.0] {
            assert!((rapp_am_am(a, 2.0, 1e12) - a).abs() <= 1e-9);
        }
    }

    #[test]
    fn rapp_constant_envelope() {
        // amplitude already at the back-off level, so the input gain is one
        let a = 10f64.powf(-3.0 / 20.0);
        let x: Vec<C64> = (0..16).map(|i| C64::from_polar(a, 0.4 * i as f64)).collect();
        let y = pa_apply(&x, &PaModel::rapp(2.0, 1.0, 3.0));
        let expected = a / (1.0 + a.powi(4)).powf(0.25);
        for (xi, yi) in x.iter().zip(&y) {
            assert!((yi.norm() - expected).abs() < 1e-12);
            assert!((yi.arg() - xi.arg()).abs() < 1e-12);
        }
    }

    #[test]
    fn polynomial_linear_term_and_phase() {
        let pa = PaModel {
            kind: PaKind::Polynomial { coefficients: vec![C64::new(1.0, 0.0)] },
            phase_compensation: 0.5,
            ibo_db: 6.0,
        };
        let x = stream(8);
        let y = pa_apply(&x, &pa);
        let rot = C64::from_polar(1.0, 0.5);
        for (a, b) in x.iter().zip(&y) {
            assert!((a * rot - b).norm() < 1e-12);
        }
    }

    #[test]
    fn polynomial_cubic_term() {
        let pa = PaModel {
            kind: PaKind::Polynomial { coefficients: vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(-0.1, 0.05)] },
            phase_compensation: 0.0,
            ibo_db: 0.0,
        };
        let x: Vec<C64> = vec![C64::new(1.0, 0.0); 4];
        let y = pa_apply(&x, &pa);
        assert!((y[0] - C64::new(0.9, 0.05)).norm() < 1e-12);
    }

    #[test]
    fn coefficient_file() {
        let dir = std::env::temp_dir().join(format!("cps_pa_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("pa.toml");
        std::fs::write(&path, "coefficients = [[1.0, 0.0], [0.0, 0.0], [-0.2, 0.1]]\n").unwrap();
        let pa = PaModel::polynomial_from_file(&path, 1.3317, 3.0).unwrap();
        match pa.kind {
            PaKind::Polynomial { coefficients } => assert_eq!(coefficients[2], C64::new(-0.2, 0.1)),
            _ => panic!("wrong kind"),
        }
        std::fs::write(&path, "coefficients = []\n").unwrap();
        assert!(PaModel::polynomial_from_file(&path, 0.0, 0.0).is_err());
        std::fs::remove_dir_all(&dir).ok();
    }
}
