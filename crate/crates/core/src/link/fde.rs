use nalgebra::Cholesky;
use serde::{Deserialize, Serialize};

use crate::dsp::{ComplexMat, ComplexVec, C64};
use crate::error::{Error, Result};

/// Relative singular-value floor below which `H P` counts as rank deficient.
const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FdeMode {
    Zf,
    Mmse,
}

/// Linear frequency-domain equalizer `d = Q r` for `r = H P d + v`.
#[derive(Debug, Clone)]
pub struct Equalizer {
    q: ComplexMat,
    gain: Vec<C64>,
}

impl Equalizer {
    /// `h` is the channel response on the `S` occupied subcarriers and `pbar` the
    /// `S x D` effective precoder.
    pub fn new(h: &[C64], pbar: &ComplexMat, n0: f64, es: f64, mode: FdeMode) -> Result<Self> {
        let (s, d) = pbar.shape();
        if h.len() != s {
            return Err(Error::InvalidDimension(format!("channel length {} != S = {s}", h.len())));
        }
        if d > s {
            return Err(Error::InvalidDimension(format!("D = {d} exceeds S = {s}")));
        }
        let hp = ComplexMat::from_fn(s, d, |r, c| h[r] * pbar[(r, c)]);
        let q = match mode {
            FdeMode::Zf => zf_matrix(&hp)?,
            // without noise MMSE coincides with ZF
            FdeMode::Mmse if n0 == 0.0 => zf_matrix(&hp)?,
            FdeMode::Mmse => {
                if !(n0 > 0.0 && es > 0.0) {
                    return Err(Error::InvalidArgument(format!("N0 = {n0}, Es = {es}")));
                }
                let mut gram = hp.adjoint() * &hp;
                let reg = n0 / es;
                for i in 0..d {
                    gram[(i, i)] += C64::new(reg, 0.0);
                }
                // Gram + (N0/Es) I is positive definite for N0 > 0
                let chol = Cholesky::new(gram).ok_or_else(|| Error::SingularMatrix("MMSE Gram matrix".into()))?;
                chol.solve(&hp.adjoint())
            }
        };
        let qh = &q * &hp;
        let gain = (0..d).map(|i| qh[(i, i)]).collect();
        Ok(Self { q, gain })
    }

    pub fn matrix(&self) -> &ComplexMat {
        &self.q
    }

    /// Diagonal of `Q H P`, the per-symbol gain seen by the detector.
    pub fn gain(&self) -> &[C64] {
        &self.gain
    }

    pub fn equalize(&self, r: &[C64]) -> Result<Vec<C64>> {
        if r.len() != self.q.ncols() {
            return Err(Error::InvalidDimension(format!("received length {} != S = {}", r.len(), self.q.ncols())));
        }
        Ok((&self.q * ComplexVec::from_column_slice(r)).as_slice().to_vec())
    }

    /// Equalized symbols divided by their gain (removes the MMSE shrinkage before slicing).
    pub fn equalize_unbiased(&self, r: &[C64]) -> Result<Vec<C64>> {
        let mut d = self.equalize(r)?;
        for (v, g) in d.iter_mut().zip(&self.gain) {
            if g.norm() > 0.0 {
                *v /= g;
            }
        }
        Ok(d)
    }
}

fn zf_matrix(hp: &ComplexMat) -> Result<ComplexMat> {
    let d = hp.ncols();
    let svd = hp.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if d == 0 || !(smax > 0.0) || smin <= RANK_TOL * smax {
        return Err(Error::SingularMatrix(format!("H P rank deficient (singular values {smin:e} / {smax:e})")));
    }
    let u = svd.u.expect("requested");
    let vt = svd.v_t.expect("requested");
    let mut vs = vt.adjoint();
    for (j, s) in svd.singular_values.iter().enumerate() {
        vs.column_mut(j).scale_mut(1.0 / s);
    }
    Ok(vs * u.adjoint())
}

/// One-shot equalization `d = Q r`.
pub fn fde(r: &[C64], h: &[C64], pbar: &ComplexMat, n0: f64, es: f64, mode: FdeMode) -> Result<Vec<C64>> {
    Equalizer::new(h, pbar, n0, es, mode)?.equalize(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{complex_gaussian, dft_matrix, seeded};

    fn rand_mat(r: usize, c: usize, seed: u64) -> ComplexMat {
        let mut g = seeded(seed);
        ComplexMat::from_fn(r, c, |_, _| complex_gaussian(&mut g, 1.0))
    }

    fn rand_vec(n: usize, seed: u64) -> Vec<C64> {
        let mut g = seeded(seed);
        (0..n).map(|_| complex_gaussian(&mut g, 1.0)).collect()
    }

    #[test]
    fn flat_unitary_zf_is_adjoint() {
        let p = dft_matrix(8).unwrap();
        let r = rand_vec(8, 1);
        let h = vec![C64::new(1.0, 0.0); 8];
        let d = fde(&r, &h, &p, 0.0, 1.0, FdeMode::Zf).unwrap();
        let expected = p.adjoint() * ComplexVec::from_column_slice(&r);
        for i in 0..8 {
            assert!((d[i] - expected[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn zf_inverts_random_channel() {
        let pbar = rand_mat(8, 4, 2);
        let h = rand_vec(8, 3);
        let eq = Equalizer::new(&h, &pbar, 0.0, 1.0, FdeMode::Zf).unwrap();
        let hp = ComplexMat::from_fn(8, 4, |r, c| h[r] * pbar[(r, c)]);
        let prod = eq.matrix() * hp;
        assert!((prod - ComplexMat::identity(4, 4)).norm() < 1e-8);
    }

    #[test]
    fn mmse_tends_to_zf() {
        let pbar = rand_mat(8, 6, 4);
        let h = rand_vec(8, 5);
        let r = rand_vec(8, 6);
        let zf = fde(&r, &h, &pbar, 0.0, 1.0, FdeMode::Zf).unwrap();
        let mmse = fde(&r, &h, &pbar, 1e-12, 1.0, FdeMode::Mmse).unwrap();
        let diff = zf.iter().zip(&mmse).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(diff <= 1e-6, "{diff}");
    }

    #[test]
    fn zf_rejects_deep_null_on_square_precoder() {
        let p = dft_matrix(4).unwrap();
        let mut h = vec![C64::new(1.0, 0.0); 4];
        h[2] = C64::new(0.0, 0.0);
        assert!(matches!(Equalizer::new(&h, &p, 0.0, 1.0, FdeMode::Zf), Err(Error::SingularMatrix(_))));
        assert!(Equalizer::new(&h, &p, 0.1, 1.0, FdeMode::Mmse).is_ok());
    }

    #[test]
    fn mmse_beats_zf_in_mean_square_error() {
        let (s, d, n0) = (8, 8, 0.1);
        let pbar = dft_matrix(s).unwrap();
        let mut rng = seeded(31);
        let mut wins = 0;
        for _ in 0..100 {
            let h: Vec<C64> = (0..s).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
            let zf = Equalizer::new(&h, &pbar, n0, 1.0, FdeMode::Zf).unwrap();
            let mm = Equalizer::new(&h, &pbar, n0, 1.0, FdeMode::Mmse).unwrap();
            let (mut e_zf, mut e_mm) = (0.0, 0.0);
            for _ in 0..200 {
                let x: Vec<C64> = (0..d).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
                let sx = &pbar * ComplexVec::from_column_slice(&x);
                let r: Vec<C64> = (0..s).map(|i| h[i] * sx[i] + complex_gaussian(&mut rng, n0)).collect();
                let a = zf.equalize(&r).unwrap();
                let b = mm.equalize(&r).unwrap();
                e_zf += a.iter().zip(&x).map(|(u, v)| (u - v).norm_sqr()).sum::<f64>();
                e_mm += b.iter().zip(&x).map(|(u, v)| (u - v).norm_sqr()).sum::<f64>();
            }
            if e_mm <= e_zf {
                wins += 1;
            }
        }
        assert!(wins >= 95, "{wins}");
    }

    #[test]
    fn unbiased_output_has_unit_gain() {
        let pbar = rand_mat(6, 4, 7);
        let h = rand_vec(6, 8);
        let eq = Equalizer::new(&h, &pbar, 0.5, 1.0, FdeMode::Mmse).unwrap();
        let x = rand_vec(4, 9);
        let r: Vec<C64> = (&pbar * ComplexVec::from_column_slice(&x)).iter().zip(&h).map(|(a, b)| a * b).collect();
        let d = eq.equalize_unbiased(&r).unwrap();
        let q = eq.equalize(&r).unwrap();
        for i in 0..4 {
            assert!((d[i] * eq.gain()[i] - q[i]).norm() < 1e-12);
        }
    }
}
