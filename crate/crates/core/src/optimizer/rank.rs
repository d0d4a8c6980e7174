use nalgebra::SymmetricEigen;

use crate::dsp::{ComplexMat, C64};
use crate::error::{Error, Result};

/// Eigenpairs of a Hermitian matrix sorted by decreasing eigenvalue.
pub(crate) fn sorted_eigen(x: &ComplexMat) -> (Vec<f64>, ComplexMat) {
    let eig = SymmetricEigen::new(x.clone());
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = ComplexMat::from_fn(x.nrows(), idx.len(), |r, c| eig.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

/// `lambda_2 / lambda_1` (0 for a 1x1 matrix).
pub fn rank_ratio(x: &ComplexMat) -> f64 {
    let (vals, _) = sorted_eigen(x);
    if vals.len() < 2 || vals[0] <= 0.0 {
        return if vals.len() < 2 { 0.0 } else { f64::INFINITY };
    }
    vals[1].max(0.0) / vals[0]
}

/// Projector onto the `S - 1` trailing eigenvectors of `Y`.
pub fn build_direction_matrix(y: &ComplexMat) -> ComplexMat {
    let (_, vecs) = sorted_eigen(y);
    let s = y.nrows();
    let u1 = vecs.column(0);
    ComplexMat::identity(s, s) - &u1 * u1.adjoint()
}

/// `p = sqrt(lambda_1) u_1` with the largest-magnitude entry made real positive.
pub fn extract_rank_one(x: &ComplexMat, rank_one_tol: f64) -> Result<Vec<C64>> {
    let (vals, vecs) = sorted_eigen(x);
    if vals.is_empty() || !(vals[0] > 0.0) {
        return Err(Error::NotRankOne { ratio: f64::INFINITY });
    }
    let ratio = if vals.len() > 1 { vals[1].max(0.0) / vals[0] } else { 0.0 };
    if ratio > rank_one_tol {
        return Err(Error::NotRankOne { ratio });
    }
    let scale = vals[0].sqrt();
    let mut p: Vec<C64> = vecs.column(0).iter().map(|v| v * scale).collect();
    let lead = p.iter().cloned().fold(C64::new(0.0, 0.0), |a, b| if b.norm() > a.norm() { b } else { a });
    let rot = lead.conj() / lead.norm();
    p.iter_mut().for_each(|v| *v *= rot);
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{complex_gaussian, seeded, ComplexVec};

    fn rand_vec(n: usize, seed: u64) -> ComplexVec {
        let mut r = seeded(seed);
        ComplexVec::from_fn(n, |_, _| complex_gaussian(&mut r, 1.0))
    }

    #[test]
    fn exact_rank_one_recovered() {
        let q = rand_vec(6, 1);
        let x = &q * q.adjoint();
        let p = extract_rank_one(&x, 1e-9).unwrap();
        let pv = ComplexVec::from_vec(p.clone());
        assert!((&pv * pv.adjoint() - &x).norm() <= 1e-10 * x.norm().max(1.0));
        let lead = p.iter().cloned().fold(C64::new(0.0, 0.0), |a, b| if b.norm() > a.norm() { b } else { a });
        assert!(lead.im.abs() < 1e-12 && lead.re > 0.0);
    }

    #[test]
    fn identity_is_not_rank_one() {
        let x = ComplexMat::identity(4, 4);
        assert!(matches!(extract_rank_one(&x, 0.5), Err(Error::NotRankOne { .. })));
    }

    #[test]
    fn nearly_rank_one() {
        let q = rand_vec(5, 2).normalize();
        let mut r = rand_vec(5, 3);
        r -= &q * q.dotc(&r);
        let r = r.normalize();
        let x = &q * q.adjoint() * C64::new(0.999, 0.0) + &r * r.adjoint() * C64::new(0.001, 0.0);
        let p = extract_rank_one(&x, 0.01).unwrap();
        let pv = ComplexVec::from_vec(p);
        let resid = (&pv * pv.adjoint() - &x).norm() / x.norm();
        assert!((resid - 0.001).abs() < 1e-4, "{resid}");
        assert!(resid <= 2.0 * 0.01f64.sqrt());
    }

    #[test]
    fn direction_matrix_properties() {
        let q = rand_vec(5, 4);
        let y = &q * q.adjoint();
        let b = build_direction_matrix(&y);
        assert!((&y * &b).trace().re.abs() <= 1e-10 * y.norm());
        assert!((&b * &b - &b).norm() <= 1e-10);
        let b = build_direction_matrix(&ComplexMat::identity(5, 5));
        assert!(((ComplexMat::identity(5, 5) * &b).trace().re - 4.0).abs() < 1e-10);
    }
}
