use nalgebra::SymmetricEigen;

use crate::dsp::{ComplexMat, ComplexVec, C64};
use crate::error::{Error, Result};
use crate::metrics::envelope_vectors;
use crate::precoder::WaveformConfig;

/// Relative margin applied to the largest eigenvalue of `T`.
pub const LAMBDA_MARGIN: f64 = 1e-9;

/// Lifted fourth-moment kernel: `f(X) = vec(X)^H T vec(X)` reproduces the block
/// fourth moment for `X = p p^H` (column-major `vec`).
#[derive(Debug, Clone)]
pub struct QuarticKernel {
    s: usize,
    t: ComplexMat,
    lambda_max: f64,
    min_eigenvalue: f64,
}

/// `lambda_max` of a Hermitian matrix via a full eigendecomposition.
pub fn lambda_max(t: &ComplexMat) -> Result<f64> {
    Ok(extreme_eigenvalues(t)?.1)
}

fn extreme_eigenvalues(t: &ComplexMat) -> Result<(f64, f64)> {
    let max_iter = 10_000;
    let eig = SymmetricEigen::try_new(t.clone(), f64::EPSILON, max_iter)
        .ok_or_else(|| Error::Numeric { iterations: max_iter, reason: "Hermitian eigendecomposition did not converge".into() })?;
    Ok((eig.eigenvalues.min(), eig.eigenvalues.max()))
}

impl QuarticKernel {
    /// Builds `T = (1/N) sum_n [(sigma4 - 2 Es^2) sum_c vec(U) vec(U)^H + 2 Es^2 W_n^T kron W_n]`
    /// with `U = u u^H` per envelope vector and `W_n = sum_c U`.
    ///
    /// `max_dim` caps `S^2`.
    pub fn build(cfg: &WaveformConfig, es: f64, sigma4: f64, max_dim: usize) -> Result<Self> {
        cfg.validate()?;
        let s = cfg.subcarriers();
        let dim = s * s;
        if dim > max_dim {
            return Err(Error::Resource(format!("lifted dimension S^2 = {dim} exceeds the cap {max_dim}")));
        }
        let env = envelope_vectors(cfg);
        let n = env.len();
        let d = env.first().map_or(0, |r| r.len());
        // columns vec(u u^H) = conj(u) kron u
        let mut vecs = ComplexMat::zeros(dim, n * d);
        let mut t = ComplexMat::zeros(dim, dim);
        for (tn, row) in env.iter().enumerate() {
            let mut w = ComplexMat::zeros(s, s);
            for (c, u) in row.iter().enumerate() {
                let uu = u * u.adjoint();
                w += &uu;
                vecs.column_mut(tn * d + c).copy_from_slice(uu.as_slice());
            }
            kron_add(&mut t, &w.transpose(), &w, C64::new(2.0 * es * es, 0.0));
        }
        let rank_one = &vecs * vecs.adjoint();
        t += rank_one * C64::new(sigma4 - 2.0 * es * es, 0.0);
        t /= C64::new(n as f64, 0.0);
        let t = (&t + t.adjoint()) * C64::new(0.5, 0.0);
        let (min_eigenvalue, lmax) = extreme_eigenvalues(&t)?;
        Ok(Self { s, t, lambda_max: lmax, min_eigenvalue })
    }

    pub fn subcarriers(&self) -> usize {
        self.s
    }

    pub fn matrix(&self) -> &ComplexMat {
        &self.t
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    /// Smallest eigenvalue of `T` (logged: only convexity of `f` is guaranteed).
    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    /// `vec(X)^H T vec(X)`.
    pub fn evaluate(&self, x: &ComplexMat) -> f64 {
        let v = ComplexVec::from_column_slice(x.as_slice());
        v.dotc(&(&self.t * &v)).re
    }

    /// Gradient matrix of the affine surrogate: `V = (E + E^H)/2` with
    /// `E = reshape((T - lambda I) vec X)`.
    pub fn surrogate_gradient(&self, x: &ComplexMat) -> ComplexMat {
        let lam = (1.0 + LAMBDA_MARGIN) * self.lambda_max;
        let v = ComplexVec::from_column_slice(x.as_slice());
        let jv = &self.t * &v - &v * C64::new(lam, 0.0);
        let e = ComplexMat::from_column_slice(self.s, self.s, jv.as_slice());
        (&e + e.adjoint()) * C64::new(0.5, 0.0)
    }

    /// Surrogate value `2 Re vec(X)^H J vec(X_l) - vec(X_l)^H J vec(X_l) + lambda ||X||_F^2`
    /// (majorizes `f`, tangent at `X_l`).
    pub fn surrogate(&self, x: &ComplexMat, xl: &ComplexMat) -> f64 {
        let lam = (1.0 + LAMBDA_MARGIN) * self.lambda_max;
        let v = ComplexVec::from_column_slice(x.as_slice());
        let vl = ComplexVec::from_column_slice(xl.as_slice());
        let jvl = &self.t * &vl - &vl * C64::new(lam, 0.0);
        2.0 * v.dotc(&jvl).re - vl.dotc(&jvl).re + lam * v.norm_squared()
    }
}

fn kron_add(out: &mut ComplexMat, a: &ComplexMat, b: &ComplexMat, scale: C64) {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    for j in 0..ac {
        for i in 0..ar {
            let aij = a[(i, j)] * scale;
            if aij == C64::new(0.0, 0.0) {
                continue;
            }
            for q in 0..bc {
                for p in 0..br {
                    out[(i * br + p, j * bc + q)] += aij * b[(p, q)];
                }
            }
        }
    }
}
