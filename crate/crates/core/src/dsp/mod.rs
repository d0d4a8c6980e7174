//! Complex linear algebra and modulation primitives shared by the rest of the crate.

mod fft;
mod qam;
mod rng;

pub use fft::{fft_unitary, ifft_unitary, FftCache};
pub use qam::QamConstellation;
pub use rng::{complex_gaussian, derive_seed, seeded, SimRng};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type ComplexVec = DVector<C64>;
pub type ComplexMat = DMatrix<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Normalized `n`-point DFT matrix with entry `(k, m) = exp(-j 2 pi k m / n) / sqrt(n)`.
pub fn dft_matrix(n: usize) -> Result<ComplexMat> {
    if n == 0 {
        return Err(Error::InvalidDimension("DFT size must be at least 1".into()));
    }
    let scale = 1.0 / (n as f64).sqrt();
    Ok(ComplexMat::from_fn(n, n, |k, m| {
        // reduce the exponent modulo n before converting to keep the phase exact
        let e = ((k * m) % n) as f64;
        C64::from_polar(scale, -2.0 * std::f64::consts::PI * e / n as f64)
    }))
}

/// `size x size` permutation that circularly shifts a vector down by `shift`.
pub fn downshift_permutation(size: usize, shift: usize) -> Result<ComplexMat> {
    if size == 0 {
        return Err(Error::InvalidDimension("permutation size must be at least 1".into()));
    }
    if shift >= size {
        return Err(Error::InvalidArgument(format!(
            "shift {shift} must be smaller than size {size}"
        )));
    }
    let mut c = ComplexMat::zeros(size, size);
    for i in 0..size {
        c[(i, (i + size - shift) % size)] = ONE;
    }
    Ok(c)
}

/// Applies the downshift permutation without materializing it: `out[i] = v[(i - shift) mod n]`.
pub fn downshift(v: &[C64], shift: usize) -> Vec<C64> {
    let n = v.len();
    (0..n).map(|i| v[(i + n - shift % n) % n]).collect()
}

/// Transposed downshift (an upshift): `out[i] = v[(i + shift) mod n]`.
pub fn upshift(v: &[C64], shift: usize) -> Vec<C64> {
    let n = v.len();
    (0..n).map(|i| v[(i + shift) % n]).collect()
}

/// `M x K` matrix with `(m, k)` entry `x[k M + m]`.
pub fn reshape(x: &[C64], rows: usize, cols: usize) -> Result<ComplexMat> {
    if x.len() != rows * cols {
        return Err(Error::InvalidDimension(format!(
            "cannot reshape length {} into {rows}x{cols}",
            x.len()
        )));
    }
    Ok(ComplexMat::from_column_slice(rows, cols, x))
}

/// Column-wise vectorization, the inverse of [`reshape`].
pub fn vec_of(m: &ComplexMat) -> ComplexVec {
    ComplexVec::from_column_slice(m.as_slice())
}

/// Frobenius norm of `a - b`.
pub fn frobenius_distance(a: &ComplexMat, b: &ComplexMat) -> f64 {
    (a - b).norm()
}

/// Hermitian part `(A + A^H) / 2`.
pub fn hermitian_part(a: &ComplexMat) -> ComplexMat {
    (a + a.adjoint()).scale(0.5)
}
