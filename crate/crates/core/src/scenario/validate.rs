use rand::Rng;
use serde::Serialize;

use crate::dsp::{complex_gaussian, dft_matrix, seeded, ComplexMat, C64};
use crate::error::Result;
use crate::link::{apply_block_fading, channel_frequency_response, fde, modulate, receive_block, serialize, FdeMode};
use crate::metrics::fourth_moment;
use crate::optimizer::QuarticKernel;
use crate::precoder::{
    legacy_config, precode_characteristic, precode_direct, precode_frequency, GuardInterval, LegacyKind, PrecodingMatrix,
    ShapingSet, WaveformConfig,
};

/// Outcome of one invariant check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, value: f64, tol: f64) -> Check {
    Check { name, passed: value <= tol, detail: format!("{value:.3e} <= {tol:.0e}") }
}

fn random_vec<R: Rng>(rng: &mut R, n: usize) -> Vec<C64> {
    (0..n).map(|_| complex_gaussian(rng, 1.0)).collect()
}

fn max_dev(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn precoder_agreement(seed: u64) -> Result<f64> {
    let mut rng = seeded(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let k = rng.gen_range(1..5);
        let m = rng.gen_range(1..7);
        let shaping = ShapingSet::from_shaping_vector(random_vec(&mut rng, k * m), k, m)?;
        let d = random_vec(&mut rng, k * m);
        let a = precode_direct(&d, &shaping)?;
        let b = precode_frequency(&d, &shaping)?;
        let c = precode_characteristic(&d, &shaping)?;
        worst = worst.max(max_dev(&a, &b)).max(max_dev(&a, &c));
    }
    Ok(worst)
}

fn legacy_reductions() -> Result<f64> {
    let (_, ofdma) = legacy_config(LegacyKind::Ofdma, 12, 64, 0, 4)?;
    let (_, sc) = legacy_config(LegacyKind::ScFdma, 12, 64, 0, 4)?;
    let a = (PrecodingMatrix::new(&ofdma)?.matrix() - ComplexMat::identity(12, 12)).norm();
    let b = (PrecodingMatrix::new(&sc)?.matrix() - dft_matrix(12)?).norm();
    Ok(a.max(b))
}

fn unit_modulus_unitarity(seed: u64) -> Result<f64> {
    let mut rng = seeded(seed);
    let (m, k) = (4, 3);
    let gamma = ComplexMat::from_fn(m, k, |_, _| C64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU)));
    let p = PrecodingMatrix::new(&ShapingSet::from_characteristic(&gamma, m as f64)?)?;
    Ok((p.matrix().adjoint() * p.matrix() - ComplexMat::identity(k * m, k * m)).norm())
}

fn lifted_agreement(seed: u64) -> Result<f64> {
    let cfg = WaveformConfig::new(32, 2, 4, 6, GuardInterval::Cp, 4, vec![0, 1], vec![1, 2, 3])?;
    let kernel = QuarticKernel::build(&cfg, 1.0, 1.32, 64)?;
    let mut rng = seeded(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let p = random_vec(&mut rng, 8);
        let v = nalgebra::DVector::from_column_slice(&p);
        let lifted = kernel.evaluate(&(&v * v.adjoint()));
        let direct = fourth_moment(&p, &cfg, 1.0, 1.32)?;
        worst = worst.max((lifted - direct).abs() / direct.abs());
    }
    Ok(worst)
}

fn perfect_reconstruction(seed: u64) -> Result<f64> {
    let cfg = WaveformConfig::full(64, 2, 6, 10, GuardInterval::Cp, 8)?;
    let mut rng = seeded(seed);
    let gamma = ComplexMat::from_fn(6, 2, |_, _| C64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU)));
    let p = PrecodingMatrix::new(&ShapingSet::from_characteristic(&gamma, 6.0)?)?;
    let blocks = 20;
    let data: Vec<Vec<C64>> = (0..blocks).map(|_| random_vec(&mut rng, 12)).collect();
    let signals = data.iter().enumerate().map(|(b, d)| modulate(&p.apply(d)?, &cfg, b)).collect::<Result<Vec<_>>>()?;
    let taps: Vec<Vec<C64>> = (0..blocks).map(|_| random_vec(&mut rng, 6)).collect();
    let y = apply_block_fading(&serialize(&signals), cfg.block_len(), &taps)?;
    let mut worst: f64 = 0.0;
    for b in 0..blocks {
        let r = receive_block(&y[b * cfg.block_len()..(b + 1) * cfg.block_len()], &cfg)?;
        let h = channel_frequency_response(&taps[b], &cfg);
        let d = fde(&r, &h, p.matrix(), 0.0, 1.0, FdeMode::Zf)?;
        worst = worst.max(max_dev(&d, &data[b]));
    }
    Ok(worst)
}

fn mmse_limit(seed: u64) -> Result<f64> {
    let mut rng = seeded(seed);
    let pbar = ComplexMat::from_fn(8, 4, |_, _| complex_gaussian(&mut rng, 1.0));
    let h = random_vec(&mut rng, 8);
    let r = random_vec(&mut rng, 8);
    let zf = fde(&r, &h, &pbar, 0.0, 1.0, FdeMode::Zf)?;
    let mmse = fde(&r, &h, &pbar, 1e-12, 1.0, FdeMode::Mmse)?;
    Ok(max_dev(&zf, &mmse))
}

/// Fast self-checks of the core identities.
pub fn invariant_suite(seed: u64) -> Vec<Check> {
    let run = |name: &'static str, r: Result<f64>, tol: f64| match r {
        Ok(v) => check(name, v, tol),
        Err(e) => Check { name, passed: false, detail: e.to_string() },
    };
    vec![
        run("precoder implementations agree", precoder_agreement(seed), 1e-10),
        run("OFDMA and SC-FDMA reductions", legacy_reductions(), 1e-12),
        run("unit-modulus characteristic is unitary", unit_modulus_unitarity(seed), 1e-8),
        run("lifted quartic form", lifted_agreement(seed), 1e-8),
        run("noiseless multipath reconstruction", perfect_reconstruction(seed), 1e-9),
        run("MMSE approaches ZF", mmse_limit(seed), 1e-6),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes() {
        for c in invariant_suite(3) {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
