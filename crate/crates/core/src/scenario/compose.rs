use crate::dsp::{complex_gaussian, C64, ZERO};
use crate::error::{Error, Result};

/// One user's channel output at the common sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct UserStream {
    pub samples: Vec<C64>,
    pub sample_rate_hz: f64,
    /// Arrival delay in samples relative to the receiver timing.
    pub offset: usize,
}

/// Sums the delayed user streams and adds one AWGN realization of variance `noise_var`.
///
/// Delayed samples falling past the end of the observation window are dropped.
pub fn compose_multiuser<R: rand::Rng + ?Sized>(streams: &[UserStream], noise_var: f64, rng: &mut R) -> Result<Vec<C64>> {
    let first = streams.first().ok_or_else(|| Error::InvalidConfig("no user streams".into()))?;
    let len = first.samples.len();
    for s in streams {
        if s.sample_rate_hz != first.sample_rate_hz {
            return Err(Error::InvalidConfig(format!(
                "sample rates {} and {} differ",
                s.sample_rate_hz, first.sample_rate_hz
            )));
        }
        if s.samples.len() != len {
            return Err(Error::InvalidConfig(format!("stream lengths {} and {len} differ", s.samples.len())));
        }
    }
    if !(noise_var.is_finite() && noise_var >= 0.0) {
        return Err(Error::InvalidArgument(format!("noise variance {noise_var}")));
    }
    let mut out = vec![ZERO; len];
    for s in streams {
        for (o, v) in out[s.offset.min(len)..].iter_mut().zip(&s.samples) {
            *o += v;
        }
    }
    if noise_var > 0.0 {
        out.iter_mut().for_each(|v| *v += complex_gaussian(rng, noise_var));
    }
    Ok(out)
}

/// Composes a target stream of `target_block_len`-sample blocks with interferers whose
/// blocks are `block_len` samples long (several interferer blocks per target block).
pub fn compose_mixed_numerology<R: rand::Rng + ?Sized>(
    target: &UserStream,
    target_block_len: usize,
    interferers: &[(usize, UserStream)],
    noise_var: f64,
    rng: &mut R,
) -> Result<Vec<C64>> {
    if target_block_len == 0 || target.samples.len() % target_block_len != 0 {
        return Err(Error::InvalidConfig("target stream is not a whole number of blocks".into()));
    }
    let mut all = vec![target.clone()];
    for (block_len, s) in interferers {
        if *block_len == 0 || target_block_len % block_len != 0 {
            return Err(Error::InvalidConfig(format!(
                "interferer block length {block_len} does not divide the target block length {target_block_len}"
            )));
        }
        all.push(s.clone());
    }
    compose_multiuser(&all, noise_var, rng)
}
