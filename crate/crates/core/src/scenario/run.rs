use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::compose::{compose_mixed_numerology, compose_multiuser, UserStream};
use super::config::{ChannelSpec, ScenarioConfig, ShapingSource, WaveformSpec};
use crate::dsp::{derive_seed, seeded, QamConstellation, C64, ZERO};
use crate::error::{Error, Result};
use crate::link::{
    apply_block_fading, channel_frequency_response, modulate, pa_apply, receive_block, serialize, Equalizer,
};
use crate::metrics::{
    ber, mip, osbep, osbep_matrix, oversampled_block, papr_ccdf, psd_closed_form, spectral_efficiency, to_db_relative,
    vip_closed_form, welch_psd, FrequencyGrid, MetricReport, SeParams,
};
use crate::optimizer::{run_algorithm1, write_trace_csv, OptimizerOutcome, TraceRow};
use crate::precoder::{legacy_config, LegacyKind, PrecodingMatrix, ShapingFile, ShapingSet, WaveformConfig};

const STREAM_DATA: u64 = 0;
const STREAM_CHANNEL: u64 = 1;
const STREAM_NOISE: u64 = 1 << 32;

/// A user with its waveform and shaping fixed.
#[derive(Debug, Clone)]
pub struct ResolvedUser {
    pub name: String,
    pub cfg: WaveformConfig,
    pub shaping: ShapingSet,
    pub offset: usize,
    pub power: f64,
    /// Blocks sent per target block.
    pub block_ratio: usize,
    /// Guard band in this user's subcarriers.
    pub guard_band: usize,
    pub trace: Vec<TraceRow>,
}

impl ResolvedUser {
    /// PSD grid whose out-of-subband region lies outside the guard band.
    pub fn grid(&self, samples_per_subcarrier: usize) -> Result<FrequencyGrid> {
        let r = self.cfg.occupied_subcarriers();
        FrequencyGrid::outside(
            self.cfg.fft_size,
            samples_per_subcarrier,
            r.start.saturating_sub(self.guard_band),
            (r.end + self.guard_band).min(self.cfg.fft_size),
        )
    }
}

fn user_waveform(sc: &ScenarioConfig, u: usize) -> Result<WaveformConfig> {
    let x = &sc.users[u];
    let legacy = |kind| legacy_config(kind, x.subcarriers, x.fft_size, x.first_subcarrier, x.guard_len).map(|r| r.0);
    match &x.waveform {
        WaveformSpec::Ofdma => legacy(LegacyKind::Ofdma),
        WaveformSpec::ScFdma => legacy(LegacyKind::ScFdma),
        WaveformSpec::SsScFdma { data_k } => legacy(LegacyKind::SsScFdma { data_k: *data_k }),
        WaveformSpec::ZtDftSOfdm => legacy(LegacyKind::ZtDftSOfdm),
        WaveformSpec::Cps { k, m, data_k, data_m, .. } => {
            if k * m != x.subcarriers {
                return Err(Error::InvalidConfig(format!("user {}: K M = {} but S = {}", x.name, k * m, x.subcarriers)));
            }
            WaveformConfig::new(
                x.fft_size,
                *k,
                *m,
                x.first_subcarrier,
                x.guard,
                x.guard_len,
                data_k.clone().unwrap_or_else(|| (0..*k).collect()),
                data_m.clone().unwrap_or_else(|| (0..*m).collect()),
            )
        }
    }
}

/// Resolves every user, running the optimizer where the config asks for it.
pub fn resolve_users(sc: &ScenarioConfig) -> Result<Vec<ResolvedUser>> {
    sc.validate()?;
    let mut out: Vec<ResolvedUser> = Vec::with_capacity(sc.users.len());
    for (u, x) in sc.users.iter().enumerate() {
        let cfg = user_waveform(sc, u)?;
        let ratio = sc.spacing_ratio(u);
        let mut user = ResolvedUser {
            name: x.name.clone(),
            shaping: ShapingSet::from_shaping_vector(vec![C64::new(1.0, 0.0)], 1, 1)?,
            cfg: cfg.clone(),
            offset: x.offset,
            power: x.power,
            block_ratio: sc.block_ratio(u),
            guard_band: sc.guard_band.div_ceil(ratio),
            trace: Vec::new(),
        };
        user.shaping = match &x.waveform {
            WaveformSpec::Ofdma => legacy_config(LegacyKind::Ofdma, x.subcarriers, x.fft_size, x.first_subcarrier, x.guard_len)?.1,
            WaveformSpec::ScFdma => legacy_config(LegacyKind::ScFdma, x.subcarriers, x.fft_size, x.first_subcarrier, x.guard_len)?.1,
            WaveformSpec::SsScFdma { data_k } => {
                legacy_config(LegacyKind::SsScFdma { data_k: *data_k }, x.subcarriers, x.fft_size, x.first_subcarrier, x.guard_len)?.1
            }
            WaveformSpec::ZtDftSOfdm => {
                legacy_config(LegacyKind::ZtDftSOfdm, x.subcarriers, x.fft_size, x.first_subcarrier, x.guard_len)?.1
            }
            WaveformSpec::Cps { k, m, shaping, .. } => match shaping {
                ShapingSource::File { path } => {
                    let s = ShapingSet::load(&sc.resolve_path(path))?;
                    if (s.k(), s.m()) != (*k, *m) {
                        return Err(Error::InvalidConfig(format!("user {}: shaping file has K, M = {}, {}", x.name, s.k(), s.m())));
                    }
                    s
                }
                ShapingSource::Vector { re, im } => {
                    if re.len() != im.len() {
                        return Err(Error::InvalidConfig(format!("user {}: re and im lengths differ", x.name)));
                    }
                    let p = re.iter().zip(im).map(|(a, b)| C64::new(*a, *b)).collect();
                    ShapingSet::from_shaping_vector(p, *k, *m).map_err(|e| Error::InvalidConfig(format!("user {}: {e}", x.name)))?
                }
                ShapingSource::Optimize { params } => {
                    let grid = user.grid(sc.metrics.samples_per_subcarrier)?;
                    let outcome = run_algorithm1(&cfg, &grid, params)?;
                    user.trace = outcome.trace;
                    outcome.shaping
                }
                ShapingSource::Target => {
                    let t = &out[0].shaping;
                    if (t.k(), t.m()) != (*k, *m) {
                        return Err(Error::InvalidConfig(format!("user {}: K, M differ from the target's", x.name)));
                    }
                    t.clone()
                }
            },
        };
        out.push(user);
    }
    Ok(out)
}

/// Optimizes the target user's shaping vector (its config must request `optimize`).
pub fn optimize_target(sc: &ScenarioConfig) -> Result<(WaveformConfig, OptimizerOutcome)> {
    sc.validate()?;
    let t = sc.target();
    let WaveformSpec::Cps { shaping: ShapingSource::Optimize { params }, .. } = &t.waveform else {
        return Err(Error::InvalidConfig("the target user does not request optimization".into()));
    };
    let cfg = user_waveform(sc, 0)?;
    let r = cfg.occupied_subcarriers();
    let grid = FrequencyGrid::outside(
        cfg.fft_size,
        sc.metrics.samples_per_subcarrier,
        r.start.saturating_sub(sc.guard_band),
        (r.end + sc.guard_band).min(cfg.fft_size),
    )?;
    let out = run_algorithm1(&cfg, &grid, params)?;
    Ok((cfg, out))
}

/// Everything a user puts on the air, before noise.
#[derive(Debug, Clone)]
pub struct Transmission {
    pub bits: Vec<u8>,
    /// Precoded symbols per block.
    pub precoded: Vec<Vec<C64>>,
    /// PA output stream.
    pub tx: Vec<C64>,
    /// Channel taps per block.
    pub taps: Vec<Vec<C64>>,
    /// Channel output scaled by the user's power, without delay or noise.
    pub rx: Vec<C64>,
}

/// Generates `blocks` blocks of user `index` through PA and channel.
pub fn transmit(sc: &ScenarioConfig, user: &ResolvedUser, index: usize, blocks: usize, qam: &QamConstellation) -> Result<Transmission> {
    let cfg = &user.cfg;
    let pos = cfg.data_positions();
    let precoder = PrecodingMatrix::new(&user.shaping)?;
    let nbits = pos.len() * qam.bits_per_symbol();
    let mut data_rng = seeded(derive_seed(sc.seed, &[index as u64, STREAM_DATA]));
    let mut bits = Vec::with_capacity(nbits * blocks);
    let mut precoded = Vec::with_capacity(blocks);
    let mut signals = Vec::with_capacity(blocks);
    for b in 0..blocks {
        let block_bits: Vec<u8> = (0..nbits).map(|_| rand::Rng::gen_range(&mut data_rng, 0..2u8)).collect();
        let syms = qam.map(&block_bits)?;
        let mut d = vec![ZERO; cfg.subcarriers()];
        for (&p, &v) in pos.iter().zip(&syms) {
            d[p] = v;
        }
        let s = precoder.apply(&d)?;
        signals.push(modulate(&s, cfg, b)?);
        precoded.push(s);
        bits.extend(block_bits);
    }
    let tx = pa_apply(&serialize(&signals), &sc.pa);
    let taps: Vec<Vec<C64>> = if matches!(sc.channel, ChannelSpec::Awgn) {
        vec![vec![C64::new(1.0, 0.0)]; blocks]
    } else {
        let profile = sc.channel_profile()?;
        let mut ch_rng = seeded(derive_seed(sc.seed, &[index as u64, STREAM_CHANNEL]));
        (0..blocks).map(|_| profile.draw(&mut ch_rng)).collect()
    };
    let mut rx = apply_block_fading(&tx, cfg.block_len(), &taps)?;
    if user.power != 1.0 {
        let g = user.power.sqrt();
        rx.iter_mut().for_each(|v| *v *= g);
    }
    Ok(Transmission { bits, precoded, tx, taps, rx })
}

/// Target-user detection result at one operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointReport {
    pub ebn0_db: f64,
    pub n0: f64,
    pub bits: usize,
    pub bit_errors: usize,
    pub ber: f64,
    pub spectral_efficiency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserArtifact {
    pub name: String,
    pub waveform: WaveformConfig,
    pub shaping: ShapingFile,
    /// Closed-form PSD, OSBEP, MIP, VIP and PAPR CCDF of the linear signal.
    pub pre_pa: MetricReport,
    /// Averaged-periodogram PSD of the PA output.
    pub post_pa: MetricReport,
    pub trace: Vec<TraceRow>,
}

/// Complete output of one scenario run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunArtifact {
    pub version: String,
    pub seed: u64,
    pub config_hash: String,
    pub config: ScenarioConfig,
    pub users: Vec<UserArtifact>,
    pub points: Vec<PointReport>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| Error::Parse(e.to_string()))
}

/// `N0 = Es / (N_bit Eb/N0)`, the per-sample noise variance for unit-gain detection.
pub fn noise_variance(es: f64, bits_per_symbol: usize, ebn0_db: f64) -> f64 {
    es / (bits_per_symbol as f64 * 10f64.powf(ebn0_db / 10.0))
}

/// Closed-form PSD, OSBEP, MIP and VIP of a user's linear signal.
pub fn closed_form_report(sc: &ScenarioConfig, user: &ResolvedUser, qam: &QamConstellation) -> Result<MetricReport> {
    let grid = user.grid(sc.metrics.samples_per_subcarrier)?;
    let es = qam.symbol_energy();
    let psd = psd_closed_form(&user.shaping, &user.cfg, &grid, es)?;
    let omega = osbep_matrix(&user.cfg, &grid, es)?;
    Ok(MetricReport {
        omega: grid.omega().to_vec(),
        psd_db: to_db_relative(&psd),
        osb_mask: grid.osb_mask().to_vec(),
        osbep: Some(osbep(&omega, user.shaping.shaping_vector())),
        mip: Some(mip(&user.shaping, &user.cfg, es)),
        vip: Some(vip_closed_form(&user.shaping, &user.cfg, es, qam.fourth_moment())?),
        ..Default::default()
    })
}

/// PAPR CCDF of the oversampled linear blocks of a transmission.
pub fn papr_report(sc: &ScenarioConfig, user: &ResolvedUser, tx: &Transmission) -> Result<Vec<crate::metrics::CcdfPoint>> {
    let m = &sc.metrics;
    let blocks: Vec<Vec<C64>> = tx
        .precoded
        .iter()
        .map(|s| oversampled_block(s, &user.cfg, m.papr_oversampling))
        .collect::<Result<_>>()?;
    let steps = (m.papr_max_db / m.papr_step_db).round() as usize;
    let thresholds: Vec<f64> = (0..=steps).map(|i| i as f64 * m.papr_step_db).collect();
    papr_ccdf(&blocks, &thresholds)
}

fn user_reports(sc: &ScenarioConfig, user: &ResolvedUser, tx: &Transmission, qam: &QamConstellation) -> Result<(MetricReport, MetricReport)> {
    let mut pre = closed_form_report(sc, user, qam)?;
    pre.papr_ccdf = papr_report(sc, user, tx)?;
    let grid = user.grid(sc.metrics.samples_per_subcarrier)?;
    let welch = welch_psd(&tx.tx, user.cfg.block_len(), &grid)?;
    let post = MetricReport {
        omega: grid.omega().to_vec(),
        psd_db: to_db_relative(&welch),
        osb_mask: grid.osb_mask().to_vec(),
        ..Default::default()
    };
    Ok((pre, post))
}

fn detect_point(
    sc: &ScenarioConfig,
    users: &[ResolvedUser],
    txs: &[Transmission],
    qam: &QamConstellation,
    e: usize,
) -> Result<PointReport> {
    let ebn0_db = sc.ebn0_db[e];
    let es = qam.symbol_energy();
    let n0 = noise_variance(es, qam.bits_per_symbol(), ebn0_db);
    let rate = sc.sample_rate_hz();
    let stream = |u: usize| UserStream { samples: txs[u].rx.clone(), sample_rate_hz: rate, offset: users[u].offset };
    let mut noise_rng = seeded(derive_seed(sc.seed, &[STREAM_NOISE, e as u64]));
    let target = &users[0];
    let block_len = target.cfg.block_len();
    let y = if users.iter().any(|u| u.block_ratio != 1) {
        let others: Vec<(usize, UserStream)> = (1..users.len()).map(|u| (users[u].cfg.block_len(), stream(u))).collect();
        compose_mixed_numerology(&stream(0), block_len, &others, n0, &mut noise_rng)?
    } else {
        let all: Vec<UserStream> = (0..users.len()).map(stream).collect();
        compose_multiuser(&all, n0, &mut noise_rng)?
    };
    let pbar = PrecodingMatrix::new(&target.shaping)?.columns(&target.cfg.data_positions());
    let mut detected = Vec::with_capacity(txs[0].bits.len());
    let mut cached: Option<(Vec<C64>, Equalizer)> = None;
    for b in 0..sc.blocks {
        let r = receive_block(&y[b * block_len..(b + 1) * block_len], &target.cfg)?;
        let h = channel_frequency_response(&txs[0].taps[b], &target.cfg);
        let eq = match cached.take() {
            Some((hc, eq)) if hc == h => (hc, eq),
            _ => {
                let eq = Equalizer::new(&h, &pbar, n0, es, sc.fde)?;
                (h, eq)
            }
        };
        detected.extend(qam.demap(&eq.1.equalize_unbiased(&r)?));
        cached = Some(eq);
    }
    let sent = &txs[0].bits;
    let errors = detected.iter().zip(sent).filter(|(a, b)| a != b).count();
    let ber_value = ber(&detected, sent)?;
    let se = spectral_efficiency(
        ber_value,
        &SeParams {
            bits_per_symbol: qam.bits_per_symbol(),
            data_symbols: target.cfg.data_symbols(),
            blocks_per_tti: sc.framing.blocks_per_tti,
            tti_s: sc.framing.tti_s,
            bandwidth_hz: target.cfg.subcarriers() as f64 * sc.subcarrier_spacing_hz,
            guard_hz: sc.guard_band as f64 * sc.subcarrier_spacing_hz,
        },
    )?;
    Ok(PointReport { ebn0_db, n0, bits: sent.len(), bit_errors: errors, ber: ber_value, spectral_efficiency: se })
}

/// Runs the whole pipeline: resolve, transmit, compose, detect the target, evaluate metrics.
pub fn run_case(sc: &ScenarioConfig) -> Result<RunArtifact> {
    let users = resolve_users(sc)?;
    run_resolved(sc, &users)
}

/// [`run_case`] with the users already resolved.
pub fn run_resolved(sc: &ScenarioConfig, users: &[ResolvedUser]) -> Result<RunArtifact> {
    let qam = sc.constellation()?;
    let txs: Vec<Transmission> = users
        .iter()
        .enumerate()
        .map(|(u, x)| transmit(sc, x, u, sc.blocks * x.block_ratio, &qam))
        .collect::<Result<_>>()?;
    let points: Vec<PointReport> = (0..sc.ebn0_db.len())
        .into_par_iter()
        .map(|e| detect_point(sc, users, &txs, &qam, e))
        .collect::<Result<_>>()?;
    let mut arts = Vec::with_capacity(users.len());
    for (x, tx) in users.iter().zip(&txs) {
        let (pre_pa, post_pa) = user_reports(sc, x, tx, &qam)?;
        arts.push(UserArtifact {
            name: x.name.clone(),
            waveform: x.cfg.clone(),
            shaping: x.shaping.to_file_format(),
            pre_pa,
            post_pa,
            trace: x.trace.clone(),
        });
    }
    Ok(RunArtifact {
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: sc.seed,
        config_hash: sha256_hex(json(sc)?.as_bytes()),
        config: sc.clone(),
        users: arts,
        points,
    })
}

impl RunArtifact {
    /// SHA-256 of the JSON serialization.
    pub fn hash(&self) -> Result<String> {
        Ok(sha256_hex(json(self)?.as_bytes()))
    }

    pub fn write_ber_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["ebn0_db", "n0", "bits", "bit_errors", "ber", "spectral_efficiency"]).map_err(crate::metrics::csv_err)?;
        for p in &self.points {
            w.write_record([
                p.ebn0_db.to_string(),
                p.n0.to_string(),
                p.bits.to_string(),
                p.bit_errors.to_string(),
                p.ber.to_string(),
                p.spectral_efficiency.to_string(),
            ])
            .map_err(crate::metrics::csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `artifact.json`, `artifact.sha256`, `ber.csv` and one directory per user.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("artifact.json"), json(self)?)?;
        std::fs::write(dir.join("artifact.sha256"), format!("{}\n", self.hash()?))?;
        self.write_ber_csv(std::fs::File::create(dir.join("ber.csv"))?)?;
        for u in &self.users {
            let ud = dir.join("users").join(&u.name);
            u.pre_pa.write_dir(&ud)?;
            u.post_pa.write_psd_csv(std::fs::File::create(ud.join("psd_post_pa.csv"))?)?;
            std::fs::write(ud.join("shaping.json"), json(&u.shaping)?)?;
            if !u.trace.is_empty() {
                write_trace_csv(&u.trace, std::fs::File::create(ud.join("trace.csv"))?)?;
            }
        }
        Ok(())
    }
}
