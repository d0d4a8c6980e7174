use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dsp::QamConstellation;
use crate::error::{Error, Result};
use crate::link::{ChannelProfile, FdeMode, PaModel};
use crate::optimizer::OptimizerParams;
use crate::precoder::GuardInterval;

/// Uplink evaluation case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    /// Single target user.
    #[serde(rename = "1b")]
    Case1b,
    /// Target plus asynchronous interferers in the same numerology.
    #[serde(rename = "3")]
    Case3,
    /// Target plus synchronous interferers with a wider subcarrier spacing.
    #[serde(rename = "4")]
    Case4,
}

/// Where a CPS user's prototype shaping vector comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum ShapingSource {
    /// JSON shaping file written by `optimize`; relative paths start at the config file.
    File { path: PathBuf },
    /// Explicit vector.
    Vector { re: Vec<f64>, im: Vec<f64> },
    /// Run the optimizer while resolving the scenario.
    Optimize {
        #[serde(flatten)]
        params: OptimizerParams,
    },
    /// Reuse the target user's vector (interferers only).
    Target,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WaveformSpec {
    Ofdma,
    ScFdma,
    SsScFdma { data_k: usize },
    ZtDftSOfdm,
    Cps {
        k: usize,
        m: usize,
        /// Defaults to every block.
        #[serde(default)]
        data_k: Option<Vec<usize>>,
        /// Defaults to every position.
        #[serde(default)]
        data_m: Option<Vec<usize>>,
        shaping: ShapingSource,
    },
}

/// One user. The first entry of [`ScenarioConfig::users`] is the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserConfig {
    pub name: String,
    pub fft_size: usize,
    #[serde(default = "default_guard")]
    pub guard: GuardInterval,
    pub guard_len: usize,
    pub first_subcarrier: usize,
    pub subcarriers: usize,
    /// Delay of this user's stream at the receiver, in samples.
    #[serde(default)]
    pub offset: usize,
    /// Linear power scale applied after the channel.
    #[serde(default = "one")]
    pub power: f64,
    pub waveform: WaveformSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ChannelSpec {
    /// Unit tap, AWGN only.
    Awgn,
    /// Rayleigh taps with an exponential power-delay profile (`order = 0` is flat fading).
    Exponential { order: usize, decay_db: f64 },
    /// TOML `taps = [[delay_ns, power_db], ...]`.
    File { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Framing {
    pub blocks_per_tti: usize,
    pub tti_s: f64,
}

impl Default for Framing {
    fn default() -> Self {
        Self { blocks_per_tti: 14, tti_s: 1e-3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricSettings {
    pub samples_per_subcarrier: usize,
    pub papr_oversampling: usize,
    pub papr_step_db: f64,
    pub papr_max_db: f64,
}

impl Default for MetricSettings {
    fn default() -> Self {
        Self { samples_per_subcarrier: 10, papr_oversampling: 4, papr_step_db: 0.1, papr_max_db: 16.0 }
    }
}

/// A complete evaluation run, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub case: Case,
    #[serde(default)]
    pub seed: u64,
    /// Target blocks per operating point.
    pub blocks: usize,
    pub ebn0_db: Vec<f64>,
    #[serde(default = "default_qam")]
    pub qam_order: usize,
    #[serde(default = "default_fde")]
    pub fde: FdeMode,
    /// Guard band around the target, in target subcarriers.
    pub guard_band: usize,
    /// Target subcarrier spacing.
    #[serde(default = "default_spacing")]
    pub subcarrier_spacing_hz: f64,
    #[serde(default)]
    pub framing: Framing,
    #[serde(default)]
    pub metrics: MetricSettings,
    pub channel: ChannelSpec,
    #[serde(default = "PaModel::identity")]
    pub pa: PaModel,
    pub users: Vec<UserConfig>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_guard() -> GuardInterval {
    GuardInterval::Cp
}

fn one() -> f64 {
    1.0
}

fn default_qam() -> usize {
    16
}

fn default_fde() -> FdeMode {
    FdeMode::Mmse
}

fn default_spacing() -> f64 {
    15e3
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a config file; relative paths inside resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    /// Data constellation at unit symbol energy.
    pub fn constellation(&self) -> Result<QamConstellation> {
        QamConstellation::new(self.qam_order, 1.0).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn target(&self) -> &UserConfig {
        &self.users[0]
    }

    pub fn resolve_path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Common sample rate `N f_sc` of the target numerology.
    pub fn sample_rate_hz(&self) -> f64 {
        self.target().fft_size as f64 * self.subcarrier_spacing_hz
    }

    /// Subcarrier-spacing multiple of user `u` relative to the target.
    pub fn spacing_ratio(&self, u: usize) -> usize {
        self.target().fft_size / self.users[u].fft_size
    }

    /// Number of blocks user `u` sends while the target sends one.
    pub fn block_ratio(&self, u: usize) -> usize {
        let t = &self.users[0];
        let x = &self.users[u];
        (t.fft_size + t.guard_len) / (x.fft_size + x.guard_len)
    }

    pub fn channel_profile(&self) -> Result<ChannelProfile> {
        match &self.channel {
            ChannelSpec::Awgn => Ok(ChannelProfile::flat()),
            ChannelSpec::Exponential { order, decay_db } => Ok(ChannelProfile::exponential(*order, *decay_db)),
            ChannelSpec::File { path } => ChannelProfile::from_file(&self.resolve_path(path), self.sample_rate_hz()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.users.is_empty() {
            return bad("at least one user is required".into());
        }
        if self.blocks == 0 {
            return bad("blocks must be positive".into());
        }
        if self.ebn0_db.iter().any(|v| !v.is_finite()) {
            return bad("Eb/N0 values must be finite".into());
        }
        if !(self.subcarrier_spacing_hz > 0.0) {
            return bad("subcarrier spacing must be positive".into());
        }
        if self.metrics.samples_per_subcarrier == 0 || self.metrics.papr_oversampling == 0 || !(self.metrics.papr_step_db > 0.0) {
            return bad("metric settings must be positive".into());
        }
        let t = self.target();
        if matches!(t.waveform, WaveformSpec::Cps { shaping: ShapingSource::Target, .. }) {
            return bad("the target user cannot reuse its own shaping".into());
        }
        let n_int = self.users.len() - 1;
        match self.case {
            Case::Case1b if n_int != 0 => return bad("case 1b has a single user".into()),
            Case::Case3 | Case::Case4 if n_int == 0 => return bad("cases 3 and 4 need interfering users".into()),
            _ => {}
        }
        if t.offset != 0 {
            return bad("the target timing is the receiver reference; its offset must be 0".into());
        }
        let target_len = t.fft_size + t.guard_len;
        let mut occupied: Vec<(usize, usize, &str)> = Vec::new();
        for (i, u) in self.users.iter().enumerate() {
            if u.fft_size == 0 || u.subcarriers == 0 || u.first_subcarrier + u.subcarriers > u.fft_size {
                return bad(format!("user {}: subcarriers do not fit the FFT", u.name));
            }
            if !(u.power.is_finite() && u.power >= 0.0) {
                return bad(format!("user {}: power must be nonnegative", u.name));
            }
            if t.fft_size % u.fft_size != 0 {
                return bad(format!("user {}: FFT size {} does not divide the target's {}", u.name, u.fft_size, t.fft_size));
            }
            let len = u.fft_size + u.guard_len;
            if target_len % len != 0 {
                return bad(format!("user {}: block length {len} does not divide the target block length {target_len}", u.name));
            }
            let r = t.fft_size / u.fft_size;
            let same = r == 1;
            match self.case {
                Case::Case1b | Case::Case3 if !same => return bad(format!("user {}: cases 1b and 3 share one numerology", u.name)),
                Case::Case4 if i > 0 && same => return bad(format!("user {}: case 4 interferers use a wider spacing", u.name)),
                _ => {}
            }
            occupied.push((u.first_subcarrier * r, (u.first_subcarrier + u.subcarriers) * r, &u.name));
        }
        for i in 0..occupied.len() {
            for j in i + 1..occupied.len() {
                let (a, b) = (occupied[i], occupied[j]);
                if a.0 < b.1 && b.0 < a.1 {
                    return bad(format!("users {} and {} overlap in frequency", a.2, b.2));
                }
            }
        }
        Ok(())
    }
}
