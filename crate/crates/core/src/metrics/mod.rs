//! Spectral, envelope and link metrics: closed-form PSD and out-of-subband power,
//! instantaneous-power moments, PAPR statistics, BER and spectral efficiency.

mod grid;
mod moments;
mod papr;
mod psd;
mod report;

pub use grid::FrequencyGrid;
pub use moments::{ber, envelope_vectors, fourth_moment, mip, spectral_efficiency, vip_closed_form, SeParams};
pub use papr::{ccdf, oversampled_block, papr, papr_at_ccdf, papr_ccdf, papr_db_values, CcdfPoint};
pub use psd::{osbep, osbep_matrix, psd_closed_form, psd_kernel, to_db_relative, welch_psd, SynthesisMatrix};
pub use report::MetricReport;
pub(crate) use report::csv_err;
