use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CcdfPoint;
use crate::error::{Error, Result};

/// Collected metrics of one waveform / operating point.
///
/// CSV layout (stable): `psd.csv` has `omega,psd_db,osb` per grid point and
/// `ccdf.csv` has `threshold_db,probability` per CCDF point.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub omega: Vec<f64>,
    pub psd_db: Vec<f64>,
    pub osb_mask: Vec<bool>,
    pub osbep: Option<f64>,
    pub mip: Option<f64>,
    pub vip: Option<f64>,
    pub papr_ccdf: Vec<CcdfPoint>,
    pub ber: Option<f64>,
    pub spectral_efficiency: Option<f64>,
}

impl MetricReport {
    pub fn validate(&self) -> Result<()> {
        if self.omega.len() != self.psd_db.len() || (!self.osb_mask.is_empty() && self.osb_mask.len() != self.omega.len()) {
            return Err(Error::InvalidDimension("PSD columns have different lengths".into()));
        }
        for w in self.papr_ccdf.windows(2) {
            if w[1].threshold_db < w[0].threshold_db || w[1].probability > w[0].probability {
                return Err(Error::InvalidArgument("CCDF must be nonincreasing in the threshold".into()));
            }
        }
        if self.papr_ccdf.iter().any(|p| !(0.0..=1.0).contains(&p.probability)) {
            return Err(Error::InvalidArgument("CCDF probability outside [0, 1]".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn write_psd_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["omega", "psd_db", "osb"]).map_err(csv_err)?;
        for (i, (o, p)) in self.omega.iter().zip(&self.psd_db).enumerate() {
            let m = self.osb_mask.get(i).copied().unwrap_or(false) as u8;
            w.write_record([o.to_string(), p.to_string(), m.to_string()]).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_ccdf_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["threshold_db", "probability"]).map_err(csv_err)?;
        for p in &self.papr_ccdf {
            w.write_record([p.threshold_db.to_string(), p.probability.to_string()]).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `report.json`, `psd.csv` and `ccdf.csv` into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.to_json()?)?;
        self.write_psd_csv(std::fs::File::create(dir.join("psd.csv"))?)?;
        self.write_ccdf_csv(std::fs::File::create(dir.join("ccdf.csv"))?)?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Parse(format!("csv: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_and_csv() {
        let r = MetricReport {
            omega: vec![-1.0, 0.0, 1.0],
            psd_db: vec![-40.0, 0.0, -41.5],
            osb_mask: vec![true, false, true],
            osbep: Some(1e-3),
            mip: Some(0.1),
            vip: Some(0.02),
            papr_ccdf: vec![
                CcdfPoint { threshold_db: 0.0, probability: 1.0 },
                CcdfPoint { threshold_db: 5.0, probability: 0.2 },
            ],
            ber: Some(0.0),
            spectral_efficiency: Some(3.4),
        };
        r.validate().unwrap();
        let back: MetricReport = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
        let mut buf = Vec::new();
        r.write_psd_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("omega,psd_db,osb\n-1,-40,1\n"));
        let mut bad = r.clone();
        bad.papr_ccdf[1].probability = 1.5;
        assert!(bad.validate().is_err());
    }
}
