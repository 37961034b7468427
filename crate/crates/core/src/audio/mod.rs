//! Audio decoding and per-frame feature extraction.

mod feat;
mod mel;
mod resample;
mod wav;

pub use feat::{load_embedding_file, read_feature_file, write_feature_file, EMBEDDING_DIM};
pub(crate) use feat::{read_feat, write_feat};
pub use mel::{hz_to_mel, log_mel_spectrogram, mel_filterbank, mel_to_hz, FilterBank};
pub use resample::{pad_or_trim, resample};
pub use wav::{load_wav, write_wav, WavEncoding};

use crate::error::{Error, Result};

/// Decoded mono waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidConfig("sample rate must be positive".into()));
        }
        if let Some(bad) = samples.iter().find(|s| !s.is_finite() || s.abs() > 1.0) {
            return Err(Error::MalformedWav(format!("sample {bad} outside [-1, 1]")));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// Parameters of the log-mel front end.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureConfig {
    pub sample_rate: u32,
    pub window_ms: f64,
    pub overlap_fraction: f64,
    pub n_mels: usize,
    pub f_min: f64,
    pub f_max: f64,
    pub target_duration_s: f64,
    pub log_floor: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            sample_rate: 16_000,
            window_ms: 96.0,
            overlap_fraction: 0.5,
            n_mels: 64,
            f_min: 125.0,
            f_max: 7500.0,
            target_duration_s: 30.0,
            log_floor: 1e-10,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_rate == 0 {
            return Err(Error::InvalidConfig("sample_rate must be positive".into()));
        }
        if !(self.f_min > 0.0 && self.f_min < self.f_max) {
            return Err(Error::InvalidBand(format!(
                "need 0 < f_min < f_max, got {}..{}",
                self.f_min, self.f_max
            )));
        }
        let nyquist = self.sample_rate as f64 / 2.0;
        if self.f_max > nyquist {
            return Err(Error::InvalidBand(format!(
                "f_max {} exceeds Nyquist {nyquist}",
                self.f_max
            )));
        }
        if !(self.overlap_fraction > 0.0 && self.overlap_fraction < 1.0) {
            return Err(Error::InvalidConfig(
                "overlap_fraction must lie in (0, 1)".into(),
            ));
        }
        if self.n_mels == 0 {
            return Err(Error::InvalidConfig("n_mels must be positive".into()));
        }
        if !(self.log_floor > 0.0) {
            return Err(Error::InvalidConfig("log_floor must be positive".into()));
        }
        if !(self.target_duration_s > 0.0) {
            return Err(Error::InvalidConfig(
                "target_duration_s must be positive".into(),
            ));
        }
        self.window_len()?;
        self.hop_len()?;
        Ok(())
    }

    /// Window length in samples; must come out integral.
    pub fn window_len(&self) -> Result<usize> {
        integral(
            self.window_ms * self.sample_rate as f64 / 1000.0,
            "window length",
        )
    }

    pub fn hop_len(&self) -> Result<usize> {
        let w = self.window_len()? as f64;
        integral(w * (1.0 - self.overlap_fraction), "hop length")
    }

    /// Next power of two at or above the window length.
    pub fn n_fft(&self) -> Result<usize> {
        Ok(self.window_len()?.next_power_of_two())
    }

    pub fn target_len(&self) -> usize {
        (self.target_duration_s * self.sample_rate as f64).round() as usize
    }
}

fn integral(x: f64, what: &str) -> Result<usize> {
    let r = x.round();
    if (x - r).abs() > 1e-9 || r < 1.0 {
        return Err(Error::InvalidConfig(format!(
            "{what} {x} is not a positive integer"
        )));
    }
    Ok(r as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    LogMel,
    Embedding,
}

/// T×D matrix of per-frame audio features, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f32>,
    pub kind: FeatureKind,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f32>, kind: FeatureKind) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        if kind == FeatureKind::Embedding && cols != EMBEDDING_DIM {
            return Err(Error::DimensionMismatch(format!(
                "embedding features must have {EMBEDDING_DIM} columns, got {cols}"
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteGradient("feature matrix".into()));
        }
        Ok(Self {
            rows,
            cols,
            data,
            kind,
        })
    }

    pub fn row(&self, t: usize) -> &[f32] {
        &self.data[t * self.cols..(t + 1) * self.cols]
    }

    /// Double-precision `rows × cols` copy.
    pub fn to_array(&self) -> ndarray::Array2<f64> {
        ndarray::Array2::from_shape_fn((self.rows, self.cols), |(r, c)| self.data[r * self.cols + c] as f64)
    }

    /// Mean over frames, one value per column.
    pub fn column_means(&self) -> Vec<f64> {
        let mut means = vec![0.0; self.cols];
        for t in 0..self.rows {
            for (m, &v) in means.iter_mut().zip(self.row(t)) {
                *m += v as f64;
            }
        }
        let n = self.rows.max(1) as f64;
        means.iter_mut().for_each(|m| *m /= n);
        means
    }
}

/// Resample, pad/trim and extract log-mel features in one go.
pub fn extract_log_mel(clip: &AudioClip, config: &FeatureConfig) -> Result<FeatureMatrix> {
    config.validate()?;
    let clip = resample(clip, config.sample_rate)?;
    let clip = pad_or_trim(&clip, config.target_duration_s);
    log_mel_spectrogram(&clip, config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_geometry() {
        let c = FeatureConfig::default();
        c.validate().unwrap();
        assert_eq!(c.window_len().unwrap(), 1536);
        assert_eq!(c.hop_len().unwrap(), 768);
        assert_eq!(c.n_fft().unwrap(), 2048);
        assert_eq!(c.target_len(), 480_000);
    }

    #[test]
    fn rejects_band_above_nyquist() {
        let c = FeatureConfig {
            f_max: 9000.0,
            ..Default::default()
        };
        assert!(matches!(c.validate(), Err(Error::InvalidBand(_))));
    }

    #[test]
    fn rejects_fractional_window() {
        let c = FeatureConfig {
            window_ms: 96.03,
            ..Default::default()
        };
        assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn clip_rejects_out_of_range_samples() {
        assert!(AudioClip::new(vec![0.0, 1.5], 16000).is_err());
        assert!(AudioClip::new(vec![0.0, f32::NAN], 16000).is_err());
        assert!(AudioClip::new(vec![0.0], 0).is_err());
    }
}
