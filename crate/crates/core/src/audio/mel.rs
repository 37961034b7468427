use ndarray::Array2;
use rustfft::{num_complex::Complex, FftPlanner};

use super::{AudioClip, FeatureConfig, FeatureKind, FeatureMatrix};
use crate::error::{Error, Result};

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular mel filters over the non-negative FFT bins.
#[derive(Debug, Clone)]
pub struct FilterBank {
    /// n_mels × (n_fft/2 + 1)
    pub weights: Array2<f64>,
    pub bin_frequencies: Vec<f64>,
    /// Peak frequency of each filter.
    pub center_frequencies: Vec<f64>,
}

impl FilterBank {
    pub fn n_mels(&self) -> usize {
        self.weights.nrows()
    }

    /// Index of the filter whose peak is closest to `hz`.
    pub fn band_for(&self, hz: f64) -> usize {
        self.center_frequencies
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - hz).abs().total_cmp(&(b.1 - hz).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }
}

pub fn mel_filterbank(config: &FeatureConfig, n_fft: usize) -> Result<FilterBank> {
    let nyquist = config.sample_rate as f64 / 2.0;
    if config.f_max > nyquist {
        return Err(Error::InvalidBand(format!(
            "f_max {} exceeds Nyquist {nyquist}",
            config.f_max
        )));
    }
    if !(config.f_min > 0.0 && config.f_min < config.f_max) {
        return Err(Error::InvalidBand(format!(
            "need 0 < f_min < f_max, got {}..{}",
            config.f_min, config.f_max
        )));
    }
    if !n_fft.is_power_of_two() {
        return Err(Error::InvalidConfig(format!("n_fft {n_fft} is not a power of two")));
    }
    if config.n_mels == 0 {
        return Err(Error::InvalidConfig("n_mels must be positive".into()));
    }

    let n_bins = n_fft / 2 + 1;
    let bin_frequencies: Vec<f64> = (0..n_bins)
        .map(|k| k as f64 * config.sample_rate as f64 / n_fft as f64)
        .collect();
    let lo = hz_to_mel(config.f_min);
    let hi = hz_to_mel(config.f_max);
    let step = (hi - lo) / (config.n_mels + 1) as f64;
    let edges: Vec<f64> = (0..config.n_mels + 2)
        .map(|i| {
            match i {
                // pin the outer edges so rounding cannot leak outside the band
                0 => config.f_min,
                i if i == config.n_mels + 1 => config.f_max,
                i => mel_to_hz(lo + step * i as f64),
            }
        })
        .collect();

    let mut weights = Array2::zeros((config.n_mels, n_bins));
    for m in 0..config.n_mels {
        let (left, center, right) = (edges[m], edges[m + 1], edges[m + 2]);
        for (k, &f) in bin_frequencies.iter().enumerate() {
            let w = if f > left && f <= center {
                (f - left) / (center - left)
            } else if f > center && f < right {
                (right - f) / (right - center)
            } else {
                0.0
            };
            weights[[m, k]] = w;
        }
        if weights.row(m).iter().all(|&w| w <= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "mel filter {m} ({left:.1}-{right:.1} Hz) covers no FFT bin; use a larger n_fft or fewer filters"
            )));
        }
    }
    Ok(FilterBank {
        weights,
        bin_frequencies,
        center_frequencies: edges[1..=config.n_mels].to_vec(),
    })
}

fn hann(len: usize) -> Vec<f64> {
    // periodic Hann
    (0..len)
        .map(|n| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / len as f64).cos())
        .collect()
}

/// Framed power spectrum through a mel filterbank, log-compressed.
///
/// Produces `floor((L - W) / H) + 1` frames for a clip of `L` samples,
/// window `W` and hop `H`.
pub fn log_mel_spectrogram(clip: &AudioClip, config: &FeatureConfig) -> Result<FeatureMatrix> {
    config.validate()?;
    if clip.sample_rate != config.sample_rate {
        return Err(Error::InvalidConfig(format!(
            "clip is at {} Hz but features expect {} Hz; resample first",
            clip.sample_rate, config.sample_rate
        )));
    }
    let window = config.window_len()?;
    let hop = config.hop_len()?;
    let n_fft = config.n_fft()?;
    let len = clip.samples.len();
    if len < window {
        return Err(Error::ClipTooShort {
            samples: len,
            window,
        });
    }
    let bank = mel_filterbank(config, n_fft)?;
    let n_frames = (len - window) / hop + 1;
    let n_bins = n_fft / 2 + 1;
    let taper = hann(window);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n_fft);
    let mut buf = vec![Complex::new(0.0, 0.0); n_fft];
    let mut power = vec![0.0f64; n_bins];
    let mut data = Vec::with_capacity(n_frames * config.n_mels);

    for frame in 0..n_frames {
        let start = frame * hop;
        for (i, slot) in buf.iter_mut().enumerate() {
            *slot = if i < window {
                Complex::new(clip.samples[start + i] as f64 * taper[i], 0.0)
            } else {
                Complex::new(0.0, 0.0)
            };
        }
        fft.process(&mut buf);
        for (p, c) in power.iter_mut().zip(&buf) {
            *p = c.norm_sqr();
        }
        for filter in bank.weights.rows() {
            let energy: f64 = filter.iter().zip(&power).map(|(w, p)| w * p).sum();
            data.push((energy + config.log_floor).ln() as f32);
        }
    }
    FeatureMatrix::new(n_frames, config.n_mels, data, FeatureKind::LogMel)
}
