use super::AudioClip;
use crate::error::{Error, Result};

/// Linear-interpolation resampling. Output length is the input duration
/// times the target rate, rounded to the nearest sample.
pub fn resample(clip: &AudioClip, target_rate: u32) -> Result<AudioClip> {
    if target_rate == 0 {
        return Err(Error::InvalidConfig("target rate must be positive".into()));
    }
    if clip.samples.is_empty() {
        return Err(Error::EmptyClip);
    }
    if clip.sample_rate == target_rate {
        return Ok(clip.clone());
    }
    let src = &clip.samples;
    let ratio = clip.sample_rate as f64 / target_rate as f64;
    let out_len = ((src.len() as u64 * target_rate as u64) as f64 / clip.sample_rate as f64)
        .round()
        .max(1.0) as usize;
    let last = src.len() - 1;
    let samples = (0..out_len)
        .map(|i| {
            let pos = i as f64 * ratio;
            let left = (pos.floor() as usize).min(last);
            let right = (left + 1).min(last);
            let frac = pos - left as f64;
            let v = src[left] as f64 * (1.0 - frac) + src[right] as f64 * frac;
            v.clamp(-1.0, 1.0) as f32
        })
        .collect();
    Ok(AudioClip {
        samples,
        sample_rate: target_rate,
    })
}

/// Zero-pad on the right or truncate the tail to exactly
/// `target_duration_s · sample_rate` samples.
pub fn pad_or_trim(clip: &AudioClip, target_duration_s: f64) -> AudioClip {
    let target = (target_duration_s * clip.sample_rate as f64).round() as usize;
    let mut samples = clip.samples.clone();
    samples.resize(target, 0.0);
    AudioClip {
        samples,
        sample_rate: clip.sample_rate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(value: f32, n: usize, rate: u32) -> AudioClip {
        AudioClip::new(vec![value; n], rate).unwrap()
    }

    #[test]
    fn same_rate_is_identity() {
        let clip = AudioClip::new(vec![0.1, -0.2, 0.3], 16000).unwrap();
        assert_eq!(resample(&clip, 16000).unwrap(), clip);
    }

    #[test]
    fn constant_signal_stays_constant() {
        let out = resample(&constant(0.7, 44100, 44100), 16000).unwrap();
        assert_eq!(out.sample_rate, 16000);
        assert_eq!(out.samples.len(), 16000);
        assert!(out.samples.iter().all(|&s| (s - 0.7).abs() < 1e-6));
    }

    #[test]
    fn thirty_seconds_at_cd_rate() {
        let out = resample(&constant(0.0, 30 * 44100, 44100), 16000).unwrap();
        assert_eq!(out.samples.len(), 480_000);
    }

    #[test]
    fn duration_preserved_within_one_sample() {
        for (n, from, to) in [(12345, 44100, 16000), (999, 8000, 22050), (7, 48000, 16000)] {
            let out = resample(&constant(0.1, n, from), to).unwrap();
            let expected = n as f64 * to as f64 / from as f64;
            assert!((out.samples.len() as f64 - expected).abs() <= 1.0);
        }
    }

    #[test]
    fn upsampled_ramp_is_linear() {
        let clip = AudioClip::new(vec![0.0, 0.5], 1).unwrap();
        let out = resample(&clip, 2).unwrap();
        assert_eq!(out.samples, vec![0.0, 0.25, 0.5, 0.5]);
    }

    #[test]
    fn empty_clip_is_an_error() {
        let clip = AudioClip::new(vec![], 16000).unwrap();
        assert!(matches!(resample(&clip, 8000), Err(Error::EmptyClip)));
    }

    #[test]
    fn padding_and_truncation() {
        let clip = constant(0.3, 15 * 16000, 16000);
        let padded = pad_or_trim(&clip, 30.0);
        assert_eq!(padded.samples.len(), 480_000);
        assert!(padded.samples[240_000..].iter().all(|&s| s == 0.0));
        assert!(padded.samples[..240_000].iter().all(|&s| s == 0.3));

        let long: Vec<f32> = (0..31 * 16000).map(|i| (i % 7) as f32 / 10.0).collect();
        let long = AudioClip::new(long, 16000).unwrap();
        let cut = pad_or_trim(&long, 30.0);
        assert_eq!(cut.samples[..], long.samples[..480_000]);

        let exact = constant(0.2, 480_000, 16000);
        assert_eq!(pad_or_trim(&exact, 30.0), exact);

        let empty = AudioClip::new(vec![], 16000).unwrap();
        let filled = pad_or_trim(&empty, 1.0);
        assert_eq!(filled.samples, vec![0.0; 16000]);
    }
}
