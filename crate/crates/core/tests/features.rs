use capforge::audio::*;
use capforge::Error;

fn clip(samples: Vec<f32>, rate: u32) -> AudioClip {
    AudioClip::new(samples, rate).unwrap()
}

#[test]
fn thirty_seconds_gives_624_frames() {
    let c = FeatureConfig::default();
    // 1 + floor((480000 - 1536) / 768)
    assert_eq!(1 + (480_000 - 1536) / 768, 624);
    let tone: Vec<f32> = (0..480_000)
        .map(|i| (0.3 * (std::f64::consts::TAU * 440.0 * i as f64 / 16_000.0).sin()) as f32)
        .collect();
    let f = extract_log_mel(&clip(tone, 16_000), &c).unwrap();
    assert_eq!((f.rows, f.cols), (624, 64));
    assert_eq!(f.kind, FeatureKind::LogMel);
}

#[test]
fn short_and_resampled_input_is_padded_to_the_same_grid() {
    let c = FeatureConfig::default();
    let f = extract_log_mel(&clip(vec![0.1; 44_100 * 3], 44_100), &c).unwrap();
    assert_eq!((f.rows, f.cols), (624, 64));
}

#[test]
fn silence_is_the_log_floor() {
    let c = FeatureConfig::default();
    let f = extract_log_mel(&clip(vec![0.0; 16_000], 16_000), &c).unwrap();
    let floor = (1e-10f64).ln() as f32;
    assert!(f.data.iter().all(|&v| v == floor));
}

#[test]
fn feat_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let data: Vec<f32> = (0..624 * 64)
        .map(|i| f32::from_bits(0x3f80_0000u32.wrapping_add(i as u32 * 7919)) - 1.5)
        .collect();
    let m = FeatureMatrix::new(624, 64, data, FeatureKind::LogMel).unwrap();
    let path = dir.path().join("x.feat");
    write_feature_file(&path, &m).unwrap();
    let back = read_feature_file(&path).unwrap();
    assert_eq!(back.rows, 624);
    assert!(m.data.iter().zip(&back.data).all(|(a, b)| a.to_bits() == b.to_bits()));
}

#[test]
fn tone_energy_lands_in_its_band() {
    let c = FeatureConfig {
        target_duration_s: 2.0,
        ..FeatureConfig::default()
    };
    let bank = mel_filterbank(&c, c.n_fft().unwrap()).unwrap();
    for hz in [300.0, 1000.0, 4000.0] {
        let tone: Vec<f32> = (0..32_000)
            .map(|i| (0.5 * (std::f64::consts::TAU * hz * i as f64 / 16_000.0).sin()) as f32)
            .collect();
        let f = extract_log_mel(&clip(tone, 16_000), &c).unwrap();
        let means = f.column_means();
        let peak = (0..means.len()).max_by(|&a, &b| means[a].total_cmp(&means[b])).unwrap();
        assert!(peak.abs_diff(bank.band_for(hz)) <= 1, "{hz} Hz peaked in band {peak}");
    }
}

#[test]
fn invalid_band_is_rejected() {
    let c = FeatureConfig {
        f_max: 9000.0,
        ..FeatureConfig::default()
    };
    assert!(matches!(extract_log_mel(&clip(vec![0.0; 100], 16_000), &c), Err(Error::InvalidBand(_))));
}
