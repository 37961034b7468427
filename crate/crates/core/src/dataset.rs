//! Clotho-style caption CSVs, per-caption expansion, record-level splits
//! and a synthetic toy corpus.

use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::audio::{write_wav, AudioClip, WavEncoding};
use crate::error::{Error, Result};

pub const CAPTIONS_PER_CLIP: usize = 5;
const ID_COLUMN: &str = "file_name";

/// One audio clip and its five reference captions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaptionRecord {
    pub audio_id: String,
    pub captions: Vec<String>,
}

/// One (clip, caption) training pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingInstance {
    pub audio_id: String,
    pub caption: String,
}

fn caption_columns() -> Vec<String> {
    (1..=CAPTIONS_PER_CLIP).map(|i| format!("caption_{i}")).collect()
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse(format!("{}: {other:?}", path.display())),
    }
}

/// Parse a CSV with header `file_name, caption_1, .., caption_5` (extra
/// columns are ignored). Quoted fields may contain commas.
pub fn parse_captions_csv(path: impl AsRef<Path>) -> Result<Vec<CaptionRecord>> {
    let path = path.as_ref();
    let text = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_captions(&text, path)
}

fn parse_captions(bytes: &[u8], path: &Path) -> Result<Vec<CaptionRecord>> {
    if bytes.iter().all(u8::is_ascii_whitespace) {
        return Err(Error::EmptyFile(path.to_path_buf()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let position = |name: &str| {
        header
            .iter()
            .position(|h| h.trim_start_matches('\u{feff}') == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let id_col = position(ID_COLUMN)?;
    let cap_cols = caption_columns()
        .iter()
        .map(|c| position(c))
        .collect::<Result<Vec<_>>>()?;

    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| csv_error(path, e))?;
        // data rows are numbered from 1, after the header
        let row_no = i + 1;
        let ragged = |found| Error::RaggedRow {
            row: row_no,
            found,
            expected: header.len(),
        };
        if row.len() != header.len() {
            return Err(ragged(row.len()));
        }
        let captions: Vec<String> = cap_cols.iter().map(|&c| row[c].to_string()).collect();
        let filled = captions.iter().filter(|c| !c.is_empty()).count();
        if filled != CAPTIONS_PER_CLIP || row[id_col].is_empty() {
            return Err(ragged(filled + usize::from(!row[id_col].is_empty())));
        }
        records.push(CaptionRecord {
            audio_id: row[id_col].to_string(),
            captions,
        });
    }
    if records.is_empty() {
        return Err(Error::EmptyFile(path.to_path_buf()));
    }
    Ok(records)
}

/// Write records in the same schema `parse_captions_csv` reads.
pub fn write_captions_csv(path: impl AsRef<Path>, records: &[CaptionRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut header = vec![ID_COLUMN.to_string()];
    header.extend(caption_columns());
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for r in records {
        w.write_record(std::iter::once(&r.audio_id).chain(&r.captions))
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// One instance per caption, record-major.
pub fn expand_pairs(records: &[CaptionRecord]) -> Vec<TrainingInstance> {
    records
        .iter()
        .flat_map(|r| {
            r.captions.iter().map(|c| TrainingInstance {
                audio_id: r.audio_id.clone(),
                caption: c.clone(),
            })
        })
        .collect()
}

/// Seeded shuffle, then the first `n_train` records train and the rest
/// validate. All captions of a clip stay on the same side.
pub fn split(records: &[CaptionRecord], n_train: usize, seed: u64) -> Result<(Vec<CaptionRecord>, Vec<CaptionRecord>)> {
    if n_train > records.len() {
        return Err(Error::NotEnoughRecords {
            requested: n_train,
            available: records.len(),
        });
    }
    let mut shuffled = records.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let val = shuffled.split_off(n_train);
    Ok((shuffled, val))
}

/// Generator family of a toy clip.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToyFamily {
    LowTone,
    HighTone,
    Noise,
    LowToneNoise,
    HighToneNoise,
}

impl ToyFamily {
    pub const ALL: [ToyFamily; 5] = [
        ToyFamily::LowTone,
        ToyFamily::HighTone,
        ToyFamily::Noise,
        ToyFamily::LowToneNoise,
        ToyFamily::HighToneNoise,
    ];

    pub fn has_tone(self) -> bool {
        self != ToyFamily::Noise
    }

    pub fn has_noise(self) -> bool {
        matches!(self, ToyFamily::Noise | ToyFamily::LowToneNoise | ToyFamily::HighToneNoise)
    }

    fn base_hz(self) -> f64 {
        match self {
            ToyFamily::LowTone | ToyFamily::LowToneNoise => 300.0,
            _ => 2000.0,
        }
    }

    /// Five paraphrases, each starting with a different word.
    pub fn captions(self) -> [&'static str; CAPTIONS_PER_CLIP] {
        match self {
            ToyFamily::LowTone => [
                "a low tone is playing",
                "low pitched tone hums steadily",
                "steady low tone sounds",
                "deep tone rings continuously",
                "one low tone drones on",
            ],
            ToyFamily::HighTone => [
                "a high tone is playing",
                "high pitched tone beeps steadily",
                "steady high tone sounds",
                "sharp tone rings continuously",
                "one high tone whines on",
            ],
            ToyFamily::Noise => [
                "noise is hissing loudly",
                "white noise hisses",
                "loud static noise fills the room",
                "a hissing noise plays",
                "constant noise rushes by",
            ],
            ToyFamily::LowToneNoise => [
                "a low tone plays over noise",
                "low tone hums under hissing noise",
                "noise hisses around a low tone",
                "deep tone with static noise",
                "steady low tone and noise",
            ],
            ToyFamily::HighToneNoise => [
                "a high tone plays over noise",
                "high tone beeps over hissing noise",
                "noise hisses around a high tone",
                "sharp tone with static noise",
                "steady high tone and noise",
            ],
        }
    }
}

/// Settings for [`synth_toy_dataset`].
#[derive(Debug, Clone, PartialEq)]
pub struct ToyConfig {
    pub n_clips: usize,
    pub seed: u64,
    pub duration_s: f64,
    pub sample_rate: u32,
}

impl ToyConfig {
    pub fn new(n_clips: usize, seed: u64) -> Self {
        Self {
            n_clips,
            seed,
            duration_s: 2.0,
            sample_rate: 16_000,
        }
    }
}

/// A synthetic corpus: clip `i` belongs to family `i mod 5`.
#[derive(Debug, Clone)]
pub struct ToyDataset {
    pub clips: Vec<AudioClip>,
    pub records: Vec<CaptionRecord>,
    pub families: Vec<ToyFamily>,
}

fn synth_clip<R: Rng>(family: ToyFamily, config: &ToyConfig, rng: &mut R) -> Result<AudioClip> {
    let n = (config.duration_s * config.sample_rate as f64).round() as usize;
    let sr = config.sample_rate as f64;
    let freq = family.base_hz() * rng.gen_range(0.95..1.05);
    let phase = rng.gen_range(0.0..TAU);
    let (tone_amp, noise_amp) = match (family.has_tone(), family.has_noise()) {
        (true, false) => (0.5, 0.0),
        (false, true) => (0.0, 0.3),
        _ => (0.4, 0.15),
    };
    let samples = (0..n)
        .map(|i| {
            let tone = tone_amp * (TAU * freq * i as f64 / sr + phase).sin();
            let noise = if noise_amp > 0.0 {
                noise_amp * rng.gen_range(-1.0..1.0)
            } else {
                0.0
            };
            (tone + noise) as f32
        })
        .collect();
    AudioClip::new(samples, config.sample_rate)
}

/// Deterministic toy clips and captions for desk-scale training.
pub fn synth_toy_dataset(config: &ToyConfig) -> Result<ToyDataset> {
    if config.n_clips < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 toy clips, got {}", config.n_clips)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut out = ToyDataset {
        clips: Vec::with_capacity(config.n_clips),
        records: Vec::with_capacity(config.n_clips),
        families: Vec::with_capacity(config.n_clips),
    };
    for i in 0..config.n_clips {
        let family = ToyFamily::ALL[i % ToyFamily::ALL.len()];
        out.clips.push(synth_clip(family, config, &mut rng)?);
        out.records.push(CaptionRecord {
            audio_id: format!("toy_{i:03}.wav"),
            captions: family.captions().iter().map(|c| c.to_string()).collect(),
        });
        out.families.push(family);
    }
    Ok(out)
}

/// Write `<audio_id>` WAV files and `captions.csv` into `dir`. Returns the
/// CSV path.
pub fn write_toy_dataset(dir: impl AsRef<Path>, data: &ToyDataset) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (clip, record) in data.clips.iter().zip(&data.records) {
        write_wav(dir.join(&record.audio_id), clip, WavEncoding::Pcm16)?;
    }
    let csv_path = dir.join("captions.csv");
    write_captions_csv(&csv_path, &data.records)?;
    Ok(csv_path)
}
