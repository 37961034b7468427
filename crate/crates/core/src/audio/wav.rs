use std::fs;
use std::path::Path;

use super::AudioClip;
use crate::error::{Error, Result};

const FORMAT_PCM: u16 = 1;
const FORMAT_FLOAT: u16 = 3;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WavEncoding {
    Pcm16,
    Float32,
}

/// Decode a RIFF/WAVE file (PCM16 or float32, mono or stereo) to a mono clip.
pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioClip> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_wav(&bytes)
}

pub(crate) fn decode_wav(bytes: &[u8]) -> Result<AudioClip> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::MalformedWav("missing RIFF/WAVE header".into()));
    }
    let mut pos = 12;
    let mut fmt: Option<Format> = None;
    let mut data: Option<&[u8]> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32::from_le_bytes(bytes[pos + 4..pos + 8].try_into().unwrap()) as usize;
        let body_start = pos + 8;
        let body_end = body_start
            .checked_add(size)
            .filter(|&end| end <= bytes.len())
            .ok_or_else(|| {
                Error::MalformedWav(format!(
                    "chunk {:?} declares {size} bytes past end of file",
                    String::from_utf8_lossy(id)
                ))
            })?;
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => fmt = Some(Format::parse(body)?),
            b"data" => data = Some(body),
            _ => {}
        }
        // chunks are word aligned
        pos = body_end + (size & 1);
    }
    let fmt = fmt.ok_or_else(|| Error::MalformedWav("no fmt chunk".into()))?;
    let data = data.ok_or_else(|| Error::MalformedWav("no data chunk".into()))?;

    let bytes_per_sample = match fmt.encoding {
        WavEncoding::Pcm16 => 2,
        WavEncoding::Float32 => 4,
    };
    let frame = bytes_per_sample * fmt.channels as usize;
    if data.len() % frame != 0 {
        return Err(Error::MalformedWav(format!(
            "data length {} is not a multiple of the {frame}-byte frame",
            data.len()
        )));
    }

    let decode = |chunk: &[u8]| -> Result<f32> {
        match fmt.encoding {
            WavEncoding::Pcm16 => {
                Ok(i16::from_le_bytes([chunk[0], chunk[1]]) as f32 / 32768.0)
            }
            WavEncoding::Float32 => {
                let v = f32::from_le_bytes(chunk.try_into().unwrap());
                if !v.is_finite() {
                    return Err(Error::MalformedWav("non-finite float sample".into()));
                }
                Ok(v.clamp(-1.0, 1.0))
            }
        }
    };

    let mut samples = Vec::with_capacity(data.len() / frame);
    for f in data.chunks_exact(frame) {
        let mut acc = 0.0f32;
        for ch in f.chunks_exact(bytes_per_sample) {
            acc += decode(ch)?;
        }
        samples.push(acc / fmt.channels as f32);
    }
    AudioClip::new(samples, fmt.sample_rate)
}

struct Format {
    encoding: WavEncoding,
    channels: u16,
    sample_rate: u32,
}

impl Format {
    fn parse(body: &[u8]) -> Result<Self> {
        if body.len() < 16 {
            return Err(Error::MalformedWav("fmt chunk shorter than 16 bytes".into()));
        }
        let u16_at = |i: usize| u16::from_le_bytes([body[i], body[i + 1]]);
        let mut tag = u16_at(0);
        let channels = u16_at(2);
        let sample_rate = u32::from_le_bytes(body[4..8].try_into().unwrap());
        let bits = u16_at(14);
        if tag == FORMAT_EXTENSIBLE {
            if body.len() < 26 {
                return Err(Error::MalformedWav("truncated extensible fmt chunk".into()));
            }
            // first two bytes of the sub-format GUID carry the real tag
            tag = u16_at(24);
        }
        let encoding = match (tag, bits) {
            (FORMAT_PCM, 16) => WavEncoding::Pcm16,
            (FORMAT_FLOAT, 32) => WavEncoding::Float32,
            (t, b) => {
                return Err(Error::UnsupportedEncoding(format!(
                    "format tag {t:#06x} with {b} bits per sample"
                )))
            }
        };
        if !(1..=2).contains(&channels) {
            return Err(Error::UnsupportedEncoding(format!("{channels} channels")));
        }
        if sample_rate == 0 {
            return Err(Error::MalformedWav("zero sample rate".into()));
        }
        Ok(Self {
            encoding,
            channels,
            sample_rate,
        })
    }
}

/// Write a mono clip as a canonical 44-byte-header WAV file.
pub fn write_wav(path: impl AsRef<Path>, clip: &AudioClip, encoding: WavEncoding) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_wav(clip, encoding)).map_err(|e| Error::io(path, e))
}

pub(crate) fn encode_wav(clip: &AudioClip, encoding: WavEncoding) -> Vec<u8> {
    let (tag, bytes_per_sample) = match encoding {
        WavEncoding::Pcm16 => (FORMAT_PCM, 2u16),
        WavEncoding::Float32 => (FORMAT_FLOAT, 4u16),
    };
    let data_len = clip.samples.len() as u32 * bytes_per_sample as u32;
    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&tag.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&clip.sample_rate.to_le_bytes());
    out.extend_from_slice(&(clip.sample_rate * bytes_per_sample as u32).to_le_bytes());
    out.extend_from_slice(&bytes_per_sample.to_le_bytes());
    out.extend_from_slice(&(bytes_per_sample * 8).to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for &s in &clip.samples {
        match encoding {
            WavEncoding::Pcm16 => {
                let q = (s as f64 * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
                out.extend_from_slice(&q.to_le_bytes());
            }
            WavEncoding::Float32 => out.extend_from_slice(&s.to_le_bytes()),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(tag: u16, channels: u16, rate: u32, bits: u16, data: &[u8]) -> Vec<u8> {
        let block = channels * bits / 8;
        let mut out = Vec::new();
        out.extend_from_slice(b"RIFF");
        out.extend_from_slice(&(36 + data.len() as u32).to_le_bytes());
        out.extend_from_slice(b"WAVEfmt ");
        out.extend_from_slice(&16u32.to_le_bytes());
        out.extend_from_slice(&tag.to_le_bytes());
        out.extend_from_slice(&channels.to_le_bytes());
        out.extend_from_slice(&rate.to_le_bytes());
        out.extend_from_slice(&(rate * block as u32).to_le_bytes());
        out.extend_from_slice(&block.to_le_bytes());
        out.extend_from_slice(&bits.to_le_bytes());
        out.extend_from_slice(b"data");
        out.extend_from_slice(&(data.len() as u32).to_le_bytes());
        out.extend_from_slice(data);
        out
    }

    fn pcm16(values: &[i16]) -> Vec<u8> {
        values.iter().flat_map(|v| v.to_le_bytes()).collect()
    }

    #[test]
    fn silence_decodes_to_zeros() {
        let bytes = header(1, 1, 16000, 16, &pcm16(&vec![0; 16000]));
        let clip = decode_wav(&bytes).unwrap();
        assert_eq!(clip.sample_rate, 16000);
        assert_eq!(clip.samples.len(), 16000);
        assert!(clip.samples.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn pcm16_scaling() {
        let bytes = header(1, 1, 8000, 16, &pcm16(&[16384, -32768, 0]));
        let clip = decode_wav(&bytes).unwrap();
        assert_eq!(clip.samples, vec![0.5, -1.0, 0.0]);
    }

    #[test]
    fn symmetric_stereo_mixes_to_zero() {
        let frames: Vec<i16> = (0..100).flat_map(|_| [16384, -16384]).collect();
        let clip = decode_wav(&header(1, 2, 16000, 16, &pcm16(&frames))).unwrap();
        assert_eq!(clip.samples.len(), 100);
        assert!(clip.samples.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn float32_stereo_averages() {
        let data: Vec<u8> = [0.25f32, 0.75, -0.5, 0.5]
            .iter()
            .flat_map(|v| v.to_le_bytes())
            .collect();
        let clip = decode_wav(&header(3, 2, 44100, 32, &data)).unwrap();
        assert_eq!(clip.samples, vec![0.5, 0.0]);
    }

    #[test]
    fn compressed_formats_are_rejected() {
        // 0x0055 = MPEG layer 3
        let bytes = header(0x55, 1, 16000, 16, &pcm16(&[0; 4]));
        assert!(matches!(decode_wav(&bytes), Err(Error::UnsupportedEncoding(_))));
        let bytes = header(1, 1, 16000, 24, &[0; 6]);
        assert!(matches!(decode_wav(&bytes), Err(Error::UnsupportedEncoding(_))));
    }

    #[test]
    fn truncated_data_is_malformed() {
        let mut bytes = header(1, 1, 16000, 16, &pcm16(&[1, 2, 3, 4]));
        bytes.truncate(bytes.len() - 3);
        assert!(matches!(decode_wav(&bytes), Err(Error::MalformedWav(_))));
        assert!(matches!(decode_wav(b"RIFF"), Err(Error::MalformedWav(_))));
    }

    #[test]
    fn encode_decode_roundtrip() {
        let clip = AudioClip::new(vec![0.0, 0.5, -0.25, 0.999], 22050).unwrap();
        let back = decode_wav(&encode_wav(&clip, WavEncoding::Float32)).unwrap();
        assert_eq!(back, clip);
        let back = decode_wav(&encode_wav(&clip, WavEncoding::Pcm16)).unwrap();
        for (a, b) in back.samples.iter().zip(&clip.samples) {
            assert!((a - b).abs() <= 1.0 / 32768.0);
        }
    }
}
