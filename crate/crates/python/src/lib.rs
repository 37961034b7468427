//! Python bindings: feature extraction, vocabulary, the captioning model and
//! caption metrics.

use std::collections::HashMap;

use capforge::audio::{self, AudioClip, FeatureConfig};
use capforge::dataset::{expand_pairs, synth_toy_dataset, ToyConfig, CAPTIONS_PER_CLIP};
use capforge::metrics::{self, EvalPair};
use capforge::model::{self, Example, ModelConfig, ModelParams, TrainConfig};
use capforge::text::{self, Vocabulary};
use ndarray::Array2;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn py_err(e: capforge::Error) -> PyErr {
    match e {
        capforge::Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_array(rows: Vec<Vec<f64>>) -> PyResult<Array2<f64>> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(PyValueError::new_err("feature rows must all have the same length"));
    }
    let n = rows.len();
    Array2::from_shape_vec((n, cols), rows.into_iter().flatten().collect())
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

fn to_rows(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

/// Decode a WAV file to mono samples: `(samples, sample_rate)`.
#[pyfunction]
fn load_wav(path: &str) -> PyResult<(Vec<f32>, u32)> {
    let clip = audio::load_wav(path).map_err(py_err)?;
    Ok((clip.samples, clip.sample_rate))
}

/// Log-mel features (`frames × n_mels`) of a mono signal.
#[pyfunction]
#[pyo3(signature = (samples, sample_rate, duration_s=30.0, n_mels=64))]
fn log_mel(samples: Vec<f32>, sample_rate: u32, duration_s: f64, n_mels: usize) -> PyResult<Vec<Vec<f64>>> {
    let clip = AudioClip::new(samples, sample_rate).map_err(py_err)?;
    let config = FeatureConfig {
        target_duration_s: duration_s,
        n_mels,
        ..FeatureConfig::default()
    };
    let feat = audio::extract_log_mel(&clip, &config).map_err(py_err)?;
    Ok(to_rows(&feat.to_array()))
}

#[pyfunction]
fn tokenize(caption: &str) -> PyResult<Vec<String>> {
    text::tokenize(caption).map_err(py_err)
}

/// Corpus scores for candidate captions against their references.
#[pyfunction]
fn evaluate(candidates: Vec<String>, references: Vec<Vec<String>>) -> PyResult<HashMap<String, f64>> {
    if candidates.len() != references.len() {
        return Err(PyValueError::new_err("need one reference list per candidate"));
    }
    let pairs = candidates
        .iter()
        .zip(&references)
        .map(|(c, r)| EvalPair::from_text(c, r))
        .collect::<capforge::Result<Vec<_>>>()
        .map_err(py_err)?;
    let s = metrics::evaluate(&pairs).map_err(py_err)?;
    Ok(HashMap::from([
        ("bleu_1".to_string(), s.bleu_1),
        ("bleu_2".to_string(), s.bleu_2),
        ("bleu_3".to_string(), s.bleu_3),
        ("bleu_4".to_string(), s.bleu_4),
        ("rouge_l".to_string(), s.rouge_l),
        ("cider".to_string(), s.cider),
        ("meteor".to_string(), s.meteor),
    ]))
}

/// Finite-difference gradient checks: `(name, max relative error, tolerance)`.
#[pyfunction]
#[pyo3(signature = (seed=0))]
fn gradient_check(seed: u64) -> PyResult<Vec<(String, f64, f64)>> {
    Ok(model::gradient_suite(seed)
        .map_err(py_err)?
        .into_iter()
        .map(|r| (r.name.to_string(), r.max_rel_error, r.tolerance))
        .collect())
}

/// Synthetic toy corpus: `(clips, captions)` with 16 kHz sample lists and
/// five captions per clip.
/// Clip samples and their five captions.
type ToyData = (Vec<Vec<f32>>, Vec<Vec<String>>);

#[pyfunction]
#[pyo3(signature = (n_clips=20, seed=0))]
fn toy_dataset(n_clips: usize, seed: u64) -> PyResult<ToyData> {
    let data = synth_toy_dataset(&ToyConfig::new(n_clips, seed)).map_err(py_err)?;
    Ok((
        data.clips.into_iter().map(|c| c.samples).collect(),
        data.records.into_iter().map(|r| r.captions).collect(),
    ))
}

#[pyclass(name = "Vocabulary", module = "capforge_py", skip_from_py_object)]
#[derive(Clone)]
struct PyVocabulary {
    inner: Vocabulary,
}

#[pymethods]
impl PyVocabulary {
    /// Build from raw caption strings.
    #[staticmethod]
    #[pyo3(signature = (captions, min_count=1))]
    fn build(captions: Vec<String>, min_count: usize) -> PyResult<Self> {
        let tokens = captions
            .iter()
            .map(|c| text::tokenize(c))
            .collect::<capforge::Result<Vec<_>>>()
            .map_err(py_err)?;
        Ok(Self {
            inner: Vocabulary::build(&tokens, min_count),
        })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: Vocabulary::load(path).map_err(py_err)?,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(path).map_err(py_err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn id(&self, token: &str) -> Option<usize> {
        self.inner.id(token)
    }

    fn token(&self, id: usize) -> Option<String> {
        self.inner.token(id).map(str::to_string)
    }

    #[pyo3(signature = (caption, max_len=text::MAX_CAPTION_LEN))]
    fn encode(&self, caption: &str, max_len: usize) -> PyResult<Vec<usize>> {
        let tokens = text::tokenize(caption).map_err(py_err)?;
        Ok(text::encode_caption(&tokens, &self.inner, max_len))
    }

    fn decode(&self, ids: Vec<usize>) -> Vec<String> {
        self.inner.decode(&ids)
    }
}

/// The encoder-decoder captioner with its vocabulary.
#[pyclass(name = "Captioner", module = "capforge_py")]
struct PyCaptioner {
    params: ModelParams,
    vocab: Vocabulary,
}

#[pymethods]
impl PyCaptioner {
    /// Freshly initialised model with the default layer sizes.
    #[new]
    #[pyo3(signature = (vocab, audio_dim=64, seed=0, dropout=0.5))]
    fn new(vocab: &PyVocabulary, audio_dim: usize, seed: u64, dropout: f64) -> PyResult<Self> {
        let mut config = ModelConfig::new(audio_dim, vocab.inner.len());
        config.dropout = dropout;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(Self {
            params: ModelParams::new(config, &mut rng).map_err(py_err)?,
            vocab: vocab.inner.clone(),
        })
    }

    /// Load a checkpoint and the vocabulary stored next to it.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let params = model::load_checkpoint(path).map_err(py_err)?;
        let vocab = Vocabulary::load(model::vocab_path_for(path.as_ref())).map_err(py_err)?;
        Ok(Self { params, vocab })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        model::save_checkpoint(&self.params, path).map_err(py_err)?;
        self.vocab.save(model::vocab_path_for(path.as_ref())).map_err(py_err)
    }

    /// Train on clips with five captions each; returns per-epoch train loss.
    #[pyo3(signature = (features, captions, epochs=50, batch_size=64, lr=1e-3, seed=0))]
    fn fit(
        &mut self,
        features: Vec<Vec<Vec<f64>>>,
        captions: Vec<Vec<String>>,
        epochs: usize,
        batch_size: usize,
        lr: f64,
        seed: u64,
    ) -> PyResult<Vec<f64>> {
        if features.len() != captions.len() || captions.iter().any(|c| c.len() != CAPTIONS_PER_CLIP) {
            return Err(PyValueError::new_err("need one list of five captions per clip"));
        }
        let feats = features.into_iter().map(to_array).collect::<PyResult<Vec<_>>>()?;
        let records: Vec<_> = captions
            .into_iter()
            .enumerate()
            .map(|(i, c)| capforge::dataset::CaptionRecord {
                audio_id: i.to_string(),
                captions: c,
            })
            .collect();
        let max_len = self.params.config.max_len;
        let encoded = expand_pairs(&records)
            .iter()
            .map(|inst| Ok(text::encode_caption(&text::tokenize(&inst.caption)?, &self.vocab, max_len)))
            .collect::<capforge::Result<Vec<_>>>()
            .map_err(py_err)?;
        let examples: Vec<Example<'_>> = encoded
            .iter()
            .enumerate()
            .map(|(i, c)| Example {
                features: feats[i / CAPTIONS_PER_CLIP].view(),
                caption: c,
            })
            .collect();
        let views: Vec<_> = feats.iter().map(|f| f.view()).collect();
        self.params.fit_input_stats(&views).map_err(py_err)?;
        let mut config = TrainConfig {
            batch_size,
            epochs,
            seed,
            ..TrainConfig::default()
        };
        config.adam.lr = lr;
        let report = model::fit(&mut self.params, &examples, &[], &config, |_| {}).map_err(py_err)?;
        Ok(report.history.iter().map(|r| r.train_loss).collect())
    }

    /// Greedy caption for a `frames × audio_dim` feature matrix.
    fn caption(&self, features: Vec<Vec<f64>>) -> PyResult<String> {
        let feats = to_array(features)?;
        let words = model::generate_caption(feats.view(), &self.params, &self.vocab, self.params.config.max_len)
            .map_err(py_err)?;
        Ok(words.join(" "))
    }

    #[getter]
    fn vocab_size(&self) -> usize {
        self.params.config.vocab_size
    }

    #[getter]
    fn audio_dim(&self) -> usize {
        self.params.config.audio_dim
    }
}

#[pymodule]
fn capforge_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(load_wav, m)?)?;
    m.add_function(wrap_pyfunction!(log_mel, m)?)?;
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(gradient_check, m)?)?;
    m.add_function(wrap_pyfunction!(toy_dataset, m)?)?;
    m.add_class::<PyVocabulary>()?;
    m.add_class::<PyCaptioner>()?;
    Ok(())
}
