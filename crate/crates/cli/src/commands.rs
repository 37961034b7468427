use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use capforge::audio::{extract_log_mel, load_wav, read_feature_file, write_feature_file, FeatureConfig};
use capforge::dataset::{
    expand_pairs, parse_captions_csv, split, synth_toy_dataset, write_toy_dataset, CaptionRecord, ToyConfig,
};
use capforge::metrics::evaluate_files;
use capforge::model::{
    fit, generate_caption, gradient_suite, load_checkpoint, save_checkpoint, vocab_path_for, write_training_log,
    Example, ModelConfig, ModelParams, TrainConfig,
};
use capforge::nn::AdamConfig;
use capforge::text::{
    encode_caption, load_embedding_matrix, save_embedding_matrix, tokenize, train_word2vec, Vocabulary, W2VConfig,
};
use capforge::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::args::*;

/// Non-error outcomes; `Failed` carries an exit code for partial failures.
pub enum Outcome {
    Success,
    Failed(u8),
}

pub fn run(cli: Cli) -> Result<Outcome> {
    let seed = cli.seed;
    match cli.command {
        Command::ExtractFeatures(a) => extract_features(a),
        Command::TrainW2v(a) => train_w2v(a, seed),
        Command::Train(a) => train(a, seed),
        Command::Caption(a) => caption(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Gradcheck(_) => gradcheck(seed),
        Command::ToyGen(a) => toy_gen(a, seed),
    }
}


fn stdout_line(line: &str) -> Result<()> {
    writeln!(io::stdout().lock(), "{line}").map_err(|e| Error::io("<stdout>", e))
}

fn require_dir(path: &Path) -> Result<()> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(Error::io(path, io::Error::new(io::ErrorKind::NotFound, "not a directory")))
    }
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::io(path, io::Error::new(io::ErrorKind::NotFound, "no such file")))
    }
}

/// Sorted entries of `dir` with the given extension.
fn files_with_extension(dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x.eq_ignore_ascii_case(ext)))
        .collect();
    files.sort();
    Ok(files)
}

fn file_stem(path: &Path) -> String {
    path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned())
}

fn feature_config(f: &FeatureFlags) -> Result<FeatureConfig> {
    let config = FeatureConfig {
        sample_rate: f.sample_rate,
        window_ms: f.window_ms,
        overlap_fraction: f.overlap,
        n_mels: f.n_mels,
        f_min: f.f_min,
        f_max: f.f_max,
        target_duration_s: f.duration,
        ..FeatureConfig::default()
    };
    config.validate()?;
    Ok(config)
}

fn extract_features(a: ExtractArgs) -> Result<Outcome> {
    let config = feature_config(&a.features)?;
    require_dir(&a.audio_dir)?;
    let inputs = files_with_extension(&a.audio_dir, "wav")?;
    fs::create_dir_all(&a.out_dir).map_err(|e| Error::io(&a.out_dir, e))?;
    let (mut done, mut failed) = (0usize, 0usize);
    let mut shape = None;
    for path in &inputs {
        let result = load_wav(path)
            .and_then(|clip| extract_log_mel(&clip, &config))
            .and_then(|feat| {
                let out = a.out_dir.join(format!("{}.feat", file_stem(path)));
                write_feature_file(&out, &feat)?;
                Ok((feat.rows, feat.cols))
            });
        match result {
            Ok(dims) => {
                done += 1;
                shape = Some(dims);
            }
            Err(e) => {
                failed += 1;
                log::error!("{}: {e}", path.display());
            }
        }
    }
    let dims = shape.map_or_else(String::new, |(t, d)| format!(" of {t}x{d}"));
    stdout_line(&format!("{done} files{dims} written to {}", a.out_dir.display()))?;
    if failed > 0 {
        log::error!("{failed} of {} files failed", inputs.len());
        return Ok(Outcome::Failed(2));
    }
    Ok(Outcome::Success)
}

fn caption_tokens(records: &[CaptionRecord]) -> Result<Vec<Vec<String>>> {
    records
        .iter()
        .flat_map(|r| r.captions.iter().map(|c| tokenize(c)))
        .collect()
}

fn train_w2v(a: W2vArgs, seed: u64) -> Result<Outcome> {
    let config = W2VConfig {
        dim: a.dim,
        window: a.window,
        negatives: a.negatives,
        epochs: a.epochs,
        lr: a.lr,
        min_count: a.min_count,
        seed,
    };
    config.validate()?;
    let records = parse_captions_csv(&a.captions)?;
    let corpus = caption_tokens(&records)?;
    let vocab = Vocabulary::build(&corpus, a.min_count);
    let vectors = train_word2vec(&corpus, &vocab, &config)?;
    save_embedding_matrix(&a.out_embeddings, &vectors)?;
    vocab.save(&a.out_vocab)?;
    stdout_line(&format!(
        "{} tokens x {} dims written to {}",
        vocab.len(),
        a.dim,
        a.out_embeddings.display()
    ))?;
    Ok(Outcome::Success)
}

fn model_config(a: &TrainArgs, vocab_size: usize) -> ModelConfig {
    ModelConfig {
        audio_dim: a.audio_dim,
        bigru1_cells: a.bigru1_cells,
        bigru2_cells: a.bigru2_cells,
        embed_dim: a.embed_dim,
        text_gru_cells: a.text_gru_cells,
        decoder_cells: a.decoder_cells,
        vocab_size,
        max_len: a.max_len,
        dropout: a.dropout,
        alpha: a.alpha,
    }
}

/// Load every record's features, checking the feature width up front.
fn load_features(dir: &Path, records: &[CaptionRecord], audio_dim: usize) -> Result<Vec<ndarray::Array2<f64>>> {
    records
        .iter()
        .map(|r| {
            let path = dir.join(format!("{}.feat", file_stem(Path::new(&r.audio_id))));
            if !path.is_file() {
                return Err(Error::MissingFeature(r.audio_id.clone()));
            }
            let feat = read_feature_file(&path)?;
            if feat.cols != audio_dim {
                return Err(Error::DimensionMismatch(format!(
                    "{} has {} columns but --audio-dim is {audio_dim}",
                    path.display(),
                    feat.cols
                )));
            }
            Ok(feat.to_array())
        })
        .collect()
}

fn encode_records(records: &[CaptionRecord], vocab: &Vocabulary, max_len: usize) -> Result<Vec<Vec<usize>>> {
    expand_pairs(records)
        .iter()
        .map(|inst| Ok(encode_caption(&tokenize(&inst.caption)?, vocab, max_len)))
        .collect()
}

fn examples<'a>(
    features: &'a [ndarray::Array2<f64>],
    captions: &'a [Vec<usize>],
) -> Vec<Example<'a>> {
    captions
        .iter()
        .enumerate()
        .map(|(i, c)| Example {
            features: features[i / capforge::dataset::CAPTIONS_PER_CLIP].view(),
            caption: c,
        })
        .collect()
}

fn train(a: TrainArgs, seed: u64) -> Result<Outcome> {
    let train_config = TrainConfig {
        batch_size: a.batch_size,
        epochs: a.epochs,
        seed,
        adam: AdamConfig {
            lr: a.lr,
            ..AdamConfig::default()
        },
        clip_norm: a.clip_norm,
    };
    train_config.validate()?;
    // the vocabulary size is not known yet; check everything else first
    model_config(&a, usize::MAX).validate()?;
    require_dir(&a.features_dir)?;
    require_file(&a.captions)?;

    let records = parse_captions_csv(&a.captions)?;
    let n_train = a.n_train.unwrap_or(records.len());
    let (train_recs, val_recs) = split(&records, n_train, seed)?;
    let train_feats = load_features(&a.features_dir, &train_recs, a.audio_dim)?;
    let val_feats = load_features(&a.features_dir, &val_recs, a.audio_dim)?;

    let vocab = match &a.vocab {
        Some(p) => Vocabulary::load(p)?,
        None => Vocabulary::build(&caption_tokens(&train_recs)?, 1),
    };
    let config = model_config(&a, vocab.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ModelParams::new(config, &mut rng)?;
    if let Some(p) = &a.embeddings {
        params = params.with_embedding(&load_embedding_matrix(p)?)?;
    }
    let views: Vec<_> = train_feats.iter().map(|f| f.view()).collect();
    params.fit_input_stats(&views)?;

    let train_caps = encode_records(&train_recs, &vocab, a.max_len)?;
    let val_caps = encode_records(&val_recs, &vocab, a.max_len)?;
    let train_ex = examples(&train_feats, &train_caps);
    let val_ex = examples(&val_feats, &val_caps);
    log::info!(
        "training on {} records ({} instances), validating on {}; vocabulary {}",
        train_recs.len(),
        train_ex.len(),
        val_recs.len(),
        vocab.len()
    );
    let report = fit(&mut params, &train_ex, &val_ex, &train_config, |_| {})?;

    save_checkpoint(&params, &a.out)?;
    vocab.save(vocab_path_for(&a.out))?;
    let log_path = a.log.clone().unwrap_or_else(|| {
        let mut p = a.out.as_os_str().to_owned();
        p.push(".log.csv");
        PathBuf::from(p)
    });
    write_training_log(&log_path, &report.history)?;
    let summary = match report.history.last() {
        Some(last) => format!(
            "trained {} epochs, final train loss {:.5}, kept epoch {}",
            last.epoch,
            last.train_loss,
            report.best_epoch.unwrap_or(last.epoch)
        ),
        None => "no epochs run; wrote initial parameters".to_string(),
    };
    stdout_line(&format!("{summary}; checkpoint {}", a.out.display()))?;
    Ok(Outcome::Success)
}

fn caption(a: CaptionArgs) -> Result<Outcome> {
    let params = load_checkpoint(&a.checkpoint)?;
    let vocab = Vocabulary::load(vocab_path_for(&a.checkpoint))?;
    let max_len = a.max_len.unwrap_or(params.config.max_len);
    let inputs = if a.input.is_dir() {
        files_with_extension(&a.input, "feat")?
    } else {
        require_file(&a.input)?;
        vec![a.input.clone()]
    };
    for path in inputs {
        let feat = read_feature_file(&path)?;
        let words = generate_caption(feat.to_array().view(), &params, &vocab, max_len)?;
        stdout_line(&format!("{}\t{}", file_stem(&path), words.join(" ")))?;
    }
    Ok(Outcome::Success)
}

fn evaluate(a: EvaluateArgs) -> Result<Outcome> {
    let scores = evaluate_files(&a.candidates, &a.references)?;
    stdout_line(&scores.to_json())?;
    stdout_line("")?;
    stdout_line(scores.table().trim_end())?;
    Ok(Outcome::Success)
}

fn gradcheck(seed: u64) -> Result<Outcome> {
    let reports = gradient_suite(seed)?;
    let mut all_passed = true;
    for r in &reports {
        all_passed &= r.passed();
        stdout_line(&format!(
            "{:<24} max rel error {:.3e} (tolerance {:.0e}) {}",
            r.name,
            r.max_rel_error,
            r.tolerance,
            if r.passed() { "ok" } else { "FAILED" }
        ))?;
    }
    Ok(if all_passed { Outcome::Success } else { Outcome::Failed(3) })
}

fn toy_gen(a: ToyArgs, seed: u64) -> Result<Outcome> {
    let config = ToyConfig {
        duration_s: a.duration,
        ..ToyConfig::new(a.n_clips, seed)
    };
    let data = synth_toy_dataset(&config)?;
    let csv = write_toy_dataset(&a.out_dir, &data)?;
    let refs = a.out_dir.join("references.tsv");
    let body: String = data
        .records
        .iter()
        .map(|r| format!("{}\t{}\n", file_stem(Path::new(&r.audio_id)), r.captions.join("\t")))
        .collect();
    fs::write(&refs, body).map_err(|e| Error::io(&refs, e))?;
    stdout_line(&format!(
        "{} clips written to {} (captions {}, references {})",
        data.clips.len(),
        a.out_dir.display(),
        csv.display(),
        refs.display()
    ))?;
    Ok(Outcome::Success)
}
