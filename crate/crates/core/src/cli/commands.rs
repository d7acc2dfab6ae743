use std::path::{Path, PathBuf};

use log::warn;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::config::{Method, ModelSection, PathsSection, Resolved, RunConfig};
use super::manifest::{write_outputs, InputRecord};
use super::*;
use crate::align::{
    best_matches, js_similarity_matrix, match_rows, select_largest, similarity_matrix,
    write_heatmap_csv,
};
use crate::coherence::coherence_against;
use crate::corpus::{build_corpus, load_corpus_jsonl, Corpus};
use crate::embed::scatter::write_scatter;
use crate::embed::{fit_embed, from_rows, load_embeddings, EmbedModel};
use crate::gsdmm::{fit_gsdmm, GsdmmConfig, GsdmmModel};
use crate::io::sha256_hex;
use crate::lda::{LdaConfig, LdaModel, LdaSampler};
use crate::ngrams::top_ngrams;
use crate::synth::{generate, SynthConfig};

/// On-disk model: `{"method": ..., "config_hash": ..., "model": {...}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub method: Method,
    pub config_hash: String,
    pub model: Value,
}

#[derive(Debug, Clone)]
pub enum ModelPayload {
    Lda(LdaModel),
    Gsdmm(GsdmmModel),
    Embed(EmbedModel),
}

impl ModelPayload {
    fn method(&self) -> Method {
        match self {
            ModelPayload::Lda(_) => Method::Lda,
            ModelPayload::Gsdmm(_) => Method::Gsdmm,
            ModelPayload::Embed(_) => Method::Embed,
        }
    }

    fn to_file(&self, config_hash: &str) -> ModelFile {
        let model = match self {
            ModelPayload::Lda(m) => serde_json::to_value(m),
            ModelPayload::Gsdmm(m) => serde_json::to_value(m),
            ModelPayload::Embed(m) => serde_json::to_value(m),
        }
        .expect("model serializes");
        ModelFile {
            method: self.method(),
            config_hash: config_hash.to_string(),
            model,
        }
    }

    /// Topics that have documents, with up to `n` ranked words each.
    pub fn topics(&self, n: usize) -> Vec<(usize, Vec<String>)> {
        match self {
            ModelPayload::Lda(m) => (0..m.num_topics())
                .map(|t| (t, m.top_words(t, n).expect("topic in range")))
                .collect(),
            ModelPayload::Gsdmm(m) => m
                .occupied
                .iter()
                .map(|&t| (t, m.top_words(t, n).expect("occupied topic")))
                .collect(),
            ModelPayload::Embed(m) => m
                .top_words
                .iter()
                .enumerate()
                .map(|(t, w)| (t, w.iter().take(n).cloned().collect()))
                .collect(),
        }
    }

    fn top_words(&self, topic: usize, n: usize) -> Vec<String> {
        match self {
            ModelPayload::Lda(m) => m.top_words(topic, n).unwrap_or_default(),
            ModelPayload::Gsdmm(m) => m.top_words(topic, n).unwrap_or_default(),
            ModelPayload::Embed(m) => m
                .top_words
                .get(topic)
                .map(|w| w.iter().take(n).cloned().collect())
                .unwrap_or_default(),
        }
    }

    /// Documents per topic; LDA documents count toward their dominant topic.
    pub fn topic_sizes(&self) -> Vec<usize> {
        match self {
            ModelPayload::Lda(m) => {
                let mut sizes = vec![0; m.num_topics()];
                for row in &m.theta {
                    let mut best = 0;
                    for (k, &p) in row.iter().enumerate() {
                        if p > row[best] {
                            best = k;
                        }
                    }
                    sizes[best] += 1;
                }
                sizes
            }
            ModelPayload::Gsdmm(m) => m.topic_sizes.iter().map(|&s| s as usize).collect(),
            ModelPayload::Embed(m) => m.sizes.clone(),
        }
    }
}

impl ModelFile {
    pub fn payload(&self) -> Result<ModelPayload, CliError> {
        let bad = |e: serde_json::Error| {
            CliError::data(format!("invalid {} model: {e}", self.method.name()))
        };
        Ok(match self.method {
            Method::Lda => {
                ModelPayload::Lda(serde_json::from_value(self.model.clone()).map_err(bad)?)
            }
            Method::Gsdmm => {
                ModelPayload::Gsdmm(serde_json::from_value(self.model.clone()).map_err(bad)?)
            }
            Method::Embed => {
                ModelPayload::Embed(serde_json::from_value(self.model.clone()).map_err(bad)?)
            }
        })
    }
}

struct LoadedModel {
    payload: ModelPayload,
    id: String,
    input: InputRecord,
}

fn load_model(role: &str, path: &Path) -> Result<LoadedModel, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::data(format!("cannot read model {}: {e}", path.display())))?;
    let file: ModelFile = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::data(format!("invalid model file {}: {e}", path.display())))?;
    let payload = file.payload()?;
    let hash = sha256_hex(&bytes);
    Ok(LoadedModel {
        id: format!("{}:{}", file.method.name(), &hash[..12]),
        payload,
        input: InputRecord {
            role: role.to_string(),
            path: path.display().to_string(),
            sha256: hash,
        },
    })
}

fn load_corpus(path: &Path) -> Result<(Corpus, InputRecord), CliError> {
    let input = InputRecord::hash("corpus", path)?;
    Ok((Corpus::load_json(path)?, input))
}

fn required(
    flag: Option<PathBuf>,
    configured: &Option<PathBuf>,
    what: &str,
) -> Result<PathBuf, CliError> {
    flag.or_else(|| configured.clone())
        .ok_or_else(|| CliError::usage(format!("missing --{what} (or paths.{what} in the config)")))
}

fn json_line<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec(value).expect("output serializes");
    bytes.push(b'\n');
    bytes
}

fn json_pretty<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("output serializes");
    bytes.push(b'\n');
    bytes
}

/// Paths only locate inputs and outputs; they are recorded in the manifest
/// but kept out of the hashed config so moving a run does not change it.
fn resolve(command: &'static str, mut config: RunConfig, params: Value) -> Resolved {
    config.paths = PathsSection::default();
    config.resolve_stemming();
    Resolved {
        command,
        config,
        params,
    }
}

pub(super) fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Preprocess(a) => preprocess(a),
        Command::Ngrams(a) => ngrams(a),
        Command::Fit(a) => fit(a),
        Command::Coherence(a) => coherence(a),
        Command::Align(a) => align(a),
        Command::Reduce(a) => reduce(a),
        Command::ExportScatter(a) => export_scatter(a),
        Command::Synth(a) => synth(a),
    }
}

fn preprocess(a: PreprocessArgs) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(a.config.config.as_deref())?;
    if let Some(m) = a.method {
        if cfg.model.as_ref().map(ModelSection::method) != Some(m) {
            cfg.model = Some(ModelSection::default_for(m));
        }
    }
    if a.stem {
        cfg.preprocess.stemming = Some(true);
    }
    if a.no_stem {
        cfg.preprocess.stemming = Some(false);
    }
    if let Some(n) = a.min_token_len {
        cfg.preprocess.min_token_len = n;
    }
    if let Some(s) = a.stopwords {
        cfg.preprocess.stopwords = s;
    }
    if let Some(e) = a.emoji_map {
        cfg.preprocess.emoji_map = e;
    }
    cfg.resolve_stemming();
    let input = required(a.input, &cfg.paths.input, "input")?;
    let output = cfg.output_path(a.output, "corpus.json")?;
    let pre = cfg.preprocess.build()?;
    let mut inputs = vec![InputRecord::hash("documents", &input)?];
    for (role, p, builtin) in [
        (
            "stopwords",
            &cfg.preprocess.stopwords,
            config::BUILTIN_STOPWORDS,
        ),
        (
            "emoji_map",
            &cfg.preprocess.emoji_map,
            config::BUILTIN_EMOJI,
        ),
    ] {
        if p != builtin {
            inputs.push(InputRecord::hash(role, Path::new(p))?);
        }
    }
    let params = json!({"stopwords": cfg.preprocess.stopwords_label()});
    let resolved = resolve("preprocess", cfg, params);
    let hash = resolved.hash();

    let docs = load_corpus_jsonl(&input)?;
    let corpus = build_corpus(&docs, &pre)?;
    let bytes = json_line(&corpus.to_file(Some(hash.clone())));
    write_outputs(
        "preprocess",
        &hash,
        resolved.to_value(),
        &inputs,
        &[(output, bytes)],
    )
}

fn ngrams(a: NgramsArgs) -> Result<(), CliError> {
    let cfg = RunConfig::load(a.config.config.as_deref())?;
    if a.k == 0 {
        return Err(CliError::usage("--k must be at least 1"));
    }
    let corpus_path = required(a.corpus, &cfg.paths.corpus, "corpus")?;
    let output = cfg.output_path(a.output, &format!("ngrams_{}.csv", a.n))?;
    let (corpus, input) = load_corpus(&corpus_path)?;
    let resolved = resolve("ngrams", cfg, json!({"n": a.n, "k": a.k}));
    let hash = resolved.hash();
    let table = top_ngrams(&corpus, a.n as usize, a.k);
    let mut bytes = Vec::new();
    table
        .write_csv(&mut bytes)
        .map_err(|e| CliError::runtime(e.to_string()))?;
    write_outputs(
        "ngrams",
        &hash,
        resolved.to_value(),
        &[input],
        &[(output, bytes)],
    )
}

fn fit(a: FitArgs) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(a.config.config.as_deref())?;
    let seed = a
        .seed
        .or(cfg.seed)
        .ok_or_else(|| CliError::usage("--seed is required for fit (no clock-based seeding)"))?;
    cfg.seed = Some(seed);
    let method = a
        .method
        .or_else(|| cfg.model.as_ref().map(ModelSection::method))
        .ok_or_else(|| CliError::usage("no model method: pass --method or set model.method"))?;
    let mut section = match cfg.model.take() {
        Some(m) if m.method() == method => m,
        _ => ModelSection::default_for(method),
    };
    match &mut section {
        ModelSection::Lda(s) => {
            if let Some(k) = a.topics {
                s.num_topics = Some(k);
            }
            if let Some(n) = a.iterations {
                s.iterations = n;
            }
            s.keep_assignments |= a.keep_assignments;
            let k = s
                .num_topics
                .ok_or_else(|| CliError::usage("LDA needs --topics (or model.num_topics)"))?;
            s.alpha.get_or_insert(1.0 / k.max(1) as f64);
        }
        ModelSection::Gsdmm(s) => {
            if let Some(t) = a.topics {
                s.num_topics = t;
            }
            if let Some(n) = a.iterations {
                s.iterations = n;
            }
        }
        ModelSection::Embed(e) => {
            if a.topics.is_some() {
                return Err(CliError::usage(
                    "embed topic count comes from clustering; use `reduce` to merge topics",
                ));
            }
            e.reduction.seed = seed;
        }
    }
    cfg.model = Some(section.clone());
    cfg.resolve_stemming();
    let corpus_path = required(a.corpus, &cfg.paths.corpus, "corpus")?;
    let output = cfg.output_path(a.output, "model.json")?;
    let embeddings_path = match method {
        Method::Embed => Some(required(a.embeddings, &cfg.paths.embeddings, "embeddings")?),
        _ => None,
    };
    let (corpus, corpus_input) = load_corpus(&corpus_path)?;
    let mut inputs = vec![corpus_input];
    if let Some(p) = &embeddings_path {
        inputs.push(InputRecord::hash("embeddings", p)?);
    }
    let resolved = resolve("fit", cfg, json!({}));
    let hash = resolved.hash();

    let payload = match section {
        ModelSection::Lda(s) => {
            let lda = LdaConfig {
                num_topics: s.num_topics.expect("checked above"),
                alpha: s.alpha.expect("resolved above"),
                eta: s.eta,
                iterations: s.iterations,
                seed,
            };
            let mut sampler = LdaSampler::new(&corpus, &lda)?;
            for _ in 0..lda.iterations {
                sampler.sweep();
            }
            let model = sampler.into_model(s.keep_assignments);
            if model.skipped_empty > 0 {
                warn!("skipped {} empty documents", model.skipped_empty);
            }
            ModelPayload::Lda(model)
        }
        ModelSection::Gsdmm(s) => ModelPayload::Gsdmm(fit_gsdmm(
            &corpus,
            &GsdmmConfig {
                num_topics: s.num_topics,
                lambda_alpha: s.lambda_alpha,
                lambda_beta: s.lambda_beta,
                iterations: s.iterations,
                seed,
            },
        )?),
        ModelSection::Embed(e) => {
            let emb = load_embeddings(
                embeddings_path.as_deref().expect("embed has embeddings"),
                &corpus,
            )?;
            let model = fit_embed(&corpus, &emb, &e)?;
            if model.noise_count > 0 {
                warn!(
                    "{} of {} documents are noise",
                    model.noise_count,
                    corpus.num_documents()
                );
            }
            ModelPayload::Embed(model)
        }
    };
    let bytes = json_line(&payload.to_file(&hash));
    write_outputs(
        "fit",
        &hash,
        resolved.to_value(),
        &inputs,
        &[(output, bytes)],
    )
}

fn coherence(a: CoherenceArgs) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(a.config.config.as_deref())?;
    if let Some(w) = a.window {
        cfg.coherence.window_s = w;
    }
    if let Some(n) = a.top_n {
        cfg.coherence.top_n = n;
    }
    cfg.coherence.validate()?;
    let corpus_path = required(a.corpus, &cfg.paths.corpus, "corpus")?;
    let output = cfg.output_path(a.output, "coherence.json")?;
    let model = load_model("model", &a.model)?;
    let (corpus, corpus_input) = load_corpus(&corpus_path)?;
    let coherence_cfg = cfg.coherence.clone();
    let resolved = resolve("coherence", cfg, json!({"model_id": model.id}));
    let hash = resolved.hash();
    let topics = model.payload.topics(coherence_cfg.top_n);
    let mut report = coherence_against(&model.id, &topics, &corpus, &coherence_cfg)?;
    report.config_hash = Some(hash.clone());
    let bytes = json_pretty(&report);
    write_outputs(
        "coherence",
        &hash,
        resolved.to_value(),
        &[model.input, corpus_input],
        &[(output, bytes)],
    )
}

const SELECTION_RULE: &str =
    "largest topics by document count, ties to the smaller id, listed in id order";

fn align(a: AlignArgs) -> Result<(), CliError> {
    let cfg = RunConfig::load(a.config.config.as_deref())?;
    let output = cfg.output_path(a.output, "heatmap.csv")?;
    let report_path = a.report.unwrap_or_else(|| {
        let stem = output
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        output.with_file_name(format!("{stem}.matches.json"))
    });
    let ma = load_model("model_a", &a.model_a)?;
    let mb = load_model("model_b", &a.model_b)?;
    let top = if a.top == 0 { usize::MAX } else { a.top };
    let rows = select_largest(&ma.payload.topic_sizes(), top);
    let cols = select_largest(&mb.payload.topic_sizes(), top);
    let (matrix, measure) = match (&ma.payload, &mb.payload) {
        (ModelPayload::Embed(x), ModelPayload::Embed(y)) => (
            similarity_matrix(&from_rows(&x.topic_vectors), &rows, &from_rows(&y.topic_vectors), &cols)?,
            "cosine",
        ),
        (ModelPayload::Embed(_), _) | (_, ModelPayload::Embed(_)) => {
            return Err(CliError::data(
                "cannot align an embedding-cluster model with a count model; their topics live in different spaces",
            ))
        }
        (x, y) => {
            let (xb, xv) = count_rows(x);
            let (yb, yv) = count_rows(y);
            (js_similarity_matrix(xb, xv, &rows, yb, yv, &cols), "one_minus_js_distance")
        }
    };
    let matches = best_matches(&matrix)?;
    let table = match_rows(
        &matches,
        |t| ma.payload.top_words(t, a.top_words),
        |t| mb.payload.top_words(t, a.top_words),
    );
    let resolved = resolve(
        "align",
        cfg,
        json!({"model_a": ma.id, "model_b": mb.id, "top": a.top, "top_words": a.top_words}),
    );
    let hash = resolved.hash();
    let report = json!({
        "config_hash": hash,
        "measure": measure,
        "selection": {"rule": SELECTION_RULE, "top": a.top},
        "model_a": ma.id,
        "model_b": mb.id,
        "matches": table,
    });
    let mut csv = Vec::new();
    write_heatmap_csv(&matrix, &mut csv).map_err(|e| CliError::runtime(e.to_string()))?;
    write_outputs(
        "align",
        &hash,
        resolved.to_value(),
        &[ma.input, mb.input],
        &[(output, csv), (report_path, json_pretty(&report))],
    )
}

fn count_rows(p: &ModelPayload) -> (&[Vec<f64>], &[String]) {
    match p {
        ModelPayload::Lda(m) => (&m.beta, &m.vocabulary),
        ModelPayload::Gsdmm(m) => (&m.beta_hat, &m.vocabulary),
        ModelPayload::Embed(_) => unreachable!("embed models are handled separately"),
    }
}

fn embed_model(m: &LoadedModel) -> Result<&EmbedModel, CliError> {
    match &m.payload {
        ModelPayload::Embed(e) => Ok(e),
        other => Err(CliError::data(format!(
            "{} needs an embed model, got {}",
            m.input.path,
            other.method().name()
        ))),
    }
}

fn reduce(a: ReduceArgs) -> Result<(), CliError> {
    let cfg = RunConfig::load(a.config.config.as_deref())?;
    if a.target == 0 {
        return Err(CliError::usage("--target must be at least 1"));
    }
    let corpus_path = required(a.corpus, &cfg.paths.corpus, "corpus")?;
    let embeddings_path = required(a.embeddings, &cfg.paths.embeddings, "embeddings")?;
    let output = cfg.output_path(a.output, "model_reduced.json")?;
    let model = load_model("model", &a.model)?;
    let em = embed_model(&model)?;
    let (corpus, corpus_input) = load_corpus(&corpus_path)?;
    if corpus
        .documents()
        .iter()
        .map(|d| &d.id)
        .ne(em.doc_ids.iter())
    {
        return Err(CliError::data(
            "corpus documents do not match the model's documents",
        ));
    }
    let emb = load_embeddings(&embeddings_path, &corpus)?;
    let resolved = resolve(
        "reduce",
        cfg,
        json!({"model_id": model.id, "target": a.target}),
    );
    let hash = resolved.hash();
    let reduced = em.reduced_to(&corpus, &emb, a.target)?;
    let bytes = json_line(&ModelPayload::Embed(reduced).to_file(&hash));
    let inputs = [
        model.input.clone(),
        corpus_input,
        InputRecord::hash("embeddings", &embeddings_path)?,
    ];
    write_outputs(
        "reduce",
        &hash,
        resolved.to_value(),
        &inputs,
        &[(output, bytes)],
    )
}

fn export_scatter(a: ScatterArgs) -> Result<(), CliError> {
    let cfg = RunConfig::load(a.config.config.as_deref())?;
    let output = cfg.output_path(a.output, "scatter.csv")?;
    let model = load_model("model", &a.model)?;
    let em = embed_model(&model)?;
    let resolved = resolve("export-scatter", cfg, json!({"model_id": model.id}));
    let hash = resolved.hash();
    let mut bytes = Vec::new();
    write_scatter(&mut bytes, &em.doc_ids, &em.reduced_points(), &em.doc_topic)?;
    write_outputs(
        "export-scatter",
        &hash,
        resolved.to_value(),
        std::slice::from_ref(&model.input),
        &[(output, bytes)],
    )
}

fn synth(a: SynthArgs) -> Result<(), CliError> {
    if a.topics == 0 || a.docs_per_topic == 0 || a.dim == 0 {
        return Err(CliError::usage(
            "--topics, --docs-per-topic and --dim must be positive",
        ));
    }
    let sc = SynthConfig {
        topics: a.topics,
        docs_per_topic: a.docs_per_topic,
        dim: a.dim,
        seed: a.seed,
        ..SynthConfig::default()
    };
    let params = json!({
        "topics": sc.topics,
        "docs_per_topic": sc.docs_per_topic,
        "words_per_topic": sc.words_per_topic,
        "background_words": sc.background_words,
        "dim": sc.dim,
        "noise": sc.noise,
        "seed": sc.seed,
    });
    let resolved = resolve("synth", RunConfig::default(), params);
    let hash = resolved.hash();
    let fx = generate(&sc);
    let outputs = [
        (a.out_dir.join("corpus.jsonl"), fx.jsonl().into_bytes()),
        (a.out_dir.join("embeddings.emb"), fx.embeddings.into_bytes()),
    ];
    write_outputs("synth", &hash, resolved.to_value(), &[], &outputs)
}
