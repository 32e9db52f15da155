use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use serde::Serialize;

use phantom_core::alignment::{Outcome, Trial};
use phantom_core::analytics::MatrixConfig;
use phantom_core::corpus::{synthetic_corpus, Lexicon};
use phantom_core::fixtures::{toy_vocabulary, TOYVOC_JSON};
use phantom_core::manifest::{file_sha256, sha256_hex, RunManifest};
use phantom_core::masking::{build_blocklist, export_logit_bias, Blocklist, DecodeFilter};
use phantom_core::pipeline::{analyze_outputs, prepare_corpus, TokenSource};
use phantom_core::probe::{AnnotatedDoc, CorpusDoc, SelectConfig, Stopwords, WordBounds, DEFAULT_TEMPLATE, DOC_PLACEHOLDER};
use phantom_core::records::{
    read_records, read_records_lenient, read_single, write_atomic, write_records, OutputRecord, RecordError, Schema,
};
use phantom_core::remote::{EndpointConfig, RemoteClient};
use phantom_core::segmentation::{
    count_admissible, count_segmentations, enumerate_admissible, enumerate_segmentations, SegmentationError,
    TokenFilter,
};
use phantom_core::simulator::{preset, BehaviorMixture, SimError, Simulator, SynonymMap};
use phantom_core::taxonomy::{AffixLexicon, Taxonomy};
use phantom_core::vocab::{load_vocab_merges, load_vocabulary, LoadOptions};
use phantom_core::Vocabulary;

use crate::{
    AnalyzeArgs, Cli, CliError, Command, EnumerateArgs, GenerateArgs, MaskArgs, PrepareArgs, SimulateArgs, SynthArgs,
    VocabArgs,
};

type Result<T> = std::result::Result<T, CliError>;

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Prepare(a) => prepare(&a),
        Command::Analyze(a) => analyze(&a),
        Command::Mask(a) => mask(&a),
        Command::Simulate(a) => simulate(&a),
        Command::Enumerate(a) => enumerate(&a),
        Command::Generate(a) => generate(&a),
        Command::SynthCorpus(a) => synth(&a),
    }
}

fn data(e: impl Into<anyhow::Error>) -> CliError {
    CliError::data(e)
}

struct LoadedVocab {
    vocab: Vocabulary,
    label: String,
    sha256: String,
}

fn load_vocab(a: &VocabArgs) -> Result<LoadedVocab> {
    match (&a.vocab, &a.merges) {
        (None, _) => {
            let mut vocab = toy_vocabulary();
            if let Some(n) = a.normalize_whitespace {
                vocab = vocab.with_normalize_whitespace(n);
            }
            Ok(LoadedVocab { vocab, label: "builtin:toyvoc".into(), sha256: sha256_hex(TOYVOC_JSON.as_bytes()) })
        }
        (Some(v), Some(m)) => {
            let vocab = load_vocab_merges(v, m, a.normalize_whitespace).map_err(data)?;
            let sha = sha256_hex(format!("{}{}", file_sha256(v).map_err(data)?, file_sha256(m).map_err(data)?).as_bytes());
            Ok(LoadedVocab { vocab, label: format!("{}+{}", v.display(), m.display()), sha256: sha })
        }
        (Some(v), None) => {
            let opts = LoadOptions { mode: None, normalize_whitespace: a.normalize_whitespace };
            let vocab = load_vocabulary(v, opts).map_err(data)?;
            Ok(LoadedVocab { vocab, label: v.display().to_string(), sha256: file_sha256(v).map_err(data)? })
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display())).map_err(data)
}

fn write_manifest(path: &Path, m: &RunManifest) -> Result<()> {
    write_records(path, Schema::Manifest, [m]).map_err(data)
}

fn manifest_for<A: Serialize>(
    command: &str,
    seed: u64,
    vocab: Option<&LoadedVocab>,
    inputs: &[(&str, &Path)],
    args: &A,
) -> Result<RunManifest> {
    let mut digests = BTreeMap::new();
    for (name, path) in inputs {
        digests.insert(name.to_string(), file_sha256(path).map_err(data)?);
    }
    let (label, sha) = vocab.map_or((String::new(), String::new()), |v| (v.label.clone(), v.sha256.clone()));
    let config = serde_json::to_value(args).map_err(data)?;
    Ok(RunManifest::new(command, seed, &label, &sha, digests, config))
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Write to stdout, tolerating a closed pipe (`phantom ... | head`).
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display())).map_err(data)
}

fn prepare(a: &PrepareArgs) -> Result<()> {
    if !(a.fraction > 0.0 && a.fraction <= 1.0) {
        return Err(CliError::usage(anyhow!("--fraction must be in (0, 1], got {}", a.fraction)));
    }
    if a.min_words > a.max_words {
        return Err(CliError::usage(anyhow!("--min-words exceeds --max-words")));
    }
    let docs: Vec<CorpusDoc> = read_records_lenient(&a.corpus, Schema::Corpus).map_err(data)?;
    let stopwords = match &a.stopwords {
        Some(p) => Stopwords::parse(&read_text(p)?),
        None => Stopwords::english(),
    };
    let template = match &a.template {
        Some(p) => read_text(p)?,
        None => DEFAULT_TEMPLATE.to_string(),
    };
    if !template.contains(DOC_PLACEHOLDER) {
        return Err(data(anyhow!("template has no {DOC_PLACEHOLDER} placeholder")));
    }
    let cfg = SelectConfig { fraction: a.fraction, length_range: a.length_range };
    let bounds = WordBounds { min_words: a.min_words, max_words: a.max_words };
    let prepared = prepare_corpus(docs, &cfg, bounds, &stopwords, &template, a.seed).map_err(data)?;
    write_records(&a.out, Schema::Annotated, &prepared.docs).map_err(data)?;
    let mut inputs = vec![("corpus", a.corpus.as_path())];
    if let Some(p) = &a.stopwords {
        inputs.push(("stopwords", p));
    }
    if let Some(p) = &a.template {
        inputs.push(("template", p));
    }
    let m = manifest_for("prepare", a.seed, None, &inputs, a)?;
    write_manifest(&a.manifest.clone().unwrap_or_else(|| sibling(&a.out, ".manifest.jsonl")), &m)?;
    let targets: usize = prepared.docs.iter().map(|d| d.targets.len()).sum();
    eprintln!(
        "prepared {} documents with {targets} targets ({} outside word bounds, {} without eligible words)",
        prepared.docs.len(),
        prepared.out_of_bounds,
        prepared.without_targets
    );
    Ok(())
}

fn affixes(path: &Option<PathBuf>) -> Result<AffixLexicon> {
    match path {
        Some(p) => AffixLexicon::parse(&read_text(p)?).map_err(data),
        None => Ok(AffixLexicon::english()),
    }
}

fn analyze(a: &AnalyzeArgs) -> Result<()> {
    let v = load_vocab(&a.vocab)?;
    let annotated: Vec<AnnotatedDoc> = read_records(&a.annotated, Schema::Annotated).map_err(data)?;
    for d in &annotated {
        d.validate().with_context(|| format!("{}", a.annotated.display())).map_err(data)?;
    }
    let outputs: Vec<OutputRecord> = read_records(&a.outputs, Schema::Outputs).map_err(data)?;
    let tax = Taxonomy::new(&v.vocab, affixes(&a.affixes)?);
    let source = if a.encode_outputs { TokenSource::Encode } else { TokenSource::PreferReported };
    let mcfg = MatrixConfig { bound: a.bound, count_gap_tokens: a.count_gap_tokens };
    let analysis = analyze_outputs(&tax, &annotated, &outputs, source, &mcfg).map_err(data)?;

    ensure_dir(&a.out_dir)?;
    let summary = serde_json::to_string_pretty(&analysis.summary()).map_err(data)? + "\n";
    let counts = analysis.matrix.counts_csv().map_err(data)?;
    let lengths = analysis.matrix.mean_lengths_csv().map_err(data)?;
    write_records(a.out_dir.join("trials.jsonl"), Schema::Trials, &analysis.trials).map_err(data)?;
    write_atomic(a.out_dir.join("summary.json"), summary.as_bytes()).map_err(data)?;
    write_atomic(a.out_dir.join("matrix_counts.csv"), counts.as_bytes()).map_err(data)?;
    write_atomic(a.out_dir.join("matrix_mean_lengths.csv"), lengths.as_bytes()).map_err(data)?;
    let mut inputs = vec![("annotated", a.annotated.as_path()), ("outputs", a.outputs.as_path())];
    if let Some(p) = &a.affixes {
        inputs.push(("affixes", p));
    }
    let m = manifest_for("analyze", 0, Some(&v), &inputs, a)?;
    write_manifest(&a.out_dir.join("manifest.jsonl"), &m)?;
    emit(&summary);
    Ok(())
}

fn mask(a: &MaskArgs) -> Result<()> {
    let trials: Vec<Trial> = read_records(&a.trials, Schema::Trials).map_err(data)?;
    let blocklist = build_blocklist(trials.iter().filter(|t| t.outcome == Outcome::Different)).map_err(data)?;
    write_records(&a.out, Schema::Blocklist, [&blocklist]).map_err(data)?;
    if let Some(p) = &a.logit_bias {
        let json = serde_json::to_string_pretty(&export_logit_bias(&blocklist)).map_err(data)? + "\n";
        write_atomic(p, json.as_bytes()).map_err(data)?;
    }
    eprintln!("blocklist holds {} token ids", blocklist.len());
    Ok(())
}

fn load_blocklist(path: &Option<PathBuf>) -> Result<Option<Blocklist>> {
    path.as_ref().map(|p| read_single::<Blocklist>(p, Schema::Blocklist).map_err(data)).transpose()
}

fn simulate(a: &SimulateArgs) -> Result<()> {
    let v = load_vocab(&a.vocab)?;
    let docs: Vec<AnnotatedDoc> = read_records(&a.annotated, Schema::Annotated).map_err(data)?;
    let mixture: BehaviorMixture = match &a.mixture {
        Some(p) => {
            let m: BehaviorMixture = serde_json::from_str(&read_text(p)?)
                .with_context(|| format!("{}", p.display()))
                .map_err(data)?;
            m.validate().map_err(data)?;
            m
        }
        None => preset(&a.preset).map_err(|e| match e {
            SimError::UnknownPreset(_) => CliError::usage(e),
            other => data(other),
        })?,
    };
    let synonyms = match &a.synonyms {
        Some(p) => SynonymMap::parse(&read_text(p)?).map_err(data)?,
        None => SynonymMap::english(),
    };
    let filter = load_blocklist(&a.blocklist)?.map(DecodeFilter::new);
    let n = a.n_trials.unwrap_or_else(|| docs.iter().map(|d| d.targets.len()).sum());
    let sim = Simulator::new(&v.vocab, affixes(&a.affixes)?, synonyms);
    let run = sim.generate_corpus(&docs, &mixture, filter.as_ref(), a.seed, n).map_err(data)?;

    ensure_dir(&a.out_dir)?;
    let outputs: Vec<OutputRecord> = run.outputs.iter().map(|o| o.to_record()).collect();
    let labels: Vec<_> = run.outputs.iter().flat_map(|o| o.label_records()).collect();
    write_records(a.out_dir.join("annotated.jsonl"), Schema::Annotated, &run.docs).map_err(data)?;
    write_records(a.out_dir.join("outputs.jsonl"), Schema::Outputs, &outputs).map_err(data)?;
    write_records(a.out_dir.join("labels.jsonl"), Schema::Labels, &labels).map_err(data)?;
    let cal = serde_json::to_string_pretty(&run.calibration).map_err(data)? + "\n";
    write_atomic(a.out_dir.join("calibration.json"), cal.as_bytes()).map_err(data)?;
    let mut inputs = vec![("annotated", a.annotated.as_path())];
    for (name, p) in [("mixture", &a.mixture), ("synonyms", &a.synonyms), ("blocklist", &a.blocklist), ("affixes", &a.affixes)] {
        if let Some(p) = p {
            inputs.push((name, p.as_path()));
        }
    }
    let m = manifest_for("simulate", a.seed, Some(&v), &inputs, a)?;
    write_manifest(&a.out_dir.join("manifest.jsonl"), &m)?;
    eprintln!("simulated {} targets over {} documents", run.n_trials(), run.outputs.len());
    Ok(())
}

#[derive(Serialize)]
struct Member {
    tokens: Vec<String>,
    ids: Vec<u32>,
}

#[derive(Serialize)]
struct EnumerateReport {
    surface: String,
    filter: &'static str,
    count: String,
    canonical: Member,
    /// `None` when the class is larger than the limit.
    members: Option<Vec<Member>>,
    limit: usize,
}

fn enumerate(a: &EnumerateArgs) -> Result<()> {
    let v = load_vocab(&a.vocab)?;
    let vocab = &v.vocab;
    let surface = if a.spaced { format!(" {}", a.word) } else { a.word.clone() };
    let bytes = surface.as_bytes();
    let member = |ids: &[phantom_core::TokenId]| Member {
        tokens: ids.iter().map(|&i| vocab.display(i)).collect(),
        ids: ids.iter().map(|i| i.0).collect(),
    };
    let canonical = vocab.encode(bytes).map_err(data)?;
    let filter = TokenFilter::plausible();
    let (count, listed) = if a.plausible {
        (count_admissible(vocab, bytes, &filter), enumerate_admissible(vocab, bytes, a.limit, &filter))
    } else {
        (count_segmentations(vocab, bytes), enumerate_segmentations(vocab, bytes, a.limit))
    };
    let members = match listed {
        Ok(class) => Some(class.members.iter().map(|s| member(&s.ids)).collect()),
        Err(SegmentationError::LimitExceeded { .. }) => None,
        Err(e) => return Err(data(e)),
    };
    let report = EnumerateReport {
        surface,
        filter: if a.plausible { "plausible" } else { "all" },
        count: count.to_string(),
        canonical: member(&canonical.ids),
        members,
        limit: a.limit,
    };
    emit(&(serde_json::to_string_pretty(&report).map_err(data)? + "\n"));
    Ok(())
}

fn generate(a: &GenerateArgs) -> Result<()> {
    let docs: Vec<AnnotatedDoc> = read_records(&a.annotated, Schema::Annotated).map_err(data)?;
    let bias = load_blocklist(&a.blocklist)?.map(|b| export_logit_bias(&b));
    let api_key = match &a.api_key_env {
        Some(var) => Some(std::env::var(var).map_err(|_| CliError::usage(anyhow!("environment variable {var} is not set")))?),
        None => None,
    };
    let cfg = EndpointConfig {
        url: a.endpoint.clone(),
        max_tokens: a.max_tokens,
        attempts: a.attempts,
        initial_backoff_ms: a.backoff_ms,
        max_backoff_ms: a.backoff_ms.saturating_mul(16),
        timeout_ms: a.timeout_ms,
        api_key,
    };
    let client = RemoteClient::new(cfg);
    let mut outputs = Vec::with_capacity(docs.len());
    for d in &docs {
        let c = client
            .generate(&d.prompt, bias.as_ref())
            .with_context(|| format!("document {:?}", d.doc_id))
            .map_err(CliError::transport)?;
        outputs.push(OutputRecord { doc_id: d.doc_id.clone(), output_text: c.text, output_ids: c.token_ids });
    }
    write_records(&a.out, Schema::Outputs, &outputs).map_err(data)?;
    eprintln!("received {} outputs", outputs.len());
    Ok(())
}

fn synth(a: &SynthArgs) -> Result<()> {
    let lexicon = match &a.lexicon {
        Some(p) => Lexicon::parse(&read_text(p)?).map_err(data)?,
        None => Lexicon::english(),
    };
    let docs = synthetic_corpus(&lexicon, a.seed, a.docs);
    write_records(&a.out, Schema::Corpus, &docs).map_err(|e: RecordError| data(e))?;
    eprintln!("wrote {} synthetic documents", docs.len());
    Ok(())
}
