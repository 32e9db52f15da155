//! A seeded stand-in for a model that rewrites bracketed words.
//!
//! Each target is copied, replaced by a synonym, or re-emitted with a
//! different token sequence that spells the same text (a phantom edit). Every
//! decision is recorded as a label so the analysis pipeline can be checked
//! against ground truth.
//!
//! Generation runs in two stages per target. First the input tokens are
//! copied with probability `p_unchanged`. Otherwise one sequence is decoded
//! token by token from the replacement and the phantom candidates, weighted by
//! the mixture and by the calibrated (type, class) weights. A
//! [`DecodeFilter`] is applied at every step, so blocked ids shift mass onto
//! the remaining sequences; a decode with no admissible continuation falls
//! back to the replacement.

mod calibrate;
mod candidates;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::{Arc, Mutex};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use calibrate::{calibrate, Calibration, Feasible, N_CLASSES, N_TYPES};
pub use candidates::{phantom_candidates, Candidate, TransitionClass};

use crate::alignment::{gap_start, Outcome};
use crate::masking::{Blocklist, DecodeFilter, MaskError, TrialKey};
use crate::probe::{AnnotatedDoc, ProbeError, Target};
use crate::records::OutputRecord;
use crate::seeding::derive_rng;
use crate::segmentation::DEFAULT_LIMIT;
use crate::taxonomy::{AffixLexicon, E2Variant, ErrorType};
use crate::vocab::{Encoding, TokenId, VocabError, Vocabulary};

pub const DEFAULT_PRESETS: &str = include_str!("../../assets/presets.json");
pub const DEFAULT_SYNONYMS: &str = include_str!("../../assets/synonyms.json");

const END: TokenId = TokenId(u32::MAX);
const SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid mixture: {0}")]
    InvalidMixture(String),
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("requested {requested} trials but the corpus only has {available} targets")]
    CorpusExhausted { requested: usize, available: usize },
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Probe(#[from] ProbeError),
    #[error("document {0:?}: generated text is not valid UTF-8")]
    InvalidUtf8(String),
    #[error(transparent)]
    Vocab(#[from] VocabError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorMixture {
    pub p_unchanged: f64,
    pub p_replaced: f64,
    pub p_phantom: f64,
    /// Weights over E1..E8.
    pub phantom_profile: [f64; N_TYPES],
    /// Weights over (same, split, merge).
    pub split_merge_profile: [f64; N_CLASSES],
}

impl BehaviorMixture {
    pub fn new(p_unchanged: f64, p_replaced: f64, p_phantom: f64) -> Self {
        BehaviorMixture {
            p_unchanged,
            p_replaced,
            p_phantom,
            phantom_profile: [1.0 / N_TYPES as f64; N_TYPES],
            split_merge_profile: [1.0 / 3.0; N_CLASSES],
        }
    }

    /// Put all phantom weight on one type.
    pub fn only_type(mut self, t: ErrorType) -> Self {
        let i = t.index().expect("phantom type");
        self.phantom_profile = [0.0; N_TYPES];
        self.phantom_profile[i] = 1.0;
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let probs = [self.p_unchanged, self.p_replaced, self.p_phantom];
        let all = probs.iter().chain(&self.phantom_profile).chain(&self.split_merge_profile);
        if all.clone().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(SimError::InvalidMixture("weights must be finite and non-negative".into()));
        }
        for (name, sum) in [
            ("behavior probabilities", probs.iter().sum::<f64>()),
            ("phantom_profile", self.phantom_profile.iter().sum()),
            ("split_merge_profile", self.split_merge_profile.iter().sum()),
        ] {
            if (sum - 1.0).abs() > SUM_TOLERANCE {
                return Err(SimError::InvalidMixture(format!("{name} sum to {sum}, not 1")));
            }
        }
        Ok(())
    }
}

/// Named mixtures from a presets file.
pub fn parse_presets(json: &str) -> Result<BTreeMap<String, BehaviorMixture>, SimError> {
    let presets: BTreeMap<String, BehaviorMixture> = serde_json::from_str(json)?;
    for m in presets.values() {
        m.validate()?;
    }
    Ok(presets)
}

pub fn preset(name: &str) -> Result<BehaviorMixture, SimError> {
    parse_presets(DEFAULT_PRESETS)?.remove(name).ok_or_else(|| SimError::UnknownPreset(name.to_string()))
}

/// Word → replacement candidates.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SynonymMap(pub BTreeMap<String, Vec<String>>);

impl SynonymMap {
    pub fn parse(json: &str) -> Result<Self, SimError> {
        Ok(serde_json::from_str(json)?)
    }

    pub fn english() -> Self {
        Self::parse(DEFAULT_SYNONYMS).expect("bundled synonym map parses")
    }

    /// Replacement for `word`, or a pseudo-word derived from it when the map
    /// has no usable entry. The flag reports the pseudo-word case.
    pub fn replacement(&self, word: &str, rng: &mut ChaCha8Rng) -> (String, bool) {
        let options: Vec<&String> =
            self.0.get(word).into_iter().flatten().filter(|s| !s.is_empty() && s.as_str() != word).collect();
        if options.is_empty() {
            (pseudo_word(word), true)
        } else {
            (options[rng.random_range(0..options.len())].clone(), false)
        }
    }
}

/// A deterministic stand-in replacement that never equals `word`.
pub fn pseudo_word(word: &str) -> String {
    let digest = Sha256::digest(word.as_bytes());
    format!("x{}", hex::encode(&digest[..4]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Behavior {
    Unchanged,
    Replaced,
    Phantom,
}

impl Behavior {
    /// The outcome the classifier should assign.
    pub fn expected_outcome(self) -> Outcome {
        match self {
            Behavior::Unchanged => Outcome::Unchanged,
            Behavior::Replaced => Outcome::Replaced,
            Behavior::Phantom => Outcome::Different,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetLabel {
    pub target_index: usize,
    pub word: String,
    pub behavior: Behavior,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_type: Option<ErrorType>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e2_variant: Option<E2Variant>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<TransitionClass>,
    /// Replacement word written into the output (the target word otherwise).
    pub output_word: String,
    /// The replacement came from [`pseudo_word`] rather than the synonym map.
    #[serde(default)]
    pub pseudo_word: bool,
    pub input_ids: Vec<TokenId>,
    pub output_ids: Vec<TokenId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledOutput {
    pub doc_id: String,
    pub output_text: String,
    /// Token ids of the whole output, as the simulated model emitted them.
    pub output_ids: Vec<TokenId>,
    pub labels: Vec<TargetLabel>,
}

impl LabeledOutput {
    /// The output as the analysis pipeline reads it.
    pub fn to_record(&self) -> OutputRecord {
        OutputRecord { doc_id: self.doc_id.clone(), output_text: self.output_text.clone(), output_ids: Some(self.output_ids.clone()) }
    }

    pub fn label_records(&self) -> impl Iterator<Item = LabelRecord> + '_ {
        self.labels.iter().map(|l| LabelRecord { doc_id: self.doc_id.clone(), label: l.clone() })
    }
}

/// One line of a labels file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub doc_id: String,
    #[serde(flatten)]
    pub label: TargetLabel,
}

/// How one target can be rewritten.
#[derive(Debug, Clone)]
struct TargetPlan {
    /// Token index range of the cover in the input encoding.
    cover: (usize, usize),
    /// Byte range of the cover.
    bytes: (usize, usize),
    /// The cover shares a token with another target; only copying is safe.
    copy_only: bool,
    candidates: Arc<Vec<Candidate>>,
    feasible: Feasible,
}

type CandidateKey = (Vec<TokenId>, String);

pub struct Simulator<'v> {
    vocab: &'v Vocabulary,
    affixes: AffixLexicon,
    synonyms: SynonymMap,
    limit: usize,
    cache: Mutex<HashMap<CandidateKey, Arc<Vec<Candidate>>>>,
}

/// Output of [`Simulator::generate_corpus`]: the documents actually used
/// (the last one possibly cut short) and one labeled output per document.
#[derive(Debug, Clone)]
pub struct SimulatedCorpus {
    pub docs: Vec<AnnotatedDoc>,
    pub outputs: Vec<LabeledOutput>,
    pub calibration: Calibration,
}

impl SimulatedCorpus {
    pub fn labels(&self) -> impl Iterator<Item = (&str, &TargetLabel)> {
        self.outputs.iter().flat_map(|o| o.labels.iter().map(move |l| (o.doc_id.as_str(), l)))
    }

    pub fn n_trials(&self) -> usize {
        self.outputs.iter().map(|o| o.labels.len()).sum()
    }
}

impl<'v> Simulator<'v> {
    pub fn new(vocab: &'v Vocabulary, affixes: AffixLexicon, synonyms: SynonymMap) -> Self {
        Simulator { vocab, affixes, synonyms, limit: DEFAULT_LIMIT, cache: Mutex::new(HashMap::new()) }
    }

    /// Cap on plausible segmentations enumerated per word.
    pub fn with_limit(mut self, limit: usize) -> Self {
        self.limit = limit;
        self
    }

    pub fn vocab(&self) -> &Vocabulary {
        self.vocab
    }

    fn candidates(&self, input_ids: &[TokenId], word: &str) -> Arc<Vec<Candidate>> {
        let key = (input_ids.to_vec(), word.to_string());
        if let Some(c) = self.cache.lock().expect("candidate cache").get(&key) {
            return Arc::clone(c);
        }
        let built = Arc::new(phantom_candidates(self.vocab, &self.affixes, input_ids, word, self.limit));
        self.cache.lock().expect("candidate cache").insert(key, Arc::clone(&built));
        built
    }

    fn plan(&self, doc: &AnnotatedDoc) -> Result<(Encoding, Vec<TargetPlan>), SimError> {
        doc.validate()?;
        let text = doc.original_text.as_bytes();
        let enc = self.vocab.encode(text)?;
        let mut plans: Vec<TargetPlan> = Vec::with_capacity(doc.targets.len());
        for t in &doc.targets {
            let gs = gap_start(text, t.start);
            let lo = enc.offsets.partition_point(|&(_, e)| e <= gs);
            let hi = enc.offsets.partition_point(|&(s, _)| s < t.end).max(lo);
            let bytes = (enc.offsets.get(lo).map_or(gs, |o| o.0), enc.offsets.get(hi.wrapping_sub(1)).map_or(t.end, |o| o.1));
            let mut copy_only = false;
            if let Some(prev) = plans.last_mut() {
                if lo < prev.cover.1 {
                    prev.copy_only = true;
                    copy_only = true;
                }
            }
            let clean = bytes == (gs, t.end) && &text[gs..t.start] == b" ";
            let candidates =
                if clean { self.candidates(&enc.ids[lo..hi], &t.word) } else { Arc::new(Vec::new()) };
            plans.push(TargetPlan { cover: (lo, hi), bytes, copy_only, candidates, feasible: [0; N_TYPES] });
        }
        for p in &mut plans {
            if p.copy_only {
                p.candidates = Arc::new(Vec::new());
            }
            for c in p.candidates.iter() {
                if let Some(i) = c.error_type.index() {
                    p.feasible[i] |= 1 << c.class.index();
                }
            }
        }
        Ok((enc, plans))
    }

    /// Fit (type, class) weights over every target of `docs`.
    pub fn calibrate(&self, docs: &[AnnotatedDoc], mixture: &BehaviorMixture) -> Result<Calibration, SimError> {
        let mut pop = Vec::new();
        for d in docs {
            pop.extend(self.plan(d)?.1.into_iter().map(|p| p.feasible));
        }
        Ok(calibrate(&pop, &mixture.phantom_profile, &mixture.split_merge_profile, 5_000, 1e-12))
    }

    /// Every id a phantom candidate of any target in `docs` would introduce.
    /// Blocking all of them removes every phantom path.
    pub fn phantom_inventory(&self, docs: &[AnnotatedDoc]) -> Result<Blocklist, SimError> {
        let mut bl = Blocklist::new();
        for d in docs {
            let (enc, plans) = self.plan(d)?;
            for (ti, p) in plans.iter().enumerate() {
                let input: HashSet<TokenId> = enc.ids[p.cover.0..p.cover.1].iter().copied().collect();
                for c in p.candidates.iter() {
                    for &id in &c.ids {
                        if !input.contains(&id) {
                            bl.insert(id, TrialKey { doc_id: d.doc_id.clone(), target_index: ti });
                        }
                    }
                }
            }
        }
        Ok(bl)
    }

    /// Rewrite one document. `calibration` comes from [`Simulator::calibrate`]
    /// over the population the document belongs to.
    pub fn generate_doc(
        &self,
        doc: &AnnotatedDoc,
        mixture: &BehaviorMixture,
        calibration: &Calibration,
        filter: Option<&DecodeFilter>,
        seed: u64,
    ) -> Result<LabeledOutput, SimError> {
        mixture.validate()?;
        let (enc, plans) = self.plan(doc)?;
        let text = doc.original_text.as_bytes();
        let open = DecodeFilter::default();
        let filter = filter.unwrap_or(&open);

        let mut out_text: Vec<u8> = Vec::with_capacity(text.len() + 16);
        let mut out_ids: Vec<TokenId> = Vec::with_capacity(enc.ids.len() + 8);
        let mut labels = Vec::with_capacity(plans.len());
        let mut tok = 0;
        for (ti, (t, p)) in doc.targets.iter().zip(&plans).enumerate() {
            let mut rng = derive_rng(seed, "sim", &doc.doc_id, ti as u64);
            let input_ids = enc.ids[p.cover.0..p.cover.1].to_vec();
            let draw = self.draw(t, &input_ids, p, mixture, calibration, filter, &mut rng, text)?;

            let mut label = TargetLabel {
                target_index: ti,
                word: t.word.clone(),
                behavior: draw.behavior,
                error_type: None,
                e2_variant: None,
                class: None,
                output_word: t.word.clone(),
                pseudo_word: false,
                input_ids: input_ids.clone(),
                output_ids: draw.ids.clone(),
            };
            // Tokens between the previous target and this one pass through.
            let from = p.cover.0.max(tok);
            for i in tok..from {
                out_ids.push(enc.ids[i]);
                out_text.extend_from_slice(&text[enc.offsets[i].0..enc.offsets[i].1]);
            }
            tok = from;
            match draw.behavior {
                Behavior::Unchanged => {
                    // Covers shared with the previous target were already emitted.
                    let end = p.cover.1.max(tok);
                    for i in tok..end {
                        out_ids.push(enc.ids[i]);
                        out_text.extend_from_slice(&text[enc.offsets[i].0..enc.offsets[i].1]);
                    }
                    tok = end;
                }
                Behavior::Replaced => {
                    out_text.extend_from_slice(&draw.text);
                    out_ids.extend(&draw.ids);
                    label.output_word = draw.word;
                    label.pseudo_word = draw.pseudo;
                    tok = p.cover.1;
                }
                Behavior::Phantom => {
                    out_text.extend_from_slice(&draw.text);
                    out_ids.extend(&draw.ids);
                    let c = draw.candidate.as_ref().expect("phantom draw has a candidate");
                    label.error_type = Some(c.error_type);
                    label.e2_variant = c.e2_variant;
                    label.class = Some(c.class);
                    tok = p.cover.1;
                }
            }
            labels.push(label);
        }
        for i in tok..enc.ids.len() {
            out_ids.push(enc.ids[i]);
            out_text.extend_from_slice(&text[enc.offsets[i].0..enc.offsets[i].1]);
        }
        let output_text = String::from_utf8(out_text).map_err(|_| SimError::InvalidUtf8(doc.doc_id.clone()))?;
        Ok(LabeledOutput { doc_id: doc.doc_id.clone(), output_text, output_ids: out_ids, labels })
    }

    #[allow(clippy::too_many_arguments)]
    fn draw(
        &self,
        target: &Target,
        input_ids: &[TokenId],
        p: &TargetPlan,
        mixture: &BehaviorMixture,
        calibration: &Calibration,
        filter: &DecodeFilter,
        rng: &mut ChaCha8Rng,
        text: &[u8],
    ) -> Result<Draw, SimError> {
        let copy = Draw { behavior: Behavior::Unchanged, ids: input_ids.to_vec(), ..Draw::default() };
        if p.copy_only {
            return Ok(copy);
        }
        let probs = calibration.pair_probabilities(&p.feasible);
        let phantom_mass: f64 = probs.iter().flatten().sum();
        // With nothing to plant, the phantom share is spent on copying.
        let p_copy = if phantom_mass > 0.0 { mixture.p_unchanged } else { mixture.p_unchanged + mixture.p_phantom };
        let u: f64 = rng.random();
        let copy_blocked = input_ids.iter().any(|&id| filter.blocklist.contains(id));
        if u < p_copy && !copy_blocked {
            return Ok(copy);
        }

        let replacement = self.replacement(target, p, rng, text)?;
        let mut seqs: Vec<(&[TokenId], f64)> = vec![(&replacement.ids, mixture.p_replaced)];
        if phantom_mass > 0.0 {
            let mut buckets = [[0usize; N_CLASSES]; N_TYPES];
            for c in p.candidates.iter() {
                if let Some(i) = c.error_type.index() {
                    buckets[i][c.class.index()] += 1;
                }
            }
            for c in p.candidates.iter() {
                let Some(i) = c.error_type.index() else { continue };
                let k = c.class.index();
                seqs.push((&c.ids, mixture.p_phantom * probs[i][k] / buckets[i][k] as f64));
            }
        }
        match stepwise_decode(&seqs, filter, rng) {
            Some(0) | None => Ok(replacement),
            Some(j) => {
                let c = &p.candidates[j - 1];
                let mut bytes = self.vocab.concat(&c.ids)?;
                // Candidates only exist for a single-space gap.
                if !bytes.first().is_some_and(u8::is_ascii_whitespace) {
                    bytes.insert(0, b' ');
                }
                Ok(Draw { behavior: Behavior::Phantom, ids: c.ids.clone(), text: bytes, candidate: Some(c.clone()), ..Draw::default() })
            }
        }
    }

    /// The cover re-encoded with the target word swapped out.
    fn replacement(&self, target: &Target, p: &TargetPlan, rng: &mut ChaCha8Rng, text: &[u8]) -> Result<Draw, SimError> {
        let (syn, pseudo) = self.synonyms.replacement(&target.word, rng);
        let mut seg = text[p.bytes.0.min(target.start)..target.start].to_vec();
        seg.extend_from_slice(syn.as_bytes());
        seg.extend_from_slice(&text[target.end..p.bytes.1.max(target.end)]);
        let ids = self.vocab.encode(&seg)?.ids;
        Ok(Draw { behavior: Behavior::Replaced, ids, text: seg, word: syn, pseudo, candidate: None })
    }

    /// Generate outputs for exactly `n_trials` targets, taken from `docs` in
    /// order. The last document used is cut down to the targets needed.
    pub fn generate_corpus(
        &self,
        docs: &[AnnotatedDoc],
        mixture: &BehaviorMixture,
        filter: Option<&DecodeFilter>,
        seed: u64,
        n_trials: usize,
    ) -> Result<SimulatedCorpus, SimError> {
        mixture.validate()?;
        let mut used = Vec::new();
        let mut remaining = n_trials;
        for d in docs {
            if remaining == 0 {
                break;
            }
            if d.targets.is_empty() {
                continue;
            }
            if d.targets.len() <= remaining {
                remaining -= d.targets.len();
                used.push(d.clone());
            } else {
                used.push(d.truncate_targets(remaining));
                remaining = 0;
            }
        }
        if remaining > 0 {
            return Err(SimError::CorpusExhausted {
                requested: n_trials,
                available: docs.iter().map(|d| d.targets.len()).sum(),
            });
        }
        let calibration = self.calibrate(&used, mixture)?;
        let outputs = self.generate_many(&used, mixture, &calibration, filter, seed)?;
        Ok(SimulatedCorpus { docs: used, outputs, calibration })
    }

    /// Generate every document, in parallel, preserving order.
    pub fn generate_many(
        &self,
        docs: &[AnnotatedDoc],
        mixture: &BehaviorMixture,
        calibration: &Calibration,
        filter: Option<&DecodeFilter>,
        seed: u64,
    ) -> Result<Vec<LabeledOutput>, SimError> {
        let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(docs.len().max(1));
        let chunk = docs.len().div_ceil(workers).max(1);
        let results: Vec<Result<Vec<LabeledOutput>, SimError>> = std::thread::scope(|s| {
            let handles: Vec<_> = docs
                .chunks(chunk)
                .map(|part| {
                    s.spawn(move || {
                        part.iter().map(|d| self.generate_doc(d, mixture, calibration, filter, seed)).collect()
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("generator thread panicked")).collect()
        });
        let mut out = Vec::with_capacity(docs.len());
        for r in results {
            out.extend(r?);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
struct Draw {
    behavior: Behavior,
    ids: Vec<TokenId>,
    text: Vec<u8>,
    word: String,
    pseudo: bool,
    candidate: Option<Candidate>,
}

impl Default for Draw {
    fn default() -> Self {
        Draw { behavior: Behavior::Unchanged, ids: Vec::new(), text: Vec::new(), word: String::new(), pseudo: false, candidate: None }
    }
}

/// Decode one of `seqs` token by token, filtering each next-token
/// distribution. Returns the index of the completed sequence, or `None` when
/// the filter leaves no continuation.
fn stepwise_decode(seqs: &[(&[TokenId], f64)], filter: &DecodeFilter, rng: &mut ChaCha8Rng) -> Option<usize> {
    let mut alive: Vec<usize> = (0..seqs.len()).filter(|&i| seqs[i].1 > 0.0).collect();
    let mut step = 0;
    loop {
        let mut next: Vec<(TokenId, f64)> = Vec::new();
        for &i in &alive {
            let (ids, w) = seqs[i];
            let tok = ids.get(step).copied().unwrap_or(END);
            match next.iter_mut().find(|(t, _)| *t == tok) {
                Some(slot) => slot.1 += w,
                None => next.push((tok, w)),
            }
        }
        let dist = match filter.apply_filter(&next) {
            Ok(d) => d,
            Err(MaskError::EmptySupport | MaskError::ZeroMass) => return None,
            Err(_) => return None,
        };
        let r: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = dist[dist.len() - 1].0;
        for &(t, p) in &dist {
            acc += p;
            if r < acc {
                chosen = t;
                break;
            }
        }
        if chosen == END {
            return alive.into_iter().find(|&i| seqs[i].0.len() == step);
        }
        alive.retain(|&i| seqs[i].0.get(step) == Some(&chosen));
        step += 1;
    }
}

/// Rewrite one document, calibrating on that document alone.
pub fn generate(
    vocab: &Vocabulary,
    doc: &AnnotatedDoc,
    mixture: &BehaviorMixture,
    synonyms: &SynonymMap,
    seed: u64,
) -> Result<LabeledOutput, SimError> {
    let sim = Simulator::new(vocab, AffixLexicon::english(), synonyms.clone());
    let cal = sim.calibrate(std::slice::from_ref(doc), mixture)?;
    sim.generate_doc(doc, mixture, &cal, None, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probe::{annotate, CorpusDoc, Target};
    use crate::vocab::VocabMode;

    fn voc() -> Vocabulary {
        let mut toks: Vec<String> = (b'a'..=b'z').chain(b'0'..=b'9').map(|b| (b as char).to_string()).collect();
        toks.extend(
            [" ", "\n", ".", ",", "F", " February", "February", "Feb", "ruary", " of", " in", " March", " the", "the", "The"]
                .iter()
                .map(|s| s.to_string()),
        );
        Vocabulary::from_strs(&toks, VocabMode::Metaspace, false).unwrap()
    }

    fn doc(text: &str, words: &[&str]) -> AnnotatedDoc {
        let mut targets = Vec::new();
        let mut from = 0;
        for w in words {
            let start = from + text[from..].find(w).unwrap();
            targets.push(Target { start, end: start + w.len(), word: w.to_string() });
            from = start + w.len();
        }
        annotate(&CorpusDoc { doc_id: "d".into(), text: text.into() }, targets, "{doc}").unwrap()
    }

    fn synonyms() -> SynonymMap {
        SynonymMap(BTreeMap::from([("February".to_string(), vec!["March".to_string()])]))
    }

    #[test]
    fn pure_copy_is_identity() {
        let v = voc();
        let d = doc("The end of February.", &["February"]);
        let out = generate(&v, &d, &BehaviorMixture::new(1.0, 0.0, 0.0), &synonyms(), 7).unwrap();
        assert_eq!(out.output_text, d.original_text);
        assert_eq!(out.output_ids, v.encode(d.original_text.as_bytes()).unwrap().ids);
        assert!(out.labels.iter().all(|l| l.behavior == Behavior::Unchanged));
    }

    #[test]
    fn all_e1_plants_bare_word() {
        let v = voc();
        let d = doc("The end of February.", &["February"]);
        let m = BehaviorMixture::new(0.0, 0.0, 1.0).only_type(ErrorType::E1);
        let out = generate(&v, &d, &m, &synonyms(), 7).unwrap();
        let l = &out.labels[0];
        assert_eq!((l.behavior, l.error_type), (Behavior::Phantom, Some(ErrorType::E1)));
        assert_eq!(l.output_ids, vec![v.id_of("February").unwrap()]);
        assert_eq!(out.output_text, d.original_text);
    }

    #[test]
    fn replacement_and_pseudo_words() {
        let v = voc();
        let d = doc("The end of February.", &["February"]);
        let out = generate(&v, &d, &BehaviorMixture::new(0.0, 1.0, 0.0), &synonyms(), 7).unwrap();
        assert_eq!(out.output_text, "The end of March.");
        assert_eq!(out.labels[0].output_ids, vec![v.id_of(" March").unwrap()]);
        let out = generate(&v, &d, &BehaviorMixture::new(0.0, 1.0, 0.0), &SynonymMap::default(), 7).unwrap();
        assert!(out.labels[0].pseudo_word);
        assert_eq!(out.output_text, format!("The end of {}.", pseudo_word("February")));
    }

    #[test]
    fn deterministic_in_seed() {
        let v = voc();
        let d = doc("The end of February and the start of February.", &["February", "start", "February"]);
        let m = BehaviorMixture::new(0.3, 0.3, 0.4);
        let a = generate(&v, &d, &m, &synonyms(), 11).unwrap();
        assert_eq!(a, generate(&v, &d, &m, &synonyms(), 11).unwrap());
    }

    #[test]
    fn inventory_blocks_every_phantom() {
        let v = voc();
        let d = doc("The end of February.", &["February"]);
        let sim = Simulator::new(&v, AffixLexicon::english(), synonyms());
        let m = BehaviorMixture::new(0.0, 0.0, 1.0);
        let cal = sim.calibrate(std::slice::from_ref(&d), &m).unwrap();
        let filter = DecodeFilter::new(sim.phantom_inventory(std::slice::from_ref(&d)).unwrap());
        for seed in 0..50 {
            let out = sim.generate_doc(&d, &m, &cal, Some(&filter), seed).unwrap();
            assert_eq!(out.labels[0].behavior, Behavior::Replaced);
        }
    }

    #[test]
    fn stepwise_decode_follows_weights() {
        let a = [TokenId(1), TokenId(2)];
        let b = [TokenId(1), TokenId(3)];
        let seqs: Vec<(&[TokenId], f64)> = vec![(&a, 1.0), (&b, 0.0)];
        let mut rng = derive_rng(0, "t", "", 0);
        assert_eq!(stepwise_decode(&seqs, &DecodeFilter::default(), &mut rng), Some(0));
        let mut bl = Blocklist::new();
        bl.insert(TokenId(2), TrialKey { doc_id: String::new(), target_index: 0 });
        let seqs: Vec<(&[TokenId], f64)> = vec![(&a, 1.0), (&b, 1.0)];
        assert_eq!(stepwise_decode(&seqs, &DecodeFilter::new(bl.clone()), &mut rng), Some(1));
        let seqs: Vec<(&[TokenId], f64)> = vec![(&a, 1.0)];
        assert_eq!(stepwise_decode(&seqs, &DecodeFilter::new(bl), &mut rng), None);
    }

    #[test]
    fn mixture_validation_and_presets() {
        assert!(BehaviorMixture::new(0.5, 0.5, 0.5).validate().is_err());
        assert!(BehaviorMixture::new(-0.5, 1.0, 0.5).validate().is_err());
        let g = preset("gemma3-4b").unwrap();
        assert_eq!(g.split_merge_profile, [0.78, 0.197, 0.023]);
        assert!(matches!(preset("nope"), Err(SimError::UnknownPreset(_))));
    }
}
