//! Whole-corpus steps composed from the per-document operations.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::{analyze_doc, AlignError, Outcome, OutputTokens, Trial};
use crate::analytics::{
    outcome_distribution, split_merge_summary, transition_matrix, AnalyticsError, MatrixConfig, OutcomeDistribution,
    OutcomeFractions, SplitMergeSummary, TransitionMatrix,
};
use crate::probe::{filter_corpus, prepare_doc, AnnotatedDoc, CorpusDoc, ProbeError, SelectConfig, Stopwords, WordBounds};
use crate::records::OutputRecord;
use crate::taxonomy::{E2Variant, ErrorType, Taxonomy};
use crate::vocab::VocabError;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("no output for document {doc_id:?}")]
    MissingOutput { doc_id: String },
    #[error("output for unknown document {doc_id:?}")]
    UnknownOutput { doc_id: String },
    #[error("more than one output for document {doc_id:?}")]
    DuplicateOutput { doc_id: String },
    #[error("document {doc_id:?}: {source}")]
    Align {
        doc_id: String,
        #[source]
        source: AlignError,
    },
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error(transparent)]
    Probe(#[from] ProbeError),
    #[error(transparent)]
    Vocab(#[from] VocabError),
}

#[derive(Debug, Clone, Default)]
pub struct Prepared {
    pub docs: Vec<AnnotatedDoc>,
    /// Documents dropped by the word-count bounds.
    pub out_of_bounds: usize,
    /// Documents inside the bounds with no eligible word.
    pub without_targets: usize,
}

/// Filter by length, select targets and annotate every document.
pub fn prepare_corpus(
    docs: impl IntoIterator<Item = CorpusDoc>,
    cfg: &SelectConfig,
    bounds: WordBounds,
    stopwords: &Stopwords,
    template: &str,
    seed: u64,
) -> Result<Prepared, ProbeError> {
    let docs: Vec<CorpusDoc> = docs.into_iter().collect();
    let total = docs.len();
    let mut out = Prepared::default();
    let kept: Vec<CorpusDoc> = filter_corpus(docs, bounds).collect();
    out.out_of_bounds = total - kept.len();
    for d in &kept {
        match prepare_doc(d, cfg, stopwords, template, seed) {
            Ok(a) => out.docs.push(a),
            Err(ProbeError::NoEligibleWords { .. }) => out.without_targets += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Where output token ids come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TokenSource {
    /// Use reported ids when a record has them, else encode the text.
    #[default]
    PreferReported,
    /// Always canonically encode the output text.
    Encode,
}

#[derive(Debug, Clone)]
pub struct Analysis {
    /// Every trial; `Different` trials carry their error type.
    pub trials: Vec<Trial>,
    pub distribution: OutcomeDistribution,
    pub histogram: BTreeMap<ErrorType, usize>,
    pub e2_variants: BTreeMap<E2Variant, usize>,
    pub matrix: TransitionMatrix,
    /// `None` when there are no `Different` trials.
    pub split_merge: Option<SplitMergeSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSummary {
    pub trials: usize,
    pub counts: OutcomeDistribution,
    pub fractions: OutcomeFractions,
    /// Error type name → count over `Different` trials.
    pub error_types: BTreeMap<String, usize>,
    pub e2_variants: BTreeMap<String, usize>,
    pub split_merge: Option<SplitMergeFractions>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitMergeFractions {
    pub same: f64,
    pub split: f64,
    pub merge: f64,
}

impl Analysis {
    pub fn summary(&self) -> AnalysisSummary {
        AnalysisSummary {
            trials: self.trials.len(),
            counts: self.distribution,
            fractions: self.distribution.fractions(),
            error_types: self.histogram.iter().map(|(t, n)| (t.name().to_string(), *n)).collect(),
            e2_variants: self.e2_variants.iter().map(|(v, n)| (v.as_str().to_string(), *n)).collect(),
            split_merge: self.split_merge.map(|s| SplitMergeFractions {
                same: s.same_fraction(),
                split: s.split_fraction(),
                merge: s.merge_fraction(),
            }),
        }
    }
}

/// Align, classify and aggregate every annotated document against its output.
pub fn analyze_outputs(
    taxonomy: &Taxonomy<'_>,
    annotated: &[AnnotatedDoc],
    outputs: &[OutputRecord],
    source: TokenSource,
    matrix: &MatrixConfig,
) -> Result<Analysis, PipelineError> {
    let vocab = taxonomy.vocab();
    let mut by_id: HashMap<&str, &OutputRecord> = HashMap::with_capacity(outputs.len());
    for o in outputs {
        if by_id.insert(o.doc_id.as_str(), o).is_some() {
            return Err(PipelineError::DuplicateOutput { doc_id: o.doc_id.clone() });
        }
    }
    let known: HashMap<&str, ()> = annotated.iter().map(|d| (d.doc_id.as_str(), ())).collect();
    if let Some(o) = outputs.iter().find(|o| !known.contains_key(o.doc_id.as_str())) {
        return Err(PipelineError::UnknownOutput { doc_id: o.doc_id.clone() });
    }

    let mut trials = Vec::new();
    let mut histogram: BTreeMap<ErrorType, usize> = ErrorType::PRECEDENCE.iter().map(|&t| (t, 0)).collect();
    histogram.insert(ErrorType::Other, 0);
    let mut e2_variants = BTreeMap::new();
    for doc in annotated {
        let out = by_id.get(doc.doc_id.as_str()).ok_or_else(|| PipelineError::MissingOutput { doc_id: doc.doc_id.clone() })?;
        let tokens = match (&out.output_ids, source) {
            (Some(ids), TokenSource::PreferReported) => OutputTokens::Reported(ids),
            _ => OutputTokens::Encode,
        };
        let mut doc_trials = analyze_doc(vocab, doc, &out.output_text, tokens)
            .map_err(|source| PipelineError::Align { doc_id: doc.doc_id.clone(), source })?;
        for t in &mut doc_trials {
            if t.outcome == Outcome::Different {
                let c = taxonomy.classify_error(&t.input_ids, &t.output_ids, &t.input_word)?;
                t.error_type = Some(c.error_type);
                *histogram.entry(c.error_type).or_default() += 1;
                if let Some(v) = c.e2_variant {
                    *e2_variants.entry(v).or_default() += 1;
                }
            }
        }
        trials.extend(doc_trials);
    }
    let distribution = outcome_distribution(&trials);
    let different: Vec<&Trial> = trials.iter().filter(|t| t.outcome == Outcome::Different).collect();
    let m = transition_matrix(vocab, different.iter().copied(), matrix)?;
    let split_merge = if m.total() > 0 { Some(split_merge_summary(&m)?) } else { None };
    Ok(Analysis { trials, distribution, histogram, e2_variants, matrix: m, split_merge })
}
