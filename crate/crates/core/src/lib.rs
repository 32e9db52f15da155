//! Tokenization-consistency probing for phantom edits.
//!
//! A phantom edit is a model output whose token ids differ from the input
//! while the text they spell is unchanged. The crate covers the whole probe:
//! vocabularies and canonical encoding, segmentation lattices, target
//! selection, output alignment, the error taxonomy, aggregate reports,
//! id-level masking and a seeded simulator that plants labeled edits.

pub mod alignment;
pub mod analytics;
pub mod corpus;
pub mod fixtures;
pub mod masking;
pub mod pipeline;
pub mod manifest;
pub mod probe;
pub mod records;
pub mod remote;
pub mod seeding;
pub mod segmentation;
pub mod simulator;
pub mod taxonomy;
pub mod vocab;

pub use alignment::{analyze_doc, classify_trial, AlignError, Outcome, OutputTokens, Trial};
pub use analytics::{OutcomeDistribution, SplitMergeSummary, TransitionMatrix};
pub use masking::{apply_filter, build_blocklist, Blocklist, DecodeFilter};
pub use probe::{AnnotatedDoc, CorpusDoc, Target};
pub use simulator::{BehaviorMixture, LabeledOutput, Simulator, SynonymMap};
pub use taxonomy::{Classification, ErrorType, Taxonomy};
pub use vocab::{Encoding, TokenId, VocabError, VocabMode, Vocabulary};
