//! Outcome distributions and the fragmentation-transition matrix.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::{Outcome, Trial};
use crate::vocab::{TokenId, VocabError, Vocabulary};

pub const DEFAULT_BOUND: usize = 8;

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("trial ({doc_id}, {target_index}) is {outcome:?}, not different")]
    NotDifferent { doc_id: String, target_index: usize, outcome: Outcome },
    #[error("transition matrix is empty")]
    EmptyMatrix,
    #[error("matrix bounds differ ({0} vs {1})")]
    BoundMismatch(usize, usize),
    #[error("csv export failed: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Vocab(#[from] VocabError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    pub unchanged: u64,
    pub replaced: u64,
    pub different: u64,
    pub discarded: u64,
}

/// Fractions over the three classified outcomes; `None` when nothing was
/// classified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutcomeFractions {
    pub unchanged: Option<f64>,
    pub replaced: Option<f64>,
    pub different: Option<f64>,
}

impl OutcomeDistribution {
    pub fn add(&mut self, outcome: Outcome) {
        match outcome {
            Outcome::Unchanged => self.unchanged += 1,
            Outcome::Replaced => self.replaced += 1,
            Outcome::Different => self.different += 1,
            Outcome::Discarded => self.discarded += 1,
        }
    }

    pub fn merge(&mut self, other: &OutcomeDistribution) {
        self.unchanged += other.unchanged;
        self.replaced += other.replaced;
        self.different += other.different;
        self.discarded += other.discarded;
    }

    /// Trials classified as Unchanged, Replaced or Different.
    pub fn classified(&self) -> u64 {
        self.unchanged + self.replaced + self.different
    }

    pub fn count(&self, outcome: Outcome) -> u64 {
        match outcome {
            Outcome::Unchanged => self.unchanged,
            Outcome::Replaced => self.replaced,
            Outcome::Different => self.different,
            Outcome::Discarded => self.discarded,
        }
    }

    /// Share of classified trials; `None` for `Discarded` or when empty.
    pub fn fraction(&self, outcome: Outcome) -> Option<f64> {
        let n = self.classified();
        (n > 0 && outcome != Outcome::Discarded).then(|| self.count(outcome) as f64 / n as f64)
    }

    pub fn fractions(&self) -> OutcomeFractions {
        OutcomeFractions {
            unchanged: self.fraction(Outcome::Unchanged),
            replaced: self.fraction(Outcome::Replaced),
            different: self.fraction(Outcome::Different),
        }
    }
}

pub fn outcome_distribution<'a>(trials: impl IntoIterator<Item = &'a Trial>) -> OutcomeDistribution {
    let mut d = OutcomeDistribution::default();
    for t in trials {
        d.add(t.outcome);
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixConfig {
    /// Largest fragment count with its own row/column; larger counts share an
    /// overflow bucket.
    pub bound: usize,
    /// Count whitespace-only tokens as fragments too.
    pub count_gap_tokens: bool,
}

impl Default for MatrixConfig {
    fn default() -> Self {
        MatrixConfig { bound: DEFAULT_BOUND, count_gap_tokens: false }
    }
}

/// Number of fragments a span contributes to the matrix.
pub fn fragment_count(vocab: &Vocabulary, ids: &[TokenId], count_gap_tokens: bool) -> Result<usize, VocabError> {
    vocab.check_ids(ids)?;
    Ok(if count_gap_tokens { ids.len() } else { ids.iter().filter(|&&id| !vocab.is_whitespace_token(id)).count() })
}

/// Square grid over (input fragments, output fragments), 1-based, with
/// bucket `bound + 1` collecting everything larger.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    bound: usize,
    counts: Vec<u64>,
    char_length_sums: Vec<u64>,
}

impl TransitionMatrix {
    pub fn new(bound: usize) -> Self {
        let side = bound + 1;
        TransitionMatrix { bound, counts: vec![0; side * side], char_length_sums: vec![0; side * side] }
    }

    pub fn bound(&self) -> usize {
        self.bound
    }

    /// Rows (and columns) including the overflow bucket.
    pub fn side(&self) -> usize {
        self.bound + 1
    }

    fn bucket(&self, fragments: usize) -> usize {
        fragments.clamp(1, self.bound + 1) - 1
    }

    fn cell(&self, x: usize, y: usize) -> usize {
        self.bucket(x) * self.side() + self.bucket(y)
    }

    pub fn add(&mut self, x: usize, y: usize, chars: usize) {
        let c = self.cell(x, y);
        self.counts[c] += 1;
        self.char_length_sums[c] += chars as u64;
    }

    pub fn merge(&mut self, other: &TransitionMatrix) -> Result<(), AnalyticsError> {
        if self.bound != other.bound {
            return Err(AnalyticsError::BoundMismatch(self.bound, other.bound));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        for (a, b) in self.char_length_sums.iter_mut().zip(&other.char_length_sums) {
            *a += b;
        }
        Ok(())
    }

    /// Count in cell (x, y); fragment counts above the bound land in the
    /// overflow bucket.
    pub fn count(&self, x: usize, y: usize) -> u64 {
        self.counts[self.cell(x, y)]
    }

    pub fn char_length_sum(&self, x: usize, y: usize) -> u64 {
        self.char_length_sums[self.cell(x, y)]
    }

    pub fn mean_char_length(&self, x: usize, y: usize) -> Option<f64> {
        let n = self.count(x, y);
        (n > 0).then(|| self.char_length_sum(x, y) as f64 / n as f64)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Share of all mass in cell (x, y).
    pub fn fraction(&self, x: usize, y: usize) -> Option<f64> {
        let t = self.total();
        (t > 0).then(|| self.count(x, y) as f64 / t as f64)
    }

    fn label(&self, i: usize) -> String {
        if i == self.bound { format!("{}+", self.bound + 1) } else { (i + 1).to_string() }
    }

    fn grid_csv(&self, cell: impl Fn(usize) -> String) -> Result<String, AnalyticsError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header: Vec<String> = std::iter::once("input\\output".to_string()).chain((0..self.side()).map(|i| self.label(i))).collect();
        w.write_record(&header)?;
        for x in 0..self.side() {
            let row: Vec<String> =
                std::iter::once(self.label(x)).chain((0..self.side()).map(|y| cell(x * self.side() + y))).collect();
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| AnalyticsError::Csv(e.into_error().into()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Comma-separated grid of counts, rows = input fragments.
    pub fn counts_csv(&self) -> Result<String, AnalyticsError> {
        self.grid_csv(|c| self.counts[c].to_string())
    }

    /// Comma-separated grid of mean character lengths (empty where a cell has
    /// no mass).
    pub fn mean_lengths_csv(&self) -> Result<String, AnalyticsError> {
        self.grid_csv(|c| match self.counts[c] {
            0 => String::new(),
            n => format!("{:.4}", self.char_length_sums[c] as f64 / n as f64),
        })
    }
}

/// Accumulate `Different` trials into a matrix.
pub fn transition_matrix<'a>(
    vocab: &Vocabulary,
    trials: impl IntoIterator<Item = &'a Trial>,
    cfg: &MatrixConfig,
) -> Result<TransitionMatrix, AnalyticsError> {
    let mut m = TransitionMatrix::new(cfg.bound);
    for t in trials {
        if t.outcome != Outcome::Different {
            return Err(AnalyticsError::NotDifferent {
                doc_id: t.doc_id.clone(),
                target_index: t.target_index,
                outcome: t.outcome,
            });
        }
        let x = fragment_count(vocab, &t.input_ids, cfg.count_gap_tokens)?;
        let y = fragment_count(vocab, &t.output_ids, cfg.count_gap_tokens)?;
        m.add(x, y, t.input_word.chars().count());
    }
    Ok(m)
}

/// Mass on, above and below the diagonal, kept as exact counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitMergeSummary {
    pub same: u64,
    pub split: u64,
    pub merge: u64,
}

impl SplitMergeSummary {
    pub fn total(&self) -> u64 {
        self.same + self.split + self.merge
    }

    pub fn same_fraction(&self) -> f64 {
        self.same as f64 / self.total() as f64
    }

    pub fn split_fraction(&self) -> f64 {
        self.split as f64 / self.total() as f64
    }

    pub fn merge_fraction(&self) -> f64 {
        self.merge as f64 / self.total() as f64
    }

    pub fn fractions(&self) -> (f64, f64, f64) {
        (self.same_fraction(), self.split_fraction(), self.merge_fraction())
    }
}

pub fn split_merge_summary(matrix: &TransitionMatrix) -> Result<SplitMergeSummary, AnalyticsError> {
    let side = matrix.side();
    let mut s = SplitMergeSummary { same: 0, split: 0, merge: 0 };
    for x in 0..side {
        for y in 0..side {
            let n = matrix.counts[x * side + y];
            match y.cmp(&x) {
                std::cmp::Ordering::Equal => s.same += n,
                std::cmp::Ordering::Greater => s.split += n,
                std::cmp::Ordering::Less => s.merge += n,
            }
        }
    }
    if s.total() == 0 {
        return Err(AnalyticsError::EmptyMatrix);
    }
    Ok(s)
}
