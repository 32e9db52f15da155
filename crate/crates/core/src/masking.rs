//! Token-id blocklists built from phantom edits, and the decode-time filter
//! that removes blocked ids from a candidate distribution.
//!
//! Blocking is global per run and per single id: an id offending in one
//! context is banned everywhere, including legitimate uses. Provenance keeps
//! the contributing trials so narrower scopes can be reconstructed.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::{Outcome, Trial};
use crate::vocab::TokenId;

/// Logit bias value understood as "never sample" by OpenAI-compatible
/// endpoints.
pub const FORBID_BIAS: i32 = -100;

#[derive(Debug, Error, PartialEq)]
pub enum MaskError {
    #[error("trial ({doc_id}, {target_index}) is {outcome:?}, not different")]
    NotDifferent { doc_id: String, target_index: usize, outcome: Outcome },
    #[error("every candidate is blocked")]
    EmptySupport,
    #[error("candidate weight {weight} for token {id} is negative or not finite")]
    InvalidWeight { id: TokenId, weight: f64 },
    #[error("candidate weights sum to zero")]
    ZeroMass,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TrialKey {
    pub doc_id: String,
    pub target_index: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Blocklist {
    ids: BTreeSet<TokenId>,
    provenance: BTreeMap<TokenId, Vec<TrialKey>>,
}

impl Blocklist {
    pub fn new() -> Self {
        Self::default()
    }

    /// Record that `key` contributed `id`.
    pub fn insert(&mut self, id: TokenId, key: TrialKey) {
        self.ids.insert(id);
        let keys = self.provenance.entry(id).or_default();
        if let Err(pos) = keys.binary_search(&key) {
            keys.insert(pos, key);
        }
    }

    /// Set union with merged provenance.
    pub fn merge(&mut self, other: &Blocklist) {
        for (id, keys) in &other.provenance {
            for k in keys {
                self.insert(*id, k.clone());
            }
        }
        for id in &other.ids {
            self.ids.insert(*id);
        }
    }

    pub fn contains(&self, id: TokenId) -> bool {
        self.ids.contains(&id)
    }

    pub fn ids(&self) -> impl Iterator<Item = TokenId> + '_ {
        self.ids.iter().copied()
    }

    pub fn provenance(&self, id: TokenId) -> &[TrialKey] {
        self.provenance.get(&id).map_or(&[], Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Union over `Different` trials of output span ids not present in the
/// input span.
pub fn build_blocklist<'a>(trials: impl IntoIterator<Item = &'a Trial>) -> Result<Blocklist, MaskError> {
    let mut b = Blocklist::new();
    for t in trials {
        if t.outcome != Outcome::Different {
            return Err(MaskError::NotDifferent {
                doc_id: t.doc_id.clone(),
                target_index: t.target_index,
                outcome: t.outcome,
            });
        }
        let input: BTreeSet<TokenId> = t.input_ids.iter().copied().collect();
        for &id in &t.output_ids {
            if !input.contains(&id) {
                b.insert(id, TrialKey { doc_id: t.doc_id.clone(), target_index: t.target_index });
            }
        }
    }
    Ok(b)
}

#[derive(Debug, Clone, Default)]
pub struct DecodeFilter {
    pub blocklist: Blocklist,
}

impl DecodeFilter {
    pub fn new(blocklist: Blocklist) -> Self {
        DecodeFilter { blocklist }
    }

    /// Drop blocked candidates and renormalize the rest, preserving order.
    pub fn apply_filter(&self, candidates: &[(TokenId, f64)]) -> Result<Vec<(TokenId, f64)>, MaskError> {
        apply_filter(self, candidates)
    }
}

pub fn apply_filter(filter: &DecodeFilter, candidates: &[(TokenId, f64)]) -> Result<Vec<(TokenId, f64)>, MaskError> {
    let mut total = 0.0;
    for &(id, weight) in candidates {
        if !weight.is_finite() || weight < 0.0 {
            return Err(MaskError::InvalidWeight { id, weight });
        }
        total += weight;
    }
    if total <= 0.0 {
        return Err(MaskError::ZeroMass);
    }
    let kept: Vec<(TokenId, f64)> = candidates.iter().copied().filter(|(id, _)| !filter.blocklist.contains(*id)).collect();
    let remaining: f64 = kept.iter().map(|(_, w)| w).sum();
    if kept.is_empty() || remaining <= 0.0 {
        return Err(MaskError::EmptySupport);
    }
    Ok(kept.into_iter().map(|(id, w)| (id, w / remaining)).collect())
}

/// Every blocked id mapped to [`FORBID_BIAS`].
pub fn export_logit_bias(blocklist: &Blocklist) -> BTreeMap<TokenId, i32> {
    blocklist.ids().map(|id| (id, FORBID_BIAS)).collect()
}
