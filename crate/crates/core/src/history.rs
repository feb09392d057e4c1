//! Per-text-block history.
//!
//! Every text block owns an append-only log of full-content snapshots. Reverts
//! append a new entry instead of truncating, and concatenation keeps the
//! absorbed block's log as a tagged segment under the surviving block.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::model::{BlockId, RecordId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum EntryKind {
    Created,
    /// Materialized in an output container from a generation.
    Generated { record: RecordId },
    Edited,
    /// This block was split off `from`.
    SplitOut { from: BlockId },
    /// A range of this block was split off into `into`.
    Split { into: BlockId },
    Absorbed { source: BlockId },
    Continuation { record: RecordId },
    SelectReplacement { record: RecordId },
    Reverted { to_seq: u64 },
}

impl EntryKind {
    /// The generation this entry came from, if any.
    pub fn record(&self) -> Option<&RecordId> {
        match self {
            Self::Generated { record } | Self::Continuation { record } | Self::SelectReplacement { record } => {
                Some(record)
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistoryEntry {
    pub seq: u64,
    pub kind: EntryKind,
    pub content_after: String,
    pub created_at: DateTime<Utc>,
}

/// A concatenated block's history, kept under the block that absorbed it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbsorbedHistory {
    pub source: BlockId,
    pub history: History,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct History {
    entries: Vec<HistoryEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    absorbed: Vec<AbsorbedHistory>,
}

impl History {
    pub(crate) fn start(kind: EntryKind, content: &str, at: DateTime<Utc>) -> Self {
        let mut history = Self::default();
        history.record(kind, content, at);
        history
    }

    /// Appends an entry with the next sequence number and returns it.
    pub(crate) fn record(&mut self, kind: EntryKind, content_after: &str, at: DateTime<Utc>) -> u64 {
        let seq = self.entries.last().map_or(0, |e| e.seq + 1);
        self.entries.push(HistoryEntry {
            seq,
            kind,
            content_after: content_after.to_string(),
            created_at: at,
        });
        seq
    }

    pub(crate) fn absorb(&mut self, source: BlockId, history: History) {
        self.absorbed.push(AbsorbedHistory { source, history });
    }

    pub fn entries(&self) -> &[HistoryEntry] {
        &self.entries
    }

    pub fn absorbed(&self) -> &[AbsorbedHistory] {
        &self.absorbed
    }

    pub fn entry(&self, seq: u64) -> Option<&HistoryEntry> {
        self.entries
            .binary_search_by_key(&seq, |e| e.seq)
            .ok()
            .map(|i| &self.entries[i])
    }

    pub fn latest(&self) -> Option<&HistoryEntry> {
        self.entries.last()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Every record id referenced by this history and its absorbed segments.
    pub fn record_refs(&self) -> Vec<&RecordId> {
        let mut refs: Vec<&RecordId> = self.entries.iter().filter_map(|e| e.kind.record()).collect();
        for segment in &self.absorbed {
            refs.extend(segment.history.record_refs());
        }
        refs
    }

    /// Structural checks: non-empty, strictly increasing sequence numbers,
    /// and revert targets that precede the revert.
    pub(crate) fn check(&self) -> Result<(), String> {
        if self.entries.is_empty() {
            return Err("history is empty".into());
        }
        for pair in self.entries.windows(2) {
            if pair[1].seq <= pair[0].seq {
                return Err(format!("seq {} does not follow {}", pair[1].seq, pair[0].seq));
            }
        }
        for entry in &self.entries {
            if let EntryKind::Reverted { to_seq } = entry.kind {
                if to_seq >= entry.seq || self.entry(to_seq).is_none() {
                    return Err(format!("entry {} reverts to unknown seq {to_seq}", entry.seq));
                }
            }
        }
        for segment in &self.absorbed {
            segment
                .history
                .check()
                .map_err(|e| format!("absorbed history of {}: {e}", segment.source))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at() -> DateTime<Utc> {
        DateTime::from_timestamp(1_700_000_000, 0).unwrap()
    }

    #[test]
    fn seqs_count_up_from_zero() {
        let mut history = History::start(EntryKind::Created, "a", at());
        assert_eq!(history.record(EntryKind::Edited, "b", at()), 1);
        assert_eq!(history.record(EntryKind::Edited, "b", at()), 2);
        assert_eq!(history.len(), 3);
        assert_eq!(history.latest().unwrap().content_after, "b");
        assert!(history.check().is_ok());
    }

    #[test]
    fn check_flags_bad_sequences() {
        let mut history = History::start(EntryKind::Created, "a", at());
        history.record(EntryKind::Reverted { to_seq: 5 }, "a", at());
        assert!(history.check().is_err());
        assert!(History::default().check().is_err());
    }

    #[test]
    fn record_refs_include_absorbed_segments() {
        let mut inner = History::start(EntryKind::Generated { record: RecordId::new("g1") }, "x", at());
        inner.record(EntryKind::Continuation { record: RecordId::new("g2") }, "xy", at());
        let mut outer = History::start(EntryKind::Created, "o", at());
        outer.absorb(BlockId::new("b2"), inner);
        let refs: Vec<&str> = outer.record_refs().into_iter().map(RecordId::as_str).collect();
        assert_eq!(refs, vec!["g1", "g2"]);
    }
}
