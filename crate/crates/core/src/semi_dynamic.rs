//! Deletion-only wrapper around [`StaticIndex`]: a mark vector over
//! suffix-array positions records which suffixes belong to deleted
//! documents, queries filter through it, and once deleted symbols exceed
//! `total/tau` the index is rebuilt from the surviving documents.

use std::collections::BTreeSet;
use std::collections::HashMap;

use crate::bits::{CompactReportBitVector, RankBitVector};
use crate::error::{Error, Result};
use crate::static_index::{Document, StaticIndex};

/// Whether `delete_document` rebuilds on threshold or leaves purging to an
/// outer scheduler.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PurgePolicy {
    Auto,
    Manual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PurgeSignal {
    None,
    /// The index was rebuilt; this many symbols went through the builder.
    Rebuilt { symbols_built: usize },
}

#[derive(Debug, Clone, Copy)]
struct DocState {
    alive: bool,
    len: usize,
}

#[derive(Debug)]
pub struct SemiDynamicIndex {
    core: StaticIndex,
    marks: CompactReportBitVector,
    rank: Option<RankBitVector>,
    registry: HashMap<u64, DocState>,
    total_symbols: usize,
    deleted_symbols: usize,
    tau: usize,
    policy: PurgePolicy,
    sample_rate: usize,
    counting: bool,
}

impl SemiDynamicIndex {
    pub fn new(
        docs: &[Document],
        sample_rate: usize,
        tau: usize,
        counting: bool,
        policy: PurgePolicy,
    ) -> Result<SemiDynamicIndex> {
        let core = StaticIndex::build(docs, sample_rate)?;
        let n = core.total_symbols();
        let tau = tau.max(2);
        let registry = docs
            .iter()
            .map(|d| (d.id, DocState { alive: true, len: d.size() }))
            .collect();
        Ok(SemiDynamicIndex {
            core,
            marks: CompactReportBitVector::all_ones_with_budget(n, tau.min(u16::MAX as usize), n)?,
            rank: counting.then(|| RankBitVector::all_ones(n)),
            registry,
            total_symbols: n,
            deleted_symbols: 0,
            tau,
            policy,
            sample_rate,
            counting,
        })
    }

    pub fn total_symbols(&self) -> usize {
        self.total_symbols
    }

    pub fn alive_symbols(&self) -> usize {
        self.total_symbols - self.deleted_symbols
    }

    pub fn deleted_symbols(&self) -> usize {
        self.deleted_symbols
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn sample_rate(&self) -> usize {
        self.sample_rate
    }

    pub fn counting(&self) -> bool {
        self.counting
    }

    pub fn alive_doc_count(&self) -> usize {
        self.registry.values().filter(|d| d.alive).count()
    }

    pub fn is_alive(&self, id: u64) -> bool {
        self.registry.get(&id).map(|d| d.alive).unwrap_or(false)
    }

    pub fn alive_doc_ids(&self) -> Vec<u64> {
        let mut ids: Vec<u64> =
            self.registry.iter().filter(|(_, s)| s.alive).map(|(&id, _)| id).collect();
        ids.sort_unstable();
        ids
    }

    pub fn doc_size(&self, id: u64) -> Option<usize> {
        self.registry.get(&id).filter(|s| s.alive).map(|s| s.len)
    }

    /// Marks every suffix of `id` as deleted. Under `PurgePolicy::Auto` a
    /// rebuild fires once deleted symbols strictly exceed `total/tau`.
    pub fn delete_document(&mut self, id: u64) -> Result<PurgeSignal> {
        let state = self.registry.get_mut(&id).ok_or(Error::UnknownDocument(id))?;
        if !state.alive {
            return Err(Error::UnknownDocument(id));
        }
        state.alive = false;
        let len = state.len;
        for off in 0..len {
            let j = self.core.suffix_rank(id, off)?;
            self.marks.zero(j)?;
            if let Some(rank) = &mut self.rank {
                rank.set_zero(j)?;
            }
        }
        self.deleted_symbols += len;
        if self.policy == PurgePolicy::Auto && self.purge_due() {
            let built = self.purge()?;
            return Ok(PurgeSignal::Rebuilt { symbols_built: built });
        }
        Ok(PurgeSignal::None)
    }

    /// True once deleted symbols strictly exceed `total/tau`.
    pub fn purge_due(&self) -> bool {
        self.deleted_symbols > self.total_symbols / self.tau
    }

    /// Rebuilds from the surviving documents, resetting all marks. Returns
    /// symbols fed to the static builder. A purge of the last document
    /// leaves an empty shell that answers nothing.
    pub fn purge(&mut self) -> Result<usize> {
        let alive = self.alive_documents();
        let built: usize = alive.iter().map(|d| d.size()).sum();
        if alive.is_empty() {
            self.total_symbols = 0;
            self.deleted_symbols = 0;
            self.marks = CompactReportBitVector::all_ones(0, self.tau.min(u16::MAX as usize));
            self.rank = self.counting.then(|| RankBitVector::all_ones(0));
            self.registry.clear();
            return Ok(0);
        }
        *self =
            SemiDynamicIndex::new(&alive, self.sample_rate, self.tau, self.counting, self.policy)?;
        Ok(built)
    }

    /// All occurrences of `pattern` in alive documents.
    pub fn query(&self, pattern: &[u32]) -> Result<BTreeSet<(u64, usize)>> {
        if pattern.is_empty() {
            return Err(Error::EmptyPattern);
        }
        let mut out = BTreeSet::new();
        if self.total_symbols == 0 || self.alive_symbols() == 0 {
            return Ok(out);
        }
        let Some((a, b)) = self.core.range_find(pattern)? else {
            return Ok(out);
        };
        for j in self.marks.report(a, b)? {
            let p = self.core.locate(j)?;
            out.insert(self.core.doc_at(p)?);
        }
        Ok(out)
    }

    /// Occurrence count via the rank structure; requires counting support.
    pub fn count(&self, pattern: &[u32]) -> Result<usize> {
        if pattern.is_empty() {
            return Err(Error::EmptyPattern);
        }
        let rank = self.rank.as_ref().ok_or(Error::CountingDisabled)?;
        if self.total_symbols == 0 || self.alive_symbols() == 0 {
            return Ok(0);
        }
        match self.core.range_find(pattern)? {
            Some((a, b)) => rank.ones_in_range(a, b),
            None => Ok(0),
        }
    }

    /// Surviving documents, in id order.
    pub fn alive_documents(&self) -> Vec<Document> {
        if self.total_symbols == 0 {
            return Vec::new();
        }
        self.core
            .to_pairs()
            .into_iter()
            .filter(|d| self.registry.get(&d.id).map(|s| s.alive).unwrap_or(false))
            .collect()
    }

    pub fn core(&self) -> &StaticIndex {
        &self.core
    }

    /// Size accounting split: (index_bits, marks_bits, rank_bits,
    /// deleted_overhead_bits). The deleted overhead is the deleted symbols'
    /// pro-rata share of the stored sequence.
    pub fn size_report(&self) -> (usize, usize, usize, usize) {
        if self.total_symbols == 0 {
            return (0, 0, 0, 0);
        }
        let (seq, samples, registry, _) = self.core.size_report();
        let index_bits = seq + samples + registry;
        let (_, _, marks_bits) = self.marks.size_report();
        let rank_bits = self.rank.as_ref().map(|r| r.size_bits()).unwrap_or(0);
        let deleted = (index_bits as f64 * self.deleted_symbols as f64
            / self.total_symbols as f64) as usize;
        (index_bits, marks_bits, rank_bits, deleted)
    }
}
