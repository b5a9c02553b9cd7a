//! Fully dynamic index with amortized update bounds: a small front
//! collection in a suffix tree plus geometrically capped levels of
//! deletion-only indexes. Inserts route to the smallest level that can
//! absorb everything below it; when nothing fits, or the collection doubles
//! or halves, everything is rebuilt into the top level.

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::layout::{self, AmortizedRoute, LevelMode};
use crate::semi_dynamic::{PurgePolicy, PurgeSignal, SemiDynamicIndex};
use crate::serial::{Reader, Writer};
use crate::static_index::Document;
use crate::suffix_tree::GeneralizedSuffixTree;

const SNAPSHOT_MAGIC: &[u8; 4] = b"DIXA";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Loc {
    Front,
    Level(usize),
}

/// Work and layout statistics, exposed for instrumentation checks.
#[derive(Debug, Clone, Default)]
pub struct AmortizedStats {
    /// symbols fed to static index builders (merges, purges, rebuilds)
    pub build_symbols: u64,
    pub global_rebuilds: u64,
    pub merges: u64,
    pub purges: u64,
    /// total symbols inserted over the index lifetime
    pub inserted_symbols: u64,
    /// maximum alive size ever observed
    pub max_alive: usize,
}

#[derive(Debug)]
pub struct AmortizedDynamicIndex {
    front: GeneralizedSuffixTree,
    levels: Vec<Option<SemiDynamicIndex>>,
    caps: Vec<usize>,
    registry: HashMap<u64, Loc>,
    epsilon: f64,
    tau: usize,
    mode: LevelMode,
    sample_rate: usize,
    counting: bool,
    alive_symbols: usize,
    at_last_rebuild: usize,
    pub stats: AmortizedStats,
}

impl AmortizedDynamicIndex {
    /// `tau = 0` tracks `ceil(log2 log2 n)`; `sample_rate = 0` defaults per
    /// build.
    pub fn new(
        mode: LevelMode,
        epsilon: f64,
        tau: usize,
        sample_rate: usize,
        counting: bool,
    ) -> Self {
        let caps = layout::amortized_caps(0, epsilon, mode);
        AmortizedDynamicIndex {
            front: GeneralizedSuffixTree::new(),
            levels: (1..caps.len()).map(|_| None).collect(),
            caps,
            registry: HashMap::new(),
            epsilon,
            tau,
            mode,
            sample_rate,
            counting,
            alive_symbols: 0,
            at_last_rebuild: 0,
            stats: AmortizedStats::default(),
        }
    }

    pub fn alive_symbols(&self) -> usize {
        self.alive_symbols
    }

    pub fn doc_count(&self) -> usize {
        self.registry.len()
    }

    pub fn contains(&self, id: u64) -> bool {
        self.registry.contains_key(&id)
    }

    pub fn mode(&self) -> LevelMode {
        self.mode
    }

    fn effective_tau(&self) -> usize {
        if self.tau != 0 {
            return self.tau.max(2);
        }
        let loglog = layout::clamped_log2(self.alive_symbols).log2().ceil() as usize;
        loglog.max(2)
    }

    fn level_alive(&self, i: usize) -> usize {
        self.levels[i].as_ref().map(|l| l.alive_symbols()).unwrap_or(0)
    }

    pub fn insert(&mut self, id: u64, content: &[u32]) -> Result<()> {
        if self.registry.contains_key(&id) {
            return Err(Error::DuplicateDocument(id));
        }
        if content.is_empty() {
            return Err(Error::EmptyDocument);
        }
        let size = content.len() + 1;
        self.alive_symbols += size;
        self.stats.inserted_symbols += size as u64;
        self.stats.max_alive = self.stats.max_alive.max(self.alive_symbols);

        if self.alive_symbols < layout::C0_ONLY_BELOW {
            self.front.insert(id, content)?;
            self.registry.insert(id, Loc::Front);
            return Ok(());
        }
        if self.alive_symbols >= 2 * self.at_last_rebuild.max(1) {
            self.front.insert(id, content)?;
            self.registry.insert(id, Loc::Front);
            return self.global_rebuild();
        }

        let mut sizes = Vec::with_capacity(self.caps.len());
        sizes.push(self.front.total_symbols());
        for i in 0..self.levels.len() {
            sizes.push(self.level_alive(i));
        }
        match layout::route_amortized(&sizes, &self.caps, size) {
            AmortizedRoute::Front => {
                self.front.insert(id, content)?;
                self.registry.insert(id, Loc::Front);
            }
            AmortizedRoute::Merge { target } => {
                let mut docs = self.drain_below(target);
                docs.push(Document::new(id, content.to_vec()));
                self.build_level(target, docs)?;
                self.stats.merges += 1;
            }
            AmortizedRoute::GlobalRebuild => {
                self.front.insert(id, content)?;
                self.registry.insert(id, Loc::Front);
                self.global_rebuild()?;
            }
        }
        Ok(())
    }

    pub fn delete(&mut self, id: u64) -> Result<()> {
        let loc = *self.registry.get(&id).ok_or(Error::UnknownDocument(id))?;
        let size = match loc {
            Loc::Front => {
                let size = self.front.doc_size(id).ok_or(Error::UnknownDocument(id))?;
                self.front.delete(id)?;
                size
            }
            Loc::Level(i) => {
                let level = self.levels[i].as_mut().ok_or(Error::UnknownDocument(id))?;
                let size = level.doc_size(id).ok_or(Error::UnknownDocument(id))?;
                match level.delete_document(id)? {
                    PurgeSignal::Rebuilt { symbols_built } => {
                        self.stats.build_symbols += symbols_built as u64;
                        self.stats.purges += 1;
                    }
                    PurgeSignal::None => {}
                }
                if level.alive_doc_count() == 0 {
                    self.levels[i] = None;
                }
                size
            }
        };
        self.registry.remove(&id);
        self.alive_symbols -= size;
        // shrink trigger mirrors the growth rule
        if self.at_last_rebuild >= layout::C0_ONLY_BELOW
            && self.alive_symbols <= self.at_last_rebuild / 2
        {
            self.global_rebuild()?;
        }
        Ok(())
    }

    pub fn query(&self, pattern: &[u32]) -> Result<BTreeSet<(u64, usize)>> {
        if pattern.is_empty() {
            return Err(Error::EmptyPattern);
        }
        let mut out = self.front.query(pattern)?;
        for level in self.levels.iter().flatten() {
            out.extend(level.query(pattern)?);
        }
        Ok(out)
    }

    pub fn count(&self, pattern: &[u32]) -> Result<usize> {
        if pattern.is_empty() {
            return Err(Error::EmptyPattern);
        }
        let mut total = self.front.count(pattern)?;
        for level in self.levels.iter().flatten() {
            total += level.count(pattern)?;
        }
        Ok(total)
    }

    /// Drains the front collection and levels below `target`, plus whatever
    /// `target` already holds.
    fn drain_below(&mut self, target: usize) -> Vec<Document> {
        let mut docs: Vec<Document> = self
            .front
            .documents()
            .into_iter()
            .map(|(id, symbols)| Document::new(id, symbols))
            .collect();
        self.front = GeneralizedSuffixTree::new();
        for i in 1..=target {
            if let Some(level) = self.levels[i - 1].take() {
                docs.extend(level.alive_documents());
            }
        }
        docs
    }

    fn build_level(&mut self, target: usize, docs: Vec<Document>) -> Result<()> {
        let built: usize = docs.iter().map(|d| d.size()).sum();
        self.stats.build_symbols += built as u64;
        for d in &docs {
            self.registry.insert(d.id, Loc::Level(target - 1));
        }
        let level = SemiDynamicIndex::new(
            &docs,
            self.sample_rate,
            self.effective_tau(),
            self.counting,
            PurgePolicy::Auto,
        )?;
        self.levels[target - 1] = Some(level);
        Ok(())
    }

    /// Rebuilds the whole index: caps recomputed at the current size, all
    /// alive documents moved to the top level (or back to the front when the
    /// collection is tiny).
    fn global_rebuild(&mut self) -> Result<()> {
        self.stats.global_rebuilds += 1;
        let mut docs: Vec<Document> = self
            .front
            .documents()
            .into_iter()
            .map(|(id, symbols)| Document::new(id, symbols))
            .collect();
        for level in self.levels.iter_mut() {
            if let Some(l) = level.take() {
                docs.extend(l.alive_documents());
            }
        }
        self.front = GeneralizedSuffixTree::new();
        self.caps = layout::amortized_caps(self.alive_symbols, self.epsilon, self.mode);
        self.levels = (1..self.caps.len()).map(|_| None).collect();
        self.at_last_rebuild = self.alive_symbols;
        debug_assert_eq!(docs.iter().map(|d| d.size()).sum::<usize>(), self.alive_symbols);
        if docs.is_empty() {
            self.registry.clear();
            return Ok(());
        }
        if self.alive_symbols < layout::C0_ONLY_BELOW {
            for d in docs {
                self.registry.insert(d.id, Loc::Front);
                self.front.insert(d.id, &d.symbols)?;
            }
            return Ok(());
        }
        let target = self.caps.len() - 1;
        self.build_level(target, docs)
    }

    /// Per-level (total, alive, deleted) sizes, front first.
    pub fn level_sizes(&self) -> Vec<(usize, usize, usize)> {
        let mut out = vec![(self.front.total_symbols(), self.front.total_symbols(), 0)];
        for l in &self.levels {
            out.push(match l {
                Some(l) => (l.total_symbols(), l.alive_symbols(), l.deleted_symbols()),
                None => (0, 0, 0),
            });
        }
        out
    }

    pub fn caps(&self) -> &[usize] {
        &self.caps
    }

    /// Checks the at-rest layout invariants; test support.
    pub fn check_invariants(&self) -> Result<()> {
        let sizes = self.level_sizes();
        if self.at_last_rebuild >= layout::C0_ONLY_BELOW {
            for (i, &(_, alive, _)) in sizes.iter().enumerate() {
                if alive > self.caps[i] {
                    return Err(Error::Internal(format!(
                        "level {i} alive {alive} over cap {}",
                        self.caps[i]
                    )));
                }
            }
        }
        for (&id, &loc) in &self.registry {
            let ok = match loc {
                Loc::Front => self.front.contains(id),
                Loc::Level(i) => {
                    self.levels[i].as_ref().map(|l| l.is_alive(id)).unwrap_or(false)
                }
            };
            if !ok {
                return Err(Error::Internal(format!("registry points {id} at empty holder")));
            }
        }
        let total: usize =
            self.registry.keys().map(|&id| self.doc_size(id).unwrap_or(0)).sum();
        if total != self.alive_symbols {
            return Err(Error::Internal(format!(
                "alive symbols {} != registry total {total}",
                self.alive_symbols
            )));
        }
        Ok(())
    }

    pub fn doc_size(&self, id: u64) -> Option<usize> {
        match self.registry.get(&id)? {
            Loc::Front => self.front.doc_size(id),
            Loc::Level(i) => self.levels[*i].as_ref()?.doc_size(id),
        }
    }

    /// (index_bits, marks_bits, rank_bits, deleted_overhead_bits) summed
    /// over all levels.
    pub fn size_report(&self) -> (usize, usize, usize, usize) {
        let mut acc = (0usize, 0usize, 0usize, 0usize);
        for l in self.levels.iter().flatten() {
            let (a, b, c, d) = l.size_report();
            acc = (acc.0 + a, acc.1 + b, acc.2 + c, acc.3 + d);
        }
        acc
    }

    pub fn all_documents(&self) -> Vec<Document> {
        let mut docs: Vec<Document> = self
            .front
            .documents()
            .into_iter()
            .map(|(id, s)| Document::new(id, s))
            .collect();
        for l in self.levels.iter().flatten() {
            docs.extend(l.alive_documents());
        }
        docs.sort_by_key(|d| d.id);
        docs
    }

    pub fn serialize(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.magic(SNAPSHOT_MAGIC);
        w.u32(1);
        w.u8(match self.mode {
            LevelMode::Constant => 0,
            LevelMode::LogLog => 1,
        });
        w.f64(self.epsilon);
        w.usize(self.tau);
        w.usize(self.sample_rate);
        w.u8(self.counting as u8);
        let docs = self.all_documents();
        w.usize(docs.len());
        for d in docs {
            w.u64(d.id);
            w.u32_slice(&d.symbols);
        }
        w.finish()
    }

    pub fn deserialize(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        r.magic(SNAPSHOT_MAGIC)?;
        let version = r.u32()?;
        if version != 1 {
            return Err(Error::Corrupt(format!("unsupported version {version}")));
        }
        let mode = match r.u8()? {
            0 => LevelMode::Constant,
            1 => LevelMode::LogLog,
            m => return Err(Error::Corrupt(format!("unknown mode {m}"))),
        };
        let epsilon = r.f64()?;
        let tau = r.usize()?;
        let sample_rate = r.usize()?;
        let counting = r.u8()? != 0;
        let mut idx = AmortizedDynamicIndex::new(mode, epsilon, tau, sample_rate, counting);
        let ndocs = r.usize()?;
        for _ in 0..ndocs {
            let id = r.u64()?;
            let symbols = r.u32_vec()?;
            idx.insert(id, &symbols)?;
        }
        Ok(idx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::NaiveCollection;
    use rand::{Rng, SeedableRng};

    fn new_idx(mode: LevelMode) -> AmortizedDynamicIndex {
        AmortizedDynamicIndex::new(mode, 0.5, 0, 0, true)
    }

    #[test]
    fn small_collection_stays_in_front() {
        let mut idx = new_idx(LevelMode::Constant);
        idx.insert(0, &[1, 2, 3]).unwrap();
        idx.insert(1, &[2, 2]).unwrap();
        assert_eq!(idx.level_sizes()[0].0, 7);
        assert_eq!(idx.query(&[2]).unwrap(), BTreeSet::from([(0, 1), (1, 0), (1, 1)]));
        assert_eq!(idx.count(&[2]).unwrap(), 3);
    }

    #[test]
    fn empty_index_answers_empty() {
        let idx = new_idx(LevelMode::Constant);
        assert!(idx.query(&[1]).unwrap().is_empty());
        assert_eq!(idx.count(&[1]).unwrap(), 0);
        assert!(idx.query(&[]).is_err());
    }

    #[test]
    fn duplicate_and_unknown_docs_error() {
        let mut idx = new_idx(LevelMode::Constant);
        idx.insert(0, &[1]).unwrap();
        assert!(matches!(idx.insert(0, &[1]), Err(Error::DuplicateDocument(0))));
        assert!(matches!(idx.delete(5), Err(Error::UnknownDocument(5))));
    }

    fn run_session(mode: LevelMode, seed: u64, steps: usize, sigma: u32) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut idx = new_idx(mode);
        let mut naive = NaiveCollection::new();
        let mut next_id = 0u64;
        for step in 0..steps {
            match rng.gen_range(0..10) {
                0..=4 => {
                    let len = rng.gen_range(1..=300);
                    let content: Vec<u32> = (0..len).map(|_| rng.gen_range(1..=sigma)).collect();
                    idx.insert(next_id, &content).unwrap();
                    naive.insert(next_id, content);
                    next_id += 1;
                }
                5..=6 => {
                    let ids = naive.doc_ids();
                    if !ids.is_empty() {
                        let id = ids[rng.gen_range(0..ids.len())];
                        idx.delete(id).unwrap();
                        naive.delete(id);
                    }
                }
                _ => {
                    let plen = rng.gen_range(1..=5);
                    let pat: Vec<u32> = (0..plen).map(|_| rng.gen_range(1..=sigma)).collect();
                    assert_eq!(idx.query(&pat).unwrap(), naive.occurrences(&pat), "step {step}");
                    assert_eq!(idx.count(&pat).unwrap(), naive.count(&pat), "step {step}");
                }
            }
        }
        idx.check_invariants().unwrap();
        // amortized insertion work
        let l = layout::clamped_log2(idx.stats.max_alive.max(2));
        let factor = match mode {
            LevelMode::Constant => (1.0 / 0.5) * l.powf(0.5),
            LevelMode::LogLog => l.log2(),
        };
        let bound = 8.0 * factor * (idx.stats.inserted_symbols.max(1) as f64);
        assert!(
            (idx.stats.build_symbols as f64) <= bound,
            "build {} > bound {bound}",
            idx.stats.build_symbols
        );
    }

    #[test]
    fn oracle_equivalence_constant_mode() {
        run_session(LevelMode::Constant, 0x100, 700, 4);
        run_session(LevelMode::Constant, 0x101, 500, 26);
    }

    #[test]
    fn oracle_equivalence_loglog_mode() {
        run_session(LevelMode::LogLog, 0x200, 700, 4);
        run_session(LevelMode::LogLog, 0x201, 500, 2);
    }

    #[test]
    fn snapshot_round_trip() {
        let mut idx = new_idx(LevelMode::Constant);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for i in 0..40 {
            let len = rng.gen_range(1..=60);
            let content: Vec<u32> = (0..len).map(|_| rng.gen_range(1..=4u32)).collect();
            idx.insert(i, &content).unwrap();
        }
        idx.delete(3).unwrap();
        let blob = idx.serialize();
        let back = AmortizedDynamicIndex::deserialize(&blob).unwrap();
        assert_eq!(back.alive_symbols(), idx.alive_symbols());
        for pat in [vec![1u32], vec![2, 3], vec![4, 4, 1]] {
            assert_eq!(back.query(&pat).unwrap(), idx.query(&pat).unwrap());
        }
    }
}
