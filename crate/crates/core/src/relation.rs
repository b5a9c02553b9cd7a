//! Dynamic binary relation over (object, label) pairs.
//!
//! Static blocks encode a pair set as the label string `S` (labels listed
//! object by object, in a wavelet tree) plus the unary object-degree bits
//! `N`; deletions clear bits in `D` (positions of `S`) and in the per-label
//! `D_a` vectors, so reporting filters dead pairs without touching `S`.
//! Blocks are composed into the same locked/pending/top hierarchy as the
//! text index, with a global label table (`SN`/`NS`) whose slots are
//! recycled; per-block presence bitmaps stay stale until the block is
//! rebuilt, which is safe because a recycled slot's old pairs are all
//! deleted.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use crate::bits::{CompactReportBitVector, DenseBits, DenseBitsBuilder, RankBitVector};
use crate::error::{Error, Result};
use crate::layout::{self, C0_ONLY_BELOW};
use crate::wavelet::WaveletTree;
use crate::worstcase::harmonic;

const MAX_LEVELS: usize = 34;
const PENDING_BUDGET: f64 = 6.0;

type Pair = (u32, u32); // (object, label slot)

/// Uncompressed front store: per-object label-slot sets and the reverse,
/// both in ordered sets (membership by predecessor search).
#[derive(Debug, Default, Clone)]
struct FrontRelation {
    fwd: BTreeMap<u32, BTreeSet<u32>>,
    rev: BTreeMap<u32, BTreeSet<u32>>,
    pairs: usize,
}

impl FrontRelation {
    fn add(&mut self, object: u32, slot: u32) {
        if self.fwd.entry(object).or_default().insert(slot) {
            self.rev.entry(slot).or_default().insert(object);
            self.pairs += 1;
        }
    }

    fn remove(&mut self, object: u32, slot: u32) -> bool {
        let removed = self
            .fwd
            .get_mut(&object)
            .map(|s| s.remove(&slot))
            .unwrap_or(false);
        if removed {
            if self.fwd[&object].is_empty() {
                self.fwd.remove(&object);
            }
            let set = self.rev.get_mut(&slot).unwrap();
            set.remove(&object);
            if set.is_empty() {
                self.rev.remove(&slot);
            }
            self.pairs -= 1;
        }
        removed
    }

    fn related(&self, object: u32, slot: u32) -> bool {
        self.fwd.get(&object).map(|s| s.contains(&slot)).unwrap_or(false)
    }

    fn slots_of(&self, object: u32) -> impl Iterator<Item = u32> + '_ {
        self.fwd.get(&object).into_iter().flatten().copied()
    }

    fn objects_of(&self, slot: u32) -> impl Iterator<Item = u32> + '_ {
        self.rev.get(&slot).into_iter().flatten().copied()
    }

    fn count_slots(&self, object: u32) -> usize {
        self.fwd.get(&object).map(|s| s.len()).unwrap_or(0)
    }

    fn count_objects(&self, slot: u32) -> usize {
        self.rev.get(&slot).map(|s| s.len()).unwrap_or(0)
    }

    fn all_pairs(&self) -> Vec<Pair> {
        self.fwd
            .iter()
            .flat_map(|(&o, slots)| slots.iter().map(move |&s| (o, s)))
            .collect()
    }
}

/// Immutable relation block with lazy pair deletion.
#[derive(Debug)]
pub struct RelationBlock {
    /// distinct objects present at build, sorted (column remap)
    objs: Vec<u32>,
    /// presence of label slots at build time (global alphabet -> local code)
    presence: DenseBits,
    /// local label codes, object by object
    labels: WaveletTree,
    /// unary degrees: n_i ones then a zero, per object
    degrees: DenseBits,
    /// alive bit per position of `labels`
    alive: CompactReportBitVector,
    alive_rank: RankBitVector,
    /// per local label: alive bit per occurrence, materialized on the first
    /// deletion touching that label (all-ones until then)
    per_label: Vec<Option<Box<(CompactReportBitVector, RankBitVector)>>>,
    deleted: usize,
    len: usize,
    tau: usize,
}

impl RelationBlock {
    /// Builds from pairs (object, label slot). `slot_bound` fixes the global
    /// alphabet width the presence bitmap covers.
    pub fn build(pairs: &[Pair], slot_bound: usize, tau: usize) -> RelationBlock {
        let mut pairs: Vec<Pair> = pairs.to_vec();
        pairs.sort_unstable();
        pairs.dedup();
        let mut objs: Vec<u32> = pairs.iter().map(|&(o, _)| o).collect();
        objs.dedup();
        let mut present = vec![false; slot_bound];
        for &(_, s) in &pairs {
            present[s as usize] = true;
        }
        let presence = DenseBits::from_bits(&present);
        let locals: Vec<u32> =
            pairs.iter().map(|&(_, s)| presence.rank1(s as usize) as u32).collect();
        let sigma_local = presence.ones();
        let labels = WaveletTree::new(&locals, sigma_local.max(1));
        let mut deg = DenseBitsBuilder::with_capacity(pairs.len() + objs.len());
        {
            let mut i = 0usize;
            for &o in &objs {
                while i < pairs.len() && pairs[i].0 == o {
                    deg.push(true);
                    i += 1;
                }
                deg.push(false);
            }
        }
        let tau = tau.clamp(2, u16::MAX as usize);
        let len = pairs.len();
        let per_label = (0..sigma_local).map(|_| None).collect();
        RelationBlock {
            objs,
            presence,
            labels,
            degrees: deg.finish(),
            alive: CompactReportBitVector::all_ones_with_budget(len, tau, len.max(1))
                .expect("valid block width"),
            alive_rank: RankBitVector::all_ones(len),
            per_label,
            deleted: 0,
            len,
            tau,
        }
    }

    fn materialize_label(&mut self, local: u32) -> &mut (CompactReportBitVector, RankBitVector) {
        let occ = self.labels.count(local);
        let slot = &mut self.per_label[local as usize];
        slot.get_or_insert_with(|| {
            Box::new((
                CompactReportBitVector::all_ones_with_budget(occ, self.tau, occ.max(1))
                    .expect("valid block width"),
                RankBitVector::all_ones(occ),
            ))
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn alive_len(&self) -> usize {
        self.len - self.deleted
    }

    pub fn deleted_len(&self) -> usize {
        self.deleted
    }

    fn local_object(&self, object: u32) -> Option<usize> {
        self.objs.binary_search(&object).ok()
    }

    fn local_label(&self, slot: u32) -> Option<u32> {
        if (slot as usize) < self.presence.len() && self.presence.get(slot as usize) {
            Some(self.presence.rank1(slot as usize) as u32)
        } else {
            None
        }
    }

    /// Half-open range of `labels` positions for a local object column.
    fn column(&self, c: usize) -> (usize, usize) {
        let start = if c == 0 {
            0
        } else {
            let z = self.degrees.select0(c - 1).expect("column delimiter");
            z - (c - 1)
        };
        let z = self.degrees.select0(c).expect("column delimiter");
        (start, z - c)
    }

    /// Position of the (unique) pair in `labels`, alive or dead.
    fn position_of(&self, object: u32, slot: u32) -> Option<(usize, u32)> {
        let c = self.local_object(object)?;
        let local = self.local_label(slot)?;
        let (l, r) = self.column(c);
        let before = self.labels.rank(local, l);
        let within = self.labels.rank(local, r) - before;
        if within == 0 {
            return None;
        }
        debug_assert_eq!(within, 1, "pair stored once per block");
        let j = self.labels.select(local, before).expect("occurrence exists");
        debug_assert!(j >= l && j < r);
        Some((j, local))
    }

    pub fn related(&self, object: u32, slot: u32) -> bool {
        match self.position_of(object, slot) {
            Some((j, _)) => self.alive.get(j),
            None => false,
        }
    }

    /// Marks a pair deleted in `D` and its label's `D_a`. Returns false if
    /// the pair is absent or already dead.
    pub fn remove(&mut self, object: u32, slot: u32) -> bool {
        let Some((j, local)) = self.position_of(object, slot) else {
            return false;
        };
        if !self.alive.get(j) {
            return false;
        }
        self.alive.zero(j).expect("in range");
        self.alive_rank.set_zero(j).expect("in range");
        let j_local = self.labels.rank(local, j);
        let (d_a, r_a) = &mut *self.materialize_label(local);
        d_a.zero(j_local).expect("in range");
        r_a.set_zero(j_local).expect("in range");
        self.deleted += 1;
        true
    }

    /// Alive label slots of an object.
    pub fn slots_of(&self, object: u32) -> Vec<u32> {
        let Some(c) = self.local_object(object) else { return Vec::new() };
        let (l, r) = self.column(c);
        if l == r {
            return Vec::new();
        }
        self.alive
            .report(l, r - 1)
            .expect("in range")
            .into_iter()
            .map(|j| {
                let local = self.labels.access(j);
                self.presence.select1(local as usize).expect("present") as u32
            })
            .collect()
    }

    /// Alive objects related to a label slot.
    pub fn objects_of(&self, slot: u32) -> Vec<u32> {
        let Some(local) = self.local_label(slot) else { return Vec::new() };
        let survivors: Vec<usize> = match &self.per_label[local as usize] {
            Some(d) => {
                let d_a = &d.0;
                if d_a.is_empty() {
                    return Vec::new();
                }
                d_a.report(0, d_a.len() - 1).expect("in range")
            }
            None => (0..self.labels.count(local)).collect(),
        };
        survivors
            .into_iter()
            .map(|k| {
                let j = self.labels.select(local, k).expect("occurrence");
                let c = self.degrees.select1(j).expect("unary bit") - j;
                self.objs[c]
            })
            .collect()
    }

    pub fn count_slots(&self, object: u32) -> usize {
        let Some(c) = self.local_object(object) else { return 0 };
        let (l, r) = self.column(c);
        if l == r {
            return 0;
        }
        self.alive_rank.ones_in_range(l, r - 1).expect("in range")
    }

    pub fn count_objects(&self, slot: u32) -> usize {
        match self.local_label(slot) {
            Some(local) => match &self.per_label[local as usize] {
                Some(d) => d.1.ones(),
                None => self.labels.count(local),
            },
            None => 0,
        }
    }

    pub fn alive_pairs(&self) -> Vec<Pair> {
        let mut out = Vec::with_capacity(self.alive_len());
        for (c, &o) in self.objs.iter().enumerate() {
            let (l, r) = self.column(c);
            if l == r {
                continue;
            }
            for j in self.alive.report(l, r - 1).expect("in range") {
                let local = self.labels.access(j);
                let slot = self.presence.select1(local as usize).expect("present") as u32;
                out.push((o, slot));
            }
        }
        out
    }

    /// Total encoded bits, split as (sequence, degree+presence, marks).
    pub fn size_report(&self) -> (usize, usize, usize) {
        let seq = self.labels.size_bits();
        let aux = self.degrees.size_bits() + self.presence.size_bits() + self.objs.len() * 32;
        let mut marks = self.alive.size_report().2 + self.alive_rank.size_bits();
        let count_field = (usize::BITS as usize - self.tau.leading_zeros() as usize).div_ceil(8) * 8;
        for (c, slot) in self.per_label.iter().enumerate() {
            match slot {
                Some(d) => marks += d.0.size_report().2 + d.1.size_bits(),
                // an untouched label encodes as empty zero-count fields only
                None => marks += self.labels.count(c as u32).div_ceil(self.tau) * count_field,
            }
        }
        (seq, aux, marks)
    }

    #[cfg(test)]
    pub fn label_string(&self) -> Vec<u32> {
        (0..self.len)
            .map(|j| self.presence.select1(self.labels.access(j) as usize).unwrap() as u32)
            .collect()
    }

    #[cfg(test)]
    pub fn degree_bits(&self) -> Vec<bool> {
        (0..self.degrees.len()).map(|i| self.degrees.get(i)).collect()
    }
}

#[derive(Debug)]
enum RelHolder {
    Front(FrontRelation),
    Block(RelationBlock),
}

impl RelHolder {
    fn related(&self, object: u32, slot: u32) -> bool {
        match self {
            RelHolder::Front(f) => f.related(object, slot),
            RelHolder::Block(b) => b.related(object, slot),
        }
    }

    fn remove(&mut self, object: u32, slot: u32) -> bool {
        match self {
            RelHolder::Front(f) => f.remove(object, slot),
            RelHolder::Block(b) => b.remove(object, slot),
        }
    }

    fn alive_pairs(&self) -> Vec<Pair> {
        match self {
            RelHolder::Front(f) => f.all_pairs(),
            RelHolder::Block(b) => b.alive_pairs(),
        }
    }
}

#[derive(Debug)]
struct RelPending {
    target: usize,
    pairs: Vec<Pair>,
    tombstones: HashSet<Pair>,
    progress: usize,
    total: usize,
}

#[derive(Debug)]
struct RelTopSlot {
    block: RelationBlock,
    m: usize,
    busy: bool,
}

#[derive(Debug)]
struct RelTopJob {
    victims: Vec<usize>,
    fold_locked_top: bool,
    pairs: Vec<Pair>,
    tombstones: HashSet<Pair>,
    progress: usize,
    total: usize,
}

#[derive(Debug, Clone)]
enum RelRenormPlan {
    MergeTops(Vec<usize>),
    SplitTop(usize),
    DrainGroup(usize),
    DrainFront,
}

#[derive(Debug)]
struct RelRenorm {
    plan: RelRenormPlan,
    pairs: Vec<Pair>,
    tombstones: HashSet<Pair>,
    progress: usize,
    total: usize,
}

#[derive(Debug, Clone, Default)]
pub struct RelationStats {
    pub added_pairs: u64,
    pub removed_pairs: u64,
    pub build_pairs: u64,
    pub front_overflows: u64,
    pub max_pairs: usize,
}

#[derive(Debug)]
pub struct DynamicRelation {
    front: FrontRelation,
    levels: Vec<Option<RelationBlock>>,
    locked: Vec<Option<RelHolder>>,
    pending: Option<RelPending>,
    tops: Vec<Option<RelTopSlot>>,
    locked_top: Option<RelationBlock>,
    top_job: Option<RelTopJob>,
    renorm_queue: VecDeque<RelRenormPlan>,
    renorm: Option<RelRenorm>,
    deleted_since_round: usize,
    delta: usize,
    /// label -> slot in the global alphabet
    slot_of: HashMap<u32, u32>,
    /// slot -> label (None = free)
    label_of: Vec<Option<u32>>,
    free_slots: Vec<u32>,
    slot_live: HashMap<u32, usize>,
    object_live: HashMap<u32, usize>,
    caps: Vec<usize>,
    n: usize,
    n_f: usize,
    tau: usize,
    tau_now: usize,
    epsilon: f64,
    strict: bool,
    pub stats: RelationStats,
}

impl Default for DynamicRelation {
    fn default() -> Self {
        Self::new(0.5, 0)
    }
}

impl DynamicRelation {
    /// `tau = 0` tracks `ceil(log2 log2 n_f)`.
    pub fn new(epsilon: f64, tau: usize) -> Self {
        let mut r = DynamicRelation {
            front: FrontRelation::default(),
            levels: (0..MAX_LEVELS).map(|_| None).collect(),
            locked: (0..MAX_LEVELS).map(|_| None).collect(),
            pending: None,
            tops: Vec::new(),
            locked_top: None,
            top_job: None,
            renorm_queue: VecDeque::new(),
            renorm: None,
            deleted_since_round: 0,
            delta: 1,
            slot_of: HashMap::new(),
            label_of: Vec::new(),
            free_slots: Vec::new(),
            slot_live: HashMap::new(),
            object_live: HashMap::new(),
            caps: Vec::new(),
            n: 0,
            n_f: 0,
            tau,
            tau_now: 2,
            epsilon,
            strict: false,
            stats: RelationStats::default(),
        };
        r.refresh_layout();
        r
    }

    pub fn set_strict(&mut self, strict: bool) {
        self.strict = strict;
    }

    pub fn pair_count(&self) -> usize {
        self.n
    }

    pub fn label_count(&self) -> usize {
        self.slot_of.len()
    }

    pub fn object_count(&self) -> usize {
        self.object_live.len()
    }

    pub fn tau_now(&self) -> usize {
        self.tau_now
    }

    fn refresh_layout(&mut self) {
        self.tau_now = if self.tau != 0 {
            self.tau.max(2)
        } else {
            (layout::clamped_log2(self.n_f).log2().ceil() as usize).max(2)
        };
        self.caps = layout::worstcase_caps(self.n_f.max(1), self.epsilon, self.tau_now);
        let log_tau = (self.tau_now as f64).log2().max(1.0);
        self.delta =
            ((self.n_f as f64 / (2.0 * self.tau_now as f64 * log_tau)) as usize).max(1);
    }

    fn budget(&self) -> usize {
        (PENDING_BUDGET * layout::clamped_log2(self.n_f.max(self.n)).powf(self.epsilon)).ceil()
            as usize
    }

    fn slot_bound(&self) -> usize {
        self.label_of.len()
    }

    fn top_cap(&self) -> usize {
        (2 * self.n_f / self.tau_now.max(1)).max(1)
    }

    fn build_block(&mut self, pairs: &[Pair]) -> RelationBlock {
        self.stats.build_pairs += pairs.len() as u64;
        RelationBlock::build(pairs, self.slot_bound(), self.tau_now)
    }

    // ------------------------------------------------------------------
    // label table

    fn slot_for(&mut self, label: u32) -> u32 {
        if let Some(&s) = self.slot_of.get(&label) {
            return s;
        }
        let slot = match self.free_slots.pop() {
            Some(s) => {
                self.label_of[s as usize] = Some(label);
                s
            }
            None => {
                self.label_of.push(Some(label));
                (self.label_of.len() - 1) as u32
            }
        };
        self.slot_of.insert(label, slot);
        slot
    }

    fn release_if_dead(&mut self, slot: u32) {
        if self.slot_live.get(&slot).copied().unwrap_or(0) == 0 {
            self.slot_live.remove(&slot);
            if let Some(label) = self.label_of[slot as usize].take() {
                self.slot_of.remove(&label);
            }
            self.free_slots.push(slot);
        }
    }

    // ------------------------------------------------------------------
    // updates

    pub fn add(&mut self, object: u32, label: u32) -> Result<()> {
        if self.related(object, label) {
            return Err(Error::PairExists(object, label));
        }
        let slot = self.slot_for(label);
        *self.slot_live.entry(slot).or_insert(0) += 1;
        *self.object_live.entry(object).or_insert(0) += 1;
        self.n += 1;
        self.stats.added_pairs += 1;
        self.stats.max_pairs = self.stats.max_pairs.max(self.n);

        self.advance_background(false);

        if self.n >= C0_ONLY_BELOW && self.n >= 2 * self.n_f.max(1) {
            self.nf_growth();
        }
        if self.n_f < C0_ONLY_BELOW || self.front.pairs < self.caps[0] {
            self.front.add(object, slot);
            if self.strict {
                self.check_invariants()?;
            }
            return Ok(());
        }

        // the front is full: cascade one level if the single pending slot is
        // free, otherwise keep absorbing in the front
        if self.pending.is_none() {
            self.start_cascade();
        } else {
            self.stats.front_overflows += 1;
        }
        self.front.add(object, slot);
        if self.strict {
            self.check_invariants()?;
        }
        Ok(())
    }

    fn start_cascade(&mut self) {
        let r = self.caps.len() - 1;
        let mut sizes = Vec::with_capacity(self.caps.len());
        sizes.push(self.front.pairs);
        for j in 1..self.caps.len() {
            sizes.push(self.levels[j].as_ref().map(|b| b.len()).unwrap_or(0));
        }
        let mut choice = None;
        for j in 0..r {
            if self.locked[j].is_some() {
                continue;
            }
            if sizes[j + 1] + sizes[j] + 1 <= self.caps[j + 1] {
                choice = Some(j);
                break;
            }
        }
        let (source, target) = match choice {
            Some(j) => (j, j + 1),
            None => {
                if self.locked[r].is_some() {
                    return;
                }
                (r, r + 1)
            }
        };
        let holder = if source == 0 {
            RelHolder::Front(std::mem::take(&mut self.front))
        } else {
            match self.levels[source].take() {
                Some(b) => RelHolder::Block(b),
                None => RelHolder::Front(FrontRelation::default()),
            }
        };
        let mut pairs = holder.alive_pairs();
        self.locked[source] = Some(holder);
        if target < self.caps.len() {
            if let Some(b) = self.levels[target].as_ref() {
                pairs.extend(b.alive_pairs());
            }
        }
        let total = pairs.len().max(1);
        self.pending = Some(RelPending {
            target,
            pairs,
            tombstones: HashSet::new(),
            progress: 0,
            total,
        });
    }

    pub fn remove(&mut self, object: u32, label: u32) -> Result<()> {
        let Some(&slot) = self.slot_of.get(&label) else {
            return Err(Error::PairMissing(object, label));
        };
        let mut holder_level: Option<usize> = None;
        let mut holder_top: Option<usize> = None;
        let removed = if self.front.remove(object, slot) {
            true
        } else {
            let mut done = false;
            for j in 1..MAX_LEVELS {
                if let Some(b) = self.levels[j].as_mut() {
                    if b.remove(object, slot) {
                        holder_level = Some(j);
                        done = true;
                        break;
                    }
                }
            }
            if !done {
                for l in self.locked.iter_mut().flatten() {
                    if l.remove(object, slot) {
                        done = true;
                        break;
                    }
                }
            }
            if !done {
                for (i, t) in self.tops.iter_mut().enumerate() {
                    if let Some(t) = t.as_mut() {
                        if t.block.remove(object, slot) {
                            t.m += 1;
                            holder_top = Some(i);
                            done = true;
                            break;
                        }
                    }
                }
            }
            if !done {
                if let Some(lt) = self.locked_top.as_mut() {
                    done = lt.remove(object, slot);
                }
            }
            done
        };
        if !removed {
            return Err(Error::PairMissing(object, label));
        }
        self.note_tombstone((object, slot));
        self.n -= 1;
        self.stats.removed_pairs += 1;
        if let Some(c) = self.slot_live.get_mut(&slot) {
            *c -= 1;
        }
        self.release_if_dead(slot);
        if let Some(c) = self.object_live.get_mut(&object) {
            *c -= 1;
            if *c == 0 {
                self.object_live.remove(&object);
            }
        }

        self.advance_background(true);
        if let Some(j) = holder_level {
            self.level_overflow_check(j);
        }
        if holder_top.is_some() {
            // covered by the round scheduler
        }
        self.deleted_since_round += 1;
        if self.deleted_since_round >= self.delta && self.n_f >= C0_ONLY_BELOW {
            self.end_purge_round();
        }
        if self.n_f >= C0_ONLY_BELOW && self.n <= self.n_f / 2 {
            self.nf_shrink();
        }
        if self.strict {
            self.check_invariants()?;
        }
        Ok(())
    }

    fn note_tombstone(&mut self, pair: Pair) {
        if let Some(p) = self.pending.as_mut() {
            if p.pairs.contains(&pair) {
                p.tombstones.insert(pair);
            }
        }
        if let Some(j) = self.top_job.as_mut() {
            if j.pairs.contains(&pair) {
                j.tombstones.insert(pair);
            }
        }
        if let Some(r) = self.renorm.as_mut() {
            if r.pairs.contains(&pair) {
                r.tombstones.insert(pair);
            }
        }
    }

    fn level_overflow_check(&mut self, j: usize) {
        if j == 0 || j >= self.caps.len() {
            return;
        }
        let Some(b) = self.levels[j].as_ref() else { return };
        if 2 * b.deleted_len() < self.caps[j] {
            return;
        }
        let r = self.caps.len() - 1;
        if j == r {
            if self.locked_top.is_none() {
                self.locked_top = self.levels[j].take();
            }
            return;
        }
        if self.pending.is_none() && self.locked[j].is_none() {
            let block = self.levels[j].take().unwrap();
            let mut pairs = block.alive_pairs();
            self.locked[j] = Some(RelHolder::Block(block));
            if let Some(b) = self.levels[j + 1].as_ref() {
                pairs.extend(b.alive_pairs());
            }
            let total = pairs.len().max(1);
            self.pending = Some(RelPending {
                target: j + 1,
                pairs,
                tombstones: HashSet::new(),
                progress: 0,
                total,
            });
        }
    }

    // ------------------------------------------------------------------
    // background

    fn advance_background(&mut self, is_delete: bool) {
        let budget = self.budget();
        if is_delete {
            if let Some(job) = self.top_job.as_mut() {
                job.progress += (2 * job.total).div_ceil(self.delta.max(1)) + 1;
                if job.progress >= job.total {
                    self.complete_top_job();
                }
            }
        }
        if let Some(p) = self.pending.as_mut() {
            p.progress += budget;
            if p.progress >= p.total {
                self.swap_in();
            }
        }
        if self.renorm.is_none() {
            self.activate_renorm();
        }
        if let Some(r) = self.renorm.as_mut() {
            r.progress += budget;
            if r.progress >= r.total {
                self.complete_renorm();
            }
        }
    }

    fn swap_in(&mut self) {
        let Some(p) = self.pending.take() else { return };
        let pairs: Vec<Pair> =
            p.pairs.into_iter().filter(|pr| !p.tombstones.contains(pr)).collect();
        let source = p.target - 1;
        self.locked[source] = None;
        if p.target < self.caps.len() {
            self.levels[p.target] =
                if pairs.is_empty() { None } else { Some(self.build_block(&pairs)) };
        } else {
            self.emit_tops(pairs, self.top_cap());
        }
    }

    fn emit_tops(&mut self, pairs: Vec<Pair>, chunk_cap: usize) {
        for chunk in pairs.chunks(chunk_cap.max(1)) {
            if chunk.is_empty() {
                continue;
            }
            let block = self.build_block(chunk);
            let slot = RelTopSlot { block, m: 0, busy: false };
            if let Some(free) = self.tops.iter_mut().find(|t| t.is_none()) {
                *free = Some(slot);
            } else {
                self.tops.push(Some(slot));
            }
        }
    }

    fn end_purge_round(&mut self) {
        self.deleted_since_round = self.deleted_since_round.saturating_sub(self.delta);
        if self.top_job.is_some() {
            self.complete_top_job();
        }
        let victim = self
            .tops
            .iter()
            .enumerate()
            .filter_map(|(i, t)| t.as_ref().map(|t| (i, t)))
            .filter(|(_, t)| !t.busy)
            .max_by_key(|(_, t)| t.m)
            .map(|(i, t)| (i, t.m));
        let mut victims = Vec::new();
        let mut pairs = Vec::new();
        if let Some((i, m)) = victim {
            if m > 0 {
                victims.push(i);
                let t = self.tops[i].as_mut().unwrap();
                t.busy = true;
                t.m = 0;
                pairs.extend(self.tops[i].as_ref().unwrap().block.alive_pairs());
            }
        }
        let mut fold = false;
        if let Some(lt) = self.locked_top.as_ref() {
            fold = true;
            pairs.extend(lt.alive_pairs());
        }
        if pairs.is_empty() && !fold {
            return;
        }
        let total = pairs.len().max(1);
        self.top_job = Some(RelTopJob {
            victims,
            fold_locked_top: fold,
            pairs,
            tombstones: HashSet::new(),
            progress: 0,
            total,
        });
    }

    fn complete_top_job(&mut self) {
        let Some(job) = self.top_job.take() else { return };
        let pairs: Vec<Pair> =
            job.pairs.into_iter().filter(|pr| !job.tombstones.contains(pr)).collect();
        for &v in &job.victims {
            self.tops[v] = None;
        }
        if job.fold_locked_top {
            self.locked_top = None;
        }
        self.emit_tops(pairs, self.top_cap());
    }

    fn nf_growth(&mut self) {
        self.n_f = self.n;
        self.refresh_layout();
        let undersized: Vec<usize> = self
            .tops
            .iter()
            .enumerate()
            .filter_map(|(i, t)| t.as_ref().map(|t| (i, t)))
            .filter(|(_, t)| !t.busy && t.block.alive_len() < self.n_f / self.tau_now.max(1))
            .map(|(i, _)| i)
            .collect();
        if undersized.len() > 1 {
            self.renorm_queue.push_back(RelRenormPlan::MergeTops(undersized));
        }
        if self.front.pairs > self.caps[0] {
            self.renorm_queue.push_back(RelRenormPlan::DrainFront);
        }
    }

    fn nf_shrink(&mut self) {
        self.n_f = (2 * self.n).max(1);
        self.refresh_layout();
        if let Some(p) = self.pending.take() {
            self.locked[p.target - 1].take();
            // sources stay live; fold them back below
            if let Some(holder) = &mut self.locked[p.target - 1] {
                let _ = holder;
            }
        }
        // cancelled pending leaves its locked source in place; drain plans
        // pick everything up
        for (i, t) in self.tops.iter().enumerate() {
            if let Some(t) = t {
                if !t.busy && t.block.len() >= self.n_f / self.tau_now.max(1) {
                    self.renorm_queue.push_back(RelRenormPlan::SplitTop(i));
                }
            }
        }
        for j in (0..MAX_LEVELS).rev() {
            if (j > 0 && self.levels[j].is_some()) || self.locked[j].is_some() {
                self.renorm_queue.push_back(RelRenormPlan::DrainGroup(j));
            }
        }
        if self.front.pairs > 0 {
            self.renorm_queue.push_back(RelRenormPlan::DrainFront);
        }
    }

    fn activate_renorm(&mut self) {
        let mut rotations = self.renorm_queue.len();
        while let Some(plan) = self.renorm_queue.pop_front() {
            let pairs: Vec<Pair> = match &plan {
                RelRenormPlan::MergeTops(slots) => {
                    let mut pairs = Vec::new();
                    let mut claimed = Vec::new();
                    for &s in slots {
                        let free = self
                            .tops
                            .get(s)
                            .and_then(|t| t.as_ref())
                            .map(|t| !t.busy)
                            .unwrap_or(false);
                        if free {
                            claimed.push(s);
                            pairs.extend(self.tops[s].as_ref().unwrap().block.alive_pairs());
                        }
                    }
                    if claimed.is_empty() {
                        continue;
                    }
                    for &s in &claimed {
                        self.tops[s].as_mut().unwrap().busy = true;
                    }
                    let total = pairs.len().max(1);
                    self.renorm = Some(RelRenorm {
                        plan: RelRenormPlan::MergeTops(claimed),
                        pairs,
                        tombstones: HashSet::new(),
                        progress: 0,
                        total,
                    });
                    return;
                }
                RelRenormPlan::SplitTop(s) => {
                    let Some(t) = self.tops.get(*s).and_then(|t| t.as_ref()) else { continue };
                    if t.busy {
                        if rotations == 0 {
                            self.renorm_queue.push_front(plan);
                            return;
                        }
                        rotations -= 1;
                        self.renorm_queue.push_back(plan.clone());
                        continue;
                    }
                    self.tops[*s].as_mut().unwrap().busy = true;
                    self.tops[*s].as_ref().unwrap().block.alive_pairs()
                }
                RelRenormPlan::DrainGroup(j) => {
                    let j = *j;
                    let pending_touches = self
                        .pending
                        .as_ref()
                        .map(|p| p.target == j || p.target == j + 1)
                        .unwrap_or(false);
                    if pending_touches {
                        if rotations == 0 {
                            self.renorm_queue.push_front(plan);
                            return;
                        }
                        rotations -= 1;
                        self.renorm_queue.push_back(plan.clone());
                        continue;
                    }
                    let mut pairs = Vec::new();
                    if j > 0 {
                        if let Some(b) = self.levels[j].as_ref() {
                            pairs.extend(b.alive_pairs());
                        }
                    }
                    if let Some(l) = self.locked[j].as_ref() {
                        pairs.extend(l.alive_pairs());
                    }
                    if pairs.is_empty() {
                        if j > 0 {
                            self.levels[j] = None;
                        }
                        self.locked[j] = None;
                        continue;
                    }
                    pairs
                }
                RelRenormPlan::DrainFront => {
                    if self.front.pairs == 0 {
                        continue;
                    }
                    self.front.all_pairs()
                }
            };
            let total = pairs.len().max(1);
            self.renorm =
                Some(RelRenorm { plan, pairs, tombstones: HashSet::new(), progress: 0, total });
            return;
        }
    }

    fn complete_renorm(&mut self) {
        let Some(r) = self.renorm.take() else { return };
        let pairs: Vec<Pair> =
            r.pairs.iter().filter(|pr| !r.tombstones.contains(pr)).copied().collect();
        match &r.plan {
            RelRenormPlan::MergeTops(slots) => {
                for &s in slots {
                    self.tops[s] = None;
                }
                self.emit_tops(pairs, self.top_cap());
            }
            RelRenormPlan::SplitTop(s) => {
                self.tops[*s] = None;
                self.emit_tops(pairs, (self.n_f / self.tau_now.max(1)).max(1));
            }
            RelRenormPlan::DrainGroup(j) => {
                let j = *j;
                if j > 0 {
                    self.levels[j] = None;
                }
                self.locked[j] = None;
                self.emit_tops(pairs, (self.n_f / self.tau_now.max(1)).max(1));
            }
            RelRenormPlan::DrainFront => {
                for &(o, s) in &pairs {
                    self.front.remove(o, s);
                }
                self.emit_tops(pairs, self.top_cap());
            }
        }
    }

    // ------------------------------------------------------------------
    // queries

    fn holders(&self) -> impl Iterator<Item = &RelationBlock> {
        self.levels
            .iter()
            .flatten()
            .chain(self.locked.iter().flatten().filter_map(|h| match h {
                RelHolder::Block(b) => Some(b),
                RelHolder::Front(_) => None,
            }))
            .chain(self.tops.iter().flatten().map(|t| &t.block))
            .chain(self.locked_top.iter())
    }

    fn locked_fronts(&self) -> impl Iterator<Item = &FrontRelation> {
        self.locked.iter().flatten().filter_map(|h| match h {
            RelHolder::Front(f) => Some(f),
            RelHolder::Block(_) => None,
        })
    }

    pub fn related(&self, object: u32, label: u32) -> bool {
        let Some(&slot) = self.slot_of.get(&label) else { return false };
        if self.front.related(object, slot) {
            return true;
        }
        if self.locked_fronts().any(|f| f.related(object, slot)) {
            return true;
        }
        self.holders().any(|b| b.related(object, slot))
    }

    pub fn labels_of(&self, object: u32) -> BTreeSet<u32> {
        let mut slots: BTreeSet<u32> = self.front.slots_of(object).collect();
        for f in self.locked_fronts() {
            slots.extend(f.slots_of(object));
        }
        for b in self.holders() {
            slots.extend(b.slots_of(object));
        }
        slots
            .into_iter()
            .map(|s| self.label_of[s as usize].expect("alive pair has live slot"))
            .collect()
    }

    pub fn objects_of(&self, label: u32) -> BTreeSet<u32> {
        let Some(&slot) = self.slot_of.get(&label) else { return BTreeSet::new() };
        let mut out: BTreeSet<u32> = self.front.objects_of(slot).collect();
        for f in self.locked_fronts() {
            out.extend(f.objects_of(slot));
        }
        for b in self.holders() {
            out.extend(b.objects_of(slot));
        }
        out
    }

    pub fn count_labels(&self, object: u32) -> usize {
        let mut total = self.front.count_slots(object);
        for f in self.locked_fronts() {
            total += f.count_slots(object);
        }
        for b in self.holders() {
            total += b.count_slots(object);
        }
        total
    }

    pub fn count_objects(&self, label: u32) -> usize {
        let Some(&slot) = self.slot_of.get(&label) else { return 0 };
        let mut total = self.front.count_objects(slot);
        for f in self.locked_fronts() {
            total += f.count_objects(slot);
        }
        for b in self.holders() {
            total += b.count_objects(slot);
        }
        total
    }

    /// All alive (object, label) pairs; test and stats support.
    pub fn all_pairs(&self) -> BTreeSet<(u32, u32)> {
        let mut out = BTreeSet::new();
        let mut push = |pairs: Vec<Pair>, label_of: &[Option<u32>]| {
            for (o, s) in pairs {
                out.insert((o, label_of[s as usize].expect("live slot")));
            }
        };
        push(self.front.all_pairs(), &self.label_of);
        for f in self.locked_fronts() {
            push(f.all_pairs(), &self.label_of);
        }
        for b in self.holders() {
            push(b.alive_pairs(), &self.label_of);
        }
        out
    }

    /// Encoded bits across all blocks: (sequence, aux, marks).
    pub fn size_report(&self) -> (usize, usize, usize) {
        let mut acc = (0usize, 0usize, 0usize);
        for b in self.holders() {
            let (s, a, m) = b.size_report();
            acc = (acc.0 + s, acc.1 + a, acc.2 + m);
        }
        acc
    }

    pub fn check_invariants(&self) -> Result<()> {
        let mut seen = HashSet::new();
        let mut count = |pairs: Vec<Pair>, seen: &mut HashSet<Pair>| -> Result<()> {
            for p in pairs {
                if !seen.insert(p) {
                    return Err(Error::Internal(format!("pair {p:?} alive in two holders")));
                }
            }
            Ok(())
        };
        count(self.front.all_pairs(), &mut seen)?;
        for f in self.locked_fronts() {
            count(f.all_pairs(), &mut seen)?;
        }
        for b in self.holders() {
            count(b.alive_pairs(), &mut seen)?;
        }
        if seen.len() != self.n {
            return Err(Error::Internal(format!(
                "alive pairs {} != tracked {}",
                seen.len(),
                self.n
            )));
        }
        // the label table round-trips on live slots
        for (&label, &slot) in &self.slot_of {
            if self.label_of[slot as usize] != Some(label) {
                return Err(Error::Internal(format!("slot table broken for label {label}")));
            }
        }
        // round-robin purge bound
        if self.n_f >= C0_ONLY_BELOW {
            let bound = (1.0 + harmonic(2 * self.tau_now)) * self.delta as f64;
            for t in self.tops.iter().flatten() {
                if t.m as f64 > bound {
                    return Err(Error::Internal(format!(
                        "top purge debt {} over {bound:.1}",
                        t.m
                    )));
                }
            }
        }
        Ok(())
    }

    /// Completes all in-flight background work; test and stats support.
    pub fn quiesce(&mut self) {
        for _ in 0..10_000 {
            let mut any = false;
            if self.top_job.is_some() {
                self.complete_top_job();
                any = true;
            }
            if self.pending.is_some() {
                self.swap_in();
                any = true;
            }
            if self.renorm.is_some() {
                self.complete_renorm();
                any = true;
            } else if !self.renorm_queue.is_empty() {
                self.activate_renorm();
                if self.renorm.is_some() {
                    continue;
                }
            }
            if !any && self.renorm.is_none() && self.renorm_queue.is_empty() {
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::NaiveRelation;
    use rand::{Rng, SeedableRng};

    #[test]
    fn block_encoding_matches_columnwise_traversal() {
        // pairs (0,1),(0,2),(1,2): S = [1,2,2], N = 11010
        let block = RelationBlock::build(&[(0, 1), (0, 2), (1, 2)], 3, 2);
        assert_eq!(block.label_string(), vec![1, 2, 2]);
        assert_eq!(
            block.degree_bits(),
            vec![true, true, false, true, false],
        );
        assert_eq!(block.slots_of(0), vec![1, 2]);
        assert_eq!(block.slots_of(1), vec![2]);
        assert_eq!(block.objects_of(2), vec![0, 1]);
        assert!(block.related(1, 2));
        assert!(!block.related(1, 1));
    }

    #[test]
    fn block_remove_clears_both_mark_vectors() {
        let mut block = RelationBlock::build(&[(0, 1), (0, 2), (1, 2)], 3, 2);
        assert!(block.remove(0, 2));
        assert!(!block.remove(0, 2));
        assert_eq!(block.slots_of(0), vec![1]);
        assert_eq!(block.objects_of(2), vec![1]);
        assert_eq!(block.count_slots(0), 1);
        assert_eq!(block.count_objects(2), 1);
        assert_eq!(block.alive_pairs(), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn rebuilding_from_alive_pairs_reproduces_encoding() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let mut pairs = BTreeSet::new();
            for _ in 0..rng.gen_range(1..60) {
                pairs.insert((rng.gen_range(0..20u32), rng.gen_range(0..15u32)));
            }
            let pairs: Vec<Pair> = pairs.into_iter().collect();
            let mut block = RelationBlock::build(&pairs, 15, 4);
            let mut alive: BTreeSet<Pair> = pairs.iter().copied().collect();
            for _ in 0..pairs.len() / 2 {
                let &victim = alive.iter().nth(rng.gen_range(0..alive.len())).unwrap();
                alive.remove(&victim);
                assert!(block.remove(victim.0, victim.1));
            }
            let rebuilt = RelationBlock::build(&block.alive_pairs(), 15, 4);
            let direct = RelationBlock::build(&alive.iter().copied().collect::<Vec<_>>(), 15, 4);
            assert_eq!(rebuilt.label_string(), direct.label_string());
            assert_eq!(rebuilt.degree_bits(), direct.degree_bits());
        }
    }

    #[test]
    fn relation_basic_ops() {
        let mut r = DynamicRelation::new(0.5, 0);
        r.add(0, 1).unwrap();
        r.add(0, 2).unwrap();
        r.add(1, 2).unwrap();
        assert!(matches!(r.add(0, 1), Err(Error::PairExists(0, 1))));
        assert_eq!(r.labels_of(0), BTreeSet::from([1, 2]));
        assert_eq!(r.objects_of(2), BTreeSet::from([0, 1]));
        assert!(r.related(1, 2));
        assert!(!r.related(1, 1));
        assert_eq!(r.count_labels(0), 2);
        assert_eq!(r.count_objects(2), 2);
        r.remove(0, 2).unwrap();
        assert!(matches!(r.remove(0, 2), Err(Error::PairMissing(0, 2))));
        assert_eq!(r.labels_of(0), BTreeSet::from([1]));
    }

    #[test]
    fn add_remove_round_trip_leaves_nothing() {
        let mut r = DynamicRelation::new(0.5, 0);
        r.add(3, 4).unwrap();
        r.remove(3, 4).unwrap();
        assert!(r.labels_of(3).is_empty());
        assert!(r.objects_of(4).is_empty());
        assert_eq!(r.pair_count(), 0);
        assert_eq!(r.label_count(), 0);
    }

    #[test]
    fn recycled_label_slot_reports_nothing_stale() {
        let mut r = DynamicRelation::new(0.5, 0);
        // push enough pairs to materialize blocks
        let mut next_obj = 0u32;
        for _ in 0..300 {
            r.add(next_obj, 7).unwrap();
            next_obj += 1;
        }
        // delete every pair of label 7 (slot becomes free, blocks keep their
        // stale presence bitmaps)
        for o in 0..next_obj {
            r.remove(o, 7).unwrap();
        }
        assert_eq!(r.label_count(), 0);
        // a brand-new label recycles the slot
        r.add(1000, 9).unwrap();
        assert_eq!(r.objects_of(9), BTreeSet::from([1000]));
        assert!(r.objects_of(7).is_empty());
        assert_eq!(r.count_objects(7), 0);
        r.check_invariants().unwrap();
    }

    #[test]
    fn random_ops_match_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xabc);
        let mut rel = DynamicRelation::new(0.5, 0);
        rel.set_strict(true);
        let mut naive = NaiveRelation::new();
        for step in 0..3000 {
            let o = rng.gen_range(0..40u32);
            let l = rng.gen_range(0..30u32);
            match rng.gen_range(0..10) {
                0..=4 => {
                    if !naive.related(o, l) {
                        naive.add(o, l);
                        rel.add(o, l).unwrap();
                    }
                }
                5..=6 => {
                    if naive.related(o, l) {
                        naive.remove(o, l);
                        rel.remove(o, l).unwrap();
                    }
                }
                7 => {
                    assert_eq!(rel.labels_of(o), naive.labels_of(o), "step {step}");
                    assert_eq!(rel.count_labels(o), naive.count_labels(o));
                }
                8 => {
                    assert_eq!(rel.objects_of(l), naive.objects_of(l), "step {step}");
                    assert_eq!(rel.count_objects(l), naive.count_objects(l));
                }
                _ => {
                    assert_eq!(rel.related(o, l), naive.related(o, l), "step {step}");
                }
            }
        }
        rel.quiesce();
        rel.check_invariants().unwrap();
    }

    #[test]
    fn space_accounting_within_bound() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let mut rel = DynamicRelation::new(0.5, 0);
        let mut added = BTreeSet::new();
        for _ in 0..4000 {
            let o = rng.gen_range(0..300u32);
            let l = rng.gen_range(0..200u32);
            if added.insert((o, l)) {
                rel.add(o, l).unwrap();
            }
        }
        rel.quiesce();
        let (seq, aux, marks) = rel.size_report();
        let total = (seq + aux + marks) as f64;
        let n = rel.pair_count() as f64;
        let t = rel.object_count() as f64;
        let sigma_l = rel.label_count() as f64;
        let tau = rel.tau_now() as f64;
        // zero-order entropy of the label string
        let mut counts: HashMap<u32, usize> = HashMap::new();
        for (_, l) in &added {
            *counts.entry(*l).or_insert(0) += 1;
        }
        let h0: f64 = counts
            .values()
            .map(|&k| {
                let p = k as f64 / n;
                -p * p.log2()
            })
            .sum();
        let bound = 8.0 * (n * h0 + n + t + sigma_l * n.log2() + n * tau.log2());
        assert!(total <= bound, "total {total} > bound {bound}");
    }
}
