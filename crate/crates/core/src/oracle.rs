//! Brute-force reference models used by tests and by `--verify-oracle` in the
//! CLI. These share no code with the real structures: occurrence queries are
//! window scans, the suffix sort is a comparison sort, relations are plain
//! pair sets.

use std::collections::{BTreeMap, BTreeSet};

/// An alive document collection, keyed by document id.
#[derive(Debug, Default, Clone)]
pub struct NaiveCollection {
    docs: BTreeMap<u64, Vec<u32>>,
}

impl NaiveCollection {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: u64, symbols: Vec<u32>) {
        assert!(self.docs.insert(id, symbols).is_none(), "duplicate doc {id}");
    }

    pub fn delete(&mut self, id: u64) {
        assert!(self.docs.remove(&id).is_some(), "unknown doc {id}");
    }

    pub fn contains(&self, id: u64) -> bool {
        self.docs.contains_key(&id)
    }

    pub fn doc_ids(&self) -> Vec<u64> {
        self.docs.keys().copied().collect()
    }

    pub fn doc(&self, id: u64) -> Option<&[u32]> {
        self.docs.get(&id).map(|d| d.as_slice())
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    /// Total content symbols plus one terminator per document.
    pub fn total_symbols(&self) -> usize {
        self.docs.values().map(|d| d.len() + 1).sum()
    }

    /// All (doc, offset) occurrences of `pattern`, by O(n * |P|) window scan.
    pub fn occurrences(&self, pattern: &[u32]) -> BTreeSet<(u64, usize)> {
        let mut out = BTreeSet::new();
        if pattern.is_empty() {
            return out;
        }
        for (&id, doc) in &self.docs {
            if doc.len() < pattern.len() {
                continue;
            }
            for off in 0..=doc.len() - pattern.len() {
                if &doc[off..off + pattern.len()] == pattern {
                    out.insert((id, off));
                }
            }
        }
        out
    }

    pub fn count(&self, pattern: &[u32]) -> usize {
        self.occurrences(pattern).len()
    }
}

/// Suffix sort over the concatenation of `docs` (in the given order, each
/// document implicitly terminated), returning global start positions.
/// Each suffix stops at its own document's terminator; terminators compare
/// below every symbol and tie-break by document id.
pub fn naive_suffix_sort(docs: &[(u64, Vec<u32>)]) -> Vec<usize> {
    struct Suffix<'a> {
        global: usize,
        doc_id: u64,
        rest: &'a [u32],
    }
    let mut suffixes = Vec::new();
    let mut base = 0usize;
    for (id, content) in docs {
        for off in 0..=content.len() {
            suffixes.push(Suffix { global: base + off, doc_id: *id, rest: &content[off..] });
        }
        base += content.len() + 1;
    }
    suffixes.sort_by(|a, b| {
        let mut i = 0;
        loop {
            match (a.rest.get(i), b.rest.get(i)) {
                (Some(x), Some(y)) if x == y => i += 1,
                (Some(x), Some(y)) => return x.cmp(y),
                (None, Some(_)) => return std::cmp::Ordering::Less,
                (Some(_), None) => return std::cmp::Ordering::Greater,
                (None, None) => return a.doc_id.cmp(&b.doc_id),
            }
        }
    });
    suffixes.into_iter().map(|s| s.global).collect()
}

/// Set-of-pairs model of a binary relation.
#[derive(Debug, Default, Clone)]
pub struct NaiveRelation {
    pairs: BTreeSet<(u32, u32)>,
}

impl NaiveRelation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, object: u32, label: u32) -> bool {
        self.pairs.insert((object, label))
    }

    pub fn remove(&mut self, object: u32, label: u32) -> bool {
        self.pairs.remove(&(object, label))
    }

    pub fn related(&self, object: u32, label: u32) -> bool {
        self.pairs.contains(&(object, label))
    }

    pub fn labels_of(&self, object: u32) -> BTreeSet<u32> {
        self.pairs.iter().filter(|(o, _)| *o == object).map(|&(_, l)| l).collect()
    }

    pub fn objects_of(&self, label: u32) -> BTreeSet<u32> {
        self.pairs.iter().filter(|(_, l)| *l == label).map(|&(o, _)| o).collect()
    }

    pub fn count_labels(&self, object: u32) -> usize {
        self.labels_of(object).len()
    }

    pub fn count_objects(&self, label: u32) -> usize {
        self.objects_of(label).len()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Adjacency-set model of a directed graph.
#[derive(Debug, Default, Clone)]
pub struct NaiveGraph {
    fwd: BTreeMap<u32, BTreeSet<u32>>,
    rev: BTreeMap<u32, BTreeSet<u32>>,
}

impl NaiveGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_edge(&mut self, u: u32, v: u32) -> bool {
        let fresh = self.fwd.entry(u).or_default().insert(v);
        if fresh {
            self.rev.entry(v).or_default().insert(u);
        }
        fresh
    }

    pub fn remove_edge(&mut self, u: u32, v: u32) -> bool {
        let had = self.fwd.get_mut(&u).map(|s| s.remove(&v)).unwrap_or(false);
        if had {
            self.rev.get_mut(&v).unwrap().remove(&u);
        }
        had
    }

    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        self.fwd.get(&u).map(|s| s.contains(&v)).unwrap_or(false)
    }

    pub fn out_neighbors(&self, u: u32) -> BTreeSet<u32> {
        self.fwd.get(&u).cloned().unwrap_or_default()
    }

    pub fn in_neighbors(&self, v: u32) -> BTreeSet<u32> {
        self.rev.get(&v).cloned().unwrap_or_default()
    }

    pub fn out_degree(&self, u: u32) -> usize {
        self.fwd.get(&u).map(|s| s.len()).unwrap_or(0)
    }

    pub fn in_degree(&self, v: u32) -> usize {
        self.rev.get(&v).map(|s| s.len()).unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn occurrences_by_definition() {
        let mut c = NaiveCollection::new();
        c.insert(7, vec![1, 2, 1, 2]); // "abab"
        let occ = c.occurrences(&[1, 2]);
        assert_eq!(occ, BTreeSet::from([(7, 0), (7, 2)]));
        assert!(c.occurrences(&[3]).is_empty());
    }

    #[test]
    fn overlapping_occurrences() {
        let mut c = NaiveCollection::new();
        c.insert(1, vec![1, 1, 1]); // "aaa"
        assert_eq!(c.occurrences(&[1, 1]), BTreeSet::from([(1, 0), (1, 1)]));
    }

    #[test]
    fn suffix_sort_abracadabra() {
        // "abracadabra": a=1 b=2 c=3 d=4 r=18
        let doc = vec![1u32, 2, 18, 1, 3, 1, 4, 1, 2, 18, 1];
        let sa = naive_suffix_sort(&[(0, doc)]);
        assert_eq!(sa, vec![11, 10, 7, 0, 3, 5, 8, 1, 4, 6, 9, 2]);
    }

    #[test]
    fn suffix_sort_single_symbol_doc() {
        let sa = naive_suffix_sort(&[(0, vec![5])]);
        assert_eq!(sa, vec![1, 0]);
    }

    #[test]
    fn twin_docs_tie_break_by_id() {
        let sa = naive_suffix_sort(&[(0, vec![1, 2]), (1, vec![1, 2])]);
        // layout: doc0 at 0..3, doc1 at 3..6; identical suffixes pair up,
        // doc 0 first at every tie
        assert_eq!(sa, vec![2, 5, 0, 3, 1, 4]);
    }

    #[test]
    fn relation_mirrors_set_semantics() {
        let mut r = NaiveRelation::new();
        assert!(r.add(0, 1));
        assert!(r.add(0, 2));
        assert!(!r.add(0, 2));
        assert_eq!(r.labels_of(0), BTreeSet::from([1, 2]));
        assert!(r.remove(0, 1));
        assert!(!r.related(0, 1));
        assert_eq!(r.count_labels(0), 1);
    }

    #[test]
    fn graph_mirrors_adjacency() {
        let mut g = NaiveGraph::new();
        g.add_edge(1, 2);
        g.add_edge(2, 1);
        g.add_edge(1, 1);
        assert!(g.has_edge(1, 1));
        assert_eq!(g.out_neighbors(1), BTreeSet::from([1, 2]));
        assert_eq!(g.in_neighbors(1), BTreeSet::from([1, 2]));
        g.remove_edge(1, 1);
        assert_eq!(g.out_degree(1), 1);
        assert_eq!(g.in_degree(1), 1);
    }
}
