//! Generalized suffix tree over a mutable document collection: whole-document
//! insertion in amortized linear time via suffix links (McCreight's scheme),
//! symmetric deletion by walking the per-document leaf chain, and pattern
//! search by locus descent.
//!
//! Terminators are kept distinct per document internally (encoded symbols
//! carry the document slot), so every suffix owns exactly one leaf. Edge
//! labels reference the stored document text; when a referenced document
//! dies, surviving labels are copied out (copy-on-delete), and contractions
//! merge labels from a surviving source or copy.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::error::{Error, Result};

type NodeId = u32;
const ROOT: NodeId = 0;
const NONE: NodeId = u32::MAX;
/// Encoded symbols: regular symbols are their value; terminators carry the
/// document slot above bit 32.
const TERM_BIT: u64 = 1 << 32;

#[derive(Debug, Clone)]
enum Label {
    /// Slice of a stored document's encoded symbols.
    Doc { slot: u32, start: u32, len: u32 },
    /// Copied-out symbols (source document died or labels were merged).
    Owned(Box<[u64]>),
}

impl Label {
    fn len(&self) -> usize {
        match self {
            Label::Doc { len, .. } => *len as usize,
            Label::Owned(b) => b.len(),
        }
    }
}

#[derive(Debug)]
enum NodeKind {
    Internal { children: HashMap<u64, NodeId> },
    Leaf { slot: u32, offset: u32 },
}

#[derive(Debug)]
struct Node {
    parent: NodeId,
    label: Label,
    /// string depth: |path(v)|
    depth: u32,
    /// internal nodes: suffix link; leaves: next leaf of the same document
    slink: NodeId,
    kind: NodeKind,
}

#[derive(Debug)]
struct DocEntry {
    id: u64,
    symbols: Vec<u32>,
    first_leaf: NodeId,
    /// nodes whose incoming edge label references this document
    edges: HashSet<NodeId>,
}

#[derive(Debug, Default)]
pub struct OpCounters {
    /// node visits, label symbol comparisons and node creations
    pub ops: u64,
}

#[derive(Debug)]
pub struct GeneralizedSuffixTree {
    nodes: Vec<Node>,
    free_nodes: Vec<NodeId>,
    docs: Vec<Option<DocEntry>>,
    free_slots: Vec<u32>,
    by_id: HashMap<u64, u32>,
    total_symbols: usize,
    leaf_count: usize,
    pub counters: OpCounters,
}

enum RescanEnd {
    Node(NodeId),
    /// split the incoming edge of `.0` after `.1` label symbols
    Edge(NodeId, usize),
}

impl Default for GeneralizedSuffixTree {
    fn default() -> Self {
        Self::new()
    }
}

impl GeneralizedSuffixTree {
    pub fn new() -> Self {
        let root = Node {
            parent: NONE,
            label: Label::Owned(Box::new([])),
            depth: 0,
            slink: ROOT,
            kind: NodeKind::Internal { children: HashMap::new() },
        };
        GeneralizedSuffixTree {
            nodes: vec![root],
            free_nodes: Vec::new(),
            docs: Vec::new(),
            free_slots: Vec::new(),
            by_id: HashMap::new(),
            total_symbols: 0,
            leaf_count: 0,
            counters: OpCounters::default(),
        }
    }

    pub fn total_symbols(&self) -> usize {
        self.total_symbols
    }

    pub fn doc_count(&self) -> usize {
        self.by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_id.is_empty()
    }

    pub fn contains(&self, id: u64) -> bool {
        self.by_id.contains_key(&id)
    }

    /// Stored size of a document (content + terminator).
    pub fn doc_size(&self, id: u64) -> Option<usize> {
        self.by_id.get(&id).map(|&s| self.doc(s).symbols.len() + 1)
    }

    pub fn doc_ids(&self) -> Vec<u64> {
        let mut ids: Vec<u64> = self.by_id.keys().copied().collect();
        ids.sort_unstable();
        ids
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_count
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len() - self.free_nodes.len()
    }

    /// Documents in id order (content without terminator).
    pub fn documents(&self) -> Vec<(u64, Vec<u32>)> {
        let mut out: Vec<(u64, Vec<u32>)> = self
            .docs
            .iter()
            .flatten()
            .map(|d| (d.id, d.symbols.clone()))
            .collect();
        out.sort_by_key(|(id, _)| *id);
        out
    }

    fn doc(&self, slot: u32) -> &DocEntry {
        self.docs[slot as usize].as_ref().expect("live slot")
    }

    fn doc_mut(&mut self, slot: u32) -> &mut DocEntry {
        self.docs[slot as usize].as_mut().expect("live slot")
    }

    /// Encoded symbol of document `slot` at position `k` (terminator at the
    /// end of the content).
    fn esym(&self, slot: u32, k: usize) -> u64 {
        let d = self.doc(slot);
        if k < d.symbols.len() {
            d.symbols[k] as u64
        } else {
            debug_assert_eq!(k, d.symbols.len());
            TERM_BIT | slot as u64
        }
    }

    fn label_sym(&self, node: NodeId, k: usize) -> u64 {
        match &self.nodes[node as usize].label {
            Label::Doc { slot, start, .. } => self.esym(*slot, *start as usize + k),
            Label::Owned(b) => b[k],
        }
    }

    fn children(&self, node: NodeId) -> &HashMap<u64, NodeId> {
        match &self.nodes[node as usize].kind {
            NodeKind::Internal { children } => children,
            NodeKind::Leaf { .. } => panic!("leaf has no children"),
        }
    }

    fn children_mut(&mut self, node: NodeId) -> &mut HashMap<u64, NodeId> {
        match &mut self.nodes[node as usize].kind {
            NodeKind::Internal { children } => children,
            NodeKind::Leaf { .. } => panic!("leaf has no children"),
        }
    }

    fn alloc(&mut self, node: Node) -> NodeId {
        self.counters.ops += 1;
        if let Some(id) = self.free_nodes.pop() {
            self.nodes[id as usize] = node;
            id
        } else {
            self.nodes.push(node);
            (self.nodes.len() - 1) as NodeId
        }
    }

    fn free(&mut self, id: NodeId) {
        self.deregister(id);
        self.nodes[id as usize].kind = NodeKind::Internal { children: HashMap::new() };
        self.nodes[id as usize].label = Label::Owned(Box::new([]));
        self.free_nodes.push(id);
    }

    fn register(&mut self, id: NodeId) {
        if let Label::Doc { slot, .. } = self.nodes[id as usize].label {
            self.doc_mut(slot).edges.insert(id);
        }
    }

    fn deregister(&mut self, id: NodeId) {
        if let Label::Doc { slot, .. } = self.nodes[id as usize].label {
            if let Some(d) = self.docs[slot as usize].as_mut() {
                d.edges.remove(&id);
            }
        }
    }

    /// Inserts a document (content without terminator). All suffixes enter
    /// the tree; the per-document leaf chain drives later deletion.
    pub fn insert(&mut self, id: u64, content: &[u32]) -> Result<()> {
        if content.is_empty() {
            return Err(Error::EmptyDocument);
        }
        if self.by_id.contains_key(&id) {
            return Err(Error::DuplicateDocument(id));
        }
        let slot = match self.free_slots.pop() {
            Some(s) => {
                self.docs[s as usize] = Some(DocEntry {
                    id,
                    symbols: content.to_vec(),
                    first_leaf: NONE,
                    edges: HashSet::new(),
                });
                s
            }
            None => {
                self.docs.push(Some(DocEntry {
                    id,
                    symbols: content.to_vec(),
                    first_leaf: NONE,
                    edges: HashSet::new(),
                }));
                (self.docs.len() - 1) as u32
            }
        };
        self.by_id.insert(id, slot);
        let m = content.len() + 1;
        self.total_symbols += m;

        let mut head_prev = ROOT;
        let mut head_prev_new = false;
        let mut prev_leaf = NONE;
        for i in 0..m {
            let (head, created) = if head_prev == ROOT {
                self.scan_from(ROOT, slot, i, m)
            } else if !head_prev_new {
                let v = self.nodes[head_prev as usize].slink;
                debug_assert_ne!(v, NONE);
                self.scan_from(v, slot, i, m)
            } else {
                // freshly created head: locate its suffix-link target by
                // rescanning the incoming edge label from the parent's link
                let parent = self.nodes[head_prev as usize].parent;
                let (start, skip) = if parent == ROOT {
                    (ROOT, 1)
                } else {
                    (self.nodes[parent as usize].slink, 0)
                };
                match self.rescan(start, head_prev, skip) {
                    RescanEnd::Node(w) => {
                        self.nodes[head_prev as usize].slink = w;
                        self.scan_from(w, slot, i, m)
                    }
                    RescanEnd::Edge(child, at) => {
                        let w = self.split_edge(child, at);
                        self.nodes[head_prev as usize].slink = w;
                        (w, true)
                    }
                }
            };
            let leaf = self.add_leaf(head, slot, i, m);
            if prev_leaf != NONE {
                self.nodes[prev_leaf as usize].slink = leaf;
            } else {
                self.doc_mut(slot).first_leaf = leaf;
            }
            prev_leaf = leaf;
            head_prev = head;
            head_prev_new = created;
        }
        Ok(())
    }

    /// Slow scan of suffix `i` from `from`, splitting on mismatch. Returns
    /// the node the new leaf attaches to and whether it was created here.
    fn scan_from(&mut self, from: NodeId, slot: u32, i: usize, m: usize) -> (NodeId, bool) {
        let mut cur = from;
        loop {
            self.counters.ops += 1;
            let depth = self.nodes[cur as usize].depth as usize;
            debug_assert!(i + depth < m);
            let c = self.esym(slot, i + depth);
            let Some(&child) = self.children(cur).get(&c) else {
                return (cur, false);
            };
            let el = self.nodes[child as usize].label.len();
            let mut k = 1usize;
            while k < el {
                self.counters.ops += 1;
                debug_assert!(i + depth + k < m, "suffix exhausted mid-edge");
                if self.label_sym(child, k) != self.esym(slot, i + depth + k) {
                    let w = self.split_edge(child, k);
                    return (w, true);
                }
                k += 1;
            }
            cur = child;
            debug_assert!(
                matches!(self.nodes[cur as usize].kind, NodeKind::Internal { .. }),
                "descended into a leaf"
            );
        }
    }

    /// Skip-count walk of the incoming edge label of `beta_node` (from symbol
    /// `skip`) starting at `start`; the path is guaranteed to exist.
    fn rescan(&self, start: NodeId, beta_node: NodeId, skip: usize) -> RescanEnd {
        let total = self.nodes[beta_node as usize].label.len();
        let mut cur = start;
        let mut k = skip;
        while k < total {
            let c = self.label_sym(beta_node, k);
            let child = *self
                .children(cur)
                .get(&c)
                .expect("rescan path must exist");
            let el = self.nodes[child as usize].label.len();
            if total - k >= el {
                cur = child;
                k += el;
            } else {
                return RescanEnd::Edge(child, total - k);
            }
        }
        RescanEnd::Node(cur)
    }

    /// Splits the incoming edge of `child` after `k` label symbols,
    /// returning the new intermediate node.
    fn split_edge(&mut self, child: NodeId, k: usize) -> NodeId {
        debug_assert!(k >= 1 && k < self.nodes[child as usize].label.len());
        let parent = self.nodes[child as usize].parent;
        let first = self.label_sym(child, 0);
        let mid_key = self.label_sym(child, k);
        let (upper, lower) = match &self.nodes[child as usize].label {
            Label::Doc { slot, start, len } => (
                Label::Doc { slot: *slot, start: *start, len: k as u32 },
                Label::Doc { slot: *slot, start: *start + k as u32, len: *len - k as u32 },
            ),
            Label::Owned(b) => (
                Label::Owned(b[..k].to_vec().into_boxed_slice()),
                Label::Owned(b[k..].to_vec().into_boxed_slice()),
            ),
        };
        let depth = self.nodes[parent as usize].depth + k as u32;
        let mid = self.alloc(Node {
            parent,
            label: upper,
            depth,
            slink: NONE,
            kind: NodeKind::Internal { children: HashMap::from([(mid_key, child)]) },
        });
        self.register(mid);
        self.deregister(child);
        self.nodes[child as usize].label = lower;
        self.nodes[child as usize].parent = mid;
        self.register(child);
        self.children_mut(parent).insert(first, mid);
        mid
    }

    fn add_leaf(&mut self, at: NodeId, slot: u32, i: usize, m: usize) -> NodeId {
        let depth = self.nodes[at as usize].depth as usize;
        let start = i + depth;
        debug_assert!(start < m);
        let leaf = self.alloc(Node {
            parent: at,
            label: Label::Doc { slot, start: start as u32, len: (m - start) as u32 },
            depth: (m - i) as u32,
            slink: NONE,
            kind: NodeKind::Leaf { slot, offset: i as u32 },
        });
        self.register(leaf);
        let key = self.esym(slot, start);
        let old = self.children_mut(at).insert(key, leaf);
        debug_assert!(old.is_none(), "leaf slot already occupied");
        self.leaf_count += 1;
        leaf
    }

    /// Removes a document: every leaf on its chain is detached and unary
    /// nodes are contracted; labels still referencing the document are
    /// copied out before the text is dropped.
    pub fn delete(&mut self, id: u64) -> Result<()> {
        let &slot = self.by_id.get(&id).ok_or(Error::UnknownDocument(id))?;
        let m = self.doc(slot).symbols.len() + 1;
        let mut leaf = self.doc(slot).first_leaf;
        for _ in 0..m {
            debug_assert_ne!(leaf, NONE);
            let next = self.nodes[leaf as usize].slink;
            self.remove_leaf(leaf);
            leaf = next;
        }
        // copy-on-delete for edges still referencing this document
        let edges: Vec<NodeId> = self.doc(slot).edges.iter().copied().collect();
        for e in edges {
            let Label::Doc { slot: s, start, len } = self.nodes[e as usize].label else {
                continue;
            };
            debug_assert_eq!(s, slot);
            let copied: Vec<u64> =
                (0..len as usize).map(|k| self.esym(slot, start as usize + k)).collect();
            self.counters.ops += len as u64;
            self.nodes[e as usize].label = Label::Owned(copied.into_boxed_slice());
        }
        self.by_id.remove(&id);
        self.docs[slot as usize] = None;
        self.free_slots.push(slot);
        self.total_symbols -= m;
        Ok(())
    }

    fn remove_leaf(&mut self, leaf: NodeId) {
        self.counters.ops += 1;
        let parent = self.nodes[leaf as usize].parent;
        let key = self.label_sym(leaf, 0);
        self.children_mut(parent).remove(&key);
        self.free(leaf);
        self.leaf_count -= 1;
        if parent != ROOT && self.children(parent).len() == 1 {
            self.contract(parent);
        }
    }

    /// Merges a unary internal node into its only child. No suffix link can
    /// point at a unary node (its link source would need as many children),
    /// so dropping it is safe.
    fn contract(&mut self, node: NodeId) {
        self.counters.ops += 1;
        let (_, &child) = self.children(node).iter().next().expect("unary node");
        let parent = self.nodes[node as usize].parent;
        let key = self.label_sym(node, 0);
        let merged = match (&self.nodes[node as usize].label, &self.nodes[child as usize].label) {
            (
                Label::Doc { slot: s1, start: a1, len: l1 },
                Label::Doc { slot: s2, start: a2, len: l2 },
            ) if s1 == s2 && a1 + l1 == *a2 => {
                Label::Doc { slot: *s1, start: *a1, len: l1 + l2 }
            }
            (upper, lower) => {
                let mut syms = Vec::with_capacity(upper.len() + lower.len());
                for k in 0..upper.len() {
                    syms.push(self.label_sym(node, k));
                }
                for k in 0..lower.len() {
                    syms.push(self.label_sym(child, k));
                }
                self.counters.ops += syms.len() as u64;
                Label::Owned(syms.into_boxed_slice())
            }
        };
        self.deregister(child);
        self.nodes[child as usize].label = merged;
        self.nodes[child as usize].parent = parent;
        self.register(child);
        self.children_mut(parent).insert(key, child);
        self.free(node);
    }

    /// Exact occurrence set of `pattern` across alive documents.
    pub fn query(&self, pattern: &[u32]) -> Result<BTreeSet<(u64, usize)>> {
        if pattern.is_empty() {
            return Err(Error::EmptyPattern);
        }
        let mut out = BTreeSet::new();
        let Some(locus) = self.locus(pattern) else {
            return Ok(out);
        };
        self.collect_leaves(locus, &mut out);
        Ok(out)
    }

    pub fn count(&self, pattern: &[u32]) -> Result<usize> {
        Ok(self.query(pattern)?.len())
    }

    fn locus(&self, pattern: &[u32]) -> Option<NodeId> {
        let mut cur = ROOT;
        let mut matched = 0usize;
        while matched < pattern.len() {
            if matches!(self.nodes[cur as usize].kind, NodeKind::Leaf { .. }) {
                return None;
            }
            let &child = self.children(cur).get(&(pattern[matched] as u64))?;
            let el = self.nodes[child as usize].label.len();
            let take = el.min(pattern.len() - matched);
            for k in 1..take {
                if self.label_sym(child, k) != pattern[matched + k] as u64 {
                    return None;
                }
            }
            matched += take;
            cur = child;
        }
        Some(cur)
    }

    fn collect_leaves(&self, node: NodeId, out: &mut BTreeSet<(u64, usize)>) {
        match &self.nodes[node as usize].kind {
            NodeKind::Leaf { slot, offset } => {
                out.insert((self.doc(*slot).id, *offset as usize));
            }
            NodeKind::Internal { children } => {
                for &c in children.values() {
                    self.collect_leaves(c, out);
                }
            }
        }
    }

    /// Validates the suffix-link closure: for every internal non-root node
    /// labeled aX there is a link to the node labeled X. Test support.
    pub fn validate_suffix_links(&self) -> Result<()> {
        let live: Vec<NodeId> = self.live_nodes();
        for &v in &live {
            if v == ROOT || !matches!(self.nodes[v as usize].kind, NodeKind::Internal { .. }) {
                continue;
            }
            let link = self.nodes[v as usize].slink;
            if link == NONE {
                return Err(Error::Internal(format!("node {v} has no suffix link")));
            }
            let path = self.path_of(v);
            let target = self.descend_exact(&path[1..]).ok_or_else(|| {
                Error::Internal(format!("suffix-link path of node {v} not in tree"))
            })?;
            if target != link {
                return Err(Error::Internal(format!(
                    "suffix link of {v} points to {link}, expected {target}"
                )));
            }
        }
        Ok(())
    }

    fn live_nodes(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![ROOT];
        while let Some(n) = stack.pop() {
            out.push(n);
            if let NodeKind::Internal { children } = &self.nodes[n as usize].kind {
                stack.extend(children.values().copied());
            }
        }
        out
    }

    fn path_of(&self, mut v: NodeId) -> Vec<u64> {
        let mut parts = Vec::new();
        while v != ROOT {
            let l = self.nodes[v as usize].label.len();
            let mut seg = Vec::with_capacity(l);
            for k in 0..l {
                seg.push(self.label_sym(v, k));
            }
            parts.push(seg);
            v = self.nodes[v as usize].parent;
        }
        parts.reverse();
        parts.concat()
    }

    fn descend_exact(&self, path: &[u64]) -> Option<NodeId> {
        let mut cur = ROOT;
        let mut matched = 0usize;
        while matched < path.len() {
            let &child = self.children(cur).get(&path[matched])?;
            let el = self.nodes[child as usize].label.len();
            if matched + el > path.len() {
                return None; // lands mid-edge
            }
            for k in 1..el {
                if self.label_sym(child, k) != path[matched + k] {
                    return None;
                }
            }
            matched += el;
            cur = child;
        }
        Some(cur)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::NaiveCollection;
    use rand::{Rng, SeedableRng};

    #[test]
    fn insert_and_query_abab() {
        let mut t = GeneralizedSuffixTree::new();
        t.insert(4, &[1, 2, 1, 2]).unwrap();
        assert_eq!(t.query(&[1, 2]).unwrap(), BTreeSet::from([(4, 0), (4, 2)]));
        assert_eq!(t.leaf_count(), 5);
    }

    #[test]
    fn duplicate_text_under_two_ids_doubles_counts() {
        let mut t = GeneralizedSuffixTree::new();
        t.insert(0, &[1, 2, 1]).unwrap();
        t.insert(1, &[1, 2, 1]).unwrap();
        let occ = t.query(&[1, 2]).unwrap();
        assert_eq!(occ, BTreeSet::from([(0, 0), (1, 0)]));
        assert_eq!(t.query(&[1]).unwrap().len(), 4);
    }

    #[test]
    fn single_symbol_document() {
        let mut t = GeneralizedSuffixTree::new();
        t.insert(0, &[3]).unwrap();
        // two suffixes: "a$" and "$"
        assert_eq!(t.leaf_count(), 2);
        assert_eq!(t.query(&[3]).unwrap(), BTreeSet::from([(0, 0)]));
    }

    #[test]
    fn delete_round_trip_restores_structure() {
        let mut t = GeneralizedSuffixTree::new();
        let empty_nodes = t.node_count();
        t.insert(0, &[1, 2, 1, 1, 2]).unwrap();
        t.delete(0).unwrap();
        assert_eq!(t.node_count(), empty_nodes);
        assert_eq!(t.leaf_count(), 0);
        assert!(t.is_empty());
        assert!(t.query(&[1]).unwrap().is_empty());
    }

    #[test]
    fn delete_one_of_two_matches_single_doc_oracle() {
        let mut t = GeneralizedSuffixTree::new();
        t.insert(0, &[1, 2, 2, 1]).unwrap();
        t.insert(1, &[2, 1, 2]).unwrap();
        t.delete(0).unwrap();
        let mut naive = NaiveCollection::new();
        naive.insert(1, vec![2, 1, 2]);
        for pat in [vec![2u32], vec![1], vec![2, 1], vec![1, 2], vec![2, 1, 2]] {
            assert_eq!(t.query(&pat).unwrap(), naive.occurrences(&pat));
        }
        t.validate_suffix_links().unwrap();
    }

    #[test]
    fn delete_restores_node_count_with_other_docs_present() {
        let mut t = GeneralizedSuffixTree::new();
        t.insert(0, &[1, 2, 1, 2, 3]).unwrap();
        let before = t.node_count();
        t.insert(1, &[2, 3, 1, 1]).unwrap();
        t.delete(1).unwrap();
        assert_eq!(t.node_count(), before);
    }

    #[test]
    fn query_full_document() {
        let mut t = GeneralizedSuffixTree::new();
        t.insert(9, &[5, 6, 7]).unwrap();
        assert_eq!(t.query(&[5, 6, 7]).unwrap(), BTreeSet::from([(9, 0)]));
        assert!(t.query(&[5, 6, 7, 8]).unwrap().is_empty());
    }

    #[test]
    fn insertion_work_is_linear() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let mut t = GeneralizedSuffixTree::new();
        let mut total = 0u64;
        for i in 0..100 {
            let len = rng.gen_range(1..200);
            let content: Vec<u32> = (0..len).map(|_| rng.gen_range(1..=4u32)).collect();
            total += (len + 1) as u64;
            t.insert(i, &content).unwrap();
        }
        assert!(
            t.counters.ops <= 16 * total,
            "ops {} exceed 16 * {total}",
            t.counters.ops
        );
    }

    #[test]
    fn random_ops_match_oracle_and_keep_links_valid() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x6a1);
        let mut t = GeneralizedSuffixTree::new();
        let mut naive = NaiveCollection::new();
        let mut next_id = 0u64;
        for step in 0..1000 {
            let sigma = 3u32;
            match rng.gen_range(0..10) {
                0..=4 => {
                    let len = rng.gen_range(1..50);
                    let content: Vec<u32> =
                        (0..len).map(|_| rng.gen_range(1..=sigma)).collect();
                    t.insert(next_id, &content).unwrap();
                    naive.insert(next_id, content);
                    next_id += 1;
                }
                5..=6 => {
                    let ids = naive.doc_ids();
                    if !ids.is_empty() {
                        let id = ids[rng.gen_range(0..ids.len())];
                        t.delete(id).unwrap();
                        naive.delete(id);
                    }
                }
                _ => {
                    let plen = rng.gen_range(1..=5);
                    let pat: Vec<u32> = (0..plen).map(|_| rng.gen_range(1..=sigma)).collect();
                    assert_eq!(t.query(&pat).unwrap(), naive.occurrences(&pat), "step {step}");
                }
            }
            // leaf count equals alive symbols (terminators included)
            assert_eq!(t.leaf_count(), naive.total_symbols());
            if step % 100 == 0 {
                t.validate_suffix_links().unwrap();
            }
        }
        t.validate_suffix_links().unwrap();
    }
}
