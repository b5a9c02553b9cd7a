//! Directed graph as a binary relation: an edge u -> v is object u related
//! to label v, with nodes sharing one id space.

use std::collections::BTreeSet;

use crate::error::Result;
use crate::relation::DynamicRelation;

#[derive(Debug, Default)]
pub struct DirectedGraph {
    rel: DynamicRelation,
}

impl DirectedGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn edge_count(&self) -> usize {
        self.rel.pair_count()
    }

    pub fn add_edge(&mut self, u: u32, v: u32) -> Result<()> {
        self.rel.add(u, v)
    }

    pub fn remove_edge(&mut self, u: u32, v: u32) -> Result<()> {
        self.rel.remove(u, v)
    }

    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        self.rel.related(u, v)
    }

    pub fn out_neighbors(&self, u: u32) -> BTreeSet<u32> {
        self.rel.labels_of(u)
    }

    pub fn in_neighbors(&self, v: u32) -> BTreeSet<u32> {
        self.rel.objects_of(v)
    }

    pub fn out_degree(&self, u: u32) -> usize {
        self.rel.count_labels(u)
    }

    pub fn in_degree(&self, v: u32) -> usize {
        self.rel.count_objects(v)
    }

    pub fn relation(&self) -> &DynamicRelation {
        &self.rel
    }

    pub fn relation_mut(&mut self) -> &mut DynamicRelation {
        &mut self.rel
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::NaiveGraph;
    use rand::{Rng, SeedableRng};

    #[test]
    fn three_node_cycle() {
        let mut g = DirectedGraph::new();
        g.add_edge(0, 1).unwrap();
        g.add_edge(1, 2).unwrap();
        g.add_edge(2, 0).unwrap();
        assert_eq!(g.out_neighbors(0), BTreeSet::from([1]));
        assert_eq!(g.in_neighbors(0), BTreeSet::from([2]));
        assert_eq!(g.out_degree(1), 1);
        assert_eq!(g.in_degree(2), 1);
        assert!(g.has_edge(2, 0));
        assert!(!g.has_edge(0, 2));
    }

    #[test]
    fn self_loop() {
        let mut g = DirectedGraph::new();
        g.add_edge(5, 5).unwrap();
        assert!(g.has_edge(5, 5));
        assert_eq!(g.out_neighbors(5), BTreeSet::from([5]));
        assert_eq!(g.in_neighbors(5), BTreeSet::from([5]));
        g.remove_edge(5, 5).unwrap();
        assert!(!g.has_edge(5, 5));
    }

    #[test]
    fn random_churn_matches_adjacency_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x9e);
        let mut g = DirectedGraph::new();
        let mut naive = NaiveGraph::new();
        for _ in 0..5000 {
            let u = rng.gen_range(0..500u32);
            let v = rng.gen_range(0..500u32);
            match rng.gen_range(0..10) {
                0..=5 => {
                    if !naive.has_edge(u, v) {
                        naive.add_edge(u, v);
                        g.add_edge(u, v).unwrap();
                    }
                }
                6..=7 => {
                    if naive.has_edge(u, v) {
                        naive.remove_edge(u, v);
                        g.remove_edge(u, v).unwrap();
                    }
                }
                _ => {
                    assert_eq!(g.out_neighbors(u), naive.out_neighbors(u));
                    assert_eq!(g.in_neighbors(v), naive.in_neighbors(v));
                    assert_eq!(g.out_degree(u), naive.out_degree(u));
                    assert_eq!(g.in_degree(v), naive.in_degree(v));
                    assert_eq!(g.has_edge(u, v), naive.has_edge(u, v));
                }
            }
        }
    }
}
