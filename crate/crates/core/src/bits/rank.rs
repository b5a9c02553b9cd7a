//! Rank-supporting bit vector for counting queries: 512-bit blocks under a
//! complete binary aggregation tree of popcounts. `rank1` costs one
//! root-to-leaf descent worth of prefix sums plus an in-block popcount scan;
//! a flip-to-zero touches exactly one leaf-to-root path.

use crate::error::{Error, Result};

const WORD: usize = 64;
const BLOCK_WORDS: usize = 8; // 512-bit blocks

#[derive(Debug, Clone)]
pub struct RankBitVector {
    len: usize,
    words: Vec<u64>,
    /// 1-indexed complete binary tree; `tree[leaves + b]` = popcount of block b.
    tree: Vec<u32>,
    leaves: usize,
}

impl RankBitVector {
    pub fn from_bits(bits: &[bool]) -> Self {
        let mut words = vec![0u64; bits.len().div_ceil(WORD).max(1)];
        for (i, &b) in bits.iter().enumerate() {
            if b {
                words[i / WORD] |= 1 << (i % WORD);
            }
        }
        Self::from_words(bits.len(), words)
    }

    pub fn all_ones(len: usize) -> Self {
        let mut words = vec![u64::MAX; len.div_ceil(WORD).max(1)];
        if len == 0 {
            words[0] = 0;
        } else if len % WORD != 0 {
            let last = words.len() - 1;
            words[last] = u64::MAX >> (WORD - len % WORD);
        }
        Self::from_words(len, words)
    }

    fn from_words(len: usize, words: Vec<u64>) -> Self {
        let nblocks = words.len().div_ceil(BLOCK_WORDS).max(1);
        let leaves = nblocks.next_power_of_two();
        let mut tree = vec![0u32; 2 * leaves];
        for b in 0..nblocks {
            let lo = b * BLOCK_WORDS;
            let hi = (lo + BLOCK_WORDS).min(words.len());
            tree[leaves + b] = words[lo..hi].iter().map(|w| w.count_ones()).sum();
        }
        for i in (1..leaves).rev() {
            tree[i] = tree[2 * i] + tree[2 * i + 1];
        }
        RankBitVector { len, words, tree, leaves }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        i < self.len && self.words[i / WORD] >> (i % WORD) & 1 == 1
    }

    pub fn ones(&self) -> usize {
        self.tree[1] as usize
    }

    /// Number of 1-bits in `[0..=i]`.
    pub fn rank1(&self, i: usize) -> Result<usize> {
        if i >= self.len {
            return Err(Error::OutOfRange { pos: i, len: self.len });
        }
        let block = i / (BLOCK_WORDS * WORD);
        // sum of blocks strictly before `block` via left siblings on the path
        let mut acc = 0usize;
        let mut node = self.leaves + block;
        while node > 1 {
            if node & 1 == 1 {
                acc += self.tree[node - 1] as usize;
            }
            node /= 2;
        }
        let first_word = block * BLOCK_WORDS;
        let word = i / WORD;
        for w in first_word..word {
            acc += self.words[w].count_ones() as usize;
        }
        let keep = i % WORD + 1;
        let mask = if keep == WORD { u64::MAX } else { (1u64 << keep) - 1 };
        acc += (self.words[word] & mask).count_ones() as usize;
        Ok(acc)
    }

    /// 1-bits in the inclusive range `[a..=b]`.
    pub fn ones_in_range(&self, a: usize, b: usize) -> Result<usize> {
        if a > b || b >= self.len {
            return Err(Error::InvalidRange { start: a, end: b, len: self.len });
        }
        let hi = self.rank1(b)?;
        let lo = if a == 0 { 0 } else { self.rank1(a - 1)? };
        Ok(hi - lo)
    }

    /// Flips bit `i` to zero, updating the popcount path above its block.
    /// Returns the number of tree nodes adjusted (the path length).
    pub fn set_zero(&mut self, i: usize) -> Result<usize> {
        if i >= self.len {
            return Err(Error::OutOfRange { pos: i, len: self.len });
        }
        let w = i / WORD;
        let mask = 1u64 << (i % WORD);
        if self.words[w] & mask == 0 {
            return Ok(0);
        }
        self.words[w] &= !mask;
        let mut node = self.leaves + w / BLOCK_WORDS;
        let mut touched = 0usize;
        while node >= 1 {
            self.tree[node] -= 1;
            touched += 1;
            if node == 1 {
                break;
            }
            node /= 2;
        }
        Ok(touched)
    }

    pub fn size_bits(&self) -> usize {
        self.words.len() * WORD + self.tree.len() * 32
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn bits(s: &str) -> Vec<bool> {
        s.chars().map(|c| c == '1').collect()
    }

    #[test]
    fn rank_small() {
        let v = RankBitVector::from_bits(&bits("11011"));
        assert_eq!(v.rank1(2).unwrap(), 2);
        assert_eq!(v.rank1(4).unwrap(), 4);
    }

    #[test]
    fn rank_all_zero() {
        let v = RankBitVector::from_bits(&vec![false; 100]);
        for i in 0..100 {
            assert_eq!(v.rank1(i).unwrap(), 0);
        }
    }

    #[test]
    fn flip_drops_rank_beyond_position() {
        let mut v = RankBitVector::all_ones(200);
        let before: Vec<usize> = (0..200).map(|i| v.rank1(i).unwrap()).collect();
        v.set_zero(77).unwrap();
        for i in 0..200 {
            let want = if i >= 77 { before[i] - 1 } else { before[i] };
            assert_eq!(v.rank1(i).unwrap(), want);
        }
    }

    #[test]
    fn update_touches_one_root_to_leaf_path() {
        let mut v = RankBitVector::all_ones(1 << 14);
        let depth = (v.leaves as f64).log2() as usize + 1;
        let touched = v.set_zero(12345).unwrap();
        assert_eq!(touched, depth);
        // flipping an already-zero bit touches nothing
        assert_eq!(v.set_zero(12345).unwrap(), 0);
    }

    #[test]
    fn rank_matches_scan_randomized() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for &n in &[1usize, 65, 513, 5000] {
            let mut model: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.6)).collect();
            let mut v = RankBitVector::from_bits(&model);
            for _ in 0..500 {
                if rng.gen_bool(0.3) {
                    let i = rng.gen_range(0..n);
                    v.set_zero(i).unwrap();
                    model[i] = false;
                }
                let i = rng.gen_range(0..n);
                let want = model[..=i].iter().filter(|&&b| b).count();
                assert_eq!(v.rank1(i).unwrap(), want);
                let a = rng.gen_range(0..n);
                let b = rng.gen_range(a..n);
                let want = model[a..=b].iter().filter(|&&b| b).count();
                assert_eq!(v.ones_in_range(a, b).unwrap(), want);
            }
        }
    }
}
