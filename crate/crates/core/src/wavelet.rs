//! Pointerless level-wise wavelet tree over a dense integer alphabet,
//! supporting access, rank and select. Each level is one bitmap; a node's
//! children occupy contiguous spans of the next level (zeros first).

use crate::bits::{DenseBits, DenseBitsBuilder};

#[derive(Debug, Clone)]
pub struct WaveletTree {
    n: usize,
    sigma: usize,
    depth: usize,
    levels: Vec<DenseBits>,
}

impl WaveletTree {
    /// `seq` must only contain values `< sigma`.
    pub fn new(seq: &[u32], sigma: usize) -> Self {
        assert!(sigma >= 1);
        debug_assert!(seq.iter().all(|&c| (c as usize) < sigma));
        let depth = if sigma <= 1 { 0 } else { (usize::BITS - (sigma - 1).leading_zeros()) as usize };
        let n = seq.len();
        let mut levels = Vec::with_capacity(depth);
        let mut cur: Vec<u32> = seq.to_vec();
        // spans of wavelet nodes at the current level
        let mut spans: Vec<(usize, usize)> = vec![(0, n)];
        for l in 0..depth {
            let shift = depth - 1 - l;
            let mut b = DenseBitsBuilder::with_capacity(n);
            for &c in &cur {
                b.push(c >> shift & 1 == 1);
            }
            levels.push(b.finish());
            let mut next = vec![0u32; n];
            let mut next_spans = Vec::with_capacity(spans.len() * 2);
            for &(a, e) in &spans {
                let mut lo = a;
                let zeros = cur[a..e].iter().filter(|&&c| c >> shift & 1 == 0).count();
                let mut hi = a + zeros;
                for i in a..e {
                    let c = cur[i];
                    if c >> shift & 1 == 0 {
                        next[lo] = c;
                        lo += 1;
                    } else {
                        next[hi] = c;
                        hi += 1;
                    }
                }
                next_spans.push((a, a + zeros));
                next_spans.push((a + zeros, e));
            }
            cur = next;
            spans = next_spans;
        }
        WaveletTree { n, sigma, depth, levels }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn sigma(&self) -> usize {
        self.sigma
    }

    pub fn access(&self, mut pos: usize) -> u32 {
        debug_assert!(pos < self.n);
        let (mut a, mut e) = (0usize, self.n);
        let mut code = 0u32;
        for lvl in &self.levels {
            let ones_before = lvl.rank1(a + pos) - lvl.rank1(a);
            let zeros_total = (e - a) - (lvl.rank1(e) - lvl.rank1(a));
            let bit = lvl.get(a + pos);
            code <<= 1;
            if bit {
                code |= 1;
                pos = ones_before;
                a += zeros_total;
            } else {
                pos -= ones_before;
                e = a + zeros_total;
            }
        }
        code
    }

    /// Occurrences of `c` in `seq[0..pos)`.
    pub fn rank(&self, c: u32, mut pos: usize) -> usize {
        if c as usize >= self.sigma || self.n == 0 {
            return 0;
        }
        debug_assert!(pos <= self.n);
        if self.depth == 0 {
            return pos; // unary alphabet
        }
        let (mut a, mut e) = (0usize, self.n);
        for (l, lvl) in self.levels.iter().enumerate() {
            let bit = c >> (self.depth - 1 - l) & 1;
            let ones_in_node = lvl.rank1(e) - lvl.rank1(a);
            let zeros_total = (e - a) - ones_in_node;
            let ones_before = lvl.rank1(a + pos) - lvl.rank1(a);
            if bit == 1 {
                pos = ones_before;
                a += zeros_total;
            } else {
                pos -= ones_before;
                e = a + zeros_total;
            }
            if a == e {
                return 0;
            }
        }
        pos
    }

    pub fn count(&self, c: u32) -> usize {
        self.rank(c, self.n)
    }

    /// Position of the k-th occurrence of `c` (0-based), if it exists.
    pub fn select(&self, c: u32, k: usize) -> Option<usize> {
        if c as usize >= self.sigma || self.n == 0 {
            return None;
        }
        if self.depth == 0 {
            return (k < self.n).then_some(k);
        }
        // descend recording node spans
        let mut path = Vec::with_capacity(self.depth);
        let (mut a, mut e) = (0usize, self.n);
        for (l, lvl) in self.levels.iter().enumerate() {
            let bit = c >> (self.depth - 1 - l) & 1;
            path.push((a, e, bit));
            let ones_in_node = lvl.rank1(e) - lvl.rank1(a);
            let zeros_total = (e - a) - ones_in_node;
            if bit == 1 {
                a += zeros_total;
            } else {
                e = a + zeros_total;
            }
            if a >= e {
                return None;
            }
        }
        if k >= e - a {
            return None;
        }
        // ascend: map offset within leaf back through each level
        let mut off = k;
        for (l, &(a, e, bit)) in path.iter().enumerate().rev() {
            let lvl = &self.levels[l];
            let base1 = lvl.rank1(a);
            let base0 = a - base1;
            // offset of the (off+1)-th `bit` within [a, e)
            let pos = if bit == 1 {
                lvl.select1(base1 + off).expect("select within node")
            } else {
                lvl.select0(base0 + off).expect("select within node")
            };
            debug_assert!(pos >= a && pos < e);
            off = pos - a;
        }
        Some(path[0].0 + off)
    }

    pub fn size_bits(&self) -> usize {
        self.levels.iter().map(|l| l.size_bits()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn access_rank_select_match_naive() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for &sigma in &[1usize, 2, 3, 5, 17, 256] {
            let n = rng.gen_range(1..600);
            let seq: Vec<u32> = (0..n).map(|_| rng.gen_range(0..sigma as u32)).collect();
            let wt = WaveletTree::new(&seq, sigma);
            for i in 0..n {
                assert_eq!(wt.access(i), seq[i], "access sigma={sigma}");
            }
            for c in 0..sigma as u32 {
                let mut occ = 0usize;
                for i in 0..=n {
                    assert_eq!(wt.rank(c, i), occ, "rank c={c} i={i}");
                    if i < n && seq[i] == c {
                        assert_eq!(wt.select(c, occ), Some(i));
                        occ += 1;
                    }
                }
                assert_eq!(wt.select(c, occ), None);
            }
            assert_eq!(wt.rank(sigma as u32 + 5, n), 0);
        }
    }

    #[test]
    fn empty_sequence() {
        let wt = WaveletTree::new(&[], 4);
        assert_eq!(wt.rank(1, 0), 0);
        assert_eq!(wt.select(1, 0), None);
    }
}
