//! Plain immutable bitmap with a sampled rank directory. Used as the building
//! block of wavelet-tree levels and unary-coded sequences; select is answered
//! by binary search over rank.

const WORD: usize = 64;
const SUPER: usize = 8; // words per rank sample

#[derive(Debug, Clone, Default)]
pub struct DenseBits {
    len: usize,
    words: Vec<u64>,
    /// cumulative ones before each superblock
    samples: Vec<u32>,
}

impl DenseBits {
    pub fn from_bits(bits: &[bool]) -> Self {
        let mut b = DenseBitsBuilder::with_capacity(bits.len());
        for &bit in bits {
            b.push(bit);
        }
        b.finish()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.words[i / WORD] >> (i % WORD) & 1 == 1
    }

    /// Ones in `[0, i)`.
    pub fn rank1(&self, i: usize) -> usize {
        debug_assert!(i <= self.len);
        let word = i / WORD;
        let sb = word / SUPER;
        let mut acc = self.samples[sb] as usize;
        for w in sb * SUPER..word {
            acc += self.words[w].count_ones() as usize;
        }
        if i % WORD != 0 {
            acc += (self.words[word] & ((1u64 << (i % WORD)) - 1)).count_ones() as usize;
        }
        acc
    }

    pub fn rank0(&self, i: usize) -> usize {
        i - self.rank1(i)
    }

    pub fn ones(&self) -> usize {
        self.rank1(self.len)
    }

    /// Position of the k-th one (0-based), by binary search over rank1.
    pub fn select1(&self, k: usize) -> Option<usize> {
        if k >= self.ones() {
            return None;
        }
        let mut lo = 0usize;
        let mut hi = self.len; // invariant: rank1(lo) <= k < rank1(hi)
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.rank1(mid) <= k {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(lo)
    }

    /// Position of the k-th zero (0-based).
    pub fn select0(&self, k: usize) -> Option<usize> {
        if k >= self.len - self.ones() {
            return None;
        }
        let mut lo = 0usize;
        let mut hi = self.len;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.rank0(mid) <= k {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(lo)
    }

    pub fn size_bits(&self) -> usize {
        self.words.len() * WORD + self.samples.len() * 32
    }
}

#[derive(Debug, Default)]
pub struct DenseBitsBuilder {
    len: usize,
    words: Vec<u64>,
}

impl DenseBitsBuilder {
    pub fn with_capacity(bits: usize) -> Self {
        DenseBitsBuilder { len: 0, words: Vec::with_capacity(bits.div_ceil(WORD)) }
    }

    pub fn push(&mut self, bit: bool) {
        if self.len % WORD == 0 {
            self.words.push(0);
        }
        if bit {
            *self.words.last_mut().unwrap() |= 1 << (self.len % WORD);
        }
        self.len += 1;
    }

    pub fn finish(mut self) -> DenseBits {
        if self.words.is_empty() {
            self.words.push(0);
        }
        // one sample per superblock plus a trailing total, so rank1(len)
        // stays in bounds at word-aligned lengths
        let max_sb = self.words.len() / SUPER;
        let mut samples = Vec::with_capacity(max_sb + 1);
        let mut acc = 0u32;
        let mut w = 0usize;
        for sb in 0..=max_sb {
            samples.push(acc);
            let hi = ((sb + 1) * SUPER).min(self.words.len());
            while w < hi {
                acc += self.words[w].count_ones();
                w += 1;
            }
        }
        DenseBits { len: self.len, words: self.words, samples }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn rank_select_match_scan() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for &n in &[1usize, 64, 65, 511, 512, 513, 4096] {
            let model: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.4)).collect();
            let v = DenseBits::from_bits(&model);
            let mut ones = 0;
            for i in 0..n {
                assert_eq!(v.rank1(i), ones);
                if model[i] {
                    assert_eq!(v.select1(ones), Some(i));
                    ones += 1;
                }
            }
            assert_eq!(v.rank1(n), ones);
            let zeros: Vec<usize> = (0..n).filter(|&i| !model[i]).collect();
            for (k, &p) in zeros.iter().enumerate() {
                assert_eq!(v.select0(k), Some(p));
            }
            assert_eq!(v.select1(ones), None);
        }
    }
}
