//! Bit vector with one-way clearing and range reporting of set bits.
//!
//! Bits are packed into 64-bit words. A hierarchical summary bitmap (branching
//! factor 64) marks which words still contain a set bit, so `report` can jump
//! over long empty stretches instead of scanning them.

use crate::error::{Error, Result};

const WORD: usize = 64;

#[derive(Debug, Clone)]
pub struct ReportBitVector {
    len: usize,
    words: Vec<u64>,
    /// `summary[0]` has one bit per data word (1 = word non-empty);
    /// each further level summarizes 64 words of the level below.
    summary: Vec<Vec<u64>>,
}

fn build_summary(words: &[u64]) -> Vec<Vec<u64>> {
    let mut summary = Vec::new();
    let mut below: Vec<bool> = words.iter().map(|&w| w != 0).collect();
    loop {
        let mut level = vec![0u64; below.len().div_ceil(WORD).max(1)];
        for (i, &set) in below.iter().enumerate() {
            if set {
                level[i / WORD] |= 1 << (i % WORD);
            }
        }
        let next: Vec<bool> = level.iter().map(|&w| w != 0).collect();
        let done = level.len() <= 1;
        summary.push(level);
        if done {
            break;
        }
        below = next;
    }
    summary
}

impl ReportBitVector {
    pub fn from_bits(bits: &[bool]) -> Self {
        let mut words = vec![0u64; bits.len().div_ceil(WORD).max(1)];
        for (i, &b) in bits.iter().enumerate() {
            if b {
                words[i / WORD] |= 1 << (i % WORD);
            }
        }
        let summary = build_summary(&words);
        ReportBitVector { len: bits.len(), words, summary }
    }

    pub fn all_ones(len: usize) -> Self {
        let mut words = vec![u64::MAX; len.div_ceil(WORD).max(1)];
        if len % WORD != 0 {
            let last = words.len() - 1;
            words[last] = if len == 0 { 0 } else { u64::MAX >> (WORD - len % WORD) };
        }
        if len == 0 {
            words[0] = 0;
        }
        let summary = build_summary(&words);
        ReportBitVector { len, words, summary }
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

    /// Clears bit `i`. Idempotent: clearing a zero bit is a no-op.
    pub fn zero(&mut self, i: usize) -> Result<()> {
        if i >= self.len {
            return Err(Error::OutOfRange { pos: i, len: self.len });
        }
        let w = i / WORD;
        let mask = 1u64 << (i % WORD);
        if self.words[w] & mask == 0 {
            return Ok(());
        }
        self.words[w] &= !mask;
        if self.words[w] == 0 {
            self.clear_summary(0, w);
        }
        Ok(())
    }

    fn clear_summary(&mut self, level: usize, i: usize) {
        let word = &mut self.summary[level][i / WORD];
        *word &= !(1u64 << (i % WORD));
        if *word == 0 && level + 1 < self.summary.len() {
            self.clear_summary(level + 1, i / WORD);
        }
    }

    /// Smallest `j >= i` with bit `j` set in `summary[level]`.
    fn next_set(&self, level: usize, i: usize) -> Option<usize> {
        let words = &self.summary[level];
        let wi = i / WORD;
        if wi >= words.len() {
            return None;
        }
        let m = words[wi] & (u64::MAX << (i % WORD));
        if m != 0 {
            return Some(wi * WORD + m.trailing_zeros() as usize);
        }
        if level + 1 >= self.summary.len() {
            return None;
        }
        let up = self.next_set(level + 1, wi + 1)?;
        let m2 = words[up];
        debug_assert_ne!(m2, 0);
        Some(up * WORD + m2.trailing_zeros() as usize)
    }

    /// Smallest position `j >= i` holding a 1, if any.
    pub fn next_one(&self, i: usize) -> Option<usize> {
        if i >= self.len {
            return None;
        }
        let w = i / WORD;
        let m = self.words[w] & (u64::MAX << (i % WORD));
        if m != 0 {
            let j = w * WORD + m.trailing_zeros() as usize;
            return (j < self.len).then_some(j);
        }
        let w2 = self.next_set(0, w + 1)?;
        let j = w2 * WORD + self.words[w2].trailing_zeros() as usize;
        (j < self.len).then_some(j)
    }

    /// All set positions in `[s, e]`, in increasing order.
    pub fn report(&self, s: usize, e: usize) -> Result<Vec<usize>> {
        Ok(self.report_with_probes(s, e)?.0)
    }

    /// Like `report`, but also returns the number of data words examined,
    /// for output-sensitivity checks. Non-empty interior words always
    /// contribute output, so the probe count is at most `k + 2`.
    pub fn report_with_probes(&self, s: usize, e: usize) -> Result<(Vec<usize>, usize)> {
        if s > e || e >= self.len {
            return Err(Error::InvalidRange { start: s, end: e, len: self.len });
        }
        let mut out = Vec::new();
        let mut probes = 0usize;
        let mut w = s / WORD;
        let last_w = e / WORD;
        // First word scanned unconditionally; the rest via the summary.
        probes += 1;
        self.emit_word(w, s, e, &mut out);
        loop {
            match self.next_set(0, w + 1) {
                Some(nw) if nw <= last_w => {
                    w = nw;
                    probes += 1;
                    self.emit_word(w, s, e, &mut out);
                }
                _ => break,
            }
        }
        Ok((out, probes))
    }

    fn emit_word(&self, w: usize, s: usize, e: usize, out: &mut Vec<usize>) {
        let mut m = self.words[w];
        while m != 0 {
            let j = w * WORD + m.trailing_zeros() as usize;
            if j > e {
                break;
            }
            if j >= s {
                out.push(j);
            }
            m &= m - 1;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// (payload_bits, summary_bits, total_bits)
    pub fn size_report(&self) -> (usize, usize, usize) {
        let payload = self.words.len() * WORD;
        let summary: usize = self.summary.iter().map(|l| l.len() * WORD).sum();
        (payload, summary, payload + summary)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(s: &str) -> Vec<bool> {
        s.chars().map(|c| c == '1').collect()
    }

    #[test]
    fn build_and_report_full_range() {
        let v = ReportBitVector::from_bits(&bits("11011"));
        assert_eq!(v.report(0, 4).unwrap(), vec![0, 1, 3, 4]);
    }

    #[test]
    fn all_zero_reports_nothing() {
        let v = ReportBitVector::from_bits(&bits("00000"));
        assert_eq!(v.report(0, 4).unwrap(), Vec::<usize>::new());
    }

    #[test]
    fn full_word_of_ones() {
        let v = ReportBitVector::from_bits(&vec![true; 64]);
        assert_eq!(v.report(0, 63).unwrap(), (0..64).collect::<Vec<_>>());
    }

    #[test]
    fn zero_removes_position() {
        let mut v = ReportBitVector::from_bits(&bits("11011"));
        v.zero(1).unwrap();
        assert_eq!(v.report(0, 4).unwrap(), vec![0, 3, 4]);
    }

    #[test]
    fn zero_is_idempotent() {
        let mut v = ReportBitVector::from_bits(&bits("11011"));
        v.zero(1).unwrap();
        let once = v.report(0, 4).unwrap();
        v.zero(1).unwrap();
        assert_eq!(v.report(0, 4).unwrap(), once);
    }

    #[test]
    fn emptied_word_leaves_summary() {
        let mut b = vec![false; 64];
        b[0] = true;
        let mut v = ReportBitVector::from_bits(&b);
        v.zero(0).unwrap();
        assert_eq!(v.next_one(0), None);
        assert!(v.summary[0].iter().all(|&w| w == 0));
    }

    #[test]
    fn inner_range_report() {
        let v = ReportBitVector::from_bits(&bits("10101"));
        assert_eq!(v.report(1, 3).unwrap(), vec![2]);
    }

    #[test]
    fn singleton_range_on_set_bit() {
        let v = ReportBitVector::from_bits(&bits("10101"));
        assert_eq!(v.report(2, 2).unwrap(), vec![2]);
    }

    #[test]
    fn middle_empty_word_is_skipped() {
        let mut b = vec![true; 64];
        b.extend(vec![false; 64]);
        b.extend(vec![true; 64]);
        let v = ReportBitVector::from_bits(&b);
        let (out, probes) = v.report_with_probes(0, 191).unwrap();
        assert_eq!(out.len(), 128);
        // only the two non-empty words are touched
        assert_eq!(probes, 2);
    }

    #[test]
    fn out_of_range_errors() {
        let mut v = ReportBitVector::from_bits(&bits("101"));
        assert!(v.zero(3).is_err());
        assert!(v.report(1, 3).is_err());
        assert!(v.report(2, 1).is_err());
    }

    #[test]
    fn probe_bound_output_sensitive() {
        // 40 words, ones sprinkled sparsely
        let mut b = vec![false; 40 * 64];
        for i in (0..b.len()).step_by(173) {
            b[i] = true;
        }
        let v = ReportBitVector::from_bits(&b);
        let (out, probes) = v.report_with_probes(5, b.len() - 2).unwrap();
        assert!(probes <= out.len() + 2, "probes {} > k+2 {}", probes, out.len() + 2);
    }

    #[test]
    fn oracle_equivalence_random_ops() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
        for &n in &[1usize, 63, 64, 65, 1000, 1 << 13] {
            let mut model: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
            let mut v = ReportBitVector::from_bits(&model);
            for _ in 0..2000 {
                if rng.gen_bool(0.5) {
                    let i = rng.gen_range(0..n);
                    v.zero(i).unwrap();
                    model[i] = false;
                } else {
                    let a = rng.gen_range(0..n);
                    let b = rng.gen_range(a..n);
                    let want: Vec<usize> = (a..=b).filter(|&i| model[i]).collect();
                    assert_eq!(v.report(a, b).unwrap(), want);
                }
            }
        }
    }
}
