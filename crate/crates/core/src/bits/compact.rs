//! Space-reduced variant of [`ReportBitVector`] for vectors that stay mostly
//! ones: the vector is cut into blocks of `tau` bits and only the zero
//! positions inside each block are materialized, `ceil(log2 tau)` bits each
//! (byte-aligned per block in the accounted encoding). A summary
//! [`ReportBitVector`] over block indices drives range reporting.

use super::report::ReportBitVector;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct CompactReportBitVector {
    len: usize,
    tau: usize,
    budget: usize,
    zeros: usize,
    /// Sorted zero offsets within each block.
    block_zeros: Vec<Vec<u16>>,
    /// Bit `b` set iff block `b` still contains at least one 1.
    nonempty: ReportBitVector,
}

impl CompactReportBitVector {
    /// Default budget is `max(len/tau, 1)` zeros, per the space regime the
    /// structure is designed for. Use [`with_budget`](Self::with_budget) to
    /// override.
    pub fn from_bits(bits: &[bool], tau: usize) -> Result<Self> {
        let budget = (bits.len() / tau.max(1)).max(1);
        Self::with_budget(bits, tau, budget)
    }

    pub fn with_budget(bits: &[bool], tau: usize, budget: usize) -> Result<Self> {
        if tau < 2 {
            return Err(Error::Internal(format!("block width {tau} < 2")));
        }
        if tau > u16::MAX as usize {
            return Err(Error::Internal(format!("block width {tau} too large")));
        }
        let len = bits.len();
        let nblocks = len.div_ceil(tau).max(1);
        let mut block_zeros = vec![Vec::new(); nblocks];
        let mut zeros = 0usize;
        for (i, &b) in bits.iter().enumerate() {
            if !b {
                block_zeros[i / tau].push((i % tau) as u16);
                zeros += 1;
            }
        }
        if zeros > budget {
            return Err(Error::ZeroBudget { budget });
        }
        let mut nonempty = vec![false; nblocks];
        for (b, z) in block_zeros.iter().enumerate() {
            let width = Self::block_width_of(len, tau, b);
            nonempty[b] = z.len() < width;
        }
        Ok(CompactReportBitVector {
            len,
            tau,
            budget,
            zeros,
            block_zeros,
            nonempty: ReportBitVector::from_bits(&nonempty),
        })
    }

    pub fn all_ones(len: usize, tau: usize) -> Self {
        Self::with_budget(&vec![true; len], tau, len.max(1)).expect("all-ones is always valid")
    }

    pub fn all_ones_with_budget(len: usize, tau: usize, budget: usize) -> Result<Self> {
        Self::with_budget(&vec![true; len], tau, budget)
    }

    fn block_width_of(len: usize, tau: usize, b: usize) -> usize {
        (len - b * tau).min(tau)
    }

    fn block_width(&self, b: usize) -> usize {
        Self::block_width_of(self.len, self.tau, b)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn zeros(&self) -> usize {
        self.zeros
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn get(&self, i: usize) -> bool {
        if i >= self.len {
            return false;
        }
        !self.block_zeros[i / self.tau].contains(&((i % self.tau) as u16))
    }

    /// Clears bit `i`; errors with `ZeroBudget` once the budget would be
    /// exceeded (the caller is expected to purge and rebuild).
    pub fn zero(&mut self, i: usize) -> Result<()> {
        if i >= self.len {
            return Err(Error::OutOfRange { pos: i, len: self.len });
        }
        let b = i / self.tau;
        let off = (i % self.tau) as u16;
        let list = &mut self.block_zeros[b];
        let Err(slot) = list.binary_search(&off) else {
            return Ok(()); // already zero
        };
        if self.zeros + 1 > self.budget {
            return Err(Error::ZeroBudget { budget: self.budget });
        }
        list.insert(slot, off);
        self.zeros += 1;
        if list.len() == self.block_width(b) {
            self.nonempty.zero(b)?;
        }
        Ok(())
    }

    pub fn report(&self, s: usize, e: usize) -> Result<Vec<usize>> {
        Ok(self.report_with_probes(s, e)?.0)
    }

    /// Probe count = number of blocks whose payload was decoded.
    pub fn report_with_probes(&self, s: usize, e: usize) -> Result<(Vec<usize>, usize)> {
        if s > e || e >= self.len {
            return Err(Error::InvalidRange { start: s, end: e, len: self.len });
        }
        let mut out = Vec::new();
        let mut probes = 0usize;
        let last_b = e / self.tau;
        let mut b = s / self.tau;
        probes += 1;
        self.emit_block(b, s, e, &mut out);
        loop {
            match self.nonempty.next_one(b + 1) {
                Some(nb) if nb <= last_b => {
                    b = nb;
                    probes += 1;
                    self.emit_block(b, s, e, &mut out);
                }
                _ => break,
            }
        }
        Ok((out, probes))
    }

    fn emit_block(&self, b: usize, s: usize, e: usize, out: &mut Vec<usize>) {
        let base = b * self.tau;
        let zeros = &self.block_zeros[b];
        let mut zi = 0usize;
        for off in 0..self.block_width(b) {
            let pos = base + off;
            if pos > e {
                return;
            }
            let is_zero = zi < zeros.len() && zeros[zi] == off as u16;
            if is_zero {
                zi += 1;
            } else if pos >= s {
                out.push(pos);
            }
        }
    }

    pub fn count_ones(&self) -> usize {
        self.len - self.zeros
    }

    /// (payload_bits, summary_bits, total_bits) of the accounted encoding:
    /// per block a zero-count field of `ceil(log2(tau+1))` bits plus
    /// `ceil(log2 tau)` bits per stored zero, rounded up to whole bytes.
    pub fn size_report(&self) -> (usize, usize, usize) {
        let count_field = usize::BITS as usize - self.tau.leading_zeros() as usize; // ceil(log2(tau+1))
        let pos_bits = (usize::BITS as usize - (self.tau - 1).leading_zeros() as usize).max(1);
        let payload: usize = self
            .block_zeros
            .iter()
            .map(|z| (count_field + z.len() * pos_bits).div_ceil(8) * 8)
            .sum();
        let (_, _, summary) = self.nonempty.size_report();
        (payload, summary, payload + summary)
    }
}
