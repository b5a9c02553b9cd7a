//! Succinct bit vectors: one-way clearing with range reporting (plain and
//! compact encodings) and rank support for counting.

mod compact;
mod dense;
mod rank;
mod report;

pub use compact::CompactReportBitVector;
pub use dense::{DenseBits, DenseBitsBuilder};
pub use rank::RankBitVector;
pub use report::ReportBitVector;

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    /// Interleaved zero/report/rank operations against a naive array model,
    /// across all three structures at once.
    #[test]
    fn interleaved_oracle_equivalence() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xbeef);
        for &n in &[129usize, 4096, 1 << 16] {
            let mut model: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.8)).collect();
            let mut plain = ReportBitVector::from_bits(&model);
            let mut compact = CompactReportBitVector::with_budget(&model, 16, n).unwrap();
            let mut rank = RankBitVector::from_bits(&model);
            let ops = if n > 10_000 { 2000 } else { 3000 };
            for _ in 0..ops {
                match rng.gen_range(0..3) {
                    0 => {
                        let i = rng.gen_range(0..n);
                        plain.zero(i).unwrap();
                        compact.zero(i).unwrap();
                        rank.set_zero(i).unwrap();
                        model[i] = false;
                    }
                    1 => {
                        let a = rng.gen_range(0..n);
                        let b = (a + rng.gen_range(0..200)).min(n - 1);
                        let want: Vec<usize> = (a..=b).filter(|&i| model[i]).collect();
                        assert_eq!(plain.report(a, b).unwrap(), want);
                        assert_eq!(compact.report(a, b).unwrap(), want);
                    }
                    _ => {
                        let i = rng.gen_range(0..n);
                        let want = model[..=i].iter().filter(|&&b| b).count();
                        assert_eq!(rank.rank1(i).unwrap(), want);
                    }
                }
            }
        }
    }
}
