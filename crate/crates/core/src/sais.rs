//! Suffix array construction by induced sorting (SA-IS), linear time over an
//! integer alphabet. The input must end with a sentinel 0 that occurs exactly
//! once, at the last position.

/// Computes the suffix array of `text`. `sigma` is an exclusive upper bound
/// on symbol values. Panics if the sentinel contract is violated.
pub fn suffix_array(text: &[u32], sigma: usize) -> Vec<u32> {
    assert!(!text.is_empty());
    assert_eq!(*text.last().unwrap(), 0, "text must end with sentinel 0");
    debug_assert_eq!(text.iter().filter(|&&c| c == 0).count(), 1);
    let mut sa = vec![u32::MAX; text.len()];
    sais(text, sigma, &mut sa);
    sa
}

fn sais(text: &[u32], sigma: usize, sa: &mut [u32]) {
    let n = text.len();
    if n == 1 {
        sa[0] = 0;
        return;
    }
    // S/L types: S if text[i] < text[i+1], or equal and i+1 is S; last is S.
    let mut is_s = vec![false; n];
    is_s[n - 1] = true;
    for i in (0..n - 1).rev() {
        is_s[i] = text[i] < text[i + 1] || (text[i] == text[i + 1] && is_s[i + 1]);
    }
    let is_lms = |i: usize| i > 0 && is_s[i] && !is_s[i - 1];

    let mut bucket = vec![0u32; sigma];
    for &c in text {
        bucket[c as usize] += 1;
    }
    let heads = |bucket: &[u32]| {
        let mut b = vec![0u32; sigma];
        let mut acc = 0;
        for c in 0..sigma {
            b[c] = acc;
            acc += bucket[c];
        }
        b
    };
    let tails = |bucket: &[u32]| {
        let mut b = vec![0u32; sigma];
        let mut acc = 0;
        for c in 0..sigma {
            acc += bucket[c];
            b[c] = acc;
        }
        b
    };

    let induce = |sa: &mut [u32], bucket: &[u32]| {
        // L-type pass, left to right
        let mut head = heads(bucket);
        for i in 0..n {
            let j = sa[i];
            if j == u32::MAX || j == 0 {
                continue;
            }
            let p = j as usize - 1;
            if !is_s[p] {
                let c = text[p] as usize;
                sa[head[c] as usize] = p as u32;
                head[c] += 1;
            }
        }
        // S-type pass, right to left
        let mut tail = tails(bucket);
        for i in (0..n).rev() {
            let j = sa[i];
            if j == u32::MAX || j == 0 {
                continue;
            }
            let p = j as usize - 1;
            if is_s[p] {
                let c = text[p] as usize;
                tail[c] -= 1;
                sa[tail[c] as usize] = p as u32;
            }
        }
    };

    // Pass 1: place LMS suffixes (unsorted) at bucket tails, induce.
    sa.fill(u32::MAX);
    {
        let mut tail = tails(&bucket);
        for i in (0..n).rev() {
            if is_lms(i) {
                let c = text[i] as usize;
                tail[c] -= 1;
                sa[tail[c] as usize] = i as u32;
            }
        }
        // sentinel suffix
        let mut head0 = heads(&bucket);
        sa[head0[0] as usize] = (n - 1) as u32;
        head0[0] += 1;
    }
    induce(sa, &bucket);

    // Name LMS substrings in their induced order.
    let lms_positions: Vec<u32> = (0..n).filter(|&i| is_lms(i)).map(|i| i as u32).collect();
    let n_lms = lms_positions.len();
    if n_lms > 0 {
        let mut order: Vec<u32> = Vec::with_capacity(n_lms);
        for i in 0..n {
            let j = sa[i] as usize;
            if sa[i] != u32::MAX && is_lms(j) {
                order.push(sa[i]);
            }
        }
        // rank of each LMS position in the text, for the reduced string
        let mut name_of = vec![0u32; n];
        let mut names = 0u32;
        let mut prev: Option<usize> = None;
        for &p in &order {
            let p = p as usize;
            let equal = match prev {
                None => false,
                Some(q) => lms_substring_eq(text, &is_s, p, q, n),
            };
            if !equal && prev.is_some() {
                names += 1;
            }
            name_of[p] = names;
            prev = Some(p);
        }
        let distinct = names as usize + 1;
        let reduced: Vec<u32> = lms_positions.iter().map(|&p| name_of[p as usize]).collect();

        let sorted_lms: Vec<u32> = if distinct == n_lms {
            // names already unique: order is the sorted order
            order
        } else {
            // recurse on the reduced string (its last element is the sentinel
            // suffix's LMS, which is the unique minimum by construction)
            let mut sub_sa = vec![u32::MAX; n_lms];
            sais(&reduced, distinct, &mut sub_sa);
            sub_sa.iter().map(|&k| lms_positions[k as usize]).collect()
        };

        // Pass 2: place LMS in sorted order, induce again.
        sa.fill(u32::MAX);
        let mut tail = tails(&bucket);
        for &p in sorted_lms.iter().rev() {
            let c = text[p as usize] as usize;
            tail[c] -= 1;
            sa[tail[c] as usize] = p;
        }
        induce(sa, &bucket);
    }
}

fn lms_substring_eq(text: &[u32], is_s: &[bool], a: usize, b: usize, n: usize) -> bool {
    if a == b {
        return true;
    }
    let is_lms = |i: usize| i > 0 && is_s[i] && !is_s[i - 1];
    let mut i = 0usize;
    loop {
        let pa = a + i;
        let pb = b + i;
        if pa >= n || pb >= n {
            return false;
        }
        if text[pa] != text[pb] || is_s[pa] != is_s[pb] {
            return false;
        }
        if i > 0 && (is_lms(pa) || is_lms(pb)) {
            return is_lms(pa) && is_lms(pb);
        }
        i += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn naive(text: &[u32]) -> Vec<u32> {
        let mut idx: Vec<u32> = (0..text.len() as u32).collect();
        idx.sort_by(|&a, &b| text[a as usize..].cmp(&text[b as usize..]));
        idx
    }

    #[test]
    fn banana() {
        // "banana" + 0: b=2 a=1 n=3
        let t = vec![2u32, 1, 3, 1, 3, 1, 0];
        assert_eq!(suffix_array(&t, 4), naive(&t));
    }

    #[test]
    fn single_sentinel() {
        assert_eq!(suffix_array(&[0], 1), vec![0]);
    }

    #[test]
    fn matches_naive_on_random_texts() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xabcd);
        for _ in 0..300 {
            let n = rng.gen_range(1..200);
            let sigma = *[2usize, 3, 5, 27, 120].iter().nth(rng.gen_range(0..5)).unwrap();
            let mut t: Vec<u32> = (0..n).map(|_| rng.gen_range(1..=sigma as u32)).collect();
            t.push(0);
            assert_eq!(suffix_array(&t, sigma + 1), naive(&t), "text {t:?}");
        }
    }

    #[test]
    fn long_runs() {
        let mut t = vec![1u32; 5000];
        t.extend(vec![2u32; 5000]);
        t.push(0);
        assert_eq!(suffix_array(&t, 3), naive(&t));
    }
}
