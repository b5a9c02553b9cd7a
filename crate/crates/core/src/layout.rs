//! Capacity layouts for the sub-collection hierarchies.
//!
//! Formulas degenerate at tiny sizes, so all `log` terms are clamped to at
//! least 4 and collections below [`C0_ONLY_BELOW`] symbols keep everything in
//! the front collection.

/// Below this many symbols the whole collection lives in the uncompressed
/// front structure.
pub const C0_ONLY_BELOW: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelMode {
    /// Constantly many levels: `r = ceil(2/eps)`, caps grow by `log^eps n`.
    Constant,
    /// `O(log log n)` levels, caps doubling per level.
    LogLog,
}

pub fn clamped_log2(n: usize) -> f64 {
    (n.max(2) as f64).log2().max(4.0)
}

/// Caps `max_0..=max_r` for the amortized hierarchy, computed from the
/// collection size at the last global rebuild.
pub fn amortized_caps(n: usize, epsilon: f64, mode: LevelMode) -> Vec<usize> {
    let l = clamped_log2(n);
    let base = 2.0 * n as f64 / (l * l);
    let mut out: Vec<usize> = match mode {
        LevelMode::Constant => {
            let r = (2.0 / epsilon).ceil() as usize;
            let mut prev = 0usize;
            (0..=r)
                .map(|i| {
                    let c = (base * l.powf(epsilon * i as f64)).ceil() as usize;
                    prev = c.max(1).max(prev + 1);
                    prev
                })
                .collect()
        }
        LevelMode::LogLog => {
            // doubling caps; smallest r with base * 2^r >= 2n
            let c0 = (base.ceil() as usize).max(1);
            let r = (2.0 * l.log2()).ceil().max(1.0) as usize;
            (0..=r).map(|i| c0 << i.min(62)).collect()
        }
    };
    // the top level must hold the whole collection
    let last = out.last_mut().unwrap();
    *last = (*last).max(2 * n.max(1));
    out
}

/// Caps for the worst-case hierarchy: `max_i = 2 (n_f / log^2 n) log^(i*eps) n`
/// with `r` chosen so the top level reaches the `n_f/tau` scale where top
/// collections take over.
pub fn worstcase_caps(n_f: usize, epsilon: f64, tau: usize) -> Vec<usize> {
    let l = clamped_log2(n_f);
    let mut out = Vec::new();
    let mut prev = 0usize;
    for c in raw_worstcase_caps(n_f, epsilon, tau, l) {
        let c = (c.ceil() as usize).max(1).max(prev + 1);
        out.push(c);
        prev = c;
    }
    out
}

/// The capacity formula before rounding, with the log term pinned. Linear in
/// `n_f` for a fixed log term.
pub fn raw_worstcase_caps(n_f: usize, epsilon: f64, tau: usize, l: f64) -> Vec<f64> {
    let base = 2.0 * n_f as f64 / (l * l);
    // smallest r with l^(r*eps) >= l^2 / tau
    let r_exact = (2.0 - (tau.max(2) as f64).ln() / l.ln()) / epsilon;
    let r = (r_exact.ceil() as isize).clamp(2, 32) as usize;
    (0..=r).map(|i| base * l.powf(epsilon * i as f64)).collect()
}

/// Routing decision for an amortized insert: smallest level whose cap can
/// absorb the new document together with everything below it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmortizedRoute {
    /// Document goes into the front collection.
    Front,
    /// Levels `0..=target` drain into `target` together with the document.
    Merge { target: usize },
    /// No level fits: rebuild everything into the top level.
    GlobalRebuild,
}

pub fn route_amortized(sizes: &[usize], caps: &[usize], doc: usize) -> AmortizedRoute {
    debug_assert_eq!(sizes.len(), caps.len());
    let mut prefix = 0usize;
    for (j, (&size, &cap)) in sizes.iter().zip(caps).enumerate() {
        prefix += size;
        if prefix + doc <= cap {
            return if j == 0 { AmortizedRoute::Front } else { AmortizedRoute::Merge { target: j } };
        }
    }
    AmortizedRoute::GlobalRebuild
}

/// Routing decision for a worst-case insert, given per-level stored sizes.
/// `blocked[j]` marks levels whose replacement is already being built (they
/// can be neither drained nor merged into).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorstCaseRoute {
    Front,
    /// `|T| >= max_source/2`: build the merged level right away.
    Immediate { source: usize, target: usize },
    /// Lock `source` and build its merge with `target` incrementally.
    Lock { source: usize, target: usize },
    /// All levels refused: lock the top level into a pending top collection.
    LockTop,
}

pub fn route_worstcase(
    sizes: &[usize],
    caps: &[usize],
    blocked: &[bool],
    doc: usize,
) -> WorstCaseRoute {
    debug_assert_eq!(sizes.len(), caps.len());
    if !blocked[0] && sizes[0] + doc <= caps[0] {
        return WorstCaseRoute::Front;
    }
    for j in 0..sizes.len() - 1 {
        if blocked[j] || blocked[j + 1] {
            continue;
        }
        if sizes[j + 1] + sizes[j] + doc <= caps[j + 1] {
            return if doc >= caps[j].div_ceil(2) {
                WorstCaseRoute::Immediate { source: j, target: j + 1 }
            } else {
                WorstCaseRoute::Lock { source: j, target: j + 1 }
            };
        }
    }
    WorstCaseRoute::LockTop
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn amortized_route_examples() {
        // caps [8,16,32], sizes [6,10,0], |T|=5: 6+5>8, 6+10+5>16, 21<=32
        assert_eq!(
            route_amortized(&[6, 10, 0], &[8, 16, 32], 5),
            AmortizedRoute::Merge { target: 2 }
        );
        // empty index, small doc enters the front
        assert_eq!(route_amortized(&[0, 0, 0], &[8, 16, 32], 3), AmortizedRoute::Front);
        // everything full: global rebuild
        assert_eq!(
            route_amortized(&[8, 16, 32], &[8, 16, 32], 1),
            AmortizedRoute::GlobalRebuild
        );
    }

    #[test]
    fn worstcase_route_examples() {
        let caps = [8, 16, 32];
        let free = [false, false, false];
        // |C0|=6, |C1|=10, |C2|=0, |T|=5: j=0 fails (10+6+5>16),
        // j=1 fits (0+10+5<=32); 5 < max_1/2=8 so lock.
        assert_eq!(
            route_worstcase(&[6, 10, 0], &caps, &free, 5),
            WorstCaseRoute::Lock { source: 1, target: 2 }
        );
        // same sizes, |T|=9 >= 8: immediate merge, no lock
        assert_eq!(
            route_worstcase(&[6, 10, 0], &caps, &free, 9),
            WorstCaseRoute::Immediate { source: 1, target: 2 }
        );
        // front has room
        assert_eq!(route_worstcase(&[1, 10, 0], &caps, &free, 2), WorstCaseRoute::Front);
        // all levels refuse
        assert_eq!(
            route_worstcase(&[8, 16, 31], &caps, &free, 4),
            WorstCaseRoute::LockTop
        );
        // a blocked target defers to the next level
        assert_eq!(
            route_worstcase(&[6, 10, 0], &caps, &[false, false, true], 5),
            WorstCaseRoute::LockTop
        );
    }

    #[test]
    fn caps_are_increasing_and_cover_n() {
        for &n in &[0usize, 10, 64, 100, 1000, 100_000, 1 << 20] {
            for mode in [LevelMode::Constant, LevelMode::LogLog] {
                let caps = amortized_caps(n, 0.5, mode);
                assert!(caps.windows(2).all(|w| w[0] < w[1]), "caps {caps:?}");
                assert!(*caps.last().unwrap() >= n.max(1));
            }
            let caps = worstcase_caps(n.max(1), 0.5, 4);
            assert!(caps.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn loglog_mode_doubles() {
        let caps = amortized_caps(1 << 17, 0.5, LevelMode::LogLog);
        for w in caps.windows(2).take(caps.len() - 2) {
            assert_eq!(w[1], w[0] * 2);
        }
    }

    #[test]
    fn caps_double_when_reference_size_doubles() {
        let l = clamped_log2(50_000);
        let small = raw_worstcase_caps(50_000, 0.5, 5, l);
        let big = raw_worstcase_caps(100_000, 0.5, 5, l);
        for (s, b) in small.iter().zip(&big) {
            assert_eq!(*b, 2.0 * s);
        }
    }

    #[test]
    fn worstcase_top_level_at_tau_scale() {
        let n = 100_000usize;
        for tau in [2usize, 4, 5, 8] {
            let caps = worstcase_caps(n, 0.5, tau);
            let top = *caps.last().unwrap() as f64;
            assert!(top >= 2.0 * n as f64 / tau as f64, "top {top} tau {tau}");
        }
    }
}
