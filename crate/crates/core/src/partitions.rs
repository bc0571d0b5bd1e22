//! Set partitions as restricted growth strings (RGS), in lexicographic order.

use rayon::prelude::*;

/// Iterator over restricted growth strings `a` of a given length with
/// `a[0] = 0`, `a[i] <= 1 + max(a[..i])` and at most `max_blocks` distinct
/// values. Each string is one set partition of `0..len`.
#[derive(Debug, Clone)]
pub struct RgsIter {
    current: Vec<u8>,
    /// prefix_max[i] = max(current[..=i])
    prefix_max: Vec<u8>,
    max_blocks: u8,
    started: bool,
    done: bool,
}

impl RgsIter {
    pub fn new(len: usize, max_blocks: usize) -> Self {
        let max_blocks = max_blocks.min(u8::MAX as usize) as u8;
        Self {
            current: vec![0; len],
            prefix_max: vec![0; len],
            max_blocks,
            started: false,
            done: len == 0 || max_blocks == 0,
        }
    }

    fn advance(&mut self) -> bool {
        let len = self.current.len();
        for i in (1..len).rev() {
            let bound = self.prefix_max[i - 1] + 1;
            if self.current[i] < bound && self.current[i] + 1 < self.max_blocks {
                self.current[i] += 1;
                self.prefix_max[i] = self.prefix_max[i - 1].max(self.current[i]);
                for j in (i + 1)..len {
                    self.current[j] = 0;
                    self.prefix_max[j] = self.prefix_max[i];
                }
                return true;
            }
        }
        false
    }
}

impl Iterator for RgsIter {
    type Item = Vec<u8>;

    fn next(&mut self) -> Option<Vec<u8>> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
        } else if !self.advance() {
            self.done = true;
            return None;
        }
        Some(self.current.clone())
    }
}

/// Number of partitions of an `n`-set into at most `k` blocks
/// (sum of Stirling numbers of the second kind), as f64.
pub fn restricted_bell(n: usize, k: usize) -> f64 {
    // s[j] = S(i, j) for the current i.
    let mut s = vec![0.0f64; k + 1];
    s[0] = 1.0;
    for _ in 0..n {
        for j in (1..=k).rev() {
            s[j] = j as f64 * s[j] + s[j - 1];
        }
        s[0] = 0.0;
    }
    s.iter().skip(1).sum::<f64>() + if n == 0 { 1.0 } else { 0.0 }
}

const CHUNK: usize = 4096;

/// Map `f` over `items` in parallel batches, visiting results in input
/// order. Output is independent of the thread count.
pub(crate) fn par_for_each_ordered<I, T, R, F, G>(items: I, f: F, mut sink: G)
where
    I: Iterator<Item = T>,
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync,
    G: FnMut(R),
{
    let mut items = items.peekable();
    while items.peek().is_some() {
        let batch: Vec<T> = items.by_ref().take(CHUNK).collect();
        let out: Vec<R> = batch.into_par_iter().map(&f).collect();
        out.into_iter().for_each(&mut sink);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_items_two_blocks() {
        let all: Vec<Vec<u8>> = RgsIter::new(3, 2).collect();
        assert_eq!(
            all,
            vec![vec![0, 0, 0], vec![0, 0, 1], vec![0, 1, 0], vec![0, 1, 1]]
        );
    }

    #[test]
    fn bell_numbers() {
        let bell = [1usize, 1, 2, 5, 15, 52, 203, 877, 4140];
        for (n, &b) in bell.iter().enumerate().skip(1) {
            assert_eq!(RgsIter::new(n, n).count(), b);
            assert_eq!(restricted_bell(n, n), b as f64);
        }
    }

    #[test]
    fn restricted_counts_match_enumeration() {
        for n in 1..=8 {
            for k in 1..=n {
                let counted = RgsIter::new(n, k).count() as f64;
                assert_eq!(counted, restricted_bell(n, k), "n={n} k={k}");
            }
        }
    }

    #[test]
    fn lexicographic_and_valid() {
        let all: Vec<Vec<u8>> = RgsIter::new(6, 3).collect();
        for w in all.windows(2) {
            assert!(w[0] < w[1]);
        }
        for a in &all {
            let mut max = 0;
            assert_eq!(a[0], 0);
            for &v in &a[1..] {
                assert!(v <= max + 1 && v < 3);
                max = max.max(v);
            }
        }
    }

    #[test]
    fn empty_inputs() {
        assert_eq!(RgsIter::new(0, 3).count(), 0);
        assert_eq!(RgsIter::new(3, 0).count(), 0);
    }

    #[test]
    fn ordered_parallel_map() {
        let mut out = Vec::new();
        par_for_each_ordered(0..10_000u32, |x| x * 2, |r| out.push(r));
        assert_eq!(out, (0..10_000u32).map(|x| x * 2).collect::<Vec<_>>());
    }
}
