//! Pairwise summation with a fixed reduction tree.
//!
//! The split points depend only on the range length, so results are
//! bit-identical regardless of how many worker threads take part.

const LEAF: usize = 128;
const PARALLEL_CUTOFF: usize = 1 << 15;

/// Sums `term(i)` for `i` in `start..end`.
pub fn pairwise<F>(start: usize, end: usize, term: &F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let n = end - start;
    if n <= LEAF {
        let mut acc = 0.0;
        for i in start..end {
            acc += term(i);
        }
        return acc;
    }
    let mid = start + n / 2;
    if n >= PARALLEL_CUTOFF {
        let (a, b) = rayon::join(|| pairwise(start, mid, term), || pairwise(mid, end, term));
        a + b
    } else {
        pairwise(start, mid, term) + pairwise(mid, end, term)
    }
}

pub fn pairwise_sum(values: &[f64]) -> f64 {
    pairwise(0, values.len(), &|i| values[i])
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    pairwise(0, a.len(), &|i| a[i] * b[i])
}
