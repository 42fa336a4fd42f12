//! Deterministic execution helpers.
//!
//! Every parallel construct in this crate goes through these functions. They
//! are written so the floating point result is independent of the number of
//! worker threads: per-slot writes for maps, and reductions that always
//! combine fixed-size chunks in index order. With the `parallel` feature
//! disabled they degrade to plain sequential loops.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk length used by the deterministic reductions. Fixed so that the
/// grouping of partial sums never depends on thread count.
pub const CHUNK: usize = 1024;

/// Maps `0..n` through `f` into a vector, in parallel when available.
pub fn map_collect<T: Send, F: Fn(usize) -> T + Sync + Send>(n: usize, f: F) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Sum of `f(i)` for `i in 0..n`, accumulated per chunk and combined in
/// chunk order.
pub fn sum<F: Fn(usize) -> f64 + Sync>(n: usize, f: F) -> f64 {
    let partials = chunk_partials(n, |range| range.map(&f).sum::<f64>());
    partials.into_iter().sum()
}

/// Accumulates `dim`-sized vectors: `body(i, acc)` adds item `i`'s
/// contribution into `acc`. Per-chunk accumulators are added together in
/// chunk order.
pub fn accumulate<F>(n: usize, dim: usize, body: F) -> Vec<f64>
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    let partials = chunk_partials(n, |range| {
        let mut acc = vec![0.0; dim];
        for i in range {
            body(i, &mut acc);
        }
        acc
    });
    let mut total = vec![0.0; dim];
    for part in partials {
        for (t, p) in total.iter_mut().zip(&part) {
            *t += p;
        }
    }
    total
}

fn chunk_partials<T: Send, F>(n: usize, per_chunk: F) -> Vec<T>
where
    F: Fn(std::ops::Range<usize>) -> T + Sync + Send,
{
    let ranges: Vec<_> = (0..n.div_ceil(CHUNK))
        .map(|c| c * CHUNK..((c + 1) * CHUNK).min(n))
        .collect();
    #[cfg(feature = "parallel")]
    {
        ranges.into_par_iter().map(per_chunk).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        ranges.into_iter().map(per_chunk).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_matches_serial() {
        let v = map_collect(100, |i| i * i);
        assert_eq!(v[7], 49);
        assert_eq!(v.len(), 100);
    }

    #[test]
    fn sum_matches_chunked_serial() {
        let n = 3 * CHUNK + 17;
        let f = |i: usize| (i as f64).sin();
        let expected: f64 = {
            let mut chunks = vec![];
            let mut i = 0;
            while i < n {
                let end = (i + CHUNK).min(n);
                chunks.push((i..end).map(f).sum::<f64>());
                i = end;
            }
            chunks.into_iter().sum()
        };
        assert_eq!(sum(n, f), expected);
    }

    #[test]
    fn accumulate_adds_in_chunk_order() {
        let g = accumulate(2500, 2, |i, acc| {
            acc[0] += i as f64;
            acc[1] += 1.0;
        });
        assert_eq!(g[1], 2500.0);
        assert_eq!(g[0], (2499.0 * 2500.0) / 2.0);
    }
}
