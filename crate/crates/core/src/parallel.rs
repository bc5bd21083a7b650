//! Fixed worker pool over disjoint random substreams.
//!
//! Worker `w` of `W` owns the contiguous sample range
//! `[n·w/W, n·(w+1)/W)` and draws sample `i` from
//! `RngStream::substream(seed, w, i)`. Partial results are merged in worker
//! order, so a run is bit-reproducible for fixed `(seed, W)`.

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Per-worker partial result that can be merged deterministically.
pub trait Accumulator: Default + Send {
    fn merge(&mut self, other: Self);
}

impl<T: Send> Accumulator for Vec<T> {
    fn merge(&mut self, other: Self) {
        self.extend(other);
    }
}

/// Run `job` for every sample index in `0..n` on `workers` threads.
pub fn run_parallel<A, F>(n: u64, seed: u64, workers: usize, job: F) -> Result<A>
where
    A: Accumulator,
    F: Fn(&mut RngStream, u64, &mut A) -> Result<()> + Sync,
{
    if workers == 0 {
        return Err(Error::config("workers", "need at least one worker"));
    }
    let w = workers as u64;
    let range = |k: u64| (n * k / w, n * (k + 1) / w);
    let run_worker = |k: u64| -> Result<A> {
        let (lo, hi) = range(k);
        let mut acc = A::default();
        for i in lo..hi {
            let mut rng = RngStream::substream(seed, k, i);
            job(&mut rng, i, &mut acc)?;
        }
        Ok(acc)
    };
    let partials: Vec<Result<A>> = if workers == 1 {
        vec![run_worker(0)]
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..w)
                .map(|k| {
                    let run_worker = &run_worker;
                    scope.spawn(move || run_worker(k))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| {
                    h.join()
                        .unwrap_or_else(|_| Err(Error::Numeric("worker thread panicked".into())))
                })
                .collect()
        })
    };
    let mut total = A::default();
    for p in partials {
        total.merge(p?);
    }
    Ok(total)
}
