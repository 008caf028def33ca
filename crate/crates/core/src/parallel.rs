//! Order-preserving parallel map over a slice.
//!
//! Results land at the same index as their input, so reductions over the
//! output are identical for any worker count, a requirement for the
//! byte-reproducibility of reports. On wasm (no threads) the map is serial.

/// Resolves a configured worker count: 0 means available parallelism.
pub fn resolve_workers(workers: usize) -> usize {
    #[cfg(target_arch = "wasm32")]
    {
        let _ = workers;
        1
    }
    #[cfg(not(target_arch = "wasm32"))]
    {
        if workers == 0 {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        } else {
            workers
        }
    }
}

/// Maps `f` over `items`, splitting the slice into contiguous chunks across
/// `workers` threads. Output order matches input order exactly.
pub fn par_map<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync,
{
    let workers = resolve_workers(workers).min(items.len().max(1));
    if workers <= 1 || items.len() <= 1 {
        return items.iter().enumerate().map(|(i, t)| f(i, t)).collect();
    }

    #[cfg(target_arch = "wasm32")]
    {
        items.iter().enumerate().map(|(i, t)| f(i, t)).collect()
    }
    #[cfg(not(target_arch = "wasm32"))]
    {
        let mut results: Vec<Option<R>> = Vec::with_capacity(items.len());
        results.resize_with(items.len(), || None);
        let chunk_len = items.len().div_ceil(workers);
        let f = &f;

        std::thread::scope(|scope| {
            let mut remaining_items = items;
            let mut remaining_out: &mut [Option<R>] = &mut results;
            let mut base = 0usize;
            while !remaining_items.is_empty() {
                let take = chunk_len.min(remaining_items.len());
                let (chunk_in, rest_in) = remaining_items.split_at(take);
                let (chunk_out, rest_out) = remaining_out.split_at_mut(take);
                let start = base;
                scope.spawn(move || {
                    for (offset, (item, slot)) in
                        chunk_in.iter().zip(chunk_out.iter_mut()).enumerate()
                    {
                        *slot = Some(f(start + offset, item));
                    }
                });
                remaining_items = rest_in;
                remaining_out = rest_out;
                base += take;
            }
        });

        results
            .into_iter()
            .map(|r| r.expect("worker filled every slot"))
            .collect()
    }
}
