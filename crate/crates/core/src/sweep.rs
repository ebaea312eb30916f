//! Runs independent seeded simulations across many seeds. With the
//! `parallel` feature the seeds are spread over a rayon pool; results come
//! back in seed order either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `seeds` on the current thread.
pub fn sweep_sequential<T, F>(seeds: &[u64], f: F) -> Vec<T>
where
    F: Fn(u64) -> T,
{
    seeds.iter().map(|s| f(*s)).collect()
}

/// Maps `f` over `seeds` in parallel.
#[cfg(feature = "parallel")]
pub fn sweep_parallel<T, F>(seeds: &[u64], f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    seeds.par_iter().map(|s| f(*s)).collect()
}

/// Parallel when the `parallel` feature is on, sequential otherwise.
pub fn sweep<T, F>(seeds: &[u64], f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        sweep_parallel(seeds, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        sweep_sequential(seeds, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::attacks::downgrade;

    #[test]
    fn order_is_seed_order() {
        let seeds: Vec<u64> = (0..64).collect();
        assert_eq!(sweep(&seeds, |s| s * 3), sweep_sequential(&seeds, |s| s * 3));
    }

    #[test]
    fn parallel_traces_match_sequential() {
        let seeds: Vec<u64> = (0..6).collect();
        let run = |s| downgrade(s).map(|o| o.report.trace_text()).unwrap();
        assert_eq!(sweep(&seeds, run), sweep_sequential(&seeds, run));
    }
}
