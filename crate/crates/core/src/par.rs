//! Data-parallel helpers.
//!
//! With the `parallel` feature (default) these dispatch to rayon; without it
//! they fall back to plain sequential iterators with identical results.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `items`, preserving input order in the output.
pub fn map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Maps `f` over `0..n`, preserving order.
pub fn map_range<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Counts indices in `0..n` satisfying `pred`.
pub fn count_range<F>(n: usize, pred: F) -> usize
where
    F: Fn(usize) -> bool + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().filter(|&i| pred(i)).count()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).filter(|&i| pred(i)).count()
    }
}

pub fn any_range<F>(n: usize, pred: F) -> bool
where
    F: Fn(usize) -> bool + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().any(pred)
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).any(pred)
    }
}

/// A bounded worker pool for I/O-bound backend calls.
///
/// `limit` caps the number of calls in flight at once. In sequential builds
/// the limit is ignored and calls run one after another.
pub struct Pool {
    #[cfg(feature = "parallel")]
    inner: Option<rayon::ThreadPool>,
}

impl Pool {
    pub fn new(limit: usize) -> Self {
        #[cfg(feature = "parallel")]
        {
            let inner = if limit > 1 {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(limit)
                    .thread_name(|i| format!("atomkg-io-{i}"))
                    .build()
                    .ok()
            } else {
                None
            };
            Pool { inner }
        }
        #[cfg(not(feature = "parallel"))]
        {
            let _ = limit;
            Pool {}
        }
    }

    /// Like [`map`] but runs inside the bounded pool.
    pub fn map<T, U, F>(&self, items: &[T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        {
            match &self.inner {
                Some(pool) => pool.install(|| items.par_iter().map(f).collect()),
                None => items.iter().map(f).collect(),
            }
        }
        #[cfg(not(feature = "parallel"))]
        {
            items.iter().map(f).collect()
        }
    }
}

impl std::fmt::Debug for Pool {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Pool").finish_non_exhaustive()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_order() {
        let v: Vec<u32> = (0..1000).collect();
        let out = map(&v, |x| x * 2);
        assert_eq!(out, v.iter().map(|x| x * 2).collect::<Vec<_>>());
        let pool = Pool::new(4);
        assert_eq!(pool.map(&v, |x| x + 1)[999], 1000);
    }

    #[test]
    fn counting() {
        assert_eq!(count_range(100, |i| i % 3 == 0), 34);
        assert!(any_range(10, |i| i == 9));
        assert!(!any_range(0, |_| true));
    }
}
