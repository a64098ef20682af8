//! Data-parallel helpers. With the `parallel` feature (default) work is
//! spread over rayon's pool; without it, or with
//! [`Parallelism::Sequential`], everything runs on the calling thread.
//! Results are always returned in input order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Parallelism {
    Sequential,
    #[default]
    Parallel,
}

impl Parallelism {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Parallelism::Parallel
    }
}

pub fn map<T, R, F>(p: Parallelism, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if p.is_parallel() && items.len() > 1 {
        return items.par_iter().map(f).collect();
    }
    let _ = p;
    items.iter().map(f).collect()
}

/// Applies `f` to every item and returns the result for the lowest index
/// where it is `Some`. Later items may be skipped once an answer is known.
pub fn find_first<T, R, F>(p: Parallelism, items: &[T], f: F) -> Option<(usize, R)>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> Option<R> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if p.is_parallel() && items.len() > 1 {
        return items
            .par_iter()
            .enumerate()
            .find_map_first(|(i, t)| f(i, t).map(|r| (i, r)));
    }
    let _ = p;
    items.iter().enumerate().find_map(|(i, t)| f(i, t).map(|r| (i, r)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree() {
        let xs: Vec<u64> = (0..1000).collect();
        let a = map(Parallelism::Sequential, &xs, |x| x * x);
        let b = map(Parallelism::Parallel, &xs, |x| x * x);
        assert_eq!(a, b);
        let pick = |_: usize, x: &u64| (x % 97 == 96).then_some(*x);
        assert_eq!(find_first(Parallelism::Sequential, &xs, pick), Some((96, 96)));
        assert_eq!(find_first(Parallelism::Parallel, &xs, pick), Some((96, 96)));
    }
}
