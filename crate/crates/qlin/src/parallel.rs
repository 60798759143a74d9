//! Data-parallel map helpers. With the `parallel` feature (default) these
//! fan work out over rayon; without it they run sequentially with identical
//! results, since every iteration is a pure function of its input.

/// Maps `f` over `items`, preserving order.
#[cfg(feature = "parallel")]
pub fn map_items<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.into_par_iter().map(f).collect()
}

/// Maps `f` over `items`, preserving order.
#[cfg(not(feature = "parallel"))]
pub fn map_items<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}

/// Sequential reference implementation, kept available under both feature
/// configurations so benchmarks can compare the two paths directly.
pub fn map_items_seq<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree() {
        let xs: Vec<u64> = (0..200).collect();
        let f = |x: u64| x.wrapping_mul(2654435761).rotate_left(13);
        assert_eq!(map_items(xs.clone(), f), map_items_seq(xs, f));
    }
}
