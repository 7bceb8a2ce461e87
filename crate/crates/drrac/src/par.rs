//! Data-parallel helpers. With the `parallel` feature (the default) batch
//! maps run on rayon; without it the same entry points fall back to plain
//! sequential iteration. The `*_seq` variants are always sequential so the
//! bench suite can compare both in one build.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `items`, in parallel when the `parallel` feature is enabled.
/// Output order matches input order either way.
#[cfg(feature = "parallel")]
pub fn map_batch<T: Sync, U: Send, F: Fn(&T) -> U + Sync + Send>(items: &[T], f: F) -> Vec<U> {
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_batch<T, U, F: Fn(&T) -> U>(items: &[T], f: F) -> Vec<U> {
    items.iter().map(f).collect()
}

/// Sequential map with the same shape as [`map_batch`].
pub fn map_batch_seq<T, U, F: Fn(&T) -> U>(items: &[T], f: F) -> Vec<U> {
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batch_preserves_order() {
        let xs: Vec<u32> = (0..100).collect();
        let par = map_batch(&xs, |x| x * 2);
        let seq = map_batch_seq(&xs, |x| x * 2);
        assert_eq!(par, seq);
    }
}
