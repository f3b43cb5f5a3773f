//! Pairwise (cascade) summation.
//!
//! The split point depends only on the slice length, so for a fixed input
//! order the result is bitwise reproducible regardless of threading.

use std::ops::Add;

const BLOCK: usize = 8;

/// Sum of `values` by recursive halving; error grows as `O(log n)`.
pub fn pairwise_sum<T>(values: &[T]) -> T
where
    T: Copy + Default + Add<Output = T>,
{
    if values.len() <= BLOCK {
        return values.iter().fold(T::default(), |acc, &v| acc + v);
    }
    let (left, right) = values.split_at(values.len() / 2);
    pairwise_sum(left) + pairwise_sum(right)
}
