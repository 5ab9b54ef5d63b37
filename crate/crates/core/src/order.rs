//! Order-preserving rounding repair.
//!
//! Positive affine maps and the Boltzmann map are strictly increasing in
//! exact arithmetic, but their floating-point evaluation can round two
//! distinct inputs a few ulps apart onto the same output. That silently
//! turns a strict dominance into a tie. [`enforce_strict_order_by`] restores
//! strictness by lowering outputs one ulp at a time, walking down from the
//! largest input; equal inputs always keep equal outputs.

use std::cmp::Ordering;

/// Makes `derived` strictly increasing in a source order given by `cmp`
/// over indices: for every pair with `cmp(a, b) == Greater` afterwards
/// `derived[a] > derived[b]`, and indices comparing equal share one derived
/// value. The largest group is never changed and every adjustment is a
/// `next_down` step below the group above it.
///
/// `derived` must already be non-decreasing in the source order, which
/// holds for any correctly rounded evaluation of a non-decreasing map.
pub(crate) fn enforce_strict_order_by<F>(derived: &mut [f64], cmp: F)
where
    F: Fn(usize, usize) -> Ordering,
{
    let mut order: Vec<usize> = (0..derived.len()).collect();
    order.sort_by(|&a, &b| cmp(b, a).then(a.cmp(&b)));
    let mut ceiling: Option<f64> = None;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && cmp(order[start], order[end]) == Ordering::Equal {
            end += 1;
        }
        let mut value = derived[order[start]];
        if let Some(c) = ceiling {
            if value >= c {
                value = c.next_down();
            }
        }
        for &k in &order[start..end] {
            derived[k] = value;
        }
        ceiling = Some(value);
        start = end;
    }
}
