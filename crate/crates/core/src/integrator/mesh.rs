//! Breakpoint meshes for the method of steps.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// Points closer than this are merged.
pub const MESH_DEDUP_TOL: f64 = 1e-12;

/// The mesh `{ sum_i n_i tau_i <= t_end }` together with the first images
/// `k + tau_i` of the history kinks `k`, sorted, deduplicated and ending
/// exactly at `t_end`. Returns `None` if more than `cap` points are needed.
pub(crate) fn build(delays: &[f64], kinks: &[f64], t_end: f64, cap: usize) -> Option<Vec<f64>> {
    debug_assert!(delays.iter().all(|&d| d > 0.0));
    let limit = t_end - MESH_DEDUP_TOL;
    let mut points: Vec<f64> = Vec::new();
    // Non-negative floats order like their bit patterns.
    let mut heap = BinaryHeap::new();
    heap.push(Reverse(0f64.to_bits()));
    while let Some(Reverse(bits)) = heap.pop() {
        let p = f64::from_bits(bits);
        if points.last().is_some_and(|&last| p - last <= MESH_DEDUP_TOL) {
            continue;
        }
        points.push(p);
        if points.len() > cap {
            return None;
        }
        for &d in delays {
            let next = p + d;
            if next < limit {
                heap.push(Reverse(next.to_bits()));
            }
        }
    }

    for &k in kinks {
        for &d in delays {
            let p = k + d;
            if p > MESH_DEDUP_TOL && p < limit {
                points.push(p);
            }
        }
    }
    points.push(t_end);
    points.sort_by(f64::total_cmp);
    points.dedup_by(|b, a| *b - *a <= MESH_DEDUP_TOL);
    if let Some(last) = points.last_mut() {
        *last = t_end;
    }
    if points.len() > cap {
        return None;
    }
    Some(points)
}
