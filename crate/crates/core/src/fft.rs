//! Unitary multi-axis FFT built on rustfft, with a process-wide plan cache.

use crate::grid::Grid;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, LazyLock, Mutex};

type PlanKey = (usize, bool);

static PLANS: LazyLock<Mutex<HashMap<PlanKey, Arc<dyn Fft<f64>>>>> =
    LazyLock::new(|| Mutex::new(HashMap::new()));

fn plan(len: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    let mut cache = PLANS.lock().unwrap();
    cache
        .entry((len, forward))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if forward {
                planner.plan_fft_forward(len)
            } else {
                planner.plan_fft_inverse(len)
            }
        })
        .clone()
}

/// Transforms every line along `axis`. Unscaled; callers apply the unitary
/// factor once per full transform.
fn transform_axis(data: &mut [Complex64], grid: &Grid, axis: usize, forward: bool) {
    let n = grid.n_per_axis();
    let fft = plan(n, forward);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    if axis == 0 {
        for line in data.chunks_exact_mut(n) {
            fft.process_with_scratch(line, &mut scratch);
        }
        return;
    }
    // Strided axes: gather each line into a contiguous buffer.
    let stride = n.pow(axis as u32);
    let mut line = vec![Complex64::default(); n];
    let plane = stride * n;
    let n_planes = data.len() / plane;
    for p in 0..n_planes {
        let base_plane = p * plane;
        for q in 0..stride {
            let base = base_plane + q;
            for (i, v) in line.iter_mut().enumerate() {
                *v = data[base + i * stride];
            }
            fft.process_with_scratch(&mut line, &mut scratch);
            for (i, v) in line.iter().enumerate() {
                data[base + i * stride] = *v;
            }
        }
    }
}

/// In-place unitary DFT over all axes of the grid.
pub fn transform_all(data: &mut [Complex64], grid: &Grid, forward: bool) {
    debug_assert_eq!(data.len(), grid.len());
    for axis in 0..grid.dim() {
        transform_axis(data, grid, axis, forward);
    }
    let scale = (grid.len() as f64).sqrt().recip();
    for v in data.iter_mut() {
        *v *= scale;
    }
}
