//! Thin wrapper around `rustfft` for in-place multi-axis transforms.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::sync::Arc;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if forward {
            p.plan_fft_forward(len)
        } else {
            p.plan_fft_inverse(len)
        }
    })
}

/// Unnormalized DFT along one axis of a row-major `shape`-dimensional array.
pub fn transform_axis(values: &mut [Complex64], shape: &[usize], axis: usize, forward: bool) {
    let n = shape[axis];
    if n == 1 {
        return;
    }
    let fft = plan(n, forward);
    // stride between consecutive elements along `axis`
    let stride: usize = shape[axis + 1..].iter().product();
    let lanes = values.len() / n;
    let mut lane = vec![Complex64::default(); n];
    for l in 0..lanes {
        // decompose the lane id into (outer block, inner offset)
        let inner = l % stride;
        let outer = l / stride;
        let base = outer * n * stride + inner;
        for (j, slot) in lane.iter_mut().enumerate() {
            *slot = values[base + j * stride];
        }
        fft.process(&mut lane);
        for (j, v) in lane.iter().enumerate() {
            values[base + j * stride] = *v;
        }
    }
}

/// Unnormalized DFT along every axis.
pub fn transform_all(values: &mut [Complex64], shape: &[usize], forward: bool) {
    for axis in 0..shape.len() {
        transform_axis(values, shape, axis, forward);
    }
}
