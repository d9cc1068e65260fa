//! Thin wrappers around `rustfft` with cached plans.

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::sync::Arc;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// Unnormalized forward DFT: `X_k = Σ_j x_j e^{-2πijk/N}`.
pub fn forward(data: &mut [C64]) {
    plan(data.len(), false).process(data);
}

/// Unnormalized inverse DFT: `x_j = Σ_k X_k e^{+2πijk/N}`.
pub fn inverse(data: &mut [C64]) {
    plan(data.len(), true).process(data);
}

/// Signed frequency index of DFT bin `k` for length `n`.
pub fn freq_index(k: usize, n: usize) -> i64 {
    if k < n.div_ceil(2) {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// A persistent pair of plans for repeated transforms of one length.
pub struct FftPair {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scratch: Vec<C64>,
}

impl FftPair {
    pub fn new(n: usize) -> Self {
        let fwd = plan(n, false);
        let inv = plan(n, true);
        let len = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        FftPair { fwd, inv, scratch: vec![C64::new(0.0, 0.0); len] }
    }

    pub fn forward(&mut self, data: &mut [C64]) {
        self.fwd.process_with_scratch(data, &mut self.scratch);
    }

    pub fn inverse(&mut self, data: &mut [C64]) {
        self.inv.process_with_scratch(data, &mut self.scratch);
    }
}
