use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use super::C64;

/// Plans FFTs once per size and applies the unitary normalization `1/sqrt(n)`.
pub struct FftCache {
    planner: FftPlanner<f64>,
    forward: HashMap<usize, Arc<dyn Fft<f64>>>,
    inverse: HashMap<usize, Arc<dyn Fft<f64>>>,
}

impl Default for FftCache {
    fn default() -> Self {
        Self::new()
    }
}

impl FftCache {
    pub fn new() -> Self {
        Self { planner: FftPlanner::new(), forward: HashMap::new(), inverse: HashMap::new() }
    }

    /// In-place unitary DFT, `W_n x`.
    pub fn forward(&mut self, buf: &mut [C64]) {
        let n = buf.len();
        if n == 0 {
            return;
        }
        let planner = &mut self.planner;
        let fft = self.forward.entry(n).or_insert_with(|| planner.plan_fft_forward(n));
        fft.process(buf);
        let s = 1.0 / (n as f64).sqrt();
        buf.iter_mut().for_each(|v| *v *= s);
    }

    /// In-place unitary inverse DFT, `W_n^H x`.
    pub fn inverse(&mut self, buf: &mut [C64]) {
        let n = buf.len();
        if n == 0 {
            return;
        }
        let planner = &mut self.planner;
        let fft = self.inverse.entry(n).or_insert_with(|| planner.plan_fft_inverse(n));
        fft.process(buf);
        let s = 1.0 / (n as f64).sqrt();
        buf.iter_mut().for_each(|v| *v *= s);
    }
}

thread_local! {
    static CACHE: RefCell<FftCache> = RefCell::new(FftCache::new());
}

/// Unitary forward DFT using a per-thread plan cache.
pub fn fft_unitary(buf: &mut [C64]) {
    CACHE.with(|c| c.borrow_mut().forward(buf));
}

/// Unitary inverse DFT using a per-thread plan cache.
pub fn ifft_unitary(buf: &mut [C64]) {
    CACHE.with(|c| c.borrow_mut().inverse(buf));
}
