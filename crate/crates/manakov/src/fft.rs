//! Thread-local FFT plan cache.
//!
//! rustfft plans are cheap to reuse and expensive to rebuild in a stepping
//! loop, so each thread keeps its own planner and plan table. Forward and
//! inverse transforms are unnormalized; callers divide by the length after a
//! round trip.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

thread_local! {
    static PLANS: RefCell<(FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn plan(len: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|cell| {
        let (planner, cache) = &mut *cell.borrow_mut();
        cache
            .entry((len, forward))
            .or_insert_with(|| {
                if forward {
                    planner.plan_fft_forward(len)
                } else {
                    planner.plan_fft_inverse(len)
                }
            })
            .clone()
    })
}

/// In-place unnormalized forward transform.
pub fn forward(buf: &mut [Complex64]) {
    plan(buf.len(), true).process(buf);
}

/// In-place unnormalized inverse transform; `forward` then `inverse`
/// multiplies the data by `len`.
pub fn inverse(buf: &mut [Complex64]) {
    plan(buf.len(), false).process(buf);
}

/// Signed mode frequencies `pi * k / half_width` in FFT bin order, negative
/// half wrapped, Nyquist retained.
pub fn mode_frequencies(len: usize, half_width: f64) -> Vec<f64> {
    (0..len)
        .map(|k| {
            let signed = if k < len / 2 {
                k as i64
            } else {
                k as i64 - len as i64
            };
            std::f64::consts::PI * signed as f64 / half_width
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_scales_by_len() {
        let n = 16;
        let orig: Vec<Complex64> = (0..n)
            .map(|j| Complex64::new(j as f64, (j * j) as f64 * 0.1))
            .collect();
        let mut buf = orig.clone();
        forward(&mut buf);
        inverse(&mut buf);
        for (a, b) in buf.iter().zip(&orig) {
            assert!((a / n as f64 - b).norm() < 1e-12);
        }
    }

    #[test]
    fn frequencies_wrap_and_keep_nyquist() {
        let xi = mode_frequencies(8, std::f64::consts::PI);
        assert_eq!(xi[0], 0.0);
        assert_eq!(xi[1], 1.0);
        assert_eq!(xi[3], 3.0);
        assert_eq!(xi[4], -4.0); // Nyquist
        assert_eq!(xi[7], -1.0);
    }
}
