//! Thin FFT helpers shared by the angle transform, the circulant measurement
//! matrix, and the implicit system operator.
//!
//! rustfft conventions: `forward` applies `Σ x[n]·e^{−j2πkn/N}` and `inverse`
//! the conjugate kernel, both unnormalized. All normalization factors live at
//! the call sites where they have a physical meaning.

use crate::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Cached forward/inverse FFT plan pair for one transform length.
#[derive(Clone)]
pub struct FftPair {
    pub len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FftPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftPair").field("len", &self.len).finish()
    }
}

impl FftPair {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    /// In-place unnormalized forward transform.
    pub fn forward(&self, buf: &mut [Complex]) {
        debug_assert_eq!(buf.len(), self.len);
        self.forward.process(buf);
    }

    /// In-place unnormalized inverse transform (conjugate kernel, no 1/N).
    pub fn inverse(&self, buf: &mut [Complex]) {
        debug_assert_eq!(buf.len(), self.len);
        self.inverse.process(buf);
    }

    /// Out-of-place forward transform of an arbitrary-length prefix padded
    /// with zeros to the plan length.
    pub fn forward_padded(&self, x: &[Complex]) -> Vec<Complex> {
        assert!(x.len() <= self.len);
        let mut buf = vec![Complex::new(0.0, 0.0); self.len];
        buf[..x.len()].copy_from_slice(x);
        self.forward(&mut buf);
        buf
    }
}

/// Circular convolution `x ⊛ h` of length `len` (inputs shorter than `len`
/// are zero-padded), via the convolution theorem.
pub fn circular_convolve(pair: &FftPair, x: &[Complex], h_freq: &[Complex]) -> Vec<Complex> {
    let mut xf = pair.forward_padded(x);
    for (a, b) in xf.iter_mut().zip(h_freq) {
        *a *= b;
    }
    pair.inverse(&mut xf);
    let scale = 1.0 / pair.len as f64;
    for v in xf.iter_mut() {
        *v *= scale;
    }
    xf
}

/// Circular cross-correlation `c[k] = Σ_n x[n]·conj(h[n−k])`, implemented as
/// convolution with the conjugated spectrum.
pub fn circular_correlate(pair: &FftPair, x: &[Complex], h_freq: &[Complex]) -> Vec<Complex> {
    let mut xf = pair.forward_padded(x);
    for (a, b) in xf.iter_mut().zip(h_freq) {
        *a *= b.conj();
    }
    pair.inverse(&mut xf);
    let scale = 1.0 / pair.len as f64;
    for v in xf.iter_mut() {
        *v *= scale;
    }
    xf
}
