//! Sounding sequence generation and the measurement matrix `D`.
//!
//! The receiver model is `Y = A_M · X · D` where the K×N matrix `D` encodes
//! how the length-N training sequence probes the K delay bins:
//!
//! * **Circulant** mode — row `k` is the training sequence circularly shifted
//!   by `k` samples; applying `Dᴴ` is matched filtering (circular
//!   correlation against the sequence).
//! * **Dft** mode — `D` holds the first K rows of the N-point DFT matrix,
//!   which is the equivalent linear model of a deramped FMCW receiver where
//!   each delay bin appears as a tone.

use crate::fftutil::{circular_convolve, circular_correlate, FftPair};
use crate::{Complex, Error, Result};
use ndarray::Array2;
use std::f64::consts::PI;

/// A unit-modulus sounding sequence with its physical scaling.
#[derive(Debug, Clone)]
pub struct TrainingSequence {
    samples: Vec<Complex>,
    root: u64,
    symbol_period: f64,
    energy_per_symbol: f64,
}

impl TrainingSequence {
    /// Generate a Zadoff-Chu sequence of length `n` with the given `root`.
    ///
    /// Even lengths use the `exp(−jπ·root·i²/n)` convention, odd lengths
    /// `exp(−jπ·root·i(i+1)/n)`. The phase numerator is reduced modulo `2n`
    /// in exact integer arithmetic before touching floating point, so samples
    /// are accurate to the last bit even for long sequences.
    pub fn generate_zc(n: usize, root: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("sequence length must be positive"));
        }
        if root == 0 || gcd(root, n as u64) != 1 {
            return Err(Error::invalid(format!(
                "ZC root {root} must be positive and coprime with the length {n}"
            )));
        }
        let two_n = 2 * n as u128;
        let samples = (0..n as u128)
            .map(|i| {
                let num = if n % 2 == 0 {
                    (root as u128 * i * i) % two_n
                } else {
                    (root as u128 * i * (i + 1)) % two_n
                };
                let angle = -PI * num as f64 / n as f64;
                Complex::new(angle.cos(), angle.sin())
            })
            .collect();
        Ok(Self {
            samples,
            root,
            symbol_period: 1.0,
            energy_per_symbol: 1.0,
        })
    }

    /// Wrap explicit samples as a sounding sequence (e.g. a unit impulse,
    /// which yields an identity measurement matrix in circulant mode). The
    /// per-symbol energy is set to the mean sample energy.
    pub fn from_samples(samples: Vec<Complex>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("sequence length must be positive"));
        }
        if samples.iter().any(|s| !s.re.is_finite() || !s.im.is_finite()) {
            return Err(Error::invalid("sequence samples must be finite"));
        }
        let total: f64 = samples.iter().map(|s| s.norm_sqr()).sum();
        if total <= 0.0 {
            return Err(Error::invalid("sequence must carry positive energy"));
        }
        let energy_per_symbol = total / samples.len() as f64;
        Ok(Self {
            samples,
            root: 0,
            symbol_period: 1.0,
            energy_per_symbol,
        })
    }

    /// Rescale so every symbol carries energy `e_s` (total energy `N·E_s`).
    pub fn with_energy_per_symbol(mut self, e_s: f64) -> Result<Self> {
        if e_s <= 0.0 {
            return Err(Error::invalid("energy per symbol must be positive"));
        }
        let ratio = (e_s / self.energy_per_symbol).sqrt();
        for s in &mut self.samples {
            *s *= ratio;
        }
        self.energy_per_symbol = e_s;
        Ok(self)
    }

    /// Set the symbol period `T_s` in seconds (defaults to 1 s).
    pub fn with_symbol_period(mut self, t_s: f64) -> Result<Self> {
        if t_s <= 0.0 {
            return Err(Error::invalid("symbol period must be positive"));
        }
        self.symbol_period = t_s;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Complex] {
        &self.samples
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    pub fn symbol_period(&self) -> f64 {
        self.symbol_period
    }

    pub fn energy_per_symbol(&self) -> f64 {
        self.energy_per_symbol
    }

    /// Total sequence energy `‖t‖² = N·E_s`.
    pub fn total_energy(&self) -> f64 {
        self.len() as f64 * self.energy_per_symbol
    }

    /// Circular autocorrelation `r[l] = Σ_n t[n]·conj(t[(n−l) mod N])`.
    pub fn circular_autocorrelation(&self) -> Vec<Complex> {
        let n = self.len();
        (0..n)
            .map(|l| {
                (0..n)
                    .map(|i| self.samples[i] * self.samples[(i + n - l) % n].conj())
                    .sum()
            })
            .collect()
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// How `D` probes the delay bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixMode {
    /// Rows are circular shifts of the training sequence (matched filtering).
    Circulant,
    /// Rows are the first K rows of the N-point DFT matrix (deramped FMCW).
    Dft,
}

/// The K×N measurement matrix together with the FFT machinery to apply it
/// (and its adjoint, and its squared-magnitude pattern) without dense
/// matrix products.
#[derive(Debug, Clone)]
pub struct MeasurementMatrix {
    mode: MatrixMode,
    k: usize,
    n: usize,
    d: Array2<Complex>,
    /// Spectrum of the training sequence (circulant mode only).
    t_freq: Vec<Complex>,
    /// |t[i]|² pattern (circulant mode only), for variance propagation.
    abs2_t: Vec<f64>,
    fft: FftPair,
    row_energy: f64,
}

/// Build `D` for `k` delay bins from a training sequence.
pub fn build_measurement_matrix(
    t: &TrainingSequence,
    k: usize,
    mode: MatrixMode,
) -> Result<MeasurementMatrix> {
    let n = t.len();
    if k == 0 {
        return Err(Error::invalid("need at least one range bin"));
    }
    if k > n {
        return Err(Error::invalid(format!(
            "range bin count {k} exceeds sequence length {n}"
        )));
    }
    let fft = FftPair::new(n);
    let mut d = Array2::from_elem((k, n), Complex::default());
    match mode {
        MatrixMode::Circulant => {
            for row in 0..k {
                for col in 0..n {
                    d[[row, col]] = t.samples()[(col + n - row) % n];
                }
            }
        }
        MatrixMode::Dft => {
            for row in 0..k {
                for col in 0..n {
                    // Reduce the phase index exactly before going to float.
                    let idx = (row * col) % n;
                    let angle = -2.0 * PI * idx as f64 / n as f64;
                    d[[row, col]] = Complex::new(angle.cos(), angle.sin());
                }
            }
        }
    }
    let (t_freq, abs2_t, row_energy) = match mode {
        MatrixMode::Circulant => (
            fft.forward_padded(t.samples()),
            t.samples().iter().map(|s| s.norm_sqr()).collect(),
            t.total_energy(),
        ),
        MatrixMode::Dft => (Vec::new(), Vec::new(), n as f64),
    };
    Ok(MeasurementMatrix {
        mode,
        k,
        n,
        d,
        t_freq,
        abs2_t,
        fft,
        row_energy,
    })
}

impl MeasurementMatrix {
    pub fn mode(&self) -> MatrixMode {
        self.mode
    }

    pub fn range_bins(&self) -> usize {
        self.k
    }

    pub fn sequence_len(&self) -> usize {
        self.n
    }

    /// The materialized K×N matrix.
    pub fn dense(&self) -> &Array2<Complex> {
        &self.d
    }

    /// `‖row‖²`, identical for every row (`N·E_s` circulant, `N` DFT).
    pub fn row_energy(&self) -> f64 {
        self.row_energy
    }

    /// One row of `X·D` from one length-K coefficient row.
    pub fn apply_row(&self, x_row: &[Complex]) -> Vec<Complex> {
        debug_assert_eq!(x_row.len(), self.k);
        match self.mode {
            MatrixMode::Circulant => circular_convolve(&self.fft, x_row, &self.t_freq),
            MatrixMode::Dft => self.fft.forward_padded(x_row),
        }
    }

    /// One row of `Y·Dᴴ` (length K) from one length-N observation row.
    pub fn apply_adjoint_row(&self, y_row: &[Complex]) -> Vec<Complex> {
        debug_assert_eq!(y_row.len(), self.n);
        match self.mode {
            MatrixMode::Circulant => {
                let mut c = circular_correlate(&self.fft, y_row, &self.t_freq);
                c.truncate(self.k);
                c
            }
            MatrixMode::Dft => {
                let mut buf = y_row.to_vec();
                self.fft.inverse(&mut buf);
                buf.truncate(self.k);
                buf
            }
        }
    }

    /// `v ↦ |D|²ᵀ-style weighting `out[n] = Σ_k |D[k,n]|²·v[k]` (length K → N).
    pub fn abs2_apply(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.k);
        match self.mode {
            MatrixMode::Circulant => {
                // Σ_k |t[(n−k) mod N]|²·v[k]: circular convolution with |t|².
                let vc: Vec<Complex> = v.iter().map(|&x| Complex::new(x, 0.0)).collect();
                let a2: Vec<Complex> = self.abs2_t.iter().map(|&x| Complex::new(x, 0.0)).collect();
                let a2f = self.fft.forward_padded(&a2);
                circular_convolve(&self.fft, &vc, &a2f)
                    .into_iter()
                    .map(|c| c.re.max(0.0))
                    .collect()
            }
            MatrixMode::Dft => {
                let s: f64 = v.iter().sum();
                vec![s; self.n]
            }
        }
    }

    /// Adjoint weighting `out[k] = Σ_n |D[k,n]|²·v[n]` (length N → K).
    pub fn abs2_apply_adjoint(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.n);
        match self.mode {
            MatrixMode::Circulant => {
                let vc: Vec<Complex> = v.iter().map(|&x| Complex::new(x, 0.0)).collect();
                let a2: Vec<Complex> = self.abs2_t.iter().map(|&x| Complex::new(x, 0.0)).collect();
                let a2f = self.fft.forward_padded(&a2);
                let mut c: Vec<f64> = circular_correlate(&self.fft, &vc, &a2f)
                    .into_iter()
                    .map(|c| c.re.max(0.0))
                    .collect();
                c.truncate(self.k);
                c
            }
            MatrixMode::Dft => {
                let s: f64 = v.iter().sum();
                vec![s; self.k]
            }
        }
    }
}

/// Frame-level physical parameters shared by waveform and channel modeling.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct FrameConfig {
    /// Fraction of the coherent interval spent on preamble symbols, δ ∈ (0,1].
    pub preamble_fraction: f64,
    /// Coherent processing interval T in seconds.
    pub coherent_interval: f64,
    /// Bandwidth W in Hz (sets the delay resolution 1/W).
    pub bandwidth: f64,
    /// Carrier wavelength λ in meters.
    pub carrier_wavelength: f64,
}

impl FrameConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.preamble_fraction > 0.0 && self.preamble_fraction <= 1.0) {
            return Err(Error::invalid("preamble fraction must lie in (0, 1]"));
        }
        if self.bandwidth <= 0.0 {
            return Err(Error::invalid("bandwidth must be positive"));
        }
        if self.carrier_wavelength <= 0.0 {
            return Err(Error::invalid("wavelength must be positive"));
        }
        if self.coherent_interval <= 0.0 {
            return Err(Error::invalid("coherent interval must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::Array1;

    #[test]
    fn zc_first_sample_is_one() {
        let t = TrainingSequence::generate_zc(2048, 1).unwrap();
        assert_relative_eq!(t.samples()[0].re, 1.0);
        assert_relative_eq!(t.samples()[0].im, 0.0);
    }

    #[test]
    fn zc_n4_root1_third_sample() {
        // exp(−jπ·4/4) = −1
        let t = TrainingSequence::generate_zc(4, 1).unwrap();
        assert_relative_eq!(t.samples()[2].re, -1.0, epsilon = 1e-15);
        assert_relative_eq!(t.samples()[2].im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn zc_rejects_non_coprime_root() {
        assert!(TrainingSequence::generate_zc(64, 2).is_err());
        assert!(TrainingSequence::generate_zc(64, 0).is_err());
        assert!(TrainingSequence::generate_zc(9, 3).is_err());
    }

    #[test]
    fn zc_unit_modulus_and_energy() {
        let t = TrainingSequence::generate_zc(63, 5).unwrap();
        for s in t.samples() {
            assert_relative_eq!(s.norm(), 1.0, epsilon = 1e-14);
        }
        let t = t.with_energy_per_symbol(2.5).unwrap();
        let total: f64 = t.samples().iter().map(|s| s.norm_sqr()).sum();
        assert_relative_eq!(total, 63.0 * 2.5, max_relative = 1e-13);
        assert_relative_eq!(t.total_energy(), 63.0 * 2.5);
    }

    #[test]
    fn zc_autocorrelation_is_impulse() {
        for (n, root) in [(64usize, 1u64), (64, 3), (63, 1), (2048, 1)] {
            let t = TrainingSequence::generate_zc(n, root).unwrap();
            let r = t.circular_autocorrelation();
            assert_relative_eq!(r[0].re, n as f64, max_relative = 1e-12);
            let max_off = r[1..].iter().map(|c| c.norm()).fold(0.0, f64::max);
            assert!(
                max_off < 1e-9 * n as f64,
                "off-peak autocorrelation {max_off:.3e} too large for N={n}"
            );
        }
    }

    #[test]
    fn circulant_rows_are_shifts() {
        let t = TrainingSequence::generate_zc(8, 1).unwrap();
        let m = build_measurement_matrix(&t, 3, MatrixMode::Circulant).unwrap();
        for row in 0..3 {
            for col in 0..8 {
                let want = t.samples()[(col + 8 - row) % 8];
                let got = m.dense()[[row, col]];
                assert_relative_eq!(got.re, want.re, epsilon = 1e-15);
                assert_relative_eq!(got.im, want.im, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn constant_sequence_rows_identical() {
        // A constant sequence is shift-invariant, so all circulant rows equal.
        let mut t = TrainingSequence::generate_zc(4, 1).unwrap();
        t.samples = vec![Complex::new(1.0, 0.0); 4];
        let m = build_measurement_matrix(&t, 2, MatrixMode::Circulant).unwrap();
        for col in 0..4 {
            assert_eq!(m.dense()[[0, col]], m.dense()[[1, col]]);
        }
    }

    #[test]
    fn circulant_gram_is_scaled_identity() {
        let t = TrainingSequence::generate_zc(8, 1).unwrap();
        let m = build_measurement_matrix(&t, 8, MatrixMode::Circulant).unwrap();
        let d = m.dense();
        for i in 0..8 {
            for j in 0..8 {
                let g: Complex = (0..8).map(|c| d[[i, c]] * d[[j, c]].conj()).sum();
                let want = if i == j { 8.0 } else { 0.0 };
                assert_relative_eq!(g.re, want, epsilon = 1e-9);
                assert_relative_eq!(g.im, 0.0, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn dft_mode_rows() {
        let t = TrainingSequence::generate_zc(8, 1).unwrap();
        let m = build_measurement_matrix(&t, 2, MatrixMode::Dft).unwrap();
        for col in 0..8 {
            assert_relative_eq!(m.dense()[[0, col]].re, 1.0, epsilon = 1e-15);
            assert_relative_eq!(m.dense()[[0, col]].im, 0.0, epsilon = 1e-15);
            let angle = -2.0 * PI * col as f64 / 8.0;
            assert_relative_eq!(m.dense()[[1, col]].re, angle.cos(), epsilon = 1e-14);
            assert_relative_eq!(m.dense()[[1, col]].im, angle.sin(), epsilon = 1e-14);
        }
    }

    #[test]
    fn row_energies_match_mode() {
        let t = TrainingSequence::generate_zc(16, 1)
            .unwrap()
            .with_energy_per_symbol(0.5)
            .unwrap();
        let mc = build_measurement_matrix(&t, 4, MatrixMode::Circulant).unwrap();
        assert_relative_eq!(mc.row_energy(), 8.0);
        for row in 0..4 {
            let e: f64 = (0..16).map(|c| mc.dense()[[row, c]].norm_sqr()).sum();
            assert_relative_eq!(e, 8.0, max_relative = 1e-12);
        }
        let md = build_measurement_matrix(&t, 4, MatrixMode::Dft).unwrap();
        assert_relative_eq!(md.row_energy(), 16.0);
    }

    #[test]
    fn rejects_too_many_range_bins() {
        let t = TrainingSequence::generate_zc(8, 1).unwrap();
        assert!(build_measurement_matrix(&t, 9, MatrixMode::Circulant).is_err());
    }

    #[test]
    fn fft_application_matches_dense_matrix() {
        for mode in [MatrixMode::Circulant, MatrixMode::Dft] {
            let t = TrainingSequence::generate_zc(16, 3)
                .unwrap()
                .with_energy_per_symbol(2.0)
                .unwrap();
            let m = build_measurement_matrix(&t, 5, mode).unwrap();
            let x: Vec<Complex> = (0..5)
                .map(|i| Complex::new(i as f64 - 2.0, 0.3 * i as f64))
                .collect();
            let got = m.apply_row(&x);
            let xa = Array1::from_vec(x.clone());
            let want = xa.dot(m.dense());
            for (g, w) in got.iter().zip(want.iter()) {
                assert_relative_eq!(g.re, w.re, epsilon = 1e-10);
                assert_relative_eq!(g.im, w.im, epsilon = 1e-10);
            }

            let y: Vec<Complex> = (0..16)
                .map(|i| Complex::new((i as f64 * 0.7).sin(), (i as f64 * 0.2).cos()))
                .collect();
            let got = m.apply_adjoint_row(&y);
            let ya = Array1::from_vec(y.clone());
            let want = ya.dot(&m.dense().t().mapv(|c| c.conj()));
            for (g, w) in got.iter().zip(want.iter()) {
                assert_relative_eq!(g.re, w.re, epsilon = 1e-10);
                assert_relative_eq!(g.im, w.im, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn abs2_application_matches_dense() {
        for mode in [MatrixMode::Circulant, MatrixMode::Dft] {
            let t = TrainingSequence::generate_zc(12, 1)
                .unwrap()
                .with_energy_per_symbol(1.7)
                .unwrap();
            let m = build_measurement_matrix(&t, 4, mode).unwrap();
            let v: Vec<f64> = (0..4).map(|i| 0.5 + i as f64).collect();
            let got = m.abs2_apply(&v);
            for n in 0..12 {
                let want: f64 = (0..4).map(|k| m.dense()[[k, n]].norm_sqr() * v[k]).sum();
                assert_relative_eq!(got[n], want, max_relative = 1e-10);
            }
            let w: Vec<f64> = (0..12).map(|i| 0.1 * i as f64 + 0.2).collect();
            let got = m.abs2_apply_adjoint(&w);
            for k in 0..4 {
                let want: f64 = (0..12).map(|n| m.dense()[[k, n]].norm_sqr() * w[n]).sum();
                assert_relative_eq!(got[k], want, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn matched_filter_recovers_coefficients() {
        // Noiseless Dᴴ(xD) = row_energy·x for ideal ZC in circulant mode.
        let t = TrainingSequence::generate_zc(64, 1).unwrap();
        let m = build_measurement_matrix(&t, 10, MatrixMode::Circulant).unwrap();
        let x: Vec<Complex> = (0..10)
            .map(|i| Complex::new((i as f64 * 1.3).cos(), (i as f64 * 0.9).sin()))
            .collect();
        let y = m.apply_row(&x);
        let back = m.apply_adjoint_row(&y);
        for (b, orig) in back.iter().zip(&x) {
            assert_relative_eq!(b.re, 64.0 * orig.re, max_relative = 1e-9, epsilon = 1e-9);
            assert_relative_eq!(b.im, 64.0 * orig.im, max_relative = 1e-9, epsilon = 1e-9);
        }
    }

    #[test]
    fn zero_channel_yields_zero_signal() {
        let t = TrainingSequence::generate_zc(32, 1).unwrap();
        let m = build_measurement_matrix(&t, 8, MatrixMode::Circulant).unwrap();
        let z = m.apply_row(&vec![Complex::default(); 8]);
        assert!(z.iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn frame_config_validation() {
        let good = FrameConfig {
            preamble_fraction: 1.0,
            coherent_interval: 1e-3,
            bandwidth: 1.536e9,
            carrier_wavelength: 0.0041,
        };
        assert!(good.validate().is_ok());
        let bad = FrameConfig {
            preamble_fraction: 0.0,
            ..good
        };
        assert!(bad.validate().is_err());
    }
}
