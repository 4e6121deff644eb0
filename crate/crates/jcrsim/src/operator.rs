//! The implicit measurement operator `X ↦ A_M·X·D`.
//!
//! In vectorized form the model is `vec(Y) = B·vec(X)` with
//! `B = Dᵀ ⊗ A_M`, but `B` is never materialized: the angle transform
//! `A_M` is a normalized M-point FFT across antennas, and `D` acts per
//! antenna row through the FFT machinery of
//! [`MeasurementMatrix`](crate::waveform::MeasurementMatrix). The
//! squared-magnitude products `|B|²·v` and `|Bᴴ|²·v` needed for variance
//! propagation exploit the same structure: `|A_M|²` has uniform entries
//! `1/M`, and `|D|²` is applied by circular convolution/correlation with
//! `|t|²` (circulant mode) or column sums (DFT mode).

use crate::fftutil::FftPair;
use crate::waveform::MeasurementMatrix;
use crate::{Complex, Error, Result};
use ndarray::{Array2, Axis};

/// FFT-backed application of `A_M · X · D` and its adjoint/variance forms.
#[derive(Debug, Clone)]
pub struct SystemOperator {
    num_angle_bins: usize,
    matrix: MeasurementMatrix,
    fft_m: FftPair,
}

impl SystemOperator {
    pub fn new(num_angle_bins: usize, matrix: MeasurementMatrix) -> Result<Self> {
        if num_angle_bins == 0 {
            return Err(Error::invalid("need at least one angle bin"));
        }
        let fft_m = FftPair::new(num_angle_bins);
        Ok(Self {
            num_angle_bins,
            matrix,
            fft_m,
        })
    }

    pub fn num_angle_bins(&self) -> usize {
        self.num_angle_bins
    }

    pub fn num_range_bins(&self) -> usize {
        self.matrix.range_bins()
    }

    pub fn sequence_len(&self) -> usize {
        self.matrix.sequence_len()
    }

    pub fn matrix(&self) -> &MeasurementMatrix {
        &self.matrix
    }

    /// `‖column of B‖²`, identical for all columns: the measurement energy
    /// collected per channel coefficient (`N·E_s` circulant, `N` DFT).
    pub fn column_energy(&self) -> f64 {
        self.matrix.row_energy()
    }

    fn check_input(&self, x: &Array2<Complex>) -> Result<()> {
        if x.nrows() != self.num_angle_bins || x.ncols() != self.matrix.range_bins() {
            return Err(Error::dims(format!(
                "expected {}×{} coefficients, got {}×{}",
                self.num_angle_bins,
                self.matrix.range_bins(),
                x.nrows(),
                x.ncols()
            )));
        }
        Ok(())
    }

    fn check_output(&self, y: &Array2<Complex>) -> Result<()> {
        if y.nrows() != self.num_angle_bins || y.ncols() != self.matrix.sequence_len() {
            return Err(Error::dims(format!(
                "expected {}×{} observations, got {}×{}",
                self.num_angle_bins,
                self.matrix.sequence_len(),
                y.nrows(),
                y.ncols()
            )));
        }
        Ok(())
    }

    /// Multiply a matrix by `A_M` on the left, in place per column
    /// (normalized forward FFT across the antenna axis).
    fn angle_forward(&self, v: &mut Array2<Complex>) {
        let m = self.num_angle_bins;
        let scale = 1.0 / (m as f64).sqrt();
        let mut buf = vec![Complex::default(); m];
        for mut col in v.columns_mut() {
            for (b, c) in buf.iter_mut().zip(col.iter()) {
                *b = *c;
            }
            self.fft_m.forward(&mut buf);
            for (c, b) in col.iter_mut().zip(&buf) {
                *c = *b * scale;
            }
        }
    }

    /// Multiply by `A_Mᴴ` on the left (normalized inverse FFT per column).
    fn angle_adjoint(&self, v: &mut Array2<Complex>) {
        let m = self.num_angle_bins;
        let scale = 1.0 / (m as f64).sqrt();
        let mut buf = vec![Complex::default(); m];
        for mut col in v.columns_mut() {
            for (b, c) in buf.iter_mut().zip(col.iter()) {
                *b = *c;
            }
            self.fft_m.inverse(&mut buf);
            for (c, b) in col.iter_mut().zip(&buf) {
                *c = *b * scale;
            }
        }
    }

    /// `Z = A_M · X · D` (M×K → M×N).
    pub fn forward(&self, x: &Array2<Complex>) -> Result<Array2<Complex>> {
        self.check_input(x)?;
        let n = self.matrix.sequence_len();
        let mut z = Array2::from_elem((self.num_angle_bins, n), Complex::default());
        for (m, row) in x.axis_iter(Axis(0)).enumerate() {
            let out = self.matrix.apply_row(&row.to_vec());
            z.row_mut(m).iter_mut().zip(out).for_each(|(d, s)| *d = s);
        }
        self.angle_forward(&mut z);
        Ok(z)
    }

    /// `A_Mᴴ · Y · Dᴴ` (M×N → M×K).
    pub fn adjoint(&self, y: &Array2<Complex>) -> Result<Array2<Complex>> {
        self.check_output(y)?;
        let mut v = y.clone();
        self.angle_adjoint(&mut v);
        let k = self.matrix.range_bins();
        let mut out = Array2::from_elem((self.num_angle_bins, k), Complex::default());
        for (m, row) in v.axis_iter(Axis(0)).enumerate() {
            let r = self.matrix.apply_adjoint_row(&row.to_vec());
            out.row_mut(m).iter_mut().zip(r).for_each(|(d, s)| *d = s);
        }
        Ok(out)
    }

    /// Variance propagation `out[i] = Σ_j |B[i,j]|²·v[j]` in matrix layout
    /// (M×K → M×N). Rows of the result are identical because `|A_M|²` is
    /// uniform.
    pub fn abs2_forward(&self, v: &Array2<f64>) -> Result<Array2<f64>> {
        if v.nrows() != self.num_angle_bins || v.ncols() != self.matrix.range_bins() {
            return Err(Error::dims("abs2_forward: wrong variance shape"));
        }
        let col_sums: Vec<f64> = v.sum_axis(Axis(0)).to_vec();
        let w = self.matrix.abs2_apply(&col_sums);
        let m = self.num_angle_bins as f64;
        let row: Vec<f64> = w.into_iter().map(|x| x / m).collect();
        let n = self.matrix.sequence_len();
        Ok(Array2::from_shape_fn(
            (self.num_angle_bins, n),
            |(_, j)| row[j],
        ))
    }

    /// Adjoint variance propagation `out[j] = Σ_i |B[i,j]|²·v[i]`
    /// (M×N → M×K).
    pub fn abs2_adjoint(&self, v: &Array2<f64>) -> Result<Array2<f64>> {
        if v.nrows() != self.num_angle_bins || v.ncols() != self.matrix.sequence_len() {
            return Err(Error::dims("abs2_adjoint: wrong variance shape"));
        }
        let col_sums: Vec<f64> = v.sum_axis(Axis(0)).to_vec();
        let w = self.matrix.abs2_apply_adjoint(&col_sums);
        let m = self.num_angle_bins as f64;
        let row: Vec<f64> = w.into_iter().map(|x| x / m).collect();
        let k = self.matrix.range_bins();
        Ok(Array2::from_shape_fn(
            (self.num_angle_bins, k),
            |(_, j)| row[j],
        ))
    }
}
